//! Roth-Erev reinforcement learning.
//!
//! A player holds a propensity for each action at each of its decision
//! nodes and picks actions in proportion to them. After playing, every
//! propensity at that node is discounted by `1 - alpha` and the chosen
//! action's propensity grows by the payoff received.

use crate::game::World;

use super::{Role, StrategyProfile};

pub const INITIAL_PROPENSITY: f64 = 1.0;

/// Decision node of a player.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Node {
    /// Player 1 after learning the world is `a`.
    WorldA,
    /// Player 1 after learning the world is `b`.
    WorldB,
    /// Player 2 after Go.
    Responder,
}

impl Node {
    pub fn from_world(world: World) -> Self {
        match world {
            World::A => Node::WorldA,
            World::B => Node::WorldB,
        }
    }

    fn slot(self) -> usize {
        match self {
            Node::WorldA | Node::Responder => 0,
            Node::WorldB => 1,
        }
    }
}

/// Propensities `[first, second]` per node, where the first action is Go
/// (Player 1) or Left (Player 2). Player 2 only uses slot 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropensityState {
    pub role: Role,
    pub propensities: [[f64; 2]; 2],
}

impl PropensityState {
    pub fn new(role: Role) -> Self {
        Self {
            role,
            propensities: [[INITIAL_PROPENSITY; 2]; 2],
        }
    }

    pub fn node(&self, node: Node) -> [f64; 2] {
        self.propensities[node.slot()]
    }

    /// Probability of the first action at `node`.
    pub fn choice_prob(&self, node: Node) -> f64 {
        let [x, y] = self.node(node);
        x / (x + y)
    }
}

/// Intended play. Only the entries belonging to the state's role are
/// meaningful; the others are one half.
pub fn model4_strategy(state: &PropensityState) -> StrategyProfile {
    match state.role {
        Role::One => StrategyProfile::new(
            state.choice_prob(Node::WorldA),
            state.choice_prob(Node::WorldB),
            0.5,
        ),
        Role::Two => StrategyProfile::new(0.5, 0.5, state.choice_prob(Node::Responder)),
    }
}

/// Discount the node's propensities by `1 - alpha`, then add `reward` to
/// action `action` (0 = Go/Left, 1 = Stop/Right). A node left with no
/// propensity at all is reset.
pub fn model4_update(
    state: &PropensityState,
    node: Node,
    action: usize,
    reward: f64,
    alpha: f64,
) -> PropensityState {
    debug_assert!(reward >= 0.0);
    let mut s = *state;
    let props = &mut s.propensities[node.slot()];
    for p in props.iter_mut() {
        *p *= 1.0 - alpha;
    }
    props[action] += reward;
    if props[0] + props[1] <= 0.0 {
        *props = [INITIAL_PROPENSITY; 2];
    }
    s
}
