//! Behavioral models of play.
//!
//! Every model maps (parameters, design, round, the two players' private
//! states) to a [`StrategyProfile`]. Trembles then mix each probability
//! toward one half, giving the [`ObservedStrategy`] that actually generates
//! moves. After each match both players fold the observed outcome into
//! their state.

mod bayes_nash;
mod fictitious;
mod no_update;
mod roth_erev;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use bayes_nash::{bayes_nash_case, model1_strategy, pi_hat, BayesNashCase};
pub use fictitious::{fictitious_update, model3_strategy, FictitiousState};
pub use no_update::model2_strategy;
pub use roth_erev::{model4_strategy, model4_update, Node, PropensityState};

use crate::error::{Error, Result};
use crate::game::{payoff, GameDesign, Outcome, P1Action, P2Action, World};
use crate::params::ModelParams;

/// Tolerance for the knife-edge comparisons in the threshold rules.
pub const TIE_TOL: f64 = 1e-12;

/// The competing models, identified by stable string ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelId {
    /// Bayes-Nash equilibrium play given perceived `pi` and trembles.
    BayesNash,
    /// Player 2 does not update beliefs after Go.
    NoUpdate,
    /// Fictitious play on privately observed history.
    Fictitious,
    /// Roth-Erev reinforcement learning.
    RothErev,
}

impl ModelId {
    pub const ALL: [ModelId; 4] = [
        ModelId::BayesNash,
        ModelId::NoUpdate,
        ModelId::Fictitious,
        ModelId::RothErev,
    ];

    /// The three equilibrium/learning models compared before reinforcement
    /// learning was added.
    pub const CLASSIC: [ModelId; 3] = [ModelId::BayesNash, ModelId::NoUpdate, ModelId::Fictitious];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelId::BayesNash => "bayes_nash",
            ModelId::NoUpdate => "no_update",
            ModelId::Fictitious => "fictitious",
            ModelId::RothErev => "roth_erev",
        }
    }

    /// Whether play depends on what happened in earlier matches.
    pub fn is_history_dependent(self) -> bool {
        matches!(self, ModelId::Fictitious | ModelId::RothErev)
    }

    pub fn initial_state(self, role: Role) -> PlayerState {
        match self {
            ModelId::BayesNash | ModelId::NoUpdate => PlayerState::Stateless,
            ModelId::Fictitious => PlayerState::Fictitious(FictitiousState::new()),
            ModelId::RothErev => PlayerState::Propensity(PropensityState::new(role)),
        }
    }

    /// Intended play in one match of round `round` (from 1).
    pub fn profile(
        self,
        params: &ModelParams,
        design: &GameDesign,
        round: u32,
        p1: &PlayerState,
        p2: &PlayerState,
    ) -> Result<StrategyProfile> {
        let eps = params.epsilon_at(round);
        match self {
            ModelId::BayesNash => model1_strategy(params, design, eps),
            ModelId::NoUpdate => Ok(model2_strategy(params, design, eps)),
            ModelId::Fictitious => {
                let (PlayerState::Fictitious(s1), PlayerState::Fictitious(s2)) = (p1, p2) else {
                    return Err(state_mismatch());
                };
                let first = model3_strategy(s1, params, design);
                let second = model3_strategy(s2, params, design);
                Ok(StrategyProfile {
                    p_a: first.p_a,
                    p_b: first.p_b,
                    q: second.q,
                })
            }
            ModelId::RothErev => {
                let (PlayerState::Propensity(s1), PlayerState::Propensity(s2)) = (p1, p2) else {
                    return Err(state_mismatch());
                };
                let first = model4_strategy(s1);
                let second = model4_strategy(s2);
                Ok(StrategyProfile {
                    p_a: first.p_a,
                    p_b: first.p_b,
                    q: second.q,
                })
            }
        }
    }

    /// Folds an observed match into one player's state.
    pub fn observe(
        self,
        params: &ModelParams,
        design: &GameDesign,
        state: &mut PlayerState,
        role: Role,
        outcome: Outcome,
    ) {
        match state {
            PlayerState::Stateless => {}
            PlayerState::Fictitious(s) => *s = fictitious_update(s, outcome),
            PlayerState::Propensity(s) => {
                let (u1, u2) = payoff(design, outcome);
                match role {
                    Role::One => {
                        let node = Node::from_world(outcome.world);
                        let action = match outcome.p1 {
                            P1Action::Go => 0,
                            P1Action::Stop => 1,
                        };
                        *s = model4_update(s, node, action, u1, params.alpha);
                    }
                    // Player 2's choice only pays off after Go.
                    Role::Two if outcome.p1 == P1Action::Go => {
                        let action = match outcome.p2 {
                            P2Action::Left => 0,
                            P2Action::Right => 1,
                        };
                        *s = model4_update(s, Node::Responder, action, u2, params.alpha);
                    }
                    Role::Two => {}
                }
            }
        }
    }
}

fn state_mismatch() -> Error {
    Error::InvalidArgument("player state does not belong to this model".into())
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ModelId::ALL
            .into_iter()
            .find(|m| m.as_str() == s.trim())
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown model `{s}` (expected one of bayes_nash, no_update, fictitious, roth_erev)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    One,
    Two,
}

/// Whatever a player carries from match to match under a given model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlayerState {
    Stateless,
    Fictitious(FictitiousState),
    Propensity(PropensityState),
}

/// Intended move probabilities for one match.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyProfile {
    /// P(Player 1 plays Go | world a).
    pub p_a: f64,
    /// P(Player 1 plays Go | world b).
    pub p_b: f64,
    /// P(Player 2 plays Left).
    pub q: f64,
}

impl StrategyProfile {
    pub const fn new(p_a: f64, p_b: f64, q: f64) -> Self {
        Self { p_a, p_b, q }
    }
}

/// Move probabilities after trembles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservedStrategy {
    pub obsp_a: f64,
    pub obsp_b: f64,
    pub obsq: f64,
}

/// With probability `epsilon` a move is replaced by a coin flip.
pub fn observed_probs(strategy: &StrategyProfile, epsilon: f64) -> ObservedStrategy {
    let mix = |p: f64| (1.0 - epsilon) * p + 0.5 * epsilon;
    ObservedStrategy {
        obsp_a: mix(strategy.p_a),
        obsp_b: mix(strategy.p_b),
        obsq: mix(strategy.q),
    }
}

/// Probability of one match outcome: world draw, then Player 1's move given
/// the world, then Player 2's move.
pub fn match_likelihood(obs: &ObservedStrategy, outcome: Outcome, design: &GameDesign) -> f64 {
    let (world, go) = match outcome.world {
        World::A => (design.pi, obs.obsp_a),
        World::B => (1.0 - design.pi, obs.obsp_b),
    };
    let p1 = match outcome.p1 {
        P1Action::Go => go,
        P1Action::Stop => 1.0 - go,
    };
    let p2 = match outcome.p2 {
        P2Action::Left => obs.obsq,
        P2Action::Right => 1.0 - obs.obsq,
    };
    world * p1 * p2
}

/// Probabilities of all eight outcomes in canonical order.
pub fn outcome_distribution(obs: &ObservedStrategy, design: &GameDesign) -> [f64; 8] {
    std::array::from_fn(|i| match_likelihood(obs, Outcome::from_code(i as u8), design))
}

/// Three-way comparison of `lhs` against `rhs` with the tie tolerance,
/// mapped to the 1 / 0.5 / 0 choice rule used by the threshold models.
pub(crate) fn threshold(lhs: f64, rhs: f64) -> f64 {
    if (lhs - rhs).abs() <= TIE_TOL {
        0.5
    } else if lhs > rhs {
        1.0
    } else {
        0.0
    }
}
