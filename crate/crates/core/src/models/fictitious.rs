//! Fictitious play: best responses to running frequencies of what a player
//! has personally seen.
//!
//! Each frequency starts from a pseudo-observation of one half, so
//! `emp = (0.5 + left_after_go) / (go + 1)`. Player 1 uses `emp` (how often
//! Player 2 answers Go with Left); Player 2 uses `empa`/`empb` (how often
//! Player 1 goes in each world) to update its perceived prior by Bayes'
//! rule.

use crate::game::{GameDesign, Outcome, P1Action, P2Action, World};
use crate::params::ModelParams;

use super::{threshold, StrategyProfile};

const PRIOR: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FictitiousState {
    pub num_go: u32,
    pub num_left_after_go: u32,
    pub num_game_a: u32,
    pub num_game_b: u32,
    pub num_go_a: u32,
    pub num_go_b: u32,
}

impl FictitiousState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Estimated P(Left | Go).
    pub fn emp(&self) -> f64 {
        (PRIOR + self.num_left_after_go as f64) / (self.num_go as f64 + 1.0)
    }

    /// Estimated P(Go | world a).
    pub fn empa(&self) -> f64 {
        (PRIOR + self.num_go_a as f64) / (self.num_game_a as f64 + 1.0)
    }

    /// Estimated P(Go | world b).
    pub fn empb(&self) -> f64 {
        (PRIOR + self.num_go_b as f64) / (self.num_game_b as f64 + 1.0)
    }

    /// Posterior probability of world `a` after seeing Go.
    pub fn emp_pi(&self, pi_per: f64) -> f64 {
        let num = self.empa() * pi_per;
        let den = num + self.empb() * (1.0 - pi_per);
        if den <= 0.0 {
            pi_per
        } else {
            num / den
        }
    }
}

pub fn fictitious_update(state: &FictitiousState, observed: Outcome) -> FictitiousState {
    let mut s = *state;
    let go = observed.p1 == P1Action::Go;
    match observed.world {
        World::A => {
            s.num_game_a += 1;
            s.num_go_a += go as u32;
        }
        World::B => {
            s.num_game_b += 1;
            s.num_go_b += go as u32;
        }
    }
    // Player 2's move is only revealed by play after Go.
    if go {
        s.num_go += 1;
        s.num_left_after_go += (observed.p2 == P2Action::Left) as u32;
    }
    s
}

/// Best responses to the beliefs in `state`. For a match, Player 1's
/// entries come from Player 1's state and `q` from Player 2's.
pub fn model3_strategy(state: &FictitiousState, params: &ModelParams, design: &GameDesign) -> StrategyProfile {
    let a = design.a;
    let emp = state.emp();
    let emp_pi = state.emp_pi(params.pi_per);
    StrategyProfile::new(
        threshold((1.0 - emp) * a, 1.0),
        threshold(2.0 * emp, 1.0),
        threshold(2.0 * emp_pi, (1.0 - emp_pi) * a),
    )
}
