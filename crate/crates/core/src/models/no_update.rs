//! Equilibrium play when Player 2 keeps its prior after seeing Go, and
//! everyone knows it.

use crate::game::GameDesign;
use crate::params::ModelParams;

use super::{threshold, StrategyProfile, TIE_TOL};

pub fn model2_strategy(params: &ModelParams, design: &GameDesign, epsilon: f64) -> StrategyProfile {
    let a = design.a;
    let pi = params.pi_per;
    let lhs = 2.0 * pi;
    let rhs = a * (1.0 - pi);
    if (lhs - rhs).abs() <= TIE_TOL {
        StrategyProfile::new(1.0, 0.5, 0.5)
    } else if lhs > rhs {
        // Player 2 goes Left.
        StrategyProfile::new(
            threshold(epsilon * a / 2.0, 1.0),
            threshold(2.0 * (1.0 - epsilon / 2.0), 1.0),
            1.0,
        )
    } else {
        // Player 2 goes Right.
        StrategyProfile::new(threshold((1.0 - epsilon / 2.0) * a, 1.0), 0.0, 0.0)
    }
}
