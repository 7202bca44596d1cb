//! Bayes-Nash equilibrium play with trembles.
//!
//! Everything hinges on the critical belief `pi_hat = A / (2 + A)`: if
//! Player 2 believed world `a` had probability `pi_hat` after seeing Go,
//! Left and Right would pay the same. Five cases follow, depending on which
//! side of `pi_hat` the perceived prior falls and on how large the tremble
//! is.

use crate::error::{Error, Result};
use crate::game::GameDesign;
use crate::params::ModelParams;

use super::StrategyProfile;

const DOMAIN_TOL: f64 = 1e-9;

/// Critical belief at which Player 2 is indifferent after Go.
pub fn pi_hat(a: f64) -> f64 {
    a / (2.0 + a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BayesNashCase {
    /// Player 1 mixes in world `a`, Player 2 mixes.
    A,
    /// Player 1 stops in `a` and goes in `b`; Player 2 plays Left.
    B,
    /// Player 1 mixes in world `b`, Player 2 flips a coin.
    C,
    /// Player 1 goes in `a` and stops in `b`; Player 2 plays Right.
    D,
    /// Everybody goes and Player 2 plays Left.
    E,
}

fn thresholds(a: f64, pi_per: f64) -> (f64, f64) {
    let ph = pi_hat(a);
    let denom = ph + pi_per - 2.0 * ph * pi_per;
    // Largest tremble keeping the world-a mixing probability non-negative.
    let mix_a = 2.0 * ph * (1.0 - pi_per) / denom;
    // Largest tremble keeping the world-b mixing probability non-negative.
    let mix_b = 2.0 * pi_per * (1.0 - ph) / denom;
    (mix_a, mix_b)
}

/// Which equilibrium case applies, checked in the order A, B, C, D, E.
pub fn bayes_nash_case(a: f64, pi_per: f64, epsilon: f64) -> BayesNashCase {
    let ph = pi_hat(a);
    let (mix_a, mix_b) = thresholds(a, pi_per);
    if pi_per > ph {
        if epsilon <= 2.0 / a {
            if epsilon <= mix_a {
                BayesNashCase::A
            } else {
                BayesNashCase::B
            }
        } else {
            BayesNashCase::E
        }
    } else if epsilon <= mix_b {
        // Case C holds up to the tremble at which the world-b mixing
        // probability reaches zero; past it Case D takes over. For
        // pi_per <= pi_hat this bound never exceeds `mix_a`.
        BayesNashCase::C
    } else {
        BayesNashCase::D
    }
}

/// Equilibrium strategy for perceived prior `params.pi_per` and tremble
/// `epsilon` in the current round.
pub fn model1_strategy(
    params: &ModelParams,
    design: &GameDesign,
    epsilon: f64,
) -> Result<StrategyProfile> {
    let a = design.a;
    let pi = params.pi_per;
    let case = bayes_nash_case(a, pi, epsilon);
    let profile = match case {
        BayesNashCase::A => {
            let p_a = a * (1.0 - pi) / (2.0 * pi)
                - ((a + 2.0) * pi - a) * epsilon / 2.0 / ((1.0 - epsilon) * 2.0 * pi);
            let q = ((a - 1.0) / a - epsilon / 2.0) / (1.0 - epsilon);
            StrategyProfile::new(check(p_a, "case A p_a")?, 1.0, check(q, "case A q")?)
        }
        BayesNashCase::B => StrategyProfile::new(0.0, 1.0, 1.0),
        BayesNashCase::C => {
            let base = 2.0 * pi / (a * (1.0 - pi));
            let p_b = if 1.0 - epsilon <= f64::EPSILON {
                // full tremble: play is a coin flip whatever p_b is
                base
            } else {
                base + ((a + 2.0) * pi - a) * epsilon / 2.0 / ((1.0 - epsilon) * a * (1.0 - pi))
            };
            StrategyProfile::new(1.0, check(p_b, "case C p_b")?, 0.5)
        }
        BayesNashCase::D => StrategyProfile::new(1.0, 0.0, 0.0),
        BayesNashCase::E => StrategyProfile::new(1.0, 1.0, 1.0),
    };
    Ok(profile)
}

fn check(value: f64, context: &'static str) -> Result<f64> {
    if !value.is_finite() || value < -DOMAIN_TOL || value > 1.0 + DOMAIN_TOL {
        return Err(Error::Domain { value, context });
    }
    Ok(value.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(pi_per: f64) -> ModelParams {
        ModelParams::new(0.0, 0.0, 0.0, pi_per)
    }

    #[test]
    fn critical_belief() {
        assert_relative_eq!(pi_hat(2.0), 0.5);
        assert_relative_eq!(pi_hat(3.33), 3.33 / 5.33);
    }

    #[test]
    fn case_a_by_hand() {
        let d = GameDesign::new(3.33, 0.7).unwrap();
        assert_eq!(bayes_nash_case(3.33, 0.7, 0.0), BayesNashCase::A);
        let s = model1_strategy(&params(0.7), &d, 0.0).unwrap();
        assert_relative_eq!(s.q, 2.33 / 3.33, epsilon = 1e-12);
        assert_relative_eq!(s.p_a, 3.33 * 0.3 / 1.4, epsilon = 1e-12);
        assert_eq!(s.p_b, 1.0);
        assert!((s.q - 0.6997).abs() < 1e-4);
        assert!((s.p_a - 0.7136).abs() < 1e-4);
    }

    #[test]
    fn case_d_goes_in_a_and_stops_in_b() {
        // pi_per well below pi_hat with a large tremble
        let d = GameDesign::new(6.0, 0.3).unwrap();
        assert_eq!(bayes_nash_case(6.0, 0.2, 0.9), BayesNashCase::D);
        let s = model1_strategy(&params(0.2), &d, 0.9).unwrap();
        assert_eq!(s, StrategyProfile::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn cases_b_and_e() {
        let d = GameDesign::new(2.0, 0.8).unwrap();
        // mix_a for A=2, pi_per=0.8 is 0.4; 2/A = 1
        assert_eq!(bayes_nash_case(2.0, 0.8, 0.5), BayesNashCase::B);
        assert_eq!(model1_strategy(&params(0.8), &d, 0.5).unwrap(), StrategyProfile::new(0.0, 1.0, 1.0));
        let d = GameDesign::new(4.0, 0.8).unwrap();
        assert_eq!(bayes_nash_case(4.0, 0.8, 0.6), BayesNashCase::E);
        assert_eq!(model1_strategy(&params(0.8), &d, 0.6).unwrap(), StrategyProfile::new(1.0, 1.0, 1.0));
    }

    #[test]
    fn mixing_probability_reaches_zero_at_case_boundaries() {
        // Case A: p_a hits 0 exactly at the A/B threshold.
        let (a, pi) = (3.0, 0.8);
        let (mix_a, _) = thresholds(a, pi);
        let d = GameDesign::new(a, 0.8).unwrap();
        let s = model1_strategy(&params(pi), &d, mix_a).unwrap();
        assert!(s.p_a.abs() < 1e-9);
        // Case C: p_b hits 0 exactly at the C/D threshold.
        let (a, pi) = (3.0, 0.3);
        let (_, mix_b) = thresholds(a, pi);
        let d = GameDesign::new(a, 0.3).unwrap();
        let s = model1_strategy(&params(pi), &d, mix_b).unwrap();
        assert!(s.p_b.abs() < 1e-9);
    }

    #[test]
    fn all_grid_inputs_stay_in_the_unit_interval() {
        for ai in 0..=40 {
            let a = 2.0 + 0.1 * ai as f64;
            for pi_i in 1..=99 {
                let pi = pi_i as f64 / 100.0;
                for ei in 0..=50 {
                    let eps = ei as f64 / 50.0;
                    let d = GameDesign { a, pi: 0.5 };
                    let s = model1_strategy(&params(pi), &d, eps)
                        .unwrap_or_else(|e| panic!("A={a} pi={pi} eps={eps}: {e}"));
                    for v in [s.p_a, s.p_b, s.q] {
                        assert!((0.0..=1.0).contains(&v));
                    }
                }
            }
        }
    }

    /// With the case probabilities, Player 2 is indifferent in Case A/C and
    /// Player 1 indifferent in world a (Case A): the mixing really is an
    /// equilibrium of the trembled game.
    #[test]
    fn mixing_cases_are_indifference_points() {
        let eps = 0.1;
        let (a, pi) = (3.33, 0.7);
        let d = GameDesign::new(a, 0.7).unwrap();
        let s = model1_strategy(&params(pi), &d, eps).unwrap();
        let go_a = (1.0 - eps) * s.p_a + eps / 2.0;
        let go_b = (1.0 - eps) * s.p_b + eps / 2.0;
        assert_relative_eq!(2.0 * pi * go_a, a * (1.0 - pi) * go_b, epsilon = 1e-12);
        let left = (1.0 - eps) * s.q + eps / 2.0;
        assert_relative_eq!((1.0 - left) * a, 1.0, epsilon = 1e-12);

        let pi = 0.4;
        let s = model1_strategy(&params(pi), &d, eps).unwrap();
        let go_a = (1.0 - eps) * s.p_a + eps / 2.0;
        let go_b = (1.0 - eps) * s.p_b + eps / 2.0;
        assert_relative_eq!(2.0 * pi * go_a, a * (1.0 - pi) * go_b, epsilon = 1e-12);
    }
}
