/// Simple regret after each evaluation: `true_max` minus the best value
/// seen so far.
pub fn regret_curve(values: &[f64], true_max: f64) -> Vec<f64> {
    let mut best = f64::NEG_INFINITY;
    values
        .iter()
        .map(|&v| {
            best = best.max(v);
            true_max - best
        })
        .collect()
}

/// 1-based number of evaluations until regret first reaches zero.
pub fn evaluations_to_zero_regret(curve: &[f64]) -> Option<usize> {
    curve.iter().position(|&r| r <= 0.0).map(|i| i + 1)
}
