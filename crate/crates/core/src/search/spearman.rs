/// Ranks starting at 1, with tied values sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties. If either side
/// is constant the surfaces are treated as agreeing and the result is 1.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "surfaces must share a grid");
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 1.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// Stop once successive posterior-mean surfaces agree in rank for enough
/// consecutive checks.
#[derive(Debug, Clone)]
pub struct StopRule {
    threshold: f64,
    repeats: usize,
    streak: usize,
}

impl StopRule {
    pub fn new(threshold: f64, repeats: usize) -> Self {
        Self {
            threshold,
            repeats,
            streak: 0,
        }
    }

    pub fn streak(&self) -> usize {
        self.streak
    }

    /// Records one comparison and reports whether the rule is satisfied.
    pub fn check(&mut self, prev: &[f64], curr: &[f64]) -> bool {
        if spearman(prev, curr) >= self.threshold {
            self.streak += 1;
        } else {
            self.streak = 0;
        }
        self.streak >= self.repeats
    }
}
