//! Non-adaptive strategies to compare the GP search against.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::GameDesign;
use crate::rng;

use super::gpucbpe::evaluate_at;
use super::regret::regret_curve;
use super::DesignGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    GridScan,
    Random,
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Baseline::GridScan => "grid_scan",
            Baseline::Random => "random",
        })
    }
}

impl FromStr for Baseline {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "grid_scan" => Ok(Baseline::GridScan),
            "random" => Ok(Baseline::Random),
            other => Err(Error::InvalidArgument(format!("unknown baseline `{other}`"))),
        }
    }
}

fn level_indices(n: usize, m: usize) -> Vec<usize> {
    if m >= n {
        return (0..n).collect();
    }
    let mut v: Vec<usize> = (0..m)
        .map(|k| (k as f64 * (n - 1) as f64 / (m - 1) as f64).round() as usize)
        .collect();
    v.dedup();
    v
}

/// Coarse-to-fine scan order. Level `L` lays `2^L + 1` evenly spaced
/// values on each axis; each level visits its not-yet-seen points in
/// row-major order, until the whole grid is covered.
pub fn grid_scan_order(grid: &DesignGrid) -> Vec<usize> {
    let mut seen = vec![false; grid.len()];
    let mut order = Vec::with_capacity(grid.len());
    let mut level = 0u32;
    while order.len() < grid.len() {
        let m = (1usize << level) + 1;
        let rows = level_indices(grid.n_a(), m);
        let cols = level_indices(grid.n_pi(), m);
        for &ia in &rows {
            for &ip in &cols {
                let idx = grid.index(ia, ip);
                if !seen[idx] {
                    seen[idx] = true;
                    order.push(idx);
                }
            }
        }
        level += 1;
    }
    order
}

/// Every grid index in a seeded uniformly random order.
pub fn random_order(grid: &DesignGrid, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.shuffle(&mut rng::stream(seed, "baseline/random"));
    order
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineOutcome {
    pub order: Vec<usize>,
    pub values: Vec<f64>,
    /// Grid index of the best value seen (first one on ties).
    pub best: usize,
    pub regret: Option<Vec<f64>>,
}

pub fn baseline_search<F>(
    mut objective: F,
    grid: &DesignGrid,
    strategy: Baseline,
    budget: usize,
    seed: u64,
    true_max: Option<f64>,
) -> Result<BaselineOutcome>
where
    F: FnMut(usize, &GameDesign) -> Result<f64>,
{
    if budget == 0 {
        return Err(Error::InvalidArgument("budget must be at least 1".into()));
    }
    let mut order = match strategy {
        Baseline::GridScan => grid_scan_order(grid),
        Baseline::Random => random_order(grid, seed),
    };
    order.truncate(budget);
    let mut values = Vec::with_capacity(order.len());
    let mut best = (order[0], f64::NEG_INFINITY);
    for &idx in &order {
        let v = evaluate_at(&mut objective, grid, idx)?;
        if v > best.1 {
            best = (idx, v);
        }
        values.push(v);
    }
    Ok(BaselineOutcome {
        regret: true_max.map(|m| regret_curve(&values, m)),
        order,
        values,
        best: best.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scan_starts_at_corners_then_refines() {
        let g = DesignGrid::standard();
        let order = grid_scan_order(&g);
        assert_eq!(order.len(), 400);
        assert_eq!(&order[..4], &[g.index(0, 0), g.index(0, 19), g.index(19, 0), g.index(19, 19)]);
        // level 1 adds the midlines (index 10 = round(9.5))
        assert_eq!(order[4], g.index(0, 10));
        let mut s = order.clone();
        s.sort();
        s.dedup();
        assert_eq!(s.len(), 400);
    }

    #[test]
    fn full_budget_finds_the_maximum() {
        let g = DesignGrid::standard();
        let f = |i: usize, _: &GameDesign| Ok(-((i as f64) - 217.0).abs());
        for strategy in [Baseline::GridScan, Baseline::Random] {
            let out = baseline_search(f, &g, strategy, 400, 9, Some(0.0)).unwrap();
            assert_eq!(out.best, 217);
            assert_eq!(out.regret.unwrap().last().copied(), Some(0.0));
        }
    }

    #[test]
    fn random_is_reproducible() {
        let g = DesignGrid::standard();
        assert_eq!(random_order(&g, 4), random_order(&g, 4));
        assert_ne!(random_order(&g, 4), random_order(&g, 5));
    }
}
