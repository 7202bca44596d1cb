//! Model parameters and the discretised grid they are integrated over.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::GameDesign;

/// Smallest and largest perceived probability of world `a`.
pub const PI_PER_FLOOR: f64 = 0.01;
pub const PI_PER_CEIL: f64 = 0.99;
pub const DELTA_MAX: f64 = 0.2;

/// One combination of model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Tremble rate in the first round.
    pub epsilon0: f64,
    /// Learning rate. Trembles decay as `epsilon0 * alpha^(t-1)`; the
    /// reinforcement model also uses it as its discount.
    pub alpha: f64,
    /// Half-width of the band of perceived `pi` values.
    pub delta: f64,
    /// Perceived probability of world `a`.
    pub pi_per: f64,
}

impl ModelParams {
    pub fn new(epsilon0: f64, alpha: f64, delta: f64, pi_per: f64) -> Self {
        Self {
            epsilon0,
            alpha,
            delta,
            pi_per,
        }
    }

    pub fn validate(&self, design: &GameDesign) -> Result<()> {
        const TOL: f64 = 1e-9;
        let unit = |x: f64| (-TOL..=1.0 + TOL).contains(&x);
        if !unit(self.epsilon0) {
            return Err(Error::InvalidParams(format!("epsilon0 = {}", self.epsilon0)));
        }
        if !unit(self.alpha) {
            return Err(Error::InvalidParams(format!("alpha = {}", self.alpha)));
        }
        if !(-TOL..=DELTA_MAX + TOL).contains(&self.delta) {
            return Err(Error::InvalidParams(format!("delta = {}", self.delta)));
        }
        let (lo, hi) = pi_per_band(design.pi, self.delta);
        if !(lo - TOL..=hi + TOL).contains(&self.pi_per) {
            return Err(Error::InvalidParams(format!(
                "pi_per = {} outside [{lo}, {hi}]",
                self.pi_per
            )));
        }
        Ok(())
    }

    /// Tremble rate in round `round` (counting from 1).
    pub fn epsilon_at(&self, round: u32) -> f64 {
        debug_assert!(round >= 1);
        self.epsilon0 * self.alpha.powi(round as i32 - 1)
    }
}

/// Interval of perceived `pi` values for misperception radius `delta`.
pub fn pi_per_band(pi: f64, delta: f64) -> (f64, f64) {
    (
        (pi - delta).max(PI_PER_FLOOR),
        (pi + delta).min(PI_PER_CEIL),
    )
}

/// `n` evenly spaced values on `[lo, hi]`; a single value sits at the midpoint.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Number of values along each parameter axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridResolution {
    pub epsilon: usize,
    pub alpha: usize,
    pub delta: usize,
    pub pi_per: usize,
}

impl GridResolution {
    pub const STANDARD: Self = Self {
        epsilon: 34,
        alpha: 34,
        delta: 7,
        pi_per: 7,
    };

    pub fn combinations(&self) -> usize {
        self.epsilon * self.alpha * self.delta * self.pi_per
    }
}

impl Default for GridResolution {
    fn default() -> Self {
        Self::STANDARD
    }
}

/// The finite set of model parameters that likelihoods are averaged over,
/// each point carrying equal prior weight.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrid {
    pi: f64,
    epsilon_values: Vec<f64>,
    alpha_values: Vec<f64>,
    delta_values: Vec<f64>,
    pi_per_count: usize,
    points: Vec<ModelParams>,
}

impl ParamGrid {
    /// The standard 34 x 34 x 7 x 7 grid for `design`.
    pub fn for_design(design: &GameDesign) -> Self {
        Self::with_resolution(design, GridResolution::STANDARD)
            .expect("standard resolution is valid")
    }

    pub fn with_resolution(design: &GameDesign, res: GridResolution) -> Result<Self> {
        if res.combinations() == 0 {
            return Err(Error::InvalidArgument("grid axis with zero values".into()));
        }
        let epsilon_values = linspace(0.0, 1.0, res.epsilon);
        let alpha_values = linspace(0.0, 1.0, res.alpha);
        let delta_values = linspace(0.0, DELTA_MAX, res.delta);
        let mut points = Vec::with_capacity(res.combinations());
        for &e in &epsilon_values {
            for &a in &alpha_values {
                for &d in &delta_values {
                    for p in pi_per_values(design.pi, d, res.pi_per) {
                        points.push(ModelParams::new(e, a, d, p));
                    }
                }
            }
        }
        Ok(Self {
            pi: design.pi,
            epsilon_values,
            alpha_values,
            delta_values,
            pi_per_count: res.pi_per,
            points,
        })
    }

    /// A grid made of explicit points, e.g. a single known parameter set.
    pub fn from_points(design: &GameDesign, points: Vec<ModelParams>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("empty parameter grid".into()));
        }
        for p in &points {
            p.validate(design)?;
        }
        let axis = |f: fn(&ModelParams) -> f64| {
            let mut v: Vec<f64> = points.iter().map(f).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        Ok(Self {
            pi: design.pi,
            epsilon_values: axis(|p| p.epsilon0),
            alpha_values: axis(|p| p.alpha),
            delta_values: axis(|p| p.delta),
            pi_per_count: 0,
            points,
        })
    }

    pub fn epsilon_values(&self) -> &[f64] {
        &self.epsilon_values
    }

    pub fn alpha_values(&self) -> &[f64] {
        &self.alpha_values
    }

    pub fn delta_values(&self) -> &[f64] {
        &self.delta_values
    }

    /// Perceived-`pi` values used with misperception radius `delta`.
    pub fn pi_per_values(&self, delta: f64) -> Vec<f64> {
        if self.pi_per_count == 0 {
            let mut v: Vec<f64> = self
                .points
                .iter()
                .filter(|p| p.delta == delta)
                .map(|p| p.pi_per)
                .collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            return v;
        }
        pi_per_values(self.pi, delta, self.pi_per_count)
    }

    /// The design `pi` the grid was built for.
    pub fn pi(&self) -> f64 {
        self.pi
    }

    pub fn points(&self) -> &[ModelParams] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ModelParams> {
        self.points.iter()
    }
}

fn pi_per_values(pi: f64, delta: f64, n: usize) -> Vec<f64> {
    let (lo, hi) = pi_per_band(pi, delta);
    if delta == 0.0 {
        return vec![pi.clamp(PI_PER_FLOOR, PI_PER_CEIL); n];
    }
    linspace(lo, hi, n)
}
