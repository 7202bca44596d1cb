//! Gaussian-process regression over the design plane with an anisotropic
//! squared-exponential kernel and a constant prior mean equal to the mean
//! of the observations.

use argmin::core::{CostFunction, Executor};
use argmin::solver::neldermead::NelderMead;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-6;
const REFIT_ITERS: u64 = 200;

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyper {
    pub signal_var: f64,
    pub length: [f64; 2],
    pub noise_var: f64,
}

impl Hyper {
    /// Length scales at a quarter of each axis range, signal variance from
    /// the data (one when the data are constant).
    pub fn initial(ranges: [f64; 2], y: &[f64], noise_var: f64) -> Self {
        let v = sample_variance(y);
        Self {
            signal_var: if v > 0.0 { v } else { 1.0 },
            length: [ranges[0] / 4.0, ranges[1] / 4.0],
            noise_var,
        }
    }

    fn kernel(&self, a: &Point, b: &Point) -> f64 {
        let d0 = (a[0] - b[0]) / self.length[0];
        let d1 = (a[1] - b[1]) / self.length[1];
        self.signal_var * (-0.5 * (d0 * d0 + d1 * d1)).exp()
    }
}

fn sample_variance(y: &[f64]) -> f64 {
    if y.len() < 2 {
        return 0.0;
    }
    let m = y.iter().sum::<f64>() / y.len() as f64;
    y.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (y.len() - 1) as f64
}

/// A GP conditioned on observations.
#[derive(Debug, Clone)]
pub struct GaussianProcess {
    x: Vec<Point>,
    hyper: Hyper,
    mean: f64,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
}

impl GaussianProcess {
    pub fn fit(x: Vec<Point>, y: &[f64], hyper: Hyper) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(Error::InvalidArgument("GP needs matching, non-empty inputs".into()));
        }
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let chol = factor(&x, &hyper)?;
        let centered = DVector::from_iterator(y.len(), y.iter().map(|v| v - mean));
        let alpha = chol.solve(&centered);
        Ok(Self {
            x,
            hyper,
            mean,
            chol,
            alpha,
        })
    }

    pub fn hyper(&self) -> &Hyper {
        &self.hyper
    }

    /// Posterior means and variances at `query`.
    pub fn predict(&self, query: &[Point]) -> (Vec<f64>, Vec<f64>) {
        let n = self.x.len();
        let mut means = Vec::with_capacity(query.len());
        let mut vars = Vec::with_capacity(query.len());
        let l = self.chol.l();
        for q in query {
            let k = DVector::from_iterator(n, self.x.iter().map(|p| self.hyper.kernel(p, q)));
            means.push(self.mean + k.dot(&self.alpha));
            let v = l
                .solve_lower_triangular(&k)
                .expect("Cholesky factor has a non-zero diagonal");
            vars.push((self.hyper.signal_var - v.norm_squared()).max(0.0));
        }
        (means, vars)
    }

    /// Log marginal likelihood of the conditioning data.
    pub fn log_marginal_likelihood(&self, y: &[f64]) -> f64 {
        let centered = DVector::from_iterator(y.len(), y.iter().map(|v| v - self.mean));
        let log_det: f64 = self.chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>() * 2.0;
        -0.5 * centered.dot(&self.alpha) - 0.5 * log_det - 0.5 * y.len() as f64 * (2.0 * std::f64::consts::PI).ln()
    }
}

fn factor(x: &[Point], hyper: &Hyper) -> Result<Cholesky<f64, Dyn>> {
    let n = x.len();
    let base = DMatrix::from_fn(n, n, |i, j| {
        hyper.kernel(&x[i], &x[j]) + if i == j { hyper.noise_var } else { 0.0 }
    });
    if let Some(c) = Cholesky::new(base.clone()) {
        return Ok(c);
    }
    let mut jitter = JITTER_START;
    while jitter <= JITTER_MAX * 1.000001 {
        let mut m = base.clone();
        for i in 0..n {
            m[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(m) {
            return Ok(c);
        }
        jitter *= 10.0;
    }
    Err(Error::NotPositiveDefinite { jitter: JITTER_MAX })
}

/// Box constraints in log space for hyperparameter fitting.
#[derive(Debug, Clone, Copy)]
struct Bounds {
    lo: [f64; 4],
    hi: [f64; 4],
}

impl Bounds {
    fn new(ranges: [f64; 2], y: &[f64], fit_noise: bool) -> Self {
        let v = sample_variance(y);
        let v = if v > 0.0 { v } else { 1.0 };
        let noise = if fit_noise { [1e-8 * v, v] } else { [0.0, 0.0] };
        Self {
            lo: [
                (1e-3 * v).ln(),
                (ranges[0] / 40.0).ln(),
                (ranges[1] / 40.0).ln(),
                noise[0].max(f64::MIN_POSITIVE).ln(),
            ],
            hi: [
                (1e3 * v).ln(),
                (ranges[0] * 4.0).ln(),
                (ranges[1] * 4.0).ln(),
                noise[1].max(f64::MIN_POSITIVE).ln(),
            ],
        }
    }

    fn to_hyper(&self, theta: &[f64], fit_noise: bool, fixed_noise: f64) -> Hyper {
        let c: Vec<f64> = theta
            .iter()
            .enumerate()
            .map(|(i, t)| t.clamp(self.lo[i], self.hi[i]))
            .collect();
        Hyper {
            signal_var: c[0].exp(),
            length: [c[1].exp(), c[2].exp()],
            noise_var: if fit_noise { c[3].exp() } else { fixed_noise },
        }
    }
}

struct NegLogLik<'a> {
    x: &'a [Point],
    y: &'a [f64],
    bounds: Bounds,
    fit_noise: bool,
    fixed_noise: f64,
}

impl CostFunction for NegLogLik<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, theta: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        let h = self.bounds.to_hyper(theta, self.fit_noise, self.fixed_noise);
        // Out-of-box points are pushed back by a quadratic penalty so the
        // simplex does not drift along flat directions.
        let penalty: f64 = (0..theta.len())
            .map(|i| {
                let over = (theta[i] - self.bounds.hi[i]).max(0.0) + (self.bounds.lo[i] - theta[i]).max(0.0);
                over * over
            })
            .sum();
        Ok(match GaussianProcess::fit(self.x.to_vec(), self.y, h) {
            Ok(gp) => -gp.log_marginal_likelihood(self.y) + penalty,
            Err(_) => 1e300,
        })
    }
}

/// Maximizes the marginal likelihood from `start`. Noise is fitted unless
/// `fixed_noise` is given. Falls back to `start` if nothing better is found.
pub fn refit(x: &[Point], y: &[f64], ranges: [f64; 2], start: Hyper, fixed_noise: Option<f64>) -> Hyper {
    let fit_noise = fixed_noise.is_none();
    let fixed = fixed_noise.unwrap_or(0.0);
    let bounds = Bounds::new(ranges, y, fit_noise);
    let mut theta0 = vec![start.signal_var.ln(), start.length[0].ln(), start.length[1].ln()];
    if fit_noise {
        theta0.push(start.noise_var.max(f64::MIN_POSITIVE).ln());
    }
    for (i, t) in theta0.iter_mut().enumerate() {
        *t = t.clamp(bounds.lo[i], bounds.hi[i]);
    }
    let dims = theta0.len();
    let mut simplex = vec![theta0.clone()];
    for i in 0..dims {
        let mut v = theta0.clone();
        v[i] += if v[i] + 1.0 <= bounds.hi[i] { 1.0 } else { -1.0 };
        simplex.push(v);
    }
    let cost = NegLogLik {
        x,
        y,
        bounds,
        fit_noise,
        fixed_noise: fixed,
    };
    let start_cost = cost.cost(&theta0).unwrap_or(f64::INFINITY);
    let solver = match NelderMead::new(simplex).with_sd_tolerance(1e-6) {
        Ok(s) => s,
        Err(_) => return start,
    };
    let result = Executor::new(cost, solver)
        .configure(|s| s.max_iters(REFIT_ITERS))
        .run();
    match result {
        Ok(res) => {
            let state = res.state();
            match &state.best_param {
                Some(best) if state.best_cost < start_cost => bounds.to_hyper(best, fit_noise, fixed),
                _ => bounds.to_hyper(&theta0, fit_noise, fixed),
            }
        }
        Err(_) => start,
    }
}
