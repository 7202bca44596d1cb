//! Sequential design-space search alternating an upper-confidence-bound
//! step with a pure-exploration step.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::GameDesign;

use super::gp::{refit, GaussianProcess, Hyper, Point};
use super::regret::regret_curve;
use super::sobol::sobol_points;
use super::spearman::StopRule;
use super::DesignGrid;

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub n_init: usize,
    /// Fixed UCB width multiplier; `None` uses the GP-UCB schedule.
    pub beta: Option<f64>,
    /// Confidence parameter of the beta schedule.
    pub delta_c: f64,
    pub stop_threshold: f64,
    pub stop_repeats: usize,
    /// Whether the rank-correlation rule may end the search before `budget`.
    pub use_stop_rule: bool,
    pub budget: usize,
    /// Hyperparameters are refit whenever the observation count is a
    /// multiple of this.
    pub refit_every: usize,
    /// Fixed observation noise variance; `None` fits it with the rest.
    pub noise_var: Option<f64>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            n_init: 8,
            beta: None,
            delta_c: 0.1,
            stop_threshold: 0.999,
            stop_repeats: 3,
            use_stop_rule: true,
            budget: 150,
            refit_every: 5,
            noise_var: None,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self, grid: &DesignGrid) -> Result<()> {
        if self.n_init < 2 {
            return Err(Error::InvalidArgument("n_init must be at least 2".into()));
        }
        if self.budget < self.n_init {
            return Err(Error::InvalidArgument("budget must be at least n_init".into()));
        }
        if self.n_init > grid.len() {
            return Err(Error::InvalidArgument("n_init exceeds the grid size".into()));
        }
        if !(0.0..1.0).contains(&self.stop_threshold) {
            return Err(Error::InvalidArgument("stop_threshold must lie in [0, 1)".into()));
        }
        if self.stop_repeats == 0 || self.refit_every == 0 {
            return Err(Error::InvalidArgument("stop_repeats and refit_every must be positive".into()));
        }
        if !(self.delta_c > 0.0 && self.delta_c < 1.0) {
            return Err(Error::InvalidArgument("delta_c must lie in (0, 1)".into()));
        }
        Ok(())
    }

    /// `2 ln(|grid| t^2 pi^2 / (6 delta_c))`, or the fixed value.
    pub fn beta_at(&self, grid_len: usize, t: usize) -> f64 {
        self.beta.unwrap_or_else(|| {
            let t = t as f64;
            2.0 * (grid_len as f64 * t * t * std::f64::consts::PI.powi(2) / (6.0 * self.delta_c)).ln()
        })
    }
}

/// Posterior mean and variance at every grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl Posterior {
    pub fn argmax(&self) -> usize {
        argmax_by(0..self.mean.len(), |i| self.mean[i]).expect("posterior is non-empty")
    }
}

/// First index with the largest score.
fn argmax_by(items: impl Iterator<Item = usize>, score: impl Fn(usize) -> f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for i in items {
        let s = score(i);
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    best.map(|(i, _)| i)
}

/// Next point to evaluate. Even steps maximize `mean + sqrt(beta) std`
/// over unobserved points. Odd steps take the largest posterior std among
/// unobserved points whose upper bound exceeds the best lower bound on the
/// grid, falling back to the UCB choice when no such point exists.
pub fn next_query(posterior: &Posterior, observed: &[bool], step: usize, beta: f64) -> Result<usize> {
    let root = beta.sqrt();
    let std = |i: usize| posterior.var[i].sqrt();
    let ucb = |i: usize| posterior.mean[i] + root * std(i);
    let open = || (0..observed.len()).filter(|&i| !observed[i]);
    let ucb_pick = argmax_by(open(), ucb).ok_or(Error::GridExhausted)?;
    if step % 2 == 0 {
        return Ok(ucb_pick);
    }
    let best_lcb = (0..observed.len())
        .map(|i| posterior.mean[i] - root * std(i))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(argmax_by(open().filter(|&i| ucb(i) > best_lcb), std).unwrap_or(ucb_pick))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryKind {
    Init,
    Ucb,
    Pe,
}

impl fmt::Display for QueryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QueryKind::Init => "init",
            QueryKind::Ucb => "ucb",
            QueryKind::Pe => "pe",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The rank-correlation rule fired.
    Rule,
    Budget,
    /// Every grid point has been evaluated.
    Exhausted,
}

/// One evaluation of the objective.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    /// 1-based evaluation count.
    pub step: usize,
    pub kind: QueryKind,
    pub index: usize,
    pub design: GameDesign,
    pub value: f64,
    /// Largest posterior mean after this observation (absent during init).
    pub posterior_max: Option<f64>,
    pub regret: Option<f64>,
    pub stopped: bool,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub trace: Vec<TraceRow>,
    /// Final posterior over the grid.
    pub posterior: Posterior,
    pub argmax: usize,
    pub stopped_by: StopReason,
    pub regret: Option<Vec<f64>>,
}

impl SearchOutcome {
    pub fn evaluations(&self) -> usize {
        self.trace.len()
    }

    pub fn values(&self) -> Vec<f64> {
        self.trace.iter().map(|r| r.value).collect()
    }
}

pub(crate) fn evaluate_at<F>(objective: &mut F, grid: &DesignGrid, index: usize) -> Result<f64>
where
    F: FnMut(usize, &GameDesign) -> Result<f64>,
{
    let d = grid.design(index);
    objective(index, &d).map_err(|e| Error::Objective {
        a: d.a,
        pi: d.pi,
        source: Box::new(e),
    })
}

struct Model<'a> {
    points: Vec<Point>,
    ranges: [f64; 2],
    config: &'a SearchConfig,
    hyper: Option<Hyper>,
    x: Vec<Point>,
    y: Vec<f64>,
}

impl Model<'_> {
    fn observe(&mut self, index: usize, value: f64) {
        self.x.push(self.points[index]);
        self.y.push(value);
    }

    fn posterior(&mut self) -> Result<Posterior> {
        let noise = self.config.noise_var;
        let start = match self.hyper {
            Some(h) => h,
            None => Hyper::initial(self.ranges, &self.y, noise.unwrap_or(1e-3 * initial_scale(&self.y))),
        };
        let refit_now = self.hyper.is_none() || self.y.len() % self.config.refit_every == 0;
        let hyper = if refit_now {
            refit(&self.x, &self.y, self.ranges, start, noise)
        } else {
            start
        };
        self.hyper = Some(hyper);
        let gp = GaussianProcess::fit(self.x.clone(), &self.y, hyper)?;
        let (mean, var) = gp.predict(&self.points);
        Ok(Posterior { mean, var })
    }
}

fn initial_scale(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let m = y.iter().sum::<f64>() / n;
    let v = y.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
    if v > 0.0 {
        v
    } else {
        1.0
    }
}

/// Runs the search. `objective` receives each queried grid index and design.
/// With `true_max` the trace carries simple regret.
pub fn run_gpucbpe<F>(
    mut objective: F,
    grid: &DesignGrid,
    config: &SearchConfig,
    true_max: Option<f64>,
) -> Result<SearchOutcome>
where
    F: FnMut(usize, &GameDesign) -> Result<f64>,
{
    config.validate(grid)?;
    let a = grid.a_values();
    let p = grid.pi_values();
    let mut model = Model {
        points: (0..grid.len())
            .map(|i| {
                let d = grid.design(i);
                [d.a, d.pi]
            })
            .collect(),
        ranges: [a[a.len() - 1] - a[0], p[p.len() - 1] - p[0]],
        config,
        hyper: None,
        x: Vec::new(),
        y: Vec::new(),
    };
    let mut observed = vec![false; grid.len()];
    let mut trace = Vec::new();
    let mut best = f64::NEG_INFINITY;
    let mut push = |trace: &mut Vec<TraceRow>, kind, index: usize, value: f64, post_max| {
        best = best.max(value);
        trace.push(TraceRow {
            step: trace.len() + 1,
            kind,
            index,
            design: grid.design(index),
            value,
            posterior_max: post_max,
            regret: true_max.map(|m| m - best),
            stopped: false,
        });
    };

    for index in sobol_points(config.n_init, grid)? {
        let v = evaluate_at(&mut objective, grid, index)?;
        observed[index] = true;
        model.observe(index, v);
        push(&mut trace, QueryKind::Init, index, v, None);
    }
    let mut posterior = model.posterior()?;
    let mut rule = StopRule::new(config.stop_threshold, config.stop_repeats);
    let mut stopped_by = StopReason::Budget;
    let mut step = 0;
    while trace.len() < config.budget {
        if observed.iter().all(|&o| o) {
            stopped_by = StopReason::Exhausted;
            break;
        }
        let beta = config.beta_at(grid.len(), model.y.len() + 1);
        let index = next_query(&posterior, &observed, step, beta)?;
        let kind = if step % 2 == 0 { QueryKind::Ucb } else { QueryKind::Pe };
        let v = evaluate_at(&mut objective, grid, index)?;
        observed[index] = true;
        model.observe(index, v);
        let next = model.posterior()?;
        let post_max = next.mean[next.argmax()];
        push(&mut trace, kind, index, v, Some(post_max));
        let stop = config.use_stop_rule && rule.check(&posterior.mean, &next.mean);
        posterior = next;
        step += 1;
        if stop {
            trace.last_mut().expect("just pushed").stopped = true;
            stopped_by = StopReason::Rule;
            break;
        }
    }
    if stopped_by == StopReason::Budget && observed.iter().all(|&o| o) {
        stopped_by = StopReason::Exhausted;
    }
    let values: Vec<f64> = trace.iter().map(|r| r.value).collect();
    Ok(SearchOutcome {
        argmax: posterior.argmax(),
        posterior,
        stopped_by,
        regret: true_max.map(|m| regret_curve(&values, m)),
        trace,
    })
}
