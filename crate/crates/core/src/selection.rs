//! Scoring collected sessions against the candidate models.

use std::collections::HashSet;
use std::io::Write;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::SessionDataset;
use crate::error::{Error, Result};
use crate::game::GameDesign;
use crate::info::GridSpec;
use crate::likelihood::{group_log_likelihoods, log_dataset_likelihood_collapsed, CollapsedGrid};
use crate::models::ModelId;
use crate::params::{ModelParams, ParamGrid};
use crate::rng;
use crate::schedule::PlayerId;

/// Log-likelihoods closer than this count as tied.
const TIE_TOL: f64 = 1e-9;

/// Drops every match played by a bot, by someone matched with a bot, or by
/// anyone who earlier met an excluded player, transitively forward in time.
pub fn exclusion_filter(dataset: &SessionDataset) -> SessionDataset {
    let mut tainted: HashSet<PlayerId> = HashSet::new();
    let mut keep = Vec::with_capacity(dataset.len());
    let records = dataset.records();
    let mut start = 0;
    while start < records.len() {
        let round = records[start].round;
        let mut end = start;
        while end < records.len() && records[end].round == round {
            end += 1;
        }
        let mut newly = Vec::new();
        for r in &records[start..end] {
            let excluded = r.bot_lineage || tainted.contains(&r.p1) || tainted.contains(&r.p2);
            keep.push(!excluded);
            if excluded {
                newly.push(r.p1);
                newly.push(r.p2);
            }
        }
        tainted.extend(newly);
        start = end;
    }
    let mut flags = keep.into_iter();
    dataset.filter(|_| flags.next().expect("one flag per record"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelOdds {
    pub id: ModelId,
    pub loglik: f64,
    pub odds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DesignJson {
    #[serde(rename = "A")]
    pub a: f64,
    pub pi: f64,
}

impl From<GameDesign> for DesignJson {
    fn from(d: GameDesign) -> Self {
        Self { a: d.a, pi: d.pi }
    }
}

/// Likelihood odds of each model relative to the best one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OddsReport {
    pub design: DesignJson,
    pub matches_used: usize,
    pub models: Vec<ModelOdds>,
    /// More than one model attains the best likelihood.
    pub ties: bool,
}

impl OddsReport {
    /// The winning model; on ties the first in model-id order.
    pub fn best(&self) -> ModelId {
        self.models
            .iter()
            .filter(|m| m.odds == 1.0)
            .map(|m| m.id)
            .min()
            .expect("some model has odds 1")
    }

    fn from_logliks(design: GameDesign, matches_used: usize, logliks: Vec<(ModelId, f64)>) -> Self {
        let max = logliks.iter().map(|&(_, l)| l).fold(f64::NEG_INFINITY, f64::max);
        let tied = |l: f64| (l - max).abs() <= TIE_TOL;
        let n_best = logliks.iter().filter(|&&(_, l)| tied(l)).count();
        let models = logliks
            .into_iter()
            .map(|(id, loglik)| ModelOdds {
                id,
                loglik,
                odds: if tied(loglik) { 1.0 } else { (loglik - max).exp() },
            })
            .collect();
        Self {
            design: design.into(),
            matches_used,
            models,
            ties: n_best > 1,
        }
    }
}

/// Per-model log-likelihood of one or more independent sessions.
fn session_logliks(sessions: &[SessionDataset], models: &[ModelId], grid: &GridSpec) -> Result<Vec<f64>> {
    let mut totals = vec![0.0; models.len()];
    for s in sessions {
        let param_grid = grid.build(s.design())?;
        for (t, &m) in totals.iter_mut().zip(models) {
            let collapsed = CollapsedGrid::new(m, &param_grid, s.n_rounds() as u32);
            *t += log_dataset_likelihood_collapsed(m, s, &collapsed)?;
        }
    }
    Ok(totals)
}

fn check_models(models: &[ModelId]) -> Result<()> {
    if models.is_empty() {
        return Err(Error::InvalidArgument("no models given".into()));
    }
    Ok(())
}

/// Odds over independent sessions, whose log-likelihoods add. The report's
/// design is that of the first session.
pub fn likelihood_odds(sessions: &[SessionDataset], models: &[ModelId], grid: &GridSpec) -> Result<OddsReport> {
    check_models(models)?;
    let used: usize = sessions.iter().map(|s| s.len()).sum();
    if used == 0 {
        return Err(Error::EmptyDataset);
    }
    let totals = session_logliks(sessions, models, grid)?;
    Ok(OddsReport::from_logliks(
        *sessions[0].design(),
        used,
        models.iter().copied().zip(totals).collect(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BootstrapRow {
    pub size: usize,
    pub replicate: usize,
    pub model: ModelId,
    pub odds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapSummary {
    pub size: usize,
    pub model: ModelId,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapCurve {
    pub rows: Vec<BootstrapRow>,
}

impl BootstrapCurve {
    /// Writes `size,replicate,model,odds` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.rows {
            w.serialize(r)?;
        }
        if self.rows.is_empty() {
            w.write_record(["size", "replicate", "model", "odds"])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Mean and standard deviation of the odds per size and model.
    pub fn summary(&self) -> Vec<BootstrapSummary> {
        let mut out: Vec<BootstrapSummary> = Vec::new();
        let mut keys: Vec<(usize, ModelId)> = self.rows.iter().map(|r| (r.size, r.model)).collect();
        keys.sort();
        keys.dedup();
        for (size, model) in keys {
            let v: Vec<f64> = self
                .rows
                .iter()
                .filter(|r| r.size == size && r.model == model)
                .map(|r| r.odds)
                .collect();
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
            out.push(BootstrapSummary {
                size,
                model,
                mean,
                std: var.sqrt(),
            });
        }
        out
    }
}

/// Matches (record positions) grouped by pair slot, each group in round
/// order.
fn pair_blocks(dataset: &SessionDataset) -> Vec<Vec<usize>> {
    let mut slots: Vec<u32> = dataset.records().iter().map(|r| r.pair).collect();
    slots.sort_unstable();
    slots.dedup();
    slots
        .iter()
        .map(|&s| {
            dataset
                .records()
                .iter()
                .enumerate()
                .filter(|(_, r)| r.pair == s)
                .map(|(i, _)| i)
                .collect()
        })
        .collect()
}

/// Subsample of exactly `size` matches: whole pair-slot blocks in a random
/// order, with the last block cut to its earliest rounds.
fn subsample(dataset: &SessionDataset, blocks: &[Vec<usize>], size: usize, seed: u64, label: &str) -> SessionDataset {
    let mut order: Vec<usize> = (0..blocks.len()).collect();
    order.shuffle(&mut rng::stream(seed, label));
    let mut chosen = vec![false; dataset.len()];
    let mut left = size;
    for b in order {
        if left == 0 {
            break;
        }
        for &i in blocks[b].iter().take(left) {
            chosen[i] = true;
        }
        left -= blocks[b].len().min(left);
    }
    let mut idx = 0;
    dataset.filter(|_| {
        idx += 1;
        chosen[idx - 1]
    })
}

/// Odds on random subsamples of each size. Replicates draw from seeded
/// streams named by size and replicate, so results do not depend on
/// scheduling.
pub fn bootstrap_odds(
    dataset: &SessionDataset,
    models: &[ModelId],
    grid: &GridSpec,
    sizes: &[usize],
    replicates: usize,
    seed: u64,
) -> Result<BootstrapCurve> {
    check_models(models)?;
    if let Some(&bad) = sizes.iter().find(|&&s| s > dataset.len() || s == 0) {
        return Err(Error::InvalidArgument(format!(
            "bootstrap size {bad} must lie in 1..={}",
            dataset.len()
        )));
    }
    let blocks = pair_blocks(dataset);
    let param_grid = grid.build(dataset.design())?;
    let collapsed: Vec<CollapsedGrid> = models
        .iter()
        .map(|&m| CollapsedGrid::new(m, &param_grid, dataset.n_rounds() as u32))
        .collect();
    let jobs: Vec<(usize, usize)> = sizes
        .iter()
        .flat_map(|&s| (0..replicates).map(move |r| (s, r)))
        .collect();
    let reports: Vec<Result<Vec<BootstrapRow>>> = jobs
        .par_iter()
        .map(|&(size, replicate)| {
            let label = format!("bootstrap/size={size}/replicate={replicate}");
            let sub = subsample(dataset, &blocks, size, seed, &label);
            let mut logliks = Vec::with_capacity(models.len());
            for (&m, c) in models.iter().zip(&collapsed) {
                logliks.push((m, log_dataset_likelihood_collapsed(m, &sub, c)?));
            }
            let report = OddsReport::from_logliks(*dataset.design(), sub.len(), logliks);
            Ok(report
                .models
                .into_iter()
                .map(|m| BootstrapRow {
                    size,
                    replicate,
                    model: m.id,
                    odds: m.odds,
                })
                .collect())
        })
        .collect();
    let mut rows = Vec::new();
    for r in reports {
        rows.extend(r?);
    }
    Ok(BootstrapCurve { rows })
}

/// Posterior weights over the parameter grid under a uniform prior.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamPosterior {
    pub points: Vec<ModelParams>,
    pub weights: Vec<f64>,
}

impl ParamPosterior {
    /// Index of the heaviest point (first on ties).
    pub fn mode(&self) -> usize {
        let mut best = 0;
        for (i, &w) in self.weights.iter().enumerate() {
            if w > self.weights[best] {
                best = i;
            }
        }
        best
    }

    /// Writes `epsilon0,alpha,delta,pi_per,weight` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["epsilon0", "alpha", "delta", "pi_per", "weight"])?;
        for (p, wt) in self.points.iter().zip(&self.weights) {
            w.write_record([
                p.epsilon0.to_string(),
                p.alpha.to_string(),
                p.delta.to_string(),
                p.pi_per.to_string(),
                wt.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn parameter_posterior(dataset: &SessionDataset, model: ModelId, grid: &ParamGrid) -> Result<ParamPosterior> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let collapsed = CollapsedGrid::new(model, grid, dataset.n_rounds() as u32);
    let group_ll = group_log_likelihoods(model, dataset, &collapsed)?;
    let max = group_ll.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = collapsed
        .group_of
        .iter()
        .map(|&g| (group_ll[g as usize] - max).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    Ok(ParamPosterior {
        points: grid.points().to_vec(),
        weights: raw.into_iter().map(|w| w / total).collect(),
    })
}
