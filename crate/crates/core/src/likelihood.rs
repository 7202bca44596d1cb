//! Dataset likelihoods integrated over the parameter grid, and forward
//! simulation of sessions.
//!
//! For one parameter point the likelihood of a dataset is the product of its
//! match likelihoods, with each player's state evolving along the matches
//! that player took part in. The model likelihood averages that product
//! over the grid with equal weights. Everything is done in log space so
//! long sessions do not underflow.

use std::collections::HashMap;

use rand::{Rng, RngExt};
use rayon::prelude::*;

use crate::dataset::SessionDataset;
use crate::error::{Error, Result};
use crate::game::{GameDesign, Outcome, P1Action, P2Action, World, NUM_OUTCOMES};
use crate::models::{match_likelihood, observed_probs, ModelId, PlayerState, Role};
use crate::params::{ModelParams, ParamGrid};
use crate::rng;
use crate::schedule::{MatchingSchedule, PlayerId};

/// Parameter points per parallel work unit. Fixed so the reduction order,
/// and therefore every floating-point result, is independent of the number
/// of threads.
const CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Slot {
    round: u32,
    p1: u32,
    p2: u32,
}

/// Who plays in each match, with players renumbered densely.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchLayout {
    roles: Vec<Role>,
    slots: Vec<Slot>,
}

impl MatchLayout {
    pub fn from_schedule(schedule: &MatchingSchedule) -> Self {
        let mut b = LayoutBuilder::default();
        for (t, round) in schedule.rounds().iter().enumerate() {
            for p in round {
                b.push(t as u32 + 1, p.p1, p.p2);
            }
        }
        b.finish()
    }

    pub fn from_dataset(dataset: &SessionDataset) -> Self {
        let mut b = LayoutBuilder::default();
        for r in dataset.records() {
            b.push(r.round, r.p1, r.p2);
        }
        b.finish()
    }

    pub fn n_matches(&self) -> usize {
        self.slots.len()
    }

    pub fn n_rounds(&self) -> u32 {
        self.slots.iter().map(|s| s.round).max().unwrap_or(0)
    }

    pub fn n_players(&self) -> usize {
        self.roles.len()
    }

    fn fresh_states(&self, model: ModelId, states: &mut Vec<PlayerState>) {
        states.clear();
        states.extend(self.roles.iter().map(|&r| model.initial_state(r)));
    }
}

#[derive(Default)]
struct LayoutBuilder {
    index: HashMap<PlayerId, u32>,
    roles: Vec<Role>,
    slots: Vec<Slot>,
}

impl LayoutBuilder {
    fn id(&mut self, id: PlayerId, role: Role) -> u32 {
        let next = self.roles.len() as u32;
        let roles = &mut self.roles;
        *self.index.entry(id).or_insert_with(|| {
            roles.push(role);
            next
        })
    }

    fn push(&mut self, round: u32, p1: PlayerId, p2: PlayerId) {
        let p1 = self.id(p1, Role::One);
        let p2 = self.id(p2, Role::Two);
        self.slots.push(Slot { round, p1, p2 });
    }

    fn finish(self) -> MatchLayout {
        MatchLayout {
            roles: self.roles,
            slots: self.slots,
        }
    }
}

fn step(
    model: ModelId,
    params: &ModelParams,
    design: &GameDesign,
    slot: Slot,
    states: &[PlayerState],
) -> Result<crate::models::ObservedStrategy> {
    let profile = model.profile(
        params,
        design,
        slot.round,
        &states[slot.p1 as usize],
        &states[slot.p2 as usize],
    )?;
    Ok(observed_probs(&profile, params.epsilon_at(slot.round)))
}

fn advance(
    model: ModelId,
    params: &ModelParams,
    design: &GameDesign,
    slot: Slot,
    states: &mut [PlayerState],
    outcome: Outcome,
) {
    if model.is_history_dependent() {
        model.observe(params, design, &mut states[slot.p1 as usize], Role::One, outcome);
        model.observe(params, design, &mut states[slot.p2 as usize], Role::Two, outcome);
    }
}

/// Log-likelihood of `outcomes` (in layout order) under one parameter point.
pub fn log_likelihood_at(
    model: ModelId,
    params: &ModelParams,
    design: &GameDesign,
    layout: &MatchLayout,
    outcomes: &[Outcome],
) -> Result<f64> {
    let mut states = Vec::new();
    log_likelihood_with(model, params, design, layout, outcomes, &mut states)
}

fn log_likelihood_with(
    model: ModelId,
    params: &ModelParams,
    design: &GameDesign,
    layout: &MatchLayout,
    outcomes: &[Outcome],
    states: &mut Vec<PlayerState>,
) -> Result<f64> {
    debug_assert_eq!(outcomes.len(), layout.slots.len());
    layout.fresh_states(model, states);
    let mut total = 0.0;
    for (&slot, &outcome) in layout.slots.iter().zip(outcomes) {
        let obs = step(model, params, design, slot, states)?;
        total += match_likelihood(&obs, outcome, design).ln();
        advance(model, params, design, slot, states, outcome);
    }
    Ok(total)
}

/// Grid points grouped by the parameters a model actually reads, so each
/// distinct behavior is evaluated once and weighted by its multiplicity.
#[derive(Debug, Clone)]
pub struct CollapsedGrid {
    pub representatives: Vec<ModelParams>,
    pub weights: Vec<f64>,
    /// Group index of every original grid point.
    pub group_of: Vec<u32>,
}

impl CollapsedGrid {
    /// Groups `grid` for sessions lasting `n_rounds` rounds. Only the
    /// trembles of those rounds matter, so alpha drops out of one-round
    /// sessions and whenever epsilon0 is zero, except as the reinforcement
    /// discount.
    pub fn new(model: ModelId, grid: &ParamGrid, n_rounds: u32) -> Self {
        let mut index: HashMap<Vec<u64>, u32> = HashMap::new();
        let mut representatives = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        let mut group_of = Vec::with_capacity(grid.len());
        for p in grid.iter() {
            let key = relevant_key(model, p, n_rounds);
            let g = *index.entry(key).or_insert_with(|| {
                representatives.push(*p);
                weights.push(0.0);
                (representatives.len() - 1) as u32
            });
            weights[g as usize] += 1.0;
            group_of.push(g);
        }
        Self {
            representatives,
            weights,
            group_of,
        }
    }

    pub fn total_weight(&self) -> f64 {
        self.group_of.len() as f64
    }
}

fn relevant_key(model: ModelId, p: &ModelParams, n_rounds: u32) -> Vec<u64> {
    let mut key: Vec<u64> = (1..=n_rounds.max(1)).map(|r| p.epsilon_at(r).to_bits()).collect();
    if model == ModelId::RothErev {
        key.push(p.alpha.to_bits());
    } else {
        key.push(p.pi_per.to_bits());
    }
    key
}

/// Running `(max, sum of exp(x - max))` accumulator for log-sum-exp.
#[derive(Debug, Clone, Copy)]
struct LogSum {
    max: f64,
    sum: f64,
}

impl LogSum {
    const EMPTY: Self = Self {
        max: f64::NEG_INFINITY,
        sum: 0.0,
    };

    fn add(&mut self, log_value: f64, weight: f64) {
        if log_value == f64::NEG_INFINITY || weight == 0.0 {
            return;
        }
        if log_value > self.max {
            self.sum = self.sum * (self.max - log_value).exp() + weight;
            self.max = log_value;
        } else {
            self.sum += weight * (log_value - self.max).exp();
        }
    }

    fn ln(self) -> f64 {
        if self.sum == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

/// `ln(sum_i w_i exp(x_i))`, accumulated left to right.
pub fn weighted_log_sum_exp(values: &[f64], weights: &[f64]) -> f64 {
    let mut acc = LogSum::EMPTY;
    for (&v, &w) in values.iter().zip(weights) {
        acc.add(v, w);
    }
    acc.ln()
}

/// Log-likelihood of the dataset at every group of a collapsed grid.
pub fn group_log_likelihoods(
    model: ModelId,
    dataset: &SessionDataset,
    collapsed: &CollapsedGrid,
) -> Result<Vec<f64>> {
    let layout = MatchLayout::from_dataset(dataset);
    let outcomes: Vec<Outcome> = dataset.outcomes().collect();
    let design = *dataset.design();
    if !model.is_history_dependent() {
        return history_free_log_likelihoods(model, &design, &layout, &outcomes, collapsed);
    }
    let chunks: Vec<Result<Vec<f64>>> = collapsed
        .representatives
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut states = Vec::new();
            chunk
                .iter()
                .map(|p| log_likelihood_with(model, p, &design, &layout, &outcomes, &mut states))
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(collapsed.representatives.len());
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

/// Without history, play depends only on the round, so the likelihood is a
/// product of per-round outcome probabilities raised to outcome counts.
fn history_free_log_likelihoods(
    model: ModelId,
    design: &GameDesign,
    layout: &MatchLayout,
    outcomes: &[Outcome],
    collapsed: &CollapsedGrid,
) -> Result<Vec<f64>> {
    let n_rounds = layout.n_rounds() as usize;
    let mut counts = vec![[0u32; NUM_OUTCOMES]; n_rounds + 1];
    for (slot, o) in layout.slots.iter().zip(outcomes) {
        counts[slot.round as usize][o.code() as usize] += 1;
    }
    let rounds: Vec<u32> = (1..=n_rounds as u32).filter(|&r| counts[r as usize].iter().any(|&c| c > 0)).collect();
    let stateless = model.initial_state(Role::One);
    let chunks: Vec<Result<Vec<f64>>> = collapsed
        .representatives
        .par_chunks(CHUNK)
        .map(|chunk| {
            chunk
                .iter()
                .map(|p| {
                    let mut total = 0.0;
                    for &r in &rounds {
                        let profile = model.profile(p, design, r, &stateless, &stateless)?;
                        let obs = observed_probs(&profile, p.epsilon_at(r));
                        for (code, &c) in counts[r as usize].iter().enumerate() {
                            if c > 0 {
                                let lik = match_likelihood(&obs, Outcome::from_code(code as u8), design);
                                total += c as f64 * lik.ln();
                            }
                        }
                    }
                    Ok(total)
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(collapsed.representatives.len());
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

/// `ln` of the grid-averaged dataset likelihood. An empty dataset has
/// likelihood one.
pub fn log_dataset_likelihood(model: ModelId, dataset: &SessionDataset, grid: &ParamGrid) -> Result<f64> {
    let collapsed = CollapsedGrid::new(model, grid, dataset.n_rounds() as u32);
    log_dataset_likelihood_collapsed(model, dataset, &collapsed)
}

pub fn log_dataset_likelihood_collapsed(
    model: ModelId,
    dataset: &SessionDataset,
    collapsed: &CollapsedGrid,
) -> Result<f64> {
    if dataset.is_empty() {
        return Ok(0.0);
    }
    let lls = group_log_likelihoods(model, dataset, collapsed)?;
    Ok(weighted_log_sum_exp(&lls, &collapsed.weights) - collapsed.total_weight().ln())
}

/// Grid-averaged likelihood of the whole dataset under `model`.
pub fn dataset_likelihood(model: ModelId, dataset: &SessionDataset, grid: &ParamGrid) -> Result<f64> {
    Ok(log_dataset_likelihood(model, dataset, grid)?.exp())
}

/// Likelihood of every possible outcome sequence for the matches in
/// `layout`, indexed with the first match as the most significant base-8
/// digit (see [`dataset_index`]).
pub fn enumerate_dataset_likelihoods(
    model: ModelId,
    design: &GameDesign,
    layout: &MatchLayout,
    grid: &ParamGrid,
) -> Result<Vec<f64>> {
    let n = layout.n_matches();
    let size = NUM_OUTCOMES
        .checked_pow(n as u32)
        .ok_or_else(|| Error::InvalidArgument("too many matches to enumerate".into()))?;
    let collapsed = CollapsedGrid::new(model, grid, layout.n_rounds());
    let total = collapsed.total_weight();
    let pairs: Vec<(ModelParams, f64)> = collapsed
        .representatives
        .iter()
        .copied()
        .zip(collapsed.weights.iter().copied())
        .collect();
    let partials: Vec<Result<Vec<f64>>> = pairs
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0; size];
            let mut states = Vec::new();
            for (p, w) in chunk {
                layout.fresh_states(model, &mut states);
                enumerate_from(model, p, design, layout, 0, 0, *w / total, &states, &mut acc)?;
            }
            Ok(acc)
        })
        .collect();
    let mut out = vec![0.0; size];
    for part in partials {
        for (o, v) in out.iter_mut().zip(part?) {
            *o += v;
        }
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn enumerate_from(
    model: ModelId,
    params: &ModelParams,
    design: &GameDesign,
    layout: &MatchLayout,
    depth: usize,
    prefix: usize,
    prob: f64,
    states: &[PlayerState],
    acc: &mut [f64],
) -> Result<()> {
    if depth == layout.slots.len() {
        acc[prefix] += prob;
        return Ok(());
    }
    let slot = layout.slots[depth];
    let obs = step(model, params, design, slot, states)?;
    let mut next = states.to_vec();
    for code in 0..NUM_OUTCOMES as u8 {
        let outcome = Outcome::from_code(code);
        let lik = match_likelihood(&obs, outcome, design);
        let child = prefix * NUM_OUTCOMES + code as usize;
        if lik == 0.0 {
            continue;
        }
        next.copy_from_slice(states);
        advance(model, params, design, slot, &mut next, outcome);
        enumerate_from(model, params, design, layout, depth + 1, child, prob * lik, &next, acc)?;
    }
    Ok(())
}

/// Index of an outcome sequence among all `8^n` sequences, first match most
/// significant.
pub fn dataset_index(outcomes: impl IntoIterator<Item = Outcome>) -> usize {
    outcomes
        .into_iter()
        .fold(0, |acc, o| acc * NUM_OUTCOMES + o.code() as usize)
}

/// Inverse of [`dataset_index`] for sequences of length `n`.
pub fn outcomes_from_index(mut index: usize, n: usize) -> Vec<Outcome> {
    let mut out = vec![Outcome::from_code(0); n];
    for slot in out.iter_mut().rev() {
        *slot = Outcome::from_code((index % NUM_OUTCOMES) as u8);
        index /= NUM_OUTCOMES;
    }
    out
}

/// Draws outcomes for every match in `layout` (in layout order) into `out`.
pub fn simulate_into<R: Rng + ?Sized>(
    model: ModelId,
    params: &ModelParams,
    design: &GameDesign,
    layout: &MatchLayout,
    rng: &mut R,
    states: &mut Vec<PlayerState>,
    out: &mut Vec<Outcome>,
) -> Result<()> {
    out.clear();
    layout.fresh_states(model, states);
    for &slot in &layout.slots {
        let obs = step(model, params, design, slot, states)?;
        let world = if rng.random::<f64>() < design.pi {
            World::A
        } else {
            World::B
        };
        let go = match world {
            World::A => obs.obsp_a,
            World::B => obs.obsp_b,
        };
        let p1 = if rng.random::<f64>() < go {
            P1Action::Go
        } else {
            P1Action::Stop
        };
        let p2 = if rng.random::<f64>() < obs.obsq {
            P2Action::Left
        } else {
            P2Action::Right
        };
        let outcome = Outcome::new(world, p1, p2);
        advance(model, params, design, slot, states, outcome);
        out.push(outcome);
    }
    Ok(())
}

/// Simulates one session of `schedule` under fixed parameters.
pub fn simulate_dataset(
    model: ModelId,
    params: &ModelParams,
    design: &GameDesign,
    schedule: &MatchingSchedule,
    seed: u64,
) -> Result<SessionDataset> {
    params.validate(design)?;
    let layout = MatchLayout::from_schedule(schedule);
    let mut r = rng::stream(seed, &format!("simulate/model={model}"));
    let mut states = Vec::new();
    let mut outcomes = Vec::new();
    simulate_into(model, params, design, &layout, &mut r, &mut states, &mut outcomes)?;
    SessionDataset::from_schedule(*design, schedule, &outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::enumerate_outcomes;
    use crate::params::GridResolution;
    use crate::schedule::perfect_stranger_schedule;
    use approx::assert_relative_eq;

    fn coarse(design: &GameDesign) -> ParamGrid {
        ParamGrid::with_resolution(
            design,
            GridResolution {
                epsilon: 6,
                alpha: 5,
                delta: 3,
                pi_per: 3,
            },
        )
        .unwrap()
    }

    #[test]
    fn empty_dataset_has_likelihood_one() {
        let d = GameDesign::classic();
        let grid = coarse(&d);
        for m in ModelId::ALL {
            assert_eq!(dataset_likelihood(m, &SessionDataset::empty(d), &grid).unwrap(), 1.0);
        }
    }

    #[test]
    fn single_point_grid_is_the_bare_product() {
        let d = GameDesign::new(3.0, 0.4).unwrap();
        let params = ModelParams::new(0.3, 0.6, 0.1, 0.45);
        let grid = ParamGrid::from_points(&d, vec![params]).unwrap();
        let schedule = perfect_stranger_schedule(6, 3, 1).unwrap();
        for m in ModelId::ALL {
            let ds = simulate_dataset(m, &params, &d, &schedule, 11).unwrap();
            // independent replay of the product
            let mut states: HashMap<PlayerId, PlayerState> = HashMap::new();
            let mut product = 1.0;
            for r in ds.records() {
                let s1 = *states.entry(r.p1).or_insert(m.initial_state(Role::One));
                let s2 = *states.entry(r.p2).or_insert(m.initial_state(Role::Two));
                let prof = m.profile(&params, &d, r.round, &s1, &s2).unwrap();
                let obs = observed_probs(&prof, params.epsilon_at(r.round));
                product *= match_likelihood(&obs, r.outcome, &d);
                let mut n1 = s1;
                let mut n2 = s2;
                m.observe(&params, &d, &mut n1, Role::One, r.outcome);
                m.observe(&params, &d, &mut n2, Role::Two, r.outcome);
                states.insert(r.p1, n1);
                states.insert(r.p2, n2);
            }
            let got = dataset_likelihood(m, &ds, &grid).unwrap();
            assert_relative_eq!(got, product, max_relative = 1e-12);
        }
    }

    #[test]
    fn collapsing_preserves_the_average() {
        let d = GameDesign::new(2.6, 0.55).unwrap();
        let grid = coarse(&d);
        let schedule = perfect_stranger_schedule(4, 2, 3).unwrap();
        let params = ModelParams::new(0.2, 0.4, 0.0, 0.55);
        for m in ModelId::ALL {
            let ds = simulate_dataset(m, &params, &d, &schedule, 5).unwrap();
            let layout = MatchLayout::from_dataset(&ds);
            let outcomes: Vec<Outcome> = ds.outcomes().collect();
            let direct: f64 = grid
                .iter()
                .map(|p| log_likelihood_at(m, p, &d, &layout, &outcomes).unwrap().exp())
                .sum::<f64>()
                / grid.len() as f64;
            assert_relative_eq!(dataset_likelihood(m, &ds, &grid).unwrap(), direct, max_relative = 1e-12);
            assert!(CollapsedGrid::new(m, &grid, 2).representatives.len() < grid.len());
        }
    }

    #[test]
    fn enumeration_matches_direct_evaluation() {
        let d = GameDesign::new(3.5, 0.35).unwrap();
        let grid = coarse(&d);
        let schedule = MatchingSchedule::rotation(2, 2).unwrap();
        let layout = MatchLayout::from_schedule(&schedule);
        for m in ModelId::ALL {
            let table = enumerate_dataset_likelihoods(m, &d, &layout, &grid).unwrap();
            assert_eq!(table.len(), 4096);
            assert_relative_eq!(table.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
            for idx in [0usize, 77, 1234, 4095] {
                let outcomes = outcomes_from_index(idx, 4);
                let ds = SessionDataset::from_schedule(d, &schedule, &outcomes).unwrap();
                let direct = dataset_likelihood(m, &ds, &grid).unwrap();
                assert_relative_eq!(table[idx], direct, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn index_round_trip() {
        let outs = enumerate_outcomes();
        let seq = vec![outs[3], outs[0], outs[7]];
        let idx = dataset_index(seq.iter().copied());
        assert_eq!(idx, 3 * 64 + 7);
        assert_eq!(outcomes_from_index(idx, 3), seq);
    }

    #[test]
    fn simulation_is_reproducible() {
        let d = GameDesign::classic();
        let s = perfect_stranger_schedule(10, 3, 0).unwrap();
        let p = ModelParams::new(0.2, 0.5, 0.1, 0.5);
        for m in ModelId::ALL {
            let a = simulate_dataset(m, &p, &d, &s, 99).unwrap();
            let b = simulate_dataset(m, &p, &d, &s, 99).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.len(), 15);
        }
    }

    #[test]
    fn deterministic_case_d_always_goes_in_world_a() {
        // pi_per far below pi_hat with zero tremble: Case C/D give p_a = 1.
        let d = GameDesign::new(6.0, 0.3).unwrap();
        let p = ModelParams::new(0.0, 0.5, 0.2, 0.1);
        let s = perfect_stranger_schedule(20, 5, 2).unwrap();
        let ds = simulate_dataset(ModelId::BayesNash, &p, &d, &s, 4).unwrap();
        let in_a: Vec<_> = ds.outcomes().filter(|o| o.world == World::A).collect();
        assert!(!in_a.is_empty());
        assert!(in_a.iter().all(|o| o.p1 == P1Action::Go));
    }
}
