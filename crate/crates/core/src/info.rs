//! How much a design is expected to tell us about which model is true.
//!
//! The value of a design is a one-sided KL divergence between the target
//! model's distribution over datasets and the prior-weighted mixture of the
//! other models. It is computed either exactly, by enumerating every
//! possible dataset, or from simulated datasets whose occurrence
//! frequencies stand in for likelihoods.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_bigint::BigUint;
use rand::RngExt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GameDesign, Outcome};
use crate::likelihood::{enumerate_dataset_likelihoods, simulate_into, MatchLayout};
use crate::models::ModelId;
use crate::params::{GridResolution, ModelParams, ParamGrid};
use crate::rng;
use crate::schedule::MatchingSchedule;

/// Stand-in for a zero mixture likelihood under a dataset the target can
/// produce.
pub const LIKELIHOOD_FLOOR: f64 = 1e-300;

/// Default limit on the number of datasets exact mode will enumerate.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

/// Simulated datasets per work unit in sampled mode.
const SAMPLE_BLOCK: usize = 1024;

const OUTCOME_BITS: u32 = 3;
const CODES_PER_WORD: usize = 21;

/// A full ordered outcome sequence packed three bits per match.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DatasetKey(Vec<u64>);

impl DatasetKey {
    pub fn pack(outcomes: &[Outcome]) -> Self {
        let mut words = vec![0u64; outcomes.len().div_ceil(CODES_PER_WORD)];
        for (i, o) in outcomes.iter().enumerate() {
            let shift = (i % CODES_PER_WORD) as u32 * OUTCOME_BITS;
            words[i / CODES_PER_WORD] |= (o.code() as u64) << shift;
        }
        Self(words)
    }

    pub fn unpack(&self, n: usize) -> Vec<Outcome> {
        (0..n)
            .map(|i| {
                let shift = (i % CODES_PER_WORD) as u32 * OUTCOME_BITS;
                Outcome::from_code(((self.0[i / CODES_PER_WORD] >> shift) & 0b111) as u8)
            })
            .collect()
    }
}

/// Prior probabilities of the candidate models.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelPrior(Vec<f64>);

impl ModelPrior {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("prior needs at least one model".into()));
        }
        if weights.iter().any(|&w| !w.is_finite() || w < 0.0) {
            return Err(Error::InvalidArgument(format!("prior weights must be non-negative: {weights:?}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("prior weights sum to {total}, not 1")));
        }
        Ok(Self(weights))
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![1.0 / n as f64; n])
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Likelihood of each dataset in a support under each model.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodTable {
    keys: Vec<DatasetKey>,
    /// `columns[i][x]`: likelihood of dataset `x` under model `i`.
    columns: Vec<Vec<f64>>,
}

impl LikelihoodTable {
    pub fn new(keys: Vec<DatasetKey>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if columns.iter().any(|c| c.len() != keys.len()) {
            return Err(Error::InvalidArgument("likelihood columns must match the support".into()));
        }
        Ok(Self { keys, columns })
    }

    pub fn keys(&self) -> &[DatasetKey] {
        &self.keys
    }

    pub fn column(&self, model: usize) -> &[f64] {
        &self.columns[model]
    }

    pub fn n_models(&self) -> usize {
        self.columns.len()
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

/// A divergence value and whether any term hit the likelihood floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Divergence {
    pub nats: f64,
    pub saturated: bool,
}

fn check_inputs(table: &LikelihoodTable, prior: &ModelPrior) -> Result<()> {
    if table.is_empty() {
        return Err(Error::InvalidArgument("likelihood table is empty".into()));
    }
    if table.n_models() != prior.len() {
        return Err(Error::InvalidArgument(format!(
            "{} likelihood columns but {} prior weights",
            table.n_models(),
            prior.len()
        )));
    }
    Ok(())
}

/// `sum_x l_t(x) ln[(1 - p_t) l_t(x) / sum_{i != t} p_i l_i(x)]`.
pub fn kl_one_sided(table: &LikelihoodTable, prior: &ModelPrior, target: usize) -> Result<Divergence> {
    check_inputs(table, prior)?;
    if target >= table.n_models() {
        return Err(Error::InvalidArgument(format!("target model {target} out of range")));
    }
    let p = prior.weights();
    let rest = 1.0 - p[target];
    let lt = table.column(target);
    let mut nats = 0.0;
    let mut saturated = false;
    for x in 0..table.len() {
        let l = lt[x];
        if l == 0.0 {
            continue;
        }
        let mut mix = 0.0;
        for (i, col) in table.columns.iter().enumerate() {
            if i != target {
                mix += p[i] * col[x];
            }
        }
        if mix <= 0.0 {
            mix = LIKELIHOOD_FLOOR;
            saturated = true;
        }
        nats += l * (rest * l / mix).ln();
    }
    Ok(Divergence { nats, saturated })
}

/// Prior-weighted mean of [`kl_one_sided`] over every target.
pub fn average_information(table: &LikelihoodTable, prior: &ModelPrior) -> Result<Divergence> {
    check_inputs(table, prior)?;
    if table.n_models() < 2 {
        return Err(Error::InvalidArgument("average information needs at least two models".into()));
    }
    let mut out = Divergence {
        nats: 0.0,
        saturated: false,
    };
    for (t, &w) in prior.weights().iter().enumerate() {
        let d = kl_one_sided(table, prior, t)?;
        out.nats += w * d.nats;
        out.saturated |= d.saturated;
    }
    Ok(out)
}

/// Which divergence a surface reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// One-sided divergence with this model (by position) as the target.
    Target(usize),
    /// Prior-weighted average over all targets.
    Average,
}

impl Objective {
    /// Target the first model for up to three models, average for more.
    pub fn default_for(n_models: usize) -> Self {
        if n_models > 3 {
            Objective::Average
        } else {
            Objective::Target(0)
        }
    }

    pub fn evaluate(self, table: &LikelihoodTable, prior: &ModelPrior) -> Result<Divergence> {
        match self {
            Objective::Target(t) => kl_one_sided(table, prior, t),
            Objective::Average => average_information(table, prior),
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Objective::Target(t) => write!(f, "target:{t}"),
            Objective::Average => f.write_str("average"),
        }
    }
}

impl FromStr for Objective {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "average" {
            return Ok(Objective::Average);
        }
        s.strip_prefix("target:")
            .and_then(|t| t.parse().ok())
            .map(Objective::Target)
            .ok_or_else(|| Error::InvalidArgument(format!("objective `{s}` is not `average` or `target:N`")))
    }
}

/// Parameter grid used for every design.
#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    /// The regular grid at this resolution, rebuilt around each design's pi.
    Resolution(GridResolution),
    /// Fixed parameter points, used as given.
    Points(Vec<ModelParams>),
}

impl GridSpec {
    pub fn build(&self, design: &GameDesign) -> Result<ParamGrid> {
        match self {
            GridSpec::Resolution(r) => ParamGrid::with_resolution(design, *r),
            GridSpec::Points(p) => ParamGrid::from_points(design, p.clone()),
        }
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Resolution(GridResolution::STANDARD)
    }
}

/// Models, prior and objective shared by every point of a surface.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoSettings {
    pub models: Vec<ModelId>,
    pub prior: ModelPrior,
    pub objective: Objective,
    pub grid: GridSpec,
}

impl InfoSettings {
    /// Uniform prior, default objective, standard grid.
    pub fn new(models: Vec<ModelId>) -> Result<Self> {
        let prior = ModelPrior::uniform(models.len())?;
        let objective = Objective::default_for(models.len());
        Self::with(models, prior, objective, GridSpec::default())
    }

    pub fn with(models: Vec<ModelId>, prior: ModelPrior, objective: Objective, grid: GridSpec) -> Result<Self> {
        if models.is_empty() {
            return Err(Error::InvalidArgument("no models given".into()));
        }
        if prior.len() != models.len() {
            return Err(Error::InvalidArgument(format!(
                "{} models but {} prior weights",
                models.len(),
                prior.len()
            )));
        }
        if let Objective::Target(t) = objective {
            if t >= models.len() {
                return Err(Error::InvalidArgument(format!("target model {t} out of range")));
            }
        }
        Ok(Self {
            models,
            prior,
            objective,
            grid,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfoMode {
    Exact,
    Sampled,
}

impl fmt::Display for InfoMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InfoMode::Exact => "exact",
            InfoMode::Sampled => "sampled",
        })
    }
}

impl FromStr for InfoMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "exact" => Ok(InfoMode::Exact),
            "sampled" => Ok(InfoMode::Sampled),
            other => Err(Error::InvalidArgument(format!("mode `{other}` is not `exact` or `sampled`"))),
        }
    }
}

/// Information value of one design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfoPoint {
    pub design: GameDesign,
    /// Nats.
    pub value: f64,
    pub mode: InfoMode,
    /// Samples per model in sampled mode.
    pub k: Option<usize>,
    pub seed: Option<u64>,
    pub saturated: bool,
}

#[derive(Serialize)]
struct InfoRow {
    #[serde(rename = "A")]
    a: f64,
    pi: f64,
    value: f64,
    mode: String,
    #[serde(rename = "K")]
    k: Option<usize>,
    seed: Option<u64>,
    saturated: bool,
}

/// Writes `A,pi,value,mode,K,seed,saturated` rows.
pub fn write_info_csv<W: Write>(points: &[InfoPoint], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for p in points {
        w.serialize(InfoRow {
            a: p.design.a,
            pi: p.design.pi,
            value: p.value,
            mode: p.mode.to_string(),
            k: p.k,
            seed: p.seed,
            saturated: p.saturated,
        })?;
    }
    if points.is_empty() {
        w.write_record(["A", "pi", "value", "mode", "K", "seed", "saturated"])?;
    }
    w.flush()?;
    Ok(())
}

/// Errors out when `8^matches` exceeds `cap`.
pub fn check_enumeration_cap(n_matches: usize, cap: u64) -> Result<()> {
    let count = BigUint::from(8u32).pow(n_matches as u32);
    if count > BigUint::from(cap) {
        return Err(Error::EnumerationCap {
            datasets: count.to_string(),
            cap,
        });
    }
    Ok(())
}

/// Full likelihood table over every outcome sequence of `schedule`.
pub fn exact_table(design: &GameDesign, settings: &InfoSettings, schedule: &MatchingSchedule, cap: u64) -> Result<LikelihoodTable> {
    let n = schedule.n_matches();
    check_enumeration_cap(n, cap)?;
    let layout = MatchLayout::from_schedule(schedule);
    let grid = settings.grid.build(design)?;
    let columns = settings
        .models
        .iter()
        .map(|&m| enumerate_dataset_likelihoods(m, design, &layout, &grid))
        .collect::<Result<Vec<_>>>()?;
    let keys = (0..columns[0].len())
        .map(|idx| DatasetKey::pack(&crate::likelihood::outcomes_from_index(idx, n)))
        .collect();
    LikelihoodTable::new(keys, columns)
}

/// Information value from the complete dataset distribution.
pub fn exact_information(
    design: &GameDesign,
    settings: &InfoSettings,
    schedule: &MatchingSchedule,
    cap: u64,
) -> Result<InfoPoint> {
    let table = exact_table(design, settings, schedule, cap)?;
    let d = settings.objective.evaluate(&table, &settings.prior)?;
    Ok(InfoPoint {
        design: *design,
        value: d.nats,
        mode: InfoMode::Exact,
        k: None,
        seed: None,
        saturated: d.saturated,
    })
}

/// Occurrence frequencies of `k` simulated datasets per model, one per
/// uniformly drawn grid point, merged onto a common support in key order.
pub fn sampled_table(
    design: &GameDesign,
    settings: &InfoSettings,
    schedule: &MatchingSchedule,
    k: usize,
    seed: u64,
) -> Result<LikelihoodTable> {
    if k == 0 {
        return Err(Error::InvalidArgument("sample count K must be at least 1".into()));
    }
    let grid = settings.grid.build(design)?;
    let layout = MatchLayout::from_schedule(schedule);
    let n_blocks = k.div_ceil(SAMPLE_BLOCK);
    let units: Vec<(usize, usize)> = (0..settings.models.len())
        .flat_map(|m| (0..n_blocks).map(move |b| (m, b)))
        .collect();
    let blocks: Vec<Result<Vec<DatasetKey>>> = units
        .par_iter()
        .map(|&(m, b)| {
            let model = settings.models[m];
            let label = format!("sampling/model={model}/block={b}");
            let mut r = rng::stream(seed, &label);
            let size = SAMPLE_BLOCK.min(k - b * SAMPLE_BLOCK);
            let mut keys = Vec::with_capacity(size);
            let mut states = Vec::new();
            let mut outcomes = Vec::new();
            for _ in 0..size {
                let p = &grid.points()[r.random_range(0..grid.len())];
                simulate_into(model, p, design, &layout, &mut r, &mut states, &mut outcomes)?;
                keys.push(DatasetKey::pack(&outcomes));
            }
            Ok(keys)
        })
        .collect();

    let n_models = settings.models.len();
    let mut counts: BTreeMap<DatasetKey, Vec<u32>> = BTreeMap::new();
    for (&(m, _), block) in units.iter().zip(blocks) {
        for key in block? {
            counts.entry(key).or_insert_with(|| vec![0; n_models])[m] += 1;
        }
    }
    let mut keys = Vec::with_capacity(counts.len());
    let mut columns = vec![Vec::with_capacity(counts.len()); n_models];
    for (key, c) in counts {
        keys.push(key);
        for (col, &n) in columns.iter_mut().zip(&c) {
            col.push(n as f64 / k as f64);
        }
    }
    LikelihoodTable::new(keys, columns)
}

/// Information value estimated from simulated datasets.
pub fn sampled_information(
    design: &GameDesign,
    settings: &InfoSettings,
    schedule: &MatchingSchedule,
    k: usize,
    seed: u64,
) -> Result<InfoPoint> {
    let table = sampled_table(design, settings, schedule, k, seed)?;
    let d = settings.objective.evaluate(&table, &settings.prior)?;
    Ok(InfoPoint {
        design: *design,
        value: d.nats,
        mode: InfoMode::Sampled,
        k: Some(k),
        seed: Some(seed),
        saturated: d.saturated,
    })
}
