//! The information objective over the design lattice.
//!
//! Each design is evaluated with its own seed derived from the top-level
//! seed and the design's grid index, so any strategy that visits a design
//! sees the same value.

use crate::error::{Error, Result};
use crate::game::GameDesign;
use crate::info::{exact_information, sampled_information, InfoMode, InfoPoint, InfoSettings, DEFAULT_ENUMERATION_CAP};
use crate::rng;
use crate::schedule::{perfect_stranger_schedule, MatchingSchedule};
use crate::search::DesignGrid;

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceSpec {
    pub settings: InfoSettings,
    pub mode: InfoMode,
    /// Samples per model in sampled mode.
    pub k: usize,
    pub n_players: usize,
    pub n_rounds: usize,
    pub enumeration_cap: u64,
}

impl SurfaceSpec {
    /// Sampled mode, `K = 10,000`, ten players for three rounds.
    pub fn new(settings: InfoSettings) -> Self {
        Self {
            settings,
            mode: InfoMode::Sampled,
            k: 10_000,
            n_players: 10,
            n_rounds: 3,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        }
    }

    /// The matching schedule used for every design. Sampled mode shuffles
    /// a perfect-stranger schedule from the seed; exact mode uses the
    /// unshuffled rotation.
    pub fn schedule(&self, seed: u64) -> Result<MatchingSchedule> {
        match self.mode {
            InfoMode::Sampled => perfect_stranger_schedule(self.n_players, self.n_rounds, rng::derive_seed(seed, "schedule")),
            InfoMode::Exact => {
                if self.n_players % 2 != 0 || self.n_players < 2 {
                    return Err(Error::InvalidArgument(format!(
                        "need an even number of players, got {}",
                        self.n_players
                    )));
                }
                let schedule = MatchingSchedule::rotation(self.n_players / 2, self.n_rounds)?;
                crate::info::check_enumeration_cap(schedule.n_matches(), self.enumeration_cap)?;
                Ok(schedule)
            }
        }
    }

    pub fn evaluate(&self, design: &GameDesign, index: usize, seed: u64, schedule: &MatchingSchedule) -> Result<InfoPoint> {
        match self.mode {
            InfoMode::Exact => exact_information(design, &self.settings, schedule, self.enumeration_cap),
            InfoMode::Sampled => {
                sampled_information(design, &self.settings, schedule, self.k, design_seed(seed, index))
            }
        }
    }

    /// Every grid point, in index order.
    pub fn evaluate_grid(&self, grid: &DesignGrid, seed: u64) -> Result<Vec<InfoPoint>> {
        let schedule = self.schedule(seed)?;
        (0..grid.len())
            .map(|i| {
                let d = grid.design(i);
                self.evaluate(&d, i, seed, &schedule).map_err(|e| Error::Objective {
                    a: d.a,
                    pi: d.pi,
                    source: Box::new(e),
                })
            })
            .collect()
    }
}

/// Seed of the objective evaluation at grid index `index`.
pub fn design_seed(seed: u64, index: usize) -> u64 {
    rng::derive_seed(seed, &format!("design={index}"))
}

/// Index of the largest value, first on ties.
pub fn argmax(points: &[InfoPoint]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, p) in points.iter().enumerate() {
        if best.is_none_or(|b| p.value > points[b].value) {
            best = Some(i);
        }
    }
    best
}
