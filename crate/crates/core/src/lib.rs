//! Bayesian experimental design for the Stop-Go game.
//!
//! Behavioral models of play, dataset likelihoods integrated over a
//! parameter grid, the expected information a game design yields about
//! which model is true, a Gaussian-process search over designs, and
//! likelihood-ratio model selection on collected data.

pub mod dataset;
pub mod error;
pub mod game;
pub mod info;
pub mod likelihood;
pub mod models;
pub mod params;
pub mod rng;
pub mod schedule;
pub mod search;
pub mod selection;
pub mod surface;

pub use dataset::{MatchRecord, SessionDataset};
pub use error::{Error, Result};
pub use game::{GameDesign, Outcome, P1Action, P2Action, World};
pub use models::{ModelId, Role};
pub use params::{GridResolution, ModelParams, ParamGrid};
pub use schedule::{perfect_stranger_schedule, MatchingSchedule};
