//! Search over the design lattice for the most informative design.

mod baseline;
pub mod gp;
mod gpucbpe;
mod grid;
mod regret;
mod sobol;
mod spearman;

pub use baseline::{baseline_search, grid_scan_order, random_order, Baseline, BaselineOutcome};
pub use gpucbpe::{
    next_query, run_gpucbpe, Posterior, QueryKind, SearchConfig, SearchOutcome, StopReason, TraceRow,
};
pub use grid::DesignGrid;
pub use regret::{evaluations_to_zero_regret, regret_curve};
pub use sobol::{sobol_points, sobol_unit};
pub use spearman::{average_ranks, spearman, StopRule};
