//! Disorder ensembles over both engines and the derived quantities.

mod analysis;
mod ensemble;
mod fidelity;
mod instability;
mod sweep;

pub use analysis::{
    collapse_scan, curves_from_results, find_crossing, grid, linear_fit, peak_location, power_law_fit, scaling_collapse,
    CollapseCell, CollapseResult, CollapseSpec, CollapseSurface, CrossingResult, Curve, LinearFit, PairCrossing, Peak,
    COLLAPSE_GRID_POINTS,
};
pub use ensemble::{compensated_sum, disorder_average, disorder_average_many, EnsembleResult, PointKey};
pub use fidelity::{fidelity_scaling, BetaFit, FidelityRow, FidelitySpec, FidelityTable};
pub use instability::{growth_window, instability_ensemble, instability_experiment, longest_run, GrowthFit, GrowthSummary};
pub use sweep::{exact_probe, replica_probe, sweep, sweep_point, DepthRule, Engine, InitialState, Probe, Realization, SweepSpec};
