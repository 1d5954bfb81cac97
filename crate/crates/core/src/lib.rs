//! Clauser-Horne tests with non-maximally entangled polarization photon pairs.
//!
//! The source state is `(|HH> + f e^{i phi} |VV>) / sqrt(1 + f^2)` mixed with
//! white noise, measured by one linear polarizer per arm. This crate is
//! `no_std` (it needs `alloc`) and contains only the numerical machinery:
//!
//! - [`model`]: closed-form coincidence, singles, and joint-outcome
//!   probabilities.
//! - [`inequality`]: the CH sum in probability, count, and efficiency form,
//!   plus the local-realistic bound by enumeration of deterministic
//!   strategies.
//! - [`optimizer`]: multi-start simplex search for the most violating analyzer
//!   angles and for the critical detection efficiency.
//! - [`montecarlo`]: seeded pair-by-pair simulation of the counting
//!   experiment and fringe-visibility scans.
//!
//! Angles cross every public boundary in degrees.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

mod error;
mod math;
mod simplex;

pub mod inequality;
pub mod model;
pub mod montecarlo;
pub mod optimizer;
pub mod seed;
pub mod settings;

pub use error::{Error, Result};
pub use inequality::{
    ch_components, ch_from_counts, ch_probability_sum, ch_with_efficiency, lhv_maximum, CHResult,
    ChComponents, CountsTable,
    LhvForm, LhvMaximum, LhvStrategy, Outcome,
};
pub use model::{
    coincidence_probability, joint_outcome_distribution, make_state, single_probability, EntangledState,
    JointOutcome, Side,
};
pub use optimizer::{
    canonical_quad, critical_efficiency, critical_efficiency_with, efficiency_curve,
    efficiency_curve_with, optimize_angles, optimize_angles_with, quad_distance,
    EfficiencyCurvePoint, OptimizationReport, OptimizerConfig, SearchPlan,
};
pub use montecarlo::{
    simulate_cell, simulate_ch_experiment, simulate_lhv_source, visibility_scan, ChExperiment,
    DetectionModel, FringeMode, LhvMixture, RunRecord, Visibility,
};
pub use settings::{AnalyzerSetting, SettingsQuad};
