//! Rayon drivers for the core's batch-level entry points. Work is split into
//! independent pieces whose results are combined in a fixed order, so every
//! output is identical for any thread count.

use chbell_core::montecarlo::{experiment_from_records, lhv_experiment_plans, quantum_experiment_plans, CellPlan};
use chbell_core::optimizer::curve_state;
use chbell_core::{
    ChExperiment, DetectionModel, EfficiencyCurvePoint, EntangledState, Error, LhvMixture, OptimizationReport,
    OptimizerConfig, SearchPlan, SettingsQuad,
};
use rayon::prelude::*;

use crate::error::{CliError, Result};

/// Run `job` on a pool of `threads` workers (0 picks rayon's default).
pub fn with_threads<T: Send>(threads: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::usage(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(job))
}

fn run_plans(plans: &[CellPlan<'_>]) -> Result<ChExperiment> {
    let jobs: Vec<(usize, u64)> = plans
        .iter()
        .enumerate()
        .flat_map(|(cell, plan)| (0..plan.batch_count()).map(move |b| (cell, b)))
        .collect();
    let coincidences: Vec<u64> = jobs
        .par_iter()
        .map(|&(cell, batch)| plans[cell].run_batch(batch))
        .collect();
    let records: Vec<_> = plans
        .iter()
        .enumerate()
        .map(|(cell, plan)| {
            plan.finish(
                jobs.iter()
                    .zip(&coincidences)
                    .filter(|((c, _), _)| *c == cell)
                    .map(|(_, &n)| n),
            )
        })
        .collect();
    Ok(experiment_from_records(&records)?)
}

/// Quantum-source CH run, parallel over cells and pair batches.
pub fn simulate_quantum(
    state: &EntangledState,
    quad: &SettingsQuad,
    model: &DetectionModel,
    seed: u64,
) -> Result<ChExperiment> {
    run_plans(&quantum_experiment_plans(state, quad, model, seed)?)
}

/// Local-source CH run, parallel over cells and pair batches.
pub fn simulate_local(
    mixture: &LhvMixture,
    quad: &SettingsQuad,
    model: &DetectionModel,
    seed: u64,
) -> Result<ChExperiment> {
    run_plans(&lhv_experiment_plans(mixture, quad, model, seed)?)
}

/// Multi-start violation search with the local searches run concurrently.
pub fn optimize(
    state: &EntangledState,
    eta1: f64,
    eta2: f64,
    config: &OptimizerConfig,
) -> Result<OptimizationReport> {
    let plan = SearchPlan::maximize_violation(state, eta1, eta2, config)?;
    let results: Vec<_> = plan.seeds().par_iter().map(|s| plan.refine(s)).collect();
    Ok(plan.finish_violation(&results)?)
}

fn threshold(state: &EntangledState, config: &OptimizerConfig) -> chbell_core::Result<EfficiencyCurvePoint> {
    let plan = SearchPlan::minimize_threshold(state, config)?;
    let results: Vec<_> = plan.seeds().par_iter().map(|s| plan.refine(s)).collect();
    plan.finish_threshold(&results)
}

/// Critical efficiency for each ratio in `f_values`, in input order.
pub fn efficiency_curve(f_values: &[f64], config: &OptimizerConfig) -> Result<Vec<EfficiencyCurvePoint>> {
    let points = f_values
        .par_iter()
        .map(|&f| {
            curve_state(f)
                .and_then(|s| threshold(&s, config))
                .map_err(|e| Error::AtRatio {
                    f,
                    source: Box::new(e),
                })
        })
        .collect::<chbell_core::Result<Vec<_>>>()?;
    Ok(points)
}
