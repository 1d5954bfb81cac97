//! Fringe visibility from a scan of one polarizer with the other fixed.

use alloc::vec::Vec;

use super::{sample_poisson, simulate_cell, DetectionModel};
use crate::math::sqrt;
use crate::model::{coincidence_probability, EntangledState};
use crate::seed::{derive_seed, domain, stream};
use crate::settings::AnalyzerSetting;
use crate::{Error, Result};

pub const DEFAULT_BOOTSTRAP_REPLICATES: usize = 200;
const MIN_GRID_POINTS: usize = 8;

/// How the fringe is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FringeMode {
    /// Exact coincidence probabilities.
    Analytic,
    /// Simulated coincidence counts with a Poisson bootstrap for `sigma_v`.
    Simulated {
        model: DetectionModel,
        seed: u64,
        replicates: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Visibility {
    pub v: f64,
    /// Bootstrap standard deviation; 0 in analytic mode.
    pub sigma_v: f64,
    /// Fringe values per grid point: probabilities or counts.
    pub fringe: Vec<f64>,
}

/// `V = (Nmax - Nmin) / (Nmax + Nmin)` for a scan of arm 2 over `theta2_grid`
/// (degrees, increasing, at least 8 points spanning 180°) with arm 1 at
/// `fixed_theta1`. Extremes are refined by a parabola through the extreme grid
/// point and its neighbours.
pub fn visibility_scan(
    state: &EntangledState,
    fixed_theta1: f64,
    theta2_grid: &[f64],
    mode: &FringeMode,
) -> Result<Visibility> {
    check_grid(theta2_grid)?;
    let a1 = AnalyzerSetting::angle(fixed_theta1)?;
    match mode {
        FringeMode::Analytic => {
            let fringe = theta2_grid
                .iter()
                .map(|&t| Ok(coincidence_probability(state, a1, AnalyzerSetting::angle(t)?)))
                .collect::<Result<Vec<f64>>>()?;
            let v = fringe_visibility(theta2_grid, &fringe)?;
            Ok(Visibility {
                v,
                sigma_v: 0.0,
                fringe,
            })
        }
        FringeMode::Simulated {
            model,
            seed,
            replicates,
        } => {
            if *replicates < 2 {
                return Err(Error::Invalid("bootstrap needs at least two replicates"));
            }
            let counts = theta2_grid
                .iter()
                .enumerate()
                .map(|(i, &t)| {
                    let cell_seed = derive_seed(*seed, &[domain::FRINGE, i as u64]);
                    simulate_cell(state, a1, AnalyzerSetting::angle(t)?, model, cell_seed).map(|r| r.counts)
                })
                .collect::<Result<Vec<u64>>>()?;
            let fringe: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
            let v = fringe_visibility(theta2_grid, &fringe)?;

            let mut replica = alloc::vec![0.0; counts.len()];
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            let mut used = 0usize;
            for b in 0..*replicates {
                let mut rng = stream(*seed, &[domain::BOOTSTRAP, b as u64]);
                for (slot, &c) in replica.iter_mut().zip(counts.iter()) {
                    *slot = sample_poisson(&mut rng, c as f64) as f64;
                }
                if let Ok(vb) = fringe_visibility(theta2_grid, &replica) {
                    sum += vb;
                    sum_sq += vb * vb;
                    used += 1;
                }
            }
            let sigma_v = if used > 1 {
                let n = used as f64;
                let mean = sum / n;
                sqrt(((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0))
            } else {
                0.0
            };
            Ok(Visibility { v, sigma_v, fringe })
        }
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < MIN_GRID_POINTS {
        return Err(Error::Invalid("visibility scan needs at least 8 grid points"));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::Invalid("visibility grid contains a non-finite angle"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Invalid("visibility grid must be strictly increasing"));
    }
    if grid[grid.len() - 1] - grid[0] < 180.0 - 1e-9 {
        return Err(Error::Invalid("visibility grid must span at least 180 degrees"));
    }
    Ok(())
}

fn fringe_visibility(x: &[f64], y: &[f64]) -> Result<f64> {
    let imax = extreme_index(y, |a, b| a > b);
    let imin = extreme_index(y, |a, b| a < b);
    let nmax = refine_extreme(x, y, imax, true);
    let nmin = refine_extreme(x, y, imin, false).max(0.0);
    let total = nmax + nmin;
    if total.is_nan() || total <= 0.0 {
        return Err(Error::Invalid("fringe is empty; visibility undefined"));
    }
    Ok(((nmax - nmin) / total).clamp(0.0, 1.0))
}

/// First index that beats every other under `better`.
fn extreme_index(y: &[f64], better: impl Fn(f64, f64) -> bool) -> usize {
    let mut best = 0;
    for (i, &v) in y.iter().enumerate().skip(1) {
        if better(v, y[best]) {
            best = i;
        }
    }
    best
}

/// Vertex of the parabola through points `i-1, i, i+1`; falls back to `y[i]`
/// at the grid edges or when the three points do not bracket an extreme of
/// the requested kind.
fn refine_extreme(x: &[f64], y: &[f64], i: usize, maximum: bool) -> f64 {
    if i == 0 || i + 1 >= y.len() {
        return y[i];
    }
    let (x0, x1, x2) = (x[i - 1], x[i], x[i + 1]);
    let (y0, y1, y2) = (y[i - 1], y[i], y[i + 1]);
    // Newton form: y = y1 + b (t - x1) + c (t - x0)(t - x1)... written around x1
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let c = (d12 - d01) / (x2 - x0);
    if (maximum && c >= 0.0) || (!maximum && c <= 0.0) {
        return y1;
    }
    // slope at x1 of the interpolating parabola
    let b = d01 + c * (x1 - x0);
    let t = -b / (2.0 * c);
    if !(x0 - x1..=x2 - x1).contains(&t) {
        return y1;
    }
    let vertex = y1 + b * t + c * t * t;
    if maximum {
        vertex.max(y1)
    } else {
        vertex.min(y1)
    }
}
