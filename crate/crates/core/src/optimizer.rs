//! Multi-start search over analyzer angles.
//!
//! Both searches follow the same plan: evaluate the objective on a coarse
//! angle grid, keep the best well-separated grid points as seeds, polish each
//! seed with a Nelder-Mead simplex (restarted until it stops improving), and
//! reduce the local results in seed order. [`SearchPlan`] exposes the three
//! stages so callers can refine seeds concurrently; the reduction does not
//! depend on the order in which refinements finish.
//!
//! For the real-amplitude states the optimum is not isolated: a one-parameter
//! family of angle sets reaches the same CH value. Every plan therefore also
//! runs a second set of searches with `θ2'` pinned to 0°, and reports that
//! member of the family whenever it ties the unconstrained optimum.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::inequality::{check_efficiency, components_rad, ChComponents};
use crate::math::{circular_distance, cos, sin, to_degrees, to_radians, wrap};
use crate::model::EntangledState;
use crate::settings::SettingsQuad;
use crate::simplex::{self, SimplexOptions};
use crate::{Error, Result};

/// Below this the coincidence part of the CH sum counts as non-positive when
/// searching for thresholds.
const MIN_COINCIDENCE_SUM: f64 = 1e-12;
/// Angles this close (degrees) to the 180° seam are treated as 0° when
/// choosing a canonical representative.
const SEAM_TOLERANCE: f64 = 1e-6;

/// Tuning of the multi-start search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    /// Seed grid spacing per angle, degrees.
    pub grid_step_deg: f64,
    /// Number of grid seeds refined by the simplex search.
    pub refinements: usize,
    /// Seeds closer than this (degrees, max over the four angles) to an
    /// already chosen seed are skipped.
    pub seed_separation_deg: f64,
    /// Stop a local search once the simplex value spread drops below this.
    pub value_tolerance: f64,
    /// ... and the simplex has collapsed to this size (degrees).
    pub angle_tolerance_deg: f64,
    /// Evaluation budget per local search.
    pub max_evaluations: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            grid_step_deg: 5.0,
            refinements: 16,
            seed_separation_deg: 10.0,
            value_tolerance: 1e-10,
            angle_tolerance_deg: 1e-6,
            max_evaluations: 100_000,
        }
    }
}

impl OptimizerConfig {
    fn validate(&self) -> Result<()> {
        if !(self.grid_step_deg.is_finite() && self.grid_step_deg > 0.0 && self.grid_step_deg <= 90.0) {
            return Err(Error::domain("grid_step_deg", self.grid_step_deg, "a step in (0, 90] degrees"));
        }
        if self.refinements == 0 {
            return Err(Error::Invalid("at least one refinement is required"));
        }
        if !(self.value_tolerance > 0.0 && self.angle_tolerance_deg > 0.0) {
            return Err(Error::Invalid("tolerances must be positive"));
        }
        if self.max_evaluations < 10 {
            return Err(Error::Invalid("evaluation budget too small"));
        }
        Ok(())
    }
}

/// Outcome of [`optimize_angles`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizationReport {
    pub best_quad: SettingsQuad,
    pub best_value: f64,
    /// Number of local searches run.
    pub starts: usize,
    /// Every local search met its tolerance within the evaluation budget.
    pub converged: bool,
    /// Simplex iterations summed over all local searches.
    pub iterations: usize,
    /// Objective evaluations, grid included.
    pub evaluations: usize,
}

/// Critical efficiency of one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyCurvePoint {
    pub f: f64,
    /// Smallest symmetric efficiency at which some angles give CH > 0.
    pub eta_crit: f64,
    pub quad_at_crit: SettingsQuad,
}

#[derive(Debug, Clone, Copy)]
enum Objective {
    /// Maximize the efficiency-form CH sum.
    Violation {
        state: EntangledState,
        eta1: f64,
        eta2: f64,
    },
    /// Minimize `S_s / S_c` over angles with `S_c > 0`.
    Threshold { state: EntangledState },
}

impl Objective {
    fn state(&self) -> &EntangledState {
        match self {
            Objective::Violation { state, .. } | Objective::Threshold { state } => state,
        }
    }

    /// Quantity the simplex minimizes.
    #[inline]
    fn score(&self, c: &ChComponents) -> f64 {
        match *self {
            Objective::Violation { eta1, eta2, .. } => -c.with_efficiency(eta1, eta2),
            Objective::Threshold { .. } => {
                if c.coincidence_sum > MIN_COINCIDENCE_SUM {
                    c.singles_sum() / c.coincidence_sum
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    fn eval(&self, x: &[f64; 4]) -> f64 {
        self.score(&components_rad(self.state(), x[0], x[1], x[2], x[3]))
    }

    fn symmetric_efficiency(&self) -> bool {
        match *self {
            Objective::Violation { eta1, eta2, .. } => eta1 == eta2,
            Objective::Threshold { .. } => true,
        }
    }
}

/// One refined seed.
#[derive(Debug, Clone, Copy)]
pub struct LocalResult {
    pinned: bool,
    quad: SettingsQuad,
    score: f64,
    iterations: usize,
    evaluations: usize,
    converged: bool,
}

/// Starting point of one local search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Seed {
    /// `[θ1, θ1', θ2, θ2']` in radians.
    pub angles: [f64; 4],
    /// Search with `θ2'` held at 0.
    pub pinned: bool,
}

/// A prepared multi-start search: seeds are fixed at construction.
#[derive(Debug, Clone)]
pub struct SearchPlan {
    objective: Objective,
    config: OptimizerConfig,
    seeds: Vec<Seed>,
    grid_evaluations: usize,
}

impl SearchPlan {
    /// Search for the angles maximizing the efficiency-form CH sum.
    pub fn maximize_violation(
        state: &EntangledState,
        eta1: f64,
        eta2: f64,
        config: &OptimizerConfig,
    ) -> Result<Self> {
        check_efficiency("eta1", eta1)?;
        check_efficiency("eta2", eta2)?;
        if eta1 == 0.0 || eta2 == 0.0 {
            return Err(Error::Invalid("optimization needs efficiencies in (0, 1]"));
        }
        Self::new(
            Objective::Violation {
                state: *state,
                eta1,
                eta2,
            },
            config,
        )
    }

    /// Search for the angles minimizing the symmetric critical efficiency.
    pub fn minimize_threshold(state: &EntangledState, config: &OptimizerConfig) -> Result<Self> {
        Self::new(Objective::Threshold { state: *state }, config)
    }

    fn new(objective: Objective, config: &OptimizerConfig) -> Result<Self> {
        config.validate()?;
        let (free, free_evaluations) = grid_seeds(&objective, config, false);
        let (pinned, pinned_evaluations) = grid_seeds(&objective, config, true);
        let seeds = free
            .into_iter()
            .map(|angles| Seed { angles, pinned: false })
            .chain(pinned.into_iter().map(|angles| Seed { angles, pinned: true }))
            .collect();
        let grid_evaluations = free_evaluations + pinned_evaluations;
        Ok(SearchPlan {
            objective,
            config: *config,
            seeds,
            grid_evaluations,
        })
    }

    /// Unpinned seeds first, each group best first.
    pub fn seeds(&self) -> &[Seed] {
        &self.seeds
    }

    /// Polish one seed.
    pub fn refine(&self, seed: &Seed) -> LocalResult {
        let options = SimplexOptions {
            step: to_radians(self.config.grid_step_deg),
            value_tolerance: self.config.value_tolerance,
            point_tolerance: to_radians(self.config.angle_tolerance_deg),
            max_evaluations: self.config.max_evaluations,
        };
        let [a, ap, b, bp] = seed.angles;
        let polished = if seed.pinned {
            let p = polish(|x: &[f64; 3]| self.objective.eval(&[x[0], x[1], x[2], 0.0]), [a, ap, b], &options);
            Polished {
                point: [p.point[0], p.point[1], p.point[2], 0.0],
                iterations: p.iterations,
                evaluations: p.evaluations,
                converged: p.converged,
            }
        } else {
            polish(|x: &[f64; 4]| self.objective.eval(x), [a, ap, b, bp], &options)
        };

        let quad = quad_from_radians(&polished.point);
        LocalResult {
            pinned: seed.pinned,
            quad,
            score: self.objective.eval(&quad.radians()),
            iterations: polished.iterations,
            evaluations: polished.evaluations,
            converged: polished.converged,
        }
    }

    fn reduce(&self, results: &[LocalResult]) -> Result<(LocalResult, usize, usize, bool)> {
        let free = self.best_of(results.iter().filter(|r| !r.pinned));
        let pinned = self.best_of(results.iter().filter(|r| r.pinned));
        let best = match (free, pinned) {
            (Some(f), Some(p)) if p.score <= f.score + self.config.value_tolerance => p,
            (Some(f), _) => f,
            (None, Some(p)) => p,
            (None, None) => return Err(Error::Invalid("no local searches to reduce")),
        };
        let iterations = results.iter().map(|r| r.iterations).sum();
        let evaluations = self.grid_evaluations + results.iter().map(|r| r.evaluations).sum::<usize>();
        let converged = results.iter().all(|r| r.converged);
        Ok((best, iterations, evaluations, converged))
    }

    /// Lowest score; exact ties go to the smaller canonical quad.
    fn best_of<'a>(&self, results: impl Iterator<Item = &'a LocalResult>) -> Option<LocalResult> {
        let state = self.objective.state();
        let symmetric = self.objective.symmetric_efficiency();
        let mut best: Option<LocalResult> = None;
        for r in results {
            let better = match best {
                None => true,
                Some(b) => match r.score.total_cmp(&b.score) {
                    Ordering::Less => true,
                    Ordering::Greater => false,
                    Ordering::Equal => {
                        lexicographic(
                            &canonical_quad(&r.quad, state, symmetric),
                            &canonical_quad(&b.quad, state, symmetric),
                        ) == Ordering::Less
                    }
                },
            };
            if better {
                best = Some(*r);
            }
        }
        best
    }

    /// Combine refinements of a [`SearchPlan::maximize_violation`] plan.
    pub fn finish_violation(&self, results: &[LocalResult]) -> Result<OptimizationReport> {
        let (best, iterations, evaluations, converged) = self.reduce(results)?;
        Ok(OptimizationReport {
            best_quad: best.quad,
            best_value: -best.score,
            starts: results.len(),
            converged,
            iterations,
            evaluations,
        })
    }

    /// Combine refinements of a [`SearchPlan::minimize_threshold`] plan.
    pub fn finish_threshold(&self, results: &[LocalResult]) -> Result<EfficiencyCurvePoint> {
        let (best, ..) = self.reduce(results)?;
        let f = self.objective.state().f();
        // Above 1 no efficiency in (0, 1] violates; exactly 1 only ties the bound.
        if !(best.score.is_finite() && best.score < 1.0 - 1e-12) {
            return Err(Error::NoViolation { f });
        }
        Ok(EfficiencyCurvePoint {
            f,
            eta_crit: best.score,
            quad_at_crit: best.quad,
        })
    }

    fn run(&self) -> Vec<LocalResult> {
        self.seeds.iter().map(|s| self.refine(s)).collect()
    }
}

/// Maximize the CH sum at efficiencies `eta1`, `eta2` over all analyzer
/// angles with the default search settings.
pub fn optimize_angles(state: &EntangledState, eta1: f64, eta2: f64) -> Result<OptimizationReport> {
    optimize_angles_with(state, eta1, eta2, &OptimizerConfig::default())
}

pub fn optimize_angles_with(
    state: &EntangledState,
    eta1: f64,
    eta2: f64,
    config: &OptimizerConfig,
) -> Result<OptimizationReport> {
    let plan = SearchPlan::maximize_violation(state, eta1, eta2, config)?;
    plan.finish_violation(&plan.run())
}

/// Smallest symmetric detection efficiency for which some angles violate the
/// CH inequality: the minimum over angles of `(P1(θ1') + P2(θ2)) / S_c`.
pub fn critical_efficiency(state: &EntangledState) -> Result<EfficiencyCurvePoint> {
    critical_efficiency_with(state, &OptimizerConfig::default())
}

pub fn critical_efficiency_with(
    state: &EntangledState,
    config: &OptimizerConfig,
) -> Result<EfficiencyCurvePoint> {
    let plan = SearchPlan::minimize_threshold(state, config)?;
    plan.finish_threshold(&plan.run())
}

/// Critical efficiency of the noiseless, zero-phase state for each `f`, in
/// input order.
pub fn efficiency_curve(f_values: &[f64]) -> Result<Vec<EfficiencyCurvePoint>> {
    efficiency_curve_with(f_values, &OptimizerConfig::default())
}

pub fn efficiency_curve_with(f_values: &[f64], config: &OptimizerConfig) -> Result<Vec<EfficiencyCurvePoint>> {
    f_values
        .iter()
        .map(|&f| {
            curve_state(f)
                .and_then(|s| critical_efficiency_with(&s, config))
                .map_err(|e| Error::AtRatio {
                    f,
                    source: Box::new(e),
                })
        })
        .collect()
}

/// State used for one point of the efficiency curve; `f` must be in (0, 1].
pub fn curve_state(f: f64) -> Result<EntangledState> {
    if !(f.is_finite() && f > 0.0 && f <= 1.0) {
        return Err(Error::domain("f", f, "a ratio in (0, 1]"));
    }
    EntangledState::pure(f)
}

struct Polished<const N: usize> {
    point: [f64; N],
    iterations: usize,
    evaluations: usize,
    converged: bool,
}

/// Simplex search from `start`, restarted with a small fresh simplex until a
/// restart no longer improves; a collapsed simplex can stall short of the
/// optimum.
fn polish<const N: usize, F>(objective: F, start: [f64; N], options: &SimplexOptions) -> Polished<N>
where
    F: Fn(&[f64; N]) -> f64,
{
    let mut result = simplex::minimize(&objective, start, options);
    let (mut iterations, mut evaluations) = (result.iterations, result.evaluations);
    let mut restart = *options;
    restart.step = options.step / 10.0;
    while result.converged && evaluations < options.max_evaluations {
        restart.max_evaluations = options.max_evaluations - evaluations;
        let next = simplex::minimize(&objective, result.point, &restart);
        iterations += next.iterations;
        evaluations += next.evaluations;
        let improved = next.value < result.value - options.value_tolerance;
        if next.value <= result.value {
            result.point = next.point;
            result.value = next.value;
        }
        result.converged = next.converged;
        if !improved {
            break;
        }
    }
    Polished {
        point: result.point,
        iterations,
        evaluations,
        converged: result.converged,
    }
}

fn quad_from_radians(x: &[f64; 4]) -> SettingsQuad {
    let d = x.map(|r| wrap(to_degrees(r), 180.0));
    SettingsQuad {
        theta1: d[0],
        theta1_prime: d[1],
        theta2: d[2],
        theta2_prime: d[3],
    }
}

/// Evaluate the objective on the seed grid and pick the seeds.
///
/// Reflecting every angle (`θ -> -θ`) leaves the CH sum unchanged for every
/// state in the family, so `θ2'` only needs to cover `[0°, 90°]`; pinned
/// grids hold it at 0°.
fn grid_seeds(objective: &Objective, config: &OptimizerConfig, pinned: bool) -> (Vec<[f64; 4]>, usize) {
    let step = config.grid_step_deg;
    let n = libm::ceil(180.0 / step) as usize;
    let angles: Vec<f64> = (0..n).map(|i| i as f64 * step).filter(|&d| d < 180.0).collect();
    let n = angles.len();
    let half = if pinned {
        1
    } else {
        angles.iter().take_while(|&&d| d <= 90.0).count()
    };

    let state = objective.state();
    let trig: Vec<(f64, f64)> = angles.iter().map(|&d| (cos(to_radians(d)), sin(to_radians(d)))).collect();
    let mut pair = Vec::with_capacity(n * n);
    for &(ca, sa) in &trig {
        for &(cb, sb) in &trig {
            pair.push(state.v() * state.pure_coincidence_trig(ca, sa, cb, sb) + (1.0 - state.v()) / 4.0);
        }
    }
    let single: Vec<f64> = trig
        .iter()
        .map(|&(c, s)| state.v() * state.pure_single_trig(c, s) + (1.0 - state.v()) / 2.0)
        .collect();

    let mut scored: Vec<(f64, u32)> = Vec::with_capacity(n * n * n * half);
    let mut index = 0u32;
    for a in 0..n {
        for ap in 0..n {
            for b in 0..n {
                for bp in 0..half {
                    let c = ChComponents {
                        coincidence_sum: pair[a * n + b] - pair[a * n + bp] + pair[ap * n + b] + pair[ap * n + bp],
                        single1: single[ap],
                        single2: single[b],
                    };
                    scored.push((objective.score(&c), index));
                    index += 1;
                }
            }
        }
    }
    let evaluations = scored.len();
    scored.sort_unstable_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));

    let decode = |i: u32| -> [f64; 4] {
        let i = i as usize;
        let bp = i % half;
        let b = (i / half) % n;
        let ap = (i / (half * n)) % n;
        let a = i / (half * n * n);
        [angles[a], angles[ap], angles[b], angles[bp]]
    };

    let mut chosen: Vec<[f64; 4]> = Vec::with_capacity(config.refinements);
    for &(score, i) in &scored {
        if chosen.len() == config.refinements || !score.is_finite() {
            break;
        }
        let candidate = decode(i);
        let far = chosen.iter().all(|c| {
            c.iter()
                .zip(candidate.iter())
                .any(|(x, y)| circular_distance(*x, *y, 180.0) >= config.seed_separation_deg)
        });
        if far {
            chosen.push(candidate);
        }
    }
    if chosen.is_empty() {
        // Every grid point is infeasible; refine the origin so the caller
        // still gets a definite (failing) answer.
        chosen.push(decode(scored[0].1));
    }
    (chosen.into_iter().map(|d| d.map(to_radians)).collect(), evaluations)
}

/// Images of `quad` under the symmetries of the CH sum for `state`:
/// reflection of every angle, exchange of the two arms (only when both arms
/// have the same efficiency), and for `f = 1`, `φ = 0` a common rotation,
/// fixed here by rotating the first angle to 0°.
pub fn symmetry_images(quad: &SettingsQuad, state: &EntangledState, symmetric_efficiency: bool) -> Vec<SettingsQuad> {
    let [a, ap, b, bp] = quad.to_array();
    let mut raw: Vec<[f64; 4]> = alloc::vec![[a, ap, b, bp], [-a, -ap, -b, -bp]];
    if symmetric_efficiency {
        // (θ1, θ1', θ2, θ2') -> (θ2', θ2, θ1', θ1)
        raw.push([bp, b, ap, a]);
        raw.push([-bp, -b, -ap, -a]);
    }
    let rotation_invariant = state.f() == 1.0 && state.phi() == 0.0;
    raw.into_iter()
        .map(|q| {
            let shift = if rotation_invariant { q[0] } else { 0.0 };
            let d = q.map(|x| {
                let w = wrap(x - shift, 180.0);
                if 180.0 - w < SEAM_TOLERANCE {
                    0.0
                } else {
                    w
                }
            });
            SettingsQuad {
                theta1: d[0],
                theta1_prime: d[1],
                theta2: d[2],
                theta2_prime: d[3],
            }
        })
        .collect()
}

/// Lexicographically smallest symmetry image of `quad`.
pub fn canonical_quad(quad: &SettingsQuad, state: &EntangledState, symmetric_efficiency: bool) -> SettingsQuad {
    symmetry_images(quad, state, symmetric_efficiency)
        .into_iter()
        .min_by(lexicographic)
        .unwrap_or(*quad)
}

/// Largest per-angle distance (degrees) between `a` and the nearest symmetry
/// image of `b`.
pub fn quad_distance(a: &SettingsQuad, b: &SettingsQuad, state: &EntangledState, symmetric_efficiency: bool) -> f64 {
    let a_images = symmetry_images(a, state, symmetric_efficiency);
    let b_images = symmetry_images(b, state, symmetric_efficiency);
    let a0 = a_images[0].to_array();
    b_images
        .iter()
        .map(|q| {
            q.to_array()
                .iter()
                .zip(a0.iter())
                .map(|(x, y)| circular_distance(*x, *y, 180.0))
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

fn lexicographic(x: &SettingsQuad, y: &SettingsQuad) -> Ordering {
    for (a, b) in x.to_array().iter().zip(y.to_array().iter()) {
        if libm::fabs(a - b) > SEAM_TOLERANCE {
            return a.total_cmp(b);
        }
    }
    Ordering::Equal
}
