//! Seeded pair-by-pair simulation of the counting experiment.
//!
//! Each analyzer configuration ("cell") is an independent run: the number of
//! emitted pairs is Poisson, every pair gets a pass/fail outcome on each arm
//! (from the quantum model or from a local strategy), and each passing photon
//! is detected with its arm's efficiency. Pairs are tracked individually, so
//! the coincidence window only enters through dark-count accidentals.
//!
//! Pairs are processed in fixed-size batches with their own random streams
//! (see [`crate::seed`]). [`CellPlan`] exposes the batches so they can run on
//! any number of threads with bit-identical totals.

mod visibility;

pub use visibility::{visibility_scan, FringeMode, Visibility, DEFAULT_BOOTSTRAP_REPLICATES};

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::inequality::{ch_from_counts, CHResult, CountsTable, LhvForm, LhvStrategy, CELL_SETTING_INDICES};
use crate::model::{passage_distribution, single_probability, EntangledState, JointOutcome, Side};
use crate::seed::{domain, stream};
use crate::settings::{AnalyzerSetting, SettingsQuad};
use crate::{Error, Result};

/// Pairs simulated per random stream.
pub const BATCH_PAIRS: u64 = 1 << 16;

/// Detector and source parameters of a counting run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionModel {
    pub eta1: f64,
    pub eta2: f64,
    /// Emitted pairs per second.
    pub pair_rate: f64,
    /// Accumulation time per cell, seconds.
    pub duration: f64,
    pub dark_rate1: f64,
    pub dark_rate2: f64,
    /// Coincidence window τ in seconds; accidentals use `2τ`.
    pub coincidence_window: f64,
}

impl Default for DetectionModel {
    fn default() -> Self {
        DetectionModel {
            eta1: 1.0,
            eta2: 1.0,
            pair_rate: 0.0,
            duration: 0.0,
            dark_rate1: 0.0,
            dark_rate2: 0.0,
            coincidence_window: 1e-9,
        }
    }
}

impl DetectionModel {
    /// Perfect detectors, no dark counts.
    pub fn ideal(pair_rate: f64, duration: f64) -> Self {
        DetectionModel {
            pair_rate,
            duration,
            ..Default::default()
        }
    }

    pub fn with_efficiencies(mut self, eta1: f64, eta2: f64) -> Self {
        self.eta1 = eta1;
        self.eta2 = eta2;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (what, eta) in [("eta1", self.eta1), ("eta2", self.eta2)] {
            if !(eta.is_finite() && (0.0..=1.0).contains(&eta)) {
                return Err(Error::domain(what, eta, "an efficiency in [0, 1]"));
            }
        }
        for (what, x) in [
            ("pair_rate", self.pair_rate),
            ("duration", self.duration),
            ("dark_rate1", self.dark_rate1),
            ("dark_rate2", self.dark_rate2),
        ] {
            if !(x.is_finite() && x >= 0.0) {
                return Err(Error::domain(what, x, "a finite value >= 0"));
            }
        }
        if !(self.coincidence_window.is_finite() && self.coincidence_window > 0.0) {
            return Err(Error::domain(
                "coincidence_window",
                self.coincidence_window,
                "a positive number of seconds",
            ));
        }
        Ok(())
    }

    /// Expected number of emitted pairs per cell.
    pub fn expected_pairs(&self) -> f64 {
        self.pair_rate * self.duration
    }

    fn has_dark_counts(&self) -> bool {
        self.dark_rate1 > 0.0 || self.dark_rate2 > 0.0
    }
}

/// Result of simulating one analyzer configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunRecord {
    pub settings: (AnalyzerSetting, AnalyzerSetting),
    /// Coincidences counted, accidentals included.
    pub counts: u64,
    pub pairs_emitted: u64,
    /// Dark-count accidentals included in `counts`.
    pub accidentals: u64,
    pub seed: u64,
}

/// Convex combination of deterministic local strategies.
#[derive(Debug, Clone, PartialEq)]
pub struct LhvMixture {
    components: Vec<(f64, LhvStrategy)>,
    cumulative: Vec<f64>,
}

impl LhvMixture {
    pub fn new(components: Vec<(f64, LhvStrategy)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Invalid("mixture has no strategies"));
        }
        let mut total = 0.0;
        let mut cumulative = Vec::with_capacity(components.len());
        for &(w, _) in &components {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::domain("mixture weight", w, "a finite weight >= 0"));
            }
            total += w;
            cumulative.push(total);
        }
        if libm::fabs(total - 1.0) > 1e-9 {
            return Err(Error::domain("mixture weight sum", total, "1 within 1e-9"));
        }
        Ok(LhvMixture {
            components,
            cumulative,
        })
    }

    /// Equal weight on every deterministic strategy of `form`.
    pub fn uniform(form: LhvForm) -> Self {
        let n = form.vertex_count() as f64;
        let components = LhvStrategy::all(form).map(|s| (1.0 / n, s)).collect();
        // weights sum to 1 up to round-off far below the tolerance
        Self::new(components).expect("uniform mixture is valid")
    }

    pub fn point(strategy: LhvStrategy) -> Self {
        Self::new(alloc::vec![(1.0, strategy)]).expect("point mass is valid")
    }

    pub fn components(&self) -> &[(f64, LhvStrategy)] {
        &self.components
    }

    /// Expected count-form CH per emitted pair with ideal detectors. Never
    /// positive.
    pub fn expected_ch_per_pair(&self) -> f64 {
        self.components
            .iter()
            .map(|(w, s)| w * s.coincidence_value())
            .sum()
    }

    fn pass_probability(&self, side: Side, index: Option<usize>) -> f64 {
        self.components
            .iter()
            .filter(|(_, s)| s.passes(side, index))
            .map(|(w, _)| w)
            .sum()
    }

    fn sample(&self, u: f64) -> &LhvStrategy {
        let total = *self.cumulative.last().unwrap_or(&1.0);
        let target = u * total;
        let i = self.cumulative.partition_point(|&c| c <= target);
        &self.components[i.min(self.components.len() - 1)].1
    }
}

/// What produces the per-pair pass/fail outcomes.
#[derive(Debug, Clone, Copy)]
enum PairSource<'a> {
    Quantum(JointOutcome),
    Local {
        mixture: &'a LhvMixture,
        index1: Option<usize>,
        index2: Option<usize>,
    },
}

impl PairSource<'_> {
    #[inline]
    fn draw<R: Rng>(&self, rng: &mut R) -> (bool, bool) {
        let u: f64 = rng.random();
        match *self {
            PairSource::Quantum(joint) => joint.sample(u),
            PairSource::Local {
                mixture,
                index1,
                index2,
            } => {
                let s = mixture.sample(u);
                (s.passes(Side::One, index1), s.passes(Side::Two, index2))
            }
        }
    }
}

/// A single cell prepared for simulation. The pair count is drawn up front;
/// batches can then run in any order or concurrently.
#[derive(Debug, Clone)]
pub struct CellPlan<'a> {
    source: PairSource<'a>,
    settings: (AnalyzerSetting, AnalyzerSetting),
    model: DetectionModel,
    seed: u64,
    pairs_emitted: u64,
    /// Expected detector singles rates, for accidentals.
    singles_rates: (f64, f64),
}

impl<'a> CellPlan<'a> {
    /// Plan a cell with the quantum source.
    pub fn quantum(
        state: &EntangledState,
        a1: AnalyzerSetting,
        a2: AnalyzerSetting,
        model: &DetectionModel,
        seed: u64,
    ) -> Result<Self> {
        model.validate()?;
        let joint = passage_distribution(state, a1, a2)?;
        let p1 = single_probability(state, a1, Side::One);
        let p2 = single_probability(state, a2, Side::Two);
        Ok(Self::build(PairSource::Quantum(joint), (a1, a2), (p1, p2), model, seed))
    }

    /// Plan a cell with a local source. `index1`/`index2` pick the strategy's
    /// setting on each arm (0 unprimed, 1 primed, `None` no polarizer).
    pub fn local(
        mixture: &'a LhvMixture,
        settings: (AnalyzerSetting, AnalyzerSetting),
        index1: Option<usize>,
        index2: Option<usize>,
        model: &DetectionModel,
        seed: u64,
    ) -> Result<Self> {
        model.validate()?;
        if index1.is_some_and(|i| i > 1) || index2.is_some_and(|i| i > 1) {
            return Err(Error::Invalid("strategy setting index must be 0 or 1"));
        }
        let p1 = mixture.pass_probability(Side::One, index1);
        let p2 = mixture.pass_probability(Side::Two, index2);
        let source = PairSource::Local {
            mixture,
            index1,
            index2,
        };
        Ok(Self::build(source, settings, (p1, p2), model, seed))
    }

    fn build(
        source: PairSource<'a>,
        settings: (AnalyzerSetting, AnalyzerSetting),
        pass: (f64, f64),
        model: &DetectionModel,
        seed: u64,
    ) -> Self {
        let pairs_emitted = sample_poisson(&mut stream(seed, &[domain::PAIRS]), model.expected_pairs());
        let singles_rates = (
            model.pair_rate * model.eta1 * pass.0 + model.dark_rate1,
            model.pair_rate * model.eta2 * pass.1 + model.dark_rate2,
        );
        CellPlan {
            source,
            settings,
            model: *model,
            seed,
            pairs_emitted,
            singles_rates,
        }
    }

    pub fn pairs_emitted(&self) -> u64 {
        self.pairs_emitted
    }

    pub fn batch_count(&self) -> u64 {
        self.pairs_emitted.div_ceil(BATCH_PAIRS)
    }

    /// Coincidences from the pairs of batch `index`.
    pub fn run_batch(&self, index: u64) -> u64 {
        let start = index * BATCH_PAIRS;
        let n = self.pairs_emitted.saturating_sub(start).min(BATCH_PAIRS);
        let mut rng = stream(self.seed, &[domain::BATCH, index]);
        let (eta1, eta2) = (self.model.eta1, self.model.eta2);
        let mut coincidences = 0;
        for _ in 0..n {
            let (pass1, pass2) = self.source.draw(&mut rng);
            // detection draws are made only for photons that reach a detector
            let click1 = pass1 && rng.random::<f64>() < eta1;
            let click2 = pass2 && rng.random::<f64>() < eta2;
            coincidences += u64::from(click1 && click2);
        }
        coincidences
    }

    /// Accidental coincidences from dark counts: Poisson with mean
    /// `R1 R2 2τ T`, where `R1`, `R2` are expected detector singles rates.
    pub fn accidentals(&self) -> u64 {
        if !self.model.has_dark_counts() {
            return 0;
        }
        let mean = self.singles_rates.0
            * self.singles_rates.1
            * 2.0
            * self.model.coincidence_window
            * self.model.duration;
        sample_poisson(&mut stream(self.seed, &[domain::DARK]), mean)
    }

    /// Assemble the record from per-batch coincidences (any order).
    pub fn finish(&self, batch_coincidences: impl IntoIterator<Item = u64>) -> RunRecord {
        let accidentals = self.accidentals();
        RunRecord {
            settings: self.settings,
            counts: batch_coincidences.into_iter().sum::<u64>() + accidentals,
            pairs_emitted: self.pairs_emitted,
            accidentals,
            seed: self.seed,
        }
    }

    pub fn run(&self) -> RunRecord {
        self.finish((0..self.batch_count()).map(|b| self.run_batch(b)))
    }
}

pub(crate) fn sample_poisson<R: Rng>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    match Poisson::new(mean) {
        Ok(d) => {
            let x: f64 = d.sample(rng);
            x as u64
        }
        Err(_) => 0,
    }
}

/// Simulate one analyzer configuration with the quantum source.
pub fn simulate_cell(
    state: &EntangledState,
    a1: AnalyzerSetting,
    a2: AnalyzerSetting,
    model: &DetectionModel,
    seed: u64,
) -> Result<RunRecord> {
    Ok(CellPlan::quantum(state, a1, a2, model, seed)?.run())
}

/// Counts and CH estimate of a simulated six-cell run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChExperiment {
    pub counts: CountsTable,
    pub result: CHResult,
    pub records: [RunRecord; 6],
}

impl ChExperiment {
    fn from_records(records: [RunRecord; 6]) -> Self {
        let counts = CountsTable::from_array(records.map(|r| r.counts));
        ChExperiment {
            counts,
            result: ch_from_counts(&counts),
            records,
        }
    }
}

/// Seed of cell `index` of a CH run with master seed `seed`.
pub fn cell_seed(seed: u64, index: usize) -> u64 {
    crate::seed::derive_seed(seed, &[domain::CELL, index as u64])
}

/// Plans for the six cells of a quantum CH run, in [`SettingsQuad::cells`]
/// order.
pub fn quantum_experiment_plans(
    state: &EntangledState,
    quad: &SettingsQuad,
    model: &DetectionModel,
    seed: u64,
) -> Result<Vec<CellPlan<'static>>> {
    quad.cells()
        .iter()
        .enumerate()
        .map(|(k, &(a1, a2))| CellPlan::quantum(state, a1, a2, model, cell_seed(seed, k)))
        .collect()
}

/// Plans for the six cells of a local-source CH run.
pub fn lhv_experiment_plans<'a>(
    mixture: &'a LhvMixture,
    quad: &SettingsQuad,
    model: &DetectionModel,
    seed: u64,
) -> Result<Vec<CellPlan<'a>>> {
    quad.cells()
        .iter()
        .zip(CELL_SETTING_INDICES.iter())
        .enumerate()
        .map(|(k, (&settings, &(i1, i2)))| {
            CellPlan::local(mixture, settings, i1, i2, model, cell_seed(seed, k))
        })
        .collect()
}

/// Assemble a CH run from the records of its six cells.
pub fn experiment_from_records(records: &[RunRecord]) -> Result<ChExperiment> {
    let records: [RunRecord; 6] = records
        .try_into()
        .map_err(|_| Error::Invalid("a CH run has exactly six cells"))?;
    Ok(ChExperiment::from_records(records))
}

/// Simulate the six cells of the CH sum with the quantum source.
pub fn simulate_ch_experiment(
    state: &EntangledState,
    quad: &SettingsQuad,
    model: &DetectionModel,
    seed: u64,
) -> Result<ChExperiment> {
    let records: Vec<RunRecord> = quantum_experiment_plans(state, quad, model, seed)?
        .iter()
        .map(CellPlan::run)
        .collect();
    experiment_from_records(&records)
}

/// Simulate the six cells of the CH sum with a local hidden-variable source:
/// each pair draws a strategy from `mixture` and follows it.
pub fn simulate_lhv_source(
    mixture: &LhvMixture,
    quad: &SettingsQuad,
    model: &DetectionModel,
    seed: u64,
) -> Result<ChExperiment> {
    let records: Vec<RunRecord> = lhv_experiment_plans(mixture, quad, model, seed)?
        .iter()
        .map(CellPlan::run)
        .collect();
    experiment_from_records(&records)
}
