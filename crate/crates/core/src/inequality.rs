//! The Clauser-Horne sum
//!
//! ```text
//! CH = N(θ1,θ2) - N(θ1,θ2') + N(θ1',θ2) + N(θ1',θ2') - N(θ1',∞) - N(∞,θ2)
//! ```
//!
//! in three guises: per-pair probabilities, measured counts with Poisson
//! errors, and with finite detector efficiency on each arm. Every local
//! realistic model keeps it at or below zero; [`lhv_maximum`] certifies that by
//! enumerating the deterministic strategies.

use core::fmt;

use crate::math::sqrt;
use crate::model::{coincidence_probability, EntangledState, Side};
use crate::settings::SettingsQuad;
use crate::{Error, Result};

/// The CH sum split into its coincidence and singles parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChComponents {
    /// `P(θ1,θ2) - P(θ1,θ2') + P(θ1',θ2) + P(θ1',θ2')`
    pub coincidence_sum: f64,
    /// `P1(θ1')`
    pub single1: f64,
    /// `P2(θ2)`
    pub single2: f64,
}

impl ChComponents {
    pub fn singles_sum(&self) -> f64 {
        self.single1 + self.single2
    }

    /// `η1 η2 S_c - η1 P1 - η2 P2`
    #[inline]
    pub fn with_efficiency(&self, eta1: f64, eta2: f64) -> f64 {
        eta1 * eta2 * self.coincidence_sum - eta1 * self.single1 - eta2 * self.single2
    }
}

/// The two parts of the CH sum for `state` at `quad`.
pub fn ch_components(state: &EntangledState, quad: &SettingsQuad) -> ChComponents {
    let [a, ap, b, bp] = quad.radians();
    components_rad(state, a, ap, b, bp)
}

#[inline]
pub(crate) fn components_rad(state: &EntangledState, a: f64, ap: f64, b: f64, bp: f64) -> ChComponents {
    ChComponents {
        coincidence_sum: state.coincidence_rad(a, b) - state.coincidence_rad(a, bp)
            + state.coincidence_rad(ap, b)
            + state.coincidence_rad(ap, bp),
        single1: state.single_rad(ap),
        single2: state.single_rad(b),
    }
}

/// The six per-pair probabilities of the CH sum in [`SettingsQuad::cells`]
/// order.
pub fn ch_terms(state: &EntangledState, quad: &SettingsQuad) -> [f64; 6] {
    quad.cells().map(|(a1, a2)| coincidence_probability(state, a1, a2))
}

/// CH sum per emitted pair with ideal detectors. Positive values violate
/// local realism.
pub fn ch_probability_sum(state: &EntangledState, quad: &SettingsQuad) -> f64 {
    let c = ch_components(state, quad);
    c.coincidence_sum - c.singles_sum()
}

/// CH sum with detector efficiencies: coincidence terms scale as `η1 η2`,
/// singles terms as the efficiency of their own arm.
pub fn ch_with_efficiency(
    state: &EntangledState,
    quad: &SettingsQuad,
    eta1: f64,
    eta2: f64,
) -> Result<f64> {
    check_efficiency("eta1", eta1)?;
    check_efficiency("eta2", eta2)?;
    Ok(ch_components(state, quad).with_efficiency(eta1, eta2))
}

/// `(∂/∂η1, ∂/∂η2)` of [`ch_with_efficiency`].
pub fn ch_efficiency_partials(
    state: &EntangledState,
    quad: &SettingsQuad,
    eta1: f64,
    eta2: f64,
) -> Result<(f64, f64)> {
    check_efficiency("eta1", eta1)?;
    check_efficiency("eta2", eta2)?;
    let c = ch_components(state, quad);
    Ok((
        eta2 * c.coincidence_sum - c.single1,
        eta1 * c.coincidence_sum - c.single2,
    ))
}

pub(crate) fn check_efficiency(what: &'static str, eta: f64) -> Result<()> {
    if eta.is_finite() && (0.0..=1.0).contains(&eta) {
        Ok(())
    } else {
        Err(Error::domain(what, eta, "an efficiency in [0, 1]"))
    }
}

/// The six coincidence counts of one CH run, accumulated in a common window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct CountsTable {
    pub n_ab: u64,
    pub n_ab_prime: u64,
    pub n_a_prime_b: u64,
    pub n_a_prime_b_prime: u64,
    pub n_a_prime_inf: u64,
    pub n_inf_b: u64,
}

impl CountsTable {
    /// Counts in [`SettingsQuad::cells`] order.
    pub fn from_array(n: [u64; 6]) -> Self {
        CountsTable {
            n_ab: n[0],
            n_ab_prime: n[1],
            n_a_prime_b: n[2],
            n_a_prime_b_prime: n[3],
            n_a_prime_inf: n[4],
            n_inf_b: n[5],
        }
    }

    pub fn to_array(self) -> [u64; 6] {
        [
            self.n_ab,
            self.n_ab_prime,
            self.n_a_prime_b,
            self.n_a_prime_b_prime,
            self.n_a_prime_inf,
            self.n_inf_b,
        ]
    }

    pub fn total(&self) -> u64 {
        self.to_array().iter().sum()
    }
}

/// A CH estimate with its standard deviation and significance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CHResult {
    pub value: f64,
    pub sigma: f64,
    /// `value / sigma`, or 0 when `sigma` is 0.
    pub z: f64,
}

impl CHResult {
    pub fn new(value: f64, sigma: f64) -> Self {
        let z = if sigma > 0.0 { value / sigma } else { 0.0 };
        CHResult { value, sigma, z }
    }

    /// Convert a count over `seconds` into a rate. The significance is
    /// unchanged.
    pub fn per_second(&self, seconds: f64) -> Result<Self> {
        if !(seconds.is_finite() && seconds > 0.0) {
            return Err(Error::domain("duration", seconds, "a positive number of seconds"));
        }
        Ok(CHResult {
            value: self.value / seconds,
            sigma: self.sigma / seconds,
            z: self.z,
        })
    }
}

impl fmt::Display for CHResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ± {} (z = {})", self.value, self.sigma, self.z)
    }
}

/// CH sum of measured counts, treating each count as an independent Poisson
/// variable: `sigma = sqrt(Σ n)`.
pub fn ch_from_counts(counts: &CountsTable) -> CHResult {
    let n = counts.to_array().map(|c| c as f64);
    let value = n[0] - n[1] + n[2] + n[3] - n[4] - n[5];
    let sigma = sqrt(n.iter().sum());
    CHResult::new(value, sigma)
}

/// Which CH functional a local strategy is scored against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LhvForm {
    /// Count form at unit efficiency; outcomes are pass or fail.
    Coincidence,
    /// Efficiency form; the hidden variable also decides detection.
    Efficiency,
}

impl LhvForm {
    fn alphabet(self) -> &'static [Outcome] {
        match self {
            LhvForm::Coincidence => &[Outcome::Pass, Outcome::Fail],
            LhvForm::Efficiency => &[Outcome::Pass, Outcome::Fail, Outcome::Undetected],
        }
    }

    /// Number of deterministic strategies (vertices of the local polytope).
    pub fn vertex_count(self) -> usize {
        self.alphabet().len().pow(4)
    }
}

/// Predetermined result of one photon at one analyzer setting.
///
/// In efficiency form `Pass` and `Fail` mean detected-pass and detected-fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Outcome {
    Pass,
    Fail,
    Undetected,
}

impl Outcome {
    /// Whether the detector behind the analyzer clicks.
    #[inline]
    pub fn clicks(self) -> bool {
        self == Outcome::Pass
    }

    pub fn label(self) -> char {
        match self {
            Outcome::Pass => 'P',
            Outcome::Fail => 'F',
            Outcome::Undetected => 'U',
        }
    }

    pub fn from_label(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'P' => Some(Outcome::Pass),
            'F' => Some(Outcome::Fail),
            'U' => Some(Outcome::Undetected),
            _ => None,
        }
    }
}

/// A deterministic local strategy: one outcome per arm per setting.
///
/// `arm1 = [θ1, θ1']`, `arm2 = [θ2, θ2']`. A removed polarizer always passes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LhvStrategy {
    form: LhvForm,
    arm1: [Outcome; 2],
    arm2: [Outcome; 2],
}

impl LhvStrategy {
    pub fn new(form: LhvForm, arm1: [Outcome; 2], arm2: [Outcome; 2]) -> Result<Self> {
        let alphabet = form.alphabet();
        if arm1.iter().chain(arm2.iter()).any(|o| !alphabet.contains(o)) {
            return Err(Error::Invalid(
                "coincidence-form strategies use only pass/fail outcomes",
            ));
        }
        Ok(LhvStrategy { form, arm1, arm2 })
    }

    /// Parse four labels `θ1 θ1' θ2 θ2'` from `{P, F, U}`. Strategies without
    /// `U` are coincidence form.
    pub fn parse(labels: &str) -> Result<Self> {
        let mut out = [Outcome::Pass; 4];
        let mut n = 0;
        for c in labels.chars() {
            if n == 4 {
                return Err(Error::Invalid("strategy needs exactly four labels"));
            }
            out[n] = Outcome::from_label(c).ok_or(Error::Invalid("strategy labels are P, F, U"))?;
            n += 1;
        }
        if n != 4 {
            return Err(Error::Invalid("strategy needs exactly four labels"));
        }
        let form = if out.contains(&Outcome::Undetected) {
            LhvForm::Efficiency
        } else {
            LhvForm::Coincidence
        };
        Self::new(form, [out[0], out[1]], [out[2], out[3]])
    }

    /// Strategy with index `code` in base-`|alphabet|` over
    /// `(θ1, θ1', θ2, θ2')`, most significant digit first.
    pub fn from_code(form: LhvForm, code: usize) -> Result<Self> {
        let alphabet = form.alphabet();
        let base = alphabet.len();
        if code >= form.vertex_count() {
            return Err(Error::Invalid("strategy code out of range"));
        }
        let digit = |k: u32| alphabet[(code / base.pow(3 - k)) % base];
        Ok(LhvStrategy {
            form,
            arm1: [digit(0), digit(1)],
            arm2: [digit(2), digit(3)],
        })
    }

    /// Position in the enumeration order; lower codes win ties.
    pub fn code(&self) -> usize {
        let alphabet = self.form.alphabet();
        let base = alphabet.len();
        [self.arm1[0], self.arm1[1], self.arm2[0], self.arm2[1]]
            .iter()
            .fold(0, |acc, o| {
                acc * base + alphabet.iter().position(|x| x == o).unwrap_or(0)
            })
    }

    /// All deterministic strategies of `form`, in code order.
    pub fn all(form: LhvForm) -> impl Iterator<Item = LhvStrategy> {
        (0..form.vertex_count()).filter_map(move |c| Self::from_code(form, c).ok())
    }

    pub fn form(&self) -> LhvForm {
        self.form
    }

    pub fn arm1(&self) -> [Outcome; 2] {
        self.arm1
    }

    pub fn arm2(&self) -> [Outcome; 2] {
        self.arm2
    }

    /// Whether the photon on `side` passes when that arm uses setting `index`
    /// (0 = unprimed, 1 = primed), or no polarizer when `None`.
    #[inline]
    pub fn passes(&self, side: Side, index: Option<usize>) -> bool {
        let arm = match side {
            Side::One => &self.arm1,
            Side::Two => &self.arm2,
        };
        match index {
            Some(i) => arm[i].clicks(),
            None => true,
        }
    }

    /// Value of the coincidence-form functional: the CH sum with every `N`
    /// replaced by a product of click indicators.
    pub fn coincidence_value(&self) -> f64 {
        let c = |o: Outcome| if o.clicks() { 1.0 } else { 0.0 };
        let (a, ap) = (c(self.arm1[0]), c(self.arm1[1]));
        let (b, bp) = (c(self.arm2[0]), c(self.arm2[1]));
        a * b - a * bp + ap * b + ap * bp - ap - b
    }

    /// Value of the efficiency-form functional when the strategy meets
    /// detectors of efficiency `eta1`, `eta2`.
    pub fn efficiency_value(&self, eta1: f64, eta2: f64) -> f64 {
        let c = |o: Outcome| if o.clicks() { 1.0 } else { 0.0 };
        let (a, ap) = (c(self.arm1[0]), c(self.arm1[1]));
        let (b, bp) = (c(self.arm2[0]), c(self.arm2[1]));
        eta1 * eta2 * (a * b - a * bp + ap * b + ap * bp) - eta1 * ap - eta2 * b
    }

    fn value(&self, eta1: f64, eta2: f64) -> f64 {
        match self.form {
            LhvForm::Coincidence => self.coincidence_value(),
            LhvForm::Efficiency => self.efficiency_value(eta1, eta2),
        }
    }
}

impl fmt::Display for LhvStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for o in self.arm1.iter().chain(self.arm2.iter()) {
            write!(f, "{}", o.label())?;
        }
        Ok(())
    }
}

/// Maximum of a CH functional over the local polytope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LhvMaximum {
    pub max_value: f64,
    /// Lowest-code strategy attaining the maximum.
    pub argmax: LhvStrategy,
}

/// Maximize the CH functional over every deterministic local strategy.
///
/// A linear functional attains its maximum over a polytope at a vertex, so
/// mixtures never do better. Efficiencies are ignored in coincidence form.
pub fn lhv_maximum(form: LhvForm, eta1: f64, eta2: f64) -> Result<LhvMaximum> {
    if form == LhvForm::Efficiency {
        check_efficiency("eta1", eta1)?;
        check_efficiency("eta2", eta2)?;
    }
    let mut best: Option<LhvMaximum> = None;
    for s in LhvStrategy::all(form) {
        let value = s.value(eta1, eta2);
        if best.is_none_or(|b| value > b.max_value) {
            best = Some(LhvMaximum {
                max_value: value,
                argmax: s,
            });
        }
    }
    best.ok_or(Error::Invalid("empty strategy set"))
}

/// Strategy setting index per arm for each CH cell in [`SettingsQuad::cells`]
/// order; `None` is a removed polarizer.
pub(crate) const CELL_SETTING_INDICES: [(Option<usize>, Option<usize>); 6] = [
    (Some(0), Some(0)),
    (Some(0), Some(1)),
    (Some(1), Some(0)),
    (Some(1), Some(1)),
    (Some(1), None),
    (None, Some(0)),
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_state;
    use std::string::ToString;
    use std::vec::Vec;

    fn reference_quad() -> SettingsQuad {
        SettingsQuad::new(72.24, 17.76, 45.0, 0.0).unwrap()
    }

    #[test]
    fn probability_sum_examples() {
        let s = make_state(0.4, 0.0, 1.0).unwrap();
        let ch = ch_probability_sum(&s, &reference_quad());
        assert!((ch - 0.1073).abs() < 5e-5, "{ch}");

        let product = make_state(0.0, 0.0, 1.0).unwrap();
        assert!(ch_probability_sum(&product, &reference_quad()) <= 0.0);

        let max = make_state(1.0, 0.0, 1.0).unwrap();
        let chsh = SettingsQuad::new(0.0, 45.0, 22.5, 67.5).unwrap();
        let v = ch_probability_sum(&max, &chsh);
        assert!((v - (core::f64::consts::SQRT_2 - 1.0) / 2.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn terms_match_components() {
        let s = make_state(0.4, 0.3, 0.9).unwrap();
        let q = reference_quad();
        let t = ch_terms(&s, &q);
        let direct = t[0] - t[1] + t[2] + t[3] - t[4] - t[5];
        assert!((direct - ch_probability_sum(&s, &q)).abs() < 1e-15);
    }

    #[test]
    fn counts_examples() {
        let r = ch_from_counts(&CountsTable::from_array([2028, 802, 4975, 7819, 7947, 5000]));
        assert_eq!(r.value, 1073.0);
        assert!((r.sigma - 28571f64.sqrt()).abs() < 1e-12);
        assert!((r.sigma - 169.03).abs() < 5e-3);
        assert!((r.z - 6.35).abs() < 5e-3);

        let empty = ch_from_counts(&CountsTable::default());
        assert_eq!((empty.value, empty.sigma, empty.z), (0.0, 0.0, 0.0));

        let one = ch_from_counts(&CountsTable::from_array([1, 0, 0, 0, 0, 0]));
        assert_eq!((one.value, one.sigma, one.z), (1.0, 1.0, 1.0));
    }

    #[test]
    fn per_second_keeps_significance() {
        let r = CHResult::new(5120.0, 1350.0).per_second(10.0).unwrap();
        assert_eq!((r.value, r.sigma), (512.0, 135.0));
        assert!((r.z - 5120.0 / 1350.0).abs() < 1e-15);
        assert!(r.per_second(0.0).is_err());
    }

    #[test]
    fn efficiency_examples() {
        let s = make_state(0.4, 0.0, 1.0).unwrap();
        let q = reference_quad();
        assert_eq!(ch_with_efficiency(&s, &q, 1.0, 1.0).unwrap(), ch_probability_sum(&s, &q));
        assert_eq!(ch_with_efficiency(&s, &q, 0.0, 0.0).unwrap(), 0.0);
        assert!(ch_with_efficiency(&s, &q, 1.1, 0.5).is_err());
        assert!(ch_with_efficiency(&s, &q, 0.5, -0.1).is_err());
        assert!(ch_with_efficiency(&s, &q, f64::NAN, 0.5).is_err());
    }

    #[test]
    fn lhv_coincidence_form() {
        let m = lhv_maximum(LhvForm::Coincidence, 1.0, 1.0).unwrap();
        assert_eq!(m.max_value, 0.0);
        assert_eq!(m.argmax.to_string(), "PPPP");
        assert_eq!(m.argmax.coincidence_value(), 0.0);
        // a = 1, a' = 0, b = 1, b' = 0
        let s = LhvStrategy::parse("PFPF").unwrap();
        assert_eq!(s.coincidence_value(), 0.0);
        assert_eq!(LhvStrategy::all(LhvForm::Coincidence).count(), 16);
    }

    #[test]
    fn lhv_efficiency_form() {
        assert_eq!(LhvStrategy::all(LhvForm::Efficiency).count(), 81);
        for i in 0..=10 {
            for j in 0..=10 {
                let (e1, e2) = (i as f64 / 10.0, j as f64 / 10.0);
                let m = lhv_maximum(LhvForm::Efficiency, e1, e2).unwrap();
                assert_eq!(m.max_value, 0.0, "eta = ({e1}, {e2})");
            }
        }
        let undetected = LhvStrategy::parse("UUUU").unwrap();
        assert_eq!(undetected.efficiency_value(0.7, 0.8), 0.0);
        assert!(lhv_maximum(LhvForm::Efficiency, 1.5, 0.5).is_err());
    }

    #[test]
    fn strategy_codes_round_trip() {
        for form in [LhvForm::Coincidence, LhvForm::Efficiency] {
            let codes: Vec<usize> = LhvStrategy::all(form).map(|s| s.code()).collect();
            assert_eq!(codes, (0..form.vertex_count()).collect::<Vec<_>>());
        }
        assert!(LhvStrategy::new(LhvForm::Coincidence, [Outcome::Undetected, Outcome::Pass], [Outcome::Pass; 2]).is_err());
        assert!(LhvStrategy::parse("PPP").is_err());
        assert!(LhvStrategy::parse("PPPPP").is_err());
        assert!(LhvStrategy::parse("PPXP").is_err());
        assert_eq!(LhvStrategy::parse("ppfu").unwrap().form(), LhvForm::Efficiency);
    }
}
