mod oracle;

use chbell_core::inequality::ch_efficiency_partials;
use chbell_core::{
    ch_from_counts, ch_probability_sum, ch_with_efficiency, lhv_maximum, make_state, CountsTable, LhvForm,
    SettingsQuad,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_quad(rng: &mut impl Rng) -> SettingsQuad {
    SettingsQuad::new(
        rng.random_range(0.0..180.0),
        rng.random_range(0.0..180.0),
        rng.random_range(0.0..180.0),
        rng.random_range(0.0..180.0),
    )
    .unwrap()
}

#[test]
fn reference_quad_value_matches_oracle() {
    let s = make_state(0.4, 0.0, 1.0).unwrap();
    let q = SettingsQuad::new(72.24, 17.76, 45.0, 0.0).unwrap();
    let expected = oracle::ch(0.4, 0.0, 1.0, [72.24, 17.76, 45.0, 0.0]);
    assert!((expected - 0.1073).abs() < 5e-5);
    assert!((ch_probability_sum(&s, &q) - expected).abs() < 1e-12);
}

#[test]
fn maximal_state_grid_maximum() {
    // P(a, b) = cos²(a - b) / 2 for the noiseless f = 1 state; a 1.5° grid
    // with the rotation fixed by θ2' = 0 contains the 22.5° lattice.
    let p = |a: f64, b: f64| (a - b).to_radians().cos().powi(2) / 2.0;
    let mut best = f64::MIN;
    for a in 0..120 {
        for ap in 0..120 {
            for b in 0..120 {
                let (a, ap, b) = (a as f64 * 1.5, ap as f64 * 1.5, b as f64 * 1.5);
                let v = p(a, b) - p(a, 0.0) + p(ap, b) + p(ap, 0.0) - 1.0;
                best = best.max(v);
            }
        }
    }
    let analytic = (2f64.sqrt() - 1.0) / 2.0;
    assert!((best - analytic).abs() < 1e-12, "{best}");
    let s = make_state(1.0, 0.0, 1.0).unwrap();
    let q = SettingsQuad::new(0.0, 45.0, 22.5, 67.5).unwrap();
    assert!((ch_probability_sum(&s, &q) - analytic).abs() < 1e-12);
}

#[test]
fn separable_states_never_violate() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let product = make_state(0.0, 0.0, 1.0).unwrap();
    for _ in 0..1000 {
        let q = random_quad(&mut rng);
        let f = rng.random_range(0.0..4.0);
        let phi = rng.random_range(0.0..std::f64::consts::TAU);
        let mixed = make_state(f, phi, 0.0).unwrap();
        assert!(ch_probability_sum(&product, &q) <= 1e-12);
        assert!(ch_probability_sum(&mixed, &q) <= 1e-12);
    }
}

#[test]
fn lhv_bound_on_efficiency_grid() {
    assert_eq!(lhv_maximum(LhvForm::Coincidence, 1.0, 1.0).unwrap().max_value, 0.0);
    for i in 0..=10 {
        for j in 0..=10 {
            let m = lhv_maximum(LhvForm::Efficiency, i as f64 / 10.0, j as f64 / 10.0).unwrap();
            assert_eq!(m.max_value, 0.0);
        }
    }
}

#[test]
fn efficiency_threshold_of_maximal_state() {
    let s = make_state(1.0, 0.0, 1.0).unwrap();
    let q = SettingsQuad::new(0.0, 45.0, 22.5, 67.5).unwrap();
    let eta = 2.0 / (1.0 + 2f64.sqrt());
    assert!(ch_with_efficiency(&s, &q, eta, eta).unwrap().abs() < 1e-12);
}

proptest! {
    #[test]
    fn counts_are_linear(n in proptest::array::uniform6(0u64..1_000_000), k in 1u64..50) {
        let base = ch_from_counts(&CountsTable::from_array(n));
        let scaled = ch_from_counts(&CountsTable::from_array(n.map(|x| x * k)));
        prop_assert_eq!(scaled.value, base.value * k as f64);
        prop_assert!((scaled.sigma - base.sigma * (k as f64).sqrt()).abs() <= 1e-9 * scaled.sigma.max(1.0));
        if base.sigma > 0.0 {
            prop_assert!((base.z - base.value / base.sigma).abs() < 1e-12);
        }
    }

    #[test]
    fn unit_efficiency_reduces(f in 0.0..3.0f64, v in 0.0..=1.0f64, q in proptest::array::uniform4(0.0..180.0f64)) {
        let s = make_state(f, 0.0, v).unwrap();
        let quad = SettingsQuad::from_array(q).unwrap();
        let a = ch_with_efficiency(&s, &quad, 1.0, 1.0).unwrap();
        prop_assert!((a - ch_probability_sum(&s, &quad)).abs() < 1e-12);
    }

    #[test]
    fn efficiency_partials_match_finite_differences(
        f in 0.0..3.0f64,
        q in proptest::array::uniform4(0.0..180.0f64),
        e1 in 0.01..0.99f64,
        e2 in 0.01..0.99f64,
    ) {
        let s = make_state(f, 0.0, 1.0).unwrap();
        let quad = SettingsQuad::from_array(q).unwrap();
        let h = 1e-6;
        let g = |a: f64, b: f64| ch_with_efficiency(&s, &quad, a, b).unwrap();
        let fd1 = (g(e1 + h, e2) - g(e1 - h, e2)) / (2.0 * h);
        let fd2 = (g(e1, e2 + h) - g(e1, e2 - h)) / (2.0 * h);
        let (d1, d2) = ch_efficiency_partials(&s, &quad, e1, e2).unwrap();
        prop_assert!((fd1 - d1).abs() < 1e-6);
        prop_assert!((fd2 - d2).abs() < 1e-6);
    }
}
