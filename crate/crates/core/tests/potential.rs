use num_complex::Complex64;
use proptest::prelude::*;
use resopack::potential::{Layer, PotentialProfile};
use resopack::presets::{self, MASS_RATIO};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn layers() -> impl Strategy<Value = Vec<Layer>> {
    prop::collection::vec((0.5f64..6.0, 0.0f64..0.4), 1..6)
        .prop_map(|v| v.into_iter().map(|(w, h)| Layer::new(w, h)).collect())
}

fn profile(layers: Vec<Layer>) -> PotentialProfile {
    PotentialProfile::new(layers, MASS_RATIO).unwrap()
}

#[test]
fn double_barrier_peaks_at_first_resonance() {
    let p = presets::double_barrier();
    let t = p.transmission_coefficient(0.080_054).unwrap();
    assert!(t >= 0.99, "T = {t}");
    assert!(p.transmission_coefficient(0.05).unwrap() < 1e-3);
}

#[test]
fn derivative_matches_finite_difference_at_catalog_scale() {
    let p = presets::quadruple_barrier();
    for &k in &[c(0.3, -0.01), c(1.7, -0.4), c(40.0, -0.5)] {
        let h = 1e-6 * k.norm();
        let fd = (p.t22(k + h).unwrap() - p.t22(k - h).unwrap()) / (2.0 * h);
        let an = p.t22_prime(k).unwrap();
        assert!((fd - an).norm() <= 1e-6 * an.norm(), "{k}: {fd} vs {an}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn determinant_is_one(ls in layers(), re in 0.05f64..8.0, im in -0.3f64..0.3) {
        let m = profile(ls).transfer_matrix(c(re, im)).unwrap();
        let scale = (m.t11 * m.t22).norm().max((m.t12 * m.t21).norm()).max(1.0);
        prop_assert!((m.determinant() - 1.0).norm() <= 1e-10 * scale);
    }

    #[test]
    fn flux_is_conserved(ls in layers(), e in 1e-3f64..2.0) {
        let p = profile(ls);
        let k = p.units().wavenumber_of_energy(e).unwrap();
        let m = p.transfer_matrix(c(k, 0.0)).unwrap();
        let t = 1.0 / m.t22.norm_sqr();
        let r = m.t21.norm_sqr() / m.t22.norm_sqr();
        prop_assert!((t + r - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn transmission_is_a_probability(ls in layers(), e in 1e-4f64..3.0) {
        let t = profile(ls).transmission_coefficient(e).unwrap();
        prop_assert!((0.0..=1.0).contains(&t));
    }

    #[test]
    fn time_reversal_symmetry(ls in layers(), re in 0.05f64..8.0, im in -0.5f64..0.5) {
        let p = profile(ls);
        let k = c(re, im);
        let a = p.t22(-k.conj()).unwrap();
        let b = p.t22(k).unwrap().conj();
        prop_assert!((a - b).norm() <= 1e-10 * b.norm().max(1.0));
    }

    #[test]
    fn splitting_a_layer_changes_nothing(ls in layers(), which in 0usize..6, frac in 0.1f64..0.9, re in 0.05f64..6.0, im in -0.3f64..0.0) {
        let idx = which % ls.len();
        let mut split = ls.clone();
        let l = split.remove(idx);
        split.insert(idx, Layer::new(l.width * (1.0 - frac), l.height));
        split.insert(idx, Layer::new(l.width * frac, l.height));
        let k = c(re, im);
        let a = profile(ls).t22(k).unwrap();
        let b = profile(split).t22(k).unwrap();
        prop_assert!((a - b).norm() <= 1e-10 * a.norm().max(1.0));
    }

    #[test]
    fn derivative_matches_finite_difference(ls in layers(), re in 0.1f64..6.0, im in -0.5f64..0.0) {
        let p = profile(ls);
        let k = c(re, im);
        let h = 1e-5;
        let fd = (p.t22(k + h).unwrap() - p.t22(k - h).unwrap()) / (2.0 * h);
        let an = p.t22_prime(k).unwrap();
        prop_assert!((fd - an).norm() <= 1e-6 * an.norm().max(1.0), "{} vs {}", fd, an);
    }
}
