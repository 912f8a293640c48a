use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use resopack::evolution::{
    eta, free_packet, system_lifetime, transmitted_packet, zeta, EvolutionResult, GaussianPacket, Method,
    TransmittedPacket,
};
use resopack::oracle::{psi_free_quadrature, psi_many, QuadratureConfig};
use resopack::poles::{sweep_poles, PoleSearchConfig};
use resopack::presets;
use resopack::resonances::residues;
use resopack::Error;

fn sb_packet() -> GaussianPacket {
    GaussianPacket::with_energy(-5.0, 0.5, 0.115, presets::single_barrier().units()).unwrap()
}

#[test]
fn free_packet_norm_is_conserved() {
    let p = sb_packet();
    for t in [0.0, 10.0 * p.tau(), 100.0 * p.tau()] {
        let centre = p.x_c + p.velocity() * t;
        let spread = p.sigma * (1.0 + (t / p.tau()).powi(2)).sqrt();
        let (lo, hi, n) = (centre - 20.0 * spread, centre + 20.0 * spread, 40_000);
        let h = (hi - lo) / n as f64;
        let norm: f64 = (0..n).map(|j| free_packet(&p, lo + (j as f64 + 0.5) * h, t).norm_sqr() * h).sum();
        assert!((norm - 1.0).abs() <= 1e-8, "t = {t}: {norm}");
    }
}

#[test]
fn free_packet_matches_quadrature() {
    let p = sb_packet();
    let cfg = QuadratureConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let t: f64 = rng.gen_range(0.0..20.0 * p.tau());
        let spread = p.sigma * (1.0 + (t / p.tau()).powi(2)).sqrt();
        let x = p.x_c + p.velocity() * t + rng.gen_range(-2.0..2.0) * spread;
        let exact = free_packet(&p, x, t);
        let quad = psi_free_quadrature(&p, x, t, &cfg).unwrap();
        assert!((exact - quad).norm() <= 1e-9 * exact.norm(), "({x}, {t}): {exact} vs {quad}");
    }
}

#[test]
fn eta_maps_distance_to_energy() {
    let units = *presets::double_barrier().units();
    let (l, t0) = (15.0, 400.0);
    let k0 = units.wavenumber_of_energy(0.08).unwrap();
    let hm = units.hbar_over_mass();
    let x0 = hm * k0 * t0 + l;
    for k in [0.1, 0.2, 0.5] {
        let x = hm * k * t0 + l;
        let e = eta(x, x0, l) * units.energy_of_wavenumber(k0);
        assert!((e - units.energy_of_wavenumber(k)).abs() <= 1e-14);
    }
}

#[test]
fn single_barrier_transient_matches_quadrature() {
    let profile = presets::single_barrier();
    let cat = sweep_poles(&profile, &PoleSearchConfig::with_n_seed(1000)).unwrap();
    let res = residues(&profile, &cat).unwrap();
    let p = sb_packet();
    let tp = TransmittedPacket::new(&p, &profile, &cat, &res, cat.len()).unwrap();
    let tau_sys = system_lifetime(&profile, &cat).unwrap();
    let x = 2.0 * profile.total_length();
    let points: Vec<(f64, f64)> = (1..=40).map(|i| (x, 20.0 * tau_sys * i as f64 / 40.0)).collect();
    let oracle = psi_many(&p, Some(&profile), &points, &QuadratureConfig::default()).unwrap();
    let analytic = EvolutionResult::analytic(&tp, points.clone()).unwrap();
    let numeric = EvolutionResult::from_amplitudes(points, oracle, p.sigma, Method::Oracle);
    let peak = numeric.density.iter().cloned().fold(0.0, f64::max);
    for (a, o) in analytic.density.iter().zip(&numeric.density) {
        assert!((a - o).abs() <= 2e-2 * peak);
    }
    for (d, a) in analytic.density.iter().zip(&analytic.amplitude) {
        assert!((d - p.sigma * a.norm_sqr()).abs() <= 1e-14 * d.max(1e-300));
    }
}

#[test]
fn early_residual_is_proportional_to_the_free_tail() {
    let profile = presets::double_barrier();
    let cat = sweep_poles(&profile, &PoleSearchConfig::with_n_seed(1000)).unwrap();
    let res = residues(&profile, &cat).unwrap();
    let p = GaussianPacket::with_energy(-5.0, 0.5, cat.energies(&profile)[0].0, profile.units()).unwrap();
    let tp = TransmittedPacket::new(&p, &profile, &cat, &res, cat.len()).unwrap();
    for x in [16.0, 20.0] {
        let ratio = |t: f64| tp.psi(x, t).unwrap().norm() / free_packet(&p, x, t).norm();
        let (a, b) = (ratio(1e-4 * p.tau()), ratio(1e-3 * p.tau()));
        assert!(a.is_finite() && a > 0.0);
        assert!((a - b).abs() <= 1e-2 * a, "x = {x}: {a} vs {b}");
    }
}

#[test]
fn regime_and_domain_errors() {
    let profile = presets::single_barrier();
    let cat = sweep_poles(&profile, &PoleSearchConfig::with_n_seed(100)).unwrap();
    let res = residues(&profile, &cat).unwrap();
    let narrow = GaussianPacket::with_energy(-2.0, 0.5, 0.115, profile.units()).unwrap();
    assert!(matches!(
        TransmittedPacket::new(&narrow, &profile, &cat, &res, 100),
        Err(Error::UnreliableRegime(_))
    ));
    let p = sb_packet();
    assert!(matches!(
        transmitted_packet(&p, &profile, &cat, &res, 4.0, 1.0, 100),
        Err(Error::InvalidArgument(_))
    ));
    assert!(matches!(
        transmitted_packet(&p, &profile, &cat, &res, 20.0, 1.0, 101),
        Err(Error::TruncationTooLarge { .. })
    ));
    assert!(matches!(zeta(&p, &profile, &cat, &res, 1e6, 1e-3, 100), Err(Error::FreeDensityUnderflow(_))));
}

#[test]
fn truncation_ratio_falls_with_more_poles() {
    let profile = presets::single_barrier();
    let cat = sweep_poles(&profile, &PoleSearchConfig::with_n_seed(300)).unwrap();
    let res = residues(&profile, &cat).unwrap();
    let p = sb_packet();
    let ratio = |n: usize| {
        let v = TransmittedPacket::new(&p, &profile, &cat, &res, n).unwrap().evaluate(16.0, 3.0).unwrap();
        assert!(v.pairs_used <= n);
        v
    };
    let coarse = ratio(5);
    assert!(coarse.truncation_warning());
    let (mid, full) = (ratio(30), ratio(cat.len()));
    assert!(full.truncation_ratio < mid.truncation_ratio && mid.truncation_ratio < coarse.truncation_ratio);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn density_ratio_is_non_negative(x in 9.0f64..400.0, t in 0.5f64..300.0) {
        let profile = presets::single_barrier();
        let cat = sweep_poles(&profile, &PoleSearchConfig::with_n_seed(200)).unwrap();
        let res = residues(&profile, &cat).unwrap();
        match zeta(&sb_packet(), &profile, &cat, &res, x, t, cat.len()) {
            Ok(z) => prop_assert!(z >= 0.0),
            Err(e) => prop_assert!(matches!(e, Error::FreeDensityUnderflow(_))),
        }
    }

    #[test]
    fn free_packet_at_zero_time_is_the_gaussian(x in -12.0f64..2.0) {
        let p = sb_packet();
        let v = free_packet(&p, x, 0.0);
        let g = (2.0 * std::f64::consts::PI).powf(-0.25) / p.sigma.sqrt()
            * (-(x - p.x_c).powi(2) / (4.0 * p.sigma * p.sigma)).exp();
        prop_assert!((v - Complex64::from_polar(g, p.k0 * x)).norm() <= 1e-14 * (g + 1e-300) + 1e-300);
    }
}
