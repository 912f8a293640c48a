use resopack::evolution::{system_lifetime, GaussianPacket};
use resopack::oracle::{gauss_legendre, phi0, psi_free_quadrature, psi_quadrature, MomentumQuadrature, QuadratureConfig};
use resopack::poles::{sweep_poles, PoleSearchConfig};
use resopack::potential::{Layer, PotentialProfile};
use resopack::presets::{self, MASS_RATIO};

fn sb_packet() -> GaussianPacket {
    GaussianPacket::with_energy(-5.0, 0.5, 0.115, presets::single_barrier().units()).unwrap()
}

#[test]
fn parseval_for_the_cutoff_gaussian() {
    let p = sb_packet();
    let (gx, gw) = gauss_legendre(16);
    let (lo, hi, panels) = (p.k0 - 12.0 / p.sigma, p.k0 + 12.0 / p.sigma, 2000);
    let h = (hi - lo) / panels as f64;
    let mut norm = 0.0;
    for j in 0..panels {
        let mid = lo + (j as f64 + 0.5) * h;
        for (&x, &w) in gx.iter().zip(&gw) {
            norm += phi0(&p, mid + 0.5 * h * x).norm_sqr() * 0.5 * h * w;
        }
    }
    assert!((norm - 1.0).abs() <= 1e-8, "{norm}");
}

#[test]
fn flat_profile_reduces_to_the_free_packet() {
    let p = sb_packet();
    let flat = PotentialProfile::new(vec![Layer::new(8.0, 0.0)], MASS_RATIO).unwrap();
    let cfg = QuadratureConfig::default();
    for (x, t) in [(8.0, 1.0), (12.0, 5.0), (30.0, 20.0)] {
        let a = psi_quadrature(&p, &flat, x, t, &cfg).unwrap();
        let b = psi_free_quadrature(&p, x, t, &cfg).unwrap();
        let peak = (2.0 * std::f64::consts::PI).powf(-0.25) / p.sigma.sqrt();
        assert!((a - b).norm() <= 1e-14 * peak, "({x}, {t}) {a} {b}");
    }
}

#[test]
fn self_convergence_and_window() {
    let profile = presets::single_barrier();
    let cat = sweep_poles(&profile, &PoleSearchConfig::with_n_seed(200)).unwrap();
    let t = 5.0 * system_lifetime(&profile, &cat).unwrap();
    let x = 2.0 * profile.total_length();
    let p = sb_packet();
    let base = QuadratureConfig::default();
    let a = psi_quadrature(&p, &profile, x, t, &base).unwrap();
    let doubled = psi_quadrature(&p, &profile, x, t, &QuadratureConfig { base_nodes: 2 * base.base_nodes, ..base }).unwrap();
    let wide = psi_quadrature(&p, &profile, x, t, &QuadratureConfig { window_half_width: 16.0, ..base }).unwrap();
    assert!((a - doubled).norm() <= 1e-9 * a.norm());
    assert!((a - wide).norm() <= 1e-10 * a.norm());
}

#[test]
fn shared_rule_matches_single_point_rules() {
    let p = sb_packet();
    let profile = presets::double_barrier();
    let cfg = QuadratureConfig::default();
    let points = [(30.0, 10.0), (30.0, 40.0)];
    let rule = MomentumQuadrature::new(&p, Some(&profile), &cfg, &points).unwrap();
    assert!(rule.node_count() > 0);
    for &(x, t) in &points {
        let single = psi_quadrature(&p, &profile, x, t, &cfg).unwrap();
        assert!((rule.integrate(&p, x, t) - single).norm() <= 1e-10 * single.norm());
    }
}

#[test]
fn envelope_norm_is_the_transmission_probability() {
    let p = sb_packet();
    let flat = PotentialProfile::new(vec![Layer::new(1.0, 0.0)], MASS_RATIO).unwrap();
    let rule = MomentumQuadrature::new(&p, Some(&flat), &QuadratureConfig::default(), &[(1.0, 0.0)]).unwrap();
    assert!((rule.envelope_norm() - 1.0).abs() <= 1e-8);
    let barrier = presets::single_barrier();
    let rule = MomentumQuadrature::new(&p, Some(&barrier), &QuadratureConfig::default(), &[(8.0, 0.0)]).unwrap();
    let transmitted = rule.envelope_norm();
    assert!(transmitted > 0.0 && transmitted < 1.0);
}

#[test]
fn invalid_points_are_rejected() {
    let p = sb_packet();
    let profile = presets::single_barrier();
    let cfg = QuadratureConfig::default();
    assert!(psi_quadrature(&p, &profile, 4.0, 1.0, &cfg).is_err());
    assert!(psi_free_quadrature(&p, 0.0, -1.0, &cfg).is_err());
    assert!(psi_free_quadrature(&p, 0.0, 1.0, &QuadratureConfig { base_nodes: 8, ..cfg }).is_err());
}
