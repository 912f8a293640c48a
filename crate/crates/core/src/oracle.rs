//! Brute-force momentum quadrature of the transmitted and free packets.
//!
//! `psi(x, t) = (2 pi)^{-1/2} int phi0(k) t(k) e^{i k x - i hbar k^2 t / 2m} dk`
//! is integrated with composite 16-point Gauss-Legendre panels over
//! `k0 +- W / sigma`. The panels are first refined until `phi0 t` is resolved
//! (sharp resonances included) and then split further so that the phase never
//! advances by more than `16 pi / phase_oversampling` across a panel.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evolution::GaussianPacket;
use crate::potential::PotentialProfile;
use crate::specfun::faddeeva_ln;

const PANEL_ORDER: usize = 16;
const REFINE_TOL: f64 = 1e-14;
const MAX_REFINE_DEPTH: usize = 40;

/// Quadrature controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Half width of the k window in units of `1/sigma`.
    pub window_half_width: f64,
    /// Nodes of the initial uniform panel set.
    pub base_nodes: usize,
    /// Nodes per `pi` of phase.
    pub phase_oversampling: f64,
    pub node_budget: u64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            window_half_width: 12.0,
            base_nodes: 1 << 14,
            phase_oversampling: 4.0,
            node_budget: 100_000_000,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.window_half_width >= 8.0) {
            return Err(Error::InvalidArgument("window_half_width must be >= 8".into()));
        }
        if self.base_nodes < 1 << 10 {
            return Err(Error::InvalidArgument("base_nodes must be >= 1024".into()));
        }
        if !(self.phase_oversampling > 0.0) {
            return Err(Error::InvalidArgument("phase_oversampling must be positive".into()));
        }
        Ok(())
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Exact transform of the cutoff Gaussian, `A0 w(iz)`.
pub fn phi0(packet: &GaussianPacket, k: f64) -> Complex64 {
    ln_phi0(packet, k).exp()
}

fn ln_phi0(packet: &GaussianPacket, k: f64) -> Complex64 {
    let s = packet.sigma;
    let z0 = packet.x_c / (2f64.sqrt() * s);
    let z = Complex64::new(packet.x_c / (2.0 * s), -(k - packet.k0) * s);
    let ln_a0 = Complex64::new(-0.25 * (2.0 * PI).ln() + 0.5 * s.ln(), 0.0)
        - 0.5 * faddeeva_ln(Complex64::new(0.0, z0));
    ln_a0 + faddeeva_ln(Complex64::i() * z)
}

/// The large-cutoff approximation `A0 2 e^{z^2}` of [`phi0`].
pub fn phi0_approx(packet: &GaussianPacket, k: f64) -> Complex64 {
    let s = packet.sigma;
    let z0 = packet.x_c / (2f64.sqrt() * s);
    let z = Complex64::new(packet.x_c / (2.0 * s), -(k - packet.k0) * s);
    let ln_a0 = Complex64::new(-0.25 * (2.0 * PI).ln() + 0.5 * s.ln(), 0.0)
        - 0.5 * faddeeva_ln(Complex64::new(0.0, z0));
    (ln_a0 + Complex64::new(2f64.ln(), 0.0) + z * z).exp()
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
}

/// Nodes, weights and `phi0(k) t(k) / sqrt(2 pi)` on a panel set.
#[derive(Debug, Clone)]
pub struct MomentumQuadrature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    envelope: Vec<Complex64>,
}

impl MomentumQuadrature {
    /// Prepares a rule that resolves every `(x, t)` in `queries`.
    pub fn new(
        packet: &GaussianPacket,
        profile: Option<&PotentialProfile>,
        config: &QuadratureConfig,
        queries: &[(f64, f64)],
    ) -> Result<Self> {
        config.validate()?;
        let (gx, gw) = gauss_legendre(PANEL_ORDER);
        let amplitude = |k: f64| -> Complex64 {
            let t = profile.map_or(Complex64::new(1.0, 0.0), |p| p.transmission_amplitude_real(k));
            phi0(packet, k) * t / (2.0 * PI).sqrt()
        };
        let panel_sum = |p: Panel| -> (Complex64, f64) {
            let (mid, half) = (0.5 * (p.a + p.b), 0.5 * (p.b - p.a));
            gx.iter().zip(&gw).fold((Complex64::new(0.0, 0.0), 0.0), |(s, m), (&x, &w)| {
                let v = amplitude(mid + half * x) * (w * half);
                (s + v, m + v.norm())
            })
        };

        let half_window = config.window_half_width / packet.sigma;
        let (lo, hi) = (packet.k0 - half_window, packet.k0 + half_window);
        let base = (config.base_nodes / PANEL_ORDER).max(1);
        let width = (hi - lo) / base as f64;
        let mut stack: Vec<(Panel, usize)> = (0..base)
            .rev()
            .map(|i| (Panel { a: lo + i as f64 * width, b: lo + (i + 1) as f64 * width }, 0))
            .collect();
        let total: f64 = stack.iter().map(|(p, _)| panel_sum(*p).1).sum();
        let mut panels = Vec::with_capacity(base);
        while let Some((p, depth)) = stack.pop() {
            let whole = panel_sum(p).0;
            let m = 0.5 * (p.a + p.b);
            let (left, right) = (Panel { a: p.a, b: m }, Panel { a: m, b: p.b });
            let split = panel_sum(left).0 + panel_sum(right).0;
            if (whole - split).norm() <= REFINE_TOL * total || depth >= MAX_REFINE_DEPTH {
                panels.push(p);
            } else {
                stack.push((right, depth + 1));
                stack.push((left, depth + 1));
            }
        }

        let mut counts = Vec::with_capacity(panels.len());
        let mut required: u64 = 0;
        for p in &panels {
            let rate = queries
                .iter()
                .map(|&(x, t)| {
                    let speed = packet.hbar_over_mass * t;
                    (x - speed * p.a).abs().max((x - speed * p.b).abs())
                })
                .fold(0.0, f64::max);
            let span = rate * (p.b - p.a);
            let pieces = (span * config.phase_oversampling / (PANEL_ORDER as f64 * PI)).ceil().max(1.0);
            required = required.saturating_add(pieces as u64 * PANEL_ORDER as u64);
            counts.push(pieces as usize);
        }
        if required > config.node_budget {
            return Err(Error::NodeBudgetExceeded { required, budget: config.node_budget });
        }

        let mut nodes = Vec::with_capacity(required as usize);
        let mut weights = Vec::with_capacity(required as usize);
        for (p, &pieces) in panels.iter().zip(&counts) {
            let h = (p.b - p.a) / pieces as f64;
            for j in 0..pieces {
                let a = p.a + j as f64 * h;
                for (&x, &w) in gx.iter().zip(&gw) {
                    nodes.push(a + 0.5 * h * (x + 1.0));
                    weights.push(0.5 * h * w);
                }
            }
        }
        let envelope = nodes.par_iter().map(|&k| amplitude(k)).collect();
        Ok(Self { nodes, weights, envelope })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// The integral at `(x, t)` with the prepared envelope.
    pub fn integrate(&self, packet: &GaussianPacket, x: f64, t: f64) -> Complex64 {
        let half_speed = 0.5 * packet.hbar_over_mass * t;
        self.nodes
            .iter()
            .zip(&self.weights)
            .zip(&self.envelope)
            .map(|((&k, &w), &g)| g * Complex64::from_polar(w, k * x - half_speed * k * k))
            .sum()
    }

    /// `int |phi0 t|^2 dk / (2 pi)^{-1}`, i.e. the norm of the envelope.
    pub fn envelope_norm(&self) -> f64 {
        2.0 * PI
            * self
                .weights
                .iter()
                .zip(&self.envelope)
                .map(|(&w, g)| w * g.norm_sqr())
                .sum::<f64>()
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("time must be non-negative (got {t})")));
    }
    Ok(())
}

/// Transmitted amplitude by quadrature, with the exact `t(k)`.
pub fn psi_quadrature(
    packet: &GaussianPacket,
    profile: &PotentialProfile,
    x: f64,
    t: f64,
    config: &QuadratureConfig,
) -> Result<Complex64> {
    Ok(psi_many(packet, Some(profile), &[(x, t)], config)?[0])
}

/// Free amplitude by the same quadrature with `t(k) = 1`.
pub fn psi_free_quadrature(
    packet: &GaussianPacket,
    x: f64,
    t: f64,
    config: &QuadratureConfig,
) -> Result<Complex64> {
    Ok(psi_many(packet, None, &[(x, t)], config)?[0])
}

/// Amplitudes at several points sharing one node set; `profile = None`
/// gives the free packet.
pub fn psi_many(
    packet: &GaussianPacket,
    profile: Option<&PotentialProfile>,
    points: &[(f64, f64)],
    config: &QuadratureConfig,
) -> Result<Vec<Complex64>> {
    for &(x, t) in points {
        check_time(t)?;
        if let Some(p) = profile {
            if !(x >= p.total_length()) {
                return Err(Error::InvalidArgument(format!("x = {x} lies inside the potential region")));
            }
        }
    }
    let rule = MomentumQuadrature::new(packet, profile, config, points)?;
    Ok(points.par_iter().map(|&(x, t)| rule.integrate(packet, x, t)).collect())
}
