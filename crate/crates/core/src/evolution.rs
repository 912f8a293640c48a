//! Closed-form evolution of a transmitted cutoff Gaussian packet.
//!
//! For `x >= L` the transmitted wave is
//!
//! ```text
//! psi(x, t) = psi_f(x, t) [ C + sqrt(pi) sigma sqrt(1 + i t/tau)
//!                               sum_n r_n kappa_n e^{-i kappa_n L} w(i y_n) ]
//! ```
//!
//! with `psi_f` the freely moving extended Gaussian and `y_n` the Moshinsky
//! argument at `x' = x - x_c - hbar k0 t/m`, `t' = t - i tau`,
//! `kappa' = kappa_n - k0`. The constant `C` is split over the pole pairs
//! so that each pair carries `i (c_n - c_n*)` next to its Faddeeva terms;
//! every term is assembled in log space before exponentiation.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poles::PoleCatalog;
use crate::potential::{PotentialProfile, UnitSystem};
use crate::resonances::{expansion_weights, summation_order, ResidueSet};
use crate::specfun::{faddeeva_ln, moshinsky_argument};

/// Below this validity ratio the closed form is refused.
pub const MIN_VALIDITY_RATIO: f64 = 3.0;
/// Validity ratio expected of acceptance-grade runs.
pub const ACCEPTANCE_VALIDITY_RATIO: f64 = 5.0;
/// Pair contributions below this fraction of the running sum count as negligible.
pub const EARLY_EXIT_RATIO: f64 = 1e-12;
/// Consecutive negligible pairs that end the summation.
pub const EARLY_EXIT_RUN: usize = 16;
/// Last-pair fraction above which a truncation warning is raised.
pub const TRUNCATION_WARNING_RATIO: f64 = 1e-8;
/// Smallest free density accepted as a denominator.
pub const FREE_DENSITY_FLOOR: f64 = 1e-300;

/// Initial cutoff Gaussian centred at `x_c < 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPacket {
    pub x_c: f64,
    pub sigma: f64,
    pub k0: f64,
    /// `hbar / m` in nm^2/fs.
    pub hbar_over_mass: f64,
}

impl GaussianPacket {
    pub fn new(x_c: f64, sigma: f64, k0: f64, units: &UnitSystem) -> Result<Self> {
        if !(x_c < 0.0 && x_c.is_finite()) {
            return Err(Error::InvalidArgument(format!("packet centre must be negative (got {x_c})")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!("packet width must be positive (got {sigma})")));
        }
        if !(k0 > 0.0 && k0.is_finite()) {
            return Err(Error::InvalidArgument(format!("packet wavenumber must be positive (got {k0})")));
        }
        Ok(Self { x_c, sigma, k0, hbar_over_mass: units.hbar_over_mass() })
    }

    /// Packet with mean energy `e0` in eV.
    pub fn with_energy(x_c: f64, sigma: f64, e0: f64, units: &UnitSystem) -> Result<Self> {
        Self::new(x_c, sigma, units.wavenumber_of_energy(e0)?, units)
    }

    /// Spreading time `2 m sigma^2 / hbar` in fs.
    pub fn tau(&self) -> f64 {
        2.0 * self.sigma * self.sigma / self.hbar_over_mass
    }

    /// `|x_c| / (2 sigma)`.
    pub fn validity_ratio(&self) -> f64 {
        self.x_c.abs() / (2.0 * self.sigma)
    }

    /// Group velocity `hbar k0 / m` in nm/fs.
    pub fn velocity(&self) -> f64 {
        self.hbar_over_mass * self.k0
    }

    fn shifted_position(&self, x: f64, t: f64) -> f64 {
        x - self.x_c - self.velocity() * t
    }

    fn complex_time(&self, t: f64) -> Complex64 {
        Complex64::new(t, -self.tau())
    }
}

/// `ln psi_f(x, t)` for the freely evolving extended Gaussian.
pub(crate) fn ln_free_packet(packet: &GaussianPacket, x: f64, t: f64) -> Complex64 {
    let s = Complex64::new(1.0, t / packet.tau());
    let xp = packet.shifted_position(x, t);
    let k0 = packet.k0;
    let phase = k0 * x - 0.5 * packet.hbar_over_mass * k0 * k0 * t;
    Complex64::new(-0.25 * (2.0 * PI).ln() - 0.5 * packet.sigma.ln(), phase)
        - 0.5 * s.ln()
        - xp * xp / (4.0 * packet.sigma * packet.sigma * s)
}

/// Freely evolving packet; at `t = 0` the normalized Gaussian times `e^{i k0 x}`.
pub fn free_packet(packet: &GaussianPacket, x: f64, t: f64) -> Complex64 {
    let l = ln_free_packet(packet, x, t);
    if l.re < -745.0 {
        return Complex64::new(0.0, 0.0);
    }
    l.exp()
}

/// Transmitted amplitude together with bookkeeping of the pole sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmittedValue {
    pub psi: Complex64,
    pub free: Complex64,
    /// Magnitude of the last summed pair relative to the bracket.
    pub truncation_ratio: f64,
    pub pairs_used: usize,
}

impl TransmittedValue {
    pub fn truncation_warning(&self) -> bool {
        self.truncation_ratio > TRUNCATION_WARNING_RATIO
    }
}

/// Pole data prepared for repeated evaluation of the transmitted packet.
#[derive(Debug, Clone)]
pub struct TransmittedPacket {
    packet: GaussianPacket,
    length: f64,
    poles: Vec<Complex64>,
    /// `ln(r_n kappa_n e^{-i kappa_n L})`
    ln_a: Vec<Complex64>,
    /// `i (c_n - c_n*)` with `c_n = r_n e^{-i kappa_n L}`
    pair_constant: Vec<Complex64>,
}

impl TransmittedPacket {
    pub fn new(
        packet: &GaussianPacket,
        profile: &PotentialProfile,
        catalog: &PoleCatalog,
        residues: &ResidueSet,
        n: usize,
    ) -> Result<Self> {
        if packet.validity_ratio() < MIN_VALIDITY_RATIO {
            return Err(Error::UnreliableRegime(packet.validity_ratio()));
        }
        let available = catalog.len().min(residues.len());
        if n > available {
            return Err(Error::TruncationTooLarge { requested: n, available });
        }
        let weights = expansion_weights(catalog, residues);
        let order = summation_order(catalog, n);
        Ok(Self {
            packet: *packet,
            length: profile.total_length(),
            poles: order.iter().map(|&i| catalog.poles[i]).collect(),
            ln_a: order.iter().map(|&i| (weights[i] * catalog.poles[i]).ln()).collect(),
            pair_constant: order.iter().map(|&i| Complex64::i() * (weights[i] - weights[i].conj())).collect(),
        })
    }

    pub fn packet(&self) -> &GaussianPacket {
        &self.packet
    }

    pub fn pole_pairs(&self) -> usize {
        self.poles.len()
    }

    fn check_point(&self, x: f64, t: f64) -> Result<()> {
        if !(x >= self.length) {
            return Err(Error::InvalidArgument(format!("x = {x} lies inside the potential region")));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!("time must be positive (got {t})")));
        }
        Ok(())
    }

    /// Sum over pole pairs of `i (c - c*) + pref (a w(i y) + a* w(i y_mirror))`,
    /// each term carrying the additional log factor `ln_outer`.
    fn pole_sum(&self, x: f64, t: f64, ln_outer: Complex64, outer: Complex64) -> (Complex64, f64, usize) {
        let p = &self.packet;
        let xp = p.shifted_position(x, t);
        let tp = p.complex_time(t);
        let hm = p.hbar_over_mass;
        let ln_pref = Complex64::new(0.5 * PI.ln() + p.sigma.ln(), 0.0)
            + 0.5 * Complex64::new(1.0, t / p.tau()).ln()
            + ln_outer;
        let mut sum = Complex64::new(0.0, 0.0);
        let mut last = 0.0;
        let mut quiet = 0;
        let mut used = 0;
        for ((&kappa, &ln_a), &pc) in self.poles.iter().zip(&self.ln_a).zip(&self.pair_constant) {
            let y = moshinsky_argument(xp, tp, kappa - p.k0, hm);
            let ym = moshinsky_argument(xp, tp, -kappa.conj() - p.k0, hm);
            let direct = (ln_pref + ln_a + faddeeva_ln(Complex64::i() * y)).exp();
            let mirror = (ln_pref + ln_a.conj() + faddeeva_ln(Complex64::i() * ym)).exp();
            let pair = pc * outer + direct + mirror;
            sum += pair;
            used += 1;
            last = pair.norm();
            if last <= EARLY_EXIT_RATIO * sum.norm() {
                quiet += 1;
                if quiet >= EARLY_EXIT_RUN {
                    break;
                }
            } else {
                quiet = 0;
            }
        }
        let ratio = if sum.norm() > 0.0 { last / sum.norm() } else { 0.0 };
        (sum, ratio, used)
    }

    /// `psi(x, t)` for `x >= L`, `t > 0`.
    pub fn evaluate(&self, x: f64, t: f64) -> Result<TransmittedValue> {
        self.check_point(x, t)?;
        let ln_f = ln_free_packet(&self.packet, x, t);
        let free = if ln_f.re < -745.0 { Complex64::new(0.0, 0.0) } else { ln_f.exp() };
        let (psi, truncation_ratio, pairs_used) = self.pole_sum(x, t, ln_f, free);
        Ok(TransmittedValue { psi, free, truncation_ratio, pairs_used })
    }

    pub fn psi(&self, x: f64, t: f64) -> Result<Complex64> {
        Ok(self.evaluate(x, t)?.psi)
    }

    /// `psi / psi_f`.
    pub fn ratio(&self, x: f64, t: f64) -> Result<Complex64> {
        self.check_point(x, t)?;
        let free_density = free_packet(&self.packet, x, t).norm_sqr();
        if free_density < FREE_DENSITY_FLOOR {
            return Err(Error::FreeDensityUnderflow(free_density));
        }
        Ok(self.pole_sum(x, t, Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)).0)
    }

    /// `|psi|^2 / |psi_f|^2` at fixed time.
    pub fn zeta(&self, x: f64, t0: f64) -> Result<f64> {
        Ok(self.ratio(x, t0)?.norm_sqr())
    }

    /// `sigma |psi|^2`.
    pub fn density(&self, x: f64, t: f64) -> Result<f64> {
        Ok(self.packet.sigma * self.psi(x, t)?.norm_sqr())
    }

    /// Bracket of the closed form with every `w(i y)` replaced by its
    /// large-argument terms `1/(sqrt(pi) y) - 1/(2 sqrt(pi) y^3)`, dropping
    /// the `e^{y^2}` part that decays for fourth-quadrant poles. Returns
    /// `(C, leading sum, next-order sum)`.
    pub fn asymptotic_bracket(&self, x: f64, t: f64) -> Result<(Complex64, Complex64, Complex64)> {
        self.check_point(x, t)?;
        let p = &self.packet;
        let xp = p.shifted_position(x, t);
        let tp = p.complex_time(t);
        let pref = PI.sqrt() * p.sigma * Complex64::new(1.0, t / p.tau()).sqrt();
        let inv_sqrt_pi = 1.0 / PI.sqrt();
        let mut c = Complex64::new(0.0, 0.0);
        let mut lead = Complex64::new(0.0, 0.0);
        let mut next = Complex64::new(0.0, 0.0);
        for ((&kappa, &ln_a), &pc) in self.poles.iter().zip(&self.ln_a).zip(&self.pair_constant) {
            let a = ln_a.exp();
            c += pc;
            for (k, w) in [(kappa, a), (-kappa.conj(), a.conj())] {
                let y = moshinsky_argument(xp, tp, k - p.k0, p.hbar_over_mass);
                // w(iy) ~ (1/sqrt(pi)) (1/y - 1/(2 y^3)) for large y off the pole side
                let iy = Complex64::i() * y;
                lead += pref * w * Complex64::i() * inv_sqrt_pi / iy;
                next += pref * w * Complex64::i() * inv_sqrt_pi * 0.5 / (iy * iy * iy);
            }
        }
        Ok((c, lead, next))
    }
}

/// Closed-form transmitted amplitude at a single point.
pub fn transmitted_packet(
    packet: &GaussianPacket,
    profile: &PotentialProfile,
    catalog: &PoleCatalog,
    residues: &ResidueSet,
    x: f64,
    t: f64,
    n: usize,
) -> Result<Complex64> {
    TransmittedPacket::new(packet, profile, catalog, residues, n)?.psi(x, t)
}

/// Density ratio `|psi(x, t0)|^2 / |psi_f(x, t0)|^2`.
pub fn zeta(
    packet: &GaussianPacket,
    profile: &PotentialProfile,
    catalog: &PoleCatalog,
    residues: &ResidueSet,
    x: f64,
    t0: f64,
    n: usize,
) -> Result<f64> {
    if !(x > profile.total_length()) {
        return Err(Error::InvalidArgument(format!("x = {x} must exceed L")));
    }
    TransmittedPacket::new(packet, profile, catalog, residues, n)?.zeta(x, t0)
}

/// `((x - L) / (x0 - L))^2`.
pub fn eta(x: f64, x0: f64, length: f64) -> f64 {
    let r = (x - length) / (x0 - length);
    r * r
}

/// Least-squares slope of `ln rho` against `ln t`.
///
/// Fails with [`Error::NonAsymptotic`] when the slopes between neighbouring
/// samples spread by more than 0.5.
pub fn fit_power_law(times: &[f64], densities: &[f64]) -> Result<f64> {
    if times.len() != densities.len() || times.len() < 3 {
        return Err(Error::InvalidArgument("need at least three samples".into()));
    }
    if times.iter().chain(densities).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidArgument("samples must be positive".into()));
    }
    let lx: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = densities.iter().map(|d| d.ln()).collect();
    let local: Vec<f64> = lx
        .windows(2)
        .zip(ly.windows(2))
        .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
        .collect();
    let lo = local.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = local.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo > 0.5 {
        return Err(Error::NonAsymptotic { spread: hi - lo });
    }
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// Log-uniform grid of `samples` points over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, samples: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..samples)
        .map(|i| (a + (b - a) * i as f64 / (samples - 1).max(1) as f64).exp())
        .collect()
}

/// Fitted exponent of the density decay at `x_d` over `t_range` (fs).
pub fn longtime_exponent(
    transmitted: &TransmittedPacket,
    x_d: f64,
    t_range: (f64, f64),
    samples: usize,
) -> Result<f64> {
    let times = log_grid(t_range.0, t_range.1, samples);
    let densities = times
        .iter()
        .map(|&t| transmitted.density(x_d, t))
        .collect::<Result<Vec<f64>>>()?;
    fit_power_law(&times, &densities)
}

/// Neglected cutoff-tail scale `e^{-x_c^2 / 4 sigma^2} * term_magnitude`.
pub fn cutoff_error_estimate(packet: &GaussianPacket, term_magnitude: f64) -> f64 {
    let r = packet.validity_ratio();
    (-r * r).exp() * term_magnitude
}

/// `hbar / Gamma_min` over the poles below the highest barrier, in fs; the
/// first pole when none lies below.
pub fn system_lifetime(profile: &PotentialProfile, catalog: &PoleCatalog) -> Option<f64> {
    let energies = catalog.energies(profile);
    let v = profile.max_height();
    let below = energies.iter().filter(|(e, _)| *e < v).map(|(_, g)| *g).fold(f64::INFINITY, f64::min);
    let gamma = if below.is_finite() { below } else { energies.first()?.1 };
    Some(profile.units().hbar / gamma)
}

/// How a sampled amplitude was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Analytic,
    Oracle,
}

/// Amplitudes and densities on a list of `(x, t)` points.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionResult {
    pub grid: Vec<(f64, f64)>,
    pub amplitude: Vec<Complex64>,
    pub density: Vec<f64>,
    pub method: Method,
}

impl EvolutionResult {
    pub fn from_amplitudes(grid: Vec<(f64, f64)>, amplitude: Vec<Complex64>, sigma: f64, method: Method) -> Self {
        let density = amplitude.iter().map(|a| sigma * a.norm_sqr()).collect();
        Self { grid, amplitude, density, method }
    }

    pub fn analytic(transmitted: &TransmittedPacket, grid: Vec<(f64, f64)>) -> Result<Self> {
        let amplitude = grid
            .iter()
            .map(|&(x, t)| transmitted.psi(x, t))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_amplitudes(grid, amplitude, transmitted.packet().sigma, Method::Analytic))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn packet() -> GaussianPacket {
        let units = *presets::single_barrier().units();
        GaussianPacket::with_energy(-5.0, 0.5, 0.115, &units).unwrap()
    }

    #[test]
    fn peak_value_at_start() {
        let p = packet();
        let v = free_packet(&p, p.x_c, 0.0);
        let expected = (2.0 * PI).powf(-0.25) / p.sigma.sqrt();
        assert!((v.norm() - expected).abs() < 1e-14);
        let phase = Complex64::from_polar(1.0, p.k0 * p.x_c);
        assert!((v / v.norm() - phase).norm() < 1e-13);
    }

    #[test]
    fn tau_for_reference_packet() {
        let p = packet();
        assert!((p.tau() - 0.289_3).abs() < 1e-3);
        assert_eq!(p.validity_ratio(), 5.0);
    }

    #[test]
    fn eta_examples() {
        assert_eq!(eta(7.0, 7.0, 2.0), 1.0);
        assert_eq!(eta(12.0, 7.0, 2.0), 4.0);
    }

    #[test]
    fn cutoff_scale() {
        let p = packet();
        assert!((cutoff_error_estimate(&p, 1.0) - (-25.0f64).exp()).abs() < 1e-20);
        let units = *presets::single_barrier().units();
        let q = GaussianPacket::new(-3.0, 0.5, 0.4, &units).unwrap();
        assert!((cutoff_error_estimate(&q, 1.0) - (-9.0f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn pure_power_law_fit() {
        let t = log_grid(10.0, 1000.0, 40);
        let rho: Vec<f64> = t.iter().map(|t| t.powi(-3)).collect();
        assert!((fit_power_law(&t, &rho).unwrap() + 3.0).abs() < 1e-12);
        let bent: Vec<f64> = t.iter().map(|t| t.powi(-3) + 1e-4).collect();
        assert!(matches!(fit_power_law(&t, &bent), Err(Error::NonAsymptotic { .. })));
    }

    #[test]
    fn invalid_packets() {
        let units = *presets::single_barrier().units();
        assert!(GaussianPacket::new(1.0, 0.5, 0.4, &units).is_err());
        assert!(GaussianPacket::new(-5.0, 0.0, 0.4, &units).is_err());
        assert!(GaussianPacket::new(-5.0, 0.5, -0.4, &units).is_err());
    }
}
