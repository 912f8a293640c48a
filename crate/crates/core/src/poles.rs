//! Complex poles of the transmission amplitude.
//!
//! Poles `kappa_n = alpha_n - i beta_n` are the zeros of `t22(k)` in the
//! fourth quadrant. The sweep starts from the high-index asymptotic form
//! `n pi / L - i (2/L) ln n`, converges that anchor with Newton's method and
//! walks inward one pole at a time. Each new pole must land in a rectangle
//! one asymptotic spacing below the previous one; when random restarts keep
//! failing the walk switches to thin strips that scan the remaining real
//! axis and may be empty.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::potential::PotentialProfile;

/// Tunables of the pole sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleSearchConfig {
    /// Index of the asymptotic anchor, also the minimum catalog size.
    pub n_seed: usize,
    /// Newton step tolerance, relative to `max(1, |kappa|)`.
    pub newton_tol: f64,
    /// Bound on `|t22|` at an accepted pole.
    pub residual_tol: f64,
    pub max_newton_iters: usize,
    /// Consecutive failed random restarts before switching to thin strips.
    pub max_random_attempts: usize,
    /// Thin strips are `pi / (regime2_subdivision L)` wide.
    pub regime2_subdivision: usize,
    pub dedup_tol: f64,
    pub rng_seed: u64,
    /// Extra poles beyond the anchor.
    pub extend_outward: usize,
}

impl Default for PoleSearchConfig {
    fn default() -> Self {
        Self {
            n_seed: 4000,
            newton_tol: 1e-12,
            residual_tol: 1e-10,
            max_newton_iters: 100,
            max_random_attempts: 1000,
            regime2_subdivision: 20,
            dedup_tol: 1e-6,
            rng_seed: 0x5eed,
            extend_outward: 0,
        }
    }
}

impl PoleSearchConfig {
    pub fn with_n_seed(n_seed: usize) -> Self {
        Self { n_seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [self.newton_tol, self.residual_tol, self.dedup_tol];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        if self.max_random_attempts == 0 || self.max_newton_iters == 0 {
            return Err(Error::InvalidArgument("iteration limits must be >= 1".into()));
        }
        if self.regime2_subdivision == 0 {
            return Err(Error::InvalidArgument("regime2_subdivision must be >= 1".into()));
        }
        if self.n_seed < 2 {
            return Err(Error::IndexTooSmall(self.n_seed));
        }
        Ok(())
    }
}

/// Result of a converged Newton run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOutcome {
    pub kappa: Complex64,
    pub iterations: usize,
    pub residual: f64,
}

/// Newton iteration on `t22` from `seed`.
pub fn newton_step_sequence(
    profile: &PotentialProfile,
    seed: Complex64,
    config: &PoleSearchConfig,
) -> Result<NewtonOutcome> {
    if seed == Complex64::new(0.0, 0.0) {
        return Err(Error::ZeroWavenumber);
    }
    let diverged = |iterations| Error::Divergence { iterations };
    let mut kappa = seed;
    for iter in 1..=config.max_newton_iters {
        let (f, df) = profile.t22_with_derivative(kappa).map_err(|_| diverged(iter))?;
        let step = f / df;
        if !step.is_finite() {
            return Err(diverged(iter));
        }
        let converged = step.norm() < config.newton_tol * kappa.norm().max(1.0)
            && f.norm() <= config.residual_tol;
        kappa -= step;
        if converged && kappa.is_finite() && kappa.im <= 0.0 {
            let residual = profile.t22(kappa).map_err(|_| diverged(iter))?.norm();
            if residual <= config.residual_tol {
                return Ok(NewtonOutcome { kappa, iterations: iter, residual });
            }
        }
        if !kappa.is_finite() || kappa.im > 0.0 || kappa == Complex64::new(0.0, 0.0) {
            return Err(diverged(iter));
        }
    }
    Err(diverged(config.max_newton_iters))
}

/// `n pi / L - i (2/L) ln n`.
pub fn asymptotic_seed(n: usize, length: f64) -> Result<Complex64> {
    if n < 2 {
        return Err(Error::IndexTooSmall(n));
    }
    let n = n as f64;
    Ok(Complex64::new(n * PI / length, -2.0 / length * n.ln()))
}

/// Validated fourth-quadrant poles in ascending real part.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleCatalog {
    pub poles: Vec<Complex64>,
    pub residuals: Vec<f64>,
    pub fingerprint: String,
    pub rng_seed: u64,
}

impl PoleCatalog {
    pub fn len(&self) -> usize {
        self.poles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poles.is_empty()
    }

    /// `(E_n, Gamma_n)` in eV from `E = hbar^2 kappa^2 / 2m = E_n - i Gamma_n / 2`.
    pub fn energies(&self, profile: &PotentialProfile) -> Vec<(f64, f64)> {
        self.poles
            .iter()
            .map(|&k| {
                let e = profile.units().complex_energy(k);
                (e.re, -2.0 * e.im)
            })
            .collect()
    }

    /// Re-evaluates every residual against `profile`; returns the worst one.
    pub fn verify(&self, profile: &PotentialProfile, residual_tol: f64) -> Result<f64> {
        let mut worst = 0.0f64;
        for &k in &self.poles {
            let r = profile.t22(k)?.norm();
            if !(r <= residual_tol) || !(k.re > 0.0 && k.im < 0.0) {
                return Err(Error::NotAPole { re: k.re, im: k.im, residual: r });
            }
            worst = worst.max(r);
        }
        Ok(worst)
    }

    /// Keeps only the first `n` poles.
    pub fn truncated(&self, n: usize) -> Result<PoleCatalog> {
        if n > self.len() {
            return Err(Error::TruncationTooLarge { requested: n, available: self.len() });
        }
        Ok(PoleCatalog {
            poles: self.poles[..n].to_vec(),
            residuals: self.residuals[..n].to_vec(),
            fingerprint: self.fingerprint.clone(),
            rng_seed: self.rng_seed,
        })
    }
}

/// Third-quadrant partners `-kappa*`.
pub fn mirror_poles(catalog: &PoleCatalog) -> Vec<Complex64> {
    catalog.poles.iter().map(|k| -k.conj()).collect()
}

/// Hex digest of the profile and search configuration.
pub fn fingerprint(profile: &PotentialProfile, config: &PoleSearchConfig) -> String {
    let mut h = Sha256::new();
    h.update(b"resopack-catalog-v1");
    h.update((profile.layers().len() as u64).to_le_bytes());
    for layer in profile.layers() {
        h.update(layer.width.to_bits().to_le_bytes());
        h.update(layer.height.to_bits().to_le_bytes());
    }
    h.update(profile.mass_ratio().to_bits().to_le_bytes());
    for v in [config.n_seed as u64, config.max_newton_iters as u64] {
        h.update(v.to_le_bytes());
    }
    for v in [config.max_random_attempts, config.regime2_subdivision, config.extend_outward] {
        h.update((v as u64).to_le_bytes());
    }
    for v in [config.newton_tol, config.residual_tol, config.dedup_tol] {
        h.update(v.to_bits().to_le_bytes());
    }
    h.update(config.rng_seed.to_le_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

struct Sweep<'a> {
    profile: &'a PotentialProfile,
    config: &'a PoleSearchConfig,
    rng: ChaCha8Rng,
    length: f64,
}

struct Rect {
    re: (f64, f64),
    im: (f64, f64),
}

impl Rect {
    fn contains(&self, k: Complex64) -> bool {
        k.re >= self.re.0 && k.re <= self.re.1 && k.im >= self.im.0 && k.im <= self.im.1
    }
}

impl Sweep<'_> {
    fn newton(&self, seed: Complex64) -> Option<NewtonOutcome> {
        newton_step_sequence(self.profile, seed, self.config).ok()
    }

    fn is_new(&self, k: Complex64, found: &[NewtonOutcome]) -> bool {
        found.iter().all(|p| (p.kappa - k).norm() > self.config.dedup_tol)
    }

    fn accept(&self, out: Option<NewtonOutcome>, rect: &Rect, found: &[NewtonOutcome]) -> Option<NewtonOutcome> {
        out.filter(|o| o.kappa.re > 0.0 && rect.contains(o.kappa) && self.is_new(o.kappa, found))
    }

    fn gated(&self, seed: Complex64) -> bool {
        self.profile.t22(seed).map(|t| t.norm() < 1.0).unwrap_or(false)
    }

    fn random_in(&mut self, centre: Complex64, dr: f64, di: f64) -> Complex64 {
        let gr: f64 = self.rng.gen_range(-0.5..=0.5);
        let gi: f64 = self.rng.gen_range(-0.5..=0.5);
        centre + Complex64::new(gr * dr, gi * di)
    }

    /// Next pole one spacing below `from`, or `None` after all restarts fail.
    fn step_inward(&mut self, from: Complex64, found: &[NewtonOutcome]) -> Option<NewtonOutcome> {
        let dr = PI / self.length;
        let di = -from.im;
        let centre = from - dr;
        let rect = Rect {
            re: (from.re - 1.5 * dr, from.re - 0.5 * dr),
            im: (from.im - 0.5 * di, from.im + 0.5 * di),
        };
        if let Some(p) = self.accept(self.newton(centre), &rect, found) {
            return Some(p);
        }
        for _ in 0..self.config.max_random_attempts {
            let seed = self.random_in(centre, dr, di);
            if !self.gated(seed) {
                continue;
            }
            if let Some(p) = self.accept(self.newton(seed), &rect, found) {
                return Some(p);
            }
        }
        None
    }

    /// Next pole one spacing above `from`, used to extend past the anchor.
    fn step_outward(&mut self, from: Complex64, found: &[NewtonOutcome]) -> Option<NewtonOutcome> {
        let dr = PI / self.length;
        let di = -from.im;
        let centre = from + dr;
        let rect = Rect {
            re: (from.re + 0.5 * dr, from.re + 1.5 * dr),
            im: (from.im - 0.5 * di, from.im + 0.5 * di),
        };
        if let Some(p) = self.accept(self.newton(centre), &rect, found) {
            return Some(p);
        }
        for _ in 0..self.config.max_random_attempts {
            let seed = self.random_in(centre, dr, di);
            if self.gated(seed) {
                if let Some(p) = self.accept(self.newton(seed), &rect, found) {
                    return Some(p);
                }
            }
        }
        None
    }

    /// Scans thin strips from `cursor` down to the origin.
    fn thin_strips(&mut self, mut cursor: f64, mut beta_ref: f64, found: &mut Vec<NewtonOutcome>) {
        let dr = PI / (self.config.regime2_subdivision as f64 * self.length);
        while cursor - 0.5 * dr > 0.0 {
            let di = 2.0 * beta_ref;
            let centre = Complex64::new(cursor - 0.5 * dr, -beta_ref);
            let rect = Rect { re: (cursor - dr, cursor), im: (-di, 0.0) };
            let mut hit = self.accept(self.newton(centre), &rect, found);
            let mut attempts = 0;
            while hit.is_none() && attempts < self.config.max_random_attempts {
                attempts += 1;
                let seed = self.random_in(centre, dr, di);
                if seed.im >= 0.0 || !self.gated(seed) {
                    continue;
                }
                hit = self.accept(self.newton(seed), &rect, found);
            }
            match hit {
                // rescan the same strip below the new pole
                Some(p) => {
                    beta_ref = -p.kappa.im;
                    cursor = p.kappa.re;
                    found.push(p);
                }
                None => cursor -= dr,
            }
        }
    }
}

/// Full pole sweep from the asymptotic anchor down to the origin.
pub fn sweep_poles(profile: &PotentialProfile, config: &PoleSearchConfig) -> Result<PoleCatalog> {
    config.validate()?;
    if !profile.has_barrier() {
        return Err(Error::InvalidProfile("profile has no barrier, t22 has no zeros".into()));
    }
    let length = profile.total_length();
    let mut sweep = Sweep {
        profile,
        config,
        rng: ChaCha8Rng::seed_from_u64(config.rng_seed),
        length,
    };
    let anchor_seed = asymptotic_seed(config.n_seed, length)?;
    let anchor = sweep
        .newton(anchor_seed)
        .filter(|o| o.kappa.re > 0.0)
        .ok_or(Error::AnchorFailure(config.n_seed))?;

    let mut found = vec![anchor];
    let mut current = anchor.kappa;
    loop {
        if current.re < 1.5 * PI / length {
            break;
        }
        match sweep.step_inward(current, &found) {
            Some(p) => {
                current = p.kappa;
                found.push(p);
            }
            None => break,
        }
    }
    let lowest = found.last().copied().unwrap_or(anchor);
    sweep.thin_strips(lowest.kappa.re, -lowest.kappa.im, &mut found);

    let mut top = anchor.kappa;
    let mut extra = 0;
    while found.len() < config.n_seed || extra < config.extend_outward {
        match sweep.step_outward(top, &found) {
            Some(p) => {
                top = p.kappa;
                found.push(p);
                extra += 1;
            }
            None => break,
        }
    }

    let mut poles = dedup(found, config.dedup_tol);
    poles.retain(|p| p.residual <= config.residual_tol && p.kappa.re > 0.0 && p.kappa.im < 0.0);
    poles.sort_by(|a, b| a.kappa.re.total_cmp(&b.kappa.re));
    let catalog = PoleCatalog {
        poles: poles.iter().map(|p| p.kappa).collect(),
        residuals: poles.iter().map(|p| p.residual).collect(),
        fingerprint: fingerprint(profile, config),
        rng_seed: config.rng_seed,
    };
    catalog.verify(profile, config.residual_tol)?;
    Ok(catalog)
}

/// Removes near-coincident poles, keeping the smaller residual.
fn dedup(mut found: Vec<NewtonOutcome>, tol: f64) -> Vec<NewtonOutcome> {
    found.sort_by(|a, b| a.kappa.re.total_cmp(&b.kappa.re));
    let mut out: Vec<NewtonOutcome> = Vec::with_capacity(found.len());
    for p in found {
        let clash = out
            .iter()
            .rev()
            .take_while(|q| p.kappa.re - q.kappa.re <= tol)
            .position(|q| (q.kappa - p.kappa).norm() <= tol);
        match clash {
            Some(back) => {
                let idx = out.len() - 1 - back;
                if p.residual < out[idx].residual {
                    out[idx] = p;
                }
            }
            None => out.push(p),
        }
    }
    out
}

/// Seeds from the peaks of `T(E)` on a uniform grid over `(0, e_max]`.
///
/// A seed sits at the peak wavenumber, displaced downward by the half width
/// at half maximum mapped to k-space.
pub fn breit_wigner_seeds(
    profile: &PotentialProfile,
    e_max: f64,
    grid_points: usize,
) -> Result<Vec<Complex64>> {
    if !(e_max > 0.0) {
        return Err(Error::NegativeEnergy(e_max));
    }
    if grid_points < 3 || !profile.has_barrier() {
        return Ok(Vec::new());
    }
    let units = profile.units();
    let de = e_max / grid_points as f64;
    let energies: Vec<f64> = (1..=grid_points).map(|i| i as f64 * de).collect();
    let trans: Vec<f64> = energies
        .iter()
        .map(|&e| profile.transmission_coefficient(e).unwrap_or(1.0))
        .collect();
    let t_max = trans.iter().cloned().fold(0.0, f64::max);
    let mut seeds = Vec::new();
    for i in 1..grid_points - 1 {
        let peak = trans[i];
        if !(peak > trans[i - 1] && peak >= trans[i + 1] && peak > 0.5 * t_max) {
            continue;
        }
        let half = 0.5 * peak;
        let left = (0..i).rev().find(|&j| trans[j] <= half || trans[j] > trans[j + 1]);
        let right = (i + 1..grid_points).find(|&j| trans[j] <= half || trans[j] > trans[j - 1]);
        let crossing = |j: usize, towards: usize| {
            let (t0, t1) = (trans[j], trans[towards]);
            if t0 <= half && t1 > t0 {
                energies[j] + (half - t0) / (t1 - t0) * (energies[towards] - energies[j])
            } else {
                energies[j]
            }
        };
        let half_widths: Vec<f64> = [left.map(|j| energies[i] - crossing(j, j + 1)),
            right.map(|j| crossing(j, j - 1) - energies[i])]
        .into_iter()
        .flatten()
        .filter(|w| *w > 0.0)
        .collect();
        let hwhm = half_widths.iter().cloned().fold(f64::INFINITY, f64::min);
        let hwhm = if hwhm.is_finite() { hwhm } else { de };
        let k = units.wavenumber_of_energy(energies[i])?;
        let dk = hwhm / (2.0 * units.inv_mass_coeff * k);
        seeds.push(Complex64::new(k, -dk));
    }
    Ok(seeds)
}
