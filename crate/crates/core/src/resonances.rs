//! Resonance states, residues and the pole expansion of `t(k)`.
//!
//! A resonance state solves the stationary equation at a pole `kappa` with
//! purely outgoing behaviour on both sides. It is normalized with
//! `int_0^L u^2 dx + i (u(0)^2 + u(L)^2) / (2 kappa) = 1` and the residue
//! `r = u(0) u(L) / kappa` enters
//!
//! ```text
//! t(k) = i k sum_n r_n e^{-i kappa_n L} / (k - kappa_n),
//! ```
//!
//! where the sum also runs over the mirror poles `-kappa_n*` with residues
//! `-r_n*`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poles::PoleCatalog;
use crate::potential::{FieldKind, LayerField, PotentialProfile, SlabFunctions};

/// Relative bound on the outgoing boundary conditions.
pub const BOUNDARY_TOL: f64 = 1e-8;
/// Normalization brackets below this magnitude are rejected.
pub const DEGENERATE_NORM: f64 = 1e-14;

/// Normalized outgoing solution at a pole.
#[derive(Debug, Clone)]
pub struct ResonanceState {
    pub kappa: Complex64,
    pub u0: Complex64,
    pub u_l: Complex64,
    layers: Vec<LayerField>,
    length: f64,
}

impl ResonanceState {
    /// `(u, u')` at `x` in `[0, L]`.
    pub fn eval(&self, x: f64) -> (Complex64, Complex64) {
        let idx = self
            .layers
            .iter()
            .position(|l| x < l.start + l.width)
            .unwrap_or(self.layers.len() - 1);
        let layer = &self.layers[idx];
        layer.eval((x - layer.start).clamp(0.0, layer.width))
    }

    /// Relative residuals of `u' + i kappa u = 0` at `x = 0` and of
    /// `u' - i kappa u = 0` at `x = L`.
    pub fn boundary_residuals(&self) -> (f64, f64) {
        let k = self.kappa;
        let i = Complex64::i();
        let (u0, du0) = self.eval(0.0);
        let (ul, dul) = self.eval(self.length);
        (
            (du0 + i * k * u0).norm() / (k * u0).norm(),
            (dul - i * k * ul).norm() / (k * ul).norm(),
        )
    }

    /// `int u^2 dx + i (u(0)^2 + u(L)^2) / (2 kappa)`.
    pub fn normalization(&self) -> Complex64 {
        normalization_bracket(&self.layers, self.kappa, self.u0, self.u_l)
    }

    pub fn residue(&self) -> Complex64 {
        self.u0 * self.u_l / self.kappa
    }
}

fn layer_square_integral(field: &LayerField) -> Complex64 {
    let w = field.width;
    let i = Complex64::i();
    match field.kind {
        FieldKind::Plane { q, a, b } => {
            let iq2 = 2.0 * i * q;
            let up = ((iq2 * w).exp() - 1.0) / iq2;
            let down = (1.0 - (-iq2 * w).exp()) / iq2;
            a * a * up + 2.0 * a * b * w + b * b * down
        }
        FieldKind::Local { u, du } => {
            let q2 = field.q2;
            let s_w = SlabFunctions::new(q2, w).sinc;
            let s_2w = SlabFunctions::new(q2, 2.0 * w).sinc;
            let cc = w / 2.0 + s_2w / 4.0;
            let cs = s_w * s_w / 2.0;
            let ss = SlabFunctions::residual_sinc(q2, 2.0 * w) / 4.0;
            u * u * cc + 2.0 * u * du * cs + du * du * ss
        }
    }
}

fn normalization_bracket(layers: &[LayerField], kappa: Complex64, u0: Complex64, u_l: Complex64) -> Complex64 {
    let integral: Complex64 = layers.iter().map(layer_square_integral).sum();
    integral + Complex64::i() * (u0 * u0 + u_l * u_l) / (2.0 * kappa)
}

fn scale_field(field: &LayerField, s: Complex64) -> LayerField {
    let kind = match field.kind {
        FieldKind::Plane { q, a, b } => FieldKind::Plane { q, a: a * s, b: b * s },
        FieldKind::Local { u, du } => FieldKind::Local { u: u * s, du: du * s },
    };
    LayerField { kind, ..*field }
}

/// Builds and normalizes the outgoing state at the pole `kappa`.
pub fn resonance_state(profile: &PotentialProfile, kappa: Complex64) -> Result<ResonanceState> {
    if kappa == Complex64::new(0.0, 0.0) {
        return Err(Error::ZeroWavenumber);
    }
    // u = e^{-i kappa x} to the left: u(0) = 1, u'(0) = -i kappa
    let (layers, (f, g)) = profile.layer_fields(kappa, (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)));
    let u_l = f + g;
    let residual = 2.0 * g.norm() / u_l.norm();
    if !(residual <= BOUNDARY_TOL) {
        return Err(Error::NotAPole { re: kappa.re, im: kappa.im, residual });
    }
    let u0 = Complex64::new(1.0, 0.0);
    let norm = normalization_bracket(&layers, kappa, u0, u_l);
    if !(norm.norm() >= DEGENERATE_NORM) {
        return Err(Error::NormalizationDegenerate(norm.norm()));
    }
    let s = 1.0 / norm.sqrt();
    Ok(ResonanceState {
        kappa,
        u0: u0 * s,
        u_l: u_l * s,
        layers: layers.iter().map(|l| scale_field(l, s)).collect(),
        length: profile.total_length(),
    })
}

/// Residues and boundary values aligned with a pole catalog.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidueSet {
    pub residues: Vec<Complex64>,
    pub u0: Vec<Complex64>,
    pub u_l: Vec<Complex64>,
    /// Length of the generating profile.
    pub length: f64,
}

impl ResidueSet {
    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }
}

pub fn residues(profile: &PotentialProfile, catalog: &PoleCatalog) -> Result<ResidueSet> {
    let mut set = ResidueSet {
        residues: Vec::with_capacity(catalog.len()),
        u0: Vec::with_capacity(catalog.len()),
        u_l: Vec::with_capacity(catalog.len()),
        length: profile.total_length(),
    };
    for &kappa in &catalog.poles {
        let state = resonance_state(profile, kappa)?;
        set.residues.push(state.residue());
        set.u0.push(state.u0);
        set.u_l.push(state.u_l);
    }
    Ok(set)
}

/// Indices of the first `n` poles in ascending `|kappa|`.
pub(crate) fn summation_order(catalog: &PoleCatalog, n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| catalog.poles[a].norm().total_cmp(&catalog.poles[b].norm()));
    idx
}

fn check_truncation(catalog: &PoleCatalog, residues: &ResidueSet, n: usize) -> Result<()> {
    let available = catalog.len().min(residues.len());
    if n > available {
        return Err(Error::TruncationTooLarge { requested: n, available });
    }
    Ok(())
}

/// Weights `c_n = r_n e^{-i kappa_n L}`.
pub(crate) fn expansion_weights(catalog: &PoleCatalog, residues: &ResidueSet) -> Vec<Complex64> {
    let length = residues.length;
    catalog
        .poles
        .iter()
        .zip(&residues.residues)
        .map(|(&k, &r)| r * (-Complex64::i() * k * length).exp())
        .collect()
}

/// Pole expansion of `t(k)` with the first `n` poles and their mirrors.
pub fn expansion_t(
    k: Complex64,
    catalog: &PoleCatalog,
    residues: &ResidueSet,
    n: usize,
) -> Result<Complex64> {
    Expansion::new(catalog, residues, n)?.eval(k)
}

/// `C = i sum_n r_n e^{-i kappa_n L}` over the first `n` pole pairs.
pub fn coefficient_c(catalog: &PoleCatalog, residues: &ResidueSet, n: usize) -> Result<Complex64> {
    Ok(Expansion::new(catalog, residues, n)?.coefficient_c())
}

/// Pole expansion prepared for repeated evaluation.
#[derive(Debug, Clone)]
pub struct Expansion {
    poles: Vec<Complex64>,
    weights: Vec<Complex64>,
    dedup_tol: f64,
}

impl Expansion {
    pub fn new(catalog: &PoleCatalog, residues: &ResidueSet, n: usize) -> Result<Self> {
        check_truncation(catalog, residues, n)?;
        let weights = expansion_weights(catalog, residues);
        let order = summation_order(catalog, n);
        Ok(Self {
            poles: order.iter().map(|&i| catalog.poles[i]).collect(),
            weights: order.iter().map(|&i| weights[i]).collect(),
            dedup_tol: 1e-6,
        })
    }

    pub fn len(&self) -> usize {
        self.poles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poles.is_empty()
    }

    pub fn eval(&self, k: Complex64) -> Result<Complex64> {
        let mut sum = Complex64::new(0.0, 0.0);
        for (&kappa, &c) in self.poles.iter().zip(&self.weights) {
            let d_pole = k - kappa;
            let d_mirror = k + kappa.conj();
            let closest = d_pole.norm().min(d_mirror.norm());
            if closest < self.dedup_tol {
                return Err(Error::PoleProximity(closest));
            }
            sum += c / d_pole - c.conj() / d_mirror;
        }
        Ok(Complex64::i() * k * sum)
    }

    pub fn coefficient_c(&self) -> Complex64 {
        let s: f64 = self.weights.iter().map(|c| -2.0 * c.im).sum();
        Complex64::new(s, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poles::{sweep_poles, PoleSearchConfig};
    use crate::presets;

    fn catalog_of(profile: &PotentialProfile, n: usize) -> PoleCatalog {
        sweep_poles(profile, &PoleSearchConfig::with_n_seed(n)).unwrap()
    }

    #[test]
    fn single_barrier_states_satisfy_boundary_conditions() {
        let p = presets::single_barrier();
        let cat = catalog_of(&p, 200);
        for &k in cat.poles.iter().take(50) {
            let s = resonance_state(&p, k).unwrap();
            let (left, right) = s.boundary_residuals();
            assert!(left <= BOUNDARY_TOL && right <= BOUNDARY_TOL, "{k}: {left:e} {right:e}");
            assert!((s.normalization() - 1.0).norm() <= 1e-8);
        }
    }

    #[test]
    fn non_pole_is_rejected() {
        let p = presets::single_barrier();
        let err = resonance_state(&p, Complex64::new(0.7, -0.1)).unwrap_err();
        assert!(matches!(err, Error::NotAPole { .. }));
    }

    #[test]
    fn symmetric_profile_has_equal_boundary_moduli() {
        let p = presets::double_barrier();
        let cat = catalog_of(&p, 100);
        for &k in cat.poles.iter().take(20) {
            let s = resonance_state(&p, k).unwrap();
            let rel = (s.u0.norm() - s.u_l.norm()).abs() / s.u0.norm();
            assert!(rel <= 1e-8, "{k}: {rel:e}");
        }
    }

    #[test]
    fn empty_truncation() {
        let p = presets::single_barrier();
        let cat = catalog_of(&p, 50);
        let res = residues(&p, &cat).unwrap();
        assert_eq!(coefficient_c(&cat, &res, 0).unwrap(), Complex64::new(0.0, 0.0));
        assert_eq!(expansion_t(Complex64::new(0.0, 0.0), &cat, &res, 50).unwrap(), Complex64::new(0.0, 0.0));
        assert!(matches!(
            expansion_t(Complex64::new(1.0, 0.0), &cat, &res, 51),
            Err(Error::TruncationTooLarge { requested: 51, available: 50 })
        ));
        assert!(matches!(
            expansion_t(cat.poles[0], &cat, &res, 50),
            Err(Error::PoleProximity(_))
        ));
    }
}
