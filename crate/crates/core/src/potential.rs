//! Piecewise-constant potentials on `[0, L]` and their transfer matrices.
//!
//! In each layer the solution is written as `A e^{iq(x-x_j)} + B e^{-iq(x-x_j)}`
//! with `q^2 = k^2 - V / (hbar^2/2m)` and `x_j` the left edge of the layer.
//! The interface factors involve `1 - q_a/q_b = (q_b^2 - q_a^2) / (q_b (q_a + q_b))`,
//! evaluated in that form with the branch of every `q` aligned with `k`, so
//! the small reflection amplitudes that decide the location of deep poles
//! never come out of a cancellation. Layers with `|q| w < 1` sit close to the
//! branch point `q = 0` and are propagated in the `(u, u')` basis instead,
//! whose entries are entire in `q^2`.
//!
//! The assembled matrix sends the left-side coefficients `(A, B)` of
//! `e^{+-ikx}` to the right-side ones `(F, G)`, and `t(k) = 1/t22(k)`.
//! Derivatives in `k` are carried alongside the values with dual numbers.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// `hbar` in eV fs.
pub const HBAR_EV_FS: f64 = 0.658_211_956_9;
/// `hbar^2 / 2 m_e` in eV nm^2.
pub const HBAR2_OVER_2ME_EV_NM2: f64 = 0.038_099_8;

/// Physical constants for a given effective mass, in nm / fs / eV units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitSystem {
    /// eV fs
    pub hbar: f64,
    /// `hbar^2 / 2m` in eV nm^2
    pub inv_mass_coeff: f64,
}

impl UnitSystem {
    pub fn for_mass_ratio(mass_ratio: f64) -> Self {
        Self {
            hbar: HBAR_EV_FS,
            inv_mass_coeff: HBAR2_OVER_2ME_EV_NM2 / mass_ratio,
        }
    }

    /// `hbar / m` in nm^2 / fs.
    pub fn hbar_over_mass(&self) -> f64 {
        2.0 * self.inv_mass_coeff / self.hbar
    }

    pub fn wavenumber_of_energy(&self, energy: f64) -> Result<f64> {
        if !(energy >= 0.0) {
            return Err(Error::NegativeEnergy(energy));
        }
        Ok((energy / self.inv_mass_coeff).sqrt())
    }

    pub fn energy_of_wavenumber(&self, k: f64) -> f64 {
        self.inv_mass_coeff * k * k
    }

    /// Complex energy `hbar^2 kappa^2 / 2m`.
    pub fn complex_energy(&self, kappa: Complex64) -> Complex64 {
        self.inv_mass_coeff * kappa * kappa
    }

    /// Principal-branch wavenumber of a complex energy.
    pub fn complex_wavenumber(&self, energy: Complex64) -> Complex64 {
        (energy / self.inv_mass_coeff).sqrt()
    }
}

/// One constant-potential slab.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layer {
    /// nm
    pub width: f64,
    /// eV
    pub height: f64,
}

impl Layer {
    pub fn new(width: f64, height: f64) -> Self {
        Self { width, height }
    }
}

/// Ordered layers covering `[0, L]`; the potential vanishes outside.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialProfile {
    layers: Vec<Layer>,
    mass_ratio: f64,
    units: UnitSystem,
}

/// 2x2 plane-wave transfer matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    pub t11: Complex64,
    pub t12: Complex64,
    pub t21: Complex64,
    pub t22: Complex64,
}

impl TransferMatrix {
    pub fn determinant(&self) -> Complex64 {
        self.t11 * self.t22 - self.t12 * self.t21
    }
}

/// `cos(q a)`, `sin(q a)/q` and their combinations as entire functions of `q^2`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SlabFunctions {
    pub q2: Complex64,
    /// cos(q a)
    pub cos: Complex64,
    /// sin(q a) / q
    pub sinc: Complex64,
}

const SERIES_SWITCH: f64 = 0.1;

impl SlabFunctions {
    pub fn new(q2: Complex64, a: f64) -> Self {
        let u = q2 * a * a;
        if u.norm() < SERIES_SWITCH {
            // cos = sum (-u)^n/(2n)!, sinc = a sum (-u)^n/(2n+1)!
            let mut cos = Complex64::new(0.0, 0.0);
            let mut sinc = Complex64::new(0.0, 0.0);
            let mut p = Complex64::new(1.0, 0.0);
            let mut fact_even = 1.0;
            for n in 0..12 {
                if n > 0 {
                    p *= -u;
                    fact_even *= ((2 * n - 1) * (2 * n)) as f64;
                }
                cos += p / fact_even;
                sinc += p / (fact_even * (2 * n + 1) as f64);
            }
            Self { q2, cos, sinc: sinc * a }
        } else {
            let q = q2.sqrt();
            let qa = q * a;
            Self { q2, cos: qa.cos(), sinc: qa.sin() / q }
        }
    }

    /// `(a - sin(q a)/q) / q^2`, regular at `q = 0`.
    pub fn residual_sinc(q2: Complex64, a: f64) -> Complex64 {
        let u = q2 * a * a;
        if u.norm() < SERIES_SWITCH {
            // a^3 sum_{n>=1} (-1)^(n+1) u^(n-1)/(2n+1)!
            let mut sum = Complex64::new(0.0, 0.0);
            let mut p = Complex64::new(1.0, 0.0);
            let mut fact = 6.0;
            for n in 1..12 {
                if n > 1 {
                    p *= -u;
                    fact *= ((2 * n) * (2 * n + 1)) as f64;
                }
                sum += p / fact;
            }
            sum * a * a * a
        } else {
            let q = q2.sqrt();
            (a - (q * a).sin() / q) / q2
        }
    }

    /// `(a cos(q a) - sin(q a)/q) / q^2`, regular at `q = 0`.
    pub fn cos_minus_sinc(&self, a: f64) -> Complex64 {
        let u = self.q2 * a * a;
        if u.norm() < SERIES_SWITCH {
            // a^3 sum_{n>=1} (-1)^n 2n u^(n-1)/(2n+1)!
            let mut sum = Complex64::new(0.0, 0.0);
            let mut p = Complex64::new(-1.0, 0.0);
            let mut fact = 6.0;
            for n in 1..12 {
                if n > 1 {
                    p *= -u;
                    fact *= ((2 * n) * (2 * n + 1)) as f64;
                }
                sum += p * (2 * n) as f64 / fact;
            }
            sum * a * a * a
        } else {
            (a * self.cos - self.sinc) / self.q2
        }
    }
}

impl PotentialProfile {
    pub fn new(layers: Vec<Layer>, mass_ratio: f64) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidProfile("no layers".into()));
        }
        for (i, layer) in layers.iter().enumerate() {
            if !(layer.width.is_finite() && layer.width > 0.0) {
                return Err(Error::InvalidProfile(format!(
                    "layer {i} has non-positive width {}",
                    layer.width
                )));
            }
            if !(layer.height.is_finite() && layer.height >= 0.0) {
                return Err(Error::InvalidProfile(format!(
                    "layer {i} has negative height {}",
                    layer.height
                )));
            }
        }
        if !(mass_ratio.is_finite() && mass_ratio > 0.0) {
            return Err(Error::InvalidProfile(format!("mass ratio {mass_ratio}")));
        }
        Ok(Self {
            layers,
            mass_ratio,
            units: UnitSystem::for_mass_ratio(mass_ratio),
        })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn mass_ratio(&self) -> f64 {
        self.mass_ratio
    }

    pub fn units(&self) -> &UnitSystem {
        &self.units
    }

    pub fn total_length(&self) -> f64 {
        self.layers.iter().map(|l| l.width).sum()
    }

    pub fn max_height(&self) -> f64 {
        self.layers.iter().map(|l| l.height).fold(0.0, f64::max)
    }

    /// False for the trivial profile, which has no poles at all.
    pub fn has_barrier(&self) -> bool {
        self.max_height() > 0.0
    }

    fn q2_of<F: Field>(&self, layer_height: f64, k: F) -> F {
        k * k - F::constant(Complex64::new(layer_height / self.units.inv_mass_coeff, 0.0))
    }

    fn basis_of<F: Field>(&self, layer: &Layer, k: F) -> (Basis<F>, F) {
        let q2 = self.q2_of(layer.height, k);
        // branch aligned with k keeps q + k away from zero
        let mut q = q2.sqrt();
        if (q.value() * k.value().conj()).re < 0.0 {
            q = F::zero() - q;
        }
        if q.value().norm() * layer.width < LOCAL_SWITCH {
            (Basis::Local, q2)
        } else {
            (Basis::Plane(q), q2)
        }
    }

    /// Matrix taking coefficients in `from` (height `v_from`) to `to` (height
    /// `v_to`) at a common interface.
    fn interface<F: Field>(&self, from: Basis<F>, v_from: f64, to: Basis<F>, v_to: f64) -> M2<F> {
        let half = F::constant(Complex64::new(0.5, 0.0));
        let i = F::constant(Complex64::i());
        match (from, to) {
            (Basis::Plane(a), Basis::Plane(b)) => {
                let diff = F::constant(Complex64::new((v_from - v_to) / self.units.inv_mass_coeff, 0.0));
                let same = half * (a + b) / b;
                let cross = half * diff / (b * (a + b));
                M2([same, cross, cross, same])
            }
            (Basis::Plane(a), Basis::Local) => M2([F::one(), F::one(), i * a, F::zero() - i * a]),
            (Basis::Local, Basis::Plane(b)) => {
                let c = half * i / b;
                M2([half, F::zero() - c, half, c])
            }
            (Basis::Local, Basis::Local) => M2::identity(),
        }
    }

    fn propagation<F: Field>(&self, basis: Basis<F>, q2: F, width: f64) -> M2<F> {
        match basis {
            Basis::Plane(q) => {
                let iqw = F::constant(Complex64::new(0.0, width)) * q;
                M2([iqw.exp(), F::zero(), F::zero(), (F::zero() - iqw).exp()])
            }
            Basis::Local => {
                let (cos, sinc, q2sinc) = F::slab(q2, width);
                M2([cos, sinc, F::zero() - q2sinc, cos])
            }
        }
    }

    /// Matrix from left-exterior to right-exterior coefficients, both with
    /// local origins (x = 0 and x = L).
    fn assemble<F: Field>(&self, k: F) -> M2<F> {
        let mut m = M2::<F>::identity();
        let mut basis = Basis::Plane(k);
        let mut height = 0.0;
        for layer in &self.layers {
            let (next, q2) = self.basis_of(layer, k);
            m = self.interface(basis, height, next, layer.height).mul(&m);
            m = self.propagation(next, q2, layer.width).mul(&m);
            basis = next;
            height = layer.height;
        }
        self.interface(basis, height, Basis::Plane(k), 0.0).mul(&m)
    }

    /// Plane-wave transfer matrix at complex `k != 0`.
    pub fn transfer_matrix(&self, k: Complex64) -> Result<TransferMatrix> {
        check_k(k)?;
        let m = self.assemble(k);
        let ikl = Complex64::i() * k * self.total_length();
        let (em, ep) = ((-ikl).exp(), ikl.exp());
        Ok(TransferMatrix {
            t11: em * m.0[0],
            t12: em * m.0[1],
            t21: ep * m.0[2],
            t22: ep * m.0[3],
        })
    }

    pub fn t22(&self, k: Complex64) -> Result<Complex64> {
        check_k(k)?;
        let m = self.assemble(k);
        Ok((Complex64::i() * k * self.total_length()).exp() * m.0[3])
    }

    /// `t22(k)` and its analytic derivative `dt22/dk`.
    pub fn t22_with_derivative(&self, k: Complex64) -> Result<(Complex64, Complex64)> {
        check_k(k)?;
        let m = self.assemble(Dual::variable(k));
        let l = self.total_length();
        let ep = (Complex64::i() * k * l).exp();
        let m22 = m.0[3];
        Ok((ep * m22.v, ep * (m22.d + Complex64::i() * l * m22.v)))
    }

    pub fn t22_prime(&self, k: Complex64) -> Result<Complex64> {
        Ok(self.t22_with_derivative(k)?.1)
    }

    /// `t(k) = 1 / t22(k)`.
    pub fn transmission_amplitude(&self, k: Complex64) -> Result<Complex64> {
        let t22 = self.t22(k)?;
        if t22.norm() < 1e-13 {
            return Err(Error::PoleProximity(t22.norm()));
        }
        Ok(1.0 / t22)
    }

    /// Real-axis amplitude with the `t(0) = 0` limit filled in.
    pub(crate) fn transmission_amplitude_real(&self, k: f64) -> Complex64 {
        if k == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        match self.t22(Complex64::new(k, 0.0)) {
            Ok(t22) => 1.0 / t22,
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    /// `T(E) = |t|^2` for `E > 0` in eV.
    pub fn transmission_coefficient(&self, energy: f64) -> Result<f64> {
        if !(energy > 0.0) {
            return Err(Error::NegativeEnergy(energy));
        }
        let k = self.units.wavenumber_of_energy(energy)?;
        let t = self.transmission_amplitude(Complex64::new(k, 0.0))?;
        Ok(t.norm_sqr().min(1.0))
    }

    /// Field representation at the left edge of every layer, starting from
    /// left-exterior coefficients `(A, B)` of `e^{+-ikx}`; also returns the
    /// right-exterior coefficients of `e^{+-ik(x-L)}`.
    pub(crate) fn layer_fields(
        &self,
        k: Complex64,
        left: (Complex64, Complex64),
    ) -> (Vec<LayerField>, (Complex64, Complex64)) {
        let mut fields = Vec::with_capacity(self.layers.len());
        let mut basis = Basis::Plane(k);
        let mut height = 0.0;
        let mut v = left;
        let mut start = 0.0;
        for layer in &self.layers {
            let (next, q2) = self.basis_of(layer, k);
            v = self.interface(basis, height, next, layer.height).apply(v);
            fields.push(LayerField {
                start,
                width: layer.width,
                q2,
                kind: match next {
                    Basis::Plane(q) => FieldKind::Plane { q, a: v.0, b: v.1 },
                    Basis::Local => FieldKind::Local { u: v.0, du: v.1 },
                },
            });
            v = self.propagation(next, q2, layer.width).apply(v);
            basis = next;
            height = layer.height;
            start += layer.width;
        }
        let right = self.interface(basis, height, Basis::Plane(k), 0.0).apply(v);
        (fields, right)
    }
}

/// Solution inside one layer.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LayerField {
    pub start: f64,
    pub width: f64,
    pub q2: Complex64,
    pub kind: FieldKind,
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum FieldKind {
    /// `a e^{iqs} + b e^{-iqs}`, `s = x - start`
    Plane { q: Complex64, a: Complex64, b: Complex64 },
    /// value and slope at the layer start
    Local { u: Complex64, du: Complex64 },
}

impl LayerField {
    /// `(u, u')` at `s = x - start`.
    pub fn eval(&self, s: f64) -> (Complex64, Complex64) {
        match self.kind {
            FieldKind::Plane { q, a, b } => {
                let ep = (Complex64::i() * q * s).exp();
                let em = (-Complex64::i() * q * s).exp();
                (a * ep + b * em, Complex64::i() * q * (a * ep - b * em))
            }
            FieldKind::Local { u, du } => {
                let f = SlabFunctions::new(self.q2, s);
                (u * f.cos + du * f.sinc, -self.q2 * f.sinc * u + f.cos * du)
            }
        }
    }
}

const LOCAL_SWITCH: f64 = 1.0;

#[derive(Clone, Copy)]
enum Basis<F> {
    Plane(F),
    Local,
}

/// Scalar carried through the assembly, with or without a k-derivative.
trait Field:
    Copy
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
{
    fn constant(c: Complex64) -> Self;
    fn value(&self) -> Complex64;
    fn exp(self) -> Self;
    fn sqrt(self) -> Self;
    /// `(cos(qw), sin(qw)/q, q sin(qw))` as functions of `q^2`.
    fn slab(q2: Self, width: f64) -> (Self, Self, Self);

    fn zero() -> Self {
        Self::constant(Complex64::new(0.0, 0.0))
    }

    fn one() -> Self {
        Self::constant(Complex64::new(1.0, 0.0))
    }
}

impl Field for Complex64 {
    fn constant(c: Complex64) -> Self {
        c
    }

    fn value(&self) -> Complex64 {
        *self
    }

    fn exp(self) -> Self {
        Complex64::exp(self)
    }

    fn sqrt(self) -> Self {
        Complex64::sqrt(self)
    }

    fn slab(q2: Self, width: f64) -> (Self, Self, Self) {
        let f = SlabFunctions::new(q2, width);
        (f.cos, f.sinc, q2 * f.sinc)
    }
}

/// `v + d eps` with `eps^2 = 0`; `d` is the derivative in `k`.
#[derive(Debug, Clone, Copy)]
struct Dual {
    v: Complex64,
    d: Complex64,
}

impl Dual {
    fn variable(k: Complex64) -> Self {
        Dual { v: k, d: Complex64::new(1.0, 0.0) }
    }
}

impl std::ops::Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual { v: self.v + o.v, d: self.d + o.d }
    }
}

impl std::ops::Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual { v: self.v - o.v, d: self.d - o.d }
    }
}

impl std::ops::Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual { v: self.v * o.v, d: self.d * o.v + self.v * o.d }
    }
}

impl std::ops::Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        let v = self.v / o.v;
        Dual { v, d: (self.d - v * o.d) / o.v }
    }
}

impl Field for Dual {
    fn constant(c: Complex64) -> Self {
        Dual { v: c, d: Complex64::new(0.0, 0.0) }
    }

    fn value(&self) -> Complex64 {
        self.v
    }

    fn exp(self) -> Self {
        let e = self.v.exp();
        Dual { v: e, d: e * self.d }
    }

    fn sqrt(self) -> Self {
        let r = self.v.sqrt();
        Dual { v: r, d: self.d / (2.0 * r) }
    }

    fn slab(q2: Self, width: f64) -> (Self, Self, Self) {
        let f = SlabFunctions::new(q2.v, width);
        let half = 0.5 * q2.d;
        (
            Dual { v: f.cos, d: -half * width * f.sinc },
            Dual { v: f.sinc, d: half * f.cos_minus_sinc(width) },
            Dual { v: q2.v * f.sinc, d: half * (f.sinc + width * f.cos) },
        )
    }
}

#[derive(Clone, Copy)]
struct M2<F>([F; 4]);

impl<F: Field> M2<F> {
    fn identity() -> Self {
        M2([F::one(), F::zero(), F::zero(), F::one()])
    }

    fn mul(&self, rhs: &M2<F>) -> M2<F> {
        let a = &self.0;
        let b = &rhs.0;
        M2([
            a[0] * b[0] + a[1] * b[2],
            a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2],
            a[2] * b[1] + a[3] * b[3],
        ])
    }
}

impl M2<Complex64> {
    fn apply(&self, v: (Complex64, Complex64)) -> (Complex64, Complex64) {
        (self.0[0] * v.0 + self.0[1] * v.1, self.0[2] * v.0 + self.0[3] * v.1)
    }
}

fn check_k(k: Complex64) -> Result<()> {
    if k.re == 0.0 && k.im == 0.0 {
        return Err(Error::ZeroWavenumber);
    }
    if !(k.re.is_finite() && k.im.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite wavenumber {k}")));
    }
    Ok(())
}
