//! Complex special functions: the Faddeeva function and the Moshinsky kernel.
//!
//! `w(z) = exp(-z^2) erfc(-iz)` is evaluated in the closed upper half-plane with
//! the three-region scheme of Poppe and Wijers (ACM TOMS Algorithm 680): a power
//! series near the origin, a Taylor expansion whose derivatives come from the
//! Laplace continued fraction in the intermediate ring, and the bare continued
//! fraction further out. The lower half-plane goes through
//! `w(z) = 2 exp(-z^2) - w(-z)`, applied exactly once.

use std::f64::consts::{FRAC_2_SQRT_PI, FRAC_PI_4, LN_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};

const TWO_OVER_SQRT_PI: f64 = FRAC_2_SQRT_PI;
const INV_SQRT_PI: f64 = 0.5 * FRAC_2_SQRT_PI;
/// Largest argument of `exp` that stays finite.
const MAX_EXP_ARG: f64 = 709.0;

/// Faddeeva function for `Im z >= 0`.
fn w_upper(z: Complex64) -> Complex64 {
    debug_assert!(z.im >= 0.0);
    let xabs = z.re.abs();
    let yabs = z.im;

    if xabs > 1e150 || yabs > 1e150 {
        // single continued-fraction term, scaled to avoid overflow in z*z
        let w = Complex64::new(0.0, INV_SQRT_PI) / Complex64::new(xabs, yabs);
        return if z.re < 0.0 { w.conj() } else { w };
    }

    let x = xabs / 6.3;
    let y = yabs / 4.4;
    let mut qrho = x * x + y * y;
    let xquad = xabs * xabs - yabs * yabs;
    let yquad = 2.0 * xabs * yabs;

    let (u, v) = if qrho < 0.085_264 {
        // power series of erfc about the origin
        qrho = (1.0 - 0.85 * y) * qrho.sqrt();
        let n = (6.0 + 72.0 * qrho).round() as usize;
        let mut j = 2 * n + 1;
        let mut xsum = 1.0 / j as f64;
        let mut ysum = 0.0;
        for i in (1..=n).rev() {
            j -= 2;
            let fi = i as f64;
            let xaux = (xsum * xquad - ysum * yquad) / fi;
            ysum = (xsum * yquad + ysum * xquad) / fi;
            xsum = xaux + 1.0 / j as f64;
        }
        let u1 = -TWO_OVER_SQRT_PI * (xsum * yabs + ysum * xabs) + 1.0;
        let v1 = TWO_OVER_SQRT_PI * (xsum * xabs - ysum * yabs);
        let daux = (-xquad).exp();
        let u2 = daux * yquad.cos();
        let v2 = -daux * yquad.sin();
        (u1 * u2 - v1 * v2, u1 * v2 + v1 * u2)
    } else {
        let (h, kapn, nu) = if qrho > 1.0 {
            let rho = qrho.sqrt();
            (0.0, 0usize, (3.0 + 1442.0 / (26.0 * rho + 77.0)) as usize)
        } else {
            let q = (1.0 - y) * (1.0 - qrho).sqrt();
            (
                1.88 * q,
                (7.0 + 34.0 * q).round() as usize,
                (16.0 + 26.0 * q).round() as usize,
            )
        };
        let taylor = h > 0.0;
        let h2 = 2.0 * h;
        let mut qlambda = if taylor { h2.powi(kapn as i32) } else { 0.0 };
        let (mut rx, mut ry, mut sx, mut sy) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for n in (0..=nu).rev() {
            let np1 = (n + 1) as f64;
            let tx = yabs + h + np1 * rx;
            let ty = xabs - np1 * ry;
            let c = 0.5 / (tx * tx + ty * ty);
            rx = c * tx;
            ry = c * ty;
            if taylor && n <= kapn {
                let tx = qlambda + sx;
                sx = rx * tx - ry * sy;
                sy = ry * tx + rx * sy;
                qlambda /= h2;
            }
        }
        let (mut u, v) = if taylor {
            (TWO_OVER_SQRT_PI * sx, TWO_OVER_SQRT_PI * sy)
        } else {
            (TWO_OVER_SQRT_PI * rx, TWO_OVER_SQRT_PI * ry)
        };
        if yabs == 0.0 {
            u = (-xabs * xabs).exp();
        }
        (u, v)
    };

    if z.re < 0.0 {
        Complex64::new(u, -v)
    } else {
        Complex64::new(u, v)
    }
}

/// Faddeeva function `w(z) = exp(-z^2) erfc(-iz)` for any finite `z`.
///
/// Fails with [`Error::Overflow`] in the lower half-plane when `exp(-z^2)`
/// leaves the floating range; [`faddeeva_log_scaled`] covers that case.
pub fn faddeeva(z: Complex64) -> Result<Complex64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite Faddeeva argument {z}")));
    }
    if z.im >= 0.0 {
        return Ok(w_upper(z));
    }
    let minus_z2 = -(z * z);
    if minus_z2.re > MAX_EXP_ARG {
        return Err(Error::Overflow { re: z.re, im: z.im });
    }
    Ok(2.0 * minus_z2.exp() - w_upper(-z))
}

/// Returns `(ln|w(z)|, arg w(z))`, finite over the whole plane.
///
/// The phase lies in `(-pi, pi]`.
pub fn faddeeva_log_scaled(z: Complex64) -> (f64, f64) {
    let log_w = faddeeva_ln(z);
    (log_w.re, wrap_phase(log_w.im))
}

/// Complex logarithm of `w(z)` (branch of the imaginary part unspecified).
pub(crate) fn faddeeva_ln(z: Complex64) -> Complex64 {
    if z.im >= 0.0 {
        return w_upper(z).ln();
    }
    // w(z) = exp(a) - exp(b) with a = ln 2 - z^2, b = ln w(-z)
    let a = Complex64::new(LN_2, 0.0) - z * z;
    let b = w_upper(-z).ln();
    if a.re >= b.re {
        a + ln_one_minus_exp(b - a)
    } else {
        b + ln_exp_minus_one(a - b)
    }
}

/// `ln(1 - e^d)` for `Re d <= 0`.
fn ln_one_minus_exp(d: Complex64) -> Complex64 {
    let e = d.exp();
    if e.norm() < 1e-8 {
        -e - 0.5 * e * e
    } else {
        (Complex64::new(1.0, 0.0) - e).ln()
    }
}

/// `ln(e^d - 1)` for `Re d < 0`.
fn ln_exp_minus_one(d: Complex64) -> Complex64 {
    let e = d.exp();
    let base = Complex64::new(0.0, PI);
    if e.norm() < 1e-8 {
        base - e - 0.5 * e * e
    } else {
        (e - 1.0).ln()
    }
}

pub(crate) fn wrap_phase(phase: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut p = phase % two_pi;
    if p > PI {
        p -= two_pi;
    } else if p <= -PI {
        p += two_pi;
    }
    p
}

/// Truncated large-|z| expansion of `w(z)`.
///
/// `w(z) ~ (i/sqrt(pi)) sum_j (2j-1)!! / (2^j z^(2j+1))`, plus `2 exp(-z^2)`
/// below the real axis (`exp(-x^2)` on it). Intended as a cross-check of
/// [`faddeeva`].
pub fn faddeeva_asymptotic(z: Complex64, n_terms: usize) -> Result<Complex64> {
    let modulus = z.norm();
    if modulus < 5.0 || !(1..=6).contains(&n_terms) {
        return Err(Error::DomainTooSmall { modulus, terms: n_terms });
    }
    let inv_z2 = 1.0 / (z * z);
    let mut term = 1.0 / z;
    let mut sum = term;
    for j in 1..n_terms {
        term *= (2 * j - 1) as f64 / 2.0 * inv_z2;
        sum += term;
    }
    let series = Complex64::new(0.0, INV_SQRT_PI) * sum;
    let pole_part = if z.im < 0.0 {
        let minus_z2 = -(z * z);
        if minus_z2.re > MAX_EXP_ARG {
            return Err(Error::Overflow { re: z.re, im: z.im });
        }
        2.0 * minus_z2.exp()
    } else if z.im == 0.0 {
        Complex64::new((-z.re * z.re).exp(), 0.0)
    } else {
        Complex64::new(0.0, 0.0)
    };
    Ok(series + pole_part)
}

/// Argument `y` of the Moshinsky function for position `x`, complex time `t`
/// and complex wavenumber `kappa` (units nm, fs, 1/nm; `hbar_over_mass` in nm^2/fs).
///
/// `y = exp(-i pi/4) sqrt(m / 2 hbar t) (x - hbar kappa t / m)` on the principal
/// branch of the square root. For `t = t_r - i tau` with `t_r > 0` the argument
/// of `t` stays in `(-pi/2, 0]`, so the branch is continuous along the whole
/// time axis.
pub fn moshinsky_argument(
    x: f64,
    t: Complex64,
    kappa: Complex64,
    hbar_over_mass: f64,
) -> Complex64 {
    let scale = (1.0 / (2.0 * hbar_over_mass * t)).sqrt();
    Complex64::from_polar(1.0, -FRAC_PI_4) * scale * (x - hbar_over_mass * kappa * t)
}

/// Logarithm of the Moshinsky function `M = 1/2 exp(i m x^2 / 2 hbar t) w(i y)`.
pub(crate) fn moshinsky_ln(
    x: f64,
    t: Complex64,
    kappa: Complex64,
    hbar_over_mass: f64,
) -> Complex64 {
    let y = moshinsky_argument(x, t, kappa, hbar_over_mass);
    let iy = Complex64::new(-y.im, y.re);
    Complex64::new(-LN_2, 0.0)
        + Complex64::new(0.0, x * x / (2.0 * hbar_over_mass)) / t
        + faddeeva_ln(iy)
}

/// Moshinsky function
/// `M = (i/2pi) int dk exp(ikx - i hbar k^2 t / 2m) / (k - kappa)`
/// for `kappa` below the real axis, in closed form `1/2 exp(i m x^2/2 hbar t) w(iy)`.
///
/// The integral converges for `Im t < 0`, or for real `t > 0`; other times are
/// rejected.
pub fn moshinsky(
    x: f64,
    t: Complex64,
    kappa: Complex64,
    hbar_over_mass: f64,
) -> Result<Complex64> {
    let damped = t.im < 0.0 || (t.im == 0.0 && t.re > 0.0);
    if !damped {
        return Err(Error::InvalidArgument(format!(
            "Moshinsky function needs Im t < 0 or real t > 0 (got {t})"
        )));
    }
    let ln_m = moshinsky_ln(x, t, kappa, hbar_over_mass);
    if ln_m.re > MAX_EXP_ARG {
        return Err(Error::Overflow { re: x, im: ln_m.re });
    }
    Ok(ln_m.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn origin_and_imaginary_unit() {
        assert_eq!(faddeeva(c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
        // e * erfc(1)
        let w = faddeeva(c(0.0, 1.0)).unwrap();
        assert!((w.re - 0.427_583_576_155_807).abs() < 1e-15);
        assert_eq!(w.im, 0.0);
    }

    #[test]
    fn reflection_holds_in_lower_half_plane() {
        let z = c(1.0, 1.0);
        let lhs = faddeeva(z).unwrap();
        let rhs = 2.0 * (-(z * z)).exp() - faddeeva(-z).unwrap();
        assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn overflow_is_reported() {
        let z = c(0.0, -30.0);
        assert!(matches!(faddeeva(z), Err(Error::Overflow { .. })));
        let (lm, _) = faddeeva_log_scaled(z);
        assert!((lm - (900.0 + LN_2)).abs() < 1e-12);
    }

    #[test]
    fn log_scaled_origin() {
        let (lm, ph) = faddeeva_log_scaled(c(0.0, 0.0));
        assert_eq!((lm, ph), (0.0, 0.0));
        let (lm, ph) = faddeeva_log_scaled(c(0.0, 1.0));
        assert!((lm - 0.427_583_576_155_807f64.ln()).abs() < 1e-14);
        assert!(ph.abs() < 1e-15);
    }

    #[test]
    fn log_scaled_dominant_branch() {
        // Re(-z^2) = y^2 - x^2 = 800 with a modest phase
        let x = 0.01;
        let y = -(800.0f64 + x * x).sqrt();
        let (lm, ph) = faddeeva_log_scaled(c(x, y));
        assert!((lm - (800.0 + LN_2)).abs() < 1e-12);
        assert!(ph.is_finite());
    }

    #[test]
    fn asymptotic_domain() {
        assert!(faddeeva_asymptotic(c(1.0, 1.0), 2).is_err());
        assert!(faddeeva_asymptotic(c(10.0, 1.0), 0).is_err());
        assert!(faddeeva_asymptotic(c(10.0, 1.0), 7).is_err());
    }

    #[test]
    fn asymptotic_examples() {
        let z = Complex64::from_polar(10.0, 3.0 * PI / 4.0);
        let a = faddeeva_asymptotic(z, 2).unwrap();
        let w = faddeeva(z).unwrap();
        assert!((a - w).norm() / w.norm() < 1e-4);
        let z = Complex64::from_polar(100.0, 3.0 * PI / 4.0);
        let a = faddeeva_asymptotic(z, 1).unwrap();
        let w = faddeeva(z).unwrap();
        assert!((a - w).norm() / w.norm() < 1e-4);
    }

    #[test]
    fn moshinsky_at_origin() {
        let m = moshinsky(0.0, c(3.0, 0.0), c(0.0, 0.0), 1.7).unwrap();
        assert!((m - c(0.5, 0.0)).norm() < 1e-15);
        assert!(moshinsky(0.0, c(-1.0, 0.0), c(1.0, -0.1), 1.7).is_err());
        assert!(moshinsky(0.0, c(1.0, 0.5), c(1.0, -0.1), 1.7).is_err());
    }

    #[test]
    fn moshinsky_conjugation() {
        // conj of the defining integral maps (t, kappa) to (-conj t, -conj kappa)
        let x = 2.5;
        let t = c(4.0, -0.3);
        let k = c(0.7, -0.2);
        let m = moshinsky(x, t, k, 1.7).unwrap();
        let mirrored = moshinsky(x, -t.conj(), -k.conj(), 1.7).unwrap();
        assert!((m.conj() - mirrored).norm() < 1e-13);
        // mpmath quadrature of the integral at 30 digits
        assert!((m - c(0.411_589_287_271_72, -0.171_185_545_509_24)).norm() < 1e-10);
    }

    #[test]
    fn phase_wrapping() {
        assert!((wrap_phase(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_phase(-PI) - PI).abs() < 1e-12);
        assert!((wrap_phase(0.5) - 0.5).abs() < 1e-15);
    }
}
