//! Complex log-gamma and digamma, and the Gamma-based phases of the
//! singular quantization condition.

use crate::error::{Error, Result};
use crate::scalar::Real;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

const LANCZOS_G: f64 = 607.0 / 128.0;
const LANCZOS_COEF: [f64; 15] = [
    0.999_999_999_999_997_1,
    57.156_235_665_862_92,
    -59.597_960_355_475_49,
    14.136_097_974_741_747,
    -0.491_913_816_097_620_2,
    0.339_946_499_848_118_9e-4,
    0.465_236_289_270_485_8e-4,
    -0.983_744_753_048_795_6e-4,
    0.158_088_703_224_912_5e-3,
    -0.210_264_441_724_104_9e-3,
    0.217_439_618_115_212_6e-3,
    -0.164_318_106_536_763_9e-3,
    0.844_182_239_838_527_4e-4,
    -0.261_908_384_015_814_1e-4,
    0.368_991_826_595_316_2e-5,
];

// B_{2k} / (2k) for k = 1..7
const DIGAMMA_ASYMPT: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
];

/// Input of the Fourier constant: a rescaled energy and an angular quantum number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierConstantInput {
    pub eps: f64,
    pub n: i64,
}

fn check_pole<T: Real>(z: Complex<T>) -> Result<()> {
    if z.im == T::zero() && z.re <= T::zero() && z.re == z.re.round() {
        return Err(Error::Pole(z.re.to_f64().unwrap_or(f64::NAN)));
    }
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::Domain(format!("non-finite argument ({}, {})", z.re, z.im)));
    }
    Ok(())
}

fn lanczos_right<T: Real>(z: Complex<T>) -> Complex<T> {
    let half = T::lit(0.5);
    let mut a = Complex::new(T::lit(LANCZOS_COEF[0]), T::zero());
    for (k, &c) in LANCZOS_COEF.iter().enumerate().skip(1).rev() {
        a = a + Complex::new(T::lit(c), T::zero()) / (z + T::from_usize_lossy(k));
    }
    let t = z + T::lit(LANCZOS_G) + half;
    let half_ln_2pi = T::lit(0.918_938_533_204_672_8);
    // Γ(z) = Γ(z + 1) / z
    (z + half) * t.ln() - t + a.ln() - z.ln() + half_ln_2pi
}

/// Principal branch of log Γ(z): real on the positive axis and analytic on
/// the plane slit along the negative real axis.
pub fn log_gamma<T: Real>(z: Complex<T>) -> Result<Complex<T>> {
    check_pole(z)?;
    let half = T::lit(0.5);
    if z.re >= half {
        return Ok(lanczos_right(z));
    }
    let mut w = z;
    let mut acc = Complex::new(T::zero(), T::zero());
    while w.re < half {
        acc = acc + w.ln();
        w = w + T::one();
    }
    Ok(lanczos_right(w) - acc)
}

/// Digamma ψ(z) = Γ'(z)/Γ(z).
pub fn digamma<T: Real>(z: Complex<T>) -> Result<Complex<T>> {
    check_pole(z)?;
    let ten = T::lit(10.0);
    let mut w = z;
    let mut acc = Complex::new(T::zero(), T::zero());
    while w.re < ten {
        acc = acc - w.inv();
        w = w + T::one();
    }
    let winv = w.inv();
    let w2 = winv * winv;
    let mut series = Complex::new(T::zero(), T::zero());
    let mut p = w2;
    for &b in DIGAMMA_ASYMPT.iter() {
        series = series + p * T::lit(b);
        p = p * w2;
    }
    Ok(acc + w.ln() - winv * T::lit(0.5) - series)
}

/// Ψ_n(x) = 2 Im log Γ((ix + 1 + |n|)/2), odd in x and continuous.
pub fn psi_n<T: Real>(x: T, n: i64) -> T {
    let ax = x.abs();
    let re = T::lit(0.5) * (T::one() + T::lit(n.unsigned_abs() as f64));
    let v = T::lit(2.0) * lanczos_right(Complex::new(re, T::lit(0.5) * ax)).im;
    if x < T::zero() {
        -v
    } else {
        v
    }
}

/// Ψ_n'(x) = Re ψ((ix + 1 + |n|)/2), even in x with its minimum at x = 0.
pub fn psi_n_prime<T: Real>(x: T, n: i64) -> T {
    let re = T::lit(0.5) * (T::one() + T::lit(n.unsigned_abs() as f64));
    let w = Complex::new(re, T::lit(0.5) * x.abs());
    digamma(w).expect("Re w > 0 is never a pole").re
}

/// The unit-modulus constant C(ε,n) = i^{-|n|} 2^{iε} Γ((iε+1+|n|)/2) / Γ((−iε+1+|n|)/2).
pub fn fourier_constant<T: Real>(eps: T, n: i64) -> Complex<T> {
    let phase = eps * T::LN_2() + psi_n(eps, n);
    let e = Complex::new(phase.cos(), phase.sin());
    // multiply by i^{-|n|} exactly
    match n.unsigned_abs() % 4 {
        0 => e,
        1 => Complex::new(e.im, -e.re),
        2 => Complex::new(-e.re, -e.im),
        _ => Complex::new(-e.im, e.re),
    }
}

pub fn fourier_constant_of<T: Real>(input: FourierConstantInput) -> Complex<T> {
    fourier_constant(T::lit(input.eps), input.n)
}

/// Mellin transform of f_n(r) = r^n exp(−r²/2): 2^{(s+n)/2 − 1} Γ((s+n)/2).
pub fn mellin_gaussian<T: Real>(s: Complex<T>, n: u32) -> Result<Complex<T>> {
    let w = (s + T::lit(n as f64)) * T::lit(0.5);
    if w.re <= T::zero() {
        return Err(Error::Domain(format!("Re(s + n) = {} must be positive", w.re * T::lit(2.0))));
    }
    let lg = log_gamma(w)?;
    Ok(((w - T::one()) * T::LN_2() + lg).exp())
}

/// |M f_n(iε+1) − iⁿ C(ε,n) M f_n(−iε+1)| for the self-reciprocal Gaussian f_n.
pub fn verify_mellin_hankel<T: Real>(eps: T, n: u32) -> T {
    let s = Complex::new(T::one(), eps);
    let lhs = mellin_gaussian(s, n).expect("Re s = 1 > 0");
    let rhs = mellin_gaussian(s.conj(), n).expect("Re s = 1 > 0");
    let i_n = match n % 4 {
        0 => Complex::new(T::one(), T::zero()),
        1 => Complex::new(T::zero(), T::one()),
        2 => Complex::new(-T::one(), T::zero()),
        _ => Complex::new(T::zero(), -T::one()),
    };
    (lhs - i_n * fourier_constant(eps, n as i64) * rhs).norm()
}

/// Stirling form of Ψ_n at 𝐞 = x + in, valid for large |𝐞|.
pub fn psi_n_stirling(x: f64, n: i64) -> f64 {
    let nf = n as f64;
    let rho = x.hypot(nf);
    x * (rho / 2.0).ln() - x - nf * nf.atan2(x) + nf * std::f64::consts::FRAC_PI_2
}
