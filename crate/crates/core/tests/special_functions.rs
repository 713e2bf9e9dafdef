use num_complex::Complex64;
use pinch::special::*;
use proptest::prelude::*;
use std::f64::consts::{LN_2, PI};

const EULER: f64 = 0.577_215_664_901_532_9;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn close(a: Complex64, b: Complex64, rel: f64) -> bool {
    (a - b).norm() <= rel * b.norm().max(1.0)
}

// 30-digit reference values of the principal log Γ and ψ
const LOG_GAMMA_REF: [((f64, f64), (f64, f64)); 7] = [
    ((3.0, 4.0), (-1.756_626_784_603_784_1, 4.742_664_438_034_658)),
    ((0.5, 20.0), (-30.496_988_002_693_26, 39.916_729_108_473_33)),
    ((-7.3, 2.1), (-13.616_221_658_326_5, -20.164_590_466_665_88)),
    ((0.25, -0.75), (-0.169_725_085_677_072_99, 1.339_643_442_992_354_7)),
    ((45.0, 60.0), (92.410_113_178_303_36, 240.313_035_126_679_5)),
    ((-60.5, 0.3), (-189.926_781_261_729_25, -190.403_885_141_309_04)),
    ((0.6, -99.0), (-154.130_386_242_605_42, -356.074_315_168_458_45)),
];

const DIGAMMA_REF: [((f64, f64), (f64, f64)); 4] = [
    ((0.5, 3.0), (1.093_886_531_678_844, 1.570_796_306_335_550_6)),
    ((-2.5, 0.5), (1.116_508_021_969_907_3, 2.717_582_596_900_515_6)),
    ((7.0, 40.0), (3.701_887_197_499_049, 1.409_696_386_970_451_2)),
    ((-30.3, -1.0), (3.439_231_566_174_863_3, -3.105_495_826_257_288)),
];

#[test]
fn log_gamma_reference_values() {
    for ((zr, zi), (wr, wi)) in LOG_GAMMA_REF {
        let got = log_gamma(c(zr, zi)).unwrap();
        assert!(close(got, c(wr, wi), 1e-12), "z = {zr}+{zi}i: {got} vs {wr}+{wi}i");
    }
}

#[test]
fn digamma_reference_values() {
    for ((zr, zi), (wr, wi)) in DIGAMMA_REF {
        let got = digamma(c(zr, zi)).unwrap();
        assert!(close(got, c(wr, wi), 1e-10), "z = {zr}+{zi}i: {got}");
    }
}

#[test]
fn log_gamma_special_points() {
    assert!(log_gamma(c(1.0, 0.0)).unwrap().norm() < 1e-15);
    let half = log_gamma(c(0.5, 0.0)).unwrap();
    assert!((half.re - 0.5 * PI.ln()).abs() < 1e-14 && half.im == 0.0);
    let z = c(3.0, 4.0);
    let r = log_gamma(z + 1.0).unwrap() - log_gamma(z).unwrap() - z.ln();
    assert!(r.norm() < 1e-12);
}

#[test]
fn digamma_special_points() {
    assert!((digamma(c(1.0, 0.0)).unwrap().re + EULER).abs() < 1e-13);
    assert!((digamma(c(0.5, 0.0)).unwrap().re + EULER + 2.0 * LN_2).abs() < 1e-13);
    let d = digamma(c(3.5, 0.0)).unwrap() - digamma(c(2.5, 0.0)).unwrap();
    assert!((d.re - 0.4).abs() < 1e-13);
}

#[test]
fn poles_are_errors() {
    for k in 0..5 {
        assert!(log_gamma(c(-(k as f64), 0.0)).is_err());
        assert!(digamma(c(-(k as f64), 0.0)).is_err());
    }
}

#[test]
fn fourier_constant_examples() {
    assert!((fourier_constant(0.0, 0) - c(1.0, 0.0)).norm() < 1e-15);
    assert!((fourier_constant(0.0, 2) - c(-1.0, 0.0)).norm() < 1e-15);
    assert!((fourier_constant(7.3f64, 5).norm() - 1.0).abs() < 1e-12);
    assert_eq!(fourier_constant(1.3, -4), fourier_constant(1.3, 4));
    let via_input: Complex64 = fourier_constant_of(FourierConstantInput { eps: 1.3, n: -4 });
    assert_eq!(via_input, fourier_constant(1.3, 4));
}

#[test]
fn fourier_constant_matches_gamma_ratio() {
    for &(eps, n) in &[(0.7, 0i64), (-3.2, 3), (11.0, 6), (25.5, -9)] {
        let a = ((n.abs() as f64) + 1.0) / 2.0;
        let ratio = (log_gamma(c(a, eps / 2.0)).unwrap() - log_gamma(c(a, -eps / 2.0)).unwrap()).exp();
        let direct = c(0.0, -1.0).powi(n.abs() as i32) * c(0.0, eps * LN_2).exp() * ratio;
        assert!((fourier_constant(eps, n) - direct).norm() < 1e-12, "eps={eps} n={n}");
    }
}

#[test]
fn psi_examples() {
    assert_eq!(psi_n(0.0, 7), 0.0);
    assert_eq!(psi_n(3.0, 0), -psi_n(-3.0, 0));
    // 2 Im log Γ((1 + 100i)/2) to 20 digits
    assert!((psi_n(100.0f64, 0) - 291.203_967_248_375_1).abs() < 1e-10);
    let stirling = 100.0 * (50.0f64).ln() - 100.0;
    assert!((psi_n(100.0, 0) - stirling).abs() / stirling < 0.01);
}

#[test]
fn psi_prime_examples() {
    assert!((psi_n_prime(0.0, 0) + EULER + 2.0 * LN_2).abs() < 1e-12);
    assert_eq!(psi_n_prime(-2.5, 3), psi_n_prime(2.5, 3));
    let h = 1e-5;
    let fd = (psi_n(2.0 + h, 3) - psi_n(2.0 - h, 3)) / (2.0 * h);
    assert!((fd - psi_n_prime(2.0f64, 3)).abs() < 1e-6);
}

/// ∫₀^∞ r^{s+n−1} e^{−r²/2} dr with r = e^t and the trapezoid rule, which
/// converges geometrically for this doubly decaying integrand.
fn mellin_by_quadrature(s: Complex64, n: u32) -> Complex64 {
    let (t0, t1, m) = (-60.0, 4.0, 64_000);
    let dt = (t1 - t0) / m as f64;
    let mut acc = c(0.0, 0.0);
    for i in 0..=m {
        let t = t0 + i as f64 * dt;
        let r = t.exp();
        let w = if i == 0 || i == m { 0.5 } else { 1.0 };
        acc += ((s + n as f64) * t).exp() * (-0.5 * r * r).exp() * w;
    }
    acc * dt
}

#[test]
fn mellin_examples() {
    let v = mellin_gaussian(c(1.0, 0.0), 0).unwrap();
    assert!((v - c((PI / 2.0).sqrt(), 0.0)).norm() < 1e-13);
    for n in 0..6u32 {
        let v = mellin_gaussian(c(2.0 - n as f64, 0.0), n).unwrap();
        assert!((v - c(1.0, 0.0)).norm() < 1e-13, "n={n}");
    }
    let s = c(1.0, 0.7);
    let q = mellin_by_quadrature(s, 2);
    assert!((mellin_gaussian(s, 2).unwrap() - q).norm() < 1e-8 * q.norm(), "{q}");
    assert!(mellin_gaussian(c(-3.0, 1.0), 1).is_err());
}

#[test]
fn mellin_hankel_examples() {
    assert!(verify_mellin_hankel(1.3, 4) < 1e-10);
    assert!(verify_mellin_hankel(0.0, 3) < 1e-15);
}

#[test]
fn mellin_hankel_sweep() {
    let mut worst: f64 = 0.0;
    for i in -60..=60 {
        for n in 0..=12 {
            worst = worst.max(verify_mellin_hankel(0.5 * i as f64, n));
        }
    }
    assert!(worst < 1e-9, "worst residual {worst}");
}

#[test]
fn stirling_bridge() {
    for &(x, n) in &[(50.0, 0i64), (30.0, 40), (-45.0, 25), (0.5, 60), (70.0, -70)] {
        let exact = psi_n(x, n);
        let approx = psi_n_stirling(x, n.abs());
        assert!((exact - approx).abs() < 0.01 * exact.abs().max(1.0), "x={x} n={n}: {exact} vs {approx}");
    }
}

#[test]
fn single_precision_instance() {
    let z = num_complex::Complex32::new(3.0, 4.0);
    let got = log_gamma(z).unwrap();
    assert!((got.re + 1.756_626_8).abs() < 1e-4 && (got.im - 4.742_664_4).abs() < 1e-4);
}

proptest! {
    #[test]
    fn recurrence(re in 0.1f64..50.0, im in -50.0f64..50.0) {
        prop_assume!(re.hypot(im) <= 50.0);
        let z = c(re, im);
        let l0 = log_gamma(z).unwrap();
        let l1 = log_gamma(z + 1.0).unwrap();
        // compare Γ(z+1) with zΓ(z) through their ratio
        let r = (l0 + z.ln() - l1).exp() - 1.0;
        prop_assert!(r.norm() < 1e-12, "z={z} r={r}");
    }

    #[test]
    fn reflection(re in -10.0f64..10.0, im in -20.0f64..20.0) {
        prop_assume!(im.abs() > 1e-3 || (re - re.round()).abs() > 1e-3);
        let z = c(re, im);
        let one = c(1.0, 0.0);
        let lhs = log_gamma(z).unwrap() + log_gamma(one - z).unwrap() + (z * PI).sin().ln() - PI.ln();
        let v = lhs.exp();
        prop_assert!((v - one).norm() < 1e-10, "z={z} value {v}");
    }

    #[test]
    fn unit_modulus_and_conjugation(eps in -30.0f64..30.0, n in -12i64..=12) {
        let v = fourier_constant(eps, n);
        prop_assert!((v.norm() - 1.0).abs() < 1e-12);
        // i^{-|n|} is not real for odd n, hence the sign
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!((fourier_constant(-eps, n) - v.conj() * sign).norm() < 1e-12);
        prop_assert_eq!(fourier_constant(eps, -n), v);
    }

    #[test]
    fn parity(x in 0.01f64..60.0, n in -10i64..=10) {
        prop_assert_eq!(psi_n(-x, n), -psi_n(x, n));
        prop_assert_eq!(psi_n_prime(-x, n), psi_n_prime(x, n));
        prop_assert!(psi_n_prime(x, n) > psi_n_prime(0.0, n));
    }
}
