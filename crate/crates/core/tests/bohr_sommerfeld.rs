use pinch::bohr_sommerfeld::*;
use pinch::classical::HOMOCLINIC_ACTION;
use pinch::special::{psi_n, psi_n_prime, psi_n_stirling};
use pinch::spectrum::{champagne_spectrum, SpectrumTable, SQRT_2};
use proptest::prelude::*;
use std::f64::consts::{LN_2, PI, TAU};
use std::sync::OnceLock;

fn stated(h: f64) -> QuantizationModel {
    QuantizationModel::new(B_STATED, 0.0, 0.0, h, "stated")
}

fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// n ∈ {−2..2}, |x| ≤ 10.5 at h = 1e-4.
fn lines_1e4() -> &'static SpectrumTable {
    static S: OnceLock<SpectrumTable> = OnceLock::new();
    S.get_or_init(|| {
        let w = 10.5 * SQRT_2 * 1e-4;
        champagne_spectrum(1e-4, (-2, 2), (-w, w)).unwrap()
    })
}

#[test]
fn trivial_model_vanishes_at_origin() {
    let m = QuantizationModel::new(0.0, 0.0, 0.0, 1e-3, "zero");
    assert_eq!(g_n(0.0, 0, 1e-3, &m).unwrap(), 0.0);
}

#[test]
fn stated_constants() {
    assert!((B_STATED - 1.732_868_0).abs() < 1e-7);
    let s = slope(0.0, 0, 1e-3, &stated(1e-3));
    // direct: (ln 1000 + (5/2)ln 2 − ln 2 + γ + 2 ln 2)/2π
    let direct = (1000f64.ln() + 2.5 * LN_2 - LN_2 + EULER_GAMMA + 2.0 * LN_2) / TAU;
    assert!((s - direct).abs() < 1e-12);
    assert!((s - 1.5774).abs() < 1e-4, "{s}");
}

#[test]
fn gap_law_values() {
    let m = stated(1e-4);
    let c = predicted_gap(0.0, 0, 1e-4, &m, GapVariant::Champagne).unwrap();
    assert!((c.gap_e_over_h - 0.68846).abs() < 1e-5, "{}", c.gap_e_over_h);
    assert!((c.gap_e_over_h - smallest_gap_champagne(1e-4)).abs() < 1e-12);
    let g = predicted_gap(0.0, 0, 1e-4, &m, GapVariant::General).unwrap();
    assert!((g.gap_e_over_h - 0.72753).abs() < 1e-5, "{}", g.gap_e_over_h);
    assert!((g.gap_e_over_h - SQRT_2 * g.gap_x).abs() < 1e-15);
    let mut prev = f64::INFINITY;
    for h in [1e-2, 1e-3, 1e-4, 1e-5, 1e-6] {
        for v in [GapVariant::General, GapVariant::Champagne] {
            assert!(predicted_gap(1.5, 2, h, &stated(h), v).unwrap().gap_x > 0.0);
        }
        let gap = predicted_gap(1.5, 2, h, &stated(h), GapVariant::General).unwrap().gap_x;
        assert!(gap < prev);
        prev = gap;
    }
}

#[test]
fn smallest_predicted_gap_is_at_the_origin() {
    let h = 1e-4;
    let m = stated(h);
    for v in [GapVariant::General, GapVariant::Champagne] {
        let g0 = predicted_gap(0.0, 0, h, &m, v).unwrap().gap_x;
        for x in [-20.0, -3.0, -0.1, 0.01, 0.7, 9.0] {
            assert!(predicted_gap(x, 0, h, &m, v).unwrap().gap_x > g0);
        }
    }
    // at the origin the general variant's denominator exceeds |ln h| by B + ln 2 + γ
    let d = TAU * SQRT_2 / smallest_gap_general(h, B_STATED) - h.ln().abs();
    assert!((d - (B_STATED + LN_2 + EULER_GAMMA)).abs() < 1e-12);
    assert!((-psi_n_prime(0.0, 0) - EULER_GAMMA - 2.0 * LN_2).abs() < 1e-12);
}

#[test]
fn line_spacing_matches_the_local_slope() {
    let h = 1e-3;
    let m = QuantizationModel::new(B_STATED, 0.4, 2.0, h, "stated");
    for n in [0i64, 1, -3] {
        let roots = predict_line(n, h, &m, (-10.0, 10.0)).unwrap();
        assert!(roots.len() > 10);
        for w in roots.windows(2) {
            assert_eq!(w[1].0, w[0].0 + 1);
            let mid = 0.5 * (w[0].1 + w[1].1);
            let spacing = w[1].1 - w[0].1;
            let expect = 1.0 / slope(mid, n, h, &m);
            assert!((spacing / expect - 1.0).abs() < 0.02, "n={n} mid={mid}");
        }
    }
}

#[test]
fn root_count_and_integer_shift() {
    let h = 1e-3;
    let m = QuantizationModel::new(B_STATED, 0.4, 2.0, h, "stated");
    let (lo, hi) = (-7.3, 8.1);
    let roots = predict_line(2, h, &m, (lo, hi)).unwrap();
    let expected = g_n(hi, 2, h, &m).unwrap().floor() - g_n(lo, 2, h, &m).unwrap().ceil() + 1.0;
    assert_eq!(roots.len() as f64, expected);

    let mut shifted = m.clone();
    shifted.offset_mod_2pi += TAU;
    let moved = predict_line(2, h, &shifted, (lo, hi)).unwrap();
    assert_eq!(moved.len(), roots.len());
    for (a, b) in roots.iter().zip(&moved) {
        assert_eq!(b.0, a.0 + 1);
        assert!((a.1 - b.1).abs() < 1e-11);
    }
}

#[test]
fn model_range_errors() {
    assert!(g_n(0.0, 0, 0.1, &stated(0.1)).is_err());
    assert!(g_n(101.0, 0, 1e-3, &stated(1e-3)).is_err());
    assert!(predict_line(0, 1e-3, &stated(1e-3), (1.0, -1.0)).is_err());
    // a large negative B makes g decreasing
    let bad = QuantizationModel::new(-20.0, 0.0, 0.0, 1e-3, "bad");
    assert!(predict_line(0, 1e-3, &bad, (-1.0, 1.0)).is_err());
}

#[test]
fn synthetic_round_trip() {
    let truth = QuantizationModel::new(2.1, 0.7, 1.3, 1e-3, "truth");
    let ns = [-2, -1, 0, 1, 2];
    let s = synthetic_spectrum(&truth, &ns, (-10.0, 10.0)).unwrap();
    let fit = fit_model(&s, &ns, (-10.0, 10.0), None).unwrap();
    assert!((fit.b - truth.b).abs() < 1e-9, "B {}", fit.b);
    assert!(circular_distance(fit.c, truth.c) < 1e-9, "C {}", fit.c);
    assert!(circular_distance(fit.offset_mod_2pi, truth.offset_mod_2pi) < 1e-9);
    assert!(fit.residual < 1e-9 && !fit.warning);

    let fixed = fit_model(&s, &ns, (-10.0, 10.0), Some(2.1)).unwrap();
    assert_eq!(fixed.b, 2.1);
    assert!(circular_distance(fixed.c, truth.c) < 1e-9);
}

#[test]
fn too_few_eigenvalues_is_an_error() {
    let truth = QuantizationModel::new(2.1, 0.7, 1.3, 1e-3, "truth");
    let s = synthetic_spectrum(&truth, &[0], (-10.0, 10.0)).unwrap();
    let x = s.line_x(0);
    assert!(fit_model(&s, &[0], (x[0] - 1e-6, x[1] + 1e-6), None).is_err());
}

#[test]
fn champagne_fit_at_small_h() {
    let s = lines_1e4();
    for p in &s.eigenvalues {
        let ratio = p.e2 / s.h;
        assert!((ratio - ratio.round()).abs() < 1e-12);
    }
    let fit = fit_model(s, &[-2, -1, 0, 1, 2], (-10.0, 10.0), None).unwrap();
    let target = 3.5 * LN_2;
    assert!((fit.b - target).abs() < 0.05 * target, "B = {}", fit.b);
    assert!(fit.residual < 0.05 && !fit.warning);
    assert!(circular_distance(fit.c, PI) < 1e-2, "C = {}", fit.c);
}

#[test]
fn offset_tracks_the_critical_action() {
    for h in [5e-4, 1e-3, 2e-3] {
        let w = 10.5 * SQRT_2 * h;
        let s = champagne_spectrum(h, (-2, 2), (-w, w)).unwrap();
        let fit = fit_model(&s, &[-2, -1, 0, 1, 2], (-10.0, 10.0), None).unwrap();
        let drift = fit.offset_drift(HOMOCLINIC_ACTION);
        assert!(circular_distance(drift, PI) < 0.15, "h={h}: drift {drift}");
    }
}

#[test]
fn stirling_form_far_from_the_pinch() {
    for x in [50.0, 65.0, 80.0, 100.0] {
        for n in [0i64, 2, 5] {
            let a = psi_n(x, n);
            assert!((a - psi_n_stirling(x, n)).abs() < 0.01 * a.abs());
        }
    }
}

proptest! {
    #[test]
    fn roots_are_polished(b in 1.5f64..3.0, c in 0.0f64..TAU, off in 0.0f64..TAU, n in -4i64..=4) {
        let h = 1e-3;
        let m = QuantizationModel::new(b, c, off, h, "prop");
        let roots = predict_line(n, h, &m, (-10.0, 10.0)).unwrap();
        for w in roots.windows(2) {
            prop_assert!(w[1].0 > w[0].0 && w[1].1 > w[0].1);
        }
        for (k, x) in roots {
            prop_assert!((g_n(x, n, h, &m).unwrap() - k as f64).abs() < 1e-12);
        }
    }
}
