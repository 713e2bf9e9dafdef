//! Singular Bohr-Sommerfeld rule near the focus-focus value and the gap law.
//!
//! On the line ε₂ = hn the joint eigenvalues are the solutions x of
//! g_n(x; h) ∈ ℤ with
//!
//! ```text
//! 2π g_n(x) = |n|π/2 − x ln(2h) − Ψ_n(x) + B x + C n + offset
//! ```
//!
//! where `offset` collects A/h, the Maslov phase and the constant D
//! modulo 2π.

use crate::error::{Error, Result};
use crate::special::{psi_n, psi_n_prime};
use crate::spectrum::{SpectrumTable, SQRT_2};
use crate::tolerances::DEFAULT as TOL;
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI, TAU};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
/// B = (5/2) ln 2 for the Champagne bottle as stated with the constants a = √2.
pub const B_STATED: f64 = 2.5 * LN_2;
pub const A_CHAMPAGNE: f64 = SQRT_2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizationModel {
    #[serde(rename = "A", skip_serializing_if = "Option::is_none", default)]
    pub a: Option<f64>,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub offset_mod_2pi: f64,
    pub h: f64,
    pub residual: f64,
    pub source: String,
    #[serde(default)]
    pub warning: bool,
}

impl QuantizationModel {
    pub fn new(b: f64, c: f64, offset: f64, h: f64, source: &str) -> Self {
        Self { a: None, b, c, offset_mod_2pi: offset.rem_euclid(TAU), h, residual: 0.0, source: source.into(), warning: false }
    }

    /// Offset minus A/h, reduced to [0, 2π): the phase D + μπ/2.
    pub fn offset_drift(&self, a: f64) -> f64 {
        (self.offset_mod_2pi - a / self.h).rem_euclid(TAU)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapVariant {
    General,
    Champagne,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapPrediction {
    pub n: i64,
    pub x: f64,
    pub h: f64,
    pub gap_x: f64,
    pub gap_e_over_h: f64,
    pub variant: GapVariant,
}

fn check_h(h: f64) -> Result<()> {
    if !(h > 0.0 && h <= 0.05) {
        return Err(Error::ModelRange(format!("h = {h} outside (0, 0.05]")));
    }
    Ok(())
}

/// dg_n/dx.
pub fn slope(x: f64, n: i64, h: f64, model: &QuantizationModel) -> f64 {
    (model.b - (2.0 * h).ln() - psi_n_prime(x, n)) / TAU
}

fn g_raw(x: f64, n: i64, h: f64) -> f64 {
    (n.unsigned_abs() as f64 * PI / 2.0 - x * (2.0 * h).ln() - psi_n(x, n)) / TAU
}

pub fn g_n(x: f64, n: i64, h: f64, model: &QuantizationModel) -> Result<f64> {
    check_h(h)?;
    if !(x.abs() <= 100.0) {
        return Err(Error::ModelRange(format!("|x| = {} exceeds 100", x.abs())));
    }
    let s = slope(x, n, h, model);
    if s <= 0.0 {
        return Err(Error::ModelRange(format!("g_n not increasing at x = {x} (slope {s})")));
    }
    Ok(g_raw(x, n, h) + (x * model.b + n as f64 * model.c + model.offset_mod_2pi) / TAU)
}

/// Roots of g_n(x) = k in the window, ascending in k.
pub fn predict_line(n: i64, h: f64, model: &QuantizationModel, x_window: (f64, f64)) -> Result<Vec<(i64, f64)>> {
    let (lo, hi) = x_window;
    if !(lo < hi) {
        return Err(Error::ModelRange(format!("empty window {:?}", x_window)));
    }
    // Ψ' grows with |x|, so the slope is smallest at the window edge farthest from 0.
    let worst = if lo.abs() > hi.abs() { lo } else { hi };
    g_n(worst, n, h, model)?;
    let g = |x: f64| g_n(x, n, h, model);
    let (g_lo, g_hi) = (g(lo)?, g(hi)?);
    let mut out = Vec::new();
    let mut k = g_lo.ceil() as i64;
    while (k as f64) <= g_hi {
        let target = k as f64;
        let (mut a, mut b) = (lo, hi);
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if g(m)? < target {
                a = m;
            } else {
                b = m;
            }
            if b - a < 1e-9 {
                break;
            }
        }
        let mut x = 0.5 * (a + b);
        for _ in 0..20 {
            let r = g(x)? - target;
            if r.abs() < TOL.bs_root {
                break;
            }
            let step = r / slope(x, n, h, model);
            x = (x - step).clamp(a, b);
        }
        out.push((k, x));
        k += 1;
    }
    Ok(out)
}

pub fn predicted_gap(x: f64, n: i64, h: f64, model: &QuantizationModel, variant: GapVariant) -> Result<GapPrediction> {
    let denom = match variant {
        GapVariant::General => h.ln().abs() + model.b - LN_2 - psi_n_prime(x, n),
        GapVariant::Champagne => champagne_denominator(x, n, h),
    };
    if !(denom > 0.0) {
        return Err(Error::ModelRange(format!("gap denominator {denom} not positive")));
    }
    let gap_x = TAU / denom;
    Ok(GapPrediction { n, x, h, gap_x, gap_e_over_h: A_CHAMPAGNE * gap_x, variant })
}

/// |ln h| + (5/2) ln 2 − Ψ_n'(x); at (0, 0) this is |ln h| + (9/2) ln 2 + γ.
pub fn champagne_denominator(x: f64, n: i64, h: f64) -> f64 {
    h.ln().abs() + 2.5 * LN_2 - psi_n_prime(x, n)
}

/// Closed-form smallest gap 2π√2/(|ln h| + (9/2) ln 2 + γ), in ΔE/h units.
pub fn smallest_gap_champagne(h: f64) -> f64 {
    TAU * SQRT_2 / (h.ln().abs() + 4.5 * LN_2 + EULER_GAMMA)
}

/// Smallest gap from the general formula with slope constant B, in ΔE/h units.
pub fn smallest_gap_general(h: f64, b: f64) -> f64 {
    TAU * SQRT_2 / (h.ln().abs() + b - LN_2 + EULER_GAMMA + 2.0 * LN_2)
}

struct LineData {
    n: i64,
    x: Vec<f64>,
}

/// Least-squares calibration of B, C and the offset from computed lines.
pub fn fit_model(
    spectrum: &SpectrumTable,
    n_set: &[i64],
    x_window: (f64, f64),
    fix_b: Option<f64>,
) -> Result<QuantizationModel> {
    let h = spectrum.h;
    check_h(h)?;
    let mut lines = Vec::new();
    for &n in n_set {
        let mut x: Vec<f64> = spectrum.line(n).map(|p| p.x).filter(|&x| x >= x_window.0 && x <= x_window.1).collect();
        x.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if x.len() < 3 {
            return Err(Error::InsufficientData(format!("line n = {n} has {} eigenvalues in window", x.len())));
        }
        lines.push(LineData { n, x });
    }
    if lines.is_empty() {
        return Err(Error::InsufficientData("no lines selected".into()));
    }
    let fit_c = lines.iter().map(|l| l.n).collect::<std::collections::BTreeSet<_>>().len() >= 2;

    // Stage 1: B and one free offset per line with local labels 0, 1, 2, ...
    let nl = lines.len();
    let nb = usize::from(fix_b.is_none());
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for (j, line) in lines.iter().enumerate() {
        for (i, &x) in line.x.iter().enumerate() {
            let mut row = vec![0.0; nb + nl];
            if nb == 1 {
                row[0] = x / TAU;
            }
            row[nb + j] = 1.0;
            let fixed = fix_b.map_or(0.0, |b| b * x / TAU);
            rows.push(row);
            rhs.push(i as f64 - g_raw(x, line.n, h) - fixed);
        }
    }
    let sol = crate::linalg::lstsq(&rows, &rhs).ok_or_else(|| Error::InsufficientData("degenerate fit".into()))?;
    let b = fix_b.unwrap_or_else(|| sol[0]);
    let line_offsets: Vec<f64> = (0..nl).map(|j| TAU * sol[nb + j]).collect();

    // Stage 2: offsets_n ≡ C n + offset (mod 2π).
    let (c, offset) = if fit_c {
        circular_fit(&lines.iter().map(|l| l.n).collect::<Vec<_>>(), &line_offsets)
    } else {
        (0.0, circular_mean(&line_offsets))
    };

    // Stage 3: global integer labels, then a joint linear refit.
    let mut labels = Vec::new();
    for (j, line) in lines.iter().enumerate() {
        let shift = ((c * line.n as f64 + offset - line_offsets[j]) / TAU).round() as i64;
        for i in 0..line.x.len() {
            labels.push(i as i64 + shift);
        }
    }
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    let mut idx = 0;
    for line in &lines {
        for &x in &line.x {
            let mut row = Vec::with_capacity(3);
            if fix_b.is_none() {
                row.push(x / TAU);
            }
            if fit_c {
                row.push(line.n as f64 / TAU);
            }
            row.push(1.0 / TAU);
            rows.push(row);
            rhs.push(labels[idx] as f64 - g_raw(x, line.n, h) - fix_b.map_or(0.0, |b| b * x / TAU));
            idx += 1;
        }
    }
    let sol = crate::linalg::lstsq(&rows, &rhs).ok_or_else(|| Error::InsufficientData("degenerate refit".into()))?;
    let mut it = sol.into_iter();
    let b = if fix_b.is_none() { it.next().unwrap() } else { b };
    let c = if fit_c { it.next().unwrap() } else { c };
    let offset = it.next().unwrap();
    let mut model = QuantizationModel::new(b, c.rem_euclid(TAU), offset, h, "fit");
    let mut ss = 0.0;
    let mut count = 0usize;
    for line in &lines {
        for &x in &line.x {
            let g = g_raw(x, line.n, h) + (x * model.b + line.n as f64 * model.c + model.offset_mod_2pi) / TAU;
            ss += (g - g.round()).powi(2);
            count += 1;
        }
    }
    model.residual = (ss / count as f64).sqrt();
    model.warning = model.residual > TOL.fit_warn_rms;
    if model.warning {
        log::warn!("quantization fit residual {} exceeds {}", model.residual, TOL.fit_warn_rms);
    }
    Ok(model)
}

fn circular_mean(angles: &[f64]) -> f64 {
    let (s, c) = angles.iter().fold((0.0, 0.0), |(s, c), a| (s + a.sin(), c + a.cos()));
    s.atan2(c).rem_euclid(TAU)
}

/// Minimizes Σ (1 − cos(θ_n − C n − offset)) over (C, offset).
fn circular_fit(ns: &[i64], theta: &[f64]) -> (f64, f64) {
    let cost = |c: f64| {
        let resid: Vec<f64> = ns.iter().zip(theta).map(|(&n, &t)| t - c * n as f64).collect();
        let o = circular_mean(&resid);
        let v: f64 = resid.iter().map(|r| 1.0 - (r - o).cos()).sum();
        (v, o)
    };
    let nmax = ns.iter().map(|n| n.unsigned_abs()).max().unwrap_or(1).max(1) as f64;
    let steps = (400.0 * nmax) as usize;
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..steps {
        let c = TAU * i as f64 / steps as f64;
        let v = cost(c).0;
        if v < best.0 {
            best = (v, c);
        }
    }
    let dc = TAU / steps as f64;
    let (mut a, mut b) = (best.1 - dc, best.1 + dc);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let c1 = b - g * (b - a);
        let c2 = a + g * (b - a);
        if cost(c1).0 < cost(c2).0 {
            b = c2;
        } else {
            a = c1;
        }
    }
    let c = 0.5 * (a + b);
    (c.rem_euclid(TAU), cost(c).1)
}

/// Synthetic spectrum drawn exactly from a model, for round-trip checks.
pub fn synthetic_spectrum(model: &QuantizationModel, ns: &[i64], x_window: (f64, f64)) -> Result<SpectrumTable> {
    use crate::spectrum::{DiscretizationConfig, JointEigenvalue, PotentialSpec};
    let h = model.h;
    let mut eigenvalues = Vec::new();
    for &n in ns {
        for (k, x) in predict_line(n, h, model, x_window)? {
            let mut p = JointEigenvalue::new(h, n, k.max(0) as usize, x * SQRT_2 * h);
            p.x = x;
            eigenvalues.push(p);
        }
    }
    let n_lo = ns.iter().copied().min().unwrap_or(0);
    let n_hi = ns.iter().copied().max().unwrap_or(0);
    Ok(SpectrumTable {
        h,
        window: (x_window.0 * SQRT_2 * h, x_window.1 * SQRT_2 * h),
        n_range: (n_lo, n_hi),
        eigenvalues,
        config: DiscretizationConfig::new(h, 1.0, 64),
        potential: PotentialSpec::champagne(),
        empty_lines: Vec::new(),
    })
}
