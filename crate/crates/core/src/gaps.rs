//! Measured versus predicted gaps, the smallest-gap scaling, logarithmic
//! Weyl counting and the phase-space volume estimate.

use crate::bohr_sommerfeld::{predicted_gap, smallest_gap_champagne, smallest_gap_general, GapVariant, QuantizationModel};
use crate::classical::Orbit;
use crate::error::{Error, Result};
use crate::spectrum::{champagne_spectrum, SpectrumTable, SQRT_2};
use crate::tolerances::DEFAULT as TOL;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapRecord {
    pub h: f64,
    pub n: i64,
    pub x_mid: f64,
    pub gap_measured: f64,
    pub gap_pred_general: f64,
    pub gap_pred_champagne: f64,
    pub rel_err_general: f64,
    pub rel_err_champagne: f64,
}

impl GapRecord {
    pub const CSV_HEADER: &'static str =
        "h,n,x_mid,gap_measured,gap_pred_general,gap_pred_champagne,rel_err_general,rel_err_champagne";

    pub fn csv_row(&self) -> String {
        format!(
            "{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            self.h,
            self.n,
            self.x_mid,
            self.gap_measured,
            self.gap_pred_general,
            self.gap_pred_champagne,
            self.rel_err_general,
            self.rel_err_champagne
        )
    }
}

/// Consecutive gaps Δx on line n with both predictions at the midpoint.
pub fn measure_gaps(
    spectrum: &SpectrumTable,
    n: i64,
    x_window: (f64, f64),
    model: &QuantizationModel,
) -> Result<Vec<GapRecord>> {
    let h = spectrum.h;
    let mut x: Vec<f64> = spectrum.line(n).map(|p| p.x).filter(|&x| x >= x_window.0 && x <= x_window.1).collect();
    x.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if x.len() < 2 {
        log::warn!("line n = {n} has fewer than two eigenvalues in {:?}", x_window);
        return Ok(Vec::new());
    }
    x.windows(2)
        .map(|w| {
            let x_mid = 0.5 * (w[0] + w[1]);
            let gap = w[1] - w[0];
            let g = predicted_gap(x_mid, n, h, model, GapVariant::General)?.gap_x;
            let c = predicted_gap(x_mid, n, h, model, GapVariant::Champagne)?.gap_x;
            Ok(GapRecord {
                h,
                n,
                x_mid,
                gap_measured: gap,
                gap_pred_general: g,
                gap_pred_champagne: c,
                rel_err_general: (gap - g).abs() / g,
                rel_err_champagne: (gap - c).abs() / c,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariantVerdict {
    pub max_rel_general: f64,
    pub max_rel_champagne: f64,
    pub winner: GapVariant,
}

impl VariantVerdict {
    pub fn winner_error(&self) -> f64 {
        match self.winner {
            GapVariant::General => self.max_rel_general,
            GapVariant::Champagne => self.max_rel_champagne,
        }
    }

    /// The constant c in the smallest-gap denominator |ln h| + c ln 2 + γ.
    pub fn winning_ln2_multiple(&self, model_b: f64) -> f64 {
        match self.winner {
            GapVariant::General => (model_b + std::f64::consts::LN_2) / std::f64::consts::LN_2,
            GapVariant::Champagne => 4.5,
        }
    }
}

pub fn compare_variants(records: &[GapRecord]) -> VariantVerdict {
    let max_rel_general = records.iter().map(|r| r.rel_err_general).fold(0.0, f64::max);
    let max_rel_champagne = records.iter().map(|r| r.rel_err_champagne).fold(0.0, f64::max);
    let winner =
        if max_rel_champagne <= max_rel_general { GapVariant::Champagne } else { GapVariant::General };
    VariantVerdict { max_rel_general, max_rel_champagne, winner }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmallestGapRow {
    pub h: f64,
    pub lnh_abs: f64,
    pub x_at_min: f64,
    /// In ΔE/h = √2 Δx units.
    pub gap_min_measured: f64,
    pub gap_min_general: f64,
    pub gap_min_champagne: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_regression(x: &[f64], y: &[f64]) -> Regression {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    Regression { slope, intercept: my - slope * mx, r_squared: if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 } }
}

/// Smallest n = 0 gap in an already computed spectrum.
pub fn smallest_gap_row(spectrum: &SpectrumTable, b: f64) -> Result<SmallestGapRow> {
    let mut x = spectrum.line_x(0);
    x.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let (gap, at) = x
        .windows(2)
        .map(|w| (w[1] - w[0], 0.5 * (w[0] + w[1])))
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
        .ok_or_else(|| Error::InsufficientData("fewer than two n = 0 eigenvalues".into()))?;
    let h = spectrum.h;
    Ok(SmallestGapRow {
        h,
        lnh_abs: h.ln().abs(),
        x_at_min: at,
        gap_min_measured: SQRT_2 * gap,
        gap_min_general: smallest_gap_general(h, b),
        gap_min_champagne: smallest_gap_champagne(h),
    })
}

/// Computes the n = 0 line for each h on |x| ≤ x_half and returns the
/// smallest gaps with the regression of 1/gap_min against |ln h|.
pub fn smallest_gap_scan(h_list: &[f64], model: &QuantizationModel, x_half: f64) -> Result<(Vec<SmallestGapRow>, Regression)> {
    let mut rows = Vec::new();
    for &h in h_list {
        let w = x_half * SQRT_2 * h;
        let spec = champagne_spectrum(h, (0, 0), (-w, w))?;
        rows.push(smallest_gap_row(&spec, model.b)?);
    }
    let reg = regress_rows(&rows);
    Ok((rows, reg))
}

pub fn regress_rows(rows: &[SmallestGapRow]) -> Regression {
    let x: Vec<f64> = rows.iter().map(|r| r.lnh_abs).collect();
    let y: Vec<f64> = rows.iter().map(|r| 1.0 / r.gap_min_measured).collect();
    linear_regression(&x, &y)
}

/// Convex polygon in the (x, n) plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexWindow {
    pub vertices: Vec<(f64, f64)>,
}

impl ConvexWindow {
    pub fn rectangle(x: (f64, f64), n: (f64, f64)) -> Self {
        Self { vertices: vec![(x.0, n.0), (x.1, n.0), (x.1, n.1), (x.0, n.1)] }
    }

    /// Window of rescaled energies K ⊂ (E₁/h, E₂/h) mapped to (x, n) by M⁻¹ = diag(1/√2, 1).
    pub fn from_energy_window(vertices: &[(f64, f64)]) -> Self {
        Self { vertices: vertices.iter().map(|&(e, l)| (e / SQRT_2, l)).collect() }
    }

    pub fn scaled(&self, f: f64) -> Self {
        Self { vertices: self.vertices.iter().map(|&(x, n)| (f * x, f * n)).collect() }
    }

    pub fn area(&self) -> f64 {
        let v = &self.vertices;
        let mut s = 0.0;
        for i in 0..v.len() {
            let (a, b) = (v[i], v[(i + 1) % v.len()]);
            s += a.0 * b.1 - b.0 * a.1;
        }
        0.5 * s.abs()
    }

    pub fn bbox(&self) -> ((f64, f64), (f64, f64)) {
        let xs = self.vertices.iter().map(|v| v.0);
        let ns = self.vertices.iter().map(|v| v.1);
        (
            (xs.clone().fold(f64::INFINITY, f64::min), xs.fold(f64::NEG_INFINITY, f64::max)),
            (ns.clone().fold(f64::INFINITY, f64::min), ns.fold(f64::NEG_INFINITY, f64::max)),
        )
    }

    /// Closed containment test.
    pub fn contains(&self, p: (f64, f64)) -> bool {
        let v = &self.vertices;
        let mut sign = 0.0;
        for i in 0..v.len() {
            let (a, b) = (v[i], v[(i + 1) % v.len()]);
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross != 0.0 {
                if sign == 0.0 {
                    sign = cross.signum();
                } else if cross.signum() != sign {
                    return false;
                }
            }
        }
        true
    }

    /// The x-interval of the slice at height n, if any.
    pub fn slice(&self, n: f64) -> Option<(f64, f64)> {
        let v = &self.vertices;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..v.len() {
            let (a, b) = (v[i], v[(i + 1) % v.len()]);
            if (a.1 - n) * (b.1 - n) > 0.0 {
                continue;
            }
            if a.1 == b.1 {
                if a.1 == n {
                    lo = lo.min(a.0.min(b.0));
                    hi = hi.max(a.0.max(b.0));
                }
                continue;
            }
            let t = (n - a.1) / (b.1 - a.1);
            let x = a.0 + t * (b.0 - a.0);
            lo = lo.min(x);
            hi = hi.max(x);
        }
        (lo <= hi).then_some((lo, hi))
    }

    /// Σ_{n ∈ ℤ} length of the slice at n.
    pub fn slice_length_sum(&self) -> f64 {
        let (_, (n0, n1)) = self.bbox();
        (n0.ceil() as i64..=n1.floor() as i64).filter_map(|n| self.slice(n as f64)).map(|(a, b)| b - a).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeylRow {
    pub h: f64,
    pub lnh_abs: f64,
    pub n: usize,
    pub predicted: f64,
    pub residual: f64,
}

impl WeylRow {
    pub const CSV_HEADER: &'static str = "h,lnh_abs,N,predicted,residual";

    pub fn csv_row(&self) -> String {
        format!("{:.16e},{:.16e},{},{:.16e},{:.16e}", self.h, self.lnh_abs, self.n, self.predicted, self.residual)
    }
}

/// Number of joint eigenvalues with (x, n) in K and the leading term
/// (|ln h|/2π) Σ_n |K ∩ {n}|.
pub fn weyl_count(spectrum: &SpectrumTable, k: &ConvexWindow) -> Result<(usize, f64)> {
    let h = spectrum.h;
    let ((x0, x1), (n0, n1)) = k.bbox();
    let n_lo = n0.ceil() as i64;
    let n_hi = n1.floor() as i64;
    if n_lo > n_hi {
        return Ok((0, 0.0));
    }
    if n_lo < spectrum.n_range.0 || n_hi > spectrum.n_range.1 {
        return Err(Error::Domain(format!("window n-range [{n_lo}, {n_hi}] exceeds computed {:?}", spectrum.n_range)));
    }
    let (e0, e1) = (x0 * SQRT_2 * h, x1 * SQRT_2 * h);
    if e0 < spectrum.window.0 || e1 >= spectrum.window.1 {
        return Err(Error::Domain(format!("window E-range [{e0}, {e1}] exceeds computed {:?}", spectrum.window)));
    }
    let count = spectrum.eigenvalues.iter().filter(|p| k.contains((p.x, p.n as f64))).count();
    Ok((count, h.ln().abs() / (2.0 * PI) * k.slice_length_sum()))
}

pub fn weyl_row(spectrum: &SpectrumTable, k: &ConvexWindow) -> Result<WeylRow> {
    let (n, predicted) = weyl_count(spectrum, k)?;
    Ok(WeylRow { h: spectrum.h, lnh_abs: spectrum.h.ln().abs(), n, predicted, residual: n as f64 - predicted })
}

/// Champagne spectrum covering a window.
pub fn spectrum_for_window(h: f64, k: &ConvexWindow) -> Result<SpectrumTable> {
    let ((x0, x1), (n0, n1)) = k.bbox();
    let pad = 1e-9;
    champagne_spectrum(h, (n0.ceil() as i64, n1.floor() as i64), (x0 * SQRT_2 * h - pad, x1 * SQRT_2 * h + pad))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DhEstimate {
    pub h: f64,
    pub samples: u64,
    pub seed: u64,
    /// μ(hK)/(2πh)².
    pub mu_over_norm: f64,
    pub std_error: f64,
    /// (|ln h|/2π)|K̃₀|.
    pub asymptotic: f64,
}

impl DhEstimate {
    pub fn ratio(&self) -> f64 {
        self.mu_over_norm / self.asymptotic
    }

    pub fn rel_std_error(&self) -> f64 {
        self.std_error / self.mu_over_norm
    }
}

const SHARD: u64 = 1 << 16;

/// Monte Carlo estimate of the Liouville volume of {(H, I) ∈ hK}.
///
/// The angle variables integrate out exactly, leaving the density 2πT(E, L)
/// in (E, L) with T = 2∫₀^π dφ/√Q. Samples are uniform in hK and in
/// φ = π(1 − u²), which concentrates nodes where the orbit passes closest
/// to the pinched torus.
pub fn dh_volume(k: &ConvexWindow, h: f64, samples: u64, seed: u64) -> Result<DhEstimate> {
    if samples < 1000 {
        return Err(Error::SampleSize(format!("{samples} samples is too few")));
    }
    let ((x0, x1), (n0, n1)) = k.bbox();
    if !(x1 > x0 && n1 > n0) {
        return Err(Error::Domain("degenerate window".into()));
    }
    let shards = samples.div_ceil(SHARD);
    let partial: Vec<(f64, f64, u64)> = (0..shards)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s);
            let count = SHARD.min(samples - s * SHARD);
            let (mut sum, mut sq) = (0.0, 0.0);
            for _ in 0..count {
                let (x, n) = loop {
                    let p = (rng.random_range(x0..x1), rng.random_range(n0..n1));
                    if k.contains(p) {
                        break p;
                    }
                };
                let u: f64 = rng.random();
                let phi = PI * (1.0 - u * u);
                let v = match Orbit::new(SQRT_2 * h * x, h * n) {
                    // E_φ[1/√Q] with the Jacobian of φ(u)
                    Ok(o) => o.period_integrand(phi) * 2.0 * u,
                    Err(_) => 0.0,
                };
                sum += v;
                sq += v * v;
            }
            (sum, sq, count)
        })
        .collect();
    let (sum, sq, m) = partial.iter().fold((0.0, 0.0, 0u64), |a, p| (a.0 + p.0, a.1 + p.1, a.2 + p.2));
    let mean = sum / m as f64;
    let var = (sq / m as f64 - mean * mean).max(0.0);
    // μ(hK)/(2πh)² = √2 |K̃₀| · mean, see the density above
    let scale = SQRT_2 * k.area();
    let est = DhEstimate {
        h,
        samples: m,
        seed,
        mu_over_norm: scale * mean,
        std_error: scale * (var / m as f64).sqrt(),
        asymptotic: h.ln().abs() / (2.0 * PI) * k.area(),
    };
    if est.rel_std_error() > TOL.mc_max_rel_stderr {
        return Err(Error::SampleSize(format!(
            "relative standard error {:.3} exceeds {}",
            est.rel_std_error(),
            TOL.mc_max_rel_stderr
        )));
    }
    Ok(est)
}
