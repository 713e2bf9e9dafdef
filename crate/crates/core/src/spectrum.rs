//! Joint spectrum of Ĥ = −(h²/2)Δ + V(r), Î = (h/i)∂θ by separation of
//! variables.
//!
//! Each angular line n reduces to a radial problem in u = √r·f, discretized
//! on the half-offset grid r_j = (j + ½)δ with the flux-conservative stencil
//!
//! ```text
//! diag_j = h²/δ² + h²n²/(2r_j²) + V(r_j)
//! off_j  = −(h²/2δ²) · r_{j+½} / √(r_j r_{j+1})
//! ```
//!
//! which is symmetric and second order for every n, including n = 0.

use crate::error::{Error, Result};
use crate::tolerances::DEFAULT as TOL;
use crate::tridiagonal::SymTridiagonal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

pub const SQRT_2: f64 = std::f64::consts::SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    ChampagneBottle,
    HarmonicTest,
    CustomPolynomial,
}

/// V(r) = Σ c_k r^{2k}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    pub coefficients: Vec<f64>,
}

impl PotentialSpec {
    pub fn champagne() -> Self {
        Self { kind: PotentialKind::ChampagneBottle, coefficients: vec![0.0, -1.0, 1.0] }
    }

    /// V = r²/2, the isotropic oscillator.
    pub fn harmonic() -> Self {
        Self { kind: PotentialKind::HarmonicTest, coefficients: vec![0.0, 0.5] }
    }

    pub fn custom(coefficients: Vec<f64>) -> Result<Self> {
        let p = Self { kind: PotentialKind::CustomPolynomial, coefficients };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            PotentialKind::ChampagneBottle if self.coefficients != [0.0, -1.0, 1.0] => {
                Err(Error::Config("champagne bottle potential is fixed to r⁴ − r²".into()))
            }
            PotentialKind::HarmonicTest if self.coefficients != [0.0, 0.5] => {
                Err(Error::Config("harmonic test potential is fixed to r²/2".into()))
            }
            _ => match self.coefficients.last() {
                Some(&c) if c > 0.0 && self.coefficients.len() >= 2 => Ok(()),
                _ => Err(Error::Config("potential must be confining (leading coefficient > 0)".into())),
            },
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        let s = r * r;
        self.coefficients.iter().rev().fold(0.0, |acc, &c| acc * s + c)
    }

    /// Minimum of V over r ≥ 0, located on a scan and polished by golden section.
    pub fn min_value(&self) -> f64 {
        let r_hi = self.radius_where_at_least(self.eval(0.0).abs() + 1.0);
        let steps = 2000;
        let mut best = (0.0, self.eval(0.0));
        for i in 1..=steps {
            let r = r_hi * i as f64 / steps as f64;
            let v = self.eval(r);
            if v < best.1 {
                best = (r, v);
            }
        }
        let dr = r_hi / steps as f64;
        let (mut a, mut b) = ((best.0 - dr).max(0.0), best.0 + dr);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..100 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if self.eval(c) < self.eval(d) {
                b = d;
            } else {
                a = c;
            }
        }
        self.eval(0.5 * (a + b)).min(best.1)
    }

    /// Smallest r beyond which V stays ≥ `level`.
    pub fn radius_where_at_least(&self, level: f64) -> f64 {
        let mut hi = 1.0;
        while self.eval(hi) < level || self.eval(2.0 * hi) < self.eval(hi) {
            hi *= 2.0;
        }
        // V is eventually increasing; walk back from hi to the last crossing.
        let steps = 4096;
        let mut lo = 0.0;
        for i in (0..steps).rev() {
            let r = hi * i as f64 / steps as f64;
            if self.eval(r) < level {
                lo = r;
                break;
            }
        }
        let mut b = (lo + hi / steps as f64).min(hi);
        let mut a = lo;
        if self.eval(lo) >= level {
            return lo;
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if self.eval(m) < level {
                a = m;
            } else {
                b = m;
            }
        }
        b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Fd2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationConfig {
    pub r_max: f64,
    pub grid_points: usize,
    pub h: f64,
    pub scheme: Scheme,
}

impl DiscretizationConfig {
    pub fn new(h: f64, r_max: f64, grid_points: usize) -> Self {
        Self { r_max, grid_points, h, scheme: Scheme::Fd2 }
    }

    /// Default grid for the energy window ending at `e_max`.
    ///
    /// r_max is the larger of 1.25× the radius where V reaches 2·max(e_max, 0)
    /// and the radius where the WKB tunnelling exponent past the outer turning
    /// point reaches 36. The grid keeps the local phase advance per cell
    /// below 0.05 rad.
    pub fn default_for(h: f64, e_max: f64, potential: &PotentialSpec) -> Self {
        let level = 2.0 * e_max.max(0.0);
        let r_a = 1.25 * potential.radius_where_at_least(level);
        let r_turn = potential.radius_where_at_least(e_max);
        let mut r = r_turn;
        let mut exponent = 0.0;
        let dr = 1e-4 * r_turn.max(1.0);
        while exponent < 36.0 {
            let v = potential.eval(r + 0.5 * dr) - e_max;
            exponent += (2.0 * v.max(0.0)).sqrt() * dr / h;
            r += dr;
        }
        let r_max = r_a.max(r);
        let p_max = (2.0 * (e_max - potential.min_value()).max(0.0)).sqrt();
        let base = if h <= 1e-3 { 16384 } else { 8192 };
        let resolved = (r_max * p_max / (0.05 * h)).ceil() as usize;
        Self::new(h, r_max, base.max(resolved))
    }

    pub fn delta(&self) -> f64 {
        self.r_max / self.grid_points as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h <= 1.0) {
            return Err(Error::Config(format!("h = {} outside (0, 1]", self.h)));
        }
        if !(self.r_max > 0.0 && self.r_max.is_finite()) {
            return Err(Error::Config(format!("r_max = {} must be positive", self.r_max)));
        }
        if self.grid_points < 64 {
            return Err(Error::Config(format!("grid_points = {} below 64", self.grid_points)));
        }
        Ok(())
    }

    /// Truncation bound V(r_max) ≥ 2·E_max.
    pub fn check_window(&self, potential: &PotentialSpec, e_max: f64) -> Result<()> {
        let v = potential.eval(self.r_max);
        if v < 2.0 * e_max {
            return Err(Error::Config(format!(
                "truncation bound violated: V(r_max = {}) = {} < 2·E_max = {}",
                self.r_max,
                v,
                2.0 * e_max
            )));
        }
        Ok(())
    }
}

/// Flux-form radial operator for angular number n.
pub fn build_radial_operator(
    n: i64,
    config: &DiscretizationConfig,
    potential: &PotentialSpec,
) -> Result<SymTridiagonal<f64>> {
    config.validate()?;
    potential.validate()?;
    Ok(radial_operator_with(n, config, |r| potential.eval(r), true))
}

/// Operator assembly with an arbitrary potential; `radial = false` gives the
/// plain 1D Dirichlet stencil −(h²/2)u″ + V u.
pub fn radial_operator_with(
    n: i64,
    config: &DiscretizationConfig,
    v: impl Fn(f64) -> f64 + Sync,
    radial: bool,
) -> SymTridiagonal<f64> {
    let m = config.grid_points;
    let d = config.delta();
    let h2 = config.h * config.h;
    let kin = h2 / (d * d);
    let n2 = (n as f64) * (n as f64);
    let r = |j: usize| (j as f64 + 0.5) * d;
    let diag: Vec<f64> = (0..m)
        .map(|j| {
            let rj = r(j);
            let cent = if radial { 0.5 * h2 * n2 / (rj * rj) } else { 0.0 };
            kin + cent + v(rj)
        })
        .collect();
    let off: Vec<f64> = (0..m.saturating_sub(1))
        .map(|j| {
            if radial {
                let face = (j as f64 + 1.0) * d;
                -0.5 * kin * face / (r(j) * r(j + 1)).sqrt()
            } else {
                -0.5 * kin
            }
        })
        .collect();
    SymTridiagonal::new(diag, off)
}

/// All eigenvalues ≤ e_max, ascending.
pub fn eigenvalues_below(op: &SymTridiagonal<f64>, e_max: f64) -> Vec<f64> {
    if op.is_empty() {
        return Vec::new();
    }
    let (lo, _) = op.gershgorin();
    let hi = e_max + TOL.sturm_rel * e_max.abs().max(1.0);
    op.eigenvalues_in(lo - 1.0, hi, TOL.sturm_rel)
        .into_iter()
        .map(|(_, v)| v)
        .filter(|&v| v <= e_max)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointEigenvalue {
    pub n: i64,
    pub k: usize,
    pub e1: f64,
    pub e2: f64,
    pub h: f64,
    pub x: f64,
}

impl JointEigenvalue {
    pub fn new(h: f64, n: i64, k: usize, e1: f64) -> Self {
        Self { n, k, e1, e2: h * n as f64, h, x: e1 / (SQRT_2 * h) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTable {
    pub h: f64,
    pub window: (f64, f64),
    pub n_range: (i64, i64),
    pub eigenvalues: Vec<JointEigenvalue>,
    pub config: DiscretizationConfig,
    pub potential: PotentialSpec,
    pub empty_lines: Vec<i64>,
}

/// Provenance written next to a spectrum CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumSidecar {
    pub h: f64,
    pub window: (f64, f64),
    pub n_range: (i64, i64),
    pub config: DiscretizationConfig,
    pub potential: PotentialSpec,
    pub empty_lines: Vec<i64>,
    pub count: usize,
}

/// Joint eigenvalues with E1 in `[window.0, window.1)` for n in `n_range`.
pub fn joint_spectrum(
    h: f64,
    n_range: (i64, i64),
    window: (f64, f64),
    config: &DiscretizationConfig,
    potential: &PotentialSpec,
) -> Result<SpectrumTable> {
    if !(window.0.is_finite() && window.1.is_finite() && window.0 < window.1) {
        return Err(Error::Config(format!("invalid energy window {:?}", window)));
    }
    if n_range.0 > n_range.1 {
        return Err(Error::Config(format!("empty n range {:?}", n_range)));
    }
    if (config.h - h).abs() > 0.0 {
        return Err(Error::Config(format!("config h = {} differs from h = {}", config.h, h)));
    }
    config.validate()?;
    potential.validate()?;
    config.check_window(potential, window.1)?;

    let a_min = if n_range.0 <= 0 && n_range.1 >= 0 { 0 } else { n_range.0.abs().min(n_range.1.abs()) };
    let a_max = n_range.0.abs().max(n_range.1.abs());
    let lines: Vec<(i64, Vec<(usize, f64)>)> = (a_min..=a_max)
        .into_par_iter()
        .map(|a| {
            let op = radial_operator_with(a, config, |r| potential.eval(r), true);
            (a, op.eigenvalues_in(window.0, window.1, TOL.sturm_rel))
        })
        .collect();
    let mut eigenvalues = Vec::new();
    let mut empty_lines = Vec::new();
    for n in n_range.0..=n_range.1 {
        let line = &lines[(n.abs() - a_min) as usize].1;
        if line.is_empty() {
            empty_lines.push(n);
        }
        eigenvalues.extend(line.iter().map(|&(k, e)| JointEigenvalue::new(h, n, k, e)));
    }
    Ok(SpectrumTable { h, window, n_range, eigenvalues, config: *config, potential: potential.clone(), empty_lines })
}

/// Champagne-bottle spectrum with default discretization.
pub fn champagne_spectrum(h: f64, n_range: (i64, i64), window: (f64, f64)) -> Result<SpectrumTable> {
    let p = PotentialSpec::champagne();
    let cfg = DiscretizationConfig::default_for(h, window.1, &p);
    joint_spectrum(h, n_range, window, &cfg, &p)
}

/// (x, n) = (E1/(√2 h), E2/h); first-order linearization of the normal-form
/// coordinates at the focus-focus value.
pub fn to_epsilon_coords(e1: f64, e2: f64, h: f64) -> Result<(f64, i64)> {
    let q = e2 / h;
    if (q - q.round()).abs() >= 1e-6 {
        return Err(Error::Domain(format!("E2/h = {q} is not an integer")));
    }
    Ok((e1 / (SQRT_2 * h), q.round() as i64))
}

pub fn from_epsilon_coords(x: f64, n: i64, h: f64) -> (f64, f64) {
    (x * SQRT_2 * h, h * n as f64)
}

impl SpectrumTable {
    pub fn line(&self, n: i64) -> impl Iterator<Item = &JointEigenvalue> {
        self.eigenvalues.iter().filter(move |p| p.n == n)
    }

    pub fn line_x(&self, n: i64) -> Vec<f64> {
        self.line(n).map(|p| p.x).collect()
    }

    pub fn sidecar(&self) -> SpectrumSidecar {
        SpectrumSidecar {
            h: self.h,
            window: self.window,
            n_range: self.n_range,
            config: self.config,
            potential: self.potential.clone(),
            empty_lines: self.empty_lines.clone(),
            count: self.eigenvalues.len(),
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "h,n,k,E1,E2,x")?;
        for p in &self.eigenvalues {
            writeln!(w, "{:.16e},{},{},{:.16e},{:.16e},{:.16e}", p.h, p.n, p.k, p.e1, p.e2, p.x)?;
        }
        Ok(())
    }

    /// Reads a CSV written by [`SpectrumTable::write_csv`] together with its sidecar.
    pub fn read_csv<R: BufRead>(r: R, sidecar: SpectrumSidecar) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty spectrum file".into()))??;
        if header.trim() != "h,n,k,E1,E2,x" {
            return Err(Error::Parse(format!("unexpected header '{header}'")));
        }
        let mut eigenvalues = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(Error::Parse(format!("row {}: expected 6 fields", i + 2)));
            }
            let pf = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("row {}: {e}", i + 2)));
            let pi = |s: &str| s.trim().parse::<i64>().map_err(|e| Error::Parse(format!("row {}: {e}", i + 2)));
            eigenvalues.push(JointEigenvalue {
                h: pf(f[0])?,
                n: pi(f[1])?,
                k: pi(f[2])? as usize,
                e1: pf(f[3])?,
                e2: pf(f[4])?,
                x: pf(f[5])?,
            });
        }
        Ok(Self {
            h: sidecar.h,
            window: sidecar.window,
            n_range: sidecar.n_range,
            eigenvalues,
            config: sidecar.config,
            potential: sidecar.potential,
            empty_lines: sidecar.empty_lines,
        })
    }

    /// Minimum distance between distinct joint eigenvalues.
    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for n in self.n_range.0..=self.n_range.1 {
            let e: Vec<f64> = self.line(n).map(|p| p.e1).collect();
            for w in e.windows(2) {
                best = best.min(w[1] - w[0]);
            }
        }
        if self.n_range.1 > self.n_range.0 {
            best = best.min(self.h);
        }
        best
    }
}
