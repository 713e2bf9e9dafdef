//! Reduced classical dynamics of H = ½|p|² − r² + r⁴ at fixed angular
//! momentum L: turning points, radial action, period, rotation number,
//! the regularized action near the focus-focus value and classical
//! monodromy.
//!
//! With s = r² the turning points are roots of
//! P(s) = s³ − s² − E s + L²/2 = −s p_r²/2, with roots s0 ≤ 0 ≤ s1 ≤ s2.
//! On [√s1, √s2] write r = m + w cos φ; then p_r = w sin φ √Q with
//! Q(r) = 2 (r² − s0)(r + a)(r + b)/r², a = √s1, b = √s2, and all
//! integrals become smooth integrals over φ ∈ (0, π).

use crate::error::{Error, Result};
use crate::spectrum::SQRT_2;
use crate::tolerances::DEFAULT as TOL;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const HOMOCLINIC_ACTION: f64 = 2.0 * SQRT_2 / 3.0;

const MIN_NODES: usize = 256;
const MAX_NODES: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionSample {
    pub e: f64,
    pub l: f64,
    pub r_minus: f64,
    pub r_plus: f64,
    pub s_r: f64,
    pub t: f64,
    pub theta: f64,
    pub a_reg: f64,
    pub degenerate: bool,
}

/// Roots of the turning-point cubic for one regular value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Orbit {
    pub e: f64,
    pub l: f64,
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
}

fn cubic(s: f64, e: f64, l: f64) -> f64 {
    ((s - 1.0) * s - e) * s + 0.5 * l * l
}

fn polish(mut s: f64, e: f64, l: f64) -> f64 {
    for _ in 0..6 {
        let f = cubic(s, e, l);
        let d = (3.0 * s - 2.0) * s - e;
        if d == 0.0 {
            break;
        }
        let step = f / d;
        if !step.is_finite() || step.abs() > 1e-3 * (1.0 + s.abs()) {
            break;
        }
        s -= step;
        if step.abs() <= 1e-17 * (1.0 + s.abs()) {
            break;
        }
    }
    s
}

impl Orbit {
    pub fn new(e: f64, l: f64) -> Result<Self> {
        if !(e.is_finite() && l.is_finite()) {
            return Err(Error::Domain(format!("non-finite value ({e}, {l})")));
        }
        if l == 0.0 {
            let disc = 1.0 + 4.0 * e;
            if disc < 0.0 {
                return Err(Error::Domain(format!("E = {e} below the potential minimum")));
            }
            let root = disc.sqrt();
            let (lo, hi) = (0.5 * (1.0 - root), 0.5 * (1.0 + root));
            let (s0, s1) = if e >= 0.0 { (lo, 0.0) } else { (0.0, lo) };
            return Ok(Self { e, l, s0, s1, s2: hi });
        }
        // depressed cubic in t = s − 1/3
        let p = -e - 1.0 / 3.0;
        let q = -2.0 / 27.0 - e / 3.0 + 0.5 * l * l;
        if p >= 0.0 || 4.0 * p * p * p + 27.0 * q * q > 0.0 {
            return Err(Error::Domain(format!("no classically allowed region at (E, L) = ({e}, {l})")));
        }
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = ((3.0 * q / (2.0 * p)) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
        let th = arg.acos() / 3.0;
        let mut roots = [0.0; 3];
        for (k, r) in roots.iter_mut().enumerate() {
            *r = polish(m * (th - 2.0 * PI * k as f64 / 3.0).cos() + 1.0 / 3.0, e, l);
        }
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let (s1, s2) = (roots[1].max(0.0), roots[2]);
        if s2 <= 0.0 {
            return Err(Error::Domain(format!("no classically allowed region at (E, L) = ({e}, {l})")));
        }
        Ok(Self { e, l, s0: 1.0 - s1 - s2, s1, s2 })
    }

    pub fn r_minus(&self) -> f64 {
        self.s1.sqrt()
    }

    pub fn r_plus(&self) -> f64 {
        self.s2.sqrt()
    }

    /// L = 0 orbits with E ≥ 0 pass through the center.
    fn through_center(&self) -> bool {
        self.l == 0.0 && self.e >= 0.0
    }

    fn half_width(&self) -> f64 {
        0.5 * (self.r_plus() - self.r_minus())
    }

    /// (r, sin φ, √Q) at φ on the cos-parametrization.
    #[inline]
    fn node(&self, phi: f64) -> (f64, f64, f64) {
        let (a, b) = (self.r_minus(), self.r_plus());
        let r = 0.5 * (a + b) + 0.5 * (b - a) * phi.cos();
        let q = 2.0 * (r * r - self.s0) * (r + a) * (r + b) / (r * r);
        (r, phi.sin(), q.sqrt())
    }

    /// 1/√Q at φ; T = 2 ∫₀^π dφ/√Q.
    #[inline]
    pub fn period_integrand(&self, phi: f64) -> f64 {
        if self.through_center() {
            // r = b sin(φ/2) maps φ ∈ (0, π) to the chord; dφ' = dφ/2
            let r = self.r_plus() * (0.5 * phi).sin();
            return 0.5 / (2.0 * (r * r - self.s0)).sqrt();
        }
        1.0 / self.node(phi).2
    }
}

fn midpoint<F: Fn(f64) -> f64 + Sync>(f: &F, a: f64, b: f64, m: usize) -> f64 {
    let h = (b - a) / m as f64;
    let sum: f64 = (0..m).map(|j| f(a + (j as f64 + 0.5) * h)).sum();
    sum * h
}

/// Midpoint rule on (a, b) with node doubling until relative change < tol.
fn adaptive<F: Fn(f64) -> f64 + Sync>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let mut m = MIN_NODES;
    let mut prev = midpoint(&f, a, b, m);
    while m < MAX_NODES {
        m *= 2;
        let cur = midpoint(&f, a, b, m);
        if (cur - prev).abs() <= tol * cur.abs().max(f64::MIN_POSITIVE) {
            return cur;
        }
        prev = cur;
    }
    prev
}

pub fn turning_points(e: f64, l: f64) -> Result<(f64, f64)> {
    let o = Orbit::new(e, l)?;
    Ok((o.r_minus(), o.r_plus()))
}

/// p_r² = 2(E + r² − r⁴) − L²/r².
pub fn pr_squared(e: f64, l: f64, r: f64) -> f64 {
    let s = r * r;
    2.0 * (e + s - s * s) - l * l / s
}

/// Radial action S_r = 2∫p_r dr and radial period T = 2∫dr/p_r.
pub fn radial_action(e: f64, l: f64) -> Result<(f64, f64)> {
    let o = Orbit::new(e, l)?;
    Ok(radial_action_of(&o))
}

fn radial_action_of(o: &Orbit) -> (f64, f64) {
    let tol = TOL.quadrature_rel;
    if o.through_center() {
        let b = o.r_plus();
        if o.e == 0.0 {
            return (HOMOCLINIC_ACTION, f64::INFINITY);
        }
        let s0 = o.s0;
        let sr = adaptive(
            |phi| {
                let r = b * phi.sin();
                let c = phi.cos();
                (2.0 * (r * r - s0)).sqrt() * b * c * c
            },
            0.0,
            0.5 * PI,
            tol,
        );
        let t = adaptive(|phi| 1.0 / (2.0 * ((b * phi.sin()).powi(2) - s0)).sqrt(), 0.0, 0.5 * PI, tol);
        return (2.0 * sr, 2.0 * t);
    }
    let w = o.half_width();
    if w < 0.5e-8 {
        let r0 = 0.5 * (o.r_minus() + o.r_plus());
        let curv = -2.0 + 12.0 * r0 * r0 + 3.0 * o.l * o.l / r0.powi(4);
        return (0.0, 2.0 * PI / curv.max(f64::MIN_POSITIVE).sqrt());
    }
    let sr = adaptive(
        |phi| {
            let (_, s, q) = o.node(phi);
            s * s * q
        },
        0.0,
        PI,
        tol,
    );
    let t = adaptive(|phi| 1.0 / o.node(phi).2, 0.0, PI, tol);
    (2.0 * w * w * sr, 2.0 * t)
}

/// Angle swept per radial period, Θ = 2L∫dr/(r² p_r).
pub fn rotation_number(e: f64, l: f64) -> Result<f64> {
    if e == 0.0 && l == 0.0 {
        return Err(Error::Domain("(E, L) = (0, 0) is the focus-focus value".into()));
    }
    let o = Orbit::new(e, l)?;
    Ok(rotation_number_of(&o))
}

fn rotation_number_of(o: &Orbit) -> f64 {
    if o.l == 0.0 {
        return if o.e > 0.0 { PI } else { 0.0 };
    }
    if o.half_width() < 0.5e-8 {
        let r0 = 0.5 * (o.r_minus() + o.r_plus());
        let curv = -2.0 + 12.0 * r0 * r0 + 3.0 * o.l * o.l / r0.powi(4);
        return o.l / (r0 * r0) * 2.0 * PI / curv.sqrt();
    }
    let i = adaptive(
        |phi| {
            let (r, _, q) = o.node(phi);
            1.0 / (r * r * q)
        },
        0.0,
        PI,
        TOL.quadrature_rel,
    );
    2.0 * o.l * i
}

/// 𝐞₀ = M⁻¹(E, L) = (E/√2, L).
pub fn normal_coords(e: f64, l: f64) -> (f64, f64) {
    (e / SQRT_2, l)
}

/// Action of the cycle that closes the radial orbit with an angular
/// segment, on the branch continuous across the positive E axis.
pub fn cycle_action(s_r: f64, l: f64) -> f64 {
    if l > 0.0 {
        s_r + 2.0 * PI * l
    } else {
        s_r
    }
}

/// Ã = ∮α₀ − Re 𝐞₀ + Re 𝐞₀ ln|𝐞₀| − Im 𝐞₀ arg 𝐞₀.
pub fn regularize(e: f64, l: f64, s_r: f64) -> f64 {
    let (e1, e2) = normal_coords(e, l);
    let modulus = e1.hypot(e2);
    if modulus == 0.0 {
        return s_r;
    }
    cycle_action(s_r, l) - e1 + e1 * modulus.ln() - e2 * e2.atan2(e1)
}

/// Period with its logarithmic singularity removed: T + (1/√2) ln|𝐞₀|.
pub fn regularized_period(e: f64, l: f64, t: f64) -> f64 {
    let (e1, e2) = normal_coords(e, l);
    t + e1.hypot(e2).ln() / SQRT_2
}

pub fn action_sample(e: f64, l: f64) -> Result<ActionSample> {
    let o = Orbit::new(e, l)?;
    let (s_r, t) = radial_action_of(&o);
    let theta = if e == 0.0 && l == 0.0 { f64::NAN } else { rotation_number_of(&o) };
    Ok(ActionSample {
        e,
        l,
        r_minus: o.r_minus(),
        r_plus: o.r_plus(),
        s_r,
        t,
        theta,
        a_reg: regularize(e, l, s_r),
        degenerate: o.half_width() < 0.5e-8,
    })
}

/// Samples on a rectangular grid, in row-major (E outer) order.
pub fn action_grid(e_range: (f64, f64), l_range: (f64, f64), ne: usize, nl: usize) -> Vec<Result<ActionSample>> {
    let pts: Vec<(f64, f64)> = (0..ne)
        .flat_map(|i| {
            (0..nl).map(move |j| {
                let fe = if ne > 1 { i as f64 / (ne - 1) as f64 } else { 0.5 };
                let fl = if nl > 1 { j as f64 / (nl - 1) as f64 } else { 0.5 };
                (e_range.0 + fe * (e_range.1 - e_range.0), l_range.0 + fl * (l_range.1 - l_range.0))
            })
        })
        .collect();
    pts.par_iter().map(|&(e, l)| action_sample(e, l)).collect()
}

fn ensure_regular(e: f64, l: f64) -> Result<()> {
    let clear = TOL.critical_clearance;
    if e.hypot(l) < clear {
        return Err(Error::Domain(format!("({e}, {l}) within {clear} of the focus-focus value")));
    }
    if e < -0.25 + clear {
        return Err(Error::Domain(format!("({e}, {l}) too close to the elliptic boundary")));
    }
    Ok(())
}

/// Distance from the origin to the segment p→q.
fn segment_clearance(p: (f64, f64), q: (f64, f64)) -> f64 {
    let d = (q.0 - p.0, q.1 - p.1);
    let len2 = d.0 * d.0 + d.1 * d.1;
    let t = if len2 > 0.0 { (-(p.0 * d.0 + p.1 * d.1) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (p.0 + t * d.0).hypot(p.1 + t * d.1)
}

/// Θ on one side of the ray {L = 0, E > 0}, where it jumps by 2π.
fn theta_on_side(p: (f64, f64), side: f64) -> Result<f64> {
    if p.1 == 0.0 && p.0 > 0.0 {
        return Ok(side * PI);
    }
    rotation_number(p.0, p.1)
}

/// Continuous variation of Θ along the closed polygon `vertices` in the
/// (E, L) plane. Θ is smooth off the ray {L = 0, E > 0}; segments are split
/// where they cross it, the one-sided limits ±π are used there, and pieces
/// are subdivided until successive values differ by less than 0.25 rad.
pub fn rotation_winding(vertices: &[(f64, f64)]) -> Result<f64> {
    if vertices.len() < 3 {
        return Err(Error::Precondition("a loop needs at least three vertices".into()));
    }
    let mut pts: Vec<(f64, f64)> = vertices.to_vec();
    if pts.first() != pts.last() {
        pts.push(pts[0]);
    }
    for w in pts.windows(2) {
        ensure_regular(w[0].0, w[0].1)?;
        if segment_clearance(w[0], w[1]) < TOL.critical_clearance {
            return Err(Error::Domain(format!("segment {:?} → {:?} passes the focus-focus value", w[0], w[1])));
        }
    }
    let lerp = |p: (f64, f64), q: (f64, f64), t: f64| (p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1));
    let mut pieces = Vec::new();
    for w in pts.windows(2) {
        let (p, q) = (w[0], w[1]);
        if p.1 * q.1 < 0.0 {
            let t = p.1 / (p.1 - q.1);
            let c = (lerp(p, q, t).0, 0.0);
            if c.0 > 0.0 {
                pieces.push((p, c));
                pieces.push((c, q));
                continue;
            }
        }
        pieces.push((p, q));
    }
    let mut total = 0.0;
    for (p, q) in pieces {
        // side of the cut this piece lies on
        let mid = lerp(p, q, 0.5);
        let side = if mid.1 != 0.0 { mid.1.signum() } else { 1.0 };
        let mut stack = vec![(0.0f64, 1.0f64, theta_on_side(p, side)?, theta_on_side(q, side)?)];
        while let Some((t0, t1, th0, th1)) = stack.pop() {
            if (th1 - th0).abs() < 0.25 || t1 - t0 < 1e-9 {
                total += th1 - th0;
            } else {
                let tm = 0.5 * (t0 + t1);
                let thm = theta_on_side(lerp(p, q, tm), side)?;
                stack.push((tm, t1, thm, th1));
                stack.push((t0, tm, th0, thm));
            }
        }
    }
    Ok(total)
}

/// Holonomy of the period lattice along a closed loop, in the basis
/// (γ₁, γ₂) with γ₂ the S¹ orbit. Θ shifts by the winding W, so
/// γ₁ ↦ γ₁ + kγ₂ with k = −W/2π.
pub fn classical_monodromy(vertices: &[(f64, f64)]) -> Result<[[i64; 2]; 2]> {
    let w = rotation_winding(vertices)?;
    let k = -w / (2.0 * PI);
    if (k - k.round()).abs() > 1e-3 {
        return Err(Error::Domain(format!("winding {w} is not a multiple of 2π")));
    }
    Ok([[1, 0], [k.round() as i64, 1]])
}

/// Circle of radius ρ around `center` with `m` vertices, counter-clockwise in (E, L).
pub fn circle_loop(center: (f64, f64), rho: f64, m: usize) -> Vec<(f64, f64)> {
    (0..m)
        .map(|i| {
            let a = 2.0 * PI * (i as f64 + 0.5) / m as f64;
            (center.0 + rho * a.cos(), center.1 + rho * a.sin())
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RayLimit {
    pub angle: f64,
    pub radii: Vec<f64>,
    pub a_reg: Vec<f64>,
    pub period_reg: Vec<f64>,
    pub period: Vec<f64>,
    pub limit: f64,
    pub period_limit: f64,
}

/// Least-squares fit of y ≈ c0 + c1·ρ ln ρ + c2·ρ; returns c0.
fn extrapolate(radii: &[f64], y: &[f64]) -> f64 {
    let cols = |r: f64| [1.0, r * r.ln(), r];
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    for (&r, &v) in radii.iter().zip(y) {
        let c = cols(r);
        for i in 0..3 {
            atb[i] += c[i] * v;
            for j in 0..3 {
                ata[i][j] += c[i] * c[j];
            }
        }
    }
    crate::linalg::solve3(ata, atb).map(|s| s[0]).unwrap_or(*y.last().unwrap_or(&f64::NAN))
}

/// Ã along the ray (E, L) = ρ(cos α, sin α) for the given radii, with its
/// extrapolated limit at ρ → 0.
pub fn regularized_action(angle: f64, radii: &[f64]) -> Result<RayLimit> {
    if radii.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::Domain("ray radii must be positive".into()));
    }
    let samples: Vec<Result<ActionSample>> = radii
        .par_iter()
        .map(|&rho| action_sample(rho * angle.cos(), snap_zero(rho * angle.sin())))
        .collect();
    let mut a_reg = Vec::with_capacity(radii.len());
    let mut period = Vec::with_capacity(radii.len());
    let mut period_reg = Vec::with_capacity(radii.len());
    for s in samples {
        let s = s?;
        a_reg.push(s.a_reg);
        period.push(s.t);
        period_reg.push(regularized_period(s.e, s.l, s.t));
    }
    Ok(RayLimit {
        angle,
        radii: radii.to_vec(),
        limit: extrapolate(radii, &a_reg),
        period_limit: extrapolate(radii, &period_reg),
        a_reg,
        period_reg,
        period,
    })
}

fn snap_zero(v: f64) -> f64 {
    if v.abs() < 1e-15 {
        0.0
    } else {
        v
    }
}
