//! Local affine lattice charts on a joint spectrum, integer-affine gluing,
//! the unwinding map and the counting recipe.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{apply2, cond2, det2, inv2, lstsq, Mat2};
use crate::pick::{self, IPoint};
use crate::spectrum::{JointEigenvalue, SpectrumTable, SQRT_2};
use crate::tolerances::DEFAULT as TOL;

/// Bucketed point set in the (E₁, E₂)-plane.
#[derive(Debug, Clone)]
pub struct PointCloud {
    points: Vec<(f64, f64)>,
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
    extent: i64,
}

impl PointCloud {
    pub fn new(points: Vec<(f64, f64)>, cell: f64) -> Self {
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        let key = |p: (f64, f64)| ((p.0 / cell).floor() as i64, (p.1 / cell).floor() as i64);
        let mut extent = 0;
        for (i, &p) in points.iter().enumerate() {
            let k = key(p);
            extent = extent.max(k.0.abs()).max(k.1.abs());
            buckets.entry(k).or_default().push(i);
        }
        Self { points, cell, buckets, extent: extent + 1 }
    }

    pub fn from_eigenvalues(ev: &[JointEigenvalue], h: f64) -> Self {
        Self::new(ev.iter().map(|e| (e.e1, e.e2)).collect(), 2.0 * h)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> (f64, f64) {
        self.points[i]
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    fn key(&self, p: (f64, f64)) -> (i64, i64) {
        ((p.0 / self.cell).floor() as i64, (p.1 / self.cell).floor() as i64)
    }

    fn ring(&self, c: (i64, i64), r: i64, out: &mut Vec<usize>) {
        let mut visit = |k: (i64, i64)| {
            if let Some(v) = self.buckets.get(&k) {
                out.extend_from_slice(v);
            }
        };
        if r == 0 {
            visit(c);
            return;
        }
        for d in -r..=r {
            visit((c.0 + d, c.1 - r));
            visit((c.0 + d, c.1 + r));
        }
        for d in -r + 1..r {
            visit((c.0 - r, c.1 + d));
            visit((c.0 + r, c.1 + d));
        }
    }

    /// Indices of the `k` nearest points, closest first.
    pub fn k_nearest(&self, p: (f64, f64), k: usize) -> Vec<usize> {
        let c = self.key(p);
        let reach = self.extent + c.0.abs().max(c.1.abs()) + 1;
        let mut cand = Vec::new();
        let mut r = 0;
        loop {
            self.ring(c, r, &mut cand);
            // every point within r·cell of p has been visited
            if cand.len() >= k || r > reach {
                let mut scored: Vec<(f64, usize)> = cand.iter().map(|&i| (dist(self.points[i], p), i)).collect();
                scored.sort_by(|a, b| a.0.total_cmp(&b.0));
                if r > reach || scored.get(k - 1).is_some_and(|s| s.0 <= r as f64 * self.cell) {
                    return scored.into_iter().take(k).map(|s| s.1).collect();
                }
            }
            r += 1;
        }
    }

    pub fn nearest(&self, p: (f64, f64)) -> Option<usize> {
        if self.points.is_empty() {
            None
        } else {
            self.k_nearest(p, 1).first().copied()
        }
    }

    pub fn within(&self, p: (f64, f64), radius: f64) -> Vec<usize> {
        let c = self.key(p);
        let rr = (radius / self.cell).ceil() as i64 + 1;
        let mut out = Vec::new();
        for dx in -rr..=rr {
            for dy in -rr..=rr {
                if let Some(v) = self.buckets.get(&(c.0 + dx, c.1 + dy)) {
                    out.extend(v.iter().copied().filter(|&i| dist(self.points[i], p) <= radius));
                }
            }
        }
        out
    }
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

fn round_pair(v: (f64, f64)) -> IPoint {
    (v.0.round() as i64, v.1.round() as i64)
}

fn frac_err(v: (f64, f64)) -> f64 {
    (v.0 - v.0.round()).abs().max((v.1 - v.1.round()).abs())
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ChartOptions {
    pub points: usize,
    pub residual_tol: f64,
    pub rounding_tol: f64,
    pub condition_max: f64,
    /// New charts are placed once a target leaves this fraction of the radius.
    pub step: f64,
}

impl Default for ChartOptions {
    fn default() -> Self {
        Self {
            points: 20,
            residual_tol: TOL.chart_residual,
            rounding_tol: TOL.transition_rounding,
            condition_max: TOL.chart_condition,
            step: 0.5,
        }
    }
}

/// Affine map P ↦ (linear·P + offset)/h sending nearby spectrum points to ℤ².
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatticeChart {
    pub center: (f64, f64),
    pub linear: Mat2,
    pub offset: (f64, f64),
    pub radius: f64,
    pub h: f64,
    pub residual: f64,
}

impl LatticeChart {
    pub fn value(&self, p: (f64, f64)) -> (f64, f64) {
        let v = apply2(&self.linear, p);
        ((v.0 + self.offset.0) / self.h, (v.1 + self.offset.1) / self.h)
    }

    pub fn label(&self, p: (f64, f64)) -> IPoint {
        round_pair(self.value(p))
    }

    /// Point of the straight lattice carrying label `l`.
    pub fn preimage(&self, l: IPoint) -> (f64, f64) {
        let inv = inv2(&self.linear).expect("chart linear part is invertible");
        apply2(&inv, (self.h * l.0 as f64 - self.offset.0, self.h * l.1 as f64 - self.offset.1))
    }

    pub fn covers(&self, p: (f64, f64)) -> bool {
        dist(p, self.center) <= self.radius
    }

    /// Lattice basis in the (E₁, E₂)-plane, one vector per column.
    pub fn basis(&self) -> Mat2 {
        let inv = inv2(&self.linear).expect("chart linear part is invertible");
        [[self.h * inv[0][0], self.h * inv[0][1]], [self.h * inv[1][0], self.h * inv[1][1]]]
    }
}

/// Fits a chart to the nearest `opts.points` spectrum points around `center`.
pub fn fit_local_chart(cloud: &PointCloud, center: (f64, f64), h: f64, opts: &ChartOptions) -> Result<LatticeChart> {
    if cloud.len() < 6 || opts.points < 6 {
        return Err(Error::ChartFit(format!("need at least 6 points, have {}", cloud.len().min(opts.points))));
    }
    let idx = cloud.k_nearest(center, opts.points);
    let pts: Vec<(f64, f64)> = idx.iter().map(|&i| cloud.point(i)).collect();
    let radius = dist(*pts.last().unwrap(), center) * (1.0 + 1e-9);

    let (d1, d2) = reduced_basis(&pts[..pts.len().min(12)], h)?;
    let b = [[d1.0, d2.0], [d1.1, d2.1]];
    let binv = inv2(&b).ok_or_else(|| Error::ChartFit("degenerate neighbour geometry".into()))?;
    let anchor = pts[0];
    let mut labels: Vec<IPoint> = pts.iter().map(|&p| round_pair(apply2(&binv, (p.0 - anchor.0, p.1 - anchor.1)))).collect();

    let q: Vec<(f64, f64)> = pts.iter().map(|&p| ((p.0 - center.0) / h, (p.1 - center.1) / h)).collect();
    let rows: Vec<Vec<f64>> = q.iter().map(|v| vec![v.0, v.1, 1.0]).collect();
    let mut m = [[0.0; 2]; 2];
    let mut t = (0.0, 0.0);
    for _ in 0..8 {
        let c0 = lstsq(&rows, &labels.iter().map(|l| l.0 as f64).collect::<Vec<_>>());
        let c1 = lstsq(&rows, &labels.iter().map(|l| l.1 as f64).collect::<Vec<_>>());
        let (Some(c0), Some(c1)) = (c0, c1) else {
            return Err(Error::ChartFit("rank-deficient label fit".into()));
        };
        m = [[c0[0], c0[1]], [c1[0], c1[1]]];
        t = (c0[2], c1[2]);
        let relabel: Vec<IPoint> = q.iter().map(|&v| round_pair(add(apply2(&m, v), t))).collect();
        if relabel == labels {
            break;
        }
        labels = relabel;
    }
    let residual = q
        .iter()
        .zip(&labels)
        .map(|(&v, l)| {
            let f = add(apply2(&m, v), t);
            (f.0 - l.0 as f64).abs().max((f.1 - l.1 as f64).abs())
        })
        .fold(0.0, f64::max);
    let cond = cond2(&m);
    if !(cond < opts.condition_max) {
        return Err(Error::ChartFit(format!("condition number {cond:.3e} at {center:?}")));
    }
    if residual > opts.residual_tol {
        return Err(Error::ChartFit(format!("residual {residual:.4} exceeds {} at {center:?}", opts.residual_tol)));
    }
    canonical_orientation(&mut m, &mut t);
    // absolute labels: value(P) = M P / h + τ, with τ reduced to [-½, ½)²
    let mc = apply2(&m, (center.0 / h, center.1 / h));
    let tau = (t.0 - mc.0, t.1 - mc.1);
    let tau = (tau.0 - tau.0.round(), tau.1 - tau.1.round());
    Ok(LatticeChart { center, linear: m, offset: (h * tau.0, h * tau.1), radius, h, residual })
}

fn add(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 + b.0, a.1 + b.1)
}

/// Two shortest independent difference vectors, Lagrange–Gauss reduced.
fn reduced_basis(pts: &[(f64, f64)], h: f64) -> Result<((f64, f64), (f64, f64))> {
    let mut diffs = Vec::new();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = (pts[j].0 - pts[i].0, pts[j].1 - pts[i].1);
            if d.0.hypot(d.1) > 1e-9 * h {
                diffs.push(d);
            }
        }
    }
    diffs.sort_by(|a, b| a.0.hypot(a.1).total_cmp(&b.0.hypot(b.1)));
    let d1 = *diffs.first().ok_or_else(|| Error::ChartFit("coincident points".into()))?;
    let n1 = d1.0.hypot(d1.1);
    let d2 = *diffs
        .iter()
        .find(|d| (d1.0 * d.1 - d1.1 * d.0).abs() > 0.2 * n1 * d.0.hypot(d.1))
        .ok_or_else(|| Error::ChartFit("collinear neighbourhood".into()))?;
    let (mut a, mut b) = (d1, d2);
    for _ in 0..64 {
        if b.0.hypot(b.1) < a.0.hypot(a.1) {
            std::mem::swap(&mut a, &mut b);
        }
        let mu = ((a.0 * b.0 + a.1 * b.1) / (a.0 * a.0 + a.1 * a.1)).round();
        if mu == 0.0 {
            break;
        }
        b = (b.0 - mu * a.0, b.1 - mu * a.1);
    }
    Ok((a, b))
}

/// Unimodular normalisation: first basis vector closest to the E₁ axis and
/// pointing right, positively oriented basis.
fn canonical_orientation(m: &mut Mat2, t: &mut (f64, f64)) {
    let Some(b) = inv2(m) else { return };
    let align = |c: usize| b[0][c].abs() / b[0][c].hypot(b[1][c]);
    if align(1) > align(0) {
        m.swap(0, 1);
        std::mem::swap(&mut t.0, &mut t.1);
    }
    let b = inv2(m).unwrap();
    if b[0][0] < 0.0 {
        m[0] = [-m[0][0], -m[0][1]];
        t.0 = -t.0;
    }
    if det2(m) < 0.0 {
        m[1] = [-m[1][0], -m[1][1]];
        t.1 = -t.1;
    }
}

/// Integer affine map ℓ ↦ matrix·ℓ + shift between chart labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartTransition {
    pub matrix: [[i64; 2]; 2],
    pub shift: IPoint,
    pub residual: f64,
}

impl ChartTransition {
    pub fn identity() -> Self {
        Self { matrix: [[1, 0], [0, 1]], shift: (0, 0), residual: 0.0 }
    }

    pub fn apply(&self, l: IPoint) -> IPoint {
        let m = &self.matrix;
        (m[0][0] * l.0 + m[0][1] * l.1 + self.shift.0, m[1][0] * l.0 + m[1][1] * l.1 + self.shift.1)
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Self) -> Self {
        let (a, b) = (&self.matrix, &inner.matrix);
        let matrix = [
            [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
            [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
        ];
        let s = self.apply(inner.shift);
        Self { matrix, shift: s, residual: self.residual.max(inner.residual) }
    }

    pub fn inverse(&self) -> Self {
        let m = &self.matrix;
        let d = self.det();
        let inv = [[m[1][1] * d, -m[0][1] * d], [-m[1][0] * d, m[0][0] * d]];
        let s = (
            -(inv[0][0] * self.shift.0 + inv[0][1] * self.shift.1),
            -(inv[1][0] * self.shift.0 + inv[1][1] * self.shift.1),
        );
        Self { matrix: inv, shift: s, residual: self.residual }
    }

    pub fn det(&self) -> i64 {
        self.matrix[0][0] * self.matrix[1][1] - self.matrix[0][1] * self.matrix[1][0]
    }

    pub fn trace(&self) -> i64 {
        self.matrix[0][0] + self.matrix[1][1]
    }

    pub fn is_identity(&self) -> bool {
        self.matrix == [[1, 0], [0, 1]] && self.shift == (0, 0)
    }

    /// Trace 2, determinant 1, (μ − I)² = 0 and μ ≠ I.
    pub fn is_nontrivial_unipotent(&self) -> bool {
        let n = [[self.matrix[0][0] - 1, self.matrix[0][1]], [self.matrix[1][0], self.matrix[1][1] - 1]];
        let sq = [
            [n[0][0] * n[0][0] + n[0][1] * n[1][0], n[0][0] * n[0][1] + n[0][1] * n[1][1]],
            [n[1][0] * n[0][0] + n[1][1] * n[1][0], n[1][0] * n[0][1] + n[1][1] * n[1][1]],
        ];
        self.trace() == 2 && self.det() == 1 && sq == [[0, 0], [0, 0]] && n != [[0, 0], [0, 0]]
    }

    pub fn fixes(&self, l: IPoint) -> bool {
        self.apply(l) == l
    }
}

/// Integer affine relation ℓ_to = A ℓ_from + s fitted on shared points.
pub fn relate(to: &LatticeChart, from: &LatticeChart, points: &[(f64, f64)], opts: &ChartOptions) -> Result<ChartTransition> {
    if points.len() < 6 {
        return Err(Error::Gluing(format!("overlap holds {} points, need 6", points.len())));
    }
    let src: Vec<(f64, f64)> = points.iter().map(|&p| from.value(p)).collect();
    let dst: Vec<(f64, f64)> = points.iter().map(|&p| to.value(p)).collect();
    let mean = src.iter().fold((0.0, 0.0), |a, v| (a.0 + v.0 / src.len() as f64, a.1 + v.1 / src.len() as f64));
    let rows: Vec<Vec<f64>> = src.iter().map(|v| vec![v.0 - mean.0, v.1 - mean.1, 1.0]).collect();
    let r0 = lstsq(&rows, &dst.iter().map(|v| v.0).collect::<Vec<_>>());
    let r1 = lstsq(&rows, &dst.iter().map(|v| v.1).collect::<Vec<_>>());
    let (Some(r0), Some(r1)) = (r0, r1) else {
        return Err(Error::Gluing("overlap points are collinear".into()));
    };
    let real = [[r0[0], r0[1]], [r1[0], r1[1]]];
    let matrix = [
        [real[0][0].round() as i64, real[0][1].round() as i64],
        [real[1][0].round() as i64, real[1][1].round() as i64],
    ];
    let mut residual = (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .map(|(i, j)| (real[i][j] - matrix[i][j] as f64).abs())
        .fold(0.0, f64::max);
    let mf = [[matrix[0][0] as f64, matrix[0][1] as f64], [matrix[1][0] as f64, matrix[1][1] as f64]];
    let mut shift = (0.0, 0.0);
    for (s, d) in src.iter().zip(&dst) {
        let a = apply2(&mf, *s);
        shift.0 += (d.0 - a.0) / src.len() as f64;
        shift.1 += (d.1 - a.1) / src.len() as f64;
    }
    residual = residual.max(frac_err(shift));
    let tr = ChartTransition { matrix, shift: round_pair(shift), residual };
    if residual > opts.rounding_tol {
        return Err(Error::Gluing(format!("rounding residual {residual:.3} exceeds {}", opts.rounding_tol)));
    }
    if tr.det().abs() != 1 {
        return Err(Error::Gluing(format!("transition determinant {} is not ±1", tr.det())));
    }
    Ok(tr)
}

fn overlap(cloud: &PointCloud, a: &LatticeChart, b: &LatticeChart) -> Vec<(f64, f64)> {
    cloud.within(a.center, a.radius).into_iter().map(|i| cloud.point(i)).filter(|&p| b.covers(p)).collect()
}

/// Fits a chart at `new_center` and glues it to `chart`; returns the
/// corrected chart and the raw transition (old labels from raw labels).
pub fn transport_chart(
    chart: &LatticeChart,
    new_center: (f64, f64),
    cloud: &PointCloud,
    opts: &ChartOptions,
) -> Result<(LatticeChart, ChartTransition)> {
    let raw = fit_local_chart(cloud, new_center, chart.h, opts)?;
    let shared = overlap(cloud, chart, &raw);
    let tr = relate(chart, &raw, &shared, opts)?;
    let m = [[tr.matrix[0][0] as f64, tr.matrix[0][1] as f64], [tr.matrix[1][0] as f64, tr.matrix[1][1] as f64]];
    let lin = crate::linalg::mul2(&m, &raw.linear);
    let off = apply2(&m, raw.offset);
    let corrected = LatticeChart {
        linear: lin,
        offset: (off.0 + chart.h * tr.shift.0 as f64, off.1 + chart.h * tr.shift.1 as f64),
        ..raw
    };
    Ok((corrected, tr))
}

/// Charts glued one after another along a path.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChartChain {
    pub charts: Vec<LatticeChart>,
    pub transitions: Vec<ChartTransition>,
    /// For each path point, the chart that labels it.
    pub chart_of: Vec<usize>,
}

impl ChartChain {
    pub fn along(cloud: &PointCloud, path: &[(f64, f64)], h: f64, opts: &ChartOptions) -> Result<Self> {
        let first = *path.first().ok_or_else(|| Error::Precondition("empty path".into()))?;
        let mut charts = vec![fit_local_chart(cloud, first, h, opts)?];
        let mut transitions = Vec::new();
        let mut chart_of = Vec::with_capacity(path.len());
        for (i, &p) in path.iter().enumerate() {
            loop {
                let cur = charts.last().unwrap();
                let d = dist(p, cur.center);
                if d <= opts.step * cur.radius {
                    break;
                }
                let reach = opts.step * cur.radius;
                let target = if d <= 2.0 * reach {
                    p
                } else {
                    (cur.center.0 + (p.0 - cur.center.0) * reach / d, cur.center.1 + (p.1 - cur.center.1) * reach / d)
                };
                let (next, tr) = transport_chart(cur, target, cloud, opts)
                    .map_err(|e| Error::Gluing(format!("segment ending at path point {i}: {e}")))?;
                charts.push(next);
                transitions.push(tr);
            }
            chart_of.push(charts.len() - 1);
        }
        Ok(Self { charts, transitions, chart_of })
    }

    pub fn label(&self, path_index: usize, p: (f64, f64)) -> IPoint {
        self.charts[self.chart_of[path_index]].label(p)
    }
}

/// A closed polygonal line through joint eigenvalues; the closing edge is implicit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumPolygon {
    pub vertices: Vec<JointEigenvalue>,
    pub starts_on_l0: bool,
}

impl SpectrumPolygon {
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.vertices.iter().map(|v| (v.e1, v.e2)).collect()
    }

    /// Winding number of the vertex loop about the critical value.
    pub fn winding_about_origin(&self) -> i64 {
        let p = self.points();
        let mut total = 0.0;
        for i in 0..p.len() {
            let (a, b) = (p[i], p[(i + 1) % p.len()]);
            let mut d = b.1.atan2(b.0) - a.1.atan2(a.0);
            if d > std::f64::consts::PI {
                d -= 2.0 * std::f64::consts::PI;
            } else if d < -std::f64::consts::PI {
                d += 2.0 * std::f64::consts::PI;
            }
            total += d;
        }
        (total / (2.0 * std::f64::consts::PI)).round() as i64
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Unwinding {
    pub chain: ChartChain,
    /// A₀ … A_ℓ; the last entry unwinds the starting point again.
    pub labels: Vec<IPoint>,
    /// Relation from the first chart's labels to the closing chart's labels.
    pub monodromy: ChartTransition,
    pub enclosing: bool,
    pub closed: bool,
}

/// Unwinds the polygon along a chart chain and returns the integer vertices.
pub fn unwind(polygon: &SpectrumPolygon, cloud: &PointCloud, h: f64, opts: &ChartOptions) -> Result<Unwinding> {
    let mut path = polygon.points();
    if path.len() < 3 {
        return Err(Error::Polygon("polygon needs at least 3 vertices".into()));
    }
    path.push(path[0]);
    let chain = ChartChain::along(cloud, &path, h, opts)?;
    let mut labels = Vec::with_capacity(path.len());
    for (i, &p) in path.iter().enumerate() {
        let c = &chain.charts[chain.chart_of[i]];
        let v = c.value(p);
        if frac_err(v) > opts.rounding_tol {
            return Err(Error::Gluing(format!("vertex {i} sits {:.3} off the lattice", frac_err(v))));
        }
        labels.push(round_pair(v));
    }
    let first = &chain.charts[0];
    let last = chain.charts.last().unwrap();
    let closing = if chain.charts.len() == 1 {
        ChartTransition::identity()
    } else {
        relate(last, first, &overlap(cloud, first, last), opts)?
    };
    let closed = labels[0] == *labels.last().unwrap();
    Ok(Unwinding { chain, labels, monodromy: closing, enclosing: polygon.winding_about_origin() != 0, closed })
}

/// Spectrum points fixed by the monodromy, i.e. unwound onto its invariant line.
pub fn l0_line(eigenvalues: &[JointEigenvalue], chain: &ChartChain, monodromy: &ChartTransition) -> Vec<JointEigenvalue> {
    let out: Vec<JointEigenvalue> = eigenvalues
        .iter()
        .filter(|e| {
            let p = (e.e1, e.e2);
            chain
                .charts
                .iter()
                .filter(|c| dist(p, c.center) <= 0.9 * c.radius)
                .min_by(|a, b| dist(p, a.center).total_cmp(&dist(p, b.center)))
                .is_some_and(|c| monodromy.fixes(c.label(p)))
        })
        .copied()
        .collect();
    if out.is_empty() {
        log::warn!("no eigenvalue is fixed by the monodromy inside the chart chain");
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolygonCount {
    /// Eigenvalues inside or on the polygon in the (E₁, E₂)-plane.
    pub n_spec: i64,
    /// Lattice points inside or on the unwound polygon.
    pub n_pick: i64,
    /// Interior eigenvalues unwound one by one; only for polygons that do not
    /// wind around the critical value.
    pub n_unwound: Option<i64>,
    pub enclosing: bool,
    pub unwound_vertices: Vec<IPoint>,
    pub monodromy: ChartTransition,
}

/// Counts eigenvalues inside the polygon directly and via the unwound polygon.
pub fn count_in_polygon(
    eigenvalues: &[JointEigenvalue],
    polygon: &SpectrumPolygon,
    h: f64,
    opts: &ChartOptions,
) -> Result<PolygonCount> {
    let cloud = PointCloud::from_eigenvalues(eigenvalues, h);
    let uw = unwind(polygon, &cloud, h, opts)?;
    if uw.enclosing {
        if !uw.monodromy.fixes(uw.labels[0]) {
            return Err(Error::Precondition("enclosing polygon does not start on the monodromy-invariant line".into()));
        }
        if uw.monodromy.is_identity() {
            log::warn!("enclosing loop shows trivial monodromy");
        }
    }
    if !uw.closed {
        return Err(Error::Polygon("unwound polygon does not close".into()));
    }
    let verts = &uw.labels[..uw.labels.len() - 1];
    let n_pick = pick::pick_count(verts)?;
    let n_spec = count_in_plane(eigenvalues, polygon);
    let n_unwound = if uw.enclosing { None } else { Some(count_unwound(eigenvalues, polygon, &cloud, &uw, opts)?) };
    Ok(PolygonCount { n_spec, n_pick, n_unwound, enclosing: uw.enclosing, unwound_vertices: verts.to_vec(), monodromy: uw.monodromy })
}

/// Brute-force containment over the whole spectrum; vertices are matched by identity.
pub fn count_in_plane(eigenvalues: &[JointEigenvalue], polygon: &SpectrumPolygon) -> i64 {
    let poly = polygon.points();
    let is_vertex = |e: &JointEigenvalue| polygon.vertices.iter().any(|v| v.n == e.n && v.k == e.k);
    eigenvalues.iter().filter(|e| is_vertex(e) || point_in_polygon((e.e1, e.e2), &poly)).count() as i64
}

/// Winding-number test for a float polygon.
pub fn point_in_polygon(p: (f64, f64), poly: &[(f64, f64)]) -> bool {
    let mut w = 0i32;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
        if a.1 <= p.1 {
            if b.1 > p.1 && cross > 0.0 {
                w += 1;
            }
        } else if b.1 <= p.1 && cross < 0.0 {
            w -= 1;
        }
    }
    w != 0
}

fn count_unwound(
    eigenvalues: &[JointEigenvalue],
    polygon: &SpectrumPolygon,
    cloud: &PointCloud,
    uw: &Unwinding,
    opts: &ChartOptions,
) -> Result<i64> {
    let poly = polygon.points();
    let (mut lo, mut hi) = ((f64::INFINITY, f64::INFINITY), (f64::NEG_INFINITY, f64::NEG_INFINITY));
    for p in &poly {
        lo = (lo.0.min(p.0), lo.1.min(p.1));
        hi = (hi.0.max(p.0), hi.1.max(p.1));
    }
    let pad = uw.chain.charts.iter().map(|c| c.radius).fold(0.0, f64::max);
    let verts = &uw.labels[..uw.labels.len() - 1];
    let mut pool = uw.chain.charts.clone();
    let mut count = 0;
    for e in eigenvalues {
        let p = (e.e1, e.e2);
        if p.0 < lo.0 - pad || p.0 > hi.0 + pad || p.1 < lo.1 - pad || p.1 > hi.1 + pad {
            continue;
        }
        if pick::contains_point(verts, develop_label(&mut pool, p, cloud, opts)?) {
            count += 1;
        }
    }
    Ok(count)
}

/// One transport step from `pool[from]` towards `target`; returns the new chart's index.
fn develop_step(pool: &mut Vec<LatticeChart>, from: usize, target: (f64, f64), cloud: &PointCloud, opts: &ChartOptions) -> Result<usize> {
    let cur = &pool[from];
    let d = dist(target, cur.center);
    let reach = opts.step * cur.radius;
    let next_center = if d <= 2.0 * reach {
        target
    } else {
        (cur.center.0 + (target.0 - cur.center.0) * reach / d, cur.center.1 + (target.1 - cur.center.1) * reach / d)
    };
    let (next, _) = transport_chart(cur, next_center, cloud, opts)?;
    pool.push(next);
    Ok(pool.len() - 1)
}

fn nearest_chart(pool: &[LatticeChart], p: (f64, f64)) -> usize {
    (0..pool.len()).min_by(|&a, &b| dist(p, pool[a].center).total_cmp(&dist(p, pool[b].center))).unwrap()
}

/// Label of an arbitrary point, developing `pool` until a chart covers it.
fn develop_label(pool: &mut Vec<LatticeChart>, p: (f64, f64), cloud: &PointCloud, opts: &ChartOptions) -> Result<IPoint> {
    let mut ci = nearest_chart(pool, p);
    for _ in 0..64 {
        if dist(p, pool[ci].center) <= opts.step * pool[ci].radius {
            return Ok(pool[ci].label(p));
        }
        ci = develop_step(pool, ci, p, cloud, opts)?;
    }
    Err(Error::Gluing(format!("could not develop a chart up to {p:?}")))
}

/// Eigenvalue carrying label `l`, developing `pool` along the way.
fn develop_preimage(pool: &mut Vec<LatticeChart>, l: IPoint, cloud: &PointCloud, opts: &ChartOptions) -> Result<usize> {
    let label_gap = |c: &LatticeChart| {
        let f = c.value(c.center);
        (f.0 - l.0 as f64).abs().max((f.1 - l.1 as f64).abs())
    };
    let mut ci = (0..pool.len()).min_by(|&a, &b| label_gap(&pool[a]).total_cmp(&label_gap(&pool[b]))).unwrap();
    for _ in 0..64 {
        let guess = pool[ci].preimage(l);
        if dist(guess, pool[ci].center) <= opts.step * pool[ci].radius {
            let i = cloud.nearest(guess).ok_or_else(|| Error::InsufficientData("empty spectrum".into()))?;
            if pool[ci].label(cloud.point(i)) != l {
                return Err(Error::Polygon(format!("label {l:?} has no eigenvalue")));
            }
            return Ok(i);
        }
        ci = develop_step(pool, ci, guess, cloud, opts)?;
    }
    Err(Error::Gluing(format!("could not develop a chart up to label {l:?}")))
}

/// Annulus around a centre given in (x, n) coordinates.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Ring {
    pub center: (f64, f64),
    pub inner: f64,
    pub outer: f64,
}

fn xn_to_e(p: (f64, f64), h: f64) -> (f64, f64) {
    (SQRT_2 * h * p.0, h * p.1)
}

/// 4-connected lattice path from `a` to `b`, both ends included.
pub fn staircase(a: IPoint, b: IPoint) -> Vec<IPoint> {
    let (dx, dy) = ((b.0 - a.0).abs(), (b.1 - a.1).abs());
    let (sx, sy) = ((b.0 - a.0).signum(), (b.1 - a.1).signum());
    let mut out = vec![a];
    let (mut ix, mut iy) = (0, 0);
    let mut cur = a;
    while ix < dx || iy < dy {
        let take_x = iy >= dy || (ix < dx && (2 * ix + 1) * dy < (2 * iy + 1) * dx);
        if take_x {
            ix += 1;
            cur.0 += sx;
        } else {
            iy += 1;
            cur.1 += sy;
        }
        out.push(cur);
    }
    out
}

/// Random simple polygon through joint eigenvalues inside `ring`.
///
/// Control points are drawn in the ring with angular gaps of at most
/// `max_gap`, joined by unit lattice steps in the unwound plane, and mapped
/// back to eigenvalues through a chart chain around the ring. When the ring
/// surrounds the critical value the first control lies on n = 0.
pub fn random_polygon<R: Rng>(
    eigenvalues: &[JointEigenvalue],
    h: f64,
    ring: Ring,
    max_gap: f64,
    opts: &ChartOptions,
    rng: &mut R,
) -> Result<SpectrumPolygon> {
    let cloud = PointCloud::from_eigenvalues(eigenvalues, h);
    let tau = 2.0 * std::f64::consts::PI;
    let mut angles = vec![0.0];
    loop {
        let last = *angles.last().unwrap();
        let next = last + max_gap * (0.5 + 0.5 * rng.random::<f64>());
        if next >= tau - 0.5 * max_gap {
            break;
        }
        angles.push(next);
    }
    let phase = rng.random::<f64>() * tau;
    let encloses = ring.center.0.hypot(ring.center.1) < ring.inner;
    let radius = |rng: &mut R| ring.inner + (ring.outer - ring.inner) * rng.random::<f64>();

    let start_xn = if encloses {
        let r = radius(rng);
        let on_line = eigenvalues.iter().filter(|e| e.n == 0 && e.x > 0.0).min_by(|a, b| (a.x - r).abs().total_cmp(&(b.x - r).abs()));
        let e = on_line.ok_or_else(|| Error::InsufficientData("no n = 0 eigenvalue in the ring".into()))?;
        (e.x - ring.center.0, e.n as f64 - ring.center.1)
    } else {
        let r = radius(rng);
        (r * phase.cos(), r * phase.sin())
    };
    let theta0 = start_xn.1.atan2(start_xn.0);
    let rho0 = start_xn.0.hypot(start_xn.1);

    // reference chain around the ring through the first control
    let steps = 720;
    let circle: Vec<(f64, f64)> = (0..=steps)
        .map(|s| {
            let a = theta0 + tau * s as f64 / steps as f64;
            xn_to_e((ring.center.0 + rho0 * a.cos(), ring.center.1 + rho0 * a.sin()), h)
        })
        .collect();
    let chain = ChartChain::along(&cloud, &circle, h, opts)?;

    let mut controls: Vec<(usize, IPoint)> = Vec::new();
    for (j, &a) in angles.iter().enumerate() {
        let s = ((a / tau) * steps as f64).round() as usize;
        let p = if j == 0 {
            xn_to_e((ring.center.0 + start_xn.0, ring.center.1 + start_xn.1), h)
        } else {
            let r = radius(rng);
            let t = theta0 + a;
            xn_to_e((ring.center.0 + r * t.cos(), ring.center.1 + r * t.sin()), h)
        };
        let i = cloud.nearest(p).unwrap();
        controls.push((chain.chart_of[s], chain.charts[chain.chart_of[s]].label(cloud.point(i))));
    }
    let closing_chart = *chain.chart_of.last().unwrap();
    let closing_label = chain.charts[closing_chart].label(cloud.point(cloud.nearest(circle[0]).unwrap()));
    controls.push((closing_chart, closing_label));

    let mut labels: Vec<(usize, IPoint)> = Vec::new();
    for w in controls.windows(2) {
        let ((c0, a), (c1, b)) = (w[0], w[1]);
        let mut pool = chain.charts[c0..=c1].to_vec();
        for (k, &l) in staircase(a, b).iter().enumerate() {
            if k == 0 && !labels.is_empty() {
                continue;
            }
            labels.push((develop_preimage(&mut pool, l, &cloud, opts)?, l));
        }
    }
    // the walk ends where it started; drop the repeated endpoint and spikes
    labels.pop();
    let mut simplified: Vec<(usize, IPoint)> = Vec::new();
    for item in labels {
        if simplified.len() >= 2 && simplified[simplified.len() - 2].0 == item.0 {
            simplified.pop();
            continue;
        }
        if simplified.last().is_some_and(|l| l.0 == item.0) {
            continue;
        }
        simplified.push(item);
    }
    while simplified.len() >= 3 && simplified[1].0 == simplified[simplified.len() - 1].0 {
        // spike through the starting vertex
        simplified.pop();
        simplified.remove(0);
    }
    let ids: Vec<usize> = simplified.iter().map(|s| s.0).collect();
    let mut sorted = ids.clone();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Polygon("random walk revisits an eigenvalue".into()));
    }
    pick::check_simple(&simplified.iter().map(|s| s.1).collect::<Vec<_>>())?;
    let vertices: Vec<JointEigenvalue> = ids.iter().map(|&i| eigenvalues[i]).collect();
    Ok(SpectrumPolygon { starts_on_l0: encloses && vertices[0].n == 0, vertices })
}

/// Retries [`random_polygon`] until it yields a polygon whose unwinding is simple.
pub fn random_simple_polygon<R: Rng>(
    eigenvalues: &[JointEigenvalue],
    h: f64,
    ring: Ring,
    max_gap: f64,
    opts: &ChartOptions,
    rng: &mut R,
    attempts: usize,
) -> Result<SpectrumPolygon> {
    let mut last = Error::Polygon("no attempts".into());
    for _ in 0..attempts {
        match random_polygon(eigenvalues, h, ring, max_gap, opts, rng) {
            Ok(p) => return Ok(p),
            Err(e) => last = e,
        }
    }
    Err(last)
}

pub fn spectrum_cloud(s: &SpectrumTable) -> PointCloud {
    PointCloud::from_eigenvalues(&s.eigenvalues, s.h)
}
