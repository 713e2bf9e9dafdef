//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use num_complex::Complex64;
use pinch::bohr_sommerfeld::{smallest_gap_champagne, smallest_gap_general, GapVariant, QuantizationModel, B_STATED};
use pinch::classical::{circle_loop, classical_monodromy, regularized_action, rotation_winding};
use pinch::gaps::*;
use pinch::lattice::*;
use pinch::pick::{check_simple, enumerate_count, pick_count, IPoint};
use pinch::special::{fourier_constant, verify_mellin_hankel};
use pinch::spectrum::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, SQRT_2};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(t: Instant, limit: Duration) -> bool {
    t.elapsed() <= limit
}

fn c1_special_functions() -> Outcome {
    let t = Instant::now();
    let (mut modulus, mut parity, mut mellin) = (0.0f64, 0.0f64, 0.0f64);
    for i in -60..=60 {
        let eps = 0.5 * i as f64;
        for n in -12i64..=12 {
            let c: Complex64 = fourier_constant(eps, n);
            modulus = modulus.max((c.norm() - 1.0).abs());
            parity = parity.max((c - fourier_constant(eps, -n)).norm());
            if n >= 0 {
                mellin = mellin.max(verify_mellin_hankel(eps, n as u32));
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    check(
        modulus < 1e-12 && parity < 1e-12 && mellin < 1e-9 && secs < 1.0,
        format!("max ||C|-1| {modulus:.1e}, max |C(e,n)-C(e,-n)| {parity:.1e}, Mellin-Hankel {mellin:.1e}, {secs:.2} s"),
    )
}

fn harmonic_line(h: f64, n: i64, grid: usize, kmax: usize) -> Vec<f64> {
    let cfg = DiscretizationConfig::new(h, 12.0 * h.sqrt(), grid);
    let op = build_radial_operator(n, &cfg, &PotentialSpec::harmonic()).unwrap();
    eigenvalues_below(&op, h * (2.0 * kmax as f64 + n.abs() as f64 + 1.5))
}

fn c2_eigensolver() -> Outcome {
    let t = Instant::now();
    let h = 0.1;
    let mut worst = 0.0f64;
    let mut complete = true;
    for n in -5i64..=5 {
        let line = harmonic_line(h, n, 32768, 10);
        complete &= line.len() == 11;
        for (k, e) in line.iter().enumerate() {
            let exact = h * (2.0 * k as f64 + n.abs() as f64 + 1.0);
            worst = worst.max((e - exact).abs() / exact);
        }
    }
    let exact = h * 9.0;
    let ratio = (harmonic_line(h, 2, 2000, 3)[3] - exact) / (harmonic_line(h, 2, 4000, 3)[3] - exact);
    check(
        complete && worst < 1e-6 && (3.5..=4.5).contains(&ratio) && within(t, Duration::from_secs(30)),
        format!("max rel error {worst:.2e} (k<=10, |n|<=5), doubling ratio {ratio:.3}, {:.1} s", t.elapsed().as_secs_f64()),
    )
}

fn c3_simplicity() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for h in [1e-2, 1e-3] {
        let t = Instant::now();
        let w = 5.0 * SQRT_2 * h;
        let s = champagne_spectrum(h, (-3, 3), (-w, w)).unwrap();
        let min_sep = s.min_separation();
        let order = 2.0 * PI * SQRT_2 * h / h.ln().abs();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for n in -3..=3 {
            let mut e: Vec<f64> = s.line(n).map(|p| p.e1).collect();
            e.sort_by(f64::total_cmp);
            for g in e.windows(2).map(|w| (w[1] - w[0]) / order) {
                lo = lo.min(g);
                hi = hi.max(g);
            }
        }
        ok &= min_sep > 0.0 && lo >= 0.5 && hi <= 2.0 && within(t, Duration::from_secs(120));
        details.push(format!("h={h:e}: {} eigenvalues, min separation {min_sep:.2e}, gap/order in [{lo:.3}, {hi:.3}]", s.eigenvalues.len()));
    }
    check(ok, details.join("; "))
}

struct Lines {
    by_h: Vec<(f64, SpectrumTable)>,
}

impl Lines {
    fn n0(&self, h: f64) -> &SpectrumTable {
        &self.by_h.iter().find(|(x, _)| *x == h).unwrap().1
    }
}

fn n0_lines() -> Lines {
    let by_h = [1e-2, 1e-3, 1e-4, 1e-5]
        .iter()
        .map(|&h| {
            let w = 10.5 * SQRT_2 * h;
            (h, champagne_spectrum(h, (0, 0), (-w, w)).unwrap())
        })
        .collect();
    Lines { by_h }
}

fn c4_gap_law(lines: &Lines) -> Outcome {
    let t = Instant::now();
    let verdict = |h: f64| {
        let m = QuantizationModel::new(B_STATED, 0.0, 0.0, h, "stated");
        compare_variants(&measure_gaps(lines.n0(h), 0, (-10.0, 10.0), &m).unwrap())
    };
    let (v4, v5) = (verdict(1e-4), verdict(1e-5));
    let constant = v4.winning_ln2_multiple(B_STATED);
    let name = |v: GapVariant| match v {
        GapVariant::General => "general",
        GapVariant::Champagne => "champagne",
    };
    check(
        v4.winner_error() <= 0.15 && v5.winner_error() < v4.winner_error() && v4.winner == v5.winner && within(t, Duration::from_secs(600)),
        format!(
            "winner {} ({}/2 ln 2 + gamma) at both h; max rel error {:.4} at h=1e-4, {:.4} at h=1e-5 (general: {:.4}, {:.4})",
            name(v4.winner),
            (2.0 * constant).round(),
            v4.winner_error(),
            v5.winner_error(),
            v4.max_rel_general,
            v5.max_rel_general
        ),
    )
}

fn c5_smallest_gap(lines: &Lines) -> Outcome {
    let rows: Vec<SmallestGapRow> = lines.by_h.iter().map(|(_, s)| smallest_gap_row(s, B_STATED).unwrap()).collect();
    let reg = regress_rows(&rows);
    let expected = 1.0 / (2.0 * PI * SQRT_2);
    let measured = rows.iter().find(|r| r.h == 1e-4).unwrap().gap_min_measured;
    let winning = smallest_gap_champagne(1e-4);
    let rel = (measured / winning - 1.0).abs();
    check(
        (reg.slope / expected - 1.0).abs() < 0.05 && reg.r_squared >= 0.995 && rel < 0.10,
        format!(
            "slope {:.5} vs {expected:.5}, R^2 {:.5}; gap_min(1e-4) {measured:.5} vs {winning:.5} (general {:.5}), rel {rel:.4}",
            reg.slope,
            reg.r_squared,
            smallest_gap_general(1e-4, B_STATED)
        ),
    )
}

fn c6_weyl() -> Outcome {
    let k = ConvexWindow::rectangle((-10.0, 10.0), (-5.5, 5.5));
    let mut rows = Vec::new();
    for h in [1e-2, 1e-3, 1e-4, 1e-5] {
        let s = spectrum_for_window(h, &k).unwrap();
        rows.push(weyl_row(&s, &k).unwrap());
    }
    let leading_ok = rows.iter().filter(|r| r.h == 1e-3 || r.h == 1e-4).all(|r| (r.n as f64 / r.predicted - 1.0).abs() <= 0.20);
    let res: Vec<f64> = rows.iter().map(|r| r.residual.abs()).collect();
    let (max, min) = (res.iter().cloned().fold(0.0, f64::max), res.iter().cloned().fold(f64::INFINITY, f64::min));
    let table: Vec<String> =
        rows.iter().map(|r| format!("h={:e} N={} pred={:.1} N/|ln h|={:.2}", r.h, r.n, r.predicted, r.n as f64 / r.lnh_abs)).collect();
    check(leading_ok && max <= 2.0 * min + 5.0, format!("{}; residual range [{min:.1}, {max:.1}]", table.join(", ")))
}

fn c7_volume() -> Outcome {
    let t = Instant::now();
    let k = ConvexWindow::rectangle((-10.0, 10.0), (-5.5, 5.5));
    match dh_volume(&k, 1e-3, 1 << 21, 2024) {
        Ok(est) => check(
            (est.ratio() - 1.0).abs() <= 0.15 && est.rel_std_error() <= 0.03 && within(t, Duration::from_secs(120)),
            format!(
                "mu/(2 pi h)^2 = {:.2} +- {:.2}, asymptotic {:.2}, ratio {:.4}, {:.1} s",
                est.mu_over_norm,
                est.std_error,
                est.asymptotic,
                est.ratio(),
                t.elapsed().as_secs_f64()
            ),
        ),
        Err(e) => Err(e.to_string()),
    }
}

fn c8_classical_monodromy() -> Outcome {
    let t = Instant::now();
    let around = circle_loop((0.0, 0.0), 0.05, 16);
    let aside = circle_loop((0.1, 0.05), 0.04, 16);
    let w = rotation_winding(&around).unwrap();
    let w0 = rotation_winding(&aside).unwrap();
    let m = classical_monodromy(&around).unwrap();
    check(
        (w.abs() - 2.0 * PI).abs() < 1e-3 && w0.abs() < 1e-3 && m == [[1, 0], [1, 1]] && within(t, Duration::from_secs(30)),
        format!("winding {w:.6} around, {w0:.1e} aside; matrix {m:?}"),
    )
}

fn homoclinic_by_simpson() -> f64 {
    let m = 2000;
    let f = |t: f64| SQRT_2 * t.sin() * t.cos() * t.cos();
    let dt = 0.5 * PI / m as f64;
    let mut s = f(0.0) + f(0.5 * PI);
    for i in 1..m {
        s += f(i as f64 * dt) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    2.0 * s * dt / 3.0
}

fn c9_regularized_action() -> Outcome {
    let oracle = homoclinic_by_simpson();
    let radii: Vec<f64> = (0..8).map(|k| 1e-3 * 0.25f64.powi(k)).collect();
    let mut limits = Vec::new();
    let mut growth_ok = true;
    for deg in [0.0f64, 45.0, 90.0, 135.0] {
        let ray = regularized_action(deg.to_radians(), &radii).unwrap();
        limits.push(ray.limit);
        for w in ray.period.windows(2) {
            growth_ok &= ((w[1] - w[0]) / (4f64.ln() / SQRT_2) - 1.0).abs() < 0.05;
        }
    }
    let spread = limits.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - limits.iter().cloned().fold(f64::INFINITY, f64::min);
    let off = limits.iter().map(|l| (l - oracle).abs()).fold(0.0, f64::max);
    check(
        spread < 1e-4 && off < 1e-4 && growth_ok,
        format!("limits {limits:.8?}, spread {spread:.1e}, max |limit - {oracle:.10}| {off:.1e}, period grows like |ln rho|/sqrt2: {growth_ok}"),
    )
}

fn star_polygon(raw: &[IPoint]) -> Vec<IPoint> {
    let c = raw.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0 as f64, a.1 + p.1 as f64));
    let c = (c.0 / raw.len() as f64 + 0.37, c.1 / raw.len() as f64 + 0.21);
    let mut v = raw.to_vec();
    v.sort_by(|a, b| {
        let ta = (a.1 as f64 - c.1).atan2(a.0 as f64 - c.0);
        let tb = (b.1 as f64 - c.1).atan2(b.0 as f64 - c.0);
        ta.total_cmp(&tb)
    });
    v.dedup();
    v
}

fn c10_quantum_monodromy() -> Outcome {
    let opts = ChartOptions::default();
    let mut details = Vec::new();
    let mut ok = true;
    for (h, ring) in [(5e-3, Ring { center: (0.0, 0.0), inner: 18.0, outer: 28.0 }), (1e-3, Ring { center: (0.0, 0.0), inner: 16.0, outer: 32.0 })] {
        let nmax = (ring.outer * 1.25) as i64;
        let s = champagne_spectrum(h, (-nmax, nmax), (-0.25, SQRT_2 * h * ring.outer * 1.25)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let (mut equal, mut total) = (0, 0);
        let mut matrices = std::collections::BTreeSet::new();
        for _ in 0..12 {
            let c = random_simple_polygon(&s.eigenvalues, h, ring, 45f64.to_radians(), &opts, &mut rng, 20)
                .and_then(|p| count_in_polygon(&s.eigenvalues, &p, h, &opts));
            total += 1;
            match c {
                Ok(c) => {
                    ok &= c.monodromy.is_nontrivial_unipotent() && c.monodromy.trace() == 2 && c.monodromy.det() == 1;
                    matrices.insert(c.monodromy.matrix);
                    if c.n_spec == c.n_pick {
                        equal += 1;
                    }
                }
                Err(e) => details.push(format!("h={h:e} polygon error: {e}")),
            }
        }
        ok &= equal >= 10;
        details.push(format!("h={h:e}: N_spec = N_pick on {equal}/{total} polygons, monodromy {matrices:?}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let mut agree = 0;
    let mut tried = 0;
    while tried < 100 {
        let m = rng.random_range(3..14);
        let raw: Vec<IPoint> = (0..m).map(|_| (rng.random_range(-40..40), rng.random_range(-40..40))).collect();
        let v = star_polygon(&raw);
        if check_simple(&v).is_err() {
            continue;
        }
        tried += 1;
        if pick_count(&v).unwrap() == enumerate_count(&v) {
            agree += 1;
        }
    }
    ok &= agree == 100;
    details.push(format!("Pick vs enumeration {agree}/100"));
    check(ok, details.join("; "))
}

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn main() {
    let start = Instant::now();
    let lines = n0_lines();
    let criteria: Vec<Criterion> = vec![
        ("special-function identities", Box::new(c1_special_functions)),
        ("harmonic oscillator oracle", Box::new(c2_eigensolver)),
        ("simple joint spectrum", Box::new(c3_simplicity)),
        ("gap law", Box::new(|| c4_gap_law(&lines))),
        ("smallest gap scaling", Box::new(|| c5_smallest_gap(&lines))),
        ("log-Weyl counting", Box::new(c6_weyl)),
        ("volume estimate", Box::new(c7_volume)),
        ("classical monodromy", Box::new(c8_classical_monodromy)),
        ("regularized action", Box::new(c9_regularized_action)),
        ("quantum monodromy and counting", Box::new(c10_quantum_monodromy)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS {:>2} {name} [{secs:.1} s]: {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {:>2} {name} [{secs:.1} s]: {d}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed in {:.1} s", criteria.len() - failed, start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
