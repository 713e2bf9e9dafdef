use std::f64::consts::PI;

use pinch::bohr_sommerfeld::{fit_model, predict_line, QuantizationModel, B_STATED};
use pinch::classical::{action_grid, circle_loop, classical_monodromy, rotation_winding};
use pinch::gaps::{
    compare_variants, dh_volume, measure_gaps, regress_rows, smallest_gap_row, spectrum_for_window, weyl_row, ConvexWindow,
    GapRecord, WeylRow,
};
use pinch::lattice::{count_in_polygon, random_simple_polygon, spectrum_cloud, unwind, ChartOptions, Ring};
use pinch::special::{digamma, fourier_constant, log_gamma, mellin_gaussian, psi_n, psi_n_prime, verify_mellin_hankel};
use pinch::spectrum::{champagne_spectrum, joint_spectrum, DiscretizationConfig, PotentialSpec, SpectrumTable, SQRT_2};
use pinch::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::output::{emit_json, emit_table, sig15};
use crate::params::{key, Key, Params};
use crate::CliError;

pub const OUT: Key = key("out", "-", "output path, - for stdout");

pub const SPECTRUM: &[Key] = &[
    key("h", "1e-3", "semiclassical parameter"),
    key("n_min", "-20", "lowest angular number"),
    key("n_max", "20", "highest angular number"),
    key("e_min", "-0.24", "lower end of the E1 window"),
    key("e_max", "0.3", "upper end of the E1 window (exclusive)"),
    key("grid_points", "auto", "radial grid size"),
    key("r_max", "auto", "radial box size"),
    key("potential", "champagne", "champagne or harmonic"),
    OUT,
];

pub const BS_FIT: &[Key] = &[
    key("h", "1e-4", "semiclassical parameter"),
    key("n_min", "-2", "lowest line used"),
    key("n_max", "2", "highest line used"),
    key("x_min", "-10", "lower end of the x window"),
    key("x_max", "10", "upper end of the x window"),
    key("fix_b", "none", "hold B at this value"),
    OUT,
];

pub const BS_PREDICT: &[Key] = &[
    key("h", "1e-3", "semiclassical parameter"),
    key("n", "0", "angular number"),
    key("x_min", "-10", "lower end of the x window"),
    key("x_max", "10", "upper end of the x window"),
    key("b", "stated", "slope constant B, or 'stated' for (5/2) ln 2"),
    key("c", "0", "n-slope C"),
    key("offset", "0", "phase offset mod 2 pi"),
    key("model", "none", "model JSON written by `bs fit`; replaces b, c, offset"),
    OUT,
];

pub const GAPS: &[Key] = &[
    key("h", "1e-4", "semiclassical parameter"),
    key("n", "0", "angular number"),
    key("x_min", "-10", "lower end of the x window"),
    key("x_max", "10", "upper end of the x window"),
    key("b", "stated", "B for the general gap formula"),
    OUT,
];

pub const SMALLEST_GAP: &[Key] = &[
    key("h_list", "1e-2,1e-3,1e-4,1e-5", "comma-separated h values"),
    key("x_half", "10.5", "half-width of the x window on n = 0"),
    key("b", "stated", "B for the general gap formula"),
    OUT,
];

const WINDOW: [Key; 4] = [
    key("k_x_min", "-10", "window in x"),
    key("k_x_max", "10", "window in x"),
    key("k_n_min", "-5.5", "window in n"),
    key("k_n_max", "5.5", "window in n"),
];

pub const WEYL: &[Key] = &[key("h_list", "1e-2,1e-3,1e-4", "comma-separated h values"), WINDOW[0], WINDOW[1], WINDOW[2], WINDOW[3], OUT];

pub const DH_VOLUME: &[Key] = &[
    key("h", "1e-3", "semiclassical parameter"),
    WINDOW[0],
    WINDOW[1],
    WINDOW[2],
    WINDOW[3],
    key("samples", "2097152", "Monte Carlo samples"),
    key("seed", "2024", "random seed"),
    OUT,
];

pub const ACTIONS: &[Key] = &[
    key("e_min", "-0.2", "lowest energy"),
    key("e_max", "0.2", "highest energy"),
    key("l_min", "-0.1", "lowest angular momentum"),
    key("l_max", "0.1", "highest angular momentum"),
    key("ne", "21", "energy samples"),
    key("nl", "21", "angular momentum samples"),
    OUT,
];

pub const MONODROMY: &[Key] = &[
    key("center_e", "0", "loop centre, energy"),
    key("center_l", "0", "loop centre, angular momentum"),
    key("radius", "0.05", "loop radius"),
    key("vertices", "16", "loop vertices"),
    OUT,
];

pub const UNWIND: &[Key] = &[
    key("h", "5e-3", "semiclassical parameter"),
    key("center_x", "0", "ring centre, x"),
    key("center_n", "0", "ring centre, n"),
    key("inner", "18", "inner ring radius in (x, n) units"),
    key("outer", "28", "outer ring radius in (x, n) units"),
    key("max_gap_deg", "45", "largest angular gap between control points"),
    key("seed", "1", "random seed"),
    key("attempts", "20", "polygon draws before giving up"),
    OUT,
];

pub const COUNT: &[Key] = &[
    key("h", "5e-3", "semiclassical parameter"),
    key("center_x", "0", "ring centre, x"),
    key("center_n", "0", "ring centre, n"),
    key("inner", "18", "inner ring radius in (x, n) units"),
    key("outer", "28", "outer ring radius in (x, n) units"),
    key("max_gap_deg", "45", "largest angular gap between control points"),
    key("seed", "1", "random seed"),
    key("attempts", "20", "polygon draws before giving up"),
    key("polygons", "10", "number of random polygons"),
    OUT,
];

pub const SPECIAL: &[Key] = &[
    key("op", "C", "C, loggamma, digamma, psi, psi-prime, mellin or mellin-hankel"),
    key("eps", "0", "epsilon for C and mellin-hankel"),
    key("n", "0", "angular number"),
    key("re", "1", "real part of the argument"),
    key("im", "0", "imaginary part of the argument"),
    key("x", "0", "real argument of psi"),
];

pub fn model_b(p: &Params) -> Result<f64, CliError> {
    if p.raw("b") == "stated" {
        Ok(B_STATED)
    } else {
        p.f64("b")
    }
}

fn csv_line(values: &[String]) -> String {
    let mut s = values.join(",");
    s.push('\n');
    s
}

pub fn spectrum(p: &Params) -> Result<(), CliError> {
    let h = p.positive("h")?;
    let n_range = p.int_range("n_min", "n_max")?;
    let window = p.interval("e_min", "e_max")?;
    let potential = match p.choice("potential", &["champagne", "harmonic"])? {
        "champagne" => PotentialSpec::champagne(),
        _ => PotentialSpec::harmonic(),
    };
    let mut cfg = DiscretizationConfig::default_for(h, window.1, &potential);
    if let Some(m) = p.opt_count("grid_points")? {
        cfg.grid_points = m;
    }
    if let Some(r) = p.opt_f64("r_max")? {
        cfg.r_max = r;
    }
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    cfg.check_window(&potential, window.1).map_err(|e| CliError::Usage(e.to_string()))?;
    let s = joint_spectrum(h, n_range, window, &cfg, &potential)?;
    let mut buf = Vec::new();
    s.write_csv(&mut buf)?;
    log::info!("{} joint eigenvalues", s.eigenvalues.len());
    emit_table(p.raw("out"), &String::from_utf8_lossy(&buf), p, Some(serde_json::to_value(s.sidecar())?))
}

fn xn_spectrum(h: f64, n_range: (i64, i64), x: (f64, f64)) -> Result<SpectrumTable, CliError> {
    let pad = 0.5;
    Ok(champagne_spectrum(h, n_range, ((x.0 - pad) * SQRT_2 * h, (x.1 + pad) * SQRT_2 * h))?)
}

pub fn bs_fit(p: &Params) -> Result<(), CliError> {
    let h = p.h("h", 0.05)?;
    let (n0, n1) = p.int_range("n_min", "n_max")?;
    let x = p.interval("x_min", "x_max")?;
    let fix_b = p.opt_f64("fix_b")?;
    let s = xn_spectrum(h, (n0, n1), x)?;
    let ns: Vec<i64> = (n0..=n1).collect();
    let model = fit_model(&s, &ns, x, fix_b)?;
    if model.warning {
        eprintln!("warning: fit residual {:.4} indicates a model mismatch", model.residual);
    }
    emit_json(p.raw("out"), serde_json::to_value(&model)?, p)
}

pub fn bs_predict(p: &Params) -> Result<(), CliError> {
    let h = p.h("h", 0.05)?;
    let n = p.i64("n")?;
    let x = p.interval("x_min", "x_max")?;
    let model = if p.is_set("model") {
        let text = std::fs::read_to_string(p.raw("model")).map_err(|e| CliError::Usage(format!("--model: {e}")))?;
        let mut m: QuantizationModel = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("--model: {e}")))?;
        m.h = h;
        m
    } else {
        QuantizationModel::new(model_b(p)?, p.f64("c")?, p.f64("offset")?, h, "cli")
    };
    let roots = predict_line(n, h, &model, x)?;
    let mut out = String::from("n,k,x,E1,E2\n");
    for (k, xk) in roots {
        out.push_str(&csv_line(&[
            n.to_string(),
            k.to_string(),
            format!("{xk:.17e}"),
            format!("{:.17e}", xk * SQRT_2 * h),
            format!("{:.17e}", n as f64 * h),
        ]));
    }
    emit_table(p.raw("out"), &out, p, Some(serde_json::to_value(&model)?))
}

pub fn gap_records(h: f64, n: i64, x: (f64, f64), b: f64) -> Result<Vec<GapRecord>, CliError> {
    let s = xn_spectrum(h, (n, n), x)?;
    let model = QuantizationModel::new(b, 0.0, 0.0, h, "cli");
    Ok(measure_gaps(&s, n, x, &model)?)
}

pub fn gaps(p: &Params) -> Result<(), CliError> {
    let h = p.h("h", 0.05)?;
    let n = p.i64("n")?;
    let x = p.interval("x_min", "x_max")?;
    let rec = gap_records(h, n, x, model_b(p)?)?;
    let verdict = compare_variants(&rec);
    let mut out = format!("{}\n", GapRecord::CSV_HEADER);
    for r in &rec {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    eprintln!(
        "max relative error: general {:.4}, champagne {:.4}; winner {:?}",
        verdict.max_rel_general, verdict.max_rel_champagne, verdict.winner
    );
    emit_table(p.raw("out"), &out, p, Some(serde_json::to_value(verdict)?))
}

pub fn smallest_gap_rows(hs: &[f64], x_half: f64, b: f64) -> Result<Vec<pinch::gaps::SmallestGapRow>, CliError> {
    hs.par_iter()
        .map(|&h| {
            let w = x_half * SQRT_2 * h;
            let s = champagne_spectrum(h, (0, 0), (-w, w))?;
            Ok(smallest_gap_row(&s, b)?)
        })
        .collect()
}

pub fn smallest_gap(p: &Params) -> Result<(), CliError> {
    let hs = p.f64_list("h_list")?;
    let x_half = p.positive("x_half")?;
    let rows = smallest_gap_rows(&hs, x_half, model_b(p)?)?;
    let reg = regress_rows(&rows);
    let mut out = String::from("h,lnh_abs,x_at_min,gap_min_measured,gap_min_general,gap_min_champagne\n");
    for r in &rows {
        out.push_str(&csv_line(&[
            format!("{:.16e}", r.h),
            format!("{:.16e}", r.lnh_abs),
            format!("{:.16e}", r.x_at_min),
            format!("{:.16e}", r.gap_min_measured),
            format!("{:.16e}", r.gap_min_general),
            format!("{:.16e}", r.gap_min_champagne),
        ]));
    }
    eprintln!(
        "1/gap_min vs |ln h|: slope {:.6} (leading term {:.6}), R^2 {:.6}",
        reg.slope,
        1.0 / (2.0 * PI * SQRT_2),
        reg.r_squared
    );
    emit_table(p.raw("out"), &out, p, Some(serde_json::to_value(reg)?))
}

pub fn window(p: &Params) -> Result<ConvexWindow, CliError> {
    Ok(ConvexWindow::rectangle(p.interval("k_x_min", "k_x_max")?, p.interval("k_n_min", "k_n_max")?))
}

pub fn weyl_rows(hs: &[f64], k: &ConvexWindow) -> Result<Vec<WeylRow>, CliError> {
    hs.par_iter()
        .map(|&h| {
            let s = spectrum_for_window(h, k)?;
            Ok(weyl_row(&s, k)?)
        })
        .collect()
}

pub fn weyl(p: &Params) -> Result<(), CliError> {
    let hs = p.f64_list("h_list")?;
    let k = window(p)?;
    let rows = weyl_rows(&hs, &k)?;
    let mut out = format!("{}\n", WeylRow::CSV_HEADER);
    for r in &rows {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    emit_table(p.raw("out"), &out, p, None)
}

pub fn dh(p: &Params) -> Result<(), CliError> {
    let h = p.positive("h")?;
    let k = window(p)?;
    let samples = p.u64("samples")?;
    let est = dh_volume(&k, h, samples, p.u64("seed")?)?;
    let mut doc = serde_json::to_value(est)?;
    doc["ratio"] = json!(est.ratio());
    doc["rel_std_error"] = json!(est.rel_std_error());
    emit_json(p.raw("out"), doc, p)
}

pub fn actions(p: &Params) -> Result<(), CliError> {
    let e = p.interval("e_min", "e_max")?;
    let l = p.interval("l_min", "l_max")?;
    let (ne, nl) = (p.count("ne")?, p.count("nl")?);
    let mut out = String::from("E,L,r_minus,r_plus,S_r,T,Theta,A_reg\n");
    let mut skipped = 0;
    for s in action_grid(e, l, ne, nl) {
        match s {
            Ok(s) => out.push_str(&csv_line(
                &[s.e, s.l, s.r_minus, s.r_plus, s.s_r, s.t, s.theta, s.a_reg].map(|v| format!("{v:.16e}")),
            )),
            Err(_) => skipped += 1,
        }
    }
    if skipped > 0 {
        eprintln!("{skipped} grid points outside the image of the momentum map or at the critical value were skipped");
    }
    emit_table(p.raw("out"), &out, p, None)
}

pub fn monodromy(p: &Params) -> Result<(), CliError> {
    let c = (p.f64("center_e")?, p.f64("center_l")?);
    let r = p.positive("radius")?;
    let m = p.count("vertices")?;
    if m < 3 {
        return Err(CliError::Usage("--vertices must be at least 3".into()));
    }
    let loop_ = circle_loop(c, r, m);
    let w = rotation_winding(&loop_)?;
    let matrix = classical_monodromy(&loop_)?;
    let doc = json!({
        "winding": w,
        "winding_over_2pi": w / (2.0 * PI),
        "matrix": matrix,
        "vertices": loop_,
    });
    emit_json(p.raw("out"), doc, p)
}

struct RingSetup {
    h: f64,
    ring: Ring,
    max_gap: f64,
    seed: u64,
    attempts: usize,
}

fn ring_setup(p: &Params) -> Result<RingSetup, CliError> {
    let h = p.h("h", 0.05)?;
    let (inner, outer) = p.interval("inner", "outer")?;
    if inner <= 0.0 {
        return Err(CliError::Usage("--inner must be positive".into()));
    }
    let max_gap = p.positive("max_gap_deg")?.to_radians();
    if max_gap > PI / 2.0 {
        return Err(CliError::Usage("--max-gap-deg must not exceed 90".into()));
    }
    Ok(RingSetup {
        h,
        ring: Ring { center: (p.f64("center_x")?, p.f64("center_n")?), inner, outer },
        max_gap,
        seed: p.u64("seed")?,
        attempts: p.count("attempts")?,
    })
}

fn ring_spectrum(r: &RingSetup) -> Result<SpectrumTable, CliError> {
    let (cx, cn) = r.ring.center;
    let reach = r.ring.outer * 1.25;
    let n_range = ((cn - reach).floor() as i64, (cn + reach).ceil() as i64);
    let lo = ((cx - reach) * SQRT_2 * r.h).max(-0.25);
    Ok(champagne_spectrum(r.h, n_range, (lo, (cx + reach) * SQRT_2 * r.h))?)
}

fn polygon_doc(s: &SpectrumTable, r: &RingSetup, rng: &mut ChaCha8Rng, opts: &ChartOptions) -> Result<Value, CliError> {
    let poly = random_simple_polygon(&s.eigenvalues, r.h, r.ring, r.max_gap, opts, rng, r.attempts)?;
    let cloud = spectrum_cloud(s);
    let uw = unwind(&poly, &cloud, r.h, opts)?;
    let count = count_in_polygon(&s.eigenvalues, &poly, r.h, opts)?;
    let charts: Vec<Value> = uw
        .chain
        .charts
        .iter()
        .map(|c| json!({ "center": c.center, "basis": c.basis(), "radius": c.radius, "residual": c.residual }))
        .collect();
    let transitions: Vec<Value> =
        uw.chain.transitions.iter().map(|t| json!({ "matrix": t.matrix, "shift": t.shift, "residual": t.residual })).collect();
    let polygon: Vec<Value> =
        poly.vertices.iter().map(|v| json!({ "n": v.n, "k": v.k, "E1": v.e1, "E2": v.e2 })).collect();
    Ok(json!({
        "charts": charts,
        "transitions": transitions,
        "monodromy": count.monodromy.matrix,
        "monodromy_shift": count.monodromy.shift,
        "unipotent": count.monodromy.is_nontrivial_unipotent(),
        "enclosing": count.enclosing,
        "polygon": polygon,
        "unwound_vertices": count.unwound_vertices,
        "counts": { "spec": count.n_spec, "pick": count.n_pick, "unwound": count.n_unwound },
    }))
}

pub fn unwind_cmd(p: &Params) -> Result<(), CliError> {
    let r = ring_setup(p)?;
    let s = ring_spectrum(&r)?;
    let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
    let doc = polygon_doc(&s, &r, &mut rng, &ChartOptions::default())?;
    eprintln!("monodromy {}, counts {}", doc["monodromy"], doc["counts"]);
    emit_json(p.raw("out"), doc, p)
}

pub fn count(p: &Params) -> Result<(), CliError> {
    let r = ring_setup(p)?;
    let m = p.count("polygons")?;
    let s = ring_spectrum(&r)?;
    let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
    let opts = ChartOptions::default();
    let mut docs = Vec::new();
    let mut equal = 0;
    for _ in 0..m {
        match polygon_doc(&s, &r, &mut rng, &opts) {
            Ok(d) => {
                if d["counts"]["spec"] == d["counts"]["pick"] {
                    equal += 1;
                }
                docs.push(d);
            }
            Err(e) => docs.push(json!({ "error": e.to_string() })),
        }
    }
    eprintln!("N_spec = N_pick on {equal}/{m} polygons");
    emit_json(p.raw("out"), json!({ "polygons": docs, "equal": equal, "total": m }), p)
}

fn complex_line(label: &str, z: Complex64) -> String {
    format!("{label} {} {}\n", sig15(z.re), sig15(z.im))
}

pub fn special(p: &Params) -> Result<String, CliError> {
    let op = p.choice("op", &["C", "loggamma", "digamma", "psi", "psi-prime", "mellin", "mellin-hankel"])?;
    let n = p.i64("n")?;
    let z = Complex64::new(p.f64("re")?, p.f64("im")?);
    let nonneg = || u32::try_from(n).map_err(|_| CliError::Usage(format!("--n = {n}: {op} needs 0 <= n <= {}", u32::MAX)));
    Ok(match op {
        "C" => {
            let c: Complex64 = fourier_constant(p.f64("eps")?, n);
            format!("{}modulus {:.12}\n", complex_line("value", c), c.norm())
        }
        "loggamma" => complex_line("value", log_gamma(z)?),
        "digamma" => complex_line("value", digamma(z)?),
        "psi" => format!("value {}\n", sig15(psi_n(p.f64("x")?, n))),
        "psi-prime" => format!("value {}\n", sig15(psi_n_prime(p.f64("x")?, n))),
        "mellin" => complex_line("value", mellin_gaussian(z, nonneg()?)?),
        _ => format!("residual {}\n", sig15(verify_mellin_hankel(p.f64("eps")?, nonneg()?))),
    })
}
