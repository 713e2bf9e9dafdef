//! Plot data for the figures, each checked against its acceptance tolerance.

use std::f64::consts::PI;
use std::path::Path;

use pinch::bohr_sommerfeld::{smallest_gap_champagne, smallest_gap_general, GapVariant};
use pinch::gaps::{compare_variants, regress_rows, GapRecord};
use pinch::lattice::{count_in_polygon, random_simple_polygon, ChartOptions, Ring};
use pinch::spectrum::{champagne_spectrum, SQRT_2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::commands::{gap_records, model_b, smallest_gap_rows, window, weyl_rows};
use crate::output::{emit_plot, provenance, pretty};
use crate::params::{key, Key, Params};
use crate::CliError;

pub const FIGURES: &[&str] = &["cusp", "cusp-z", "gaps-formule", "weyl", "unwinding"];

pub const KEYS: &[Key] = &[
    key("h", "auto", "semiclassical parameter (cusp: 1e-4, cusp-z: 1e-5, unwinding: 5e-3)"),
    key("h_list", "1e-2,1e-3,1e-4,1e-5", "h values for gaps-formule and weyl"),
    key("x_half", "10", "half-width of the x window for the gap figures"),
    key("b", "stated", "B for the general gap formula"),
    key("k_x_min", "-10", "Weyl window in x"),
    key("k_x_max", "10", "Weyl window in x"),
    key("k_n_min", "-5.5", "Weyl window in n"),
    key("k_n_max", "5.5", "Weyl window in n"),
    key("polygons", "12", "random polygons for unwinding"),
    key("seed", "10", "random seed for unwinding"),
    key("out_dir", "figures", "directory for plot data"),
];

struct Check {
    name: String,
    pass: bool,
    detail: String,
}

fn check(name: &str, pass: bool, detail: String) -> Check {
    Check { name: name.into(), pass, detail }
}

fn variant_name(v: GapVariant) -> &'static str {
    match v {
        GapVariant::General => "general",
        GapVariant::Champagne => "champagne",
    }
}

fn gap_plots(dir: &Path, stem: &str, rec: &[GapRecord]) -> Result<(), CliError> {
    let col = |f: fn(&GapRecord) -> f64| rec.iter().map(|r| (r.x_mid, f(r))).collect::<Vec<_>>();
    emit_plot(dir, &format!("{stem}_measured.dat"), &col(|r| r.gap_measured), "x  gap_x measured")?;
    emit_plot(dir, &format!("{stem}_general.dat"), &col(|r| r.gap_pred_general), "x  gap_x general formula")?;
    emit_plot(dir, &format!("{stem}_champagne.dat"), &col(|r| r.gap_pred_champagne), "x  gap_x champagne formula")?;
    Ok(())
}

fn cusp(p: &Params, dir: &Path, h: f64) -> Result<Vec<Check>, CliError> {
    let x = p.positive("x_half")?;
    let rec = gap_records(h, 0, (-x, x), model_b(p)?)?;
    gap_plots(dir, "cusp", &rec)?;
    let v = compare_variants(&rec);
    Ok(vec![check(
        "gap law",
        v.winner_error() <= 0.15,
        format!("h={h:e}: winner {} with max rel error {:.4} (limit 0.15)", variant_name(v.winner), v.winner_error()),
    )])
}

fn cusp_z(p: &Params, dir: &Path, h: f64) -> Result<Vec<Check>, CliError> {
    let x = p.positive("x_half")?;
    let b = model_b(p)?;
    let (coarse, fine) = rayon::join(|| gap_records(10.0 * h, 0, (-x, x), b), || gap_records(h, 0, (-x, x), b));
    let (coarse, fine) = (compare_variants(&coarse?), fine?);
    gap_plots(dir, "cusp-z", &fine)?;
    let v = compare_variants(&fine);
    Ok(vec![check(
        "gap law refines",
        v.winner == coarse.winner && v.winner_error() < coarse.winner_error(),
        format!(
            "winner {} at h={:e} and h={h:e}; max rel error {:.4} -> {:.4}",
            variant_name(v.winner),
            10.0 * h,
            coarse.winner_error(),
            v.winner_error()
        ),
    )])
}

fn gaps_formule(p: &Params, dir: &Path) -> Result<Vec<Check>, CliError> {
    let hs = p.f64_list("h_list")?;
    let b = model_b(p)?;
    let rows = smallest_gap_rows(&hs, p.positive("x_half")? + 0.5, b)?;
    let reg = regress_rows(&rows);
    let pts = |f: &dyn Fn(f64) -> f64| rows.iter().map(|r| (r.lnh_abs, f(r.h))).collect::<Vec<_>>();
    emit_plot(dir, "gaps-formule_measured.dat", &rows.iter().map(|r| (r.lnh_abs, r.gap_min_measured)).collect::<Vec<_>>(), "|ln h|  min gap measured")?;
    emit_plot(dir, "gaps-formule_champagne.dat", &pts(&smallest_gap_champagne), "|ln h|  2 pi sqrt2/(|ln h| + 9/2 ln 2 + gamma)")?;
    emit_plot(dir, "gaps-formule_general.dat", &pts(&|h| smallest_gap_general(h, b)), "|ln h|  general formula")?;
    let expected = 1.0 / (2.0 * PI * SQRT_2);
    let mut checks = vec![check(
        "smallest-gap slope",
        (reg.slope / expected - 1.0).abs() < 0.05 && reg.r_squared >= 0.995,
        format!("slope {:.5} vs {expected:.5}, R^2 {:.5}", reg.slope, reg.r_squared),
    )];
    if let Some(r) = rows.iter().find(|r| r.h == 1e-4) {
        let rel = (r.gap_min_measured / r.gap_min_champagne - 1.0).abs();
        checks.push(check("smallest gap at 1e-4", rel < 0.10, format!("{:.5} vs {:.5}, rel {rel:.4}", r.gap_min_measured, r.gap_min_champagne)));
    }
    Ok(checks)
}

fn weyl(p: &Params, dir: &Path) -> Result<Vec<Check>, CliError> {
    let hs = p.f64_list("h_list")?;
    let k = window(p)?;
    let rows = weyl_rows(&hs, &k)?;
    emit_plot(dir, "weyl_count.dat", &rows.iter().map(|r| (r.lnh_abs, r.n as f64)).collect::<Vec<_>>(), "|ln h|  N_h(K)")?;
    emit_plot(dir, "weyl_leading.dat", &rows.iter().map(|r| (r.lnh_abs, r.predicted)).collect::<Vec<_>>(), "|ln h|  leading term")?;
    let leading = rows.iter().filter(|r| r.h == 1e-3 || r.h == 1e-4).all(|r| (r.n as f64 / r.predicted - 1.0).abs() <= 0.20);
    let res: Vec<f64> = rows.iter().map(|r| r.residual.abs()).collect();
    let (max, min) = (res.iter().cloned().fold(0.0, f64::max), res.iter().cloned().fold(f64::INFINITY, f64::min));
    Ok(vec![
        check("Weyl leading term", leading, "N/predicted within 20% at h = 1e-3, 1e-4".into()),
        check("Weyl residual bounded", max <= 2.0 * min + 5.0, format!("|N - predicted| in [{min:.1}, {max:.1}]")),
    ])
}

fn unwinding(p: &Params, dir: &Path, h: f64) -> Result<Vec<Check>, CliError> {
    let ring = if h >= 5e-3 { Ring { center: (0.0, 0.0), inner: 18.0, outer: 28.0 } } else { Ring { center: (0.0, 0.0), inner: 16.0, outer: 32.0 } };
    let nmax = (ring.outer * 1.25) as i64;
    let s = champagne_spectrum(h, (-nmax, nmax), (-0.25, SQRT_2 * h * ring.outer * 1.25))?;
    let opts = ChartOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(p.u64("seed")?);
    let total = p.count("polygons")?;
    let (mut equal, mut unipotent) = (0, 0);
    let mut first = None;
    for _ in 0..total {
        let poly = match random_simple_polygon(&s.eigenvalues, h, ring, 45f64.to_radians(), &opts, &mut rng, 20) {
            Ok(poly) => poly,
            Err(e) => {
                log::warn!("polygon draw failed: {e}");
                continue;
            }
        };
        match count_in_polygon(&s.eigenvalues, &poly, h, &opts) {
            Ok(c) => {
                equal += usize::from(c.n_spec == c.n_pick);
                unipotent += usize::from(c.monodromy.is_nontrivial_unipotent());
                if first.is_none() {
                    first = Some((poly, c));
                }
            }
            Err(e) => log::warn!("polygon count failed: {e}"),
        }
    }
    let spec: Vec<(f64, f64)> = s.eigenvalues.iter().map(|e| (e.e1, e.e2)).collect();
    emit_plot(dir, "unwinding_spectrum.dat", &spec, "E1  E2")?;
    if let Some((poly, c)) = &first {
        let mut pts = poly.points();
        pts.push(pts[0]);
        emit_plot(dir, "unwinding_polygon.dat", &pts, "E1  E2 of the polygon vertices")?;
        let mut lat: Vec<(f64, f64)> = c.unwound_vertices.iter().map(|&(i, j)| (i as f64, j as f64)).collect();
        lat.push(lat[0]);
        emit_plot(dir, "unwinding_unwound.dat", &lat, "unwound integer vertices")?;
    }
    let need = 10.min(total);
    Ok(vec![
        check("monodromy unipotent", unipotent == total, format!("{unipotent}/{total} loops give a nontrivial unipotent monodromy at h={h:e}")),
        check("N_spec = N_pick", equal >= need, format!("{equal}/{total} polygons (need {need})")),
    ])
}

/// Runs one figure pipeline; returns whether every check passed.
pub fn run(figure: &str, p: &Params) -> Result<bool, CliError> {
    let h = |default: f64| -> Result<f64, CliError> { if p.is_set("h") { p.h("h", 0.05) } else { Ok(default) } };
    let dir = Path::new(p.raw("out_dir"));
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let checks = match figure {
        "cusp" => cusp(p, dir, h(1e-4)?)?,
        "cusp-z" => cusp_z(p, dir, h(1e-5)?)?,
        "gaps-formule" => gaps_formule(p, dir)?,
        "weyl" => weyl(p, dir)?,
        "unwinding" => unwinding(p, dir, h(5e-3)?)?,
        other => return Err(CliError::Usage(format!("unknown figure '{other}'; expected one of {}", FIGURES.join(", ")))),
    };
    let mut summary = String::new();
    for c in &checks {
        let line = format!("{} {figure}: {}: {}\n", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
        print!("{line}");
        summary.push_str(&line);
    }
    std::fs::write(dir.join(format!("{figure}_summary.txt")), &summary).map_err(|e| CliError::Io(e.to_string()))?;
    let mut meta = provenance(p);
    meta["figure"] = figure.into();
    meta["passed"] = checks.iter().all(|c| c.pass).into();
    std::fs::write(dir.join(format!("{figure}.json")), pretty(&meta)).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(checks.iter().all(|c| c.pass))
}
