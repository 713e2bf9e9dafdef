use pinch::spectrum::*;
use pinch::Tridiagonal;

fn harmonic_line(h: f64, n: i64, grid: usize, kmax: usize) -> Vec<f64> {
    let cfg = DiscretizationConfig::new(h, 12.0 * h.sqrt(), grid);
    let op = build_radial_operator(n, &cfg, &PotentialSpec::harmonic()).unwrap();
    let e_max = h * (2.0 * kmax as f64 + n.abs() as f64 + 1.5);
    eigenvalues_below(&op, e_max)
}

fn max_rel_error(h: f64, grid: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for n in 0..=5i64 {
        let line = harmonic_line(h, n, grid, 10);
        assert_eq!(line.len(), 11, "n={n}");
        for (k, e) in line.iter().enumerate() {
            let exact = h * (2.0 * k as f64 + n as f64 + 1.0);
            worst = worst.max((e - exact).abs() / exact);
        }
    }
    worst
}

#[test]
fn harmonic_oscillator_levels() {
    assert!(max_rel_error(0.1, 32768) < 1e-6);
}

#[test]
fn harmonic_second_order_convergence() {
    let (h, n) = (0.1, 2);
    let exact = h * (2.0 * 3.0 + 2.0 + 1.0);
    let e1 = harmonic_line(h, n, 2000, 3)[3] - exact;
    let e2 = harmonic_line(h, n, 4000, 3)[3] - exact;
    let ratio = e1 / e2;
    assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn dirichlet_laplacian_matches_discrete_formula() {
    let (h, m, r_max) = (0.05, 400usize, 2.0);
    let cfg = DiscretizationConfig::new(h, r_max, m);
    let op = radial_operator_with(0, &cfg, |_| 0.0, false);
    let d = cfg.delta();
    let l_eff = (m as f64 + 1.0) * d;
    let ev = eigenvalues_below(&op, 2.0);
    assert!(ev.len() > 20);
    for (i, e) in ev.iter().enumerate() {
        let k = (i + 1) as f64;
        // −(h²/2) with Dirichlet nodes one half-cell outside the grid
        let discrete = 2.0 * h * h / (d * d) * (k * std::f64::consts::PI * d / (2.0 * l_eff)).sin().powi(2);
        assert!((e - discrete).abs() < 1e-12, "k={k}: {e} vs {discrete}");
        let continuum = 0.5 * h * h * (k * std::f64::consts::PI / l_eff).powi(2);
        let theta = k * std::f64::consts::PI * d / l_eff;
        assert!((e - continuum).abs() <= continuum * theta * theta / 12.0 * 1.01);
    }
}

#[test]
fn stencil_is_second_order_on_smooth_functions() {
    // u = √r f with f = r² e^{−r²}, n = 2, V = 0; exact action −(h²/2)√r(f″ + f′/r − 4f/r²)
    let h = 0.1;
    let residual = |m: usize| {
        let cfg = DiscretizationConfig::new(h, 6.0, m);
        let op: Tridiagonal = radial_operator_with(2, &cfg, |_| 0.0, true);
        let d = cfg.delta();
        let r = |j: usize| (j as f64 + 0.5) * d;
        let f = |r: f64| r * r * (-r * r).exp();
        let fp = |r: f64| (2.0 * r - 2.0 * r.powi(3)) * (-r * r).exp();
        let fpp = |r: f64| (2.0 - 10.0 * r * r + 4.0 * r.powi(4)) * (-r * r).exp();
        let u: Vec<f64> = (0..m).map(|j| r(j).sqrt() * f(r(j))).collect();
        let mut worst: f64 = 0.0;
        for j in 1..m - 1 {
            let rj = r(j);
            if !(0.5..=3.0).contains(&rj) {
                continue;
            }
            let applied = op.diag[j] * u[j] + op.off[j - 1] * u[j - 1] + op.off[j] * u[j + 1];
            let exact = -0.5 * h * h * rj.sqrt() * (fpp(rj) + fp(rj) / rj - 4.0 * f(rj) / (rj * rj));
            worst = worst.max((applied - exact).abs());
        }
        worst
    };
    let (a, b) = (residual(600), residual(1200));
    assert!(a > 0.0 && (3.5..=4.5).contains(&(a / b)), "{a} {b}");
}

#[test]
fn opposite_angular_numbers_share_operators_and_lines() {
    let cfg = DiscretizationConfig::new(0.1, 3.0, 512);
    let p = PotentialSpec::champagne();
    assert_eq!(build_radial_operator(3, &cfg, &p).unwrap(), build_radial_operator(-3, &cfg, &p).unwrap());
    let s = champagne_spectrum(0.1, (-6, 6), (-0.25, 0.3)).unwrap();
    for n in 1..=6 {
        let a: Vec<u64> = s.line(n).map(|p| p.e1.to_bits()).collect();
        let b: Vec<u64> = s.line(-n).map(|p| p.e1.to_bits()).collect();
        assert_eq!(a, b);
    }
}

#[test]
fn joint_spectrum_is_simple_and_on_lines() {
    let h = 0.1;
    let s = champagne_spectrum(h, (-6, 6), (-0.25, 0.3)).unwrap();
    assert!(!s.eigenvalues.is_empty());
    for p in &s.eigenvalues {
        assert_eq!(p.e2, h * p.n as f64);
    }
    let mut pts: Vec<(f64, f64)> = s.eigenvalues.iter().map(|p| (p.e1, p.e2)).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = (pts[i].0 - pts[j].0).hypot(pts[i].1 - pts[j].1);
            assert!(d > 1e-9);
        }
    }
    assert!(s.min_separation() > 1e-9);
}

#[test]
fn ground_state_agrees_with_richardson_extrapolation() {
    let h = 0.1;
    let p = PotentialSpec::champagne();
    let base = DiscretizationConfig::default_for(h, 0.3, &p);
    let ground = |m: usize| {
        let cfg = DiscretizationConfig { grid_points: m, ..base };
        let op = build_radial_operator(0, &cfg, &p).unwrap();
        eigenvalues_below(&op, 0.0)[0]
    };
    let (coarse, fine) = (ground(base.grid_points), ground(2 * base.grid_points));
    let extrapolated = (4.0 * fine - coarse) / 3.0;
    assert!((coarse - extrapolated).abs() < 1e-8, "{coarse} vs {extrapolated} at {}", base.grid_points);
    let s = champagne_spectrum(h, (0, 0), (-0.25, 0.3)).unwrap();
    assert!((s.eigenvalues[0].e1 - coarse).abs() < 1e-11);
}

#[test]
fn truncation_insensitivity() {
    let h = 0.1;
    let p = PotentialSpec::champagne();
    let cfg = DiscretizationConfig::default_for(h, 0.3, &p);
    let d = cfg.delta();
    let wider = DiscretizationConfig::new(h, cfg.r_max + 200.0 * d, cfg.grid_points + 200);
    for n in [0i64, 3] {
        let a = eigenvalues_below(&build_radial_operator(n, &cfg, &p).unwrap(), 0.3);
        let b = eigenvalues_below(&build_radial_operator(n, &wider, &p).unwrap(), 0.3);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10, "n={n}: {x} vs {y}");
        }
    }
}

#[test]
fn sturm_count_matches_returned_lines() {
    let h = 0.05;
    let p = PotentialSpec::champagne();
    let cfg = DiscretizationConfig::default_for(h, 0.2, &p);
    for n in [0i64, 1, 4] {
        let op = build_radial_operator(n, &cfg, &p).unwrap();
        let ev = eigenvalues_below(&op, 0.2);
        assert_eq!(op.sturm_count(0.2), ev.len());
    }
}

#[test]
fn epsilon_coordinates() {
    assert_eq!(to_epsilon_coords(0.0, 0.003, 1e-3).unwrap(), (0.0, 3));
    let (x, n) = to_epsilon_coords(SQRT_2 * 5.0 * 1e-4, 0.0, 1e-4).unwrap();
    assert!((x - 5.0).abs() < 1e-14 && n == 0);
    let (e1, e2) = from_epsilon_coords(-7.25, -4, 2e-3);
    let (x, n) = to_epsilon_coords(e1, e2, 2e-3).unwrap();
    assert!((x + 7.25).abs() < 1e-14 && n == -4);
    assert!(to_epsilon_coords(0.0, 0.0035, 1e-3).is_err());
}

#[test]
fn csv_round_trip() {
    let s = champagne_spectrum(0.1, (-2, 2), (-0.25, 0.1)).unwrap();
    let mut buf = Vec::new();
    s.write_csv(&mut buf).unwrap();
    assert!(buf.starts_with(b"h,n,k,E1,E2,x\n"));
    let back = SpectrumTable::read_csv(std::io::Cursor::new(buf), s.sidecar()).unwrap();
    assert_eq!(back.eigenvalues, s.eigenvalues);
}

#[test]
fn invalid_configuration_is_rejected() {
    let p = PotentialSpec::champagne();
    let tiny = DiscretizationConfig::new(0.1, 1.0, 1000);
    assert!(joint_spectrum(0.1, (0, 0), (-0.25, 0.3), &tiny, &p).is_err());
    let cfg = DiscretizationConfig::default_for(0.1, 0.3, &p);
    assert!(joint_spectrum(0.1, (2, 1), (-0.25, 0.3), &cfg, &p).is_err());
    assert!(joint_spectrum(0.1, (0, 0), (0.3, -0.25), &cfg, &p).is_err());
}
