#![allow(clippy::needless_range_loop)]

//! Small dense solvers for the fitting routines.

/// Solves a 3×3 system by Gaussian elimination with partial pivoting.
pub fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let rows: Vec<Vec<f64>> = a.iter().map(|r| r.to_vec()).collect();
    let x = solve(rows, b.to_vec())?;
    Some([x[0], x[1], x[2]])
}

pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[piv][col] == 0.0 || !a[piv][col].is_finite() {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Least squares min ‖A x − b‖ via Householder QR; `a` holds rows.
pub fn lstsq(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let m = a.len();
    let n = a.first()?.len();
    if m < n {
        return None;
    }
    let mut r: Vec<Vec<f64>> = a.to_vec();
    let mut y = b.to_vec();
    for k in 0..n {
        let norm = (k..m).map(|i| r[i][k] * r[i][k]).sum::<f64>().sqrt();
        if norm == 0.0 {
            return None;
        }
        let alpha = if r[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..m).map(|i| r[i][k]).collect();
        v[0] -= alpha;
        let vn2: f64 = v.iter().map(|x| x * x).sum();
        if vn2 == 0.0 {
            continue;
        }
        for c in k..n {
            let dot: f64 = (k..m).map(|i| v[i - k] * r[i][c]).sum();
            let f = 2.0 * dot / vn2;
            for i in k..m {
                r[i][c] -= f * v[i - k];
            }
        }
        let dot: f64 = (k..m).map(|i| v[i - k] * y[i]).sum();
        let f = 2.0 * dot / vn2;
        for i in k..m {
            y[i] -= f * v[i - k];
        }
    }
    let scale = (0..n).map(|k| r[k][k].abs()).fold(0.0, f64::max);
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        if r[k][k].abs() <= 1e-14 * scale {
            return None;
        }
        let s: f64 = (k + 1..n).map(|c| r[k][c] * x[c]).sum();
        x[k] = (y[k] - s) / r[k][k];
    }
    Some(x)
}

pub type Mat2 = [[f64; 2]; 2];

pub fn det2(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn inv2(m: &Mat2) -> Option<Mat2> {
    let d = det2(m);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    Some([[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]])
}

pub fn mul2(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

pub fn apply2(m: &Mat2, v: (f64, f64)) -> (f64, f64) {
    (m[0][0] * v.0 + m[0][1] * v.1, m[1][0] * v.0 + m[1][1] * v.1)
}

/// 2-norm condition number from the singular values.
pub fn cond2(m: &Mat2) -> f64 {
    let a = m[0][0] * m[0][0] + m[1][0] * m[1][0];
    let b = m[0][0] * m[0][1] + m[1][0] * m[1][1];
    let c = m[0][1] * m[0][1] + m[1][1] * m[1][1];
    let tr = a + c;
    let disc = ((a - c) * (a - c) + 4.0 * b * b).sqrt();
    let s_max = (0.5 * (tr + disc)).sqrt();
    let s_min = (0.5 * (tr - disc)).max(0.0).sqrt();
    if s_min == 0.0 {
        f64::INFINITY
    } else {
        s_max / s_min
    }
}
