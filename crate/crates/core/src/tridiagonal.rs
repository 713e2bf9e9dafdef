//! Symmetric tridiagonal matrices and Sturm-sequence bisection.
//!
//! The LDLᵀ pivot recurrence counts eigenvalues below a shift. Bisection of
//! all eigenvalues in a window is batched so that one sweep over the matrix
//! advances up to [`LANES`] independent shifts at once.

use crate::scalar::Real;

pub const LANES: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal<T> {
    pub diag: Vec<T>,
    /// Off-diagonal entries, `off[i]` couples rows `i` and `i + 1`.
    pub off: Vec<T>,
    off_sq: Vec<T>,
    pivmin: T,
}

impl<T: Real> SymTridiagonal<T> {
    pub fn new(diag: Vec<T>, off: Vec<T>) -> Self {
        assert!(
            off.len() + 1 == diag.len() || (diag.is_empty() && off.is_empty()),
            "off-diagonal length must be one less than the diagonal"
        );
        let off_sq: Vec<T> = off.iter().map(|&e| e * e).collect();
        let emax = off_sq.iter().fold(T::one(), |m, &e| if e > m { e } else { m });
        let pivmin = T::min_positive_value() * emax;
        Self { diag, off, off_sq, pivmin }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Number of eigenvalues strictly below `lambda`.
    pub fn sturm_count(&self, lambda: T) -> usize {
        let mut out = [0usize; 1];
        self.sturm_counts(&[lambda], &mut out);
        out[0]
    }

    /// Sturm counts for several shifts in one sweep.
    pub fn sturm_counts(&self, lambdas: &[T], out: &mut [usize]) {
        assert!(lambdas.len() <= LANES && out.len() >= lambdas.len());
        let m = lambdas.len();
        if m == 0 {
            return;
        }
        if self.diag.is_empty() {
            out[..m].iter_mut().for_each(|c| *c = 0);
            return;
        }
        let mut lam = [T::zero(); LANES];
        lam[..m].copy_from_slice(lambdas);
        let mut q = [T::zero(); LANES];
        let mut cnt = [0usize; LANES];
        let neg_pivmin = -self.pivmin;
        for l in 0..LANES {
            q[l] = self.diag[0] - lam[l];
        }
        for i in 1..self.diag.len() {
            let d = self.diag[i];
            let e2 = self.off_sq[i - 1];
            for l in 0..LANES {
                let mut p = q[l];
                if p.abs() < self.pivmin {
                    p = neg_pivmin;
                }
                cnt[l] += (p < T::zero()) as usize;
                q[l] = (d - lam[l]) - e2 / p;
            }
        }
        for l in 0..m {
            let mut p = q[l];
            if p.abs() < self.pivmin {
                p = neg_pivmin;
            }
            out[l] = cnt[l] + (p < T::zero()) as usize;
        }
    }

    /// Gershgorin interval containing the spectrum.
    pub fn gershgorin(&self) -> (T, T) {
        let n = self.diag.len();
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for i in 0..n {
            let left = if i > 0 { self.off[i - 1].abs() } else { T::zero() };
            let right = if i + 1 < n { self.off[i].abs() } else { T::zero() };
            let r = left + right;
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// All eigenvalues in `[lo, hi)` with their global indices (Sturm count
    /// below each eigenvalue), refined to width `rel_tol * max(1, |λ|)`.
    pub fn eigenvalues_in(&self, lo: T, hi: T, rel_tol: T) -> Vec<(usize, T)> {
        if self.diag.is_empty() || !(hi > lo) {
            return Vec::new();
        }
        let c = {
            let mut out = [0usize; 2];
            self.sturm_counts(&[lo, hi], &mut out);
            out
        };
        let (c_lo, c_hi) = (c[0], c[1]);
        let mut result: Vec<(usize, T)> = Vec::with_capacity(c_hi.saturating_sub(c_lo));
        // Intervals (a, b, count(a), count(b)) holding at least one eigenvalue.
        let mut active: Vec<(T, T, usize, usize)> = vec![(lo, hi, c_lo, c_hi)];
        let two = T::lit(2.0);
        while !active.is_empty() {
            let mut next = Vec::with_capacity(active.len() * 2);
            for chunk in active.chunks(LANES) {
                let mut mids = [T::zero(); LANES];
                for (k, iv) in chunk.iter().enumerate() {
                    mids[k] = (iv.0 + iv.1) / two;
                }
                let mut counts = [0usize; LANES];
                self.sturm_counts(&mids[..chunk.len()], &mut counts);
                for (k, &(a, b, ca, cb)) in chunk.iter().enumerate() {
                    let m = mids[k];
                    let cm = counts[k];
                    for (x0, x1, c0, c1) in [(a, m, ca, cm), (m, b, cm, cb)] {
                        if c1 <= c0 {
                            continue;
                        }
                        let tol = rel_tol * T::one().max(x0.abs().max(x1.abs()));
                        let converged = x1 - x0 <= tol || !(x0 < (x0 + x1) / two && (x0 + x1) / two < x1);
                        if converged {
                            let v = (x0 + x1) / two;
                            for idx in c0..c1 {
                                result.push((idx, v));
                            }
                        } else {
                            next.push((x0, x1, c0, c1));
                        }
                    }
                }
            }
            active = next;
        }
        result.sort_by_key(|p| p.0);
        result
    }
}
