//! Banded LU factorization with partial pivoting (LAPACK `gbtrf`/`gbtrs`
//! layout), sized for the annulus operators: bandwidth `n_theta`, order
//! `n_theta * n_r`.

use crate::error::MrtError;
use crate::scalar::Real;

/// Band matrix in expanded LAPACK storage: `kl` subdiagonals, `ku`
/// superdiagonals, plus `kl` extra superdiagonals for pivoting fill-in.
pub struct BandedMatrix<S> {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<S>,
    ipiv: Vec<usize>,
    factored: bool,
}

impl<S: Real> BandedMatrix<S> {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            ldab,
            ab: vec![S::zero(); ldab * n],
            ipiv: vec![0; n],
            factored: false,
        }
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        j * self.ldab + (self.kl + self.ku + i) - j
    }

    /// Whether `(i, j)` fits in the expanded band.
    #[inline]
    fn in_band(&self, i: usize, j: usize) -> bool {
        (i <= j + self.kl) && (j <= i + self.kl + self.ku)
    }

    pub fn set(&mut self, i: usize, j: usize, v: S) {
        debug_assert!(!self.factored);
        debug_assert!(i + self.ku >= j && j + self.kl >= i, "outside band: ({i},{j})");
        let s = self.slot(i, j);
        self.ab[s] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: S) {
        debug_assert!(!self.factored);
        debug_assert!(i + self.ku >= j && j + self.kl >= i, "outside band: ({i},{j})");
        let s = self.slot(i, j);
        self.ab[s] += v;
    }

    /// Replace row `i` with the unit row `e_i` (used to pin gauge or
    /// normalization nodes).
    pub fn set_unit_row(&mut self, i: usize) {
        debug_assert!(!self.factored);
        let lo = i.saturating_sub(self.kl);
        let hi = (i + self.kl + self.ku).min(self.n - 1);
        for j in lo..=hi {
            if self.in_band(i, j) {
                let s = self.slot(i, j);
                self.ab[s] = if i == j { S::one() } else { S::zero() };
            }
        }
    }

    /// `A x` for an unfactored matrix (residual checks and probes).
    pub fn matvec(&self, x: &[S]) -> Vec<S> {
        assert!(!self.factored);
        let n = self.n;
        let mut out = vec![S::zero(); n];
        for j in 0..n {
            let xj = x[j];
            if xj == S::zero() {
                continue;
            }
            let lo = j.saturating_sub(self.ku);
            let hi = (j + self.kl).min(n - 1);
            for i in lo..=hi {
                out[i] += self.ab[self.slot(i, j)] * xj;
            }
        }
        out
    }

    /// LU factorization with partial pivoting, in place.
    pub fn factor(&mut self) -> Result<(), MrtError> {
        assert!(!self.factored);
        let (n, kl) = (self.n, self.kl);
        let kv = self.kl + self.ku;
        for j in 0..n {
            let i_max = (j + kl).min(n - 1);
            // pivot search in column j
            let mut jp = j;
            let mut best = self.ab[self.slot(j, j)].abs();
            for i in (j + 1)..=i_max {
                let v = self.ab[self.slot(i, j)].abs();
                if v > best {
                    best = v;
                    jp = i;
                }
            }
            self.ipiv[j] = jp;
            if best == S::zero() || !best.is_finite() {
                return Err(MrtError::SingularSystem(format!(
                    "zero pivot at column {j}"
                )));
            }
            let col_hi = (j + kv).min(n - 1);
            if jp != j {
                for col in j..=col_hi {
                    let (a, b) = (self.slot(j, col), self.slot(jp, col));
                    self.ab.swap(a, b);
                }
            }
            // multipliers: column j below the diagonal is contiguous
            let piv = self.ab[self.slot(j, j)];
            let mul_lo = self.slot(j + 1, j);
            let mul_hi = self.slot(i_max, j);
            for s in mul_lo..=mul_hi {
                self.ab[s] = self.ab[s] / piv;
            }
            // rank-1 update column by column: contiguous axpy per column
            let n_rows = i_max - j;
            for col in (j + 1)..=col_hi {
                let u = self.ab[self.slot(j, col)];
                if u == S::zero() {
                    continue;
                }
                let dst_lo = self.slot(j + 1, col);
                for k in 0..n_rows {
                    let l = self.ab[mul_lo + k];
                    self.ab[dst_lo + k] = self.ab[dst_lo + k] - l * u;
                }
            }
        }
        self.factored = true;
        Ok(())
    }

    /// Solve `A x = b` after [`factor`](Self::factor).
    pub fn solve(&self, b: &[S]) -> Vec<S> {
        assert!(self.factored);
        let (n, kl) = (self.n, self.kl);
        let kv = self.kl + self.ku;
        let mut x = b.to_vec();
        for j in 0..n {
            let jp = self.ipiv[j];
            if jp != j {
                x.swap(j, jp);
            }
            let xj = x[j];
            if xj != S::zero() {
                let i_max = (j + kl).min(n - 1);
                for i in (j + 1)..=i_max {
                    let upd = self.ab[self.slot(i, j)] * xj;
                    x[i] -= upd;
                }
            }
        }
        for j in (0..n).rev() {
            x[j] = x[j] / self.ab[self.slot(j, j)];
            let xj = x[j];
            if xj != S::zero() {
                let i_lo = j.saturating_sub(kv);
                for i in i_lo..j {
                    let upd = self.ab[self.slot(i, j)] * xj;
                    x[i] -= upd;
                }
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut m: Vec<Vec<f64>> = a.iter().cloned().collect();
        let mut x = b.to_vec();
        for j in 0..n {
            let p = (j..n).max_by(|&r, &s| m[r][j].abs().total_cmp(&m[s][j].abs())).unwrap();
            m.swap(j, p);
            x.swap(j, p);
            for i in j + 1..n {
                let l = m[i][j] / m[j][j];
                for k in j..n {
                    m[i][k] -= l * m[j][k];
                }
                x[i] -= l * x[j];
            }
        }
        for j in (0..n).rev() {
            x[j] /= m[j][j];
            for i in 0..j {
                x[i] -= m[i][j] * x[j];
            }
        }
        x
    }

    #[test]
    fn tridiagonal_poisson() {
        let n = 50;
        let mut m = BandedMatrix::<f64>::new(n, 1, 1);
        for i in 0..n {
            m.set(i, i, -2.0);
            if i > 0 {
                m.set(i, i - 1, 1.0);
            }
            if i + 1 < n {
                m.set(i, i + 1, 1.0);
            }
        }
        m.factor().unwrap();
        let b = vec![1.0; n];
        let x = m.solve(&b);
        // residual check
        for i in 0..n {
            let mut r = -2.0 * x[i] - 1.0;
            if i > 0 {
                r += x[i - 1];
            }
            if i + 1 < n {
                r += x[i + 1];
            }
            assert_abs_diff_eq!(r, 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn random_band_matches_dense_solver() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &(n, kl, ku) in &[(12usize, 2usize, 3usize), (30, 5, 5), (17, 1, 4)] {
            let mut banded = BandedMatrix::<f64>::new(n, kl, ku);
            let mut dense = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in 0..n {
                    if j + kl >= i && i + ku >= j {
                        let v: f64 = rng.gen_range(-1.0..1.0);
                        let v = if i == j { v + 3.0 } else { v };
                        banded.set(i, j, v);
                        dense[i][j] = v;
                    }
                }
            }
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            banded.factor().unwrap();
            let x = banded.solve(&b);
            let y = dense_solve(&dense, &b);
            for (a, b) in x.iter().zip(&y) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        // [[0, 1], [1, 0]] requires a row swap
        let mut m = BandedMatrix::<f64>::new(2, 1, 1);
        m.set(0, 0, 0.0);
        m.set(0, 1, 1.0);
        m.set(1, 0, 1.0);
        m.set(1, 1, 0.0);
        m.factor().unwrap();
        let x = m.solve(&[2.0, 3.0]);
        assert_abs_diff_eq!(x[0], 3.0);
        assert_abs_diff_eq!(x[1], 2.0);
    }

    #[test]
    fn singular_matrix_is_detected() {
        let mut m = BandedMatrix::<f64>::new(3, 1, 1);
        m.set(0, 0, 1.0);
        m.set(1, 1, 1.0);
        // row 2 all zero
        assert!(m.factor().is_err());
    }
}
