//! Annulus grid `[0, 2 pi) x [R1, R2]`: periodic in theta, bounded in r,
//! theta-fast node ordering.

use crate::error::MrtError;
use crate::scalar::{c64, two_pi, Real};

#[derive(Clone, Debug)]
pub struct AnnulusGrid<S> {
    pub n_theta: usize,
    pub n_r: usize,
    pub r1: S,
    pub r2: S,
}

impl<S: Real> AnnulusGrid<S> {
    pub fn new(n_theta: usize, n_r: usize, r1: S, r2: S) -> Result<Self, MrtError> {
        if n_theta < 8 || n_r < 4 {
            return Err(MrtError::GridTooSmall {
                min_theta: 8,
                min_r: 4,
                nt: n_theta,
                nr: n_r,
            });
        }
        Ok(Self {
            n_theta,
            n_r,
            r1,
            r2,
        })
    }

    #[inline]
    pub fn d_theta(&self) -> S {
        two_pi::<S>() / S::from_usize(self.n_theta).unwrap()
    }

    #[inline]
    pub fn d_r(&self) -> S {
        (self.r2 - self.r1) / S::from_usize(self.n_r - 1).unwrap()
    }

    #[inline]
    pub fn theta(&self, i: usize) -> S {
        self.d_theta() * S::from_usize(i).unwrap()
    }

    #[inline]
    pub fn r(&self, j: usize) -> S {
        self.r1 + self.d_r() * S::from_usize(j).unwrap()
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i + j * self.n_theta
    }

    pub fn node_count(&self) -> usize {
        self.n_theta * self.n_r
    }

    /// Trapezoid weight of row `j` (half cells at the radial boundaries).
    #[inline]
    pub fn w(&self, j: usize) -> S {
        if j == 0 || j == self.n_r - 1 {
            c64(0.5)
        } else {
            S::one()
        }
    }

    /// Quadrature of a nodal field over the annulus (theta periodic,
    /// trapezoid in r).
    pub fn integrate(&self, field: &[S]) -> S {
        let mut acc = S::zero();
        for j in 0..self.n_r {
            let wj = self.w(j);
            for i in 0..self.n_theta {
                acc += field[self.idx(i, j)] * wj;
            }
        }
        acc * self.d_theta() * self.d_r()
    }

    /// Radial marginal (integrated over theta), one value per r row.
    pub fn radial_marginal(&self, field: &[S]) -> Vec<S> {
        (0..self.n_r)
            .map(|j| {
                (0..self.n_theta)
                    .map(|i| field[self.idx(i, j)])
                    .sum::<S>()
                    * self.d_theta()
            })
            .collect()
    }

    /// Theta marginal (trapezoid over r), one value per theta column.
    pub fn theta_marginal(&self, field: &[S]) -> Vec<S> {
        (0..self.n_theta)
            .map(|i| {
                (0..self.n_r)
                    .map(|j| field[self.idx(i, j)] * self.w(j))
                    .sum::<S>()
                    * self.d_r()
            })
            .collect()
    }

    /// Bilinear interpolation at `(theta, r)`, periodic in theta; errors
    /// outside `[r1, r2]`.
    pub fn interp(&self, field: &[S], theta: S, r: S) -> Option<S> {
        if r < self.r1 - c64(1e-12) || r > self.r2 + c64(1e-12) {
            return None;
        }
        let tau = two_pi::<S>();
        let th = theta - tau * (theta / tau).floor();
        let ft = (th / self.d_theta()).to_f64().unwrap();
        let i0 = (ft.floor() as usize) % self.n_theta;
        let i1 = (i0 + 1) % self.n_theta;
        let fi = c64::<S>(ft - ft.floor());
        let fr = ((r - self.r1) / self.d_r()).to_f64().unwrap();
        let j0 = (fr.floor() as usize).min(self.n_r - 2);
        let fj = c64::<S>((fr - j0 as f64).clamp(0.0, 1.0));
        let one = S::one();
        let v = field[self.idx(i0, j0)] * (one - fi) * (one - fj)
            + field[self.idx(i1, j0)] * fi * (one - fj)
            + field[self.idx(i0, j0 + 1)] * (one - fi) * fj
            + field[self.idx(i1, j0 + 1)] * fi * fj;
        Some(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quadrature_of_constant_is_area() {
        let g = AnnulusGrid::<f64>::new(32, 16, 0.3, 2.0).unwrap();
        let f = vec![1.0; g.node_count()];
        // area of the parameter rectangle [0, 2 pi) x [R1, R2]
        assert_abs_diff_eq!(
            g.integrate(&f),
            std::f64::consts::TAU * 1.7,
            epsilon = 1e-12
        );
    }

    #[test]
    fn interp_reproduces_bilinear_fields() {
        let g = AnnulusGrid::<f64>::new(64, 16, 0.3, 2.0).unwrap();
        let f: Vec<f64> = (0..g.node_count())
            .map(|k| 2.0 * g.r(k / 64) + 0.3)
            .collect();
        assert_abs_diff_eq!(g.interp(&f, 1.234, 1.1).unwrap(), 2.5, epsilon = 1e-12);
        assert!(g.interp(&f, 0.0, 2.5).is_none());
    }

    #[test]
    fn too_small_grid_is_rejected() {
        assert!(AnnulusGrid::<f64>::new(4, 16, 0.3, 2.0).is_err());
    }
}
