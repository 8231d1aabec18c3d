//! Discrete generator `L` and forward operator `L*` on the annulus.
//!
//! `L*` is a finite-volume divergence of the stationary probability
//! current with zero-flux faces at the radial boundaries and periodic
//! wrap in theta. `L` is its exact adjoint in the trapezoid-weighted
//! inner product, which is a second-order consistent discretization of
//! the backward operator with reflecting (Neumann) boundary rows;
//! summation by parts and discrete mass conservation hold exactly.
//!
//! The drift seen here is the Ito drift: coefficients come from the
//! Stratonovich polar model, with the conversion term folded in
//! (`a = f + G G'/2`, `D = G^2/2`, effective advection `c = a - D' = f - G G'/2`).

use crate::error::MrtError;
use crate::model::{ModelCatalogEntry, PolarDiagonal};
use crate::scalar::{c64, Real};

use super::banded::BandedMatrix;
use super::grid::AnnulusGrid;

pub struct DiscreteOperators<S> {
    pub grid: AnnulusGrid<S>,
    /// Effective advection and diffusion at theta faces `(i + 1/2, j)`.
    ct: Vec<S>,
    dt: Vec<S>,
    /// Effective advection and diffusion at r faces `(i, j + 1/2)`,
    /// `n_theta * (n_r - 1)` entries.
    cr: Vec<S>,
    dr: Vec<S>,
    /// Ito drift and diffusion at nodes, for current evaluation.
    pub a_theta: Vec<S>,
    pub a_r: Vec<S>,
    pub dd_theta: Vec<S>,
    pub dd_r: Vec<S>,
}

/// Build the discrete operators for a diagonal-noise polar model.
pub fn build_operators<S: Real>(
    entry: &ModelCatalogEntry<S>,
    grid: &AnnulusGrid<S>,
) -> Result<DiscreteOperators<S>, MrtError> {
    let diag: &PolarDiagonal<S> = entry.polar_diag()?;
    let half = c64::<S>(0.5);
    let nt = grid.n_theta;
    let nr = grid.n_r;
    let d_theta = grid.d_theta();
    let d_r = grid.d_r();

    let mut ct = vec![S::zero(); nt * nr];
    let mut dt = vec![S::zero(); nt * nr];
    for j in 0..nr {
        let r = grid.r(j);
        for i in 0..nt {
            let th = grid.theta(i) + half * d_theta;
            let g = (diag.g1)(th, r);
            let gp = (diag.dg1_dtheta)(th, r);
            let c = (diag.f1)(th, r) - half * g * gp;
            ct[grid.idx(i, j)] = c;
            // With vanishing phase diffusion the centered advective flux
            // decouples odd and even theta parities, putting a checkerboard
            // mode into the kernel next to the density. An O(d_theta^2)
            // dissipation on the face removes that mode; it is second-order
            // consistent and drops out entirely on theta-uniform and
            // theta-linear fields.
            dt[grid.idx(i, j)] = half * g * g + half * c.abs() * d_theta * d_theta;
        }
    }
    let mut cr = vec![S::zero(); nt * (nr - 1)];
    let mut dr = vec![S::zero(); nt * (nr - 1)];
    for j in 0..nr - 1 {
        let r = grid.r(j) + half * d_r;
        for i in 0..nt {
            let th = grid.theta(i);
            let g = (diag.g2)(th, r);
            let gp = (diag.dg2_dr)(th, r);
            cr[i + j * nt] = (diag.f2)(th, r) - half * g * gp;
            dr[i + j * nt] = half * g * g;
        }
    }
    let mut a_theta = vec![S::zero(); nt * nr];
    let mut a_r = vec![S::zero(); nt * nr];
    let mut dd_theta = vec![S::zero(); nt * nr];
    let mut dd_r = vec![S::zero(); nt * nr];
    for j in 0..nr {
        let r = grid.r(j);
        for i in 0..nt {
            let th = grid.theta(i);
            let g1 = (diag.g1)(th, r);
            let g2 = (diag.g2)(th, r);
            let k = grid.idx(i, j);
            a_theta[k] = (diag.f1)(th, r) + half * g1 * (diag.dg1_dtheta)(th, r);
            a_r[k] = (diag.f2)(th, r) + half * g2 * (diag.dg2_dr)(th, r);
            dd_theta[k] = half * g1 * g1;
            dd_r[k] = half * g2 * g2;
        }
    }

    Ok(DiscreteOperators {
        grid: grid.clone(),
        ct,
        dt,
        cr,
        dr,
        a_theta,
        a_r,
        dd_theta,
        dd_r,
    })
}

impl<S: Real> DiscreteOperators<S> {
    #[inline]
    fn face_t(&self, i: usize, j: usize) -> (S, S) {
        let k = self.grid.idx(i, j);
        (self.ct[k], self.dt[k])
    }

    #[inline]
    fn face_r(&self, i: usize, j: usize) -> (S, S) {
        let k = i + j * self.grid.n_theta;
        (self.cr[k], self.dr[k])
    }

    /// Forward operator `L* rho` (finite-volume current divergence).
    pub fn apply_l_star(&self, rho: &[S]) -> Vec<S> {
        let g = &self.grid;
        let (nt, nr) = (g.n_theta, g.n_r);
        let (d_theta, d_r) = (g.d_theta(), g.d_r());
        let half = c64::<S>(0.5);
        let mut out = vec![S::zero(); nt * nr];
        for j in 0..nr {
            let wj = g.w(j);
            for i in 0..nt {
                let k = g.idx(i, j);
                let ip = (i + 1) % nt;
                let im = (i + nt - 1) % nt;
                // theta faces
                let (c_r, d_rr) = self.face_t(i, j);
                let (c_l, d_ll) = self.face_t(im, j);
                let j_right = c_r * half * (rho[k] + rho[g.idx(ip, j)])
                    - d_rr * (rho[g.idx(ip, j)] - rho[k]) / d_theta;
                let j_left = c_l * half * (rho[g.idx(im, j)] + rho[k])
                    - d_ll * (rho[k] - rho[g.idx(im, j)]) / d_theta;
                let mut acc = -(j_right - j_left) / d_theta;
                // r faces (zero flux outside the boundary rows)
                let j_up = if j + 1 < nr {
                    let (c, d) = self.face_r(i, j);
                    c * half * (rho[k] + rho[g.idx(i, j + 1)])
                        - d * (rho[g.idx(i, j + 1)] - rho[k]) / d_r
                } else {
                    S::zero()
                };
                let j_down = if j > 0 {
                    let (c, d) = self.face_r(i, j - 1);
                    c * half * (rho[g.idx(i, j - 1)] + rho[k])
                        - d * (rho[k] - rho[g.idx(i, j - 1)]) / d_r
                } else {
                    S::zero()
                };
                acc -= (j_up - j_down) / (wj * d_r);
                out[k] = acc;
            }
        }
        out
    }

    /// Backward operator `L u` for a jump-periodic field:
    /// `u(theta + 2 pi, r) = u(theta, r) - jump`.
    pub fn apply_l(&self, u: &[S], jump: S) -> Vec<S> {
        let g = &self.grid;
        let (nt, nr) = (g.n_theta, g.n_r);
        let (d_theta, d_r) = (g.d_theta(), g.d_r());
        let two = c64::<S>(2.0);
        let mut out = vec![S::zero(); nt * nr];
        for j in 0..nr {
            for i in 0..nt {
                let k = g.idx(i, j);
                let u_k = u[k];
                // theta neighbors with the jump-periodic wrap
                let u_ip = if i + 1 < nt {
                    u[g.idx(i + 1, j)]
                } else {
                    u[g.idx(0, j)] - jump
                };
                let u_im = if i > 0 {
                    u[g.idx(i - 1, j)]
                } else {
                    u[g.idx(nt - 1, j)] + jump
                };
                let im = (i + nt - 1) % nt;
                let (c_r, d_rr) = self.face_t(i, j);
                let (c_l, d_ll) = self.face_t(im, j);
                let mut acc = (c_r * (u_ip - u_k) + c_l * (u_k - u_im)) / (two * d_theta)
                    + (d_rr * (u_ip - u_k) - d_ll * (u_k - u_im)) / (d_theta * d_theta);
                // r part: interior rows centered, boundary rows Neumann
                if j == 0 {
                    let (c, d) = self.face_r(i, 0);
                    acc += (c + two * d / d_r) * (u[g.idx(i, 1)] - u_k) / d_r;
                } else if j == nr - 1 {
                    let (c, d) = self.face_r(i, nr - 2);
                    acc += (c - two * d / d_r) * (u_k - u[g.idx(i, nr - 2)]) / d_r;
                } else {
                    let (c_u, d_u) = self.face_r(i, j);
                    let (c_d, d_d) = self.face_r(i, j - 1);
                    let up = u[g.idx(i, j + 1)];
                    let dn = u[g.idx(i, j - 1)];
                    acc += (c_u * (up - u_k) + c_d * (u_k - dn)) / (two * d_r)
                        + (d_u * (up - u_k) - d_d * (u_k - dn)) / (d_r * d_r);
                }
                out[k] = acc;
            }
        }
        out
    }

    /// The affine contribution of a unit jump: `apply_l(0, 1)`.
    pub fn jump_vector(&self) -> Vec<S> {
        self.apply_l(&vec![S::zero(); self.grid.node_count()], S::one())
    }

    /// Assemble `L*` as a banded matrix.
    pub fn assemble_l_star(&self) -> BandedMatrix<S> {
        let g = &self.grid;
        let (nt, nr) = (g.n_theta, g.n_r);
        let (d_theta, d_r) = (g.d_theta(), g.d_r());
        let half = c64::<S>(0.5);
        let mut m = BandedMatrix::new(g.node_count(), nt, nt);
        for j in 0..nr {
            let wj = g.w(j);
            for i in 0..nt {
                let k = g.idx(i, j);
                let ip = (i + 1) % nt;
                let im = (i + nt - 1) % nt;
                let (c_r, d_rr) = self.face_t(i, j);
                let (c_l, d_ll) = self.face_t(im, j);
                // -(J_{i+1/2} - J_{i-1/2})/d_theta
                m.add(k, k, -(c_r * half + d_rr / d_theta) / d_theta);
                m.add(k, g.idx(ip, j), -(c_r * half - d_rr / d_theta) / d_theta);
                m.add(k, g.idx(im, j), (c_l * half + d_ll / d_theta) / d_theta);
                m.add(k, k, (c_l * half - d_ll / d_theta) / d_theta);
                if j + 1 < nr {
                    let (c, d) = self.face_r(i, j);
                    m.add(k, k, -(c * half + d / d_r) / (wj * d_r));
                    m.add(k, g.idx(i, j + 1), -(c * half - d / d_r) / (wj * d_r));
                }
                if j > 0 {
                    let (c, d) = self.face_r(i, j - 1);
                    m.add(k, g.idx(i, j - 1), (c * half + d / d_r) / (wj * d_r));
                    m.add(k, k, (c * half - d / d_r) / (wj * d_r));
                }
            }
        }
        m
    }

    /// Assemble `L` as a banded matrix (wrap entries carry no offset; the
    /// jump enters the right-hand side through [`jump_vector`](Self::jump_vector)).
    pub fn assemble_l(&self) -> BandedMatrix<S> {
        let g = &self.grid;
        let (nt, nr) = (g.n_theta, g.n_r);
        let (d_theta, d_r) = (g.d_theta(), g.d_r());
        let two = c64::<S>(2.0);
        let mut m = BandedMatrix::new(g.node_count(), nt, nt);
        for j in 0..nr {
            for i in 0..nt {
                let k = g.idx(i, j);
                let ip = (i + 1) % nt;
                let im = (i + nt - 1) % nt;
                let (c_r, d_rr) = self.face_t(i, j);
                let (c_l, d_ll) = self.face_t(im, j);
                m.add(k, g.idx(ip, j), c_r / (two * d_theta) + d_rr / (d_theta * d_theta));
                m.add(
                    k,
                    k,
                    (c_l - c_r) / (two * d_theta) - (d_rr + d_ll) / (d_theta * d_theta),
                );
                m.add(k, g.idx(im, j), -c_l / (two * d_theta) + d_ll / (d_theta * d_theta));
                if j == 0 {
                    let (c, d) = self.face_r(i, 0);
                    let coeff = (c + two * d / d_r) / d_r;
                    m.add(k, g.idx(i, 1), coeff);
                    m.add(k, k, -coeff);
                } else if j == nr - 1 {
                    let (c, d) = self.face_r(i, nr - 2);
                    let coeff = (c - two * d / d_r) / d_r;
                    m.add(k, k, coeff);
                    m.add(k, g.idx(i, nr - 2), -coeff);
                } else {
                    let (c_u, d_u) = self.face_r(i, j);
                    let (c_d, d_d) = self.face_r(i, j - 1);
                    m.add(k, g.idx(i, j + 1), c_u / (two * d_r) + d_u / (d_r * d_r));
                    m.add(k, k, (c_d - c_u) / (two * d_r) - (d_u + d_d) / (d_r * d_r));
                    m.add(k, g.idx(i, j - 1), -c_d / (two * d_r) + d_d / (d_r * d_r));
                }
            }
        }
        m
    }

    /// Stationary probability current at the nodes:
    /// `J_j = a_j rho - d_j(D_j rho)`, centered in the interior and
    /// one-sided at the radial boundaries.
    pub fn current(&self, rho: &[S]) -> (Vec<S>, Vec<S>) {
        let g = &self.grid;
        let (nt, nr) = (g.n_theta, g.n_r);
        let (d_theta, d_r) = (g.d_theta(), g.d_r());
        let half = c64::<S>(0.5);
        let mut j_theta = vec![S::zero(); nt * nr];
        let mut j_r = vec![S::zero(); nt * nr];
        let dd_t: Vec<S> = (0..nt * nr).map(|k| self.dd_theta[k] * rho[k]).collect();
        let dd_r: Vec<S> = (0..nt * nr).map(|k| self.dd_r[k] * rho[k]).collect();
        for j in 0..nr {
            for i in 0..nt {
                let k = g.idx(i, j);
                let ip = g.idx((i + 1) % nt, j);
                let im = g.idx((i + nt - 1) % nt, j);
                j_theta[k] = self.a_theta[k] * rho[k] - (dd_t[ip] - dd_t[im]) * half / d_theta;
                let ddr = if j == 0 {
                    (dd_r[g.idx(i, 1)] - dd_r[k]) / d_r
                } else if j == nr - 1 {
                    (dd_r[k] - dd_r[g.idx(i, nr - 2)]) / d_r
                } else {
                    (dd_r[g.idx(i, j + 1)] - dd_r[g.idx(i, j - 1)]) * half / d_r
                };
                j_r[k] = self.a_r[k] * rho[k] - ddr;
            }
        }
        (j_theta, j_r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_model;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    fn entry(name: &str, kv: &[(&str, f64)]) -> ModelCatalogEntry<f64> {
        let params: BTreeMap<String, f64> =
            kv.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        make_model(name, &params).unwrap()
    }

    fn weighted_dot(g: &AnnulusGrid<f64>, a: &[f64], b: &[f64]) -> f64 {
        let mut acc = 0.0;
        for j in 0..g.n_r {
            for i in 0..g.n_theta {
                let k = g.idx(i, j);
                acc += a[k] * b[k] * g.w(j);
            }
        }
        acc
    }

    #[test]
    fn l_annihilates_constants() {
        let e = entry("amplitude_phase", &[("sigma", 0.3), ("kappa", 2.0)]);
        let g = AnnulusGrid::new(32, 12, 0.3, 2.0).unwrap();
        let ops = build_operators(&e, &g).unwrap();
        let ones = vec![1.0; g.node_count()];
        for v in ops.apply_l(&ones, 0.0) {
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn discrete_adjointness_in_the_weighted_inner_product() {
        let e = entry("noisy_phase", &[("sigma", 0.25), ("sigma_theta", 0.2), ("kappa", 2.0)]);
        let g = AnnulusGrid::new(24, 10, 0.3, 2.0).unwrap();
        let ops = build_operators(&e, &g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let u: Vec<f64> = (0..g.node_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..g.node_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let lu = ops.apply_l(&u, 0.0);
            let lsv = ops.apply_l_star(&v);
            let lhs = weighted_dot(&g, &lu, &v);
            let rhs = weighted_dot(&g, &u, &lsv);
            let scale = lhs.abs().max(rhs.abs()).max(1.0);
            assert!(
                (lhs - rhs).abs() / scale <= 1e-10,
                "adjointness violated: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn mass_conservation_is_exact() {
        let e = entry("hopf_linear", &[("sigma", 0.5)]);
        let g = AnnulusGrid::new(24, 10, 0.3, 2.0).unwrap();
        let ops = build_operators(&e, &g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rho: Vec<f64> = (0..g.node_count()).map(|_| rng.gen_range(0.0..1.0)).collect();
        let div = ops.apply_l_star(&rho);
        assert_abs_diff_eq!(g.integrate(&div), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn assembled_matrices_match_matrix_free_application() {
        let e = entry("amplitude_phase", &[("sigma", 0.3), ("kappa", 2.0)]);
        let g = AnnulusGrid::new(16, 8, 0.3, 2.0).unwrap();
        let ops = build_operators(&e, &g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u: Vec<f64> = (0..g.node_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let l = ops.assemble_l();
        for (a, b) in l.matvec(&u).iter().zip(ops.apply_l(&u, 0.0)) {
            assert_abs_diff_eq!(a, &b, epsilon = 1e-12);
        }
        let ls = ops.assemble_l_star();
        for (a, b) in ls.matvec(&u).iter().zip(ops.apply_l_star(&u)) {
            assert_abs_diff_eq!(a, &b, epsilon = 1e-12);
        }
    }
}
