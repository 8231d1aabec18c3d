//! Stationary Fokker-Planck density on the annulus: solve the singular
//! system `L* rho = 0` with one node pinned, then renormalize.

use crate::error::MrtError;
use crate::scalar::{c64, Real};

use super::operators::DiscreteOperators;

#[derive(Clone, Debug)]
pub struct DensityField<S> {
    pub values: Vec<S>,
    /// normalized solution before clipping; an exact discrete null vector
    /// of `L*` up to solver roundoff, used for compatibility projections
    pub raw_values: Vec<S>,
    /// max-norm residual of `L* rho` after normalization
    pub residual_inf: S,
    /// nodes clipped from slightly negative to zero
    pub clipped: usize,
    /// most negative pre-clip value relative to the maximum
    pub min_relative: S,
    /// radial row of the density mode (gauge anchor surrogate for the cycle)
    pub mode_row: usize,
}

/// Solve with the default negativity tolerance (1e-12 relative), the
/// contract for acceptance-scale grids.
pub fn stationary_density<S: Real>(
    ops: &DiscreteOperators<S>,
) -> Result<DensityField<S>, MrtError> {
    stationary_density_with_tol(ops, c64(1e-12))
}

/// Solve `L* rho = 0`, erroring when the pre-normalization undershoot is
/// below `-neg_tol * max(rho)`. Coarse grids outside the acceptance
/// envelope develop boundary-layer undershoot in the density tails and may
/// pass a larger tolerance explicitly.
pub fn stationary_density_with_tol<S: Real>(
    ops: &DiscreteOperators<S>,
    neg_tol: S,
) -> Result<DensityField<S>, MrtError> {
    let g = &ops.grid;
    let n = g.node_count();
    // pin the node at theta = 0 nearest the deterministic cycle r = 1
    let j_pin = (0..g.n_r)
        .min_by(|&a, &b| {
            (g.r(a) - S::one())
                .abs()
                .partial_cmp(&(g.r(b) - S::one()).abs())
                .unwrap()
        })
        .unwrap();
    let pin = g.idx(0, j_pin);

    let mut m = ops.assemble_l_star();
    m.set_unit_row(pin);
    m.factor()?;
    let mut rhs = vec![S::zero(); n];
    rhs[pin] = S::one();
    let mut rho = m.solve(&rhs);

    // negativity check: tolerate tiny undershoot, clip and report
    let max = rho.iter().fold(S::zero(), |a, &b| a.max(b));
    let min = rho.iter().fold(S::infinity(), |a, &b| a.min(b));
    if min < -neg_tol * max {
        return Err(MrtError::NegativeMass((min / max).to_f64().unwrap()));
    }
    let raw = rho.clone();
    let mut clipped = 0;
    for v in rho.iter_mut() {
        if *v < S::zero() {
            *v = S::zero();
            clipped += 1;
        }
    }
    let mass = g.integrate(&rho);
    if mass <= S::zero() {
        return Err(MrtError::SingularSystem("nonpositive total mass".into()));
    }
    let raw_mass = g.integrate(&raw);
    let raw_values: Vec<S> = raw.iter().map(|&v| v / raw_mass).collect();
    for v in rho.iter_mut() {
        *v = *v / mass;
    }

    let resid = ops.apply_l_star(&rho);
    let residual_inf = resid.iter().fold(S::zero(), |a, &b| a.max(b.abs()));

    let marginal = g.radial_marginal(&rho);
    let mode_row = (0..g.n_r)
        .max_by(|&a, &b| marginal[a].partial_cmp(&marginal[b]).unwrap())
        .unwrap();

    Ok(DensityField {
        values: rho,
        raw_values,
        residual_inf,
        clipped,
        min_relative: min / max,
        mode_row,
    })
}

#[cfg(test)]
mod tests {
    use super::super::grid::AnnulusGrid;
    use super::super::operators::build_operators;
    use super::*;
    use crate::model::make_model;
    use approx::assert_abs_diff_eq;
    use std::collections::BTreeMap;

    fn hopf(sigma: f64) -> crate::model::ModelCatalogEntry<f64> {
        let params: BTreeMap<String, f64> = [("sigma".to_string(), sigma)].into();
        make_model("hopf_linear", &params).unwrap()
    }

    #[test]
    fn normalization_and_positivity() {
        let e = hopf(0.5);
        let g = AnnulusGrid::new(64, 32, 0.3, 2.0).unwrap();
        let ops = build_operators(&e, &g).unwrap();
        let rho = stationary_density(&ops).unwrap();
        assert_abs_diff_eq!(g.integrate(&rho.values), 1.0, epsilon = 1e-12);
        assert!(rho.values.iter().all(|&v| v >= 0.0));
        assert!(rho.residual_inf <= 1e-9, "residual {}", rho.residual_inf);
    }

    #[test]
    fn radial_marginal_matches_analytic_density() {
        let e = hopf(0.5);
        let g = AnnulusGrid::new(128, 64, 0.3, 2.0).unwrap();
        let ops = build_operators(&e, &g).unwrap();
        let rho = stationary_density(&ops).unwrap();
        let marginal = g.radial_marginal(&rho.values);
        // analytic p(r) ~ r^(2/sigma^2-1) e^(-r^2/sigma^2), normalized on
        // the annulus by the same trapezoid rule
        let p = e.analytic.radial_density.as_ref().unwrap();
        let raw: Vec<f64> = (0..g.n_r).map(|j| p(g.r(j))).collect();
        let mass: f64 = (0..g.n_r).map(|j| raw[j] * g.w(j)).sum::<f64>() * g.d_r();
        let mut worst: f64 = 0.0;
        for j in 0..g.n_r {
            worst = worst.max((marginal[j] - raw[j] / mass).abs());
        }
        assert!(worst <= 3e-2, "max marginal error {worst}");
    }

    #[test]
    fn theta_marginal_is_uniform_for_skew_models() {
        let e = hopf(0.4);
        let g = AnnulusGrid::new(64, 32, 0.3, 2.0).unwrap();
        let ops = build_operators(&e, &g).unwrap();
        let rho = stationary_density(&ops).unwrap();
        let tm = g.theta_marginal(&rho.values);
        let mean = tm.iter().sum::<f64>() / tm.len() as f64;
        for v in tm {
            assert!((v - mean).abs() <= 1e-3 * mean, "theta marginal wobble");
        }
    }

    #[test]
    fn analytic_density_is_a_near_null_vector() {
        // L* applied to the discretized analytic density has small residual
        let e = hopf(0.5);
        let g = AnnulusGrid::new(64, 32, 0.3, 2.0).unwrap();
        let ops = build_operators(&e, &g).unwrap();
        let p = e.analytic.radial_density.as_ref().unwrap();
        let mut rho: Vec<f64> = (0..g.node_count())
            .map(|k| p(g.r(k / g.n_theta)))
            .collect();
        let mass = g.integrate(&rho);
        rho.iter_mut().for_each(|v| *v /= mass);
        let resid = ops.apply_l_star(&rho);
        let worst = resid.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        // boundary rows are first-order; interior second-order
        assert!(worst <= 2e-2, "analytic-density residual {worst}");
    }

    #[test]
    fn analytic_density_residual_at_reference_resolution() {
        let e = hopf(0.5);
        let g = AnnulusGrid::new(256, 128, 0.3, 2.0).unwrap();
        let ops = build_operators(&e, &g).unwrap();
        let p = e.analytic.radial_density.as_ref().unwrap();
        let mut rho: Vec<f64> = (0..g.node_count())
            .map(|k| p(g.r(k / g.n_theta)))
            .collect();
        let mass = g.integrate(&rho);
        rho.iter_mut().for_each(|v| *v /= mass);
        let resid = ops.apply_l_star(&rho);
        let worst = resid.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        assert!(worst <= 1e-3, "analytic-density residual {worst} at 256x128");
    }
}
