//! Monte-Carlo bridges between the pathwise and averaged viewpoints: the
//! expected random period against the flux period, both sides of the
//! expected-period identity, and the open-problem double-expectation probe.

use rayon::prelude::*;

use crate::crps::{crps_eval, random_period, RStarCache};
use crate::error::MrtError;
use crate::isochron::isochron_map;
use crate::model::ModelCatalogEntry;
use crate::noise::NoisePath;
use crate::scalar::{c64, two_pi, Real};
use crate::stats::{ks_two_sample, mean_se};

use super::grid::AnnulusGrid;
use super::pde::MrtFields;

/// Round `x` up to a multiple of `dt` (path horizons must be grid-aligned).
fn align_up(x: f64, dt: f64) -> f64 {
    (x / dt).ceil() * dt
}

/// Ensemble settings for the comparison runs.
#[derive(Clone, Debug)]
pub struct EnsembleConfig {
    pub n_paths: usize,
    pub seed0: u64,
    pub dt: f64,
    pub s_trunc: f64,
}

#[derive(Clone, Debug)]
pub struct PeriodCompareReport<S> {
    /// Monte-Carlo mean and s.e. of the random period.
    pub mean_t: S,
    pub se_t: S,
    /// flux-based mean period and its numerical uncertainty estimate
    pub t_bar: S,
    pub t_bar_uncertainty: S,
    /// left- and right-hand sides of the expected-period identity
    pub dynkin_lhs: S,
    pub dynkin_rhs: S,
    /// s.e. of the per-path identity-gap statistic
    pub dynkin_gap_se: S,
    /// two-sample KS statistic between the radial laws of the endpoint
    /// samples (the equal-distribution hypothesis, measured not assumed)
    pub ks_radial: S,
    pub n_used: usize,
    pub n_dropped: usize,
    pub periods: Vec<S>,
}

impl<S: Real> PeriodCompareReport<S> {
    pub fn combined_se(&self) -> S {
        (self.se_t * self.se_t + self.t_bar_uncertainty * self.t_bar_uncertainty).sqrt()
    }
}

/// Sample `T(w)` over an ensemble and compare with the averaged period and
/// the expected-period identity, interpolating the solved `u` at the CRPS
/// endpoints. Endpoint radii outside the grid are dropped and counted.
pub fn expected_period_compare<S: Real>(
    entry: &ModelCatalogEntry<S>,
    grid: &AnnulusGrid<S>,
    fields: &MrtFields<S>,
    t_bar_uncertainty: S,
    cfg: &EnsembleConfig,
) -> Result<PeriodCompareReport<S>, MrtError> {
    let skew = entry.skew()?;
    let k_h = skew.phase_speed_floor(entry.region);
    let t_max = (two_pi::<S>() / k_h).to_f64().unwrap();
    let s_min = -align_up(t_max + 1.0, cfg.dt);
    let horizon = align_up(-s_min + cfg.s_trunc + 1.0, cfg.dt);
    let dt = c64::<S>(cfg.dt);

    let results: Vec<Result<(S, S, S), MrtError>> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let path = NoisePath::<S>::sample(
                cfg.seed0 + i as u64,
                dt,
                c64(horizon),
                entry.primary().channels().max(1),
            )
            .map_err(crate::error::CrpsError::from)?;
            let cache = RStarCache::new(entry, &path, c64(s_min), S::zero(), c64(cfg.s_trunc))?;
            let (t, _) = random_period(&cache, entry)?;
            let r0 = cache.r_star(S::zero())?;
            let rt = cache.r_star(-t)?;
            Ok((t, r0, rt))
        })
        .collect();

    let mut periods = Vec::with_capacity(cfg.n_paths);
    let mut gaps = Vec::with_capacity(cfg.n_paths);
    let mut r0s = Vec::with_capacity(cfg.n_paths);
    let mut rts = Vec::with_capacity(cfg.n_paths);
    let mut u_starts = Vec::with_capacity(cfg.n_paths);
    let mut u_ends = Vec::with_capacity(cfg.n_paths);
    let mut dropped = 0usize;
    let tau = two_pi::<S>();
    for res in results {
        let (t, r0, rt) = res?;
        // u at psi(0, w) = (theta = 0, r0) and at
        // psi(-T, theta_{-T} w) = (theta = -2 pi, rt), via the
        // jump-periodic extension; extrapolation outside the grid refused
        let (u0, ut) = match (
            fields.u_at(grid, S::zero(), r0),
            fields.u_at(grid, -tau, rt),
        ) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                dropped += 1;
                continue;
            }
        };
        periods.push(t);
        r0s.push(r0);
        rts.push(rt);
        u_starts.push(ut);
        u_ends.push(u0);
        gaps.push(t - (ut - u0));
    }
    let (mean_t, se_t) = mean_se(&periods);
    let (mean_u_start, _) = mean_se(&u_starts);
    let (mean_u_end, _) = mean_se(&u_ends);
    let (_, gap_se) = mean_se(&gaps);
    Ok(PeriodCompareReport {
        mean_t,
        se_t,
        t_bar: fields.t_bar,
        t_bar_uncertainty,
        dynkin_lhs: mean_t,
        dynkin_rhs: mean_u_start - mean_u_end,
        dynkin_gap_se: gap_se,
        ks_radial: ks_two_sample(&r0s, &rts),
        n_used: periods.len(),
        n_dropped: dropped,
        periods,
    })
}

#[derive(Clone, Debug)]
pub struct DoubleExpectationRow<S> {
    pub t: S,
    pub double_mean: S,
    pub se: S,
    pub rejected: usize,
}

/// Nested Monte-Carlo probe of the open double-expectation identity: outer
/// paths realize `psi(t, theta_t w)`; inner independent paths evaluate the
/// random isochron map at those points. Report-only by construction: the
/// identity is an open problem, so no pass/fail is attached.
pub fn probe_double_expectation<S: Real>(
    entry: &ModelCatalogEntry<S>,
    t_list: &[S],
    n_outer: usize,
    n_inner: usize,
    seed0: u64,
    dt: S,
    t_h: S,
    s_trunc: S,
) -> Result<Vec<DoubleExpectationRow<S>>, MrtError> {
    let t_max = t_list.iter().fold(S::zero(), |a, &b| a.max(b));
    let channels = entry.primary().channels().max(1);
    let dt_f = dt.to_f64().unwrap();
    // outer points psi(t, theta_t w): radius r*(theta_t w), phase Phi(t);
    // the cache anchor at -s_trunc needs another s_trunc of path below it
    let outer: Vec<Vec<[S; 2]>> = (0..n_outer)
        .into_par_iter()
        .map(|i| {
            let horizon = align_up(
                (t_max + s_trunc + s_trunc + S::one()).to_f64().unwrap(),
                dt_f,
            );
            let path =
                NoisePath::<S>::sample(seed0 + i as u64, dt, c64(horizon), channels)
                    .map_err(crate::error::CrpsError::from)?;
            let cache = RStarCache::new(entry, &path, -s_trunc, t_max, s_trunc)?;
            t_list
                .iter()
                .map(|&t| Ok([cache.phase(t)?, cache.r_star(t)?]))
                .collect::<Result<Vec<_>, crate::error::CrpsError>>()
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(MrtError::Crps)?;

    // inner machinery: independent paths with their own caches
    let inner_seeds: Vec<u64> = (0..n_inner).map(|j| seed0 + 100_000 + j as u64).collect();
    let per_t: Vec<DoubleExpectationRow<S>> = t_list
        .iter()
        .enumerate()
        .map(|(ti, &t)| {
            let stats: Vec<(Vec<S>, usize)> = inner_seeds
                .par_iter()
                .map(|&seed| {
                    // the inner map inverts the phase over one random period,
                    // so the cache reaches one period (plus margin) into the
                    // past, with the r* quadrature window below that
                    let back = align_up(
                        (two_pi::<S>()
                            / entry.skew().map(|s| s.phase_speed_floor(entry.region)).unwrap_or(S::one()))
                        .to_f64()
                        .unwrap()
                            + 1.0,
                        dt_f,
                    );
                    let horizon =
                        align_up((t_h + s_trunc).to_f64().unwrap() + back + 1.0, dt_f);
                    let path = match NoisePath::<S>::sample(seed, dt, c64(horizon), channels) {
                        Ok(p) => p,
                        Err(_) => return (Vec::new(), n_outer),
                    };
                    let cache = match RStarCache::new(
                        entry,
                        &path,
                        c64::<S>(-back),
                        t_h,
                        s_trunc,
                    ) {
                        Ok(c) => c,
                        Err(_) => return (Vec::new(), n_outer),
                    };
                    let mut vals = Vec::with_capacity(n_outer);
                    let mut rejected = 0usize;
                    for pts in &outer {
                        let y = pts[ti];
                        match isochron_map(entry, &path, &cache, y, S::zero(), t_h) {
                            Ok(v) => vals.push(v),
                            Err(_) => rejected += 1,
                        }
                    }
                    (vals, rejected)
                })
                .collect();
            let inner_means: Vec<S> = stats
                .iter()
                .filter(|(v, _)| !v.is_empty())
                .map(|(v, _)| v.iter().copied().sum::<S>() / S::from_usize(v.len()).unwrap())
                .collect();
            let rejected = stats.iter().map(|(_, r)| r).sum();
            let (double_mean, se) = mean_se(&inner_means);
            DoubleExpectationRow {
                t,
                double_mean,
                se,
                rejected,
            }
        })
        .collect();
    Ok(per_t)
}

/// Ensemble of CRPS periods only (for period CSV experiments).
pub fn period_ensemble<S: Real>(
    entry: &ModelCatalogEntry<S>,
    cfg: &EnsembleConfig,
) -> Result<Vec<(u64, S)>, MrtError> {
    let skew = entry.skew()?;
    let k_h = skew.phase_speed_floor(entry.region);
    let t_max = (two_pi::<S>() / k_h).to_f64().unwrap();
    let s_min = -align_up(t_max + 1.0, cfg.dt);
    let horizon = align_up(-s_min + cfg.s_trunc + 1.0, cfg.dt);
    let dt = c64::<S>(cfg.dt);
    (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let seed = cfg.seed0 + i as u64;
            let path = NoisePath::<S>::sample(
                seed,
                dt,
                c64(horizon),
                entry.primary().channels().max(1),
            )
            .map_err(crate::error::CrpsError::from)?;
            let cache = RStarCache::new(entry, &path, c64(s_min), S::zero(), c64(cfg.s_trunc))?;
            let (t, _) = random_period(&cache, entry)?;
            Ok((seed, t))
        })
        .collect()
}

/// Check that psi endpoints evaluated through the CRPS cache stay
/// consistent with direct evaluation (diagnostic used by experiments).
pub fn crps_point_probe<S: Real>(
    entry: &ModelCatalogEntry<S>,
    seed: u64,
    dt: S,
    s_trunc: S,
) -> Result<[S; 2], MrtError> {
    let horizon = (s_trunc + c64::<S>(2.0)).to_f64().unwrap();
    let path = NoisePath::<S>::sample(seed, dt, c64(horizon), entry.primary().channels().max(1))
        .map_err(crate::error::CrpsError::from)?;
    let cache = RStarCache::new(entry, &path, -S::one(), S::zero(), s_trunc)?;
    Ok(crps_eval(&cache, S::zero(), S::zero())?)
}

#[cfg(test)]
mod tests {
    use super::super::density::stationary_density_with_tol;
    use super::super::operators::build_operators;
    use super::super::pde::{mean_flux_period, solve_mrt};
    use super::*;
    use crate::model::make_model;
    use std::collections::BTreeMap;
    use std::f64::consts::TAU;

    fn entry(name: &str, kv: &[(&str, f64)]) -> ModelCatalogEntry<f64> {
        let params: BTreeMap<String, f64> =
            kv.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        make_model(name, &params).unwrap()
    }

    #[test]
    fn hopf_compare_is_exact_per_path() {
        // T(w) = 2 pi for every path; the identity is trivially balanced
        let e = entry("hopf_linear", &[("sigma", 0.3)]);
        let g = AnnulusGrid::new(32, 16, 0.3, 2.0).unwrap();
        let ops = build_operators(&e, &g).unwrap();
        let rho = stationary_density_with_tol(&ops, 1e-2).unwrap();
        let flux = mean_flux_period(&ops, &rho, |_| 0.0).unwrap();
        let fields = solve_mrt(&ops, &rho, &flux).unwrap();
        let cfg = EnsembleConfig {
            n_paths: 40,
            seed0: 7,
            dt: 1e-2,
            s_trunc: 20.0,
        };
        let rep = expected_period_compare(&e, &g, &fields, 1e-3, &cfg).unwrap();
        assert!(rep.n_dropped <= 2, "dropped {}", rep.n_dropped);
        assert!((rep.mean_t - TAU).abs() <= 1e-6);
        assert!(
            (rep.dynkin_lhs - rep.dynkin_rhs).abs() <= 2.0 * rep.dynkin_gap_se.max(2e-3),
            "identity gap {} vs se {}",
            rep.dynkin_lhs - rep.dynkin_rhs,
            rep.dynkin_gap_se
        );
    }

    #[test]
    fn double_expectation_probe_runs_hopf() {
        // phase decouples: the double mean equals t up to Monte-Carlo error
        let e = entry("hopf_linear", &[("sigma", 0.3)]);
        let rows = probe_double_expectation(
            &e,
            &[0.0, 1.0],
            6,
            6,
            11,
            1e-2,
            8.0,
            20.0,
        )
        .unwrap();
        assert_eq!(rows.len(), 2);
        // t = 0 is the gauge
        assert!(rows[0].double_mean.abs() <= 1e-6, "{:?}", rows[0]);
        assert!(
            (rows[1].double_mean - 1.0).abs() <= 1e-4,
            "{:?}",
            rows[1]
        );
    }
}
