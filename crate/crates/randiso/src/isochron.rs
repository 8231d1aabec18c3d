//! Random forward isochrons as radius-parameterized curves, the asymptotic
//! phase lag, the random isochron map, and the invariance laws connecting
//! them.
//!
//! The asymptotic phase of a state is measured by integrating the polar
//! flow and differencing its unwrapped phase against the anchor CRPS
//! trajectory: phase differences converge at the negative Lyapunov rate,
//! while absolute positions keep moving. Isochron curves are computed by
//! secant shooting in the angle at each grid radius.

use crate::crps::RStarCache;
use crate::error::IsochronError;
use crate::flow::{flow, Scheme};
use crate::model::ModelCatalogEntry;
use crate::noise::NoisePath;
use crate::scalar::{c64, two_pi, Real};

/// A sampled random forward isochron in graph form `theta(r)`.
#[derive(Clone, Debug)]
pub struct IsochronCurve<S> {
    /// Anchor phase on the attractor fiber (the curve passes through
    /// `(anchor_phase, r*(w))`).
    pub anchor_phase: S,
    pub anchor_radius: S,
    /// `(r_i, theta_i)` samples; gaps are recorded separately.
    pub samples: Vec<(S, S)>,
    /// Residual asymptotic-phase lag at each accepted sample.
    pub residuals: Vec<S>,
    /// Grid radii where the secant failed.
    pub gaps: Vec<S>,
    /// Shooting horizon used.
    pub horizon: S,
    /// Estimated contraction rate onto the anchor trajectory (positive).
    pub lambda_tilde: S,
    /// Continuity diagnostic `max |theta_{i+1} - theta_i| / dr`.
    pub continuity: S,
}

/// Asymptotic phase lag of the polar state `y` relative to the CRPS
/// anchored at phase zero: the settled value of
/// `phase(phi(t, w, y)) - Phi(t)` at the horizon.
///
/// Errors when the lag still drifts more than `drift_tol` over the last
/// quarter of the horizon.
pub fn asymptotic_phase_lag<S: Real>(
    entry: &ModelCatalogEntry<S>,
    path: &NoisePath<S>,
    cache: &RStarCache<S>,
    y: [S; 2],
    t_h: S,
    drift_tol: S,
) -> Result<S, IsochronError> {
    let spec = entry.polar_spec().map_err(crate::error::CrpsError::from)?;
    let dt = path.dt();
    let res = flow(
        spec,
        path,
        S::zero(),
        t_h,
        y,
        dt,
        Scheme::HeunStratonovich,
        Some(entry.guard_radius()),
    )?;
    let lag_at = |t: S, theta: S| -> Result<S, IsochronError> {
        Ok(theta - cache.phase(t).map_err(IsochronError::Crps)?)
    };
    let n = res.states.len() - 1;
    let k_quarter = (n as f64 * 0.75).round() as usize;
    let t_q = dt * S::from_usize(k_quarter).unwrap();
    let lag_end = lag_at(t_h, res.states[n][0])?;
    let lag_q = lag_at(t_q, res.states[k_quarter][0])?;
    let drift = (lag_end - lag_q).abs();
    if drift > drift_tol {
        return Err(IsochronError::NonConvergence {
            drift: drift.to_f64().unwrap(),
        });
    }
    Ok(lag_end)
}

/// Shoot the forward isochron through the attractor point at
/// `anchor_phase`: for each grid radius, solve `lag(theta, r) =
/// anchor_phase` by secant iteration (at most `max_iter`, tolerance
/// `tol` in the lag). Failures are recorded as gaps and the curve is
/// still returned.
#[allow(clippy::too_many_arguments)]
pub fn forward_isochron<S: Real>(
    entry: &ModelCatalogEntry<S>,
    path: &NoisePath<S>,
    cache: &RStarCache<S>,
    anchor_phase: S,
    r_grid: &[S],
    t_h: S,
    tol: S,
    max_iter: usize,
) -> Result<IsochronCurve<S>, IsochronError> {
    let anchor_radius = cache.r_star(S::zero()).map_err(IsochronError::Crps)?;
    let (r1, r2) = entry.region;
    if anchor_radius < r1 || anchor_radius > r2 {
        return Err(IsochronError::AnchorOutside(
            anchor_radius.to_f64().unwrap(),
        ));
    }
    let drift_tol = c64::<S>(1e-4);
    let lag = |theta: S, r: S| -> Result<S, IsochronError> {
        asymptotic_phase_lag(entry, path, cache, [theta, r], t_h, drift_tol)
    };

    let mut samples = Vec::with_capacity(r_grid.len());
    let mut residuals = Vec::with_capacity(r_grid.len());
    let mut gaps = Vec::new();
    let mut theta_guess = anchor_phase;
    for &r in r_grid {
        let mut th0 = theta_guess;
        let mut f0 = match lag(th0, r) {
            Ok(v) => v - anchor_phase,
            Err(_) => {
                gaps.push(r);
                continue;
            }
        };
        let mut th1 = th0 - f0; // exact for phase-equivariant models
        let mut converged = false;
        for _ in 0..max_iter {
            if f0.abs() <= tol {
                th1 = th0;
                converged = true;
                break;
            }
            let f1 = match lag(th1, r) {
                Ok(v) => v - anchor_phase,
                Err(_) => break,
            };
            if f1.abs() <= tol {
                converged = true;
                break;
            }
            let denom = f1 - f0;
            if denom.abs() < S::epsilon() {
                break;
            }
            let th2 = th1 - f1 * (th1 - th0) / denom;
            th0 = th1;
            f0 = f1;
            th1 = th2;
        }
        if converged {
            let resid = lag(th1, r).map(|v| v - anchor_phase).unwrap_or(f0);
            samples.push((r, th1));
            residuals.push(resid.abs());
            theta_guess = th1;
        } else {
            gaps.push(r);
        }
    }

    // contraction-rate diagnostic from a mid-grid sample
    let lambda_tilde = if let Some(&(r_mid, th_mid)) = samples.get(samples.len() / 2) {
        estimate_contraction_rate(entry, path, cache, [th_mid, r_mid], anchor_phase, t_h)
            .unwrap_or(S::zero())
    } else {
        S::zero()
    };

    let mut continuity = S::zero();
    for w in samples.windows(2) {
        let dr = (w[1].0 - w[0].0).abs();
        if dr > S::epsilon() {
            continuity = continuity.max((w[1].1 - w[0].1).abs() / dr);
        }
    }

    Ok(IsochronCurve {
        anchor_phase,
        anchor_radius,
        samples,
        residuals,
        gaps,
        horizon: t_h,
        lambda_tilde,
        continuity,
    })
}

/// Distances `d(phi(t, w, y), phi(t, w, x))` at a grid of times between a
/// curve point and its anchor, for the exponential-contraction check.
pub fn contraction_profile<S: Real>(
    entry: &ModelCatalogEntry<S>,
    path: &NoisePath<S>,
    cache: &RStarCache<S>,
    y: [S; 2],
    anchor_phase: S,
    t_list: &[S],
) -> Result<Vec<(S, S)>, IsochronError> {
    let spec = entry.polar_spec().map_err(crate::error::CrpsError::from)?;
    let dt = path.dt();
    let t_max = t_list.iter().fold(S::zero(), |a, &b| a.max(b));
    let anchor_r = cache.r_star(S::zero()).map_err(IsochronError::Crps)?;
    let fy = flow(spec, path, S::zero(), t_max, y, dt, Scheme::HeunStratonovich, None)?;
    let fx = flow(
        spec,
        path,
        S::zero(),
        t_max,
        [anchor_phase, anchor_r],
        dt,
        Scheme::HeunStratonovich,
        None,
    )?;
    let mut out = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let k = (t / dt).to_f64().unwrap().round() as usize;
        let a = fy.states[k];
        let b = fx.states[k];
        // planar distance between polar states
        let (pa, pb) = (
            [a[1] * a[0].cos(), a[1] * a[0].sin()],
            [b[1] * b[0].cos(), b[1] * b[0].sin()],
        );
        let d = ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2)).sqrt();
        out.push((t, d));
    }
    Ok(out)
}

fn estimate_contraction_rate<S: Real>(
    entry: &ModelCatalogEntry<S>,
    path: &NoisePath<S>,
    cache: &RStarCache<S>,
    y: [S; 2],
    anchor_phase: S,
    t_h: S,
) -> Result<S, IsochronError> {
    // the distance from an on-isochron point to its anchor trajectory
    // decays at the stable rate; fit while it is still well above the
    // shooting-tolerance floor
    let t_fit: Vec<S> = (1..=6)
        .map(|k| c64::<S>(k as f64 * 0.5))
        .filter(|&t| t < t_h)
        .collect();
    let prof = contraction_profile(entry, path, cache, y, anchor_phase, &t_fit)?;
    // least-squares slope of ln d against t
    let pts: Vec<(S, S)> = prof
        .into_iter()
        .filter(|(_, d)| *d > S::min_positive_value().sqrt())
        .map(|(t, d)| (t, d.ln()))
        .collect();
    if pts.len() < 2 {
        return Ok(S::zero());
    }
    let n = S::from_usize(pts.len()).unwrap();
    let sx = pts.iter().map(|p| p.0).sum::<S>();
    let sy = pts.iter().map(|p| p.1).sum::<S>();
    let sxx = pts.iter().map(|p| p.0 * p.0).sum::<S>();
    let sxy = pts.iter().map(|p| p.0 * p.1).sum::<S>();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    Ok(-slope)
}

/// The random isochron map `phi_tilde(y, w, s)`: the time in
/// `[s, s + T(theta_{-s} w))` whose CRPS point shares the asymptotic phase
/// of `y`. Consistent with `phi_tilde(psi(t + s, w), w, s) = t + s`.
pub fn isochron_map<S: Real>(
    entry: &ModelCatalogEntry<S>,
    path: &NoisePath<S>,
    cache: &RStarCache<S>,
    y: [S; 2],
    s: S,
    t_h: S,
) -> Result<S, IsochronError> {
    let lag = asymptotic_phase_lag(entry, path, cache, y, t_h, c64(1e-4))?;
    let tau = two_pi::<S>();
    // phase value of the parametrization at time s: I(s) = -Phi(-s)
    let i_s = -cache.phase(-s).map_err(IsochronError::Crps)?;
    // shift the measured lag by a whole number of turns into [I(s), I(s) + 2 pi)
    let k = ((i_s - lag) / tau).ceil();
    let target = lag + tau * k;
    let skew = entry.skew().map_err(crate::error::CrpsError::from)?;
    if skew.h_tilde.is_none() {
        // monotone phase: direct inversion of I(tau) = -Phi(-tau)
        let u = cache.invert_phase(-target).map_err(IsochronError::Crps)?;
        Ok(-u)
    } else {
        // noisy phase: first crossing of the target at or after s
        let dt = cache.dt();
        let (w_lo, _) = cache.window();
        let max_steps = ((-w_lo - s.max(S::zero())) / dt).to_f64().unwrap() as usize;
        let mut prev = i_s - target;
        for k in 1..=max_steps {
            let t = s + dt * S::from_usize(k).unwrap();
            let cur = -cache.phase(-t).map_err(IsochronError::Crps)? - target;
            if cur == S::zero() || (cur > S::zero()) != (prev > S::zero()) {
                let span = cur - prev;
                let f = if span.abs() < S::epsilon() {
                    S::zero()
                } else {
                    -prev / span
                };
                return Ok(t - dt + dt * f.max(S::zero()).min(S::one()));
            }
            prev = cur;
        }
        Err(IsochronError::Crps(crate::error::CrpsError::HittingExhausted(
            (-w_lo).to_f64().unwrap(),
        )))
    }
}

/// Residuals of the isochron invariance law: push every sample of `curve`
/// through `phi(s, w, .)`, recompute the isochron at the shifted path
/// through the pushed anchor, and report the max angular mismatch at
/// matched radii.
#[derive(Clone, Debug)]
pub struct InvarianceReport<S> {
    pub max_theta_residual: S,
    pub dropped: usize,
}

#[allow(clippy::too_many_arguments)]
pub fn invariance_residuals<S: Real>(
    entry: &ModelCatalogEntry<S>,
    path: &NoisePath<S>,
    cache: &RStarCache<S>,
    curve: &IsochronCurve<S>,
    s: S,
    t_h: S,
    s_trunc: S,
    tol: S,
) -> Result<InvarianceReport<S>, IsochronError> {
    if s == S::zero() {
        return Ok(InvarianceReport {
            max_theta_residual: S::zero(),
            dropped: 0,
        });
    }
    let spec = entry.polar_spec().map_err(crate::error::CrpsError::from)?;
    let dt = path.dt();
    // pushed anchor: the CRPS point at time s on the shifted fiber
    let pushed_anchor = curve.anchor_phase + cache.phase(s).map_err(IsochronError::Crps)?;
    let shifted = path.shift(s)?;
    let (w_lo, w_hi) = cache.window();
    let cache_s = RStarCache::new(entry, &shifted, w_lo, w_hi - s, s_trunc)
        .map_err(IsochronError::Crps)?;

    // push the curve samples forward
    let mut pushed: Vec<(S, S)> = Vec::new();
    let mut dropped = 0usize;
    let (r1, r2) = entry.region;
    for &(r, theta) in &curve.samples {
        let res = flow(
            spec,
            path,
            S::zero(),
            s,
            [theta, r],
            dt,
            Scheme::HeunStratonovich,
            Some(entry.guard_radius()),
        )?;
        let f = res.final_state();
        if f[1] < r1 || f[1] > r2 {
            dropped += 1;
            continue;
        }
        pushed.push((f[1], f[0]));
    }

    // recompute the isochron at theta_s w through the pushed anchor, on the
    // radii where the pushed points landed
    let radii: Vec<S> = pushed.iter().map(|p| p.0).collect();
    let recomputed = forward_isochron(
        entry,
        &shifted,
        &cache_s,
        pushed_anchor,
        &radii,
        t_h,
        tol,
        30,
    )?;
    let tau = two_pi::<S>();
    let mut max_res = S::zero();
    for ((_, th_push), (_, th_new)) in pushed.iter().zip(&recomputed.samples) {
        let mut d = *th_push - *th_new;
        d = d - tau * (d / tau).round();
        max_res = max_res.max(d.abs());
    }
    Ok(InvarianceReport {
        max_theta_residual: max_res,
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crps::random_period_at;
    use crate::model::make_model;
    use approx::assert_abs_diff_eq;
    use std::collections::BTreeMap;

    fn entry(name: &str, kv: &[(&str, f64)]) -> ModelCatalogEntry<f64> {
        let params: BTreeMap<String, f64> =
            kv.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        make_model(name, &params).unwrap()
    }

    fn setup(
        e: &ModelCatalogEntry<f64>,
        seed: u64,
        dt: f64,
    ) -> (RStarCache<f64>, NoisePath<f64>) {
        let path = NoisePath::sample(seed, dt, 50.0, 2).unwrap();
        let cache = RStarCache::new(e, &path, -14.0, 14.0, 14.0).unwrap();
        (cache, path)
    }

    fn r_grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| 0.3 + 1.7 * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn anchor_has_zero_lag() {
        let e = entry("amplitude_phase", &[("sigma", 0.3), ("kappa", 2.0)]);
        let (cache, path) = setup(&e, 3, 1e-3);
        let r0 = cache.r_star(0.0).unwrap();
        let lag = asymptotic_phase_lag(&e, &path, &cache, [0.9, r0], 10.0, 1e-4).unwrap();
        assert_abs_diff_eq!(lag, 0.9, epsilon = 1e-6);
    }

    #[test]
    fn hopf_lag_decouples_from_radius() {
        // d theta = 1 dt exactly: lag(theta0 + d, r0) - lag(theta0, r0) = d
        let e = entry("hopf_linear", &[("sigma", 0.4)]);
        let (cache, path) = setup(&e, 5, 1e-3);
        let base = asymptotic_phase_lag(&e, &path, &cache, [0.2, 1.4], 10.0, 1e-4).unwrap();
        let moved = asymptotic_phase_lag(&e, &path, &cache, [0.2 + 0.37, 1.4], 10.0, 1e-4).unwrap();
        assert_abs_diff_eq!(moved - base, 0.37, epsilon = 1e-10);
        // and is independent of the radius entirely
        let other = asymptotic_phase_lag(&e, &path, &cache, [0.2, 0.5], 10.0, 1e-4).unwrap();
        assert_abs_diff_eq!(other, base, epsilon = 1e-10);
    }

    #[test]
    fn deterministic_amplitude_phase_lag_matches_log_law() {
        // sigma = 0: the asymptotic phase is theta + ln r (kappa = 2,
        // h_quad = 1), so the lag of (theta0, r0) relative to the anchor at
        // 0 is theta0 + ln r0.
        let e = entry("amplitude_phase", &[("sigma", 0.0), ("kappa", 2.0)]);
        let dt = 1e-3;
        let path = NoisePath::<f64>::zero(dt, 50.0, 1).unwrap();
        let cache = RStarCache::new(&e, &path, -14.0, 14.0, 14.0).unwrap();
        for (th, r) in [(0.3, 0.5), (-0.2, 1.6), (1.0, 1.0)] {
            let lag = asymptotic_phase_lag(&e, &path, &cache, [th, r], 10.0, 1e-4).unwrap();
            assert_abs_diff_eq!(lag, th + r.ln(), epsilon = 2e-5);
        }
    }

    #[test]
    fn hopf_isochrons_are_radial_rays() {
        let e = entry("hopf_linear", &[("sigma", 0.0)]);
        let path = NoisePath::<f64>::zero(1e-3, 50.0, 1).unwrap();
        let cache = RStarCache::new(&e, &path, -14.0, 14.0, 14.0).unwrap();
        let curve =
            forward_isochron(&e, &path, &cache, 1.1, &r_grid(12), 10.0, 1e-8, 30).unwrap();
        assert!(curve.gaps.is_empty());
        for &(_, th) in &curve.samples {
            assert_abs_diff_eq!(th, 1.1, epsilon = 1e-6);
        }
    }

    #[test]
    fn deterministic_isochron_matches_theta_plus_ln_r() {
        let e = entry("amplitude_phase", &[("sigma", 0.0), ("kappa", 2.0)]);
        let path = NoisePath::<f64>::zero(1e-3, 50.0, 1).unwrap();
        let cache = RStarCache::new(&e, &path, -14.0, 14.0, 14.0).unwrap();
        let curve =
            forward_isochron(&e, &path, &cache, 0.8, &r_grid(18), 10.0, 1e-8, 30).unwrap();
        assert!(curve.gaps.is_empty());
        for &(r, th) in &curve.samples {
            // theta + ln r = anchor constant
            assert_abs_diff_eq!(th + r.ln(), 0.8, epsilon = 1e-4);
        }
        // anchor pass-through at the radius nearest r* = 1
        let (_, th_near) = curve
            .samples
            .iter()
            .min_by(|a, b| {
                (a.0 - 1.0).abs().partial_cmp(&(b.0 - 1.0).abs()).unwrap()
            })
            .copied()
            .unwrap();
        assert!((th_near + curve.anchor_radius.ln() - 0.8).abs() <= 2e-4);
    }

    #[test]
    fn stochastic_curves_exist_and_do_not_intersect() {
        let e = entry("amplitude_phase", &[("sigma", 0.3), ("kappa", 2.0)]);
        let (cache, path) = setup(&e, 11, 1e-3);
        let grid = r_grid(12);
        let a = forward_isochron(&e, &path, &cache, 0.0, &grid, 10.0, 1e-8, 30).unwrap();
        let b =
            forward_isochron(&e, &path, &cache, std::f64::consts::PI / 2.0, &grid, 10.0, 1e-8, 30)
                .unwrap();
        assert!(a.gaps.is_empty() && b.gaps.is_empty());
        let tau = std::f64::consts::TAU;
        let min_gap = a
            .samples
            .iter()
            .zip(&b.samples)
            .map(|((_, ta), (_, tb))| {
                let mut d: f64 = tb - ta;
                d -= tau * (d / tau).round();
                d.abs()
            })
            .fold(f64::INFINITY, f64::min);
        assert!(min_gap > 1e-3, "curves nearly intersect: gap {min_gap}");
    }

    #[test]
    fn map_recovers_crps_parameter() {
        // phi_tilde(psi(t + s, w), w, s) = t + s
        let e = entry("amplitude_phase", &[("sigma", 0.3), ("kappa", 2.0)]);
        let (cache, path) = setup(&e, 17, 1e-3);
        for (t, s) in [(0.5, 0.0), (1.3, 0.0), (0.7, 1.0), (2.0, -1.0)] {
            let p = crate::crps::crps_eval(&cache, 0.0, t + s).unwrap();
            // convert the planar CRPS point to polar with unwrapped phase
            // near the parametrization value
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            let i_val = cache.backward_integral(t + s).unwrap();
            let y = [i_val, r];
            let val = isochron_map(&e, &path, &cache, y, s, 10.0).unwrap();
            assert_abs_diff_eq!(val, t + s, epsilon = 1e-4);
        }
    }

    #[test]
    fn map_range_contract() {
        let e = entry("amplitude_phase", &[("sigma", 0.3), ("kappa", 2.0)]);
        let (cache, path) = setup(&e, 23, 1e-3);
        let s = 0.5;
        let (t_per, _) = random_period_at(&cache, &e, -s).unwrap();
        for y in [[0.1, 0.8], [2.5, 1.3], [-1.0, 1.9]] {
            let v = isochron_map(&e, &path, &cache, y, s, 10.0).unwrap();
            assert!(
                v >= s - 1e-9 && v < s + t_per + 1e-9,
                "map value {v} outside [{s}, {})",
                s + t_per
            );
        }
    }

    #[test]
    fn zero_noise_hopf_map_reduces_to_the_deterministic_isochron_map() {
        // h == 1, sigma = 0: the asymptotic phase of (theta, r) is theta, so
        // the random isochron map collapses to the deterministic one
        let e = entry("hopf_linear", &[("sigma", 0.0)]);
        let path = NoisePath::<f64>::zero(1e-3, 50.0, 1).unwrap();
        let cache = RStarCache::new(&e, &path, -14.0, 14.0, 14.0).unwrap();
        for (th, r) in [(0.3, 0.7), (5.9, 1.6), (2.0, 1.0)] {
            let v = isochron_map(&e, &path, &cache, [th, r], 0.0, 10.0).unwrap();
            assert_abs_diff_eq!(v, th, epsilon = 1e-6);
        }
    }

    #[test]
    fn deterministic_invariance_residual_is_tiny_for_any_shift() {
        let e = entry("amplitude_phase", &[("sigma", 0.0), ("kappa", 2.0)]);
        let path = NoisePath::<f64>::zero(1e-3, 50.0, 1).unwrap();
        let cache = RStarCache::new(&e, &path, -14.0, 14.0, 14.0).unwrap();
        let curve =
            forward_isochron(&e, &path, &cache, 0.6, &r_grid(10), 10.0, 1e-8, 30).unwrap();
        for s in [0.5, 2.0] {
            let rep =
                invariance_residuals(&e, &path, &cache, &curve, s, 10.0, 14.0, 1e-8).unwrap();
            assert!(
                rep.max_theta_residual <= 1e-4,
                "s = {s}: residual {}",
                rep.max_theta_residual
            );
        }
    }

    #[test]
    fn map_derivative_along_flow_is_one() {
        let e = entry("amplitude_phase", &[("sigma", 0.3), ("kappa", 2.0)]);
        let (_cache, path) = setup(&e, 29, 1e-3);
        let spec = e.polar_spec().unwrap();
        let y0 = [0.4, 1.2];
        let delta = 0.1;
        let mut vals = Vec::new();
        for &s in &[1.0, 1.0 + delta] {
            let f = flow(spec, &path, 0.0, s, y0, 1e-3, Scheme::HeunStratonovich, None)
                .unwrap()
                .final_state();
            let shifted = path.shift(s).unwrap();
            let cache_s = RStarCache::new(&e, &shifted, -14.0, 12.0 - s, 14.0).unwrap();
            let v = isochron_map(&e, &shifted, &cache_s, f, s, 10.0).unwrap();
            vals.push(v);
        }
        let deriv = (vals[1] - vals[0]) / delta;
        assert_abs_diff_eq!(deriv, 1.0, epsilon = 1e-2);
    }

    #[test]
    fn pushed_curve_lands_on_recomputed_isochron() {
        let e = entry("amplitude_phase", &[("sigma", 0.3), ("kappa", 2.0)]);
        let (cache, path) = setup(&e, 41, 1e-3);
        let curve =
            forward_isochron(&e, &path, &cache, 0.3, &r_grid(10), 10.0, 1e-8, 30).unwrap();
        let rep =
            invariance_residuals(&e, &path, &cache, &curve, 1.0, 10.0, 14.0, 1e-8).unwrap();
        assert!(
            rep.max_theta_residual <= 1e-2,
            "residual {}",
            rep.max_theta_residual
        );
        // s = 0 is the identity
        let rep0 =
            invariance_residuals(&e, &path, &cache, &curve, 0.0, 10.0, 14.0, 1e-8).unwrap();
        assert_eq!(rep0.max_theta_residual, 0.0);
    }

    #[test]
    fn exponential_contraction_onto_the_isochron() {
        let e = entry("amplitude_phase", &[("sigma", 0.3), ("kappa", 2.0)]);
        let (cache, path) = setup(&e, 47, 1e-3);
        let curve =
            forward_isochron(&e, &path, &cache, 0.0, &r_grid(8), 10.0, 1e-8, 30).unwrap();
        let (r, th) = curve.samples[1];
        let prof =
            contraction_profile(&e, &path, &cache, [th, r], 0.0, &[2.0, 4.0, 6.0, 8.0]).unwrap();
        let d0 = ((r - curve.anchor_radius).powi(2)).sqrt().max(1e-3);
        for (t, d) in prof {
            // e^{lambda_tilde t} d stays bounded for lambda_tilde = 1 < -lambda_2
            assert!(
                d * t.exp() <= 50.0 * d0,
                "unbounded contraction product at t = {t}: {}",
                d * t.exp()
            );
        }
        assert!(
            curve.lambda_tilde > 1.0,
            "contraction rate {} not above 1",
            curve.lambda_tilde
        );
    }
}
