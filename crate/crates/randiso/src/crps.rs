//! Crauel random periodic solutions `(psi, T)` for the skew-product models:
//! the stationary radius process along shifts, the CRPS phase integral, the
//! random period by monotone bisection or first hitting, and residual
//! checks of the defining identities.
//!
//! The radius process `r*(theta_s w)` is computed once by forward radial
//! integration from a pullback-quadrature start and cached along `s`; the
//! phase integral uses increments consistent with the polar Heun flow, so
//! the pair `(psi, T)` is the exact discrete realization of the explicit
//! construction. Residual checks against the planar flow stay an
//! independent route.

use std::io::Write;

use crate::attractor::stationary_radius;
use crate::error::CrpsError;
use crate::flow::{flow, Scheme};
use crate::model::ModelCatalogEntry;
use crate::noise::NoisePath;
use crate::scalar::{c64, two_pi, Real};

/// Cached stationary radius and CRPS phase along a window of shifts.
///
/// `r_star(s)` realizes `r*(theta_s w)`; `phase(s)` realizes
/// `Phi(s) = int_0^s h(r*(theta_u w)) du (+ phase-noise Stratonovich term)`,
/// anchored `Phi(0) = 0`. Both are piecewise linear between grid nodes.
pub struct RStarCache<S> {
    s_min: S,
    s_max: S,
    dt: S,
    r_nodes: Vec<S>,
    phase_nodes: Vec<S>,
    sigma: S,
}

impl<S: Real> RStarCache<S> {
    /// Build the cache on `[s_min, s_max]`; the path must additionally
    /// cover `[s_min - s_trunc, s_min]` for the truncated `r*` quadrature.
    pub fn new(
        entry: &ModelCatalogEntry<S>,
        path: &NoisePath<S>,
        s_min: S,
        s_max: S,
        s_trunc: S,
    ) -> Result<Self, CrpsError> {
        let skew = entry.skew()?;
        let dt = path.dt();
        let n_back = (-s_min / dt).to_f64().unwrap().round() as i64;
        let n_fwd = (s_max / dt).to_f64().unwrap().round() as i64;
        let start_path = path.shift(s_min)?;
        let r0 = if skew.sigma == S::zero() {
            // deterministic radial dynamics: the pullback limit is the unit
            // circle; start exactly on the discrete fixed point
            S::one()
        } else {
            stationary_radius(&start_path, skew.sigma, s_trunc, c64(1e-6))?.value
        };

        let total = (n_back + n_fwd) as usize;
        let mut r_nodes = Vec::with_capacity(total + 1);
        let mut incs = Vec::with_capacity(total);
        let half = c64::<S>(0.5);
        let mut r = r0;
        r_nodes.push(r);
        for k in 0..total as i64 {
            let dw_r = start_path.increment(skew.radial_channel, k)?;
            let f0 = (skew.radial_drift)(r);
            let g0 = (skew.radial_diff)(r);
            let pred = r + f0 * dt + g0 * dw_r;
            let next = r + half * (f0 + (skew.radial_drift)(pred)) * dt
                + half * (g0 + (skew.radial_diff)(pred)) * dw_r;
            // phase increment consistent with the polar Heun flow: the
            // corrector averages h at the current point and the predictor
            let mut inc = half * ((skew.h)(r) + (skew.h)(pred)) * dt;
            if let Some(ht) = &skew.h_tilde {
                let dw_p = start_path.increment(skew.phase_channel, k)?;
                inc += half * (ht(r) + ht(pred)) * dw_p;
            }
            incs.push(inc);
            r = next;
            r_nodes.push(r);
        }
        let origin = n_back as usize;
        let mut phase_nodes = vec![S::zero(); total + 1];
        for k in origin..total {
            phase_nodes[k + 1] = phase_nodes[k] + incs[k];
        }
        for k in (0..origin).rev() {
            phase_nodes[k] = phase_nodes[k + 1] - incs[k];
        }
        Ok(Self {
            s_min,
            s_max,
            dt,
            r_nodes,
            phase_nodes,
            sigma: skew.sigma,
        })
    }

    pub fn window(&self) -> (S, S) {
        (self.s_min, self.s_max)
    }

    pub fn dt(&self) -> S {
        self.dt
    }

    fn locate(&self, s: S) -> Result<(usize, S), CrpsError> {
        if s < self.s_min - self.dt * c64(0.5) || s > self.s_max + self.dt * c64(0.5) {
            return Err(CrpsError::CacheWindow {
                lo: self.s_min.to_f64().unwrap(),
                hi: self.s_max.to_f64().unwrap(),
                t: s.to_f64().unwrap(),
            });
        }
        let pos = ((s - self.s_min) / self.dt).to_f64().unwrap();
        let k = (pos.floor() as usize).min(self.r_nodes.len() - 2);
        let frac = c64::<S>(pos - k as f64);
        Ok((k, frac.max(S::zero()).min(S::one())))
    }

    /// `r*(theta_s w)`, linearly interpolated between grid nodes.
    pub fn r_star(&self, s: S) -> Result<S, CrpsError> {
        let (k, f) = self.locate(s)?;
        Ok(self.r_nodes[k] * (S::one() - f) + self.r_nodes[k + 1] * f)
    }

    /// Unwrapped CRPS phase `Phi(s)` with `Phi(0) = 0`.
    pub fn phase(&self, s: S) -> Result<S, CrpsError> {
        let (k, f) = self.locate(s)?;
        Ok(self.phase_nodes[k] * (S::one() - f) + self.phase_nodes[k + 1] * f)
    }

    /// Backward phase integral `I(t) = int_{-t}^0 = -Phi(-t)`.
    pub fn backward_integral(&self, t: S) -> Result<S, CrpsError> {
        Ok(-self.phase(-t)?)
    }

    /// Invert the (monotone) phase: the `s` with `Phi(s) = value`. Errors
    /// if the value lies outside the cached range.
    pub fn invert_phase(&self, value: S) -> Result<S, CrpsError> {
        let nodes = &self.phase_nodes;
        let increasing = *nodes.last().unwrap() >= nodes[0];
        let cmp_lo = if increasing { nodes[0] } else { *nodes.last().unwrap() };
        let cmp_hi = if increasing { *nodes.last().unwrap() } else { nodes[0] };
        if value < cmp_lo || value > cmp_hi {
            return Err(CrpsError::CacheWindow {
                lo: cmp_lo.to_f64().unwrap(),
                hi: cmp_hi.to_f64().unwrap(),
                t: value.to_f64().unwrap(),
            });
        }
        let (mut lo, mut hi) = (0usize, nodes.len() - 1);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            let below = if increasing {
                nodes[mid] <= value
            } else {
                nodes[mid] >= value
            };
            if below {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let span = nodes[hi] - nodes[lo];
        let f = if span.abs() < S::epsilon() {
            S::zero()
        } else {
            (value - nodes[lo]) / span
        };
        Ok(self.s_min + self.dt * (S::from_usize(lo).unwrap() + f))
    }

    pub fn sigma(&self) -> S {
        self.sigma
    }
}

/// A realized Crauel random periodic solution.
#[derive(Clone, Debug)]
pub struct CrpsSample<S> {
    pub anchor: S,
    pub period: S,
    /// +1 when the phase integral hits +2 pi first, -1 for -2 pi; the
    /// direction of periodicity depends on the noise realization when the
    /// phase is noisy.
    pub hit_sign: i8,
    pub psi_samples: Vec<(S, [S; 2])>,
    pub seed: u64,
    pub model: String,
}

/// Evaluate `psi_anchor(t, w)`: radius `r*(w)`, phase
/// `anchor + int_{-t}^0 h(r*(theta_s w)) ds (+ noise term)`.
pub fn crps_eval<S: Real>(cache: &RStarCache<S>, anchor: S, t: S) -> Result<[S; 2], CrpsError> {
    let r = cache.r_star(S::zero())?;
    let angle = anchor + cache.backward_integral(t)?;
    Ok([r * angle.cos(), r * angle.sin()])
}

/// Evaluate `psi_anchor(t, theta_shift w)` from the same cache (the shifted
/// radius and phase telescopes off the cached nodes exactly).
pub fn crps_eval_shifted<S: Real>(
    cache: &RStarCache<S>,
    anchor: S,
    shift: S,
    t: S,
) -> Result<[S; 2], CrpsError> {
    let r = cache.r_star(shift)?;
    let angle = anchor + cache.phase(shift)? - cache.phase(shift - t)?;
    Ok([r * angle.cos(), r * angle.sin()])
}

/// The random period `T(theta_shift w)` through the anchored convention
/// `int_{-T}^0 h(r*(theta_s (theta_shift w))) ds = 2 pi`.
///
/// Deterministic phase: bisection on the monotone phase integral over
/// `[0, 2 pi / K_h]`. Noisy phase: first time the absolute phase integral
/// hits 2 pi, located by scan plus sub-step linear interpolation.
pub fn random_period_at<S: Real>(
    cache: &RStarCache<S>,
    entry: &ModelCatalogEntry<S>,
    shift: S,
) -> Result<(S, i8), CrpsError> {
    let skew = entry.skew()?;
    let tau = two_pi::<S>();
    let phi_ref = cache.phase(shift)?;
    if skew.h_tilde.is_none() {
        // g(t) = I_shift(t) - 2 pi with I_shift(t) = Phi(shift) - Phi(shift - t),
        // monotone increasing since h >= K_h > 0
        let k_h = skew.phase_speed_floor(entry.region);
        if k_h <= S::zero() {
            return Err(CrpsError::BracketFailure(0.0));
        }
        // margin above 2 pi / K_h: quadrature of the phase integral can
        // undershoot the continuum bound by roundoff
        let t_hi = (tau / k_h + cache.dt()).min(shift - cache.window().0);
        let g = |t: S| -> Result<S, CrpsError> { Ok(phi_ref - cache.phase(shift - t)? - tau) };
        let g_hi = g(t_hi)?;
        if g_hi < -c64::<S>(1e-7) {
            return Err(CrpsError::BracketFailure(t_hi.to_f64().unwrap()));
        }
        if g_hi <= S::zero() {
            return Ok((t_hi, 1));
        }
        let (mut lo, mut hi) = (S::zero(), t_hi);
        for _ in 0..200 {
            if hi - lo <= c64(1e-13) {
                break;
            }
            let mid = (lo + hi) * c64(0.5);
            let gm = g(mid)?;
            if gm.abs() <= c64(1e-9) {
                return Ok((mid, 1));
            }
            if gm < S::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(((lo + hi) * c64(0.5), 1))
    } else {
        // scan grid nodes backward from the shift origin
        let dt = cache.dt();
        let max_steps = ((shift - cache.window().0) / dt).to_f64().unwrap().round() as usize;
        let mut prev = S::zero();
        for k in 1..=max_steps {
            let t = dt * S::from_usize(k).unwrap();
            let cur = phi_ref - cache.phase(shift - t)?;
            if cur.abs() >= tau {
                let sign = if cur > S::zero() { 1i8 } else { -1i8 };
                let target = if sign > 0 { tau } else { -tau };
                let span = cur - prev;
                let f = if span.abs() < S::epsilon() {
                    S::zero()
                } else {
                    (target - prev) / span
                };
                let t_hit = t - dt + dt * f.max(S::zero()).min(S::one());
                return Ok((t_hit, sign));
            }
            prev = cur;
        }
        Err(CrpsError::HittingExhausted(
            (dt * S::from_usize(max_steps).unwrap()).to_f64().unwrap(),
        ))
    }
}

/// `T(w)` at the unshifted origin.
pub fn random_period<S: Real>(
    cache: &RStarCache<S>,
    entry: &ModelCatalogEntry<S>,
) -> Result<(S, i8), CrpsError> {
    random_period_at(cache, entry, S::zero())
}

/// Assemble a full CRPS sample with `n_samples` points of `psi` on `[0, T]`.
pub fn sample_crps<S: Real>(
    cache: &RStarCache<S>,
    entry: &ModelCatalogEntry<S>,
    anchor: S,
    n_samples: usize,
    seed: u64,
) -> Result<CrpsSample<S>, CrpsError> {
    let (period, hit_sign) = random_period(cache, entry)?;
    let mut psi_samples = Vec::with_capacity(n_samples + 1);
    for k in 0..=n_samples {
        let t = period * S::from_usize(k).unwrap() / S::from_usize(n_samples.max(1)).unwrap();
        psi_samples.push((t, crps_eval(cache, anchor, t)?));
    }
    Ok(CrpsSample {
        anchor,
        period,
        hit_sign,
        psi_samples,
        seed,
        model: entry.name.clone(),
    })
}

/// Residuals of the CRPS identities along a grid of times.
#[derive(Clone, Debug)]
pub struct CrpsResidualReport<S> {
    /// max over the grid of `|psi(t, w) - psi(t + T(theta_{-t} w), w)|`
    pub max_periodicity: S,
    /// max over the grid of `|phi(t, w, psi(t0, w)) - psi(t + t0, theta_t w)|`,
    /// with the planar flow as the independent route
    pub max_invariance: S,
    /// `|psi(0, w) - psi(T(w), w)|`
    pub anchor_residual: S,
}

pub fn crps_residuals<S: Real>(
    entry: &ModelCatalogEntry<S>,
    cache: &RStarCache<S>,
    path: &NoisePath<S>,
    anchor: S,
    t_grid: &[S],
    t0: S,
) -> Result<CrpsResidualReport<S>, CrpsError> {
    let dt = path.dt();
    let mut max_periodicity = S::zero();
    let mut max_invariance = S::zero();

    let planar = entry.planar_spec()?;
    let x_start = crps_eval(cache, anchor, t0)?;
    for &t in t_grid {
        // periodicity: T(theta_{-t} w) via the same cache
        let (t_per, _) = random_period_at(cache, entry, -t)?;
        let a = crps_eval(cache, anchor, t)?;
        let b = crps_eval(cache, anchor, t + t_per)?;
        let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        max_periodicity = max_periodicity.max(d);

        // invariance: planar flow from psi(t0, w) over [0, t] vs formula
        let t_aligned = (t / dt).to_f64().unwrap().round();
        let t_run = dt * c64(t_aligned);
        let res = flow(
            planar,
            path,
            S::zero(),
            t_run,
            x_start,
            dt,
            Scheme::HeunStratonovich,
            Some(entry.guard_radius()),
        )?;
        let f = res.final_state();
        let p = crps_eval_shifted(cache, anchor, t_run, t_run + t0)?;
        let d = ((f[0] - p[0]).powi(2) + (f[1] - p[1]).powi(2)).sqrt();
        max_invariance = max_invariance.max(d);
    }

    let (t_omega, _) = random_period(cache, entry)?;
    let p0 = crps_eval(cache, anchor, S::zero())?;
    let pt = crps_eval(cache, anchor, t_omega)?;
    let anchor_residual = ((p0[0] - pt[0]).powi(2) + (p0[1] - pt[1]).powi(2)).sqrt();

    Ok(CrpsResidualReport {
        max_periodicity,
        max_invariance,
        anchor_residual,
    })
}

/// Period CSV: `seed, sigma, kappa, T_omega` rows.
pub fn write_period_csv<S: Real, W: Write>(
    mut w: W,
    rows: &[(u64, f64, f64, S)],
) -> std::io::Result<()> {
    writeln!(w, "seed,sigma,kappa,T_omega")?;
    for (seed, sigma, kappa, t) in rows {
        writeln!(w, "{seed},{sigma},{kappa},{}", t.to_f64().unwrap())?;
    }
    Ok(())
}

/// psi-sample CSV: `t, x, y` rows.
pub fn write_psi_csv<S: Real, W: Write>(
    mut w: W,
    sample: &CrpsSample<S>,
) -> std::io::Result<()> {
    writeln!(w, "t,x,y")?;
    for (t, p) in &sample.psi_samples {
        writeln!(
            w,
            "{},{},{}",
            t.to_f64().unwrap(),
            p[0].to_f64().unwrap(),
            p[1].to_f64().unwrap()
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_model;
    use approx::assert_abs_diff_eq;
    use std::collections::BTreeMap;
    use std::f64::consts::{PI, TAU};

    fn entry(name: &str, kv: &[(&str, f64)]) -> ModelCatalogEntry<f64> {
        let params: BTreeMap<String, f64> =
            kv.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        make_model(name, &params).unwrap()
    }

    fn cache_for(
        entry: &ModelCatalogEntry<f64>,
        seed: u64,
        dt: f64,
        s_min: f64,
        s_max: f64,
    ) -> (RStarCache<f64>, NoisePath<f64>) {
        let horizon = s_min.abs() + 20.0 + s_max.abs() + 1.0;
        let path = NoisePath::sample(seed, dt, horizon, 2).unwrap();
        let cache = RStarCache::new(entry, &path, s_min, s_max, 20.0).unwrap();
        (cache, path)
    }

    #[test]
    fn hopf_crps_is_rotation_at_unit_speed() {
        let e = entry("hopf_linear", &[("sigma", 0.3)]);
        let (cache, _) = cache_for(&e, 4, 1e-3, -10.0, 2.0);
        let r = cache.r_star(0.0).unwrap();
        for &t in &[0.0, 0.7, 2.0, 5.0] {
            let p = crps_eval(&cache, 0.4, t).unwrap();
            // h == 1: psi(t) = r*(w) (cos(anchor + t), sin(anchor + t))
            assert_abs_diff_eq!(p[0], r * (0.4 + t).cos(), epsilon = 1e-12);
            assert_abs_diff_eq!(p[1], r * (0.4 + t).sin(), epsilon = 1e-12);
        }
        // t = 0 reduces to the anchor point on the attractor
        let p = crps_eval(&cache, 1.0, 0.0).unwrap();
        assert_abs_diff_eq!(p[0], r * 1.0f64.cos(), epsilon = 1e-14);
    }

    #[test]
    fn hopf_period_is_two_pi_for_every_path() {
        let e = entry("hopf_linear", &[("sigma", 0.5)]);
        for seed in 0..20 {
            let (cache, _) = cache_for(&e, seed, 1e-3, -8.0, 0.5);
            let (t, sign) = random_period(&cache, &e).unwrap();
            assert_eq!(sign, 1);
            assert!((t - TAU).abs() <= 1e-6, "seed {seed}: T = {t}");
        }
    }

    #[test]
    fn deterministic_amplitude_phase_period_is_two_pi_over_kappa() {
        let e = entry("amplitude_phase", &[("sigma", 0.0), ("kappa", 2.0)]);
        let (cache, _) = cache_for(&e, 1, 1e-3, -8.0, 0.5);
        let (t, _) = random_period(&cache, &e).unwrap();
        assert!((t - PI).abs() <= 1e-6, "T = {t} vs pi");
    }

    #[test]
    fn period_positivity_and_upper_bound() {
        let e = entry("amplitude_phase", &[("sigma", 0.3), ("kappa", 2.0)]);
        let k_h = e.skew().unwrap().phase_speed_floor(e.region);
        for seed in 0..30 {
            let (cache, _) = cache_for(&e, seed, 1e-3, -8.0, 0.5);
            let (t, _) = random_period(&cache, &e).unwrap();
            assert!(t > 0.0 && t <= TAU / k_h + 1e-9, "seed {seed}: T = {t}");
        }
    }

    #[test]
    fn shift_consistency_of_the_period_integral() {
        // int_{-(t + T(theta_{-t} w))}^{-t} h(r*(theta_s w)) ds = 2 pi
        let e = entry("amplitude_phase", &[("sigma", 0.3), ("kappa", 2.0)]);
        let (cache, _) = cache_for(&e, 9, 1e-3, -16.0, 6.0);
        for &t in &[1.0, 2.0, 5.0] {
            let (t_per, _) = random_period_at(&cache, &e, -t).unwrap();
            let integral =
                cache.phase(-t).unwrap() - cache.phase(-t - t_per).unwrap();
            assert_abs_diff_eq!(integral, TAU, epsilon = 1e-8);
        }
    }

    #[test]
    fn crps_residuals_within_tolerances() {
        let e = entry("amplitude_phase", &[("sigma", 0.3), ("kappa", 2.0)]);
        let dt = 1e-3;
        let path = NoisePath::sample(21, dt, 40.0, 1).unwrap();
        let cache = RStarCache::new(&e, &path, -16.0, 4.0, 20.0).unwrap();
        let rep =
            crps_residuals(&e, &cache, &path, 0.7, &[0.5, 1.0, 2.0, 3.0], 0.0).unwrap();
        assert!(rep.max_periodicity <= 1e-2, "{}", rep.max_periodicity);
        assert!(rep.max_invariance <= 1e-2, "{}", rep.max_invariance);
        assert!(rep.anchor_residual <= 1e-6, "{}", rep.anchor_residual);
    }

    #[test]
    fn deterministic_residuals_are_tiny() {
        // second-order deterministic error: dt = 2e-4 puts the planar-flow
        // route well under 1e-6 over t = 3
        let e = entry("amplitude_phase", &[("sigma", 0.0), ("kappa", 2.0)]);
        let dt = 2e-4;
        let path = NoisePath::zero(dt, 40.0, 1).unwrap();
        let cache = RStarCache::new(&e, &path, -16.0, 4.0, 20.0).unwrap();
        let rep = crps_residuals(&e, &cache, &path, 0.0, &[1.0, 3.0], 0.0).unwrap();
        assert!(rep.max_periodicity <= 1e-6, "{}", rep.max_periodicity);
        assert!(rep.max_invariance <= 1e-6, "{}", rep.max_invariance);
    }

    #[test]
    fn noisy_phase_period_hits_two_pi() {
        let e = entry(
            "noisy_phase",
            &[("sigma", 0.2), ("sigma_theta", 0.3), ("kappa", 2.0)],
        );
        for seed in 0..10 {
            let (cache, _) = cache_for(&e, seed, 1e-3, -10.0, 0.5);
            let (t, sign) = random_period(&cache, &e).unwrap();
            assert!(t > 0.0);
            // at the hitting time the phase integral sits at sign * 2 pi
            let integral = -cache.phase(-t).unwrap();
            assert_abs_diff_eq!(integral, sign as f64 * TAU, epsilon = 1e-6);
        }
    }

    #[test]
    fn cache_window_errors_are_loud() {
        let e = entry("hopf_linear", &[("sigma", 0.3)]);
        let (cache, _) = cache_for(&e, 2, 1e-3, -4.0, 1.0);
        assert!(cache.r_star(-5.0).is_err());
        assert!(crps_eval(&cache, 0.0, 6.0).is_err());
    }

    #[test]
    fn psi_sample_assembles_and_serializes() {
        let e = entry("amplitude_phase", &[("sigma", 0.2), ("kappa", 2.0)]);
        let (cache, _) = cache_for(&e, 5, 1e-3, -8.0, 0.5);
        let sample = sample_crps(&cache, &e, 0.0, 32, 5).unwrap();
        assert_eq!(sample.psi_samples.len(), 33);
        // radius constant along psi
        let r0 = (sample.psi_samples[0].1[0].powi(2) + sample.psi_samples[0].1[1].powi(2)).sqrt();
        for (_, p) in &sample.psi_samples {
            let r = (p[0].powi(2) + p[1].powi(2)).sqrt();
            assert_abs_diff_eq!(r, r0, epsilon = 1e-12);
        }
        let mut buf = Vec::new();
        write_psi_csv(&mut buf, &sample).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("t,x,y\n"));
    }
}
