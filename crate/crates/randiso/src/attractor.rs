//! Random attractor fibers in pullback and forward senses, the explicit
//! stationary radius `r*(w)`, and Hausdorff semi-distance diagnostics.

use rayon::prelude::*;

use crate::error::AttractorError;
use crate::flow::{flow, Scheme};
use crate::model::ModelCatalogEntry;
use crate::noise::NoisePath;
use crate::scalar::{c64, Real};

/// How a fiber cloud was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FiberMode {
    Pullback,
    Forward,
}

/// Finite cloud approximating an attractor fiber.
#[derive(Clone, Debug)]
pub struct AttractorFiber<S> {
    pub cloud: Vec<[S; 2]>,
    pub mode: FiberMode,
    pub run_length: S,
    pub source: String,
}

/// The stationary radius `r*(w) = (2 int_{-inf}^0 e^{2s + 2 sigma W_s} ds)^(-1/2)`,
/// truncated at `-s_trunc` and integrated by trapezoid on the path grid.
#[derive(Clone, Debug)]
pub struct StationaryRadius<S> {
    pub value: S,
    pub s_trunc: S,
    pub dt: S,
    /// Estimated relative truncation error of the integral.
    pub tail_estimate: S,
}

/// Compute `r*` for radial noise intensity `sigma`, requiring the path to
/// cover `[-s_trunc, 0]`. `rel_tol` bounds the reported tail estimate.
pub fn stationary_radius<S: Real>(
    path: &NoisePath<S>,
    sigma: S,
    s_trunc: S,
    rel_tol: S,
) -> Result<StationaryRadius<S>, AttractorError> {
    let dt = path.dt();
    let lo = path.min_time();
    if lo > -s_trunc {
        return Err(AttractorError::WindowTooShort {
            lo: lo.to_f64().unwrap(),
            hi: path.max_time().to_f64().unwrap(),
            need_lo: (-s_trunc).to_f64().unwrap(),
        });
    }
    let n = (s_trunc / dt).to_f64().unwrap().round() as usize;
    let two = c64::<S>(2.0);
    let mut integral = S::zero();
    let mut prev = S::one();
    let mut w_last = S::zero();
    for k in 1..=n {
        let s = -dt * S::from_usize(k).unwrap();
        let w = path.evaluate_channel(0, s)?;
        let cur = (two * (s + sigma * w)).exp();
        integral += c64::<S>(0.5) * (prev + cur) * dt;
        prev = cur;
        w_last = w;
    }
    // tail: freeze W at W(-S) and use E e^{2 sigma (W_s - W_{-S})} growth
    let s2 = sigma * sigma;
    let rate = two - two * s2;
    let tail = if rate > S::zero() {
        (two * (-s_trunc + sigma * w_last)).exp() / rate
    } else {
        S::infinity()
    };
    let rel = tail / integral;
    if rel > rel_tol {
        return Err(AttractorError::TailTooLarge {
            est: rel.to_f64().unwrap(),
            tol: rel_tol.to_f64().unwrap(),
        });
    }
    Ok(StationaryRadius {
        value: S::one() / (two * integral).sqrt(),
        s_trunc,
        dt,
        tail_estimate: rel,
    })
}

/// Pullback fiber: images `phi(T, theta_{-T} w, seed)` at time 0.
pub fn pullback_fiber<S: Real>(
    entry: &ModelCatalogEntry<S>,
    path: &NoisePath<S>,
    run_length: S,
    seeds: &[[S; 2]],
    dt: S,
    scheme: Scheme,
) -> Result<AttractorFiber<S>, AttractorError> {
    propagate_fiber(entry, path, -run_length, run_length, seeds, dt, scheme, FiberMode::Pullback)
}

/// Forward fiber: images `phi(T, w, seed)` at time T (a cloud near
/// `A(theta_T w)`).
pub fn forward_fiber<S: Real>(
    entry: &ModelCatalogEntry<S>,
    path: &NoisePath<S>,
    run_length: S,
    seeds: &[[S; 2]],
    dt: S,
    scheme: Scheme,
) -> Result<AttractorFiber<S>, AttractorError> {
    propagate_fiber(entry, path, S::zero(), run_length, seeds, dt, scheme, FiberMode::Forward)
}

#[allow(clippy::too_many_arguments)]
fn propagate_fiber<S: Real>(
    entry: &ModelCatalogEntry<S>,
    path: &NoisePath<S>,
    t0: S,
    run_length: S,
    seeds: &[[S; 2]],
    dt: S,
    scheme: Scheme,
    mode: FiberMode,
) -> Result<AttractorFiber<S>, AttractorError> {
    if seeds.is_empty() {
        return Err(AttractorError::EmptySet);
    }
    let spec = entry.planar_spec()?;
    let guard = entry.guard_radius();
    let results: Vec<_> = seeds
        .par_iter()
        .map(|&x0| flow(spec, path, t0, run_length, x0, dt, scheme, Some(guard)))
        .collect();
    let failed = results.iter().filter(|r| r.is_err()).count();
    if failed > 0 {
        return Err(AttractorError::PartialCloud {
            failed,
            total: seeds.len(),
        });
    }
    Ok(AttractorFiber {
        cloud: results.into_iter().map(|r| r.unwrap().final_state()).collect(),
        mode,
        run_length,
        source: format!("{} seeds", seeds.len()),
    })
}

/// Hausdorff semi-distance `sup_{x in E} inf_{y in F} d(x, y)`; exact over
/// finite sets and asymmetric by definition.
pub fn hausdorff_semidistance<S: Real>(e: &[[S; 2]], f: &[[S; 2]]) -> Result<S, AttractorError> {
    if e.is_empty() || f.is_empty() {
        return Err(AttractorError::EmptySet);
    }
    let mut sup = S::zero();
    for p in e {
        let mut inf = S::infinity();
        for q in f {
            let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
            inf = inf.min(d);
        }
        sup = sup.max(inf);
    }
    Ok(sup)
}

/// Semi-distance from a cloud to the circle of radius `r` centered at the
/// origin (exact: `sup | |p| - r |`).
pub fn circle_semidistance<S: Real>(cloud: &[[S; 2]], r: S) -> Result<S, AttractorError> {
    if cloud.is_empty() {
        return Err(AttractorError::EmptySet);
    }
    Ok(cloud
        .iter()
        .map(|p| ((p[0] * p[0] + p[1] * p[1]).sqrt() - r).abs())
        .fold(S::zero(), |a, b| a.max(b)))
}

/// Dense angular resampling of a fiber cloud: sort by angle and
/// interpolate the radius periodically onto `n` uniform angles. Distances
/// to a fiber are measured against this resampling rather than the raw
/// finite cloud, so angular sampling gaps do not masquerade as error.
pub fn densify_by_angle<S: Real>(cloud: &[[S; 2]], n: usize) -> Vec<[S; 2]> {
    let tau = crate::scalar::two_pi::<S>();
    let mut polar: Vec<(S, S)> = cloud
        .iter()
        .map(|p| {
            let angle = p[1].atan2(p[0]);
            let angle = if angle < S::zero() { angle + tau } else { angle };
            (angle, (p[0] * p[0] + p[1] * p[1]).sqrt())
        })
        .collect();
    polar.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let m = polar.len();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let a = tau * S::from_usize(k).unwrap() / S::from_usize(n).unwrap();
        // find the bracketing pair (periodic)
        let idx = polar.partition_point(|&(ang, _)| ang <= a);
        let (a0, r0) = polar[(idx + m - 1) % m];
        let (a1, r1) = polar[idx % m];
        let mut span = a1 - a0;
        if span <= S::zero() {
            span += tau;
        }
        let mut off = a - a0;
        if off < S::zero() {
            off += tau;
        }
        let f = if span > S::zero() { off / span } else { S::zero() };
        let r = r0 * (S::one() - f) + r1 * f;
        out.push([r * a.cos(), r * a.sin()]);
    }
    out
}

/// Radial spread of a cloud (max radius minus min radius); small for
/// circle-shaped fibers.
pub fn radial_spread<S: Real>(cloud: &[[S; 2]]) -> S {
    let radii: Vec<S> = cloud
        .iter()
        .map(|p| (p[0] * p[0] + p[1] * p[1]).sqrt())
        .collect();
    let hi = radii.iter().fold(S::neg_infinity(), |a, &b| a.max(b));
    let lo = radii.iter().fold(S::infinity(), |a, &b| a.min(b));
    hi - lo
}

/// Seed set generated by a trajectory of the same system from a fixed
/// starting point, matching the numerical experiments; deterministic given
/// the generating seed.
pub fn seed_set_from_trajectory<S: Real>(
    entry: &ModelCatalogEntry<S>,
    gen_seed: u64,
    count: usize,
    spacing: S,
    dt: S,
) -> Result<Vec<[S; 2]>, AttractorError> {
    let spec = entry.planar_spec()?;
    let total = spacing * S::from_usize(count).unwrap();
    let path = NoisePath::sample(gen_seed, dt, total + S::one(), spec.channels().max(1))?;
    let traj = flow(
        spec,
        &path,
        S::zero(),
        total,
        [c64(1.2), S::zero()],
        dt,
        Scheme::HeunStratonovich,
        Some(entry.guard_radius()),
    )?;
    let stride = (spacing / dt).to_f64().unwrap().round() as usize;
    Ok(traj
        .states
        .iter()
        .step_by(stride.max(1))
        .take(count)
        .copied()
        .collect())
}

/// Uniform polar grid of seeds over the working annulus.
pub fn seed_set_annulus_grid<S: Real>(
    region: (S, S),
    n_theta: usize,
    n_r: usize,
) -> Vec<[S; 2]> {
    let mut out = Vec::with_capacity(n_theta * n_r);
    let tau = crate::scalar::two_pi::<S>();
    for i in 0..n_theta {
        let theta = tau * S::from_usize(i).unwrap() / S::from_usize(n_theta).unwrap();
        for j in 0..n_r {
            let f = if n_r == 1 {
                c64(0.5)
            } else {
                S::from_usize(j).unwrap() / S::from_usize(n_r - 1).unwrap()
            };
            let r = region.0 + (region.1 - region.0) * f;
            out.push([r * theta.cos(), r * theta.sin()]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::Scheme;
    use crate::model::make_model;
    use approx::assert_abs_diff_eq;
    use std::collections::BTreeMap;

    fn entry(kv: &[(&str, f64)]) -> ModelCatalogEntry<f64> {
        let params: BTreeMap<String, f64> =
            kv.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        make_model("hopf_linear", &params).unwrap()
    }

    #[test]
    fn sigma_zero_gives_unit_radius_exactly_up_to_quadrature() {
        let path = NoisePath::<f64>::zero(1e-3, 25.0, 1).unwrap();
        let r = stationary_radius(&path, 0.0, 20.0, 1e-6).unwrap();
        // integral = (1 - e^{-40})/2 + O(dt^2)
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn window_too_short_errors() {
        let path = NoisePath::<f64>::sample(1, 1e-2, 5.0, 1).unwrap();
        assert!(matches!(
            stationary_radius(&path, 0.3, 20.0, 1e-6),
            Err(AttractorError::WindowTooShort { .. })
        ));
    }

    #[test]
    fn inverse_square_moment_matches_gaussian_mgf_oracle() {
        // E[(r*)^{-2}] = 2 int_0^inf e^{-(2 - 2 sigma^2) u} du = 1/(1 - sigma^2)
        // = 4/3 at sigma = 0.5 (Gaussian mgf E e^{2 sigma W_s} = e^{2 sigma^2 |s|}).
        let n = 2_000; // acceptance runs 1e4; unit test keeps it light
        let vals: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|seed| {
                let path = NoisePath::<f64>::sample(seed as u64, 1e-2, 21.0, 1).unwrap();
                let r = stationary_radius(&path, 0.5, 20.0, 1e-4).unwrap();
                r.value.powi(-2)
            })
            .collect();
        let mean = vals.iter().sum::<f64>() / n as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let se = (var / n as f64).sqrt();
        assert!(
            (mean - 4.0 / 3.0).abs() <= 3.0 * se,
            "mean {mean} vs 4/3, se {se}"
        );
    }

    #[test]
    fn stationarity_of_r_star_under_the_flow() {
        // r(t, w, r*(w)) = r*(theta_t w): quadrature route vs radial flow route
        let e = entry(&[("sigma", 0.3)]);
        let dt = 1e-3;
        let path = NoisePath::<f64>::sample(77, dt, 30.0, 1).unwrap();
        let t = 5.0;
        let r0 = stationary_radius(&path, 0.3, 20.0, 1e-6).unwrap().value;
        let shifted = path.shift(t).unwrap();
        let rt = stationary_radius(&shifted, 0.3, 20.0, 1e-6).unwrap().value;
        let spec = e.polar_spec().unwrap();
        let res = flow(spec, &path, 0.0, t, [0.0, r0], dt, Scheme::HeunStratonovich, None).unwrap();
        assert!(
            (res.final_state()[1] - rt).abs() <= 5e-3,
            "flow {} vs shifted quadrature {}",
            res.final_state()[1],
            rt
        );
    }

    #[test]
    fn pullback_fiber_t_zero_is_the_seed_set() {
        let e = entry(&[("sigma", 0.5)]);
        let path = NoisePath::<f64>::sample(3, 1e-2, 2.0, 1).unwrap();
        let seeds = seed_set_annulus_grid((0.4, 1.8), 8, 3);
        let fib = pullback_fiber(&e, &path, 0.0, &seeds, 1e-2, Scheme::HeunStratonovich).unwrap();
        assert_eq!(fib.cloud, seeds);
    }

    #[test]
    fn deterministic_pullback_lands_on_unit_circle() {
        let e = entry(&[("sigma", 0.0)]);
        let path = NoisePath::<f64>::zero(1e-3, 12.0, 1).unwrap();
        let seeds = seed_set_annulus_grid((0.5, 1.9), 16, 3);
        let fib = pullback_fiber(&e, &path, 10.0, &seeds, 1e-3, Scheme::HeunStratonovich).unwrap();
        let d = circle_semidistance(&fib.cloud, 1.0).unwrap();
        assert!(d <= 1e-3, "distance to unit circle {d}");
    }

    #[test]
    fn pullback_reaches_r_star_circle_and_forward_matches_shifted() {
        let e = entry(&[("sigma", 0.5)]);
        let dt = 1e-3;
        let path = NoisePath::<f64>::sample(11, dt, 35.0, 1).unwrap();
        let seeds = seed_set_annulus_grid((0.5, 1.9), 12, 3);
        let t = 10.0;

        let pb = pullback_fiber(&e, &path, t, &seeds, dt, Scheme::HeunStratonovich).unwrap();
        let r_star = stationary_radius(&path, 0.5, 20.0, 1e-6).unwrap().value;
        let d = circle_semidistance(&pb.cloud, r_star).unwrap();
        assert!(d <= 1e-2, "pullback distance {d}");
        assert!(radial_spread(&pb.cloud) <= 1e-2);

        // forward fiber targets the circle of radius r*(theta_T w)
        let fw = forward_fiber(&e, &path, t, &seeds, dt, Scheme::HeunStratonovich).unwrap();
        let r_star_t = stationary_radius(&path.shift(t).unwrap(), 0.5, 20.0, 1e-6)
            .unwrap()
            .value;
        let d = circle_semidistance(&fw.cloud, r_star_t).unwrap();
        assert!(d <= 1e-2, "forward distance {d}");

        // definition unwinding: forward(w, T) = pullback(theta_T w, T) pointwise
        let pb_shift =
            pullback_fiber(&e, &path.shift(t).unwrap(), t, &seeds, dt, Scheme::HeunStratonovich)
                .unwrap();
        for (a, b) in fw.cloud.iter().zip(&pb_shift.cloud) {
            assert_abs_diff_eq!(a[0], b[0], epsilon = 1e-10);
            assert_abs_diff_eq!(a[1], b[1], epsilon = 1e-10);
        }
    }

    #[test]
    fn fibers_are_strictly_invariant_under_the_flow() {
        // phi(t, w, .) applied to the pullback fiber at w lands near the
        // pullback fiber computed at theta_t w
        let e = entry(&[("sigma", 0.5)]);
        let dt = 1e-3;
        let path = NoisePath::<f64>::sample(23, dt, 40.0, 1).unwrap();
        let seeds = seed_set_annulus_grid((0.5, 1.9), 10, 3);
        let t_run = 10.0;
        let fib = pullback_fiber(&e, &path, t_run, &seeds, dt, Scheme::HeunStratonovich).unwrap();
        let t = 2.0;
        let spec = e.planar_spec().unwrap();
        let pushed: Vec<[f64; 2]> = fib
            .cloud
            .iter()
            .map(|&x| {
                flow(spec, &path, 0.0, t, x, dt, Scheme::HeunStratonovich, None)
                    .unwrap()
                    .final_state()
            })
            .collect();
        let fib_shifted =
            pullback_fiber(&e, &path.shift(t).unwrap(), t_run, &seeds, dt, Scheme::HeunStratonovich)
                .unwrap();
        let dense = densify_by_angle(&fib_shifted.cloud, 4096);
        let d = hausdorff_semidistance(&pushed, &dense).unwrap();
        assert!(d <= 2e-2, "invariance semi-distance {d}");
    }

    #[test]
    fn hausdorff_semidistance_basics() {
        let d = hausdorff_semidistance::<f64>(&[[0.0, 0.0]], &[[3.0, 4.0]]).unwrap();
        assert_abs_diff_eq!(d, 5.0);
        let e = [[0.0, 0.0], [10.0, 0.0]];
        let f = [[0.0, 0.0]];
        assert_abs_diff_eq!(hausdorff_semidistance::<f64>(&e, &e).unwrap(), 0.0);
        assert_abs_diff_eq!(hausdorff_semidistance::<f64>(&e, &f).unwrap(), 10.0);
        assert_abs_diff_eq!(hausdorff_semidistance::<f64>(&f, &e).unwrap(), 0.0);
        assert!(hausdorff_semidistance::<f64>(&[], &f).is_err());
    }

    #[test]
    fn trajectory_seed_set_is_deterministic() {
        let e = entry(&[("sigma", 0.5)]);
        let a = seed_set_from_trajectory(&e, 1000, 50, 0.1, 1e-2).unwrap();
        let b = seed_set_from_trajectory(&e, 1000, 50, 0.1, 1e-2).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 50);
    }
}
