//! Acceptance suite: every release criterion implemented at its stated
//! tolerance, runnable from `cargo test` (the `acceptance` integration
//! target) and from `randiso verify`.
//!
//! Each criterion prints one pass/fail line with the measured numbers.
//! Criterion 11 encodes the expected-period bridge exactly as stated; its
//! identity clause measurably fails for the amplitude-coupled model
//! because the radial laws of the two CRPS endpoints differ (the crossing
//! endpoint is flux-weighted), which the report documents via the KS
//! statistic rather than hiding.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::time::Instant;

use crate::attractor::{
    circle_semidistance, pullback_fiber, seed_set_annulus_grid, stationary_radius,
};
use crate::crps::{crps_eval, crps_residuals, random_period, RStarCache};
use crate::flow::{flow, Scheme};
use crate::isochron::{asymptotic_phase_lag, forward_isochron, invariance_residuals, isochron_map};
use crate::lyapunov::lyapunov_spectrum_default;
use crate::model::{hopf_explicit_radius, make_model, ModelCatalogEntry};
use crate::mrt::{
    build_operators, expected_period_compare, mean_flux_period, probe_double_expectation,
    solve_mrt, stationary_density, stationary_density_with_tol, AnnulusGrid, DensityField,
    EnsembleConfig, MrtFields,
};
use crate::noise::NoisePath;
use crate::stats::{mean_se, median};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    /// Reduced ensembles and grids; a smoke test, not the release gate.
    Quick,
    /// The spec-scale gate.
    Full,
}

#[derive(Clone, Debug)]
pub struct CriterionOutcome {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        format!(
            "criterion {:2} [{}] {} - {} ({:.1}s)",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail,
            self.seconds
        )
    }
}

fn entry(name: &str, kv: &[(&str, f64)]) -> ModelCatalogEntry<f64> {
    let params: BTreeMap<String, f64> = kv.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    make_model(name, &params).expect("catalog model")
}

struct PdeSolution {
    grid: AnnulusGrid<f64>,
    rho: DensityField<f64>,
    fields: MrtFields<f64>,
    t_bar_sections: [f64; 2],
    density_seconds: f64,
    mrt_seconds: f64,
}

fn solve_pipeline(e: &ModelCatalogEntry<f64>, nt: usize, nr: usize) -> PdeSolution {
    let grid = AnnulusGrid::new(nt, nr, 0.3, 2.0).expect("grid");
    let ops = build_operators(e, &grid).expect("operators");
    // acceptance-scale grids satisfy the strict positivity envelope
    let t0 = Instant::now();
    let rho = stationary_density(&ops).expect("density");
    let density_seconds = t0.elapsed().as_secs_f64();
    let f1 = mean_flux_period(&ops, &rho, |_| 0.0).expect("flux");
    let f2 = mean_flux_period(&ops, &rho, |r| 0.3 * (r - 0.3)).expect("flux2");
    let t1 = Instant::now();
    let fields = solve_mrt(&ops, &rho, &f1).expect("mrt");
    let mrt_seconds = t1.elapsed().as_secs_f64();
    PdeSolution {
        grid,
        rho,
        fields,
        t_bar_sections: [f1.t_bar, f2.t_bar],
        density_seconds,
        mrt_seconds,
    }
}

// Convergence-order measurements run below the strict positivity
// envelope on purpose; the density tolerance is widened explicitly.
fn solve_pipeline_coarse(e: &ModelCatalogEntry<f64>, nt: usize, nr: usize) -> PdeSolution {
    let grid = AnnulusGrid::new(nt, nr, 0.3, 2.0).expect("grid");
    let ops = build_operators(e, &grid).expect("operators");
    let rho = stationary_density_with_tol(&ops, 1e-2).expect("density");
    let f1 = mean_flux_period(&ops, &rho, |_| 0.0).expect("flux");
    let f2 = mean_flux_period(&ops, &rho, |r| 0.3 * (r - 0.3)).expect("flux2");
    let fields = solve_mrt(&ops, &rho, &f1).expect("mrt");
    PdeSolution {
        grid,
        rho,
        fields,
        t_bar_sections: [f1.t_bar, f2.t_bar],
        density_seconds: 0.0,
        mrt_seconds: 0.0,
    }
}

/// Context shared by the PDE criteria so the 256x128 factorizations run once.
struct PdeContext {
    hopf: PdeSolution,
    amp: PdeSolution,
}

fn pde_context(level: Level) -> PdeContext {
    let (nt, nr) = match level {
        Level::Full => (256, 128),
        Level::Quick => (128, 64),
    };
    PdeContext {
        hopf: solve_pipeline(&entry("hopf_linear", &[("sigma", 0.5)]), nt, nr),
        amp: solve_pipeline(&entry("amplitude_phase", &[("sigma", 0.3), ("kappa", 2.0)]), nt, nr),
    }
}

fn timed(
    id: usize,
    name: &'static str,
    f: impl FnOnce() -> (bool, String),
) -> CriterionOutcome {
    let start = Instant::now();
    let (passed, detail) = f();
    CriterionOutcome {
        id,
        name,
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn c1_explicit_solution(_level: Level) -> CriterionOutcome {
    timed(1, "explicit-solution fidelity", || {
        let e = entry("hopf_linear", &[("sigma", 0.3)]);
        let dt = 1e-3;
        let path = NoisePath::<f64>::sample(1001, dt, 6.0, 1).unwrap();
        let t0 = Instant::now();
        let res = flow(
            e.polar_spec().unwrap(),
            &path,
            0.0,
            5.0,
            [0.0, 1.0],
            dt,
            Scheme::HeunStratonovich,
            Some(20.0),
        )
        .unwrap();
        let per_path = t0.elapsed().as_secs_f64();
        let oracle = hopf_explicit_radius(&path, 0.3, 1.0, 5.0).unwrap();
        let mut worst: f64 = 0.0;
        for (k, (_, r)) in oracle.iter().enumerate() {
            worst = worst.max((res.states[k][1] - r).abs());
        }
        (
            worst <= 5e-3 && per_path < 1.0,
            format!("max |r_num - r_exact| = {worst:.2e} (tol 5e-3), {per_path:.3}s/path (tol 1s)"),
        )
    })
}

fn c2_stationary_radius(level: Level) -> CriterionOutcome {
    timed(2, "stationary radius", || {
        // sigma = 0: r* = 1 exactly; the trapezoid quadrature at dt = 1e-3
        // reproduces it to ~2e-7
        let zero = NoisePath::<f64>::zero(1e-3, 21.0, 1).unwrap();
        let r0 = stationary_radius(&zero, 0.0, 20.0, 1e-6).unwrap().value;
        let det_err = (r0 - 1.0).abs();

        let n = match level {
            Level::Full => 10_000,
            Level::Quick => 2_000,
        };
        use rayon::prelude::*;
        let vals: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| {
                let path = NoisePath::<f64>::sample(2000 + i as u64, 1e-2, 21.0, 1).unwrap();
                stationary_radius(&path, 0.5, 20.0, 1e-4).unwrap().value.powi(-2)
            })
            .collect();
        let (mean, se) = mean_se(&vals);
        let target = 4.0 / 3.0;
        let ok = det_err <= 5e-7 && (mean - target).abs() <= 3.0 * se;
        (
            ok,
            format!(
                "|r*(0) - 1| = {det_err:.1e} (tol 5e-7); E[(r*)^-2] = {mean:.5} vs 4/3, {:.2} s.e. over {n} paths (tol 3)",
                (mean - target).abs() / se
            ),
        )
    })
}

fn c3_figure2(level: Level) -> CriterionOutcome {
    timed(3, "figure-2 pullback property", || {
        use rayon::prelude::*;
        let e = entry("hopf_linear", &[("sigma", 0.5)]);
        let dt = 1e-3;
        let (n_abs, n_med, fiber_seeds) = match level {
            Level::Full => (5, 100, 80),
            Level::Quick => (2, 30, 40),
        };
        let seeds = seed_set_annulus_grid((0.5, 1.9), fiber_seeds / 4, 4);

        // absolute clause at T = 10
        let mut worst_abs: f64 = 0.0;
        for s in 0..n_abs {
            let path = NoisePath::<f64>::sample(3000 + s, dt, 31.0, 1).unwrap();
            let fib = pullback_fiber(&e, &path, 10.0, &seeds, dt, Scheme::HeunStratonovich).unwrap();
            let r_star = stationary_radius(&path, 0.5, 20.0, 1e-6).unwrap().value;
            worst_abs = worst_abs.max(circle_semidistance(&fib.cloud, r_star).unwrap());
        }

        // monotone median clause over T in {1, 5, 10}
        let dists: Vec<[f64; 3]> = (0..n_med)
            .into_par_iter()
            .map(|s| {
                let path = NoisePath::<f64>::sample(3100 + s as u64, dt, 31.0, 1).unwrap();
                let r_star = stationary_radius(&path, 0.5, 20.0, 1e-6).unwrap().value;
                let mut row = [0.0; 3];
                for (k, t) in [1.0, 5.0, 10.0].into_iter().enumerate() {
                    let fib =
                        pullback_fiber(&e, &path, t, &seeds, dt, Scheme::HeunStratonovich)
                            .unwrap();
                    row[k] = circle_semidistance(&fib.cloud, r_star).unwrap();
                }
                row
            })
            .collect();
        let med: Vec<f64> = (0..3)
            .map(|k| median(&dists.iter().map(|r| r[k]).collect::<Vec<_>>()))
            .collect();
        let ok = worst_abs <= 1e-2 && med[2] <= med[1] && med[1] <= med[0];
        (
            ok,
            format!(
                "max dist(T=10) = {worst_abs:.2e} (tol 1e-2); medians over {n_med} paths T={{1,5,10}}: {:.2e} >= {:.2e} >= {:.2e}",
                med[0], med[1], med[2]
            ),
        )
    })
}

fn c4_random_periods(level: Level) -> CriterionOutcome {
    timed(4, "random periods and CRPS identities", || {
        use rayon::prelude::*;
        let dt = 1e-3;
        let n = match level {
            Level::Full => 100,
            Level::Quick => 20,
        };
        let hopf = entry("hopf_linear", &[("sigma", 0.5)]);
        let worst_hopf = (0..n)
            .into_par_iter()
            .map(|s| {
                let path = NoisePath::<f64>::sample(4000 + s as u64, dt, 28.0, 1).unwrap();
                let cache = RStarCache::new(&hopf, &path, -7.0, 0.5, 20.0).unwrap();
                let (t, _) = random_period(&cache, &hopf).unwrap();
                (t - TAU).abs()
            })
            .reduce(|| 0.0, f64::max);

        let amp0 = entry("amplitude_phase", &[("sigma", 0.0), ("kappa", 2.0)]);
        let zero = NoisePath::<f64>::zero(dt, 28.0, 1).unwrap();
        let cache = RStarCache::new(&amp0, &zero, -7.0, 0.5, 20.0).unwrap();
        let (t_det, _) = random_period(&cache, &amp0).unwrap();
        let det_err = (t_det - PI).abs();

        let amp = entry("amplitude_phase", &[("sigma", 0.3), ("kappa", 2.0)]);
        let path = NoisePath::<f64>::sample(4200, dt, 40.0, 1).unwrap();
        let cache = RStarCache::new(&amp, &path, -16.0, 4.0, 20.0).unwrap();
        let rep = crps_residuals(&amp, &cache, &path, 0.7, &[0.5, 1.0, 2.0, 3.0], 0.0).unwrap();

        let ok = worst_hopf <= 1e-6
            && det_err <= 1e-6
            && rep.max_periodicity <= 1e-2
            && rep.max_invariance <= 1e-2;
        (
            ok,
            format!(
                "max |T - 2pi| = {worst_hopf:.1e} over {n} paths (tol 1e-6); |T_det - pi| = {det_err:.1e} (tol 1e-6); residuals: periodicity {:.1e}, invariance {:.1e} (tol 1e-2)",
                rep.max_periodicity, rep.max_invariance
            ),
        )
    })
}

fn c5_lyapunov(level: Level) -> CriterionOutcome {
    timed(5, "Lyapunov spectrum", || {
        use rayon::prelude::*;
        let e = entry("hopf_linear", &[("sigma", 0.3)]);
        let dt = 1e-3;
        let (n_paths, t_max) = match level {
            Level::Full => (8, 500.0),
            Level::Quick => (4, 300.0),
        };
        let specs: Vec<_> = (0..n_paths)
            .into_par_iter()
            .map(|s| {
                let path =
                    NoisePath::<f64>::sample(5000 + s as u64, dt, t_max + 12.0, 1).unwrap();
                lyapunov_spectrum_default(&e, &path, [1.0, 0.0], t_max, 0.5, dt).unwrap()
            })
            .collect();
        let l1: Vec<f64> = specs.iter().map(|s| s.exponents[0]).collect();
        let l2: Vec<f64> = specs.iter().map(|s| s.exponents[1]).collect();
        let (m1, se1) = mean_se(&l1);
        let (m2, se2) = mean_se(&l2);
        // sum rule: tangent-accumulated log-det rate vs the independent
        // Liouville quadrature, per path, combined s.e.
        let sums: Vec<f64> = specs
            .iter()
            .map(|s| s.log_det_rate - s.liouville_rate)
            .collect();
        let (msum, sesum) = mean_se(&sums);
        let sum_tol = (2.0 * sesum).max(1e-3);
        let ok = m1.abs() <= 0.02 && (m2 + 2.0).abs() <= 0.05 && msum.abs() <= sum_tol;
        (
            ok,
            format!(
                "lambda_1 = {m1:.4} +- {se1:.4} (tol 0.02), lambda_2 = {m2:.4} +- {se2:.4} (target -2 +- 0.05), sum-rule gap {msum:.1e} (tol {sum_tol:.1e}), {n_paths} paths x t_max {t_max}"
            ),
        )
    })
}

fn c6_isochron_closed_forms(_level: Level) -> CriterionOutcome {
    timed(6, "isochron closed forms", || {
        let dt = 1e-3;
        let r_grid: Vec<f64> = (0..18).map(|i| 0.3 + 1.7 * i as f64 / 17.0).collect();
        let zero = NoisePath::<f64>::zero(dt, 50.0, 1).unwrap();

        let amp = entry("amplitude_phase", &[("sigma", 0.0), ("kappa", 2.0)]);
        let cache = RStarCache::new(&amp, &zero, -14.0, 14.0, 14.0).unwrap();
        let mut worst_amp: f64 = 0.0;
        for anchor in [0.8, 2.4] {
            let curve =
                forward_isochron(&amp, &zero, &cache, anchor, &r_grid, 10.0, 1e-8, 30).unwrap();
            if !curve.gaps.is_empty() {
                return (false, format!("secant gaps at {:?}", curve.gaps));
            }
            for &(r, th) in &curve.samples {
                worst_amp = worst_amp.max((th + r.ln() - anchor).abs());
            }
        }

        let hopf = entry("hopf_linear", &[("sigma", 0.0)]);
        let cache = RStarCache::new(&hopf, &zero, -14.0, 14.0, 14.0).unwrap();
        let curve =
            forward_isochron(&hopf, &zero, &cache, 1.1, &r_grid, 10.0, 1e-8, 30).unwrap();
        let worst_hopf = curve
            .samples
            .iter()
            .map(|&(_, th)| (th - 1.1).abs())
            .fold(0.0f64, f64::max);

        let ok = worst_amp <= 1e-4 && worst_hopf <= 1e-6;
        (
            ok,
            format!(
                "max |theta + ln r - anchor| = {worst_amp:.2e} (tol 1e-4); max ray deviation = {worst_hopf:.2e} (tol 1e-6)"
            ),
        )
    })
}

fn c7_isochron_map_laws(_level: Level) -> CriterionOutcome {
    timed(7, "random isochron map laws", || {
        let e = entry("amplitude_phase", &[("sigma", 0.3), ("kappa", 2.0)]);
        let dt = 1e-3;
        let path = NoisePath::<f64>::sample(7001, dt, 50.0, 1).unwrap();
        let cache = RStarCache::new(&e, &path, -14.0, 14.0, 14.0).unwrap();

        // (a) phi_tilde(psi(t+s, w), w, s) = t + s
        let mut worst_map: f64 = 0.0;
        for (t, s) in [(0.5, 0.0), (1.3, 0.0), (0.7, 1.0), (2.0, -1.0)] {
            let p = crps_eval(&cache, 0.0, t + s).unwrap();
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            let y = [cache.backward_integral(t + s).unwrap(), r];
            let v = isochron_map(&e, &path, &cache, y, s, 10.0).unwrap();
            worst_map = worst_map.max((v - (t + s)).abs());
        }

        // (b) derivative along the flow
        let spec = e.polar_spec().unwrap();
        let delta = 0.1;
        let mut vals = Vec::new();
        for &s in &[1.0, 1.0 + delta] {
            let f = flow(spec, &path, 0.0, s, [0.4, 1.2], dt, Scheme::HeunStratonovich, None)
                .unwrap()
                .final_state();
            let shifted = path.shift(s).unwrap();
            let cache_s = RStarCache::new(&e, &shifted, -14.0, 12.0 - s, 14.0).unwrap();
            vals.push(isochron_map(&e, &shifted, &cache_s, f, s, 10.0).unwrap());
        }
        let deriv_err = ((vals[1] - vals[0]) / delta - 1.0).abs();

        // (c) invariance of a pushed curve
        let r_grid: Vec<f64> = (0..10).map(|i| 0.35 + 1.55 * i as f64 / 9.0).collect();
        let curve = forward_isochron(&e, &path, &cache, 0.3, &r_grid, 10.0, 1e-8, 30).unwrap();
        let inv = invariance_residuals(&e, &path, &cache, &curve, 1.0, 10.0, 14.0, 1e-8).unwrap();

        // (d) level-set consistency and foliation over 8 anchors
        let mut phi_vals = Vec::new();
        for &(r, th) in &curve.samples {
            phi_vals.push(isochron_map(&e, &path, &cache, [th, r], 0.0, 10.0).unwrap());
        }
        let spread = phi_vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - phi_vals.iter().cloned().fold(f64::INFINITY, f64::min);

        let anchors: Vec<f64> = (0..8).map(|k| k as f64 * PI / 4.0).collect();
        let mut unique = true;
        'outer: for ir in 0..5 {
            let r = 0.4 + 1.4 * ir as f64 / 4.0;
            for it in 0..12 {
                let th = TAU * it as f64 / 12.0;
                let lag = asymptotic_phase_lag(&e, &path, &cache, [th, r], 10.0, 1e-4).unwrap();
                let lag_mod = lag.rem_euclid(TAU);
                let mut dists: Vec<f64> = anchors
                    .iter()
                    .map(|&a| {
                        let mut d = (lag_mod - a).abs();
                        d = d.min(TAU - d);
                        d
                    })
                    .collect();
                dists.sort_by(|x, y| x.partial_cmp(y).unwrap());
                if dists[1] - dists[0] <= 0.0 {
                    unique = false;
                    break 'outer;
                }
            }
        }

        let ok = worst_map <= 1e-4
            && deriv_err <= 1e-2
            && inv.max_theta_residual <= 1e-2
            && spread <= 1e-7
            && unique;
        (
            ok,
            format!(
                "map error {worst_map:.1e} (tol 1e-4); derivative error {deriv_err:.1e} (tol 1e-2); invariance residual {:.1e} (tol 1e-2, dropped {}); level-set spread {spread:.1e}; foliation unique: {unique}",
                inv.max_theta_residual, inv.dropped
            ),
        )
    })
}

fn c8_stationary_density(ctx: &PdeContext) -> CriterionOutcome {
    timed(8, "stationary density", || {
        let e = entry("hopf_linear", &[("sigma", 0.5)]);
        let sol = &ctx.hopf;
        let g = &sol.grid;
        // analytic rho(theta, r) = p(r) / (2 pi * annulus mass)
        let p = e.analytic.radial_density.as_ref().unwrap();
        let raw: Vec<f64> = (0..g.n_r).map(|j| p(g.r(j))).collect();
        let mass: f64 =
            (0..g.n_r).map(|j| raw[j] * g.w(j)).sum::<f64>() * g.d_r() * TAU;
        let mut worst: f64 = 0.0;
        for j in 0..g.n_r {
            let exact = raw[j] / mass;
            for i in 0..g.n_theta {
                worst = worst.max((sol.rho.values[g.idx(i, j)] - exact).abs());
            }
        }
        // E_rho[r^2]
        let r2: Vec<f64> = (0..g.node_count())
            .map(|k| sol.rho.values[k] * g.r(k / g.n_theta).powi(2))
            .collect();
        let moment = g.integrate(&r2);
        let positive = sol.rho.clipped == 0 && sol.rho.min_relative >= -1e-12;
        let ok = worst <= 1e-2
            && (moment - 1.0).abs() <= 5e-3
            && positive
            && sol.density_seconds < 30.0;
        (
            ok,
            format!(
                "max |rho - rho_exact| = {worst:.2e} (tol 1e-2, {}x{}); E[r^2] = {moment:.5} (tol 1 +- 5e-3); min rho/max rho = {:.1e}, clipped {}; solve {:.1}s (budget 30s)",
                g.n_theta, g.n_r, sol.rho.min_relative, sol.rho.clipped, sol.density_seconds
            ),
        )
    })
}

fn c9_mean_flux_period(ctx: &PdeContext) -> CriterionOutcome {
    timed(9, "mean period via flux", || {
        let t_hopf = ctx.hopf.t_bar_sections[0];
        let t_amp = ctx.amp.t_bar_sections[0];
        let sec_rel = (ctx.amp.t_bar_sections[0] - ctx.amp.t_bar_sections[1]).abs()
            / ctx.amp.t_bar_sections[0];
        let ok = (t_hopf - TAU).abs() <= 0.01 * TAU
            && (t_amp - PI).abs() <= 0.01 * PI
            && sec_rel <= 0.005;
        (
            ok,
            format!(
                "hopf T = {t_hopf:.5} vs 2pi (tol 1%); amplitude T = {t_amp:.5} vs pi (tol 1%); section spread {sec_rel:.2e} (tol 5e-3)"
            ),
        )
    })
}

fn c10_mrt_pde(ctx: &PdeContext, level: Level) -> CriterionOutcome {
    timed(10, "mean-return-time PDE", || {
        let sol = &ctx.amp;
        let g = &sol.grid;
        // full-grid closed-form L2, gauge aligned
        let mut diffs = Vec::new();
        for j in 0..g.n_r {
            for i in 0..g.n_theta {
                diffs.push(sol.fields.theta_bar_raw[g.idx(i, j)] - g.theta(i) - g.r(j).ln());
            }
        }
        let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
        let l2 = (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / diffs.len() as f64)
            .sqrt();

        // grid-doubling ratio on the interior, outside the reflecting
        // boundary layers where the free-space closed form stops applying
        let e = entry("amplitude_phase", &[("sigma", 0.3), ("kappa", 2.0)]);
        let pair = match level {
            Level::Full => [(64, 32), (128, 64)],
            Level::Quick => [(32, 16), (64, 32)],
        };
        let errs: Vec<f64> = pair
            .into_iter()
            .map(|(nt, nr)| {
                let s = solve_pipeline_coarse(&e, nt, nr);
                let mut d = Vec::new();
                for j in 0..s.grid.n_r {
                    let r = s.grid.r(j);
                    if !(0.45..=1.75).contains(&r) {
                        continue;
                    }
                    for i in 0..s.grid.n_theta {
                        d.push(
                            s.fields.theta_bar_raw[s.grid.idx(i, j)]
                                - s.grid.theta(i)
                                - r.ln(),
                        );
                    }
                }
                let m = d.iter().sum::<f64>() / d.len() as f64;
                (d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / d.len() as f64).sqrt()
            })
            .collect();
        let ratio = errs[0] / errs[1];

        let ok = sol.fields.jump_residual <= 1e-6 && l2 <= 1e-2 && ratio >= 3.0;
        (
            ok,
            format!(
                "jump residual {:.1e} (tol 1e-6); isophase L2 {l2:.2e} (tol 1e-2, full grid incl. reflecting layers); interior doubling ratio {ratio:.2} (tol >= 3); solve {:.1}s",
                sol.fields.jump_residual, sol.mrt_seconds
            ),
        )
    })
}

fn c11_bridge(ctx: &PdeContext, level: Level) -> CriterionOutcome {
    timed(11, "pathwise/averaged period bridge", || {
        let e = entry("amplitude_phase", &[("sigma", 0.3), ("kappa", 2.0)]);
        let n_paths = match level {
            Level::Full => 2000,
            Level::Quick => 400,
        };
        let cfg = EnsembleConfig {
            n_paths,
            seed0: 11_000,
            dt: 1e-2,
            s_trunc: 20.0,
        };
        // honest numerical uncertainty of the averaged period: section
        // spread plus the flux-vs-compatibility gap
        let unc = (ctx.amp.t_bar_sections[0] - ctx.amp.t_bar_sections[1]).abs()
            + (ctx.amp.fields.t_bar - ctx.amp.fields.t_bar_compat).abs();
        let rep =
            expected_period_compare(&e, &ctx.amp.grid, &ctx.amp.fields, unc, &cfg).unwrap();
        let gap1 = (rep.mean_t - rep.t_bar).abs();
        let tol1 = 2.0 * rep.combined_se();
        let gap2 = (rep.dynkin_lhs - rep.dynkin_rhs).abs();
        // combined MC + grid error for the identity clause: two MC standard
        // errors of the per-path gap statistic plus the u-field grid error
        let tol2 = 2.0 * rep.dynkin_gap_se + unc + 2e-3;
        let ok = gap1 <= tol1 && gap2 <= tol2;
        (
            ok,
            format!(
                "|E[T] - T_bar| = {gap1:.2e} vs {tol1:.2e} ({n_paths} paths); Dynkin-identity gap = {gap2:.2e} vs {tol2:.2e}; KS(radial laws) = {:.3}; E[T] = {:.5} +- {:.1e}, T_bar = {:.5}",
                rep.ks_radial, rep.mean_t, rep.se_t, rep.t_bar
            ),
        )
    })
}

fn c12_double_expectation_probe(level: Level) -> CriterionOutcome {
    timed(12, "double-expectation probe (report-only)", || {
        let e = entry("amplitude_phase", &[("sigma", 0.3), ("kappa", 2.0)]);
        let (no, ni) = match level {
            Level::Full => (48, 48),
            Level::Quick => (12, 12),
        };
        match probe_double_expectation(&e, &[1.0, 2.0], no, ni, 12_000, 1e-2, 10.0, 20.0) {
            Ok(rows) => {
                let finite = rows
                    .iter()
                    .all(|r| r.double_mean.is_finite() && r.se.is_finite());
                let detail = rows
                    .iter()
                    .map(|r| {
                        format!(
                            "t={}: E[E[phi]] = {:.4} +- {:.4} (95% CI +- {:.4}, rejected {})",
                            r.t,
                            r.double_mean,
                            r.se,
                            1.96 * r.se,
                            r.rejected
                        )
                    })
                    .collect::<Vec<_>>()
                    .join("; ");
                (finite, format!("{detail}; open problem, no assertion attached"))
            }
            Err(err) => (false, format!("probe failed: {err}")),
        }
    })
}

/// Run every criterion at the given level, in order.
pub fn run_all(level: Level) -> Vec<CriterionOutcome> {
    let mut out = Vec::with_capacity(12);
    out.push(c1_explicit_solution(level));
    out.push(c2_stationary_radius(level));
    out.push(c3_figure2(level));
    out.push(c4_random_periods(level));
    out.push(c5_lyapunov(level));
    out.push(c6_isochron_closed_forms(level));
    out.push(c7_isochron_map_laws(level));
    let ctx = pde_context(level);
    out.push(c8_stationary_density(&ctx));
    out.push(c9_mean_flux_period(&ctx));
    out.push(c10_mrt_pde(&ctx, level));
    out.push(c11_bridge(&ctx, level));
    out.push(c12_double_expectation_probe(level));
    out
}

/// Criteria expected red on a correct build: the expected-period bridge
/// (criterion 11) fails its identity clause because the equal-distribution
/// hypothesis behind it is measurably false for the amplitude-coupled
/// model; see the report's KS statistic.
pub fn expected_red() -> &'static [usize] {
    &[11]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_solution_criterion_degrades_at_coarse_dt() {
        // sensitivity check: loosening dt to 1e-1 must push the flow error
        // past the release tolerance
        let e = entry("hopf_linear", &[("sigma", 0.3)]);
        let dt = 1e-1;
        let path = NoisePath::<f64>::sample(1001, dt, 6.0, 1).unwrap();
        let res = flow(
            e.polar_spec().unwrap(),
            &path,
            0.0,
            5.0,
            [0.0, 1.0],
            dt,
            Scheme::HeunStratonovich,
            Some(20.0),
        )
        .unwrap();
        let oracle = hopf_explicit_radius(&path, 0.3, 1.0, 5.0).unwrap();
        let mut worst: f64 = 0.0;
        for (k, (_, r)) in oracle.iter().enumerate() {
            worst = worst.max((res.states[k][1] - r).abs());
        }
        assert!(worst > 5e-3, "coarse-dt error {worst} unexpectedly small");
    }

    #[test]
    fn quick_level_runs_every_criterion() {
        let outcomes = run_all(Level::Quick);
        assert_eq!(outcomes.len(), 12);
        for o in &outcomes {
            assert!(
                o.passed || expected_red().contains(&o.id),
                "quick-level criterion {} failed: {}",
                o.id,
                o.detail
            );
        }
    }
}
