//! Model catalog: the stochastic oscillator models in Stratonovich form,
//! each with drift, diffusion columns, analytic Jacobians, and (where the
//! theory provides them) closed-form reference data used only as test
//! oracles.
//!
//! Every model is stored with the charts it admits. The polar chart keeps
//! the phase unwrapped (a real number, not mod 2 pi); wrapping happens at
//! presentation time only.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::ModelError;
use crate::noise::NoisePath;
use crate::scalar::{c64, Real};

pub type VecField<S> = Arc<dyn Fn([S; 2]) -> [S; 2] + Send + Sync>;
pub type MatField<S> = Arc<dyn Fn([S; 2]) -> [[S; 2]; 2] + Send + Sync>;
pub type ScalarFn<S> = Arc<dyn Fn(S) -> S + Send + Sync>;
pub type ScalarFn2<S> = Arc<dyn Fn(S, S) -> S + Send + Sync>;

/// Coordinate chart a model is expressed in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Chart {
    /// Euclidean `(x, y)`.
    Planar,
    /// `(theta, r)` with unwrapped phase.
    Polar,
}

/// A Stratonovich SDE `dX = b dt + sum_i sigma_i o dW^i` on R^2 with
/// analytic Jacobians for the variational equation.
#[derive(Clone)]
pub struct ModelSpec<S> {
    pub name: String,
    pub chart: Chart,
    pub drift: VecField<S>,
    pub diffusion: Vec<VecField<S>>,
    pub drift_jacobian: MatField<S>,
    pub diffusion_jacobians: Vec<MatField<S>>,
    /// True once the Ito conversion term has been folded into the drift.
    pub ito_form: bool,
}

impl<S> ModelSpec<S> {
    pub fn channels(&self) -> usize {
        self.diffusion.len()
    }
}

impl<S> std::fmt::Debug for ModelSpec<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModelSpec")
            .field("name", &self.name)
            .field("chart", &self.chart)
            .field("channels", &self.diffusion.len())
            .field("ito_form", &self.ito_form)
            .finish()
    }
}

/// Skew-product polar structure `d theta = h(r) dt + h_tilde(r) o dW^phase`,
/// `dr = f(r) dt + g(r) o dW^radial`; the backbone of the explicit random
/// periodic solution construction.
#[derive(Clone)]
pub struct SkewPolar<S> {
    pub h: ScalarFn<S>,
    pub h_tilde: Option<ScalarFn<S>>,
    pub radial_drift: ScalarFn<S>,
    pub radial_diff: ScalarFn<S>,
    pub radial_channel: usize,
    pub phase_channel: usize,
    pub sigma: S,
}

impl<S: Real> SkewPolar<S> {
    /// Lower bound of the phase speed over the working annulus, by a dense
    /// scan (h is smooth; the models in the catalog are monotone in r^2).
    pub fn phase_speed_floor(&self, region: (S, S)) -> S {
        let n = 256;
        let (r1, r2) = region;
        let mut k = S::infinity();
        for i in 0..=n {
            let r = r1 + (r2 - r1) * c64::<S>(i as f64 / n as f64);
            k = k.min((self.h)(r));
        }
        k
    }
}

/// Diagonal-noise polar model `(f1, f2, G1, G2)` with total diffusion
/// coefficients (sigma absorbed); the input contract of the annulus PDE
/// machinery.
#[derive(Clone)]
pub struct PolarDiagonal<S> {
    pub f1: ScalarFn2<S>,
    pub f2: ScalarFn2<S>,
    pub g1: ScalarFn2<S>,
    pub g2: ScalarFn2<S>,
    pub dg1_dtheta: ScalarFn2<S>,
    pub dg2_dr: ScalarFn2<S>,
}

/// Closed forms attached to catalog entries; used only as test oracles,
/// never inside solvers.
#[derive(Clone)]
pub struct Analytic<S> {
    /// Unnormalized stationary density of the radial process, w.r.t. dr.
    pub radial_density: Option<ScalarFn<S>>,
    /// Deterministic asymptotic phase `theta + c ln r`; level sets are the
    /// zero-noise isochrons.
    pub isochron_phase: Option<ScalarFn2<S>>,
    /// Mean period of the averaged problem where known.
    pub mean_period: Option<S>,
}

impl<S> Default for Analytic<S> {
    fn default() -> Self {
        Self {
            radial_density: None,
            isochron_phase: None,
            mean_period: None,
        }
    }
}

/// A catalog entry: the model in every chart it admits plus reference data.
#[derive(Clone)]
pub struct ModelCatalogEntry<S> {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    pub planar: Option<ModelSpec<S>>,
    pub polar: Option<ModelSpec<S>>,
    pub skew: Option<SkewPolar<S>>,
    pub polar_diag: Option<PolarDiagonal<S>>,
    pub analytic: Analytic<S>,
    /// Working annulus `[R1, R2]`, bracketing the deterministic cycle r = 1.
    pub region: (S, S),
}

impl<S: Real> ModelCatalogEntry<S> {
    /// The primary chart: polar when available, planar otherwise.
    pub fn primary(&self) -> &ModelSpec<S> {
        self.polar.as_ref().or(self.planar.as_ref()).expect("chart")
    }

    pub fn planar_spec(&self) -> Result<&ModelSpec<S>, ModelError> {
        self.planar
            .as_ref()
            .ok_or_else(|| ModelError::MissingChart(self.name.clone(), "planar"))
    }

    pub fn polar_spec(&self) -> Result<&ModelSpec<S>, ModelError> {
        self.polar
            .as_ref()
            .ok_or_else(|| ModelError::MissingChart(self.name.clone(), "polar"))
    }

    pub fn skew(&self) -> Result<&SkewPolar<S>, ModelError> {
        self.skew
            .as_ref()
            .ok_or_else(|| ModelError::NotSkewProduct(self.name.clone()))
    }

    pub fn polar_diag(&self) -> Result<&PolarDiagonal<S>, ModelError> {
        self.polar_diag
            .as_ref()
            .ok_or_else(|| ModelError::NotDiagonalPolar(self.name.clone()))
    }

    /// Guard radius for integrators: escape beyond this signals a bug or a
    /// bad step size, not physics (the catalog drifts are dissipative).
    pub fn guard_radius(&self) -> S {
        self.region.1 * c64(10.0)
    }

    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.get(key).copied()
    }
}

fn get_param(params: &BTreeMap<String, f64>, key: &str, default: f64) -> f64 {
    params.get(key).copied().unwrap_or(default)
}

fn require_nonneg(params: &BTreeMap<String, f64>, key: &str, default: f64) -> Result<f64, ModelError> {
    let v = get_param(params, key, default);
    if v < 0.0 || !v.is_finite() {
        return Err(ModelError::InvalidParam {
            name: key.into(),
            reason: format!("must be finite and >= 0, got {v}"),
        });
    }
    Ok(v)
}

fn region_params<S: Real>(params: &BTreeMap<String, f64>) -> Result<(S, S), ModelError> {
    let r1 = get_param(params, "R1", 0.3);
    let r2 = get_param(params, "R2", 2.0);
    if !(r1 > 0.0 && r1 < 1.0 && r2 > 1.0 && r2.is_finite()) {
        return Err(ModelError::InvalidParam {
            name: "R1/R2".into(),
            reason: format!("need 0 < R1 < 1 < R2, got [{r1}, {r2}]"),
        });
    }
    Ok((c64(r1), c64(r2)))
}

/// Planar Hopf-type spec with phase speed `h(rho)` and linear-in-state
/// radial noise `sigma (x, y)`, optionally with a phase noise column
/// `h_tilde(rho) (-y, x)`.
fn planar_hopf_family<S: Real>(
    name: &str,
    h: ScalarFn<S>,
    h_prime: ScalarFn<S>,
    sigma: S,
    h_tilde: Option<(ScalarFn<S>, ScalarFn<S>)>,
) -> ModelSpec<S> {
    let hd = Arc::clone(&h);
    let drift: VecField<S> = Arc::new(move |[x, y]: [S; 2]| {
        let rho2 = x * x + y * y;
        let hr = hd(rho2.sqrt());
        [x - hr * y - x * rho2, hr * x + y - y * rho2]
    });
    let hj = Arc::clone(&h);
    let hpj = Arc::clone(&h_prime);
    let drift_jacobian: MatField<S> = Arc::new(move |[x, y]: [S; 2]| {
        let rho2 = x * x + y * y;
        let rho = rho2.sqrt();
        let one = S::one();
        let two = c64::<S>(2.0);
        let hr = hj(rho);
        // d/dx h(rho) = h'(rho) x / rho; finite limit 0 at the origin for
        // the catalog h's (h' ~ 2 rho there).
        let (hx, hy) = if rho > S::epsilon() {
            (hpj(rho) * x / rho, hpj(rho) * y / rho)
        } else {
            (S::zero(), S::zero())
        };
        [
            [
                one - hx * y - rho2 - two * x * x,
                -hr - hy * y - two * x * y,
            ],
            [
                hr + hx * x - two * x * y,
                one + hy * x - rho2 - two * y * y,
            ],
        ]
    });

    let mut diffusion: Vec<VecField<S>> = Vec::new();
    let mut diffusion_jacobians: Vec<MatField<S>> = Vec::new();
    diffusion.push(Arc::new(move |[x, y]: [S; 2]| [sigma * x, sigma * y]));
    diffusion_jacobians.push(Arc::new(move |_: [S; 2]| {
        [[sigma, S::zero()], [S::zero(), sigma]]
    }));
    if let Some((ht, htp)) = h_tilde {
        let h1 = Arc::clone(&ht);
        diffusion.push(Arc::new(move |[x, y]: [S; 2]| {
            let rho = (x * x + y * y).sqrt();
            let v = h1(rho);
            [-v * y, v * x]
        }));
        diffusion_jacobians.push(Arc::new(move |[x, y]: [S; 2]| {
            let rho = (x * x + y * y).sqrt();
            let v = ht(rho);
            let (vx, vy) = if rho > S::epsilon() {
                (htp(rho) * x / rho, htp(rho) * y / rho)
            } else {
                (S::zero(), S::zero())
            };
            [[-vx * y, -v - vy * y], [v + vx * x, vy * x]]
        }));
    }

    ModelSpec {
        name: name.to_string(),
        chart: Chart::Planar,
        drift,
        diffusion,
        drift_jacobian,
        diffusion_jacobians,
        ito_form: false,
    }
}

/// Polar spec of the skew-product family: `d theta = h(r) dt (+ h_tilde o dW)`,
/// `dr = (r - r^3) dt + sigma r o dW`.
fn polar_skew_family<S: Real>(
    name: &str,
    h: ScalarFn<S>,
    h_prime: ScalarFn<S>,
    sigma: S,
    h_tilde: Option<(ScalarFn<S>, ScalarFn<S>)>,
    with_radial_channel: bool,
) -> ModelSpec<S> {
    let hd = Arc::clone(&h);
    let drift: VecField<S> = Arc::new(move |[_, r]: [S; 2]| [hd(r), r - r * r * r]);
    let hp = Arc::clone(&h_prime);
    let drift_jacobian: MatField<S> = Arc::new(move |[_, r]: [S; 2]| {
        [
            [S::zero(), hp(r)],
            [S::zero(), S::one() - c64::<S>(3.0) * r * r],
        ]
    });
    let mut diffusion: Vec<VecField<S>> = Vec::new();
    let mut diffusion_jacobians: Vec<MatField<S>> = Vec::new();
    if with_radial_channel {
        diffusion.push(Arc::new(move |[_, r]: [S; 2]| [S::zero(), sigma * r]));
        diffusion_jacobians.push(Arc::new(move |_: [S; 2]| {
            [[S::zero(), S::zero()], [S::zero(), sigma]]
        }));
    }
    if let Some((ht, htp)) = h_tilde {
        diffusion.push(Arc::new(move |[_, r]: [S; 2]| [ht(r), S::zero()]));
        diffusion_jacobians.push(Arc::new(move |[_, r]: [S; 2]| {
            [[S::zero(), htp(r)], [S::zero(), S::zero()]]
        }));
    }
    ModelSpec {
        name: name.to_string(),
        chart: Chart::Polar,
        drift,
        diffusion,
        drift_jacobian,
        diffusion_jacobians,
        ito_form: false,
    }
}

fn skew_parts<S: Real>(
    h: ScalarFn<S>,
    sigma: S,
    h_tilde: Option<ScalarFn<S>>,
) -> SkewPolar<S> {
    SkewPolar {
        h,
        h_tilde,
        radial_drift: Arc::new(move |r: S| r - r * r * r),
        radial_diff: Arc::new(move |r: S| sigma * r),
        radial_channel: 0,
        phase_channel: 1,
        sigma,
    }
}

fn diag_parts<S: Real>(h: ScalarFn<S>, sigma: S, h_tilde: Option<ScalarFn<S>>) -> PolarDiagonal<S> {
    let ht = h_tilde.clone().unwrap_or_else(|| Arc::new(|_| S::zero()));
    let htp = Arc::clone(&ht);
    PolarDiagonal {
        f1: Arc::new(move |_, r| h(r)),
        f2: Arc::new(|_, r| r - r * r * r),
        g1: Arc::new(move |_, r| ht(r)),
        g2: Arc::new(move |_, r| sigma * r),
        // the catalog h_tilde's depend on r only
        dg1_dtheta: Arc::new(|_, _| S::zero()),
        dg2_dr: {
            let _ = htp;
            Arc::new(move |_, _| sigma)
        },
    }
}

/// Unnormalized stationary radial density `r^(2/sigma^2 - 1) exp(-r^2/sigma^2)`
/// of `dr = (r - r^3) dt + sigma r o dW`.
fn radial_density<S: Real>(sigma: S) -> ScalarFn<S> {
    Arc::new(move |r: S| {
        if r <= S::zero() {
            return S::zero();
        }
        let s2 = sigma * sigma;
        let expo = (c64::<S>(2.0) / s2 - S::one()) * r.ln() - r * r / s2;
        expo.exp()
    })
}

/// Build a catalog entry by name. Parameter names follow the usual symbols:
/// `sigma`, `kappa`, `sigma_theta`, `b_shear`, `h_quad`, `R1`, `R2`.
pub fn make_model<S: Real>(
    name: &str,
    params: &BTreeMap<String, f64>,
) -> Result<ModelCatalogEntry<S>, ModelError> {
    let region = region_params::<S>(params)?;
    let mut resolved = params.clone();
    resolved.entry("R1".into()).or_insert(0.3);
    resolved.entry("R2".into()).or_insert(2.0);

    let kappa_checked = |resolved: &BTreeMap<String, f64>| -> Result<f64, ModelError> {
        let kappa = get_param(resolved, "kappa", 2.0);
        if kappa < 1.0 || !kappa.is_finite() {
            return Err(ModelError::InvalidParam {
                name: "kappa".into(),
                reason: format!("must be finite and >= 1, got {kappa}"),
            });
        }
        Ok(kappa)
    };

    match name {
        "hopf_linear" => {
            let sigma = require_nonneg(&resolved, "sigma", 0.5)?;
            resolved.insert("sigma".into(), sigma);
            let s: S = c64(sigma);
            let h: ScalarFn<S> = Arc::new(|_| S::one());
            let hp: ScalarFn<S> = Arc::new(|_| S::zero());
            Ok(ModelCatalogEntry {
                name: name.into(),
                params: resolved,
                planar: Some(planar_hopf_family("hopf_linear", Arc::clone(&h), Arc::clone(&hp), s, None)),
                polar: Some(polar_skew_family("hopf_linear", Arc::clone(&h), hp, s, None, true)),
                skew: Some(skew_parts(Arc::clone(&h), s, None)),
                polar_diag: Some(diag_parts(Arc::clone(&h), s, None)),
                analytic: Analytic {
                    radial_density: Some(radial_density(s)),
                    isochron_phase: Some(Arc::new(|theta, _| theta)),
                    mean_period: Some(c64(std::f64::consts::TAU)),
                },
                region,
            })
        }
        "amplitude_phase" | "guckenheimer_det" => {
            let deterministic = name == "guckenheimer_det";
            let sigma = if deterministic {
                0.0
            } else {
                require_nonneg(&resolved, "sigma", 0.2)?
            };
            resolved.insert("sigma".into(), sigma);
            let kappa = kappa_checked(&resolved)?;
            resolved.insert("kappa".into(), kappa);
            let h_quad = get_param(&resolved, "h_quad", 1.0);
            resolved.insert("h_quad".into(), h_quad);
            let s: S = c64(sigma);
            let k: S = c64(kappa);
            let c: S = c64(h_quad);
            let h: ScalarFn<S> = Arc::new(move |r: S| k + c * (r * r - S::one()));
            let hp: ScalarFn<S> = Arc::new(move |r: S| c64::<S>(2.0) * c * r);
            Ok(ModelCatalogEntry {
                name: name.into(),
                params: resolved,
                planar: Some(planar_hopf_family(name, Arc::clone(&h), Arc::clone(&hp), s, None)),
                polar: Some(polar_skew_family(name, Arc::clone(&h), hp, s, None, !deterministic)),
                skew: Some(skew_parts(Arc::clone(&h), s, None)),
                polar_diag: Some(diag_parts(Arc::clone(&h), s, None)),
                analytic: Analytic {
                    radial_density: (!deterministic).then(|| radial_density(s)),
                    isochron_phase: Some(Arc::new(move |theta, r: S| theta + c * r.ln())),
                    mean_period: Some(c64::<S>(std::f64::consts::TAU) / k),
                },
                region,
            })
        }
        "noisy_phase" => {
            let sigma = require_nonneg(&resolved, "sigma", 0.2)?;
            let sigma_theta = require_nonneg(&resolved, "sigma_theta", 0.2)?;
            resolved.insert("sigma".into(), sigma);
            resolved.insert("sigma_theta".into(), sigma_theta);
            let kappa = kappa_checked(&resolved)?;
            resolved.insert("kappa".into(), kappa);
            let s: S = c64(sigma);
            let st: S = c64(sigma_theta);
            let k: S = c64(kappa);
            let h: ScalarFn<S> = Arc::new(move |r: S| k + (r * r - S::one()));
            let hp: ScalarFn<S> = Arc::new(move |r: S| c64::<S>(2.0) * r);
            // smooth bounded phase noise amplitude
            let ht: ScalarFn<S> = Arc::new(move |r: S| st / (S::one() + r * r));
            let htp: ScalarFn<S> = Arc::new(move |r: S| {
                let d = S::one() + r * r;
                -st * c64::<S>(2.0) * r / (d * d)
            });
            Ok(ModelCatalogEntry {
                name: name.into(),
                params: resolved,
                planar: Some(planar_hopf_family(
                    name,
                    Arc::clone(&h),
                    Arc::clone(&hp),
                    s,
                    Some((Arc::clone(&ht), Arc::clone(&htp))),
                )),
                polar: Some(polar_skew_family(
                    name,
                    Arc::clone(&h),
                    hp,
                    s,
                    Some((Arc::clone(&ht), htp)),
                    true,
                )),
                skew: Some(skew_parts(Arc::clone(&h), s, Some(Arc::clone(&ht)))),
                polar_diag: Some(diag_parts(Arc::clone(&h), s, Some(ht))),
                analytic: Analytic {
                    radial_density: Some(radial_density(s)),
                    isochron_phase: Some(Arc::new(move |theta, r: S| theta + r.ln())),
                    mean_period: Some(c64::<S>(std::f64::consts::TAU) / k),
                },
                region,
            })
        }
        "shear_additive" => {
            let sigma = require_nonneg(&resolved, "sigma", 0.2)?;
            let b = get_param(&resolved, "b_shear", 1.0);
            resolved.insert("sigma".into(), sigma);
            resolved.insert("b_shear".into(), b);
            let s: S = c64(sigma);
            let b: S = c64(b);
            let drift: VecField<S> = Arc::new(move |[x, y]: [S; 2]| {
                let rho2 = x * x + y * y;
                [x - y - (x - b * y) * rho2, y + x - (b * x + y) * rho2]
            });
            let drift_jacobian: MatField<S> = Arc::new(move |[x, y]: [S; 2]| {
                let rho2 = x * x + y * y;
                let one = S::one();
                let two = c64::<S>(2.0);
                [
                    [
                        one - rho2 - (x - b * y) * two * x,
                        -one + b * rho2 - (x - b * y) * two * y,
                    ],
                    [
                        one - b * rho2 - (b * x + y) * two * x,
                        one - rho2 - (b * x + y) * two * y,
                    ],
                ]
            });
            let zero_jac: MatField<S> = Arc::new(|_| [[S::zero(); 2]; 2]);
            Ok(ModelCatalogEntry {
                name: name.into(),
                params: resolved,
                planar: Some(ModelSpec {
                    name: name.into(),
                    chart: Chart::Planar,
                    drift,
                    diffusion: vec![
                        Arc::new(move |_| [s, S::zero()]),
                        Arc::new(move |_| [S::zero(), s]),
                    ],
                    drift_jacobian,
                    diffusion_jacobians: vec![Arc::clone(&zero_jac), zero_jac],
                    ito_form: false,
                }),
                polar: None,
                skew: None,
                polar_diag: None,
                analytic: Analytic::default(),
                region,
            })
        }
        "general_polar" => {
            // Parametric family for config-driven runs: f1 = f1_const +
            // f1_quad (r^2 - 1), f2 = r - r^3, G1 = g1_const / (1 + r^2),
            // G2 = sigma r. Arbitrary coefficient functions enter through
            // `general_polar_entry`.
            let sigma = require_nonneg(&resolved, "sigma", 0.2)?;
            let f1c = get_param(&resolved, "f1_const", 1.0);
            let f1q = get_param(&resolved, "f1_quad", 0.0);
            let g1c = require_nonneg(&resolved, "g1_const", 0.0)?;
            resolved.insert("sigma".into(), sigma);
            resolved.insert("f1_const".into(), f1c);
            resolved.insert("f1_quad".into(), f1q);
            resolved.insert("g1_const".into(), g1c);
            let s: S = c64(sigma);
            let a: S = c64(f1c);
            let q: S = c64(f1q);
            let g: S = c64(g1c);
            let h: ScalarFn<S> = Arc::new(move |r: S| a + q * (r * r - S::one()));
            let hp: ScalarFn<S> = Arc::new(move |r: S| c64::<S>(2.0) * q * r);
            let ht: Option<(ScalarFn<S>, ScalarFn<S>)> = (g1c > 0.0).then(|| {
                let htf: ScalarFn<S> = Arc::new(move |r: S| g / (S::one() + r * r));
                let htpf: ScalarFn<S> = Arc::new(move |r: S| {
                    let d = S::one() + r * r;
                    -g * c64::<S>(2.0) * r / (d * d)
                });
                (htf, htpf)
            });
            let ht_scalar = ht.as_ref().map(|(f, _)| Arc::clone(f));
            Ok(ModelCatalogEntry {
                name: name.into(),
                params: resolved,
                planar: None,
                polar: Some(polar_skew_family(name, Arc::clone(&h), hp, s, ht, true)),
                skew: Some(skew_parts(Arc::clone(&h), s, ht_scalar.clone())),
                polar_diag: Some(diag_parts(Arc::clone(&h), s, ht_scalar)),
                analytic: Analytic {
                    radial_density: (sigma > 0.0).then(|| radial_density(s)),
                    isochron_phase: None,
                    mean_period: None,
                },
                region,
            })
        }
        other => Err(ModelError::UnknownModel(other.into())),
    }
}

/// Fully custom diagonal polar model from user-supplied coefficient
/// functions (the library-level face of `general_polar`). Jacobian entries
/// that are not supplied analytically are differenced centrally.
#[allow(clippy::too_many_arguments)]
pub fn general_polar_entry<S: Real>(
    name: &str,
    f1: ScalarFn2<S>,
    f2: ScalarFn2<S>,
    g1: ScalarFn2<S>,
    g2: ScalarFn2<S>,
    region: (S, S),
) -> ModelCatalogEntry<S> {
    let eps = S::epsilon().powf(c64(1.0 / 3.0));
    let fd = move |f: &ScalarFn2<S>, theta: S, r: S, wrt_r: bool| -> S {
        let h = eps * (S::one() + theta.abs().max(r.abs()));
        if wrt_r {
            (f(theta, r + h) - f(theta, r - h)) / (c64::<S>(2.0) * h)
        } else {
            (f(theta + h, r) - f(theta - h, r)) / (c64::<S>(2.0) * h)
        }
    };

    let (f1d, f2d) = (Arc::clone(&f1), Arc::clone(&f2));
    let drift: VecField<S> = Arc::new(move |[theta, r]: [S; 2]| [f1d(theta, r), f2d(theta, r)]);
    let (f1j, f2j) = (Arc::clone(&f1), Arc::clone(&f2));
    let drift_jacobian: MatField<S> = Arc::new(move |[theta, r]: [S; 2]| {
        [
            [fd(&f1j, theta, r, false), fd(&f1j, theta, r, true)],
            [fd(&f2j, theta, r, false), fd(&f2j, theta, r, true)],
        ]
    });
    let g1d = Arc::clone(&g1);
    let g2d = Arc::clone(&g2);
    let col1: VecField<S> = Arc::new(move |[theta, r]: [S; 2]| [g1d(theta, r), S::zero()]);
    let col2: VecField<S> = Arc::new(move |[theta, r]: [S; 2]| [S::zero(), g2d(theta, r)]);
    let g1j = Arc::clone(&g1);
    let g2j = Arc::clone(&g2);
    let jac1: MatField<S> = Arc::new(move |[theta, r]: [S; 2]| {
        [
            [fd(&g1j, theta, r, false), fd(&g1j, theta, r, true)],
            [S::zero(), S::zero()],
        ]
    });
    let jac2: MatField<S> = Arc::new(move |[theta, r]: [S; 2]| {
        [
            [S::zero(), S::zero()],
            [fd(&g2j, theta, r, false), fd(&g2j, theta, r, true)],
        ]
    });
    let g1t = Arc::clone(&g1);
    let g2t = Arc::clone(&g2);
    ModelCatalogEntry {
        name: name.into(),
        params: BTreeMap::new(),
        planar: None,
        polar: Some(ModelSpec {
            name: name.into(),
            chart: Chart::Polar,
            drift,
            diffusion: vec![col2, col1],
            drift_jacobian,
            diffusion_jacobians: vec![jac2, jac1],
            ito_form: false,
        }),
        skew: None,
        polar_diag: Some(PolarDiagonal {
            f1,
            f2,
            g1,
            g2,
            dg1_dtheta: Arc::new(move |theta, r| fd(&g1t, theta, r, false)),
            dg2_dr: Arc::new(move |theta, r| fd(&g2t, theta, r, true)),
        }),
        analytic: Analytic::default(),
        region,
    }
}

/// Ito conversion: returns the spec with drift `b + b0`,
/// `b0 = 1/2 sum_i (D sigma_i) sigma_i`, identical diffusion, flagged Ito.
pub fn stratonovich_to_ito<S: Real>(spec: &ModelSpec<S>) -> ModelSpec<S> {
    let drift = Arc::clone(&spec.drift);
    let cols: Vec<_> = spec.diffusion.iter().map(Arc::clone).collect();
    let jacs: Vec<_> = spec.diffusion_jacobians.iter().map(Arc::clone).collect();
    let new_drift: VecField<S> = Arc::new(move |x: [S; 2]| {
        let mut b = drift(x);
        let half = c64::<S>(0.5);
        for (col, jac) in cols.iter().zip(jacs.iter()) {
            let s = col(x);
            let j = jac(x);
            b[0] += half * (j[0][0] * s[0] + j[0][1] * s[1]);
            b[1] += half * (j[1][0] * s[0] + j[1][1] * s[1]);
        }
        b
    });
    // centered finite differences for the converted drift's Jacobian; the
    // Ito route is only used for cross-check integration, which does not
    // consume it, but the field stays populated per the type contract.
    let nd = Arc::clone(&new_drift);
    let eps = S::epsilon().powf(c64(1.0 / 3.0));
    let drift_jacobian: MatField<S> = Arc::new(move |x: [S; 2]| {
        let mut out = [[S::zero(); 2]; 2];
        for j in 0..2 {
            let h = eps * (S::one() + x[j].abs());
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let fp = nd(xp);
            let fm = nd(xm);
            for i in 0..2 {
                out[i][j] = (fp[i] - fm[i]) / (c64::<S>(2.0) * h);
            }
        }
        out
    });
    ModelSpec {
        name: spec.name.clone(),
        chart: spec.chart,
        drift: new_drift,
        diffusion: spec.diffusion.clone(),
        drift_jacobian,
        diffusion_jacobians: spec.diffusion_jacobians.clone(),
        ito_form: true,
    }
}

/// Sampled one-sided Lipschitz probe: the maximum over random pairs in the
/// box of `<b(x) - b(y), x - y> / |x - y|^2`. Degenerate pairs are skipped.
pub fn one_sided_lipschitz_probe<S: Real>(
    spec: &ModelSpec<S>,
    sample_count: usize,
    lo: [S; 2],
    hi: [S; 2],
    seed: u64,
    filter: impl Fn([S; 2]) -> bool,
) -> Result<S, ModelError> {
    if sample_count < 2 {
        return Err(ModelError::TooFewSamples);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = S::neg_infinity();
    let draw = |rng: &mut ChaCha8Rng| -> [S; 2] {
        loop {
            let p = [rng.gen_range(lo[0]..hi[0]), rng.gen_range(lo[1]..hi[1])];
            if filter(p) {
                return p;
            }
        }
    };
    for _ in 0..sample_count {
        let x = draw(&mut rng);
        let y = draw(&mut rng);
        let dx = [x[0] - y[0], x[1] - y[1]];
        let n2 = dx[0] * dx[0] + dx[1] * dx[1];
        if n2 <= S::epsilon() {
            continue;
        }
        let bx = (spec.drift)(x);
        let by = (spec.drift)(y);
        let dot = (bx[0] - by[0]) * dx[0] + (bx[1] - by[1]) * dx[1];
        best = best.max(dot / n2);
    }
    Ok(best)
}

/// Explicit pathwise radial solution of the linear-noise Hopf model,
/// `r(t) = r0 e^(t + sigma W_t) / (1 + 2 r0^2 int_0^t e^(2(s + sigma W_s)) ds)^(1/2)`,
/// evaluated on the path grid by running trapezoid quadrature. Serves as an
/// integration-free oracle for the flow engine.
pub fn hopf_explicit_radius<S: Real>(
    path: &NoisePath<S>,
    sigma: S,
    r0: S,
    t_end: S,
) -> Result<Vec<(S, S)>, crate::error::NoiseError> {
    let dt = path.dt();
    let n = (t_end / dt).to_f64().unwrap().round() as usize;
    let two = c64::<S>(2.0);
    let mut out = Vec::with_capacity(n + 1);
    let mut integral = S::zero();
    let mut prev = S::one(); // e^{2(0 + sigma W_0)} = 1
    out.push((S::zero(), r0));
    for k in 1..=n {
        let t = dt * S::from_usize(k).unwrap();
        let w = path.evaluate_channel(0, t)?;
        let cur = (two * (t + sigma * w)).exp();
        integral += c64::<S>(0.5) * (prev + cur) * dt;
        prev = cur;
        let num = r0 * (t + sigma * w).exp();
        let den = (S::one() + two * r0 * r0 * integral).sqrt();
        out.push((t, num / den));
    }
    Ok(out)
}
