//! Gaussian-process backend: squared-exponential correlation, the
//! σ²-marginalised ("integrated") posterior over length-scales and nugget,
//! hyper-parameter priors, and moment-matched Student-t predictive moments.
//!
//! The GP has zero mean and correlation
//! `k(x, x') = exp(-½ Σ_d (x_d - x'_d)² / φ_d)` with a nugget `φ_δ` added on
//! the diagonal. The signal variance is integrated out analytically, leaving
//! the negative log-posterior
//! `H(φ) = -log p(φ) + e·log σ̂² + ½ log|K_δ|` with
//! `σ̂² = yᵀ K_δ⁻¹ y / (n-1)` and exponent `e` set by convention below.
//! Samplers work on the extended vector `(log φ_1 … log φ_p, z_δ)`: length
//! scales live in log space and the nugget is the sigmoid image of an
//! unconstrained auxiliary `z_δ`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::Serialize;
use std::fmt;
use std::sync::Arc;

use crate::error::Error;
use crate::target::NegLogDensity;

/// Smallest admissible nugget; also the floor of the sigmoid transform.
pub const NUGGET_LOWER_BOUND: f64 = 1e-12;

/// Default bounds of the initial log-length-scale box.
pub const DEFAULT_LOG_PHI_BOUNDS: (f64, f64) = (-7.0, 7.0);

/// Training data: `n` input rows in (nominally) `[0,1]^p` and `n` outputs.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    x: DMatrix<f64>,
    y: DVector<f64>,
}

impl TrainingSet {
    /// Rescaling to the unit box happens upstream; this only checks shape
    /// and finiteness.
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self, Error> {
        if x.nrows() < 2 {
            return Err(Error::TooFewRows(x.nrows()));
        }
        if x.ncols() == 0 {
            return Err(Error::NoInputColumns);
        }
        if x.nrows() != y.len() {
            return Err(Error::ShapeMismatch {
                rows: x.nrows(),
                outputs: y.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteData);
        }
        Ok(Self { x, y })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }
}

/// Sampler state: log length-scales plus the unconstrained nugget auxiliary.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperParamPoint {
    pub log_phi: DVector<f64>,
    pub z_delta: f64,
}

impl HyperParamPoint {
    /// Splits a flat sampler vector `(log φ_1 … log φ_p, z_δ)`.
    pub fn from_vector(v: &DVector<f64>) -> Result<Self, Error> {
        if v.len() < 2 {
            return Err(Error::DimensionMismatch {
                got: v.len(),
                expected: 2,
            });
        }
        Ok(Self {
            log_phi: DVector::from_iterator(v.len() - 1, v.iter().take(v.len() - 1).copied()),
            z_delta: v[v.len() - 1],
        })
    }

    pub fn to_vector(&self) -> DVector<f64> {
        let mut v = DVector::zeros(self.log_phi.len() + 1);
        v.rows_mut(0, self.log_phi.len()).copy_from(&self.log_phi);
        v[self.log_phi.len()] = self.z_delta;
        v
    }

    /// Length-scales on the natural scale.
    pub fn phi(&self) -> DVector<f64> {
        self.log_phi.map(f64::exp)
    }

    /// Nugget implied by the auxiliary, always inside `(lower_bound, 1)`.
    pub fn nugget(&self, lower_bound: f64) -> f64 {
        nugget_transform(self.z_delta, lower_bound)
    }
}

/// Which exponent multiplies `log σ̂²` in the integrated posterior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExponentConvention {
    /// `e = (n - p) / 2` (default).
    NMinusP,
    /// `e = (n - 1) / 2`, matching the divisor of `σ̂²`.
    NMinusOne,
}

impl ExponentConvention {
    pub fn exponent(self, n: usize, p: usize) -> f64 {
        match self {
            Self::NMinusP => (n as f64 - p as f64) / 2.0,
            Self::NMinusOne => (n as f64 - 1.0) / 2.0,
        }
    }
}

/// Numerical policy for building and factorising the correlation matrix.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KernelConfig {
    pub nugget_lower_bound: f64,
    /// Jitter retries after a failed Cholesky: 1e-10, 1e-8, 1e-6, ...
    pub jitter_max_attempts: usize,
    pub exponent: ExponentConvention,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            nugget_lower_bound: NUGGET_LOWER_BOUND,
            jitter_max_attempts: 3,
            exponent: ExponentConvention::NMinusP,
        }
    }
}

/// Sigmoid map from the unconstrained auxiliary to a nugget in
/// `(lower_bound, 1)`: `φ_δ = (1 - l_b) / (1 + exp(-z)) + l_b`.
pub fn nugget_transform(z_delta: f64, lower_bound: f64) -> f64 {
    (1.0 - lower_bound) / (1.0 + (-z_delta).exp()) + lower_bound
}

/// Inverse of [`nugget_transform`]; used to seed the auxiliary from a
/// nugget drawn on the natural scale.
pub fn nugget_transform_inv(phi_delta: f64, lower_bound: f64) -> f64 {
    let u = (phi_delta - lower_bound) / (1.0 - lower_bound);
    (u / (1.0 - u)).ln()
}

/// Squared-exponential correlation between two points; the length-scales
/// enter the denominator linearly.
pub fn sq_exp_corr(a: &DVector<f64>, b: &DVector<f64>, phi: &DVector<f64>) -> Result<f64, Error> {
    if a.len() != b.len() || a.len() != phi.len() {
        return Err(Error::DimensionMismatch {
            got: b.len().max(phi.len()),
            expected: a.len(),
        });
    }
    if phi.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::NonPositiveLengthScale);
    }
    let mut s = 0.0;
    for d in 0..a.len() {
        let t = a[d] - b[d];
        s += t * t / phi[d];
    }
    Ok((-0.5 * s).exp())
}

/// Per-dimension matrices of squared coordinate differences, so repeated
/// posterior evaluations on the same design skip the distance work.
pub fn sq_dist_tensor(x: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
    let n = x.nrows();
    (0..x.ncols())
        .map(|d| {
            DMatrix::from_fn(n, n, |i, j| {
                let t = x[(i, d)] - x[(j, d)];
                t * t
            })
        })
        .collect()
}

fn corr_from_sq_dists(sq: &[DMatrix<f64>], phi: &DVector<f64>, phi_delta: f64) -> DMatrix<f64> {
    let n = sq[0].nrows();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = 1.0 + phi_delta;
        for j in i + 1..n {
            let mut s = 0.0;
            for (d, sqd) in sq.iter().enumerate() {
                s += sqd[(i, j)] / phi[d];
            }
            let v = (-0.5 * s).exp();
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Correlation matrix of a design under length-scales `phi`, with
/// `1 + φ_δ` on the diagonal. Symmetric by construction.
pub fn corr_matrix(
    x: &DMatrix<f64>,
    phi: &DVector<f64>,
    phi_delta: f64,
) -> Result<DMatrix<f64>, Error> {
    if phi.len() != x.ncols() {
        return Err(Error::DimensionMismatch {
            got: phi.len(),
            expected: x.ncols(),
        });
    }
    if phi.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::NonPositiveLengthScale);
    }
    if !(phi_delta >= 0.0) {
        return Err(Error::NegativeNugget(phi_delta));
    }
    Ok(corr_from_sq_dists(&sq_dist_tensor(x), phi, phi_delta))
}

/// Cholesky factor of a correlation matrix together with its log-determinant.
#[derive(Clone)]
pub struct CholFactor {
    chol: Cholesky<f64, Dyn>,
    log_det: f64,
}

impl CholFactor {
    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    /// Lower-triangular factor (allocates).
    pub fn l(&self) -> DMatrix<f64> {
        self.chol.l()
    }
}

/// Single factorisation attempt; fails on a matrix that is not positive
/// definite. `log|K| = 2 Σ log L_ii`.
pub fn chol_logdet(k: &DMatrix<f64>) -> Result<CholFactor, Error> {
    let chol = Cholesky::new(k.clone()).ok_or(Error::NotPositiveDefinite { attempts: 0 })?;
    let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    Ok(CholFactor { chol, log_det })
}

/// Factorisation with an escalating diagonal jitter ladder
/// (1e-10, 1e-8, 1e-6, ...) after a plain failure. Returns the factor of the
/// jittered matrix; the log-determinant refers to what was factorised.
pub fn chol_with_jitter(k: &DMatrix<f64>, max_attempts: usize) -> Result<CholFactor, Error> {
    if let Ok(f) = chol_logdet(k) {
        return Ok(f);
    }
    let mut jitter = 1e-10;
    for _ in 0..max_attempts {
        let mut kj = k.clone();
        for i in 0..kj.nrows() {
            kj[(i, i)] += jitter;
        }
        if let Ok(f) = chol_logdet(&kj) {
            return Ok(f);
        }
        jitter *= 100.0;
    }
    Err(Error::NotPositiveDefinite {
        attempts: max_attempts,
    })
}

/// Profile estimate of the signal variance, `σ̂² = yᵀ K_δ⁻¹ y / (n - 1)`.
/// The divisor is `n - 1` regardless of the exponent convention.
pub fn sigma_hat_sq(ts: &TrainingSet, chol: &CholFactor) -> f64 {
    ts.y.dot(&chol.solve(&ts.y)) / (ts.n() as f64 - 1.0)
}

/// Prior over the hyper-parameters, evaluated on the sampling scale.
///
/// The nugget contributes a flat (truncated uniform) term under every
/// built-in prior, so only the length-scale coordinates matter here.
#[derive(Clone)]
pub enum PriorSpec {
    /// Flat on `log φ` inside the box `[lo, hi]^p`, -∞ outside.
    UniformLogSpace { lo: f64, hi: f64 },
    /// Exponential with the given mean on each `φ_d`, including the Jacobian
    /// of the log transform: `Σ_d (-φ_d / mean + log φ_d)`.
    Exponential { mean: f64 },
    /// Escape hatch for externally supplied log-priors.
    Custom(Arc<dyn Fn(&HyperParamPoint) -> f64 + Send + Sync>),
}

impl PriorSpec {
    pub fn default_uniform() -> Self {
        let (lo, hi) = DEFAULT_LOG_PHI_BOUNDS;
        Self::UniformLogSpace { lo, hi }
    }

    /// Short label for config echoes and reports.
    pub fn describe(&self) -> String {
        match self {
            Self::UniformLogSpace { lo, hi } => format!("uniform-log[{lo},{hi}]"),
            Self::Exponential { mean } => format!("exponential({mean})"),
            Self::Custom(_) => "custom".to_string(),
        }
    }
}

impl fmt::Debug for PriorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

/// Log prior density of a hyper-parameter point (up to a constant).
pub fn log_prior(hp: &HyperParamPoint, prior: &PriorSpec) -> f64 {
    match prior {
        PriorSpec::UniformLogSpace { lo, hi } => {
            if hp.log_phi.iter().all(|&v| v >= *lo && v <= *hi) {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        }
        PriorSpec::Exponential { mean } => hp
            .log_phi
            .iter()
            .map(|&lp| -lp.exp() / mean + lp)
            .sum(),
        PriorSpec::Custom(f) => f(hp),
    }
}

/// Negative log of the integrated posterior,
/// `H = -log p(φ) + e·log σ̂² + ½ log|K_δ|`.
///
/// Points outside the prior support get `H = +∞` without touching the
/// linear algebra. Factorisation failure (after the jitter ladder) and a
/// non-positive `σ̂²` are reported as errors; callers running a sampler map
/// those to `+∞` via [`GpPosterior`].
pub fn neg_log_integrated_posterior(
    hp: &HyperParamPoint,
    ts: &TrainingSet,
    prior: &PriorSpec,
    cfg: &KernelConfig,
) -> Result<f64, Error> {
    if hp.log_phi.len() != ts.p() {
        return Err(Error::DimensionMismatch {
            got: hp.log_phi.len(),
            expected: ts.p(),
        });
    }
    let lp = log_prior(hp, prior);
    if lp == f64::NEG_INFINITY {
        return Ok(f64::INFINITY);
    }
    let k = corr_matrix(&ts.x, &hp.phi(), hp.nugget(cfg.nugget_lower_bound))?;
    let chol = chol_with_jitter(&k, cfg.jitter_max_attempts)?;
    finish_h(lp, ts, &chol, cfg)
}

fn finish_h(
    lp: f64,
    ts: &TrainingSet,
    chol: &CholFactor,
    cfg: &KernelConfig,
) -> Result<f64, Error> {
    let s2 = sigma_hat_sq(ts, chol);
    if !(s2 > 0.0) {
        return Err(Error::NonPositiveVariance(s2));
    }
    let e = cfg.exponent.exponent(ts.n(), ts.p());
    Ok(-lp + e * s2.ln() + 0.5 * chol.log_det())
}

/// The integrated GP posterior wired up as a sampler target. Evaluation
/// failures become `+∞`, i.e. the point falls outside every slice.
pub struct GpPosterior {
    ts: TrainingSet,
    prior: PriorSpec,
    cfg: KernelConfig,
    sq_dists: Vec<DMatrix<f64>>,
}

impl GpPosterior {
    pub fn new(ts: TrainingSet, prior: PriorSpec, cfg: KernelConfig) -> Self {
        let sq_dists = sq_dist_tensor(&ts.x);
        Self {
            ts,
            prior,
            cfg,
            sq_dists,
        }
    }

    pub fn training_set(&self) -> &TrainingSet {
        &self.ts
    }

    pub fn kernel_config(&self) -> &KernelConfig {
        &self.cfg
    }

    /// Extended sampler dimension, `p + 1`.
    pub fn dim(&self) -> usize {
        self.ts.p() + 1
    }

    /// Fallible evaluation with cached distances; same value as
    /// [`neg_log_integrated_posterior`].
    pub fn h(&self, hp: &HyperParamPoint) -> Result<f64, Error> {
        if hp.log_phi.len() != self.ts.p() {
            return Err(Error::DimensionMismatch {
                got: hp.log_phi.len(),
                expected: self.ts.p(),
            });
        }
        let lp = log_prior(hp, &self.prior);
        if lp == f64::NEG_INFINITY {
            return Ok(f64::INFINITY);
        }
        let phi = hp.phi();
        if phi.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::NonPositiveLengthScale);
        }
        let k = corr_from_sq_dists(
            &self.sq_dists,
            &phi,
            hp.nugget(self.cfg.nugget_lower_bound),
        );
        let chol = chol_with_jitter(&k, self.cfg.jitter_max_attempts)?;
        finish_h(lp, &self.ts, &chol, &self.cfg)
    }
}

impl NegLogDensity for GpPosterior {
    fn eval(&self, x: &DVector<f64>) -> f64 {
        let Ok(hp) = HyperParamPoint::from_vector(x) else {
            return f64::INFINITY;
        };
        match self.h(&hp) {
            Ok(h) if !h.is_nan() => h,
            _ => f64::INFINITY,
        }
    }
}

/// Per-sample predictor: factorises once, then serves any number of query
/// points. Predictive moments are those of the Student-t predictive with
/// `df = 2e` degrees of freedom, moment-matched to a Gaussian:
/// `μ = tᵀ K_δ⁻¹ y`, `s² = σ̂² (1 + φ_δ - tᵀ K_δ⁻¹ t) · df/(df-2)`.
pub struct Predictor<'a> {
    ts: &'a TrainingSet,
    phi: DVector<f64>,
    phi_delta: f64,
    chol: CholFactor,
    kinv_y: DVector<f64>,
    sigma2: f64,
    df_factor: f64,
}

impl<'a> Predictor<'a> {
    pub fn new(hp: &HyperParamPoint, ts: &'a TrainingSet, cfg: &KernelConfig) -> Result<Self, Error> {
        let df = 2.0 * cfg.exponent.exponent(ts.n(), ts.p());
        if df <= 2.0 {
            return Err(Error::TooFewDegreesOfFreedom { df });
        }
        let phi = hp.phi();
        let phi_delta = hp.nugget(cfg.nugget_lower_bound);
        let k = corr_matrix(&ts.x, &phi, phi_delta)?;
        let chol = chol_with_jitter(&k, cfg.jitter_max_attempts)?;
        let kinv_y = chol.solve(&ts.y);
        let sigma2 = ts.y.dot(&kinv_y) / (ts.n() as f64 - 1.0);
        if !(sigma2 > 0.0) {
            return Err(Error::NonPositiveVariance(sigma2));
        }
        Ok(Self {
            ts,
            phi,
            phi_delta,
            chol,
            kinv_y,
            sigma2,
            df_factor: df / (df - 2.0),
        })
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// Mean and (non-negative) variance of the marginal predictive at `xq`.
    pub fn moments(&self, xq: &DVector<f64>) -> Result<(f64, f64), Error> {
        if xq.len() != self.ts.p() {
            return Err(Error::DimensionMismatch {
                got: xq.len(),
                expected: self.ts.p(),
            });
        }
        let n = self.ts.n();
        let t = DVector::from_fn(n, |i, _| {
            let mut s = 0.0;
            for d in 0..self.ts.p() {
                let dx = xq[d] - self.ts.x[(i, d)];
                s += dx * dx / self.phi[d];
            }
            (-0.5 * s).exp()
        });
        let mu = t.dot(&self.kinv_y);
        let reduction = t.dot(&self.chol.solve(&t));
        let s2 = self.sigma2 * (1.0 + self.phi_delta - reduction) * self.df_factor;
        Ok((mu, s2.max(0.0)))
    }
}

/// One-shot convenience around [`Predictor`].
pub fn predictive_moments(
    hp: &HyperParamPoint,
    ts: &TrainingSet,
    xq: &DVector<f64>,
    cfg: &KernelConfig,
) -> Result<(f64, f64), Error> {
    Predictor::new(hp, ts, cfg)?.moments(xq)
}
