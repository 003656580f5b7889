//! Crumb-guided slice sampling at a fixed temperature.
//!
//! One step: draw a slice level `z = H(x₀) + e` with `e ~ Exp(mean τ)`, so
//! the slice is `S = {x : H(x) < z}`. Crumbs are then accumulated until a
//! candidate lands inside the slice: each crumb is either a marker (a
//! previous-level sample already inside the slice) or a Gaussian renewal
//! `N(x₀, c₀² Σ)` around the current state. The `l`-th candidate comes from
//! the crumb pseudo-posterior `N(ς̄_l, (c₀²/l) Σ)` — each crumb treated as
//! a noisy observation of the point being sought, so proposals tighten
//! around the running crumb mean `ς̄_l` as evidence accumulates.
//!
//! Renewal crumbs keep the step reversible: their mean tracks the current
//! state, which makes the accept-first-inside-the-slice rule leave the
//! level's target invariant. Marker crumbs inject previous-level guidance
//! instead, at the price of a slight pull towards where that level was
//! dense; `p_renew` therefore defaults high, keeping markers a minority
//! share of the crumb stream.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Error;
use crate::target::NegLogDensity;

/// Proposal scale: a Cholesky factor of the (regularised) marker covariance,
/// or its diagonal standard deviations when factorisation fails outright.
enum ProposalScale {
    Chol(DMatrix<f64>),
    Diag(DVector<f64>),
}

impl ProposalScale {
    fn from_covariance(sigma: &DMatrix<f64>) -> Self {
        let dim = sigma.nrows() as f64;
        let base = 1e-8 * sigma.trace() / dim;
        for eps in [base, 100.0 * base] {
            let mut reg = sigma.clone();
            for i in 0..sigma.nrows() {
                reg[(i, i)] += eps;
            }
            if let Some(chol) = Cholesky::new(reg) {
                return Self::Chol(chol.l());
            }
        }
        Self::Diag(sigma.diagonal().map(|v| v.max(0.0).sqrt()))
    }

    fn draw<R: Rng>(&self, center: &DVector<f64>, mult: f64, rng: &mut R) -> DVector<f64> {
        let dim = center.len();
        let noise = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        match self {
            Self::Chol(l) => center + mult * (l * noise),
            Self::Diag(scales) => center + mult * noise.component_mul(scales),
        }
    }
}

/// Everything a chain needs to take steps at one temperature level: the
/// previous-level samples ("markers") with their energies, the temperature,
/// and the Gaussian proposal machinery built from the marker covariance.
pub struct LevelContext<'a> {
    markers: &'a [DVector<f64>],
    marker_h: &'a [f64],
    tau: f64,
    scale: ProposalScale,
    c0: f64,
    p_renew: f64,
    max_crumbs: usize,
}

impl<'a> LevelContext<'a> {
    pub fn new(
        markers: &'a [DVector<f64>],
        marker_h: &'a [f64],
        tau: f64,
        sigma: &DMatrix<f64>,
        c0: f64,
        p_renew: f64,
        max_crumbs: usize,
    ) -> Result<Self, Error> {
        if markers.is_empty() {
            return Err(Error::EmptySampleSet);
        }
        if markers.len() != marker_h.len() {
            return Err(Error::WeightCountMismatch {
                weights: marker_h.len(),
                samples: markers.len(),
            });
        }
        if !(tau >= 1.0) {
            return Err(Error::BadConfig(format!("temperature {tau} below 1")));
        }
        if !(c0 > 0.0) {
            return Err(Error::BadConfig(format!("c0 {c0} must be positive")));
        }
        if !(0.0..=1.0).contains(&p_renew) {
            return Err(Error::BadConfig(format!("p_renew {p_renew} outside [0,1]")));
        }
        if max_crumbs == 0 {
            return Err(Error::BadConfig("max_crumbs must be at least 1".into()));
        }
        Ok(Self {
            markers,
            marker_h,
            tau,
            scale: ProposalScale::from_covariance(sigma),
            c0,
            p_renew,
            max_crumbs,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn max_crumbs(&self) -> usize {
        self.max_crumbs
    }
}

/// Chain state: current point, its energy, and the slice level used by the
/// step that produced it (`z >= h` always; strict after any accepted step).
#[derive(Debug, Clone)]
pub struct SliceState {
    pub point: DVector<f64>,
    pub h: f64,
    pub z: f64,
}

impl SliceState {
    pub fn new(point: DVector<f64>, h: f64) -> Self {
        Self { point, h, z: h }
    }
}

/// Deterministic part of the slice-level draw: `z = H(x₀) + e`.
pub fn slice_level(h_current: f64, exp_draw: f64) -> f64 {
    h_current + exp_draw
}

/// Draws `z = H(x₀) + e` with `e ~ Exp(mean τ)` via inverse transform.
pub fn draw_slice_level<R: Rng>(h_current: f64, tau: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    slice_level(h_current, -tau * u.ln())
}

/// Strict slice membership; `+∞` and NaN energies are never inside.
pub fn in_slice(h_candidate: f64, z: f64) -> bool {
    h_candidate < z
}

/// Indices of markers inside the current slice.
pub fn marker_index_set(marker_h: &[f64], z: f64) -> Vec<usize> {
    marker_h
        .iter()
        .enumerate()
        .filter(|(_, &h)| in_slice(h, z))
        .map(|(j, _)| j)
        .collect()
}

/// One crumb: a uniformly chosen in-slice marker, or — when none exist or a
/// renewal fires with probability `p_renew` — a draw from `N(x₀, c₀² Σ)`.
pub fn draw_crumb<R: Rng>(
    ctx: &LevelContext,
    current: &DVector<f64>,
    j_set: &[usize],
    rng: &mut R,
) -> DVector<f64> {
    let u: f64 = rng.random();
    if j_set.is_empty() || u < ctx.p_renew {
        ctx.scale.draw(current, ctx.c0, rng)
    } else {
        ctx.markers[j_set[rng.random_range(0..j_set.len())]].clone()
    }
}

/// Candidate after `l = crumbs.len()` crumbs: `ξ ~ N(ς̄_l, (c₀²/l) Σ)`,
/// the pseudo-posterior of `l` equally-weighted Gaussian crumb observations.
pub fn propose_candidate<R: Rng>(
    ctx: &LevelContext,
    crumbs: &[DVector<f64>],
    rng: &mut R,
) -> DVector<f64> {
    let l = crumbs.len() as f64;
    let mut mean = DVector::zeros(crumbs[0].len());
    for c in crumbs {
        mean += c;
    }
    mean /= l;
    ctx.scale.draw(&mean, ctx.c0 / l.sqrt(), rng)
}

/// Diagnostics for a single step.
#[derive(Debug, Clone, Copy)]
pub struct StepDiag {
    /// Crumbs consumed before acceptance (or the limit, when stalled).
    pub crumbs: usize,
    /// True when the crumb limit was hit and the state was left unchanged.
    pub stalled: bool,
}

/// One slice-sampling step. Draws a fresh level `z`, then alternates
/// crumbs and candidates until one lands inside the slice; hitting the
/// crumb limit leaves the chain where it was.
pub fn advance_chain<T, R>(
    ctx: &LevelContext,
    state: &SliceState,
    target: &T,
    rng: &mut R,
) -> (SliceState, StepDiag)
where
    T: NegLogDensity + ?Sized,
    R: Rng,
{
    let z = draw_slice_level(state.h, ctx.tau, rng);
    let j_set = marker_index_set(ctx.marker_h, z);
    let mut crumbs = Vec::with_capacity(4);
    for l in 1..=ctx.max_crumbs {
        crumbs.push(draw_crumb(ctx, &state.point, &j_set, rng));
        let candidate = propose_candidate(ctx, &crumbs, rng);
        let h_candidate = target.eval(&candidate);
        if in_slice(h_candidate, z) {
            return (
                SliceState {
                    point: candidate,
                    h: h_candidate,
                    z,
                },
                StepDiag {
                    crumbs: l,
                    stalled: false,
                },
            );
        }
    }
    (
        SliceState {
            point: state.point.clone(),
            h: state.h,
            z,
        },
        StepDiag {
            crumbs: ctx.max_crumbs,
            stalled: true,
        },
    )
}
