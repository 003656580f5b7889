//! Adaptive temperature schedule.
//!
//! Moving from temperature `τ_prev` to `τ_next` reweights a sample by
//! `ω_j ∝ exp(-H_j (1/τ_next - 1/τ_prev))`. The next temperature is chosen
//! so the effective sample size of those weights hits `γ N`, found by
//! bisection on `β = 1/τ` (monotone and bounded on `(1/τ_prev, 1]`), and is
//! clamped to exactly 1 once the target is reachable there — the final
//! level then samples the untempered posterior.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::Error;

/// A sample with the importance weights of the current transition.
/// Fresh MCMC output carries uniform weights until it is re-weighted.
#[derive(Debug, Clone)]
pub struct WeightedSampleSet {
    pub points: Vec<DVector<f64>>,
    pub h_values: Vec<f64>,
    pub raw_weights: Vec<f64>,
    pub norm_weights: Vec<f64>,
}

impl WeightedSampleSet {
    pub fn uniform(points: Vec<DVector<f64>>, h_values: Vec<f64>) -> Result<Self, Error> {
        if points.is_empty() {
            return Err(Error::EmptySampleSet);
        }
        if points.len() != h_values.len() {
            return Err(Error::WeightCountMismatch {
                weights: h_values.len(),
                samples: points.len(),
            });
        }
        let n = points.len();
        Ok(Self {
            points,
            h_values,
            raw_weights: vec![1.0; n],
            norm_weights: vec![1.0 / n as f64; n],
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Installs the weights of a transition computed elsewhere.
    pub fn set_weights(&mut self, w: ImportanceWeights) -> Result<(), Error> {
        if w.norm.len() != self.len() {
            return Err(Error::WeightCountMismatch {
                weights: w.norm.len(),
                samples: self.len(),
            });
        }
        self.raw_weights = w.raw;
        self.norm_weights = w.norm;
        Ok(())
    }
}

/// Raw (max-shifted) and normalised importance weights of one transition.
#[derive(Debug, Clone)]
pub struct ImportanceWeights {
    pub raw: Vec<f64>,
    pub norm: Vec<f64>,
}

fn delta_beta(tau_prev: f64, tau_next: f64) -> f64 {
    let beta_prev = if tau_prev.is_infinite() {
        0.0
    } else {
        1.0 / tau_prev
    };
    1.0 / tau_next - beta_prev
}

/// Weights as a function of the inverse-temperature increment. Infinite
/// energies always get zero weight; everything is shifted by the max
/// log-weight before exponentiation so the largest raw weight is 1.
fn weights_from_dbeta(h: &[f64], dbeta: f64) -> Result<ImportanceWeights, Error> {
    let logw: Vec<f64> = h
        .iter()
        .map(|&hj| {
            if hj.is_finite() {
                -hj * dbeta
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let m = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return Err(Error::DegenerateWeights);
    }
    let raw: Vec<f64> = logw.iter().map(|&lw| (lw - m).exp()).collect();
    let sum: f64 = raw.iter().sum();
    let norm = raw.iter().map(|&w| w / sum).collect();
    Ok(ImportanceWeights { raw, norm })
}

/// Importance weights for the move `τ_prev → τ_next`
/// (`τ_prev = +∞` is the sentinel for the initial, untempered sample).
pub fn importance_weights(
    h_values: &[f64],
    tau_prev: f64,
    tau_next: f64,
) -> Result<ImportanceWeights, Error> {
    if h_values.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    if !(1.0 <= tau_next && tau_next <= tau_prev) {
        return Err(Error::BadTemperatureOrder {
            next: tau_next,
            prev: tau_prev,
        });
    }
    weights_from_dbeta(h_values, delta_beta(tau_prev, tau_next))
}

/// `ESS = 1 / Σ ω̄_j²`: N for uniform weights, 1 for a point mass.
pub fn effective_sample_size(norm_weights: &[f64]) -> f64 {
    1.0 / norm_weights.iter().map(|&w| w * w).sum::<f64>()
}

/// Next temperature on the ladder: the `τ ∈ [1, τ_prev)` at which the
/// transition's ESS equals `γ N`, or exactly 1 when even the full move to
/// the posterior keeps `ESS ≥ γ N`.
pub fn next_temperature(h_values: &[f64], tau_prev: f64, gamma: f64) -> Result<f64, Error> {
    if h_values.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::BadGamma(gamma));
    }
    if !(tau_prev > 1.0) {
        return Err(Error::BadTemperatureOrder {
            next: 1.0,
            prev: tau_prev,
        });
    }
    let target = gamma * h_values.len() as f64;
    let finite = h_values.iter().filter(|h| h.is_finite()).count() as f64;
    if finite < target {
        return Err(Error::EssTargetUnreachable {
            target,
            available: finite,
        });
    }
    let beta_prev = if tau_prev.is_infinite() {
        0.0
    } else {
        1.0 / tau_prev
    };
    let ess_at = |beta: f64| -> Result<f64, Error> {
        Ok(effective_sample_size(
            &weights_from_dbeta(h_values, beta - beta_prev)?.norm,
        ))
    };
    if ess_at(1.0)? >= target {
        return Ok(1.0);
    }
    // ESS falls monotonically from ~N at beta_prev to below the target at 1,
    // so bisect; 80 iterations pin beta far below any stated tolerance.
    let (mut lo, mut hi) = (beta_prev, 1.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if ess_at(mid)? >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(1.0 / (0.5 * (lo + hi)))
}

/// The realised schedule: `τ_0 = +∞`, strictly decreasing, ending at 1.
#[derive(Debug, Clone, Serialize)]
pub struct TemperatureLadder {
    pub taus: Vec<f64>,
    pub gamma: f64,
    pub max_levels: usize,
}

impl TemperatureLadder {
    pub fn validate(&self) -> Result<(), Error> {
        for w in self.taus.windows(2) {
            if !(w[1] < w[0]) {
                return Err(Error::BadTemperatureOrder {
                    next: w[1],
                    prev: w[0],
                });
            }
        }
        match self.taus.last() {
            Some(&t) if t == 1.0 => Ok(()),
            Some(&t) => Err(Error::BadTemperatureOrder { next: t, prev: 1.0 }),
            None => Err(Error::EmptySampleSet),
        }
    }

    /// Number of tempered levels (the `+∞` sentinel does not count).
    pub fn levels(&self) -> usize {
        self.taus.len().saturating_sub(1)
    }
}
