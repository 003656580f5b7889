//! The annealed driver: starts from a dispersed sample at `τ = ∞`, walks an
//! adaptive temperature ladder chosen by the ESS rule, and at each level
//! moves a population of slice-sampling chains whose lengths are allocated
//! by systematic resampling of the importance weights. Terminates when the
//! ladder reaches `τ = 1`, where the samples target the posterior itself.
//!
//! Determinism: every random decision draws from a stream keyed by
//! `(seed, role, level, chain)`, and chains write to pre-assigned output
//! slots, so a run is reproducible bit-for-bit regardless of worker count.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::annealing::{
    effective_sample_size, importance_weights, next_temperature, TemperatureLadder,
    WeightedSampleSet,
};
use crate::error::Error;
use crate::gp::{GpPosterior, KernelConfig, PriorSpec, TrainingSet, DEFAULT_LOG_PHI_BOUNDS};
use crate::rng::{substream, TAG_CHAIN, TAG_INIT, TAG_RESAMPLE};
use crate::slice::{advance_chain, LevelContext, SliceState};
use crate::target::NegLogDensity;

/// How one coordinate of the initial sample is drawn.
#[derive(Debug, Clone, Copy)]
pub enum CoordInit {
    /// Uniform on `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
    /// Nugget auxiliary: draw the nugget uniformly on `(lower_bound, 1)`
    /// and push it back through the inverse sigmoid.
    NuggetFlat { lower_bound: f64 },
}

/// Per-coordinate recipe for the level-0 sample.
#[derive(Debug, Clone)]
pub struct InitSpec {
    coords: Vec<CoordInit>,
}

impl InitSpec {
    pub fn new(coords: Vec<CoordInit>) -> Result<Self, Error> {
        if coords.is_empty() {
            return Err(Error::BadConfig("initial sample needs coordinates".into()));
        }
        for c in &coords {
            if let CoordInit::Uniform { lo, hi } = c {
                if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                    return Err(Error::BadConfig(format!(
                        "degenerate initial bounds [{lo}, {hi}]"
                    )));
                }
            }
        }
        Ok(Self { coords })
    }

    /// Uniform box in every coordinate.
    pub fn uniform_box(dim: usize, lo: f64, hi: f64) -> Result<Self, Error> {
        Self::new(vec![CoordInit::Uniform { lo, hi }; dim])
    }

    /// GP layout: `p` log-length-scales on `[lo, hi]` plus the nugget
    /// auxiliary.
    pub fn gp(p: usize, lo: f64, hi: f64, nugget_lower_bound: f64) -> Result<Self, Error> {
        let mut coords = vec![CoordInit::Uniform { lo, hi }; p];
        coords.push(CoordInit::NuggetFlat {
            lower_bound: nugget_lower_bound,
        });
        Self::new(coords)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> DVector<f64> {
        DVector::from_iterator(
            self.coords.len(),
            self.coords.iter().map(|c| match c {
                CoordInit::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
                CoordInit::NuggetFlat { lower_bound } => {
                    let u: f64 = rng.random();
                    let phi_delta = lower_bound + (1.0 - lower_bound) * u;
                    crate::gp::nugget_transform_inv(phi_delta, *lower_bound)
                }
            }),
        )
    }
}

/// Knobs of a run. `c0 = None` means the usual `2.38 / sqrt(dim)` scaling.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Population size per level.
    pub n_per_level: usize,
    /// ESS fraction targeted by each temperature move.
    pub gamma: f64,
    /// Probability of renewing a crumb even when markers qualify. Renewal
    /// crumbs keep the slice step reversible, so this stays high; lower it
    /// only to lean harder on previous-level guidance.
    pub p_renew: f64,
    pub c0: Option<f64>,
    pub max_crumbs: usize,
    pub max_levels: usize,
    pub seed: u64,
    /// Worker threads; 0 uses the ambient rayon pool.
    pub workers: usize,
    /// Post-hoc thinning stride used by downstream scoring.
    pub thin: usize,
    /// Prior for GP runs (ignored by [`run_annealed`], which samples an
    /// arbitrary target with the prior already folded into its energy).
    pub prior: PriorSpec,
    pub kernel: KernelConfig,
    /// Initial box for the log-length-scales of GP runs.
    pub init_bounds: (f64, f64),
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n_per_level: 1000,
            gamma: 0.5,
            p_renew: 0.9,
            c0: None,
            max_crumbs: 100,
            max_levels: 50,
            seed: 0,
            workers: 0,
            thin: 1,
            prior: PriorSpec::default_uniform(),
            kernel: KernelConfig::default(),
            init_bounds: DEFAULT_LOG_PHI_BOUNDS,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if self.n_per_level == 0 {
            return Err(Error::BadConfig("n_per_level must be at least 1".into()));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::BadGamma(self.gamma));
        }
        if !(0.0..=1.0).contains(&self.p_renew) {
            return Err(Error::BadConfig(format!(
                "p_renew {} outside [0,1]",
                self.p_renew
            )));
        }
        if let Some(c0) = self.c0 {
            if !(c0 > 0.0) {
                return Err(Error::BadConfig(format!("c0 {c0} must be positive")));
            }
        }
        if self.max_crumbs == 0 {
            return Err(Error::BadConfig("max_crumbs must be at least 1".into()));
        }
        if self.max_levels == 0 {
            return Err(Error::BadConfig("max_levels must be at least 1".into()));
        }
        if self.thin == 0 {
            return Err(Error::BadConfig("thin must be at least 1".into()));
        }
        let (lo, hi) = self.init_bounds;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::BadConfig(format!(
                "degenerate init bounds [{lo}, {hi}]"
            )));
        }
        Ok(())
    }
}

/// Per-level diagnostics; everything here is deterministic for a seed.
#[derive(Debug, Clone, Serialize)]
pub struct LevelReport {
    pub tau: f64,
    pub ess: f64,
    pub stalls: usize,
    pub mean_crumbs: f64,
}

/// Outcome of a run: the ladder walked, per-level diagnostics, the final
/// posterior sample with its energies, and wall-clock timings (kept apart
/// so reports stay comparable across runs).
#[derive(Debug, Clone)]
pub struct RunReport {
    pub ladder: TemperatureLadder,
    pub levels: Vec<LevelReport>,
    pub samples: Vec<DVector<f64>>,
    pub h_values: Vec<f64>,
    pub level_seconds: Vec<f64>,
    pub total_seconds: f64,
}

impl RunReport {
    /// Every `stride`-th sample index, the scoring subset.
    pub fn thinned_indices(&self, stride: usize) -> Vec<usize> {
        (0..self.samples.len()).step_by(stride.max(1)).collect()
    }
}

/// Draws the level-0 population: independent draws from the initial
/// distribution, redrawing any point whose energy is not finite. Gives up
/// once the redraw budget (100 per requested point) is spent.
pub fn initial_sample<T: NegLogDensity>(
    target: &T,
    init: &InitSpec,
    cfg: &RunConfig,
) -> Result<WeightedSampleSet, Error> {
    let n = cfg.n_per_level;
    let budget = 100 * n;
    let mut rng = substream(cfg.seed, TAG_INIT, 0, 0);
    let mut points = Vec::with_capacity(n);
    let mut h_values = Vec::with_capacity(n);
    let mut attempts = 0;
    while points.len() < n {
        let want = n - points.len();
        if attempts + want > budget {
            return Err(Error::InitialisationFailed {
                wanted: n,
                attempts: budget,
            });
        }
        attempts += want;
        let batch: Vec<DVector<f64>> = (0..want).map(|_| init.draw(&mut rng)).collect();
        let energies: Vec<f64> = batch.par_iter().map(|x| target.eval(x)).collect();
        for (x, h) in batch.into_iter().zip(energies) {
            if h.is_finite() {
                points.push(x);
                h_values.push(h);
            }
        }
    }
    WeightedSampleSet::uniform(points, h_values)
}

/// Systematic resampling: `n_out` evenly spaced points with one shared
/// uniform offset walk the weight CDF; each marker hit at least once
/// spawns a chain whose length is its multiplicity.
pub fn allocate_chains<R: Rng>(
    norm_weights: &[f64],
    n_out: usize,
    rng: &mut R,
) -> Vec<(usize, usize)> {
    let u: f64 = rng.random();
    let mut out: Vec<(usize, usize)> = Vec::new();
    let mut cum = 0.0;
    let mut j = 0; // next position index
    for (idx, &w) in norm_weights.iter().enumerate() {
        cum += w;
        let mut count = 0;
        while j < n_out && (j as f64 + u) / n_out as f64 <= cum {
            count += 1;
            j += 1;
        }
        if count > 0 {
            out.push((idx, count));
        }
    }
    // float drift in the CDF can strand the last few positions
    if j < n_out {
        let rest = n_out - j;
        match out.last_mut() {
            Some(last) if last.0 == norm_weights.len() - 1 => last.1 += rest,
            _ => out.push((norm_weights.len() - 1, rest)),
        }
    }
    out
}

/// Weighted covariance `Σ w_j (x_j - x̄)(x_j - x̄)ᵀ` (uniform when `weights`
/// is `None`).
pub fn weighted_cov(points: &[DVector<f64>], weights: Option<&[f64]>) -> DMatrix<f64> {
    let n = points.len();
    let dim = points[0].len();
    let uniform = 1.0 / n as f64;
    let w = |j: usize| weights.map_or(uniform, |w| w[j]);
    let mut mean = DVector::zeros(dim);
    for (j, x) in points.iter().enumerate() {
        mean += w(j) * x;
    }
    let mut cov = DMatrix::zeros(dim, dim);
    for (j, x) in points.iter().enumerate() {
        let d = x - &mean;
        cov.syger(w(j), &d, &d, 1.0);
    }
    cov.fill_upper_triangle_with_lower_triangle();
    cov
}

/// What one level hands to the next, with its step diagnostics.
pub struct LevelOutcome {
    pub set: WeightedSampleSet,
    pub stalls: usize,
    pub mean_crumbs: f64,
}

/// Runs one temperature level: builds the proposal context from the
/// weighted previous sample, allocates chains by systematic resampling,
/// and emits exactly `n_per_level` successive slice states in chain order.
pub fn run_level<T: NegLogDensity>(
    level: usize,
    prev: &WeightedSampleSet,
    tau: f64,
    cfg: &RunConfig,
    target: &T,
) -> Result<LevelOutcome, Error> {
    let dim = prev.points[0].len();
    // the very first level has no informative weights behind it yet, so its
    // proposal covariance uses the raw spread of the initial sample
    let cov_weights = if level == 1 {
        None
    } else {
        Some(prev.norm_weights.as_slice())
    };
    let sigma = weighted_cov(&prev.points, cov_weights);
    let c0 = cfg.c0.unwrap_or(2.38 / (dim as f64).sqrt());
    let ctx = LevelContext::new(
        &prev.points,
        &prev.h_values,
        tau,
        &sigma,
        c0,
        cfg.p_renew,
        cfg.max_crumbs,
    )?;

    let mut alloc_rng = substream(cfg.seed, TAG_RESAMPLE, level as u64, 0);
    let alloc = allocate_chains(&prev.norm_weights, cfg.n_per_level, &mut alloc_rng);

    let chains: Vec<(Vec<SliceState>, usize, usize)> = alloc
        .par_iter()
        .enumerate()
        .map(|(chain_idx, &(marker_idx, len))| {
            let mut rng = substream(cfg.seed, TAG_CHAIN, level as u64, chain_idx as u64);
            let mut state = SliceState::new(
                prev.points[marker_idx].clone(),
                prev.h_values[marker_idx],
            );
            let mut states = Vec::with_capacity(len);
            let (mut stalls, mut crumbs) = (0, 0);
            for _ in 0..len {
                let (next, diag) = advance_chain(&ctx, &state, target, &mut rng);
                stalls += diag.stalled as usize;
                crumbs += diag.crumbs;
                state = next.clone();
                states.push(next);
            }
            (states, stalls, crumbs)
        })
        .collect();

    let mut points = Vec::with_capacity(cfg.n_per_level);
    let mut h_values = Vec::with_capacity(cfg.n_per_level);
    let (mut stalls, mut crumbs) = (0, 0);
    for (states, s, c) in chains {
        stalls += s;
        crumbs += c;
        for st in states {
            points.push(st.point);
            h_values.push(st.h);
        }
    }
    if 2 * stalls > cfg.n_per_level {
        return Err(Error::LevelStalled {
            level,
            stalled: stalls,
            total: cfg.n_per_level,
        });
    }
    Ok(LevelOutcome {
        set: WeightedSampleSet::uniform(points, h_values)?,
        stalls,
        mean_crumbs: crumbs as f64 / cfg.n_per_level as f64,
    })
}

/// Full annealed run against an arbitrary target.
pub fn run_annealed<T: NegLogDensity>(
    target: &T,
    init: &InitSpec,
    cfg: &RunConfig,
) -> Result<RunReport, Error> {
    cfg.validate()?;
    match cfg.workers {
        0 => run_annealed_inner(target, init, cfg),
        w => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::WorkerPool(e.to_string()))?
            .install(|| run_annealed_inner(target, init, cfg)),
    }
}

fn run_annealed_inner<T: NegLogDensity>(
    target: &T,
    init: &InitSpec,
    cfg: &RunConfig,
) -> Result<RunReport, Error> {
    let start = Instant::now();
    let mut current = initial_sample(target, init, cfg)?;
    let mut taus = vec![f64::INFINITY];
    let mut levels = Vec::new();
    let mut level_seconds = Vec::new();
    let mut tau_prev = f64::INFINITY;

    for level in 1..=cfg.max_levels {
        let level_start = Instant::now();
        let tau = next_temperature(&current.h_values, tau_prev, cfg.gamma)?;
        let w = importance_weights(&current.h_values, tau_prev, tau)?;
        let ess = effective_sample_size(&w.norm);
        current.set_weights(w)?;

        let outcome = run_level(level, &current, tau, cfg, target)?;
        taus.push(tau);
        levels.push(LevelReport {
            tau,
            ess,
            stalls: outcome.stalls,
            mean_crumbs: outcome.mean_crumbs,
        });
        level_seconds.push(level_start.elapsed().as_secs_f64());
        current = outcome.set;
        tau_prev = tau;
        if tau == 1.0 {
            break;
        }
    }
    if tau_prev != 1.0 {
        return Err(Error::LadderExhausted(cfg.max_levels));
    }

    Ok(RunReport {
        ladder: TemperatureLadder {
            taus,
            gamma: cfg.gamma,
            max_levels: cfg.max_levels,
        },
        levels,
        samples: current.points,
        h_values: current.h_values,
        level_seconds,
        total_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Annealed run over the integrated GP posterior of a training set:
/// log-length-scales start uniform on the configured box and the nugget
/// auxiliary starts at a flat nugget.
pub fn run_ta2s2(ts: &TrainingSet, cfg: &RunConfig) -> Result<RunReport, Error> {
    let (lo, hi) = cfg.init_bounds;
    let init = InitSpec::gp(ts.p(), lo, hi, cfg.kernel.nugget_lower_bound)?;
    let target = GpPosterior::new(ts.clone(), cfg.prior.clone(), cfg.kernel);
    run_annealed(&target, &init, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use approx::assert_relative_eq;

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(v)
    }

    #[test]
    fn init_spec_validates_bounds() {
        assert!(InitSpec::uniform_box(2, -1.0, 1.0).is_ok());
        assert!(InitSpec::uniform_box(2, 1.0, 1.0).is_err());
        assert!(InitSpec::uniform_box(0, -1.0, 1.0).is_err());
    }

    #[test]
    fn initial_sample_covers_the_box_and_spreads_the_nugget() {
        let flat = |_: &DVector<f64>| 0.0;
        let init = InitSpec::gp(1, -7.0, 7.0, 1e-12).unwrap();
        let cfg = RunConfig {
            n_per_level: 10_000,
            seed: 3,
            ..RunConfig::default()
        };
        let s = initial_sample(&flat, &init, &cfg).unwrap();
        assert_eq!(s.len(), 10_000);

        let xs: Vec<f64> = s.points.iter().map(|p| p[0]).collect();
        let (lo, hi) = xs
            .iter()
            .fold((f64::MAX, f64::MIN), |(l, h), &v| (l.min(v), h.max(v)));
        assert!(hi - lo >= 0.95 * 14.0, "covered only {}", hi - lo);
        assert!(lo >= -7.0 && hi <= 7.0);

        // the implied nugget is roughly uniform: about half below 0.5
        let below: usize = s
            .points
            .iter()
            .filter(|p| crate::gp::nugget_transform(p[1], 1e-12) < 0.5)
            .count();
        let frac = below as f64 / s.len() as f64;
        assert!((frac - 0.5).abs() < 0.02, "fraction below 0.5 was {frac}");
    }

    #[test]
    fn initial_sample_redraws_infinite_energies() {
        // left half-line is forbidden; all survivors sit on the right
        let half = |x: &DVector<f64>| {
            if x[0] < 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        };
        let init = InitSpec::uniform_box(1, -1.0, 1.0).unwrap();
        let cfg = RunConfig {
            n_per_level: 500,
            seed: 9,
            ..RunConfig::default()
        };
        let s = initial_sample(&half, &init, &cfg).unwrap();
        assert_eq!(s.len(), 500);
        assert!(s.points.iter().all(|p| p[0] >= 0.0));

        // a target that is never finite exhausts the budget
        let never = |_: &DVector<f64>| f64::INFINITY;
        let cfg = RunConfig {
            n_per_level: 10,
            seed: 9,
            ..RunConfig::default()
        };
        assert!(matches!(
            initial_sample(&never, &init, &cfg),
            Err(Error::InitialisationFailed { .. })
        ));
    }

    #[test]
    fn allocation_is_exact_for_uniform_divisible_weights() {
        let n = 8;
        let w = vec![1.0 / n as f64; n];
        let mut rng = substream(1, 0, 0, 0);
        let alloc = allocate_chains(&w, 16, &mut rng);
        assert_eq!(alloc.len(), n);
        assert!(alloc.iter().all(|&(_, len)| len == 2));
    }

    #[test]
    fn allocation_gives_everything_to_a_single_positive_weight() {
        let w = [0.0, 1.0, 0.0];
        let mut rng = substream(2, 0, 0, 0);
        let alloc = allocate_chains(&w, 7, &mut rng);
        assert_eq!(alloc, vec![(1, 7)]);
    }

    #[test]
    fn allocation_splits_three_to_one() {
        // weights (3/4, 1/4) with 4 slots: lengths (3, 1) for any offset
        for seed in 0..20 {
            let mut rng = substream(seed, 0, 0, 0);
            let alloc = allocate_chains(&[0.75, 0.25], 4, &mut rng);
            assert_eq!(alloc, vec![(0, 3), (1, 1)]);
        }
    }

    #[test]
    fn allocation_preserves_totals_and_marker_multiset_under_permutation() {
        let w = [0.4, 0.1, 0.3, 0.2];
        let perm = [2usize, 0, 3, 1];
        let wp: Vec<f64> = perm.iter().map(|&i| w[i]).collect();
        let n_out = 40;
        // same offset for both runs
        let mut r1 = substream(5, 0, 0, 0);
        let mut r2 = substream(5, 0, 0, 0);
        let a = allocate_chains(&w, n_out, &mut r1);
        let b = allocate_chains(&wp, n_out, &mut r2);
        let total = |a: &[(usize, usize)]| a.iter().map(|&(_, l)| l).sum::<usize>();
        assert_eq!(total(&a), n_out);
        assert_eq!(total(&b), n_out);
        // compare multisets of (weight, length) pairs
        let mut ma: Vec<(u64, usize)> = a
            .iter()
            .map(|&(i, l)| (w[i].to_bits(), l))
            .collect();
        let mut mb: Vec<(u64, usize)> = b
            .iter()
            .map(|&(i, l)| (wp[i].to_bits(), l))
            .collect();
        ma.sort_unstable();
        mb.sort_unstable();
        assert_eq!(ma, mb);
    }

    #[test]
    fn weighted_cov_matches_hand_value() {
        let pts = vec![dv(&[0.0, 0.0]), dv(&[2.0, 0.0]), dv(&[0.0, 2.0])];
        let cov = weighted_cov(&pts, None);
        // mean (2/3, 2/3); var_x = (4/9+16/9+4/9)/3 = 8/9, cov = -4/9
        assert_relative_eq!(cov[(0, 0)], 8.0 / 9.0, epsilon = 1e-14);
        assert_relative_eq!(cov[(1, 1)], 8.0 / 9.0, epsilon = 1e-14);
        assert_relative_eq!(cov[(0, 1)], -4.0 / 9.0, epsilon = 1e-14);
        assert_eq!(cov[(0, 1)], cov[(1, 0)]);

        // a point mass collapses the covariance
        let w = [1.0, 0.0, 0.0];
        let cov = weighted_cov(&pts, Some(&w));
        assert_relative_eq!(cov.norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn flat_target_finishes_in_one_level() {
        let flat = |_: &DVector<f64>| 3.0;
        let init = InitSpec::uniform_box(2, -1.0, 1.0).unwrap();
        let cfg = RunConfig {
            n_per_level: 200,
            seed: 4,
            ..RunConfig::default()
        };
        let report = run_annealed(&flat, &init, &cfg).unwrap();
        assert_eq!(report.ladder.taus, vec![f64::INFINITY, 1.0]);
        assert_eq!(report.levels.len(), 1);
        assert_eq!(report.samples.len(), 200);
        report.ladder.validate().unwrap();
    }

    #[test]
    fn population_of_one_survives() {
        let gauss = |x: &DVector<f64>| 0.5 * x[0] * x[0];
        let init = InitSpec::uniform_box(1, -3.0, 3.0).unwrap();
        let cfg = RunConfig {
            n_per_level: 1,
            gamma: 0.5,
            seed: 11,
            ..RunConfig::default()
        };
        let report = run_annealed(&gauss, &init, &cfg).unwrap();
        assert_eq!(report.samples.len(), 1);
        assert!(report.h_values[0].is_finite());
        report.ladder.validate().unwrap();
    }

    #[test]
    fn ladder_cap_is_enforced() {
        let gauss = |x: &DVector<f64>| 5000.0 * x[0] * x[0];
        let init = InitSpec::uniform_box(1, -3.0, 3.0).unwrap();
        let cfg = RunConfig {
            n_per_level: 50,
            max_levels: 2,
            seed: 12,
            ..RunConfig::default()
        };
        assert!(matches!(
            run_annealed(&gauss, &init, &cfg),
            Err(Error::LadderExhausted(2))
        ));
    }

    #[test]
    fn reports_are_seed_deterministic() {
        let banana = |x: &DVector<f64>| {
            let a = x[0];
            let b = x[1] - a * a;
            0.5 * (a * a + 4.0 * b * b)
        };
        let init = InitSpec::uniform_box(2, -4.0, 4.0).unwrap();
        let cfg = RunConfig {
            n_per_level: 300,
            seed: 21,
            ..RunConfig::default()
        };
        let r1 = run_annealed(&banana, &init, &cfg).unwrap();
        let r2 = run_annealed(&banana, &init, &cfg).unwrap();
        assert_eq!(r1.ladder.taus, r2.ladder.taus);
        assert_eq!(r1.h_values, r2.h_values);
        for (a, b) in r1.samples.iter().zip(&r2.samples) {
            assert_eq!(a, b);
        }

        let cfg3 = RunConfig { seed: 22, ..cfg };
        let r3 = run_annealed(&banana, &init, &cfg3).unwrap();
        assert_ne!(r1.h_values, r3.h_values);
    }

    #[test]
    fn thinning_indices_have_expected_stride() {
        let report = RunReport {
            ladder: TemperatureLadder {
                taus: vec![f64::INFINITY, 1.0],
                gamma: 0.5,
                max_levels: 50,
            },
            levels: vec![],
            samples: (0..10).map(|i| dv(&[i as f64])).collect(),
            h_values: vec![0.0; 10],
            level_seconds: vec![],
            total_seconds: 0.0,
        };
        assert_eq!(report.thinned_indices(3), vec![0, 3, 6, 9]);
        assert_eq!(report.thinned_indices(1).len(), 10);
    }

    #[test]
    fn config_validation_rejects_nonsense() {
        let ok = RunConfig::default();
        assert!(ok.validate().is_ok());
        let bad = RunConfig {
            gamma: 1.0,
            ..RunConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = RunConfig {
            n_per_level: 0,
            ..RunConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = RunConfig {
            thin: 0,
            ..RunConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = RunConfig {
            c0: Some(0.0),
            ..RunConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
