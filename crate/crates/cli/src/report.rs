//! Report serialisation.
//!
//! Everything outside the `timings` subtree is a pure function of the
//! configuration and seed, so two runs of the same experiment produce
//! byte-identical JSON once `timings` is dropped — regardless of worker
//! count. Field order is fixed by declaration order.

use std::path::Path;

use serde::Serialize;
use ta2s2::engine::{LevelReport, RunConfig, RunReport};
use ta2s2::gp::ExponentConvention;

use crate::error::Error;

/// Canonical flag-style spelling of an exponent convention.
pub fn exponent_name(e: ExponentConvention) -> &'static str {
    match e {
        ExponentConvention::NMinusP => "n-minus-p",
        ExponentConvention::NMinusOne => "n-minus-one",
    }
}

/// Configuration echo. Deliberately excludes `workers` (an execution detail
/// that must not change results) and any paths.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub model: String,
    pub n_train: usize,
    pub n_test: usize,
    pub repeats: usize,
    pub seed: u64,
    pub n_per_level: usize,
    pub gamma: f64,
    pub p_renew: f64,
    pub c0: Option<f64>,
    pub max_crumbs: usize,
    pub max_levels: usize,
    pub thin: usize,
    pub prior: String,
    pub exponent: String,
    pub init_bounds: (f64, f64),
}

impl ConfigEcho {
    pub fn new(
        model: String,
        n_train: usize,
        n_test: usize,
        repeats: usize,
        run: &RunConfig,
    ) -> Self {
        Self {
            model,
            n_train,
            n_test,
            repeats,
            seed: run.seed,
            n_per_level: run.n_per_level,
            gamma: run.gamma,
            p_renew: run.p_renew,
            c0: run.c0,
            max_crumbs: run.max_crumbs,
            max_levels: run.max_levels,
            thin: run.thin,
            prior: run.prior.describe(),
            exponent: exponent_name(run.kernel.exponent).to_string(),
            init_bounds: run.init_bounds,
        }
    }
}

/// One annealing level as reported (no `+∞` sentinel, so every value is
/// finite and JSON-safe).
#[derive(Debug, Clone, Serialize)]
pub struct LadderEntry {
    pub tau: f64,
    pub ess: f64,
    pub stalls: usize,
    pub mean_crumbs: f64,
}

impl From<&LevelReport> for LadderEntry {
    fn from(l: &LevelReport) -> Self {
        Self {
            tau: l.tau,
            ess: l.ess,
            stalls: l.stalls,
            mean_crumbs: l.mean_crumbs,
        }
    }
}

pub fn ladder_entries(report: &RunReport) -> Vec<LadderEntry> {
    report.levels.iter().map(LadderEntry::from).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SamplesSummary {
    pub count: usize,
    pub thinned: usize,
    pub h_min: f64,
    pub h_mean: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrpsBlock {
    pub mixture: Vec<f64>,
    pub map: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RmseBlock {
    pub mixture: Option<f64>,
    pub map: Option<f64>,
}

/// One repeat. All keys are present even when the repeat failed; the
/// failure reason lives in `error` and the data blocks stay empty.
#[derive(Debug, Clone, Serialize)]
pub struct RepeatReport {
    pub repeat: usize,
    pub seed: u64,
    pub ladder: Vec<LadderEntry>,
    pub samples_summary: Option<SamplesSummary>,
    pub crps: CrpsBlock,
    pub rmse: RmseBlock,
    pub error: Option<String>,
}

impl RepeatReport {
    pub fn failed(repeat: usize, seed: u64, error: String) -> Self {
        Self {
            repeat,
            seed,
            ladder: Vec::new(),
            samples_summary: None,
            crps: CrpsBlock {
                mixture: Vec::new(),
                map: Vec::new(),
            },
            rmse: RmseBlock {
                mixture: None,
                map: None,
            },
            error: Some(error),
        }
    }
}

/// Across-repeat roll-up: per-repeat mean CRPS for both predictors
/// (aligned by repeat index, `null` where a repeat failed) and the number
/// of completed repeats where the mixture was not worse than MAP.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub completed: usize,
    pub failed: usize,
    pub mean_crps_mixture: Vec<Option<f64>>,
    pub mean_crps_map: Vec<Option<f64>>,
    pub mixture_not_worse: usize,
}

/// Wall-clock data, quarantined under one key so that deterministic
/// comparisons may simply drop it.
#[derive(Debug, Clone, Serialize)]
pub struct Timings {
    pub total_seconds: f64,
    pub repeat_seconds: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub config: ConfigEcho,
    pub repeats: Vec<RepeatReport>,
    pub summary: Summary,
    pub timings: Timings,
}

/// Report of a bare sampling run (the `sample` subcommand).
#[derive(Debug, Clone, Serialize)]
pub struct RunJson {
    pub config: ConfigEcho,
    pub ladder: Vec<LadderEntry>,
    pub samples_summary: SamplesSummary,
    pub timings: RunTimings,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunTimings {
    pub total_seconds: f64,
    pub level_seconds: Vec<f64>,
}

pub fn to_json_line<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serialisation cannot fail");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    std::fs::write(path, to_json_line(value)).map_err(|e| Error::io(path, e))
}

/// Writes a CSV with string header and numeric rows prefixed by arbitrary
/// leading label cells.
pub fn write_rows_csv(
    path: &Path,
    header: &[&str],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<(), Error> {
    let layout = |what: String| Error::CsvLayout {
        path: path.to_path_buf(),
        what,
    };
    let mut w = csv::Writer::from_path(path).map_err(|e| layout(e.to_string()))?;
    w.write_record(header).map_err(|e| layout(e.to_string()))?;
    for row in rows {
        w.write_record(&row).map_err(|e| layout(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
