//! Experiment harness: builds one dataset per experiment, then runs the
//! sampler `repeats` times with derived seeds and scores each run's mixture
//! prediction against the single MAP predictor. The dataset is fixed across
//! repeats, so differences between repeats reflect only sampler randomness.

use std::path::PathBuf;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use ta2s2::engine::{run_ta2s2, RunConfig, RunReport};
use ta2s2::gp::{HyperParamPoint, KernelConfig, Predictor, TrainingSet};
use ta2s2::predict::{crps_mixture, map_estimate, mixture_moments, rmse, PredictiveMixture};
use ta2s2::rng::{derive_seed, substream};

use crate::bench::{franke, wing_weight, WING_BOUNDS};
use crate::data::{read_table, Dataset};
use crate::design::{lhs_design, rescale_from_unit};
use crate::error::Error;
use crate::report::{
    ladder_entries, ConfigEcho, CrpsBlock, ExperimentReport, RepeatReport, RmseBlock,
    SamplesSummary, Summary, Timings,
};

const SEED_TAG_TRAIN: u64 = 0x54;
const SEED_TAG_TEST: u64 = 0x55;
const SEED_TAG_REPEAT: u64 = 0x52;

/// What generates the data: an analytic simulator on a fresh LHS design, or
/// an external CSV file split into train/test rows.
#[derive(Debug, Clone)]
pub enum BenchModel {
    Franke,
    WingWeight,
    ExternalCsv(PathBuf),
}

impl BenchModel {
    pub fn name(&self) -> String {
        match self {
            Self::Franke => "franke".into(),
            Self::WingWeight => "wing-weight".into(),
            Self::ExternalCsv(p) => format!("external:{}", p.display()),
        }
    }

    /// Input dimension of the analytic simulators.
    fn input_dim(&self) -> Option<usize> {
        match self {
            Self::Franke => Some(2),
            Self::WingWeight => Some(10),
            Self::ExternalCsv(_) => None,
        }
    }

    /// Evaluates the simulator on one unit-cube row (analytic models only).
    pub fn eval_unit(&self, row: &DVector<f64>) -> Result<f64, Error> {
        match self {
            Self::Franke => {
                if row.len() != 2 {
                    return Err(Error::WrongArity {
                        got: row.len(),
                        expected: 2,
                    });
                }
                Ok(franke(row[0], row[1]))
            }
            Self::WingWeight => {
                let unit = DMatrix::from_row_slice(1, row.len(), row.as_slice());
                let natural = rescale_from_unit(&unit, &WING_BOUNDS)?;
                wing_weight(natural.row(0).transpose().as_slice())
            }
            Self::ExternalCsv(p) => Err(Error::BadSpec(format!(
                "{} is data, not a simulator",
                p.display()
            ))),
        }
    }

    fn natural_bounds(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            Self::Franke => Some(vec![(0.0, 1.0); 2]),
            Self::WingWeight => Some(WING_BOUNDS.to_vec()),
            Self::ExternalCsv(_) => None,
        }
    }
}

/// Full experiment description. `out_dir = None` keeps everything in memory.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub model: BenchModel,
    pub n_train: usize,
    pub n_test: usize,
    pub repeats: usize,
    pub run: RunConfig,
    pub out_dir: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), Error> {
        if self.n_train < 2 {
            return Err(Error::BadSpec(format!(
                "n_train must be at least 2, got {}",
                self.n_train
            )));
        }
        if self.n_test < 2 {
            return Err(Error::BadSpec(format!(
                "n_test must be at least 2, got {}",
                self.n_test
            )));
        }
        if self.repeats == 0 {
            return Err(Error::BadSpec("repeats must be at least 1".into()));
        }
        self.run.validate()?;
        Ok(())
    }
}

/// Builds the experiment's dataset: LHS designs evaluated through the
/// simulator for analytic models, or the external file split by rows.
pub fn build_dataset(spec: &ExperimentSpec) -> Result<Dataset, Error> {
    match &spec.model {
        BenchModel::ExternalCsv(path) => {
            let table = read_table(path)?;
            Dataset::from_table(&table, spec.n_train, spec.n_test)
        }
        model => {
            let p = model.input_dim().expect("analytic model has a dimension");
            let mut train_rng = substream(spec.run.seed, SEED_TAG_TRAIN, 0, 0);
            let mut test_rng = substream(spec.run.seed, SEED_TAG_TEST, 0, 0);
            let train_x = lhs_design(spec.n_train, p, &mut train_rng)?;
            let test_x = lhs_design(spec.n_test, p, &mut test_rng)?;
            let eval = |x: &DMatrix<f64>| -> Result<DVector<f64>, Error> {
                let ys = (0..x.nrows())
                    .map(|r| model.eval_unit(&x.row(r).transpose()))
                    .collect::<Result<Vec<f64>, Error>>()?;
                Ok(DVector::from_vec(ys))
            };
            let train_y = eval(&train_x)?;
            let test_y = eval(&test_x)?;
            Ok(Dataset {
                train: TrainingSet::new(train_x, train_y)?,
                test: TrainingSet::new(test_x, test_y)?,
                input_bounds: model
                    .natural_bounds()
                    .expect("analytic model has bounds"),
            })
        }
    }
}

/// Per-test-point predictions and scores of one completed run.
#[derive(Debug, Clone)]
pub struct ScoredPredictions {
    pub map_index: usize,
    pub mixture_mean: Vec<f64>,
    pub mixture_var: Vec<f64>,
    pub crps_mixture: Vec<f64>,
    pub map_mean: Vec<f64>,
    pub map_var: Vec<f64>,
    pub crps_map: Vec<f64>,
    pub rmse_mixture: f64,
    pub rmse_map: f64,
}

impl ScoredPredictions {
    pub fn mean_crps_mixture(&self) -> f64 {
        mean(&self.crps_mixture)
    }

    pub fn mean_crps_map(&self) -> f64 {
        mean(&self.crps_map)
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Scores a posterior sample on a test set: the full equally-weighted
/// mixture over every `thin`-th sample versus the single-Gaussian MAP
/// predictor taken from the unthinned sample.
pub fn score_predictions(
    train: &TrainingSet,
    test: &TrainingSet,
    samples: &[DVector<f64>],
    h_values: &[f64],
    thin: usize,
    kernel: &KernelConfig,
) -> Result<ScoredPredictions, Error> {
    let map_index = map_estimate(h_values)?;
    let map_hp = HyperParamPoint::from_vector(&samples[map_index])?;
    let map_pred = Predictor::new(&map_hp, train, kernel)?;

    let predictors = samples
        .iter()
        .step_by(thin.max(1))
        .map(|s| Predictor::new(&HyperParamPoint::from_vector(s)?, train, kernel))
        .collect::<Result<Vec<_>, ta2s2::Error>>()?;

    let n_test = test.n();
    let mut out = ScoredPredictions {
        map_index,
        mixture_mean: Vec::with_capacity(n_test),
        mixture_var: Vec::with_capacity(n_test),
        crps_mixture: Vec::with_capacity(n_test),
        map_mean: Vec::with_capacity(n_test),
        map_var: Vec::with_capacity(n_test),
        crps_map: Vec::with_capacity(n_test),
        rmse_mixture: 0.0,
        rmse_map: 0.0,
    };
    for q in 0..n_test {
        let xq = test.x().row(q).transpose();
        let truth = test.y()[q];

        let mut means = Vec::with_capacity(predictors.len());
        let mut vars = Vec::with_capacity(predictors.len());
        for pred in &predictors {
            let (m, v) = pred.moments(&xq)?;
            means.push(m);
            vars.push(v);
        }
        let mix = PredictiveMixture::equal_weight(means, vars)?;
        let (mm, mv) = mixture_moments(&mix);
        out.mixture_mean.push(mm);
        out.mixture_var.push(mv);
        out.crps_mixture.push(crps_mixture(&mix, truth));

        let (pm, pv) = map_pred.moments(&xq)?;
        let single = PredictiveMixture::single(pm, pv)?;
        out.map_mean.push(pm);
        out.map_var.push(pv);
        out.crps_map.push(crps_mixture(&single, truth));
    }
    let truths: Vec<f64> = test.y().iter().copied().collect();
    out.rmse_mixture = rmse(&out.mixture_mean, &truths)?;
    out.rmse_map = rmse(&out.map_mean, &truths)?;
    Ok(out)
}

/// Everything an experiment produces: the serialisable report plus the raw
/// per-repeat scores (aligned with `report.repeats`; `None` where failed).
#[derive(Debug)]
pub struct ExperimentOutput {
    pub report: ExperimentReport,
    pub scores: Vec<Option<ScoredPredictions>>,
}

fn run_one(
    ds: &Dataset,
    template: &RunConfig,
    seed: u64,
) -> Result<(RunReport, ScoredPredictions), Error> {
    let cfg = RunConfig {
        seed,
        ..template.clone()
    };
    let report = run_ta2s2(&ds.train, &cfg)?;
    let scores = score_predictions(
        &ds.train,
        &ds.test,
        &report.samples,
        &report.h_values,
        cfg.thin,
        &cfg.kernel,
    )?;
    Ok((report, scores))
}

fn summarise(repeats: &[RepeatReport]) -> Summary {
    let mean_of = |v: &[f64]| (!v.is_empty()).then(|| mean(v));
    let mean_crps_mixture: Vec<Option<f64>> =
        repeats.iter().map(|r| mean_of(&r.crps.mixture)).collect();
    let mean_crps_map: Vec<Option<f64>> = repeats.iter().map(|r| mean_of(&r.crps.map)).collect();
    let completed = repeats.iter().filter(|r| r.error.is_none()).count();
    let mixture_not_worse = mean_crps_mixture
        .iter()
        .zip(&mean_crps_map)
        .filter(|(mix, map)| matches!((mix, map), (Some(a), Some(b)) if a <= b))
        .count();
    Summary {
        completed,
        failed: repeats.len() - completed,
        mean_crps_mixture,
        mean_crps_map,
        mixture_not_worse,
    }
}

/// Runs the whole experiment. Failures of individual repeats are recorded
/// in the report and do not stop the remaining repeats; only setup problems
/// abort. Writes `report.json`, `scores.csv` and `plot.csv` when an output
/// directory is configured.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput, Error> {
    spec.validate()?;
    let ds = build_dataset(spec)?;
    let start = Instant::now();

    let mut repeats = Vec::with_capacity(spec.repeats);
    let mut scores = Vec::with_capacity(spec.repeats);
    let mut repeat_seconds = Vec::with_capacity(spec.repeats);
    for r in 0..spec.repeats {
        let seed = derive_seed(spec.run.seed, SEED_TAG_REPEAT, r as u64);
        let t0 = Instant::now();
        match run_one(&ds, &spec.run, seed) {
            Ok((report, sp)) => {
                let thinned = report.thinned_indices(spec.run.thin).len();
                let h_min = report.h_values.iter().cloned().fold(f64::INFINITY, f64::min);
                repeats.push(RepeatReport {
                    repeat: r,
                    seed,
                    ladder: ladder_entries(&report),
                    samples_summary: Some(SamplesSummary {
                        count: report.samples.len(),
                        thinned,
                        h_min,
                        h_mean: mean(&report.h_values),
                    }),
                    crps: CrpsBlock {
                        mixture: sp.crps_mixture.clone(),
                        map: sp.crps_map.clone(),
                    },
                    rmse: RmseBlock {
                        mixture: Some(sp.rmse_mixture),
                        map: Some(sp.rmse_map),
                    },
                    error: None,
                });
                scores.push(Some(sp));
            }
            Err(e) => {
                repeats.push(RepeatReport::failed(r, seed, e.to_string()));
                scores.push(None);
            }
        }
        repeat_seconds.push(t0.elapsed().as_secs_f64());
    }

    let report = ExperimentReport {
        config: ConfigEcho::new(
            spec.model.name(),
            spec.n_train,
            spec.n_test,
            spec.repeats,
            &spec.run,
        ),
        summary: summarise(&repeats),
        repeats,
        timings: Timings {
            total_seconds: start.elapsed().as_secs_f64(),
            repeat_seconds,
        },
    };
    let out = ExperimentOutput { report, scores };
    if let Some(dir) = &spec.out_dir {
        write_experiment_files(dir, &out)?;
    }
    Ok(out)
}

/// Writes `report.json`, per-point `scores.csv` and the plot-ready
/// `plot.csv` (columns `method,repeat,test_index,crps`).
pub fn write_experiment_files(dir: &std::path::Path, out: &ExperimentOutput) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    crate::report::write_json(&dir.join("report.json"), &out.report)?;

    let completed: Vec<(usize, &ScoredPredictions)> = out
        .scores
        .iter()
        .enumerate()
        .filter_map(|(r, s)| s.as_ref().map(|s| (r, s)))
        .collect();

    let plot_rows = completed.iter().flat_map(|&(r, sp)| {
        let mix = sp.crps_mixture.iter().enumerate().map(move |(i, c)| {
            vec!["mixture".to_string(), r.to_string(), i.to_string(), c.to_string()]
        });
        let map = sp.crps_map.iter().enumerate().map(move |(i, c)| {
            vec!["map".to_string(), r.to_string(), i.to_string(), c.to_string()]
        });
        mix.chain(map)
    });
    crate::report::write_rows_csv(
        &dir.join("plot.csv"),
        &["method", "repeat", "test_index", "crps"],
        plot_rows,
    )?;

    let score_rows = completed.iter().flat_map(|&(r, sp)| {
        (0..sp.crps_mixture.len()).map(move |i| {
            vec![
                r.to_string(),
                i.to_string(),
                sp.mixture_mean[i].to_string(),
                sp.mixture_var[i].to_string(),
                sp.crps_mixture[i].to_string(),
                sp.map_mean[i].to_string(),
                sp.map_var[i].to_string(),
                sp.crps_map[i].to_string(),
            ]
        })
    });
    crate::report::write_rows_csv(
        &dir.join("scores.csv"),
        &[
            "repeat",
            "test_index",
            "mixture_mean",
            "mixture_var",
            "crps_mixture",
            "map_mean",
            "map_var",
            "crps_map",
        ],
        score_rows,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn desk_spec(n_per_level: usize, repeats: usize) -> ExperimentSpec {
        ExperimentSpec {
            model: BenchModel::Franke,
            n_train: 8,
            n_test: 4,
            repeats,
            run: RunConfig {
                n_per_level,
                seed: 31,
                thin: 3,
                ..RunConfig::default()
            },
            out_dir: None,
        }
    }

    #[test]
    fn spec_validation_rejects_nonsense() {
        let mut spec = desk_spec(50, 1);
        spec.n_train = 1;
        assert!(spec.validate().is_err());
        let mut spec = desk_spec(50, 1);
        spec.n_test = 1;
        assert!(spec.validate().is_err());
        let mut spec = desk_spec(50, 0);
        spec.repeats = 0;
        assert!(spec.validate().is_err());
        let mut spec = desk_spec(50, 1);
        spec.run.gamma = 2.0;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn franke_dataset_is_deterministic_and_consistent() {
        let spec = desk_spec(50, 1);
        let a = build_dataset(&spec).unwrap();
        let b = build_dataset(&spec).unwrap();
        assert_eq!(a.train.x(), b.train.x());
        assert_eq!(a.test.y(), b.test.y());
        assert_eq!(a.train.n(), 8);
        assert_eq!(a.test.n(), 4);
        assert_eq!(a.input_bounds, vec![(0.0, 1.0); 2]);
        for r in 0..a.train.n() {
            let x = a.train.x().row(r);
            assert!(x.iter().all(|v| (0.0..1.0).contains(v)));
            assert_relative_eq!(a.train.y()[r], franke(x[0], x[1]), epsilon = 1e-15);
        }
    }

    #[test]
    fn wing_dataset_maps_back_to_natural_units() {
        let spec = ExperimentSpec {
            model: BenchModel::WingWeight,
            n_train: 6,
            n_test: 3,
            repeats: 1,
            run: RunConfig {
                seed: 5,
                ..RunConfig::default()
            },
            out_dir: None,
        };
        // n_test = 3 ≥ 2 so the dataset builds
        let ds = build_dataset(&spec).unwrap();
        assert_eq!(ds.input_bounds.to_vec(), WING_BOUNDS.to_vec());
        let unit = ds.train.x().rows(0, 1).into_owned();
        let natural = rescale_from_unit(&unit, &WING_BOUNDS).unwrap();
        let expect = wing_weight(natural.row(0).transpose().as_slice()).unwrap();
        assert_relative_eq!(ds.train.y()[0], expect, max_relative = 1e-12);
    }

    #[test]
    fn identical_samples_make_mixture_and_map_agree() {
        let x = DMatrix::from_column_slice(5, 1, &[0.0, 0.25, 0.5, 0.75, 1.0]);
        let y = DVector::from_column_slice(&[0.1, 0.4, 0.2, -0.3, 0.5]);
        let train = TrainingSet::new(x, y).unwrap();
        let test = TrainingSet::new(
            DMatrix::from_column_slice(2, 1, &[0.3, 0.9]),
            DVector::from_column_slice(&[0.25, 0.1]),
        )
        .unwrap();
        let hp = DVector::from_column_slice(&[-0.5, 0.0]);
        let samples = vec![hp.clone(), hp.clone(), hp];
        let h = vec![2.0, 1.0, 3.0];
        let sp = score_predictions(
            &train,
            &test,
            &samples,
            &h,
            1,
            &KernelConfig::default(),
        )
        .unwrap();
        assert_eq!(sp.map_index, 1);
        for i in 0..2 {
            assert_relative_eq!(sp.mixture_mean[i], sp.map_mean[i], epsilon = 1e-12);
            assert_relative_eq!(sp.crps_mixture[i], sp.crps_map[i], epsilon = 1e-12);
        }
        assert_relative_eq!(sp.rmse_mixture, sp.rmse_map, epsilon = 1e-12);
    }

    #[test]
    fn experiment_report_has_stable_schema_and_is_deterministic() {
        let spec = desk_spec(60, 2);
        let a = run_experiment(&spec).unwrap();
        let b = run_experiment(&spec).unwrap();

        assert_eq!(a.report.repeats.len(), 2);
        for rep in &a.report.repeats {
            assert!(rep.error.is_none());
            assert!(!rep.ladder.is_empty());
            assert_eq!(rep.crps.mixture.len(), 4);
            assert_eq!(rep.crps.map.len(), 4);
            assert!(rep.rmse.mixture.unwrap() >= 0.0);
            let summary = rep.samples_summary.as_ref().unwrap();
            assert_eq!(summary.count, 60);
            assert_eq!(summary.thinned, 20);
        }
        assert_eq!(a.report.summary.completed, 2);
        assert_eq!(a.report.summary.failed, 0);
        assert!(a.report.summary.mean_crps_mixture[0].unwrap() > 0.0);

        // deterministic apart from wall-clock
        let strip = |r: &ExperimentReport| {
            let mut v = serde_json::to_value(r).unwrap();
            v.as_object_mut().unwrap().remove("timings");
            v
        };
        assert_eq!(strip(&a.report), strip(&b.report));

        // different seed, different numbers
        let mut spec2 = desk_spec(60, 2);
        spec2.run.seed = 32;
        let c = run_experiment(&spec2).unwrap();
        assert_ne!(strip(&a.report), strip(&c.report));
    }

    #[test]
    fn failing_repeats_are_recorded_without_breaking_schema() {
        let mut spec = desk_spec(40, 2);
        // a prior that forbids everything: initialisation can never succeed
        spec.run.prior = ta2s2::gp::PriorSpec::Custom(std::sync::Arc::new(|_| {
            f64::NEG_INFINITY
        }));
        let out = run_experiment(&spec).unwrap();
        assert_eq!(out.report.summary.failed, 2);
        assert_eq!(out.report.summary.completed, 0);
        assert_eq!(out.report.summary.mixture_not_worse, 0);
        for rep in &out.report.repeats {
            assert!(rep.error.is_some());
            assert!(rep.ladder.is_empty());
            assert!(rep.crps.mixture.is_empty());
            assert!(rep.rmse.mixture.is_none());
            assert!(rep.samples_summary.is_none());
        }
        assert_eq!(out.scores.iter().filter(|s| s.is_some()).count(), 0);
    }

    #[test]
    fn experiment_files_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = desk_spec(50, 1);
        spec.out_dir = Some(dir.path().to_path_buf());
        let out = run_experiment(&spec).unwrap();
        let report_text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
        assert_eq!(
            report_text,
            crate::report::to_json_line(&out.report)
        );
        let plot = std::fs::read_to_string(dir.path().join("plot.csv")).unwrap();
        let mut lines = plot.lines();
        assert_eq!(lines.next().unwrap(), "method,repeat,test_index,crps");
        // 1 repeat x 2 methods x 4 test points
        assert_eq!(plot.lines().count(), 1 + 8);
        let scores = std::fs::read_to_string(dir.path().join("scores.csv")).unwrap();
        assert_eq!(scores.lines().count(), 1 + 4);
    }
}
