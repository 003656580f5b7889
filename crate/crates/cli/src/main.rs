use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use ta2s2::engine::{run_ta2s2, RunConfig};
use ta2s2::gp::{ExponentConvention, KernelConfig, PriorSpec, TrainingSet};
use ta2s2::rng::substream;

use ta2s2_cli::data::{read_samples, read_table, write_data, write_design, write_samples};
use ta2s2_cli::design::lhs_design;
use ta2s2_cli::experiment::{
    run_experiment, score_predictions, BenchModel, ExperimentSpec,
};
use ta2s2_cli::report::{
    ladder_entries, to_json_line, write_json, write_rows_csv, ConfigEcho, RunJson, RunTimings,
    SamplesSummary,
};

const SEED_TAG_DESIGN: u64 = 0x44;

/// Annealed adaptive slice sampling for Gaussian-process hyper-parameters:
/// designs, benchmark data, sampling, prediction, scoring and experiments.
#[derive(Parser)]
#[command(name = "ta2s2", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a Latin hypercube design on the unit cube.
    Design {
        /// Number of points.
        #[arg(long)]
        n: usize,
        /// Number of input dimensions.
        #[arg(long)]
        p: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV (header x1..xp).
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a benchmark simulator on a design.
    Simulate {
        /// Benchmark: franke | wing-weight.
        #[arg(long)]
        model: String,
        /// Design CSV with unit-cube inputs.
        #[arg(long)]
        design: PathBuf,
        /// Output dataset CSV (header x1..xp,y).
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample hyper-parameters of a GP fitted to a dataset.
    Sample {
        /// Dataset CSV (x1..xp,y).
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output samples CSV (log_phi1..p,z_delta,h).
        #[arg(long)]
        out: PathBuf,
        /// Optional JSON run report.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Mixture and MAP predictive moments at query points.
    Predict {
        /// Training dataset CSV.
        #[arg(long)]
        data: PathBuf,
        /// Posterior samples CSV from `sample`.
        #[arg(long)]
        samples: PathBuf,
        /// Query points CSV (x1..xp).
        #[arg(long)]
        query: PathBuf,
        /// Thinning stride over the samples.
        #[arg(long, default_value_t = 1)]
        thin: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score mixture and MAP predictions on a labelled test set.
    Score {
        /// Training dataset CSV.
        #[arg(long)]
        data: PathBuf,
        /// Posterior samples CSV from `sample`.
        #[arg(long)]
        samples: PathBuf,
        /// Test dataset CSV (x1..xp,y).
        #[arg(long)]
        test: PathBuf,
        /// Thinning stride over the samples.
        #[arg(long, default_value_t = 1)]
        thin: usize,
        /// Per-point scores CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Full repeated experiment: data, sampling, scoring, reports.
    Experiment {
        /// franke | wing-weight | path to an external dataset CSV.
        #[arg(long)]
        model: String,
        #[arg(long)]
        n_train: usize,
        #[arg(long)]
        n_test: usize,
        #[arg(long, default_value_t = 1)]
        repeats: usize,
        /// Base seed (mandatory: experiments must be reproducible).
        #[arg(long)]
        seed: u64,
        /// Output directory for report.json, scores.csv and plot.csv.
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
}

/// Sampler knobs shared by `sample` and `experiment`. Every flag can also
/// be given in a `--config` file as `key=value` lines with the same
/// kebab-case keys; explicit flags win over the file, and the TA2S2_WORKERS
/// environment variable overrides the worker count over everything.
#[derive(Args, Debug, Default)]
struct RunArgs {
    /// Flat key=value config file with the same keys as these flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n_per_level: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    p_renew: Option<f64>,
    #[arg(long)]
    c0: Option<f64>,
    #[arg(long)]
    max_crumbs: Option<usize>,
    #[arg(long)]
    max_levels: Option<usize>,
    /// Worker threads (0 = use the ambient thread pool).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    /// Prior: uniform | uniform:LO:HI | exponential:MEAN.
    #[arg(long)]
    prior: Option<String>,
    /// Marginalisation exponent: n-minus-p | n-minus-one.
    #[arg(long)]
    exponent: Option<String>,
    /// Lower edge of the initial log length-scale box.
    #[arg(long)]
    init_lo: Option<f64>,
    /// Upper edge of the initial log length-scale box.
    #[arg(long)]
    init_hi: Option<f64>,
}

impl RunArgs {
    /// defaults -> config file -> flags -> TA2S2_WORKERS.
    fn build(&self, seed: u64) -> Result<RunConfig> {
        let mut merged = RunArgs::default();
        if let Some(path) = &self.config {
            apply_config_file(&mut merged, path)?;
        }
        merge_flags(&mut merged, self);

        let mut cfg = RunConfig {
            seed,
            ..RunConfig::default()
        };
        if let Some(v) = merged.n_per_level {
            cfg.n_per_level = v;
        }
        if let Some(v) = merged.gamma {
            cfg.gamma = v;
        }
        if let Some(v) = merged.p_renew {
            cfg.p_renew = v;
        }
        if merged.c0.is_some() {
            cfg.c0 = merged.c0;
        }
        if let Some(v) = merged.max_crumbs {
            cfg.max_crumbs = v;
        }
        if let Some(v) = merged.max_levels {
            cfg.max_levels = v;
        }
        if let Some(v) = merged.workers {
            cfg.workers = v;
        }
        if let Some(v) = merged.thin {
            cfg.thin = v;
        }
        if let Some(s) = &merged.prior {
            cfg.prior = parse_prior(s)?;
        }
        if let Some(s) = &merged.exponent {
            cfg.kernel = KernelConfig {
                exponent: parse_exponent(s)?,
                ..cfg.kernel
            };
        }
        if let Some(v) = merged.init_lo {
            cfg.init_bounds.0 = v;
        }
        if let Some(v) = merged.init_hi {
            cfg.init_bounds.1 = v;
        }
        if let Ok(w) = std::env::var("TA2S2_WORKERS") {
            cfg.workers = w
                .parse()
                .with_context(|| format!("TA2S2_WORKERS='{w}' is not a worker count"))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn merge_flags(base: &mut RunArgs, flags: &RunArgs) {
    macro_rules! take {
        ($field:ident) => {
            if flags.$field.is_some() {
                base.$field = flags.$field.clone();
            }
        };
    }
    take!(n_per_level);
    take!(gamma);
    take!(p_renew);
    take!(c0);
    take!(max_crumbs);
    take!(max_levels);
    take!(workers);
    take!(thin);
    take!(prior);
    take!(exponent);
    take!(init_lo);
    take!(init_hi);
}

fn apply_config_file(args: &mut RunArgs, path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .with_context(|| format!("{}:{}: expected key=value", path.display(), lineno + 1))?;
        let (key, value) = (key.trim(), value.trim());
        let bad = |what: &str| {
            anyhow::anyhow!("{}:{}: {what} '{value}' for {key}", path.display(), lineno + 1)
        };
        match key {
            "n-per-level" => args.n_per_level = Some(value.parse().map_err(|_| bad("bad count"))?),
            "gamma" => args.gamma = Some(value.parse().map_err(|_| bad("bad number"))?),
            "p-renew" => args.p_renew = Some(value.parse().map_err(|_| bad("bad number"))?),
            "c0" => args.c0 = Some(value.parse().map_err(|_| bad("bad number"))?),
            "max-crumbs" => args.max_crumbs = Some(value.parse().map_err(|_| bad("bad count"))?),
            "max-levels" => args.max_levels = Some(value.parse().map_err(|_| bad("bad count"))?),
            "workers" => args.workers = Some(value.parse().map_err(|_| bad("bad count"))?),
            "thin" => args.thin = Some(value.parse().map_err(|_| bad("bad count"))?),
            "prior" => args.prior = Some(value.to_string()),
            "exponent" => args.exponent = Some(value.to_string()),
            "init-lo" => args.init_lo = Some(value.parse().map_err(|_| bad("bad number"))?),
            "init-hi" => args.init_hi = Some(value.parse().map_err(|_| bad("bad number"))?),
            other => bail!(
                "{}:{}: unknown config key '{other}'",
                path.display(),
                lineno + 1
            ),
        }
    }
    Ok(())
}

fn parse_prior(s: &str) -> Result<PriorSpec> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        ["uniform"] => Ok(PriorSpec::default_uniform()),
        ["uniform", lo, hi] => Ok(PriorSpec::UniformLogSpace {
            lo: lo.parse().context("bad uniform prior lower bound")?,
            hi: hi.parse().context("bad uniform prior upper bound")?,
        }),
        ["exponential", mean] | ["exp", mean] => Ok(PriorSpec::Exponential {
            mean: mean.parse().context("bad exponential prior mean")?,
        }),
        _ => bail!("unknown prior '{s}' (use uniform | uniform:LO:HI | exponential:MEAN)"),
    }
}

fn parse_exponent(s: &str) -> Result<ExponentConvention> {
    match s {
        "n-minus-p" => Ok(ExponentConvention::NMinusP),
        "n-minus-one" => Ok(ExponentConvention::NMinusOne),
        _ => bail!("unknown exponent '{s}' (use n-minus-p | n-minus-one)"),
    }
}

fn parse_model(s: &str) -> BenchModel {
    match s {
        "franke" => BenchModel::Franke,
        "wing-weight" => BenchModel::WingWeight,
        path => BenchModel::ExternalCsv(PathBuf::from(path)),
    }
}

fn load_training_set(path: &Path) -> Result<TrainingSet> {
    let t = read_table(path)?;
    let y = t
        .y
        .ok_or_else(|| anyhow::anyhow!("{}: dataset needs a y column", path.display()))?;
    Ok(TrainingSet::new(t.x, y)?)
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Design { n, p, seed, out } => {
            let mut rng = substream(seed, SEED_TAG_DESIGN, 0, 0);
            let x = lhs_design(n, p, &mut rng)?;
            write_design(&out, &x)?;
            println!("wrote {} x {} design to {}", n, p, out.display());
        }
        Command::Simulate { model, design, out } => {
            let model = parse_model(&model);
            if matches!(model, BenchModel::ExternalCsv(_)) {
                bail!("simulate needs an analytic model: franke | wing-weight");
            }
            let t = read_table(&design)?;
            let ys = (0..t.x.nrows())
                .map(|r| model.eval_unit(&t.x.row(r).transpose()))
                .collect::<Result<Vec<f64>, ta2s2_cli::Error>>()?;
            let y = DVector::from_vec(ys);
            write_data(&out, &t.x, &y, None)?;
            println!(
                "evaluated {} on {} points -> {}",
                model.name(),
                t.x.nrows(),
                out.display()
            );
        }
        Command::Sample {
            data,
            seed,
            out,
            report,
            run,
        } => {
            let ts = load_training_set(&data)?;
            let cfg = run.build(seed)?;
            let rr = run_ta2s2(&ts, &cfg)?;
            write_samples(&out, &rr.samples, &rr.h_values)?;
            if let Some(path) = report {
                let thinned = rr.thinned_indices(cfg.thin).len();
                let h_min = rr.h_values.iter().cloned().fold(f64::INFINITY, f64::min);
                let h_mean = rr.h_values.iter().sum::<f64>() / rr.h_values.len() as f64;
                let json = RunJson {
                    config: ConfigEcho::new("data".into(), ts.n(), 0, 1, &cfg),
                    ladder: ladder_entries(&rr),
                    samples_summary: SamplesSummary {
                        count: rr.samples.len(),
                        thinned,
                        h_min,
                        h_mean,
                    },
                    timings: RunTimings {
                        total_seconds: rr.total_seconds,
                        level_seconds: rr.level_seconds.clone(),
                    },
                };
                write_json(&path, &json)?;
            }
            println!(
                "{} samples in {} levels -> {}",
                rr.samples.len(),
                rr.levels.len(),
                out.display()
            );
        }
        Command::Predict {
            data,
            samples,
            query,
            thin,
            out,
        } => {
            let ts = load_training_set(&data)?;
            let (sample_vecs, _h) = read_samples(&samples)?;
            let q = read_table(&query)?;
            let kernel = KernelConfig::default();
            let predictors = sample_vecs
                .iter()
                .step_by(thin.max(1))
                .map(|s| {
                    let hp = ta2s2::gp::HyperParamPoint::from_vector(s)?;
                    ta2s2::gp::Predictor::new(&hp, &ts, &kernel)
                })
                .collect::<Result<Vec<_>, ta2s2::Error>>()?;
            let rows = (0..q.x.nrows())
                .map(|r| {
                    let xq = q.x.row(r).transpose();
                    let mut means = Vec::with_capacity(predictors.len());
                    let mut vars = Vec::with_capacity(predictors.len());
                    for p in &predictors {
                        let (m, v) = p.moments(&xq)?;
                        means.push(m);
                        vars.push(v);
                    }
                    let mix = ta2s2::predict::PredictiveMixture::equal_weight(means, vars)?;
                    let (mm, mv) = ta2s2::predict::mixture_moments(&mix);
                    Ok(vec![
                        r.to_string(),
                        mm.to_string(),
                        mv.to_string(),
                    ])
                })
                .collect::<Result<Vec<_>>>()?;
            write_rows_csv(
                &out,
                &["query_index", "mixture_mean", "mixture_var"],
                rows.into_iter(),
            )?;
            println!(
                "predicted {} query points from {} mixture components -> {}",
                q.x.nrows(),
                predictors.len(),
                out.display()
            );
        }
        Command::Score {
            data,
            samples,
            test,
            thin,
            out,
        } => {
            let train = load_training_set(&data)?;
            let test_set = load_training_set(&test)?;
            let (sample_vecs, h) = read_samples(&samples)?;
            let sp = score_predictions(
                &train,
                &test_set,
                &sample_vecs,
                &h,
                thin,
                &KernelConfig::default(),
            )?;
            let rows = (0..sp.crps_mixture.len()).map(|i| {
                vec![
                    i.to_string(),
                    test_set.y()[i].to_string(),
                    sp.mixture_mean[i].to_string(),
                    sp.mixture_var[i].to_string(),
                    sp.crps_mixture[i].to_string(),
                    sp.map_mean[i].to_string(),
                    sp.map_var[i].to_string(),
                    sp.crps_map[i].to_string(),
                ]
            });
            write_rows_csv(
                &out,
                &[
                    "test_index",
                    "y",
                    "mixture_mean",
                    "mixture_var",
                    "crps_mixture",
                    "map_mean",
                    "map_var",
                    "crps_map",
                ],
                rows,
            )?;
            let summary = serde_json::json!({
                "rmse": { "mixture": sp.rmse_mixture, "map": sp.rmse_map },
                "mean_crps": {
                    "mixture": sp.mean_crps_mixture(),
                    "map": sp.mean_crps_map(),
                },
            });
            print!("{}", to_json_line(&summary));
        }
        Command::Experiment {
            model,
            n_train,
            n_test,
            repeats,
            seed,
            out_dir,
            run,
        } => {
            let spec = ExperimentSpec {
                model: parse_model(&model),
                n_train,
                n_test,
                repeats,
                run: run.build(seed)?,
                out_dir: Some(out_dir.clone()),
            };
            let out = run_experiment(&spec)?;
            let s = &out.report.summary;
            println!(
                "{}/{} repeats completed; mixture not worse than MAP in {} -> {}",
                s.completed,
                spec.repeats,
                s.mixture_not_worse,
                out_dir.display()
            );
        }
    }
    Ok(())
}
