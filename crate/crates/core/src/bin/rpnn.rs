use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rpnn::dataset::patterns_to_csv;
use rpnn::harness::experiment::run_cell;
use rpnn::harness::{
    emit_comparison, prepare_data, random_network, run_experiment, seed_wins, synthetic_sequence,
    ExperimentConfig, ExperimentReport,
};
use rpnn::metrics::{evaluate, evaluate_after_warmup};
use rpnn::trainer::gradient_check;
use rpnn::{Error, FeedbackMode, GradientMode, Result, RidgePolyNet};

#[derive(Parser)]
#[command(
    name = "rpnn",
    version,
    about = "Ridge polynomial networks with error/output feedback"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment configuration (`key = value` lines); defaults reproduce the Mackey-Glass setup.
    #[arg(long)]
    config: Option<PathBuf>,
    /// First (or only) training seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of consecutive seeds.
    #[arg(long)]
    seeds: Option<usize>,
    /// rpnn, drpnn, rpnn-ef or rpnn-eof.
    #[arg(long)]
    mode: Option<FeedbackMode>,
    /// paper or exact sensitivity recursion.
    #[arg(long)]
    gradient: Option<GradientMode>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Reject hyperparameters outside the published ranges.
    #[arg(long)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Write the series (series.csv) and lag-embedded patterns (patterns.csv).
    Generate(Common),
    /// Train one seed and write report, forecast, growth history and model.
    Train(Common),
    /// Score a saved model on the out-of-sample patterns.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Model file written by `train` or `benchmark`.
        #[arg(long)]
        model: PathBuf,
    },
    /// Compare propagated output sensitivities with full-sequence finite differences.
    Gradcheck {
        #[command(flatten)]
        common: Common,
        /// Order of the trainable (last) block; lower blocks are frozen.
        #[arg(long, default_value_t = 1)]
        order: usize,
        /// External inputs per pattern.
        #[arg(long, default_value_t = 2)]
        inputs: usize,
        #[arg(long, default_value_t = 30)]
        steps: usize,
        #[arg(long, default_value_t = 1e-6)]
        epsilon: f64,
    },
    /// Multi-seed run with an optional hyperparameter sweep.
    Benchmark {
        #[command(flatten)]
        common: Common,
        /// Extra hyperparameter candidates sampled from the published ranges.
        #[arg(long)]
        sweep: Option<usize>,
        /// Also run a feedforward RPNN under the same protocol and count seed wins.
        #[arg(long)]
        baseline: bool,
    },
    /// Rank an RMSE against the published comparison table.
    Compare {
        #[command(flatten)]
        common: Common,
        /// De-normalized RMSE to place in the table.
        #[arg(long, conflicts_with = "report")]
        rmse: Option<f64>,
        /// report.csv to take the best RMSE from.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::FAILURE
        }
    }
}

fn resolve(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.trainer.seed = seed;
    }
    if let Some(n) = common.seeds {
        cfg.n_seeds = n;
    }
    if let Some(mode) = common.mode {
        cfg.mode = mode;
    }
    if let Some(g) = common.gradient {
        cfg.trainer.gradient_mode = g;
    }
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    cfg.strict |= common.strict;
    cfg.validate()?;
    Ok(cfg)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::Io { path, source: e })
}

fn print_summary(report: &ExperimentReport) {
    for s in &report.seeds {
        let r = &s.chosen;
        println!(
            "seed {:>4}  k={}  epochs={:>4}  train_sse={:.6e}  rmse={:.6} (normalized {:.6})  {:.2?}",
            r.seed,
            r.net.block_count(),
            r.history.epochs.len(),
            r.train_sse(),
            r.eval.rmse_denormalized,
            r.eval.rmse_normalized,
            s.wall_clock
        );
    }
    println!(
        "{} over {} seed(s): best {:.6}  mean {:.6}  std {:.6}",
        report.config.mode,
        report.seeds.len(),
        report.best_rmse(),
        report.mean_rmse(),
        report.std_rmse()
    );
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Generate(common) => {
            let cfg = resolve(&common)?;
            let data = prepare_data(&cfg)?;
            write(&cfg.out_dir, "series.csv", &data.series.to_csv())?;
            let mut all = data.train.clone();
            all.extend(data.test.iter().cloned());
            write(
                &cfg.out_dir,
                "patterns.csv",
                &patterns_to_csv(&all, &cfg.lags),
            )?;
            println!(
                "{} points, {} training / {} out-of-sample patterns -> {}",
                data.series.len(),
                data.train.len(),
                data.test.len(),
                cfg.out_dir.display()
            );
        }
        Command::Train(common) => {
            let mut cfg = resolve(&common)?;
            cfg.n_seeds = 1;
            let report = run_experiment(&cfg)?;
            report.write_outputs(&cfg.out_dir)?;
            print_summary(&report);
        }
        Command::Evaluate { common, model } => {
            let cfg = resolve(&common)?;
            let text = std::fs::read_to_string(&model).map_err(|e| Error::Io {
                path: model.clone(),
                source: e,
            })?;
            let net = RidgePolyNet::from_text(&text)?;
            let data = prepare_data(&cfg)?;
            let eval = if cfg.warm_start {
                evaluate_after_warmup(&net, &data.train, &data.test, &data.norm)?
            } else {
                evaluate(&net, &data.test, &data.norm)?
            };
            write(&cfg.out_dir, "forecast.csv", &eval.forecast_csv())?;
            println!(
                "{} patterns: rmse {:.6} (normalized {:.6})",
                eval.n, eval.rmse_denormalized, eval.rmse_normalized
            );
        }
        Command::Gradcheck {
            common,
            order,
            inputs,
            steps,
            epsilon,
        } => {
            let cfg = resolve(&common)?;
            let seed = cfg.trainer.seed;
            let net = random_network(cfg.mode, inputs, order, cfg.trainer.init_range, seed)?;
            let seq = synthetic_sequence(inputs, steps, seed.wrapping_add(1));
            let report = gradient_check(&net, &seq, &cfg.trainer, epsilon)?;
            println!(
                "{} order {order}, {} trainable weights, {steps} steps, epsilon {epsilon:e}",
                cfg.mode,
                report.finite_difference.len()
            );
            for errs in [&report.paper, &report.exact] {
                println!(
                    "  {:<5}  max rel err {:.3e}  mean rel err {:.3e}",
                    errs.gradient_mode.as_str(),
                    errs.max_relative_error,
                    errs.mean_relative_error
                );
            }
            let mut csv = String::from("weight,finite_difference,paper,exact\n");
            for (i, fd) in report.finite_difference.iter().enumerate() {
                csv.push_str(&format!(
                    "{i},{fd:?},{:?},{:?}\n",
                    report.paper.propagated[i], report.exact.propagated[i]
                ));
            }
            write(&cfg.out_dir, "gradcheck.csv", &csv)?;
        }
        Command::Benchmark {
            common,
            sweep,
            baseline,
        } => {
            let mut cfg = resolve(&common)?;
            if let Some(s) = sweep {
                cfg.sweep = s;
            }
            let report = run_experiment(&cfg)?;
            report.write_outputs(&cfg.out_dir)?;
            print_summary(&report);
            if baseline {
                let base_cfg = ExperimentConfig {
                    mode: FeedbackMode::None,
                    out_dir: cfg.out_dir.join("baseline"),
                    ..cfg.clone()
                };
                let base = run_experiment(&base_cfg)?;
                base.write_outputs(&base_cfg.out_dir)?;
                print_summary(&base);
                println!(
                    "{} beats {} on {} of {} seeds",
                    cfg.mode,
                    base_cfg.mode,
                    seed_wins(&report, &base),
                    report.seeds.len()
                );
            }
            print!("{}", report.comparison_text());
        }
        Command::Compare {
            common,
            rmse,
            report,
        } => {
            let cfg = resolve(&common)?;
            let value = match (rmse, report) {
                (Some(v), _) => v,
                (None, Some(path)) => best_from_report(&path)?,
                (None, None) => {
                    let data = prepare_data(&cfg)?;
                    let trainer = cfg.trainer.clone();
                    run_cell(&data, &cfg, &trainer, 0)?.eval.rmse_denormalized
                }
            };
            let table = emit_comparison(&cfg.mode.as_str().to_uppercase(), value).render();
            write(&cfg.out_dir, "comparison.txt", &table)?;
            print!("{table}");
        }
    }
    Ok(())
}

fn best_from_report(path: &Path) -> Result<f64> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    text.lines()
        .find_map(|l| l.strip_prefix("# best_rmse_denormalized = "))
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| Error::Parse {
            path: path.display().to_string(),
            line: 0,
            message: "no '# best_rmse_denormalized' line".into(),
        })
}
