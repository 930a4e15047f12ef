//! Seeded experiment orchestration and report output.

use std::fmt::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::compare::emit_comparison;
use super::config::{bounds, ExperimentConfig};
use crate::dataset::{
    build_patterns, generate_mackey_glass, split_patterns, NormParams, Pattern, Series,
};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, evaluate_after_warmup, EvalResult};
use crate::network::RidgePolyNet;
use crate::trainer::{constructive_fit, GrowthHistory, TrainerConfig};

/// Series, scaling and pattern sets shared by every run of an experiment.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub series: Series,
    pub norm: NormParams,
    pub train: Vec<Pattern>,
    pub test: Vec<Pattern>,
}

pub fn prepare_data(cfg: &ExperimentConfig) -> Result<PreparedData> {
    let series = match &cfg.series_path {
        Some(path) => Series::load_csv(path)?,
        None => generate_mackey_glass(&cfg.mg)?,
    };
    let norm = NormParams::fit(&series.values, cfg.norm_min, cfg.norm_max)?;
    let scaled = norm.normalize(&series.values);
    let patterns = build_patterns(&scaled, &cfg.lags, cfg.horizon)?;
    let (train, test) = split_patterns(&patterns, cfg.split);
    if train.is_empty() || test.is_empty() {
        return Err(Error::InvalidInput(format!(
            "split {:?} leaves {} training and {} out-of-sample patterns; both must be non-empty",
            cfg.split,
            train.len(),
            test.len()
        )));
    }
    Ok(PreparedData {
        series,
        norm,
        train,
        test,
    })
}

/// Hyperparameter candidates: the configured trainer first, then `cfg.sweep`
/// draws from the published ranges. Learning rate is uniform; momentum is off
/// for about one draw in four and otherwise uniform; the growth threshold is log-uniform (its range spans four decades) and the
/// threshold decay is one of the two published factors.
pub fn sweep_candidates(cfg: &ExperimentConfig) -> Vec<TrainerConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.sweep_seed);
    let mut out = vec![cfg.trainer.clone()];
    let (r_lo, r_hi) = (bounds::R_THRESHOLD.0.ln(), bounds::R_THRESHOLD.1.ln());
    for _ in 0..cfg.sweep {
        let eta = rng.random_range(bounds::ETA.0..=bounds::ETA.1);
        let momentum = if rng.random_bool(0.25) {
            0.0
        } else {
            rng.random_range(bounds::MOMENTUM.0..=bounds::MOMENTUM.1)
        };
        let r_threshold = rng.random_range(r_lo..=r_hi).exp();
        let r_decay = bounds::R_DECAY[rng.random_range(0..bounds::R_DECAY.len())];
        out.push(TrainerConfig {
            eta,
            momentum,
            r_threshold,
            r_decay,
            ..cfg.trainer.clone()
        });
    }
    out
}

/// One trained and evaluated network.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub seed: u64,
    pub candidate: usize,
    pub trainer: TrainerConfig,
    pub net: RidgePolyNet,
    pub history: GrowthHistory,
    pub eval: EvalResult,
    pub wall_clock: Duration,
}

impl RunResult {
    pub fn train_sse(&self) -> f64 {
        self.history.best_epoch().map_or(f64::INFINITY, |e| e.sse)
    }

    pub fn best_epoch(&self) -> usize {
        self.history.best_epoch().map_or(0, |e| e.epoch)
    }
}

/// Trains with `trainer` on the training patterns and scores the out-of-sample ones.
pub fn run_cell(
    data: &PreparedData,
    cfg: &ExperimentConfig,
    trainer: &TrainerConfig,
    candidate: usize,
) -> Result<RunResult> {
    let start = Instant::now();
    let fit = constructive_fit(&data.train, trainer, cfg.mode)?;
    let eval = if cfg.warm_start {
        evaluate_after_warmup(&fit.net, &data.train, &data.test, &data.norm)?
    } else {
        evaluate(&fit.net, &data.test, &data.norm)?
    };
    Ok(RunResult {
        seed: trainer.seed,
        candidate,
        trainer: trainer.clone(),
        net: fit.net,
        history: fit.history,
        eval,
        wall_clock: start.elapsed(),
    })
}

/// Per-seed outcome: the candidate with the lowest training SSE, plus how many
/// candidates diverged.
#[derive(Debug, Clone)]
pub struct SeedOutcome {
    pub chosen: RunResult,
    pub diverged_candidates: usize,
    pub wall_clock: Duration,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub norm: NormParams,
    pub series: Series,
    pub candidates: Vec<TrainerConfig>,
    pub seeds: Vec<SeedOutcome>,
}

impl ExperimentReport {
    fn rmses(&self) -> impl Iterator<Item = f64> + '_ {
        self.seeds.iter().map(|s| s.chosen.eval.rmse_denormalized)
    }

    /// Index into `seeds` of the lowest de-normalized out-of-sample RMSE.
    pub fn best_index(&self) -> usize {
        self.seeds
            .iter()
            .enumerate()
            .min_by(|a, b| {
                a.1.chosen
                    .eval
                    .rmse_denormalized
                    .total_cmp(&b.1.chosen.eval.rmse_denormalized)
            })
            .map_or(0, |(i, _)| i)
    }

    pub fn best(&self) -> &SeedOutcome {
        &self.seeds[self.best_index()]
    }

    pub fn best_rmse(&self) -> f64 {
        self.rmses().fold(f64::INFINITY, f64::min)
    }

    pub fn mean_rmse(&self) -> f64 {
        self.rmses().sum::<f64>() / self.seeds.len() as f64
    }

    /// Sample standard deviation; zero for a single seed.
    pub fn std_rmse(&self) -> f64 {
        let n = self.seeds.len();
        if n < 2 {
            return 0.0;
        }
        let mean = self.mean_rmse();
        let ss: f64 = self.rmses().map(|r| (r - mean) * (r - mean)).sum();
        (ss / (n - 1) as f64).sqrt()
    }

    /// Per-seed rows preceded by the resolved configuration and data provenance
    /// as `#` comments, followed by the aggregates. Contains no timings, so a
    /// re-run with the same configuration reproduces it byte for byte.
    pub fn report_csv(&self) -> String {
        let mut out = String::from("# rpnn experiment report\n");
        for line in self.config.to_text().lines() {
            let _ = writeln!(out, "# {line}");
        }
        let source = match &self.config.series_path {
            Some(p) => format!("file {}", p.display()),
            None => "generated (RK4, Hermite-interpolated delay)".to_string(),
        };
        let _ = writeln!(out, "# series_source = {source}");
        let _ = writeln!(out, "# series_points = {}", self.series.len());
        let _ = writeln!(
            out,
            "# norm = [{:?}, {:?}] -> [{:?}, {:?}]",
            self.norm.min1, self.norm.max1, self.norm.min2, self.norm.max2
        );
        let _ = writeln!(
            out,
            "# evaluation = fixed weights; e(t-1) fed back from recorded targets; {}",
            if self.config.warm_start {
                "feedback warmed up over the training patterns"
            } else {
                "feedback starts at 0.5/0.5"
            }
        );
        let _ = writeln!(out, "# candidates = {}", self.candidates.len());
        out.push_str(
            "seed,candidate,mode,gradient,eta,momentum,r_threshold,r_decay,final_k,additions,\
             epochs_run,best_epoch,train_sse,rmse_normalized,rmse_denormalized,diverged_candidates\n",
        );
        for s in &self.seeds {
            let r = &s.chosen;
            let t = &r.trainer;
            let _ = writeln!(
                out,
                "{},{},{},{},{:?},{:?},{:?},{:?},{},{},{},{},{:?},{:?},{:?},{}",
                r.seed,
                r.candidate,
                self.config.mode,
                t.gradient_mode,
                t.eta,
                t.momentum,
                t.r_threshold,
                t.r_decay,
                r.net.block_count(),
                r.history.additions.len(),
                r.history.epochs.len(),
                r.best_epoch(),
                r.train_sse(),
                r.eval.rmse_normalized,
                r.eval.rmse_denormalized,
                s.diverged_candidates
            );
        }
        let _ = writeln!(out, "# best_seed = {}", self.best().chosen.seed);
        let _ = writeln!(out, "# best_rmse_denormalized = {:?}", self.best_rmse());
        let _ = writeln!(out, "# mean_rmse_denormalized = {:?}", self.mean_rmse());
        let _ = writeln!(out, "# std_rmse_denormalized = {:?}", self.std_rmse());
        out
    }

    pub fn comparison_text(&self) -> String {
        let label = format!(
            "{} ({} seeds, best)",
            self.config.mode.as_str().to_uppercase(),
            self.seeds.len()
        );
        emit_comparison(&label, self.best_rmse()).render()
    }

    /// Writes `report.csv`, `forecast.csv`, `growth.csv`, `series.csv`,
    /// `comparison.txt`, `model.txt` and `config.txt` into `dir`; forecast,
    /// growth and model files describe the best seed.
    pub fn write_outputs(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let best = &self.best().chosen;
        let files = [
            ("report.csv", self.report_csv()),
            ("forecast.csv", best.eval.forecast_csv()),
            ("growth.csv", best.history.to_csv()),
            ("series.csv", self.series.to_csv()),
            ("comparison.txt", self.comparison_text()),
            ("model.txt", best.net.to_text()),
            ("config.txt", self.config.to_text()),
        ];
        for (name, contents) in files {
            let path = dir.join(name);
            std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

/// Runs every (seed, candidate) cell in parallel, keeps the lowest-training-SSE
/// candidate per seed, and assembles the report in seed order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let data = prepare_data(cfg)?;
    let candidates = sweep_candidates(cfg);
    let seeds: Vec<u64> = (0..cfg.n_seeds as u64)
        .map(|i| cfg.trainer.seed + i)
        .collect();
    let cells: Vec<(u64, usize)> = seeds
        .iter()
        .flat_map(|&s| (0..candidates.len()).map(move |c| (s, c)))
        .collect();
    let results: Vec<(u64, Result<RunResult>)> = cells
        .par_iter()
        .map(|&(seed, c)| {
            let trainer = TrainerConfig {
                seed,
                ..candidates[c].clone()
            };
            (seed, run_cell(&data, cfg, &trainer, c))
        })
        .collect();

    let mut outcomes = Vec::with_capacity(seeds.len());
    for (seed, group) in seeds.iter().zip(results.chunks(candidates.len())) {
        let mut chosen: Option<RunResult> = None;
        let mut diverged = 0;
        let mut first_error = None;
        let mut wall_clock = Duration::ZERO;
        for (_, result) in group {
            match result {
                Ok(run) => {
                    wall_clock += run.wall_clock;
                    if chosen
                        .as_ref()
                        .is_none_or(|c| run.train_sse() < c.train_sse())
                    {
                        chosen = Some(run.clone());
                    }
                }
                Err(e) => {
                    diverged += 1;
                    if first_error.is_none() {
                        first_error = Some(e.to_string());
                    }
                }
            }
        }
        let chosen = chosen.ok_or_else(|| Error::Seed {
            seed: *seed,
            source: Box::new(Error::NumericDivergence {
                step: 0,
                reason: format!(
                    "all {} candidates failed; first: {}",
                    group.len(),
                    first_error.unwrap_or_default()
                ),
            }),
        })?;
        outcomes.push(SeedOutcome {
            chosen,
            diverged_candidates: diverged,
            wall_clock,
        });
    }
    Ok(ExperimentReport {
        config: cfg.clone(),
        norm: data.norm,
        series: data.series,
        candidates,
        seeds: outcomes,
    })
}

/// Seeds on which `a` reaches a lower de-normalized RMSE than `b`.
pub fn seed_wins(a: &ExperimentReport, b: &ExperimentReport) -> usize {
    a.seeds
        .iter()
        .zip(&b.seeds)
        .filter(|(x, y)| x.chosen.eval.rmse_denormalized < y.chosen.eval.rmse_denormalized)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::FeedbackMode;

    fn small_config() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.mg.n_points = 300;
        cfg.split = crate::dataset::SplitRule::ByPoints(150);
        cfg.trainer.max_epochs = 40;
        cfg.n_seeds = 2;
        cfg
    }

    #[test]
    fn sweep_candidates_respect_ranges() {
        let cfg = ExperimentConfig {
            sweep: 50,
            ..ExperimentConfig::default()
        };
        let c = sweep_candidates(&cfg);
        assert_eq!(c.len(), 51);
        assert_eq!(c[0], cfg.trainer);
        for t in &c[1..] {
            assert!(
                super::super::config::check_published_ranges(t).is_ok(),
                "{t:?}"
            );
        }
        assert!(c[1..].iter().any(|t| t.momentum == 0.0));
        assert!(c[1..].iter().any(|t| t.momentum >= 0.4));
        assert_eq!(c, sweep_candidates(&cfg));
    }

    #[test]
    fn small_experiment_is_reproducible() {
        let cfg = small_config();
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.report_csv(), b.report_csv());
        assert_eq!(a.seeds.len(), 2);
        assert!(a.best_rmse() <= a.mean_rmse());
        assert_eq!(a.best_rmse(), a.best().chosen.eval.rmse_denormalized);
    }

    #[test]
    fn modes_differ_only_in_mode_fields() {
        let cfg = small_config();
        let eof = run_experiment(&cfg).unwrap();
        let plain = run_experiment(&ExperimentConfig {
            mode: FeedbackMode::None,
            ..cfg.clone()
        })
        .unwrap();
        assert!(eof.report_csv().contains("# mode = rpnn-eof"));
        assert!(plain.report_csv().contains("# mode = rpnn\n"));
        assert_eq!(eof.norm, plain.norm);
        assert_eq!(eof.series, plain.series);
        let seeds =
            |r: &ExperimentReport| r.seeds.iter().map(|s| s.chosen.seed).collect::<Vec<_>>();
        assert_eq!(seeds(&eof), seeds(&plain));
    }

    #[test]
    fn empty_split_is_rejected() {
        let mut cfg = small_config();
        cfg.split = crate::dataset::SplitRule::ByPoints(5000);
        assert!(matches!(prepare_data(&cfg), Err(Error::InvalidInput(_))));
    }
}
