//! Line-oriented `key = value` experiment configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::dataset::{MgParams, SplitRule, DEFAULT_HORIZON, DEFAULT_LAGS};
use crate::error::{Error, Result};
use crate::network::{FeedbackMode, InitRange};
use crate::trainer::TrainerConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mg: MgParams,
    /// Load the series from a `t,x` CSV instead of generating it.
    pub series_path: Option<PathBuf>,
    pub lags: Vec<usize>,
    pub horizon: usize,
    pub split: SplitRule,
    pub norm_min: f64,
    pub norm_max: f64,
    pub mode: FeedbackMode,
    /// `trainer.seed` is the first seed; a benchmark uses `seed..seed + n_seeds`.
    pub trainer: TrainerConfig,
    pub n_seeds: usize,
    /// Extra hyperparameter candidates sampled per run, in addition to `trainer`.
    pub sweep: usize,
    pub sweep_seed: u64,
    /// Roll the trained network over the training patterns before scoring the
    /// out-of-sample ones, so its feedback inputs start from real history.
    pub warm_start: bool,
    pub out_dir: PathBuf,
    /// Enforce the published hyperparameter ranges.
    pub strict: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mg: MgParams::default(),
            series_path: None,
            lags: DEFAULT_LAGS.to_vec(),
            horizon: DEFAULT_HORIZON,
            split: SplitRule::default(),
            norm_min: 0.2,
            norm_max: 0.8,
            mode: FeedbackMode::ErrorOutput,
            trainer: TrainerConfig::default(),
            n_seeds: 10,
            sweep: 0,
            sweep_seed: 2016,
            warm_start: true,
            out_dir: PathBuf::from("out"),
            strict: false,
        }
    }
}

/// Published hyperparameter bounds checked in strict mode.
pub mod bounds {
    pub const ETA: (f64, f64) = (0.01, 1.0);
    pub const MOMENTUM: (f64, f64) = (0.4, 0.8);
    pub const R_THRESHOLD: (f64, f64) = (0.00001, 0.1);
    pub const R_DECAY: [f64; 2] = [0.05, 0.2];
    pub const ETA_DECAY: f64 = 0.8;
    pub const MAX_EPOCHS: usize = 3000;
    pub const MAX_BLOCKS: usize = 5;
    pub const INIT: (f64, f64) = (-0.5, 0.5);
}

const KEYS: &[&str] = &[
    "alpha",
    "beta",
    "tau",
    "x0",
    "dt",
    "sample_every",
    "n_points",
    "transient_skip",
    "series_path",
    "lags",
    "horizon",
    "split",
    "split_at",
    "norm_min",
    "norm_max",
    "mode",
    "gradient",
    "eta",
    "momentum",
    "r_threshold",
    "eta_decay",
    "r_decay",
    "max_epochs",
    "max_blocks",
    "init_min",
    "init_max",
    "train_all_blocks",
    "seed",
    "n_seeds",
    "sweep",
    "sweep_seed",
    "warm_start",
    "out_dir",
    "strict",
];

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parses the text format. Unset keys keep their defaults, so an empty
    /// input yields the published Mackey-Glass experiment.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut split_kind = "points".to_string();
        let mut split_at = 500usize;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |message: String| Error::Parse {
                path: origin.to_string(),
                line: line_no,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected 'key = value', got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(bad(format!("unknown key '{key}'")));
            }
            let float = || -> Result<f64> {
                value
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| bad(format!("'{key}' expects a finite number, got '{value}'")))
            };
            let uint = || -> Result<usize> {
                value.parse::<usize>().map_err(|_| {
                    bad(format!(
                        "'{key}' expects a non-negative integer, got '{value}'"
                    ))
                })
            };
            let boolean = || -> Result<bool> {
                match value {
                    "true" | "yes" | "1" => Ok(true),
                    "false" | "no" | "0" => Ok(false),
                    _ => Err(bad(format!("'{key}' expects true or false, got '{value}'"))),
                }
            };
            match key {
                "alpha" => cfg.mg.alpha = float()?,
                "beta" => cfg.mg.beta = float()?,
                "tau" => cfg.mg.tau = float()?,
                "x0" => cfg.mg.x0 = float()?,
                "dt" => cfg.mg.dt = float()?,
                "sample_every" => cfg.mg.sample_every = uint()?,
                "n_points" => cfg.mg.n_points = uint()?,
                "transient_skip" => cfg.mg.transient_skip = uint()?,
                "series_path" => {
                    cfg.series_path = (!value.is_empty()).then(|| PathBuf::from(value));
                }
                "lags" => {
                    cfg.lags = value
                        .split(',')
                        .map(|s| s.trim().parse::<usize>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| {
                            bad(format!(
                                "'lags' expects a comma-separated list, got '{value}'"
                            ))
                        })?;
                }
                "horizon" => cfg.horizon = uint()?,
                "split" => match value {
                    "points" | "patterns" => split_kind = value.to_string(),
                    _ => {
                        return Err(bad(format!(
                            "'split' expects points or patterns, got '{value}'"
                        )))
                    }
                },
                "split_at" => split_at = uint()?,
                "norm_min" => cfg.norm_min = float()?,
                "norm_max" => cfg.norm_max = float()?,
                "mode" => cfg.mode = value.parse().map_err(|e: Error| bad(e.to_string()))?,
                "gradient" => {
                    cfg.trainer.gradient_mode =
                        value.parse().map_err(|e: Error| bad(e.to_string()))?
                }
                "eta" => cfg.trainer.eta = float()?,
                "momentum" => cfg.trainer.momentum = float()?,
                "r_threshold" => cfg.trainer.r_threshold = float()?,
                "eta_decay" => cfg.trainer.eta_decay = float()?,
                "r_decay" => cfg.trainer.r_decay = float()?,
                "max_epochs" => cfg.trainer.max_epochs = uint()?,
                "max_blocks" => cfg.trainer.max_blocks = uint()?,
                "init_min" => cfg.trainer.init_range.lo = float()?,
                "init_max" => cfg.trainer.init_range.hi = float()?,
                "train_all_blocks" => cfg.trainer.train_all_blocks = boolean()?,
                "seed" => {
                    cfg.trainer.seed = value.parse().map_err(|_| {
                        bad(format!("'seed' expects an unsigned integer, got '{value}'"))
                    })?
                }
                "n_seeds" => cfg.n_seeds = uint()?,
                "sweep" => cfg.sweep = uint()?,
                "sweep_seed" => {
                    cfg.sweep_seed = value.parse().map_err(|_| {
                        bad(format!(
                            "'sweep_seed' expects an unsigned integer, got '{value}'"
                        ))
                    })?
                }
                "warm_start" => cfg.warm_start = boolean()?,
                "out_dir" => cfg.out_dir = PathBuf::from(value),
                "strict" => cfg.strict = boolean()?,
                _ => unreachable!("key list and match arms agree"),
            }
        }
        cfg.split = match split_kind.as_str() {
            "patterns" => SplitRule::ByPatterns(split_at),
            _ => SplitRule::ByPoints(split_at),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Renders every key so that `parse(to_text())` reproduces `self`.
    pub fn to_text(&self) -> String {
        let t = &self.trainer;
        let (split, split_at) = match self.split {
            SplitRule::ByPoints(n) => ("points", n),
            SplitRule::ByPatterns(n) => ("patterns", n),
        };
        let lags: Vec<String> = self.lags.iter().map(|l| l.to_string()).collect();
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("alpha", format!("{:?}", self.mg.alpha));
        kv("beta", format!("{:?}", self.mg.beta));
        kv("tau", format!("{:?}", self.mg.tau));
        kv("x0", format!("{:?}", self.mg.x0));
        kv("dt", format!("{:?}", self.mg.dt));
        kv("sample_every", self.mg.sample_every.to_string());
        kv("n_points", self.mg.n_points.to_string());
        kv("transient_skip", self.mg.transient_skip.to_string());
        kv(
            "series_path",
            self.series_path
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
        );
        kv("lags", lags.join(","));
        kv("horizon", self.horizon.to_string());
        kv("split", split.to_string());
        kv("split_at", split_at.to_string());
        kv("norm_min", format!("{:?}", self.norm_min));
        kv("norm_max", format!("{:?}", self.norm_max));
        kv("mode", self.mode.to_string());
        kv("gradient", t.gradient_mode.to_string());
        kv("eta", format!("{:?}", t.eta));
        kv("momentum", format!("{:?}", t.momentum));
        kv("r_threshold", format!("{:?}", t.r_threshold));
        kv("eta_decay", format!("{:?}", t.eta_decay));
        kv("r_decay", format!("{:?}", t.r_decay));
        kv("max_epochs", t.max_epochs.to_string());
        kv("max_blocks", t.max_blocks.to_string());
        kv("init_min", format!("{:?}", t.init_range.lo));
        kv("init_max", format!("{:?}", t.init_range.hi));
        kv("train_all_blocks", t.train_all_blocks.to_string());
        kv("seed", t.seed.to_string());
        kv("n_seeds", self.n_seeds.to_string());
        kv("sweep", self.sweep.to_string());
        kv("sweep_seed", self.sweep_seed.to_string());
        kv("warm_start", self.warm_start.to_string());
        kv("out_dir", self.out_dir.display().to_string());
        kv("strict", self.strict.to_string());
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.series_path.is_none() {
            self.mg.validate()?;
        }
        if self.lags.is_empty() {
            return Err(Error::InvalidInput("at least one lag is required".into()));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidInput("horizon must be at least 1".into()));
        }
        if self.norm_max.partial_cmp(&self.norm_min) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::DegenerateRange {
                min: self.norm_min,
                max: self.norm_max,
            });
        }
        if self.n_seeds == 0 {
            return Err(Error::InvalidInput("n_seeds must be at least 1".into()));
        }
        self.trainer.validate()?;
        if self.strict {
            check_published_ranges(&self.trainer)?;
        }
        Ok(())
    }
}

/// Rejects trainer settings outside the published ranges.
pub fn check_published_ranges(t: &TrainerConfig) -> Result<()> {
    let within = |key: &str, v: f64, (lo, hi): (f64, f64)| {
        if v >= lo && v <= hi {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                key: key.into(),
                value: format!("{v}"),
                bound: format!("[{lo}, {hi}]"),
            })
        }
    };
    within("eta", t.eta, bounds::ETA)?;
    // zero momentum is the plain online update and always acceptable
    if t.momentum != 0.0 {
        within("momentum", t.momentum, bounds::MOMENTUM)?;
    }
    within("r_threshold", t.r_threshold, bounds::R_THRESHOLD)?;
    if !bounds::R_DECAY.contains(&t.r_decay) {
        return Err(Error::OutOfRange {
            key: "r_decay".into(),
            value: format!("{}", t.r_decay),
            bound: "{0.05, 0.2}".into(),
        });
    }
    if t.eta_decay != bounds::ETA_DECAY {
        return Err(Error::OutOfRange {
            key: "eta_decay".into(),
            value: format!("{}", t.eta_decay),
            bound: "{0.8}".into(),
        });
    }
    if t.max_epochs > bounds::MAX_EPOCHS {
        return Err(Error::OutOfRange {
            key: "max_epochs".into(),
            value: t.max_epochs.to_string(),
            bound: format!("[1, {}]", bounds::MAX_EPOCHS),
        });
    }
    if t.max_blocks > bounds::MAX_BLOCKS {
        return Err(Error::OutOfRange {
            key: "max_blocks".into(),
            value: t.max_blocks.to_string(),
            bound: format!("[1, {}]", bounds::MAX_BLOCKS),
        });
    }
    let InitRange { lo, hi } = t.init_range;
    if lo < bounds::INIT.0 || hi > bounds::INIT.1 {
        return Err(Error::OutOfRange {
            key: "init_min/init_max".into(),
            value: format!("[{lo}, {hi}]"),
            bound: format!("[{}, {}]", bounds::INIT.0, bounds::INIT.1),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainer::GradientMode;

    #[test]
    fn empty_file_gives_published_setup() {
        let cfg = ExperimentConfig::parse("", "<test>").unwrap();
        assert_eq!(cfg.mg.alpha, 0.2);
        assert_eq!(cfg.mg.beta, -0.1);
        assert_eq!(cfg.mg.tau, 17.0);
        assert_eq!(cfg.mg.x0, 1.2);
        assert_eq!(cfg.mg.n_points, 1000);
        assert_eq!(cfg.lags, vec![0, 6, 12, 18]);
        assert_eq!(cfg.horizon, 6);
        assert_eq!((cfg.norm_min, cfg.norm_max), (0.2, 0.8));
        assert_eq!(cfg.split, SplitRule::ByPoints(500));
        assert_eq!(cfg.trainer.max_epochs, 3000);
        assert_eq!(cfg.trainer.max_blocks, 5);
        assert_eq!(cfg.trainer.eta_decay, 0.8);
        assert_eq!(cfg.trainer.init_range, InitRange::new(-0.5, 0.5));
        assert_eq!(cfg.mode, FeedbackMode::ErrorOutput);
    }

    #[test]
    fn strict_mode_rejects_zero_eta() {
        let err = ExperimentConfig::parse("strict = true\neta = 0\n", "<test>").unwrap_err();
        match err {
            Error::OutOfRange { key, bound, .. } => {
                assert_eq!(key, "eta");
                assert_eq!(bound, "[0.01, 1]");
            }
            other => panic!("unexpected error {other:?}"),
        }
        assert!(ExperimentConfig::parse("eta = 0\n", "<test>").is_ok());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = ExperimentConfig::parse("# comment\n\netaa = 0.1\n", "cfg.txt").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
        let err = ExperimentConfig::parse("eta 0.1\n", "cfg.txt").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = ExperimentConfig::parse("max_epochs = -3\n", "cfg.txt").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn inline_comments_and_overrides() {
        let cfg = ExperimentConfig::parse(
            "mode = drpnn   # output feedback only\nlags = 0, 3\nsplit = patterns\nsplit_at = 400\ngradient = exact\n",
            "<test>",
        )
        .unwrap();
        assert_eq!(cfg.mode, FeedbackMode::Output);
        assert_eq!(cfg.lags, vec![0, 3]);
        assert_eq!(cfg.split, SplitRule::ByPatterns(400));
        assert_eq!(cfg.trainer.gradient_mode, GradientMode::ExactRecursion);
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = ExperimentConfig::default();
        cfg.trainer.eta = 0.123456789;
        cfg.trainer.r_threshold = 3.3e-5;
        cfg.series_path = Some(PathBuf::from("data/series.csv"));
        cfg.split = SplitRule::ByPatterns(321);
        cfg.mode = FeedbackMode::Error;
        cfg.sweep = 3;
        let again = ExperimentConfig::parse(&cfg.to_text(), "<round-trip>").unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = ExperimentConfig::load(Path::new("/nonexistent/cfg.txt")).unwrap_err();
        assert_eq!(err.category(), "io");
    }
}
