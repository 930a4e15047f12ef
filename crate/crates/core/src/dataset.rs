//! Mackey-Glass series generation, min-max scaling and lag embedding.

use std::cmp::Ordering;
use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Delay-differential-equation settings for
/// `dx/dt = beta*x(t) + alpha*x(t-tau) / (1 + x(t-tau)^10)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MgParams {
    pub alpha: f64,
    pub beta: f64,
    pub tau: f64,
    pub x0: f64,
    /// Integrator step.
    pub dt: f64,
    /// Integrator steps between emitted points.
    pub sample_every: usize,
    pub n_points: usize,
    /// Emitted points discarded before collection starts.
    pub transient_skip: usize,
}

impl Default for MgParams {
    fn default() -> Self {
        MgParams {
            alpha: 0.2,
            beta: -0.1,
            tau: 17.0,
            x0: 1.2,
            dt: 0.1,
            sample_every: 10,
            n_points: 1000,
            transient_skip: 0,
        }
    }
}

impl MgParams {
    /// Number of integrator steps spanning one delay.
    pub fn delay_steps(&self) -> Result<usize> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidInput(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::InvalidInput(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        let ratio = self.tau / self.dt;
        let steps = ratio.round();
        if (ratio - steps).abs() > 1e-9 * ratio.max(1.0) || steps < 1.0 {
            return Err(Error::InvalidInput(format!(
                "tau/dt = {}/{} = {ratio} must be a positive integer",
                self.tau, self.dt
            )));
        }
        Ok(steps as usize)
    }

    pub fn validate(&self) -> Result<()> {
        self.delay_steps()?;
        if self.sample_every == 0 {
            return Err(Error::InvalidInput(
                "sample_every must be at least 1".into(),
            ));
        }
        if self.n_points == 0 {
            return Err(Error::InvalidInput("n_points must be at least 1".into()));
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("x0", self.x0)] {
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    fn rhs(&self, x: f64, delayed: f64) -> f64 {
        self.beta * x + self.alpha * delayed / (1.0 + delayed.powi(10))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub values: Vec<f64>,
    /// Generator settings, absent for series loaded from a file.
    pub params: Option<MgParams>,
}

impl Series {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "series value {i} is not finite"
            )));
        }
        Ok(Series {
            values,
            params: None,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x\n");
        for (t, x) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{t},{x:?}");
        }
        out
    }

    /// Parses the `t,x` CSV written by [`Series::to_csv`]; rows must be in index order.
    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |line: usize, message: String| Error::Parse {
            path: "<series>".into(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim() == "t,x" => {}
            _ => return Err(bad(1, "expected header 't,x'".into())),
        }
        let mut values = Vec::new();
        for (i, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (t, x) = line
                .split_once(',')
                .ok_or_else(|| bad(i + 1, "expected two columns".into()))?;
            let t: usize = t
                .trim()
                .parse()
                .map_err(|_| bad(i + 1, format!("invalid index '{t}'")))?;
            if t != values.len() {
                return Err(bad(
                    i + 1,
                    format!("expected index {}, found {t}", values.len()),
                ));
            }
            let x: f64 = x
                .trim()
                .parse()
                .map_err(|_| bad(i + 1, format!("invalid value '{x}'")))?;
            values.push(x);
        }
        Series::from_values(values)
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text).map_err(|e| match e {
            Error::Parse { line, message, .. } => Error::Parse {
                path: path.display().to_string(),
                line,
                message,
            },
            other => other,
        })
    }
}

/// Integrates the Mackey-Glass equation with classical RK4.
///
/// The past `tau` is kept in a ring buffer of grid values together with their
/// time derivatives; the constant `x0` stands in for every `t <= 0`. Delayed
/// values needed at half steps come from cubic Hermite interpolation between
/// the two neighbouring grid points, which keeps the scheme fourth order.
pub fn generate_mackey_glass(p: &MgParams) -> Result<Series> {
    p.validate()?;
    let delay = p.delay_steps()?;
    let dt = p.dt;

    // history[0] = x(t_n - tau), history[delay] = x(t_n); each entry is (x, dx/dt)
    let mut history: VecDeque<(f64, f64)> = std::iter::repeat_n((p.x0, 0.0), delay + 1).collect();
    let mut x = p.x0;
    let wanted = p.transient_skip + p.n_points;
    let mut values = Vec::with_capacity(p.n_points);
    let mut emitted = 0usize;
    let mut step = 0usize;
    loop {
        if step.is_multiple_of(p.sample_every) {
            if emitted >= p.transient_skip {
                values.push(x);
            }
            emitted += 1;
            if emitted == wanted {
                break;
            }
        }
        let k1 = p.rhs(x, history[0].0);
        if let Some(last) = history.back_mut() {
            last.1 = k1;
        }
        let (lag_now, d_now) = history[0];
        let (lag_next, d_next) = history[1];
        // x has a derivative jump at t = 0: intervals left of it see the flat pre-history.
        let d_next = if step < delay { 0.0 } else { d_next };
        let lag_mid = 0.5 * (lag_now + lag_next) + dt / 8.0 * (d_now - d_next);

        let k2 = p.rhs(x + 0.5 * dt * k1, lag_mid);
        let k3 = p.rhs(x + 0.5 * dt * k2, lag_mid);
        let k4 = p.rhs(x + dt * k3, lag_next);
        x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !x.is_finite() {
            return Err(Error::NumericDivergence {
                step,
                reason: "Mackey-Glass state is not finite".into(),
            });
        }
        history.pop_front();
        history.push_back((x, 0.0));
        step += 1;
    }
    Ok(Series {
        values,
        params: Some(p.clone()),
    })
}

/// Min-max scaling from `[min1, max1]` onto `[min2, max2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormParams {
    pub min1: f64,
    pub max1: f64,
    pub min2: f64,
    pub max2: f64,
}

impl NormParams {
    pub fn new(min1: f64, max1: f64, min2: f64, max2: f64) -> Result<Self> {
        if max1.partial_cmp(&min1) != Some(Ordering::Greater) {
            return Err(Error::DegenerateRange {
                min: min1,
                max: max1,
            });
        }
        if max2.partial_cmp(&min2) != Some(Ordering::Greater) {
            return Err(Error::DegenerateRange {
                min: min2,
                max: max2,
            });
        }
        Ok(NormParams {
            min1,
            max1,
            min2,
            max2,
        })
    }

    /// Takes the source extrema from every value in `values`.
    pub fn fit(values: &[f64], min2: f64, max2: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput(
                "cannot fit normalization to an empty series".into(),
            ));
        }
        let min1 = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max1 = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self::new(min1, max1, min2, max2)
    }

    #[inline]
    pub fn normalize_value(&self, x: f64) -> f64 {
        (self.max2 - self.min2) * ((x - self.min1) / (self.max1 - self.min1)) + self.min2
    }

    #[inline]
    pub fn denormalize_value(&self, v: f64) -> f64 {
        (v - self.min2) / (self.max2 - self.min2) * (self.max1 - self.min1) + self.min1
    }

    /// Factor by which de-normalization stretches differences.
    pub fn scale(&self) -> f64 {
        (self.max1 - self.min1) / (self.max2 - self.min2)
    }

    pub fn normalize(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.normalize_value(x)).collect()
    }

    pub fn denormalize(&self, vs: &[f64]) -> Vec<f64> {
        vs.iter().map(|&v| self.denormalize_value(v)).collect()
    }
}

/// One supervised example: lagged inputs at anchor `t_index` and the value `horizon` steps ahead.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    pub inputs: Vec<f64>,
    pub target: f64,
    pub t_index: usize,
}

pub const DEFAULT_LAGS: [usize; 4] = [0, 6, 12, 18];
pub const DEFAULT_HORIZON: usize = 6;

/// One pattern per anchor `t` in `max(lags)..len-horizon`, ascending, with
/// inputs `[s[t-lags[0]], s[t-lags[1]], ...]` and target `s[t+horizon]`.
pub fn build_patterns(s: &[f64], lags: &[usize], horizon: usize) -> Result<Vec<Pattern>> {
    let max_lag = *lags
        .iter()
        .max()
        .ok_or_else(|| Error::InvalidInput("at least one lag is required".into()))?;
    if horizon == 0 {
        return Err(Error::InvalidInput("horizon must be at least 1".into()));
    }
    if s.len() <= max_lag + horizon {
        return Err(Error::InvalidInput(format!(
            "series of length {} is too short for max lag {max_lag} and horizon {horizon}",
            s.len()
        )));
    }
    Ok((max_lag..s.len() - horizon)
        .map(|t| Pattern {
            inputs: lags.iter().map(|&lag| s[t - lag]).collect(),
            target: s[t + horizon],
            t_index: t,
        })
        .collect())
}

pub fn patterns_to_csv(patterns: &[Pattern], lags: &[usize]) -> String {
    let mut out = String::from("t");
    for lag in lags {
        let _ = write!(out, ",x{lag}");
    }
    out.push_str(",target\n");
    for p in patterns {
        let _ = write!(out, "{}", p.t_index);
        for x in &p.inputs {
            let _ = write!(out, ",{x:?}");
        }
        let _ = writeln!(out, ",{:?}", p.target);
    }
    out
}

/// How patterns are divided into training and out-of-sample sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitRule {
    /// Patterns anchored before this series index train; the rest are out-of-sample.
    ByPoints(usize),
    /// The first `n` patterns train.
    ByPatterns(usize),
}

impl Default for SplitRule {
    fn default() -> Self {
        SplitRule::ByPoints(500)
    }
}

pub fn split_patterns(patterns: &[Pattern], rule: SplitRule) -> (Vec<Pattern>, Vec<Pattern>) {
    let cut = match rule {
        SplitRule::ByPoints(n) => patterns.partition_point(|p| p.t_index < n),
        SplitRule::ByPatterns(n) => n.min(patterns.len()),
    };
    (patterns[..cut].to_vec(), patterns[cut..].to_vec())
}
