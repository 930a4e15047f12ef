//! Forecast error measures and fixed-weight evaluation rollouts.

use std::fmt::Write as _;

use crate::dataset::{NormParams, Pattern};
use crate::error::{Error, Result};
use crate::network::{ForwardTrace, RidgePolyNet};
use crate::trainer::INITIAL_FEEDBACK;

/// Root mean squared error between two equally long, non-empty lists.
pub fn rmse(actual: &[f64], forecast: &[f64]) -> Result<f64> {
    if actual.len() != forecast.len() {
        return Err(Error::InvalidInput(format!(
            "rmse needs equal lengths, got {} and {}",
            actual.len(),
            forecast.len()
        )));
    }
    if actual.is_empty() {
        return Err(Error::InvalidInput(
            "rmse of an empty list is undefined".into(),
        ));
    }
    let sum: f64 = actual
        .iter()
        .zip(forecast)
        .map(|(a, f)| (a - f) * (a - f))
        .sum();
    Ok((sum / actual.len() as f64).sqrt())
}

/// Sum of `½e²` over a list of errors.
pub fn sse(errors: &[f64]) -> f64 {
    errors.iter().map(|e| 0.5 * e * e).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub t_indices: Vec<usize>,
    /// Normalized-scale targets and forecasts.
    pub targets: Vec<f64>,
    pub forecasts: Vec<f64>,
    /// `target - forecast` per step, normalized scale.
    pub per_step_errors: Vec<f64>,
    pub rmse_normalized: f64,
    pub rmse_denormalized: f64,
    pub n: usize,
    norm: NormParams,
}

impl EvalResult {
    /// `t,actual,forecast,error` on the original data scale.
    pub fn forecast_csv(&self) -> String {
        let mut out = String::from("t,actual,forecast,error\n");
        for ((t, d), y) in self
            .t_indices
            .iter()
            .zip(&self.targets)
            .zip(&self.forecasts)
        {
            let actual = self.norm.denormalize_value(*d);
            let forecast = self.norm.denormalize_value(*y);
            let _ = writeln!(out, "{t},{actual:?},{forecast:?},{:?}", actual - forecast);
        }
        out
    }
}

/// Fixed-weight rollout. Feedback inputs evolve exactly as during training
/// (`e = d - y`, `y`), starting from the given feedback values. Returns the
/// outputs and the feedback pair after the last pattern.
pub fn rollout(
    net: &RidgePolyNet,
    patterns: &[Pattern],
    feedback: (f64, f64),
) -> Result<(Vec<f64>, (f64, f64))> {
    let (mut prev_e, mut prev_y) = feedback;
    let mut trace = ForwardTrace::default();
    let mut outputs = Vec::with_capacity(patterns.len());
    for pattern in patterns {
        let z = net.assemble_inputs(&pattern.inputs, prev_e, prev_y)?;
        net.forward_into(&z, &mut trace)?;
        outputs.push(trace.y);
        prev_e = pattern.target - trace.y;
        prev_y = trace.y;
    }
    Ok((outputs, (prev_e, prev_y)))
}

/// Evaluates `net` over `patterns` in order, starting from the initial 0.5/0.5 feedback.
pub fn evaluate(net: &RidgePolyNet, patterns: &[Pattern], norm: &NormParams) -> Result<EvalResult> {
    evaluate_after_warmup(net, &[], patterns, norm)
}

/// Rolls `net` over `warmup` first (scored nowhere) so the feedback inputs
/// carry real history into the scored `patterns`.
pub fn evaluate_after_warmup(
    net: &RidgePolyNet,
    warmup: &[Pattern],
    patterns: &[Pattern],
    norm: &NormParams,
) -> Result<EvalResult> {
    if patterns.is_empty() {
        return Err(Error::InvalidInput(
            "cannot evaluate on an empty pattern list".into(),
        ));
    }
    let (_, feedback) = rollout(net, warmup, (INITIAL_FEEDBACK, INITIAL_FEEDBACK))?;
    let (forecasts, _) = rollout(net, patterns, feedback)?;
    let targets: Vec<f64> = patterns.iter().map(|p| p.target).collect();
    let per_step_errors = targets.iter().zip(&forecasts).map(|(d, y)| d - y).collect();
    let rmse_normalized = rmse(&targets, &forecasts)?;
    let rmse_denormalized = rmse(&norm.denormalize(&targets), &norm.denormalize(&forecasts))?;
    Ok(EvalResult {
        t_indices: patterns.iter().map(|p| p.t_index).collect(),
        n: targets.len(),
        targets,
        forecasts,
        per_step_errors,
        rmse_normalized,
        rmse_denormalized,
        norm: *norm,
    })
}
