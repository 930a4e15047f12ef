//! Online real-time recurrent learning for ridge polynomial networks and the
//! constructive controller that grows the network one Pi-Sigma block at a time.
//!
//! The sensitivity of the output to each trainable weight, `D^Y = ∂y/∂w`, is
//! carried forward step to step. The error sensitivity is its negation
//! (`e = d - y` with `d` independent of the weights) and is never stored.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::Pattern;
use crate::error::{Error, Result};
use crate::network::{assemble_inputs_into, FeedbackMode, ForwardTrace, InitRange, RidgePolyNet};

/// Feedback value used for `e(t-1)` and `y(t-1)` before the first step.
pub const INITIAL_FEEDBACK: f64 = 0.5;

/// Block products beyond this magnitude abort training.
pub const DIVERGENCE_LIMIT: f64 = 1e100;

/// How the output sensitivities are propagated through the feedback inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum GradientMode {
    /// Feedback term attached only to the differentiated unit of the trained block.
    #[default]
    PaperRecursion,
    /// Full product rule over every unit of every block.
    ExactRecursion,
}

impl GradientMode {
    pub fn as_str(self) -> &'static str {
        match self {
            GradientMode::PaperRecursion => "paper",
            GradientMode::ExactRecursion => "exact",
        }
    }
}

impl fmt::Display for GradientMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GradientMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "paper" => Ok(GradientMode::PaperRecursion),
            "exact" => Ok(GradientMode::ExactRecursion),
            other => Err(Error::InvalidInput(format!(
                "unknown gradient mode '{other}' (expected paper or exact)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainerConfig {
    pub eta: f64,
    pub momentum: f64,
    pub r_threshold: f64,
    pub eta_decay: f64,
    pub r_decay: f64,
    pub max_epochs: usize,
    pub max_blocks: usize,
    pub init_range: InitRange,
    pub seed: u64,
    pub gradient_mode: GradientMode,
    /// Keep every block trainable after growth instead of freezing the old ones.
    pub train_all_blocks: bool,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            eta: 0.3,
            momentum: 0.5,
            r_threshold: 1e-4,
            eta_decay: 0.8,
            r_decay: 0.2,
            max_epochs: 3000,
            max_blocks: 5,
            init_range: InitRange::default(),
            seed: 1,
            gradient_mode: GradientMode::PaperRecursion,
            train_all_blocks: false,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "eta must be non-negative, got {}",
                self.eta
            )));
        }
        if !(self.momentum.is_finite() && (0.0..1.0).contains(&self.momentum)) {
            return Err(Error::InvalidInput(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            )));
        }
        positive("r_threshold", self.r_threshold)?;
        positive("eta_decay", self.eta_decay)?;
        positive("r_decay", self.r_decay)?;
        if self.max_epochs == 0 {
            return Err(Error::InvalidInput("max_epochs must be at least 1".into()));
        }
        if self.max_blocks == 0 {
            return Err(Error::InvalidInput("max_blocks must be at least 1".into()));
        }
        let r = self.init_range;
        if !(r.lo.is_finite() && r.hi.is_finite() && r.lo <= r.hi) {
            return Err(Error::InvalidInput(format!(
                "init range [{}, {}] is not a valid interval",
                r.lo, r.hi
            )));
        }
        Ok(())
    }
}

/// Recurrent training state carried between steps.
#[derive(Debug, Clone, PartialEq)]
pub struct RtrlState {
    /// `∂y(t)/∂w` for every trainable weight, in [`RidgePolyNet::trainable_params`] order.
    pub dy: Vec<f64>,
    pub prev_error: f64,
    pub prev_output: f64,
    /// Last weight change, for momentum.
    pub prev_delta: Vec<f64>,
    /// Steps taken since the state was created; used to locate divergence.
    pub step: usize,
    scratch: Scratch,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Scratch {
    z: Vec<f64>,
    trace: ForwardTrace,
    /// Per block, per unit: product of the block's other units.
    others: Vec<Vec<f64>>,
}

impl RtrlState {
    /// Fresh state: zero sensitivities and momentum, both feedbacks at 0.5.
    pub fn new(net: &RidgePolyNet) -> Self {
        let n = net.trainable_weight_count();
        RtrlState {
            dy: vec![0.0; n],
            prev_error: INITIAL_FEEDBACK,
            prev_output: INITIAL_FEEDBACK,
            prev_delta: vec![0.0; n],
            step: 0,
            scratch: Scratch::default(),
        }
    }

    /// Resizes the sensitivities and momentum for a grown network, zeroing them,
    /// while keeping the feedback history.
    pub fn reset_for_growth(&mut self, net: &RidgePolyNet) {
        let n = net.trainable_weight_count();
        self.dy.clear();
        self.dy.resize(n, 0.0);
        self.prev_delta.clear();
        self.prev_delta.resize(n, 0.0);
    }

    /// `∂e(t)/∂w`, which is `-∂y(t)/∂w` for every weight.
    pub fn error_sensitivity(&self) -> Vec<f64> {
        self.dy.iter().map(|d| -d).collect()
    }
}

pub fn reset_state(net: &RidgePolyNet) -> RtrlState {
    RtrlState::new(net)
}

/// Result of a single online step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub error: f64,
    pub output: f64,
    /// Sigmoid slope `y(1-y)` at this step.
    pub slope: f64,
}

/// One RTRL step: forward pass, sensitivity update, weight update, feedback update.
pub fn rtrl_step(
    net: &mut RidgePolyNet,
    state: &mut RtrlState,
    pattern: &Pattern,
    cfg: &TrainerConfig,
) -> Result<StepOutcome> {
    rtrl_step_with_eta(net, state, pattern, cfg, cfg.eta)
}

fn rtrl_step_with_eta(
    net: &mut RidgePolyNet,
    state: &mut RtrlState,
    pattern: &Pattern,
    cfg: &TrainerConfig,
    eta: f64,
) -> Result<StepOutcome> {
    net.check_external(&pattern.inputs)?;
    let n_trainable = net.trainable_weight_count();
    if state.dy.len() != n_trainable || state.prev_delta.len() != n_trainable {
        return Err(Error::InvalidInput(format!(
            "RTRL state tracks {} weights but the network has {n_trainable} trainable weights",
            state.dy.len()
        )));
    }
    let step = state.step;
    let mode = net.mode();
    let m = net.m_external();
    let n_in = net.n_inputs();

    let Scratch { z, trace, others } = &mut state.scratch;
    assemble_inputs_into(
        &pattern.inputs,
        state.prev_error,
        state.prev_output,
        mode,
        z,
    );
    net.forward_into(z, trace)?;
    if let Some(p) = trace
        .p
        .iter()
        .find(|p| !p.is_finite() || p.abs() > DIVERGENCE_LIMIT)
    {
        return Err(Error::NumericDivergence {
            step,
            reason: format!("block product {p:e} exceeds {DIVERGENCE_LIMIT:e}"),
        });
    }
    let y = trace.y;
    let error = pattern.target - y;
    let slope = y * (1.0 - y);

    others.resize_with(net.block_count(), Vec::new);
    for (hs, out) in trace.h.iter().zip(others.iter_mut()) {
        products_of_others(hs, out);
    }

    let err_idx = mode.error_index(m);
    let out_idx = mode.output_index(m);
    let fb_weight = |w: &[f64], idx: Option<usize>| idx.map_or(0.0, |i| w[i]);

    // Total gain of the network sum with respect to each feedback input.
    let (mut gain_err, mut gain_out) = (0.0, 0.0);
    if cfg.gradient_mode == GradientMode::ExactRecursion {
        for (block, prods) in net.blocks().iter().zip(others.iter()) {
            for (unit, a) in block.units().iter().zip(prods) {
                gain_err += a * fb_weight(&unit.weights, err_idx);
                gain_out += a * fb_weight(&unit.weights, out_idx);
            }
        }
    }

    let frozen = net.frozen_count();
    let mut p = 0;
    for (block, prods) in net.blocks()[frozen..].iter().zip(&others[frozen..]) {
        for (unit, &a) in block.units().iter().zip(prods) {
            let fb_diff = fb_weight(&unit.weights, out_idx) - fb_weight(&unit.weights, err_idx);
            // bias last, driven by a constant 1
            for zg in z[..n_in].iter().copied().chain(std::iter::once(1.0)) {
                let dy_prev = state.dy[p];
                state.dy[p] = match cfg.gradient_mode {
                    GradientMode::PaperRecursion => slope * (a * (zg + dy_prev * fb_diff)),
                    GradientMode::ExactRecursion => {
                        let de_prev = -dy_prev;
                        slope * (a * zg + gain_err * de_prev + gain_out * dy_prev)
                    }
                };
                p += 1;
            }
        }
    }

    let mut p = 0;
    for block in &mut net.blocks_mut()[frozen..] {
        for unit in block.units_mut() {
            for w in unit
                .weights
                .iter_mut()
                .chain(std::iter::once(&mut unit.bias))
            {
                let delta = eta * error * state.dy[p] + cfg.momentum * state.prev_delta[p];
                *w += delta;
                state.prev_delta[p] = delta;
                p += 1;
            }
        }
    }

    state.prev_error = error;
    state.prev_output = y;
    state.step += 1;
    Ok(StepOutcome {
        error,
        output: y,
        slope,
    })
}

/// `out[j] = Π_{k≠j} h[k]` via prefix and suffix products (no division).
fn products_of_others(h: &[f64], out: &mut Vec<f64>) {
    out.clear();
    let mut prefix = 1.0;
    for &hj in h {
        out.push(prefix);
        prefix *= hj;
    }
    let mut suffix = 1.0;
    for (o, &hj) in out.iter_mut().zip(h).rev() {
        *o *= suffix;
        suffix *= hj;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    /// `Σ ½e(t)²` over the epoch's steps.
    pub sse: f64,
    /// Block count while this epoch was trained.
    pub block_count: usize,
    pub eta_used: f64,
    /// Threshold in force when this epoch's improvement was tested.
    pub r_used: f64,
    /// Previous epoch SSE minus this epoch's; `None` for the first epoch.
    pub improvement: Option<f64>,
    pub block_added: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Addition {
    pub epoch: usize,
    pub new_order: usize,
    pub eta_after: f64,
    pub r_after: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GrowthHistory {
    pub epochs: Vec<EpochStats>,
    pub additions: Vec<Addition>,
}

impl GrowthHistory {
    /// Epoch with the lowest SSE, i.e. the snapshot `constructive_fit` returns.
    pub fn best_epoch(&self) -> Option<&EpochStats> {
        self.epochs
            .iter()
            .fold(None, |best: Option<&EpochStats>, e| match best {
                Some(b) if b.sse <= e.sse => Some(b),
                _ => Some(e),
            })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,sse,block_count,eta_used,block_added\n");
        for e in &self.epochs {
            out.push_str(&format!(
                "{},{:?},{},{:?},{}\n",
                e.epoch, e.sse, e.block_count, e.eta_used, e.block_added
            ));
        }
        out
    }
}

/// Runs `rtrl_step` over `patterns` in order and accumulates the epoch SSE.
/// The returned stats carry `epoch = 0`; callers that track epochs fill it in.
pub fn train_epoch(
    net: &mut RidgePolyNet,
    state: &mut RtrlState,
    patterns: &[Pattern],
    cfg: &TrainerConfig,
) -> Result<EpochStats> {
    train_epoch_with_eta(net, state, patterns, cfg, cfg.eta, |_| {})
}

/// Like [`train_epoch`] but with an explicit learning rate and a per-step observer.
pub fn train_epoch_with_eta(
    net: &mut RidgePolyNet,
    state: &mut RtrlState,
    patterns: &[Pattern],
    cfg: &TrainerConfig,
    eta: f64,
    mut observe: impl FnMut(&StepOutcome),
) -> Result<EpochStats> {
    if patterns.is_empty() {
        return Err(Error::InvalidInput(
            "cannot train on an empty pattern list".into(),
        ));
    }
    let start_step = state.step;
    let mut sse = 0.0;
    let mut flat_steps = 0;
    for pattern in patterns {
        let outcome = rtrl_step_with_eta(net, state, pattern, cfg, eta)?;
        sse += 0.5 * outcome.error * outcome.error;
        if outcome.slope == 0.0 {
            flat_steps += 1;
        }
        observe(&outcome);
    }
    if flat_steps == patterns.len() {
        return Err(Error::NumericDivergence {
            step: start_step,
            reason: "sigmoid saturated for an entire epoch".into(),
        });
    }
    if !sse.is_finite() {
        return Err(Error::NumericDivergence {
            step: state.step,
            reason: "epoch SSE is not finite".into(),
        });
    }
    Ok(EpochStats {
        epoch: 0,
        sse,
        block_count: net.block_count(),
        eta_used: eta,
        r_used: cfg.r_threshold,
        improvement: None,
        block_added: false,
    })
}

#[derive(Debug, Clone)]
pub struct FitOutcome {
    /// Snapshot from the end of the lowest-SSE epoch.
    pub net: RidgePolyNet,
    pub history: GrowthHistory,
}

/// Constructive training: start with one order-1 block, add the next order
/// whenever the epoch SSE improves by less than `r`, decaying `η` and `r` at
/// each addition. Stops at `max_epochs` or when the last permitted block
/// stalls below its threshold.
pub fn constructive_fit(
    patterns: &[Pattern],
    cfg: &TrainerConfig,
    mode: FeedbackMode,
) -> Result<FitOutcome> {
    constructive_fit_observed(patterns, cfg, mode, |_, _| {})
}

/// [`constructive_fit`] with a hook called after every epoch, before any block
/// is added, with the epoch's stats and the network as trained so far.
pub fn constructive_fit_observed(
    patterns: &[Pattern],
    cfg: &TrainerConfig,
    mode: FeedbackMode,
    mut observe: impl FnMut(&EpochStats, &RidgePolyNet),
) -> Result<FitOutcome> {
    cfg.validate()?;
    let m = patterns
        .first()
        .ok_or_else(|| Error::InvalidInput("cannot train on an empty pattern list".into()))?
        .inputs
        .len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut net = RidgePolyNet::new(mode, m, cfg.init_range, &mut rng)?;
    let mut state = RtrlState::new(&net);
    let mut history = GrowthHistory::default();
    let mut eta = cfg.eta;
    let mut r = cfg.r_threshold;
    let mut prev_sse: Option<f64> = None;
    let mut best: Option<(f64, RidgePolyNet)> = None;

    for epoch in 1..=cfg.max_epochs {
        let mut stats = match train_epoch_with_eta(&mut net, &mut state, patterns, cfg, eta, |_| {})
        {
            Ok(stats) => stats,
            Err(source) => {
                return Err(Error::TrainingDiverged {
                    epoch,
                    history: Box::new(history),
                    source: Box::new(source),
                })
            }
        };
        stats.epoch = epoch;
        stats.r_used = r;
        stats.improvement = prev_sse.map(|p| p - stats.sse);
        prev_sse = Some(stats.sse);
        if best.as_ref().is_none_or(|(s, _)| stats.sse < *s) {
            best = Some((stats.sse, net.clone()));
        }
        observe(&stats, &net);

        let stalled = stats.improvement.is_some_and(|imp| imp < r);
        let mut finished = false;
        if stalled {
            if net.block_count() < cfg.max_blocks {
                net.add_block(cfg.max_blocks, cfg.init_range, &mut rng)?;
                if cfg.train_all_blocks {
                    net.set_frozen_count(0)?;
                }
                state.reset_for_growth(&net);
                eta *= cfg.eta_decay;
                r *= cfg.r_decay;
                stats.block_added = true;
                history.additions.push(Addition {
                    epoch,
                    new_order: net.block_count(),
                    eta_after: eta,
                    r_after: r,
                });
            } else {
                finished = true;
            }
        }
        history.epochs.push(stats);
        if finished {
            break;
        }
    }

    let (_, net) = best.expect("at least one epoch is always trained");
    Ok(FitOutcome { net, history })
}

/// Summary of relative errors between propagated and finite-difference sensitivities.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityErrors {
    pub gradient_mode: GradientMode,
    /// Propagated `∂y(T)/∂w` per trainable weight.
    pub propagated: Vec<f64>,
    pub relative_errors: Vec<f64>,
    pub max_relative_error: f64,
    pub mean_relative_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientCheckReport {
    pub epsilon: f64,
    pub steps: usize,
    /// Central finite differences of `y(T)` per trainable weight.
    pub finite_difference: Vec<f64>,
    pub paper: SensitivityErrors,
    pub exact: SensitivityErrors,
}

impl GradientCheckReport {
    pub fn for_mode(&self, mode: GradientMode) -> &SensitivityErrors {
        match mode {
            GradientMode::PaperRecursion => &self.paper,
            GradientMode::ExactRecursion => &self.exact,
        }
    }
}

/// Relative errors below this denominator are measured against it instead, so
/// vanishing sensitivities do not amplify round-off.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-6;

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(RELATIVE_ERROR_FLOOR)
}

/// Compares the propagated sensitivities `D^Y(T)` at the last step of `patterns`
/// against central finite differences of `y(T)`, obtained by re-running the
/// whole sequence from the initial state with each weight perturbed by `±epsilon`.
/// Weights are held fixed throughout (learning rate and momentum forced to 0).
pub fn gradient_check(
    net: &RidgePolyNet,
    patterns: &[Pattern],
    cfg: &TrainerConfig,
    epsilon: f64,
) -> Result<GradientCheckReport> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if patterns.is_empty() {
        return Err(Error::InvalidInput(
            "gradient check needs at least one pattern".into(),
        ));
    }
    let n = net.trainable_weight_count();
    let mut finite_difference = Vec::with_capacity(n);
    for p in 0..n {
        let mut plus = net.clone();
        *plus
            .trainable_param_mut(p)
            .expect("index below trainable count") += epsilon;
        let mut minus = net.clone();
        *minus
            .trainable_param_mut(p)
            .expect("index below trainable count") -= epsilon;
        let y_plus = final_output(&plus, patterns)?;
        let y_minus = final_output(&minus, patterns)?;
        finite_difference.push((y_plus - y_minus) / (2.0 * epsilon));
    }

    let compare = |gradient_mode| -> Result<SensitivityErrors> {
        let frozen_cfg = TrainerConfig {
            eta: 0.0,
            momentum: 0.0,
            gradient_mode,
            ..cfg.clone()
        };
        let mut rolled = net.clone();
        let mut state = RtrlState::new(&rolled);
        for pattern in patterns {
            rtrl_step(&mut rolled, &mut state, pattern, &frozen_cfg)?;
        }
        let relative_errors: Vec<f64> = state
            .dy
            .iter()
            .zip(&finite_difference)
            .map(|(&a, &b)| relative_error(a, b))
            .collect();
        let max_relative_error = relative_errors.iter().copied().fold(0.0, f64::max);
        let mean_relative_error = if relative_errors.is_empty() {
            0.0
        } else {
            relative_errors.iter().sum::<f64>() / relative_errors.len() as f64
        };
        Ok(SensitivityErrors {
            gradient_mode,
            propagated: state.dy,
            relative_errors,
            max_relative_error,
            mean_relative_error,
        })
    };

    Ok(GradientCheckReport {
        epsilon,
        steps: patterns.len(),
        paper: compare(GradientMode::PaperRecursion)?,
        exact: compare(GradientMode::ExactRecursion)?,
        finite_difference,
    })
}

/// Output at the last step of a fixed-weight rollout. Independent of the
/// sensitivity recursion: only forward passes and feedback bookkeeping.
fn final_output(net: &RidgePolyNet, patterns: &[Pattern]) -> Result<f64> {
    let (mut prev_e, mut prev_y) = (INITIAL_FEEDBACK, INITIAL_FEEDBACK);
    let mut y = f64::NAN;
    for pattern in patterns {
        let z = net.assemble_inputs(&pattern.inputs, prev_e, prev_y)?;
        y = net.forward(&z)?.y;
        prev_e = pattern.target - y;
        prev_y = y;
    }
    Ok(y)
}
