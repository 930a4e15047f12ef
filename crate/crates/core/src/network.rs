//! Ridge polynomial networks: a sum of Pi-Sigma blocks of orders `1..=k`
//! squashed by one sigmoid, optionally fed back their own previous error
//! and/or output as extra inputs.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngExt};

use crate::error::{Error, Result};

/// Which recurrent signals are appended to the external inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeedbackMode {
    /// Plain feedforward ridge polynomial network (RPNN).
    None,
    /// Previous output fed back (DRPNN).
    Output,
    /// Previous error fed back (RPNN-EF).
    Error,
    /// Previous error and previous output fed back (RPNN-EOF).
    ErrorOutput,
}

impl FeedbackMode {
    pub const ALL: [FeedbackMode; 4] = [
        FeedbackMode::None,
        FeedbackMode::Output,
        FeedbackMode::Error,
        FeedbackMode::ErrorOutput,
    ];

    pub fn feedback_count(self) -> usize {
        match self {
            FeedbackMode::None => 0,
            FeedbackMode::Output | FeedbackMode::Error => 1,
            FeedbackMode::ErrorOutput => 2,
        }
    }

    pub fn has_error(self) -> bool {
        matches!(self, FeedbackMode::Error | FeedbackMode::ErrorOutput)
    }

    pub fn has_output(self) -> bool {
        matches!(self, FeedbackMode::Output | FeedbackMode::ErrorOutput)
    }

    /// Position of the error feedback in the assembled input vector.
    pub fn error_index(self, m_external: usize) -> Option<usize> {
        self.has_error().then_some(m_external)
    }

    /// Position of the output feedback; it follows the error feedback when both are present.
    pub fn output_index(self, m_external: usize) -> Option<usize> {
        match self {
            FeedbackMode::Output => Some(m_external),
            FeedbackMode::ErrorOutput => Some(m_external + 1),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeedbackMode::None => "rpnn",
            FeedbackMode::Output => "drpnn",
            FeedbackMode::Error => "rpnn-ef",
            FeedbackMode::ErrorOutput => "rpnn-eof",
        }
    }
}

impl fmt::Display for FeedbackMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeedbackMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rpnn" | "none" => Ok(FeedbackMode::None),
            "drpnn" | "output" => Ok(FeedbackMode::Output),
            "rpnn-ef" | "error" => Ok(FeedbackMode::Error),
            "rpnn-eof" | "error-output" => Ok(FeedbackMode::ErrorOutput),
            other => Err(Error::InvalidInput(format!(
                "unknown feedback mode '{other}' (expected rpnn, drpnn, rpnn-ef or rpnn-eof)"
            ))),
        }
    }
}

/// Closed interval that initial weights are drawn from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitRange {
    pub lo: f64,
    pub hi: f64,
}

impl InitRange {
    pub const fn new(lo: f64, hi: f64) -> Self {
        InitRange { lo, hi }
    }

    pub fn contains(&self, w: f64) -> bool {
        w >= self.lo && w <= self.hi
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng.random_range(self.lo..=self.hi)
        }
    }
}

impl Default for InitRange {
    fn default() -> Self {
        InitRange::new(-0.5, 0.5)
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Appends the feedback signals required by `mode` to the external inputs:
/// error first, then output.
pub fn assemble_inputs(
    x: &[f64],
    prev_error: f64,
    prev_output: f64,
    mode: FeedbackMode,
) -> Vec<f64> {
    let mut z = Vec::with_capacity(x.len() + mode.feedback_count());
    assemble_inputs_into(x, prev_error, prev_output, mode, &mut z);
    z
}

pub(crate) fn assemble_inputs_into(
    x: &[f64],
    prev_error: f64,
    prev_output: f64,
    mode: FeedbackMode,
    z: &mut Vec<f64>,
) {
    z.clear();
    z.extend_from_slice(x);
    if mode.has_error() {
        z.push(prev_error);
    }
    if mode.has_output() {
        z.push(prev_output);
    }
}

/// One linear summing unit of a Pi-Sigma block.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaUnit {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl SigmaUnit {
    pub fn new(weights: Vec<f64>, bias: f64) -> Self {
        SigmaUnit { weights, bias }
    }

    fn random<R: Rng + ?Sized>(n_inputs: usize, init: InitRange, rng: &mut R) -> Self {
        let weights = (0..n_inputs).map(|_| init.sample(rng)).collect();
        let bias = init.sample(rng);
        SigmaUnit { weights, bias }
    }

    /// `Σ_g w_g z_g + bias`, summed in index order.
    #[inline]
    pub fn net_sum(&self, z: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (w, x) in self.weights.iter().zip(z) {
            acc += w * x;
        }
        acc + self.bias
    }
}

/// A Pi-Sigma block of order `i`: the product of `i` sigma units.
#[derive(Debug, Clone, PartialEq)]
pub struct PiSigmaBlock {
    units: Vec<SigmaUnit>,
}

impl PiSigmaBlock {
    pub fn new(units: Vec<SigmaUnit>) -> Result<Self> {
        if units.is_empty() {
            return Err(Error::InvalidInput(
                "a Pi-Sigma block needs at least one unit".into(),
            ));
        }
        Ok(PiSigmaBlock { units })
    }

    fn random<R: Rng + ?Sized>(
        order: usize,
        n_inputs: usize,
        init: InitRange,
        rng: &mut R,
    ) -> Self {
        let units = (0..order)
            .map(|_| SigmaUnit::random(n_inputs, init, rng))
            .collect();
        PiSigmaBlock { units }
    }

    pub fn order(&self) -> usize {
        self.units.len()
    }

    pub fn units(&self) -> &[SigmaUnit] {
        &self.units
    }

    pub fn units_mut(&mut self) -> &mut [SigmaUnit] {
        &mut self.units
    }
}

/// Intermediate values of one forward evaluation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ForwardTrace {
    /// Assembled inputs (external inputs followed by feedbacks).
    pub z: Vec<f64>,
    /// Net sums `h_j`, one list per block.
    pub h: Vec<Vec<f64>>,
    /// Block products `P_i`.
    pub p: Vec<f64>,
    /// Sum of block products, the sigmoid's argument.
    pub net: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RidgePolyNet {
    mode: FeedbackMode,
    m_external: usize,
    blocks: Vec<PiSigmaBlock>,
    frozen_count: usize,
}

impl RidgePolyNet {
    /// A fresh network holding a single order-1 block with weights drawn from `init`.
    pub fn new<R: Rng + ?Sized>(
        mode: FeedbackMode,
        m_external: usize,
        init: InitRange,
        rng: &mut R,
    ) -> Result<Self> {
        if m_external == 0 {
            return Err(Error::InvalidInput(
                "network needs at least one external input".into(),
            ));
        }
        let n_in = m_external + mode.feedback_count();
        Ok(RidgePolyNet {
            mode,
            m_external,
            blocks: vec![PiSigmaBlock::random(1, n_in, init, rng)],
            frozen_count: 0,
        })
    }

    /// Builds a network from explicit blocks, checking every structural invariant.
    pub fn from_blocks(
        mode: FeedbackMode,
        m_external: usize,
        blocks: Vec<PiSigmaBlock>,
        frozen_count: usize,
    ) -> Result<Self> {
        if m_external == 0 {
            return Err(Error::InvalidInput(
                "network needs at least one external input".into(),
            ));
        }
        if blocks.is_empty() {
            return Err(Error::InvalidInput(
                "network needs at least one block".into(),
            ));
        }
        if frozen_count >= blocks.len() {
            return Err(Error::InvalidInput(format!(
                "frozen_count {frozen_count} must be below the block count {}",
                blocks.len()
            )));
        }
        let n_in = m_external + mode.feedback_count();
        for (idx, block) in blocks.iter().enumerate() {
            if block.order() != idx + 1 {
                return Err(Error::InvalidInput(format!(
                    "block {idx} has order {} but must have order {}",
                    block.order(),
                    idx + 1
                )));
            }
            if let Some(unit) = block.units.iter().find(|u| u.weights.len() != n_in) {
                return Err(Error::InvalidInput(format!(
                    "block {idx} has a unit with {} weights, expected {n_in}",
                    unit.weights.len()
                )));
            }
        }
        Ok(RidgePolyNet {
            mode,
            m_external,
            blocks,
            frozen_count,
        })
    }

    /// Network of `k` blocks with every weight and bias set to `value`.
    pub fn constant(mode: FeedbackMode, m_external: usize, k: usize, value: f64) -> Result<Self> {
        let n_in = m_external + mode.feedback_count();
        let blocks = (1..=k)
            .map(|order| PiSigmaBlock {
                units: vec![SigmaUnit::new(vec![value; n_in], value); order],
            })
            .collect();
        Self::from_blocks(mode, m_external, blocks, 0)
    }

    pub fn mode(&self) -> FeedbackMode {
        self.mode
    }

    pub fn m_external(&self) -> usize {
        self.m_external
    }

    /// Dimension of the assembled input vector, `M + F`.
    pub fn n_inputs(&self) -> usize {
        self.m_external + self.mode.feedback_count()
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[PiSigmaBlock] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut [PiSigmaBlock] {
        &mut self.blocks
    }

    pub fn frozen_count(&self) -> usize {
        self.frozen_count
    }

    pub fn set_frozen_count(&mut self, frozen_count: usize) -> Result<()> {
        if frozen_count >= self.blocks.len() {
            return Err(Error::InvalidInput(format!(
                "frozen_count {frozen_count} must be below the block count {}",
                self.blocks.len()
            )));
        }
        self.frozen_count = frozen_count;
        Ok(())
    }

    pub fn total_weight_count(&self) -> usize {
        let per_unit = self.n_inputs() + 1;
        self.blocks.iter().map(|b| b.order() * per_unit).sum()
    }

    /// Number of weights (including biases) in the non-frozen blocks.
    pub fn trainable_weight_count(&self) -> usize {
        let per_unit = self.n_inputs() + 1;
        self.blocks[self.frozen_count..]
            .iter()
            .map(|b| b.order() * per_unit)
            .sum()
    }

    /// Current values of the trainable weights, laid out block by block, unit by unit, as `[w_1 .. w_{M+F}, bias]`.
    pub fn trainable_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.trainable_weight_count());
        for block in &self.blocks[self.frozen_count..] {
            for unit in &block.units {
                out.extend_from_slice(&unit.weights);
                out.push(unit.bias);
            }
        }
        out
    }

    /// Mutable access to one trainable weight by its flat index (see [`Self::trainable_params`]).
    pub fn trainable_param_mut(&mut self, index: usize) -> Option<&mut f64> {
        let per_unit = self.n_inputs() + 1;
        let mut unit_index = index / per_unit;
        let g = index % per_unit;
        for block in &mut self.blocks[self.frozen_count..] {
            if unit_index < block.units.len() {
                let unit = &mut block.units[unit_index];
                return Some(if g < unit.weights.len() {
                    &mut unit.weights[g]
                } else {
                    &mut unit.bias
                });
            }
            unit_index -= block.units.len();
        }
        None
    }

    /// Appends a block of the next order and freezes every existing block.
    pub fn add_block<R: Rng + ?Sized>(
        &mut self,
        max_blocks: usize,
        init: InitRange,
        rng: &mut R,
    ) -> Result<()> {
        let k = self.blocks.len();
        if k >= max_blocks {
            return Err(Error::GrowthExhausted { max_blocks });
        }
        let n_in = self.n_inputs();
        self.blocks
            .push(PiSigmaBlock::random(k + 1, n_in, init, rng));
        self.frozen_count = k;
        Ok(())
    }

    /// Assembles `[x, e(t-1)?, y(t-1)?]` after checking `x` has `M` entries.
    pub fn assemble_inputs(
        &self,
        x: &[f64],
        prev_error: f64,
        prev_output: f64,
    ) -> Result<Vec<f64>> {
        self.check_external(x)?;
        Ok(assemble_inputs(x, prev_error, prev_output, self.mode))
    }

    pub(crate) fn check_external(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.m_external {
            return Err(Error::InvalidInput(format!(
                "expected {} external inputs, got {}",
                self.m_external,
                x.len()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, z: &[f64]) -> Result<ForwardTrace> {
        let mut trace = ForwardTrace::default();
        self.forward_into(z, &mut trace)?;
        Ok(trace)
    }

    /// Forward pass reusing the buffers of `trace`. Units are multiplied and
    /// blocks summed in index order, so the result is reproducible bit-for-bit.
    pub fn forward_into(&self, z: &[f64], trace: &mut ForwardTrace) -> Result<()> {
        if z.len() != self.n_inputs() {
            return Err(Error::InvalidInput(format!(
                "expected an input vector of length {}, got {}",
                self.n_inputs(),
                z.len()
            )));
        }
        trace.z.clear();
        trace.z.extend_from_slice(z);
        trace.h.resize_with(self.blocks.len(), Vec::new);
        trace.p.clear();
        let mut net = 0.0;
        for (block, hs) in self.blocks.iter().zip(trace.h.iter_mut()) {
            hs.clear();
            let mut prod = 1.0;
            for unit in &block.units {
                let h = unit.net_sum(z);
                hs.push(h);
                prod *= h;
            }
            trace.p.push(prod);
            net += prod;
        }
        trace.net = net;
        trace.y = sigmoid(net);
        Ok(())
    }

    /// Serializes to the versioned flat text format.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{MODEL_MAGIC} mode={} m={} k={} frozen={}\n",
            self.mode,
            self.m_external,
            self.blocks.len(),
            self.frozen_count
        );
        for (b, block) in self.blocks.iter().enumerate() {
            for (u, unit) in block.units.iter().enumerate() {
                out.push_str(&format!("{b} {u} {:?}", unit.bias));
                for w in &unit.weights {
                    out.push_str(&format!(" {w:?}"));
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: String| Error::Parse {
            path: "<model>".into(),
            line,
            message: msg,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines
            .next()
            .ok_or_else(|| bad(1, "empty model file".into()))?;
        let mut fields = header.split_whitespace();
        if fields.next() != Some(MODEL_MAGIC) {
            return Err(bad(
                hline,
                format!("expected header starting with '{MODEL_MAGIC}'"),
            ));
        }
        let (mut mode, mut m, mut k, mut frozen) = (None, None, None, None);
        for field in fields {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| bad(hline, format!("malformed header field '{field}'")))?;
            let int = || {
                value
                    .parse::<usize>()
                    .map_err(|_| bad(hline, format!("'{key}' must be a non-negative integer")))
            };
            match key {
                "mode" => mode = Some(value.parse::<FeedbackMode>()?),
                "m" => m = Some(int()?),
                "k" => k = Some(int()?),
                "frozen" => frozen = Some(int()?),
                _ => return Err(bad(hline, format!("unknown header field '{key}'"))),
            }
        }
        let missing = |name: &str| bad(hline, format!("header is missing '{name}'"));
        let mode = mode.ok_or_else(|| missing("mode"))?;
        let m = m.ok_or_else(|| missing("m"))?;
        let k = k.ok_or_else(|| missing("k"))?;
        let frozen = frozen.ok_or_else(|| missing("frozen"))?;

        let mut blocks: Vec<Vec<SigmaUnit>> = (1..=k).map(Vec::with_capacity).collect();
        for (lno, line) in lines {
            let mut parts = line.split_whitespace();
            let mut next_usize = |what: &str| -> Result<usize> {
                parts
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| bad(lno, format!("missing or invalid {what}")))
            };
            let b = next_usize("block index")?;
            let u = next_usize("unit index")?;
            let values = parts
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| bad(lno, format!("invalid number '{s}'")))
                })
                .collect::<Result<Vec<f64>>>()?;
            let block = blocks
                .get_mut(b)
                .ok_or_else(|| bad(lno, format!("block index {b} out of range")))?;
            if u != block.len() {
                return Err(bad(
                    lno,
                    format!("expected unit {} of block {b}, found {u}", block.len()),
                ));
            }
            let (bias, weights) = values
                .split_first()
                .ok_or_else(|| bad(lno, "unit line has no bias".into()))?;
            block.push(SigmaUnit::new(weights.to_vec(), *bias));
        }
        let blocks = blocks
            .into_iter()
            .map(|units| PiSigmaBlock { units })
            .collect();
        Self::from_blocks(mode, m, blocks, frozen)
    }
}

const MODEL_MAGIC: &str = "rpnn-model-v1";
