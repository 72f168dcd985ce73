//! The recurrent sequence policy: a single gated memory cell (input, forget
//! and output gating around a tanh candidate) feeding a softmax over actions.
//! Inputs are observation ids, treated as one-hot vectors; the input matmul
//! reduces to a column gather, and its gradient to a column scatter.
//!
//! Training minimizes mean per-step cross-entropy between the softmax output
//! and the demonstrated action, with gradients propagated through time and an
//! adaptive-moment optimizer applying the updates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("dimension mismatch: {0}")]
    Dims(String),
    #[error("observation id {id} outside the policy alphabet ({limit})")]
    UnknownObservation { id: usize, limit: usize },
    #[error("action id {id} outside the policy alphabet ({limit})")]
    UnknownAction { id: usize, limit: usize },
    #[error("empty observation sequence")]
    EmptySequence,
    #[error("non-finite loss or gradient at update step {step}")]
    NonFinite { step: u64 },
    #[error("dataset syntax error at line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("checkpoint syntax error at line {line}: {msg}")]
    Checkpoint { line: usize, msg: String },
}

/// Dense row-major matrix; small enough here that nothing fancier pays off.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    fn uniform(rows: usize, cols: usize, scale: f64, rng: &mut ChaCha8Rng) -> Self {
        let data = (0..rows * cols).map(|_| rng.gen_range(-scale..scale)).collect();
        Matrix { rows, cols, data }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }
}

/// The full parameter bundle. `b`/`bo` are column vectors stored as matrices
/// so the optimizer and finite-difference probes can treat every tensor alike.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensors {
    /// Input weights, 4H x Z (gate blocks i, f, g, o).
    pub wx: Matrix,
    /// Recurrent weights, 4H x H.
    pub wh: Matrix,
    /// Cell bias, 4H x 1.
    pub b: Matrix,
    /// Output weights, A x H.
    pub wo: Matrix,
    /// Output bias, A x 1.
    pub bo: Matrix,
}

pub const TENSOR_NAMES: [&str; 5] = ["wx", "wh", "b", "wo", "bo"];

impl Tensors {
    fn zeros_like(&self) -> Tensors {
        Tensors {
            wx: Matrix::zeros(self.wx.rows, self.wx.cols),
            wh: Matrix::zeros(self.wh.rows, self.wh.cols),
            b: Matrix::zeros(self.b.rows, self.b.cols),
            wo: Matrix::zeros(self.wo.rows, self.wo.cols),
            bo: Matrix::zeros(self.bo.rows, self.bo.cols),
        }
    }

    pub fn list(&self) -> [&Matrix; 5] {
        [&self.wx, &self.wh, &self.b, &self.wo, &self.bo]
    }

    pub fn list_mut(&mut self) -> [&mut Matrix; 5] {
        [&mut self.wx, &mut self.wh, &mut self.b, &mut self.wo, &mut self.bo]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first: Tensors,
    pub second: Tensors,
    pub step: u64,
}

/// Optimizer constants: the canonical defaults of the adaptive-moment method.
pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct RecurrentPolicy {
    pub num_obs: usize,
    pub hidden: usize,
    pub num_actions: usize,
    pub params: Tensors,
    pub adam: AdamState,
}

const INIT_SCALE: f64 = 0.08;

impl RecurrentPolicy {
    pub fn new(num_obs: usize, hidden: usize, num_actions: usize, seed: u64) -> Self {
        assert!(num_obs > 0 && hidden > 0 && num_actions > 0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut b = Matrix::zeros(4 * hidden, 1);
        // Forget-gate block starts open, the usual stabilizer for gated cells.
        for j in hidden..2 * hidden {
            *b.at_mut(j, 0) = 1.0;
        }
        let params = Tensors {
            wx: Matrix::uniform(4 * hidden, num_obs, INIT_SCALE, &mut rng),
            wh: Matrix::uniform(4 * hidden, hidden, INIT_SCALE, &mut rng),
            b,
            wo: Matrix::uniform(num_actions, hidden, INIT_SCALE, &mut rng),
            bo: Matrix::zeros(num_actions, 1),
        };
        let adam = AdamState { first: params.zeros_like(), second: params.zeros_like(), step: 0 };
        RecurrentPolicy { num_obs, hidden, num_actions, params, adam }
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Per-step cache for backpropagation through time.
struct StepCache {
    obs: usize,
    gates: Vec<f64>,  // i, f, g, o after nonlinearity, length 4H
    c: Vec<f64>,      // cell state after the step
    tc: Vec<f64>,     // tanh(c)
    h_prev: Vec<f64>, // hidden entering the step
    c_prev: Vec<f64>,
    probs: Vec<f64>, // softmax output
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn step_forward(
    p: &Tensors,
    hidden: usize,
    num_actions: usize,
    obs: usize,
    h: &[f64],
    c: &[f64],
) -> StepCache {
    let h4 = 4 * hidden;
    let mut pre = vec![0.0; h4];
    for j in 0..h4 {
        let mut acc = p.wx.at(j, obs) + p.b.at(j, 0);
        let row = &p.wh.data[j * hidden..(j + 1) * hidden];
        for (w, hv) in row.iter().zip(h) {
            acc += w * hv;
        }
        pre[j] = acc;
    }
    let mut gates = vec![0.0; h4];
    for j in 0..hidden {
        gates[j] = sigmoid(pre[j]); // input gate
        gates[hidden + j] = sigmoid(pre[hidden + j]); // forget gate
        gates[2 * hidden + j] = pre[2 * hidden + j].tanh(); // candidate
        gates[3 * hidden + j] = sigmoid(pre[3 * hidden + j]); // output gate
    }
    let mut c_new = vec![0.0; hidden];
    let mut tc = vec![0.0; hidden];
    let mut h_new = vec![0.0; hidden];
    for j in 0..hidden {
        c_new[j] = gates[hidden + j] * c[j] + gates[j] * gates[2 * hidden + j];
        tc[j] = c_new[j].tanh();
        h_new[j] = gates[3 * hidden + j] * tc[j];
    }
    let mut logits = vec![0.0; num_actions];
    for a in 0..num_actions {
        let mut acc = p.bo.at(a, 0);
        let row = &p.wo.data[a * hidden..(a + 1) * hidden];
        for (w, hv) in row.iter().zip(&h_new) {
            acc += w * hv;
        }
        logits[a] = acc;
    }
    let probs = softmax(&logits);
    StepCache { obs, gates, c: c_new, tc, h_prev: h.to_vec(), c_prev: c.to_vec(), probs }
}

/// Deterministic forward pass: the action distribution after consuming the
/// observation sequence. The hidden state starts at zero.
pub fn policy_forward(p: &RecurrentPolicy, obs: &[usize]) -> Result<Vec<f64>, LearnError> {
    if obs.is_empty() {
        return Err(LearnError::EmptySequence);
    }
    let mut h = vec![0.0; p.hidden];
    let mut c = vec![0.0; p.hidden];
    let mut last = None;
    for &z in obs {
        if z >= p.num_obs {
            return Err(LearnError::UnknownObservation { id: z, limit: p.num_obs });
        }
        let cache = step_forward(&p.params, p.hidden, p.num_actions, z, &h, &c);
        h = cache_h(&cache);
        c.copy_from_slice(&cache.c);
        last = Some(cache.probs);
    }
    Ok(last.unwrap())
}

fn cache_h(cache: &StepCache) -> Vec<f64> {
    let hidden = cache.c.len();
    (0..hidden).map(|j| cache.gates[3 * hidden + j] * cache.tc[j]).collect()
}

/// Runs one labeled sequence, adding `scale`-weighted gradients into `grads`
/// when provided. Returns the summed cross-entropy over the labeled steps.
pub(crate) fn sequence_pass(
    p: &RecurrentPolicy,
    obs: &[usize],
    actions: &[usize],
    grads: Option<&mut Tensors>,
    scale: f64,
) -> Result<f64, LearnError> {
    let hidden = p.hidden;
    let steps = actions.len();
    if steps == 0 {
        return Ok(0.0);
    }
    if obs.len() < steps {
        return Err(LearnError::Dims(format!(
            "{} observations cannot carry {} action labels",
            obs.len(),
            steps
        )));
    }
    let mut caches: Vec<StepCache> = Vec::with_capacity(steps);
    let mut h = vec![0.0; hidden];
    let mut c = vec![0.0; hidden];
    let mut loss = 0.0;
    for t in 0..steps {
        let z = obs[t];
        if z >= p.num_obs {
            return Err(LearnError::UnknownObservation { id: z, limit: p.num_obs });
        }
        let a = actions[t];
        if a >= p.num_actions {
            return Err(LearnError::UnknownAction { id: a, limit: p.num_actions });
        }
        let cache = step_forward(&p.params, hidden, p.num_actions, z, &h, &c);
        h = cache_h(&cache);
        c = cache.c.clone();
        loss += -(cache.probs[a].max(1e-300)).ln();
        caches.push(cache);
    }
    let Some(grads) = grads else {
        return Ok(loss);
    };

    let h4 = 4 * hidden;
    let mut dh = vec![0.0; hidden];
    let mut dc = vec![0.0; hidden];
    for t in (0..steps).rev() {
        let cache = &caches[t];
        let h_t = cache_h(cache);
        // Softmax + cross-entropy gradient at this step.
        let mut dlogits = cache.probs.clone();
        dlogits[actions[t]] -= 1.0;
        for v in &mut dlogits {
            *v *= scale;
        }
        for a in 0..p.num_actions {
            let da = dlogits[a];
            if da != 0.0 {
                for j in 0..hidden {
                    *grads.wo.at_mut(a, j) += da * h_t[j];
                    dh[j] += p.params.wo.at(a, j) * da;
                }
                *grads.bo.at_mut(a, 0) += da;
            }
        }
        // Through the cell.
        let mut dpre = vec![0.0; h4];
        for j in 0..hidden {
            let i = cache.gates[j];
            let f = cache.gates[hidden + j];
            let g = cache.gates[2 * hidden + j];
            let o = cache.gates[3 * hidden + j];
            let tc = cache.tc[j];
            let d_o = dh[j] * tc;
            let d_c = dc[j] + dh[j] * o * (1.0 - tc * tc);
            let d_i = d_c * g;
            let d_g = d_c * i;
            let d_f = d_c * cache.c_prev[j];
            dpre[j] = d_i * i * (1.0 - i);
            dpre[hidden + j] = d_f * f * (1.0 - f);
            dpre[2 * hidden + j] = d_g * (1.0 - g * g);
            dpre[3 * hidden + j] = d_o * o * (1.0 - o);
            dc[j] = d_c * f;
        }
        dh.fill(0.0);
        for j in 0..h4 {
            let dj = dpre[j];
            if dj == 0.0 {
                continue;
            }
            *grads.wx.at_mut(j, cache.obs) += dj;
            *grads.b.at_mut(j, 0) += dj;
            let wh_row = &p.params.wh.data[j * hidden..(j + 1) * hidden];
            for l in 0..hidden {
                *grads.wh.at_mut(j, l) += dj * cache.h_prev[l];
                dh[l] += wh_row[l] * dj;
            }
        }
    }
    Ok(loss)
}

/// Accumulated-gradient container plus the loss bookkeeping for one batch.
pub(crate) struct BatchGrads {
    pub grads: Tensors,
    pub loss_sum: f64,
    pub label_count: usize,
}

pub(crate) fn batch_pass(
    p: &RecurrentPolicy,
    batch: &[(&[usize], &[usize])],
) -> Result<BatchGrads, LearnError> {
    let total_labels: usize = batch.iter().map(|(_, a)| a.len()).sum();
    let mut grads = p.params.zeros_like();
    let mut loss_sum = 0.0;
    if total_labels == 0 {
        return Ok(BatchGrads { grads, loss_sum, label_count: 0 });
    }
    let scale = 1.0 / total_labels as f64;
    for (obs, actions) in batch {
        loss_sum += sequence_pass(p, obs, actions, Some(&mut grads), scale)?;
    }
    Ok(BatchGrads { grads, loss_sum, label_count: total_labels })
}

/// Clips the global gradient norm in place; returns the pre-clip norm.
pub(crate) fn clip_gradients(grads: &mut Tensors, clip: f64) -> f64 {
    let mut sq = 0.0;
    for t in grads.list() {
        for v in &t.data {
            sq += v * v;
        }
    }
    let norm = sq.sqrt();
    if clip > 0.0 && norm > clip {
        let factor = clip / norm;
        for t in grads.list_mut() {
            for v in &mut t.data {
                *v *= factor;
            }
        }
    }
    norm
}

/// One adaptive-moment update from accumulated gradients.
pub(crate) fn adam_step(p: &mut RecurrentPolicy, grads: &Tensors, lr: f64) {
    p.adam.step += 1;
    let t = p.adam.step;
    let bc1 = 1.0 - ADAM_BETA1.powi(t as i32);
    let bc2 = 1.0 - ADAM_BETA2.powi(t as i32);
    let params = p.params.list_mut();
    let first = p.adam.first.list_mut();
    let second = p.adam.second.list_mut();
    let gs = grads.list();
    for (((param, m), v), g) in params.into_iter().zip(first).zip(second).zip(gs) {
        for idx in 0..param.data.len() {
            let grad = g.data[idx];
            m.data[idx] = ADAM_BETA1 * m.data[idx] + (1.0 - ADAM_BETA1) * grad;
            v.data[idx] = ADAM_BETA2 * v.data[idx] + (1.0 - ADAM_BETA2) * grad * grad;
            let mhat = m.data[idx] / bc1;
            let vhat = v.data[idx] / bc2;
            param.data[idx] -= lr * mhat / (vhat.sqrt() + ADAM_EPS);
        }
    }
}

// ---------------------------------------------------------------------------
// Checkpoint format
// ---------------------------------------------------------------------------

/// Versioned text dump: dims, optimizer step, then each tensor (parameters
/// and both moment accumulators) with a shape header.
pub fn policy_to_text(p: &RecurrentPolicy) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    writeln!(out, "policy-ckpt v1").unwrap();
    writeln!(out, "dims obs {} hidden {} act {}", p.num_obs, p.hidden, p.num_actions).unwrap();
    writeln!(out, "step {}", p.adam.step).unwrap();
    let mut dump = |prefix: &str, tensors: &Tensors| {
        for (name, t) in TENSOR_NAMES.iter().zip(tensors.list()) {
            writeln!(out, "tensor {prefix}{name} {} {}", t.rows, t.cols).unwrap();
            for r in 0..t.rows {
                let row: Vec<String> =
                    (0..t.cols).map(|c| format!("{}", t.at(r, c))).collect();
                writeln!(out, "{}", row.join(" ")).unwrap();
            }
        }
    };
    dump("", &p.params);
    dump("m_", &p.adam.first);
    dump("v_", &p.adam.second);
    out
}

pub fn policy_from_text(text: &str) -> Result<RecurrentPolicy, LearnError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let bad = |line: usize, msg: &str| LearnError::Checkpoint { line, msg: msg.into() };
    let (l1, header) = lines.next().ok_or_else(|| bad(1, "empty checkpoint"))?;
    if header != "policy-ckpt v1" {
        return Err(bad(l1, "expected `policy-ckpt v1`"));
    }
    let (l2, dims) = lines.next().ok_or_else(|| bad(l1, "missing dims"))?;
    let d: Vec<&str> = dims.split_whitespace().collect();
    let (num_obs, hidden, num_actions) = match d.as_slice() {
        ["dims", "obs", z, "hidden", h, "act", a] => (
            z.parse().map_err(|_| bad(l2, "bad obs dim"))?,
            h.parse().map_err(|_| bad(l2, "bad hidden dim"))?,
            a.parse().map_err(|_| bad(l2, "bad act dim"))?,
        ),
        _ => return Err(bad(l2, "expected `dims obs <Z> hidden <H> act <A>`")),
    };
    let (l3, step_line) = lines.next().ok_or_else(|| bad(l2, "missing step"))?;
    let step: u64 = step_line
        .strip_prefix("step ")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| bad(l3, "expected `step <t>`"))?;

    let mut policy = RecurrentPolicy::new(num_obs, hidden, num_actions, 0);
    policy.adam.step = step;
    let mut pending: Vec<(String, Matrix)> = Vec::new();
    let mut current: Option<(String, usize, usize, Vec<f64>)> = None;
    for (lno, line) in lines {
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("tensor ") {
            if let Some((name, rows, cols, data)) = current.take() {
                if data.len() != rows * cols {
                    return Err(bad(lno, &format!("tensor {name} has wrong element count")));
                }
                pending.push((name, Matrix { rows, cols, data }));
            }
            let parts: Vec<&str> = rest.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(bad(lno, "expected `tensor <name> <rows> <cols>`"));
            }
            let rows = parts[1].parse().map_err(|_| bad(lno, "bad row count"))?;
            let cols = parts[2].parse().map_err(|_| bad(lno, "bad col count"))?;
            current = Some((parts[0].to_string(), rows, cols, Vec::with_capacity(rows * cols)));
        } else {
            let Some((_, _, _, data)) = current.as_mut() else {
                return Err(bad(lno, "values outside a tensor block"));
            };
            for tok in line.split_whitespace() {
                data.push(tok.parse().map_err(|_| bad(lno, "bad value"))?);
            }
        }
    }
    if let Some((name, rows, cols, data)) = current.take() {
        if data.len() != rows * cols {
            return Err(LearnError::Checkpoint {
                line: 0,
                msg: format!("tensor {name} has wrong element count"),
            });
        }
        pending.push((name, Matrix { rows, cols, data }));
    }
    for (name, matrix) in pending {
        let (prefix, base) = if let Some(b) = name.strip_prefix("m_") {
            ("m", b)
        } else if let Some(b) = name.strip_prefix("v_") {
            ("v", b)
        } else {
            ("p", name.as_str())
        };
        let bundle = match prefix {
            "m" => &mut policy.adam.first,
            "v" => &mut policy.adam.second,
            _ => &mut policy.params,
        };
        let slot = match base {
            "wx" => &mut bundle.wx,
            "wh" => &mut bundle.wh,
            "b" => &mut bundle.b,
            "wo" => &mut bundle.wo,
            "bo" => &mut bundle.bo,
            other => {
                return Err(LearnError::Checkpoint {
                    line: 0,
                    msg: format!("unknown tensor `{other}`"),
                })
            }
        };
        if slot.rows != matrix.rows || slot.cols != matrix.cols {
            return Err(LearnError::Checkpoint {
                line: 0,
                msg: format!("tensor `{name}` has shape {}x{}", matrix.rows, matrix.cols),
            });
        }
        *slot = matrix;
    }
    Ok(policy)
}
