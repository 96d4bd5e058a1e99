//! Feed-forward compression of sparse word representations.
//!
//! Two small networks, both trained with Adam on shuffled mini-batches:
//!
//! * an **encoder** that maps a one-hot term to a softmax distribution over
//!   the vocabulary through a ReLU hidden layer, trained to minimize the
//!   cosine distance to the term's sparse relevance representation; and
//! * an **autoencoder** that reconstructs the sparse row itself under MSE.
//!
//! In both cases the hidden activation is the learned word embedding. All
//! gradients are analytic (and validated against central finite differences
//! by [`gradient_check`]); training is single-threaded and bit-reproducible
//! for a given seed.

use serde::{Deserialize, Serialize};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embedding::{EmbeddingKind, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::linalg::{matmul_abt_acc, matmul_acc, transpose};
use crate::reprs::WordReprMatrix;
use crate::sparse::SparseVector;

/// Shared training hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden_dim: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden_dim: 300,
            learning_rate: 1e-3,
            batch_size: 64,
            epochs: 30,
            seed: 42,
        }
    }
}

/// Adam moment parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        AdamConfig {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self::with_learning_rate(1e-3)
    }
}

/// First and second moment estimates for one parameter tensor.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        AdamState {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// One Adam update with bias correction:
/// `m_hat = m / (1 - beta1^t)`, `v_hat = v / (1 - beta2^t)`,
/// `param -= lr * m_hat / (sqrt(v_hat) + eps)`.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, config: &AdamConfig) {
    assert_eq!(params.len(), grads.len());
    assert_eq!(params.len(), state.m.len());
    state.t += 1;
    let b1 = config.beta1;
    let b2 = config.beta2;
    let m_corr = 1.0 - b1.powi(state.t as i32);
    let v_corr = 1.0 - b2.powi(state.t as i32);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
        let m_hat = state.m[i] / m_corr;
        let v_hat = state.v[i] / v_corr;
        params[i] -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
    }
}

fn init_uniform(rng: &mut ChaCha8Rng, len: usize, fan_in: usize, fan_out: usize) -> Vec<f64> {
    let s = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..len).map(|_| (2.0 * rng.gen::<f64>() - 1.0) * s).collect()
}

/// One-hot-input encoder: `hidden = relu(W1[term])`,
/// `output = softmax(hidden * W2 + bias)`.
#[derive(Debug, Clone)]
pub struct EncoderModel {
    pub n: usize,
    pub d: usize,
    /// `n x d`; row `j` is the pre-activation embedding of term `j`.
    pub w1: Vec<f64>,
    /// `d x n`.
    pub w2: Vec<f64>,
    /// `n`.
    pub bias: Vec<f64>,
}

impl EncoderModel {
    pub fn init(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Self {
        EncoderModel {
            n,
            d,
            w1: init_uniform(rng, n * d, n, d),
            w2: init_uniform(rng, d * n, d, n),
            bias: vec![0.0; n],
        }
    }

    /// Hidden activation of one term (its embedding, per the model).
    pub fn hidden(&self, term: u32) -> Vec<f64> {
        let row = &self.w1[term as usize * self.d..(term as usize + 1) * self.d];
        row.iter().map(|&x| x.max(0.0)).collect()
    }

    /// Full forward pass: `(hidden, softmax output)`.
    pub fn forward(&self, term: u32) -> (Vec<f64>, Vec<f64>) {
        let hidden = self.hidden(term);
        let mut logits = self.bias.clone();
        for (a, &h) in hidden.iter().enumerate() {
            if h == 0.0 {
                continue;
            }
            let w_row = &self.w2[a * self.n..(a + 1) * self.n];
            for (l, &w) in logits.iter_mut().zip(w_row) {
                *l += h * w;
            }
        }
        softmax_in_place(&mut logits);
        (hidden, logits)
    }

    /// Embedding matrix: one ReLU hidden row per vocabulary term.
    pub fn embedding(&self) -> EmbeddingMatrix {
        let data: Vec<f64> = self.w1.iter().map(|&x| x.max(0.0)).collect();
        EmbeddingMatrix::from_data(EmbeddingKind::WordEmb, self.n, self.d, data)
            .expect("model dimensions are consistent")
    }
}

/// Numerically stable softmax (max subtraction) in place.
pub fn softmax_in_place(logits: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for l in logits.iter_mut() {
        *l = (*l - max).exp();
        sum += *l;
    }
    for l in logits.iter_mut() {
        *l /= sum;
    }
}

/// Cosine distance `1 - (a . b) / (|a| |b|)` between a dense prediction and
/// a sparse target. A zero-norm target is an error.
pub fn cosine_distance(pred: &[f64], target: &SparseVector) -> Result<f64> {
    let pnorm = pred.iter().map(|v| v * v).sum::<f64>().sqrt();
    let tnorm = target.norm();
    if pnorm == 0.0 {
        return Err(Error::ZeroVector("prediction".into()));
    }
    if tnorm == 0.0 {
        return Err(Error::ZeroVector("target".into()));
    }
    Ok(1.0 - target.dot_dense(pred) / (pnorm * tnorm))
}

/// Gradients of the cosine loss for a single encoder sample. Only the `W1`
/// row selected by the one-hot input carries gradient; all other rows are
/// untouched by construction.
#[derive(Debug, Clone)]
pub struct EncoderGradients {
    pub term: u32,
    /// `d` entries for `W1[term]`.
    pub w1_row: Vec<f64>,
    /// `d x n`.
    pub w2: Vec<f64>,
    /// `n`.
    pub bias: Vec<f64>,
}

/// Loss and analytic gradients for one `(term, target)` pair.
pub fn encoder_backward(
    model: &EncoderModel,
    term: u32,
    target: &SparseVector,
) -> Result<(f64, EncoderGradients)> {
    let mut grads = EncoderGrads::new(model.n, model.d);
    let mut batch = EncoderBatch::new(model.n, model.d, 1);
    let loss = encoder_batch_backward(model, &[term], |_| target, &mut batch, &mut grads)?;
    let row = term as usize * model.d;
    Ok((
        loss,
        EncoderGradients {
            term,
            w1_row: grads.w1[row..row + model.d].to_vec(),
            w2: grads.w2,
            bias: grads.bias,
        },
    ))
}

/// Dense gradient accumulators for the encoder.
struct EncoderGrads {
    w1: Vec<f64>,
    w2: Vec<f64>,
    bias: Vec<f64>,
}

impl EncoderGrads {
    fn new(n: usize, d: usize) -> Self {
        EncoderGrads {
            w1: vec![0.0; n * d],
            w2: vec![0.0; d * n],
            bias: vec![0.0; n],
        }
    }
}

/// Reusable batch scratch buffers (biggest is `batch x n`).
struct EncoderBatch {
    h: Vec<f64>,
    z: Vec<f64>,
    dh: Vec<f64>,
    n: usize,
    d: usize,
}

impl EncoderBatch {
    fn new(n: usize, d: usize, max_batch: usize) -> Self {
        EncoderBatch {
            h: vec![0.0; max_batch * d],
            z: vec![0.0; max_batch * n],
            dh: vec![0.0; max_batch * d],
            n,
            d,
        }
    }
}

/// Forward + backward over one batch; adds mean-gradient contributions into
/// `grads` and returns the summed per-sample loss.
fn encoder_batch_backward<'a>(
    model: &EncoderModel,
    terms: &[u32],
    target_of: impl Fn(u32) -> &'a SparseVector,
    batch: &mut EncoderBatch,
    grads: &mut EncoderGrads,
) -> Result<f64> {
    let (n, d) = (batch.n, batch.d);
    let bl = terms.len();
    let h = &mut batch.h[..bl * d];
    let z = &mut batch.z[..bl * n];
    let dh = &mut batch.dh[..bl * d];

    // Hidden activations and logits.
    for (i, &term) in terms.iter().enumerate() {
        let w1_row = &model.w1[term as usize * d..(term as usize + 1) * d];
        for (hv, &w) in h[i * d..(i + 1) * d].iter_mut().zip(w1_row) {
            *hv = w.max(0.0);
        }
        z[i * n..(i + 1) * n].copy_from_slice(&model.bias);
    }
    matmul_acc(h, bl, d, &model.w2, n, z);

    // Per-row softmax, loss, and in-place conversion of `z` into the
    // gradient of the batch-mean loss w.r.t. the logits.
    let inv_bl = 1.0 / bl as f64;
    let mut loss_sum = 0.0;
    for (i, &term) in terms.iter().enumerate() {
        let row = &mut z[i * n..(i + 1) * n];
        softmax_in_place(row);
        let target = target_of(term);
        let tnorm = target.norm();
        if tnorm == 0.0 {
            return Err(Error::ZeroVector(format!("target for term {term}")));
        }
        let pnorm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        let dot = target.dot_dense(row);
        let s = dot / (pnorm * tnorm);
        loss_sum += 1.0 - s;
        // dL/dz_j = p_j * (s * p_j / |p|^2 - t_j / (|p| |t|))
        let sparse_scale = 1.0 / (pnorm * tnorm);
        let adjust: Vec<(usize, f64)> = target
            .iter()
            .map(|(j, tv)| (j as usize, row[j as usize] * tv * sparse_scale))
            .collect();
        let dense_scale = s / (pnorm * pnorm);
        for p in row.iter_mut() {
            *p = dense_scale * *p * *p;
        }
        for (j, a) in adjust {
            row[j] -= a;
        }
        for v in row.iter_mut() {
            *v *= inv_bl;
        }
    }

    // Parameter gradients.
    let ht = transpose(h, bl, d);
    matmul_acc(&ht, d, bl, z, n, &mut grads.w2);
    for i in 0..bl {
        for (gb, &dz) in grads.bias.iter_mut().zip(&z[i * n..(i + 1) * n]) {
            *gb += dz;
        }
    }
    dh.fill(0.0);
    matmul_abt_acc(z, bl, n, &model.w2, d, dh);
    for (i, &term) in terms.iter().enumerate() {
        let row = term as usize * d;
        for a in 0..d {
            if model.w1[row + a] > 0.0 {
                grads.w1[row + a] += dh[i * d + a];
            }
        }
    }
    Ok(loss_sum)
}

/// Encoder training output.
#[derive(Debug, Clone)]
pub struct TrainedEncoder {
    pub model: EncoderModel,
    pub embedding: EmbeddingMatrix,
    pub loss_history: Vec<f64>,
}

/// Trains the encoder on every nonzero representation row. Rows whose
/// representation is zero are excluded from training but still receive an
/// embedding (their ReLU hidden row at the final weights).
pub fn train_encoder(reprs: &WordReprMatrix, config: &TrainConfig) -> Result<TrainedEncoder> {
    validate_config(config)?;
    let n = reprs.n_rows();
    let trainable = trainable_rows(reprs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = EncoderModel::init(n, config.hidden_dim, &mut rng);
    let adam = AdamConfig::with_learning_rate(config.learning_rate);
    let mut st_w1 = AdamState::new(model.w1.len());
    let mut st_w2 = AdamState::new(model.w2.len());
    let mut st_bias = AdamState::new(model.bias.len());
    let mut grads = EncoderGrads::new(n, config.hidden_dim);
    let mut batch = EncoderBatch::new(n, config.hidden_dim, config.batch_size);
    let mut order = trainable;
    let mut loss_history = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        shuffle(&mut order, &mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.batch_size) {
            epoch_loss += encoder_batch_backward(
                &model,
                chunk,
                |term| reprs.row(term as usize),
                &mut batch,
                &mut grads,
            )?;
            adam_step(&mut model.w1, &grads.w1, &mut st_w1, &adam);
            adam_step(&mut model.w2, &grads.w2, &mut st_w2, &adam);
            adam_step(&mut model.bias, &grads.bias, &mut st_bias, &adam);
            for &term in chunk {
                let row = term as usize * config.hidden_dim;
                grads.w1[row..row + config.hidden_dim].fill(0.0);
            }
            grads.w2.fill(0.0);
            grads.bias.fill(0.0);
        }
        loss_history.push(epoch_loss / order.len() as f64);
    }
    let embedding = model.embedding();
    Ok(TrainedEncoder {
        model,
        embedding,
        loss_history,
    })
}

/// Linear autoencoder with a ReLU bottleneck:
/// `hidden = relu(x * W1 + b1)`, `output = hidden * W2 + b2`.
#[derive(Debug, Clone)]
pub struct AutoencoderModel {
    pub n: usize,
    pub d: usize,
    /// `n x d`.
    pub w1: Vec<f64>,
    /// `d`.
    pub b1: Vec<f64>,
    /// `d x n`.
    pub w2: Vec<f64>,
    /// `n`.
    pub b2: Vec<f64>,
}

impl AutoencoderModel {
    pub fn init(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Self {
        AutoencoderModel {
            n,
            d,
            w1: init_uniform(rng, n * d, n, d),
            b1: vec![0.0; d],
            w2: init_uniform(rng, d * n, d, n),
            b2: vec![0.0; n],
        }
    }

    /// Hidden pre-activation `x * W1 + b1`.
    fn pre_hidden(&self, x: &SparseVector) -> Vec<f64> {
        let mut pre = self.b1.clone();
        for (i, xv) in x.iter() {
            let w_row = &self.w1[i as usize * self.d..(i as usize + 1) * self.d];
            for (p, &w) in pre.iter_mut().zip(w_row) {
                *p += xv * w;
            }
        }
        pre
    }

    /// Hidden activation of one sparse row (its embedding, per the model).
    /// An all-zero input yields `relu(b1)` regardless of the data.
    pub fn hidden(&self, x: &SparseVector) -> Vec<f64> {
        self.pre_hidden(x).iter().map(|&p| p.max(0.0)).collect()
    }

    /// Full forward pass: `(hidden, reconstruction)`.
    pub fn forward(&self, x: &SparseVector) -> (Vec<f64>, Vec<f64>) {
        let hidden = self.hidden(x);
        let mut y = self.b2.clone();
        for (a, &h) in hidden.iter().enumerate() {
            if h == 0.0 {
                continue;
            }
            let w_row = &self.w2[a * self.n..(a + 1) * self.n];
            for (yv, &w) in y.iter_mut().zip(w_row) {
                *yv += h * w;
            }
        }
        (hidden, y)
    }

    /// Embedding matrix: the hidden activation of every representation row.
    pub fn embedding(&self, reprs: &WordReprMatrix) -> EmbeddingMatrix {
        let mut data = Vec::with_capacity(reprs.n_rows() * self.d);
        for row in &reprs.rows {
            data.extend(self.hidden(row));
        }
        EmbeddingMatrix::from_data(EmbeddingKind::WordEmbAe, reprs.n_rows(), self.d, data)
            .expect("model dimensions are consistent")
    }
}

/// Mean squared error between a dense reconstruction and a sparse target,
/// averaged over all `n` components.
pub fn mse_loss(pred: &[f64], target: &SparseVector) -> f64 {
    let mut acc = 0.0;
    let mut it = target.iter().peekable();
    for (j, &p) in pred.iter().enumerate() {
        let t = match it.peek() {
            Some(&(ti, tv)) if ti as usize == j => {
                it.next();
                tv
            }
            _ => 0.0,
        };
        let r = p - t;
        acc += r * r;
    }
    acc / pred.len() as f64
}

/// Analytic gradients for one autoencoder sample.
#[derive(Debug, Clone)]
pub struct AutoencoderGradients {
    /// `n x d` (nonzero only on the input's support rows).
    pub w1: Vec<f64>,
    /// `d`.
    pub b1: Vec<f64>,
    /// `d x n`.
    pub w2: Vec<f64>,
    /// `n`.
    pub b2: Vec<f64>,
}

/// Loss and analytic gradients for one sparse row.
pub fn autoencoder_backward(
    model: &AutoencoderModel,
    x: &SparseVector,
) -> (f64, AutoencoderGradients) {
    let mut grads = AeGrads::new(model.n, model.d);
    let mut batch = AeBatch::new(model.n, model.d, 1);
    let loss = ae_batch_backward(model, &[0], |_| x, &mut batch, &mut grads);
    (
        loss,
        AutoencoderGradients {
            w1: grads.w1,
            b1: grads.b1,
            w2: grads.w2,
            b2: grads.b2,
        },
    )
}

struct AeGrads {
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
}

impl AeGrads {
    fn new(n: usize, d: usize) -> Self {
        AeGrads {
            w1: vec![0.0; n * d],
            b1: vec![0.0; d],
            w2: vec![0.0; d * n],
            b2: vec![0.0; n],
        }
    }

    fn zero(&mut self) {
        self.w1.fill(0.0);
        self.b1.fill(0.0);
        self.w2.fill(0.0);
        self.b2.fill(0.0);
    }
}

struct AeBatch {
    pre: Vec<f64>,
    h: Vec<f64>,
    y: Vec<f64>,
    dh: Vec<f64>,
    n: usize,
    d: usize,
}

impl AeBatch {
    fn new(n: usize, d: usize, max_batch: usize) -> Self {
        AeBatch {
            pre: vec![0.0; max_batch * d],
            h: vec![0.0; max_batch * d],
            y: vec![0.0; max_batch * n],
            dh: vec![0.0; max_batch * d],
            n,
            d,
        }
    }
}

/// Forward + backward over one autoencoder batch; adds mean-gradient
/// contributions into `grads` and returns the summed per-sample loss.
fn ae_batch_backward<'a>(
    model: &AutoencoderModel,
    rows: &[u32],
    input_of: impl Fn(u32) -> &'a SparseVector,
    batch: &mut AeBatch,
    grads: &mut AeGrads,
) -> f64 {
    let (n, d) = (batch.n, batch.d);
    let bl = rows.len();
    let pre = &mut batch.pre[..bl * d];
    let h = &mut batch.h[..bl * d];
    let y = &mut batch.y[..bl * n];
    let dh = &mut batch.dh[..bl * d];

    for (i, &r) in rows.iter().enumerate() {
        let x = input_of(r);
        let p = &mut pre[i * d..(i + 1) * d];
        p.copy_from_slice(&model.b1);
        for (idx, xv) in x.iter() {
            let w_row = &model.w1[idx as usize * d..(idx as usize + 1) * d];
            for (pv, &w) in p.iter_mut().zip(w_row) {
                *pv += xv * w;
            }
        }
        for (hv, &pv) in h[i * d..(i + 1) * d].iter_mut().zip(p.iter()) {
            *hv = pv.max(0.0);
        }
        y[i * n..(i + 1) * n].copy_from_slice(&model.b2);
    }
    matmul_acc(h, bl, d, &model.w2, n, y);

    // Residuals, loss, and conversion of `y` into dL/d(output).
    let mut loss_sum = 0.0;
    for (i, &r) in rows.iter().enumerate() {
        let x = input_of(r);
        let row = &mut y[i * n..(i + 1) * n];
        for (j, xv) in x.iter() {
            row[j as usize] -= xv;
        }
        loss_sum += row.iter().map(|v| v * v).sum::<f64>() / n as f64;
    }
    let scale = 2.0 / (n as f64 * bl as f64);
    for v in y.iter_mut() {
        *v *= scale;
    }

    let ht = transpose(h, bl, d);
    matmul_acc(&ht, d, bl, y, n, &mut grads.w2);
    for i in 0..bl {
        for (gb, &dy) in grads.b2.iter_mut().zip(&y[i * n..(i + 1) * n]) {
            *gb += dy;
        }
    }
    dh.fill(0.0);
    matmul_abt_acc(y, bl, n, &model.w2, d, dh);
    for (i, &r) in rows.iter().enumerate() {
        let x = input_of(r);
        let dpre = &mut dh[i * d..(i + 1) * d];
        for (a, dp) in dpre.iter_mut().enumerate() {
            if pre[i * d + a] <= 0.0 {
                *dp = 0.0;
            }
        }
        for (gb, &dp) in grads.b1.iter_mut().zip(dpre.iter()) {
            *gb += dp;
        }
        for (idx, xv) in x.iter() {
            let g_row = &mut grads.w1[idx as usize * d..(idx as usize + 1) * d];
            for (gv, &dp) in g_row.iter_mut().zip(dpre.iter()) {
                *gv += xv * dp;
            }
        }
    }
    loss_sum
}

/// Autoencoder training output.
#[derive(Debug, Clone)]
pub struct TrainedAutoencoder {
    pub model: AutoencoderModel,
    pub embedding: EmbeddingMatrix,
    pub loss_history: Vec<f64>,
}

/// Trains the autoencoder on every nonzero representation row. Zero rows are
/// excluded from training but still receive an embedding (`relu(b1)`).
pub fn train_autoencoder(reprs: &WordReprMatrix, config: &TrainConfig) -> Result<TrainedAutoencoder> {
    validate_config(config)?;
    let n = reprs.n_rows();
    let trainable = trainable_rows(reprs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = AutoencoderModel::init(n, config.hidden_dim, &mut rng);
    let adam = AdamConfig::with_learning_rate(config.learning_rate);
    let mut st_w1 = AdamState::new(model.w1.len());
    let mut st_b1 = AdamState::new(model.b1.len());
    let mut st_w2 = AdamState::new(model.w2.len());
    let mut st_b2 = AdamState::new(model.b2.len());
    let mut grads = AeGrads::new(n, config.hidden_dim);
    let mut batch = AeBatch::new(n, config.hidden_dim, config.batch_size);
    let mut order = trainable;
    let mut loss_history = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        shuffle(&mut order, &mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.batch_size) {
            epoch_loss += ae_batch_backward(
                &model,
                chunk,
                |row| reprs.row(row as usize),
                &mut batch,
                &mut grads,
            );
            adam_step(&mut model.w1, &grads.w1, &mut st_w1, &adam);
            adam_step(&mut model.b1, &grads.b1, &mut st_b1, &adam);
            adam_step(&mut model.w2, &grads.w2, &mut st_w2, &adam);
            adam_step(&mut model.b2, &grads.b2, &mut st_b2, &adam);
            grads.zero();
        }
        loss_history.push(epoch_loss / order.len() as f64);
    }
    let embedding = model.embedding(reprs);
    Ok(TrainedAutoencoder {
        model,
        embedding,
        loss_history,
    })
}

fn validate_config(config: &TrainConfig) -> Result<()> {
    if config.hidden_dim == 0 {
        return Err(Error::InvalidArgument("hidden_dim must be positive".into()));
    }
    if config.batch_size == 0 {
        return Err(Error::InvalidArgument("batch_size must be positive".into()));
    }
    if config.learning_rate.is_nan() || config.learning_rate <= 0.0 {
        return Err(Error::InvalidArgument("learning_rate must be positive".into()));
    }
    Ok(())
}

fn trainable_rows(reprs: &WordReprMatrix) -> Result<Vec<u32>> {
    let rows: Vec<u32> = (0..reprs.n_rows() as u32)
        .filter(|&r| !reprs.row(r as usize).is_empty())
        .collect();
    if rows.is_empty() {
        return Err(Error::InvalidArgument(
            "every representation row is zero; nothing to train on".into(),
        ));
    }
    Ok(rows)
}

/// Fisher-Yates shuffle driven by a seeded RNG.
pub(crate) fn shuffle<T>(order: &mut [T], rng: &mut ChaCha8Rng) {
    for i in (1..order.len()).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
}

/// Which network [`gradient_check`] exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Encoder,
    Autoencoder,
}

/// Compares analytic gradients against central finite differences
/// (`h = 1e-5`) on small random instances and returns the maximum guarded
/// relative error over every parameter of every trial. Zero trials returns
/// `0.0` with a warning.
pub fn gradient_check(kind: ModelKind, trials: u32, seed: u64) -> f64 {
    if trials == 0 {
        log::warn!("gradient_check called with zero trials; nothing checked");
        return 0.0;
    }
    let h = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_err = 0.0f64;
    for _ in 0..trials {
        let n = rng.gen_range(6..=20usize);
        let d = rng.gen_range(2..=6usize);
        let target = random_sparse(&mut rng, n);
        let err = match kind {
            ModelKind::Encoder => {
                let mut model = EncoderModel::init(n, d, &mut rng);
                // Keep pre-activations away from the ReLU kink so central
                // differences stay two-sided.
                for w in model.w1.iter_mut() {
                    if w.abs() < 1e-3 {
                        *w = if *w < 0.0 { -1e-3 } else { 1e-3 };
                    }
                }
                let term = rng.gen_range(0..n) as u32;
                encoder_check(&model, term, &target, h)
            }
            ModelKind::Autoencoder => {
                let mut model = AutoencoderModel::init(n, d, &mut rng);
                let pre = model.pre_hidden(&target);
                for (a, &p) in pre.iter().enumerate() {
                    if p.abs() < 1e-3 {
                        model.b1[a] += 2e-3;
                    }
                }
                autoencoder_check(&model, &target, h)
            }
        };
        max_err = max_err.max(err);
    }
    max_err
}

fn random_sparse(rng: &mut ChaCha8Rng, n: usize) -> SparseVector {
    let mut pairs = Vec::new();
    for i in 0..n {
        if rng.gen::<f64>() < 0.5 {
            pairs.push((i as u32, 0.1 + 0.9 * rng.gen::<f64>()));
        }
    }
    if pairs.is_empty() {
        pairs.push((0, 0.1 + 0.9 * rng.gen::<f64>()));
    }
    SparseVector::from_sorted(pairs)
}

/// Guarded relative error between analytic and numeric derivatives.
fn rel_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(1e-6);
    (analytic - numeric).abs() / denom
}

/// Central-difference sweep over one parameter tensor of a cloneable model.
fn fd_max_err<M: Clone>(
    model: &M,
    len: usize,
    tensor: impl Fn(&mut M) -> &mut [f64],
    analytic: impl Fn(usize) -> f64,
    loss: impl Fn(&M) -> f64,
    h: f64,
) -> f64 {
    let mut work = model.clone();
    let mut max_err = 0.0f64;
    for idx in 0..len {
        let orig = tensor(&mut work)[idx];
        tensor(&mut work)[idx] = orig + h;
        let up = loss(&work);
        tensor(&mut work)[idx] = orig - h;
        let down = loss(&work);
        tensor(&mut work)[idx] = orig;
        let numeric = (up - down) / (2.0 * h);
        max_err = max_err.max(rel_error(analytic(idx), numeric));
    }
    max_err
}

fn encoder_check(model: &EncoderModel, term: u32, target: &SparseVector, h: f64) -> f64 {
    let (_, grads) = encoder_backward(model, term, target).expect("nonzero target");
    let loss = |m: &EncoderModel| {
        let (_, out) = m.forward(term);
        cosine_distance(&out, target).expect("nonzero target")
    };
    let d = model.d;
    // Untouched W1 rows must read as zero on both sides.
    let w1_analytic = |idx: usize| {
        if idx / d == term as usize {
            grads.w1_row[idx % d]
        } else {
            0.0
        }
    };
    fd_max_err(model, model.w1.len(), |m| &mut m.w1, w1_analytic, loss, h)
        .max(fd_max_err(model, model.w2.len(), |m| &mut m.w2, |i| grads.w2[i], loss, h))
        .max(fd_max_err(model, model.bias.len(), |m| &mut m.bias, |i| grads.bias[i], loss, h))
}

fn autoencoder_check(model: &AutoencoderModel, x: &SparseVector, h: f64) -> f64 {
    let (_, grads) = autoencoder_backward(model, x);
    let loss = |m: &AutoencoderModel| {
        let (_, out) = m.forward(x);
        mse_loss(&out, x)
    };
    fd_max_err(model, model.w1.len(), |m| &mut m.w1, |i| grads.w1[i], loss, h)
        .max(fd_max_err(model, model.b1.len(), |m| &mut m.b1, |i| grads.b1[i], loss, h))
        .max(fd_max_err(model, model.w2.len(), |m| &mut m.w2, |i| grads.w2[i], loss, h))
        .max(fd_max_err(model, model.b2.len(), |m| &mut m.b2, |i| grads.b2[i], loss, h))
}
