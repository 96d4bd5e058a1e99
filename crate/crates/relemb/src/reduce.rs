//! Truncated SVD and PCA of the sparse word-representation matrix.
//!
//! The decomposition is the randomized range-finder scheme: multiply the
//! matrix by a seeded Gaussian test block, orthonormalize, refine with a few
//! power iterations, then solve the small projected problem exactly (Jacobi
//! eigendecomposition of `B Bᵀ`). PCA runs the same machinery on an
//! implicitly column-centered operator, so the dense centered matrix is
//! never materialized.

use serde::{Deserialize, Serialize};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embedding::{EmbeddingKind, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::linalg::{matmul_abt_acc, matmul_acc, transpose};
use crate::reprs::WordReprMatrix;

/// Configuration for both reductions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReduceConfig {
    /// Output dimensionality `d`.
    pub dim: usize,
    /// Extra columns in the random test block.
    pub oversampling: usize,
    /// Subspace (power) iterations after the initial range sketch.
    pub power_iterations: usize,
    pub seed: u64,
}

impl Default for ReduceConfig {
    fn default() -> Self {
        ReduceConfig {
            dim: 300,
            oversampling: 8,
            power_iterations: 4,
            seed: 42,
        }
    }
}

/// Truncated SVD output. `embedding` rows are `U_d * Sigma_d`.
#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    pub embedding: EmbeddingMatrix,
    /// Non-increasing.
    pub singular_values: Vec<f64>,
    /// `d x cols`, row `k` is the k-th right singular direction.
    pub right_vectors: Vec<f64>,
}

/// PCA output. `embedding` rows are the centered rows projected onto the
/// top-`d` right singular directions.
#[derive(Debug, Clone)]
pub struct PcaResult {
    pub embedding: EmbeddingMatrix,
    /// `d x cols`, row `k` is the k-th component direction.
    pub directions: Vec<f64>,
    /// Per-component variance `sigma_k^2 / (rows - 1)`, non-increasing.
    pub explained_variance: Vec<f64>,
}

/// A matrix we only ever touch through block products.
trait RangeOp {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    /// `out = A * x` with `x` of shape `cols x l`, `out` of shape `rows x l`.
    fn mul_into(&self, x: &[f64], l: usize, out: &mut [f64]);
    /// `out = A^T * x` with `x` of shape `rows x l`, `out` of shape `cols x l`.
    fn tmul_into(&self, x: &[f64], l: usize, out: &mut [f64]);
}

struct PlainOp<'a>(&'a WordReprMatrix);

impl RangeOp for PlainOp<'_> {
    fn rows(&self) -> usize {
        self.0.n_rows()
    }

    fn cols(&self) -> usize {
        self.0.cols
    }

    fn mul_into(&self, x: &[f64], l: usize, out: &mut [f64]) {
        out.fill(0.0);
        for (i, row) in self.0.rows.iter().enumerate() {
            let out_row = &mut out[i * l..(i + 1) * l];
            for (j, v) in row.iter() {
                let x_row = &x[j as usize * l..(j as usize + 1) * l];
                for (o, &xv) in out_row.iter_mut().zip(x_row) {
                    *o += v * xv;
                }
            }
        }
    }

    fn tmul_into(&self, x: &[f64], l: usize, out: &mut [f64]) {
        out.fill(0.0);
        for (i, row) in self.0.rows.iter().enumerate() {
            let x_row = &x[i * l..(i + 1) * l];
            for (j, v) in row.iter() {
                let out_row = &mut out[j as usize * l..(j as usize + 1) * l];
                for (o, &xv) in out_row.iter_mut().zip(x_row) {
                    *o += v * xv;
                }
            }
        }
    }
}

/// `A - 1 * mu^T` without materializing it.
struct CenteredOp<'a> {
    matrix: &'a WordReprMatrix,
    means: Vec<f64>,
}

impl RangeOp for CenteredOp<'_> {
    fn rows(&self) -> usize {
        self.matrix.n_rows()
    }

    fn cols(&self) -> usize {
        self.matrix.cols
    }

    fn mul_into(&self, x: &[f64], l: usize, out: &mut [f64]) {
        PlainOp(self.matrix).mul_into(x, l, out);
        // (1 * mu^T) X = 1 * (mu^T X): one row vector subtracted everywhere.
        let mut mu_x = vec![0.0; l];
        for (j, &m) in self.means.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            let x_row = &x[j * l..(j + 1) * l];
            for (acc, &xv) in mu_x.iter_mut().zip(x_row) {
                *acc += m * xv;
            }
        }
        for i in 0..self.rows() {
            let out_row = &mut out[i * l..(i + 1) * l];
            for (o, &mx) in out_row.iter_mut().zip(&mu_x) {
                *o -= mx;
            }
        }
    }

    fn tmul_into(&self, x: &[f64], l: usize, out: &mut [f64]) {
        PlainOp(self.matrix).tmul_into(x, l, out);
        // (mu * 1^T) X = mu * (sum of X rows).
        let mut col_sum = vec![0.0; l];
        for i in 0..self.rows() {
            let x_row = &x[i * l..(i + 1) * l];
            for (acc, &xv) in col_sum.iter_mut().zip(x_row) {
                *acc += xv;
            }
        }
        for (j, &m) in self.means.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            let out_row = &mut out[j * l..(j + 1) * l];
            for (o, &s) in out_row.iter_mut().zip(&col_sum) {
                *o -= m * s;
            }
        }
    }
}

/// Gram-Schmidt with one reorthogonalization pass over `k` vectors of
/// length `m`, stored contiguously. Vectors that collapse (rank deficiency)
/// are zeroed rather than normalized.
fn orthonormalize(block: &mut [f64], k: usize, m: usize) {
    let scale = block
        .iter()
        .fold(0.0f64, |acc, &v| acc.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let tol = scale * 1e-12 * (m as f64).sqrt();
    for c in 0..k {
        for _pass in 0..2 {
            for p in 0..c {
                let (head, tail) = block.split_at_mut(c * m);
                let prev = &head[p * m..(p + 1) * m];
                let cur = &mut tail[..m];
                let r: f64 = prev.iter().zip(cur.iter()).map(|(a, b)| a * b).sum();
                for (cv, &pv) in cur.iter_mut().zip(prev) {
                    *cv -= r * pv;
                }
            }
        }
        let cur = &mut block[c * m..(c + 1) * m];
        let norm = cur.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > tol {
            for v in cur.iter_mut() {
                *v /= norm;
            }
        } else {
            cur.fill(0.0);
        }
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix, in place.
/// Returns eigenvalues (descending) and the matching eigenvectors as the
/// rows of the returned `n x n` buffer.
fn jacobi_eigen(a: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let frob = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let stop = frob * 1e-15 + f64::MIN_POSITIVE;
    for _sweep in 0..60 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if off.sqrt() <= stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for i in 0..n {
                    let aip = a[i * n + p];
                    let aiq = a[i * n + q];
                    a[i * n + p] = c * aip - s * aiq;
                    a[i * n + q] = s * aip + c * aiq;
                }
                for j in 0..n {
                    let apj = a[p * n + j];
                    let aqj = a[q * n + j];
                    a[p * n + j] = c * apj - s * aqj;
                    a[q * n + j] = s * apj + c * aqj;
                }
                for i in 0..n {
                    let vip = v[i * n + p];
                    let viq = v[i * n + q];
                    v[i * n + p] = c * vip - s * viq;
                    v[i * n + q] = s * vip + c * viq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[y * n + y].total_cmp(&a[x * n + x]).then(x.cmp(&y)));
    let values: Vec<f64> = order.iter().map(|&k| a[k * n + k]).collect();
    // Row r of the output is the eigenvector for values[r].
    let mut vectors = vec![0.0; n * n];
    for (r, &k) in order.iter().enumerate() {
        for i in 0..n {
            vectors[r * n + i] = v[i * n + k];
        }
    }
    (values, vectors)
}

fn gaussian_block(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    // Box-Muller on ChaCha draws keeps the sketch reproducible.
    let mut out = Vec::with_capacity(len);
    while out.len() < len {
        let u1: f64 = 1.0 - rng.gen::<f64>();
        let u2: f64 = rng.gen::<f64>();
        let r = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        out.push(r * angle.cos());
        if out.len() < len {
            out.push(r * angle.sin());
        }
    }
    out
}

struct SvdParts {
    /// `rows x d`, scaled by singular values.
    embedding: Vec<f64>,
    sigma: Vec<f64>,
    /// `d x cols`.
    right: Vec<f64>,
}

fn randomized_svd(op: &dyn RangeOp, config: &ReduceConfig) -> Result<SvdParts> {
    let (m, n) = (op.rows(), op.cols());
    let d = config.dim;
    if d == 0 {
        return Err(Error::InvalidArgument("reduction dim must be positive".into()));
    }
    let l = d + config.oversampling;
    if l > m.min(n) {
        return Err(Error::InvalidArgument(format!(
            "dim + oversampling = {l} exceeds the smaller matrix dimension {}",
            m.min(n)
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let omega = gaussian_block(&mut rng, n * l);

    // Range sketch: Q spans A * Omega, refined by power iterations with
    // re-orthonormalization at every half step.
    let mut y = vec![0.0; m * l];
    op.mul_into(&omega, l, &mut y);
    let mut qt = transpose(&y, m, l);
    orthonormalize(&mut qt, l, m);
    let mut zt_buf = vec![0.0; n * l];
    for _ in 0..config.power_iterations {
        let q = transpose(&qt, l, m);
        op.tmul_into(&q, l, &mut zt_buf);
        let mut zt = transpose(&zt_buf, n, l);
        orthonormalize(&mut zt, l, n);
        let z = transpose(&zt, l, n);
        op.mul_into(&z, l, &mut y);
        qt = transpose(&y, m, l);
        orthonormalize(&mut qt, l, m);
    }

    // Projected problem: B = Q^T A (l x n), eigendecompose B B^T.
    let q = transpose(&qt, l, m);
    let mut bt = vec![0.0; n * l];
    op.tmul_into(&q, l, &mut bt);
    let b = transpose(&bt, n, l);
    let mut gram = vec![0.0; l * l];
    matmul_abt_acc(&b, l, n, &b, l, &mut gram);
    let (eigvals, eigvecs) = jacobi_eigen(&mut gram, l);
    let sigma_full: Vec<f64> = eigvals.iter().map(|&e| e.max(0.0).sqrt()).collect();
    let sigma_max = sigma_full.first().copied().unwrap_or(0.0);
    let cutoff = sigma_max * 1e-12;

    // Left vectors U = Q W, right vectors V = B^T W / sigma; keep the top d.
    // eigvecs row r is eigenvector r, so W's column r is eigvecs row r.
    let w_cols = transpose(&eigvecs, l, l); // w_cols[i * l + r] = W[i][r]
    let mut u = vec![0.0; m * l];
    matmul_acc(&q, m, l, &w_cols, l, &mut u);
    let mut embedding = vec![0.0; m * d];
    for i in 0..m {
        for k in 0..d {
            embedding[i * d + k] = u[i * l + k] * sigma_full[k];
        }
    }
    let mut v_full = vec![0.0; n * l];
    matmul_acc(&bt, n, l, &w_cols, l, &mut v_full);
    let mut right = vec![0.0; d * n];
    for k in 0..d {
        if sigma_full[k] > cutoff {
            for j in 0..n {
                right[k * n + j] = v_full[j * l + k] / sigma_full[k];
            }
        }
    }
    Ok(SvdParts {
        embedding,
        sigma: sigma_full[..d].to_vec(),
        right,
    })
}

/// Randomized truncated SVD of the representation matrix.
pub fn truncated_svd(matrix: &WordReprMatrix, config: &ReduceConfig) -> Result<TruncatedSvd> {
    let parts = randomized_svd(&PlainOp(matrix), config)?;
    Ok(TruncatedSvd {
        embedding: EmbeddingMatrix::from_data(
            EmbeddingKind::Svd,
            matrix.n_rows(),
            config.dim,
            parts.embedding,
        )?,
        singular_values: parts.sigma,
        right_vectors: parts.right,
    })
}

/// PCA scores of the representation matrix: column means are subtracted
/// implicitly, then the centered matrix is decomposed as in
/// [`truncated_svd`].
pub fn pca(matrix: &WordReprMatrix, config: &ReduceConfig) -> Result<PcaResult> {
    let rows = matrix.n_rows();
    if rows < 2 {
        return Err(Error::InvalidArgument(
            "pca needs at least two rows to define variances".into(),
        ));
    }
    let mut means = vec![0.0; matrix.cols];
    for row in &matrix.rows {
        for (j, v) in row.iter() {
            means[j as usize] += v;
        }
    }
    for m in means.iter_mut() {
        *m /= rows as f64;
    }
    let op = CenteredOp { matrix, means };
    let parts = randomized_svd(&op, config)?;
    let explained_variance = parts
        .sigma
        .iter()
        .map(|&s| s * s / (rows as f64 - 1.0))
        .collect();
    Ok(PcaResult {
        embedding: EmbeddingMatrix::from_data(
            EmbeddingKind::Pca,
            rows,
            config.dim,
            parts.embedding,
        )?,
        directions: parts.right,
        explained_variance,
    })
}
