//! Minimal dense linear algebra on row-major `Vec<f64>` buffers.
//!
//! Products are blocked over the wide dimension so the hot panel stays in
//! cache; loops are plain and associativity is fixed, so results are
//! bit-reproducible.

/// Column block width for the inner loops.
const BLOCK: usize = 1024;

/// `c += a * b` where `a` is `m x k`, `b` is `k x n`, `c` is `m x n`.
pub(crate) fn matmul_acc(a: &[f64], m: usize, k: usize, b: &[f64], n: usize, c: &mut [f64]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    for j0 in (0..n).step_by(BLOCK) {
        let j1 = (j0 + BLOCK).min(n);
        for i in 0..m {
            let a_row = &a[i * k..(i + 1) * k];
            let c_row = &mut c[i * n + j0..i * n + j1];
            for (kk, &aik) in a_row.iter().enumerate() {
                if aik == 0.0 {
                    continue;
                }
                let b_row = &b[kk * n + j0..kk * n + j1];
                for (cv, &bv) in c_row.iter_mut().zip(b_row) {
                    *cv += aik * bv;
                }
            }
        }
    }
}

/// `c += a * b^T` where `a` is `m x n`, `b` is `p x n`, `c` is `m x p`.
///
/// Blocked over `n` so a panel of `b` is reused across all rows of `a`; the
/// per-entry sum still runs in ascending-j order (block by block), fixed by
/// the constant block width.
pub(crate) fn matmul_abt_acc(a: &[f64], m: usize, n: usize, b: &[f64], p: usize, c: &mut [f64]) {
    debug_assert_eq!(a.len(), m * n);
    debug_assert_eq!(b.len(), p * n);
    debug_assert_eq!(c.len(), m * p);
    for j0 in (0..n).step_by(BLOCK) {
        let j1 = (j0 + BLOCK).min(n);
        for i in 0..m {
            let a_panel = &a[i * n + j0..i * n + j1];
            let c_row = &mut c[i * p..(i + 1) * p];
            for q in 0..p {
                let b_panel = &b[q * n + j0..q * n + j1];
                let mut acc = 0.0;
                for (&av, &bv) in a_panel.iter().zip(b_panel) {
                    acc += av * bv;
                }
                c_row[q] += acc;
            }
        }
    }
}

/// Transposes a row-major `m x n` matrix into `n x m`.
pub(crate) fn transpose(a: &[f64], m: usize, n: usize) -> Vec<f64> {
    debug_assert_eq!(a.len(), m * n);
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            out[j * m + i] = a[i * n + j];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_matches_hand_product() {
        // [1 2; 3 4] * [5 6; 7 8] = [19 22; 43 50]
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [5.0, 6.0, 7.0, 8.0];
        let mut c = vec![0.0; 4];
        matmul_acc(&a, 2, 2, &b, 2, &mut c);
        assert_eq!(c, vec![19.0, 22.0, 43.0, 50.0]);
    }

    #[test]
    fn matmul_abt_matches_matmul_with_transpose() {
        let a: Vec<f64> = (0..6).map(|x| x as f64 * 0.5).collect(); // 2x3
        let b: Vec<f64> = (0..12).map(|x| (x as f64).sin()).collect(); // 4x3
        let mut c1 = vec![0.0; 8];
        matmul_abt_acc(&a, 2, 3, &b, 4, &mut c1);
        let bt = transpose(&b, 4, 3); // 3x4
        let mut c2 = vec![0.0; 8];
        matmul_acc(&a, 2, 3, &bt, 4, &mut c2);
        for (x, y) in c1.iter().zip(c2.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn transpose_roundtrip() {
        let a: Vec<f64> = (0..6).map(|x| x as f64).collect();
        let t = transpose(&a, 2, 3);
        assert_eq!(transpose(&t, 3, 2), a);
    }

    #[test]
    fn blocked_path_matches_naive_on_wide_matrix() {
        // Wide enough to exercise more than one column block.
        let m = 3;
        let k = 5;
        let n = 2500;
        let a: Vec<f64> = (0..m * k).map(|x| ((x * 37 % 11) as f64) - 5.0).collect();
        let b: Vec<f64> = (0..k * n).map(|x| ((x * 17 % 7) as f64) * 0.25).collect();
        let mut c = vec![0.0; m * n];
        matmul_acc(&a, m, k, &b, n, &mut c);
        for i in 0..m {
            for j in (0..n).step_by(613) {
                let mut want = 0.0;
                for kk in 0..k {
                    want += a[i * k + kk] * b[kk * n + j];
                }
                assert!((c[i * n + j] - want).abs() < 1e-12);
            }
        }
    }
}
