//! Minimal dense numeric kernel.
//!
//! Row-major f64 matrices plus the handful of primitives the micro-LM needs:
//! matrix product, temperature softmax, cross-entropy with a log floor, and a
//! central-difference gradient oracle used to check every hand-written
//! backward pass. All kernels are pure functions over immutable inputs.

use crate::error::{Error, Result};
use std::sync::atomic::{AtomicU64, Ordering};

/// Probabilities below this floor are clamped inside [`cross_entropy`] so the
/// loss stays finite; each clamp increments the diagnostics counter.
pub const LOG_PROB_FLOOR: f64 = 1e-12;

static CLAMP_EVENTS: AtomicU64 = AtomicU64::new(0);

/// Number of times a log-probability was clamped to the floor since the last reset.
pub fn clamp_event_count() -> u64 {
    CLAMP_EVENTS.load(Ordering::Relaxed)
}

pub fn reset_clamp_events() {
    CLAMP_EVENTS.store(0, Ordering::Relaxed);
}

pub(crate) fn record_clamp_event() {
    CLAMP_EVENTS.fetch_add(1, Ordering::Relaxed);
}

/// Dense row-major matrix of f64.
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

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "matrix data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transposed(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Standard matrix product `a @ b`.
pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(Error::Shape(format!(
            "matmul {}x{} by {}x{}: inner dimensions differ",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut out = Matrix::zeros(a.rows, b.cols);
    matmul_acc(&a.data, &b.data, &mut out.data, a.rows, a.cols, b.cols);
    Ok(out)
}

/// `y += x @ w` over raw row-major buffers, ikj order so the inner loop runs
/// over contiguous rows of both `w` and `y`.
#[inline]
pub(crate) fn matmul_acc(x: &[f64], w: &[f64], y: &mut [f64], m: usize, k: usize, n: usize) {
    debug_assert_eq!(x.len(), m * k);
    debug_assert_eq!(w.len(), k * n);
    debug_assert_eq!(y.len(), m * n);
    for i in 0..m {
        let xi = &x[i * k..(i + 1) * k];
        let yi = &mut y[i * n..(i + 1) * n];
        for (p, &xv) in xi.iter().enumerate() {
            let wr = &w[p * n..(p + 1) * n];
            for (yj, &wj) in yi.iter_mut().zip(wr.iter()) {
                *yj += xv * wj;
            }
        }
    }
}

/// Dot product of two equal-length slices.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for i in 0..a.len() {
        acc += a[i] * b[i];
    }
    acc
}

/// Temperature softmax over one logit row.
///
/// For `temperature > 0` this is `exp((l_i - max) / T)` normalized to sum 1;
/// at `temperature == 0` it degenerates to a one-hot at the argmax, ties
/// broken toward the lowest index so greedy decoding is deterministic.
pub fn softmax_row(logits: &[f64], temperature: f64) -> Result<Vec<f64>> {
    if logits.is_empty() {
        return Err(Error::Shape("softmax over empty logit vector".into()));
    }
    if !(temperature >= 0.0) {
        return Err(Error::Precondition(format!(
            "softmax temperature must be >= 0, got {temperature}"
        )));
    }
    if temperature == 0.0 {
        let mut best = 0;
        for (i, &v) in logits.iter().enumerate() {
            if v > logits[best] {
                best = i;
            }
        }
        let mut out = vec![0.0; logits.len()];
        out[best] = 1.0;
        return Ok(out);
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&l| ((l - max) / temperature).exp()).collect();
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= sum);
    Ok(out)
}

/// Index of the maximum entry, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// `-log(probs[target])`, clamped at [`LOG_PROB_FLOOR`].
///
/// The input must be a probability vector (sum within 1e-6 of 1). A clamp is
/// counted in the diagnostics counter rather than raised as an error: a
/// zero-probability target is a scoreable training event, not a crash.
pub fn cross_entropy(probs: &[f64], target: usize) -> Result<f64> {
    if target >= probs.len() {
        return Err(Error::Shape(format!(
            "cross_entropy target {target} out of range for {} classes",
            probs.len()
        )));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::Precondition(format!(
            "cross_entropy input sums to {sum}, expected 1"
        )));
    }
    let p = probs[target];
    if p < LOG_PROB_FLOOR {
        record_clamp_event();
        return Ok(-LOG_PROB_FLOOR.ln());
    }
    Ok(-p.ln())
}

/// Central-difference gradient of a scalar function: one (f(x+h e_i) -
/// f(x-h e_i)) / 2h per coordinate. This is the independent oracle every
/// analytic backward pass in the crate is checked against.
pub fn finite_diff_grad<F>(f: F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    if h <= 0.0 {
        return Err(Error::Precondition(format!("finite difference step must be > 0, got {h}")));
    }
    let mut grad = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + h;
        let up = f(&probe);
        probe[i] = orig - h;
        let down = f(&probe);
        probe[i] = orig;
        grad[i] = (up - down) / (2.0 * h);
    }
    Ok(grad)
}

/// L2-norm relative error between two gradient vectors, with a zero guard so
/// two exactly-zero gradients compare equal.
pub fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let denom = na.max(nb);
    if denom < 1e-300 {
        return 0.0;
    }
    diff / denom
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Domain, StreamRng};

    fn random_matrix(rng: &mut StreamRng, rows: usize, cols: usize) -> Matrix {
        let data = (0..rows * cols).map(|_| rng.uniform(-1.0, 1.0)).collect();
        Matrix::from_vec(rows, cols, data).unwrap()
    }

    #[test]
    fn matmul_identity() {
        let mut rng = StreamRng::new(10, Domain::ParamInit, &[]);
        let m = random_matrix(&mut rng, 3, 3);
        let id = Matrix::identity(3);
        let prod = matmul(&id, &m).unwrap();
        assert_eq!(prod, m);
    }

    #[test]
    fn matmul_hand_case() {
        let a = Matrix::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = Matrix::from_vec(2, 1, vec![0.0, 1.0]).unwrap();
        let c = matmul(&a, &b).unwrap();
        assert_eq!(c.data, vec![2.0, 4.0]);
    }

    #[test]
    fn matmul_matches_naive_triple_loop() {
        let mut rng = StreamRng::new(11, Domain::ParamInit, &[]);
        let a = random_matrix(&mut rng, 5, 7);
        let b = random_matrix(&mut rng, 7, 3);
        let fast = matmul(&a, &b).unwrap();
        // naive oracle
        let mut naive = Matrix::zeros(5, 3);
        for i in 0..5 {
            for j in 0..3 {
                let mut acc = 0.0;
                for k in 0..7 {
                    acc += a.get(i, k) * b.get(k, j);
                }
                naive.set(i, j, acc);
            }
        }
        for (x, y) in fast.data.iter().zip(naive.data.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn matmul_shape_mismatch_is_error() {
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(2, 3);
        assert!(matches!(matmul(&a, &b), Err(Error::Shape(_))));
    }

    #[test]
    fn matmul_associative_on_random_matrices() {
        let mut rng = StreamRng::new(12, Domain::ParamInit, &[]);
        for _ in 0..10 {
            let a = random_matrix(&mut rng, 4, 5);
            let b = random_matrix(&mut rng, 5, 6);
            let c = random_matrix(&mut rng, 6, 3);
            let left = matmul(&matmul(&a, &b).unwrap(), &c).unwrap();
            let right = matmul(&a, &matmul(&b, &c).unwrap()).unwrap();
            for (x, y) in left.data.iter().zip(right.data.iter()) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn softmax_uniform_on_equal_logits() {
        let p = softmax_row(&[1.0, 1.0, 1.0], 1.0).unwrap();
        for &v in &p {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_zero_temperature_is_one_hot() {
        let p = softmax_row(&[5.0, 0.0, 0.0], 0.0).unwrap();
        assert_eq!(p, vec![1.0, 0.0, 0.0]);
        // ties break to the lowest index
        let p = softmax_row(&[2.0, 2.0, 1.0], 0.0).unwrap();
        assert_eq!(p, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn softmax_closed_form_two_logits() {
        let p = softmax_row(&[2.0, 0.0], 2.0).unwrap();
        let e = std::f64::consts::E;
        assert!((p[0] - e / (e + 1.0)).abs() < 1e-12);
        assert!((p[1] - 1.0 / (e + 1.0)).abs() < 1e-12);
        assert!((p[0] - 0.7311).abs() < 1e-4);
    }

    #[test]
    fn softmax_empty_is_error() {
        assert!(matches!(softmax_row(&[], 1.0), Err(Error::Shape(_))));
    }

    #[test]
    fn softmax_outputs_are_a_distribution() {
        let mut rng = StreamRng::new(13, Domain::ParamInit, &[]);
        for _ in 0..200 {
            let n = 1 + rng.below(16) as usize;
            let logits: Vec<f64> = (0..n).map(|_| rng.uniform(-30.0, 30.0)).collect();
            let t = rng.uniform(0.01, 4.0);
            let p = softmax_row(&logits, t).unwrap();
            assert!(p.iter().all(|&v| v >= 0.0));
            let sum: f64 = p.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn softmax_shift_invariance() {
        let mut rng = StreamRng::new(14, Domain::ParamInit, &[]);
        for _ in 0..100 {
            let logits: Vec<f64> = (0..8).map(|_| rng.uniform(-5.0, 5.0)).collect();
            let shift = rng.uniform(-100.0, 100.0);
            let shifted: Vec<f64> = logits.iter().map(|l| l + shift).collect();
            let a = softmax_row(&logits, 0.7).unwrap();
            let b = softmax_row(&shifted, 0.7).unwrap();
            for (x, y) in a.iter().zip(b.iter()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cross_entropy_certainty_is_zero() {
        let loss = cross_entropy(&[0.0, 1.0, 0.0], 1).unwrap();
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn cross_entropy_uniform_is_log_n() {
        let loss = cross_entropy(&[0.25; 4], 2).unwrap();
        assert!((loss - 4.0f64.ln()).abs() < 1e-12);
        assert!((loss - 1.3863).abs() < 1e-4);
    }

    #[test]
    fn cross_entropy_closed_form() {
        let loss = cross_entropy(&[0.7311, 0.2689], 1).unwrap();
        assert!((loss - 1.3133).abs() < 1e-4);
    }

    #[test]
    fn cross_entropy_clamps_zero_probability() {
        reset_clamp_events();
        let before = clamp_event_count();
        let loss = cross_entropy(&[1.0, 0.0], 1).unwrap();
        assert!((loss + LOG_PROB_FLOOR.ln()).abs() < 1e-9);
        assert!(loss.is_finite());
        assert_eq!(clamp_event_count(), before + 1);
    }

    #[test]
    fn cross_entropy_rejects_non_distribution() {
        assert!(matches!(cross_entropy(&[0.9, 0.3], 0), Err(Error::Precondition(_))));
        assert!(matches!(cross_entropy(&[0.5, 0.5], 3), Err(Error::Shape(_))));
    }

    #[test]
    fn finite_diff_on_sum_of_squares() {
        let f = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let g = finite_diff_grad(f, &[1.0, 2.0], 1e-4).unwrap();
        assert!((g[0] - 2.0).abs() < 1e-6);
        assert!((g[1] - 4.0).abs() < 1e-6);
    }

    #[test]
    fn finite_diff_on_constant_is_zero() {
        let g = finite_diff_grad(|_| 3.5, &[0.3, -0.7, 2.0], 1e-4).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn finite_diff_rejects_bad_step() {
        assert!(finite_diff_grad(|_| 0.0, &[1.0], 0.0).is_err());
    }

    #[test]
    fn rel_error_zero_on_zero_gradients() {
        assert_eq!(rel_error(&[0.0, 0.0], &[0.0, 0.0]), 0.0);
    }
}
