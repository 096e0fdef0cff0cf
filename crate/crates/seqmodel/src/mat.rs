//! Row-major matrices and the handful of kernels the model is built from.
//! The kernels operate on raw slices so parameter views and gradient blocks
//! avoid copies; inner loops are written axpy-style (contiguous writes) so
//! they autovectorize.

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Mat<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![T::ZERO; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Mat { rows, cols, data }
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn fill(&mut self, v: T) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn transpose(&self) -> Mat<T> {
        let mut out = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }
}

#[inline]
pub fn axpy<T: Scalar>(out: &mut [T], x: &[T], a: T) {
    for (o, &v) in out.iter_mut().zip(x) {
        *o += a * v;
    }
}

/// Dot product with eight accumulators so the reduction vectorizes.
#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let n = a.len().min(b.len());
    let chunks = n / 8;
    let mut acc = [T::ZERO; 8];
    for c in 0..chunks {
        let i = c * 8;
        for l in 0..8 {
            acc[l] += a[i + l] * b[i + l];
        }
    }
    let mut s = T::ZERO;
    for l in 0..8 {
        s += acc[l];
    }
    for i in chunks * 8..n {
        s += a[i] * b[i];
    }
    s
}

/// out[m,n] = a[m,k] · b[k,n] over raw slices.
pub fn gemm<T: Scalar>(
    a: &[T],
    m: usize,
    k: usize,
    b: &[T],
    n: usize,
    out: &mut [T],
    accumulate: bool,
) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    if !accumulate {
        out.iter_mut().for_each(|x| *x = T::ZERO);
    }
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        let orow = &mut out[i * n..(i + 1) * n];
        for (kk, &av) in arow.iter().enumerate() {
            axpy(orow, &b[kk * n..(kk + 1) * n], av);
        }
    }
}

/// out[k,n] += a[m,k]ᵀ · b[m,n] — the weight-gradient shape; always
/// accumulates.
pub fn gemm_at_b<T: Scalar>(a: &[T], m: usize, k: usize, b: &[T], n: usize, out: &mut [T]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), m * n);
    debug_assert_eq!(out.len(), k * n);
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        let brow = &b[i * n..(i + 1) * n];
        for (kk, &av) in arow.iter().enumerate() {
            axpy(&mut out[kk * n..(kk + 1) * n], brow, av);
        }
    }
}

/// out[m,k] = a[m,n] · b[k,n]ᵀ. Materializes bᵀ once so the inner loops are
/// contiguous writes; b is a weight matrix in every caller, so the transpose
/// is negligible next to the multiply.
pub fn gemm_a_bt<T: Scalar>(
    a: &[T],
    m: usize,
    n: usize,
    b: &[T],
    k: usize,
    out: &mut [T],
    accumulate: bool,
) {
    debug_assert_eq!(a.len(), m * n);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * k);
    let mut bt = vec![T::ZERO; n * k];
    for r in 0..k {
        for c in 0..n {
            bt[c * k + r] = b[r * n + c];
        }
    }
    gemm(a, m, n, &bt, k, out, accumulate);
}

/// out = a · b for matrices (test-friendly wrapper over `gemm`).
pub fn matmul<T: Scalar>(a: &Mat<T>, b: &Mat<T>, out: &mut Mat<T>, accumulate: bool) {
    assert_eq!(a.cols, b.rows);
    gemm(&a.data, a.rows, a.cols, &b.data, b.cols, &mut out.data, accumulate);
}

/// out += aᵀ · b for matrices.
pub fn matmul_at_b<T: Scalar>(a: &Mat<T>, b: &Mat<T>, out: &mut Mat<T>) {
    assert_eq!(a.rows, b.rows);
    gemm_at_b(&a.data, a.rows, a.cols, &b.data, b.cols, &mut out.data);
}

/// out = a · bᵀ for matrices.
pub fn matmul_a_bt<T: Scalar>(a: &Mat<T>, b: &Mat<T>, out: &mut Mat<T>, accumulate: bool) {
    assert_eq!(a.cols, b.cols);
    gemm_a_bt(&a.data, a.rows, a.cols, &b.data, b.rows, &mut out.data, accumulate);
}

pub fn add_row_bias<T: Scalar>(m: &mut Mat<T>, bias: &[T]) {
    for r in 0..m.rows {
        for (x, &b) in m.row_mut(r).iter_mut().zip(bias) {
            *x += b;
        }
    }
}

/// Row-wise softmax in place.
pub fn softmax_rows<T: Scalar>(m: &mut Mat<T>) {
    for r in 0..m.rows {
        softmax_slice(m.row_mut(r));
    }
}

#[inline]
pub fn softmax_slice<T: Scalar>(row: &mut [T]) {
    let mut max = row[0];
    for &v in row.iter() {
        max = max.max_s(v);
    }
    let mut sum = T::ZERO;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_small() {
        let a = Mat::from_vec(2, 3, vec![1.0f64, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = Mat::from_vec(3, 2, vec![7.0, 8.0, 9.0, 10.0, 11.0, 12.0]);
        let mut out = Mat::zeros(2, 2);
        matmul(&a, &b, &mut out, false);
        assert_eq!(out.data, vec![58.0, 64.0, 139.0, 154.0]);
    }

    #[test]
    fn transposed_variants_agree() {
        let a = Mat::from_vec(2, 3, vec![1.0f64, -2.0, 3.0, 0.5, 5.0, -6.0]);
        let b = Mat::from_vec(2, 4, vec![1.0, 2.0, 3.0, 4.0, -1.0, 0.0, 2.0, 1.0]);
        let mut out = Mat::zeros(3, 4);
        matmul_at_b(&a, &b, &mut out);
        let mut expect = Mat::zeros(3, 4);
        matmul(&a.transpose(), &b, &mut expect, false);
        assert_eq!(out.data, expect.data);

        let c = Mat::from_vec(4, 3, vec![1.0; 12]);
        let mut out2 = Mat::zeros(2, 4);
        matmul_a_bt(&a, &c, &mut out2, false);
        let mut expect2 = Mat::zeros(2, 4);
        matmul(&a, &c.transpose(), &mut expect2, false);
        for (x, y) in out2.data.iter().zip(&expect2.data) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_normalizes() {
        let mut m = Mat::from_vec(2, 3, vec![1.0f64, 2.0, 3.0, -1e30, 0.0, -1e30]);
        softmax_rows(&mut m);
        for r in 0..2 {
            let s: f64 = m.row(r).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        assert!((m.data[4] - 1.0).abs() < 1e-12);
    }
}
