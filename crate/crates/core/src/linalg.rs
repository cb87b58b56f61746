//! Dense row-major matrices sized for small-MLP workloads.
//!
//! The kernels are written so that every output element is a serial
//! reduction in a fixed order; parallelism (rayon) only ever splits work
//! across independent output rows. Results are therefore bit-identical
//! regardless of thread count.

use rayon::prelude::*;

/// Row-major dense matrix of f64.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// Work threshold (multiply-adds) below which kernels stay single-threaded.
const PAR_THRESHOLD: usize = 1 << 15;

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "shape mismatch");
        Mat { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Mat { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let c = self.cols;
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self (m×k) · b (k×n)`.
    pub fn matmul(&self, b: &Mat) -> Mat {
        assert_eq!(self.cols, b.rows, "matmul shape mismatch");
        let (m, k, n) = (self.rows, self.cols, b.cols);
        let mut out = Mat::zeros(m, n);
        let body = |i: usize, out_row: &mut [f64]| {
            let a_row = &self.data[i * k..(i + 1) * k];
            for (kk, &a_ik) in a_row.iter().enumerate() {
                let b_row = &b.data[kk * n..(kk + 1) * n];
                for (o, &bv) in out_row.iter_mut().zip(b_row) {
                    *o += a_ik * bv;
                }
            }
        };
        if m * k * n >= PAR_THRESHOLD {
            out.data.par_chunks_mut(n).enumerate().for_each(|(i, r)| body(i, r));
        } else {
            out.data.chunks_mut(n).enumerate().for_each(|(i, r)| body(i, r));
        }
        out
    }

    /// `self (m×k) · w (k×n) + bias (n)`, the dense-layer affine map.
    pub fn affine(&self, w: &Mat, bias: &[f64]) -> Mat {
        assert_eq!(self.cols, w.rows, "affine shape mismatch");
        assert_eq!(bias.len(), w.cols, "bias length mismatch");
        let (m, k, n) = (self.rows, self.cols, w.cols);
        let mut out = Mat::zeros(m, n);
        let body = |i: usize, out_row: &mut [f64]| {
            out_row.copy_from_slice(bias);
            let a_row = &self.data[i * k..(i + 1) * k];
            for (kk, &a_ik) in a_row.iter().enumerate() {
                let w_row = &w.data[kk * n..(kk + 1) * n];
                for (o, &wv) in out_row.iter_mut().zip(w_row) {
                    *o += a_ik * wv;
                }
            }
        };
        if m * k * n >= PAR_THRESHOLD {
            out.data.par_chunks_mut(n).enumerate().for_each(|(i, r)| body(i, r));
        } else {
            out.data.chunks_mut(n).enumerate().for_each(|(i, r)| body(i, r));
        }
        out
    }

    /// `selfᵀ (k×m) · b (m×n)`; reduction runs over `self`'s rows in order.
    pub fn t_matmul(&self, b: &Mat) -> Mat {
        assert_eq!(self.rows, b.rows, "t_matmul shape mismatch");
        let (m, k, n) = (self.rows, self.cols, b.cols);
        let mut out = Mat::zeros(k, n);
        let body = |i: usize, out_row: &mut [f64]| {
            for r in 0..m {
                let a_ri = self.data[r * k + i];
                let b_row = &b.data[r * n..(r + 1) * n];
                for (o, &bv) in out_row.iter_mut().zip(b_row) {
                    *o += a_ri * bv;
                }
            }
        };
        if m * k * n >= PAR_THRESHOLD {
            out.data.par_chunks_mut(n).enumerate().for_each(|(i, r)| body(i, r));
        } else {
            out.data.chunks_mut(n).enumerate().for_each(|(i, r)| body(i, r));
        }
        out
    }

    /// `self (m×k) · bᵀ (n×k)ᵀ`.
    pub fn matmul_t(&self, b: &Mat) -> Mat {
        assert_eq!(self.cols, b.cols, "matmul_t shape mismatch");
        let (m, k, n) = (self.rows, self.cols, b.rows);
        let mut out = Mat::zeros(m, n);
        let body = |i: usize, out_row: &mut [f64]| {
            let a_row = &self.data[i * k..(i + 1) * k];
            for (j, o) in out_row.iter_mut().enumerate() {
                let b_row = &b.data[j * k..(j + 1) * k];
                let mut acc = 0.0;
                for (&av, &bv) in a_row.iter().zip(b_row) {
                    acc += av * bv;
                }
                *o = acc;
            }
        };
        if m * k * n >= PAR_THRESHOLD {
            out.data.par_chunks_mut(n).enumerate().for_each(|(i, r)| body(i, r));
        } else {
            out.data.chunks_mut(n).enumerate().for_each(|(i, r)| body(i, r));
        }
        out
    }

    pub fn transposed(&self) -> Mat {
        let mut out = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// Column sums (length `cols`), reduced over rows in order.
    pub fn col_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (o, &v) in out.iter_mut().zip(self.row(i)) {
                *o += v;
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_matmul(a: &Mat, b: &Mat) -> Mat {
        let mut out = Mat::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut s = 0.0;
                for k in 0..a.cols() {
                    s += a.get(i, k) * b.get(k, j);
                }
                out.set(i, j, s);
            }
        }
        out
    }

    #[test]
    fn matmul_matches_naive() {
        let a = Mat::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = Mat::from_vec(3, 2, vec![7.0, 8.0, 9.0, 10.0, 11.0, 12.0]);
        assert_eq!(a.matmul(&b), naive_matmul(&a, &b));
    }

    #[test]
    fn transpose_variants_match_naive() {
        let a = Mat::from_vec(3, 2, vec![1.0, -2.0, 0.5, 3.0, -1.0, 2.5]);
        let b = Mat::from_vec(3, 4, (0..12).map(|v| v as f64 * 0.25).collect());
        // aᵀ·b via explicit transpose
        let mut at = Mat::zeros(2, 3);
        for i in 0..3 {
            for j in 0..2 {
                at.set(j, i, a.get(i, j));
            }
        }
        assert_eq!(a.t_matmul(&b), naive_matmul(&at, &b));

        let c = Mat::from_vec(5, 2, (0..10).map(|v| v as f64 - 4.0).collect());
        let mut ct = Mat::zeros(2, 5);
        for i in 0..5 {
            for j in 0..2 {
                ct.set(j, i, c.get(i, j));
            }
        }
        assert_eq!(a.matmul_t(&c), naive_matmul(&a, &ct));
    }

    #[test]
    fn affine_adds_bias() {
        let x = Mat::from_vec(1, 2, vec![1.0, 2.0]);
        let w = Mat::from_vec(2, 2, vec![1.0, 0.0, 0.0, 1.0]);
        let out = x.affine(&w, &[10.0, 20.0]);
        assert_eq!(out.data(), &[11.0, 22.0]);
    }

    #[test]
    fn parallel_path_bit_identical_to_serial() {
        // Large enough to trip the parallel path.
        let n = 96;
        let a = Mat::from_vec(n, n, (0..n * n).map(|v| ((v * 2654435761) % 1000) as f64 / 997.0).collect());
        let b = Mat::from_vec(n, n, (0..n * n).map(|v| ((v * 40503) % 1000) as f64 / 991.0 - 0.5).collect());
        let big = a.matmul(&b);
        let nv = naive_matmul(&a, &b);
        for (x, y) in big.data().iter().zip(nv.data()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}
