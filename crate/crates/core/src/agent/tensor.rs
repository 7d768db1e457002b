//! Minimal dense row-major matrices for the actor-critic network.

use serde::{Deserialize, Serialize};

/// Row-major matrix of `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
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
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// `self · w + b`, with `w` shaped `[cols, out]`.
    pub fn affine(&self, w: &Tensor, b: &Tensor) -> Mat {
        let out = w.shape[1];
        debug_assert_eq!(w.shape[0], self.cols);
        let mut y = Mat::zeros(self.rows, out);
        for i in 0..self.rows {
            let yi = y.row_mut(i);
            yi.copy_from_slice(&b.data);
            for (k, &x) in self.row(i).iter().enumerate() {
                if x == 0.0 {
                    continue;
                }
                let wk = &w.data[k * out..(k + 1) * out];
                for (yv, &wv) in yi.iter_mut().zip(wk) {
                    *yv += x * wv;
                }
            }
        }
        y
    }

    /// Backward of [`Mat::affine`]: accumulates `dw`, `db` and returns `dx`.
    pub fn affine_backward(&self, w: &Tensor, dy: &Mat, dw: &mut Tensor, db: &mut Tensor) -> Mat {
        let out = w.shape[1];
        let mut dx = Mat::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            let dyi = dy.row(i);
            for (bv, &g) in db.data.iter_mut().zip(dyi) {
                *bv += g;
            }
            let xi = self.row(i);
            let dxi = &mut dx.data[i * self.cols..(i + 1) * self.cols];
            for k in 0..self.cols {
                let wk = &w.data[k * out..(k + 1) * out];
                let dwk = &mut dw.data[k * out..(k + 1) * out];
                let x = xi[k];
                let mut acc = 0.0;
                for j in 0..out {
                    dwk[j] += x * dyi[j];
                    acc += wk[j] * dyi[j];
                }
                dxi[k] = acc;
            }
        }
        dx
    }

    pub fn add_assign(&mut self, other: &Mat) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }
}

/// A named-shape parameter block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn filled(shape: &[usize], value: f64) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![value; shape.iter().product()],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Rounds every entry to the nearest `f32`, the storage precision.
    pub fn snap_to_f32(&mut self) {
        for v in &mut self.data {
            *v = f64::from(*v as f32);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

pub fn softmax_in_place(xs: &mut [f64]) {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in xs.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in xs.iter_mut() {
        *x /= sum;
    }
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)
const GELU_A: f64 = 0.044_715;

/// Tanh approximation of GELU.
#[inline]
pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + GELU_A * x * x * x)).tanh())
}

#[inline]
pub fn gelu_grad(x: f64) -> f64 {
    let t = (GELU_C * (x + GELU_A * x * x * x)).tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * x * x)
}
