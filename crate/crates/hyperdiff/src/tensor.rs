//! Minimal dense 2-D tensor, row-major `f64`.
//!
//! Just enough surface for the solvers and the message-passing models:
//! matmuls (plain and one-side transposed), row gathers, column
//! concatenation/splitting, and elementwise helpers. No broadcasting rules, no
//! views; shapes are checked and panics are reserved for programmer errors
//! (mismatched shapes), not data errors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTensor", into = "RawTensor")]
pub struct Tensor2D {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// Wire form; conversion re-checks the shape/storage invariant on load.
#[derive(Serialize, Deserialize)]
struct RawTensor {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl From<Tensor2D> for RawTensor {
    fn from(t: Tensor2D) -> Self {
        RawTensor { rows: t.rows, cols: t.cols, data: t.data }
    }
}

impl TryFrom<RawTensor> for Tensor2D {
    type Error = Error;
    fn try_from(raw: RawTensor) -> Result<Self> {
        if raw.rows.checked_mul(raw.cols) != Some(raw.data.len()) {
            return Err(Error::Parse(format!(
                "tensor storage length {} does not match shape {}x{}",
                raw.data.len(),
                raw.rows,
                raw.cols
            )));
        }
        Ok(Tensor2D { rows: raw.rows, cols: raw.cols, data: raw.data })
    }
}

impl Tensor2D {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor2D { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length must equal rows*cols");
        Tensor2D { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Tensor2D { rows: r, cols: c, data }
    }

    /// Single-column tensor from a flat vector.
    pub fn from_col(data: Vec<f64>) -> Self {
        Tensor2D { rows: data.len(), cols: 1, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn col(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn set_col(&mut self, c: usize, values: &[f64]) {
        assert_eq!(values.len(), self.rows);
        for (r, v) in values.iter().enumerate() {
            self.set(r, c, *v);
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor2D {
        Tensor2D {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn scale(&mut self, s: f64) {
        for x in &mut self.data {
            *x *= s;
        }
    }

    pub fn add_assign(&mut self, other: &Tensor2D) {
        assert_eq!(self.shape(), other.shape(), "shape mismatch in add_assign");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += *b;
        }
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Tensor2D) -> f64 {
        assert_eq!(self.shape(), other.shape(), "shape mismatch in max_abs_diff");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Error if any entry is NaN or infinite; `what` names the tensor in the message.
    pub fn ensure_finite(&self, what: &str) -> Result<()> {
        for (i, x) in self.data.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite value {x} in {what} at row {}, col {}",
                    i / self.cols.max(1),
                    i % self.cols.max(1)
                )));
            }
        }
        Ok(())
    }

    /// New tensor whose rows are `self.row(indices[i])`.
    pub fn gather_rows(&self, indices: &[u32]) -> Tensor2D {
        let c = self.cols;
        let mut data = vec![0.0; indices.len() * c];
        par::for_each_chunk_mut(&mut data, c, |i, out| {
            out.copy_from_slice(self.row(indices[i] as usize));
        });
        Tensor2D { rows: indices.len(), cols: c, data }
    }

    /// Column-wise concatenation; all parts must have the same row count.
    pub fn concat_cols(parts: &[&Tensor2D]) -> Tensor2D {
        assert!(!parts.is_empty());
        let rows = parts[0].rows;
        for p in parts {
            assert_eq!(p.rows, rows, "row mismatch in concat_cols");
        }
        let cols: usize = parts.iter().map(|p| p.cols).sum();
        let mut data = vec![0.0; rows * cols];
        par::for_each_chunk_mut(&mut data, cols, |r, out| {
            let mut at = 0;
            for p in parts {
                out[at..at + p.cols].copy_from_slice(p.row(r));
                at += p.cols;
            }
        });
        Tensor2D { rows, cols, data }
    }

    /// Split columns into consecutive blocks of the given widths.
    pub fn split_cols(&self, widths: &[usize]) -> Vec<Tensor2D> {
        assert_eq!(widths.iter().sum::<usize>(), self.cols, "split widths must cover cols");
        let mut out: Vec<Tensor2D> = widths.iter().map(|&w| Tensor2D::zeros(self.rows, w)).collect();
        for r in 0..self.rows {
            let row = self.row(r);
            let mut at = 0;
            for (part, &w) in out.iter_mut().zip(widths) {
                part.row_mut(r).copy_from_slice(&row[at..at + w]);
                at += w;
            }
        }
        out
    }
}

fn rows_per_chunk(cols: usize) -> usize {
    (4096 / cols.max(1)).max(1)
}

/// `a (m×k) · b (k×n)`.
pub fn matmul(a: &Tensor2D, b: &Tensor2D) -> Tensor2D {
    assert_eq!(a.cols, b.rows, "inner dimension mismatch in matmul");
    let (m, k, n) = (a.rows, a.cols, b.cols);
    let mut out = Tensor2D::zeros(m, n);
    let rc = rows_per_chunk(n);
    par::for_each_chunk_mut(&mut out.data, rc * n, |chunk, block| {
        let i0 = chunk * rc;
        for (di, out_row) in block.chunks_mut(n).enumerate() {
            let a_row = a.row(i0 + di);
            for kk in 0..k {
                let aik = a_row[kk];
                let b_row = &b.data[kk * n..kk * n + n];
                for (o, bv) in out_row.iter_mut().zip(b_row) {
                    *o += aik * bv;
                }
            }
        }
    });
    out
}

/// `aᵀ (k×m) · b (m×n)` where `a` is stored `m×k`. Used for weight gradients.
pub fn matmul_at_b(a: &Tensor2D, b: &Tensor2D) -> Tensor2D {
    assert_eq!(a.rows, b.rows, "row mismatch in matmul_at_b");
    let (m, k, n) = (a.rows, a.cols, b.cols);
    let mut out = Tensor2D::zeros(k, n);
    let rc = rows_per_chunk(n);
    par::for_each_chunk_mut(&mut out.data, rc * n, |chunk, block| {
        let r0 = chunk * rc;
        for (dr, out_row) in block.chunks_mut(n).enumerate() {
            let r = r0 + dr;
            for i in 0..m {
                let air = a.data[i * k + r];
                let b_row = &b.data[i * n..i * n + n];
                for (o, bv) in out_row.iter_mut().zip(b_row) {
                    *o += air * bv;
                }
            }
        }
    });
    out
}

/// `a (m×k) · bᵀ (k×n)` where `b` is stored `n×k`. Used for input gradients.
pub fn matmul_a_bt(a: &Tensor2D, b: &Tensor2D) -> Tensor2D {
    assert_eq!(a.cols, b.cols, "inner dimension mismatch in matmul_a_bt");
    let (m, k, n) = (a.rows, a.cols, b.rows);
    let mut out = Tensor2D::zeros(m, n);
    let rc = rows_per_chunk(n);
    par::for_each_chunk_mut(&mut out.data, rc * n, |chunk, block| {
        let i0 = chunk * rc;
        for (di, out_row) in block.chunks_mut(n).enumerate() {
            let a_row = a.row(i0 + di);
            for (j, o) in out_row.iter_mut().enumerate() {
                let b_row = &b.data[j * k..j * k + k];
                let mut acc = 0.0;
                for (av, bv) in a_row.iter().zip(b_row) {
                    acc += av * bv;
                }
                *o = acc;
            }
        }
    });
    out
}

/// Add a bias row to every row of `x` in place.
pub fn add_bias(x: &mut Tensor2D, bias: &[f64]) {
    assert_eq!(x.cols, bias.len(), "bias width mismatch");
    let cols = x.cols;
    par::for_each_chunk_mut(&mut x.data, cols, |_, row| {
        for (v, b) in row.iter_mut().zip(bias) {
            *v += *b;
        }
    });
}
