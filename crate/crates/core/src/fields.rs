//! Vector and matrix fields with certified Lipschitz data.
//!
//! A [`Field`] maps `ℝ^d` to `ℝ^{rows×cols}` (stored row-major) and is the sum
//! of an affine part and sine terms `amp · sin(y_coord)` placed in single
//! output slots. Drift fields use `cols = 1`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{param_err, Result};
use crate::linalg::opnorm;

/// `amp · sin(y[coord])` added to output entry `(row, col)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SineTerm {
    pub row: usize,
    pub col: usize,
    pub coord: usize,
    pub amp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    rows: usize,
    cols: usize,
    dim: usize,
    /// `(rows·cols) × dim`, row-major.
    linear: Vec<f64>,
    offset: Vec<f64>,
    sines: Vec<SineTerm>,
}

impl Field {
    pub fn zero(rows: usize, cols: usize, dim: usize) -> Self {
        Field {
            rows,
            cols,
            dim,
            linear: vec![0.0; rows * cols * dim],
            offset: vec![0.0; rows * cols],
            sines: Vec::new(),
        }
    }

    /// Constant field with row-major value `value`.
    pub fn constant(rows: usize, cols: usize, dim: usize, value: Vec<f64>) -> Result<Self> {
        if value.len() != rows * cols {
            return Err(param_err!("constant field needs {} entries, got {}", rows * cols, value.len()));
        }
        Ok(Field { offset: value, ..Field::zero(rows, cols, dim) })
    }

    /// Vector field `y ↦ M y`.
    pub fn linear_vector(m: &DMatrix<f64>) -> Self {
        let (rows, dim) = m.shape();
        let mut f = Field::zero(rows, 1, dim);
        for r in 0..rows {
            for c in 0..dim {
                f.linear[r * dim + c] = m[(r, c)];
            }
        }
        f
    }

    /// Matrix field `y ↦ [C_1 y | … | C_m y] + g0`, i.e. column `j` is `C_j y`.
    pub fn affine_columns(columns: &[DMatrix<f64>], g0: Option<&DMatrix<f64>>) -> Result<Self> {
        let Some(first) = columns.first() else {
            return Err(param_err!("need at least one column map"));
        };
        let (rows, dim) = first.shape();
        let cols = columns.len();
        if columns.iter().any(|c| c.shape() != (rows, dim)) {
            return Err(param_err!("column maps must share one shape"));
        }
        let mut f = Field::zero(rows, cols, dim);
        for (j, cm) in columns.iter().enumerate() {
            for r in 0..rows {
                let slot = r * cols + j;
                for c in 0..dim {
                    f.linear[slot * dim + c] = cm[(r, c)];
                }
            }
        }
        if let Some(g0) = g0 {
            if g0.shape() != (rows, cols) {
                return Err(param_err!("offset must be {rows}x{cols}"));
            }
            for r in 0..rows {
                for j in 0..cols {
                    f.offset[r * cols + j] = g0[(r, j)];
                }
            }
        }
        Ok(f)
    }

    /// Adds `amp · sin(y[coord])` to entry `(row, col)`.
    pub fn with_sine(mut self, row: usize, col: usize, coord: usize, amp: f64) -> Result<Self> {
        if row >= self.rows || col >= self.cols || coord >= self.dim {
            return Err(param_err!("sine term ({row}, {col}, y{coord}) out of range"));
        }
        if !amp.is_finite() {
            return Err(param_err!("sine amplitude must be finite"));
        }
        if amp != 0.0 {
            self.sines.push(SineTerm { row, col, coord, amp });
        }
        Ok(self)
    }

    /// Adds `coef · y[coord]` to entry `(row, col)`.
    pub fn with_linear(mut self, row: usize, col: usize, coord: usize, coef: f64) -> Result<Self> {
        if row >= self.rows || col >= self.cols || coord >= self.dim {
            return Err(param_err!("linear term ({row}, {col}, y{coord}) out of range"));
        }
        self.linear[(row * self.cols + col) * self.dim + coord] += coef;
        Ok(self)
    }

    /// Adds the constant `value` to entry `(row, col)`.
    pub fn with_offset(mut self, row: usize, col: usize, value: f64) -> Result<Self> {
        if row >= self.rows || col >= self.cols {
            return Err(param_err!("offset ({row}, {col}) out of range"));
        }
        self.offset[row * self.cols + col] += value;
        Ok(self)
    }

    /// Pointwise sum of two fields of equal shape.
    pub fn add(mut self, other: &Field) -> Result<Self> {
        if (self.rows, self.cols, self.dim) != (other.rows, other.cols, other.dim) {
            return Err(param_err!("cannot add fields of different shapes"));
        }
        self.linear.iter_mut().zip(&other.linear).for_each(|(a, b)| *a += b);
        self.offset.iter_mut().zip(&other.offset).for_each(|(a, b)| *a += b);
        self.sines.extend_from_slice(&other.sines);
        Ok(self)
    }

    /// Every coefficient multiplied by `c`.
    pub fn scaled(mut self, c: f64) -> Self {
        self.linear.iter_mut().for_each(|v| *v *= c);
        self.offset.iter_mut().for_each(|v| *v *= c);
        self.sines.iter_mut().for_each(|s| s.amp *= c);
        self
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn out_len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn eval_into(&self, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.dim);
        let d = self.dim;
        for (slot, o) in out.iter_mut().enumerate().take(self.out_len()) {
            let row = &self.linear[slot * d..(slot + 1) * d];
            *o = self.offset[slot] + row.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
        }
        for s in &self.sines {
            out[s.row * self.cols + s.col] += s.amp * y[s.coord].sin();
        }
    }

    pub fn eval(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.out_len()];
        self.eval_into(y, &mut out);
        out
    }

    /// Value at the origin.
    pub fn at_zero(&self) -> &[f64] {
        &self.offset
    }

    pub fn is_affine(&self) -> bool {
        self.sines.is_empty()
    }

    /// The linear part as a `(rows·cols) × dim` matrix.
    pub fn linear_part(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.out_len(), self.dim, &self.linear)
    }

    /// Entrywise bound on `|∂F_slot/∂y_c|`, as a `(rows·cols) × dim` matrix.
    fn abs_majorant(&self, include_linear: bool) -> DMatrix<f64> {
        let d = self.dim;
        let mut m = DMatrix::zeros(self.out_len(), d);
        if include_linear {
            for slot in 0..self.out_len() {
                for c in 0..d {
                    m[(slot, c)] = self.linear[slot * d + c].abs();
                }
            }
        }
        for s in &self.sines {
            m[(s.row * self.cols + s.col, s.coord)] += s.amp.abs();
        }
        m
    }

    /// Certified Lipschitz constant in the Euclidean / Frobenius norms.
    ///
    /// Affine fields use the exact operator norm of the linear part. With sine
    /// terms, `|ΔF_slot| ≤ Σ_c M_{slot,c}|Δy_c|` for the entrywise majorant `M`,
    /// so `‖M‖` is a valid constant.
    pub fn lipschitz(&self) -> f64 {
        if self.is_affine() {
            opnorm(&self.linear_part())
        } else {
            opnorm(&self.abs_majorant(true))
        }
    }

    /// Lipschitz constant of the derivative `DF`, Frobenius norm on `DF`.
    pub fn derivative_lipschitz(&self) -> f64 {
        let m = self.abs_majorant(false);
        (0..self.dim)
            .map(|c| m.column(c).iter().map(|v| v * v).sum::<f64>())
            .fold(0.0, f64::max)
            .sqrt()
    }

    /// `sup_y ‖F(y)‖` when finite (no linear part).
    pub fn sup_bound(&self) -> Option<f64> {
        if self.linear.iter().any(|v| *v != 0.0) {
            return None;
        }
        let mut slot = self.offset.iter().map(|v| v.abs()).collect::<Vec<_>>();
        for s in &self.sines {
            slot[s.row * self.cols + s.col] += s.amp.abs();
        }
        Some(slot.iter().map(|v| v * v).sum::<f64>().sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_columns_layout() {
        let c1 = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let c2 = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let g0 = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, -0.5]);
        let f = Field::affine_columns(&[c1, c2], Some(&g0)).unwrap();
        // column j of the output is C_j y + g0[:, j]
        let v = f.eval(&[1.0, -1.0]);
        assert_eq!(v, vec![-1.0 + 0.5, -1.0, -1.0, 1.0 - 0.5]);
        assert!(f.is_affine());
        assert_eq!(f.sup_bound(), None);
    }

    #[test]
    fn sine_field_constants() {
        let f = Field::zero(2, 1, 2).with_sine(1, 0, 0, 0.3).unwrap();
        assert!((f.lipschitz() - 0.3).abs() < 1e-14);
        assert!((f.derivative_lipschitz() - 0.3).abs() < 1e-14);
        assert_eq!(f.sup_bound(), Some(0.3));
        assert_eq!(f.at_zero(), &[0.0, 0.0]);
    }

    #[test]
    fn mixed_sine_and_linear_majorant() {
        // slots on the same coordinate combine in quadrature
        let f = Field::zero(2, 3, 2)
            .with_sine(1, 0, 0, 0.3)
            .unwrap()
            .with_linear(1, 2, 0, -0.4)
            .unwrap()
            .with_linear(1, 1, 1, 0.2)
            .unwrap();
        assert!((f.lipschitz() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn add_and_scale() {
        let a = Field::constant(1, 1, 1, vec![1.0]).unwrap();
        let b = Field::zero(1, 1, 1).with_sine(0, 0, 0, 2.0).unwrap();
        let s = a.add(&b).unwrap().scaled(0.5);
        let y = 0.7f64;
        assert!((s.eval(&[y])[0] - (0.5 + y.sin())).abs() < 1e-15);
        assert!(Field::zero(1, 1, 1).add(&Field::zero(2, 1, 1)).is_err());
    }
}
