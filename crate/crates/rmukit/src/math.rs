//! Dense linear-algebra and activation primitives, with derivatives.
//!
//! Matrices are stored row-major with `rows` as the *input* dimension and
//! `cols` as the *output* dimension, so a `d_in x d_hid` matrix maps a
//! length-`d_in` vector to a length-`d_hid` vector. All operations are pure
//! functions of their inputs and safe to call from any number of threads.

use crate::error::{Error, Result};
use crate::real::Real;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::config(
                "Matrix::from_vec",
                format!("{rows}x{cols} needs {} elements, got {}", rows * cols, data.len()),
            ));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from nested rows; every row must have equal length.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(Error::config(
                    "Matrix::from_rows",
                    format!("row {i} has {} columns, expected {c}", row.len()),
                ));
            }
            data.extend_from_slice(row);
        }
        Matrix { rows: r, cols: c, data }.validated()
    }

    fn validated(self) -> Result<Self> {
        if self.rows * self.cols != self.data.len() {
            return Err(Error::config("Matrix", "element count mismatch"));
        }
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    /// `v^T M`: maps a length-`rows` vector to a length-`cols` vector.
    pub fn apply(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.rows {
            return Err(Error::config(
                "Matrix::apply",
                format!("matrix maps {} inputs, vector has {}", self.rows, v.len()),
            ));
        }
        let mut out = vec![T::zero(); self.cols];
        for (r, &x) in v.iter().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            for (o, &w) in out.iter_mut().zip(row) {
                *o += w * x;
            }
        }
        Ok(out)
    }

    /// `M d`: pulls an output-side gradient (length `cols`) back to the
    /// input side (length `rows`).
    pub fn back_apply(&self, d: &[T]) -> Result<Vec<T>> {
        if d.len() != self.cols {
            return Err(Error::config(
                "Matrix::back_apply",
                format!("matrix has {} outputs, gradient has {}", self.cols, d.len()),
            ));
        }
        let mut out = vec![T::zero(); self.rows];
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            let mut acc = T::zero();
            for (&w, &g) in row.iter().zip(d) {
                acc += w * g;
            }
            *o = acc;
        }
        Ok(out)
    }

    /// Accumulates the outer product `a d^T` into `self`; the gradient of
    /// `apply(a)` with respect to the matrix, given output gradient `d`.
    pub fn add_outer(&mut self, a: &[T], d: &[T]) -> Result<()> {
        if a.len() != self.rows || d.len() != self.cols {
            return Err(Error::config(
                "Matrix::add_outer",
                format!(
                    "expected {}x{}, got outer product of {}x{}",
                    self.rows,
                    self.cols,
                    a.len(),
                    d.len()
                ),
            ));
        }
        for (r, &x) in a.iter().enumerate() {
            let row = &mut self.data[r * self.cols..(r + 1) * self.cols];
            for (w, &g) in row.iter_mut().zip(d) {
                *w += x * g;
            }
        }
        Ok(())
    }
}

/// `W a + U b + bias`, the shared pre-activation form of every gate.
///
/// `W` multiplies the recurrent operand `a` (the previous appraisal state)
/// and `U` multiplies the feed-in operand `b_vec` (the current input) —
/// note this is the reverse of the usual W=input / U=recurrent naming;
/// the gate equations here keep W on the hidden state.
pub fn affine<T: Real>(
    w: &Matrix<T>,
    a: &[T],
    u: &Matrix<T>,
    b_vec: &[T],
    bias: &[T],
) -> Result<Vec<T>> {
    if w.rows() != a.len() {
        return Err(Error::config(
            "affine",
            format!("W maps {} inputs but a has length {}", w.rows(), a.len()),
        ));
    }
    if u.rows() != b_vec.len() {
        return Err(Error::config(
            "affine",
            format!("U maps {} inputs but b has length {}", u.rows(), b_vec.len()),
        ));
    }
    if w.cols() != bias.len() || u.cols() != bias.len() {
        return Err(Error::config(
            "affine",
            format!(
                "output lengths disagree: W gives {}, U gives {}, bias has {}",
                w.cols(),
                u.cols(),
                bias.len()
            ),
        ));
    }
    let mut out = w.apply(a)?;
    let ub = u.apply(b_vec)?;
    for ((o, &x), &b) in out.iter_mut().zip(&ub).zip(bias) {
        *o += x + b;
    }
    Ok(out)
}

/// Elementwise nonlinearities used by the cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Sigmoid,
    Relu,
}

#[inline]
pub fn sigmoid_scalar<T: Real>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

/// Applies `kind` elementwise.
pub fn activation<T: Real>(kind: Activation, v: &[T]) -> Vec<T> {
    match kind {
        Activation::Tanh => v.iter().map(|&x| x.tanh()).collect(),
        Activation::Sigmoid => v.iter().map(|&x| sigmoid_scalar(x)).collect(),
        Activation::Relu => v.iter().map(|&x| x.max(T::zero())).collect(),
    }
}

/// Derivative of `kind` evaluated at the pre-activation `v`.
/// The relu derivative at exactly 0 is 0 (subgradient convention).
pub fn activation_grad<T: Real>(kind: Activation, v: &[T]) -> Vec<T> {
    match kind {
        Activation::Tanh => v
            .iter()
            .map(|&x| {
                let t = x.tanh();
                T::one() - t * t
            })
            .collect(),
        Activation::Sigmoid => v
            .iter()
            .map(|&x| {
                let s = sigmoid_scalar(x);
                s * (T::one() - s)
            })
            .collect(),
        Activation::Relu => v
            .iter()
            .map(|&x| if x > T::zero() { T::one() } else { T::zero() })
            .collect(),
    }
}

/// Which argument an elementwise `max` selected, recorded so the backward
/// pass can route the gradient to the same branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArgWinner {
    First,
    Second,
}

fn check_len<T>(op: &'static str, a: &[T], b: &[T]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::config(
            op,
            format!("length mismatch: {} vs {}", a.len(), b.len()),
        ));
    }
    Ok(())
}

/// Hadamard product.
pub fn mul<T: Real>(a: &[T], b: &[T]) -> Result<Vec<T>> {
    check_len("elementwise mul", a, b)?;
    Ok(a.iter().zip(b).map(|(&x, &y)| x * y).collect())
}

pub fn sub<T: Real>(a: &[T], b: &[T]) -> Result<Vec<T>> {
    check_len("elementwise sub", a, b)?;
    Ok(a.iter().zip(b).map(|(&x, &y)| x - y).collect())
}

/// Elementwise maximum. On exact equality the winner is the FIRST
/// argument, so ties route deterministically to the decayed-memory branch.
pub fn max_with_winners<T: Real>(a: &[T], b: &[T]) -> Result<(Vec<T>, Vec<ArgWinner>)> {
    check_len("elementwise max", a, b)?;
    let mut out = Vec::with_capacity(a.len());
    let mut winners = Vec::with_capacity(a.len());
    for (&x, &y) in a.iter().zip(b) {
        if y > x {
            out.push(y);
            winners.push(ArgWinner::Second);
        } else {
            out.push(x);
            winners.push(ArgWinner::First);
        }
    }
    Ok((out, winners))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_zero_weights_returns_bias() {
        let w = Matrix::<f64>::zeros(1, 1);
        let u = Matrix::<f64>::zeros(1, 1);
        let out = affine(&w, &[0.7], &u, &[0.2], &[0.3]).unwrap();
        assert_eq!(out, vec![0.3]);
    }

    #[test]
    fn affine_one_by_one_arithmetic() {
        let w = Matrix::from_vec(1, 1, vec![1.0]).unwrap();
        let u = Matrix::from_vec(1, 1, vec![-1.0]).unwrap();
        let out = affine(&w, &[2.0], &u, &[3.0], &[0.5]).unwrap();
        assert!((out[0] - (-0.5)).abs() < 1e-15);
    }

    #[test]
    fn affine_matches_naive_double_loop() {
        // Independent oracle: brute-force double loop over a fixed 3x2 instance.
        let w = Matrix::from_vec(3, 2, vec![0.1, -0.4, 0.7, 0.2, -0.9, 0.3]).unwrap();
        let u = Matrix::from_vec(2, 2, vec![0.5, -0.6, 0.8, 0.05]).unwrap();
        let a = [1.5, -2.0, 0.25];
        let b = [-0.75, 0.4];
        let bias = [0.01, -0.02];

        let mut expected = [0.0f64; 2];
        for c in 0..2 {
            let mut acc = bias[c];
            for (r, &x) in a.iter().enumerate() {
                acc += w.get(r, c) * x;
            }
            for (r, &x) in b.iter().enumerate() {
                acc += u.get(r, c) * x;
            }
            expected[c] = acc;
        }

        let out = affine(&w, &a, &u, &b, &bias).unwrap();
        for (got, want) in out.iter().zip(expected) {
            assert!((got - want).abs() < 1e-14, "got {got}, want {want}");
        }
    }

    #[test]
    fn affine_dimension_mismatch_names_operand() {
        let w = Matrix::<f64>::zeros(2, 2);
        let u = Matrix::<f64>::zeros(1, 2);
        let err = affine(&w, &[1.0], &u, &[1.0], &[0.0, 0.0]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("W maps 2 inputs"), "unexpected: {msg}");
    }

    #[test]
    fn activation_fixed_points() {
        assert_eq!(activation::<f64>(Activation::Tanh, &[0.0]), vec![0.0]);
        assert_eq!(activation::<f64>(Activation::Sigmoid, &[0.0]), vec![0.5]);
        assert_eq!(activation::<f64>(Activation::Relu, &[-1.0]), vec![0.0]);
    }

    #[test]
    fn tanh_reference_value() {
        let out = activation::<f64>(Activation::Tanh, &[1.0]);
        assert!((out[0] - 0.761_594_155_955_764_9).abs() < 1e-15);
    }

    #[test]
    fn activation_grad_at_zero() {
        assert_eq!(activation_grad::<f64>(Activation::Tanh, &[0.0]), vec![1.0]);
        assert_eq!(activation_grad::<f64>(Activation::Relu, &[0.0]), vec![0.0]);
    }

    #[test]
    fn elementwise_examples() {
        let (m, w) = max_with_winners(&[0.2, 0.9], &[0.5, 0.1]).unwrap();
        assert_eq!(m, vec![0.5, 0.9]);
        assert_eq!(w, vec![ArgWinner::Second, ArgWinner::First]);

        assert_eq!(mul(&[2.0, 3.0], &[4.0, 0.0]).unwrap(), vec![8.0, 0.0]);
        assert_eq!(sub(&[1.0], &[1.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn max_tie_goes_to_first() {
        let (m, w) = max_with_winners(&[0.4, 0.4], &[0.4, 0.4]).unwrap();
        assert_eq!(m, vec![0.4, 0.4]);
        assert!(w.iter().all(|&x| x == ArgWinner::First));
    }

    #[test]
    fn elementwise_length_mismatch() {
        assert!(mul(&[1.0], &[1.0, 2.0]).is_err());
    }
}
