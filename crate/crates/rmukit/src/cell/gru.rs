//! GRU baseline cell.
//!
//! ```text
//! r = sigmoid(W_r h + U_r x + b_r)
//! z = sigmoid(W_z h + U_z x + b_z)
//! h_tilde = tanh(W_h (r . h) + U_h x + b_h)
//! h_new = z . h + (1 - z) . h_tilde
//! ```
//!
//! The reset gate is applied to the previous hidden state *before* the
//! recurrent matrix, matching the candidate's parenthesization above.

use crate::error::{Error, Result};
use crate::math::{self, Activation, Matrix};
use crate::real::Real;

use super::{ParamTensors, StepGrads, TensorView, TensorViewMut};

#[derive(Debug, Clone, PartialEq)]
pub struct GruParams<T> {
    pub d_in: usize,
    pub d_hid: usize,
    pub w_r: Matrix<T>,
    pub u_r: Matrix<T>,
    pub b_r: Vec<T>,
    pub w_z: Matrix<T>,
    pub u_z: Matrix<T>,
    pub b_z: Vec<T>,
    pub w_h: Matrix<T>,
    pub u_h: Matrix<T>,
    pub b_h: Vec<T>,
}

pub type GruGrads<T> = GruParams<T>;

impl<T: Real> GruParams<T> {
    pub fn zeros(d_in: usize, d_hid: usize) -> Self {
        GruParams {
            d_in,
            d_hid,
            w_r: Matrix::zeros(d_hid, d_hid),
            u_r: Matrix::zeros(d_in, d_hid),
            b_r: vec![T::zero(); d_hid],
            w_z: Matrix::zeros(d_hid, d_hid),
            u_z: Matrix::zeros(d_in, d_hid),
            b_z: vec![T::zero(); d_hid],
            w_h: Matrix::zeros(d_hid, d_hid),
            u_h: Matrix::zeros(d_in, d_hid),
            b_h: vec![T::zero(); d_hid],
        }
    }
}

impl<T: Real> ParamTensors<T> for GruParams<T> {
    fn tensors(&self) -> Vec<TensorView<'_, T>> {
        let (i, h) = (self.d_in, self.d_hid);
        vec![
            TensorView { name: "w_r", shape: vec![h, h], data: self.w_r.data() },
            TensorView { name: "u_r", shape: vec![i, h], data: self.u_r.data() },
            TensorView { name: "b_r", shape: vec![h], data: &self.b_r },
            TensorView { name: "w_z", shape: vec![h, h], data: self.w_z.data() },
            TensorView { name: "u_z", shape: vec![i, h], data: self.u_z.data() },
            TensorView { name: "b_z", shape: vec![h], data: &self.b_z },
            TensorView { name: "w_h", shape: vec![h, h], data: self.w_h.data() },
            TensorView { name: "u_h", shape: vec![i, h], data: self.u_h.data() },
            TensorView { name: "b_h", shape: vec![h], data: &self.b_h },
        ]
    }

    fn tensors_mut(&mut self) -> Vec<TensorViewMut<'_, T>> {
        let (i, h) = (self.d_in, self.d_hid);
        vec![
            TensorViewMut { name: "w_r", shape: vec![h, h], data: self.w_r.data_mut() },
            TensorViewMut { name: "u_r", shape: vec![i, h], data: self.u_r.data_mut() },
            TensorViewMut { name: "b_r", shape: vec![h], data: &mut self.b_r },
            TensorViewMut { name: "w_z", shape: vec![h, h], data: self.w_z.data_mut() },
            TensorViewMut { name: "u_z", shape: vec![i, h], data: self.u_z.data_mut() },
            TensorViewMut { name: "b_z", shape: vec![h], data: &mut self.b_z },
            TensorViewMut { name: "w_h", shape: vec![h, h], data: self.w_h.data_mut() },
            TensorViewMut { name: "u_h", shape: vec![i, h], data: self.u_h.data_mut() },
            TensorViewMut { name: "b_h", shape: vec![h], data: &mut self.b_h },
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GruState<T> {
    pub h: Vec<T>,
}

impl<T: Real> GruState<T> {
    pub fn zeros(d_hid: usize) -> Self {
        GruState {
            h: vec![T::zero(); d_hid],
        }
    }
}

#[derive(Debug, Clone)]
pub struct GruStepCache<T> {
    pub x: Vec<T>,
    pub h_prev: Vec<T>,
    pub reset: Vec<T>,
    pub update: Vec<T>,
    /// `reset . h_prev`, the input to the candidate's recurrent matrix.
    pub reset_h: Vec<T>,
    pub h_tilde: Vec<T>,
    pub h: Vec<T>,
}

fn check_dims<T: Real>(params: &GruParams<T>, state: &GruState<T>, x: &[T]) -> Result<()> {
    if x.len() != params.d_in {
        return Err(Error::config(
            "gru_step",
            format!("input has length {}, cell expects d_in={}", x.len(), params.d_in),
        ));
    }
    if state.h.len() != params.d_hid {
        return Err(Error::config(
            "gru_step",
            format!("state length {} differs from d_hid={}", state.h.len(), params.d_hid),
        ));
    }
    Ok(())
}

pub fn step<T: Real>(
    params: &GruParams<T>,
    state: &GruState<T>,
    x: &[T],
) -> Result<(GruState<T>, GruStepCache<T>)> {
    check_dims(params, state, x)?;

    let z_r = math::affine(&params.w_r, &state.h, &params.u_r, x, &params.b_r)?;
    let reset = math::activation(Activation::Sigmoid, &z_r);
    let z_z = math::affine(&params.w_z, &state.h, &params.u_z, x, &params.b_z)?;
    let update = math::activation(Activation::Sigmoid, &z_z);

    let reset_h = math::mul(&reset, &state.h)?;
    let z_h = math::affine(&params.w_h, &reset_h, &params.u_h, x, &params.b_h)?;
    let h_tilde = math::activation(Activation::Tanh, &z_h);

    let mut h = vec![T::zero(); params.d_hid];
    for k in 0..params.d_hid {
        h[k] = update[k] * state.h[k] + (T::one() - update[k]) * h_tilde[k];
    }

    let new_state = GruState { h: h.clone() };
    let cache = GruStepCache {
        x: x.to_vec(),
        h_prev: state.h.clone(),
        reset,
        update,
        reset_h,
        h_tilde,
        h,
    };
    Ok((new_state, cache))
}

pub fn run<T: Real>(
    params: &GruParams<T>,
    xs: &[Vec<T>],
) -> Result<(GruState<T>, Vec<GruStepCache<T>>)> {
    let mut state = GruState::zeros(params.d_hid);
    let mut caches = Vec::with_capacity(xs.len());
    for x in xs {
        let (next, cache) = step(params, &state, x)?;
        state = next;
        caches.push(cache);
    }
    Ok((state, caches))
}

pub fn backward<T: Real>(
    params: &GruParams<T>,
    caches: &[GruStepCache<T>],
    grads: StepGrads<'_, T>,
) -> Result<(GruGrads<T>, Vec<Vec<T>>)> {
    let d_hid = params.d_hid;
    let steps = caches.len();
    grads.expected_len(steps)?;
    for (t, c) in caches.iter().enumerate() {
        if c.x.len() != params.d_in || c.h.len() != d_hid {
            return Err(Error::integrity(
                "gru_backward",
                format!("cache at step {t} does not match the cell dimensions"),
            ));
        }
    }

    let mut g = GruParams::zeros(params.d_in, d_hid);
    let mut d_inputs = vec![vec![T::zero(); params.d_in]; steps];
    let mut d_h_carry = vec![T::zero(); d_hid];

    for t in (0..steps).rev() {
        let c = &caches[t];

        let mut d_h = d_h_carry;
        if let Some(up) = grads.at(t, steps) {
            if up.len() != d_hid {
                return Err(Error::integrity(
                    "gru_backward",
                    format!("upstream gradient at step {t} has length {}", up.len()),
                ));
            }
            for (d, &u) in d_h.iter_mut().zip(up) {
                *d += u;
            }
        }

        let mut d_z_r = vec![T::zero(); d_hid];
        let mut d_z_z = vec![T::zero(); d_hid];
        let mut d_z_h = vec![T::zero(); d_hid];
        let mut d_h_prev = vec![T::zero(); d_hid];
        for k in 0..d_hid {
            let d_update = d_h[k] * (c.h_prev[k] - c.h_tilde[k]);
            let d_h_tilde = d_h[k] * (T::one() - c.update[k]);
            d_h_prev[k] += d_h[k] * c.update[k];
            d_z_z[k] = d_update * c.update[k] * (T::one() - c.update[k]);
            d_z_h[k] = d_h_tilde * (T::one() - c.h_tilde[k] * c.h_tilde[k]);
        }

        // Candidate's recurrent matrix sees reset . h_prev.
        let d_reset_h = params.w_h.back_apply(&d_z_h)?;
        for k in 0..d_hid {
            let d_reset = d_reset_h[k] * c.h_prev[k];
            d_h_prev[k] += d_reset_h[k] * c.reset[k];
            d_z_r[k] = d_reset * c.reset[k] * (T::one() - c.reset[k]);
        }

        g.w_r.add_outer(&c.h_prev, &d_z_r)?;
        g.u_r.add_outer(&c.x, &d_z_r)?;
        g.w_z.add_outer(&c.h_prev, &d_z_z)?;
        g.u_z.add_outer(&c.x, &d_z_z)?;
        g.w_h.add_outer(&c.reset_h, &d_z_h)?;
        g.u_h.add_outer(&c.x, &d_z_h)?;
        for k in 0..d_hid {
            g.b_r[k] += d_z_r[k];
            g.b_z[k] += d_z_z[k];
            g.b_h[k] += d_z_h[k];
        }

        for (d, v) in d_h_prev.iter_mut().zip(params.w_r.back_apply(&d_z_r)?) {
            *d += v;
        }
        for (d, v) in d_h_prev.iter_mut().zip(params.w_z.back_apply(&d_z_z)?) {
            *d += v;
        }

        let mut d_x = params.u_r.back_apply(&d_z_r)?;
        for (d, v) in d_x.iter_mut().zip(params.u_z.back_apply(&d_z_z)?) {
            *d += v;
        }
        for (d, v) in d_x.iter_mut().zip(params.u_h.back_apply(&d_z_h)?) {
            *d += v;
        }
        d_inputs[t] = d_x;

        d_h_carry = d_h_prev;
    }

    Ok((g, d_inputs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_evaluated_single_step() {
        // Gate params 0 (r = z = 0.5), candidate weights 1, bias 0,
        // zero state, x = 1.
        let mut params = GruParams::<f64>::zeros(1, 1);
        params.w_h.data_mut().fill(1.0);
        params.u_h.data_mut().fill(1.0);
        let state = GruState::zeros(1);
        let (next, cache) = step(&params, &state, &[1.0]).unwrap();

        assert_eq!(cache.reset, vec![0.5]);
        assert_eq!(cache.update, vec![0.5]);
        let h_tilde = 1.0f64.tanh();
        assert!((cache.h_tilde[0] - h_tilde).abs() < 1e-15);
        assert!((next.h[0] - 0.5 * h_tilde).abs() < 1e-15);
        assert!((next.h[0] - 0.380_797_077_977_882_4).abs() < 1e-15);
    }

    #[test]
    fn zero_upstream_gradient_gives_zero_gradients() {
        let params = GruParams::<f64>::zeros(2, 3);
        let (_, caches) = run(&params, &[vec![1.0, -1.0], vec![0.5, 0.25]]).unwrap();
        let zero = vec![0.0, 0.0, 0.0];
        let (g, dx) = backward(&params, &caches, StepGrads::FinalOnly(&zero)).unwrap();
        assert!(g.tensors().iter().all(|t| t.data.iter().all(|&v| v == 0.0)));
        assert!(dx.iter().flatten().all(|&v| v == 0.0));
    }
}
