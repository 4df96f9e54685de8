//! LSTM baseline cell (no peephole connections).
//!
//! ```text
//! i = sigmoid(W_i h + U_i x + b_i)
//! f = sigmoid(W_f h + U_f x + b_f)
//! o = sigmoid(W_o h + U_o x + b_o)
//! c_tilde = tanh(W_c h + U_c x + b_c)
//! c = f . c_prev + i . c_tilde
//! h = o . tanh(c)
//! ```

use crate::error::{Error, Result};
use crate::math::{self, Activation, Matrix};
use crate::real::Real;

use super::{ParamTensors, StepGrads, TensorView, TensorViewMut};

#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams<T> {
    pub d_in: usize,
    pub d_hid: usize,
    pub w_i: Matrix<T>,
    pub u_i: Matrix<T>,
    pub b_i: Vec<T>,
    pub w_f: Matrix<T>,
    pub u_f: Matrix<T>,
    pub b_f: Vec<T>,
    pub w_o: Matrix<T>,
    pub u_o: Matrix<T>,
    pub b_o: Vec<T>,
    pub w_c: Matrix<T>,
    pub u_c: Matrix<T>,
    pub b_c: Vec<T>,
}

pub type LstmGrads<T> = LstmParams<T>;

impl<T: Real> LstmParams<T> {
    pub fn zeros(d_in: usize, d_hid: usize) -> Self {
        LstmParams {
            d_in,
            d_hid,
            w_i: Matrix::zeros(d_hid, d_hid),
            u_i: Matrix::zeros(d_in, d_hid),
            b_i: vec![T::zero(); d_hid],
            w_f: Matrix::zeros(d_hid, d_hid),
            u_f: Matrix::zeros(d_in, d_hid),
            b_f: vec![T::zero(); d_hid],
            w_o: Matrix::zeros(d_hid, d_hid),
            u_o: Matrix::zeros(d_in, d_hid),
            b_o: vec![T::zero(); d_hid],
            w_c: Matrix::zeros(d_hid, d_hid),
            u_c: Matrix::zeros(d_in, d_hid),
            b_c: vec![T::zero(); d_hid],
        }
    }
}

impl<T: Real> ParamTensors<T> for LstmParams<T> {
    fn tensors(&self) -> Vec<TensorView<'_, T>> {
        let (i, h) = (self.d_in, self.d_hid);
        vec![
            TensorView { name: "w_i", shape: vec![h, h], data: self.w_i.data() },
            TensorView { name: "u_i", shape: vec![i, h], data: self.u_i.data() },
            TensorView { name: "b_i", shape: vec![h], data: &self.b_i },
            TensorView { name: "w_f", shape: vec![h, h], data: self.w_f.data() },
            TensorView { name: "u_f", shape: vec![i, h], data: self.u_f.data() },
            TensorView { name: "b_f", shape: vec![h], data: &self.b_f },
            TensorView { name: "w_o", shape: vec![h, h], data: self.w_o.data() },
            TensorView { name: "u_o", shape: vec![i, h], data: self.u_o.data() },
            TensorView { name: "b_o", shape: vec![h], data: &self.b_o },
            TensorView { name: "w_c", shape: vec![h, h], data: self.w_c.data() },
            TensorView { name: "u_c", shape: vec![i, h], data: self.u_c.data() },
            TensorView { name: "b_c", shape: vec![h], data: &self.b_c },
        ]
    }

    fn tensors_mut(&mut self) -> Vec<TensorViewMut<'_, T>> {
        let (i, h) = (self.d_in, self.d_hid);
        vec![
            TensorViewMut { name: "w_i", shape: vec![h, h], data: self.w_i.data_mut() },
            TensorViewMut { name: "u_i", shape: vec![i, h], data: self.u_i.data_mut() },
            TensorViewMut { name: "b_i", shape: vec![h], data: &mut self.b_i },
            TensorViewMut { name: "w_f", shape: vec![h, h], data: self.w_f.data_mut() },
            TensorViewMut { name: "u_f", shape: vec![i, h], data: self.u_f.data_mut() },
            TensorViewMut { name: "b_f", shape: vec![h], data: &mut self.b_f },
            TensorViewMut { name: "w_o", shape: vec![h, h], data: self.w_o.data_mut() },
            TensorViewMut { name: "u_o", shape: vec![i, h], data: self.u_o.data_mut() },
            TensorViewMut { name: "b_o", shape: vec![h], data: &mut self.b_o },
            TensorViewMut { name: "w_c", shape: vec![h, h], data: self.w_c.data_mut() },
            TensorViewMut { name: "u_c", shape: vec![i, h], data: self.u_c.data_mut() },
            TensorViewMut { name: "b_c", shape: vec![h], data: &mut self.b_c },
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmState<T> {
    pub h: Vec<T>,
    pub c: Vec<T>,
}

impl<T: Real> LstmState<T> {
    pub fn zeros(d_hid: usize) -> Self {
        LstmState {
            h: vec![T::zero(); d_hid],
            c: vec![T::zero(); d_hid],
        }
    }
}

#[derive(Debug, Clone)]
pub struct LstmStepCache<T> {
    pub x: Vec<T>,
    pub h_prev: Vec<T>,
    pub c_prev: Vec<T>,
    pub i: Vec<T>,
    pub f: Vec<T>,
    pub o: Vec<T>,
    pub c_tilde: Vec<T>,
    pub c: Vec<T>,
    pub tanh_c: Vec<T>,
    pub h: Vec<T>,
}

fn check_dims<T: Real>(params: &LstmParams<T>, state: &LstmState<T>, x: &[T]) -> Result<()> {
    if x.len() != params.d_in {
        return Err(Error::config(
            "lstm_step",
            format!("input has length {}, cell expects d_in={}", x.len(), params.d_in),
        ));
    }
    if state.h.len() != params.d_hid || state.c.len() != params.d_hid {
        return Err(Error::config(
            "lstm_step",
            format!(
                "state lengths (h={}, c={}) differ from d_hid={}",
                state.h.len(),
                state.c.len(),
                params.d_hid
            ),
        ));
    }
    Ok(())
}

pub fn step<T: Real>(
    params: &LstmParams<T>,
    state: &LstmState<T>,
    x: &[T],
) -> Result<(LstmState<T>, LstmStepCache<T>)> {
    check_dims(params, state, x)?;

    let z_i = math::affine(&params.w_i, &state.h, &params.u_i, x, &params.b_i)?;
    let i = math::activation(Activation::Sigmoid, &z_i);
    let z_f = math::affine(&params.w_f, &state.h, &params.u_f, x, &params.b_f)?;
    let f = math::activation(Activation::Sigmoid, &z_f);
    let z_o = math::affine(&params.w_o, &state.h, &params.u_o, x, &params.b_o)?;
    let o = math::activation(Activation::Sigmoid, &z_o);
    let z_c = math::affine(&params.w_c, &state.h, &params.u_c, x, &params.b_c)?;
    let c_tilde = math::activation(Activation::Tanh, &z_c);

    let mut c = vec![T::zero(); params.d_hid];
    for k in 0..params.d_hid {
        c[k] = f[k] * state.c[k] + i[k] * c_tilde[k];
    }
    let tanh_c = math::activation(Activation::Tanh, &c);
    let h = math::mul(&o, &tanh_c)?;

    let new_state = LstmState { h: h.clone(), c: c.clone() };
    let cache = LstmStepCache {
        x: x.to_vec(),
        h_prev: state.h.clone(),
        c_prev: state.c.clone(),
        i,
        f,
        o,
        c_tilde,
        c,
        tanh_c,
        h,
    };
    Ok((new_state, cache))
}

pub fn run<T: Real>(
    params: &LstmParams<T>,
    xs: &[Vec<T>],
) -> Result<(LstmState<T>, Vec<LstmStepCache<T>>)> {
    let mut state = LstmState::zeros(params.d_hid);
    let mut caches = Vec::with_capacity(xs.len());
    for x in xs {
        let (next, cache) = step(params, &state, x)?;
        state = next;
        caches.push(cache);
    }
    Ok((state, caches))
}

pub fn backward<T: Real>(
    params: &LstmParams<T>,
    caches: &[LstmStepCache<T>],
    grads: StepGrads<'_, T>,
) -> Result<(LstmGrads<T>, Vec<Vec<T>>)> {
    let d_hid = params.d_hid;
    let steps = caches.len();
    grads.expected_len(steps)?;
    for (t, c) in caches.iter().enumerate() {
        if c.x.len() != params.d_in || c.h.len() != d_hid {
            return Err(Error::integrity(
                "lstm_backward",
                format!("cache at step {t} does not match the cell dimensions"),
            ));
        }
    }

    let mut g = LstmParams::zeros(params.d_in, d_hid);
    let mut d_inputs = vec![vec![T::zero(); params.d_in]; steps];
    let mut d_h_carry = vec![T::zero(); d_hid];
    let mut d_c_carry = vec![T::zero(); d_hid];

    for t in (0..steps).rev() {
        let c = &caches[t];

        let mut d_h = d_h_carry;
        if let Some(up) = grads.at(t, steps) {
            if up.len() != d_hid {
                return Err(Error::integrity(
                    "lstm_backward",
                    format!("upstream gradient at step {t} has length {}", up.len()),
                ));
            }
            for (d, &u) in d_h.iter_mut().zip(up) {
                *d += u;
            }
        }

        let mut d_z_i = vec![T::zero(); d_hid];
        let mut d_z_f = vec![T::zero(); d_hid];
        let mut d_z_o = vec![T::zero(); d_hid];
        let mut d_z_c = vec![T::zero(); d_hid];
        let mut next_c_carry = vec![T::zero(); d_hid];
        for k in 0..d_hid {
            let d_o = d_h[k] * c.tanh_c[k];
            let d_c_total =
                d_c_carry[k] + d_h[k] * c.o[k] * (T::one() - c.tanh_c[k] * c.tanh_c[k]);
            let d_f = d_c_total * c.c_prev[k];
            let d_i = d_c_total * c.c_tilde[k];
            let d_c_tilde = d_c_total * c.i[k];
            next_c_carry[k] = d_c_total * c.f[k];

            d_z_i[k] = d_i * c.i[k] * (T::one() - c.i[k]);
            d_z_f[k] = d_f * c.f[k] * (T::one() - c.f[k]);
            d_z_o[k] = d_o * c.o[k] * (T::one() - c.o[k]);
            d_z_c[k] = d_c_tilde * (T::one() - c.c_tilde[k] * c.c_tilde[k]);
        }

        g.w_i.add_outer(&c.h_prev, &d_z_i)?;
        g.u_i.add_outer(&c.x, &d_z_i)?;
        g.w_f.add_outer(&c.h_prev, &d_z_f)?;
        g.u_f.add_outer(&c.x, &d_z_f)?;
        g.w_o.add_outer(&c.h_prev, &d_z_o)?;
        g.u_o.add_outer(&c.x, &d_z_o)?;
        g.w_c.add_outer(&c.h_prev, &d_z_c)?;
        g.u_c.add_outer(&c.x, &d_z_c)?;
        for k in 0..d_hid {
            g.b_i[k] += d_z_i[k];
            g.b_f[k] += d_z_f[k];
            g.b_o[k] += d_z_o[k];
            g.b_c[k] += d_z_c[k];
        }

        let mut d_h_prev = params.w_i.back_apply(&d_z_i)?;
        for (d, v) in d_h_prev.iter_mut().zip(params.w_f.back_apply(&d_z_f)?) {
            *d += v;
        }
        for (d, v) in d_h_prev.iter_mut().zip(params.w_o.back_apply(&d_z_o)?) {
            *d += v;
        }
        for (d, v) in d_h_prev.iter_mut().zip(params.w_c.back_apply(&d_z_c)?) {
            *d += v;
        }

        let mut d_x = params.u_i.back_apply(&d_z_i)?;
        for (d, v) in d_x.iter_mut().zip(params.u_f.back_apply(&d_z_f)?) {
            *d += v;
        }
        for (d, v) in d_x.iter_mut().zip(params.u_o.back_apply(&d_z_o)?) {
            *d += v;
        }
        for (d, v) in d_x.iter_mut().zip(params.u_c.back_apply(&d_z_c)?) {
            *d += v;
        }
        d_inputs[t] = d_x;

        d_h_carry = d_h_prev;
        d_c_carry = next_c_carry;
    }

    Ok((g, d_inputs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weight_fixed_point() {
        let params = LstmParams::<f64>::zeros(2, 2);
        let state = LstmState::zeros(2);
        let (next, cache) = step(&params, &state, &[3.0, -1.0]).unwrap();
        assert_eq!(cache.i, vec![0.5, 0.5]);
        assert_eq!(cache.f, vec![0.5, 0.5]);
        assert_eq!(cache.o, vec![0.5, 0.5]);
        assert_eq!(cache.c_tilde, vec![0.0, 0.0]);
        assert_eq!(next.c, vec![0.0, 0.0]);
        assert_eq!(next.h, vec![0.0, 0.0]);
    }

    #[test]
    fn hand_evaluated_single_step() {
        // d_in = d_hid = 1, all weights 1, biases 0, zero state, x = 1.
        let mut params = LstmParams::<f64>::zeros(1, 1);
        for t in params.tensors_mut() {
            if t.name.starts_with('w') || t.name.starts_with('u') {
                t.data.fill(1.0);
            }
        }
        let state = LstmState::zeros(1);
        let (next, cache) = step(&params, &state, &[1.0]).unwrap();

        let sig1 = 1.0 / (1.0 + (-1.0f64).exp());
        let c_tilde = 1.0f64.tanh();
        let c = sig1 * c_tilde;
        let h = sig1 * c.tanh();

        assert!((cache.i[0] - sig1).abs() < 1e-15);
        assert!((cache.i[0] - 0.731_058_578_630_004_9).abs() < 1e-15);
        assert!((cache.c_tilde[0] - c_tilde).abs() < 1e-15);
        assert!((next.c[0] - c).abs() < 1e-15);
        assert!((next.c[0] - 0.556_769_941_145_939_7).abs() < 1e-15);
        assert!((next.h[0] - h).abs() < 1e-15);
        assert!((next.h[0] - 0.369_606_352_935_705_8).abs() < 1e-15);
    }

    #[test]
    fn zero_upstream_gradient_gives_zero_gradients() {
        let mut params = LstmParams::<f64>::zeros(2, 2);
        params.b_f.fill(1.0);
        let (_, caches) = run(&params, &[vec![1.0, 0.5], vec![-0.25, 2.0]]).unwrap();
        let zero = vec![0.0, 0.0];
        let (g, dx) = backward(&params, &caches, StepGrads::FinalOnly(&zero)).unwrap();
        assert!(g.tensors().iter().all(|t| t.data.iter().all(|&v| v == 0.0)));
        assert!(dx.iter().flatten().all(|&v| v == 0.0));
    }
}
