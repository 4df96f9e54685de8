//! Reinforcement-memory recurrent cell.
//!
//! Per step, with previous appraisal `h` and memories `c_plus`, `c_minus`:
//!
//! ```text
//! s       = tanh(W_s h + U_s x + b_s)                 stimulus response
//! f_plus  = sigmoid(W_f_plus  h + U_f_plus  x + b_f_plus)
//! f_minus = sigmoid(W_f_minus h + U_f_minus x + b_f_minus)
//! c_plus  = max(f_plus  . c_plus,  relu(s))
//! c_minus = max(f_minus . c_minus, relu(-s))
//! h       = tanh(c_plus - c_minus)
//! ```
//!
//! The rectifications make the sign of `s` route each stimulus to exactly
//! one memory; the elementwise max keeps whichever of the decayed memory
//! and the fresh response is stronger. Starting from the zero state this
//! keeps every memory element in `[0, 1)` and every appraisal element in
//! `(-1, 1)`.

use crate::error::{Error, Result};
use crate::math::{self, Activation, ArgWinner, Matrix};
use crate::real::Real;

use super::{ParamTensors, StepGrads, TensorView, TensorViewMut};

#[derive(Debug, Clone, PartialEq)]
pub struct RmuParams<T> {
    pub d_in: usize,
    pub d_hid: usize,
    pub w_s: Matrix<T>,
    pub u_s: Matrix<T>,
    pub b_s: Vec<T>,
    pub w_f_plus: Matrix<T>,
    pub u_f_plus: Matrix<T>,
    pub b_f_plus: Vec<T>,
    pub w_f_minus: Matrix<T>,
    pub u_f_minus: Matrix<T>,
    pub b_f_minus: Vec<T>,
}

/// Gradients use the same layout as the parameters.
pub type RmuGrads<T> = RmuParams<T>;

impl<T: Real> RmuParams<T> {
    pub fn zeros(d_in: usize, d_hid: usize) -> Self {
        RmuParams {
            d_in,
            d_hid,
            w_s: Matrix::zeros(d_hid, d_hid),
            u_s: Matrix::zeros(d_in, d_hid),
            b_s: vec![T::zero(); d_hid],
            w_f_plus: Matrix::zeros(d_hid, d_hid),
            u_f_plus: Matrix::zeros(d_in, d_hid),
            b_f_plus: vec![T::zero(); d_hid],
            w_f_minus: Matrix::zeros(d_hid, d_hid),
            u_f_minus: Matrix::zeros(d_in, d_hid),
            b_f_minus: vec![T::zero(); d_hid],
        }
    }
}

impl<T: Real> ParamTensors<T> for RmuParams<T> {
    fn tensors(&self) -> Vec<TensorView<'_, T>> {
        let (i, h) = (self.d_in, self.d_hid);
        vec![
            TensorView { name: "w_s", shape: vec![h, h], data: self.w_s.data() },
            TensorView { name: "u_s", shape: vec![i, h], data: self.u_s.data() },
            TensorView { name: "b_s", shape: vec![h], data: &self.b_s },
            TensorView { name: "w_f_plus", shape: vec![h, h], data: self.w_f_plus.data() },
            TensorView { name: "u_f_plus", shape: vec![i, h], data: self.u_f_plus.data() },
            TensorView { name: "b_f_plus", shape: vec![h], data: &self.b_f_plus },
            TensorView { name: "w_f_minus", shape: vec![h, h], data: self.w_f_minus.data() },
            TensorView { name: "u_f_minus", shape: vec![i, h], data: self.u_f_minus.data() },
            TensorView { name: "b_f_minus", shape: vec![h], data: &self.b_f_minus },
        ]
    }

    fn tensors_mut(&mut self) -> Vec<TensorViewMut<'_, T>> {
        let (i, h) = (self.d_in, self.d_hid);
        vec![
            TensorViewMut { name: "w_s", shape: vec![h, h], data: self.w_s.data_mut() },
            TensorViewMut { name: "u_s", shape: vec![i, h], data: self.u_s.data_mut() },
            TensorViewMut { name: "b_s", shape: vec![h], data: &mut self.b_s },
            TensorViewMut { name: "w_f_plus", shape: vec![h, h], data: self.w_f_plus.data_mut() },
            TensorViewMut { name: "u_f_plus", shape: vec![i, h], data: self.u_f_plus.data_mut() },
            TensorViewMut { name: "b_f_plus", shape: vec![h], data: &mut self.b_f_plus },
            TensorViewMut { name: "w_f_minus", shape: vec![h, h], data: self.w_f_minus.data_mut() },
            TensorViewMut { name: "u_f_minus", shape: vec![i, h], data: self.u_f_minus.data_mut() },
            TensorViewMut { name: "b_f_minus", shape: vec![h], data: &mut self.b_f_minus },
        ]
    }
}

/// Appraisal state and the two reinforcement memories.
#[derive(Debug, Clone, PartialEq)]
pub struct RmuState<T> {
    pub h: Vec<T>,
    pub c_plus: Vec<T>,
    pub c_minus: Vec<T>,
}

impl<T: Real> RmuState<T> {
    pub fn zeros(d_hid: usize) -> Self {
        RmuState {
            h: vec![T::zero(); d_hid],
            c_plus: vec![T::zero(); d_hid],
            c_minus: vec![T::zero(); d_hid],
        }
    }
}

/// Everything one step recorded: enough to replay the backward pass
/// exactly, including which branch each elementwise max selected.
#[derive(Debug, Clone)]
pub struct RmuStepCache<T> {
    pub x: Vec<T>,
    pub h_prev: Vec<T>,
    pub c_plus_prev: Vec<T>,
    pub c_minus_prev: Vec<T>,
    /// Pre-activations of the stimulus and the two forget gates.
    pub z_s: Vec<T>,
    pub z_f_plus: Vec<T>,
    pub z_f_minus: Vec<T>,
    pub s: Vec<T>,
    pub f_plus: Vec<T>,
    pub f_minus: Vec<T>,
    pub winners_plus: Vec<ArgWinner>,
    pub winners_minus: Vec<ArgWinner>,
    /// State produced by this step.
    pub h: Vec<T>,
    pub c_plus: Vec<T>,
    pub c_minus: Vec<T>,
}

fn check_dims<T: Real>(params: &RmuParams<T>, state: &RmuState<T>, x: &[T]) -> Result<()> {
    if x.len() != params.d_in {
        return Err(Error::config(
            "rmu_step",
            format!("input has length {}, cell expects d_in={}", x.len(), params.d_in),
        ));
    }
    if state.h.len() != params.d_hid
        || state.c_plus.len() != params.d_hid
        || state.c_minus.len() != params.d_hid
    {
        return Err(Error::config(
            "rmu_step",
            format!(
                "state lengths (h={}, c+={}, c-={}) differ from d_hid={}",
                state.h.len(),
                state.c_plus.len(),
                state.c_minus.len(),
                params.d_hid
            ),
        ));
    }
    Ok(())
}

/// One forward step.
pub fn step<T: Real>(
    params: &RmuParams<T>,
    state: &RmuState<T>,
    x: &[T],
) -> Result<(RmuState<T>, RmuStepCache<T>)> {
    check_dims(params, state, x)?;

    let z_s = math::affine(&params.w_s, &state.h, &params.u_s, x, &params.b_s)?;
    let s = math::activation(Activation::Tanh, &z_s);

    let z_f_plus = math::affine(&params.w_f_plus, &state.h, &params.u_f_plus, x, &params.b_f_plus)?;
    let f_plus = math::activation(Activation::Sigmoid, &z_f_plus);
    let z_f_minus =
        math::affine(&params.w_f_minus, &state.h, &params.u_f_minus, x, &params.b_f_minus)?;
    let f_minus = math::activation(Activation::Sigmoid, &z_f_minus);

    let relu_s = math::activation(Activation::Relu, &s);
    let neg_s: Vec<T> = s.iter().map(|&v| -v).collect();
    let relu_neg_s = math::activation(Activation::Relu, &neg_s);

    let decayed_plus = math::mul(&f_plus, &state.c_plus)?;
    let (c_plus, winners_plus) = math::max_with_winners(&decayed_plus, &relu_s)?;
    let decayed_minus = math::mul(&f_minus, &state.c_minus)?;
    let (c_minus, winners_minus) = math::max_with_winners(&decayed_minus, &relu_neg_s)?;

    let diff = math::sub(&c_plus, &c_minus)?;
    let h = math::activation(Activation::Tanh, &diff);

    let new_state = RmuState { h: h.clone(), c_plus: c_plus.clone(), c_minus: c_minus.clone() };
    let cache = RmuStepCache {
        x: x.to_vec(),
        h_prev: state.h.clone(),
        c_plus_prev: state.c_plus.clone(),
        c_minus_prev: state.c_minus.clone(),
        z_s,
        z_f_plus,
        z_f_minus,
        s,
        f_plus,
        f_minus,
        winners_plus,
        winners_minus,
        h,
        c_plus,
        c_minus,
    };
    Ok((new_state, cache))
}

/// Unrolls the cell over a whole sequence from the zero state.
pub fn run<T: Real>(
    params: &RmuParams<T>,
    xs: &[Vec<T>],
) -> Result<(RmuState<T>, Vec<RmuStepCache<T>>)> {
    let mut state = RmuState::zeros(params.d_hid);
    let mut caches = Vec::with_capacity(xs.len());
    for x in xs {
        let (next, cache) = step(params, &state, x)?;
        state = next;
        caches.push(cache);
    }
    Ok((state, caches))
}

/// Exact reverse-mode differentiation of a recorded rollout.
///
/// The elementwise max routes the incoming gradient entirely to the branch
/// recorded as the forward winner; the rectifier gates by the sign of `s`
/// (derivative 0 at exactly 0). Returns parameter gradients and the
/// gradient with respect to every input `x_t`.
pub fn backward<T: Real>(
    params: &RmuParams<T>,
    caches: &[RmuStepCache<T>],
    grads: StepGrads<'_, T>,
) -> Result<(RmuGrads<T>, Vec<Vec<T>>)> {
    let d_hid = params.d_hid;
    let steps = caches.len();
    grads.expected_len(steps)?;
    for (t, c) in caches.iter().enumerate() {
        if c.x.len() != params.d_in || c.h.len() != d_hid {
            return Err(Error::integrity(
                "rmu_backward",
                format!("cache at step {t} does not match the cell dimensions"),
            ));
        }
    }

    let mut g = RmuParams::zeros(params.d_in, d_hid);
    let mut d_inputs = vec![vec![T::zero(); params.d_in]; steps];

    // Gradients carried backwards across the step boundary.
    let mut d_h_carry = vec![T::zero(); d_hid];
    let mut d_cp_carry = vec![T::zero(); d_hid];
    let mut d_cm_carry = vec![T::zero(); d_hid];

    for t in (0..steps).rev() {
        let c = &caches[t];

        let mut d_h = d_h_carry;
        if let Some(up) = grads.at(t, steps) {
            if up.len() != d_hid {
                return Err(Error::integrity(
                    "rmu_backward",
                    format!("upstream gradient at step {t} has length {}", up.len()),
                ));
            }
            for (d, &u) in d_h.iter_mut().zip(up) {
                *d += u;
            }
        }

        // h = tanh(c_plus - c_minus)
        let mut d_cp = d_cp_carry;
        let mut d_cm = d_cm_carry;
        for k in 0..d_hid {
            let du = d_h[k] * (T::one() - c.h[k] * c.h[k]);
            d_cp[k] += du;
            d_cm[k] -= du;
        }

        // Route through the two maxes and the rectifiers.
        let mut d_s = vec![T::zero(); d_hid];
        let mut d_f_plus = vec![T::zero(); d_hid];
        let mut d_f_minus = vec![T::zero(); d_hid];
        let mut next_cp_carry = vec![T::zero(); d_hid];
        let mut next_cm_carry = vec![T::zero(); d_hid];
        for k in 0..d_hid {
            match c.winners_plus[k] {
                ArgWinner::First => {
                    d_f_plus[k] += d_cp[k] * c.c_plus_prev[k];
                    next_cp_carry[k] += d_cp[k] * c.f_plus[k];
                }
                ArgWinner::Second => {
                    if c.s[k] > T::zero() {
                        d_s[k] += d_cp[k];
                    }
                }
            }
            match c.winners_minus[k] {
                ArgWinner::First => {
                    d_f_minus[k] += d_cm[k] * c.c_minus_prev[k];
                    next_cm_carry[k] += d_cm[k] * c.f_minus[k];
                }
                ArgWinner::Second => {
                    if -c.s[k] > T::zero() {
                        d_s[k] -= d_cm[k];
                    }
                }
            }
        }

        // Through the nonlinearities to the pre-activations.
        let mut d_z_s = vec![T::zero(); d_hid];
        let mut d_z_fp = vec![T::zero(); d_hid];
        let mut d_z_fm = vec![T::zero(); d_hid];
        for k in 0..d_hid {
            d_z_s[k] = d_s[k] * (T::one() - c.s[k] * c.s[k]);
            d_z_fp[k] = d_f_plus[k] * c.f_plus[k] * (T::one() - c.f_plus[k]);
            d_z_fm[k] = d_f_minus[k] * c.f_minus[k] * (T::one() - c.f_minus[k]);
        }

        // Through the three affines.
        g.w_s.add_outer(&c.h_prev, &d_z_s)?;
        g.u_s.add_outer(&c.x, &d_z_s)?;
        g.w_f_plus.add_outer(&c.h_prev, &d_z_fp)?;
        g.u_f_plus.add_outer(&c.x, &d_z_fp)?;
        g.w_f_minus.add_outer(&c.h_prev, &d_z_fm)?;
        g.u_f_minus.add_outer(&c.x, &d_z_fm)?;
        for k in 0..d_hid {
            g.b_s[k] += d_z_s[k];
            g.b_f_plus[k] += d_z_fp[k];
            g.b_f_minus[k] += d_z_fm[k];
        }

        let mut d_h_prev = params.w_s.back_apply(&d_z_s)?;
        for (d, v) in d_h_prev.iter_mut().zip(params.w_f_plus.back_apply(&d_z_fp)?) {
            *d += v;
        }
        for (d, v) in d_h_prev.iter_mut().zip(params.w_f_minus.back_apply(&d_z_fm)?) {
            *d += v;
        }

        let mut d_x = params.u_s.back_apply(&d_z_s)?;
        for (d, v) in d_x.iter_mut().zip(params.u_f_plus.back_apply(&d_z_fp)?) {
            *d += v;
        }
        for (d, v) in d_x.iter_mut().zip(params.u_f_minus.back_apply(&d_z_fm)?) {
            *d += v;
        }
        d_inputs[t] = d_x;

        d_h_carry = d_h_prev;
        d_cp_carry = next_cp_carry;
        d_cm_carry = next_cm_carry;
    }

    Ok((g, d_inputs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Matrix;

    fn one_by_one(
        w_s: f64,
        u_s: f64,
        b_s: f64,
        fw: f64,
        fu: f64,
        fb: f64,
    ) -> RmuParams<f64> {
        RmuParams {
            d_in: 1,
            d_hid: 1,
            w_s: Matrix::from_vec(1, 1, vec![w_s]).unwrap(),
            u_s: Matrix::from_vec(1, 1, vec![u_s]).unwrap(),
            b_s: vec![b_s],
            w_f_plus: Matrix::from_vec(1, 1, vec![fw]).unwrap(),
            u_f_plus: Matrix::from_vec(1, 1, vec![fu]).unwrap(),
            b_f_plus: vec![fb],
            w_f_minus: Matrix::from_vec(1, 1, vec![fw]).unwrap(),
            u_f_minus: Matrix::from_vec(1, 1, vec![fu]).unwrap(),
            b_f_minus: vec![fb],
        }
    }

    #[test]
    fn zero_weight_fixed_point() {
        let params = RmuParams::<f64>::zeros(3, 2);
        let state = RmuState::zeros(2);
        let (next, cache) = step(&params, &state, &[1.0, -2.0, 0.5]).unwrap();
        assert_eq!(cache.s, vec![0.0, 0.0]);
        assert_eq!(cache.f_plus, vec![0.5, 0.5]);
        assert_eq!(cache.f_minus, vec![0.5, 0.5]);
        assert_eq!(next.c_plus, vec![0.0, 0.0]);
        assert_eq!(next.c_minus, vec![0.0, 0.0]);
        assert_eq!(next.h, vec![0.0, 0.0]);
    }

    #[test]
    fn hand_evaluated_single_step() {
        // d_in = d_hid = 1, W_s = 1, U_s = -1, b_s = 0, forget weights 1,
        // forget biases 1, zero state, x = 1. Expected values evaluated
        // directly from the update equations with std math.
        let params = one_by_one(1.0, -1.0, 0.0, 1.0, 1.0, 1.0);
        let state = RmuState::zeros(1);
        let (next, cache) = step(&params, &state, &[1.0]).unwrap();

        let s = (-1.0f64).tanh();
        let f = 1.0 / (1.0 + (-2.0f64).exp());
        let c_minus = -s;
        let h = (-c_minus).tanh();

        assert!((cache.s[0] - s).abs() < 1e-15, "s = {}", cache.s[0]);
        assert!((cache.s[0] + 0.761_594_155_955_764_9).abs() < 1e-15);
        assert!((cache.f_plus[0] - f).abs() < 1e-15);
        assert!((cache.f_plus[0] - 0.880_797_077_977_882_3).abs() < 1e-15);
        assert_eq!(next.c_plus[0], 0.0);
        assert!((next.c_minus[0] - c_minus).abs() < 1e-15);
        assert!((next.h[0] - h).abs() < 1e-15);
        assert!((next.h[0] + 0.642_014_992_011_999_7).abs() < 1e-15);
    }

    #[test]
    fn zero_stimulus_forces_decay() {
        // Zero stimulus weights make s = 0, so both memories can only decay.
        let mut params = one_by_one(0.0, 0.0, 0.0, 0.3, -0.2, 0.4);
        params.d_in = 1;
        let state = RmuState {
            h: vec![0.3],
            c_plus: vec![0.8],
            c_minus: vec![0.6],
        };
        let (next, cache) = step(&params, &state, &[0.7]).unwrap();
        assert_eq!(cache.s, vec![0.0]);
        assert!(next.c_plus[0] <= state.c_plus[0]);
        assert!(next.c_minus[0] <= state.c_minus[0]);
        assert_eq!(cache.winners_plus, vec![ArgWinner::First]);
        assert_eq!(cache.winners_minus, vec![ArgWinner::First]);
    }

    #[test]
    fn zero_upstream_gradient_gives_zero_gradients() {
        let params = one_by_one(0.4, -0.7, 0.1, 0.2, 0.3, 1.0);
        let (_, caches) = run(&params, &[vec![1.0], vec![-0.5]]).unwrap();
        let zero = vec![0.0];
        let (g, dx) = backward(&params, &caches, StepGrads::FinalOnly(&zero)).unwrap();
        assert!(g.tensors().iter().all(|t| t.data.iter().all(|&v| v == 0.0)));
        assert!(dx.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn stimulus_winner_blocks_memory_gradient() {
        // Single step where relu(s) beats the decayed memory on the plus
        // side: the gradient with respect to the previous memory must be 0.
        let params = one_by_one(0.0, 5.0, 0.0, 0.0, 0.0, -20.0);
        let state = RmuState {
            h: vec![0.0],
            c_plus: vec![0.5],
            c_minus: vec![0.5],
        };
        let (next, cache) = step(&params, &state, &[1.0]).unwrap();
        assert!(next.c_plus[0] > 0.9, "stimulus should win: {}", next.c_plus[0]);
        assert_eq!(cache.winners_plus, vec![ArgWinner::Second]);

        // Perturbing c_plus_prev cannot change the output: route the check
        // through a full backward and confirm f_plus receives no gradient
        // on the plus side (the decayed branch lost).
        let up = vec![1.0];
        let (g, _) = backward(&params, &[cache], StepGrads::FinalOnly(&up)).unwrap();
        assert_eq!(g.b_f_plus[0], 0.0);
        // The minus side decayed (relu(-s) = 0 < f*c), so its gate does learn.
        assert!(g.b_f_minus[0] != 0.0);
    }
}
