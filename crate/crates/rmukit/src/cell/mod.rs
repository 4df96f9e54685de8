//! The three recurrent cells: the reinforcement-memory cell plus LSTM and
//! GRU baselines, each with an exact cached-state backward pass.
//!
//! Naming note: throughout this module `W_*` are the recurrent
//! (hidden-to-hidden, `d_hid x d_hid`) matrices applied to the previous
//! appraisal state, and `U_*` are the input projections
//! (`d_in x d_hid`) applied to `x_t`. This is the reverse of the common
//! W=input / U=recurrent convention and is deliberate: the cell equations
//! here keep W on the hidden state.

pub mod gru;
pub mod lstm;
pub mod rmu;

mod init;
mod resource;

pub use init::{init_params, InitScheme};
pub use resource::{memory_estimate, param_count};

use crate::error::{Error, Result};
use crate::real::Real;

pub use gru::{GruGrads, GruParams, GruState, GruStepCache};
pub use lstm::{LstmGrads, LstmParams, LstmState, LstmStepCache};
pub use rmu::{RmuGrads, RmuParams, RmuState, RmuStepCache};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    Rmu,
    Lstm,
    Gru,
}

impl CellKind {
    pub fn name(self) -> &'static str {
        match self {
            CellKind::Rmu => "rmu",
            CellKind::Lstm => "lstm",
            CellKind::Gru => "gru",
        }
    }
}

impl std::fmt::Display for CellKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for CellKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rmu" => Ok(CellKind::Rmu),
            "lstm" => Ok(CellKind::Lstm),
            "gru" => Ok(CellKind::Gru),
            other => Err(Error::input(format!("unknown cell kind `{other}`"))),
        }
    }
}

/// Read view of one named parameter tensor.
pub struct TensorView<'a, T> {
    pub name: &'static str,
    pub shape: Vec<usize>,
    pub data: &'a [T],
}

/// Mutable view of one named parameter tensor.
pub struct TensorViewMut<'a, T> {
    pub name: &'static str,
    pub shape: Vec<usize>,
    pub data: &'a mut [T],
}

/// Anything that exposes its parameters as an ordered list of named
/// tensors: cells, gradients, and the full network. The order is fixed,
/// so optimizer state and checkpoints can align block-by-block.
pub trait ParamTensors<T: Real> {
    fn tensors(&self) -> Vec<TensorView<'_, T>>;
    fn tensors_mut(&mut self) -> Vec<TensorViewMut<'_, T>>;

    /// Total number of scalars actually allocated.
    fn scalar_count(&self) -> usize {
        self.tensors().iter().map(|t| t.data.len()).sum()
    }
}

/// Upstream gradient with respect to the appraisal trajectory.
#[derive(Debug, Clone, Copy)]
pub enum StepGrads<'a, T> {
    /// Gradient only at the final step's appraisal state.
    FinalOnly(&'a [T]),
    /// One gradient vector per step.
    PerStep(&'a [Vec<T>]),
}

impl<'a, T> StepGrads<'a, T> {
    /// Gradient at step `t` of a `steps`-long rollout, if any.
    pub fn at(&self, t: usize, steps: usize) -> Option<&'a [T]> {
        match self {
            StepGrads::FinalOnly(g) => (t + 1 == steps).then_some(*g),
            StepGrads::PerStep(gs) => gs.get(t).map(|g| g.as_slice()),
        }
    }

    pub fn expected_len(&self, steps: usize) -> Result<()> {
        if let StepGrads::PerStep(gs) = self {
            if gs.len() != steps {
                return Err(Error::integrity(
                    "cell backward",
                    format!("{} per-step gradients for a {steps}-step trace", gs.len()),
                ));
            }
        }
        Ok(())
    }
}

/// Parameters of whichever cell the network was built with.
#[derive(Debug, Clone, PartialEq)]
pub enum CellParams<T> {
    Rmu(RmuParams<T>),
    Lstm(LstmParams<T>),
    Gru(GruParams<T>),
}

/// Gradients share the parameter layout.
pub type CellGrads<T> = CellParams<T>;

/// Per-step caches of one unrolled sequence.
#[derive(Debug, Clone)]
pub enum CellRollout<T> {
    Rmu(Vec<RmuStepCache<T>>),
    Lstm(Vec<LstmStepCache<T>>),
    Gru(Vec<GruStepCache<T>>),
}

impl<T: Real> CellRollout<T> {
    pub fn steps(&self) -> usize {
        match self {
            CellRollout::Rmu(c) => c.len(),
            CellRollout::Lstm(c) => c.len(),
            CellRollout::Gru(c) => c.len(),
        }
    }

    /// Appraisal state after step `t`.
    pub fn appraisal(&self, t: usize) -> &[T] {
        match self {
            CellRollout::Rmu(c) => &c[t].h,
            CellRollout::Lstm(c) => &c[t].h,
            CellRollout::Gru(c) => &c[t].h,
        }
    }

    /// Cell input consumed at step `t`.
    pub fn input(&self, t: usize) -> &[T] {
        match self {
            CellRollout::Rmu(c) => &c[t].x,
            CellRollout::Lstm(c) => &c[t].x,
            CellRollout::Gru(c) => &c[t].x,
        }
    }
}

impl<T: Real> CellParams<T> {
    pub fn kind(&self) -> CellKind {
        match self {
            CellParams::Rmu(_) => CellKind::Rmu,
            CellParams::Lstm(_) => CellKind::Lstm,
            CellParams::Gru(_) => CellKind::Gru,
        }
    }

    pub fn d_in(&self) -> usize {
        match self {
            CellParams::Rmu(p) => p.d_in,
            CellParams::Lstm(p) => p.d_in,
            CellParams::Gru(p) => p.d_in,
        }
    }

    pub fn d_hid(&self) -> usize {
        match self {
            CellParams::Rmu(p) => p.d_hid,
            CellParams::Lstm(p) => p.d_hid,
            CellParams::Gru(p) => p.d_hid,
        }
    }

    pub fn zeros_like(&self) -> CellGrads<T> {
        match self {
            CellParams::Rmu(p) => CellParams::Rmu(RmuParams::zeros(p.d_in, p.d_hid)),
            CellParams::Lstm(p) => CellParams::Lstm(LstmParams::zeros(p.d_in, p.d_hid)),
            CellParams::Gru(p) => CellParams::Gru(GruParams::zeros(p.d_in, p.d_hid)),
        }
    }

    /// Unrolls the cell over `xs` from the zero initial state.
    pub fn run(&self, xs: &[Vec<T>]) -> Result<CellRollout<T>> {
        match self {
            CellParams::Rmu(p) => Ok(CellRollout::Rmu(rmu::run(p, xs)?.1)),
            CellParams::Lstm(p) => Ok(CellRollout::Lstm(lstm::run(p, xs)?.1)),
            CellParams::Gru(p) => Ok(CellRollout::Gru(gru::run(p, xs)?.1)),
        }
    }

    /// Exact reverse-mode differentiation of a recorded rollout.
    /// Returns parameter gradients and per-step input gradients.
    pub fn backward(
        &self,
        rollout: &CellRollout<T>,
        grads: StepGrads<'_, T>,
    ) -> Result<(CellGrads<T>, Vec<Vec<T>>)> {
        match (self, rollout) {
            (CellParams::Rmu(p), CellRollout::Rmu(c)) => {
                let (g, dx) = rmu::backward(p, c, grads)?;
                Ok((CellParams::Rmu(g), dx))
            }
            (CellParams::Lstm(p), CellRollout::Lstm(c)) => {
                let (g, dx) = lstm::backward(p, c, grads)?;
                Ok((CellParams::Lstm(g), dx))
            }
            (CellParams::Gru(p), CellRollout::Gru(c)) => {
                let (g, dx) = gru::backward(p, c, grads)?;
                Ok((CellParams::Gru(g), dx))
            }
            _ => Err(Error::integrity(
                "cell backward",
                "rollout was produced by a different cell kind".to_string(),
            )),
        }
    }
}

impl<T: Real> ParamTensors<T> for CellParams<T> {
    fn tensors(&self) -> Vec<TensorView<'_, T>> {
        match self {
            CellParams::Rmu(p) => p.tensors(),
            CellParams::Lstm(p) => p.tensors(),
            CellParams::Gru(p) => p.tensors(),
        }
    }

    fn tensors_mut(&mut self) -> Vec<TensorViewMut<'_, T>> {
        match self {
            CellParams::Rmu(p) => p.tensors_mut(),
            CellParams::Lstm(p) => p.tensors_mut(),
            CellParams::Gru(p) => p.tensors_mut(),
        }
    }
}
