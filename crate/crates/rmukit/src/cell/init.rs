use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::real::Real;

use super::{CellKind, CellParams, GruParams, LstmParams, ParamTensors, RmuParams};

/// Parameter initialization schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitScheme {
    /// Every weight drawn uniformly from `[-1/sqrt(d_hid), +1/sqrt(d_hid)]`,
    /// biases 0, except forget-gate biases which start at 1.0 to avoid
    /// serious forgetting early in training.
    UniformScaled,
    /// Constant scheme for the hidden-size-1 retrospective-score setup:
    /// `U_s = -1.0`, every other weight entry `1.0`, forget biases `1.0`,
    /// other biases `0`. Only defined for the reinforcement-memory cell.
    ConstantQoe,
}

impl InitScheme {
    pub fn name(self) -> &'static str {
        match self {
            InitScheme::UniformScaled => "uniform_scaled",
            InitScheme::ConstantQoe => "constant_qoe",
        }
    }
}

impl std::fmt::Display for InitScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for InitScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform_scaled" => Ok(InitScheme::UniformScaled),
            "constant_qoe" => Ok(InitScheme::ConstantQoe),
            other => Err(Error::input(format!("unknown init scheme `{other}`"))),
        }
    }
}

/// Builds freshly initialized cell parameters. Identical `(scheme, seed)`
/// pairs produce bit-identical parameters.
pub fn init_params<T: Real>(
    kind: CellKind,
    d_in: usize,
    d_hid: usize,
    scheme: InitScheme,
    seed: u64,
) -> Result<CellParams<T>> {
    if d_in < 1 || d_hid < 1 {
        return Err(Error::input(format!(
            "cell dimensions must be at least 1, got d_in={d_in}, d_hid={d_hid}"
        )));
    }
    match scheme {
        InitScheme::UniformScaled => Ok(uniform_scaled(kind, d_in, d_hid, seed)),
        InitScheme::ConstantQoe => match kind {
            CellKind::Rmu => Ok(CellParams::Rmu(constant_qoe(d_in, d_hid))),
            other => Err(Error::UnsupportedScheme {
                scheme: scheme.name().to_string(),
                cell: other.name().to_string(),
            }),
        },
    }
}

fn uniform_scaled<T: Real>(kind: CellKind, d_in: usize, d_hid: usize, seed: u64) -> CellParams<T> {
    let mut params = match kind {
        CellKind::Rmu => CellParams::Rmu(RmuParams::zeros(d_in, d_hid)),
        CellKind::Lstm => CellParams::Lstm(LstmParams::zeros(d_in, d_hid)),
        CellKind::Gru => CellParams::Gru(GruParams::zeros(d_in, d_hid)),
    };
    let bound = T::of(1.0 / (d_hid as f64).sqrt());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for t in params.tensors_mut() {
        // Weight matrices are sampled in canonical tensor order; bias
        // vectors stay zero except the forget gates below.
        if t.name.starts_with('w') || t.name.starts_with('u') {
            for v in t.data.iter_mut() {
                *v = rng.random_range(-bound..=bound);
            }
        }
    }
    match &mut params {
        CellParams::Rmu(p) => {
            p.b_f_plus.fill(T::one());
            p.b_f_minus.fill(T::one());
        }
        CellParams::Lstm(p) => p.b_f.fill(T::one()),
        CellParams::Gru(_) => {}
    }
    params
}

fn constant_qoe<T: Real>(d_in: usize, d_hid: usize) -> RmuParams<T> {
    let mut p = RmuParams::zeros(d_in, d_hid);
    p.w_s.data_mut().fill(T::one());
    p.u_s.data_mut().fill(-T::one());
    p.w_f_plus.data_mut().fill(T::one());
    p.u_f_plus.data_mut().fill(T::one());
    p.b_f_plus.fill(T::one());
    p.w_f_minus.data_mut().fill(T::one());
    p.u_f_minus.data_mut().fill(T::one());
    p.b_f_minus.fill(T::one());
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_qoe_one_by_one() {
        let params = init_params::<f64>(CellKind::Rmu, 1, 1, InitScheme::ConstantQoe, 0).unwrap();
        let CellParams::Rmu(p) = params else { panic!() };
        assert_eq!(p.u_s.data(), &[-1.0]);
        assert_eq!(p.w_s.data(), &[1.0]);
        assert_eq!(p.b_s, vec![0.0]);
        assert_eq!(p.b_f_plus, vec![1.0]);
        assert_eq!(p.b_f_minus, vec![1.0]);
    }

    #[test]
    fn constant_qoe_rejected_for_baselines() {
        let err = init_params::<f64>(CellKind::Lstm, 1, 1, InitScheme::ConstantQoe, 0).unwrap_err();
        assert!(matches!(err, Error::UnsupportedScheme { .. }));
        assert!(init_params::<f64>(CellKind::Gru, 1, 1, InitScheme::ConstantQoe, 0).is_err());
    }

    #[test]
    fn uniform_scaled_deterministic_and_bounded() {
        let a = init_params::<f64>(CellKind::Lstm, 3, 4, InitScheme::UniformScaled, 42).unwrap();
        let b = init_params::<f64>(CellKind::Lstm, 3, 4, InitScheme::UniformScaled, 42).unwrap();
        assert_eq!(a, b);

        for t in a.tensors() {
            if t.name.starts_with('b') {
                continue;
            }
            assert!(t.data.iter().all(|v| v.abs() <= 0.5), "bound violated in {}", t.name);
        }

        let c = init_params::<f64>(CellKind::Lstm, 3, 4, InitScheme::UniformScaled, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn forget_biases_start_at_one() {
        let p = init_params::<f64>(CellKind::Rmu, 2, 3, InitScheme::UniformScaled, 1).unwrap();
        let CellParams::Rmu(p) = p else { panic!() };
        assert!(p.b_f_plus.iter().all(|&v| v == 1.0));
        assert!(p.b_f_minus.iter().all(|&v| v == 1.0));
        assert!(p.b_s.iter().all(|&v| v == 0.0));

        let p = init_params::<f64>(CellKind::Gru, 2, 3, InitScheme::UniformScaled, 1).unwrap();
        let CellParams::Gru(p) = p else { panic!() };
        assert!(p.b_r.iter().all(|&v| v == 0.0));
        assert!(p.b_z.iter().all(|&v| v == 0.0));
    }
}
