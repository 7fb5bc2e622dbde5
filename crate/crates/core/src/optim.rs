use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Grads;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam => "adam",
        })
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::Adam),
            other => Err(Error::Config(format!("unknown optimizer {other:?}"))),
        }
    }
}

/// Moment accumulators mirroring the parameter layout. Empty for SGD.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub kind: OptimizerKind,
    pub first_moment: Vec<Vec<f64>>,
    pub second_moment: Vec<Vec<f64>>,
    pub step: u64,
}

impl OptimizerState {
    pub fn new(kind: OptimizerKind, params: &[&[f64]]) -> Self {
        let zeros = || -> Vec<Vec<f64>> {
            match kind {
                OptimizerKind::Sgd => Vec::new(),
                OptimizerKind::Adam => params.iter().map(|p| vec![0.0; p.len()]).collect(),
            }
        };
        Self {
            kind,
            first_moment: zeros(),
            second_moment: zeros(),
            step: 0,
        }
    }

    pub fn update(&mut self, params: &mut [&mut [f64]], grads: &Grads, lr: f64) -> Result<()> {
        match self.kind {
            OptimizerKind::Sgd => {
                self.step += 1;
                sgd_update(params, grads, lr)
            }
            OptimizerKind::Adam => adam_update(params, grads, self, lr),
        }
    }
}

fn check(params: &[&mut [f64]], grads: &Grads) -> Result<()> {
    if params.len() != grads.0.len() || params.iter().zip(&grads.0).any(|(p, g)| p.len() != g.len())
    {
        return Err(Error::shape(
            "optimizer",
            (params.len(), params.iter().map(|p| p.len()).sum()),
            (grads.0.len(), grads.0.iter().map(Vec::len).sum()),
        ));
    }
    if !grads.is_finite() {
        return Err(Error::Numeric("non-finite gradient".into()));
    }
    Ok(())
}

/// `p <- p - lr * g`.
pub fn sgd_update(params: &mut [&mut [f64]], grads: &Grads, lr: f64) -> Result<()> {
    check(params, grads)?;
    for (p, g) in params.iter_mut().zip(&grads.0) {
        for (pv, gv) in p.iter_mut().zip(g) {
            *pv -= lr * gv;
        }
    }
    Ok(())
}

/// Adam with bias-corrected moments.
pub fn adam_update(
    params: &mut [&mut [f64]],
    grads: &Grads,
    state: &mut OptimizerState,
    lr: f64,
) -> Result<()> {
    check(params, grads)?;
    if state.first_moment.len() != params.len() {
        return Err(Error::State(
            "Adam state does not match the parameter layout".into(),
        ));
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - ADAM_BETA1.powi(t);
    let c2 = 1.0 - ADAM_BETA2.powi(t);
    for (((p, g), m), v) in params
        .iter_mut()
        .zip(&grads.0)
        .zip(&mut state.first_moment)
        .zip(&mut state.second_moment)
    {
        for (((pv, gv), mv), vv) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
            *mv = ADAM_BETA1 * *mv + (1.0 - ADAM_BETA1) * gv;
            *vv = ADAM_BETA2 * *vv + (1.0 - ADAM_BETA2) * gv * gv;
            let m_hat = *mv / c1;
            let v_hat = *vv / c2;
            *pv -= lr * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
        }
    }
    Ok(())
}

/// Rescales `grads` so its global L2 norm is at most `max_norm`. Returns the
/// norm before clipping.
pub fn clip_global_norm(grads: &mut Grads, max_norm: f64) -> f64 {
    let norm = grads.global_norm();
    if norm > max_norm && norm > 0.0 {
        grads.scale(max_norm / norm);
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sgd_arithmetic() {
        let mut p = vec![1.0];
        sgd_update(&mut [p.as_mut_slice()], &Grads(vec![vec![0.5]]), 0.1).unwrap();
        assert!((p[0] - 0.95).abs() < 1e-15);
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        for g in [0.5, -3.0, 1e-3] {
            let mut p = vec![2.0, -1.0];
            let mut state = OptimizerState::new(OptimizerKind::Adam, &[&p]);
            adam_update(
                &mut [p.as_mut_slice()],
                &Grads(vec![vec![g, g]]),
                &mut state,
                0.01,
            )
            .unwrap();
            // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps).
            let want = 0.01 * g / (g.abs() + ADAM_EPSILON);
            assert!((2.0 - p[0] - want).abs() < 1e-15);
            assert!((p[0] - 2.0).abs() - 0.01 < 1e-9);
        }
    }

    #[test]
    fn adam_second_step_hand_computed() {
        let mut p = vec![0.0];
        let mut state = OptimizerState::new(OptimizerKind::Adam, &[&p]);
        adam_update(
            &mut [p.as_mut_slice()],
            &Grads(vec![vec![1.0]]),
            &mut state,
            0.1,
        )
        .unwrap();
        adam_update(
            &mut [p.as_mut_slice()],
            &Grads(vec![vec![2.0]]),
            &mut state,
            0.1,
        )
        .unwrap();
        let m = 0.9 * 0.1 + 0.1 * 2.0;
        let v = 0.999 * 0.001 + 0.001 * 4.0;
        let m_hat = m / (1.0 - 0.81);
        let v_hat = v / (1.0 - 0.999f64 * 0.999);
        let first = -0.1 / (1.0 + 1e-8);
        let want = first - 0.1 * m_hat / (v_hat.sqrt() + 1e-8);
        assert!((p[0] - want).abs() < 1e-12);
        assert_eq!(state.step, 2);
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        for kind in [OptimizerKind::Sgd, OptimizerKind::Adam] {
            let mut p = vec![0.3, -0.7];
            let mut state = OptimizerState::new(kind, &[&p]);
            for _ in 0..3 {
                state
                    .update(&mut [p.as_mut_slice()], &Grads(vec![vec![0.0, 0.0]]), 0.1)
                    .unwrap();
            }
            assert_eq!(p, vec![0.3, -0.7]);
        }
    }

    #[test]
    fn rejects_bad_gradients() {
        let mut p = vec![0.0];
        assert!(matches!(
            sgd_update(&mut [p.as_mut_slice()], &Grads(vec![vec![f64::NAN]]), 0.1),
            Err(Error::Numeric(_))
        ));
        assert!(sgd_update(&mut [p.as_mut_slice()], &Grads(vec![vec![0.0, 1.0]]), 0.1).is_err());
    }

    #[test]
    fn clipping_caps_global_norm() {
        let mut g = Grads(vec![vec![3.0], vec![4.0]]);
        let before = clip_global_norm(&mut g, 1.0);
        assert_eq!(before, 5.0);
        assert!((g.global_norm() - 1.0).abs() < 1e-12);
        let mut small = Grads(vec![vec![0.3]]);
        clip_global_norm(&mut small, 1.0);
        assert_eq!(small.0[0][0], 0.3);
    }
}
