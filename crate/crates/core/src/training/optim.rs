//! First-order optimizers.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerConfig {
    Nesterov {
        lr: f64,
        momentum: f64,
    },
    Adam {
        lr: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
    },
}

impl OptimizerConfig {
    pub fn nesterov() -> Self {
        OptimizerConfig::Nesterov {
            lr: 0.005,
            momentum: 0.9,
        }
    }

    pub fn adam() -> Self {
        OptimizerConfig::Adam {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn lr(&self) -> f64 {
        match *self {
            OptimizerConfig::Nesterov { lr, .. } | OptimizerConfig::Adam { lr, .. } => lr,
        }
    }

    pub fn with_lr(self, lr: f64) -> Self {
        match self {
            OptimizerConfig::Nesterov { momentum, .. } => {
                OptimizerConfig::Nesterov { lr, momentum }
            }
            OptimizerConfig::Adam {
                beta1, beta2, eps, ..
            } => OptimizerConfig::Adam {
                lr,
                beta1,
                beta2,
                eps,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            OptimizerConfig::Nesterov { lr, momentum } => {
                lr >= 0.0 && (0.0..1.0).contains(&momentum)
            }
            OptimizerConfig::Adam {
                lr,
                beta1,
                beta2,
                eps,
            } => {
                lr >= 0.0 && (0.0..1.0).contains(&beta1) && (0.0..1.0).contains(&beta2) && eps > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            domain(format!("invalid optimizer settings {self:?}"))
        }
    }

    pub fn state(&self, n: usize) -> OptimizerState {
        match self {
            OptimizerConfig::Nesterov { .. } => OptimizerState::Nesterov {
                velocity: vec![0.0; n],
            },
            OptimizerConfig::Adam { .. } => OptimizerState::Adam {
                m: vec![0.0; n],
                v: vec![0.0; n],
                t: 0,
            },
        }
    }

    /// One in-place update of `params`.
    pub fn step(
        &self,
        params: &mut [f64],
        grads: &[f64],
        state: &mut OptimizerState,
    ) -> Result<()> {
        match (*self, state) {
            (OptimizerConfig::Nesterov { lr, momentum }, OptimizerState::Nesterov { velocity }) => {
                nesterov_step(params, grads, velocity, lr, momentum)
            }
            (
                OptimizerConfig::Adam {
                    lr,
                    beta1,
                    beta2,
                    eps,
                },
                OptimizerState::Adam { m, v, t },
            ) => adam_step(params, grads, m, v, t, lr, beta1, beta2, eps),
            _ => domain("optimizer state does not match its configuration"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum OptimizerState {
    Nesterov { velocity: Vec<f64> },
    Adam { m: Vec<f64>, v: Vec<f64>, t: u64 },
}

fn check_shapes(params: &[f64], others: &[&[f64]]) -> Result<()> {
    match others.iter().find(|o| o.len() != params.len()) {
        Some(o) => domain(format!(
            "{} parameters but a length-{} buffer",
            params.len(),
            o.len()
        )),
        None => Ok(()),
    }
}

/// `v ← μv + g`, `θ ← θ − η(g + μv)`.
pub fn nesterov_step(
    params: &mut [f64],
    grads: &[f64],
    velocity: &mut [f64],
    lr: f64,
    momentum: f64,
) -> Result<()> {
    check_shapes(params, &[grads, velocity])?;
    for ((x, &g), v) in params.iter_mut().zip(grads).zip(velocity.iter_mut()) {
        *v = momentum * *v + g;
        *x -= lr * (g + momentum * *v);
    }
    Ok(())
}

/// Bias-corrected Adam; `t` counts completed steps.
#[allow(clippy::too_many_arguments)]
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    t: &mut u64,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
) -> Result<()> {
    check_shapes(params, &[grads, m, v])?;
    *t += 1;
    let c1 = 1.0 - beta1.powi(*t as i32);
    let c2 = 1.0 - beta2.powi(*t as i32);
    for (((x, &g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(m.iter_mut())
        .zip(v.iter_mut())
    {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        *x -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nesterov_zero_gradient_is_fixed() {
        let mut x = [0.3, -1.0];
        let mut v = [0.0; 2];
        nesterov_step(&mut x, &[0.0; 2], &mut v, 0.005, 0.9).unwrap();
        assert_eq!(x, [0.3, -1.0]);
    }

    #[test]
    fn nesterov_first_step_scaled_by_one_plus_momentum() {
        let mut x = [1.0, 2.0];
        let mut v = [0.0; 2];
        let g = [0.5, -4.0];
        nesterov_step(&mut x, &g, &mut v, 0.005, 0.9).unwrap();
        for i in 0..2 {
            let want = [1.0, 2.0][i] - 0.005 * 1.9 * g[i];
            assert!((x[i] - want).abs() < 1e-15);
        }
    }

    #[test]
    fn nesterov_quadratic_bowl_settles() {
        // f(x) = x²/2; with lr 0.1 and μ 0.9 the iterates spiral in.
        let (mut x, mut v) = ([5.0], [0.0]);
        let mut dist = Vec::new();
        for _ in 0..400 {
            let g = [x[0]];
            nesterov_step(&mut x, &g, &mut v, 0.1, 0.9).unwrap();
            dist.push(x[0].abs().max(v[0].abs()));
        }
        assert!(x[0].abs() < 1e-6);
        // Envelope shrinks monotonically over windows after burn-in.
        let env: Vec<f64> = dist
            .chunks(40)
            .map(|c| c.iter().cloned().fold(0.0, f64::max))
            .collect();
        assert!(env.windows(2).skip(1).all(|w| w[1] < w[0]));
    }

    #[test]
    fn adam_first_step_is_sign_like() {
        let mut x = [0.0, 0.0, 0.0];
        let (mut m, mut v, mut t) = ([0.0; 3], [0.0; 3], 0);
        let g = [3.0, -0.02, 1e-3];
        adam_step(&mut x, &g, &mut m, &mut v, &mut t, 0.01, 0.9, 0.999, 1e-8).unwrap();
        for i in 0..3 {
            let want = -0.01 * g[i] / (g[i].abs() + 1e-8);
            assert!((x[i] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn adam_zero_gradient_is_fixed() {
        let mut x = [0.7, -0.2];
        let (mut m, mut v, mut t) = ([0.0; 2], [0.0; 2], 0);
        for _ in 0..50 {
            adam_step(
                &mut x, &[0.0; 2], &mut m, &mut v, &mut t, 0.01, 0.9, 0.999, 1e-8,
            )
            .unwrap();
        }
        assert_eq!(x, [0.7, -0.2]);
    }

    #[test]
    fn adam_three_step_trace() {
        // Gradients of f(x, y) = x² + 10y²; trace computed independently with
        // 50-digit decimal arithmetic and rounded.
        let cfg = OptimizerConfig::Adam {
            lr: 0.1,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        };
        let mut x = [1.0, -0.5];
        let mut st = cfg.state(2);
        let mut trace = Vec::new();
        for _ in 0..3 {
            let g = [2.0 * x[0], 20.0 * x[1]];
            cfg.step(&mut x, &g, &mut st).unwrap();
            trace.push(x);
        }
        let want = ADAM_TRACE;
        for (got, want) in trace.iter().zip(want) {
            for k in 0..2 {
                assert!((got[k] - want[k]).abs() < 1e-12, "{got:?} vs {want:?}");
            }
        }
    }

    const ADAM_TRACE: [[f64; 2]; 3] = [
        [0.9000000005, -0.4000000001],
        [0.8004122286917922, -0.30118741979483993],
        [0.7015862729460296, -0.2048712496990625],
    ];

    #[test]
    fn mismatched_state_errors() {
        let mut st = OptimizerConfig::adam().state(2);
        assert!(OptimizerConfig::nesterov()
            .step(&mut [0.0; 2], &[0.0; 2], &mut st)
            .is_err());
        let mut st = OptimizerConfig::adam().state(3);
        assert!(OptimizerConfig::adam()
            .step(&mut [0.0; 2], &[0.0; 2], &mut st)
            .is_err());
    }
}
