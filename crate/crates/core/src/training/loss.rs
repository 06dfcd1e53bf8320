//! Losses on the scalar model output `m ∈ [−1, 1]`.

use serde::{Deserialize, Serialize};

/// Clamp applied to probabilities before taking logs.
pub const BCE_EPS: f64 = 1e-7;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    /// Binary cross-entropy on `p = (1 + m)/2`.
    #[default]
    Bce,
    /// `(m − y)²` with `y = ±1`.
    Mse,
}

/// `−[y ln p + (1−y) ln(1−p)]` with `p` clamped into `[ε, 1−ε]`.
pub fn bce_loss(p: f64, y: u8) -> f64 {
    let p = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
    if y == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// `dL/dp`; zero where the clamp is active.
pub fn bce_grad(p: f64, y: u8) -> f64 {
    if !(BCE_EPS..=1.0 - BCE_EPS).contains(&p) {
        return 0.0;
    }
    if y == 1 {
        -1.0 / p
    } else {
        1.0 / (1.0 - p)
    }
}

pub fn mse_loss(m: f64, y: f64) -> f64 {
    (m - y) * (m - y)
}

/// Class-1 probability read from the model output.
pub fn probability(m: f64) -> f64 {
    0.5 * (1.0 + m)
}

/// Predicted class: 1 iff `p ≥ 1/2`.
pub fn predict(m: f64) -> u8 {
    (probability(m) >= 0.5) as u8
}

impl Loss {
    /// Loss and `dL/dm` for model output `m` and label `y ∈ {0, 1}`.
    pub fn value_and_grad(self, m: f64, y: u8) -> (f64, f64) {
        match self {
            Loss::Bce => {
                let p = probability(m);
                (bce_loss(p, y), 0.5 * bce_grad(p, y))
            }
            Loss::Mse => {
                let t = if y == 1 { 1.0 } else { -1.0 };
                (mse_loss(m, t), 2.0 * (m - t))
            }
        }
    }
}
