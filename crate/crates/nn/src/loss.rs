//! Per-sample losses with their gradients with respect to the prediction.

use serde::{Deserialize, Serialize};

/// Smoothing added to both distributions before the relative entropy.
pub const KL_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Loss {
    /// Mean squared error over the output entries.
    L2,
    /// Relative entropy `KL(pred ‖ label)`, prediction first.
    Kl,
    /// Mean absolute error over the output entries.
    L1,
}

impl Loss {
    pub fn value(self, pred: &[f64], label: &[f64]) -> f64 {
        match self {
            Loss::L2 => loss_l2(pred, label),
            Loss::Kl => loss_kl(pred, label),
            Loss::L1 => loss_l1(pred, label),
        }
    }

    /// Loss value and `∂loss/∂pred`.
    pub fn value_and_grad(self, pred: &[f64], label: &[f64]) -> (f64, Vec<f64>) {
        let n = pred.len() as f64;
        match self {
            Loss::L2 => {
                let grad = pred
                    .iter()
                    .zip(label)
                    .map(|(p, y)| 2.0 * (p - y) / n)
                    .collect();
                (loss_l2(pred, label), grad)
            }
            Loss::L1 => {
                let grad = pred
                    .iter()
                    .zip(label)
                    .map(|(p, y)| {
                        let d = p - y;
                        if d > 0.0 {
                            1.0 / n
                        } else if d < 0.0 {
                            -1.0 / n
                        } else {
                            0.0
                        }
                    })
                    .collect();
                (loss_l1(pred, label), grad)
            }
            Loss::Kl => {
                let scale = 1.0 / (1.0 + n * KL_EPS);
                let grad = pred
                    .iter()
                    .zip(label)
                    .map(|(&p, &q)| {
                        let (ps, qs) = ((p + KL_EPS) * scale, (q.max(0.0) + KL_EPS) * scale);
                        ((ps / qs).ln() + 1.0) * scale
                    })
                    .collect();
                (loss_kl(pred, label), grad)
            }
        }
    }
}

pub fn loss_l2(pred: &[f64], label: &[f64]) -> f64 {
    pred.iter()
        .zip(label)
        .map(|(p, y)| (p - y).powi(2))
        .sum::<f64>()
        / pred.len() as f64
}

pub fn loss_l1(pred: &[f64], label: &[f64]) -> f64 {
    pred.iter()
        .zip(label)
        .map(|(p, y)| (p - y).abs())
        .sum::<f64>()
        / pred.len() as f64
}

/// `Σ p log(p / q)` after adding [`KL_EPS`] to every entry and renormalizing.
pub fn loss_kl(pred: &[f64], label: &[f64]) -> f64 {
    let scale = 1.0 / (1.0 + pred.len() as f64 * KL_EPS);
    pred.iter()
        .zip(label)
        .map(|(&p, &q)| {
            let (ps, qs) = ((p + KL_EPS) * scale, (q.max(0.0) + KL_EPS) * scale);
            ps * (ps / qs).ln()
        })
        .sum()
}
