use serde::{Deserialize, Serialize};

use crate::error::{NnError, Result};
use crate::loss::Loss;
use crate::params::{Layout, ParamShape};

/// One model input with its target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    /// Scalar tag of the process (field strength, evolution time).
    pub g: f64,
    pub observable: Vec<f64>,
    /// Noisy statistics, `K` rows flattened row-major.
    pub p: Vec<f64>,
    pub label: Vec<f64>,
}

/// An architecture: parameters live outside so optimizers and checkers can
/// treat them as a plain vector.
pub trait Model {
    fn layout(&self) -> &Layout;
    /// Training loss matching the output head.
    fn loss(&self) -> Loss;
    fn check_example(&self, ex: &Example) -> Result<()>;
    fn forward(&self, params: &[f64], batch: &[&Example]) -> Vec<Vec<f64>>;
    /// Mean per-sample loss over the batch and its gradient.
    fn loss_and_grad(&self, params: &[f64], batch: &[&Example]) -> (f64, Vec<f64>);

    /// Mean loss without gradients.
    fn batch_loss(&self, params: &[f64], batch: &[&Example]) -> f64 {
        let preds = self.forward(params, batch);
        let loss = self.loss();
        preds
            .iter()
            .zip(batch)
            .map(|(p, ex)| loss.value(p, &ex.label))
            .sum::<f64>()
            / batch.len().max(1) as f64
    }
}

/// Indices of a weight/bias pair in the shape table.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Dense {
    pub w: usize,
    pub b: usize,
    pub inp: usize,
    pub out: usize,
}

impl Dense {
    pub fn register(layout: &mut Layout, name: &str, inp: usize, out: usize) -> Self {
        let w = layout.add(format!("{name}.weight"), vec![out, inp], inp);
        let b = layout.add(format!("{name}.bias"), vec![out], inp);
        Self { w, b, inp, out }
    }
}

pub(crate) fn slice<'a>(params: &'a [f64], shapes: &[ParamShape], idx: usize) -> &'a [f64] {
    &params[shapes[idx].range()]
}

pub(crate) fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(NnError::ShapeMismatch(format!(
            "{what}: expected {want} values, got {got}"
        )));
    }
    Ok(())
}
