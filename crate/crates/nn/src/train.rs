use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adam::{AdamConfig, AdamState};
use crate::error::{NnError, Result};
use crate::model::{Example, Model};
use crate::params::Params;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    #[serde(default)]
    pub adam: AdamConfig,
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(NnError::InvalidConfig(
                "epochs and batch size must be positive".into(),
            ));
        }
        if !(self.adam.learning_rate > 0.0) {
            return Err(NnError::InvalidConfig(
                "learning rate must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Parameters with the lowest validation loss.
    pub params: Params,
    /// Optimizer state after the last epoch.
    pub adam: AdamState,
    pub history: Vec<EpochStats>,
    pub best_epoch: usize,
}

impl TrainOutcome {
    pub fn best_val_loss(&self) -> f64 {
        self.history[self.best_epoch].val_loss
    }
}

/// Mean loss over a set, evaluated in chunks.
pub fn evaluate_loss(model: &dyn Model, params: &[f64], set: &[Example]) -> f64 {
    if set.is_empty() {
        return 0.0;
    }
    let total: f64 = set
        .chunks(64)
        .map(|chunk| {
            let refs: Vec<&Example> = chunk.iter().collect();
            model.batch_loss(params, &refs) * chunk.len() as f64
        })
        .sum();
    total / set.len() as f64
}

/// Minibatch Adam: batches drawn without replacement, reshuffled every
/// epoch from the configured seed. The validation loss (training loss when
/// no validation set is given) selects the returned parameters.
pub fn train(
    model: &dyn Model,
    train_set: &[Example],
    val_set: &[Example],
    cfg: &TrainConfig,
    init: Params,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(NnError::InvalidConfig("training set is empty".into()));
    }
    init.check_layout(model.layout())?;
    for ex in train_set.iter().chain(val_set) {
        model.check_example(ex)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = init;
    let mut adam = AdamState::new(params.len());
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        for (bi, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<&Example> = chunk.iter().map(|&i| &train_set[i]).collect();
            let (loss, grad) = model.loss_and_grad(&params.values, &batch);
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(NnError::NonFinite(format!(
                    "loss {loss} at epoch {epoch}, batch {bi}"
                )));
            }
            sum += loss * batch.len() as f64;
            adam.step(&mut params.values, &grad, &cfg.adam)?;
        }
        let train_loss = sum / train_set.len() as f64;
        let val_loss = if val_set.is_empty() {
            train_loss
        } else {
            evaluate_loss(model, &params.values, val_set)
        };
        if !val_loss.is_finite() {
            return Err(NnError::NonFinite(format!(
                "validation loss {val_loss} at epoch {epoch}"
            )));
        }
        if best.as_ref().is_none_or(|(b, _, _)| val_loss < *b) {
            best = Some((val_loss, epoch, params.values.clone()));
        }
        history.push(EpochStats {
            epoch,
            train_loss,
            val_loss,
        });
    }
    let (_, best_epoch, values) = best.expect("at least one epoch");
    Ok(TrainOutcome {
        params: Params {
            shapes: params.shapes,
            values,
        },
        adam,
        history,
        best_epoch,
    })
}

/// Error-mitigation inference: one forward pass per input, no retraining.
pub fn mitigate(model: &dyn Model, params: &[f64], inputs: &[Example]) -> Vec<Vec<f64>> {
    inputs
        .chunks(64)
        .flat_map(|chunk| {
            let refs: Vec<&Example> = chunk.iter().collect();
            model.forward(params, &refs)
        })
        .collect()
}
