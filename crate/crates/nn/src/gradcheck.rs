use rand::seq::index::sample;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{Example, Model};

/// Finite-difference step.
pub const GRAD_CHECK_STEP: f64 = 1e-5;
/// Gradients smaller than this are compared in absolute terms.
pub const GRAD_CHECK_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub checked: usize,
}

/// Compares backprop against central differences on `coords` random
/// parameter coordinates (all of them if the model is smaller). The error of
/// one coordinate is `|a - n| / max(|a|, |n|, GRAD_CHECK_FLOOR)`.
pub fn grad_check(
    model: &dyn Model,
    params: &[f64],
    batch: &[&Example],
    coords: usize,
    seed: u64,
) -> GradCheckReport {
    let (_, analytic) = model.loss_and_grad(params, batch);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks: Vec<usize> = if coords >= params.len() {
        (0..params.len()).collect()
    } else {
        sample(&mut rng, params.len(), coords).into_vec()
    };
    let mut work = params.to_vec();
    let mut max_rel: f64 = 0.0;
    for &i in &picks {
        let orig = work[i];
        work[i] = orig + GRAD_CHECK_STEP;
        let plus = model.batch_loss(&work, batch);
        work[i] = orig - GRAD_CHECK_STEP;
        let minus = model.batch_loss(&work, batch);
        work[i] = orig;
        let numeric = (plus - minus) / (2.0 * GRAD_CHECK_STEP);
        let denom = analytic[i].abs().max(numeric.abs()).max(GRAD_CHECK_FLOOR);
        max_rel = max_rel.max((analytic[i] - numeric).abs() / denom);
    }
    GradCheckReport {
        max_rel_error: max_rel,
        checked: picks.len(),
    }
}
