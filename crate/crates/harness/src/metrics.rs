//! Report metrics.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("length mismatch: {0} predictions against {1} truths")]
pub struct LengthMismatch(pub usize, pub usize);

/// Mean absolute error; an empty pair of lists scores zero.
pub fn mae(pred: &[f64], truth: &[f64]) -> Result<f64, LengthMismatch> {
    if pred.len() != truth.len() {
        return Err(LengthMismatch(pred.len(), truth.len()));
    }
    if pred.is_empty() {
        return Ok(0.0);
    }
    Ok(pred
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t).abs())
        .sum::<f64>()
        / pred.len() as f64)
}

/// Relative entropy `KL(p ‖ q)` with the same ε-smoothing as the training loss.
pub fn kl(p: &[f64], q: &[f64]) -> Result<f64, LengthMismatch> {
    if p.len() != q.len() {
        return Err(LengthMismatch(p.len(), q.len()));
    }
    Ok(daem_nn::loss::loss_kl(p, q))
}

/// Projects extrapolated probabilities back onto the simplex by clipping
/// negatives and renormalizing.
pub fn clip_to_distribution(v: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = v.iter().map(|x| x.max(0.0)).collect();
    let s: f64 = clipped.iter().sum();
    if s <= 0.0 {
        return vec![1.0 / v.len() as f64; v.len()];
    }
    clipped.into_iter().map(|x| x / s).collect()
}

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_values() {
        assert_eq!(mae(&[0.3, -0.2], &[0.3, -0.2]).unwrap(), 0.0);
        assert_eq!(mae(&[0.0, 1.0], &[1.0, 1.0]).unwrap(), 0.5);
        assert!(mae(&[0.0], &[]).is_err());
        assert!(kl(&[0.5, 0.5], &[0.5, 0.5]).unwrap().abs() < 1e-12);
        let want = 0.5 * (0.5f64 / 0.75).ln() + 0.5 * (0.5f64 / 0.25).ln();
        assert!((kl(&[0.5, 0.5], &[0.75, 0.25]).unwrap() - want).abs() < 1e-7);
    }

    #[test]
    fn clipping_returns_distribution() {
        let d = clip_to_distribution(&[0.6, -0.1, 0.6]);
        assert_eq!(d, vec![0.5, 0.0, 0.5]);
    }

    proptest! {
        #[test]
        fn mae_is_permutation_invariant(pairs in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..20), rot in 0usize..20) {
            let (p, t): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
            let k = rot % pairs.len();
            let mut rp = p.clone();
            let mut rt = t.clone();
            rp.rotate_left(k);
            rt.rotate_left(k);
            let a = mae(&p, &t).unwrap();
            prop_assert!(a >= 0.0);
            prop_assert!((a - mae(&rp, &rt).unwrap()).abs() < 1e-12);
        }
    }
}
