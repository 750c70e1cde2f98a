//! Reference mitigation methods: zero-noise extrapolation with a quadratic
//! model and Clifford data regression.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate};
use crate::error::{Result, SimError};
use crate::linalg::{self, c, CMatrix};
use crate::rng::SimRng;

/// Least-squares polynomial fit; coefficients in increasing degree.
pub fn polyfit(x: &[f64], y: &[f64], degree: usize) -> Result<Vec<f64>> {
    if x.len() != y.len() {
        return Err(SimError::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < degree + 1 {
        return Err(SimError::InvalidArgument(format!(
            "degree-{degree} fit needs {} points, got {}",
            degree + 1,
            x.len()
        )));
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(SimError::InvalidArgument(
            "extrapolation levels must be distinct".into(),
        ));
    }
    let a = DMatrix::from_fn(x.len(), degree + 1, |i, j| x[i].powi(j as i32));
    let b = DVector::from_column_slice(y);
    let coef = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| SimError::InvalidArgument(format!("least squares failed: {e}")))?;
    Ok(coef.iter().copied().collect())
}

/// Quadratic least-squares fit evaluated at zero noise.
pub fn zne_extrapolate(levels: &[f64], values: &[f64]) -> Result<f64> {
    Ok(polyfit(levels, values, 2)?[0])
}

/// Elementwise extrapolation of vector statistics (rows ordered like `levels`).
pub fn zne_extrapolate_rows(levels: &[f64], rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    if rows.len() != levels.len() {
        return Err(SimError::DimensionMismatch {
            expected: levels.len(),
            got: rows.len(),
        });
    }
    let width = rows.first().map_or(0, Vec::len);
    (0..width)
        .map(|k| {
            let column: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            zne_extrapolate(levels, &column)
        })
        .collect()
}

/// The 24 single-qubit Cliffords up to global phase, generated from H and S.
pub fn clifford_group() -> Vec<CMatrix> {
    let h = linalg::hadamard();
    let s = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)]);
    let mut group = vec![linalg::identity(2)];
    let mut frontier = group.clone();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for g in &frontier {
            for gen in [&h, &s] {
                let cand = gen * g;
                if !group
                    .iter()
                    .any(|m| linalg::distance_up_to_phase(m, &cand) < 1e-9)
                {
                    group.push(cand.clone());
                    next.push(cand);
                }
            }
        }
        frontier = next;
    }
    group
}

/// Replaces every single-qubit gate with a uniformly drawn Clifford; CNOTs,
/// idles and barriers are kept in place.
pub fn clifford_variant(circuit: &Circuit, group: &[CMatrix], rng: &mut SimRng) -> Circuit {
    let mut out = Circuit::new(circuit.n_qubits).with_tag(circuit.tag);
    for gate in &circuit.gates {
        match gate {
            Gate::Rx { qubit, .. } | Gate::Rz { qubit, .. } => {
                out.push(Gate::unitary(
                    vec![*qubit],
                    group[rng.random_range(0..group.len())].clone(),
                ));
            }
            Gate::Unitary { qubits, .. } if qubits.len() == 1 => {
                out.push(Gate::unitary(
                    qubits.clone(),
                    group[rng.random_range(0..group.len())].clone(),
                ));
            }
            g => {
                out.push(g.clone());
            }
        }
    }
    out
}

/// Linear map `exact ≈ a · noisy + b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdrModel {
    pub a: f64,
    pub b: f64,
}

impl CdrModel {
    pub fn apply(&self, value: f64) -> f64 {
        self.a * value + self.b
    }
}

/// Ordinary least squares; the minimum-norm solution when the noisy values
/// are degenerate.
pub fn cdr_fit(noisy: &[f64], exact: &[f64]) -> Result<CdrModel> {
    if noisy.len() < 2 {
        return Err(SimError::InvalidArgument(format!(
            "CDR needs at least 2 points, got {}",
            noisy.len()
        )));
    }
    if noisy.len() != exact.len() {
        return Err(SimError::DimensionMismatch {
            expected: noisy.len(),
            got: exact.len(),
        });
    }
    let a = DMatrix::from_fn(noisy.len(), 2, |i, j| if j == 0 { noisy[i] } else { 1.0 });
    let sol = a
        .svd(true, true)
        .solve(&DVector::from_column_slice(exact), 1e-12)
        .map_err(|e| SimError::InvalidArgument(format!("least squares failed: {e}")))?;
    Ok(CdrModel {
        a: sol[0],
        b: sol[1],
    })
}

pub fn cdr_apply(model: &CdrModel, value: f64) -> f64 {
    model.apply(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn group_has_24_distinct_elements() {
        let g = clifford_group();
        assert_eq!(g.len(), 24);
        for u in &g {
            assert!(linalg::check_unitary(u, 1e-12).is_ok());
        }
    }

    #[test]
    fn zne_recovers_exact_quadratic() {
        let levels: Vec<f64> = (0..13).map(|k| 0.05 + 0.02 * k as f64).collect();
        let values: Vec<f64> = levels.iter().map(|l| 1.0 - 2.0 * l + l * l).collect();
        assert!((zne_extrapolate(&levels, &values).unwrap() - 1.0).abs() < 1e-9);
        assert!(zne_extrapolate(&levels[..2], &values[..2]).is_err());
    }

    #[test]
    fn cdr_closed_form() {
        let noisy = [0.1, -0.3, 0.5, 0.7];
        let exact: Vec<f64> = noisy.iter().map(|x| 2.0 * x + 0.1).collect();
        let m = cdr_fit(&noisy, &exact).unwrap();
        assert!((m.a - 2.0).abs() < 1e-10 && (m.b - 0.1).abs() < 1e-10);
    }

    #[test]
    fn variant_keeps_cnots() {
        let mut circ = Circuit::new(2);
        circ.extend([Gate::rx(0, 0.3), Gate::cnot(0, 1), Gate::rz(1, 0.2)]);
        let g = clifford_group();
        let v = clifford_variant(&circ, &g, &mut seeded(1));
        assert_eq!(v.gates[1], Gate::cnot(0, 1));
        assert_eq!(v.gate_count(), 3);
    }
}
