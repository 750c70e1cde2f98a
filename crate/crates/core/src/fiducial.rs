//! Fiducial processes: the target circuit with every single-qubit gate
//! replaced by an idle slot, so only the CNOT skeleton acts. Its ideal
//! output statistics follow from measuring the input with the conjugated
//! observable `U_eff^† M U_eff`.

use rand_distr::{Distribution, StandardNormal};

use crate::circuit::{Circuit, Gate};
use crate::error::{Result, SimError};
use crate::ising::MAX_DENSE_QUBITS;
use crate::linalg::{self, c, CMatrix, CVector};
use crate::rng::SimRng;
use crate::state::DensityMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct FiducialProcess {
    pub circuit: Circuit,
    /// Dense unitary of the remaining CNOT skeleton.
    pub u_eff: CMatrix,
}

impl FiducialProcess {
    /// `U_eff^† M U_eff` for a dense observable.
    pub fn conjugate(&self, obs: &CMatrix) -> Result<CMatrix> {
        if obs.nrows() != self.u_eff.nrows() {
            return Err(SimError::DimensionMismatch {
                expected: self.u_eff.nrows(),
                got: obs.nrows(),
            });
        }
        Ok(self.u_eff.adjoint() * obs * &self.u_eff)
    }

    /// Noiseless fiducial output `U_eff ρ U_eff^†`.
    pub fn ideal_output(&self, input: &DensityMatrix) -> DensityMatrix {
        DensityMatrix::from_matrix_unchecked(&self.u_eff * input.matrix() * self.u_eff.adjoint())
    }
}

/// Builds the fiducial process of a basis-gate circuit. Single-qubit gates
/// of any form become [`Gate::Idle`]; CNOTs and barriers are kept.
pub fn build_fiducial(circuit: &Circuit) -> Result<FiducialProcess> {
    circuit.validate()?;
    if circuit.n_qubits > MAX_DENSE_QUBITS {
        return Err(SimError::TooLarge(format!(
            "fiducial of a {}-qubit circuit",
            circuit.n_qubits
        )));
    }
    let mut out = Circuit::new(circuit.n_qubits).with_tag(circuit.tag);
    for gate in &circuit.gates {
        match gate {
            Gate::Unitary { qubits, .. } if qubits.len() > 1 => {
                return Err(SimError::InvalidArgument(
                    "fiducial construction needs a transpiled circuit; found a multi-qubit generic unitary".into(),
                ))
            }
            g if g.is_single_qubit() => {
                out.push(Gate::Idle { qubit: g.qubits()[0] });
            }
            g => {
                out.push(g.clone());
            }
        }
    }
    let u_eff = out.unitary();
    Ok(FiducialProcess {
        circuit: out,
        u_eff,
    })
}

/// The trivial fiducial of a Hamiltonian evolution with `H = I`.
pub fn identity_fiducial(n_qubits: usize, tag: f64) -> FiducialProcess {
    FiducialProcess {
        circuit: Circuit::new(n_qubits).with_tag(tag),
        u_eff: linalg::identity(1 << n_qubits),
    }
}

/// Random pure state in the `+1` eigenspace of `X^{⊗n}`: amplitudes satisfy
/// `c_x = c_{x̄}`, drawn Gaussian on one half and mirrored.
pub fn sample_symmetric_vector(n: usize, rng: &mut SimRng) -> Result<CVector> {
    if n == 0 || n > MAX_DENSE_QUBITS {
        return Err(SimError::InvalidArgument(format!(
            "symmetric state on {n} qubits"
        )));
    }
    let d = 1usize << n;
    let mask = d - 1;
    let mut v = CVector::zeros(d);
    for x in 0..d / 2 {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        v[x] = c(re, im);
        v[x ^ mask] = c(re, im);
    }
    let norm = v.norm();
    Ok(v / c(norm, 0.0))
}

pub fn sample_symmetric_state(n: usize, rng: &mut SimRng) -> Result<DensityMatrix> {
    Ok(DensityMatrix::from_pure(&sample_symmetric_vector(n, rng)?))
}
