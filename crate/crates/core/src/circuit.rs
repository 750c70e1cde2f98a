//! Gates, circuits and noiseless density-matrix execution.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::linalg::{self, check_unitary, CMatrix, CVector, LocalIndex};
use crate::state::DensityMatrix;

/// A circuit element. `Idle` is an explicit identity slot that still
/// experiences noise; `Barrier` marks a noise insertion point for layer-wise
/// placements and has no unitary action.
#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    Rx { qubit: usize, angle: f64 },
    Rz { qubit: usize, angle: f64 },
    Cnot { control: usize, target: usize },
    Unitary { qubits: Vec<usize>, matrix: CMatrix },
    Idle { qubit: usize },
    Barrier { qubits: Vec<usize> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateKind {
    Rx,
    Rz,
    Cnot,
    Unitary,
    Idle,
    Barrier,
}

impl Gate {
    pub fn rx(qubit: usize, angle: f64) -> Self {
        Gate::Rx { qubit, angle }
    }

    pub fn rz(qubit: usize, angle: f64) -> Self {
        Gate::Rz { qubit, angle }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Gate::Cnot { control, target }
    }

    pub fn unitary(qubits: Vec<usize>, matrix: CMatrix) -> Self {
        Gate::Unitary { qubits, matrix }
    }

    pub fn h(qubit: usize) -> Self {
        Gate::Unitary {
            qubits: vec![qubit],
            matrix: linalg::hadamard(),
        }
    }

    pub fn kind(&self) -> GateKind {
        match self {
            Gate::Rx { .. } => GateKind::Rx,
            Gate::Rz { .. } => GateKind::Rz,
            Gate::Cnot { .. } => GateKind::Cnot,
            Gate::Unitary { .. } => GateKind::Unitary,
            Gate::Idle { .. } => GateKind::Idle,
            Gate::Barrier { .. } => GateKind::Barrier,
        }
    }

    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::Rx { qubit, .. } | Gate::Rz { qubit, .. } | Gate::Idle { qubit } => vec![*qubit],
            Gate::Cnot { control, target } => vec![*control, *target],
            Gate::Unitary { qubits, .. } | Gate::Barrier { qubits } => qubits.clone(),
        }
    }

    /// True for gates with a unitary action on one qubit (including idles).
    pub fn is_single_qubit(&self) -> bool {
        matches!(self, Gate::Rx { .. } | Gate::Rz { .. } | Gate::Idle { .. })
            || matches!(self, Gate::Unitary { qubits, .. } if qubits.len() == 1)
    }

    /// Local unitary on `self.qubits()`, or `None` for barriers.
    pub fn local_matrix(&self) -> Option<CMatrix> {
        match self {
            Gate::Rx { angle, .. } => Some(linalg::rx(*angle)),
            Gate::Rz { angle, .. } => Some(linalg::rz(*angle)),
            Gate::Cnot { .. } => Some(linalg::cnot()),
            Gate::Unitary { matrix, .. } => Some(matrix.clone()),
            Gate::Idle { .. } => Some(linalg::identity(2)),
            Gate::Barrier { .. } => None,
        }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let qubits = self.qubits();
        linalg::validate_qubits(n_qubits, &qubits)?;
        match self {
            Gate::Rx { angle, .. } | Gate::Rz { angle, .. } if !angle.is_finite() => Err(
                SimError::InvalidArgument(format!("non-finite rotation angle {angle}")),
            ),
            Gate::Unitary { qubits, matrix } => {
                let dim = 1usize << qubits.len();
                if matrix.nrows() != dim || matrix.ncols() != dim {
                    return Err(SimError::DimensionMismatch {
                        expected: dim,
                        got: matrix.nrows(),
                    });
                }
                check_unitary(matrix, 1e-10)
            }
            _ => Ok(()),
        }
    }
}

/// Applies a gate to a density matrix: `ρ → U ρ U^†`.
pub fn apply_gate(state: &DensityMatrix, gate: &Gate) -> Result<DensityMatrix> {
    let n = state
        .n_qubits()
        .ok_or_else(|| SimError::InvalidArgument("state dimension is not a power of two".into()))?;
    gate.validate(n)?;
    Ok(apply_gate_unchecked(state, gate, n))
}

pub(crate) fn apply_gate_unchecked(state: &DensityMatrix, gate: &Gate, n: usize) -> DensityMatrix {
    match gate {
        Gate::Idle { .. } | Gate::Barrier { .. } => state.clone(),
        _ => {
            let u = gate.local_matrix().expect("non-barrier gate has a matrix");
            let index = LocalIndex::new(n, &gate.qubits());
            DensityMatrix::from_matrix_unchecked(linalg::conjugate_local(
                state.matrix(),
                &u,
                &index,
            ))
        }
    }
}

pub(crate) fn apply_gate_vector(psi: &CVector, gate: &Gate, n: usize) -> CVector {
    match gate {
        Gate::Idle { .. } | Gate::Barrier { .. } => psi.clone(),
        _ => {
            let u = gate.local_matrix().expect("non-barrier gate has a matrix");
            linalg::apply_vector(psi, &u, &LocalIndex::new(n, &gate.qubits()))
        }
    }
}

/// An ordered gate list on `n_qubits` carrying the process tag `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub n_qubits: usize,
    pub gates: Vec<Gate>,
    pub tag: f64,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            gates: Vec::new(),
            tag: 0.0,
        }
    }

    pub fn with_tag(mut self, tag: f64) -> Self {
        self.tag = tag;
        self
    }

    pub fn push(&mut self, gate: Gate) -> &mut Self {
        self.gates.push(gate);
        self
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) -> &mut Self {
        self.gates.extend(gates);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.tag.is_finite() {
            return Err(SimError::InvalidArgument(
                "circuit tag must be finite".into(),
            ));
        }
        self.gates
            .iter()
            .try_for_each(|g| g.validate(self.n_qubits))
    }

    pub fn count(&self, kind: GateKind) -> usize {
        self.gates.iter().filter(|g| g.kind() == kind).count()
    }

    /// Number of gates with a unitary action (barriers excluded).
    pub fn gate_count(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| g.kind() != GateKind::Barrier)
            .count()
    }

    pub fn is_basis_only(&self) -> bool {
        self.gates
            .iter()
            .all(|g| !matches!(g, Gate::Unitary { .. }))
    }

    /// Dense unitary of the whole circuit.
    pub fn unitary(&self) -> CMatrix {
        let d = 1usize << self.n_qubits;
        let mut u = linalg::identity(d);
        for gate in &self.gates {
            if let Some(m) = gate.local_matrix() {
                if !matches!(gate, Gate::Idle { .. }) {
                    u = linalg::apply_left(&u, &m, &LocalIndex::new(self.n_qubits, &gate.qubits()));
                }
            }
        }
        u
    }

    /// Noiseless execution on a density matrix.
    pub fn run(&self, input: &DensityMatrix) -> Result<DensityMatrix> {
        if input.dim() != 1 << self.n_qubits {
            return Err(SimError::DimensionMismatch {
                expected: 1 << self.n_qubits,
                got: input.dim(),
            });
        }
        self.validate()?;
        Ok(self.gates.iter().fold(input.clone(), |rho, g| {
            apply_gate_unchecked(&rho, g, self.n_qubits)
        }))
    }

    /// Noiseless execution on a state vector.
    pub fn run_vector(&self, psi: &CVector) -> CVector {
        self.gates
            .iter()
            .fold(psi.clone(), |v, g| apply_gate_vector(&v, g, self.n_qubits))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frobenius;
    use std::f64::consts::PI;

    fn basis(n: usize, i: usize) -> DensityMatrix {
        DensityMatrix::basis(1 << n, i)
    }

    #[test]
    fn rx_pi_flips_zero() {
        let out = apply_gate(&basis(1, 0), &Gate::rx(0, PI)).unwrap();
        assert!(out.distance(&basis(1, 1)) < 1e-12);
    }

    #[test]
    fn rz_leaves_zero_invariant() {
        for theta in [0.1, 1.3, PI, -2.7] {
            let out = apply_gate(&basis(1, 0), &Gate::rz(0, theta)).unwrap();
            assert!(out.distance(&basis(1, 0)) < 1e-12);
        }
    }

    #[test]
    fn cnot_flips_target_when_control_set() {
        // |10⟩ has index 2 with qubit 0 most significant
        let out = apply_gate(&basis(2, 2), &Gate::cnot(0, 1)).unwrap();
        assert!(out.distance(&basis(2, 3)) < 1e-12);
    }

    #[test]
    fn out_of_range_gate_rejected() {
        let err = apply_gate(&basis(2, 0), &Gate::rx(2, 0.1)).unwrap_err();
        assert_eq!(
            err,
            SimError::QubitOutOfRange {
                index: 2,
                n_qubits: 2
            }
        );
        assert!(matches!(
            apply_gate(&basis(2, 0), &Gate::cnot(1, 1)),
            Err(SimError::DuplicateQubit(1))
        ));
    }

    #[test]
    fn non_unitary_matrix_rejected() {
        let g = Gate::unitary(
            vec![0],
            CMatrix::identity(2, 2) * crate::linalg::c(2.0, 0.0),
        );
        assert!(matches!(
            apply_gate(&basis(1, 0), &g),
            Err(SimError::NotUnitary(_))
        ));
    }

    #[test]
    fn circuit_unitary_matches_gate_by_gate_run() {
        let mut c = Circuit::new(2);
        c.extend([
            Gate::h(0),
            Gate::cnot(0, 1),
            Gate::rz(1, 0.4),
            Gate::rx(0, 1.1),
        ]);
        let rho = basis(2, 0);
        let via_run = c.run(&rho).unwrap();
        let u = c.unitary();
        let via_u = &u * rho.matrix() * u.adjoint();
        assert!(frobenius(&(via_run.matrix() - via_u)) < 1e-12);
        assert!((via_run.trace().re - 1.0).abs() < 1e-12);
        assert!(via_run.hermiticity_defect() < 1e-12);
    }
}
