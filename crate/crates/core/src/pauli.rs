//! Pauli-string observables and expectation values.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::linalg::{self, c, CMatrix, CVector, LocalIndex, C64, ZERO};
use crate::state::DensityMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const NON_IDENTITY: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    pub fn matrix(self) -> CMatrix {
        match self {
            Pauli::I => linalg::identity(2),
            Pauli::X => linalg::pauli_x(),
            Pauli::Y => linalg::pauli_y(),
            Pauli::Z => linalg::pauli_z(),
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Tensor product of Paulis on an explicit qubit support.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliObservable {
    pub n_qubits: usize,
    /// `(qubit, pauli)` pairs; identity factors are implicit.
    pub terms: Vec<(usize, Pauli)>,
}

impl PauliObservable {
    pub fn new(n_qubits: usize, terms: Vec<(usize, Pauli)>) -> Result<Self> {
        let qubits: Vec<usize> = terms.iter().map(|t| t.0).collect();
        linalg::validate_qubits(n_qubits, &qubits)?;
        Ok(Self { n_qubits, terms })
    }

    pub fn single(n_qubits: usize, qubit: usize, pauli: Pauli) -> Result<Self> {
        Self::new(n_qubits, vec![(qubit, pauli)])
    }

    pub fn support(&self) -> Vec<usize> {
        self.terms.iter().map(|t| t.0).collect()
    }

    /// Matrix on the support qubits only, in support order.
    pub fn local_matrix(&self) -> CMatrix {
        linalg::kron_all(
            self.terms
                .iter()
                .map(|t| t.1.matrix())
                .collect::<Vec<_>>()
                .iter(),
        )
    }

    /// Dense `2^n × 2^n` matrix.
    pub fn matrix(&self) -> CMatrix {
        linalg::embed(&self.local_matrix(), &self.support(), self.n_qubits)
    }

    /// Bit mask of qubits carrying X or Y, and the per-index phase of `P|j⟩`.
    fn action(&self) -> (usize, impl Fn(usize) -> C64 + '_) {
        let n = self.n_qubits;
        let flip: usize = self
            .terms
            .iter()
            .filter(|t| matches!(t.1, Pauli::X | Pauli::Y))
            .map(|t| 1usize << (n - 1 - t.0))
            .sum();
        let phase = move |j: usize| {
            let mut ph = c(1.0, 0.0);
            for &(q, p) in &self.terms {
                let bit = (j >> (n - 1 - q)) & 1;
                match p {
                    Pauli::Y => ph *= if bit == 0 { c(0.0, 1.0) } else { c(0.0, -1.0) },
                    Pauli::Z if bit == 1 => ph = -ph,
                    _ => {}
                }
            }
            ph
        };
        (flip, phase)
    }

    /// `tr(P ρ)`, real part, in O(dim).
    pub fn expectation(&self, state: &DensityMatrix) -> Result<f64> {
        let d = 1usize << self.n_qubits;
        if state.dim() != d {
            return Err(SimError::DimensionMismatch {
                expected: d,
                got: state.dim(),
            });
        }
        let (flip, phase) = self.action();
        let rho = state.matrix();
        let mut acc = ZERO;
        for j in 0..d {
            acc += phase(j) * rho[(j, j ^ flip)];
        }
        Ok(acc.re)
    }

    /// `⟨ψ|P|ψ⟩` for a state vector.
    pub fn expectation_vector(&self, psi: &CVector) -> f64 {
        let (flip, phase) = self.action();
        let mut acc = ZERO;
        for j in 0..psi.len() {
            acc += psi[j ^ flip].conj() * phase(j) * psi[j];
        }
        acc.re
    }

    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for PauliObservable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (q, p) in &self.terms {
            write!(f, "{}{}", p.symbol(), q)?;
        }
        Ok(())
    }
}

/// Expectation of an arbitrary matrix observable: `Re tr(M ρ)`.
pub fn matrix_expectation(obs: &CMatrix, state: &DensityMatrix) -> Result<f64> {
    if obs.nrows() != state.dim() {
        return Err(SimError::DimensionMismatch {
            expected: state.dim(),
            got: obs.nrows(),
        });
    }
    Ok(linalg::trace_product(obs, state.matrix()).re)
}

/// Expectation of a local matrix observable acting on `qubits`.
pub fn local_expectation(obs: &CMatrix, qubits: &[usize], state: &DensityMatrix) -> Result<f64> {
    let n = state
        .n_qubits()
        .ok_or_else(|| SimError::InvalidArgument("state dimension is not a power of two".into()))?;
    linalg::validate_qubits(n, qubits)?;
    let reduced = linalg::partial_trace_keep(state.matrix(), qubits, n);
    Ok(linalg::trace_product(obs, &reduced).re)
}

/// The nine non-identity two-local Paulis on every nearest-neighbour pair.
pub fn nearest_neighbour_two_local(n_qubits: usize) -> Vec<PauliObservable> {
    let mut out = Vec::with_capacity(9 * n_qubits.saturating_sub(1));
    for q in 0..n_qubits.saturating_sub(1) {
        for a in Pauli::NON_IDENTITY {
            for b in Pauli::NON_IDENTITY {
                out.push(PauliObservable {
                    n_qubits,
                    terms: vec![(q, a), (q + 1, b)],
                });
            }
        }
    }
    out
}

/// Index tables for the support of an observable.
pub fn support_index(obs: &PauliObservable) -> LocalIndex {
    LocalIndex::new(obs.n_qubits, &obs.support())
}
