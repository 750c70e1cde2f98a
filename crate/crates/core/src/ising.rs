//! Transverse-field Ising chain `H = -g Σ X_i - J Σ Z_i Z_{i+1}`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::linalg::{self, c, CMatrix, CVector};
use crate::state::DensityMatrix;

pub const MAX_DENSE_QUBITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsingSpec {
    pub n: usize,
    pub j: f64,
    pub g: f64,
}

impl IsingSpec {
    pub fn new(n: usize, j: f64, g: f64) -> Result<Self> {
        let spec = Self { n, j, g };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(SimError::InvalidArgument(format!(
                "Ising chain needs N >= 2, got {}",
                self.n
            )));
        }
        if self.n > MAX_DENSE_QUBITS {
            return Err(SimError::TooLarge(format!(
                "{} sites exceeds the dense limit {MAX_DENSE_QUBITS}",
                self.n
            )));
        }
        if !self.j.is_finite() || !self.g.is_finite() {
            return Err(SimError::InvalidArgument(
                "Ising couplings must be finite".into(),
            ));
        }
        Ok(())
    }

    /// Dense Hamiltonian. The matrix is real; X couples basis states that
    /// differ in one bit and ZZ is diagonal.
    pub fn hamiltonian(&self) -> CMatrix {
        let n = self.n;
        let d = 1usize << n;
        let mut h = CMatrix::zeros(d, d);
        for i in 0..d {
            let mut diag = 0.0;
            for q in 0..n - 1 {
                let a = (i >> (n - 1 - q)) & 1;
                let b = (i >> (n - 2 - q)) & 1;
                diag -= self.j * if a == b { 1.0 } else { -1.0 };
            }
            h[(i, i)] = c(diag, 0.0);
            for q in 0..n {
                h[(i ^ (1 << (n - 1 - q)), i)] -= c(self.g, 0.0);
            }
        }
        h
    }

    /// `⟨ψ|H|ψ⟩` without forming the dense matrix.
    pub fn energy_vector(&self, psi: &CVector) -> f64 {
        let n = self.n;
        let mut e = 0.0;
        for i in 0..psi.len() {
            let amp = psi[i];
            let mut diag = 0.0;
            for q in 0..n - 1 {
                let a = (i >> (n - 1 - q)) & 1;
                let b = (i >> (n - 2 - q)) & 1;
                diag -= self.j * if a == b { 1.0 } else { -1.0 };
            }
            e += diag * amp.norm_sqr();
            for q in 0..n {
                e -= self.g * (psi[i ^ (1 << (n - 1 - q))].conj() * amp).re;
            }
        }
        e
    }
}

/// Lowest eigenpair from a dense symmetric eigensolver. When the ground
/// space is degenerate (small `g`) the returned vector is whichever one the
/// solver produces; it is deterministic but not symmetrized.
pub fn ground_state_vector(spec: &IsingSpec) -> Result<(CVector, f64)> {
    spec.validate()?;
    let h = spec.hamiltonian();
    let re = h.map(|z| z.re);
    let eig = re.symmetric_eigen();
    let k = (0..eig.eigenvalues.len())
        .min_by(|&a, &b| {
            eig.eigenvalues[a]
                .total_cmp(&eig.eigenvalues[b])
                .then(a.cmp(&b))
        })
        .expect("non-empty spectrum");
    let mut v = CVector::from_iterator(
        h.nrows(),
        eig.eigenvectors.column(k).iter().map(|&x| c(x, 0.0)),
    );
    // fix the sign so the largest-magnitude entry is positive
    let (imax, _) = v.iter().enumerate().fold((0, 0.0), |acc, (i, z)| {
        if z.norm() > acc.1 + 1e-12 {
            (i, z.norm())
        } else {
            acc
        }
    });
    if v[imax].re < 0.0 {
        v = -v;
    }
    Ok((v, eig.eigenvalues[k]))
}

pub fn ground_state(spec: &IsingSpec) -> Result<(DensityMatrix, f64)> {
    let (v, e) = ground_state_vector(spec)?;
    Ok((DensityMatrix::from_pure(&v), e))
}

/// `U ρ U^†` with `U = exp(-i H t)`.
pub fn evolve_unitary(state: &DensityMatrix, h: &CMatrix, t: f64) -> Result<DensityMatrix> {
    if h.nrows() != state.dim() {
        return Err(SimError::DimensionMismatch {
            expected: state.dim(),
            got: h.nrows(),
        });
    }
    if !linalg::is_hermitian(h, 1e-10) {
        return Err(SimError::InvalidArgument(
            "evolution generator is not Hermitian".into(),
        ));
    }
    if t == 0.0 {
        return Ok(state.clone());
    }
    let u = linalg::expm_hermitian(h, t);
    Ok(DensityMatrix::from_matrix_unchecked(
        &u * state.matrix() * u.adjoint(),
    ))
}

/// Real-symmetric-eigen propagator `exp(-i H t)` for the Ising chain, used
/// when the same evolution is applied to many states.
pub fn ising_propagator(spec: &IsingSpec, t: f64) -> Result<CMatrix> {
    spec.validate()?;
    let re = spec.hamiltonian().map(|z| z.re);
    let eig = re.symmetric_eigen();
    let d = eig.eigenvalues.len();
    let v = eig.eigenvectors.map(|x| c(x, 0.0));
    let scaled = CMatrix::from_fn(d, d, |i, k| {
        v[(i, k)] * num_complex::Complex64::from_polar(1.0, -eig.eigenvalues[k] * t)
    });
    Ok(scaled * v.transpose())
}
