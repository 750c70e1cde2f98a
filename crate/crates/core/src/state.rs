//! Density matrices, random state ensembles and measurement sampling.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Result, SimError};
use crate::linalg::{c, frobenius, hermitian_eigen, CMatrix, CVector, C64, ZERO};
use crate::rng::SimRng;

/// A quantum state `ρ` on a `dim`-dimensional space (qubits or truncated Fock).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: CMatrix,
}

impl DensityMatrix {
    /// Wraps a matrix after checking Hermiticity, unit trace and positivity.
    pub fn new(mat: CMatrix) -> Result<Self> {
        let rho = Self { mat };
        rho.validate(1e-10, 1e-10, 1e-8)?;
        Ok(rho)
    }

    /// Wraps a matrix that the caller guarantees to be a state.
    pub fn from_matrix_unchecked(mat: CMatrix) -> Self {
        Self { mat }
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut mat = CMatrix::zeros(dim, dim);
        mat[(index, index)] = c(1.0, 0.0);
        Self { mat }
    }

    /// `|0…0⟩⟨0…0|` on `n` qubits.
    pub fn zero_state(n_qubits: usize) -> Self {
        Self::basis(1 << n_qubits, 0)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            mat: CMatrix::identity(dim, dim) * c(1.0 / dim as f64, 0.0),
        }
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) vector.
    pub fn from_pure(psi: &CVector) -> Self {
        let norm = psi.norm();
        let v = psi / c(norm, 0.0);
        Self {
            mat: &v * v.adjoint(),
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Number of qubits when the dimension is a power of two.
    pub fn n_qubits(&self) -> Option<usize> {
        let d = self.dim();
        d.is_power_of_two().then(|| d.trailing_zeros() as usize)
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn purity(&self) -> f64 {
        crate::linalg::trace_product(&self.mat, &self.mat).re
    }

    pub fn hermiticity_defect(&self) -> f64 {
        frobenius(&(&self.mat - self.mat.adjoint()))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.mat + self.mat.adjoint()) * c(0.5, 0.0);
        hermitian_eigen(&herm).0[0]
    }

    pub fn validate(&self, herm_tol: f64, trace_tol: f64, eig_tol: f64) -> Result<()> {
        if !self.mat.is_square() {
            return Err(SimError::InvalidState("matrix is not square".into()));
        }
        let h = self.hermiticity_defect();
        if h > herm_tol {
            return Err(SimError::InvalidState(format!(
                "hermiticity defect {h:.3e}"
            )));
        }
        let tr = self.trace();
        if (tr - c(1.0, 0.0)).norm() > trace_tol {
            return Err(SimError::InvalidState(format!("trace {tr}")));
        }
        let lo = self.min_eigenvalue();
        if lo < -eig_tol {
            return Err(SimError::InvalidState(format!(
                "negative eigenvalue {lo:.3e}"
            )));
        }
        Ok(())
    }

    /// Frobenius distance to another state.
    pub fn distance(&self, other: &DensityMatrix) -> f64 {
        frobenius(&(&self.mat - &other.mat))
    }

    /// `⟨ψ|ρ|ψ⟩` for a normalized vector.
    pub fn fidelity_with_pure(&self, psi: &CVector) -> f64 {
        (psi.adjoint() * &self.mat * psi)[(0, 0)].re
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        Self {
            mat: self.mat.kronecker(&other.mat),
        }
    }

    /// Computational-basis populations, clipped at zero and renormalized.
    pub fn populations(&self) -> Vec<f64> {
        let raw: Vec<f64> = (0..self.dim())
            .map(|i| self.mat[(i, i)].re.max(0.0))
            .collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|p| p / total).collect()
    }

    /// Measurement statistics over bitstrings. `shots = 0` returns the exact
    /// distribution; otherwise the empirical frequencies of `shots` draws.
    pub fn sample_distribution(&self, shots: usize, rng: &mut SimRng) -> Vec<f64> {
        let exact = self.populations();
        if shots == 0 {
            return exact;
        }
        sample_frequencies(&exact, shots, rng)
    }
}

/// Empirical frequencies of `shots` categorical draws from `probs`.
pub fn sample_frequencies(probs: &[f64], shots: usize, rng: &mut SimRng) -> Vec<f64> {
    let mut cumulative = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for &p in probs {
        acc += p;
        cumulative.push(acc);
    }
    let mut counts = vec![0usize; probs.len()];
    for _ in 0..shots {
        let u: f64 = rng.random::<f64>() * acc;
        let k = cumulative.partition_point(|&c| c <= u).min(probs.len() - 1);
        counts[k] += 1;
    }
    counts
        .into_iter()
        .map(|n| n as f64 / shots as f64)
        .collect()
}

/// Estimate of an expectation value with eigenvalues ±1 from `shots` draws;
/// `shots = 0` returns the exact value.
pub fn sample_pm1_expectation(exact: f64, shots: usize, rng: &mut SimRng) -> f64 {
    if shots == 0 {
        return exact;
    }
    let p_plus = ((1.0 + exact) / 2.0).clamp(0.0, 1.0);
    let plus = (0..shots).filter(|_| rng.random::<f64>() < p_plus).count();
    (2 * plus) as f64 / shots as f64 - 1.0
}

fn complex_gaussian(rng: &mut SimRng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    c(re, im)
}

/// Haar-random pure state vector on `dim` dimensions.
pub fn haar_random_vector(dim: usize, rng: &mut SimRng) -> CVector {
    let v = CVector::from_fn(dim, |_, _| complex_gaussian(rng));
    let norm = v.norm();
    v / c(norm, 0.0)
}

/// Haar-random pure `n`-qubit state.
pub fn haar_random_pure(n_qubits: usize, rng: &mut SimRng) -> DensityMatrix {
    DensityMatrix::from_pure(&haar_random_vector(1 << n_qubits, rng))
}

/// Full-rank Ginibre mixed state `G G^† / tr(G G^†)`.
pub fn random_mixed(n_qubits: usize, rng: &mut SimRng) -> DensityMatrix {
    let d = 1 << n_qubits;
    let g = CMatrix::from_fn(d, d, |_, _| complex_gaussian(rng));
    let mut rho = &g * g.adjoint();
    let tr = rho.trace();
    rho /= tr;
    // symmetrize away rounding asymmetry
    let rho = (&rho + rho.adjoint()) * c(0.5, 0.0);
    DensityMatrix::from_matrix_unchecked(rho)
}

pub fn zero_vector(dim: usize) -> CVector {
    CVector::from_element(dim, ZERO)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn pure_states_have_unit_purity() {
        let mut rng = seeded(3);
        for n in 1..4 {
            let rho = haar_random_pure(n, &mut rng);
            assert!((rho.purity() - 1.0).abs() < 1e-10);
            rho.validate(1e-10, 1e-10, 1e-8).unwrap();
        }
    }

    #[test]
    fn ginibre_states_are_valid_and_mixed() {
        let mut rng = seeded(5);
        let rho = random_mixed(3, &mut rng);
        rho.validate(1e-10, 1e-10, 1e-8).unwrap();
        assert!(rho.purity() < 0.9);
        assert!(rho.min_eigenvalue() > 0.0);
    }

    #[test]
    fn exact_sampling_of_basis_state() {
        let rho = DensityMatrix::zero_state(2);
        let mut rng = seeded(1);
        assert_eq!(
            rho.sample_distribution(0, &mut rng),
            vec![1.0, 0.0, 0.0, 0.0]
        );
        assert_eq!(
            rho.sample_distribution(57, &mut rng),
            vec![1.0, 0.0, 0.0, 0.0]
        );
    }

    #[test]
    fn bell_state_exact_distribution() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = CVector::from_vec(vec![c(s, 0.0), ZERO, ZERO, c(s, 0.0)]);
        let rho = DensityMatrix::from_pure(&psi);
        let p = rho.sample_distribution(0, &mut seeded(0));
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[3] - 0.5).abs() < 1e-15);
        assert_eq!(p[1], 0.0);
        assert_eq!(p[2], 0.0);
    }

    #[test]
    fn plus_state_sampling_within_five_sigma() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let rho = DensityMatrix::from_pure(&CVector::from_vec(vec![c(s, 0.0), c(s, 0.0)]));
        let shots = 10_000;
        let p = rho.sample_distribution(shots, &mut seeded(11));
        let sigma = (0.25 / shots as f64).sqrt();
        for q in p {
            assert!((q - 0.5).abs() < 5.0 * sigma);
        }
    }

    #[test]
    fn haar_average_approaches_maximally_mixed() {
        let mut rng = seeded(2024);
        let draws = 2000;
        let mut acc = CMatrix::zeros(2, 2);
        for _ in 0..draws {
            acc += haar_random_pure(1, &mut rng).into_matrix();
        }
        acc /= c(draws as f64, 0.0);
        let dist = frobenius(&(acc - DensityMatrix::maximally_mixed(2).into_matrix()));
        assert!(dist < 0.05, "distance {dist}");
    }

    #[test]
    fn invalid_matrix_rejected() {
        let mut m = CMatrix::identity(2, 2);
        m[(0, 0)] = c(1.5, 0.0);
        m[(1, 1)] = c(-0.5, 0.0);
        assert!(DensityMatrix::new(m).is_err());
    }
}
