//! Dense complex linear algebra used by every simulator in the crate.
//!
//! Qubit ordering convention: qubit 0 is the most significant tensor factor,
//! so basis index `i` has qubit `q` in bit `n - 1 - q`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Result, SimError};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a CMatrix>) -> CMatrix {
    factors
        .into_iter()
        .fold(identity(1), |acc, f| acc.kronecker(f))
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

pub fn hadamard() -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)])
}

pub fn rx(theta: f64) -> CMatrix {
    let (s, co) = (theta / 2.0).sin_cos();
    CMatrix::from_row_slice(2, 2, &[c(co, 0.0), c(0.0, -s), c(0.0, -s), c(co, 0.0)])
}

pub fn rz(theta: f64) -> CMatrix {
    CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::from_polar(1.0, -theta / 2.0),
            ZERO,
            ZERO,
            C64::from_polar(1.0, theta / 2.0),
        ],
    )
}

/// CNOT with the control as the first (most significant) local qubit.
pub fn cnot() -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 0)] = ONE;
    m[(1, 1)] = ONE;
    m[(2, 3)] = ONE;
    m[(3, 2)] = ONE;
    m
}

pub fn frobenius(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn is_hermitian(a: &CMatrix, tol: f64) -> bool {
    a.is_square() && frobenius(&(a - a.adjoint())) <= tol
}

pub fn unitarity_defect(u: &CMatrix) -> f64 {
    frobenius(&(u.adjoint() * u - identity(u.nrows())))
}

pub fn check_unitary(u: &CMatrix, tol: f64) -> Result<()> {
    if !u.is_square() {
        return Err(SimError::NotUnitary(f64::INFINITY));
    }
    let defect = unitarity_defect(u);
    if defect > tol {
        return Err(SimError::NotUnitary(defect));
    }
    Ok(())
}

/// `min_phi || a - e^{i phi} b ||_F`, the distance between two operators
/// once the global phase is aligned.
pub fn distance_up_to_phase(a: &CMatrix, b: &CMatrix) -> f64 {
    let overlap = (b.adjoint() * a).trace();
    let phase = if overlap.norm() > 1e-300 {
        overlap / overlap.norm()
    } else {
        ONE
    };
    frobenius(&(a - b * phase))
}

/// `tr(A B)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Hermitian eigendecomposition with eigenvalues sorted ascending and the
/// eigenvector columns permuted to match.
pub fn hermitian_eigen(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..h.nrows()).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .total_cmp(&eig.eigenvalues[j])
            .then(i.cmp(&j))
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(h.nrows(), h.ncols());
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// `exp(-i H t)` for Hermitian `H` through its eigendecomposition.
pub fn expm_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    let (values, vectors) = hermitian_eigen(h);
    let phases = CVector::from_iterator(
        values.len(),
        values.iter().map(|&e| C64::from_polar(1.0, -e * t)),
    );
    let scaled = DMatrix::from_fn(vectors.nrows(), vectors.ncols(), |i, j| {
        vectors[(i, j)] * phases[j]
    });
    scaled * vectors.adjoint()
}

/// General matrix exponential by scaling-and-squaring Padé approximation.
pub fn expm_pade(a: &CMatrix) -> CMatrix {
    a.clone().exp()
}

/// Principal Hermitian generator `G` with `exp(-i G) = U` for unitary `U`.
pub fn unitary_generator(u: &CMatrix) -> CMatrix {
    // U is normal, so its Schur form is diagonal.
    let (q, t) = u.clone().schur().unpack();
    let n = u.nrows();
    let phases = CVector::from_iterator(n, (0..n).map(|k| c(-t[(k, k)].arg(), 0.0)));
    let scaled = DMatrix::from_fn(n, n, |i, j| q[(i, j)] * phases[j]);
    scaled * q.adjoint()
}

/// Index tables for acting on a subset of qubits of an `n`-qubit register.
#[derive(Debug, Clone)]
pub struct LocalIndex {
    /// Global indices with every targeted qubit set to 0.
    pub bases: Vec<usize>,
    /// Offset for each local basis index (first listed qubit most significant).
    pub offsets: Vec<usize>,
}

impl LocalIndex {
    pub fn new(n_qubits: usize, qubits: &[usize]) -> Self {
        let k = qubits.len();
        let offsets: Vec<usize> = (0..1usize << k)
            .map(|local| {
                qubits
                    .iter()
                    .enumerate()
                    .filter(|(pos, _)| (local >> (k - 1 - pos)) & 1 == 1)
                    .map(|(_, &q)| 1usize << (n_qubits - 1 - q))
                    .sum()
            })
            .collect();
        let mask: usize = qubits.iter().map(|&q| 1usize << (n_qubits - 1 - q)).sum();
        let bases = (0..1usize << n_qubits).filter(|i| i & mask == 0).collect();
        Self { bases, offsets }
    }
}

pub fn validate_qubits(n_qubits: usize, qubits: &[usize]) -> Result<()> {
    for (i, &q) in qubits.iter().enumerate() {
        if q >= n_qubits {
            return Err(SimError::QubitOutOfRange { index: q, n_qubits });
        }
        if qubits[..i].contains(&q) {
            return Err(SimError::DuplicateQubit(q));
        }
    }
    Ok(())
}

/// Returns `(op ⊗ I) * mat` with `op` acting on `qubits`.
pub fn apply_left(mat: &CMatrix, op: &CMatrix, index: &LocalIndex) -> CMatrix {
    let d = mat.nrows();
    let k = index.offsets.len();
    let mut out = mat.clone();
    let mut buf = vec![ZERO; k];
    for col in 0..mat.ncols() {
        let column = &mut out.as_mut_slice()[col * d..(col + 1) * d];
        for &base in &index.bases {
            for (l, &off) in index.offsets.iter().enumerate() {
                buf[l] = column[base + off];
            }
            for (j, &off) in index.offsets.iter().enumerate() {
                let mut acc = ZERO;
                for (l, &v) in buf.iter().enumerate() {
                    acc += op[(j, l)] * v;
                }
                column[base + off] = acc;
            }
        }
    }
    out
}

/// Returns `mat * (op ⊗ I)^†` with `op` acting on `qubits`.
pub fn apply_right_adjoint(mat: &CMatrix, op: &CMatrix, index: &LocalIndex) -> CMatrix {
    let d = mat.nrows();
    let k = index.offsets.len();
    let opc: Vec<C64> = (0..k * k).map(|x| op[(x / k, x % k)].conj()).collect();
    let mut out = mat.clone();
    let data = out.as_mut_slice();
    let mut buf = vec![ZERO; k];
    for &base in &index.bases {
        for row in 0..d {
            for (l, &off) in index.offsets.iter().enumerate() {
                buf[l] = data[(base + off) * d + row];
            }
            for (j, &off) in index.offsets.iter().enumerate() {
                let mut acc = ZERO;
                for (l, &v) in buf.iter().enumerate() {
                    acc += v * opc[j * k + l];
                }
                data[(base + off) * d + row] = acc;
            }
        }
    }
    out
}

/// `U ρ U^†` with `U` acting on a subset of qubits.
pub fn conjugate_local(rho: &CMatrix, u: &CMatrix, index: &LocalIndex) -> CMatrix {
    apply_right_adjoint(&apply_left(rho, u, index), u, index)
}

/// Embeds a local operator into the full register (dense, for tests and small n).
pub fn embed(op: &CMatrix, qubits: &[usize], n_qubits: usize) -> CMatrix {
    let index = LocalIndex::new(n_qubits, qubits);
    apply_left(&identity(1 << n_qubits), op, &index)
}

/// Reduced density matrix on `keep` (in the listed order) of an `n`-qubit state.
pub fn partial_trace_keep(rho: &CMatrix, keep: &[usize], n_qubits: usize) -> CMatrix {
    let index = LocalIndex::new(n_qubits, keep);
    let k = index.offsets.len();
    let mut out = CMatrix::zeros(k, k);
    for &base in &index.bases {
        for a in 0..k {
            for b in 0..k {
                out[(a, b)] += rho[(base + index.offsets[a], base + index.offsets[b])];
            }
        }
    }
    out
}

/// Reduced density matrix of the pure state `psi` on `keep`.
pub fn partial_trace_pure(psi: &CVector, keep: &[usize], n_qubits: usize) -> CMatrix {
    let index = LocalIndex::new(n_qubits, keep);
    let k = index.offsets.len();
    let mut out = CMatrix::zeros(k, k);
    for &base in &index.bases {
        for a in 0..k {
            let va = psi[base + index.offsets[a]];
            if va == ZERO {
                continue;
            }
            for b in 0..k {
                out[(a, b)] += va * psi[base + index.offsets[b]].conj();
            }
        }
    }
    out
}

/// `(op ⊗ I) psi` for a state vector.
pub fn apply_vector(psi: &CVector, op: &CMatrix, index: &LocalIndex) -> CVector {
    let k = index.offsets.len();
    let mut out = psi.clone();
    let mut buf = vec![ZERO; k];
    for &base in &index.bases {
        for (l, &off) in index.offsets.iter().enumerate() {
            buf[l] = psi[base + off];
        }
        for (j, &off) in index.offsets.iter().enumerate() {
            out[base + off] = buf.iter().enumerate().map(|(l, &v)| op[(j, l)] * v).sum();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn local_application_matches_dense_embedding() {
        let n = 3;
        let u = kron(&rx(0.3), &rz(1.1)) * cnot();
        let rho = CMatrix::from_fn(8, 8, |i, j| {
            c((i * 3 + j) as f64 * 0.01, (i as f64 - j as f64) * 0.02)
        });
        for qubits in [[0usize, 2], [2, 0], [1, 2]] {
            let dense = embed(&u, &qubits, n);
            let index = LocalIndex::new(n, &qubits);
            let fast = conjugate_local(&rho, &u, &index);
            let reference = &dense * &rho * dense.adjoint();
            assert!(frobenius(&(fast - reference)) < 1e-12);
        }
    }

    #[test]
    fn embed_orders_qubits_most_significant_first() {
        let x0 = embed(&pauli_x(), &[0], 2);
        let reference = kron(&pauli_x(), &identity(2));
        assert!(frobenius(&(x0 - reference)) < 1e-15);
    }

    #[test]
    fn eigen_and_pade_exponentials_agree() {
        let h = CMatrix::from_fn(4, 4, |i, j| {
            let re = ((i + 2 * j) % 5) as f64 * 0.3 + ((j + 2 * i) % 5) as f64 * 0.3;
            let im = (i as f64 - j as f64) * 0.17;
            c(re, im)
        });
        let via_eigen = expm_hermitian(&h, 0.7);
        let via_pade = expm_pade(&(&h * c(0.0, -0.7)));
        assert!(frobenius(&(via_eigen - via_pade)) < 1e-12);
    }

    #[test]
    fn generator_reproduces_unitary() {
        let u = kron(&hadamard(), &rz(0.4)) * cnot();
        let g = unitary_generator(&u);
        assert!(is_hermitian(&g, 1e-10));
        let back = expm_hermitian(&g, 1.0);
        assert!(frobenius(&(back - u)) < 1e-10);
    }

    #[test]
    fn partial_trace_of_product_state() {
        let a =
            CMatrix::from_row_slice(2, 2, &[c(0.7, 0.0), c(0.1, 0.2), c(0.1, -0.2), c(0.3, 0.0)]);
        let b =
            CMatrix::from_row_slice(2, 2, &[c(0.4, 0.0), c(0.0, 0.1), c(0.0, -0.1), c(0.6, 0.0)]);
        let rho = kron(&a, &b);
        assert!(frobenius(&(partial_trace_keep(&rho, &[0], 2) - &a)) < 1e-14);
        assert!(frobenius(&(partial_trace_keep(&rho, &[1], 2) - &b)) < 1e-14);
        let swapped = partial_trace_keep(&rho, &[1, 0], 2);
        assert!(frobenius(&(swapped - kron(&b, &a))) < 1e-14);
    }
}
