//! Conversion of arbitrary 1- and 2-qubit unitaries into the {Rx, Rz, CNOT}
//! basis.
//!
//! Single-qubit gates use the Euler form `U = e^{iφ} Rz(γ) Rx(β) Rz(α)`.
//! Two-qubit gates go through the magic-basis (KAK) decomposition
//! `U = (A1 ⊗ A2) · exp(i(a XX + b YY + c ZZ)) · (B1 ⊗ B2)`, with each
//! commuting exponential realized as a CNOT–Rz–CNOT block in a rotated basis.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, Matrix4, Vector4};

use crate::circuit::{Circuit, Gate};
use crate::error::{Result, SimError};
use crate::linalg::{self, c, CMatrix, C64, ONE, ZERO};

/// Euler angles `(α, β, γ)` with `U ∝ Rz(γ) Rx(β) Rz(α)`.
pub fn euler_zxz(u: &CMatrix) -> (f64, f64, f64) {
    let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
    let v = u / det.sqrt();
    let a = v[(0, 0)];
    let b = v[(0, 1)];
    let beta = 2.0 * b.norm().atan2(a.norm());
    let sum = if a.norm() > 1e-12 {
        -2.0 * a.arg()
    } else {
        0.0
    };
    let diff = if b.norm() > 1e-12 {
        2.0 * (C64::new(0.0, 1.0) * b).arg()
    } else {
        0.0
    };
    let alpha = (sum + diff) / 2.0;
    let gamma = (sum - diff) / 2.0;
    (alpha, beta, gamma)
}

fn angle_is_trivial(theta: f64) -> bool {
    let r = theta.rem_euclid(2.0 * PI);
    r < 1e-12 || 2.0 * PI - r < 1e-12
}

/// Basis-gate sequence for a single-qubit unitary, trivial rotations dropped.
pub fn decompose_single(qubit: usize, u: &CMatrix) -> Vec<Gate> {
    let (alpha, beta, gamma) = euler_zxz(u);
    [
        Gate::rz(qubit, alpha),
        Gate::rx(qubit, beta),
        Gate::rz(qubit, gamma),
    ]
    .into_iter()
    .filter(|g| match g {
        Gate::Rz { angle, .. } | Gate::Rx { angle, .. } => !angle_is_trivial(*angle),
        _ => true,
    })
    .collect()
}

fn magic_basis() -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let r = c(s, 0.0);
    let i = c(0.0, s);
    // columns: Φ+, iΦ-, iΨ+, Ψ-
    CMatrix::from_row_slice(
        4,
        4,
        &[
            r, i, ZERO, ZERO, //
            ZERO, ZERO, i, r, //
            ZERO, ZERO, i, -r, //
            r, -i, ZERO, ZERO,
        ],
    )
}

fn det4(m: &CMatrix) -> C64 {
    m.clone().determinant()
}

/// Real orthogonal `O` with `O^T M O` diagonal, for a complex symmetric
/// unitary `M` (whose real and imaginary parts commute).
fn diagonalize_symmetric_unitary(m: &CMatrix) -> Option<(Matrix4<f64>, Vec<C64>)> {
    let re = Matrix4::from_fn(|i, j| m[(i, j)].re);
    let im = Matrix4::from_fn(|i, j| m[(i, j)].im);
    for weight in [
        0.0,
        1.0,
        0.618_033_988_7,
        2.718_281_828,
        -1.414_213_56,
        0.271_828,
        3.14159,
        -0.7071,
    ] {
        let mix = re + im * weight;
        let mix = (mix + mix.transpose()) * 0.5;
        let eig = mix.symmetric_eigen();
        let o = eig.eigenvectors;
        let oc = DMatrix::from_fn(4, 4, |i, j| c(o[(i, j)], 0.0));
        let d = oc.transpose() * m * &oc;
        let off: f64 = (0..4)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| d[(i, j)].norm_sqr())
            .sum();
        if off.sqrt() < 1e-10 {
            return Some((o, (0..4).map(|k| d[(k, k)]).collect()));
        }
    }
    None
}

/// Splits a 4×4 matrix that is (up to phase) `A ⊗ B` into its factors.
fn split_tensor(k: &CMatrix) -> (CMatrix, CMatrix) {
    let mut best = (0, 0, -1.0);
    for i in 0..2 {
        for j in 0..2 {
            let norm: f64 = (0..2)
                .flat_map(|r| (0..2).map(move |s| (r, s)))
                .map(|(r, s)| k[(2 * i + r, 2 * j + s)].norm_sqr())
                .sum();
            if norm > best.2 {
                best = (i, j, norm);
            }
        }
    }
    let (bi, bj, _) = best;
    let block = CMatrix::from_fn(2, 2, |r, s| k[(2 * bi + r, 2 * bj + s)]);
    let det = block[(0, 0)] * block[(1, 1)] - block[(0, 1)] * block[(1, 0)];
    let b = &block / det.sqrt();
    let a = CMatrix::from_fn(2, 2, |i, j| {
        let blk = CMatrix::from_fn(2, 2, |r, s| k[(2 * i + r, 2 * j + s)]);
        (b.adjoint() * blk).trace() / c(2.0, 0.0)
    });
    (a, b)
}

/// Gates realizing `exp(i θ P⊗P)` for `P ∈ {X, Y, Z}` on `(q0, q1)`.
fn pauli_pair_rotation(pauli: char, theta: f64, q0: usize, q1: usize) -> Vec<Gate> {
    // exp(iθ ZZ) = CNOT · (I ⊗ Rz(-2θ)) · CNOT
    let core = [
        Gate::cnot(q0, q1),
        Gate::rz(q1, -2.0 * theta),
        Gate::cnot(q0, q1),
    ];
    // basis change V with V^† Z V = P, applied as V ... V^†
    let (pre, post): (Vec<Gate>, Vec<Gate>) = match pauli {
        'Z' => (vec![], vec![]),
        // X = H Z H
        'X' => (
            vec![Gate::h(q0), Gate::h(q1)],
            vec![Gate::h(q0), Gate::h(q1)],
        ),
        // Y = Rx(-π/2) Z Rx(π/2) with Rx(π/2) mapping Y → Z
        'Y' => (
            vec![Gate::rx(q0, FRAC_PI_2), Gate::rx(q1, FRAC_PI_2)],
            vec![Gate::rx(q0, -FRAC_PI_2), Gate::rx(q1, -FRAC_PI_2)],
        ),
        _ => unreachable!(),
    };
    pre.into_iter().chain(core).chain(post).collect()
}

/// Basis-gate sequence equal to the 2-qubit unitary `u` on `(q0, q1)` up to
/// global phase.
pub fn decompose_two(q0: usize, q1: usize, u: &CMatrix) -> Result<Vec<Gate>> {
    let b = magic_basis();
    let det = det4(u);
    let su = u / det.powf(0.25);
    let ub = b.adjoint() * &su * &b;
    let m = ub.transpose() * &ub;
    let (o2t, eigs) = diagonalize_symmetric_unitary(&m)
        .ok_or_else(|| SimError::InvalidArgument("KAK diagonalization failed".into()))?;
    let mut o2 = o2t.transpose();
    // keep O2 in SO(4)
    if o2.determinant() < 0.0 {
        for j in 0..4 {
            o2[(0, j)] = -o2[(0, j)];
        }
    }
    let o2c = DMatrix::from_fn(4, 4, |i, j| c(o2[(i, j)], 0.0));
    let mut dvals: Vec<C64> = eigs.iter().map(|e| e.sqrt()).collect();
    // O2 rows were re-signed, which leaves O2^T D^2 O2 unchanged.
    let dinv = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        4,
        dvals.iter().map(|d| ONE / d),
    ));
    let mut o1 = &ub * o2c.transpose() * dinv;
    if det4(&o1).re < 0.0 {
        dvals[0] = -dvals[0];
        for i in 0..4 {
            o1[(i, 0)] = -o1[(i, 0)];
        }
    }
    let dmat = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(dvals.clone()));
    let k1 = &b * &o1 * b.adjoint();
    let k2 = &b * &o2c * b.adjoint();
    let canonical = &b * &dmat * b.adjoint();

    // solve angle_j = φ + a x_j + b y_j + c z_j for the canonical part
    let xx = b.adjoint() * linalg::kron(&linalg::pauli_x(), &linalg::pauli_x()) * &b;
    let yy = b.adjoint() * linalg::kron(&linalg::pauli_y(), &linalg::pauli_y()) * &b;
    let zz = b.adjoint() * linalg::kron(&linalg::pauli_z(), &linalg::pauli_z()) * &b;
    let system = Matrix4::from_fn(|j, col| match col {
        0 => 1.0,
        1 => xx[(j, j)].re,
        2 => yy[(j, j)].re,
        _ => zz[(j, j)].re,
    });
    let rhs = Vector4::from_fn(|j, _| dvals[j].arg());
    let sol = system
        .lu()
        .solve(&rhs)
        .ok_or_else(|| SimError::InvalidArgument("singular canonical system".into()))?;
    let (ax, by, cz) = (sol[1], sol[2], sol[3]);

    let (a1, a2) = split_tensor(&k1);
    let (b1, b2) = split_tensor(&k2);

    let mut gates = Vec::new();
    gates.extend(decompose_single(q0, &b1));
    gates.extend(decompose_single(q1, &b2));
    for (p, theta) in [('X', ax), ('Y', by), ('Z', cz)] {
        if !angle_is_trivial(2.0 * theta) || theta.abs() > 1e-12 {
            gates.extend(pauli_pair_rotation(p, theta, q0, q1));
        }
    }
    gates.extend(decompose_single(q0, &a1));
    gates.extend(decompose_single(q1, &a2));
    let gates = expand_named(gates);

    // verify against the input
    let mut check = Circuit::new(2);
    let remap = |g: &Gate| remap_gate(g, q0, q1);
    check.extend(gates.iter().map(remap));
    let dist = linalg::distance_up_to_phase(&check.unitary(), u);
    if dist > 1e-8 {
        // report whether the factorization or the gate synthesis went wrong
        let rebuilt = linalg::kron(&a1, &a2) * canonical * linalg::kron(&b1, &b2);
        return Err(SimError::InvalidArgument(format!(
            "two-qubit decomposition mismatch {dist:.3e} (factor check {:.3e})",
            linalg::distance_up_to_phase(&rebuilt, u)
        )));
    }
    Ok(gates)
}

/// Rewrites any single-qubit `Unitary` in the list into Euler rotations.
fn expand_named(gates: Vec<Gate>) -> Vec<Gate> {
    gates
        .into_iter()
        .flat_map(|g| match &g {
            Gate::Unitary { qubits, matrix } if qubits.len() == 1 => {
                decompose_single(qubits[0], matrix)
            }
            _ => vec![g],
        })
        .collect()
}

fn remap_gate(g: &Gate, q0: usize, q1: usize) -> Gate {
    let m = |q: usize| {
        if q == q0 {
            0
        } else if q == q1 {
            1
        } else {
            q
        }
    };
    match g {
        Gate::Rx { qubit, angle } => Gate::rx(m(*qubit), *angle),
        Gate::Rz { qubit, angle } => Gate::rz(m(*qubit), *angle),
        Gate::Cnot { control, target } => Gate::cnot(m(*control), m(*target)),
        other => other.clone(),
    }
}

/// Rewrites a circuit into the {Rx, Rz, CNOT} basis. Idle slots and
/// barriers are kept; generic unitaries are decomposed.
pub fn transpile(circuit: &Circuit) -> Result<Circuit> {
    circuit.validate()?;
    let mut out = Circuit::new(circuit.n_qubits).with_tag(circuit.tag);
    for gate in &circuit.gates {
        match gate {
            Gate::Unitary { qubits, matrix } => match qubits.len() {
                1 => out.extend(decompose_single(qubits[0], matrix)),
                2 => out.extend(decompose_two(qubits[0], qubits[1], matrix)?),
                k => return Err(SimError::UnsupportedArity(k)),
            },
            other => out.push(other.clone()),
        };
    }
    Ok(out)
}
