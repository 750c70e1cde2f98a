use daem_core::linalg::{c, kron, pauli_x, pauli_y, pauli_z, trace_product, CMatrix};
use daem_core::noise::{self, KrausChannel};
use daem_core::rng;
use daem_core::state::{random_mixed, DensityMatrix};
use proptest::prelude::*;

fn paulis() -> [CMatrix; 4] {
    [CMatrix::identity(2, 2), pauli_x(), pauli_y(), pauli_z()]
}

// All 4^n Pauli strings, identity first.
fn pauli_strings(n: usize) -> Vec<CMatrix> {
    (0..n).fold(vec![CMatrix::identity(1, 1)], |acc, _| {
        acc.iter()
            .flat_map(|a| paulis().into_iter().map(move |p| kron(a, &p)))
            .collect()
    })
}

fn depolarize_by_sum(rho: &CMatrix, level: f64, n: usize) -> CMatrix {
    let strings = pauli_strings(n);
    let w = level / (strings.len() as f64 - 1.0);
    strings[1..]
        .iter()
        .fold(rho * c(1.0 - level, 0.0), |acc, p| {
            acc + p * rho * p * c(w, 0.0)
        })
}

fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
    (a - b).norm() < tol
}

#[test]
fn amplitude_damping_examples() {
    let mut r = rng::seeded(1);
    let rho = random_mixed(1, &mut r);
    let out = noise::amplitude_damping(&rho, 1.0, 0).unwrap();
    assert!(close(
        out.matrix(),
        DensityMatrix::zero_state(1).matrix(),
        1e-12
    ));
    let one = DensityMatrix::basis(2, 1);
    let half = noise::amplitude_damping(&one, 0.5, 0).unwrap();
    assert!(close(
        half.matrix(),
        &(CMatrix::identity(2, 2) * c(0.5, 0.0)),
        1e-12
    ));
    assert!(close(
        noise::amplitude_damping(&rho, 0.0, 0).unwrap().matrix(),
        rho.matrix(),
        1e-15
    ));
}

#[test]
fn phase_damping_examples() {
    let plus = DensityMatrix::new(CMatrix::from_element(2, 2, c(0.5, 0.0))).unwrap();
    let out = noise::phase_damping(&plus, 0.1, 0).unwrap();
    assert!((out.matrix()[(0, 1)].re - 0.5 * (-0.2f64).exp()).abs() < 1e-12);
    assert!((out.matrix()[(0, 0)].re - 0.5).abs() < 1e-12);
    let diag = DensityMatrix::new(CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        c(0.3, 0.0),
        c(0.7, 0.0),
    ])))
    .unwrap();
    for l in [0.0, 0.2, 3.0] {
        assert!(close(
            noise::phase_damping(&diag, l, 0).unwrap().matrix(),
            diag.matrix(),
            1e-14
        ));
    }
    let ch = KrausChannel::phase_damping(0.4, 0).unwrap();
    assert!(close(
        &ch.conjugate_observable(&pauli_z(), 1).unwrap(),
        &pauli_z(),
        1e-14
    ));
    assert!(close(
        &ch.conjugate_observable(&pauli_x(), 1).unwrap(),
        &(pauli_x() * c((-0.8f64).exp(), 0.0)),
        1e-14
    ));
}

#[test]
fn depolarizing_matches_pauli_sum_and_fixed_points() {
    let mut r = rng::seeded(2);
    for n in 1..=2 {
        let d = 1 << n;
        let rho = random_mixed(n, &mut r);
        for l in [0.0, 0.1, 0.5, 1.0] {
            let out = noise::depolarizing(&rho, l).unwrap();
            assert!(close(
                out.matrix(),
                &depolarize_by_sum(rho.matrix(), l, n),
                1e-12
            ));
        }
        let mixed = DensityMatrix::maximally_mixed(d);
        assert!(close(
            noise::depolarizing(&mixed, 0.3).unwrap().matrix(),
            mixed.matrix(),
            1e-14
        ));
        let full = (d * d - 1) as f64 / (d * d) as f64;
        assert!(close(
            noise::depolarizing(&rho, full).unwrap().matrix(),
            mixed.matrix(),
            1e-12
        ));
    }
}

fn channel(kind: u8, level: f64, qubit: usize) -> KrausChannel {
    match kind {
        0 => KrausChannel::amplitude_damping(level, qubit).unwrap(),
        1 => KrausChannel::phase_damping(level * 3.0, qubit).unwrap(),
        _ => KrausChannel::depolarizing(level, vec![qubit]).unwrap(),
    }
}

proptest! {
    #[test]
    fn kraus_sets_are_complete(kind in 0u8..3, level in 0.0f64..=1.0) {
        prop_assert!(channel(kind, level, 0).completeness_defect() < 1e-12);
    }

    #[test]
    fn channels_are_cptp(kind in 0u8..3, level in 0.0f64..=1.0, seed in 0u64..10_000, qubit in 0usize..3) {
        let rho = random_mixed(3, &mut rng::seeded(seed));
        let out = channel(kind, level, qubit).apply(&rho).unwrap();
        prop_assert!((out.trace().re - 1.0).abs() < 1e-10);
        prop_assert!(out.hermiticity_defect() < 1e-10);
        prop_assert!(out.min_eigenvalue() > -1e-8);
    }

    #[test]
    fn heisenberg_dual(kind in 0u8..3, level in 0.0f64..=1.0, seed in 0u64..10_000, qubit in 0usize..2) {
        let mut r = rng::seeded(seed);
        let rho = random_mixed(2, &mut r);
        // random Hermitian observable
        let g = random_mixed(2, &mut r).into_matrix() - random_mixed(2, &mut r).into_matrix();
        let ch = channel(kind, level, qubit);
        let lhs = trace_product(&g, ch.apply(&rho).unwrap().matrix()).re;
        let rhs = trace_product(&ch.conjugate_observable(&g, 2).unwrap(), rho.matrix()).re;
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn phase_damping_composes_additively(a in 0.0f64..2.0, b in 0.0f64..2.0, seed in 0u64..10_000) {
        let rho = random_mixed(1, &mut rng::seeded(seed));
        let twice = noise::phase_damping(&noise::phase_damping(&rho, a, 0).unwrap(), b, 0).unwrap();
        let once = noise::phase_damping(&rho, a + b, 0).unwrap();
        prop_assert!(close(twice.matrix(), once.matrix(), 1e-10));
    }
}
