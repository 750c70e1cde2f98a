use std::f64::consts::PI;

use daem_core::cv::{
    coherent_state, cv_fiducial_evolve, fock_state, lindblad_evolve, mean_annihilation,
    mean_photon_number, normalized_overlap, wigner, wigner_overlap, GridSpec, KerrSign,
};
use daem_core::linalg::{c, trace_product, CMatrix};
use daem_core::rng;
use daem_core::state::{haar_random_vector, random_mixed, DensityMatrix};
use daem_core::C64;

const N: usize = 15;

// Poisson amplitudes written out independently of the library's recursion.
fn coherent_amplitudes(alpha: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let log_fact: f64 = (1..=k).map(|j| (j as f64).ln()).sum();
            (-alpha * alpha / 2.0 + k as f64 * alpha.ln() - 0.5 * log_fact).exp()
        })
        .collect()
}

fn pure_fidelity(state: &DensityMatrix, psi: &[C64]) -> f64 {
    let m = state.matrix();
    let mut f = C64::new(0.0, 0.0);
    for i in 0..psi.len() {
        for j in 0..psi.len() {
            f += psi[i].conj() * m[(i, j)] * psi[j];
        }
    }
    f.re
}

fn distance(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    (a.matrix() - b.matrix()).norm()
}

#[test]
fn coherent_state_moments() {
    let s = coherent_state(c(1.5, 0.0), N).unwrap();
    let a = mean_annihilation(&s);
    assert!((a.re - 1.5).abs() < 1e-4 && a.im.abs() < 1e-12);
    assert!((mean_photon_number(&s) - 2.25).abs() < 1e-3);
    assert!((s.trace().re - 1.0).abs() < 1e-6);
    let vac = coherent_state(c(0.0, 0.0), N).unwrap();
    assert!(distance(&vac, &fock_state(0, N)) < 1e-15);
}

#[test]
fn lossless_kerr_matches_exact_phases() {
    let amps = coherent_amplitudes(1.5, N);
    let start = coherent_state(c(1.5, 0.0), N).unwrap();
    for &t in &[0.3, 1.0] {
        let out = lindblad_evolve(&start, KerrSign::Forward, 0.0, t, 1e-3).unwrap();
        let exact: Vec<C64> = amps
            .iter()
            .enumerate()
            .map(|(n, &a)| C64::from_polar(a, -PI * (n * n.saturating_sub(1)) as f64 * t))
            .collect();
        let norm: f64 = amps.iter().map(|a| a * a).sum();
        let f = pure_fidelity(&out, &exact) / (norm * norm);
        assert!(f > 1.0 - 1e-6, "t = {t}: 1 - F = {:e}", 1.0 - f);
    }
}

#[test]
fn kerr_revival_at_unit_time() {
    let start = coherent_state(c(1.5, 0.0), N).unwrap();
    let out = lindblad_evolve(&start, KerrSign::Forward, 0.0, 1.0, 1e-3).unwrap();
    let amps: Vec<C64> = coherent_amplitudes(1.5, N)
        .into_iter()
        .map(|a| c(a, 0.0))
        .collect();
    assert!(pure_fidelity(&out, &amps) > 0.999);
}

#[test]
fn pure_loss_decays_photon_number() {
    let start = coherent_state(c(1.5, 0.0), N).unwrap();
    let n0 = mean_photon_number(&start);
    for &(loss, t) in &[(0.6, 0.5), (0.8, 1.0)] {
        let out = lindblad_evolve(&start, KerrSign::Off, loss, t, 1e-3).unwrap();
        let expected = n0 * (-loss * t).exp();
        assert!((mean_photon_number(&out) - expected).abs() / expected < 1e-3);
        assert!((out.trace().re - 1.0).abs() < 1e-6 + (1.0 - start.trace().re));
    }
}

#[test]
fn zero_time_is_identity() {
    let start = coherent_state(c(1.5, 0.0), N).unwrap();
    let out = lindblad_evolve(&start, KerrSign::Forward, 0.7, 0.0, 1e-3).unwrap();
    assert!(distance(&out, &start) < 1e-15);
}

#[test]
fn integrator_error_shrinks_at_least_fourfold_per_halving() {
    let start = coherent_state(c(1.5, 0.0), N).unwrap();
    let reference = lindblad_evolve(&start, KerrSign::Forward, 0.7, 0.5, 1.25e-3).unwrap();
    let errs: Vec<f64> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&dt| {
            distance(
                &lindblad_evolve(&start, KerrSign::Forward, 0.7, 0.5, dt).unwrap(),
                &reference,
            )
        })
        .collect();
    for w in errs.windows(2) {
        assert!(w[0] / w[1] >= 4.0, "errors {errs:?}");
    }
}

#[test]
fn fiducial_echo() {
    let start = coherent_state(c(1.5, 0.0), N).unwrap();
    let back = cv_fiducial_evolve(&start, 1.0, 0.0, 1e-3).unwrap();
    let amps: Vec<C64> = coherent_amplitudes(1.5, N)
        .into_iter()
        .map(|a| c(a, 0.0))
        .collect();
    assert!(pure_fidelity(&back, &amps) > start.purity() - 1e-6);
    assert!(distance(&cv_fiducial_evolve(&start, 0.0, 0.6, 1e-3).unwrap(), &start) < 1e-15);
    let lossy = cv_fiducial_evolve(&start, 1.0, 0.6, 1e-3).unwrap();
    assert!((lossy.trace().re - start.trace().re).abs() < 1e-6);
    assert!(lossy.purity() < start.purity() - 1e-3);
}

#[test]
fn vacuum_wigner_is_gaussian() {
    let grid = GridSpec {
        min: -4.0,
        max: 4.0,
        points: 49,
    };
    let w = wigner(&fock_state(0, N), &grid).unwrap();
    assert!((w.at(24, 24) - 1.0 / PI).abs() < 1e-3);
    let axis = grid.axis();
    for (ix, &x) in axis.iter().enumerate().step_by(7) {
        for (ip, &p) in axis.iter().enumerate().step_by(5) {
            assert!((w.at(ix, ip) - (-(x * x + p * p)).exp() / PI).abs() < 1e-10);
        }
    }
    assert!((w.normalization() - 1.0).abs() < 0.02);
}

#[test]
fn coherent_peak_sits_at_displacement() {
    let grid = GridSpec {
        min: -4.0,
        max: 4.0,
        points: 161,
    };
    let w = wigner(&coherent_state(c(1.5, 0.0), N).unwrap(), &grid).unwrap();
    let (best, _) =
        w.values.iter().enumerate().fold(
            (0, f64::MIN),
            |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc },
        );
    let axis = grid.axis();
    let (x, p) = (axis[best / grid.points], axis[best % grid.points]);
    assert!((x - 2f64.sqrt() * 1.5).abs() <= grid.step());
    assert!(p.abs() <= grid.step());
    assert!((w.normalization() - 1.0).abs() < 0.02);
}

#[test]
fn overlap_examples() {
    let grid = GridSpec::default();
    let vac = wigner(&fock_state(0, N), &grid).unwrap();
    let one = wigner(&fock_state(1, N), &grid).unwrap();
    assert!((wigner_overlap(&vac, &vac).unwrap() - 1.0).abs() < 0.02);
    assert!(wigner_overlap(&vac, &one).unwrap().abs() < 0.02);
    assert_eq!(
        wigner_overlap(&vac, &one).unwrap(),
        wigner_overlap(&one, &vac).unwrap()
    );
}

fn embed_low(small: &CMatrix) -> DensityMatrix {
    let mut m = CMatrix::zeros(N, N);
    m.view_mut((0, 0), (small.nrows(), small.ncols()))
        .copy_from(small);
    DensityMatrix::new(m).unwrap()
}

#[test]
fn grid_overlap_matches_matrix_overlap() {
    let grid = GridSpec::default();
    let mut r = rng::seeded(11);
    let states: Vec<DensityMatrix> = (0..20)
        .map(|k| {
            if k % 2 == 0 {
                embed_low(random_mixed(2, &mut r).matrix())
            } else {
                let v = haar_random_vector(4, &mut r);
                embed_low(&(&v * v.adjoint()))
            }
        })
        .collect();
    for pair in states.chunks(2).chain(states[1..].chunks(2)) {
        if pair.len() < 2 {
            continue;
        }
        let (a, b) = (&pair[0], &pair[1]);
        let exact = trace_product(a.matrix(), b.matrix()).re;
        let wa = wigner(a, &grid).unwrap();
        let wb = wigner(b, &grid).unwrap();
        assert!((wigner_overlap(&wa, &wb).unwrap() - exact).abs() < 0.02);
        assert!((wigner_overlap(&wa, &wa).unwrap() - a.purity()).abs() < 0.02);
        let norm = normalized_overlap(&wa.values, &wb.values, &grid).unwrap();
        assert!((norm - exact / a.purity().max(b.purity())).abs() < 0.03);
    }
}
