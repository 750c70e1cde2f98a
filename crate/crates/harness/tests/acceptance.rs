//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! Criteria 8 and 9 are known to fail (see README); they are reported but do
//! not fail the process. Any other failure, or an unexpected pass of a known
//! failure, exits non-zero. Pass criterion numbers as arguments to run a
//! subset, e.g. `cargo test --test acceptance -- 1 2 7`.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use daem_core::baselines::zne_extrapolate;
use daem_core::bath::{discretize_bath, BathSpec, NonMarkovianModel};
use daem_core::circuit::Gate;
use daem_core::cv::{
    coherent_state, fock_state, lindblad_evolve, mean_photon_number, wigner, GridSpec, KerrSign,
};
use daem_core::dataset::{
    circuit_dataset, CircuitDatasetSpec, Measurement, NoiseLevelGrid, NoiseModel, Phase,
};
use daem_core::fiducial::build_fiducial;
use daem_core::linalg::{c, pauli_x, pauli_y, pauli_z, trace_product, CMatrix};
use daem_core::noise::{ChannelKind, KrausChannel, NoisePlacement};
use daem_core::pauli::nearest_neighbour_two_local;
use daem_core::process::build_vqe;
use daem_core::rng;
use daem_core::state::{haar_random_vector, random_mixed, DensityMatrix};
use daem_core::C64;
use daem_harness::report::{CDR, DAEM, NOISY, ZNE};
use daem_harness::{ExperimentConfig, Report};
use daem_nn::{grad_check, ConvSpec, Example, Head, Mlp, MlpSpec, Model, Params, UNet};
use rand::Rng;

const KNOWN_FAILING: [u8; 2] = [8, 9];

type Outcome = Result<String, String>;

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

// ---------------------------------------------------------------------------
// hand-built oracles

fn single_paulis() -> [CMatrix; 4] {
    [CMatrix::identity(2, 2), pauli_x(), pauli_y(), pauli_z()]
}

fn apply_kraus(ops: &[CMatrix], rho: &CMatrix) -> CMatrix {
    ops.iter()
        .fold(CMatrix::zeros(rho.nrows(), rho.ncols()), |acc, k| {
            acc + k * rho * k.adjoint()
        })
}

fn amplitude_ops(l: f64) -> Vec<CMatrix> {
    vec![
        CMatrix::from_row_slice(
            2,
            2,
            &[
                c(1.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c((1.0 - l).sqrt(), 0.0),
            ],
        ),
        CMatrix::from_row_slice(
            2,
            2,
            &[c(0.0, 0.0), c(l.sqrt(), 0.0), c(0.0, 0.0), c(0.0, 0.0)],
        ),
    ]
}

fn phase_ops(l: f64) -> Vec<CMatrix> {
    let f = (-2.0 * l).exp();
    vec![
        CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(f, 0.0)]),
        CMatrix::from_row_slice(
            2,
            2,
            &[
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c((1.0 - f * f).sqrt(), 0.0),
            ],
        ),
    ]
}

fn depolarizing_ops_one(l: f64) -> Vec<CMatrix> {
    single_paulis()
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            let w = if i == 0 { 1.0 - l } else { l / 3.0 };
            p * c(w.sqrt(), 0.0)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// 1-7: component oracles

fn channels() -> Outcome {
    let mut r = rng::seeded(101);
    let mut worst_complete: f64 = 0.0;
    let mut worst_cptp: f64 = 0.0;
    for &l in &[0.0, 0.05, 0.29, 0.5, 1.0] {
        for ch in [
            KrausChannel::amplitude_damping(l, 0).map_err(err)?,
            KrausChannel::phase_damping(l, 0).map_err(err)?,
            KrausChannel::depolarizing(l, vec![0]).map_err(err)?,
            KrausChannel::depolarizing(l, vec![0, 1]).map_err(err)?,
        ] {
            worst_complete = worst_complete.max(ch.completeness_defect());
            for _ in 0..5 {
                let rho = random_mixed(2, &mut r);
                let out = ch.apply(&rho).map_err(err)?;
                worst_cptp = worst_cptp
                    .max((out.trace().re - 1.0).abs())
                    .max(out.hermiticity_defect())
                    .max(-out.min_eigenvalue());
            }
        }
    }
    check(worst_complete < 1e-10, || {
        format!("completeness defect {worst_complete:.2e}")
    })?;
    check(worst_cptp < 1e-10, || {
        format!("CPTP defect {worst_cptp:.2e}")
    })?;

    // library channels against hand-written Kraus sums
    let mut worst_kraus: f64 = 0.0;
    for _ in 0..10 {
        let rho = random_mixed(1, &mut r);
        let l = r.random_range(0.0..1.0);
        let cases: [(KrausChannel, Vec<CMatrix>); 3] = [
            (
                KrausChannel::amplitude_damping(l, 0).map_err(err)?,
                amplitude_ops(l),
            ),
            (
                KrausChannel::phase_damping(l, 0).map_err(err)?,
                phase_ops(l),
            ),
            (
                KrausChannel::depolarizing(l, vec![0]).map_err(err)?,
                depolarizing_ops_one(l),
            ),
        ];
        for (ch, ops) in cases {
            let got = ch.apply(&rho).map_err(err)?;
            worst_kraus = worst_kraus.max((got.matrix() - apply_kraus(&ops, rho.matrix())).norm());
        }
    }
    check(worst_kraus < 1e-10, || {
        format!("Kraus sum mismatch {worst_kraus:.2e}")
    })?;

    let rho = random_mixed(1, &mut r);
    let out = KrausChannel::amplitude_damping(1.0, 0)
        .map_err(err)?
        .apply(&rho)
        .map_err(err)?;
    let d = (out.matrix() - DensityMatrix::zero_state(1).matrix()).norm();
    check(d < 1e-10, || {
        format!("amplitude damping at 1: distance {d:.2e}")
    })?;

    let mut worst_pd: f64 = 0.0;
    for &l in &[0.05, 0.1, 0.29, 1.3] {
        let out = KrausChannel::phase_damping(l, 0)
            .map_err(err)?
            .apply(&rho)
            .map_err(err)?;
        let want = rho.matrix()[(0, 1)] * (-2.0 * l).exp();
        worst_pd = worst_pd
            .max((out.matrix()[(0, 1)] - want).norm())
            .max((out.matrix()[(0, 0)] - rho.matrix()[(0, 0)]).norm());
    }
    check(worst_pd < 1e-10, || {
        format!("phase damping off-diagonal off by {worst_pd:.2e}")
    })?;

    let mut worst_dep: f64 = 0.0;
    for n in 1..=2usize {
        let d = 1 << n;
        let mixed = DensityMatrix::maximally_mixed(d);
        let qubits: Vec<usize> = (0..n).collect();
        let fixed = KrausChannel::depolarizing(0.4, qubits.clone())
            .map_err(err)?
            .apply(&mixed)
            .map_err(err)?;
        worst_dep = worst_dep.max((fixed.matrix() - mixed.matrix()).norm());
        let full = (d * d - 1) as f64 / (d * d) as f64;
        let any = random_mixed(n, &mut r);
        let out = KrausChannel::depolarizing(full, qubits)
            .map_err(err)?
            .apply(&any)
            .map_err(err)?;
        worst_dep = worst_dep.max((out.matrix() - mixed.matrix()).norm());
    }
    check(worst_dep < 1e-10, || {
        format!("depolarizing fixed points off by {worst_dep:.2e}")
    })?;
    Ok(format!(
        "completeness {worst_complete:.1e}, CPTP {worst_cptp:.1e}, Kraus {worst_kraus:.1e}"
    ))
}

fn duality() -> Outcome {
    let mut r = rng::seeded(202);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let rho = random_mixed(2, &mut r);
        // random Hermitian observable, not necessarily a Pauli string
        let h = CMatrix::from_fn(4, 4, |_, _| {
            c(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))
        });
        let obs = (&h + h.adjoint()) * c(0.5, 0.0);
        let level = r.random_range(0.0..1.0);
        let q = r.random_range(0..2usize);
        let ch = match r.random_range(0..4) {
            0 => KrausChannel::amplitude_damping(level, q),
            1 => KrausChannel::phase_damping(3.0 * level, q),
            2 => KrausChannel::depolarizing(level, vec![q]),
            _ => KrausChannel::depolarizing(level, vec![0, 1]),
        }
        .map_err(err)?;
        let schrodinger = trace_product(&obs, ch.apply(&rho).map_err(err)?.matrix()).re;
        let heisenberg = trace_product(
            &ch.conjugate_observable(&obs, 2).map_err(err)?,
            rho.matrix(),
        )
        .re;
        worst = worst.max((schrodinger - heisenberg).abs());
    }
    check(worst < 1e-10, || format!("max gap {worst:.2e}"))?;
    Ok(format!("max gap {worst:.1e} over 200 triples"))
}

fn fiducial_labels() -> Outcome {
    let mut r = rng::seeded(303);
    let observables = nearest_neighbour_two_local(4);
    let measurement = Measurement::Expectations(observables.clone());
    let levels = NoiseLevelGrid::arange(0.05, 0.29, 0.02).map_err(err)?;
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for kind in [ChannelKind::PhaseDamping, ChannelKind::AmplitudeDamping] {
        for g in [0.4, 0.8, 1.2, 1.6] {
            let theta: Vec<f64> = (0..24).map(|_| r.random_range(-PI..PI)).collect();
            let circuit = build_vqe(4, 2, &theta, g).map_err(err)?;
            let inputs: Vec<DensityMatrix> = (0..6)
                .map(|k| {
                    if k % 2 == 0 {
                        random_mixed(4, &mut r)
                    } else {
                        DensityMatrix::from_pure(&haar_random_vector(16, &mut r))
                    }
                })
                .collect();
            let samples = circuit_dataset(&CircuitDatasetSpec {
                phase: Phase::NoiseAwareness,
                target: &circuit,
                inputs: &inputs,
                measurement: &measurement,
                noise: &NoiseModel::Markov {
                    kind,
                    placement: NoisePlacement::AfterEachGate,
                },
                levels: &levels,
                shots: 0,
                seed: 7,
            })
            .map_err(err)?;
            // the noiseless fiducial, run gate by gate
            let fid = build_fiducial(&circuit).map_err(err)?;
            for (i, input) in inputs.iter().enumerate() {
                let out = fid.circuit.run(input).map_err(err)?;
                for (k, obs) in observables.iter().enumerate() {
                    let s = &samples[i * observables.len() + k];
                    let want = obs.expectation(&out).map_err(err)?;
                    worst = worst.max((s.p0[0] - want).abs());
                    count += 1;
                }
            }
        }
    }
    check(worst < 1e-10, || format!("label deviation {worst:.2e}"))?;
    Ok(format!("{count} labels, max deviation {worst:.1e}"))
}

fn zne_oracle() -> Outcome {
    let levels: Vec<f64> = (0..13).map(|k| 0.05 + 0.02 * k as f64).collect();
    let mut r = rng::seeded(404);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let (a, b, q) = (
            r.random_range(-1.0..1.0),
            r.random_range(-5.0..5.0),
            r.random_range(-10.0..10.0),
        );
        let values: Vec<f64> = levels.iter().map(|l| a + b * l + q * l * l).collect();
        let got = zne_extrapolate(&levels, &values).map_err(err)?;
        worst = worst.max((got - a).abs());
    }
    check(worst < 1e-9, || format!("intercept error {worst:.2e}"))?;
    Ok(format!(
        "max intercept error {worst:.1e} over 50 quadratics"
    ))
}

fn bath_dephasing() -> Outcome {
    let spec = BathSpec {
        beta: 1.0,
        ..BathSpec::default()
    };
    let modes = discretize_bath(&spec, 8, 20.0, 4).map_err(err)?;
    let model = NonMarkovianModel::new(spec, modes.clone()).map_err(err)?;
    let plus = DensityMatrix::new(CMatrix::from_element(2, 2, c(0.5, 0.0))).map_err(err)?;
    let mut worst: f64 = 0.0;
    for k in 0..=10 {
        let t = 0.05 + 0.025 * k as f64;
        let out = model.noisy_gate(&plus, &Gate::rz(0, 0.7), t).map_err(err)?;
        let simulated = -(2.0 * out.matrix()[(0, 1)].norm()).ln();
        // Γ(t) = Σ_k 4|g_k|² (1 - cos ω_k t) coth(β ω_k / 2) / ω_k²
        let analytic: f64 = modes
            .omegas
            .iter()
            .zip(&modes.couplings)
            .map(|(&w, &g)| {
                4.0 * g * g * (1.0 - (w * t).cos()) / (w * w * (spec.beta * w / 2.0).tanh())
            })
            .sum();
        worst = worst.max((simulated - analytic).abs() / analytic);
    }
    check(worst < 0.01, || format!("relative deviation {worst:.3e}"))?;
    Ok(format!("max relative deviation of Γ(t) {worst:.2e}"))
}

fn coherent_amplitudes(alpha: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let log_fact: f64 = (1..=k).map(|j| (j as f64).ln()).sum();
            (-alpha * alpha / 2.0 + k as f64 * alpha.ln() - 0.5 * log_fact).exp()
        })
        .collect()
}

fn cv_solver() -> Outcome {
    let n = 15;
    let amps = coherent_amplitudes(1.5, n);
    let norm: f64 = amps.iter().map(|a| a * a).sum();
    let start = coherent_state(c(1.5, 0.0), n).map_err(err)?;
    let evolved = lindblad_evolve(&start, KerrSign::Forward, 0.0, 1.0, 1e-3).map_err(err)?;
    // exact Fock phases e^{-iπ n(n-1) t} at t = 1
    let psi: Vec<C64> = amps
        .iter()
        .enumerate()
        .map(|(k, &a)| C64::from_polar(a, -PI * (k * k.saturating_sub(1)) as f64))
        .collect();
    let m = evolved.matrix();
    let mut f = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            f += psi[i].conj() * m[(i, j)] * psi[j];
        }
    }
    let fidelity = f.re / (norm * norm);
    check(fidelity > 1.0 - 1e-6, || {
        format!("Kerr 1 - F = {:.2e}", 1.0 - fidelity)
    })?;

    let n0: f64 = amps
        .iter()
        .enumerate()
        .map(|(k, a)| k as f64 * a * a)
        .sum::<f64>()
        / norm;
    let mut worst_decay: f64 = 0.0;
    for &loss in &[0.6, 0.7, 0.8] {
        for &t in &[0.25, 0.5, 1.0] {
            let out = lindblad_evolve(&start, KerrSign::Off, loss, t, 1e-3).map_err(err)?;
            let want = n0 * (-loss * t).exp();
            worst_decay = worst_decay.max((mean_photon_number(&out) - want).abs() / want);
        }
    }
    check(worst_decay < 1e-3, || {
        format!("⟨n⟩ decay off by {worst_decay:.2e}")
    })?;

    let grid = GridSpec::default();
    let lossy = lindblad_evolve(&start, KerrSign::Forward, 0.7, 0.5, 1e-3).map_err(err)?;
    let mut worst_norm: f64 = 0.0;
    for s in [
        &start,
        &evolved,
        &lossy,
        &fock_state(0, n),
        &fock_state(2, n),
    ] {
        let w = wigner(s, &grid).map_err(err)?;
        worst_norm = worst_norm.max((w.normalization() - 1.0).abs());
    }
    check(worst_norm < 0.02, || {
        format!("Wigner normalization off by {worst_norm:.3e}")
    })?;
    Ok(format!(
        "1 - F = {:.1e}, ⟨n⟩ decay {worst_decay:.1e}, Wigner norm {worst_norm:.1e}",
        1.0 - fidelity
    ))
}

fn random_examples(
    count: usize,
    obs: usize,
    p: usize,
    out: usize,
    simplex: bool,
    seed: u64,
) -> Vec<Example> {
    let mut r = rng::seeded(seed);
    (0..count)
        .map(|_| {
            let mut label: Vec<f64> = (0..out).map(|_| r.random_range(-0.9..0.9)).collect();
            if simplex {
                label.iter_mut().for_each(|v| *v = v.abs() + 0.01);
                let s: f64 = label.iter().sum();
                label.iter_mut().for_each(|v| *v /= s);
            }
            Example {
                g: r.random_range(0.0..2.0),
                observable: (0..obs).map(|_| r.random_range(-1.0..1.0)).collect(),
                p: (0..p).map(|_| r.random_range(-1.0..1.0)).collect(),
                label,
            }
        })
        .collect()
}

fn gradients() -> Outcome {
    let scalar = Mlp::new(MlpSpec {
        observable_dim: 34,
        p_dim: 13,
        embed: 16,
        hidden: vec![24, 24, 24],
        out_dim: 1,
        head: Head::ScalarTanh,
    })
    .map_err(err)?;
    let softmax = Mlp::new(MlpSpec {
        observable_dim: 1,
        p_dim: 13 * 8,
        embed: 16,
        hidden: vec![24, 24],
        out_dim: 8,
        head: Head::Softmax,
    })
    .map_err(err)?;
    let conv = UNet::new(ConvSpec {
        in_grids: 5,
        size: 16,
        widths: [3, 4, 4, 5],
    })
    .map_err(err)?;
    let cases: [(&str, &dyn Model, Vec<Example>); 3] = [
        (
            "mlp-tanh",
            &scalar,
            random_examples(4, 34, 13, 1, false, 21),
        ),
        (
            "mlp-softmax",
            &softmax,
            random_examples(4, 1, 104, 8, true, 22),
        ),
        (
            "conv",
            &conv,
            random_examples(2, 1, 5 * 256, 256, false, 23),
        ),
    ];
    let mut parts = Vec::new();
    for (name, model, examples) in cases {
        let batch: Vec<&Example> = examples.iter().collect();
        let params = Params::init(model.layout(), 24);
        let rep = grad_check(model, &params.values, &batch, 300, 25);
        check(rep.max_rel_error < 1e-4, || {
            format!("{name}: max relative error {:.2e}", rep.max_rel_error)
        })?;
        parts.push(format!("{name} {:.1e}", rep.max_rel_error));
    }
    Ok(parts.join(", "))
}

// ---------------------------------------------------------------------------
// 8-12: end-to-end runs of the shipped configurations

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(name)
}

fn run_config(name: &str, out: &Path) -> Result<(Report, Duration), String> {
    let cfg = ExperimentConfig::load(&shipped(name)).map_err(err)?;
    cfg.validate().map_err(err)?;
    let start = Instant::now();
    let report = daem_harness::run(&cfg, Some(out)).map_err(err)?;
    Ok((report, start.elapsed()))
}

fn method_mae(r: &Report, name: &str) -> Result<f64, String> {
    r.metrics
        .method(name)
        .map(|m| m.mae)
        .ok_or_else(|| format!("no {name} row"))
}

fn table(r: &Report, value: impl Fn(&daem_harness::report::MethodRow) -> Option<f64>) -> String {
    r.metrics
        .methods
        .iter()
        .map(|m| match value(m) {
            Some(v) => format!("{} {v:.4}", m.method),
            None => format!("{} -", m.method),
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn minutes(d: Duration) -> f64 {
    d.as_secs_f64() / 60.0
}

fn vqe(dir: &Path) -> Outcome {
    let (r, took) = run_config("vqe.toml", &dir.join("vqe"))?;
    let noisy = method_mae(&r, NOISY)?;
    let daem = method_mae(&r, DAEM)?;
    method_mae(&r, ZNE)?;
    method_mae(&r, CDR)?;
    let detail = format!(
        "MAE {}; {:.1} min",
        table(&r, |m| Some(m.mae)),
        minutes(took)
    );
    check(daem < 0.5 * noisy, || {
        format!("DAEM not below half the noisy MAE: {detail}")
    })?;
    check(took < Duration::from_secs(30 * 60), || {
        format!("too slow: {detail}")
    })?;
    Ok(detail)
}

fn qaoa(dir: &Path) -> Outcome {
    let (r, took) = run_config("qaoa.toml", &dir.join("qaoa"))?;
    let kl = |name: &str| {
        r.metrics
            .method(name)
            .and_then(|m| m.kl)
            .ok_or_else(|| format!("no {name} KL"))
    };
    let (noisy, daem) = (kl(NOISY)?, kl(DAEM)?);
    let detail = format!("KL {}; {:.1} min", table(&r, |m| m.kl), minutes(took));
    check(daem < noisy, || {
        format!("mitigated KL not below noisy: {detail}")
    })?;
    check(took < Duration::from_secs(20 * 60), || {
        format!("too slow: {detail}")
    })?;
    Ok(detail)
}

fn cv(dir: &Path) -> Outcome {
    let (r, took) = run_config("cv_kerr.toml", &dir.join("cv"))?;
    let rows: Vec<_> = r
        .metrics
        .fidelity_by_time
        .iter()
        .filter(|row| row.t >= 0.5 - 1e-9)
        .collect();
    check(rows.len() == 11, || {
        format!("{} evaluation times with t >= 0.5", rows.len())
    })?;
    let mut worst_margin = f64::INFINITY;
    for row in &rows {
        let (d, n) = (row.fidelity[DAEM], row.fidelity[NOISY]);
        worst_margin = worst_margin.min(d - n);
        check(d > n, || {
            format!("t = {}: mitigated fidelity {d:.4} vs noisy {n:.4}", row.t)
        })?;
    }
    let detail = format!(
        "mean fidelity {}; smallest margin for t >= 0.5 {worst_margin:.4}; {:.1} min",
        table(&r, |m| m.fidelity),
        minutes(took)
    );
    check(took < Duration::from_secs(45 * 60), || {
        format!("too slow: {detail}")
    })?;
    Ok(detail)
}

fn spin(dir: &Path) -> Outcome {
    let mut total = Duration::ZERO;
    let mut parts = Vec::new();
    for (name, label) in [
        ("spin_amplitude.toml", "amplitude"),
        ("spin_phase.toml", "phase"),
    ] {
        let (r, took) = run_config(name, &dir.join(label))?;
        total += took;
        let (noisy, daem) = (method_mae(&r, NOISY)?, method_mae(&r, DAEM)?);
        let zne = method_mae(&r, ZNE)?;
        let detail = format!("{label}: noisy {noisy:.4}, daem {daem:.4}, zne {zne:.4}");
        check(daem < noisy, || format!("DAEM not below noisy: {detail}"))?;
        parts.push(detail);
    }
    let detail = format!("{}; {:.1} min", parts.join("; "), minutes(total));
    check(total < Duration::from_secs(20 * 60), || {
        format!("too slow: {detail}")
    })?;
    Ok(detail)
}

fn determinism(dir: &Path) -> Outcome {
    let mut files = 0;
    for name in ["qaoa.toml", "swap_test.toml"] {
        let a = dir.join(format!("{name}-a"));
        let b = dir.join(format!("{name}-b"));
        run_config(name, &a)?;
        run_config(name, &b)?;
        for file in ["metrics.json", "report.json", "methods.csv"] {
            let read = |d: &Path| std::fs::read(d.join(file)).map_err(err);
            check(read(&a)? == read(&b)?, || {
                format!("{name}: {file} differs between runs")
            })?;
            files += 1;
        }
    }
    Ok(format!("{files} artifact pairs byte-identical"))
}

fn main() {
    let selected: Vec<u8> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let dir = tempfile::tempdir().expect("temporary directory");
    let root = dir.path();
    let criteria: [(u8, &str, Box<dyn Fn() -> Outcome>); 12] = [
        (1, "channel suite", Box::new(channels)),
        (2, "duality", Box::new(duality)),
        (3, "fiducial labels", Box::new(fiducial_labels)),
        (4, "ZNE oracle", Box::new(zne_oracle)),
        (5, "non-Markovian dephasing", Box::new(bath_dephasing)),
        (6, "CV solver", Box::new(cv_solver)),
        (7, "gradient checks", Box::new(gradients)),
        (8, "VQE end to end", Box::new(|| vqe(root))),
        (9, "QAOA end to end", Box::new(|| qaoa(root))),
        (10, "CV end to end", Box::new(|| cv(root))),
        (11, "spin dynamics end to end", Box::new(|| spin(root))),
        (12, "determinism", Box::new(|| determinism(root))),
    ];
    let mut unexpected = Vec::new();
    for (id, name, f) in &criteria {
        if !selected.is_empty() && !selected.contains(id) {
            continue;
        }
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        let known = KNOWN_FAILING.contains(id);
        let (tag, detail) = match &outcome {
            Ok(d) if known => ("PASS (listed as known failure)", d),
            Ok(d) => ("PASS", d),
            Err(d) if known => ("FAIL (known)", d),
            Err(d) => ("FAIL", d),
        };
        println!("criterion {id:>2} {name}: {tag} [{secs:.1} s] {detail}");
        if outcome.is_ok() == known {
            unexpected.push(*id);
        }
    }
    if !unexpected.is_empty() {
        println!("unexpected outcome for criteria {unexpected:?}");
        std::process::exit(1);
    }
}
