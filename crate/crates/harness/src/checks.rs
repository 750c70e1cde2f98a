//! Invariant suites behind the `selftest` verb. Each check compares library
//! output against a closed form or a second computation route.

use std::time::Instant;

use daem_core::baselines::zne_extrapolate;
use daem_core::bath::{discretize_bath, BathSpec, NonMarkovianModel};
use daem_core::circuit::Gate;
use daem_core::cv::{
    coherent_state, coherent_vector, kerr_energies, lindblad_evolve, mean_photon_number, wigner,
    GridSpec, KerrSign,
};
use daem_core::dataset::{
    circuit_dataset, CircuitDatasetSpec, Measurement, NoiseLevelGrid, NoiseModel, Phase,
};
use daem_core::fiducial::build_fiducial;
use daem_core::linalg::{self, c, CMatrix};
use daem_core::noise::{ChannelKind, KrausChannel, NoisePlacement};
use daem_core::pauli::{nearest_neighbour_two_local, Pauli, PauliObservable};
use daem_core::process::build_vqe;
use daem_core::rng;
use daem_core::state::{random_mixed, DensityMatrix};
use daem_nn::{grad_check, ConvSpec, Example, Head, Mlp, MlpSpec, Model, Params, UNet};
use rand::Rng;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

type Check = (&'static str, fn() -> Result<String, String>);

pub const CHECKS: [Check; 7] = [
    ("channels", channels),
    ("duality", duality),
    ("fiducial-labels", fiducial_labels),
    ("zne-oracle", zne_oracle),
    ("bath-dephasing", bath_dephasing),
    ("cv-solver", cv_solver),
    ("gradients", gradients),
];

pub fn run_all() -> Vec<CheckResult> {
    CHECKS
        .iter()
        .map(|(name, f)| {
            let start = Instant::now();
            let outcome = f();
            let seconds = start.elapsed().as_secs_f64();
            match outcome {
                Ok(detail) => CheckResult {
                    name,
                    passed: true,
                    detail,
                    seconds,
                },
                Err(detail) => CheckResult {
                    name,
                    passed: false,
                    detail,
                    seconds,
                },
            }
        })
        .collect()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn channels() -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for &l in &[0.0, 0.1, 0.37, 0.8, 1.0] {
        for ch in [
            KrausChannel::amplitude_damping(l, 0).map_err(err)?,
            KrausChannel::phase_damping(l, 0).map_err(err)?,
            KrausChannel::depolarizing(l, vec![0]).map_err(err)?,
            KrausChannel::depolarizing(l, vec![0, 1]).map_err(err)?,
        ] {
            worst = worst.max(ch.completeness_defect());
        }
    }
    ensure(worst < 1e-10, || format!("completeness defect {worst:.2e}"))?;

    let one = DensityMatrix::basis(2, 1);
    let out = KrausChannel::amplitude_damping(1.0, 0)
        .map_err(err)?
        .apply(&one)
        .map_err(err)?;
    let d = out.distance(&DensityMatrix::basis(2, 0));
    ensure(d < 1e-10, || {
        format!("amplitude damping at 1 leaves distance {d:.2e} from |0><0|")
    })?;

    let mut rng = rng::seeded(1);
    let rho = random_mixed(1, &mut rng);
    let l = 0.23;
    let out = KrausChannel::phase_damping(l, 0)
        .map_err(err)?
        .apply(&rho)
        .map_err(err)?;
    let ratio = out.matrix()[(0, 1)] / rho.matrix()[(0, 1)];
    let dev = (ratio - c((-2.0 * l).exp(), 0.0)).norm();
    ensure(dev < 1e-10, || {
        format!("phase damping coherence factor off by {dev:.2e}")
    })?;

    let mixed = DensityMatrix::maximally_mixed(4);
    let out = KrausChannel::depolarizing(0.4, vec![0, 1])
        .map_err(err)?
        .apply(&mixed)
        .map_err(err)?;
    let d = out.distance(&mixed);
    ensure(d < 1e-10, || {
        format!("depolarizing moves the maximally mixed state by {d:.2e}")
    })?;
    let full = DensityMatrix::basis(4, 2);
    let out = KrausChannel::depolarizing(0.75, vec![0, 1])
        .map_err(err)?
        .apply(&full)
        .map_err(err)?;
    let want = 1.0 - 0.75 + 0.75 / 15.0 * 3.0;
    let dev = (out.matrix()[(2, 2)].re - want).abs();
    ensure(dev < 1e-10, || {
        format!("depolarizing population off by {dev:.2e}")
    })?;
    Ok(format!("completeness defect {worst:.1e}"))
}

fn duality() -> Result<String, String> {
    let mut rng = rng::seeded(2);
    let paulis = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let rho = random_mixed(2, &mut rng);
        let terms = vec![
            (0, paulis[rng.random_range(0..4)]),
            (1, paulis[rng.random_range(1..4)]),
        ];
        let obs = PauliObservable::new(2, terms).map_err(err)?.matrix();
        let q = rng.random_range(0..2usize);
        let level = rng.random_range(0.0..1.0);
        let ch = match rng.random_range(0..4) {
            0 => KrausChannel::amplitude_damping(level, q),
            1 => KrausChannel::phase_damping(level, q),
            2 => KrausChannel::depolarizing(level, vec![q]),
            _ => KrausChannel::depolarizing(level, vec![0, 1]),
        }
        .map_err(err)?;
        let direct = linalg::trace_product(&obs, ch.apply(&rho).map_err(err)?.matrix()).re;
        let dual = linalg::trace_product(
            &ch.conjugate_observable(&obs, 2).map_err(err)?,
            rho.matrix(),
        )
        .re;
        worst = worst.max((direct - dual).abs());
    }
    ensure(worst < 1e-10, || format!("max duality gap {worst:.2e}"))?;
    Ok(format!("max gap {worst:.1e} over 200 triples"))
}

fn fiducial_labels() -> Result<String, String> {
    let mut rng = rng::seeded(3);
    let theta: Vec<f64> = (0..24).map(|_| rng.random_range(-3.0..3.0)).collect();
    let circuit = build_vqe(4, 2, &theta, 0.8).map_err(err)?;
    let inputs: Vec<DensityMatrix> = (0..5).map(|_| random_mixed(4, &mut rng)).collect();
    let observables = nearest_neighbour_two_local(4);
    let measurement = Measurement::Expectations(observables.clone());
    let noise = NoiseModel::Markov {
        kind: ChannelKind::PhaseDamping,
        placement: NoisePlacement::AfterEachGate,
    };
    let levels = NoiseLevelGrid::arange(0.05, 0.29, 0.02).map_err(err)?;
    let samples = circuit_dataset(&CircuitDatasetSpec {
        phase: Phase::NoiseAwareness,
        target: &circuit,
        inputs: &inputs,
        measurement: &measurement,
        noise: &noise,
        levels: &levels,
        shots: 0,
        seed: 4,
    })
    .map_err(err)?;
    let fid = build_fiducial(&circuit).map_err(err)?;
    let mut worst: f64 = 0.0;
    for (i, input) in inputs.iter().enumerate() {
        let out = fid.circuit.run(input).map_err(err)?;
        for (k, o) in observables.iter().enumerate() {
            let want = o.expectation(&out).map_err(err)?;
            worst = worst.max((samples[i * observables.len() + k].p0[0] - want).abs());
        }
    }
    ensure(worst < 1e-10, || format!("label deviates by {worst:.2e}"))?;
    Ok(format!(
        "{} labels, max deviation {worst:.1e}",
        samples.len()
    ))
}

fn zne_oracle() -> Result<String, String> {
    let levels = NoiseLevelGrid::arange(0.05, 0.29, 0.02)
        .map_err(err)?
        .levels;
    let values: Vec<f64> = levels.iter().map(|l| 1.0 - 2.0 * l + l * l).collect();
    let got = zne_extrapolate(&levels, &values).map_err(err)?;
    ensure((got - 1.0).abs() < 1e-9, || format!("extrapolated {got}"))?;
    Ok(format!("intercept error {:.1e}", (got - 1.0).abs()))
}

fn bath_dephasing() -> Result<String, String> {
    let spec = BathSpec {
        beta: 1.0,
        ..BathSpec::default()
    };
    let modes = discretize_bath(&spec, 8, 20.0, 4).map_err(err)?;
    let model = NonMarkovianModel::new(spec, modes.clone()).map_err(err)?;
    let plus = DensityMatrix::from_pure(&daem_core::process::plus_state_vector(1));
    let mut worst: f64 = 0.0;
    for k in 0..=10 {
        let t = 0.05 + 0.025 * k as f64;
        let out = model.noisy_gate(&plus, &Gate::rz(0, 0.7), t).map_err(err)?;
        let simulated = -(2.0 * out.matrix()[(0, 1)].norm()).ln();
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
    ensure(worst < 0.01, || format!("relative deviation {worst:.3e}"))?;
    Ok(format!("max relative deviation {worst:.2e}"))
}

fn cv_solver() -> Result<String, String> {
    let n = 15;
    let alpha = c(1.5, 0.0);
    let start = coherent_state(alpha, n).map_err(err)?;
    let evolved = lindblad_evolve(&start, KerrSign::Forward, 0.0, 1.0, 1e-3).map_err(err)?;
    let amps = coherent_vector(alpha, n);
    let e = kerr_energies(n);
    let exact = CMatrix::from_fn(n, n, |i, j| {
        amps[i] * amps[j].conj() * c(0.0, -(e[i] - e[j])).exp()
    });
    let overlap = linalg::trace_product(&exact, evolved.matrix()).re / start.trace().re.powi(2);
    ensure(overlap > 1.0 - 1e-6, || format!("Kerr fidelity {overlap}"))?;

    let loss = 0.7;
    let decayed = lindblad_evolve(&start, KerrSign::Off, loss, 1.0, 1e-3).map_err(err)?;
    let rel =
        (mean_photon_number(&decayed) / (mean_photon_number(&start) * (-loss).exp()) - 1.0).abs();
    ensure(rel < 1e-3, || {
        format!("photon-number decay off by {rel:.2e}")
    })?;

    let w = wigner(&evolved, &GridSpec::default()).map_err(err)?;
    let norm_dev = (w.normalization() - 1.0).abs();
    ensure(norm_dev < 0.02, || {
        format!("Wigner normalization off by {norm_dev:.3e}")
    })?;
    Ok(format!(
        "1-F = {:.1e}, decay {rel:.1e}, norm {norm_dev:.1e}",
        1.0 - overlap
    ))
}

fn random_examples(
    n: usize,
    obs: usize,
    p: usize,
    out: usize,
    simplex: bool,
    seed: u64,
) -> Vec<Example> {
    let mut rng = rng::seeded(seed);
    (0..n)
        .map(|_| {
            let mut label: Vec<f64> = (0..out).map(|_| rng.random_range(-0.9..0.9)).collect();
            if simplex {
                label.iter_mut().for_each(|v| *v = v.abs() + 0.01);
                let s: f64 = label.iter().sum();
                label.iter_mut().for_each(|v| *v /= s);
            }
            Example {
                g: rng.random_range(0.0..2.0),
                observable: (0..obs).map(|_| rng.random_range(-1.0..1.0)).collect(),
                p: (0..p).map(|_| rng.random_range(-1.0..1.0)).collect(),
                label,
            }
        })
        .collect()
}

fn gradients() -> Result<String, String> {
    let scalar = Mlp::new(MlpSpec {
        observable_dim: 34,
        p_dim: 13,
        embed: 16,
        hidden: vec![24, 24],
        out_dim: 1,
        head: Head::ScalarTanh,
    })
    .map_err(err)?;
    let softmax = Mlp::new(MlpSpec {
        observable_dim: 1,
        p_dim: 13 * 8,
        embed: 16,
        hidden: vec![24],
        out_dim: 8,
        head: Head::Softmax,
    })
    .map_err(err)?;
    let conv = UNet::new(ConvSpec {
        in_grids: 2,
        size: 8,
        widths: [3, 3, 4, 4],
    })
    .map_err(err)?;
    let cases: [(&str, &dyn Model, Vec<Example>); 3] = [
        ("mlp-tanh", &scalar, random_examples(4, 34, 13, 1, false, 5)),
        (
            "mlp-softmax",
            &softmax,
            random_examples(4, 1, 104, 8, true, 6),
        ),
        ("unet", &conv, random_examples(2, 1, 128, 64, false, 7)),
    ];
    let mut parts = Vec::new();
    for (name, model, exs) in cases {
        let refs: Vec<&Example> = exs.iter().collect();
        let params = Params::init(model.layout(), 11);
        let r = grad_check(model, &params.values, &refs, 200, 12);
        ensure(r.max_rel_error < 1e-4, || {
            format!("{name}: relative error {:.2e}", r.max_rel_error)
        })?;
        parts.push(format!("{name} {:.1e}", r.max_rel_error));
    }
    Ok(parts.join(", "))
}
