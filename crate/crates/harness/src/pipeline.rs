//! Experiment pipelines: both dataset phases, the baselines, training and
//! evaluation. Every stage is a pure function of the configuration, so a
//! run can be split across the CLI verbs and resumed from disk.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use daem_core::baselines::{
    cdr_fit, clifford_group, clifford_variant, zne_extrapolate_rows, CdrModel,
};
use daem_core::bath::{discretize_bath, NonMarkovianModel};
use daem_core::circuit::Circuit;
use daem_core::cv::{cv_error_mitigation, cv_noise_awareness, time_grid, GridSpec, KerrSetup};
use daem_core::dataset::{
    circuit_dataset, number, read_jsonl, spin_dataset, write_jsonl, CircuitDatasetSpec,
    DatasetMeta, DatasetSample, Measurement, NoiseLevelGrid, NoiseModel, Phase, SpinDatasetSpec,
};
use daem_core::fiducial::sample_symmetric_state;
use daem_core::ising::{ground_state_vector, ising_propagator, IsingSpec};
use daem_core::linalg::CVector;
use daem_core::noise::NoisePlacement;
use daem_core::pauli::{nearest_neighbour_two_local, Pauli, PauliObservable};
use daem_core::process::{
    build_qaoa, build_swap_test, build_vqe, plus_state_vector, train_qaoa, train_vqe, Graph,
};
use daem_core::rng::{self, SimRng};
use daem_core::state::{
    haar_random_pure, haar_random_vector, random_mixed, sample_pm1_expectation, DensityMatrix,
};
use daem_nn::{
    mitigate, train, AdamConfig, Architecture, Checkpoint, ConvSpec, Example, Head, MlpSpec,
    Params, TrainConfig,
};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{Experiment, ExperimentConfig, InputEnsemble, NoiseChannel};
use crate::report::{self, Report};

/// Shape of the statistic an experiment reads out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatKind {
    Scalar,
    Distribution,
    /// Square Wigner grid of the given side length.
    Grid(usize),
}

pub fn stat_kind(cfg: &ExperimentConfig) -> StatKind {
    match cfg.experiment {
        Experiment::Qaoa => StatKind::Distribution,
        Experiment::CvKerr => StatKind::Grid(cfg.cv().grid_points),
        _ => StatKind::Scalar,
    }
}

/// Independent seed for one named stage of a run.
pub fn sub_seed(seed: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(label.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

/// Baseline inputs that cannot be recomputed from the JSON-lines datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineData {
    pub config_hash: String,
    pub levels: Vec<f64>,
    /// Level at which the Clifford training circuits were executed.
    pub cdr_level: Option<f64>,
    /// CDR estimate for each error-mitigation sample, indexed by sample id.
    pub cdr: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Datasets {
    pub levels: Vec<f64>,
    pub na_train: Vec<DatasetSample>,
    pub na_val: Vec<DatasetSample>,
    pub em_test: Vec<DatasetSample>,
    pub baselines: BaselineData,
}

fn default_placement(exp: Experiment) -> NoisePlacement {
    match exp {
        Experiment::SwapTest => NoisePlacement::BeforeEachControlledSwap,
        Experiment::Qaoa => NoisePlacement::PerLayer,
        Experiment::SpinDynamics => NoisePlacement::AfterFullProcess,
        _ => NoisePlacement::AfterEachGate,
    }
}

fn noise_model(cfg: &ExperimentConfig) -> Result<NoiseModel> {
    let noise = &cfg.noise;
    if let Some(kind) = noise.channel.markov_kind() {
        let placement = noise
            .placement
            .unwrap_or_else(|| default_placement(cfg.experiment));
        return Ok(NoiseModel::Markov { kind, placement });
    }
    if noise.channel == NoiseChannel::SpinBoson {
        let bath = noise.bath.clone().unwrap_or_default();
        let modes = discretize_bath(&bath.spectral, bath.modes, bath.omega_max, bath.n_max)?;
        return Ok(NoiseModel::Bath(NonMarkovianModel::new(
            bath.spectral,
            modes,
        )?));
    }
    bail!("channel {:?} does not act on qubit circuits", noise.channel)
}

struct CircuitRun<'a> {
    cfg: &'a ExperimentConfig,
    noise: &'a NoiseModel,
    grid: &'a NoiseLevelGrid,
    measurement: &'a Measurement,
}

impl CircuitRun<'_> {
    fn samples(
        &self,
        phase: Phase,
        target: &Circuit,
        inputs: &[DensityMatrix],
        label: &str,
    ) -> Result<Vec<DatasetSample>> {
        Ok(circuit_dataset(&CircuitDatasetSpec {
            phase,
            target,
            inputs,
            measurement: self.measurement,
            noise: self.noise,
            levels: self.grid,
            shots: self.cfg.dataset.shots,
            seed: sub_seed(self.cfg.seed, label),
        })?)
    }

    /// One linear model per observable from Clifford variants of `circuit`
    /// run on `input` at the smallest noise level.
    fn cdr_models(
        &self,
        circuit: &Circuit,
        input: &DensityMatrix,
        observables: &[PauliObservable],
        label: &str,
    ) -> Result<Vec<CdrModel>> {
        let group = clifford_group();
        let mut rng = rng::seeded(sub_seed(self.cfg.seed, label));
        let variants: Vec<Circuit> = (0..self.cfg.baselines.cdr_circuits)
            .map(|_| clifford_variant(circuit, &group, &mut rng))
            .collect();
        let shots = self.cfg.dataset.shots;
        let shot_seed = sub_seed(self.cfg.seed, &format!("{label}-shots"));
        let level = self.grid.min();
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = variants
            .par_iter()
            .enumerate()
            .map(|(i, v)| {
                let mut rng = rng::stream(shot_seed, i as u64);
                let noisy_state = self.noise.prepare(v, level)?.run(input)?;
                let exact_state = v.run(input)?;
                let mut noisy = Vec::with_capacity(observables.len());
                let mut exact = Vec::with_capacity(observables.len());
                for o in observables {
                    noisy.push(sample_pm1_expectation(
                        o.expectation(&noisy_state)?,
                        shots,
                        &mut rng,
                    ));
                    exact.push(o.expectation(&exact_state)?);
                }
                Ok((noisy, exact))
            })
            .collect::<Result<_>>()?;
        (0..observables.len())
            .map(|k| {
                let x: Vec<f64> = pairs.iter().map(|p| p.0[k]).collect();
                let y: Vec<f64> = pairs.iter().map(|p| p.1[k]).collect();
                Ok(cdr_fit(&x, &y)?)
            })
            .collect()
    }
}

fn random_inputs(
    ensemble: InputEnsemble,
    n: usize,
    count: usize,
    rng: &mut SimRng,
) -> Vec<DensityMatrix> {
    (0..count)
        .map(|_| match ensemble {
            InputEnsemble::Mixed => random_mixed(n, rng),
            InputEnsemble::Pure => haar_random_pure(n, rng),
        })
        .collect()
}

fn vqe_datasets(cfg: &ExperimentConfig, grid: &NoiseLevelGrid) -> Result<Datasets> {
    let v = cfg.vqe();
    let noise = noise_model(cfg)?;
    let observables = nearest_neighbour_two_local(v.qubits);
    let measurement = Measurement::Expectations(observables.clone());
    let run = CircuitRun {
        cfg,
        noise: &noise,
        grid,
        measurement: &measurement,
    };
    let circuits: Vec<Circuit> = v
        .fields
        .par_iter()
        .enumerate()
        .map(|(i, &g)| {
            let spec = IsingSpec::new(v.qubits, v.coupling, g)?;
            let theta = train_vqe(
                &spec,
                v.layers,
                sub_seed(cfg.seed, &format!("vqe-angles-{i}")),
                &v.training,
            )?;
            Ok(build_vqe(v.qubits, v.layers, &theta, g)?)
        })
        .collect::<Result<_>>()?;
    let zero = [DensityMatrix::zero_state(v.qubits)];
    let (mut na_train, mut na_val, mut em_test, mut cdr) =
        (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (i, circuit) in circuits.iter().enumerate() {
        let mut rng = rng::seeded(sub_seed(cfg.seed, &format!("vqe-inputs-{i}")));
        let train_in = random_inputs(v.inputs, v.qubits, cfg.dataset.train, &mut rng);
        let val_in = random_inputs(v.inputs, v.qubits, cfg.dataset.val, &mut rng);
        na_train.extend(run.samples(
            Phase::NoiseAwareness,
            circuit,
            &train_in,
            &format!("na-train-{i}"),
        )?);
        na_val.extend(run.samples(
            Phase::NoiseAwareness,
            circuit,
            &val_in,
            &format!("na-val-{i}"),
        )?);
        let em = run.samples(Phase::ErrorMitigation, circuit, &zero, &format!("em-{i}"))?;
        if cfg.baselines.cdr {
            let models = run.cdr_models(circuit, &zero[0], &observables, &format!("cdr-{i}"))?;
            cdr.extend(em.iter().zip(&models).map(|(s, m)| m.apply(s.p[0][0])));
        }
        em_test.extend(em);
    }
    Ok(assemble(
        cfg,
        grid,
        na_train,
        na_val,
        em_test,
        cfg.baselines.cdr.then_some(cdr),
    ))
}

fn swap_inputs(
    n: usize,
    count: usize,
    random_ancilla: bool,
    rng: &mut SimRng,
) -> Vec<DensityMatrix> {
    (0..count)
        .map(|_| {
            let ancilla = if random_ancilla {
                random_mixed(1, rng)
            } else {
                DensityMatrix::zero_state(1)
            };
            let psi = haar_random_vector(1 << n, rng);
            let phi = haar_random_vector(1 << n, rng);
            daem_core::process::swap_test_input(&ancilla, &psi, &phi)
        })
        .collect()
}

fn swap_test_datasets(cfg: &ExperimentConfig, grid: &NoiseLevelGrid) -> Result<Datasets> {
    let n = cfg.swap_test().register_qubits;
    let circuit = build_swap_test(n, 0.0)?;
    let noise = noise_model(cfg)?;
    let observables = vec![PauliObservable::single(2 * n + 1, 0, Pauli::Z)?];
    let measurement = Measurement::Expectations(observables.clone());
    let run = CircuitRun {
        cfg,
        noise: &noise,
        grid,
        measurement: &measurement,
    };
    let mut rng = rng::seeded(sub_seed(cfg.seed, "swap-inputs"));
    let train_in = swap_inputs(n, cfg.dataset.train, true, &mut rng);
    let val_in = swap_inputs(n, cfg.dataset.val, true, &mut rng);
    let test_in = swap_inputs(n, cfg.dataset.test, false, &mut rng);
    let na_train = run.samples(Phase::NoiseAwareness, &circuit, &train_in, "na-train")?;
    let na_val = run.samples(Phase::NoiseAwareness, &circuit, &val_in, "na-val")?;
    let em_test = run.samples(Phase::ErrorMitigation, &circuit, &test_in, "em")?;
    let cdr = if cfg.baselines.cdr {
        let mut out = Vec::with_capacity(em_test.len());
        for (input, s) in test_in.iter().zip(&em_test) {
            // same Clifford circuits for every input; the fit is per input
            let models = run.cdr_models(&circuit, input, &observables, "cdr")?;
            out.push(models[0].apply(s.p[0][0]));
        }
        Some(out)
    } else {
        None
    };
    Ok(assemble(cfg, grid, na_train, na_val, em_test, cdr))
}

pub fn qaoa_graph(cfg: &ExperimentConfig) -> Result<Graph> {
    let q = cfg.qaoa();
    if let Some(path) = &q.edge_file {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading edge list {}", path.display()))?;
        return Ok(Graph::parse_edge_list(&text)?);
    }
    if let Some(edges) = &q.edges {
        let n = edges.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(0);
        return Ok(Graph::new(n, edges.clone())?);
    }
    Ok(Graph::ring(q.vertices))
}

fn qaoa_datasets(cfg: &ExperimentConfig, grid: &NoiseLevelGrid) -> Result<Datasets> {
    let q = cfg.qaoa();
    let graph = qaoa_graph(cfg)?;
    let n = graph.n_vertices;
    let (gammas, betas) = train_qaoa(
        &graph,
        q.depth,
        sub_seed(cfg.seed, "qaoa-angles"),
        &q.training,
    )?;
    let circuit = build_qaoa(&graph, &gammas, &betas, q.depth as f64)?;
    let noise = noise_model(cfg)?;
    let measurement = Measurement::Distribution;
    let run = CircuitRun {
        cfg,
        noise: &noise,
        grid,
        measurement: &measurement,
    };
    let mut rng = rng::seeded(sub_seed(cfg.seed, "qaoa-inputs"));
    let mut draw = |count: usize| -> Result<Vec<DensityMatrix>> {
        (0..count)
            .map(|_| Ok(sample_symmetric_state(n, &mut rng)?))
            .collect()
    };
    let train_in = draw(cfg.dataset.train)?;
    let val_in = draw(cfg.dataset.val)?;
    let plus = [DensityMatrix::from_pure(&plus_state_vector(n))];
    let na_train = run.samples(Phase::NoiseAwareness, &circuit, &train_in, "na-train")?;
    let na_val = run.samples(Phase::NoiseAwareness, &circuit, &val_in, "na-val")?;
    let em_test = run.samples(Phase::ErrorMitigation, &circuit, &plus, "em")?;
    Ok(assemble(cfg, grid, na_train, na_val, em_test, None))
}

fn spin_datasets(cfg: &ExperimentConfig, grid: &NoiseLevelGrid) -> Result<Datasets> {
    let s = cfg.spin();
    let n = s.qubits;
    let kind = cfg
        .noise
        .channel
        .markov_kind()
        .context("spin dynamics needs a Markovian channel")?;
    let (lo, hi) = s.input_couplings;
    if !(hi >= lo) {
        bail!("input coupling range ({lo}, {hi}) is empty");
    }
    let mut rng = rng::seeded(sub_seed(cfg.seed, "spin-inputs"));
    let mut couplings = |count: usize| -> Vec<f64> {
        (0..count)
            .map(|_| lo + (hi - lo) * rng.random::<f64>())
            .collect()
    };
    let sets = [
        couplings(cfg.dataset.train),
        couplings(cfg.dataset.val),
        couplings(cfg.dataset.test),
    ];
    let ground = |js: &[f64]| -> Result<Vec<(f64, CVector)>> {
        js.par_iter()
            .map(|&j| {
                Ok((
                    j,
                    ground_state_vector(&IsingSpec::new(n, j, s.input_field)?)?.0,
                ))
            })
            .collect()
    };
    let propagator = ising_propagator(&IsingSpec::new(n, s.coupling, s.field)?, s.time)?;
    let observables = nearest_neighbour_two_local(n);
    let build =
        |phase: Phase, inputs: &[(f64, CVector)], label: &str| -> Result<Vec<DatasetSample>> {
            Ok(spin_dataset(&SpinDatasetSpec {
                phase,
                inputs,
                n_qubits: n,
                propagator: &propagator,
                observables: &observables,
                kind,
                levels: grid,
                shots: cfg.dataset.shots,
                seed: sub_seed(cfg.seed, label),
            })?)
        };
    let na_train = build(Phase::NoiseAwareness, &ground(&sets[0])?, "na-train")?;
    let na_val = build(Phase::NoiseAwareness, &ground(&sets[1])?, "na-val")?;
    let em_test = build(Phase::ErrorMitigation, &ground(&sets[2])?, "em")?;
    Ok(assemble(cfg, grid, na_train, na_val, em_test, None))
}

pub fn kerr_setup(cfg: &ExperimentConfig) -> KerrSetup {
    let c = cfg.cv();
    KerrSetup {
        alpha: c.alpha,
        n_trunc: c.truncation,
        dt: c.dt,
        grid: GridSpec {
            min: -c.grid_extent,
            max: c.grid_extent,
            points: c.grid_points,
        },
    }
}

pub fn cv_eval_times(cfg: &ExperimentConfig) -> Vec<f64> {
    let c = cfg.cv();
    time_grid(c.eval_step, c.eval_count + 1)[1..].to_vec()
}

fn cv_datasets(cfg: &ExperimentConfig, grid: &NoiseLevelGrid) -> Result<Datasets> {
    let c = cfg.cv();
    let setup = kerr_setup(cfg);
    // inputs are recorded along the noisy evolution at the smallest loss rate
    let pool = cv_noise_awareness(
        &setup,
        grid.min(),
        &time_grid(c.record_step, c.record_count),
        &time_grid(c.fiducial_step, c.fiducial_count),
        grid,
    )?;
    let need = cfg.dataset.train + cfg.dataset.val;
    if need > pool.len() {
        bail!(
            "cv-kerr yields {} noise-awareness samples but train + val = {need}",
            pool.len()
        );
    }
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.shuffle(&mut rng::seeded(sub_seed(cfg.seed, "cv-split")));
    let pick = |idx: &[usize]| number(idx.iter().map(|&i| pool[i].clone()).collect());
    let na_train = pick(&order[..cfg.dataset.train]);
    let na_val = pick(&order[cfg.dataset.train..need]);
    let em_test = cv_error_mitigation(&setup, &cv_eval_times(cfg), grid)?;
    Ok(assemble(cfg, grid, na_train, na_val, em_test, None))
}

fn assemble(
    cfg: &ExperimentConfig,
    grid: &NoiseLevelGrid,
    na_train: Vec<DatasetSample>,
    na_val: Vec<DatasetSample>,
    em_test: Vec<DatasetSample>,
    cdr: Option<Vec<f64>>,
) -> Datasets {
    Datasets {
        levels: grid.levels.clone(),
        na_train: number(na_train),
        na_val: number(na_val),
        em_test: number(em_test),
        baselines: BaselineData {
            config_hash: cfg.hash(),
            levels: grid.levels.clone(),
            cdr_level: cdr.as_ref().map(|_| grid.min()),
            cdr,
        },
    }
}

/// Both dataset phases plus the CDR training data.
pub fn build_datasets(cfg: &ExperimentConfig) -> Result<Datasets> {
    cfg.validate()?;
    let grid = NoiseLevelGrid::new(cfg.levels())?;
    match cfg.experiment {
        Experiment::Vqe => vqe_datasets(cfg, &grid),
        Experiment::SwapTest => swap_test_datasets(cfg, &grid),
        Experiment::Qaoa => qaoa_datasets(cfg, &grid),
        Experiment::SpinDynamics => spin_datasets(cfg, &grid),
        Experiment::CvKerr => cv_datasets(cfg, &grid),
    }
}

/// Wigner values are multiplied by π so they fill the tanh range.
fn value_scale(kind: StatKind) -> f64 {
    match kind {
        StatKind::Grid(_) => PI,
        _ => 1.0,
    }
}

pub fn to_examples(kind: StatKind, samples: &[DatasetSample]) -> Vec<Example> {
    let scale = value_scale(kind);
    samples
        .iter()
        .map(|s| {
            // noisy distributions enter at mean 1; labels stay probabilities for the softmax head
            let input_scale = match kind {
                StatKind::Distribution => s.p0.len() as f64,
                _ => scale,
            };
            Example {
                g: s.g,
                observable: s.observable.clone(),
                p: s.p.iter().flatten().map(|v| v * input_scale).collect(),
                label: s.p0.iter().map(|v| v * scale).collect(),
            }
        })
        .collect()
}

pub fn architecture(cfg: &ExperimentConfig, data: &Datasets) -> Result<Architecture> {
    let first = data
        .na_train
        .first()
        .context("noise-awareness training set is empty")?;
    let k = first.p.len();
    let width = first.p0.len();
    let m = &cfg.model;
    Ok(match stat_kind(cfg) {
        StatKind::Scalar => Architecture::Mlp(MlpSpec {
            observable_dim: first.observable.len(),
            p_dim: k,
            embed: m.embed,
            hidden: m.hidden.clone(),
            out_dim: 1,
            head: Head::ScalarTanh,
        }),
        StatKind::Distribution => Architecture::Mlp(MlpSpec {
            observable_dim: first.observable.len(),
            p_dim: k * width,
            embed: m.embed,
            hidden: m.hidden.clone(),
            out_dim: width,
            head: Head::Softmax,
        }),
        StatKind::Grid(size) => Architecture::Conv(ConvSpec {
            in_grids: k,
            size,
            widths: m.widths,
        }),
    })
}

pub fn train_config(cfg: &ExperimentConfig) -> TrainConfig {
    let default_batch = if matches!(stat_kind(cfg), StatKind::Grid(_)) {
        32
    } else {
        64
    };
    TrainConfig {
        epochs: cfg.train.epochs,
        batch_size: cfg.train.batch_size.unwrap_or(default_batch),
        adam: AdamConfig {
            learning_rate: cfg.train.learning_rate,
            ..AdamConfig::default()
        },
        seed: sub_seed(cfg.seed, "train"),
    }
}

/// Noise-awareness training; the returned checkpoint records the
/// experiment hash and the loss history.
pub fn train_model(cfg: &ExperimentConfig, data: &Datasets) -> Result<Checkpoint> {
    let arch = architecture(cfg, data)?;
    let model = arch.build()?;
    let tc = train_config(cfg);
    let kind = stat_kind(cfg);
    let init = Params::init(model.layout(), sub_seed(cfg.seed, "init"));
    let out = train(
        model.as_ref(),
        &to_examples(kind, &data.na_train),
        &to_examples(kind, &data.na_val),
        &tc,
        init,
    )?;
    Ok(
        Checkpoint::new(arch, tc, out.params, out.adam).with_experiment(
            &cfg.hash(),
            out.history,
            out.best_epoch,
        ),
    )
}

/// Error-mitigation phase and baselines, assembled into a report.
pub fn evaluate(cfg: &ExperimentConfig, data: &Datasets, ck: &Checkpoint) -> Result<Report> {
    let hash = cfg.hash();
    ck.require_experiment(&hash)?;
    if data.baselines.config_hash != hash {
        bail!(
            "dataset was generated for configuration {}, not {hash}",
            data.baselines.config_hash
        );
    }
    let kind = stat_kind(cfg);
    let model = ck.architecture.build()?;
    let scale = value_scale(kind);
    let daem: Vec<Vec<f64>> = mitigate(
        model.as_ref(),
        &ck.params.values,
        &to_examples(kind, &data.em_test),
    )
    .into_iter()
    .map(|p| p.into_iter().map(|v| v / scale).collect())
    .collect();
    let zne = if cfg.baselines.zne {
        let rows = data
            .em_test
            .iter()
            .map(|s| {
                let v = zne_extrapolate_rows(&data.levels, &s.p)?;
                Ok(if kind == StatKind::Distribution {
                    crate::metrics::clip_to_distribution(&v)
                } else {
                    v
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Some(rows)
    } else {
        None
    };
    report::assemble(cfg, data, ck, &daem, zne.as_deref())
}

/// Locations of the artifacts of one run.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }
    pub fn dataset_dir(&self) -> PathBuf {
        self.root.join("dataset")
    }
    pub fn dataset(&self, name: &str) -> PathBuf {
        self.dataset_dir().join(format!("{name}.jsonl"))
    }
    pub fn baselines(&self) -> PathBuf {
        self.dataset_dir().join("baselines.json")
    }
    pub fn checkpoint(&self) -> PathBuf {
        self.root.join("model.json")
    }
    pub fn config(&self) -> PathBuf {
        self.root.join("config.json")
    }
}

const SPLITS: [&str; 3] = ["na_train", "na_val", "em_test"];

pub fn write_datasets(layout: &Layout, cfg: &ExperimentConfig, data: &Datasets) -> Result<()> {
    std::fs::create_dir_all(layout.dataset_dir())?;
    std::fs::write(layout.config(), serde_json::to_vec_pretty(cfg)?)?;
    let sets = [&data.na_train, &data.na_val, &data.em_test];
    for (name, samples) in SPLITS.iter().zip(sets) {
        let phase = if *name == "em_test" {
            Phase::ErrorMitigation
        } else {
            Phase::NoiseAwareness
        };
        let meta = DatasetMeta {
            experiment: cfg.experiment.name().to_string(),
            phase,
            seed: cfg.seed,
            config_hash: cfg.hash(),
        };
        let mut w = BufWriter::new(File::create(layout.dataset(name))?);
        write_jsonl(&mut w, samples, &meta)?;
        w.flush()?;
    }
    std::fs::write(
        layout.baselines(),
        serde_json::to_vec_pretty(&data.baselines)?,
    )?;
    Ok(())
}

/// Reads datasets written by [`write_datasets`]; any hash mismatch is fatal.
pub fn read_datasets(layout: &Layout, cfg: &ExperimentConfig) -> Result<Datasets> {
    let hash = cfg.hash();
    let mut sets = Vec::new();
    for name in SPLITS {
        let path = layout.dataset(name);
        let file = File::open(&path).with_context(|| format!("opening {}", path.display()))?;
        let (samples, meta) = read_jsonl(BufReader::new(file))?;
        if let Some(meta) = meta {
            if meta.config_hash != hash {
                bail!(
                    "{} was generated for configuration {}, not {hash}",
                    path.display(),
                    meta.config_hash
                );
            }
        }
        sets.push(samples);
    }
    let baselines: BaselineData = serde_json::from_slice(&std::fs::read(layout.baselines())?)?;
    if baselines.config_hash != hash {
        bail!(
            "baseline data was generated for configuration {}, not {hash}",
            baselines.config_hash
        );
    }
    let em_test = sets.pop().expect("three splits");
    let na_val = sets.pop().expect("three splits");
    let na_train = sets.pop().expect("three splits");
    Ok(Datasets {
        levels: baselines.levels.clone(),
        na_train,
        na_val,
        em_test,
        baselines,
    })
}

/// Full run: datasets, training, evaluation; artifacts go to `out` if given.
pub fn run(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Report> {
    let data = build_datasets(cfg)?;
    let layout = out.map(Layout::new);
    if let Some(l) = &layout {
        write_datasets(l, cfg, &data)?;
    }
    let ck = train_model(cfg, &data)?;
    if let Some(l) = &layout {
        ck.save(&l.checkpoint())?;
    }
    let report = evaluate(cfg, &data, &ck)?;
    if let Some(l) = &layout {
        report::write_all(&l.root, &report)?;
    }
    Ok(report)
}
