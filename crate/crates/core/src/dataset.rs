//! Dataset construction for both phases: noisy statistics across a grid of
//! noise levels, paired with labels from the fiducial process (noise
//! awareness) or from ideal simulation of the target (error mitigation,
//! evaluation only).

use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bath::{apply_channels, LocalChannel, NonMarkovianModel};
use crate::circuit::Circuit;
use crate::error::{Result, SimError};
use crate::fiducial::{build_fiducial, FiducialProcess};
use crate::linalg::{self, CMatrix, CVector};
use crate::noise::{self, ChannelKind, MarkovNoise, NoisePlacement};
use crate::pauli::PauliObservable;
use crate::rng::{self, SimRng};
use crate::state::{sample_frequencies, sample_pm1_expectation, DensityMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    NoiseAwareness,
    ErrorMitigation,
}

/// One training or evaluation record. Noise levels are implied by the row
/// order of `p` only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSample {
    pub id: usize,
    pub g: f64,
    /// Observable encoding fed to the model.
    pub observable: Vec<f64>,
    /// One row per noise level, in grid order.
    #[serde(rename = "P")]
    pub p: Vec<Vec<f64>>,
    pub p0: Vec<f64>,
}

/// Strictly increasing, non-negative noise levels (rates or gate times).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseLevelGrid {
    pub levels: Vec<f64>,
}

impl NoiseLevelGrid {
    pub fn new(levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(SimError::InvalidArgument(
                "noise level grid is empty".into(),
            ));
        }
        if levels.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(SimError::InvalidArgument(
                "noise levels must be finite and non-negative".into(),
            ));
        }
        if levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SimError::InvalidArgument(
                "noise levels must be strictly increasing".into(),
            ));
        }
        Ok(Self { levels })
    }

    /// `start, start + step, …` up to `stop` inclusive (with rounding slack).
    pub fn arange(start: f64, stop: f64, step: f64) -> Result<Self> {
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        Self::new(
            (0..count)
                .map(|k| round12(start + k as f64 * step))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.levels[0]
    }
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

/// Observable encoding: local matrix entries (real parts then imaginary
/// parts, row-major) followed by the support positions scaled to `[0, 1]`.
pub fn encode_observable(local: &CMatrix, support: &[usize], n_qubits: usize) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(2 * local.len() + support.len());
    for i in 0..local.nrows() {
        for j in 0..local.ncols() {
            out.push(local[(i, j)].re);
        }
    }
    for i in 0..local.nrows() {
        for j in 0..local.ncols() {
            out.push(local[(i, j)].im);
        }
    }
    let denom = n_qubits.saturating_sub(1).max(1) as f64;
    out.extend(support.iter().map(|&q| q as f64 / denom));
    out
}

pub fn encode_pauli(obs: &PauliObservable) -> Vec<f64> {
    encode_observable(&obs.local_matrix(), &obs.support(), obs.n_qubits)
}

/// How noise enters a qubit process.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseModel {
    Markov {
        kind: ChannelKind,
        placement: NoisePlacement,
    },
    /// Gate-dependent spin-boson noise; levels are gate times.
    Bath(NonMarkovianModel),
}

/// A circuit with its noise fixed at one level, reusable across inputs.
#[derive(Debug, Clone)]
pub enum PreparedCircuit {
    Markov {
        circuit: Circuit,
        noise: MarkovNoise,
        placement: NoisePlacement,
    },
    Channels {
        n_qubits: usize,
        channels: Vec<Option<LocalChannel>>,
    },
}

impl NoiseModel {
    pub fn prepare(&self, circuit: &Circuit, level: f64) -> Result<PreparedCircuit> {
        match self {
            NoiseModel::Markov { kind, placement } => {
                noise::check_placement(circuit, *placement)?;
                Ok(PreparedCircuit::Markov {
                    circuit: circuit.clone(),
                    noise: MarkovNoise::new(*kind, level)?,
                    placement: *placement,
                })
            }
            NoiseModel::Bath(model) => Ok(PreparedCircuit::Channels {
                n_qubits: circuit.n_qubits,
                channels: model.circuit_channels(circuit, level)?,
            }),
        }
    }
}

impl PreparedCircuit {
    pub fn run(&self, input: &DensityMatrix) -> Result<DensityMatrix> {
        match self {
            PreparedCircuit::Markov {
                circuit,
                noise,
                placement,
            } => noise::run_noisy_circuit(circuit, input, noise, *placement),
            PreparedCircuit::Channels { n_qubits, channels } => {
                if input.dim() != 1 << n_qubits {
                    return Err(SimError::DimensionMismatch {
                        expected: 1 << n_qubits,
                        got: input.dim(),
                    });
                }
                Ok(apply_channels(channels, input, *n_qubits))
            }
        }
    }
}

/// What is read out of the output state.
#[derive(Debug, Clone, PartialEq)]
pub enum Measurement {
    /// One sample per observable, scalar statistic.
    Expectations(Vec<PauliObservable>),
    /// One sample per input, full computational-basis distribution.
    Distribution,
}

/// Inputs to [`circuit_dataset`].
#[derive(Debug, Clone)]
pub struct CircuitDatasetSpec<'a> {
    pub phase: Phase,
    /// Target circuit in the basis-gate set; its tag becomes `g`.
    pub target: &'a Circuit,
    pub inputs: &'a [DensityMatrix],
    pub measurement: &'a Measurement,
    pub noise: &'a NoiseModel,
    pub levels: &'a NoiseLevelGrid,
    /// `0` for exact statistics.
    pub shots: usize,
    pub seed: u64,
}

fn measure(
    state: &DensityMatrix,
    measurement: &Measurement,
    shots: usize,
    rng: &mut SimRng,
) -> Result<Vec<Vec<f64>>> {
    match measurement {
        Measurement::Expectations(obs) => obs
            .iter()
            .map(|o| {
                Ok(vec![sample_pm1_expectation(
                    o.expectation(state)?,
                    shots,
                    rng,
                )])
            })
            .collect(),
        Measurement::Distribution => Ok(vec![state.sample_distribution(shots, rng)]),
    }
}

/// Exact label statistics of a noise-awareness sample: the input measured
/// with the conjugated observables `U_eff^† M U_eff`.
pub fn fiducial_labels(
    fid: &FiducialProcess,
    input: &DensityMatrix,
    measurement: &Measurement,
) -> Result<Vec<Vec<f64>>> {
    match measurement {
        Measurement::Expectations(obs) => obs
            .iter()
            .map(|o| {
                let conj = fid.conjugate(&o.matrix())?;
                Ok(vec![linalg::trace_product(&conj, input.matrix()).re])
            })
            .collect(),
        Measurement::Distribution => Ok(vec![fid.ideal_output(input).populations()]),
    }
}

/// Algorithm-1 dataset for a circuit process. Samples are ordered by input
/// index, then observable index; shots use one RNG stream per input.
pub fn circuit_dataset(spec: &CircuitDatasetSpec<'_>) -> Result<Vec<DatasetSample>> {
    spec.target.validate()?;
    let fid = match spec.phase {
        Phase::NoiseAwareness => Some(build_fiducial(spec.target)?),
        Phase::ErrorMitigation => None,
    };
    let process = fid.as_ref().map_or(spec.target, |f| &f.circuit);
    let prepared: Vec<PreparedCircuit> = spec
        .levels
        .levels
        .iter()
        .map(|&l| spec.noise.prepare(process, l))
        .collect::<Result<_>>()?;
    let encodings: Vec<Vec<f64>> = match spec.measurement {
        Measurement::Expectations(obs) => obs.iter().map(encode_pauli).collect(),
        Measurement::Distribution => vec![vec![1.0]],
    };
    let per_input: Vec<Vec<DatasetSample>> = spec
        .inputs
        .par_iter()
        .enumerate()
        .map(|(idx, input)| {
            let mut rng = rng::stream(spec.seed, idx as u64);
            // rows[level][stat]
            let rows: Vec<Vec<Vec<f64>>> = prepared
                .iter()
                .map(|p| measure(&p.run(input)?, spec.measurement, spec.shots, &mut rng))
                .collect::<Result<_>>()?;
            let labels = match &fid {
                Some(f) => {
                    let exact = fiducial_labels(f, input, spec.measurement)?;
                    resample(exact, spec.measurement, spec.shots, &mut rng)
                }
                None => measure(
                    &spec.target.run(input)?,
                    spec.measurement,
                    spec.shots,
                    &mut rng,
                )?,
            };
            Ok(encodings
                .iter()
                .enumerate()
                .map(|(k, enc)| DatasetSample {
                    id: 0,
                    g: spec.target.tag,
                    observable: enc.clone(),
                    p: rows.iter().map(|r| r[k].clone()).collect(),
                    p0: labels[k].clone(),
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(number(per_input.into_iter().flatten().collect()))
}

/// Applies shot sampling to exact label statistics.
fn resample(
    exact: Vec<Vec<f64>>,
    measurement: &Measurement,
    shots: usize,
    rng: &mut SimRng,
) -> Vec<Vec<f64>> {
    if shots == 0 {
        return exact;
    }
    match measurement {
        Measurement::Expectations(_) => exact
            .into_iter()
            .map(|v| vec![sample_pm1_expectation(v[0], shots, rng)])
            .collect(),
        Measurement::Distribution => exact
            .into_iter()
            .map(|p| sample_frequencies(&p, shots, rng))
            .collect(),
    }
}

/// Assigns sequential ids.
pub fn number(mut samples: Vec<DatasetSample>) -> Vec<DatasetSample> {
    for (i, s) in samples.iter_mut().enumerate() {
        s.id = i;
    }
    samples
}

/// Inputs to [`spin_dataset`]: noise acts once after `exp(-iHt)` (or after
/// the identity in the fiducial process), so every statistic is a local
/// expectation of a noise-conjugated observable.
#[derive(Debug, Clone)]
pub struct SpinDatasetSpec<'a> {
    pub phase: Phase,
    /// `(g, |ψ⟩)` pairs.
    pub inputs: &'a [(f64, CVector)],
    pub n_qubits: usize,
    /// Propagator of the target evolution; unused in the noise-awareness phase.
    pub propagator: &'a CMatrix,
    pub observables: &'a [PauliObservable],
    pub kind: ChannelKind,
    pub levels: &'a NoiseLevelGrid,
    pub shots: usize,
    pub seed: u64,
}

pub fn spin_dataset(spec: &SpinDatasetSpec<'_>) -> Result<Vec<DatasetSample>> {
    let n = spec.n_qubits;
    // conjugated local observables per level
    let conjugated: Vec<Vec<CMatrix>> = spec
        .levels
        .levels
        .iter()
        .map(|&l| {
            let noise = MarkovNoise::new(spec.kind, l)?;
            Ok(spec
                .observables
                .iter()
                .map(|o| {
                    noise::conjugate_local_observable(&o.local_matrix(), o.terms.len(), &noise, n)
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let per_input: Vec<Vec<DatasetSample>> = spec
        .inputs
        .par_iter()
        .enumerate()
        .map(|(idx, (g, psi))| {
            if psi.len() != 1 << n {
                return Err(SimError::DimensionMismatch {
                    expected: 1 << n,
                    got: psi.len(),
                });
            }
            let mut rng = rng::stream(spec.seed, idx as u64);
            let out = match spec.phase {
                Phase::NoiseAwareness => psi.clone(),
                Phase::ErrorMitigation => spec.propagator * psi,
            };
            let reduced: Vec<CMatrix> = spec
                .observables
                .iter()
                .map(|o| linalg::partial_trace_pure(&out, &o.support(), n))
                .collect();
            Ok(spec
                .observables
                .iter()
                .enumerate()
                .map(|(k, o)| {
                    let p = conjugated
                        .iter()
                        .map(|level| {
                            let exact = linalg::trace_product(&level[k], &reduced[k]).re;
                            vec![sample_pm1_expectation(exact, spec.shots, &mut rng)]
                        })
                        .collect();
                    let exact = o.expectation_vector(&out);
                    DatasetSample {
                        id: 0,
                        g: *g,
                        observable: encode_pauli(o),
                        p,
                        p0: vec![sample_pm1_expectation(exact, spec.shots, &mut rng)],
                    }
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(number(per_input.into_iter().flatten().collect()))
}

/// Metadata written next to every JSON-lines record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub experiment: String,
    pub phase: Phase,
    pub seed: u64,
    /// Hash of the configuration that produced the dataset.
    #[serde(default)]
    pub config_hash: String,
}

#[derive(Serialize, Deserialize)]
struct Record<'a> {
    #[serde(flatten)]
    sample: std::borrow::Cow<'a, DatasetSample>,
    meta: std::borrow::Cow<'a, DatasetMeta>,
}

/// Writes one JSON object per line.
pub fn write_jsonl<W: Write>(
    mut w: W,
    samples: &[DatasetSample],
    meta: &DatasetMeta,
) -> std::io::Result<()> {
    for s in samples {
        let rec = Record {
            sample: std::borrow::Cow::Borrowed(s),
            meta: std::borrow::Cow::Borrowed(meta),
        };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead>(r: R) -> std::io::Result<(Vec<DatasetSample>, Option<DatasetMeta>)> {
    let mut samples = Vec::new();
    let mut meta = None;
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record<'static> = serde_json::from_str(&line).map_err(std::io::Error::other)?;
        samples.push(rec.sample.into_owned());
        meta = Some(rec.meta.into_owned());
    }
    Ok((samples, meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(NoiseLevelGrid::new(vec![]).is_err());
        assert!(NoiseLevelGrid::new(vec![0.1, 0.1]).is_err());
        assert!(NoiseLevelGrid::new(vec![-0.1]).is_err());
        let g = NoiseLevelGrid::arange(0.05, 0.29, 0.02).unwrap();
        assert_eq!(g.len(), 13);
        assert!((g.levels[12] - 0.29).abs() < 1e-12);
    }

    #[test]
    fn observable_encoding_layout() {
        let obs =
            PauliObservable::new(4, vec![(1, crate::Pauli::X), (2, crate::Pauli::Y)]).unwrap();
        let enc = encode_pauli(&obs);
        assert_eq!(enc.len(), 34);
        assert!((enc[32] - 1.0 / 3.0).abs() < 1e-15);
    }
}
