//! Markovian noise: Kraus channels, their placement inside circuits, and
//! the Heisenberg-picture dual used to push noise onto observables.

use serde::{Deserialize, Serialize};

use crate::circuit::{apply_gate_unchecked, Circuit, Gate};
use crate::error::{Result, SimError};
use crate::linalg::{self, c, CMatrix, LocalIndex, ZERO};
use crate::pauli::Pauli;
use crate::state::DensityMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelKind {
    AmplitudeDamping,
    PhaseDamping,
    Depolarizing,
    Custom,
}

impl ChannelKind {
    pub fn name(self) -> &'static str {
        match self {
            ChannelKind::AmplitudeDamping => "amplitude-damping",
            ChannelKind::PhaseDamping => "phase-damping",
            ChannelKind::Depolarizing => "depolarizing",
            ChannelKind::Custom => "custom",
        }
    }

    pub fn check_level(self, level: f64) -> Result<()> {
        let (ok, range) = match self {
            ChannelKind::AmplitudeDamping | ChannelKind::Depolarizing => {
                ((0.0..=1.0).contains(&level), "[0, 1]")
            }
            ChannelKind::PhaseDamping => (level >= 0.0 && level.is_finite(), "[0, inf)"),
            ChannelKind::Custom => (true, "any"),
        };
        if ok {
            Ok(())
        } else {
            Err(SimError::NoiseLevelOutOfRange {
                kind: self.name(),
                level,
                range,
            })
        }
    }
}

/// A channel given by Kraus operators acting on `qubits`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    pub kind: ChannelKind,
    pub level: f64,
    pub qubits: Vec<usize>,
    pub ops: Vec<CMatrix>,
}

impl KrausChannel {
    pub fn amplitude_damping(level: f64, qubit: usize) -> Result<Self> {
        ChannelKind::AmplitudeDamping.check_level(level)?;
        let v0 = CMatrix::from_row_slice(
            2,
            2,
            &[c(1.0, 0.0), ZERO, ZERO, c((1.0 - level).sqrt(), 0.0)],
        );
        let v1 = CMatrix::from_row_slice(2, 2, &[ZERO, c(level.sqrt(), 0.0), ZERO, ZERO]);
        Ok(Self {
            kind: ChannelKind::AmplitudeDamping,
            level,
            qubits: vec![qubit],
            ops: vec![v0, v1],
        })
    }

    /// Off-diagonal elements scale by `e^{-2λ}`.
    pub fn phase_damping(level: f64, qubit: usize) -> Result<Self> {
        ChannelKind::PhaseDamping.check_level(level)?;
        let f = (-2.0 * level).exp();
        let v0 = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), ZERO, ZERO, c(f, 0.0)]);
        let v1 = CMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ZERO, c((1.0 - f * f).sqrt(), 0.0)]);
        Ok(Self {
            kind: ChannelKind::PhaseDamping,
            level,
            qubits: vec![qubit],
            ops: vec![v0, v1],
        })
    }

    /// Explicit Pauli-sum form of the depolarizing channel,
    /// `(1-λ)ρ + λ/(4^N-1) Σ_{P≠I} PρP`. Its size grows as `4^N`; the state
    /// update in [`depolarizing`] avoids the enumeration.
    pub fn depolarizing(level: f64, qubits: Vec<usize>) -> Result<Self> {
        ChannelKind::Depolarizing.check_level(level)?;
        let k = qubits.len();
        if k > 4 {
            return Err(SimError::TooLarge(format!(
                "explicit depolarizing Kraus set on {k} qubits"
            )));
        }
        let n_paulis = 1usize << (2 * k);
        let all = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
        let ops = (0..n_paulis)
            .map(|idx| {
                let factors: Vec<CMatrix> = (0..k)
                    .map(|pos| all[(idx >> (2 * (k - 1 - pos))) & 3].matrix())
                    .collect();
                let weight = if idx == 0 {
                    1.0 - level
                } else {
                    level / (n_paulis - 1) as f64
                };
                linalg::kron_all(factors.iter()) * c(weight.sqrt(), 0.0)
            })
            .collect();
        Ok(Self {
            kind: ChannelKind::Depolarizing,
            level,
            qubits,
            ops,
        })
    }

    pub fn custom(ops: Vec<CMatrix>, qubits: Vec<usize>) -> Result<Self> {
        let dim = 1usize << qubits.len();
        if ops.iter().any(|k| k.nrows() != dim || k.ncols() != dim) {
            return Err(SimError::DimensionMismatch {
                expected: dim,
                got: ops.first().map_or(0, |k| k.nrows()),
            });
        }
        let ch = Self {
            kind: ChannelKind::Custom,
            level: 0.0,
            qubits,
            ops,
        };
        let defect = ch.completeness_defect();
        if defect > 1e-10 {
            return Err(SimError::InvalidArgument(format!(
                "Kraus set is not trace preserving ({defect:.3e})"
            )));
        }
        Ok(ch)
    }

    /// `|| Σ K^†K - I ||_F`.
    pub fn completeness_defect(&self) -> f64 {
        let dim = 1usize << self.qubits.len();
        let sum = self
            .ops
            .iter()
            .fold(CMatrix::zeros(dim, dim), |acc, k| acc + k.adjoint() * k);
        linalg::frobenius(&(sum - linalg::identity(dim)))
    }

    pub fn apply(&self, state: &DensityMatrix) -> Result<DensityMatrix> {
        let n = n_qubits_of(state)?;
        linalg::validate_qubits(n, &self.qubits)?;
        Ok(self.apply_unchecked(state, n))
    }

    fn apply_unchecked(&self, state: &DensityMatrix, n: usize) -> DensityMatrix {
        let index = LocalIndex::new(n, &self.qubits);
        let d = state.dim();
        let out = self.ops.iter().fold(CMatrix::zeros(d, d), |acc, k| {
            acc + linalg::conjugate_local(state.matrix(), k, &index)
        });
        DensityMatrix::from_matrix_unchecked(out)
    }

    /// Heisenberg dual `M̃ = Σ K^† M K` for a dense `n`-qubit observable, so
    /// that `tr(M 𝒩(ρ)) = tr(M̃ ρ)`.
    pub fn conjugate_observable(&self, obs: &CMatrix, n_qubits: usize) -> Result<CMatrix> {
        if obs.nrows() != 1 << n_qubits {
            return Err(SimError::DimensionMismatch {
                expected: 1 << n_qubits,
                got: obs.nrows(),
            });
        }
        linalg::validate_qubits(n_qubits, &self.qubits)?;
        let index = LocalIndex::new(n_qubits, &self.qubits);
        let d = obs.nrows();
        Ok(self.ops.iter().fold(CMatrix::zeros(d, d), |acc, k| {
            acc + linalg::conjugate_local(obs, &k.adjoint(), &index)
        }))
    }
}

fn n_qubits_of(state: &DensityMatrix) -> Result<usize> {
    state
        .n_qubits()
        .ok_or_else(|| SimError::InvalidArgument("state dimension is not a power of two".into()))
}

pub fn amplitude_damping(state: &DensityMatrix, level: f64, qubit: usize) -> Result<DensityMatrix> {
    KrausChannel::amplitude_damping(level, qubit)?.apply(state)
}

pub fn phase_damping(state: &DensityMatrix, level: f64, qubit: usize) -> Result<DensityMatrix> {
    KrausChannel::phase_damping(level, qubit)?.apply(state)
}

/// Depolarizing channel over the whole register, evaluated through the
/// twirl identity `Σ_{P≠I} PρP = 2^N tr(ρ) I - ρ`.
pub fn depolarizing(state: &DensityMatrix, level: f64) -> Result<DensityMatrix> {
    let n = n_qubits_of(state)?;
    depolarizing_on(state, level, &(0..n).collect::<Vec<_>>())
}

/// Depolarizing channel on a subset of qubits:
/// `(1 - λ - λ/(4^k-1)) ρ + λ 4^k/(4^k-1) · (I/2^k ⊗ tr_S ρ)`.
pub fn depolarizing_on(
    state: &DensityMatrix,
    level: f64,
    qubits: &[usize],
) -> Result<DensityMatrix> {
    ChannelKind::Depolarizing.check_level(level)?;
    let n = n_qubits_of(state)?;
    linalg::validate_qubits(n, qubits)?;
    Ok(depolarizing_unchecked(state, level, qubits, n))
}

fn depolarizing_unchecked(
    state: &DensityMatrix,
    level: f64,
    qubits: &[usize],
    n: usize,
) -> DensityMatrix {
    let k = qubits.len() as i32;
    let four_k = 4f64.powi(k);
    let keep = 1.0 - level - level / (four_k - 1.0);
    let mix = level * four_k / (four_k - 1.0);
    let rho = state.matrix();
    let index = LocalIndex::new(n, qubits);
    let local_dim = index.offsets.len();
    let mut out = rho * c(keep, 0.0);
    let scale = c(mix / local_dim as f64, 0.0);
    for &b1 in &index.bases {
        for &b2 in &index.bases {
            let mut reduced = ZERO;
            for &o in &index.offsets {
                reduced += rho[(b1 + o, b2 + o)];
            }
            if reduced == ZERO {
                continue;
            }
            for &o in &index.offsets {
                out[(b1 + o, b2 + o)] += reduced * scale;
            }
        }
    }
    DensityMatrix::from_matrix_unchecked(out)
}

/// Where noise enters a circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoisePlacement {
    /// After every gate (idle slots included) on the qubits it touches.
    AfterEachGate,
    /// At the barriers that precede each controlled-SWAP block.
    BeforeEachControlledSwap,
    /// Once, on every qubit, after the last gate.
    AfterFullProcess,
    /// At the barriers closing each layer.
    PerLayer,
}

impl NoisePlacement {
    pub fn name(self) -> &'static str {
        match self {
            NoisePlacement::AfterEachGate => "after-each-gate",
            NoisePlacement::BeforeEachControlledSwap => "before-each-controlled-swap",
            NoisePlacement::AfterFullProcess => "after-full-process",
            NoisePlacement::PerLayer => "per-layer",
        }
    }

    fn uses_barriers(self) -> bool {
        matches!(
            self,
            NoisePlacement::BeforeEachControlledSwap | NoisePlacement::PerLayer
        )
    }
}

/// A Markovian noise kind at a given level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkovNoise {
    pub kind: ChannelKind,
    pub level: f64,
}

impl MarkovNoise {
    pub fn new(kind: ChannelKind, level: f64) -> Result<Self> {
        if kind == ChannelKind::Custom {
            return Err(SimError::InvalidArgument(
                "custom channels have no level-parametrized form".into(),
            ));
        }
        kind.check_level(level)?;
        Ok(Self { kind, level })
    }

    /// Applies the noise to `qubits`: damping acts independently on each
    /// qubit, depolarizing acts jointly on the set.
    pub fn apply_to(&self, state: &DensityMatrix, qubits: &[usize]) -> Result<DensityMatrix> {
        let n = n_qubits_of(state)?;
        linalg::validate_qubits(n, qubits)?;
        Ok(self.apply_unchecked(state, qubits, n))
    }

    fn apply_unchecked(&self, state: &DensityMatrix, qubits: &[usize], n: usize) -> DensityMatrix {
        if self.level == 0.0 || qubits.is_empty() {
            return state.clone();
        }
        match self.kind {
            ChannelKind::Depolarizing => depolarizing_unchecked(state, self.level, qubits, n),
            _ => qubits.iter().fold(state.clone(), |rho, &q| {
                self.single_qubit_channel(q).apply_unchecked(&rho, n)
            }),
        }
    }

    /// The single-qubit damping channel of this kind on `qubit`.
    pub fn single_qubit_channel(&self, qubit: usize) -> KrausChannel {
        match self.kind {
            ChannelKind::AmplitudeDamping => KrausChannel::amplitude_damping(self.level, qubit),
            ChannelKind::PhaseDamping => KrausChannel::phase_damping(self.level, qubit),
            ChannelKind::Depolarizing => KrausChannel::depolarizing(self.level, vec![qubit]),
            ChannelKind::Custom => unreachable!("rejected at construction"),
        }
        .expect("level validated at construction")
    }
}

/// Checks that `placement` has something to act on in `circuit`.
pub fn check_placement(circuit: &Circuit, placement: NoisePlacement) -> Result<()> {
    if placement.uses_barriers()
        && !circuit
            .gates
            .iter()
            .any(|g| matches!(g, Gate::Barrier { .. }))
    {
        return Err(SimError::IncompatiblePlacement {
            placement: placement.name().into(),
            reason: "circuit has no barrier marking noise insertion points".into(),
        });
    }
    Ok(())
}

/// Runs `circuit` on `input` with noise inserted according to `placement`.
pub fn run_noisy_circuit(
    circuit: &Circuit,
    input: &DensityMatrix,
    noise: &MarkovNoise,
    placement: NoisePlacement,
) -> Result<DensityMatrix> {
    if input.dim() != 1 << circuit.n_qubits {
        return Err(SimError::DimensionMismatch {
            expected: 1 << circuit.n_qubits,
            got: input.dim(),
        });
    }
    circuit.validate()?;
    noise.kind.check_level(noise.level)?;
    check_placement(circuit, placement)?;
    let n = circuit.n_qubits;
    let mut rho = input.clone();
    for gate in &circuit.gates {
        match gate {
            Gate::Barrier { qubits } => {
                if placement.uses_barriers() {
                    rho = noise.apply_unchecked(&rho, qubits, n);
                }
            }
            _ => {
                rho = apply_gate_unchecked(&rho, gate, n);
                if placement == NoisePlacement::AfterEachGate {
                    rho = noise.apply_unchecked(&rho, &gate.qubits(), n);
                }
            }
        }
    }
    if placement == NoisePlacement::AfterFullProcess {
        rho = noise.apply_unchecked(&rho, &(0..n).collect::<Vec<_>>(), n);
    }
    Ok(rho)
}

/// Dual of noise applied once to every qubit of an `n_register`-qubit
/// register, for a local observable given on its support (listed order).
/// Damping channels on qubits outside the support leave the expectation
/// unchanged; global depolarizing mixes in `tr(M)/dim · I`.
pub fn conjugate_local_observable(
    obs: &CMatrix,
    n_support: usize,
    noise: &MarkovNoise,
    n_register: usize,
) -> CMatrix {
    if noise.kind == ChannelKind::Depolarizing {
        let four_n = 4f64.powi(n_register as i32);
        let keep = 1.0 - noise.level - noise.level / (four_n - 1.0);
        let mix = noise.level * four_n / (four_n - 1.0);
        let dim = obs.nrows();
        let avg = obs.trace() / c(dim as f64, 0.0);
        return obs * c(keep, 0.0) + linalg::identity(dim) * (avg * mix);
    }
    (0..n_support).fold(obs.clone(), |m, q| {
        noise
            .single_qubit_channel(q)
            .conjugate_observable(&m, n_support)
            .expect("support-sized observable")
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::state::random_mixed;

    #[test]
    fn amplitude_damping_closed_forms() {
        let one = DensityMatrix::basis(2, 1);
        let out = amplitude_damping(&one, 0.5, 0).unwrap();
        assert!((out.matrix()[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!((out.matrix()[(1, 1)].re - 0.5).abs() < 1e-15);
        let rho = random_mixed(1, &mut seeded(1));
        let full = amplitude_damping(&rho, 1.0, 0).unwrap();
        assert!(full.distance(&DensityMatrix::basis(2, 0)) < 1e-12);
        assert!(amplitude_damping(&rho, 0.0, 0).unwrap().distance(&rho) < 1e-15);
    }

    #[test]
    fn phase_damping_scales_coherence() {
        let plus = DensityMatrix::from_matrix_unchecked(CMatrix::from_element(2, 2, c(0.5, 0.0)));
        let out = phase_damping(&plus, 0.1, 0).unwrap();
        assert!((out.matrix()[(0, 1)].re - 0.5 * (-0.2f64).exp()).abs() < 1e-15);
        assert!((out.matrix()[(0, 0)].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn depolarizing_twirl_matches_pauli_sum() {
        for n in 1..=2 {
            let rho = random_mixed(n, &mut seeded(n as u64));
            for level in [0.0, 0.1, 0.5, 0.9375, 1.0] {
                let fast = depolarizing(&rho, level).unwrap();
                let brute = KrausChannel::depolarizing(level, (0..n).collect())
                    .unwrap()
                    .apply(&rho)
                    .unwrap();
                assert!(fast.distance(&brute) < 1e-12, "n={n} λ={level}");
            }
        }
    }

    #[test]
    fn depolarizing_subset_matches_pauli_sum() {
        let rho = random_mixed(3, &mut seeded(7));
        for qubits in [vec![1], vec![0, 2], vec![2, 1]] {
            let fast = depolarizing_on(&rho, 0.3, &qubits).unwrap();
            let brute = KrausChannel::depolarizing(0.3, qubits.clone())
                .unwrap()
                .apply(&rho)
                .unwrap();
            assert!(fast.distance(&brute) < 1e-12);
        }
    }

    #[test]
    fn level_ranges_enforced() {
        assert!(KrausChannel::amplitude_damping(1.2, 0).is_err());
        assert!(KrausChannel::phase_damping(-0.1, 0).is_err());
        assert!(KrausChannel::phase_damping(3.0, 0).is_ok());
        assert!(depolarizing(&DensityMatrix::zero_state(1), 1.5).is_err());
    }

    #[test]
    fn barrier_placement_requires_barriers() {
        let mut circ = Circuit::new(1);
        circ.push(Gate::rx(0, 0.2));
        let noise = MarkovNoise::new(ChannelKind::Depolarizing, 0.1).unwrap();
        let err = run_noisy_circuit(
            &circ,
            &DensityMatrix::zero_state(1),
            &noise,
            NoisePlacement::PerLayer,
        );
        assert!(matches!(err, Err(SimError::IncompatiblePlacement { .. })));
    }

    #[test]
    fn after_each_gate_matches_manual_composition() {
        let mut circ = Circuit::new(2);
        circ.push(Gate::cnot(0, 1));
        let rho = random_mixed(2, &mut seeded(3));
        let noise = MarkovNoise::new(ChannelKind::AmplitudeDamping, 0.2).unwrap();
        let got = run_noisy_circuit(&circ, &rho, &noise, NoisePlacement::AfterEachGate).unwrap();
        let manual = crate::circuit::apply_gate(&rho, &Gate::cnot(0, 1)).unwrap();
        let manual = amplitude_damping(&manual, 0.2, 0).unwrap();
        let manual = amplitude_damping(&manual, 0.2, 1).unwrap();
        assert!(got.distance(&manual) < 1e-14);
    }
}
