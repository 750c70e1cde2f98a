//! Gate-dependent non-Markovian noise from a discretized spin-boson bath.
//!
//! Every gate is realized as evolution for a time `t` under
//! `H = H_S + Σ_k ω_k b_k^†b_k + (Σ_q Z_q) ⊗ Σ_k λ_k (b_k + b_k^†)` with the
//! bath starting in a fresh Gibbs state, after which the bath is traced out.
//! `H_S` is scaled by `1/t` so that the ideal gate does not depend on `t`.
//!
//! Gates whose system Hamiltonian is diagonal commute with the coupling, so
//! each mode evolves independently conditioned on the computational basis
//! state and the channel factorizes over modes. Other gates are propagated
//! in the joint space with a Chebyshev expansion.

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate};
use crate::error::{Result, SimError};
use crate::linalg::{self, c, CMatrix, CVector, LocalIndex, C64, ZERO};
use crate::state::DensityMatrix;

/// Largest joint system-bath dimension the general propagator accepts.
pub const JOINT_DIM_BUDGET: usize = 1 << 14;

/// Gibbs populations below this are dropped before joint propagation.
const POPULATION_CUTOFF: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathSpec {
    pub alpha: f64,
    pub s: f64,
    pub omega_c: f64,
    pub beta: f64,
}

impl Default for BathSpec {
    fn default() -> Self {
        Self {
            alpha: 0.001,
            s: 6.0,
            omega_c: 5.0,
            beta: 1.0,
        }
    }
}

impl BathSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha >= 0.0 && self.s >= 0.0 && self.omega_c > 0.0 && self.beta > 0.0;
        if !ok
            || ![self.alpha, self.s, self.omega_c, self.beta]
                .iter()
                .all(|x| x.is_finite())
        {
            return Err(SimError::InvalidArgument(format!(
                "invalid bath parameters {self:?}"
            )));
        }
        Ok(())
    }

    /// `J(ω) = α ω_c^{1-s} ω^s e^{-ω/ω_c}`.
    pub fn spectral_density(&self, omega: f64) -> f64 {
        self.alpha
            * self.omega_c.powf(1.0 - self.s)
            * omega.powf(self.s)
            * (-omega / self.omega_c).exp()
    }
}

/// Discrete bath modes with a shared Fock cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathModes {
    pub omegas: Vec<f64>,
    pub couplings: Vec<f64>,
    pub n_max: usize,
}

impl BathModes {
    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    /// Dimension of the truncated bath Hilbert space.
    pub fn bath_dim(&self) -> usize {
        (self.n_max + 1).pow(self.len() as u32)
    }

    pub fn coupling_weight(&self) -> f64 {
        self.couplings.iter().map(|l| l * l).sum()
    }
}

/// Modes `ω_k = kΔω`, `k = 1..M`, `Δω = ω_max/M`, with `λ_k² = J(ω_k) w_k`
/// and trapezoid weights (`w_M = Δω/2`, the rest `Δω`; `J(0) = 0`).
pub fn discretize_bath(
    spec: &BathSpec,
    m: usize,
    omega_max: f64,
    n_max: usize,
) -> Result<BathModes> {
    spec.validate()?;
    if m == 0 || n_max == 0 || !(omega_max > 0.0) {
        return Err(SimError::InvalidArgument(format!(
            "bath discretization needs M >= 1, n_max >= 1, ω_max > 0 (got {m}, {n_max}, {omega_max})"
        )));
    }
    let dw = omega_max / m as f64;
    let omegas: Vec<f64> = (1..=m).map(|k| k as f64 * dw).collect();
    let couplings = omegas
        .iter()
        .enumerate()
        .map(|(k, &w)| {
            let weight = if k + 1 == m { 0.5 * dw } else { dw };
            (spec.spectral_density(w) * weight).sqrt()
        })
        .collect();
    Ok(BathModes {
        omegas,
        couplings,
        n_max,
    })
}

/// Product Gibbs state of the truncated modes, stored per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsState {
    /// `populations[k][n]` for mode `k`, Fock level `n`.
    pub populations: Vec<Vec<f64>>,
}

impl GibbsState {
    pub fn mean_occupation(&self, mode: usize) -> f64 {
        self.populations[mode]
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }

    pub fn trace(&self) -> f64 {
        self.populations
            .iter()
            .map(|p| p.iter().sum::<f64>())
            .product()
    }

    /// Dense product density matrix; only for small baths.
    pub fn to_density_matrix(&self) -> Result<DensityMatrix> {
        let dim: usize = self.populations.iter().map(|p| p.len()).product();
        if dim > JOINT_DIM_BUDGET {
            return Err(SimError::DimensionBudget {
                dim,
                budget: JOINT_DIM_BUDGET,
            });
        }
        let mats: Vec<CMatrix> = self
            .populations
            .iter()
            .map(|p| {
                CMatrix::from_diagonal(&CVector::from_iterator(
                    p.len(),
                    p.iter().map(|&x| c(x, 0.0)),
                ))
            })
            .collect();
        Ok(DensityMatrix::from_matrix_unchecked(linalg::kron_all(
            mats.iter(),
        )))
    }
}

/// Truncated Bose-Einstein populations `p_n ∝ e^{-β ω n}`, `n ≤ n_max`.
pub fn gibbs_state(modes: &BathModes, beta: f64) -> GibbsState {
    let populations = modes
        .omegas
        .iter()
        .map(|&w| {
            let raw: Vec<f64> = (0..=modes.n_max)
                .map(|n| (-beta * w * n as f64).exp())
                .collect();
            let z: f64 = raw.iter().sum();
            raw.into_iter().map(|p| p / z).collect()
        })
        .collect();
    GibbsState { populations }
}

/// Analytic pure-dephasing exponent of a qubit coupled through `σ_z`:
/// `|ρ01(t)| = |ρ01(0)| e^{-Γ(t)}`.
pub fn dephasing_exponent(modes: &BathModes, beta: f64, t: f64) -> f64 {
    modes
        .omegas
        .iter()
        .zip(&modes.couplings)
        .map(|(&w, &l)| {
            let coth = 1.0 / (beta * w / 2.0).tanh();
            4.0 * l * l * coth * (1.0 - (w * t).cos()) / (w * w)
        })
        .sum()
}

/// Constant system Hamiltonian whose evolution for `t` realizes `gate`.
pub fn gate_hamiltonian(gate: &Gate, t: f64) -> Option<CMatrix> {
    let scale = c(1.0 / t, 0.0);
    match gate {
        Gate::Rx { angle, .. } => Some(linalg::pauli_x() * c(angle / (2.0 * t), 0.0)),
        Gate::Rz { angle, .. } => Some(linalg::pauli_z() * c(angle / (2.0 * t), 0.0)),
        Gate::Idle { .. } => Some(CMatrix::zeros(2, 2)),
        Gate::Cnot { .. } => {
            // exp(-iH) = e^{iπ/4} CNOT for H = (π/4)(-Z⊗I + Z⊗X - I⊗X)
            let z1 = linalg::kron(&linalg::pauli_z(), &linalg::identity(2));
            let x2 = linalg::kron(&linalg::identity(2), &linalg::pauli_x());
            let zx = linalg::kron(&linalg::pauli_z(), &linalg::pauli_x());
            Some((zx - z1 - x2) * c(std::f64::consts::FRAC_PI_4, 0.0) * scale)
        }
        Gate::Unitary { matrix, .. } => Some(linalg::unitary_generator(matrix) * scale),
        Gate::Barrier { .. } => None,
    }
}

/// Linear map on the `D×D` density matrices of the gate's qubits, in the
/// row-major vectorization `vec(ρ)[a·D + b] = ρ[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalChannel {
    pub qubits: Vec<usize>,
    pub superop: CMatrix,
}

impl LocalChannel {
    fn local_dim(&self) -> usize {
        1 << self.qubits.len()
    }

    pub fn apply(&self, state: &DensityMatrix) -> Result<DensityMatrix> {
        let n = state.n_qubits().ok_or_else(|| {
            SimError::InvalidArgument("state dimension is not a power of two".into())
        })?;
        linalg::validate_qubits(n, &self.qubits)?;
        Ok(self.apply_unchecked(state, n))
    }

    pub(crate) fn apply_unchecked(&self, state: &DensityMatrix, n: usize) -> DensityMatrix {
        let index = LocalIndex::new(n, &self.qubits);
        let dl = self.local_dim();
        let rho = state.matrix();
        let mut out = rho.clone();
        let mut block = vec![ZERO; dl * dl];
        for &b1 in &index.bases {
            for &b2 in &index.bases {
                for a in 0..dl {
                    for b in 0..dl {
                        block[a * dl + b] = rho[(b1 + index.offsets[a], b2 + index.offsets[b])];
                    }
                }
                for row in 0..dl * dl {
                    let mut acc = ZERO;
                    for (col, &v) in block.iter().enumerate() {
                        acc += self.superop[(row, col)] * v;
                    }
                    out[(b1 + index.offsets[row / dl], b2 + index.offsets[row % dl])] = acc;
                }
            }
        }
        DensityMatrix::from_matrix_unchecked(out)
    }

    /// Superoperator of the ideal conjugation `ρ → UρU^†`.
    pub fn from_unitary(qubits: Vec<usize>, u: &CMatrix) -> Self {
        let d = u.nrows();
        let superop = CMatrix::from_fn(d * d, d * d, |row, col| {
            let (a, b) = (row / d, row % d);
            let (s, sp) = (col / d, col % d);
            u[(a, s)] * u[(b, sp)].conj()
        });
        Self { qubits, superop }
    }
}

/// Diagonal of `Σ_q Z_q` on `k` qubits.
fn collective_z(k: usize) -> Vec<f64> {
    (0..1usize << k)
        .map(|s| {
            (0..k)
                .map(|q| {
                    if (s >> (k - 1 - q)) & 1 == 0 {
                        1.0
                    } else {
                        -1.0
                    }
                })
                .sum()
        })
        .collect()
}

fn is_diagonal(m: &CMatrix) -> bool {
    (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)].norm() < 1e-14))
}

/// Single-mode propagator `exp(-i t (ω n + z λ (b + b^†)))` on `n_max + 1` levels.
fn mode_propagator(omega: f64, lambda: f64, z: f64, n_max: usize, t: f64) -> CMatrix {
    let d = n_max + 1;
    let mut h = CMatrix::zeros(d, d);
    for n in 0..d {
        h[(n, n)] = c(omega * n as f64, 0.0);
        if n + 1 < d {
            let amp = c(z * lambda * ((n + 1) as f64).sqrt(), 0.0);
            h[(n, n + 1)] = amp;
            h[(n + 1, n)] = amp;
        }
    }
    linalg::expm_hermitian(&h, t)
}

/// The spin-boson gate-noise model: bath spec plus its discretization.
#[derive(Debug, Clone, PartialEq)]
pub struct NonMarkovianModel {
    pub spec: BathSpec,
    pub modes: BathModes,
    gibbs: GibbsState,
}

impl NonMarkovianModel {
    pub fn new(spec: BathSpec, modes: BathModes) -> Result<Self> {
        spec.validate()?;
        let gibbs = gibbs_state(&modes, spec.beta);
        Ok(Self { spec, modes, gibbs })
    }

    pub fn gibbs(&self) -> &GibbsState {
        &self.gibbs
    }

    /// Channel of `gate` evolved for time `t` with a fresh bath.
    pub fn gate_channel(&self, gate: &Gate, t: f64) -> Result<Option<LocalChannel>> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(SimError::InvalidArgument(format!(
                "gate time must be positive, got {t}"
            )));
        }
        let Some(hs) = gate_hamiltonian(gate, t) else {
            return Ok(None);
        };
        let qubits = gate.qubits();
        let superop = if is_diagonal(&hs) {
            self.diagonal_superop(&hs, qubits.len(), t)
        } else {
            self.joint_superop(&hs, qubits.len(), t)?
        };
        Ok(Some(LocalChannel { qubits, superop }))
    }

    /// Same as [`gate_channel`](Self::gate_channel) but always through the
    /// joint propagator; used to cross-check the factorized route.
    pub fn gate_channel_joint(&self, gate: &Gate, t: f64) -> Result<Option<LocalChannel>> {
        let Some(hs) = gate_hamiltonian(gate, t) else {
            return Ok(None);
        };
        let qubits = gate.qubits();
        let superop = self.joint_superop(&hs, qubits.len(), t)?;
        Ok(Some(LocalChannel { qubits, superop }))
    }

    fn diagonal_superop(&self, hs: &CMatrix, k: usize, t: f64) -> CMatrix {
        let d = 1usize << k;
        let z = collective_z(k);
        let mut distinct: Vec<f64> = z.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        // per mode, per distinct z value
        let props: Vec<Vec<CMatrix>> = self
            .modes
            .omegas
            .iter()
            .zip(&self.modes.couplings)
            .map(|(&w, &l)| {
                distinct
                    .iter()
                    .map(|&zv| mode_propagator(w, l, zv, self.modes.n_max, t))
                    .collect()
            })
            .collect();
        let pos = |zv: f64| {
            distinct
                .iter()
                .position(|&x| x == zv)
                .expect("value from the same list")
        };
        let mut superop = CMatrix::zeros(d * d, d * d);
        for s in 0..d {
            for sp in 0..d {
                let (i1, i2) = (pos(z[s]), pos(z[sp]));
                let mut factor = C64::from_polar(1.0, -(hs[(s, s)].re - hs[(sp, sp)].re) * t);
                for (k_mode, p) in self.gibbs.populations.iter().enumerate() {
                    let u1 = &props[k_mode][i1];
                    let u2 = &props[k_mode][i2];
                    // tr(U1 ρ_k U2^†) = Σ_n p_n (U2^† U1)_{nn}
                    let mut tr = ZERO;
                    for (n, &pn) in p.iter().enumerate() {
                        let mut diag = ZERO;
                        for m in 0..p.len() {
                            diag += u2[(m, n)].conj() * u1[(m, n)];
                        }
                        tr += diag * pn;
                    }
                    factor *= tr;
                }
                superop[(s * d + sp, s * d + sp)] = factor;
            }
        }
        superop
    }

    fn joint_superop(&self, hs: &CMatrix, k: usize, t: f64) -> Result<CMatrix> {
        let d = 1usize << k;
        let bath_dim = self.modes.bath_dim();
        let dim = d.saturating_mul(bath_dim);
        if dim > JOINT_DIM_BUDGET {
            return Err(SimError::DimensionBudget {
                dim,
                budget: JOINT_DIM_BUDGET,
            });
        }
        let joint = JointHamiltonian::new(hs, k, &self.modes);
        let starts = self.retained_bath_states();
        let mut superop = CMatrix::zeros(d * d, d * d);
        for &(b0, p) in &starts {
            let evolved: Vec<CVector> = (0..d)
                .map(|s| {
                    let mut v = CVector::zeros(dim);
                    v[s * bath_dim + b0] = c(1.0, 0.0);
                    joint.propagate(&v, t)
                })
                .collect();
            for s in 0..d {
                for sp in 0..d {
                    let (psi, phi) = (&evolved[s], &evolved[sp]);
                    for a in 0..d {
                        for b in 0..d {
                            let mut acc = ZERO;
                            for bb in 0..bath_dim {
                                acc += psi[a * bath_dim + bb] * phi[b * bath_dim + bb].conj();
                            }
                            superop[(a * d + b, s * d + sp)] += acc * p;
                        }
                    }
                }
            }
        }
        Ok(superop)
    }

    /// Product Fock states with non-negligible Gibbs weight, renormalized.
    fn retained_bath_states(&self) -> Vec<(usize, f64)> {
        let levels = self.modes.n_max + 1;
        let mut out = Vec::new();
        for b in 0..self.modes.bath_dim() {
            let mut p = 1.0;
            let mut rest = b;
            for mode in (0..self.modes.len()).rev() {
                p *= self.gibbs.populations[mode][rest % levels];
                rest /= levels;
            }
            if p >= POPULATION_CUTOFF {
                out.push((b, p));
            }
        }
        let total: f64 = out.iter().map(|x| x.1).sum();
        out.into_iter().map(|(b, p)| (b, p / total)).collect()
    }

    pub fn noisy_gate(&self, state: &DensityMatrix, gate: &Gate, t: f64) -> Result<DensityMatrix> {
        let n = state.n_qubits().ok_or_else(|| {
            SimError::InvalidArgument("state dimension is not a power of two".into())
        })?;
        gate.validate(n)?;
        match self.gate_channel(gate, t)? {
            Some(ch) => Ok(ch.apply_unchecked(state, n)),
            None => Ok(state.clone()),
        }
    }

    /// Channels for every gate of `circuit` at time `t`, computed once so they
    /// can be reused across input states. Barriers map to `None`.
    pub fn circuit_channels(&self, circuit: &Circuit, t: f64) -> Result<Vec<Option<LocalChannel>>> {
        circuit.validate()?;
        let mut cache: Vec<(Gate, Option<LocalChannel>)> = Vec::new();
        let mut out = Vec::with_capacity(circuit.gates.len());
        for gate in &circuit.gates {
            let local = relabel_local(gate);
            let hit = cache
                .iter()
                .find(|(g, _)| *g == local)
                .map(|(_, ch)| ch.clone());
            let ch = match hit {
                Some(ch) => ch,
                None => {
                    let ch = self.gate_channel(&local, t)?;
                    cache.push((local, ch.clone()));
                    ch
                }
            };
            out.push(ch.map(|mut ch| {
                ch.qubits = gate.qubits();
                ch
            }));
        }
        Ok(out)
    }

    /// Runs a circuit with a fresh bath attached to every gate.
    pub fn run_circuit(
        &self,
        circuit: &Circuit,
        input: &DensityMatrix,
        t: f64,
    ) -> Result<DensityMatrix> {
        if input.dim() != 1 << circuit.n_qubits {
            return Err(SimError::DimensionMismatch {
                expected: 1 << circuit.n_qubits,
                got: input.dim(),
            });
        }
        let channels = self.circuit_channels(circuit, t)?;
        Ok(apply_channels(&channels, input, circuit.n_qubits))
    }
}

/// Applies precomputed per-gate channels in order.
pub fn apply_channels(
    channels: &[Option<LocalChannel>],
    input: &DensityMatrix,
    n_qubits: usize,
) -> DensityMatrix {
    channels
        .iter()
        .flatten()
        .fold(input.clone(), |rho, ch| ch.apply_unchecked(&rho, n_qubits))
}

/// The same gate moved onto qubits `0..k`, used as a cache key.
fn relabel_local(gate: &Gate) -> Gate {
    match gate {
        Gate::Rx { angle, .. } => Gate::rx(0, *angle),
        Gate::Rz { angle, .. } => Gate::rz(0, *angle),
        Gate::Idle { .. } => Gate::Idle { qubit: 0 },
        Gate::Cnot { .. } => Gate::cnot(0, 1),
        Gate::Unitary { qubits, matrix } => {
            Gate::unitary((0..qubits.len()).collect(), matrix.clone())
        }
        Gate::Barrier { qubits } => Gate::Barrier {
            qubits: (0..qubits.len()).collect(),
        },
    }
}

/// Matrix-free joint Hamiltonian on `system ⊗ bath`, bath index mixed-radix
/// with mode 0 most significant.
struct JointHamiltonian {
    hs: CMatrix,
    z: Vec<f64>,
    bath_diag: Vec<f64>,
    /// `(neighbour, amplitude)` for every bath state, raising and lowering.
    links: Vec<Vec<(usize, f64)>>,
    bath_dim: usize,
}

impl JointHamiltonian {
    fn new(hs: &CMatrix, k: usize, modes: &BathModes) -> Self {
        let levels = modes.n_max + 1;
        let m = modes.len();
        let bath_dim = modes.bath_dim();
        let stride = |mode: usize| levels.pow((m - 1 - mode) as u32);
        let mut bath_diag = vec![0.0; bath_dim];
        let mut links = vec![Vec::new(); bath_dim];
        for b in 0..bath_dim {
            for mode in 0..m {
                let n = (b / stride(mode)) % levels;
                bath_diag[b] += modes.omegas[mode] * n as f64;
                let l = modes.couplings[mode];
                if n + 1 < levels {
                    links[b].push((b + stride(mode), l * ((n + 1) as f64).sqrt()));
                }
                if n > 0 {
                    links[b].push((b - stride(mode), l * (n as f64).sqrt()));
                }
            }
        }
        Self {
            hs: hs.clone(),
            z: collective_z(k),
            bath_diag,
            links,
            bath_dim,
        }
    }

    fn dim(&self) -> usize {
        self.hs.nrows() * self.bath_dim
    }

    fn apply(&self, x: &CVector, y: &mut CVector) {
        let d = self.hs.nrows();
        let nb = self.bath_dim;
        for s in 0..d {
            for b in 0..nb {
                let mut acc = x[s * nb + b] * self.bath_diag[b];
                for sp in 0..d {
                    let h = self.hs[(s, sp)];
                    if h != ZERO {
                        acc += h * x[sp * nb + b];
                    }
                }
                let zs = self.z[s];
                if zs != 0.0 {
                    for &(bp, amp) in &self.links[b] {
                        acc += x[s * nb + bp] * (zs * amp);
                    }
                }
                y[s * nb + b] = acc;
            }
        }
    }

    /// Gershgorin enclosure `[lo, hi]` of the spectrum.
    fn spectral_bounds(&self) -> (f64, f64) {
        let d = self.hs.nrows();
        let nb = self.bath_dim;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in 0..d {
            let off_s: f64 = (0..d)
                .filter(|&sp| sp != s)
                .map(|sp| self.hs[(s, sp)].norm())
                .sum();
            for b in 0..nb {
                let center = self.hs[(s, s)].re + self.bath_diag[b];
                let radius =
                    off_s + self.z[s].abs() * self.links[b].iter().map(|l| l.1.abs()).sum::<f64>();
                lo = lo.min(center - radius);
                hi = hi.max(center + radius);
            }
        }
        (lo, hi)
    }

    /// `exp(-iHt) v` by Chebyshev expansion.
    fn propagate(&self, v: &CVector, t: f64) -> CVector {
        let (lo, hi) = self.spectral_bounds();
        let center = 0.5 * (hi + lo);
        let radius = (0.5 * (hi - lo)).max(1e-12);
        let x = radius * t;
        let coeffs = bessel_sequence(x);
        let dim = self.dim();
        // T_0 v, T_1 v with H' = (H - center)/radius
        let scaled = |src: &CVector, out: &mut CVector| {
            self.apply(src, out);
            for i in 0..dim {
                out[i] = (out[i] - src[i] * center) / radius;
            }
        };
        let mut t_prev = v.clone();
        let mut t_curr = CVector::zeros(dim);
        scaled(v, &mut t_curr);
        let mut acc = v * c(coeffs[0], 0.0);
        let minus_i = c(0.0, -1.0);
        if coeffs.len() > 1 {
            acc += &t_curr * (minus_i * 2.0 * coeffs[1]);
        }
        let mut tmp = CVector::zeros(dim);
        let mut phase = minus_i;
        for &jk in coeffs.iter().skip(2) {
            scaled(&t_curr, &mut tmp);
            // T_{k} = 2 H' T_{k-1} - T_{k-2}
            for i in 0..dim {
                tmp[i] = tmp[i] * 2.0 - t_prev[i];
            }
            std::mem::swap(&mut t_prev, &mut t_curr);
            std::mem::swap(&mut t_curr, &mut tmp);
            phase *= minus_i;
            acc += &t_curr * (phase * 2.0 * jk);
        }
        acc * C64::from_polar(1.0, -center * t)
    }
}

/// Bessel values `J_0(x) … J_K(x)` with `K` past the point where the tail is
/// below double precision, by Miller's backward recurrence.
fn bessel_sequence(x: f64) -> Vec<f64> {
    if x.abs() < 1e-300 {
        return vec![1.0];
    }
    let k_max = (x + 12.0 * x.cbrt() + 30.0).ceil() as usize;
    let start = k_max + 30;
    let mut vals = vec![0.0; start + 2];
    vals[start + 1] = 0.0;
    vals[start] = 1e-300;
    for k in (1..=start).rev() {
        vals[k - 1] = 2.0 * k as f64 / x * vals[k] - vals[k + 1];
        if vals[k - 1].abs() > 1e250 {
            for v in vals[k - 1..].iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    // J_0 + 2 Σ J_{2k} = 1
    let norm = vals[0] + 2.0 * vals.iter().skip(2).step_by(2).sum::<f64>();
    vals.truncate(k_max + 1);
    vals.iter().map(|v| v / norm).collect()
}
