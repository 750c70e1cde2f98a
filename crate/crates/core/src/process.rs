//! Target-process builders and trainers: hardware-efficient VQE ansatz,
//! swap test, QAOA for Max-Cut, and transverse-Ising spin dynamics.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate};
use crate::error::{Result, SimError};
use crate::ising::{self, IsingSpec};
use crate::linalg::{c, CMatrix, CVector};
use crate::rng;
use crate::state::{self, DensityMatrix};

/// Rz-Rx-Rz on every qubit followed by a CNOT ladder, repeated `layers`
/// times. Angles are ordered layer, qubit, then (α, β, γ).
pub fn build_vqe(n: usize, layers: usize, theta: &[f64], tag: f64) -> Result<Circuit> {
    if theta.len() != 3 * n * layers {
        return Err(SimError::InvalidArgument(format!(
            "expected {} angles for N={n}, L={layers}, got {}",
            3 * n * layers,
            theta.len()
        )));
    }
    let mut circ = Circuit::new(n).with_tag(tag);
    for l in 0..layers {
        for q in 0..n {
            let a = &theta[3 * (l * n + q)..3 * (l * n + q) + 3];
            circ.extend([Gate::rz(q, a[0]), Gate::rx(q, a[1]), Gate::rz(q, a[2])]);
        }
        for q in 0..n - 1 {
            circ.push(Gate::cnot(q, q + 1));
        }
    }
    circ.validate()?;
    Ok(circ)
}

fn vqe_energy(spec: &IsingSpec, layers: usize, theta: &[f64]) -> f64 {
    let circ = build_vqe(spec.n, layers, theta, spec.g).expect("angle count checked by caller");
    let mut psi = state::zero_vector(1 << spec.n);
    psi[0] = c(1.0, 0.0);
    spec.energy_vector(&circ.run_vector(&psi))
}

/// Gradient descent on the noiseless energy with parameter-shift gradients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainSettings {
    pub iterations: usize,
    pub step: f64,
    /// Independent random initializations; the lowest final objective wins.
    pub restarts: usize,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self {
            iterations: 500,
            step: 0.05,
            restarts: 3,
        }
    }
}

/// Trains the ansatz towards the Ising ground state. The energy is divided
/// by `|g| + |J|` so that the fixed step size behaves alike across fields.
pub fn train_vqe(
    spec: &IsingSpec,
    layers: usize,
    seed: u64,
    settings: &TrainSettings,
) -> Result<Vec<f64>> {
    spec.validate()?;
    if spec.n > 8 {
        return Err(SimError::TooLarge(format!(
            "VQE training limited to 8 qubits, got {}",
            spec.n
        )));
    }
    let n_params = 3 * spec.n * layers;
    let scale = 1.0 / (spec.g.abs() + spec.j.abs()).max(1e-12);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for restart in 0..settings.restarts.max(1) {
        let mut rng = rng::stream(seed, restart as u64);
        let mut theta: Vec<f64> = (0..n_params).map(|_| rng.random_range(-0.3..0.3)).collect();
        for _ in 0..settings.iterations {
            let grad: Vec<f64> = (0..n_params)
                .map(|i| {
                    let mut plus = theta.clone();
                    plus[i] += FRAC_PI_2;
                    let mut minus = theta.clone();
                    minus[i] -= FRAC_PI_2;
                    0.5 * (vqe_energy(spec, layers, &plus) - vqe_energy(spec, layers, &minus))
                })
                .collect();
            for (t, g) in theta.iter_mut().zip(&grad) {
                *t -= settings.step * scale * g;
            }
        }
        let e = vqe_energy(spec, layers, &theta);
        if best.as_ref().is_none_or(|(b, _)| e < *b) {
            best = Some((e, theta));
        }
    }
    Ok(best.expect("at least one restart").1)
}

/// Noiseless energy of the trained ansatz on `|0…0⟩`.
pub fn vqe_energy_of(spec: &IsingSpec, layers: usize, theta: &[f64]) -> Result<f64> {
    build_vqe(spec.n, layers, theta, spec.g)?;
    Ok(vqe_energy(spec, layers, theta))
}

/// Toffoli in the {H, T, CNOT} decomposition, with `T = Rz(π/4)` up to phase.
pub fn toffoli_gates(a: usize, b: usize, target: usize) -> Vec<Gate> {
    let t = |q| Gate::rz(q, FRAC_PI_4);
    let tdg = |q| Gate::rz(q, -FRAC_PI_4);
    vec![
        Gate::h(target),
        Gate::cnot(b, target),
        tdg(target),
        Gate::cnot(a, target),
        t(target),
        Gate::cnot(b, target),
        tdg(target),
        Gate::cnot(a, target),
        t(b),
        t(target),
        Gate::h(target),
        Gate::cnot(a, b),
        t(a),
        tdg(b),
        Gate::cnot(a, b),
    ]
}

/// Controlled-SWAP as `CNOT(t2→t1) · Toffoli(c, t1 → t2) · CNOT(t2→t1)`.
pub fn controlled_swap_gates(control: usize, t1: usize, t2: usize) -> Vec<Gate> {
    let mut gates = vec![Gate::cnot(t2, t1)];
    gates.extend(toffoli_gates(control, t1, t2));
    gates.push(Gate::cnot(t2, t1));
    gates
}

/// Swap test on `2n + 1` qubits: ancilla 0, first register `1..=n`, second
/// register `n+1..=2n`. A barrier over the three qubits precedes every
/// controlled-SWAP block. `⟨Z_0⟩ = |⟨ψ|φ⟩|²` for pure inputs.
pub fn build_swap_test(n: usize, tag: f64) -> Result<Circuit> {
    if n == 0 {
        return Err(SimError::InvalidArgument(
            "swap-test registers need at least one qubit".into(),
        ));
    }
    if 2 * n + 1 > ising::MAX_DENSE_QUBITS {
        return Err(SimError::TooLarge(format!(
            "swap test on {} qubits",
            2 * n + 1
        )));
    }
    let mut circ = Circuit::new(2 * n + 1).with_tag(tag);
    circ.push(Gate::h(0));
    for i in 0..n {
        let (t1, t2) = (1 + i, 1 + n + i);
        circ.push(Gate::Barrier {
            qubits: vec![0, t1, t2],
        });
        circ.extend(controlled_swap_gates(0, t1, t2));
    }
    circ.push(Gate::h(0));
    Ok(circ)
}

/// `ρ_anc ⊗ |ψ⟩⟨ψ| ⊗ |φ⟩⟨φ|` in the swap-test register order.
pub fn swap_test_input(ancilla: &DensityMatrix, psi: &CVector, phi: &CVector) -> DensityMatrix {
    ancilla
        .tensor(&DensityMatrix::from_pure(psi))
        .tensor(&DensityMatrix::from_pure(phi))
}

/// Undirected simple graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    pub n_vertices: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(n_vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut normalized: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        for (u, v) in edges {
            if u == v {
                return Err(SimError::InvalidArgument(format!(
                    "self-loop on vertex {u}"
                )));
            }
            if u >= n_vertices || v >= n_vertices {
                return Err(SimError::InvalidArgument(format!(
                    "edge ({u}, {v}) outside {n_vertices} vertices"
                )));
            }
            let e = (u.min(v), u.max(v));
            if !normalized.contains(&e) {
                normalized.push(e);
            }
        }
        Ok(Self {
            n_vertices,
            edges: normalized,
        })
    }

    pub fn ring(n: usize) -> Self {
        Self::new(n, (0..n).map(|i| (i, (i + 1) % n)).collect()).expect("ring is a simple graph")
    }

    /// Parses one `u v` pair per line, 0-indexed; `#` starts a comment. The
    /// vertex count is one past the largest index.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let nums: Vec<usize> = line
                .split_whitespace()
                .map(|tok| tok.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| {
                    SimError::InvalidArgument(format!("edge list line {}: {e}", lineno + 1))
                })?;
            if nums.len() != 2 {
                return Err(SimError::InvalidArgument(format!(
                    "edge list line {}: expected two vertices",
                    lineno + 1
                )));
            }
            edges.push((nums[0], nums[1]));
        }
        let n = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
        Self::new(n, edges)
    }
}

/// Number of cut edges for a partition given as bits (qubit 0 = vertex 0 is
/// the most significant bit of the basis index).
pub fn maxcut_value(bits: usize, graph: &Graph) -> f64 {
    let n = graph.n_vertices;
    graph
        .edges
        .iter()
        .filter(|&&(u, v)| ((bits >> (n - 1 - u)) & 1) != ((bits >> (n - 1 - v)) & 1))
        .count() as f64
}

/// QAOA layers `e^{-iβ_l Σ X} e^{-iγ_l H_C}` acting on `|+⟩^{⊗n}` supplied as
/// the input state. Each `e^{-iγ(I - ZZ)/2}` edge term is `CNOT · Rz(-γ) ·
/// CNOT` up to phase. A barrier over all qubits closes every layer.
pub fn build_qaoa(graph: &Graph, gammas: &[f64], betas: &[f64], tag: f64) -> Result<Circuit> {
    if gammas.len() != betas.len() || gammas.is_empty() {
        return Err(SimError::InvalidArgument(
            "QAOA needs p >= 1 matching (γ, β) pairs".into(),
        ));
    }
    let n = graph.n_vertices;
    if n > ising::MAX_DENSE_QUBITS {
        return Err(SimError::TooLarge(format!("QAOA on {n} qubits")));
    }
    let mut circ = Circuit::new(n).with_tag(tag);
    for (&gamma, &beta) in gammas.iter().zip(betas) {
        for &(u, v) in &graph.edges {
            circ.extend([Gate::cnot(u, v), Gate::rz(v, -gamma), Gate::cnot(u, v)]);
        }
        for q in 0..n {
            circ.push(Gate::rx(q, 2.0 * beta));
        }
        circ.push(Gate::Barrier {
            qubits: (0..n).collect(),
        });
    }
    Ok(circ)
}

pub fn plus_state_vector(n: usize) -> CVector {
    CVector::from_element(1 << n, c((1.0 / (1u64 << n) as f64).sqrt(), 0.0))
}

/// Expected cut value of the noiseless QAOA state.
pub fn qaoa_expected_cut(graph: &Graph, gammas: &[f64], betas: &[f64]) -> Result<f64> {
    let circ = build_qaoa(graph, gammas, betas, 0.0)?;
    let psi = circ.run_vector(&plus_state_vector(graph.n_vertices));
    Ok(psi
        .iter()
        .enumerate()
        .map(|(i, a)| a.norm_sqr() * maxcut_value(i, graph))
        .sum())
}

/// Gradient ascent on `⟨H_C⟩` with central finite differences; returns
/// `(γ, β)`.
pub fn train_qaoa(
    graph: &Graph,
    p: usize,
    seed: u64,
    settings: &TrainSettings,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if p == 0 {
        return Err(SimError::InvalidArgument(
            "QAOA depth must be at least 1".into(),
        ));
    }
    let h = 1e-5;
    let mut best: Option<(f64, Vec<f64>)> = None;
    for restart in 0..settings.restarts.max(1) {
        let mut rng = rng::stream(seed, restart as u64);
        let mut x: Vec<f64> = (0..2 * p)
            .map(|i| {
                if i < p {
                    rng.random_range(0.0..PI)
                } else {
                    rng.random_range(0.0..FRAC_PI_2)
                }
            })
            .collect();
        let objective =
            |x: &[f64]| qaoa_expected_cut(graph, &x[..p], &x[p..]).expect("valid layer count");
        for _ in 0..settings.iterations {
            let grad: Vec<f64> = (0..2 * p)
                .map(|i| {
                    let mut a = x.clone();
                    a[i] += h;
                    let mut b = x.clone();
                    b[i] -= h;
                    (objective(&a) - objective(&b)) / (2.0 * h)
                })
                .collect();
            for (xi, g) in x.iter_mut().zip(&grad) {
                *xi += settings.step * g;
            }
        }
        let value = -objective(&x);
        if best.as_ref().is_none_or(|(b, _)| value < *b) {
            best = Some((value, x));
        }
    }
    let x = best.expect("at least one restart").1;
    Ok((x[..p].to_vec(), x[p..].to_vec()))
}

/// Evolves `input` under `exp(-i H_Ising t)`.
pub fn spin_dynamics(input: &DensityMatrix, spec: &IsingSpec, t: f64) -> Result<DensityMatrix> {
    spec.validate()?;
    if input.dim() != 1 << spec.n {
        return Err(SimError::DimensionMismatch {
            expected: 1 << spec.n,
            got: input.dim(),
        });
    }
    if t == 0.0 {
        return Ok(input.clone());
    }
    let u = ising::ising_propagator(spec, t)?;
    Ok(DensityMatrix::from_matrix_unchecked(
        &u * input.matrix() * u.adjoint(),
    ))
}

/// Pure-state version of [`spin_dynamics`] with a precomputed propagator.
pub fn spin_dynamics_vector(psi: &CVector, propagator: &CMatrix) -> CVector {
    propagator * psi
}
