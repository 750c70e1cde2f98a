//! Single-mode continuous-variable dynamics in a truncated Fock space: Kerr
//! evolution with photon loss, Wigner functions on a phase-space grid, and
//! the forward/backward fiducial evolution.
//!
//! Quadratures follow `x = √2 Re α`, `p = √2 Im α`, so the vacuum Wigner
//! function is `exp(-x² - p²) / π` and `tr(ρσ) = 2π ∫ W_ρ W_σ dx dp`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{number, DatasetSample, NoiseLevelGrid};
use crate::error::{Result, SimError};
use crate::linalg::{c, CMatrix, C64};
use crate::state::DensityMatrix;

pub const DEFAULT_TRUNCATION: usize = 15;
pub const DEFAULT_DT: f64 = 1e-3;
/// Trace drift that aborts an integration.
pub const TRACE_DRIFT_LIMIT: f64 = 1e-4;

/// Sign of the Kerr Hamiltonian `H = ± π a†² a²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KerrSign {
    Forward,
    Reverse,
    Off,
}

impl KerrSign {
    fn factor(self) -> f64 {
        match self {
            KerrSign::Forward => 1.0,
            KerrSign::Reverse => -1.0,
            KerrSign::Off => 0.0,
        }
    }
}

/// Energies `π n (n - 1)` of the Kerr Hamiltonian.
pub fn kerr_energies(n_trunc: usize) -> Vec<f64> {
    (0..n_trunc)
        .map(|n| PI * (n * n.saturating_sub(1)) as f64)
        .collect()
}

/// Coherent state `|α⟩` truncated to `n_trunc` levels (not renormalized, so
/// the truncation leakage shows up in the trace).
pub fn coherent_vector(alpha: C64, n_trunc: usize) -> Vec<C64> {
    let mut amps = Vec::with_capacity(n_trunc);
    let mut term = c((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for n in 0..n_trunc {
        if n > 0 {
            term = term * alpha / (n as f64).sqrt();
        }
        amps.push(term);
    }
    amps
}

pub fn coherent_state(alpha: C64, n_trunc: usize) -> Result<DensityMatrix> {
    if n_trunc == 0 {
        return Err(SimError::InvalidArgument(
            "Fock truncation must be positive".into(),
        ));
    }
    let v = coherent_vector(alpha, n_trunc);
    Ok(DensityMatrix::from_matrix_unchecked(CMatrix::from_fn(
        n_trunc,
        n_trunc,
        |i, j| v[i] * v[j].conj(),
    )))
}

pub fn fock_state(n: usize, n_trunc: usize) -> DensityMatrix {
    DensityMatrix::basis(n_trunc, n)
}

/// `tr(ρ a)`.
pub fn mean_annihilation(state: &DensityMatrix) -> C64 {
    let m = state.matrix();
    (1..m.nrows())
        .map(|n| m[(n, n - 1)] * (n as f64).sqrt())
        .sum()
}

/// `tr(ρ a†a)`.
pub fn mean_photon_number(state: &DensityMatrix) -> f64 {
    let m = state.matrix();
    (0..m.nrows()).map(|n| n as f64 * m[(n, n)].re).sum()
}

/// Elementwise generator of the diagonal part of the master equation:
/// `-i(E_i - E_j) - λ(i + j)/2` for entry `(i, j)`.
fn diagonal_generator(energies: &[f64], loss: f64) -> CMatrix {
    let n = energies.len();
    CMatrix::from_fn(n, n, |i, j| {
        c(-0.5 * loss * (i + j) as f64, -(energies[i] - energies[j]))
    })
}

/// Jump term `λ a ρ a†`.
fn jump(rho: &CMatrix, sq: &[f64], loss: f64, out: &mut CMatrix) {
    let n = rho.nrows();
    for j in 0..n {
        for i in 0..n {
            out[(i, j)] = if i + 1 < n && j + 1 < n {
                rho[(i + 1, j + 1)] * (loss * sq[i + 1] * sq[j + 1])
            } else {
                C64::new(0.0, 0.0)
            };
        }
    }
}

/// Integrates `ρ̇ = -i[H, ρ] + λ D(a)ρ` with fourth-order Runge-Kutta in
/// the frame of the diagonal part (integrating-factor form): the Kerr
/// phases and the anticommutator decay are applied exactly and only the
/// jump term is stepped. The step is the largest `≤ dt` that divides `t`.
pub fn lindblad_evolve(
    state: &DensityMatrix,
    sign: KerrSign,
    loss: f64,
    t: f64,
    dt: f64,
) -> Result<DensityMatrix> {
    if !(t >= 0.0 && t.is_finite()) || !(dt > 0.0) || !(loss >= 0.0) {
        return Err(SimError::InvalidArgument(format!(
            "lindblad_evolve: t = {t}, dt = {dt}, loss = {loss}"
        )));
    }
    let n = state.dim();
    let energies: Vec<f64> = kerr_energies(n)
        .into_iter()
        .map(|e| e * sign.factor())
        .collect();
    let steps = (t / dt - 1e-9).ceil().max(0.0) as usize;
    if steps == 0 {
        return Ok(state.clone());
    }
    let h = t / steps as f64;
    let gen = diagonal_generator(&energies, loss);
    let full = gen.map(|z| (z * h).exp());
    let half = gen.map(|z| (z * (h / 2.0)).exp());
    let sq: Vec<f64> = (0..=n).map(|k| (k as f64).sqrt()).collect();
    let mut rho = state.matrix().clone();
    let trace0 = rho.trace().re;
    let mut k1 = CMatrix::zeros(n, n);
    let mut k2 = CMatrix::zeros(n, n);
    let mut k3 = CMatrix::zeros(n, n);
    let mut k4 = CMatrix::zeros(n, n);
    let hh = c(h / 2.0, 0.0);
    for step in 0..steps {
        if loss == 0.0 {
            rho.component_mul_assign(&full);
            continue;
        }
        jump(&rho, &sq, loss, &mut k1);
        jump(&(&rho + &k1 * hh).component_mul(&half), &sq, loss, &mut k2);
        jump(&(rho.component_mul(&half) + &k2 * hh), &sq, loss, &mut k3);
        jump(
            &(rho.component_mul(&full) + k3.component_mul(&half) * c(h, 0.0)),
            &sq,
            loss,
            &mut k4,
        );
        rho = (&rho + &k1 * c(h / 6.0, 0.0)).component_mul(&full)
            + (&k2 + &k3).component_mul(&half) * c(h / 3.0, 0.0)
            + &k4 * c(h / 6.0, 0.0);
        let drift = (rho.trace().re - trace0).abs();
        if drift > TRACE_DRIFT_LIMIT || !drift.is_finite() {
            return Err(SimError::Unstable {
                drift,
                time: (step + 1) as f64 * h,
            });
        }
    }
    Ok(DensityMatrix::from_matrix_unchecked(rho))
}

/// States at each of `times` (non-decreasing, starting from time zero) along
/// one trajectory.
pub fn lindblad_trajectory(
    state: &DensityMatrix,
    sign: KerrSign,
    loss: f64,
    times: &[f64],
    dt: f64,
) -> Result<Vec<DensityMatrix>> {
    let mut out = Vec::with_capacity(times.len());
    let mut current = state.clone();
    let mut now = 0.0;
    for &t in times {
        if t < now {
            return Err(SimError::InvalidArgument(
                "trajectory times must be non-decreasing".into(),
            ));
        }
        current = lindblad_evolve(&current, sign, loss, t - now, dt)?;
        now = t;
        out.push(current.clone());
    }
    Ok(out)
}

/// Fiducial evolution: `+H_kerr` for `t₀/2`, then `-H_kerr` for `t₀/2`, with
/// loss active throughout. Without loss this is the identity.
pub fn cv_fiducial_evolve(
    state: &DensityMatrix,
    t0: f64,
    loss: f64,
    dt: f64,
) -> Result<DensityMatrix> {
    if t0 < 0.0 {
        return Err(SimError::InvalidArgument(format!(
            "fiducial time {t0} is negative"
        )));
    }
    let half = lindblad_evolve(state, KerrSign::Forward, loss, t0 / 2.0, dt)?;
    lindblad_evolve(&half, KerrSign::Reverse, loss, t0 / 2.0, dt)
}

/// Square phase-space window sampled at `points` values per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            min: -4.0,
            max: 4.0,
            points: 48,
        }
    }
}

impl GridSpec {
    pub fn axis(&self) -> Vec<f64> {
        let step = self.step();
        (0..self.points)
            .map(|k| self.min + k as f64 * step)
            .collect()
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.points - 1) as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.step() * self.step()
    }
}

/// Wigner function values, row-major with `x` as the row index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerGrid {
    pub grid: GridSpec,
    pub n_trunc: usize,
    pub values: Vec<f64>,
}

impl WignerGrid {
    pub fn at(&self, ix: usize, ip: usize) -> f64 {
        self.values[ix * self.grid.points + ip]
    }

    /// `Σ W ΔxΔp`.
    pub fn normalization(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_area()
    }
}

/// Wigner function from the Laguerre expansion of the displaced parity.
pub fn wigner(state: &DensityMatrix, grid: &GridSpec) -> Result<WignerGrid> {
    if grid.points < 2 || !(grid.max > grid.min) {
        return Err(SimError::InvalidArgument(
            "Wigner grid needs at least two points and max > min".into(),
        ));
    }
    let rho = state.matrix();
    let n = rho.nrows();
    // sqrt(m!/n!) for n ≥ m via log-factorials
    let lf: Vec<f64> = (0..=n)
        .scan(0.0, |acc, k| {
            if k > 0 {
                *acc += (k as f64).ln();
            }
            Some(*acc)
        })
        .collect();
    let axis = grid.axis();
    let values: Vec<f64> = axis
        .par_iter()
        .flat_map_iter(|&x| {
            let lf = &lf;
            axis.iter().map(move |&p| {
                let a = c(x, p) / 2f64.sqrt();
                let r2 = 4.0 * a.norm_sqr();
                let two_a = a * 2.0;
                let mut total = 0.0;
                for m in 0..n {
                    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                    // L_m^{(k)}(r2) for k = 0..n-1-m built from the upward recurrence in degree
                    let mut pow = c(1.0, 0.0);
                    for k in 0..n - m {
                        let lag = laguerre(m, k as f64, r2);
                        let coeff = sign * (0.5 * (lf[m] - lf[m + k])).exp() * lag;
                        if k == 0 {
                            total += coeff * rho[(m, m)].re;
                        } else {
                            total += 2.0 * coeff * (rho[(m, m + k)] * pow).re;
                        }
                        pow *= two_a;
                    }
                }
                total * (-0.5 * r2).exp() / PI
            })
        })
        .collect();
    Ok(WignerGrid {
        grid: *grid,
        n_trunc: n,
        values,
    })
}

/// Generalized Laguerre polynomial `L_n^{(k)}(x)` by three-term recurrence.
pub fn laguerre(n: usize, k: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + k - x;
    for j in 1..n {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + k - x) * cur - (jf + k) * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `2π Σ W₁ W₂ ΔxΔp`, the grid estimate of `tr(ρσ)`.
pub fn wigner_overlap(a: &WignerGrid, b: &WignerGrid) -> Result<f64> {
    overlap_values(&a.values, &b.values, &a.grid).and_then(|v| {
        if a.grid != b.grid {
            Err(SimError::InvalidArgument("Wigner grids differ".into()))
        } else {
            Ok(v)
        }
    })
}

pub fn overlap_values(a: &[f64], b: &[f64], grid: &GridSpec) -> Result<f64> {
    if a.len() != b.len() || a.len() != grid.points * grid.points {
        return Err(SimError::DimensionMismatch {
            expected: grid.points * grid.points,
            got: a.len().min(b.len()),
        });
    }
    Ok(2.0 * PI * grid.cell_area() * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>())
}

/// Overlap normalized by the larger of the two grid purities; equals the
/// raw overlap when one state is pure.
pub fn normalized_overlap(a: &[f64], b: &[f64], grid: &GridSpec) -> Result<f64> {
    let ab = overlap_values(a, b, grid)?;
    let aa = overlap_values(a, a, grid)?;
    let bb = overlap_values(b, b, grid)?;
    let denom = aa.max(bb);
    if denom <= 0.0 {
        return Ok(0.0);
    }
    Ok(ab / denom)
}

/// Parameters of the Kerr experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KerrSetup {
    pub alpha: f64,
    pub n_trunc: usize,
    pub dt: f64,
    pub grid: GridSpec,
}

impl Default for KerrSetup {
    fn default() -> Self {
        Self {
            alpha: 1.5,
            n_trunc: DEFAULT_TRUNCATION,
            dt: DEFAULT_DT,
            grid: GridSpec::default(),
        }
    }
}

/// `k · step` for `k = 0..count`, rounded to kill accumulation error.
pub fn time_grid(step: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| ((k as f64 * step) * 1e12).round() / 1e12)
        .collect()
}

/// Noise-awareness samples: intermediate states of the noisy Kerr evolution
/// at loss `record_loss` and `record_times` are each pushed through the
/// fiducial process of duration `t₀ ∈ fiducial_times` at every level. The
/// tag `g` is `t₀`; the label is the Wigner function of the input itself.
pub fn cv_noise_awareness(
    setup: &KerrSetup,
    record_loss: f64,
    record_times: &[f64],
    fiducial_times: &[f64],
    levels: &NoiseLevelGrid,
) -> Result<Vec<DatasetSample>> {
    let start = coherent_state(c(setup.alpha, 0.0), setup.n_trunc)?;
    let inputs = lindblad_trajectory(
        &start,
        KerrSign::Forward,
        record_loss,
        record_times,
        setup.dt,
    )?;
    let jobs: Vec<(usize, usize)> = (0..inputs.len())
        .flat_map(|i| (0..fiducial_times.len()).map(move |j| (i, j)))
        .collect();
    let samples: Vec<DatasetSample> = jobs
        .par_iter()
        .map(|&(i, j)| {
            let t0 = fiducial_times[j];
            let p = levels
                .levels
                .iter()
                .map(|&l| {
                    Ok(wigner(
                        &cv_fiducial_evolve(&inputs[i], t0, l, setup.dt)?,
                        &setup.grid,
                    )?
                    .values)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(DatasetSample {
                id: 0,
                g: t0,
                observable: vec![1.0],
                p,
                p0: wigner(&inputs[i], &setup.grid)?.values,
            })
        })
        .collect::<Result<_>>()?;
    Ok(number(samples))
}

/// Error-mitigation samples: the coherent state evolved under `H_kerr` for
/// each of `times` at every loss level, labelled with the lossless state.
pub fn cv_error_mitigation(
    setup: &KerrSetup,
    times: &[f64],
    levels: &NoiseLevelGrid,
) -> Result<Vec<DatasetSample>> {
    let start = coherent_state(c(setup.alpha, 0.0), setup.n_trunc)?;
    let mut all_levels = vec![0.0];
    all_levels.extend(&levels.levels);
    let trajectories: Vec<Vec<DensityMatrix>> = all_levels
        .par_iter()
        .map(|&l| lindblad_trajectory(&start, KerrSign::Forward, l, times, setup.dt))
        .collect::<Result<_>>()?;
    let samples: Vec<DatasetSample> = (0..times.len())
        .into_par_iter()
        .map(|k| {
            let p = trajectories[1..]
                .iter()
                .map(|traj| Ok(wigner(&traj[k], &setup.grid)?.values))
                .collect::<Result<Vec<_>>>()?;
            Ok(DatasetSample {
                id: 0,
                g: times[k],
                observable: vec![1.0],
                p,
                p0: wigner(&trajectories[0][k], &setup.grid)?.values,
            })
        })
        .collect::<Result<_>>()?;
    Ok(number(samples))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laguerre_low_orders() {
        let x = 0.7;
        assert!((laguerre(1, 0.0, x) - (1.0 - x)).abs() < 1e-14);
        assert!((laguerre(2, 0.0, x) - (x * x - 4.0 * x + 2.0) / 2.0).abs() < 1e-14);
        assert!((laguerre(2, 1.0, x) - (x * x / 2.0 - 3.0 * x + 3.0)).abs() < 1e-14);
    }

    #[test]
    fn zero_time_is_identity() {
        let s = coherent_state(c(1.0, 0.5), 10).unwrap();
        assert_eq!(
            lindblad_evolve(&s, KerrSign::Forward, 0.7, 0.0, 1e-3).unwrap(),
            s
        );
        assert_eq!(cv_fiducial_evolve(&s, 0.0, 0.7, 1e-3).unwrap(), s);
    }

    #[test]
    fn coherent_wigner_is_displaced_gaussian() {
        let alpha = c(0.8, -0.6);
        let grid = GridSpec {
            min: -3.0,
            max: 3.0,
            points: 13,
        };
        let w = wigner(&coherent_state(alpha, 30).unwrap(), &grid).unwrap();
        let (x0, p0) = (2f64.sqrt() * alpha.re, 2f64.sqrt() * alpha.im);
        let axis = grid.axis();
        for (ix, &x) in axis.iter().enumerate() {
            for (ip, &p) in axis.iter().enumerate() {
                let exact = (-(x - x0).powi(2) - (p - p0).powi(2)).exp() / PI;
                assert!((w.at(ix, ip) - exact).abs() < 1e-9, "{x} {p}");
            }
        }
    }
}
