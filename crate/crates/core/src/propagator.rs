//! Dense single-step kernels `U_jk = w A exp(i S(x_j, x_k) / ħ)` on a grid,
//! where `w` is the cell volume, `x_j` the later and `x_k` the earlier
//! position.
//!
//! The amplitude `A` is either the continuum free-propagator value
//! `e^{-iπ/4} sqrt(m / 2πħτ)` (per dimension) or calibrated by minimizing the
//! unitarity deviation `‖U U† - I‖∞` over `|A|`.
//!
//! At the lattice time step `τ* = m Δx L / 2πħ` the kinetic phase
//! `m (x_j - x_k)² / 2ħτ` becomes `π (j - k)² / N`, a quadratic Gauss sum
//! kernel that is unitary to roundoff. Potentials enter the standard action
//! as diagonal phases on both sides and leave that exactness intact.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::action::{ActionModel, GaugeFunction};
use crate::grid::{self, SpatialGrid, WaveState};
use crate::roots::golden_section_min;
use crate::{Error, Result};

pub const MAX_POINTS_1D: usize = 1024;
pub const MAX_POINTS_PER_AXIS_2D: usize = 48;
pub const MAX_PATHSUM_POINTS: usize = 64;

/// Number of equally spaced magnitudes scanned before refining.
const CALIBRATION_SCAN: usize = 41;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeMode {
    Analytic,
    Calibrated,
}

/// The time step at which the free lattice kernel is an exact unitary:
/// `τ* = m Δx L / (2πħ)`. Computed from the first axis; on two-dimensional
/// grids exactness needs `Δx L` equal on both axes.
pub fn magic_time_step(grid: &SpatialGrid, mass: f64, hbar: f64) -> f64 {
    let axis = grid.axis(0);
    mass * axis.spacing * axis.extent() / (2.0 * PI * hbar)
}

/// `(e^{-iπ/4} sqrt(m / 2πħτ))^d`.
pub fn analytic_amplitude(model: &ActionModel) -> Complex64 {
    let c = model.constants;
    let per_axis = Complex64::from_polar((c.mass / (2.0 * PI * c.hbar * c.time_step)).sqrt(), -PI / 4.0);
    per_axis.powu(model.dimension() as u32)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Calibration {
    /// `(|A|, deviation)` on the coarse scan.
    pub scanned: Vec<(f64, f64)>,
    pub magnitude: f64,
}

#[derive(Clone, Debug)]
pub struct PropagatorKernel {
    grid: SpatialGrid,
    model: ActionModel,
    amplitude: Complex64,
    matrix: DMatrix<Complex64>,
    unitarity_deviation: f64,
    calibration: Option<Calibration>,
}

impl PropagatorKernel {
    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn model(&self) -> &ActionModel {
        &self.model
    }

    pub fn amplitude(&self) -> Complex64 {
        self.amplitude
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn unitarity_deviation(&self) -> f64 {
        self.unitarity_deviation
    }

    pub fn calibration(&self) -> Option<&Calibration> {
        self.calibration.as_ref()
    }

    /// `w |A|`, the magnitude shared by every matrix entry.
    pub fn entry_magnitude(&self) -> f64 {
        self.grid.cell_volume() * self.amplitude.norm()
    }

    /// Kernel of the reversed step, `U†`.
    pub fn adjoint(&self) -> PropagatorKernel {
        PropagatorKernel {
            matrix: self.matrix.adjoint(),
            calibration: None,
            ..self.clone()
        }
    }
}

fn check_size(grid: &SpatialGrid) -> Result<()> {
    match grid.axes() {
        [a] if a.n_points > MAX_POINTS_1D => Err(Error::SizeLimit(format!(
            "{} points exceeds the dense 1D limit of {MAX_POINTS_1D}",
            a.n_points
        ))),
        [a, b] if a.n_points.max(b.n_points) > MAX_POINTS_PER_AXIS_2D => Err(Error::SizeLimit(format!(
            "{}x{} exceeds the dense 2D limit of {MAX_POINTS_PER_AXIS_2D} per axis",
            a.n_points, b.n_points
        ))),
        _ => Ok(()),
    }
}

/// Row-major `exp(i S(x_j, x_k) / ħ)`.
fn phase_rows(grid: &SpatialGrid, model: &ActionModel) -> Result<Vec<Complex64>> {
    let n = grid.len();
    let d = grid.dimension();
    let coords = grid.coordinate_table();
    let hbar = model.constants.hbar;
    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let x = &coords[j * d..(j + 1) * d];
            (0..n)
                .map(|k| {
                    let y = &coords[k * d..(k + 1) * d];
                    Complex64::from_polar(1.0, model.value(x, y) / hbar)
                })
                .collect()
        })
        .collect();
    let flat: Vec<Complex64> = rows.into_iter().flatten().collect();
    if let Some(bad) = flat.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Evaluation {
            x: grid.coordinates(bad / n),
            y: grid.coordinates(bad % n),
        });
    }
    Ok(flat)
}

/// `G = M M†` for a row-major square matrix, computed row-parallel.
fn gram_rows(rows: &[Complex64], n: usize) -> Vec<Complex64> {
    let out: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let rj = &rows[j * n..(j + 1) * n];
            (0..n)
                .map(|l| {
                    let rl = &rows[l * n..(l + 1) * n];
                    rj.iter().zip(rl).map(|(a, b)| a * b.conj()).sum()
                })
                .collect()
        })
        .collect();
    out.into_iter().flatten().collect()
}

/// `max_j Σ_l |scale G_jl - δ_jl|`.
fn deviation_from_gram(gram: &[Complex64], n: usize, scale: f64) -> f64 {
    (0..n)
        .map(|j| {
            (0..n)
                .map(|l| {
                    let delta = if j == l { 1.0 } else { 0.0 };
                    (gram[j * n + l] * scale - delta).norm()
                })
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

fn row_major(matrix: &DMatrix<Complex64>) -> Vec<Complex64> {
    matrix.transpose().as_slice().to_vec()
}

/// `‖U U† - I‖∞`, the maximum absolute row sum.
pub fn unitarity_deviation(matrix: &DMatrix<Complex64>) -> f64 {
    let n = matrix.nrows();
    deviation_from_gram(&gram_rows(&row_major(matrix), n), n, 1.0)
}

/// Builds the single-step kernel for `model` on `grid`.
pub fn build_kernel(grid: &SpatialGrid, model: &ActionModel, mode: AmplitudeMode) -> Result<PropagatorKernel> {
    check_size(grid)?;
    if grid.dimension() != model.dimension() {
        return Err(Error::InvalidParameter(format!(
            "{}-dimensional action on a {}-dimensional grid",
            model.dimension(),
            grid.dimension()
        )));
    }
    if mode == AmplitudeMode::Analytic && !model.is_standard_family() {
        return Err(Error::UnsupportedAction {
            kind: model.kind.name(),
            operation: "analytic amplitude",
        });
    }

    let n = grid.len();
    let w = grid.cell_volume();
    let phases = phase_rows(grid, model)?;
    let analytic = analytic_amplitude(model);

    let (amplitude, calibration) = match mode {
        AmplitudeMode::Analytic => (analytic, None),
        AmplitudeMode::Calibrated => {
            let gram = gram_rows(&phases, n);
            let deviation = |magnitude: f64| deviation_from_gram(&gram, n, (w * magnitude).powi(2));
            let calibration = calibrate(analytic.norm(), deviation)?;
            let amplitude = Complex64::from_polar(calibration.magnitude, analytic.arg());
            (amplitude, Some(calibration))
        }
    };

    let scale = amplitude * w;
    let matrix = DMatrix::from_row_iterator(n, n, phases.into_iter().map(|z| z * scale));
    let unitarity_deviation = unitarity_deviation(&matrix);
    Ok(PropagatorKernel {
        grid: grid.clone(),
        model: *model,
        amplitude,
        matrix,
        unitarity_deviation,
        calibration,
    })
}

/// Scans `|A|` over `center ± 50%`, then refines the interior minimum by
/// golden-section search between the neighbouring scan points.
fn calibrate(center: f64, deviation: impl Fn(f64) -> f64) -> Result<Calibration> {
    let lo = 0.5 * center;
    let hi = 1.5 * center;
    let scanned: Vec<(f64, f64)> = (0..CALIBRATION_SCAN)
        .map(|i| {
            let a = lo + (hi - lo) * i as f64 / (CALIBRATION_SCAN - 1) as f64;
            (a, deviation(a))
        })
        .collect();
    let best = scanned
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    if best == 0 || best == CALIBRATION_SCAN - 1 {
        return Err(Error::CalibrationFailed { scanned });
    }
    let (magnitude, _) = golden_section_min(&deviation, scanned[best - 1].0, scanned[best + 1].0, 1e-13 * center);
    Ok(Calibration { scanned, magnitude })
}

fn require_same_grid(kernel: &PropagatorKernel, psi: &WaveState) -> Result<()> {
    if kernel.grid != *psi.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

fn apply(matrix: &DMatrix<Complex64>, psi: &WaveState) -> WaveState {
    let v = DVector::from_column_slice(psi.amplitudes());
    let out = matrix * v;
    psi.with_amplitudes(out.as_slice().to_vec())
}

/// One time step, `ψ' = U ψ`.
pub fn evolve(kernel: &PropagatorKernel, psi: &WaveState) -> Result<WaveState> {
    require_same_grid(kernel, psi)?;
    Ok(apply(&kernel.matrix, psi))
}

/// One reversed step, `ψ' = U† ψ`.
pub fn evolve_adjoint(kernel: &PropagatorKernel, psi: &WaveState) -> Result<WaveState> {
    require_same_grid(kernel, psi)?;
    Ok(apply(&kernel.matrix.adjoint(), psi))
}

/// `(U^k)_{final, initial}` by explicit summation over every intermediate
/// path with the additive action `Σ S(x_{n+1}, x_n)`, independent of the
/// matrix product.
pub fn multi_step_pathsum(
    kernel: &PropagatorKernel,
    k_steps: usize,
    initial_index: usize,
    final_index: usize,
) -> Result<Complex64> {
    let grid = &kernel.grid;
    let n = grid.len();
    if n > MAX_PATHSUM_POINTS {
        return Err(Error::SizeLimit(format!(
            "path sum needs at most {MAX_PATHSUM_POINTS} points, got {n}"
        )));
    }
    if !(1..=3).contains(&k_steps) {
        return Err(Error::SizeLimit(format!("path sum supports 1 to 3 steps, got {k_steps}")));
    }
    if initial_index >= n || final_index >= n {
        return Err(Error::InvalidParameter("lattice index out of range".into()));
    }

    let d = grid.dimension();
    let coords = grid.coordinate_table();
    let at = |j: usize| &coords[j * d..(j + 1) * d];
    let model = &kernel.model;
    let hbar = model.constants.hbar;

    let intermediates = k_steps - 1;
    let n_paths = n.pow(intermediates as u32);
    let mut path = vec![0usize; k_steps + 1];
    path[0] = initial_index;
    path[k_steps] = final_index;
    let mut sum = Complex64::new(0.0, 0.0);
    for mut code in 0..n_paths {
        for slot in path.iter_mut().take(k_steps).skip(1) {
            *slot = code % n;
            code /= n;
        }
        let action: f64 = path.windows(2).map(|w| model.value(at(w[1]), at(w[0]))).sum();
        sum += Complex64::from_polar(1.0, action / hbar);
    }
    Ok(sum * (kernel.amplitude * grid.cell_volume()).powu(k_steps as u32))
}

/// `‖D ψ + sign·P ψ‖ / ‖P ψ‖` with `D = U† W`, `W_lk = ∂S(x_l, x_k)/∂y · U_lk`,
/// and `P` the central-difference momentum. With `sign = +1` this measures
/// the identity `U† (∂S/∂y) U = -p`.
pub fn momentum_identity_residual_signed(kernel: &PropagatorKernel, psi: &WaveState, sign: f64) -> Result<f64> {
    require_same_grid(kernel, psi)?;
    if kernel.grid.dimension() != 1 {
        return Err(Error::UnsupportedAction {
            kind: kernel.model.kind.name(),
            operation: "momentum identity on a 2D grid",
        });
    }
    let n = kernel.grid.len();
    let points = kernel.grid.axis(0).points();
    let model = &kernel.model;
    let u = &kernel.matrix;
    let w_matrix = DMatrix::from_fn(n, n, |l, k| u[(l, k)] * model.d_y_1d(points[l], points[k]));
    let v = DVector::from_column_slice(psi.amplitudes());
    let d_psi = u.adjoint() * (w_matrix * v);
    let p_psi = DVector::from_vec(grid::apply_momentum(psi, 0, model.constants.hbar));
    Ok((d_psi + &p_psi * Complex64::from(sign)).norm() / p_psi.norm())
}

pub fn momentum_identity_residual(kernel: &PropagatorKernel, psi: &WaveState) -> Result<f64> {
    momentum_identity_residual_signed(kernel, psi, 1.0)
}

/// Diagonal of `Φ = diag(exp(i φ(x_j) / ħ))`; the gauged kernel is `Φ U Φ†`.
pub fn gauge_factor(grid: &SpatialGrid, phi: GaugeFunction, hbar: f64) -> Vec<Complex64> {
    grid::sample_field(grid, |x| x.iter().map(|&xi| phi.value(xi)).sum())
        .into_iter()
        .map(|f| Complex64::from_polar(1.0, f / hbar))
        .collect()
}

/// Extreme singular values of the kernel, from the eigenvalues of `U U†`.
pub fn singular_value_range(kernel: &PropagatorKernel) -> (f64, f64) {
    let gram = &kernel.matrix * kernel.matrix.adjoint();
    let eig = SymmetricEigen::new(gram).eigenvalues;
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min).max(0.0).sqrt();
    let max = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max).max(0.0).sqrt();
    (min, max)
}

/// Serializable diagnostics for one kernel.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelSummary {
    pub n_points: usize,
    pub dimension: usize,
    pub action: &'static str,
    pub time_step: f64,
    pub magic_time_step: f64,
    pub amplitude_re: f64,
    pub amplitude_im: f64,
    pub amplitude_magnitude: f64,
    pub analytic_magnitude: f64,
    pub entry_magnitude: f64,
    pub unitarity_deviation: f64,
    pub singular_values: Option<(f64, f64)>,
    pub calibration_scan: Option<Vec<(f64, f64)>>,
}

pub fn summarize(kernel: &PropagatorKernel, with_singular_values: bool) -> KernelSummary {
    let c = kernel.model.constants;
    KernelSummary {
        n_points: kernel.grid.len(),
        dimension: kernel.grid.dimension(),
        action: kernel.model.kind.name(),
        time_step: c.time_step,
        magic_time_step: magic_time_step(&kernel.grid, c.mass, c.hbar),
        amplitude_re: kernel.amplitude.re,
        amplitude_im: kernel.amplitude.im,
        amplitude_magnitude: kernel.amplitude.norm(),
        analytic_magnitude: analytic_amplitude(&kernel.model).norm(),
        entry_magnitude: kernel.entry_magnitude(),
        unitarity_deviation: kernel.unitarity_deviation,
        singular_values: with_singular_values.then(|| singular_value_range(kernel)),
        calibration_scan: kernel.calibration.as_ref().map(|c| c.scanned.clone()),
    }
}
