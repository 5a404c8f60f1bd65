//! Periodic position lattices and wavefunctions sampled on them.
//!
//! A [`SpatialGrid`] is one uniform axis, or the Cartesian product of two.
//! Two-dimensional states are stored row-major over `(x1, x2)` with a single
//! flat index `j1 * n2 + j2`; the propagator indexes kernels the same way.
//!
//! Integrals become sums with weight `Δx` (or `Δx1 Δx2`), and momentum is
//! the central-difference matrix `P_jk = -iħ (δ_{k,j+1} - δ_{k,j-1}) / 2Δx`
//! with periodic wraparound.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::{Error, Result};

/// Construction accuracy for a state labelled normalized.
pub const NORMALIZED_TOL: f64 = 1e-12;

/// Run-time drift allowed before an operation rejects a state as
/// non-normalized.
pub const NORM_PRECONDITION_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Axis {
    pub n_points: usize,
    pub x_min: f64,
    pub spacing: f64,
}

impl Axis {
    pub fn new(n_points: usize, x_min: f64, spacing: f64) -> Result<Self> {
        if n_points < 4 {
            return Err(Error::InvalidGrid(format!(
                "need at least 4 points, got {n_points}"
            )));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "spacing must be positive and finite, got {spacing}"
            )));
        }
        if !x_min.is_finite() {
            return Err(Error::InvalidGrid("x_min must be finite".into()));
        }
        Ok(Self {
            n_points,
            x_min,
            spacing,
        })
    }

    #[inline]
    pub fn point(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.spacing
    }

    /// Periodic extent `L = n Δx`.
    pub fn extent(&self) -> f64 {
        self.n_points as f64 * self.spacing
    }

    /// Last lattice point, `x_min + (n - 1) Δx`.
    pub fn x_max(&self) -> f64 {
        self.point(self.n_points - 1)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.point(j)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpatialGrid {
    axes: Vec<Axis>,
    boundary: Boundary,
}

/// One-dimensional periodic grid with points `x_min + j * spacing`.
pub fn make_grid(n_points: usize, x_min: f64, spacing: f64) -> Result<SpatialGrid> {
    Ok(SpatialGrid {
        axes: vec![Axis::new(n_points, x_min, spacing)?],
        boundary: Boundary::Periodic,
    })
}

/// Cartesian product of two axes.
pub fn make_grid_2d(first: Axis, second: Axis) -> Result<SpatialGrid> {
    let first = Axis::new(first.n_points, first.x_min, first.spacing)?;
    let second = Axis::new(second.n_points, second.x_min, second.spacing)?;
    Ok(SpatialGrid {
        axes: vec![first, second],
        boundary: Boundary::Periodic,
    })
}

impl SpatialGrid {
    pub fn dimension(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, index: usize) -> &Axis {
        &self.axes[index]
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Total number of lattice sites.
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.n_points).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Quadrature weight of one site.
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.spacing).product()
    }

    /// Coordinates of the site with the given flat index.
    pub fn coordinates(&self, flat: usize) -> Vec<f64> {
        match self.axes.as_slice() {
            [a] => vec![a.point(flat)],
            [a, b] => vec![a.point(flat / b.n_points), b.point(flat % b.n_points)],
            _ => unreachable!("grids are one- or two-dimensional"),
        }
    }

    /// All site coordinates, flattened with stride `dimension()`.
    pub fn coordinate_table(&self) -> Vec<f64> {
        (0..self.len()).flat_map(|j| self.coordinates(j)).collect()
    }

    /// Flat-index stride of neighbours along `axis`.
    fn stride(&self, axis: usize) -> usize {
        self.axes[axis + 1..].iter().map(|a| a.n_points).product()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "warning", rename_all = "snake_case")]
pub enum PacketWarning {
    /// Packet width is below two lattice spacings.
    Unresolved { width: f64, spacing: f64 },
    /// Packet width exceeds one eighth of the periodic extent.
    BoundaryUnsafe { width: f64, limit: f64 },
}

/// Complex amplitudes over a grid, the position representation of a ket.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveState {
    grid: SpatialGrid,
    amplitudes: Vec<Complex64>,
    warnings: Vec<PacketWarning>,
}

impl WaveState {
    pub fn new(grid: SpatialGrid, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} amplitudes, got {}",
                grid.len(),
                amplitudes.len()
            )));
        }
        Ok(Self {
            grid,
            amplitudes,
            warnings: Vec::new(),
        })
    }

    pub fn zeros(grid: SpatialGrid) -> Self {
        let amplitudes = vec![Complex64::new(0.0, 0.0); grid.len()];
        Self {
            grid,
            amplitudes,
            warnings: Vec::new(),
        }
    }

    /// Real-valued state from samples of `f` at every site.
    pub fn from_fn(grid: SpatialGrid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let amplitudes = (0..grid.len()).map(|j| f(&grid.coordinates(j))).collect();
        Self {
            grid,
            amplitudes,
            warnings: Vec::new(),
        }
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn warnings(&self) -> &[PacketWarning] {
        &self.warnings
    }

    pub fn norm_squared(&self) -> f64 {
        self.grid.cell_volume() * self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() < NORMALIZED_TOL
    }

    pub fn normalized(mut self) -> Result<Self> {
        let norm = self.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NotNormalized { norm });
        }
        let inv = 1.0 / norm;
        self.amplitudes.iter_mut().for_each(|a| *a *= inv);
        Ok(self)
    }

    /// Same grid, new amplitudes; warnings are dropped.
    pub(crate) fn with_amplitudes(&self, amplitudes: Vec<Complex64>) -> Self {
        debug_assert_eq!(amplitudes.len(), self.amplitudes.len());
        Self {
            grid: self.grid.clone(),
            amplitudes,
            warnings: Vec::new(),
        }
    }

    fn require_normalized(&self) -> Result<()> {
        let norm = self.norm();
        if (norm - 1.0).abs() > NORM_PRECONDITION_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(())
    }
}

/// `⟨a|b⟩ = Σ_j Δx conj(a_j) b_j`.
pub fn inner(a: &WaveState, b: &WaveState) -> Result<Complex64> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    let sum: Complex64 = a
        .amplitudes
        .iter()
        .zip(&b.amplitudes)
        .map(|(x, y)| x.conj() * y)
        .sum();
    Ok(sum * a.grid.cell_volume())
}

/// Mean position along each axis.
pub fn expect_x(psi: &WaveState) -> Result<Vec<f64>> {
    psi.require_normalized()?;
    Ok(position_moments(psi).0)
}

/// Root-mean-square position spread along each axis.
pub fn position_spread(psi: &WaveState) -> Result<Vec<f64>> {
    psi.require_normalized()?;
    let (mean, second) = position_moments(psi);
    Ok(mean
        .iter()
        .zip(second)
        .map(|(m, s)| (s - m * m).max(0.0).sqrt())
        .collect())
}

/// First and second position moments divided by the norm squared.
pub(crate) fn position_moments(psi: &WaveState) -> (Vec<f64>, Vec<f64>) {
    let grid = &psi.grid;
    let dim = grid.dimension();
    let mut total = 0.0;
    let mut first = vec![0.0; dim];
    let mut second = vec![0.0; dim];
    for (j, a) in psi.amplitudes.iter().enumerate() {
        let w = a.norm_sqr();
        total += w;
        for (d, x) in grid.coordinates(j).into_iter().enumerate() {
            first[d] += w * x;
            second[d] += w * x * x;
        }
    }
    for d in 0..dim {
        first[d] /= total;
        second[d] /= total;
    }
    (first, second)
}

/// `P ψ` along `axis`, central differences with periodic wraparound.
pub fn apply_momentum(psi: &WaveState, axis: usize, hbar: f64) -> Vec<Complex64> {
    let grid = &psi.grid;
    let ax = grid.axis(axis);
    let n = ax.n_points;
    let stride = grid.stride(axis);
    let coef = Complex64::new(0.0, -hbar / (2.0 * ax.spacing));
    let amps = &psi.amplitudes;
    (0..amps.len())
        .map(|flat| {
            let j = (flat / stride) % n;
            let base = flat - j * stride;
            let up = base + ((j + 1) % n) * stride;
            let down = base + ((j + n - 1) % n) * stride;
            coef * (amps[up] - amps[down])
        })
        .collect()
}

/// Dense central-difference momentum matrix for a single axis.
pub fn momentum_matrix(axis: &Axis, hbar: f64) -> DMatrix<Complex64> {
    let n = axis.n_points;
    let coef = Complex64::new(0.0, -hbar / (2.0 * axis.spacing));
    let mut p = DMatrix::zeros(n, n);
    for j in 0..n {
        p[(j, (j + 1) % n)] += coef;
        p[(j, (j + n - 1) % n)] -= coef;
    }
    p
}

/// `⟨ψ|P|ψ⟩` along each axis. The imaginary part vanishes because `P` is
/// Hermitian; only the real part is returned.
pub fn expect_p(psi: &WaveState, hbar: f64) -> Result<Vec<f64>> {
    let w = psi.grid.cell_volume();
    let norm2 = psi.norm_squared();
    Ok((0..psi.grid.dimension())
        .map(|axis| {
            let p_psi = apply_momentum(psi, axis, hbar);
            let value: Complex64 = psi
                .amplitudes
                .iter()
                .zip(&p_psi)
                .map(|(a, b)| a.conj() * b)
                .sum();
            w * value.re / norm2
        })
        .collect())
}

/// `sqrt(⟨P²⟩ - ⟨P⟩²)` along each axis with `⟨P²⟩ = ‖Pψ‖²`.
pub fn momentum_spread(psi: &WaveState, hbar: f64) -> Result<Vec<f64>> {
    psi.require_normalized()?;
    let mean = expect_p(psi, hbar)?;
    let w = psi.grid.cell_volume();
    Ok((0..psi.grid.dimension())
        .map(|axis| {
            let p_psi = apply_momentum(psi, axis, hbar);
            let second = w * p_psi.iter().map(|a| a.norm_sqr()).sum::<f64>();
            (second - mean[axis] * mean[axis]).max(0.0).sqrt()
        })
        .collect())
}

/// Minimum-uncertainty packet with position spread `σ = α sqrt(ħ/2)` and
/// momentum spread `sqrt(ħ/2) / α`, centred at `x0` with mean momentum `p0`.
pub fn make_gaussian(
    grid: &SpatialGrid,
    x0: f64,
    p0: f64,
    alpha: f64,
    hbar: f64,
) -> Result<WaveState> {
    if grid.dimension() != 1 {
        return Err(Error::InvalidParameter(
            "make_gaussian needs a one-dimensional grid; use make_gaussian_2d".into(),
        ));
    }
    make_gaussian_nd(grid, &[x0], &[p0], alpha, hbar)
}

/// Product of two one-dimensional packets on a two-dimensional grid.
pub fn make_gaussian_2d(
    grid: &SpatialGrid,
    x0: [f64; 2],
    p0: [f64; 2],
    alpha: f64,
    hbar: f64,
) -> Result<WaveState> {
    if grid.dimension() != 2 {
        return Err(Error::InvalidParameter(
            "make_gaussian_2d needs a two-dimensional grid".into(),
        ));
    }
    make_gaussian_nd(grid, &x0, &p0, alpha, hbar)
}

fn make_gaussian_nd(
    grid: &SpatialGrid,
    x0: &[f64],
    p0: &[f64],
    alpha: f64,
    hbar: f64,
) -> Result<WaveState> {
    if !(alpha > 0.0 && hbar > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha and hbar must be positive (alpha = {alpha}, hbar = {hbar})"
        )));
    }
    let sigma = alpha * (hbar / 2.0).sqrt();
    let mut state = WaveState::from_fn(grid.clone(), |x| {
        let mut exponent = Complex64::new(0.0, 0.0);
        for d in 0..x.len() {
            let dx = x[d] - x0[d];
            exponent += Complex64::new(-dx * dx / (4.0 * sigma * sigma), p0[d] * x[d] / hbar);
        }
        exponent.exp()
    })
    .normalized()?;

    for ax in grid.axes() {
        if sigma < 2.0 * ax.spacing {
            state.warnings.push(PacketWarning::Unresolved {
                width: sigma,
                spacing: ax.spacing,
            });
        }
        let limit = ax.extent() / 8.0;
        if sigma > limit {
            state.warnings.push(PacketWarning::BoundaryUnsafe {
                width: sigma,
                limit,
            });
        }
    }
    Ok(state)
}

/// Samples a scalar field at every grid site.
pub fn sample_field(grid: &SpatialGrid, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    (0..grid.len()).map(|j| f(&grid.coordinates(j))).collect()
}

/// Position-dependent phase redefinition `ψ_j → exp(-i φ_j / ħ) ψ_j`.
pub fn apply_gauge_phase(psi: &WaveState, phi: &[f64], hbar: f64) -> Result<WaveState> {
    if phi.len() != psi.amplitudes.len() {
        return Err(Error::GridMismatch);
    }
    if let Some(bad) = phi.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "gauge field is not finite at site {bad}"
        )));
    }
    let amplitudes = psi
        .amplitudes
        .iter()
        .zip(phi)
        .map(|(a, &f)| a * Complex64::from_polar(1.0, -f / hbar))
        .collect();
    Ok(psi.with_amplitudes(amplitudes))
}
