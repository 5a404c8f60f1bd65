//! Quantum-classical correspondence experiments.
//!
//! A Gaussian packet with `⟨x⟩ = x_0`, `⟨p⟩ = p_0` is evolved by the
//! single-step kernel while the classical recursion runs from `(x_0, x_{-1})`,
//! with `x_{-1}` recovered from `p_0` through the momentum map. For quadratic
//! potentials the means track the classical trajectory exactly (up to the
//! lattice); for anharmonic ones the gap closes as ħ → 0.

use std::cmp::Ordering;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::action::{
    gauged_action, standard_action, ActionModel, GaugeFunction, PhysicalConstants, Potential,
};
use crate::classical::{integrate, seed_previous, ClassicalTrajectory, SolverOptions};
use crate::grid::{self, make_grid, SpatialGrid, WaveState};
use crate::propagator::{build_kernel, evolve, AmplitudeMode, MAX_POINTS_1D};
use crate::{Error, Result};

/// Consecutive sweep deviations may grow by at most this much.
pub const MONOTONE_SLACK: f64 = 1e-6;

/// Packet envelope half-width in units of the initial spread.
pub const ENVELOPE_SIGMAS: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct PacketParams {
    pub x0: f64,
    pub p0: f64,
    pub alpha: f64,
}

impl PacketParams {
    /// `σ = α sqrt(ħ/2)`.
    pub fn width(&self, hbar: f64) -> f64 {
        self.alpha * (hbar / 2.0).sqrt()
    }
}

/// Per-step observables of one quantum run next to the classical
/// trajectory. All series have `n_steps + 1` entries; classical entries are
/// `None` past a classical failure.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EhrenfestSeries {
    pub hbar: f64,
    pub unitarity_deviation: f64,
    pub x_mean: Vec<f64>,
    pub p_mean: Vec<f64>,
    pub width: Vec<f64>,
    pub norm: Vec<f64>,
    pub x_classical: Vec<Option<f64>>,
    pub p_classical: Vec<Option<f64>>,
}

impl EhrenfestSeries {
    pub fn len(&self) -> usize {
        self.x_mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_mean.is_empty()
    }

    fn max_gap(quantum: &[f64], classical: &[Option<f64>]) -> Option<f64> {
        quantum
            .iter()
            .zip(classical)
            .map(|(q, c)| c.map(|c| (q - c).abs()))
            .try_fold(0.0, |acc: f64, d| d.map(|d| acc.max(d)))
    }

    /// `max_n |⟨x⟩_n - x_n|`, or `None` if the classical run stopped early.
    pub fn max_position_deviation(&self) -> Option<f64> {
        Self::max_gap(&self.x_mean, &self.x_classical)
    }

    pub fn max_momentum_deviation(&self) -> Option<f64> {
        Self::max_gap(&self.p_mean, &self.p_classical)
    }

    /// `max_n |‖ψ_n‖ - 1|`.
    pub fn max_norm_drift(&self) -> f64 {
        self.norm.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max)
    }
}

fn classical_partner(
    model: &ActionModel,
    packet: &PacketParams,
    n_steps: usize,
) -> Result<Option<ClassicalTrajectory>> {
    if n_steps == 0 {
        return Ok(None);
    }
    let opts = SolverOptions::default();
    let x_prev = seed_previous(model, packet.x0, packet.p0, &opts)?;
    Ok(Some(integrate(model, packet.x0, x_prev, n_steps, &opts)?))
}

/// Rejects runs whose classical trajectory, widened by the packet's
/// envelope, comes within one lattice spacing of either end of the grid.
fn check_boundary(grid: &SpatialGrid, positions: &[f64], envelope: f64) -> Result<()> {
    let axis = grid.axis(0);
    let lo = axis.x_min + axis.spacing;
    let hi = axis.x_max() - axis.spacing;
    match positions
        .iter()
        .position(|&x| x - envelope < lo || x + envelope > hi)
    {
        Some(step) => Err(Error::BoundaryViolation { step }),
        None => Ok(()),
    }
}

/// Evolves a Gaussian packet `n_steps` times and records `⟨x⟩`, `⟨p⟩`, the
/// position spread, and the norm at every step, along with the classical
/// trajectory from the same initial data.
pub fn ehrenfest_run(
    model: &ActionModel,
    grid: &SpatialGrid,
    packet: &PacketParams,
    n_steps: usize,
) -> Result<EhrenfestSeries> {
    if grid.dimension() != 1 || model.dimension() != 1 {
        return Err(Error::InvalidParameter("correspondence runs are one-dimensional".into()));
    }
    let hbar = model.constants.hbar;
    let sigma = packet.width(hbar);
    let classical = classical_partner(model, packet, n_steps)?;
    let classical_x: Vec<f64> = match &classical {
        Some(t) => t.positions.iter().map(|p| p[0]).collect(),
        None => vec![packet.x0],
    };
    check_boundary(grid, &classical_x, ENVELOPE_SIGMAS * sigma)?;

    let mode = if model.is_standard_family() {
        AmplitudeMode::Analytic
    } else {
        AmplitudeMode::Calibrated
    };
    let kernel = build_kernel(grid, model, mode)?;
    let mut psi = grid::make_gaussian(grid, packet.x0, packet.p0, packet.alpha, hbar)?;

    let mut series = EhrenfestSeries {
        hbar,
        unitarity_deviation: kernel.unitarity_deviation(),
        x_mean: Vec::with_capacity(n_steps + 1),
        p_mean: Vec::with_capacity(n_steps + 1),
        width: Vec::with_capacity(n_steps + 1),
        norm: Vec::with_capacity(n_steps + 1),
        x_classical: Vec::with_capacity(n_steps + 1),
        p_classical: Vec::with_capacity(n_steps + 1),
    };
    for n in 0..=n_steps {
        if n > 0 {
            psi = evolve(&kernel, &psi)?;
        }
        record(&mut series, &psi, hbar);
        let (xc, pc) = match &classical {
            Some(t) if n < t.len() => (Some(t.x(n)), Some(t.p(n))),
            Some(_) => (None, None),
            None => (Some(packet.x0), Some(packet.p0)),
        };
        series.x_classical.push(xc);
        series.p_classical.push(pc);
    }
    Ok(series)
}

fn record(series: &mut EhrenfestSeries, psi: &WaveState, hbar: f64) {
    let norm = psi.norm();
    let (mean, second) = grid::position_moments(psi);
    series.x_mean.push(mean[0]);
    series.width.push((second[0] - mean[0] * mean[0]).max(0.0).sqrt());
    series.p_mean.push(grid::expect_p(psi, hbar).map(|p| p[0]).unwrap_or(f64::NAN));
    series.norm.push(norm);
}

/// Parameters of an ħ sweep at fixed classical data and fixed `τ`.
#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct SweepSpec {
    pub mass: f64,
    pub time_step: f64,
    pub potential: Potential,
    /// Strictly descending, at least three values.
    pub hbar_values: Vec<f64>,
    pub packet: PacketParams,
    pub n_steps: usize,
    /// Target periodic extent; the actual extent is re-tuned per ħ.
    pub box_length: f64,
    pub center: f64,
}

/// Grid for which `τ` is exactly the lattice time step `τ*` at this ħ:
/// `N Δx² = 2πħτ/m` with `N` even and `N Δx` close to `box_length`.
pub fn retuned_grid(spec: &SweepSpec, hbar: f64) -> Result<SpatialGrid> {
    let cell = 2.0 * PI * hbar * spec.time_step / spec.mass;
    let target = spec.box_length * spec.box_length / cell;
    let n = ((target / 2.0).round() as usize * 2).max(4);
    if n > MAX_POINTS_1D {
        return Err(Error::SizeLimit(format!(
            "ħ = {hbar} needs {n} points at box length {}",
            spec.box_length
        )));
    }
    let spacing = (cell / n as f64).sqrt();
    make_grid(n, spec.center - 0.5 * n as f64 * spacing, spacing)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRun {
    pub hbar: f64,
    pub n_points: usize,
    pub spacing: f64,
    pub max_deviation: Option<f64>,
    pub max_momentum_deviation: Option<f64>,
    pub unitarity_deviation: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrespondenceReport {
    pub hbar_values: Vec<f64>,
    pub runs: Vec<SweepRun>,
    /// Every consecutive pair satisfies `dev[k+1] <= dev[k] + slack`, and
    /// every run succeeded.
    pub monotone_flag: bool,
    pub finest: Option<EhrenfestSeries>,
}

impl CorrespondenceReport {
    pub fn max_deviation(&self) -> Vec<Option<f64>> {
        self.runs.iter().map(|r| r.max_deviation).collect()
    }
}

/// Runs [`ehrenfest_run`] with the standard action for each ħ and compares
/// against the ħ-independent classical trajectory. Failing runs are
/// recorded and the sweep continues.
pub fn hbar_sweep(spec: &SweepSpec) -> Result<CorrespondenceReport> {
    if spec.hbar_values.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "an ħ sweep needs at least 3 values, got {}",
            spec.hbar_values.len()
        )));
    }
    if spec.hbar_values.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(Ordering::Less)) {
        return Err(Error::InvalidParameter("ħ values must be strictly descending".into()));
    }
    PhysicalConstants::new(spec.mass, spec.time_step, spec.hbar_values[0])?;

    let outcomes: Vec<(SweepRun, Option<EhrenfestSeries>)> = spec
        .hbar_values
        .par_iter()
        .map(|&hbar| run_one(spec, hbar))
        .collect();

    let monotone_flag = outcomes.iter().all(|(r, _)| r.max_deviation.is_some())
        && outcomes.windows(2).all(|w| {
            let (a, b) = (w[0].0.max_deviation.unwrap(), w[1].0.max_deviation.unwrap());
            b <= a + MONOTONE_SLACK
        });
    let finest = outcomes.last().and_then(|(_, s)| s.clone());
    Ok(CorrespondenceReport {
        hbar_values: spec.hbar_values.clone(),
        runs: outcomes.into_iter().map(|(r, _)| r).collect(),
        monotone_flag,
        finest,
    })
}

fn run_one(spec: &SweepSpec, hbar: f64) -> (SweepRun, Option<EhrenfestSeries>) {
    let mut run = SweepRun {
        hbar,
        n_points: 0,
        spacing: 0.0,
        max_deviation: None,
        max_momentum_deviation: None,
        unitarity_deviation: None,
        error: None,
    };
    let result = (|| {
        let grid = retuned_grid(spec, hbar)?;
        run.n_points = grid.len();
        run.spacing = grid.axis(0).spacing;
        let constants = PhysicalConstants::new(spec.mass, spec.time_step, hbar)?;
        let model = standard_action(constants, spec.potential);
        ehrenfest_run(&model, &grid, &spec.packet, spec.n_steps)
    })();
    match result {
        Ok(series) => {
            run.max_deviation = series.max_position_deviation();
            run.max_momentum_deviation = series.max_momentum_deviation();
            run.unitarity_deviation = Some(series.unitarity_deviation);
            (run, Some(series))
        }
        Err(e) => {
            run.error = Some(e.to_string());
            (run, None)
        }
    }
}

/// Evolves a packet under the standard action and a phase-related packet
/// under the gauged action; returns the largest pointwise density
/// difference over all steps.
///
/// With the gauge term `+[φ(x) - φ(y)]` the gauged kernel is `Φ U Φ†`,
/// `Φ = diag(e^{iφ/ħ})`, so the partner state is `Φ ψ`, i.e.
/// [`grid::apply_gauge_phase`] with `-φ`.
pub fn gauge_equivalence_run(
    constants: PhysicalConstants,
    potential: Potential,
    phi: GaugeFunction,
    grid: &SpatialGrid,
    packet: &PacketParams,
    n_steps: usize,
) -> Result<f64> {
    let hbar = constants.hbar;
    let standard = standard_action(constants, potential);
    let gauged = gauged_action(constants, potential, phi);
    if let Some(t) = classical_partner(&standard, packet, n_steps)? {
        let xs: Vec<f64> = t.positions.iter().map(|p| p[0]).collect();
        check_boundary(grid, &xs, ENVELOPE_SIGMAS * packet.width(hbar))?;
    }

    let kernel_a = build_kernel(grid, &standard, AmplitudeMode::Analytic)?;
    let kernel_b = build_kernel(grid, &gauged, AmplitudeMode::Analytic)?;
    let mut psi_a = grid::make_gaussian(grid, packet.x0, packet.p0, packet.alpha, hbar)?;
    let minus_phi = grid::sample_field(grid, |x| -phi.value(x[0]));
    let mut psi_b = grid::apply_gauge_phase(&psi_a, &minus_phi, hbar)?;

    let discrepancy = |a: &WaveState, b: &WaveState| {
        a.amplitudes()
            .iter()
            .zip(b.amplitudes())
            .map(|(x, y)| (x.norm_sqr() - y.norm_sqr()).abs())
            .fold(0.0, f64::max)
    };
    let mut worst = discrepancy(&psi_a, &psi_b);
    for _ in 0..n_steps {
        psi_a = evolve(&kernel_a, &psi_a)?;
        psi_b = evolve(&kernel_b, &psi_b)?;
        worst = worst.max(discrepancy(&psi_a, &psi_b));
    }
    Ok(worst)
}
