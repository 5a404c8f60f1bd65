//! Numerical check of the unitarity criterion `det(∂²S/∂x∂y) = const`.
//!
//! A kernel `A exp(iS/ħ)` can only be unitary (to lowest order in ħ) when the
//! Jacobian of `y ↦ ∇_x S(x, y)` has a constant determinant. The checker
//! samples that determinant on a deterministic stratified grid and reports
//! its spread. For the two-dimensional vector-potential action it also
//! reports the linearized condition `∇_x·∇_y s = 0` on the perturbation.

use rayon::prelude::*;
use serde::Serialize;

use crate::action::{ActionKind, ActionModel, PerturbationDerivatives, VectorPotentialFn};
use crate::{Error, Result};

pub const DEFAULT_SAMPLES: usize = 32 * 32;
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

/// Below this `|mean|` the spread is measured absolutely.
const DEGENERATE_MEAN: f64 = 1e-14;

/// Interval applied to every coordinate of both `x` and `y`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Domain {
    pub lo: f64,
    pub hi: f64,
}

impl Domain {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(hi > lo && lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "degenerate domain [{lo}, {hi}]"
            )));
        }
        Ok(Self { lo, hi })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeterminantStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// `(max - min) / |mean|`, or `max - min` when the mean is degenerate.
    pub relative_spread: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionReport {
    pub samples: usize,
    pub det_values: DeterminantStats,
    pub tolerance: f64,
    pub is_constant: bool,
    /// `max |∇_x·∇_y s|` for the vector-potential perturbation, if any.
    pub trace_linearized: Option<f64>,
}

/// Stratified sample points: every coordinate of `x` and `y` runs over
/// `side` equally spaced nodes including both endpoints, where `side` is the
/// largest integer with `side^(2d) <= n_samples`.
fn stratified_pairs(domain: Domain, dim: usize, n_samples: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let coords = 2 * dim;
    let mut side = 2usize;
    while (side + 1).pow(coords as u32) <= n_samples {
        side += 1;
    }
    let nodes: Vec<f64> = (0..side)
        .map(|i| domain.lo + (domain.hi - domain.lo) * i as f64 / (side - 1) as f64)
        .collect();
    let total = side.pow(coords as u32);
    (0..total)
        .map(|mut idx| {
            let mut point = vec![0.0; coords];
            for c in (0..coords).rev() {
                point[c] = nodes[idx % side];
                idx /= side;
            }
            let y = point.split_off(dim);
            (point, y)
        })
        .collect()
}

fn check_samples(n_samples: usize) -> Result<()> {
    if n_samples < 16 {
        return Err(Error::InvalidParameter(format!(
            "need at least 16 samples, got {n_samples}"
        )));
    }
    Ok(())
}

/// Samples `det(∂²S/∂x∂y)` over `domain²` and decides whether it is constant
/// to within `tolerance` relative spread.
pub fn check_criterion(
    model: &ActionModel,
    domain: Domain,
    n_samples: usize,
    tolerance: f64,
) -> Result<CriterionReport> {
    check_samples(n_samples)?;
    let pairs = stratified_pairs(domain, model.dimension(), n_samples);
    let dets: Vec<f64> = pairs
        .par_iter()
        .map(|(x, y)| model.mixed_determinant(x, y))
        .collect();
    if let Some(bad) = dets.iter().position(|d| !d.is_finite()) {
        let (x, y) = pairs[bad].clone();
        return Err(Error::Evaluation { x, y });
    }

    let min = dets.iter().copied().fold(f64::INFINITY, f64::min);
    let max = dets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = dets.iter().sum::<f64>() / dets.len() as f64;
    let spread = max - min;
    let relative_spread = if mean.abs() < DEGENERATE_MEAN {
        spread
    } else {
        spread / mean.abs()
    };

    let trace_linearized = match model.kind {
        ActionKind::VectorPotential2D { a1, a2 } => Some(max_trace(
            &VectorPotentialPerturbation { a1, a2 },
            &pairs,
        )),
        _ => None,
    };

    Ok(CriterionReport {
        samples: dets.len(),
        det_values: DeterminantStats {
            min,
            max,
            mean,
            relative_spread,
        },
        tolerance,
        is_constant: relative_spread < tolerance,
        trace_linearized,
    })
}

/// A two-dimensional action perturbation `s(x, y)` exposing its mixed
/// Hessian.
pub trait Perturbation: Sync {
    /// `[α][β] = ∂²s/∂x_α∂y_β`
    fn mixed_hessian(&self, x: &[f64], y: &[f64]) -> [[f64; 2]; 2];
}

#[derive(Clone, Copy, Debug)]
pub struct VectorPotentialPerturbation {
    pub a1: VectorPotentialFn,
    pub a2: VectorPotentialFn,
}

impl Perturbation for VectorPotentialPerturbation {
    fn mixed_hessian(&self, x: &[f64], y: &[f64]) -> [[f64; 2]; 2] {
        PerturbationDerivatives::new(self.a1, self.a2, x, y).mixed
    }
}

/// `s = ε (x₁ - y₁)⁴`, which violates the linearized condition.
#[derive(Clone, Copy, Debug)]
pub struct QuarticPerturbation {
    pub epsilon: f64,
}

impl Perturbation for QuarticPerturbation {
    fn mixed_hessian(&self, x: &[f64], y: &[f64]) -> [[f64; 2]; 2] {
        [[-12.0 * self.epsilon * (x[0] - y[0]).powi(2), 0.0], [0.0, 0.0]]
    }
}

fn max_trace(s: &dyn Perturbation, pairs: &[(Vec<f64>, Vec<f64>)]) -> f64 {
    pairs
        .par_iter()
        .map(|(x, y)| {
            let h = s.mixed_hessian(x, y);
            (h[0][0] + h[1][1]).abs()
        })
        .reduce(|| 0.0, f64::max)
}

/// `max |Σ_α ∂²s/∂x_α∂y_α|` for the perturbation of a vector-potential model.
pub fn check_linearized(model: &ActionModel, domain: Domain, n_samples: usize) -> Result<f64> {
    match model.kind {
        ActionKind::VectorPotential2D { a1, a2 } => {
            linearized_trace_max(&VectorPotentialPerturbation { a1, a2 }, domain, n_samples)
        }
        _ => Err(Error::UnsupportedAction {
            kind: model.kind.name(),
            operation: "check_linearized",
        }),
    }
}

/// Same as [`check_linearized`] for an arbitrary perturbation.
pub fn linearized_trace_max(s: &dyn Perturbation, domain: Domain, n_samples: usize) -> Result<f64> {
    check_samples(n_samples)?;
    Ok(max_trace(s, &stratified_pairs(domain, 2, n_samples)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::*;
    use approx::assert_abs_diff_eq;

    fn c() -> PhysicalConstants {
        PhysicalConstants::new(1.0, 0.5, 1.0).unwrap()
    }

    fn unit() -> Domain {
        Domain::new(0.0, 1.0).unwrap()
    }

    #[test]
    fn standard_action_is_constant() {
        let model = standard_action(c(), Potential::harmonic(1.0, 1.0));
        let r = check_criterion(&model, Domain::new(-5.0, 5.0).unwrap(), DEFAULT_SAMPLES, DEFAULT_TOLERANCE)
            .unwrap();
        assert_eq!(r.samples, 1024);
        assert_eq!(r.det_values.min, -2.0);
        assert_eq!(r.det_values.max, -2.0);
        assert_eq!(r.det_values.relative_spread, 0.0);
        assert!(r.is_constant);
        assert_eq!(r.trace_linearized, None);
    }

    #[test]
    fn quartic_probe_is_not_constant() {
        let model = quartic_action(c(), Potential::zero(), 0.1);
        let r = check_criterion(&model, unit(), DEFAULT_SAMPLES, DEFAULT_TOLERANCE).unwrap();
        // -m/τ - 12 ε (x - y)² over x - y ∈ [-1, 1]
        assert_abs_diff_eq!(r.det_values.max, -2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.det_values.min, -3.2, epsilon = 1e-12);
        let mean_oracle = {
            let n = 32;
            let nodes: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
            let mut sum = 0.0;
            for &x in &nodes {
                for &y in &nodes {
                    sum += -2.0 - 1.2 * (x - y) * (x - y);
                }
            }
            sum / (n * n) as f64
        };
        assert_abs_diff_eq!(r.det_values.mean, mean_oracle, epsilon = 1e-12);
        assert_abs_diff_eq!(r.det_values.relative_spread, 1.2 / mean_oracle.abs(), epsilon = 1e-12);
        assert!(!r.is_constant);
    }

    #[test]
    fn gauged_report_matches_standard() {
        let base = standard_action(c(), Potential::quartic(0.3));
        let gauged = gauged_action(c(), Potential::quartic(0.3), GaugeFunction::Sine { amplitude: 2.0, wavenumber: 3.0 });
        let d = Domain::new(-2.0, 3.0).unwrap();
        assert_eq!(
            check_criterion(&base, d, 256, 1e-8).unwrap(),
            check_criterion(&gauged, d, 256, 1e-8).unwrap()
        );
    }

    #[test]
    fn sine_probe_is_not_constant() {
        let model = sine_action(c(), 1.0).unwrap();
        let r = check_criterion(&model, Domain::new(-3.0, 3.0).unwrap(), DEFAULT_SAMPLES, DEFAULT_TOLERANCE)
            .unwrap();
        assert!(!r.is_constant);
    }

    #[test]
    fn degenerate_mean_uses_absolute_spread() {
        // -cos(x)cos(y) averages to ~0 over a symmetric period
        let model = sine_action(c(), 1.0).unwrap();
        let pi = std::f64::consts::PI;
        let r = check_criterion(&model, Domain::new(-pi / 2.0, 3.0 * pi / 2.0).unwrap(), 1024, 1e-8).unwrap();
        assert!(r.det_values.mean.abs() < 1e-14);
        assert_abs_diff_eq!(r.det_values.relative_spread, r.det_values.max - r.det_values.min);
    }

    #[test]
    fn rejects_bad_inputs() {
        let model = standard_action(c(), Potential::zero());
        assert!(check_criterion(&model, unit(), 15, 1e-8).is_err());
        assert!(Domain::new(1.0, 1.0).is_err());
        assert!(matches!(
            check_linearized(&model, unit(), 64),
            Err(Error::UnsupportedAction { .. })
        ));
    }

    #[test]
    fn non_finite_evaluation_reports_coordinates() {
        let model = standard_action(c(), Potential::zero());
        let bad = ActionModel {
            constants: PhysicalConstants { mass: f64::INFINITY, ..c() },
            ..model
        };
        match check_criterion(&bad, unit(), 16, 1e-8) {
            Err(Error::Evaluation { x, y }) => {
                assert_eq!(x.len(), 1);
                assert_eq!(y.len(), 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn linearized_criterion() {
        let d = Domain::new(-3.0, 3.0).unwrap();
        let builtins = [
            VectorPotentialFn::Zero,
            VectorPotentialFn::Product { strength: 1.7 },
            VectorPotentialFn::SquareProduct { strength: -0.6 },
            VectorPotentialFn::SinCos { strength: 2.5 },
        ];
        for a1 in builtins {
            for a2 in builtins {
                let m = vector_potential_action_2d(c(), Potential::harmonic(1.0, 1.0), a1, a2);
                assert!(check_linearized(&m, d, 4096).unwrap() < 1e-10);
            }
        }
        let zero = vector_potential_action_2d(c(), Potential::zero(), VectorPotentialFn::Zero, VectorPotentialFn::Zero);
        assert_eq!(check_linearized(&zero, d, 256).unwrap(), 0.0);

        let eps = 0.05;
        let probe = linearized_trace_max(&QuarticPerturbation { epsilon: eps }, unit(), 256).unwrap();
        assert_abs_diff_eq!(probe, 12.0 * eps, epsilon = 1e-15);
    }

    #[test]
    fn two_dimensional_report_carries_trace() {
        let m = vector_potential_action_2d(
            c(),
            Potential::zero(),
            VectorPotentialFn::Product { strength: 1.0 },
            VectorPotentialFn::Zero,
        );
        let r = check_criterion(&m, unit(), 4096, 1e-8).unwrap();
        assert_eq!(r.samples, 8usize.pow(4));
        assert_eq!(r.trace_linearized, Some(0.0));
        // det = (m/τ)² - h12 h21 = 4 - (1/2)(-1/2)
        assert_abs_diff_eq!(r.det_values.min, 4.25, epsilon = 1e-14);
    }

    #[test]
    fn verdict_is_monotone_in_tolerance() {
        let model = quartic_action(c(), Potential::zero(), 1e-4);
        let tolerances = [1e-12, 1e-8, 1e-4, 1e-3, 1e-2, 1e-1, 1.0];
        let verdicts: Vec<bool> = tolerances
            .iter()
            .map(|&t| check_criterion(&model, unit(), 256, t).unwrap().is_constant)
            .collect();
        assert!(verdicts.windows(2).all(|w| !w[0] || w[1]), "{verdicts:?}");
        assert!(!verdicts[0] && verdicts[6]);
    }
}
