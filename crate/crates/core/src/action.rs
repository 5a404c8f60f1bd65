//! One-step actions `S(x, y)` between a later position `x` and an earlier
//! position `y`, with analytic first and mixed second derivatives.
//!
//! The admissible families are the standard action
//! `S = m(x-y)²/2τ - τ[V(x)+V(y)]/2`, its gauged variant with an added
//! `φ(x) - φ(y)`, and the two-dimensional vector-potential action. The quartic
//! and sine actions deliberately violate `∂²S/∂x∂y = const` and serve as
//! probes.
//!
//! Potentials, gauge functions, and vector-potential functions are closed
//! sets of named built-ins so that every derivative is exact.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub mass: f64,
    pub time_step: f64,
    pub hbar: f64,
}

impl PhysicalConstants {
    pub fn new(mass: f64, time_step: f64, hbar: f64) -> Result<Self> {
        for (name, value) in [("mass", mass), ("time_step", time_step), ("hbar", hbar)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
        }
        Ok(Self {
            mass,
            time_step,
            hbar,
        })
    }

    pub fn with_time_step(self, time_step: f64) -> Result<Self> {
        Self::new(self.mass, time_step, self.hbar)
    }

    pub fn with_hbar(self, hbar: f64) -> Result<Self> {
        Self::new(self.mass, self.time_step, hbar)
    }

    /// `m / τ`, the natural scale of action gradients per unit length.
    pub fn gradient_scale(&self) -> f64 {
        self.mass / self.time_step
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialShape {
    Zero,
    /// `k x² / 2`
    Harmonic { stiffness: f64 },
    /// `λ x⁴`
    Quartic { lambda: f64 },
    /// `-depth cos(k x)`
    CosineWell { depth: f64, wavenumber: f64 },
}

/// Scalar potential `V(x) = shape(x) + offset`. On two-dimensional grids
/// the potential is the separable sum over both axes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub shape: PotentialShape,
    pub offset: f64,
}

impl Potential {
    pub const fn zero() -> Self {
        Self {
            shape: PotentialShape::Zero,
            offset: 0.0,
        }
    }

    /// `½ m ω² x²`
    pub fn harmonic(mass: f64, omega: f64) -> Self {
        Self {
            shape: PotentialShape::Harmonic {
                stiffness: mass * omega * omega,
            },
            offset: 0.0,
        }
    }

    pub fn quartic(lambda: f64) -> Self {
        Self {
            shape: PotentialShape::Quartic { lambda },
            offset: 0.0,
        }
    }

    pub fn cosine_well(depth: f64, wavenumber: f64) -> Self {
        Self {
            shape: PotentialShape::CosineWell { depth, wavenumber },
            offset: 0.0,
        }
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    pub fn value(&self, x: f64) -> f64 {
        self.offset
            + match self.shape {
                PotentialShape::Zero => 0.0,
                PotentialShape::Harmonic { stiffness } => 0.5 * stiffness * x * x,
                PotentialShape::Quartic { lambda } => lambda * x.powi(4),
                PotentialShape::CosineWell { depth, wavenumber } => -depth * (wavenumber * x).cos(),
            }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self.shape {
            PotentialShape::Zero => 0.0,
            PotentialShape::Harmonic { stiffness } => stiffness * x,
            PotentialShape::Quartic { lambda } => 4.0 * lambda * x.powi(3),
            PotentialShape::CosineWell { depth, wavenumber } => {
                depth * wavenumber * (wavenumber * x).sin()
            }
        }
    }

    fn value_nd(&self, x: &[f64]) -> f64 {
        x.iter().map(|&xi| self.value(xi)).sum()
    }
}

/// Gauge function `φ(x)` for the term `φ(x) - φ(y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum GaugeFunction {
    Zero,
    Constant { value: f64 },
    /// `k x`
    Linear { slope: f64 },
    /// `a x²`
    Quadratic { curvature: f64 },
    /// `a sin(k x)`
    Sine { amplitude: f64, wavenumber: f64 },
}

impl GaugeFunction {
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            GaugeFunction::Zero => 0.0,
            GaugeFunction::Constant { value } => value,
            GaugeFunction::Linear { slope } => slope * x,
            GaugeFunction::Quadratic { curvature } => curvature * x * x,
            GaugeFunction::Sine {
                amplitude,
                wavenumber,
            } => amplitude * (wavenumber * x).sin(),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            GaugeFunction::Zero | GaugeFunction::Constant { .. } => 0.0,
            GaugeFunction::Linear { slope } => slope,
            GaugeFunction::Quadratic { curvature } => 2.0 * curvature * x,
            GaugeFunction::Sine {
                amplitude,
                wavenumber,
            } => amplitude * wavenumber * (wavenumber * x).cos(),
        }
    }
}

/// Two-argument function `𝒜(a, b)` entering the vector-potential action.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum VectorPotentialFn {
    Zero,
    /// `g a b`
    Product { strength: f64 },
    /// `g a² b`
    SquareProduct { strength: f64 },
    /// `g sin(a) cos(b)`
    SinCos { strength: f64 },
}

/// Value and partial derivatives of a [`VectorPotentialFn`] at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Partials {
    pub value: f64,
    pub d_a: f64,
    pub d_b: f64,
    pub d_ab: f64,
}

impl VectorPotentialFn {
    pub fn eval(&self, a: f64, b: f64) -> Partials {
        match *self {
            VectorPotentialFn::Zero => Partials::default(),
            VectorPotentialFn::Product { strength: g } => Partials {
                value: g * a * b,
                d_a: g * b,
                d_b: g * a,
                d_ab: g,
            },
            VectorPotentialFn::SquareProduct { strength: g } => Partials {
                value: g * a * a * b,
                d_a: 2.0 * g * a * b,
                d_b: g * a * a,
                d_ab: 2.0 * g * a,
            },
            VectorPotentialFn::SinCos { strength: g } => Partials {
                value: g * a.sin() * b.cos(),
                d_a: g * a.cos() * b.cos(),
                d_b: -g * a.sin() * b.sin(),
                d_ab: -g * a.cos() * b.sin(),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ActionKind {
    Standard,
    Gauged { phi: GaugeFunction },
    Quartic { epsilon: f64 },
    Sine { coupling: f64 },
    VectorPotential2D { a1: VectorPotentialFn, a2: VectorPotentialFn },
}

impl ActionKind {
    pub fn name(&self) -> &'static str {
        match self {
            ActionKind::Standard => "standard",
            ActionKind::Gauged { .. } => "gauged",
            ActionKind::Quartic { .. } => "quartic",
            ActionKind::Sine { .. } => "sine",
            ActionKind::VectorPotential2D { .. } => "vector_potential_2d",
        }
    }
}

/// A one-step action together with its physical constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionModel {
    pub constants: PhysicalConstants,
    pub potential: Potential,
    pub kind: ActionKind,
}

pub fn standard_action(constants: PhysicalConstants, potential: Potential) -> ActionModel {
    ActionModel {
        constants,
        potential,
        kind: ActionKind::Standard,
    }
}

pub fn gauged_action(
    constants: PhysicalConstants,
    potential: Potential,
    phi: GaugeFunction,
) -> ActionModel {
    ActionModel {
        constants,
        potential,
        kind: ActionKind::Gauged { phi },
    }
}

/// Standard action plus `ε (x - y)⁴`.
pub fn quartic_action(
    constants: PhysicalConstants,
    potential: Potential,
    epsilon: f64,
) -> ActionModel {
    ActionModel {
        constants,
        potential,
        kind: ActionKind::Quartic { epsilon },
    }
}

/// `S = -c sin(x) sin(y)`; every gradient is bounded by `c`.
pub fn sine_action(constants: PhysicalConstants, coupling: f64) -> Result<ActionModel> {
    if coupling.is_nan() || coupling <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "sine coupling must be positive, got {coupling}"
        )));
    }
    Ok(ActionModel {
        constants,
        potential: Potential::zero(),
        kind: ActionKind::Sine { coupling },
    })
}

/// Two-dimensional standard action plus
/// `s = ½{[𝒜₁(x₁,y₂) - 𝒜₁(y₁,x₂)] + [𝒜₂(y₁,x₂) - 𝒜₂(x₁,y₂)]}`.
pub fn vector_potential_action_2d(
    constants: PhysicalConstants,
    potential: Potential,
    a1: VectorPotentialFn,
    a2: VectorPotentialFn,
) -> ActionModel {
    ActionModel {
        constants,
        potential,
        kind: ActionKind::VectorPotential2D { a1, a2 },
    }
}

impl ActionModel {
    pub fn dimension(&self) -> usize {
        match self.kind {
            ActionKind::VectorPotential2D { .. } => 2,
            _ => 1,
        }
    }

    /// Standard and gauged actions: the family admitting the continuum
    /// free-propagator amplitude and the closed-form equation of motion.
    pub fn is_standard_family(&self) -> bool {
        matches!(self.kind, ActionKind::Standard | ActionKind::Gauged { .. })
    }

    fn kinetic(&self) -> f64 {
        self.constants.mass / (2.0 * self.constants.time_step)
    }

    // ---- one-dimensional evaluators ----

    /// `S(x, y)` for one-dimensional kinds.
    pub fn value_1d(&self, x: f64, y: f64) -> f64 {
        let tau = self.constants.time_step;
        let standard =
            || self.kinetic() * (x - y).powi(2) - 0.5 * tau * (self.potential.value(x) + self.potential.value(y));
        match self.kind {
            ActionKind::Standard => standard(),
            ActionKind::Gauged { phi } => standard() + (phi.value(x) - phi.value(y)),
            ActionKind::Quartic { epsilon } => standard() + epsilon * (x - y).powi(4),
            ActionKind::Sine { coupling } => -coupling * x.sin() * y.sin(),
            ActionKind::VectorPotential2D { .. } => f64::NAN,
        }
    }

    /// `∂S/∂x` (later argument).
    pub fn d_x_1d(&self, x: f64, y: f64) -> f64 {
        let tau = self.constants.time_step;
        let standard = || 2.0 * self.kinetic() * (x - y) - 0.5 * tau * self.potential.derivative(x);
        match self.kind {
            ActionKind::Standard => standard(),
            ActionKind::Gauged { phi } => standard() + phi.derivative(x),
            ActionKind::Quartic { epsilon } => standard() + 4.0 * epsilon * (x - y).powi(3),
            ActionKind::Sine { coupling } => -coupling * x.cos() * y.sin(),
            ActionKind::VectorPotential2D { .. } => f64::NAN,
        }
    }

    /// `∂S/∂y` (earlier argument).
    pub fn d_y_1d(&self, x: f64, y: f64) -> f64 {
        let tau = self.constants.time_step;
        let standard = || -2.0 * self.kinetic() * (x - y) - 0.5 * tau * self.potential.derivative(y);
        match self.kind {
            ActionKind::Standard => standard(),
            ActionKind::Gauged { phi } => standard() - phi.derivative(y),
            ActionKind::Quartic { epsilon } => standard() - 4.0 * epsilon * (x - y).powi(3),
            ActionKind::Sine { coupling } => -coupling * x.sin() * y.cos(),
            ActionKind::VectorPotential2D { .. } => f64::NAN,
        }
    }

    /// `∂²S/∂x∂y`.
    pub fn d_xy_1d(&self, x: f64, y: f64) -> f64 {
        let minus_m_over_tau = -2.0 * self.kinetic();
        match self.kind {
            ActionKind::Standard | ActionKind::Gauged { .. } => minus_m_over_tau,
            ActionKind::Quartic { epsilon } => minus_m_over_tau - 12.0 * epsilon * (x - y).powi(2),
            ActionKind::Sine { coupling } => -coupling * x.cos() * y.cos(),
            ActionKind::VectorPotential2D { .. } => f64::NAN,
        }
    }

    // ---- dimension-generic evaluators ----

    /// `S(x, y)`; slices have length [`dimension`](Self::dimension).
    pub fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.kind {
            ActionKind::VectorPotential2D { a1, a2 } => {
                self.standard_value_nd(x, y) + perturbation_value(a1, a2, x, y)
            }
            _ => self.value_1d(x[0], y[0]),
        }
    }

    pub fn grad_x(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        match self.kind {
            ActionKind::VectorPotential2D { a1, a2 } => {
                let tau = self.constants.time_step;
                let s = PerturbationDerivatives::new(a1, a2, x, y);
                (0..2)
                    .map(|a| {
                        2.0 * self.kinetic() * (x[a] - y[a]) - 0.5 * tau * self.potential.derivative(x[a])
                            + s.grad_x[a]
                    })
                    .collect()
            }
            _ => vec![self.d_x_1d(x[0], y[0])],
        }
    }

    pub fn grad_y(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        match self.kind {
            ActionKind::VectorPotential2D { a1, a2 } => {
                let tau = self.constants.time_step;
                let s = PerturbationDerivatives::new(a1, a2, x, y);
                (0..2)
                    .map(|a| {
                        -2.0 * self.kinetic() * (x[a] - y[a]) - 0.5 * tau * self.potential.derivative(y[a])
                            + s.grad_y[a]
                    })
                    .collect()
            }
            _ => vec![self.d_y_1d(x[0], y[0])],
        }
    }

    /// Mixed Hessian `H[α][β] = ∂²S/∂x_α∂y_β`, row-major `d × d`.
    pub fn mixed_hessian(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        match self.kind {
            ActionKind::VectorPotential2D { a1, a2 } => {
                let s = PerturbationDerivatives::new(a1, a2, x, y);
                let diag = -2.0 * self.kinetic();
                vec![
                    diag + s.mixed[0][0],
                    s.mixed[0][1],
                    s.mixed[1][0],
                    diag + s.mixed[1][1],
                ]
            }
            _ => vec![self.d_xy_1d(x[0], y[0])],
        }
    }

    /// `det(∂²S/∂x∂y)`.
    pub fn mixed_determinant(&self, x: &[f64], y: &[f64]) -> f64 {
        let h = self.mixed_hessian(x, y);
        match h.as_slice() {
            [a] => *a,
            [a, b, c, d] => a * d - b * c,
            _ => unreachable!(),
        }
    }

    fn standard_value_nd(&self, x: &[f64], y: &[f64]) -> f64 {
        let tau = self.constants.time_step;
        let dist2: f64 = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum();
        self.kinetic() * dist2 - 0.5 * tau * (self.potential.value_nd(x) + self.potential.value_nd(y))
    }
}

fn perturbation_value(a1: VectorPotentialFn, a2: VectorPotentialFn, x: &[f64], y: &[f64]) -> f64 {
    0.5 * ((a1.eval(x[0], y[1]).value - a1.eval(y[0], x[1]).value)
        + (a2.eval(y[0], x[1]).value - a2.eval(x[0], y[1]).value))
}

/// Derivatives of the vector-potential perturbation `s(x, y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerturbationDerivatives {
    pub grad_x: [f64; 2],
    pub grad_y: [f64; 2],
    /// `mixed[α][β] = ∂²s/∂x_α∂y_β`
    pub mixed: [[f64; 2]; 2],
}

impl PerturbationDerivatives {
    pub fn new(a1: VectorPotentialFn, a2: VectorPotentialFn, x: &[f64], y: &[f64]) -> Self {
        // 𝒜 evaluated at (x₁, y₂) and at (y₁, x₂)
        let a1_xy = a1.eval(x[0], y[1]);
        let a1_yx = a1.eval(y[0], x[1]);
        let a2_xy = a2.eval(x[0], y[1]);
        let a2_yx = a2.eval(y[0], x[1]);
        Self {
            grad_x: [
                0.5 * (a1_xy.d_a - a2_xy.d_a),
                0.5 * (a2_yx.d_b - a1_yx.d_b),
            ],
            grad_y: [
                0.5 * (a2_yx.d_a - a1_yx.d_a),
                0.5 * (a1_xy.d_b - a2_xy.d_b),
            ],
            mixed: [
                [0.0, 0.5 * (a1_xy.d_ab - a2_xy.d_ab)],
                [0.5 * (a2_yx.d_ab - a1_yx.d_ab), 0.0],
            ],
        }
    }
}

/// `S(x, x - τv) / τ` at the model's own time step.
pub fn continuum_lagrangian(model: &ActionModel, x: f64, v: f64) -> Result<f64> {
    match model.kind {
        ActionKind::Standard => {
            let tau = model.constants.time_step;
            Ok(model.value_1d(x, x - tau * v) / tau)
        }
        _ => Err(Error::UnsupportedAction {
            kind: model.kind.name(),
            operation: "continuum_lagrangian",
        }),
    }
}

/// `½ m v² - V(x)`, the τ → 0 limit of [`continuum_lagrangian`].
pub fn analytic_lagrangian(model: &ActionModel, x: f64, v: f64) -> Result<f64> {
    match model.kind {
        ActionKind::Standard => Ok(0.5 * model.constants.mass * v * v - model.potential.value(x)),
        _ => Err(Error::UnsupportedAction {
            kind: model.kind.name(),
            operation: "analytic_lagrangian",
        }),
    }
}

/// `S(x, x - τv) / τ` for the two-dimensional vector-potential action.
pub fn continuum_lagrangian_2d(model: &ActionModel, x: [f64; 2], v: [f64; 2]) -> Result<f64> {
    match model.kind {
        ActionKind::VectorPotential2D { .. } => {
            let tau = model.constants.time_step;
            let y = [x[0] - tau * v[0], x[1] - tau * v[1]];
            Ok(model.value(&x, &y) / tau)
        }
        _ => Err(Error::UnsupportedAction {
            kind: model.kind.name(),
            operation: "continuum_lagrangian_2d",
        }),
    }
}

/// `qA_α = ∂𝒜_α/∂x_α` evaluated at `x`.
pub fn vector_potential(model: &ActionModel, x: [f64; 2]) -> Result<[f64; 2]> {
    match model.kind {
        ActionKind::VectorPotential2D { a1, a2 } => {
            Ok([a1.eval(x[0], x[1]).d_a, a2.eval(x[0], x[1]).d_b])
        }
        _ => Err(Error::UnsupportedAction {
            kind: model.kind.name(),
            operation: "vector_potential",
        }),
    }
}

/// Charged-particle Lagrangian `½ m|v|² + q v·A - V(x)`, without the total
/// derivative `-½ d(𝒜₁ + 𝒜₂)/dt` that separates it from the τ → 0 limit of
/// `S/τ`.
pub fn analytic_lagrangian_2d(model: &ActionModel, x: [f64; 2], v: [f64; 2]) -> Result<f64> {
    let q_a = vector_potential(model, x)?;
    let m = model.constants.mass;
    let kinetic = 0.5 * m * (v[0] * v[0] + v[1] * v[1]);
    Ok(kinetic + v[0] * q_a[0] + v[1] * q_a[1] - model.potential.value_nd(&x))
}

/// `-½ d(𝒜₁ + 𝒜₂)/dt` along velocity `v` at `x`: the total-derivative term
/// by which the τ → 0 limit of `S/τ` differs from [`analytic_lagrangian_2d`].
pub fn total_derivative_term_2d(model: &ActionModel, x: [f64; 2], v: [f64; 2]) -> Result<f64> {
    match model.kind {
        ActionKind::VectorPotential2D { a1, a2 } => {
            let p1 = a1.eval(x[0], x[1]);
            let p2 = a2.eval(x[0], x[1]);
            Ok(-0.5 * ((p1.d_a + p2.d_a) * v[0] + (p1.d_b + p2.d_b) * v[1]))
        }
        _ => Err(Error::UnsupportedAction {
            kind: model.kind.name(),
            operation: "total_derivative_term_2d",
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn constants(m: f64, tau: f64) -> PhysicalConstants {
        PhysicalConstants::new(m, tau, 1.0).unwrap()
    }

    fn half_x2() -> Potential {
        Potential::harmonic(1.0, 1.0)
    }

    #[test]
    fn constants_must_be_positive() {
        assert!(PhysicalConstants::new(0.0, 1.0, 1.0).is_err());
        assert!(PhysicalConstants::new(1.0, -1.0, 1.0).is_err());
        assert!(PhysicalConstants::new(1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn standard_action_values() {
        let free = standard_action(constants(1.0, 0.5), Potential::zero());
        assert_eq!(free.value_1d(1.0, 0.0), 1.0);
        for (x, y) in [(0.3, -2.0), (5.0, 1.0), (-1.0, -1.0)] {
            assert_eq!(free.d_xy_1d(x, y), -2.0);
        }
        let harmonic = standard_action(constants(1.0, 0.1), half_x2());
        assert_abs_diff_eq!(harmonic.value_1d(2.0, 2.0), -0.2, epsilon = 1e-15);
    }

    #[test]
    fn gauged_action_values() {
        let c = constants(1.0, 0.5);
        let base = standard_action(c, half_x2());
        let constant = gauged_action(c, half_x2(), GaugeFunction::Constant { value: 3.0 });
        let quad = gauged_action(c, half_x2(), GaugeFunction::Quadratic { curvature: 1.0 });
        for (x, y) in [(0.1, 0.7), (-2.0, 1.5)] {
            assert_eq!(constant.value_1d(x, y), base.value_1d(x, y));
            assert_eq!(quad.d_xy_1d(x, y), -2.0);
        }
        assert_eq!(quad.value_1d(0.4, 0.4), base.value_1d(0.4, 0.4));
        assert_abs_diff_eq!(quad.value_1d(1.0, 0.0) - base.value_1d(1.0, 0.0), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn lagrangian_limits_1d() {
        let free = standard_action(constants(1.0, 0.37), Potential::zero());
        assert_eq!(analytic_lagrangian(&free, 0.0, 2.0).unwrap(), 2.0);
        assert_abs_diff_eq!(continuum_lagrangian(&free, 0.0, 2.0).unwrap(), 2.0, epsilon = 1e-14);

        let harmonic = standard_action(constants(1.0, 0.1), half_x2());
        assert_abs_diff_eq!(continuum_lagrangian(&harmonic, 1.0, 0.0).unwrap(), -0.5, epsilon = 1e-15);

        // first-order convergence for V = x⁴ at x = 1, v = 1
        let err = |tau: f64| {
            let m = standard_action(constants(1.0, tau), Potential::quartic(1.0));
            (continuum_lagrangian(&m, 1.0, 1.0).unwrap() - analytic_lagrangian(&m, 1.0, 1.0).unwrap()).abs()
        };
        let ratio = err(0.01) / err(0.02);
        assert!((ratio - 0.5).abs() < 0.1, "ratio {ratio}");

        let sine = sine_action(constants(1.0, 0.1), 1.0).unwrap();
        assert!(matches!(
            continuum_lagrangian(&sine, 0.0, 1.0),
            Err(Error::UnsupportedAction { .. })
        ));
    }

    #[test]
    fn vector_potential_action() {
        let c = constants(1.0, 0.2);
        let plain = vector_potential_action_2d(c, half_x2(), VectorPotentialFn::Zero, VectorPotentialFn::Zero);
        let x: [f64; 2] = [0.3, -1.2];
        let y: [f64; 2] = [1.1, 0.4];
        let expected = 2.5 * ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2))
            - 0.1 * (half_x2().value(x[0]) + half_x2().value(x[1]) + half_x2().value(y[0]) + half_x2().value(y[1]));
        assert_abs_diff_eq!(plain.value(&x, &y), expected, epsilon = 1e-14);

        let product = vector_potential_action_2d(
            c,
            Potential::zero(),
            VectorPotentialFn::Product { strength: 1.0 },
            VectorPotentialFn::Zero,
        );
        let p = [0.7, -0.9];
        assert_eq!(product.value(&p, &p), 0.0);

        for (a1, a2) in [
            (VectorPotentialFn::Product { strength: 1.3 }, VectorPotentialFn::SinCos { strength: -0.4 }),
            (VectorPotentialFn::SquareProduct { strength: 0.8 }, VectorPotentialFn::Product { strength: 2.0 }),
        ] {
            let s = PerturbationDerivatives::new(a1, a2, &x, &y);
            assert_eq!(s.mixed[0][0] + s.mixed[1][1], 0.0);
        }
    }

    #[test]
    fn lagrangian_limits_2d() {
        let c = constants(1.0, 0.1);
        let plain = vector_potential_action_2d(c, half_x2(), VectorPotentialFn::Zero, VectorPotentialFn::Zero);
        let x = [0.5, -0.25];
        let v = [1.0, 2.0];
        assert_abs_diff_eq!(
            analytic_lagrangian_2d(&plain, x, v).unwrap(),
            2.5 - half_x2().value(0.5) - half_x2().value(-0.25),
            epsilon = 1e-15
        );

        let product = vector_potential_action_2d(
            c,
            Potential::zero(),
            VectorPotentialFn::Product { strength: 1.0 },
            VectorPotentialFn::Zero,
        );
        assert_eq!(vector_potential(&product, [0.0, 1.0]).unwrap(), [1.0, 0.0]);
        assert_eq!(analytic_lagrangian_2d(&product, [0.0, 1.0], [1.0, 0.0]).unwrap(), 1.5);
        assert!(continuum_lagrangian_2d(&standard_action(c, half_x2()), x, v).is_err());
    }

    #[test]
    fn probe_actions() {
        let c = constants(1.0, 0.5);
        let quartic = quartic_action(c, Potential::zero(), 0.1);
        assert_abs_diff_eq!(quartic.d_xy_1d(1.0, 0.0), -3.2, epsilon = 1e-15);
        let fd = mixed_fd(|x, y| quartic.value_1d(x, y), 1.0, 0.0, 1e-4);
        assert!((fd - -3.2).abs() < 1e-6);

        let zero_eps = quartic_action(c, half_x2(), 0.0);
        let base = standard_action(c, half_x2());
        assert_eq!(zero_eps.value_1d(0.3, -0.8), base.value_1d(0.3, -0.8));

        let sine = sine_action(c, 2.0).unwrap();
        assert_abs_diff_eq!(sine.d_y_1d(std::f64::consts::FRAC_PI_2, 0.0), -2.0, epsilon = 1e-15);
        assert!(sine_action(c, 0.0).is_err());
    }

    fn mixed_fd(f: impl Fn(f64, f64) -> f64, x: f64, y: f64, h: f64) -> f64 {
        (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4.0 * h * h)
    }

    fn models_1d() -> Vec<ActionModel> {
        let c = PhysicalConstants::new(1.3, 0.4, 0.7).unwrap();
        vec![
            standard_action(c, Potential::quartic(0.1)),
            standard_action(c, Potential::cosine_well(1.5, 0.8).with_offset(2.0)),
            gauged_action(c, half_x2(), GaugeFunction::Sine { amplitude: 0.5, wavenumber: 1.3 }),
            quartic_action(c, half_x2(), 0.1),
            sine_action(c, 2.0).unwrap(),
        ]
    }

    fn models_2d() -> Vec<ActionModel> {
        let c = PhysicalConstants::new(1.3, 0.4, 0.7).unwrap();
        vec![
            vector_potential_action_2d(
                c,
                Potential::quartic(0.05),
                VectorPotentialFn::SinCos { strength: 0.7 },
                VectorPotentialFn::SquareProduct { strength: -0.3 },
            ),
            vector_potential_action_2d(
                c,
                half_x2(),
                VectorPotentialFn::Product { strength: 1.0 },
                VectorPotentialFn::SinCos { strength: 1.0 },
            ),
        ]
    }

    fn rel_close(analytic: f64, numeric: f64, scale: f64) -> bool {
        (analytic - numeric).abs() <= 1e-6 * analytic.abs().max(scale)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn gradients_match_finite_differences_1d(x in -5.0f64..5.0, y in -5.0f64..5.0) {
            let h = 1e-4;
            for m in models_1d() {
                let scale = m.constants.gradient_scale();
                let fx = (m.value_1d(x + h, y) - m.value_1d(x - h, y)) / (2.0 * h);
                let fy = (m.value_1d(x, y + h) - m.value_1d(x, y - h)) / (2.0 * h);
                // mixed partial by differencing the analytic first derivative
                let fxy = (m.d_x_1d(x, y + h) - m.d_x_1d(x, y - h)) / (2.0 * h);
                prop_assert!(rel_close(m.d_x_1d(x, y), fx, scale), "{:?} d_x", m.kind);
                prop_assert!(rel_close(m.d_y_1d(x, y), fy, scale), "{:?} d_y", m.kind);
                prop_assert!(rel_close(m.d_xy_1d(x, y), fxy, scale), "{:?} d_xy", m.kind);
            }
        }

        #[test]
        fn gradients_match_finite_differences_2d(
            x in prop::array::uniform2(-5.0f64..5.0),
            y in prop::array::uniform2(-5.0f64..5.0),
        ) {
            let h = 1e-4;
            for m in models_2d() {
                let scale = m.constants.gradient_scale();
                let gx = m.grad_x(&x, &y);
                let gy = m.grad_y(&x, &y);
                let hess = m.mixed_hessian(&x, &y);
                for a in 0..2 {
                    let mut xp = x; xp[a] += h;
                    let mut xm = x; xm[a] -= h;
                    let mut yp = y; yp[a] += h;
                    let mut ym = y; ym[a] -= h;
                    let fx = (m.value(&xp, &y) - m.value(&xm, &y)) / (2.0 * h);
                    let fy = (m.value(&x, &yp) - m.value(&x, &ym)) / (2.0 * h);
                    prop_assert!(rel_close(gx[a], fx, scale));
                    prop_assert!(rel_close(gy[a], fy, scale));
                    for b in 0..2 {
                        let mut yp = y; yp[b] += h;
                        let mut ym = y; ym[b] -= h;
                        let fxy = (m.grad_x(&x, &yp)[a] - m.grad_x(&x, &ym)[a]) / (2.0 * h);
                        prop_assert!(rel_close(hess[2 * a + b], fxy, scale));
                    }
                }
            }
        }

        #[test]
        fn gauge_term_is_exact_difference(x in -5.0f64..5.0, y in -5.0f64..5.0) {
            let c = constants(1.0, 0.3);
            let phi = GaugeFunction::Sine { amplitude: 0.9, wavenumber: 2.1 };
            let gauged = gauged_action(c, half_x2(), phi);
            let base = standard_action(c, half_x2());
            let diff = gauged.value_1d(x, y) - base.value_1d(x, y);
            let tol = 4.0 * f64::EPSILON * base.value_1d(x, y).abs().max(1.0);
            prop_assert!((diff - (phi.value(x) - phi.value(y))).abs() <= tol);
            prop_assert_eq!(gauged.d_xy_1d(x, y), -c.mass / c.time_step);
        }
    }
}
