//! The discrete classical equation of motion
//! `∂S(x_n, x_{n-1})/∂x_n + ∂S(x_{n+1}, x_n)/∂x_n = 0`
//! and the momentum map `p_n = ∂S(x_n, x_{n-1})/∂x_n`.
//!
//! Each step is a root-finding problem for `x_{n+1}`. In one dimension the
//! residual is scanned over a bracket around `x_n` and every sign change is
//! refined by safeguarded Newton; several roots are flagged as non-unique and
//! none as no-solution. For admissible actions the residual is linear in
//! `x_{n+1}` with slope `-m/τ`, so exactly one root exists.

use serde::Serialize;

use crate::action::ActionModel;
use crate::roots::newton_bisect;
use crate::{Error, Result};

/// Root-finder settings. The bracket half-width defaults to
/// `10 |x_n - x_{n-1}| + 10 sqrt(ħτ/m)` and the residual tolerance is
/// `tolerance · m/τ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolverOptions {
    pub radius: Option<f64>,
    pub subintervals: usize,
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            radius: None,
            subintervals: 64,
            tolerance: 1e-10,
            max_iter: 100,
        }
    }
}

impl SolverOptions {
    fn radius_for(&self, model: &ActionModel, displacement: f64) -> f64 {
        self.radius.unwrap_or_else(|| {
            let c = model.constants;
            10.0 * displacement + 10.0 * (c.hbar * c.time_step / c.mass).sqrt()
        })
    }

    fn residual_tol(&self, model: &ActionModel) -> f64 {
        self.tolerance * model.constants.gradient_scale()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StepOutcome<P> {
    Unique(P),
    /// Several roots in the bracket; `chosen` is the one closest to the
    /// free-motion prediction `2x_n - x_{n-1}`.
    NonUnique { chosen: P, roots: Vec<P> },
    /// No root in the bracket. `min_residual` is the smallest `|g|` seen.
    NoSolution { min_residual: f64 },
}

impl<P: Clone> StepOutcome<P> {
    pub fn position(&self) -> Option<P> {
        match self {
            StepOutcome::Unique(x) | StepOutcome::NonUnique { chosen: x, .. } => Some(x.clone()),
            StepOutcome::NoSolution { .. } => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "step", rename_all = "snake_case")]
pub enum TrajectoryStatus {
    Complete,
    NoSolutionAt(usize),
    NonUniqueAt(usize),
}

/// Positions `x_0..x_N`, seeded by `x_{-1}`, with momenta and per-step
/// equation-of-motion residuals.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassicalTrajectory {
    pub initial_previous: Vec<f64>,
    pub times: Vec<usize>,
    pub positions: Vec<Vec<f64>>,
    pub momenta: Vec<Vec<f64>>,
    /// `|∂S(x_n, x_{n-1})/∂x_n + ∂S(x_{n+1}, x_n)/∂x_n|` for every `n` with a
    /// successor.
    pub residuals: Vec<f64>,
    pub status: TrajectoryStatus,
    /// Every step at which the root was not unique.
    pub non_unique_steps: Vec<usize>,
}

impl ClassicalTrajectory {
    /// First coordinate of `x_n`.
    pub fn x(&self, n: usize) -> f64 {
        self.positions[n][0]
    }

    pub fn p(&self, n: usize) -> f64 {
        self.momenta[n][0]
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// `p = ∂S(x, y)/∂x` at `(x_now, x_prev)`.
pub fn momentum_from_pair(model: &ActionModel, x_now: f64, x_prev: f64) -> f64 {
    model.d_x_1d(x_now, x_prev)
}

/// Scans `h` on `[center - radius, center + radius]` and refines each sign
/// change. `dh` is the derivative used by Newton.
fn scan_roots(
    h: impl Fn(f64) -> f64,
    dh: impl Fn(f64) -> f64,
    center: f64,
    radius: f64,
    prediction: f64,
    opts: &SolverOptions,
    tol: f64,
) -> StepOutcome<f64> {
    let m = opts.subintervals.max(1);
    let lo = center - radius;
    let step = 2.0 * radius / m as f64;
    let nodes: Vec<f64> = (0..=m).map(|i| lo + step * i as f64).collect();
    let values: Vec<f64> = nodes.iter().map(|&z| h(z)).collect();
    let both = |z: f64| (h(z), dh(z));

    let mut roots = Vec::new();
    for i in 0..m {
        let (a, b) = (values[i], values[i + 1]);
        if a == 0.0 {
            roots.push(nodes[i]);
        } else if b != 0.0 && a.signum() != b.signum() {
            if let Some(r) = newton_bisect(both, nodes[i], nodes[i + 1], tol, opts.max_iter) {
                roots.push(r);
            }
        }
    }
    if values[m] == 0.0 {
        roots.push(nodes[m]);
    }

    match roots.len() {
        0 => tangent_root(&h, &dh, &nodes, &values, lo, lo + 2.0 * radius, opts, tol),
        1 => StepOutcome::Unique(roots[0]),
        _ => {
            let chosen = roots
                .iter()
                .copied()
                .min_by(|a, b| (a - prediction).abs().total_cmp(&(b - prediction).abs()))
                .unwrap();
            StepOutcome::NonUnique { chosen, roots }
        }
    }
}

/// No sign change: the only possible roots are touching points. Newton from
/// the smallest scanned residual decides whether one exists in the bracket.
#[allow(clippy::too_many_arguments)]
fn tangent_root(
    h: &impl Fn(f64) -> f64,
    dh: &impl Fn(f64) -> f64,
    nodes: &[f64],
    values: &[f64],
    lo: f64,
    hi: f64,
    opts: &SolverOptions,
    tol: f64,
) -> StepOutcome<f64> {
    let (best, min_residual) = values
        .iter()
        .map(|v| v.abs())
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let mut z = nodes[best];
    for _ in 0..opts.max_iter {
        let hz = h(z);
        if hz.abs() <= tol {
            return StepOutcome::Unique(z);
        }
        let d = dh(z);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        z -= hz / d;
        if !(lo..=hi).contains(&z) {
            break;
        }
    }
    StepOutcome::NoSolution { min_residual }
}

/// Solves `momentum + ∂S(z, x_now)/∂y = 0` for `z` within `radius` of
/// `x_now`.
pub fn solve_next_position(
    model: &ActionModel,
    x_now: f64,
    momentum: f64,
    prediction: f64,
    radius: f64,
    opts: &SolverOptions,
) -> StepOutcome<f64> {
    scan_roots(
        |z| momentum + model.d_y_1d(z, x_now),
        |z| model.d_xy_1d(z, x_now),
        x_now,
        radius,
        prediction,
        opts,
        opts.residual_tol(model),
    )
}

/// One step of the discrete equation of motion in one dimension.
pub fn eom_step(model: &ActionModel, x_prev: f64, x_now: f64, opts: &SolverOptions) -> StepOutcome<f64> {
    let momentum = momentum_from_pair(model, x_now, x_prev);
    let radius = opts.radius_for(model, (x_now - x_prev).abs());
    solve_next_position(model, x_now, momentum, 2.0 * x_now - x_prev, radius, opts)
}

/// Recovers `x_{-1}` from `(x_0, p_0)` by solving `∂S(x_0, y)/∂x = p_0`.
pub fn seed_previous(model: &ActionModel, x0: f64, p0: f64, opts: &SolverOptions) -> Result<f64> {
    let c = model.constants;
    let guess = x0 - c.time_step * p0 / c.mass;
    let radius = opts.radius_for(model, (x0 - guess).abs());
    let outcome = scan_roots(
        |y| model.d_x_1d(x0, y) - p0,
        |y| model.d_xy_1d(x0, y),
        guess,
        radius,
        guess,
        opts,
        opts.residual_tol(model),
    );
    outcome.position().ok_or_else(|| {
        Error::Solver(format!("no x_-1 reproduces momentum {p0} at x_0 = {x0}"))
    })
}

fn check_steps(n_steps: usize) -> Result<()> {
    if n_steps == 0 {
        return Err(Error::InvalidParameter("n_steps must be at least 1".into()));
    }
    Ok(())
}

/// Integrates `n_steps` steps from `(x_0, x_{-1})` in one dimension.
pub fn integrate(
    model: &ActionModel,
    x0: f64,
    x_prev: f64,
    n_steps: usize,
    opts: &SolverOptions,
) -> Result<ClassicalTrajectory> {
    check_steps(n_steps)?;
    if model.dimension() != 1 {
        return Err(Error::UnsupportedAction {
            kind: model.kind.name(),
            operation: "integrate (use integrate_2d)",
        });
    }
    let mut xs = vec![x_prev, x0];
    let mut status = TrajectoryStatus::Complete;
    let mut non_unique_steps = Vec::new();
    for n in 1..=n_steps {
        let len = xs.len();
        match eom_step(model, xs[len - 2], xs[len - 1], opts) {
            StepOutcome::Unique(z) => xs.push(z),
            StepOutcome::NonUnique { chosen, .. } => {
                if non_unique_steps.is_empty() {
                    status = TrajectoryStatus::NonUniqueAt(n);
                }
                non_unique_steps.push(n);
                xs.push(chosen);
            }
            StepOutcome::NoSolution { .. } => {
                status = TrajectoryStatus::NoSolutionAt(n);
                break;
            }
        }
    }

    let momenta: Vec<Vec<f64>> = xs.windows(2).map(|w| vec![momentum_from_pair(model, w[1], w[0])]).collect();
    let residuals = xs
        .windows(3)
        .map(|w| (model.d_x_1d(w[1], w[0]) + model.d_y_1d(w[2], w[1])).abs())
        .collect();
    let positions: Vec<Vec<f64>> = xs[1..].iter().map(|&x| vec![x]).collect();
    Ok(ClassicalTrajectory {
        initial_previous: vec![x_prev],
        times: (0..positions.len()).collect(),
        positions,
        momenta,
        residuals,
        status,
        non_unique_steps,
    })
}

fn solve2(j: [[f64; 2]; 2], r: [f64; 2]) -> Option<[f64; 2]> {
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    Some([
        (j[1][1] * r[0] - j[0][1] * r[1]) / det,
        (j[0][0] * r[1] - j[1][0] * r[0]) / det,
    ])
}

fn newton_2d(
    g: impl Fn([f64; 2]) -> [f64; 2],
    jac: impl Fn([f64; 2]) -> [[f64; 2]; 2],
    start: [f64; 2],
    tol: f64,
    max_iter: usize,
) -> Option<[f64; 2]> {
    let mut z = start;
    for _ in 0..max_iter {
        let r = g(z);
        if r[0].hypot(r[1]) <= tol {
            return Some(z);
        }
        let dz = solve2(jac(z), r)?;
        z = [z[0] - dz[0], z[1] - dz[1]];
        if !(z[0].is_finite() && z[1].is_finite()) {
            return None;
        }
    }
    None
}

/// One step of the discrete equation of motion in two dimensions, by Newton
/// from the free-motion prediction with the analytic mixed Hessian as
/// Jacobian, falling back to a finite-difference Jacobian.
pub fn eom_step_2d(
    model: &ActionModel,
    x_prev: [f64; 2],
    x_now: [f64; 2],
    opts: &SolverOptions,
) -> StepOutcome<[f64; 2]> {
    let p = model.grad_x(&x_now, &x_prev);
    let g = |z: [f64; 2]| {
        let gy = model.grad_y(&z, &x_now);
        [p[0] + gy[0], p[1] + gy[1]]
    };
    // ∂g_α/∂z_β = ∂²S/∂x_β∂y_α
    let analytic = |z: [f64; 2]| {
        let h = model.mixed_hessian(&z, &x_now);
        [[h[0], h[2]], [h[1], h[3]]]
    };
    let fd = |z: [f64; 2]| {
        let step = 1e-6 * (1.0 + z[0].abs().max(z[1].abs()));
        let mut j = [[0.0; 2]; 2];
        for b in 0..2 {
            let mut zp = z;
            zp[b] += step;
            let mut zm = z;
            zm[b] -= step;
            let (gp, gm) = (g(zp), g(zm));
            for a in 0..2 {
                j[a][b] = (gp[a] - gm[a]) / (2.0 * step);
            }
        }
        j
    };
    let start = [2.0 * x_now[0] - x_prev[0], 2.0 * x_now[1] - x_prev[1]];
    let tol = opts.residual_tol(model);
    match newton_2d(g, analytic, start, tol, opts.max_iter).or_else(|| newton_2d(g, fd, start, tol, opts.max_iter)) {
        Some(z) => StepOutcome::Unique(z),
        None => {
            let r = g(start);
            StepOutcome::NoSolution {
                min_residual: r[0].hypot(r[1]),
            }
        }
    }
}

/// Two-dimensional counterpart of [`integrate`].
pub fn integrate_2d(
    model: &ActionModel,
    x0: [f64; 2],
    x_prev: [f64; 2],
    n_steps: usize,
    opts: &SolverOptions,
) -> Result<ClassicalTrajectory> {
    check_steps(n_steps)?;
    if model.dimension() != 2 {
        return Err(Error::UnsupportedAction {
            kind: model.kind.name(),
            operation: "integrate_2d",
        });
    }
    let mut xs = vec![x_prev, x0];
    let mut status = TrajectoryStatus::Complete;
    for n in 1..=n_steps {
        let len = xs.len();
        match eom_step_2d(model, xs[len - 2], xs[len - 1], opts).position() {
            Some(z) => xs.push(z),
            None => {
                status = TrajectoryStatus::NoSolutionAt(n);
                break;
            }
        }
    }
    let momenta = xs.windows(2).map(|w| model.grad_x(&w[1], &w[0])).collect();
    let residuals = xs
        .windows(3)
        .map(|w| {
            let a = model.grad_x(&w[1], &w[0]);
            let b = model.grad_y(&w[2], &w[1]);
            (a[0] + b[0]).hypot(a[1] + b[1])
        })
        .collect();
    let positions: Vec<Vec<f64>> = xs[1..].iter().map(|x| x.to_vec()).collect();
    Ok(ClassicalTrajectory {
        initial_previous: x_prev.to_vec(),
        times: (0..positions.len()).collect(),
        positions,
        momenta,
        residuals,
        status,
        non_unique_steps: Vec::new(),
    })
}

/// Closed-form recursion `x_{n+1} = 2x_n - x_{n-1} - (τ²/m) V'(x_n)` for
/// the standard action; returns `x_0..x_N`.
pub fn leapfrog_reference(
    v_prime: impl Fn(f64) -> f64,
    mass: f64,
    tau: f64,
    x0: f64,
    x_prev: f64,
    n_steps: usize,
) -> Vec<f64> {
    let k = tau * tau / mass;
    let mut xs = Vec::with_capacity(n_steps + 1);
    let (mut prev, mut now) = (x_prev, x0);
    xs.push(now);
    for _ in 0..n_steps {
        let next = 2.0 * now - prev - k * v_prime(now);
        prev = now;
        now = next;
        xs.push(now);
    }
    xs
}
