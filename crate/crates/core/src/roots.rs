//! Scalar root finding and one-dimensional minimization.

/// Safeguarded Newton iteration on a bracket `[lo, hi]` with
/// `f(lo) f(hi) <= 0`. A Newton step that would leave the current bracket,
/// or that fails to halve the bracket fast enough, is replaced by bisection.
///
/// Returns the abscissa once `|f| <= f_tol` or the bracket collapses to
/// machine resolution; `None` if the bracket is invalid.
pub fn newton_bisect(
    f: impl Fn(f64) -> (f64, f64),
    mut lo: f64,
    mut hi: f64,
    f_tol: f64,
    max_iter: usize,
) -> Option<f64> {
    let (flo, _) = f(lo);
    let (fhi, _) = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    // orient so that f(lo) < 0
    if flo > 0.0 {
        std::mem::swap(&mut lo, &mut hi);
    }

    let mut x = 0.5 * (lo + hi);
    let mut dx_old = (hi - lo).abs();
    let mut dx = dx_old;
    let (mut fx, mut dfx) = f(x);

    for _ in 0..max_iter {
        if fx.abs() <= f_tol {
            return Some(polish(&f, x, fx, dfx));
        }
        let newton_leaves = ((x - hi) * dfx - fx) * ((x - lo) * dfx - fx) > 0.0;
        let too_slow = (2.0 * fx).abs() > (dx_old * dfx).abs();
        dx_old = dx;
        if newton_leaves || too_slow || dfx == 0.0 {
            dx = 0.5 * (hi - lo);
            x = lo + dx;
        } else {
            dx = fx / dfx;
            x -= dx;
        }
        if dx.abs() <= f64::EPSILON * x.abs().max(1.0) {
            return Some(x);
        }
        (fx, dfx) = f(x);
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
    }
    Some(x)
}

/// One extra Newton step, kept only if it reduces the residual.
fn polish(f: &impl Fn(f64) -> (f64, f64), x: f64, fx: f64, dfx: f64) -> f64 {
    if dfx == 0.0 || !dfx.is_finite() {
        return x;
    }
    let candidate = x - fx / dfx;
    let (fc, _) = f(candidate);
    if fc.abs() < fx.abs() {
        candidate
    } else {
        x
    }
}

/// Golden-section search for the minimum of a unimodal `f` on `[lo, hi]`.
pub fn golden_section_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, x_tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while (hi - lo).abs() > x_tol {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn finds_cubic_root() {
        let f = |x: f64| (x * x * x - 2.0 * x - 5.0, 3.0 * x * x - 2.0);
        let root = newton_bisect(f, 2.0, 3.0, 1e-14, 100).unwrap();
        assert_abs_diff_eq!(root, 2.094_551_481_542_326_5, epsilon = 1e-13);
    }

    #[test]
    fn survives_flat_derivative() {
        // Newton from the midpoint would shoot off; bisection must take over
        let f = |x: f64| (x.atan(), 1.0 / (1.0 + x * x));
        let root = newton_bisect(f, -20.0, 30.0, 1e-14, 200).unwrap();
        assert_abs_diff_eq!(root, 0.0, epsilon = 1e-13);
    }

    #[test]
    fn rejects_non_bracket() {
        assert!(newton_bisect(|x| (x * x + 1.0, 2.0 * x), -1.0, 1.0, 1e-12, 50).is_none());
    }

    #[test]
    fn linear_root_is_exact() {
        let f = |x: f64| (3.0 * (x - 0.1), 3.0);
        let root = newton_bisect(f, -5.0, 5.0, 1e-10, 50).unwrap();
        assert_abs_diff_eq!(root, 0.1, epsilon = 1e-15);
    }

    #[test]
    fn golden_section_finds_vertex() {
        let (x, fx) = golden_section_min(|x| (x - 1.3).abs() + 0.5, 0.0, 2.0, 1e-12);
        assert_abs_diff_eq!(x, 1.3, epsilon = 1e-10);
        assert_abs_diff_eq!(fx, 0.5, epsilon = 1e-10);
    }
}
