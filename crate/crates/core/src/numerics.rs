//! Scalar numerical routines used by the solvers.

use std::f64::consts::E;

use crate::error::{Error, Result};

const INV_E: f64 = 1.0 / E;
const BRANCH_SLACK: f64 = 1e-15;
const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Principal branch `W₀` of the Lambert W function on `[−1/e, ∞)`.
///
/// Halley iteration from a piecewise initial guess: branch-point series near
/// `−1/e`, `ln(1 + x)` in the middle and the two-term asymptote for large `x`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    if x.is_nan() || x < -INV_E - BRANCH_SLACK {
        return Err(Error::Domain(format!("lambert_w0 requires x >= -1/e, got {x}")));
    }
    if x <= -INV_E {
        return Ok(-1.0);
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }

    let mut w = if x < -0.25 {
        let p = (2.0 * (E * x + 1.0)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if x < 3.0 {
        x.ln_1p()
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };

    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1.abs() < 1e-300 {
            break;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        if denom == 0.0 || !denom.is_finite() {
            break;
        }
        let step = f / denom;
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * (1.0 + w.abs()) {
            break;
        }
    }
    Ok(w.max(-1.0))
}

/// Bracketed root of a continuous `f` on `[lo, hi]`.
///
/// Safeguarded secant/bisection: a secant step is accepted only when it
/// lands in the inner 90% of the current bracket, otherwise the bracket is
/// halved. Iterates until the bracket is no wider than `tol·|x|` (which also
/// satisfies `tol·max(1, |x|)`), the function vanishes, or the bracket can
/// no longer shrink in floating point. The returned point always lies in the
/// initial bracket.
pub fn find_root<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.is_nan() || fb.is_nan() || fa.signum() == fb.signum() {
        return Err(Error::NotBracketed {
            lo: a,
            hi: b,
            f_lo: fa,
            f_hi: fb,
        });
    }

    let mut use_secant = true;
    for _ in 0..400 {
        let width = b - a;
        let scale = a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
        if width <= tol * a.abs().min(b.abs()).max(f64::MIN_POSITIVE) || width <= 2.0 * f64::EPSILON * scale {
            break;
        }
        let mid = a + 0.5 * width;
        let mut x = mid;
        if use_secant {
            let s = b - fb * (b - a) / (fb - fa);
            if s.is_finite() && s > a + 0.05 * width && s < b - 0.05 * width {
                x = s;
            }
        }
        if x <= a || x >= b {
            break;
        }
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        let old_width = width;
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
        // Fall back to bisection whenever a step fails to halve the bracket.
        use_secant = b - a <= 0.5 * old_width;
    }
    Ok(if fa.abs() <= fb.abs() { a } else { b })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub grid_points: usize,
    pub refine_tol: f64,
    pub max_iter: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            grid_points: 2000,
            refine_tol: 1e-10,
            max_iter: 200,
        }
    }
}

impl SearchOptions {
    pub fn validate(&self) -> Result<()> {
        if self.grid_points < 3 {
            return Err(Error::Domain(format!(
                "grid_points must be >= 3, got {}",
                self.grid_points
            )));
        }
        if self.refine_tol.is_nan() || self.refine_tol <= 0.0 {
            return Err(Error::Domain(format!(
                "refine_tol must be > 0, got {}",
                self.refine_tol
            )));
        }
        Ok(())
    }
}

/// Maximise `f` on `[lo, hi]`: uniform grid scan, then golden-section
/// refinement inside the two cells around the best grid point.
///
/// Ties on the grid resolve to the smallest abscissa, and the refined point
/// replaces the grid point only if it is strictly better, so the result is
/// never below the best grid value.
pub fn maximize_on_interval<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, opts: &SearchOptions) -> (f64, f64) {
    let n = opts.grid_points.max(3);
    if hi.is_nan() || lo.is_nan() || hi <= lo {
        return (lo, f(lo));
    }
    let step = (hi - lo) / (n - 1) as f64;
    let node = |i: usize| if i == n - 1 { hi } else { lo + step * i as f64 };

    let mut best_i = 0;
    let mut best_f = f64::NEG_INFINITY;
    for i in 0..n {
        let v = f(node(i));
        if v > best_f {
            best_f = v;
            best_i = i;
        }
    }
    let best_x = node(best_i);
    if !best_f.is_finite() {
        return (best_x, best_f);
    }

    let mut a = node(best_i.saturating_sub(1));
    let mut b = node((best_i + 1).min(n - 1));
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..opts.max_iter {
        let centre = 0.5 * (a + b);
        if b - a <= opts.refine_tol * centre.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d);
        }
    }
    let (rx, rf) = if fc >= fd { (c, fc) } else { (d, fd) };
    if rf > best_f {
        (rx, rf)
    } else {
        (best_x, best_f)
    }
}
