//! Adaptive Simpson quadrature on a finite interval.

use crate::error::{Result, ScatterError};

const MAX_DEPTH: u32 = 60;

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`, refining each
/// half where the Simpson estimates disagree and applying the Richardson
/// correction on accepted panels.
pub(crate) fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut exhausted = false;
    let v = refine(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH, &mut exhausted);
    if !v.is_finite() {
        return Err(ScatterError::Numerical(
            "quadrature produced a non-finite value".into(),
        ));
    }
    if exhausted {
        return Err(ScatterError::Convergence {
            what: "adaptive Simpson quadrature",
            iterations: MAX_DEPTH as usize,
            residual: tol,
        });
    }
    Ok(v)
}

#[allow(clippy::too_many_arguments)]
fn refine(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    exhausted: &mut bool,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol || m <= a || b <= m {
        return left + right + delta / 15.0;
    }
    if depth == 0 {
        *exhausted = true;
        return left + right + delta / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, exhausted)
        + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, exhausted)
}
