//! Scatter estimators about a known center: the spatial sign covariance
//! matrix, Tyler's M-estimator and the eigenvalue-corrected SSCM.

use alloc::vec::Vec;

use crate::asymptotics::invert_phi_map;
use crate::error::{invalid, Result, ScatterError};
use crate::linalg::{cholesky, forward_substitute, sym_eig, Matrix, SymEigen, SymMatrix};

/// Default relative Frobenius tolerance of the Tyler iteration.
pub const TYLER_TOL: f64 = 1e-10;
/// Default iteration cap of the Tyler iteration.
pub const TYLER_MAX_ITER: usize = 1000;
/// Observations closer to the center than this multiple of the median
/// nonzero distance are dropped.
pub const DROP_FACTOR: f64 = 1e-12;
/// Smallest eigenvalue of the direction scatter, relative to the largest,
/// below which the directions are treated as not spanning.
pub const SPAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorTag {
    Sscm,
    Tyler,
    CorrectedSscm,
}

impl EstimatorTag {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorTag::Sscm => "sscm",
            EstimatorTag::Tyler => "tyler",
            EstimatorTag::CorrectedSscm => "corrected_sscm",
        }
    }
}

/// A trace-one scatter estimate with diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterEstimate {
    pub matrix: SymMatrix,
    pub tag: EstimatorTag,
    /// IRLS steps taken (Tyler only, zero otherwise).
    pub iterations: usize,
    /// Fixed-point residual of the returned matrix (Tyler only).
    pub residual: f64,
    /// Observations retained after dropping those at the center.
    pub n_used: usize,
}

impl ScatterEstimate {
    pub fn eigen(&self) -> Result<SymEigen> {
        sym_eig(&self.matrix)
    }
}

/// Unit directions θ_i = (x_i − μ)/‖x_i − μ‖ of the observations that are not
/// at the center.
pub fn directions(data: &Matrix, center: &[f64]) -> Result<Vec<Vec<f64>>> {
    Ok(retained(data, center)?
        .into_iter()
        .map(|(v, r)| v.into_iter().map(|x| x / r).collect())
        .collect())
}

/// Centered observations `x_i − μ` with their norms, minus those at the center.
fn retained(data: &Matrix, center: &[f64]) -> Result<Vec<(Vec<f64>, f64)>> {
    let (n, d) = (data.rows(), data.cols());
    if n == 0 || d == 0 {
        return Err(invalid!("data must have at least one row and one column"));
    }
    if center.len() != d {
        return Err(invalid!(
            "center has length {} but data has {d} columns",
            center.len()
        ));
    }
    if !data.is_finite() || center.iter().any(|c| !c.is_finite()) {
        return Err(invalid!("data and center must be finite"));
    }
    let diffs: Vec<(Vec<f64>, f64)> = (0..n)
        .map(|i| {
            let v: Vec<f64> = data.row(i).iter().zip(center).map(|(x, m)| x - m).collect();
            let norm = libm::sqrt(v.iter().map(|x| x * x).sum::<f64>());
            (v, norm)
        })
        .collect();
    let mut nonzero: Vec<f64> = diffs.iter().map(|(_, r)| *r).filter(|&r| r > 0.0).collect();
    if nonzero.is_empty() {
        return Err(ScatterError::DegenerateData(
            "every observation coincides with the center".into(),
        ));
    }
    let threshold = DROP_FACTOR * median(&mut nonzero);
    Ok(diffs
        .into_iter()
        .filter(|(_, r)| *r >= threshold && *r > 0.0)
        .collect())
}

fn direction_scatter(dim: usize, theta: &[Vec<f64>]) -> SymMatrix {
    let w = 1.0 / theta.len() as f64;
    SymMatrix::outer_sum(dim, theta.iter().map(|t| (w, t.as_slice())))
}

/// Spatial sign covariance matrix about `center`.
pub fn sscm(data: &Matrix, center: &[f64]) -> Result<ScatterEstimate> {
    let theta = directions(data, center)?;
    let s = direction_scatter(data.cols(), &theta);
    // Each θθᵀ has unit trace; renormalizing only removes rounding.
    let matrix = s.trace_normalized()?;
    Ok(ScatterEstimate {
        matrix,
        tag: EstimatorTag::Sscm,
        iterations: 0,
        residual: 0.0,
        n_used: theta.len(),
    })
}

/// One application of the Tyler map, renormalized to unit trace.
fn tyler_step(t: &SymMatrix, theta: &[Vec<f64>]) -> Result<SymMatrix> {
    let d = t.dim();
    let l = cholesky(t)?;
    let scale = d as f64 / theta.len() as f64;
    let mut buf = alloc::vec![0.0; d];
    let mut weights = Vec::with_capacity(theta.len());
    for th in theta {
        buf.copy_from_slice(th);
        forward_substitute(&l, &mut buf);
        let q: f64 = buf.iter().map(|x| x * x).sum();
        if !(q > 0.0 && q.is_finite()) {
            return Err(ScatterError::Numerical("Tyler weight is not finite".into()));
        }
        weights.push(scale / q);
    }
    let next = SymMatrix::outer_sum(
        d,
        weights.iter().zip(theta).map(|(&w, t)| (w, t.as_slice())),
    );
    next.trace_normalized()
}

fn relative_change(new: &SymMatrix, old: &SymMatrix) -> Result<f64> {
    let diff = new.as_matrix().sub(old.as_matrix())?;
    Ok(diff.frobenius_norm() / old.frobenius_norm())
}

/// Tyler's scatter matrix with the default tolerance and iteration cap.
pub fn tyler(data: &Matrix, center: &[f64]) -> Result<ScatterEstimate> {
    tyler_with(data, center, TYLER_TOL, TYLER_MAX_ITER)
}

/// Tyler's scatter matrix by the fixed-point iteration
/// T ← (d/n) Σ θθᵀ / (θᵀT⁻¹θ), renormalized to unit trace, from T₀ = I/d.
///
/// With exactly d retained observations every `Σ c_i θ_iθ_iᵀ` (c_i > 0) is a
/// fixed point; the sample covariance about the center is returned then.
pub fn tyler_with(
    data: &Matrix,
    center: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<ScatterEstimate> {
    tyler_trace(data, center, tol, max_iter, |_| {})
}

/// As [`tyler_with`], calling `observe` with the relative change of every step.
pub fn tyler_trace(
    data: &Matrix,
    center: &[f64],
    tol: f64,
    max_iter: usize,
    mut observe: impl FnMut(f64),
) -> Result<ScatterEstimate> {
    if !(tol > 0.0) || max_iter == 0 {
        return Err(invalid!("tolerance and iteration cap must be positive"));
    }
    let d = data.cols();
    if data.rows() < d {
        return Err(ScatterError::Existence(alloc::format!(
            "Tyler's estimate needs n >= d, got n = {} and d = {d}",
            data.rows()
        )));
    }
    let kept = retained(data, center)?;
    let theta: Vec<Vec<f64>> = kept
        .iter()
        .map(|(v, r)| v.iter().map(|x| x / r).collect())
        .collect();
    check_spanning(d, &theta)?;
    if theta.len() == d {
        let t = SymMatrix::outer_sum(d, kept.iter().map(|(v, _)| (1.0, v.as_slice())))
            .trace_normalized()?;
        let check = tyler_step(&t, &theta).map_err(existence_on_breakdown)?;
        return Ok(ScatterEstimate {
            residual: relative_change(&check, &t)?,
            matrix: t,
            tag: EstimatorTag::Tyler,
            iterations: 0,
            n_used: d,
        });
    }

    let mut t = SymMatrix::identity(d).scaled(1.0 / d as f64);
    let mut residual = f64::INFINITY;
    for iteration in 1..=max_iter {
        let next = tyler_step(&t, &theta).map_err(existence_on_breakdown)?;
        residual = relative_change(&next, &t)?;
        observe(residual);
        t = next;
        if residual < tol {
            let check = tyler_step(&t, &theta).map_err(existence_on_breakdown)?;
            return Ok(ScatterEstimate {
                residual: relative_change(&check, &t)?,
                matrix: t,
                tag: EstimatorTag::Tyler,
                iterations: iteration,
                n_used: theta.len(),
            });
        }
    }
    Err(ScatterError::Convergence {
        what: "Tyler iteration",
        iterations: max_iter,
        residual,
    })
}

fn existence_on_breakdown(e: ScatterError) -> ScatterError {
    match e {
        ScatterError::Numerical(m) => {
            ScatterError::Existence(alloc::format!("Tyler iterate lost definiteness: {m}"))
        }
        other => other,
    }
}

fn check_spanning(d: usize, theta: &[Vec<f64>]) -> Result<()> {
    if theta.len() < d {
        return Err(ScatterError::Existence(alloc::format!(
            "only {} observations away from the center in dimension {d}",
            theta.len()
        )));
    }
    let eig = sym_eig(&direction_scatter(d, theta))?;
    let (max, min) = (eig.values[0], eig.values[d - 1]);
    if !(min > SPAN_TOL * max) {
        return Err(ScatterError::Existence(
            "directions do not span the space".into(),
        ));
    }
    Ok(())
}

/// SSCM with its eigenvalues mapped back through the inverse bias map,
/// giving a consistent estimate of the trace-one shape.
pub fn corrected_sscm(data: &Matrix, center: &[f64]) -> Result<ScatterEstimate> {
    let s = sscm(data, center)?;
    let eig = s.eigen()?;
    let d = eig.values.len();
    let (max, min) = (eig.values[0], eig.values[d - 1]);
    if !(min > SPAN_TOL * max) {
        return Err(ScatterError::RankDeficient(alloc::format!(
            "SSCM has a zero eigenvalue ({min:.3e})"
        )));
    }
    let total: f64 = eig.values.iter().sum();
    let delta: Vec<f64> = eig.values.iter().map(|v| v / total).collect();
    let lambda = invert_phi_map(&delta)?;
    let corrected = SymEigen {
        values: lambda,
        vectors: eig.vectors,
    };
    Ok(ScatterEstimate {
        matrix: corrected.reconstruct().trace_normalized()?,
        tag: EstimatorTag::CorrectedSscm,
        iterations: 0,
        residual: 0.0,
        n_used: s.n_used,
    })
}

/// Sample median; the mean of the two central order statistics for even
/// counts. Reorders `values`.
pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty slice");
    values.sort_unstable_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Coordinatewise median of the rows.
pub fn coordinatewise_median(data: &Matrix) -> Result<Vec<f64>> {
    if data.rows() == 0 {
        return Err(invalid!("cannot take the median of an empty sample"));
    }
    Ok((0..data.cols())
        .map(|j| median(&mut data.column(j)))
        .collect())
}
