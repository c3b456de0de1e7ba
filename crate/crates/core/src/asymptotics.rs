//! Eigenvalue bias map of the SSCM, the chi-square ratio moments φ and ψ, the
//! α coefficients and the asymptotic covariances of estimated eigenprojections.
//!
//! With S = Σ_r λ_r χ²_{d_r} the moments are
//!
//! ```text
//! φ_j     = E[λ_j χ²_j / S] / d_j
//! ψ_{j,k} = E[λ_j λ_k χ²_j χ²_k / S²] / (d_j d_k)
//! ```
//!
//! Writing 1/S = ∫ e^{-tS} dt and 1/S² = ∫ t e^{-tS} dt and using the chi-square
//! Laplace transform turns both into one-dimensional integrals over t ∈ (0, ∞):
//!
//! ```text
//! φ_j     = λ_j     ∫ (1+2λ_j t)^-1                  Π_r (1+2λ_r t)^(-d_r/2) dt
//! ψ_{j,k} = λ_j λ_k ∫ t (1+2λ_j t)^-1 (1+2λ_k t)^-1  Π_r (1+2λ_r t)^(-d_r/2) dt
//! ```
//!
//! which are evaluated after mapping t = u / (1 − u) onto the unit interval.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result, ScatterError};
use crate::linalg::{commutation_matrix, kron, Matrix, Spectrum, TensorMatrix};
use crate::quad::adaptive_simpson;
use crate::special;

/// Absolute tolerance handed to the quadrature.
pub const QUAD_TOL: f64 = 1e-11;
/// Relative gap below which two eigenvalue groups count as merged.
pub const DEGENERATE_GAP: f64 = 1e-10;

const INVERT_STEP: f64 = 0.5;
const INVERT_TOL: f64 = 1e-10;
const INVERT_MAX_ITER: usize = 10_000;

/// Which estimator an asymptotic covariance refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    Tyler,
    Sscm,
}

/// Scatter with two distinct eigenvalues: the larger with multiplicity `d1`,
/// and `rho² = λ₍₂₎ / λ₍₁₎`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoGroupShape {
    d: usize,
    d1: usize,
    rho: f64,
    gamma: f64,
}

impl TwoGroupShape {
    pub fn new(d: usize, d1: usize, rho: f64) -> Result<Self> {
        if d1 == 0 || d1 >= d {
            return Err(invalid!("need 1 <= d1 < d, got d = {d}, d1 = {d1}"));
        }
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(ScatterError::Domain(alloc::format!(
                "rho = {rho} is outside (0, 1]"
            )));
        }
        Ok(TwoGroupShape {
            d,
            d1,
            rho,
            gamma: 1.0 / (rho * rho),
        })
    }

    /// From the eigenvalue ratio γ = λ₍₁₎/λ₍₂₎ > 1.
    pub fn from_gamma(d: usize, d1: usize, gamma: f64) -> Result<Self> {
        if !(gamma >= 1.0 && gamma.is_finite()) {
            return Err(ScatterError::Domain(alloc::format!(
                "gamma = {gamma} must be >= 1"
            )));
        }
        let mut s = TwoGroupShape::new(d, d1, 1.0 / libm::sqrt(gamma))?;
        s.gamma = gamma;
        Ok(s)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn d1(&self) -> usize {
        self.d1
    }

    pub fn d2(&self) -> usize {
        self.d - self.d1
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Canonical-basis spectrum diag(1·I_{d1}, ρ²·I_{d2}).
    pub fn spectrum(&self) -> Result<Spectrum> {
        if self.rho == 1.0 {
            return Spectrum::canonical(&[1.0], &[self.d]);
        }
        Spectrum::canonical(&[1.0, self.rho * self.rho], &[self.d1, self.d2()])
    }
}

/// φ, ψ and both α tables for one spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticCoefficients {
    pub phi: Vec<f64>,
    /// Symmetric; the diagonal is unused and left at zero.
    pub psi: Vec<Vec<f64>>,
    pub alpha_tyler: Vec<Vec<f64>>,
    pub alpha_sscm: Vec<Vec<f64>>,
}

impl AsymptoticCoefficients {
    pub fn compute(spectrum: &Spectrum) -> Result<Self> {
        let m = spectrum.group_count();
        let d = spectrum.dim();
        let phi = phi_map(spectrum)?;
        let mut psi = vec![vec![0.0; m]; m];
        let mut alpha_tyler = vec![vec![0.0; m]; m];
        let mut alpha_sscm = vec![vec![0.0; m]; m];
        let lambda = spectrum.distinct_values();
        for j in 0..m {
            for k in (j + 1)..m {
                let p = psi_jk(spectrum, j, k)?;
                psi[j][k] = p;
                psi[k][j] = p;
                let at = alpha_tyler_coefficient(lambda[j], lambda[k], d)?;
                alpha_tyler[j][k] = at;
                alpha_tyler[k][j] = at;
                let dphi = phi[j] - phi[k];
                let a_s = 2.0 * p / (dphi * dphi);
                alpha_sscm[j][k] = a_s;
                alpha_sscm[k][j] = a_s;
            }
        }
        Ok(AsymptoticCoefficients {
            phi,
            psi,
            alpha_tyler,
            alpha_sscm,
        })
    }
}

fn normalized_eigenvalues(values: &[f64], multiplicities: &[usize]) -> Result<Vec<f64>> {
    if values.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(ScatterError::Domain(
            "eigenvalues must be positive and finite".into(),
        ));
    }
    let trace: f64 = values
        .iter()
        .zip(multiplicities)
        .map(|(l, &m)| l * m as f64)
        .sum();
    Ok(values.iter().map(|l| l / trace).collect())
}

/// Π_r (1 + (2λ_r − 1)u)^(−d_r/2), the t-substituted Laplace transform of S
/// without its (1 − u)^(d/2) factor.
fn laplace_kernel(lambda: &[f64], mult: &[usize], u: f64) -> f64 {
    lambda
        .iter()
        .zip(mult)
        .map(|(&l, &m)| {
            let a = 1.0 + (2.0 * l - 1.0) * u;
            match m {
                1 => 1.0 / libm::sqrt(a),
                2 => 1.0 / a,
                _ => libm::pow(a, -0.5 * m as f64),
            }
        })
        .product()
}

/// φ for each group of an arbitrary positive spectrum given as distinct
/// values and multiplicities (values need not be distinct here).
pub fn phi_values(values: &[f64], multiplicities: &[usize]) -> Result<Vec<f64>> {
    if values.len() != multiplicities.len() || values.is_empty() {
        return Err(invalid!(
            "values and multiplicities must have equal non-zero length"
        ));
    }
    let lambda = normalized_eigenvalues(values, multiplicities)?;
    let d: usize = multiplicities.iter().sum();
    let edge = 0.5 * d as f64 - 1.0;
    lambda
        .iter()
        .map(|&lj| {
            let integrand = |u: f64| {
                let aj = 1.0 + (2.0 * lj - 1.0) * u;
                lj * libm::pow(1.0 - u, edge) / aj * laplace_kernel(&lambda, multiplicities, u)
            };
            adaptive_simpson(&integrand, 0.0, 1.0, QUAD_TOL)
        })
        .collect()
}

/// Eigenvalues φ₍ⱼ₎ of Ξ = E[θθᵀ], one per distinct group of the scatter
/// spectrum. Invariant to the scale of the spectrum.
pub fn phi_map(spectrum: &Spectrum) -> Result<Vec<f64>> {
    phi_values(spectrum.distinct_values(), spectrum.multiplicities())
}

/// ψ₍ⱼ,ₖ₎ for groups `j ≠ k`.
pub fn psi_jk(spectrum: &Spectrum, j: usize, k: usize) -> Result<f64> {
    let m = spectrum.group_count();
    if j == k {
        return Err(invalid!(
            "psi is only defined for distinct groups (j = k = {j})"
        ));
    }
    if j >= m || k >= m {
        return Err(invalid!(
            "group index out of range ({j}, {k}) for {m} groups"
        ));
    }
    let mult = spectrum.multiplicities();
    let lambda = normalized_eigenvalues(spectrum.distinct_values(), mult)?;
    psi_normalized(&lambda, mult, j, k)
}

/// ψ₍ⱼ,ₖ₎ for trace-one `lambda`.
fn psi_normalized(lambda: &[f64], mult: &[usize], j: usize, k: usize) -> Result<f64> {
    let d: usize = mult.iter().sum();
    let edge = 0.5 * d as f64 - 1.0;
    let (lj, lk) = (lambda[j], lambda[k]);
    let integrand = |u: f64| {
        let aj = 1.0 + (2.0 * lj - 1.0) * u;
        let ak = 1.0 + (2.0 * lk - 1.0) * u;
        lj * lk * u * libm::pow(1.0 - u, edge) / (aj * ak) * laplace_kernel(lambda, mult, u)
    };
    adaptive_simpson(&integrand, 0.0, 1.0, QUAD_TOL)
}

fn check_gap(lj: f64, lk: f64, j: usize, k: usize) -> Result<()> {
    let gap = (lj - lk).abs();
    if gap <= DEGENERATE_GAP * lj.abs().max(lk.abs()) {
        return Err(ScatterError::DegenerateSpectrum { j, k, gap });
    }
    Ok(())
}

/// α_T = (d+2)/d · 2λ_jλ_k / (λ_j − λ_k)².
pub fn alpha_tyler(lambda_j: f64, lambda_k: f64, d: usize) -> Result<f64> {
    if !(lambda_j > 0.0 && lambda_k > 0.0) {
        return Err(ScatterError::Domain("eigenvalues must be positive".into()));
    }
    alpha_tyler_coefficient(lambda_j, lambda_k, d)
}

fn alpha_tyler_coefficient(lambda_j: f64, lambda_k: f64, d: usize) -> Result<f64> {
    check_gap(lambda_j, lambda_k, 0, 1)?;
    let df = d as f64;
    let diff = lambda_j - lambda_k;
    Ok((df + 2.0) / df * 2.0 * lambda_j * lambda_k / (diff * diff))
}

/// α_S = 2ψ₍ⱼ,ₖ₎ / (φ₍ⱼ₎ − φ₍ₖ₎)².
pub fn alpha_sscm(spectrum: &Spectrum, j: usize, k: usize) -> Result<f64> {
    let lambda = spectrum.distinct_values();
    if j >= lambda.len() || k >= lambda.len() || j == k {
        return Err(invalid!(
            "need two distinct valid group indices, got ({j}, {k})"
        ));
    }
    check_gap(lambda[j], lambda[k], j, k)?;
    let phi = phi_map(spectrum)?;
    let psi = psi_jk(spectrum, j, k)?;
    let dphi = phi[j] - phi[k];
    check_gap(phi[j], phi[k], j, k)?;
    Ok(2.0 * psi / (dphi * dphi))
}

/// `M_{j,k} = ½ (I + K_{d,d})(P_j ⊗ P_k + P_k ⊗ P_j)`.
pub fn projection_component(spectrum: &Spectrum, j: usize, k: usize) -> Result<TensorMatrix> {
    let d = spectrum.dim();
    let pj = spectrum.projector(j)?.into_matrix();
    let pk = spectrum.projector(k)?.into_matrix();
    let sum = kron(&pj, &pk)?.add(&kron(&pk, &pj)?)?;
    let k_dd = commutation_matrix(d)?;
    let sym = Matrix::identity(d * d).add(k_dd.matrix())?.scaled(0.5);
    TensorMatrix::new(d, sym.matmul(&sum)?)
}

/// Asymptotic covariance of √n vec(P̂_j − P_j): Σ_{k≠j} α_{j,k} M_{j,k}.
pub fn eigenprojection_covariance(
    spectrum: &Spectrum,
    j: usize,
    estimator: Estimator,
) -> Result<TensorMatrix> {
    let m = spectrum.group_count();
    if j >= m {
        return Err(invalid!("group index {j} out of range for {m} groups"));
    }
    let lambda = spectrum.distinct_values();
    for a in 0..m {
        for b in (a + 1)..m {
            check_gap(lambda[a], lambda[b], a, b)?;
        }
    }
    let d = spectrum.dim();
    let phi = match estimator {
        Estimator::Sscm => Some(phi_map(spectrum)?),
        Estimator::Tyler => None,
    };
    let mut total = Matrix::zeros(d * d, d * d);
    for k in (0..m).filter(|&k| k != j) {
        let alpha = match &phi {
            None => alpha_tyler_coefficient(lambda[j], lambda[k], d)?,
            Some(phi) => {
                check_gap(phi[j], phi[k], j, k)?;
                let dphi = phi[j] - phi[k];
                2.0 * psi_jk(spectrum, j, k)? / (dphi * dphi)
            }
        };
        let component = projection_component(spectrum, j, k)?;
        total = total.add(&component.matrix().scaled(alpha))?;
    }
    TensorMatrix::new(d, total)
}

/// Inverse of the bias map: the trace-one eigenvalues Λ whose φ-values (all
/// multiplicities one) equal `phi_hat`.
///
/// Damped multiplicative fixed point λ ← λ (φ̂ / φ(λ))^½, renormalized to unit
/// trace after every step. φ(λ) is compared after rescaling to unit sum, which
/// removes the quadrature error in Σφ = 1.
pub fn invert_phi_map(phi_hat: &[f64]) -> Result<Vec<f64>> {
    let d = phi_hat.len();
    if d == 0 {
        return Err(invalid!("empty eigenvalue vector"));
    }
    if phi_hat.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
        return Err(invalid!("eigenvalues must be positive and finite"));
    }
    if phi_hat.windows(2).any(|w| w[1] > w[0] * (1.0 + 1e-12)) {
        return Err(invalid!("eigenvalues must be in descending order"));
    }
    let total: f64 = phi_hat.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(invalid!("eigenvalues must sum to 1 (got {total})"));
    }
    let target: Vec<f64> = phi_hat.iter().map(|p| p / total).collect();
    let ones = vec![1usize; d];

    let phi_of = |lambda: &[f64]| -> Result<Vec<f64>> {
        let mut phi = phi_values(lambda, &ones)?;
        normalize(&mut phi);
        Ok(phi)
    };

    let mut lambda = target.clone();
    let mut residual = f64::INFINITY;
    for _ in 0..INVERT_MAX_ITER {
        let phi = phi_of(&lambda)?;
        residual = phi
            .iter()
            .zip(&target)
            .map(|(p, t)| (p - t).abs())
            .fold(0.0, f64::max);
        if residual < INVERT_TOL {
            return Ok(lambda);
        }
        for ((l, p), t) in lambda.iter_mut().zip(&phi).zip(&target) {
            *l *= libm::pow(t / p, INVERT_STEP);
        }
        normalize(&mut lambda);
    }
    Err(ScatterError::Convergence {
        what: "eigenvalue bias inversion",
        iterations: INVERT_MAX_ITER,
        residual,
    })
}

fn normalize(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
}

/// α_T / α_S for a two-group shape from the quadrature route; compare with
/// [`special::are_hypergeometric`].
pub fn are_from_quadrature(shape: &TwoGroupShape) -> Result<f64> {
    let spectrum = shape.spectrum()?;
    if spectrum.group_count() == 1 {
        return Ok(1.0);
    }
    let c = AsymptoticCoefficients::compute(&spectrum)?;
    Ok(c.alpha_tyler[0][1] / c.alpha_sscm[0][1])
}

/// Closed-form counterpart of [`are_from_quadrature`].
pub fn are_closed_form(shape: &TwoGroupShape) -> Result<f64> {
    special::are_hypergeometric(shape.d(), shape.d1(), shape.rho(), None)
}
