//! Subspaces, eigenprojections of scatter estimates, principal angles and the
//! squared-angle loss.

use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use crate::error::{invalid, Result, ScatterError};
use crate::estimators::ScatterEstimate;
use crate::linalg::{
    projector_from_basis, singular_values, sym_eig, Matrix, SymMatrix, DEFAULT_GROUPING_TOL,
};

/// Orthonormality tolerance of a subspace basis.
pub const ORTHONORMAL_TOL: f64 = 1e-10;
/// Cosines above `1 + COSINE_SLACK` signal a logic error, not rounding.
pub const COSINE_SLACK: f64 = 1e-8;
/// Cosines above `1 − SINE_SWITCH` are converted through their sines.
pub const SINE_SWITCH: f64 = 1e-6;

/// A linear subspace of ℝ^d held by an orthonormal basis (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: Matrix,
}

impl Subspace {
    pub fn new(basis: Matrix) -> Result<Self> {
        Subspace::with_tolerance(basis, ORTHONORMAL_TOL)
    }

    /// Accepts a basis whose Gram matrix is within `tol` of the identity.
    pub fn with_tolerance(basis: Matrix, tol: f64) -> Result<Self> {
        let (d, l) = (basis.rows(), basis.cols());
        if l == 0 || l > d {
            return Err(invalid!(
                "subspace of dimension {l} in ambient dimension {d}"
            ));
        }
        if !basis.is_finite() {
            return Err(invalid!("basis has non-finite entries"));
        }
        let gram = basis.transpose().matmul(&basis)?;
        let dev = gram.sub(&Matrix::identity(l))?.max_abs();
        if dev > tol {
            return Err(invalid!(
                "basis is not orthonormal (Gram deviation {dev:.3e}); orthonormalize it first"
            ));
        }
        Ok(Subspace { basis })
    }

    /// Span of the columns of `vectors`, orthonormalized by modified
    /// Gram–Schmidt.
    pub fn spanned_by(vectors: &Matrix) -> Result<Self> {
        Subspace::new(gram_schmidt(vectors)?)
    }

    /// Span of the first `l` canonical basis vectors of ℝ^d.
    pub fn leading_coordinates(d: usize, l: usize) -> Result<Self> {
        Subspace::new(Matrix::from_fn(d, l, |i, j| if i == j { 1.0 } else { 0.0 }))
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn projector(&self) -> SymMatrix {
        projector_from_basis(&self.basis)
    }

    /// Image under an orthogonal matrix `q`.
    pub fn rotated(&self, q: &Matrix) -> Result<Self> {
        Subspace::new(q.matmul(&self.basis)?)
    }

    /// Orthogonal complement; `None` for the whole space.
    pub fn complement(&self) -> Result<Option<Self>> {
        let d = self.ambient_dim();
        if self.dim() == d {
            return Ok(None);
        }
        let residual = Matrix::identity(d).sub(self.projector().as_matrix())?;
        let eig = sym_eig(&SymMatrix::from_matrix(&residual, 1e-10)?)?;
        Ok(Some(Subspace::new(eig.vectors.columns(0..d - self.dim()))?))
    }
}

/// Modified Gram–Schmidt on the columns; rejects (near) linear dependence.
pub fn gram_schmidt(vectors: &Matrix) -> Result<Matrix> {
    let (d, l) = (vectors.rows(), vectors.cols());
    let mut cols: Vec<Vec<f64>> = (0..l).map(|j| vectors.column(j)).collect();
    let scale = cols
        .iter()
        .map(|c| libm::sqrt(c.iter().map(|x| x * x).sum::<f64>()))
        .fold(0.0, f64::max);
    for j in 0..l {
        for k in 0..j {
            let (done, rest) = cols.split_at_mut(j);
            let dot: f64 = done[k].iter().zip(&rest[0]).map(|(a, b)| a * b).sum();
            rest[0]
                .iter_mut()
                .zip(&done[k])
                .for_each(|(x, q)| *x -= dot * q);
        }
        let norm = libm::sqrt(cols[j].iter().map(|x| x * x).sum::<f64>());
        if !(norm > 1e-12 * scale) {
            return Err(invalid!(
                "vector {} is linearly dependent on the previous ones",
                j + 1
            ));
        }
        cols[j].iter_mut().for_each(|x| *x /= norm);
    }
    Ok(Matrix::from_fn(d, l, |i, j| cols[j][i]))
}

/// Principal angles ϑ₁ ≤ … ≤ ϑ_l in [0, π/2].
#[derive(Debug, Clone, PartialEq)]
pub struct AngleSet {
    angles: Vec<f64>,
}

impl AngleSet {
    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.angles
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.angles.iter().map(|a| a * a).sum()
    }
}

/// Estimated eigenprojection of one eigenvalue group.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenprojection {
    pub subspace: Subspace,
    pub projector: SymMatrix,
    /// The group boundary separates numerically equal eigenvalues, so the
    /// projector is not well determined.
    pub split_warning: bool,
}

/// Projector onto the eigenvectors of group `j` when the eigenvalues of
/// `matrix`, in descending order, are split into consecutive groups of sizes
/// `group_sizes`.
pub fn eigenprojection_of(
    matrix: &SymMatrix,
    group_sizes: &[usize],
    j: usize,
) -> Result<Eigenprojection> {
    let d = matrix.dim();
    if group_sizes.iter().sum::<usize>() != d || group_sizes.contains(&0) {
        return Err(invalid!(
            "group sizes {group_sizes:?} do not partition dimension {d}"
        ));
    }
    if j >= group_sizes.len() {
        return Err(invalid!(
            "group index {j} out of range for {} groups",
            group_sizes.len()
        ));
    }
    let eig = sym_eig(matrix)?;
    let start: usize = group_sizes[..j].iter().sum();
    let end = start + group_sizes[j];
    let scale = eig
        .values
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let splits =
        |a: usize| (eig.values[a - 1] - eig.values[a]).abs() <= DEFAULT_GROUPING_TOL * scale;
    let split_warning = (start > 0 && splits(start)) || (end < d && splits(end));
    let subspace = Subspace::new(eig.vectors.columns(start..end))?;
    Ok(Eigenprojection {
        projector: subspace.projector(),
        subspace,
        split_warning,
    })
}

/// [`eigenprojection_of`] applied to an estimate.
pub fn eigenprojection(
    estimate: &ScatterEstimate,
    group_sizes: &[usize],
    j: usize,
) -> Result<Eigenprojection> {
    eigenprojection_of(&estimate.matrix, group_sizes, j)
}

fn check_cosines(values: &[f64]) -> Result<()> {
    match values.iter().find(|&&s| s > 1.0 + COSINE_SLACK) {
        Some(s) => Err(ScatterError::Numerical(alloc::format!(
            "cosine {s} exceeds one; bases are not orthonormal"
        ))),
        None => Ok(()),
    }
}

/// Principal angles between `l` and `m`: arccosines of the singular values of
/// `Q_Mᵀ Q_L`, ascending. Angles whose cosine is within 1e-6 of one are taken
/// from the sines, the singular values of `(I − P_M) Q_L`.
pub fn principal_angles(l: &Subspace, m: &Subspace) -> Result<AngleSet> {
    if l.ambient_dim() != m.ambient_dim() {
        return Err(invalid!(
            "subspaces live in dimensions {} and {}",
            l.ambient_dim(),
            m.ambient_dim()
        ));
    }
    let (small, large) = if l.dim() <= m.dim() { (l, m) } else { (m, l) };
    let k = small.dim();
    let b = large.basis().transpose().matmul(small.basis())?;
    let cosines = singular_values(&b, false)?;
    check_cosines(&cosines)?;

    let sines = if cosines.iter().any(|&c| c > 1.0 - SINE_SWITCH) {
        let d = small.ambient_dim();
        let residual = SymMatrix::identity(d)
            .as_matrix()
            .sub(large.projector().as_matrix())?
            .matmul(small.basis())?;
        let mut s = singular_values(&residual, false)?;
        s.reverse();
        Some(s)
    } else {
        None
    };

    let angles = (0..k)
        .map(|i| {
            let c = cosines[i].clamp(0.0, 1.0);
            match &sines {
                Some(s) if c > 1.0 - SINE_SWITCH => libm::asin(s[i].clamp(0.0, 1.0)),
                _ => libm::acos(c),
            }
        })
        .collect();
    Ok(AngleSet { angles })
}

/// Sum of squared principal angles between the range of `p_hat` and the range
/// of `p_true`, both projectors of rank `d1`. Computed from the eigenvalues of
/// the `d1 × d1` block `Q₁ᵀ P̂ Q₁`, with `Q₁` a basis of the range of `p_true`.
pub fn squared_angle_loss(p_hat: &SymMatrix, p_true: &SymMatrix, d1: usize) -> Result<f64> {
    let d = p_true.dim();
    if p_hat.dim() != d {
        return Err(invalid!("projectors of dimension {} and {d}", p_hat.dim()));
    }
    if d1 == 0 || d1 > d {
        return Err(invalid!("rank {d1} out of range for dimension {d}"));
    }
    for (name, p) in [("estimated", p_hat), ("true", p_true)] {
        if (p.trace() - d1 as f64).abs() > 1e-8 {
            return Err(invalid!(
                "{name} projector has trace {} instead of {d1}",
                p.trace()
            ));
        }
    }
    let q1 = sym_eig(p_true)?.vectors.columns(0..d1);
    let block = SymMatrix::from_matrix(&p_hat.congruence(&q1.transpose())?.into_matrix(), 1e-8)?;
    let cos2 = sym_eig(&block)?.values;
    check_cosines(&cos2)?;

    let sin2 = if cos2.iter().any(|&c| c > 1.0 - 2.0 * SINE_SWITCH) {
        let comp = SymMatrix::identity(d).as_matrix().sub(p_hat.as_matrix())?;
        let comp = SymMatrix::from_matrix(&comp, 1e-8)?;
        let block = SymMatrix::from_matrix(&comp.congruence(&q1.transpose())?.into_matrix(), 1e-8)?;
        let mut s = sym_eig(&block)?.values;
        s.reverse();
        Some(s)
    } else {
        None
    };

    let loss = (0..d1)
        .map(|i| {
            let c2 = cos2[i].clamp(0.0, 1.0);
            let angle = match &sin2 {
                Some(s) if c2 > 1.0 - 2.0 * SINE_SWITCH => {
                    libm::asin(libm::sqrt(s[i].clamp(0.0, 1.0)))
                }
                _ => libm::acos(libm::sqrt(c2)),
            };
            angle * angle
        })
        .sum::<f64>();
    Ok(loss.min(d1 as f64 * FRAC_PI_2 * FRAC_PI_2))
}
