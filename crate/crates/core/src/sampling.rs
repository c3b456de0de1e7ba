//! Reproducible random draws: Gaussian, elliptical and angular central
//! Gaussian samples on top of seeded ChaCha8 streams.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::error::{invalid, Result, ScatterError};
use crate::linalg::{sqrt_pd, Matrix, SymMatrix};

/// Master seed plus a stream id selecting an independent ChaCha8 stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        SeedSpec {
            master_seed,
            stream_id,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// Stream id for replicate `replicate` at sample size `n`. Injective for
/// n, replicate < 2³².
pub fn stream_id(n: usize, replicate: usize) -> u64 {
    ((n as u64) << 32) | (replicate as u64 & 0xffff_ffff)
}

/// Radial law of an elliptical sample `μ + R · Γ^{1/2} u` with `u` uniform on
/// the sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Radial {
    /// R ≡ c.
    Constant(f64),
    /// R² ~ χ²_d, which gives the normal distribution.
    Chi,
    /// R² / d ~ F(d, ν): multivariate t with ν degrees of freedom.
    StudentT { nu: f64 },
}

impl Radial {
    fn validate(&self) -> Result<()> {
        match *self {
            Radial::Constant(c) if !(c > 0.0 && c.is_finite()) => {
                Err(invalid!("constant radius must be positive, got {c}"))
            }
            Radial::StudentT { nu } if !(nu > 0.0 && nu.is_finite()) => {
                Err(invalid!("degrees of freedom must be positive, got {nu}"))
            }
            _ => Ok(()),
        }
    }

    fn draw<R: Rng + ?Sized>(&self, d: usize, rng: &mut R) -> Result<f64> {
        Ok(match *self {
            Radial::Constant(c) => c,
            Radial::Chi => libm::sqrt(chi_square(d as f64, rng)?),
            Radial::StudentT { nu } => {
                let num = chi_square(d as f64, rng)?;
                let den = chi_square(nu, rng)? / nu;
                libm::sqrt(num / den)
            }
        })
    }
}

/// One χ²_k draw.
pub fn chi_square<R: Rng + ?Sized>(k: f64, rng: &mut R) -> Result<f64> {
    let dist = ChiSquared::new(k)
        .map_err(|_| invalid!("chi-square degrees of freedom must be positive, got {k}"))?;
    Ok(dist.sample(rng))
}

/// A vector of `d` standard normal draws.
pub fn standard_normal_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    (0..d)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// A uniform draw from the unit sphere in ℝ^d.
pub fn uniform_direction<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let mut z = standard_normal_vector(d, rng);
        let norm = libm::sqrt(z.iter().map(|v| v * v).sum::<f64>());
        if norm > 0.0 {
            z.iter_mut().for_each(|v| *v /= norm);
            return z;
        }
    }
}

/// `n × d` matrix of i.i.d. N(0, 1) entries, filled row by row.
pub fn sample_standard_normal<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Result<Matrix> {
    if n == 0 || d == 0 {
        return Err(invalid!(
            "sample dimensions must be positive, got {n} x {d}"
        ));
    }
    let data = (0..n * d)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    Matrix::from_row_major(n, d, data)
}

fn check_scatter(scatter: &SymMatrix, center: &[f64]) -> Result<SymMatrix> {
    if center.len() != scatter.dim() {
        return Err(invalid!(
            "center has length {} but scatter is {} x {}",
            center.len(),
            scatter.dim(),
            scatter.dim()
        ));
    }
    if center.iter().any(|v| !v.is_finite()) {
        return Err(invalid!("center must be finite"));
    }
    sqrt_pd(scatter).map_err(|e| match e {
        ScatterError::Domain(m) => ScatterError::InvalidInput(m),
        other => other,
    })
}

/// `n` draws from N(μ, Σ) as rows.
pub fn sample_normal<R: Rng + ?Sized>(
    n: usize,
    center: &[f64],
    covariance: &SymMatrix,
    rng: &mut R,
) -> Result<Matrix> {
    let root = check_scatter(covariance, center)?;
    let z = sample_standard_normal(n, center.len(), rng)?;
    let mut x = z.matmul(root.as_matrix())?;
    for i in 0..n {
        for (j, c) in center.iter().enumerate() {
            x[(i, j)] += c;
        }
    }
    Ok(x)
}

/// `n` draws `μ + R Γ^{1/2} u` as rows.
pub fn sample_elliptical<R: Rng + ?Sized>(
    n: usize,
    center: &[f64],
    scatter: &SymMatrix,
    radial: Radial,
    rng: &mut R,
) -> Result<Matrix> {
    radial.validate()?;
    let root = check_scatter(scatter, center)?;
    let d = center.len();
    if n == 0 {
        return Err(invalid!("sample size must be positive"));
    }
    let mut data = Vec::with_capacity(n * d);
    for _ in 0..n {
        let u = uniform_direction(d, rng);
        let r = radial.draw(d, rng)?;
        let y = root.as_matrix().matvec(&u)?;
        data.extend(y.iter().zip(center).map(|(v, c)| c + r * v));
    }
    Matrix::from_row_major(n, d, data)
}

/// `n` draws from the angular central Gaussian ACG(Γ): Γ^{1/2}z / ‖Γ^{1/2}z‖.
pub fn sample_acg<R: Rng + ?Sized>(n: usize, scatter: &SymMatrix, rng: &mut R) -> Result<Matrix> {
    let d = scatter.dim();
    let center = alloc::vec![0.0; d];
    let root = check_scatter(scatter, &center)?;
    let z = sample_standard_normal(n, d, rng)?;
    let mut x = z.matmul(root.as_matrix())?;
    for i in 0..n {
        let norm = libm::sqrt(x.row(i).iter().map(|v| v * v).sum::<f64>());
        for j in 0..d {
            x[(i, j)] /= norm;
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = sample_standard_normal(5, 3, &mut SeedSpec::new(7, 1).rng()).unwrap();
        let b = sample_standard_normal(5, 3, &mut SeedSpec::new(7, 1).rng()).unwrap();
        let c = sample_standard_normal(5, 3, &mut SeedSpec::new(7, 2).rng()).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn stream_ids_are_injective_on_grid() {
        let mut ids: Vec<u64> = (1..60)
            .flat_map(|n| (0..200).map(move |r| stream_id(n, r)))
            .collect();
        let len = ids.len();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), len);
    }

    #[test]
    fn normal_moments() {
        let cov = SymMatrix::from_fn(2, |i, j| if i == j { 2.0 } else { 0.6 });
        let n = 200_000;
        let x = sample_normal(n, &[1.0, -1.0], &cov, &mut SeedSpec::new(3, 0).rng()).unwrap();
        let mean: Vec<f64> = (0..2)
            .map(|j| x.column(j).iter().sum::<f64>() / n as f64)
            .collect();
        assert!((mean[0] - 1.0).abs() < 0.02 && (mean[1] + 1.0).abs() < 0.02);
        let c01 = (0..n)
            .map(|i| (x[(i, 0)] - mean[0]) * (x[(i, 1)] - mean[1]))
            .sum::<f64>()
            / n as f64;
        let c00 = (0..n).map(|i| (x[(i, 0)] - mean[0]).powi(2)).sum::<f64>() / n as f64;
        assert!((c01 - 0.6).abs() < 0.03, "{c01}");
        assert!((c00 - 2.0).abs() < 0.05, "{c00}");
    }

    #[test]
    fn elliptical_chi_radial_is_normal() {
        let n = 100_000;
        let x = sample_elliptical(
            n,
            &[0.0; 3],
            &SymMatrix::identity(3),
            Radial::Chi,
            &mut SeedSpec::new(11, 0).rng(),
        )
        .unwrap();
        let var = x.column(2).iter().map(|v| v * v).sum::<f64>() / n as f64;
        assert!((var - 1.0).abs() < 0.03, "{var}");
    }

    #[test]
    fn constant_radius_lands_on_ellipsoid() {
        let scatter = SymMatrix::diagonal(&[4.0, 1.0]);
        let x = sample_elliptical(
            50,
            &[0.0, 0.0],
            &scatter,
            Radial::Constant(2.0),
            &mut SeedSpec::new(5, 9).rng(),
        )
        .unwrap();
        for i in 0..50 {
            let q = x[(i, 0)].powi(2) / 4.0 + x[(i, 1)].powi(2);
            assert!((q - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn acg_rows_are_unit_and_scale_free() {
        let g = SymMatrix::diagonal(&[9.0, 1.0, 1.0]);
        let a = sample_acg(40, &g, &mut SeedSpec::new(2, 4).rng()).unwrap();
        let b = sample_acg(40, &g.scaled(5.0), &mut SeedSpec::new(2, 4).rng()).unwrap();
        for i in 0..40 {
            let norm: f64 = a.row(i).iter().map(|v| v * v).sum();
            assert!((norm - 1.0).abs() < 1e-14);
        }
        assert!(a.sub(&b).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn bad_parameters_are_rejected() {
        let mut rng = SeedSpec::new(0, 0).rng();
        let id = SymMatrix::identity(2);
        assert!(sample_elliptical(3, &[0.0], &id, Radial::Chi, &mut rng).is_err());
        assert!(
            sample_elliptical(3, &[0.0; 2], &id, Radial::StudentT { nu: 0.0 }, &mut rng).is_err()
        );
        let neg = SymMatrix::diagonal(&[1.0, -1.0]);
        assert!(matches!(
            sample_normal(3, &[0.0; 2], &neg, &mut rng),
            Err(ScatterError::InvalidInput(_))
        ));
    }

    #[test]
    fn student_t_tails_are_heavier() {
        let n = 50_000;
        let mut rng = SeedSpec::new(8, 0).rng();
        let x = sample_elliptical(
            n,
            &[0.0],
            &SymMatrix::identity(1),
            Radial::StudentT { nu: 5.0 },
            &mut rng,
        )
        .unwrap();
        // Var of t_5 is 5/3.
        let var = x.column(0).iter().map(|v| v * v).sum::<f64>() / n as f64;
        assert!((var - 5.0 / 3.0).abs() < 0.1, "{var}");
    }
}
