//! Monte Carlo comparison of Tyler and SSCM eigenprojections under
//! Γ = diag(γ I_{d1}, I_{d2}): per-replicate squared-angle losses and the
//! mean and median ratio efficiencies.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use scatterlab_core::estimators::{median, sscm, tyler_with, TYLER_TOL};
use scatterlab_core::geometry::{eigenprojection_of, squared_angle_loss, Subspace};
use scatterlab_core::linalg::{Matrix, SymMatrix};
use scatterlab_core::sampling::{sample_standard_normal, stream_id, SeedSpec};
use scatterlab_core::special::are_hypergeometric;
use scatterlab_core::{Result, ScatterError};

pub const DEFAULT_REPLICATIONS: usize = 10_000;
/// Largest tolerated fraction of failed replicates per configuration.
pub const MAX_EXCLUDED_FRACTION: f64 = 0.001;
/// Bootstrap resamples behind the standard error of RE₁.
pub const BOOTSTRAP_RESAMPLES: usize = 200;
/// Iteration cap of the Tyler fixed point inside the harness. When n is a
/// multiple of d, samples close to the existence boundary occur often and
/// converge slowly.
pub const TYLER_MAX_ITER: usize = 1_000_000;

fn default_replications() -> usize {
    DEFAULT_REPLICATIONS
}

/// One experiment: dimension, multiplicity of the larger eigenvalue, the
/// eigenvalue ratio γ and the sample sizes to simulate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub d: usize,
    pub d1: usize,
    pub gamma: f64,
    pub n_grid: Vec<usize>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub master_seed: u64,
}

impl SimConfig {
    /// Every problem with the configuration, not just the first.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.d < 2 {
            out.push(format!("d = {} must be at least 2", self.d));
        }
        if self.d1 == 0 || self.d1 >= self.d {
            out.push(format!(
                "d1 = {} must satisfy 1 <= d1 < d = {}",
                self.d1, self.d
            ));
        }
        if !(self.gamma > 1.0 && self.gamma.is_finite()) {
            out.push(format!(
                "gamma = {} must be a finite number > 1",
                self.gamma
            ));
        }
        if self.n_grid.is_empty() {
            out.push("n_grid is empty".into());
        }
        if let Some(&n) = self.n_grid.iter().find(|&&n| n < self.d) {
            out.push(format!("sample size {n} is below the dimension {}", self.d));
        }
        if self.replications == 0 {
            out.push("replications must be at least 1".into());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ScatterError::InvalidInput(problems.join("; ")))
        }
    }

    pub fn rho(&self) -> f64 {
        1.0 / self.gamma.sqrt()
    }

    /// Share of the total variance carried by the leading group.
    pub fn explained_variance(&self) -> f64 {
        let d1 = self.d1 as f64;
        d1 * self.gamma / (d1 * self.gamma + (self.d - self.d1) as f64)
    }

    /// ARE of Tyler relative to the SSCM for this shape.
    pub fn asymptotic_efficiency(&self) -> Result<f64> {
        are_hypergeometric(self.d, self.d1, self.rho(), None)
    }
}

/// Losses of one replicate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimRecord {
    pub n: usize,
    pub replicate: usize,
    pub loss_tyler: f64,
    pub loss_sscm: f64,
}

/// Efficiencies at one sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EfficiencyPoint {
    pub n: usize,
    pub re1: f64,
    pub re2: f64,
    pub are_asymptotic: f64,
    pub mc_standard_error: f64,
    pub n_records: usize,
    pub n_excluded: usize,
}

/// Records of a run, with the replicates that failed.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRun {
    pub config: SimConfig,
    pub records: Vec<SimRecord>,
    /// `(n, replicate, reason)` of excluded replicates.
    pub excluded: Vec<(usize, usize, String)>,
}

impl ExperimentRun {
    pub fn excluded_at(&self, n: usize) -> usize {
        self.excluded.iter().filter(|e| e.0 == n).count()
    }
}

struct Design {
    root: SymMatrix,
    p_true: SymMatrix,
}

impl Design {
    fn new(config: &SimConfig) -> Result<Self> {
        let d = config.d;
        let diag: Vec<f64> = (0..d)
            .map(|i| {
                if i < config.d1 {
                    config.gamma.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Design {
            root: SymMatrix::diagonal(&diag),
            p_true: Subspace::leading_coordinates(d, config.d1)?.projector(),
        })
    }
}

fn replicate(config: &SimConfig, design: &Design, n: usize, r: usize) -> Result<SimRecord> {
    let d = config.d;
    let groups = [config.d1, d - config.d1];
    let center = vec![0.0; d];
    let mut rng = SeedSpec::new(config.master_seed, stream_id(n, r)).rng();
    let z = sample_standard_normal(n, d, &mut rng)?;

    // Tyler is affine equivariant: estimate on Z, then map by Γ^{1/2}.
    let t = tyler_with(&z, &center, TYLER_TOL, TYLER_MAX_ITER)?;
    let t = t.matrix.congruence(design.root.as_matrix())?;
    let p_tyler = eigenprojection_of(&t, &groups, 0)?;

    let x: Matrix = z.matmul(design.root.as_matrix())?;
    let s = sscm(&x, &center)?;
    let p_sscm = eigenprojection_of(&s.matrix, &groups, 0)?;

    Ok(SimRecord {
        n,
        replicate: r,
        loss_tyler: squared_angle_loss(&p_tyler.projector, &design.p_true, config.d1)?,
        loss_sscm: squared_angle_loss(&p_sscm.projector, &design.p_true, config.d1)?,
    })
}

/// Worker count from `SCATTERLAB_THREADS`; zero or unset means automatic.
pub fn workers_from_env() -> usize {
    std::env::var("SCATTERLAB_THREADS")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(0)
}

/// Run all replicates of `config` on `workers` threads (0 = automatic).
/// The output does not depend on the worker count.
pub fn run_experiment(config: &SimConfig, workers: usize) -> Result<ExperimentRun> {
    config.validate()?;
    let design = Design::new(config)?;
    let jobs: Vec<(usize, usize)> = config
        .n_grid
        .iter()
        .flat_map(|&n| (0..config.replications).map(move |r| (n, r)))
        .collect();
    let work = || -> Vec<(usize, usize, Result<SimRecord>)> {
        jobs.par_iter()
            .map(|&(n, r)| (n, r, replicate(config, &design, n, r)))
            .collect()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| ScatterError::Numerical(format!("cannot start worker pool: {e}")))?;
    let results = pool.install(work);

    let mut records = Vec::with_capacity(results.len());
    let mut excluded = Vec::new();
    for (n, r, res) in results {
        match res {
            Ok(rec) => records.push(rec),
            Err(e) if e.is_input_error() => return Err(e),
            Err(e) => excluded.push((n, r, e.to_string())),
        }
    }
    let run = ExperimentRun {
        config: config.clone(),
        records,
        excluded,
    };
    for &n in &config.n_grid {
        let bad = run.excluded_at(n);
        if bad as f64 > MAX_EXCLUDED_FRACTION * config.replications as f64 {
            return Err(ScatterError::Numerical(format!(
                "{bad} of {} replicates failed at n = {n} (d = {}, d1 = {}, gamma = {})",
                config.replications, config.d, config.d1, config.gamma
            )));
        }
    }
    Ok(run)
}

fn ratio_of_means(t: &[f64], o: &[f64]) -> Result<f64> {
    let den: f64 = o.iter().sum();
    if !(den > 0.0) {
        return Err(ScatterError::DegenerateData(
            "every SSCM loss is zero".into(),
        ));
    }
    Ok(t.iter().sum::<f64>() / den)
}

/// RE₁ = mean(T)/mean(Ω), RE₂ = median(T)/median(Ω), per sample size, in
/// ascending order of n. Independent of the order of `records`.
pub fn relative_efficiency(
    records: &[SimRecord],
    are_asymptotic: f64,
    bootstrap_seed: u64,
) -> Result<Vec<EfficiencyPoint>> {
    let mut ns: Vec<usize> = records.iter().map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();
    ns.into_iter()
        .map(|n| {
            let mut group: Vec<&SimRecord> = records.iter().filter(|r| r.n == n).collect();
            if group.len() < 2 {
                return Err(ScatterError::InvalidInput(format!(
                    "need at least two records at n = {n}, got {}",
                    group.len()
                )));
            }
            group.sort_by_key(|r| r.replicate);
            let mut t: Vec<f64> = group.iter().map(|r| r.loss_tyler).collect();
            let mut o: Vec<f64> = group.iter().map(|r| r.loss_sscm).collect();
            let re1 = ratio_of_means(&t, &o)?;
            let se = bootstrap_se(&t, &o, SeedSpec::new(bootstrap_seed, n as u64))?;
            let mt = median(&mut t);
            let mo = median(&mut o);
            if !(mo > 0.0) {
                return Err(ScatterError::DegenerateData(format!(
                    "median SSCM loss is zero at n = {n}"
                )));
            }
            Ok(EfficiencyPoint {
                n,
                re1,
                re2: mt / mo,
                are_asymptotic,
                mc_standard_error: se,
                n_records: group.len(),
                n_excluded: 0,
            })
        })
        .collect()
}

/// Standard deviation of RE₁ over bootstrap resamples of the replicate pairs.
fn bootstrap_se(t: &[f64], o: &[f64], seed: SeedSpec) -> Result<f64> {
    let mut rng = seed.rng();
    let m = t.len();
    let mut stats = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let (mut st, mut so) = (0.0, 0.0);
        for _ in 0..m {
            let i = rng.random_range(0..m);
            st += t[i];
            so += o[i];
        }
        if so > 0.0 {
            stats.push(st / so);
        }
    }
    if stats.len() < 2 {
        return Ok(f64::NAN);
    }
    let mean = stats.iter().sum::<f64>() / stats.len() as f64;
    let var = stats.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (stats.len() - 1) as f64;
    Ok(var.sqrt())
}

/// Efficiency table of a finished run, with exclusion counts filled in.
pub fn summarize(run: &ExperimentRun) -> Result<Vec<EfficiencyPoint>> {
    let are = run.config.asymptotic_efficiency()?;
    let mut points = relative_efficiency(&run.records, are, run.config.master_seed)?;
    for p in &mut points {
        p.n_excluded = run.excluded_at(p.n);
    }
    Ok(points)
}

/// The 21-configuration reference grid: for each (d, d1) the
/// larger group explains 90%, 95% and 99% of the variance.
pub fn experiment_grid_paper() -> Vec<SimConfig> {
    let small = |d: usize| (d..=50).collect::<Vec<_>>();
    let five: Vec<usize> = (1..=25).map(|k| 5 * k).collect();
    let entries: [(usize, usize, [f64; 3]); 7] = [
        (2, 1, [9.0, 19.0, 99.0]),
        (3, 1, [18.0, 38.0, 198.0]),
        (3, 2, [4.5, 9.5, 49.5]),
        (5, 1, [36.0, 76.0, 396.0]),
        (5, 2, [13.5, 28.5, 148.5]),
        (5, 3, [6.0, 38.0 / 3.0, 66.0]),
        (5, 4, [2.25, 4.75, 24.75]),
    ];
    entries
        .iter()
        .flat_map(|&(d, d1, gammas)| {
            let grid = if d == 5 { five.clone() } else { small(d) };
            gammas.into_iter().map(move |gamma| SimConfig {
                d,
                d1,
                gamma,
                n_grid: grid.clone(),
                replications: DEFAULT_REPLICATIONS,
                master_seed: 0,
            })
        })
        .collect()
}
