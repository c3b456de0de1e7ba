//! Command-line front end: argument definitions and one function per
//! subcommand.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use scatterlab_core::estimators::{
    coordinatewise_median, corrected_sscm, sscm, tyler, ScatterEstimate,
};
use scatterlab_core::geometry::{gram_schmidt, principal_angles, Subspace};
use scatterlab_core::linalg::Matrix;
use scatterlab_core::special::{are_hypergeometric, RHO_MIN};

use crate::error::CliError;
use crate::io::{parse_vector, read_matrix, CsvTable};
use crate::manifest::{manifest_path_for, ManifestBuilder};
use crate::simharness::{
    experiment_grid_paper, run_experiment, summarize, EfficiencyPoint, SimConfig,
};
use crate::svg::{Mark, Plot, Series};

/// Gram deviation up to which a basis file is accepted (and cleaned up).
pub const BASIS_TOL: f64 = 1e-6;
pub const CONFIG_SCHEMA: u64 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "scatterlab",
    version,
    about = "Robust scatter estimation and eigenprojection efficiency"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate a trace-one scatter matrix from a headerless CSV file.
    Estimate(EstimateArgs),
    /// Tabulate the asymptotic efficiency of Tyler's matrix relative to the SSCM.
    Are(AreArgs),
    /// Run Monte Carlo efficiency experiments.
    Simulate(SimulateArgs),
    /// Principal angles between two subspaces given by basis files.
    Angles(AnglesArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorChoice {
    Sscm,
    Tyler,
    CorrectedSscm,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EstimateArgs {
    /// Data file: one observation per row, comma separated, no header.
    pub input: PathBuf,
    /// Center as a comma-separated vector, or `median` for the coordinatewise median.
    #[arg(long, allow_hyphen_values = true)]
    pub center: String,
    #[arg(long, value_enum)]
    pub estimator: EstimatorChoice,
    /// Also write the JSON result here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AreArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub d1: usize,
    /// `start:stop:count`, linearly spaced, inside [1e-6, 1].
    #[arg(long)]
    pub rho_grid: String,
    /// Multiply by σ₁·d/(d+2) to compare against another affine equivariant estimator.
    #[arg(long)]
    pub sigma1: Option<f64>,
    /// CSV output; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    /// JSON file `{"schema": 1, "experiments": [...]}`.
    #[arg(
        long,
        conflicts_with = "paper_grid",
        required_unless_present = "paper_grid"
    )]
    pub config: Option<PathBuf>,
    /// The full reference grid of 21 configurations (long running).
    #[arg(long)]
    pub paper_grid: bool,
    /// Replications per sample size, overriding the configuration.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Master seed, overriding the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Also write one efficiency plot per configuration.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnglesArgs {
    /// Basis file: one basis vector per row.
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    /// Orthonormalize the rows by Gram–Schmidt before use.
    #[arg(long)]
    pub orthonormalize: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn params<T: Serialize>(args: &T) -> Value {
    serde_json::to_value(args).unwrap_or(Value::Null)
}

/// Run a parsed command; `stdout` receives what the command prints.
pub fn run(cli: Cli, stdout: &mut String, workers: usize) -> Result<(), CliError> {
    match cli.command {
        Command::Estimate(a) => cmd_estimate(&a, stdout).map(|_| ()),
        Command::Are(a) => cmd_are(&a, stdout).map(|_| ()),
        Command::Simulate(a) => cmd_simulate(&a, workers, stdout).map(|_| ()),
        Command::Angles(a) => cmd_angles(&a, stdout).map(|_| ()),
    }
}

fn matrix_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

pub fn cmd_estimate(args: &EstimateArgs, stdout: &mut String) -> Result<Value, CliError> {
    let mut manifest = ManifestBuilder::start("estimate", params(args), None);
    let data = read_matrix(&args.input)?;
    let center = if args.center.trim().eq_ignore_ascii_case("median") {
        coordinatewise_median(&data)?
    } else {
        parse_vector(&args.center)?
    };
    if center.len() != data.cols() {
        return Err(CliError::input(format!(
            "center has {} coordinates but the data has {} columns",
            center.len(),
            data.cols()
        )));
    }
    let est: ScatterEstimate = match args.estimator {
        EstimatorChoice::Sscm => sscm(&data, &center)?,
        EstimatorChoice::Tyler => tyler(&data, &center)?,
        EstimatorChoice::CorrectedSscm => corrected_sscm(&data, &center)?,
    };
    let eig = est.eigen()?;
    let is_tyler = args.estimator == EstimatorChoice::Tyler;
    let result = json!({
        "estimator": est.tag.name(),
        "n": data.rows(),
        "d": data.cols(),
        "n_used": est.n_used,
        "center": center,
        "matrix": matrix_rows(est.matrix.as_matrix()),
        "trace": est.matrix.trace(),
        "eigenvalues": eig.values,
        "eigenvectors": matrix_rows(&eig.vectors.transpose()),
        "iterations": if is_tyler { Some(est.iterations) } else { None },
        "residual": if is_tyler { Some(est.residual) } else { None },
    });
    let text = serde_json::to_string_pretty(&result).expect("JSON encoding") + "\n";
    stdout.push_str(&text);
    if let Some(out) = &args.out {
        manifest.write(out, &text)?;
        manifest.finish(&manifest_path_for(out))?;
    }
    Ok(result)
}

/// Parse `start:stop:count` into a linear grid.
pub fn parse_rho_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || CliError::input(format!("rho grid '{spec}' must look like start:stop:count"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let stop: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if count == 0 {
        return Err(CliError::input("rho grid count must be at least 1"));
    }
    for v in [start, stop] {
        if !(RHO_MIN..=1.0).contains(&v) {
            return Err(CliError::input(format!(
                "rho = {v} is outside [{RHO_MIN:e}, 1]"
            )));
        }
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    let step = (stop - start) / (count - 1) as f64;
    Ok((0..count)
        .map(|i| {
            if i + 1 == count {
                stop
            } else {
                start + step * i as f64
            }
        })
        .collect())
}

pub fn cmd_are(args: &AreArgs, stdout: &mut String) -> Result<Vec<(f64, f64)>, CliError> {
    let mut manifest = ManifestBuilder::start("are", params(args), None);
    let grid = parse_rho_grid(&args.rho_grid)?;
    let curve = grid
        .iter()
        .map(|&rho| Ok((rho, are_hypergeometric(args.d, args.d1, rho, args.sigma1)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut table = CsvTable::new(&["rho", "are"]);
    for &(rho, are) in &curve {
        table.row(&[rho.into(), are.into()]);
    }
    match &args.out {
        Some(out) => manifest.write(out, table.as_str())?,
        None => stdout.push_str(table.as_str()),
    }
    if let Some(svg) = &args.svg {
        let plot = Plot {
            title: format!("Asymptotic efficiency, d = {}, d1 = {}", args.d, args.d1),
            x_label: "rho".into(),
            y_label: "ARE".into(),
            series: vec![Series {
                label: "Tyler vs SSCM".into(),
                color: "black".into(),
                mark: Mark::Line,
                points: curve.clone(),
            }],
            reference: None,
            y_range: Some((0.0, 1.05)),
        };
        manifest.write(svg, &plot.render())?;
    }
    if let Some(path) = args.out.as_deref().or(args.svg.as_deref()) {
        manifest.finish(&manifest_path_for(path))?;
    }
    Ok(curve)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    schema: u64,
    experiments: Vec<SimConfig>,
}

/// Load and validate a configuration file, reporting every problem at once.
pub fn load_config(path: &Path) -> Result<Vec<SimConfig>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    let file: ConfigFile = serde_json::from_str(&text)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    if file.schema != CONFIG_SCHEMA {
        return Err(CliError::input(format!(
            "{}: unsupported schema {} (expected {CONFIG_SCHEMA})",
            path.display(),
            file.schema
        )));
    }
    Ok(file.experiments)
}

fn validate_all(configs: &[SimConfig]) -> Result<(), CliError> {
    if configs.is_empty() {
        return Err(CliError::input("no experiments configured"));
    }
    let problems: Vec<String> = configs
        .iter()
        .enumerate()
        .flat_map(|(i, c)| {
            c.problems()
                .into_iter()
                .map(move |p| format!("experiment {}: {p}", i + 1))
        })
        .collect();
    if problems.is_empty() {
        Ok(())
    } else {
        Err(CliError::input(format!(
            "invalid configuration:\n  {}",
            problems.join("\n  ")
        )))
    }
}

/// Output of one configuration of a simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSummary {
    pub config: SimConfig,
    pub points: Vec<EfficiencyPoint>,
}

fn config_tag(c: &SimConfig) -> String {
    format!("d{}_d1{}_gamma{}", c.d, c.d1, c.gamma)
}

pub fn cmd_simulate(
    args: &SimulateArgs,
    workers: usize,
    stdout: &mut String,
) -> Result<Vec<SimulationSummary>, CliError> {
    let mut configs = match (&args.config, args.paper_grid) {
        (Some(path), false) => load_config(path)?,
        (None, true) => experiment_grid_paper(),
        _ => {
            return Err(CliError::input(
                "give exactly one of --config and --paper-grid",
            ))
        }
    };
    for c in &mut configs {
        if let Some(r) = args.reps {
            c.replications = r;
        }
        if let Some(s) = args.seed {
            c.master_seed = s;
        }
    }
    validate_all(&configs)?;
    let seed = configs[0].master_seed;
    let mut manifest = ManifestBuilder::start(
        "simulate",
        json!({ "arguments": params(args), "experiments": configs, "workers": workers }),
        Some(seed),
    );

    let mut records = CsvTable::new(&[
        "d",
        "d1",
        "gamma",
        "n",
        "replicate",
        "loss_tyler",
        "loss_sscm",
    ]);
    let mut efficiency = CsvTable::new(&[
        "d",
        "d1",
        "gamma",
        "n",
        "re1",
        "re2",
        "are_asymptotic",
        "mc_standard_error",
        "n_records",
        "n_excluded",
    ]);
    let mut summaries = Vec::with_capacity(configs.len());
    let mut plots = Vec::new();
    for c in &configs {
        let run = run_experiment(c, workers)?;
        for r in &run.records {
            records.row(&[
                c.d.into(),
                c.d1.into(),
                c.gamma.into(),
                r.n.into(),
                r.replicate.into(),
                r.loss_tyler.into(),
                r.loss_sscm.into(),
            ]);
        }
        let points = summarize(&run)?;
        for p in &points {
            efficiency.row(&[
                c.d.into(),
                c.d1.into(),
                c.gamma.into(),
                p.n.into(),
                p.re1.into(),
                p.re2.into(),
                p.are_asymptotic.into(),
                p.mc_standard_error.into(),
                p.n_records.into(),
                p.n_excluded.into(),
            ]);
        }
        let excluded: usize = points.iter().map(|p| p.n_excluded).sum();
        stdout.push_str(&format!(
            "d={} d1={} gamma={}: {} sample sizes, {} excluded, ARE {}\n",
            c.d,
            c.d1,
            c.gamma,
            points.len(),
            excluded,
            points.first().map(|p| p.are_asymptotic).unwrap_or(f64::NAN)
        ));
        if args.svg {
            plots.push((config_tag(c), efficiency_plot(c, &points)));
        }
        summaries.push(SimulationSummary {
            config: c.clone(),
            points,
        });
    }
    manifest.write(&args.out_dir.join("records.csv"), records.as_str())?;
    manifest.write(&args.out_dir.join("efficiency.csv"), efficiency.as_str())?;
    for (tag, plot) in plots {
        manifest.write(
            &args.out_dir.join(format!("efficiency_{tag}.svg")),
            &plot.render(),
        )?;
    }
    manifest.finish(&args.out_dir.join("manifest.json"))?;
    Ok(summaries)
}

fn efficiency_plot(c: &SimConfig, points: &[EfficiencyPoint]) -> Plot {
    let series = |label: &str, color: &str, f: fn(&EfficiencyPoint) -> f64| Series {
        label: label.into(),
        color: color.into(),
        mark: Mark::Points,
        points: points.iter().map(|p| (p.n as f64, f(p))).collect(),
    };
    Plot {
        title: format!("d = {}, d1 = {}, gamma = {}", c.d, c.d1, c.gamma),
        x_label: "n".into(),
        y_label: "relative efficiency".into(),
        series: vec![
            series("RE1", "black", |p| p.re1),
            series("RE2", "#999999", |p| p.re2),
        ],
        reference: points.first().map(|p| p.are_asymptotic),
        y_range: None,
    }
}

fn read_basis(path: &Path, orthonormalize: bool) -> Result<Subspace, CliError> {
    let rows = read_matrix(path)?;
    let vectors = rows.transpose();
    let name = path.display();
    if vectors.cols() > vectors.rows() {
        return Err(CliError::input(format!(
            "{name}: {} basis vectors in dimension {}",
            vectors.cols(),
            vectors.rows()
        )));
    }
    if orthonormalize {
        let q = gram_schmidt(&vectors).map_err(|e| CliError::input(format!("{name}: {e}")))?;
        return Ok(Subspace::new(q)?);
    }
    let gram = vectors.transpose().matmul(&vectors)?;
    let dev = gram.sub(&Matrix::identity(vectors.cols()))?.max_abs();
    if dev > BASIS_TOL {
        return Err(CliError::input(format!(
            "{name}: basis is not orthonormal (Gram deviation {dev:.3e}); pass --orthonormalize"
        )));
    }
    // Within tolerance: remove residual rounding before use.
    Ok(Subspace::new(gram_schmidt(&vectors)?)?)
}

pub fn cmd_angles(args: &AnglesArgs, stdout: &mut String) -> Result<Vec<f64>, CliError> {
    let mut manifest = ManifestBuilder::start("angles", params(args), None);
    let a = read_basis(&args.a, args.orthonormalize)?;
    let b = read_basis(&args.b, args.orthonormalize)?;
    if a.ambient_dim() != b.ambient_dim() {
        return Err(CliError::input(format!(
            "bases live in dimensions {} and {}",
            a.ambient_dim(),
            b.ambient_dim()
        )));
    }
    let angles = principal_angles(&a, &b)?.into_vec();
    for t in &angles {
        stdout.push_str(&format!("{t}\n"));
    }
    if let Some(out) = &args.out {
        let mut table = CsvTable::new(&["index", "angle"]);
        for (i, &t) in angles.iter().enumerate() {
            table.row(&[(i + 1).into(), t.into()]);
        }
        manifest.write(out, table.as_str())?;
        manifest.finish(&manifest_path_for(out))?;
    }
    Ok(angles)
}
