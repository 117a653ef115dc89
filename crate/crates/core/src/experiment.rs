//! Config-driven experiment runner.
//!
//! A config is a JSON object with the common keys `seed`, `workers`,
//! `output_dir`, an `experiment` name and that experiment's parameters at
//! the same level. Every run writes its CSV tables plus `manifest.json`
//! (the fully resolved config and the crate version) into `output_dir`.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::complex_gaussian::{sample_second_moments, sample_white_noise, ComplexGaussianLaw};
use crate::error::Error;
use crate::linalg::{CVector, ComplexVector, HermitianMatrix};
use crate::posterior::{
    compare_codes, contraction_curve, grid_posterior_scalar, inverse_gamma_grid, ConstantVarianceModel, LikelihoodConvention,
    PosteriorOptions, DEFAULT_GRID_POINTS,
};
use crate::pulse_codes::PulseCode;
use crate::rng::RngStream;
use crate::scatter_model::{
    lag_profile, marginal_covariance, quad_form_constant, signal_covariance, simulate_signal, PartitionOfUnity, SignalSimulator,
    Temperature, VarianceField, WindowNormalization,
};
use crate::table::{fmt_f64, ResultTable};
use crate::wishart::InverseWishartParams;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Failure of a run, carrying the process exit code it maps to.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RunError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("io error: {0}")]
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } => 2,
            Self::Numeric(_) => 3,
            Self::Io(_) => 4,
        }
    }

    fn config(path: impl Into<String>, message: impl ToString) -> Self {
        Self::Config { path: path.into(), message: message.to_string() }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        Self::Numeric(e.to_string())
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<csv::Error> for RunError {
    fn from(e: csv::Error) -> Self {
        Self::Io(e.to_string())
    }
}

/// Transmission code description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CodeSpec {
    Dirac {
        d: usize,
    },
    Boxcar {
        d: usize,
        width: usize,
    },
    /// Barker code of length `n`, zero-padded to `d` (defaults to `n`).
    Barker {
        n: usize,
        d: Option<usize>,
    },
    /// Explicit samples; normalized to unit norm.
    Samples {
        re: Vec<f64>,
        im: Vec<f64>,
    },
    /// Same spectral moduli as `of`, with uniform random phases drawn from
    /// a substream of the run seed keyed by `phase_stream`.
    RandomPhaseTwin {
        of: Box<CodeSpec>,
        #[serde(default)]
        phase_stream: u64,
    },
}

impl CodeSpec {
    fn build(&self, seed: u64) -> crate::error::Result<PulseCode> {
        match self {
            Self::Dirac { d } => PulseCode::dirac(*d),
            Self::Boxcar { d, width } => PulseCode::boxcar(*d, *width),
            Self::Barker { n, d } => {
                let b = PulseCode::barker(*n)?;
                match d {
                    Some(d) => b.zero_padded(*d),
                    None => Ok(b),
                }
            }
            Self::Samples { re, im } => {
                if re.len() != im.len() {
                    return Err(Error::DimensionMismatch { expected: re.len(), got: im.len() });
                }
                PulseCode::normalized("samples", re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect())
            }
            Self::RandomPhaseTwin { of, phase_stream } => {
                let base = of.build(seed)?;
                let mut rng = RngStream::new(seed, u64::MAX).child(*phase_stream).generator();
                Ok(base.random_phase_twin(&mut rng))
            }
        }
    }
}

/// Variance field description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldSpec {
    Constant {
        sigma0_sq: f64,
    },
    Pointwise {
        values: Vec<f64>,
    },
    /// `sigma2[j]` on the `j`-th of `sigma2.len()` smooth windows.
    Partition {
        sigma2: Vec<f64>,
        #[serde(default)]
        normalization: NormalizationSpec,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizationSpec {
    #[default]
    SumOfSquares,
    UnitNorm,
}

impl FieldSpec {
    fn build(&self, d: usize) -> crate::error::Result<VarianceField> {
        match self {
            Self::Constant { sigma0_sq } => VarianceField::constant(*sigma0_sq),
            Self::Pointwise { values } => {
                if values.len() != d {
                    return Err(Error::DimensionMismatch { expected: d, got: values.len() });
                }
                VarianceField::pointwise(values.clone())
            }
            Self::Partition { sigma2, normalization } => {
                let norm = match normalization {
                    NormalizationSpec::SumOfSquares => WindowNormalization::SumOfSquares,
                    NormalizationSpec::UnitNorm => WindowNormalization::UnitNorm,
                };
                VarianceField::partitioned(sigma2.clone(), PartitionOfUnity::smooth_with(d, sigma2.len(), norm)?)
            }
        }
    }
}

/// Scalar inverse-Wishart prior `W⁻¹(psi, nu)` on `v = T + |σ₀|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSpec {
    pub psi: f64,
    pub nu: f64,
}

impl PriorSpec {
    fn build(&self) -> crate::error::Result<InverseWishartParams> {
        InverseWishartParams::scalar(self.psi, self.nu)
    }
}

fn default_prior() -> PriorSpec {
    PriorSpec { psi: 1.0, nu: 3.0 }
}
fn default_grid_points() -> usize {
    DEFAULT_GRID_POINTS
}
fn default_replicates() -> usize {
    1000
}
fn default_mc_draws() -> usize {
    100_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateParams {
    pub code: CodeSpec,
    pub temperature: f64,
    pub field: FieldSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LagProfileParams {
    pub code: CodeSpec,
    pub temperature: f64,
    pub field: FieldSpec,
    #[serde(default = "default_mc_draws")]
    pub mc_draws: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PosteriorParams {
    pub code: CodeSpec,
    pub temperature: f64,
    /// True `|σ₀|²` used to simulate the observation.
    pub sigma0_sq: f64,
    #[serde(default = "default_prior")]
    pub prior: PriorSpec,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default)]
    pub convention: LikelihoodConvention,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareCodesParams {
    pub code_a: CodeSpec,
    pub code_b: CodeSpec,
    pub temperature: f64,
    pub sigma0_sq: f64,
    #[serde(default = "default_prior")]
    pub prior: PriorSpec,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
}

/// Code used at each lattice size of a contraction run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CodeFamilySpec {
    Dirac,
    Boxcar { width: usize },
    Barker { n: usize },
}

impl CodeFamilySpec {
    fn build(&self, d: usize) -> crate::error::Result<PulseCode> {
        match self {
            Self::Dirac => PulseCode::dirac(d),
            Self::Boxcar { width } => PulseCode::boxcar(d, *width),
            Self::Barker { n } => PulseCode::barker(*n)?.zero_padded(d),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractionParams {
    pub family: CodeFamilySpec,
    pub temperature: f64,
    pub sigma_truth: f64,
    pub d_list: Vec<usize>,
    #[serde(default = "default_prior")]
    pub prior: PriorSpec,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IwCheckParams {
    #[serde(default = "one")]
    pub psi: f64,
    #[serde(default = "three")]
    pub nu: f64,
    /// Evaluation points; defaults to `0.05, 0.10, ..., 5.00`.
    #[serde(default)]
    pub grid: Option<Vec<f64>>,
    /// Also write the `ν ∈ {1, 2, 3}`, `Ψ = 1` comparison curves.
    #[serde(default = "yes")]
    pub comparison_curves: bool,
}

fn one() -> f64 {
    1.0
}
fn three() -> f64 {
    3.0
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SelftestParams {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum Experiment {
    Simulate(SimulateParams),
    Lagprofile(LagProfileParams),
    Posterior(PosteriorParams),
    CompareCodes(CompareCodesParams),
    Contraction(ContractionParams),
    IwCheck(IwCheckParams),
    Selftest(SelftestParams),
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Simulate(_) => "simulate",
            Self::Lagprofile(_) => "lagprofile",
            Self::Posterior(_) => "posterior",
            Self::CompareCodes(_) => "compare-codes",
            Self::Contraction(_) => "contraction",
            Self::IwCheck(_) => "iw-check",
            Self::Selftest(_) => "selftest",
        }
    }
}

fn default_workers() -> usize {
    1
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub workers: usize,
    pub output_dir: PathBuf,
    #[serde(flatten)]
    pub experiment: Experiment,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Common {
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_workers")]
    workers: usize,
    #[serde(default = "default_output_dir")]
    output_dir: PathBuf,
}

fn from_value_at<T: serde::de::DeserializeOwned>(value: Value, prefix: &str) -> Result<T, RunError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let inner = e.path().to_string();
        let path = match (prefix.is_empty(), inner == ".") {
            (true, _) => inner,
            (false, true) => prefix.to_string(),
            (false, false) => format!("{prefix}.{inner}"),
        };
        RunError::config(path, e.into_inner())
    })
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self, RunError> {
        let value: Value = serde_json::from_str(text).map_err(|e| RunError::config(".", e))?;
        Self::from_value(value)
    }

    /// Parses and validates a config. Common keys and experiment parameters
    /// are split so that error paths point at the offending field.
    pub fn from_value(value: Value) -> Result<Self, RunError> {
        let Value::Object(mut map) = value else {
            return Err(RunError::config(".", "config must be a JSON object"));
        };
        let name = map.remove("experiment").ok_or_else(|| RunError::config("experiment", "missing field"))?;
        let name = name.as_str().ok_or_else(|| RunError::config("experiment", "must be a string"))?.to_string();
        let mut common = Map::new();
        for key in ["seed", "workers", "output_dir"] {
            if let Some(v) = map.remove(key) {
                common.insert(key.to_string(), v);
            }
        }
        let common: Common = from_value_at(Value::Object(common), "")?;
        let params = Value::Object(map);
        let experiment = match name.as_str() {
            "simulate" => Experiment::Simulate(from_value_at(params, "")?),
            "lagprofile" => Experiment::Lagprofile(from_value_at(params, "")?),
            "posterior" => Experiment::Posterior(from_value_at(params, "")?),
            "compare-codes" => Experiment::CompareCodes(from_value_at(params, "")?),
            "contraction" => Experiment::Contraction(from_value_at(params, "")?),
            "iw-check" => Experiment::IwCheck(from_value_at(params, "")?),
            "selftest" => Experiment::Selftest(from_value_at(params, "")?),
            other => return Err(RunError::config("experiment", format!("unknown experiment `{other}`"))),
        };
        let config = Self { seed: common.seed, workers: common.workers, output_dir: common.output_dir, experiment };
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// Checks every parameter against the library preconditions by building
    /// the objects a run would use. No sampling happens here.
    pub fn validate(&self) -> Result<(), RunError> {
        if self.workers == 0 {
            return Err(RunError::config("workers", "must be >= 1"));
        }
        let at = |path: &str| {
            let path = path.to_string();
            move |e: Error| RunError::config(path.clone(), e)
        };
        let temp = |t: f64| Temperature::new(t).map_err(at("temperature"));
        match &self.experiment {
            Experiment::Simulate(p) => {
                temp(p.temperature)?;
                let code = p.code.build(self.seed).map_err(at("code"))?;
                p.field.build(code.d()).map_err(at("field"))?;
            }
            Experiment::Lagprofile(p) => {
                temp(p.temperature)?;
                let code = p.code.build(self.seed).map_err(at("code"))?;
                p.field.build(code.d()).map_err(at("field"))?;
                if p.mc_draws < 2 {
                    return Err(RunError::config("mc_draws", "must be >= 2"));
                }
            }
            Experiment::Posterior(p) => {
                temp(p.temperature)?;
                p.code.build(self.seed).map_err(at("code"))?;
                VarianceField::constant(p.sigma0_sq).map_err(at("sigma0_sq"))?;
                p.prior.build().map_err(at("prior"))?;
                check_grid_points(p.grid_points)?;
            }
            Experiment::CompareCodes(p) => {
                temp(p.temperature)?;
                let a = p.code_a.build(self.seed).map_err(at("code_a"))?;
                let b = p.code_b.build(self.seed).map_err(at("code_b"))?;
                if a.d() != b.d() {
                    return Err(RunError::config("code_b", format!("length {} differs from code_a length {}", b.d(), a.d())));
                }
                VarianceField::constant(p.sigma0_sq).map_err(at("sigma0_sq"))?;
                p.prior.build().map_err(at("prior"))?;
                check_replicates(p.replicates)?;
                check_grid_points(p.grid_points)?;
            }
            Experiment::Contraction(p) => {
                temp(p.temperature)?;
                if p.d_list.is_empty() || p.d_list.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(RunError::config("d_list", "must be non-empty and strictly increasing"));
                }
                for (i, &d) in p.d_list.iter().enumerate() {
                    p.family.build(d).map_err(at(&format!("d_list[{i}]")))?;
                }
                if !(p.sigma_truth >= 0.0 && p.sigma_truth.is_finite()) {
                    return Err(RunError::config("sigma_truth", "must be finite and >= 0"));
                }
                p.prior.build().map_err(at("prior"))?;
                check_replicates(p.replicates)?;
                check_grid_points(p.grid_points)?;
            }
            Experiment::IwCheck(p) => {
                InverseWishartParams::scalar(p.psi, p.nu).map_err(at("nu"))?;
                if let Some(g) = &p.grid {
                    if g.is_empty() {
                        return Err(RunError::config("grid", "must not be empty"));
                    }
                    if let Some(i) = g.iter().position(|x| !(*x > 0.0 && x.is_finite())) {
                        return Err(RunError::config(format!("grid[{i}]"), "points must be finite and > 0"));
                    }
                }
            }
            Experiment::Selftest(_) => {}
        }
        Ok(())
    }
}

fn check_replicates(n: usize) -> Result<(), RunError> {
    if n < 2 {
        return Err(RunError::config("replicates", "must be >= 2"));
    }
    Ok(())
}

fn check_grid_points(n: usize) -> Result<(), RunError> {
    if n < crate::posterior::MIN_GRID_POINTS {
        return Err(RunError::config("grid_points", format!("must be >= {}", crate::posterior::MIN_GRID_POINTS)));
    }
    Ok(())
}

/// Names of the CSV files written by a run, relative to `output_dir`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
}

/// Runs the experiment on a pool of `config.workers` threads and writes all
/// artifacts. Output bytes depend only on the config, never on `workers`.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput, RunError> {
    config.validate()?;
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(config.workers).build().map_err(|e| RunError::Numeric(format!("thread pool: {e}")))?;
    let tables = pool.install(|| compute_tables(config))?;
    std::fs::create_dir_all(&config.output_dir)?;
    let mut files = Vec::new();
    for (name, table) in &tables {
        table.write_csv(&config.output_dir.join(name))?;
        files.push(PathBuf::from(name));
    }
    write_manifest(config, &config.output_dir)?;
    files.push(PathBuf::from(MANIFEST_FILE));
    if let Experiment::Selftest(_) = config.experiment {
        let failed: Vec<&str> = tables[0].1.rows().iter().filter(|r| r[1] != "true").map(|r| r[0].as_str()).collect();
        if !failed.is_empty() {
            return Err(RunError::Numeric(format!("selftest failed: {}", failed.join(", "))));
        }
    }
    Ok(RunOutput { files })
}

pub fn write_manifest(config: &ExperimentConfig, dir: &Path) -> Result<(), RunError> {
    let manifest = serde_json::json!({ "version": env!("CARGO_PKG_VERSION"), "config": config.to_json() });
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(dir.join(MANIFEST_FILE), text + "\n")?;
    Ok(())
}

/// Reads a manifest back into its version string and config.
pub fn read_manifest(dir: &Path) -> Result<(String, ExperimentConfig), RunError> {
    let text = std::fs::read_to_string(dir.join(MANIFEST_FILE))?;
    let mut value: Value = serde_json::from_str(&text).map_err(|e| RunError::config(MANIFEST_FILE, e))?;
    let version = value["version"].as_str().ok_or_else(|| RunError::config("version", "missing"))?.to_string();
    let config = ExperimentConfig::from_value(value["config"].take())?;
    Ok((version, config))
}

type Tables = Vec<(String, ResultTable)>;

fn compute_tables(config: &ExperimentConfig) -> Result<Tables, RunError> {
    let root = RngStream::new(config.seed, 0);
    let seed = config.seed;
    match &config.experiment {
        Experiment::Simulate(p) => {
            let code = p.code.build(seed)?;
            let field = p.field.build(code.d())?;
            let draw = simulate_signal(&code, &field, Temperature::new(p.temperature)?, root)?;
            Ok(vec![("simulate.csv".into(), draw.to_table())])
        }
        Experiment::Lagprofile(p) => Ok(vec![("lagprofile.csv".into(), lagprofile_table(p, seed, root)?)]),
        Experiment::Posterior(p) => Ok(vec![("posterior.csv".into(), posterior_table(p, seed, root)?)]),
        Experiment::CompareCodes(p) => {
            let report = compare_codes(
                &p.code_a.build(seed)?,
                &p.code_b.build(seed)?,
                &VarianceField::constant(p.sigma0_sq)?,
                Temperature::new(p.temperature)?,
                &p.prior.build()?,
                p.replicates,
                root,
                PosteriorOptions { grid_points: p.grid_points, ..Default::default() },
            )?;
            let mut t = ResultTable::new(["metric", "value"]);
            let mut put = |k: &str, v: f64| t.push(vec![k.to_string(), fmt_f64(v)]);
            put("moduli_gap", report.moduli_gap);
            put("covariance_gap", report.covariance_gap);
            put("post_var_a", report.summary_a.variance);
            put("post_var_a_se", report.summary_a.mc_stderr.unwrap_or(f64::NAN));
            put("post_var_b", report.summary_b.variance);
            put("post_var_b_se", report.summary_b.mc_stderr.unwrap_or(f64::NAN));
            put("post_var_b_independent", report.summary_b_independent.variance);
            put("post_var_b_independent_se", report.summary_b_independent.mc_stderr.unwrap_or(f64::NAN));
            put("common_stream_gap", report.common_stream_gap);
            t.push(vec!["verdict".into(), report.verdict.as_str().into()]);
            Ok(vec![("compare_codes.csv".into(), t)])
        }
        Experiment::Contraction(p) => {
            let rows = contraction_curve(
                |d| p.family.build(d),
                Temperature::new(p.temperature)?,
                p.sigma_truth,
                &p.d_list,
                &p.prior.build()?,
                p.replicates,
                root,
                PosteriorOptions { grid_points: p.grid_points, ..Default::default() },
            )?;
            let mut t = ResultTable::new(["d", "post_var_mean", "post_var_se"]);
            for r in rows {
                t.push(vec![r.d.to_string(), fmt_f64(r.post_var_mean), fmt_f64(r.post_var_se)]);
            }
            Ok(vec![("contraction.csv".into(), t)])
        }
        Experiment::IwCheck(p) => {
            let default_grid = default_density_grid();
            let grid = p.grid.as_deref().unwrap_or(&default_grid);
            let mut out = vec![("iw_check.csv".into(), emit_density_plot_data(&InverseWishartParams::scalar(p.psi, p.nu)?, grid)?)];
            if p.comparison_curves {
                for nu in [1.0, 2.0, 3.0] {
                    let table = emit_density_plot_data(&InverseWishartParams::scalar(1.0, nu)?, &default_grid)?;
                    out.push((format!("iw_curve_nu{nu}.csv"), table));
                }
            }
            Ok(out)
        }
        Experiment::Selftest(_) => Ok(vec![("selftest.csv".into(), selftest_table(root)?)]),
    }
}

/// `x = 0.05, 0.10, ..., 5.00`, each computed as `i / 20` so `x = 1` is exact.
pub fn default_density_grid() -> Vec<f64> {
    (1..=100).map(|i| i as f64 / 20.0).collect()
}

/// Scalar inverse-Wishart density tabulated as `(x, density)`.
pub fn emit_density_plot_data(law: &InverseWishartParams, grid: &[f64]) -> crate::error::Result<ResultTable> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("density grid is empty".into()));
    }
    let mut t = ResultTable::new(["x", "density"]);
    for &x in grid {
        t.push_floats(&[x, law.scalar_log_density(x)?.exp()]);
    }
    Ok(t)
}

fn lagprofile_table(p: &LagProfileParams, seed: u64, root: RngStream) -> Result<ResultTable, RunError> {
    let code = p.code.build(seed)?;
    let field = p.field.build(code.d())?;
    let temperature = Temperature::new(p.temperature)?;
    let analytic = lag_profile(&code, &field, temperature)?;
    let sim = SignalSimulator::new(&code, &field, temperature)?;
    let draws: Vec<CVector> = (0..p.mc_draws as u64).into_par_iter().map(|i| sim.draw(&mut root.child(i).generator()).0).collect();
    let (mc, se) = sample_second_moments(&draws);
    let d = code.d();
    let mut t = ResultTable::new(["t", "t'", "re", "im", "mc_re", "mc_im", "mc_se"]);
    for i in 0..d {
        for j in 0..d {
            let a = analytic[(i, j)];
            let m = mc[(i, j)];
            t.push(vec![i.to_string(), j.to_string(), fmt_f64(a.re), fmt_f64(a.im), fmt_f64(m.re), fmt_f64(m.im), fmt_f64(se[i * d + j])]);
        }
    }
    Ok(t)
}

fn posterior_table(p: &PosteriorParams, seed: u64, root: RngStream) -> Result<ResultTable, RunError> {
    let code = p.code.build(seed)?;
    let temperature = Temperature::new(p.temperature)?;
    let field = VarianceField::constant(p.sigma0_sq)?;
    let sigma = signal_covariance(&code, &field, temperature)?;
    let z = ComplexGaussianLaw::centered(sigma)?.sampler()?.draw(&mut root.generator());
    let model = ConstantVarianceModel::new(
        &code,
        temperature,
        &p.prior.build()?,
        PosteriorOptions { convention: p.convention, grid_points: p.grid_points },
    )?;
    let post = model.posterior(z.as_slice())?;
    let mut t = ResultTable::new(["grid_v", "logdensity", "density"]);
    for (v, l) in post.grid().iter().zip(post.log_density()) {
        t.push_floats(&[*v, *l, l.exp()]);
    }
    Ok(t)
}

/// Fast invariant checks; each row is `check, passed, detail`.
fn selftest_table(root: RngStream) -> Result<ResultTable, RunError> {
    let mut t = ResultTable::new(["check", "passed", "detail"]);
    let mut record = |name: &str, ok: bool, detail: f64| t.push(vec![name.into(), ok.to_string(), fmt_f64(detail)]);

    // white-noise covariance
    let n = 4;
    let draws: Vec<CVector> = (0..20_000u64)
        .into_par_iter()
        .map(|i| sample_white_noise(n, &mut root.child(i).generator()).map(ComplexVector::into_dvector))
        .collect::<crate::error::Result<_>>()?;
    let (cov, _) = sample_second_moments(&draws);
    let gap = crate::linalg::max_abs_diff(&cov, HermitianMatrix::identity(n)?.as_matrix());
    record("white_noise_covariance", gap < 0.05, gap);

    // characteristic function at |φ| = 1
    let law = ComplexGaussianLaw::white_noise(2)?;
    let phi = ComplexVector::new(vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)])?;
    let cf = law.characteristic_function(&phi)?;
    let gap = (cf - Complex64::new((-0.25f64).exp(), 0.0)).norm();
    record("characteristic_function", gap < 1e-12, gap);

    // inverse-Wishart density at 1
    let iw = InverseWishartParams::scalar(1.0, 3.0)?.scalar_log_density(1.0)?.exp();
    let exact = (-0.5f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
    record("iw_density_at_one", (iw - exact).abs() < 1e-10, iw);

    // spectral twin has the same covariance
    let barker = PulseCode::barker(13)?.zero_padded(16)?;
    let twin = barker.random_phase_twin(&mut root.child(u64::MAX).generator());
    let field = VarianceField::constant(1.0)?;
    let tt = Temperature::new(0.5)?;
    let gap = signal_covariance(&barker, &field, tt)?.max_abs_diff(&signal_covariance(&twin, &field, tt)?);
    record("twin_covariance", gap < 1e-10, gap);

    // marginal covariance with basis tests reproduces Σ
    let code = PulseCode::boxcar(8, 3)?;
    let basis: Vec<ComplexVector> = (0..8).map(|i| ComplexVector::basis(8, i)).collect::<crate::error::Result<_>>()?;
    let m = marginal_covariance(&code, &PartitionOfUnity::delta(8)?, &[1.5; 8], tt, &basis)?;
    let gap = m.max_abs_diff(&signal_covariance(&code, &VarianceField::constant(1.5)?, tt)?);
    record("marginal_reduction", gap < 1e-10, gap);

    // quadratic form
    let phi = ComplexVector::new((0..8).map(|k| Complex64::new(k as f64 * 0.1, 1.0 - k as f64 * 0.05)).collect())?;
    let q = quad_form_constant(&code, &phi, 1.5, tt)?;
    let sigma = signal_covariance(&code, &VarianceField::constant(1.5)?, tt)?;
    let direct = (phi.as_dvector().adjoint() * sigma.as_matrix() * phi.as_dvector())[(0, 0)].re;
    record("quad_form", (q - direct).abs() < 1e-10, (q - direct).abs());

    // partition of unity
    let part = PartitionOfUnity::smooth(32, 4)?;
    let gap = part.sum_of_squares().iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max);
    record("partition_of_unity", gap < 1e-12, gap);

    // conjugate posterior against the grid
    let prior = InverseWishartParams::scalar(2.0, 4.0)?;
    let z = sample_white_noise(6, &mut root.child(7).generator())?;
    let energy = z.norm_sqr();
    let grid = inverse_gamma_grid(5.0, (2.0 + energy) / 2.0, DEFAULT_GRID_POINTS)?;
    let g =
        grid_posterior_scalar(|v| -3.0 * v.ln() - energy / (2.0 * v), |v| prior.scalar_log_density(v).unwrap_or(f64::NEG_INFINITY), &grid)?;
    let exact_mean = crate::wishart::scalar_mean(2.0 + energy, 10.0)?;
    let rel = (g.mean() - exact_mean).abs() / exact_mean;
    record("conjugate_grid_mean", rel < 1e-4, rel);

    Ok(t)
}
