//! End-to-end scenarios: obtain a trajectory, fit it, bound its error and
//! package the results as a certificate plus plottable curve data.

use std::fmt::Debug;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

use crate::bound::{bound_report, compute_hmax, spectral_frame, BoundError, BoundMode, BoundReport, DEFAULT_HMAX_GRID};
use crate::integrator::{
    integrate_dp45, read_trajectory_csv, trajectory_from_table, write_trajectory_csv, DerivSource, IntegrateError,
    IntegratorConfig, TableRow, Trajectory,
};
use crate::interpolant::{HermiteSpline, InterpError};
use crate::linalg::{LinalgError, Vector};
use crate::model::{catalog, parse_problem, LinearOdeProblem, ModelError};
use crate::residual::{profile, residual_at, DEFAULT_SAMPLES_PER_STEP};
use crate::scalar::{linspace, Scalar};

pub const DEFAULT_REPORT_GRID: usize = 512;
/// `‖P‖∞·‖P⁻¹‖∞` above which the certificate warns.
const COND_WARN: f64 = 1e8;
/// Absolute slack in the soundness ratio, matching the acceptance tolerance.
const ABS_SLACK: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error(transparent)]
    Interp(#[from] InterpError),
    #[error(transparent)]
    Bound(#[from] BoundError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("invalid scenario: {0}")]
    Config(String),
}

impl ScenarioError {
    /// `2` when the method does not apply to the problem, `1` otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Bound(BoundError::Linalg(
                LinalgError::ComplexSpectrum { .. } | LinalgError::DefectiveMatrix(_),
            )) => 2,
            _ => 1,
        }
    }

    /// `module::Variant` of the underlying error.
    pub fn name(&self) -> String {
        let (module, inner): (&str, &dyn Debug) = match self {
            ScenarioError::Model(e) => ("model", e),
            ScenarioError::Integrate(e) => ("integrator", e),
            ScenarioError::Interp(e) => ("interpolant", e),
            ScenarioError::Bound(BoundError::Linalg(e)) => ("linalg", e),
            ScenarioError::Bound(BoundError::Integrate(e)) => ("integrator", e),
            ScenarioError::Bound(e) => ("bound", e),
            ScenarioError::Io { source, .. } => ("report", source),
            ScenarioError::Config(_) => return "report::Config".into(),
        };
        let dbg = format!("{inner:?}");
        let variant = dbg.split(|c: char| !c.is_alphanumeric() && c != '_').next().unwrap_or("");
        let variant = if matches!(self, ScenarioError::Io { .. }) { "Io" } else { variant };
        format!("{module}::{variant}")
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ScenarioError + '_ {
    move |source| ScenarioError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSource {
    /// Built-in problem, solved with DP45.
    Catalog(String),
    /// Built-in problem with the exact solution sampled at the given nodes.
    CatalogExactSamples { name: String, nodes: Vec<f64> },
    /// Problem file, solved with DP45.
    File(PathBuf),
    /// Problem file plus an externally produced trajectory table.
    FileWithTrajectory { problem: PathBuf, trajectory: PathBuf },
    /// Built-in problem plus an externally produced trajectory table.
    CatalogWithTrajectory { name: String, trajectory: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format '{other}' (expected csv or json)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig<T> {
    pub source: ProblemSource,
    pub integrator: IntegratorConfig<T>,
    pub samples_per_step: usize,
    pub hmax_grid_points: usize,
    pub mode: BoundMode,
    /// Equispaced report points; the trajectory nodes are merged in.
    pub report_grid: usize,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
    pub trajectory_out: Option<PathBuf>,
}

impl<T: Scalar> ScenarioConfig<T> {
    pub fn new(source: ProblemSource) -> Self {
        ScenarioConfig {
            source,
            integrator: IntegratorConfig::default(),
            samples_per_step: DEFAULT_SAMPLES_PER_STEP,
            hmax_grid_points: DEFAULT_HMAX_GRID,
            mode: BoundMode::Stepwise,
            report_grid: DEFAULT_REPORT_GRID,
            output: None,
            format: OutputFormat::Csv,
            trajectory_out: None,
        }
    }

    /// The scenario behind `demo <name>`.
    pub fn demo(name: &str) -> Result<Self, ScenarioError> {
        catalog::<T>(name)?;
        let source = if name == "example1" {
            ProblemSource::CatalogExactSamples { name: name.into(), nodes: vec![0.0, 1.0, 2.0] }
        } else {
            ProblemSource::Catalog(name.into())
        };
        Ok(Self::new(source))
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        if self.samples_per_step < 3 {
            return Err(ScenarioError::Config(format!("samples per step must be at least 3, got {}", self.samples_per_step)));
        }
        if self.hmax_grid_points < 2 || self.report_grid < 2 {
            return Err(ScenarioError::Config("grid densities must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemSummary {
    pub name: String,
    pub dim: usize,
    pub t0: f64,
    pub tm: f64,
    pub time_invariant: bool,
    pub exact_known: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectorySummary {
    pub origin: String,
    pub nodes: usize,
    pub max_step: f64,
    pub derivatives: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rtol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameSummary {
    pub lambdas: Vec<f64>,
    pub lambda1: f64,
    pub norm_p: f64,
    pub cond_p: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaSummary {
    pub samples_per_step: usize,
    pub steps: usize,
    pub global_max_original: f64,
    pub global_max_transformed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundSummary {
    pub mode: BoundMode,
    pub max: f64,
    pub at_tm: f64,
    pub report_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    /// `max (‖x* − x̃‖∞ − 1e-14)⁺ / B` over the report grid; at most 1 when sound.
    pub max_ratio: f64,
    pub max_forward_error: f64,
    pub sound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub problem: ProblemSummary,
    pub trajectory: TrajectorySummary,
    pub frame: FrameSummary,
    pub h_max: f64,
    pub hmax_grid_points: usize,
    pub delta: DeltaSummary,
    pub bound: BoundSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
    pub warnings: Vec<String>,
}

impl Certificate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }
}

/// Columns of the curve file.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveData<T> {
    pub grid: Vec<T>,
    pub xtilde: Vec<Vector<T>>,
    pub delta: Vec<Vector<T>>,
    pub bound: Vec<T>,
    pub exact: Option<Vec<Vector<T>>>,
    pub fwd_err: Option<Vec<T>>,
}

impl<T: Scalar> CurveData<T> {
    /// Named columns in output order.
    pub fn columns(&self) -> Vec<(String, Vec<T>)> {
        let n = self.xtilde.first().map_or(0, Vector::len);
        let comp = |rows: &[Vector<T>], j: usize| rows.iter().map(|v| v[j]).collect::<Vec<T>>();
        let mut cols = vec![("t".to_string(), self.grid.clone())];
        cols.extend((0..n).map(|j| (format!("xtilde_{}", j + 1), comp(&self.xtilde, j))));
        cols.extend((0..n).map(|j| (format!("delta_{}", j + 1), comp(&self.delta, j))));
        cols.push(("bound".into(), self.bound.clone()));
        if let (Some(ex), Some(fe)) = (&self.exact, &self.fwd_err) {
            cols.extend((0..n).map(|j| (format!("xexact_{}", j + 1), comp(ex, j))));
            cols.push(("fwd_err_inf".into(), fe.clone()));
        }
        cols
    }
}

/// Writes curve columns as CSV (17 significant digits) or as a JSON object
/// of named arrays.
pub fn render_curves<T: Scalar, W: Write>(curves: &CurveData<T>, format: OutputFormat, mut out: W) -> io::Result<()> {
    let cols = curves.columns();
    let len = cols[0].1.len();
    if cols.iter().any(|(_, c)| c.len() != len) {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, "curve series differ in length"));
    }
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(cols.iter().map(|(n, _)| n.as_str()))?;
            for k in 0..len {
                w.write_record(cols.iter().map(|(_, c)| format!("{:.16e}", c[k])))?;
            }
            w.flush()
        }
        OutputFormat::Json => {
            let obj: Map<String, Value> = cols
                .into_iter()
                .map(|(name, c)| (name, Value::Array(c.into_iter().map(|v| json_num(v.to_f64_lossy())).collect())))
                .collect();
            serde_json::to_writer_pretty(&mut out, &Value::Object(obj))?;
            writeln!(out)
        }
    }
}

fn json_num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutput<T> {
    pub certificate: Certificate,
    pub curves: CurveData<T>,
    pub trajectory: Trajectory<T>,
    pub bound: BoundReport<T>,
}

fn load_problem<T: Scalar>(path: &Path) -> Result<LinearOdeProblem<T>, ScenarioError> {
    let src = std::fs::read_to_string(path).map_err(io_err(path))?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("problem");
    Ok(parse_problem(name, &src)?)
}

fn read_table<T: Scalar>(path: &Path, problem: &LinearOdeProblem<T>) -> Result<Trajectory<T>, ScenarioError> {
    let file = File::open(path).map_err(io_err(path))?;
    Ok(read_trajectory_csv(io::BufReader::new(file), problem)?)
}

fn exact_samples<T: Scalar>(problem: &LinearOdeProblem<T>, nodes: &[f64]) -> Result<Trajectory<T>, ScenarioError> {
    let ex = problem.exact().ok_or_else(|| ScenarioError::Config(format!("'{}' has no exact solution", problem.name)))?;
    let rows = nodes
        .iter()
        .map(|&t| {
            let t = T::lit(t);
            TableRow { t, x: ex.value(t), xp: Some(ex.derivative(t)) }
        })
        .collect();
    Ok(trajectory_from_table(rows, problem)?)
}

/// Sorted union of an equispaced grid and the mesh nodes.
pub fn report_grid<T: Scalar>(t0: T, tm: T, points: usize, nodes: &[T]) -> Vec<T> {
    let mut g = linspace(t0, tm, points);
    g.extend_from_slice(nodes);
    g.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
    g.dedup();
    g
}

/// Runs the full pipeline and writes the requested files.
pub fn run_scenario<T: Scalar>(cfg: &ScenarioConfig<T>) -> Result<ScenarioOutput<T>, ScenarioError> {
    cfg.validate()?;
    let (problem, trajectory, origin) = match &cfg.source {
        ProblemSource::Catalog(name) => {
            let p = catalog(name)?;
            let tr = integrate_dp45(&p, &cfg.integrator)?;
            (p, tr, "dp45")
        }
        ProblemSource::CatalogExactSamples { name, nodes } => {
            let p = catalog(name)?;
            let tr = exact_samples(&p, nodes)?;
            (p, tr, "exact-samples")
        }
        ProblemSource::File(path) => {
            let p = load_problem(path)?;
            let tr = integrate_dp45(&p, &cfg.integrator)?;
            (p, tr, "dp45")
        }
        ProblemSource::FileWithTrajectory { problem, trajectory } => {
            let p = load_problem(problem)?;
            let tr = read_table(trajectory, &p)?;
            (p, tr, "table")
        }
        ProblemSource::CatalogWithTrajectory { name, trajectory } => {
            let p = catalog(name)?;
            let tr = read_table(trajectory, &p)?;
            (p, tr, "table")
        }
    };
    if let Some(path) = &cfg.trajectory_out {
        let f = File::create(path).map_err(io_err(path))?;
        write_trajectory_csv(&trajectory, BufWriter::new(f))?;
    }

    let out = certify(&problem, trajectory, origin, cfg)?;
    if let Some(path) = &cfg.output {
        let f = File::create(path).map_err(io_err(path))?;
        render_curves(&out.curves, cfg.format, BufWriter::new(f)).map_err(io_err(path))?;
    }
    Ok(out)
}

/// Bounds the error of an existing trajectory of `problem`.
pub fn certify<T: Scalar>(
    problem: &LinearOdeProblem<T>,
    trajectory: Trajectory<T>,
    origin: &str,
    cfg: &ScenarioConfig<T>,
) -> Result<ScenarioOutput<T>, ScenarioError> {
    cfg.validate()?;
    let spline = HermiteSpline::fit(&trajectory);
    let frame = spectral_frame(problem)?;
    let h_max = compute_hmax(problem, &frame, cfg.hmax_grid_points);
    let prof = profile(&spline, problem, Some(&frame.eig), cfg.samples_per_step);
    let mesh = trajectory.nodes();
    let (t0, tm) = (problem.t0(), problem.tm());
    let grid = report_grid(t0, tm, cfg.report_grid, mesh);
    let bound = bound_report(cfg.mode, &frame, h_max, &prof, mesh, &grid)?;

    let xtilde: Vec<Vector<T>> = grid.iter().map(|&t| spline.eval(t)).collect::<Result<_, _>>()?;
    let delta: Vec<Vector<T>> = grid.iter().map(|&t| residual_at(&spline, problem, t)).collect::<Result<_, _>>()?;
    let (exact, fwd_err, verdict) = match problem.exact() {
        Some(ex) => {
            let xs: Vec<Vector<T>> = grid.iter().map(|&t| ex.value(t)).collect();
            let errs: Vec<T> = xs.iter().zip(&xtilde).map(|(a, b)| (a - b).inf_norm()).collect();
            let max_ratio = errs
                .iter()
                .zip(&bound.envelope)
                .map(|(&e, &b)| {
                    let excess = (e.to_f64_lossy() - ABS_SLACK).max(0.0);
                    let b = b.to_f64_lossy();
                    if excess == 0.0 {
                        0.0
                    } else if b > 0.0 {
                        excess / b
                    } else {
                        f64::MAX
                    }
                })
                .fold(0.0, f64::max);
            let max_err = errs.iter().copied().fold(T::zero(), T::max).to_f64_lossy();
            let v = Verdict { max_ratio, max_forward_error: max_err, sound: max_ratio <= 1.0 + 1e-9 };
            (Some(xs), Some(errs), Some(v))
        }
        None => (None, None, None),
    };

    let cond = frame.eig.condition().to_f64_lossy();
    let mut warnings = vec![format!(
        "h_max and delta_max are sampled maxima ({} grid points, {} samples per step), not certified suprema",
        cfg.hmax_grid_points, cfg.samples_per_step
    )];
    if cond > COND_WARN {
        warnings.push(format!("eigenvector matrix is near-singular (cond_inf = {cond:e})"));
    }
    if trajectory.deriv_source() == DerivSource::Recomputed {
        warnings.push("trajectory table had no derivative columns; node derivatives recomputed from the problem".into());
    }
    if let Some(v) = &verdict {
        if !v.sound {
            warnings.push(format!("forward error exceeds the bound (ratio {:e})", v.max_ratio));
        }
    }

    let f = |v: T| v.to_f64_lossy();
    let certificate = Certificate {
        problem: ProblemSummary {
            name: problem.name.clone(),
            dim: problem.dim(),
            t0: f(t0),
            tm: f(tm),
            time_invariant: problem.is_time_invariant(),
            exact_known: problem.exact().is_some(),
        },
        trajectory: TrajectorySummary {
            origin: origin.to_string(),
            nodes: mesh.len(),
            max_step: f(spline.max_step()),
            derivatives: format!("{:?}", trajectory.deriv_source()).to_lowercase(),
            rtol: (origin == "dp45").then(|| f(cfg.integrator.rtol)),
            atol: (origin == "dp45").then(|| f(cfg.integrator.atol)),
        },
        frame: FrameSummary {
            lambdas: frame.eig.lambdas.iter().map(|&l| f(l)).collect(),
            lambda1: f(frame.lambda1()),
            norm_p: f(frame.norm_p),
            cond_p: cond,
            mu: f(bound.mu),
        },
        h_max: f(h_max),
        hmax_grid_points: cfg.hmax_grid_points,
        delta: DeltaSummary {
            samples_per_step: cfg.samples_per_step,
            steps: prof.per_step.len(),
            global_max_original: f(prof.global_max_original),
            global_max_transformed: f(prof.global_max_transformed.unwrap_or_else(T::zero)),
        },
        bound: BoundSummary {
            mode: cfg.mode,
            max: f(bound.max_bound()),
            at_tm: f(*bound.envelope.last().expect("non-empty grid")),
            report_points: grid.len(),
        },
        verdict,
        warnings,
    };
    let curves = CurveData { grid, xtilde, delta, bound: bound.envelope.clone(), exact, fwd_err };
    Ok(ScenarioOutput { certificate, curves, trajectory, bound })
}
