//! Command-line front end.
//!
//! Exit codes: 0 success (or positive certificate / positive scan), 1 other
//! failure, 2 malformed input, 3 nonnegative with kernel, 4 indefinite or
//! nonpositive scan, 5 set lies in A₀, 6 profile inequality violated.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::cones::{certify, dichotomy_report, simple_radial, Budget, InvariantSet, Status};
use crate::curvature::{CurvatureOperator, Model};
use crate::degeneration::reduce_to_minimal;
use crate::error::{Error, Result};
use crate::flow::{flow_with, FlowOptions};
use crate::gluing::{glue, Background, GlueConfig};
use crate::io::{
    config_hash, read_json, write_csv, write_json, CertificateJson, DichotomyJson, Envelope, JordanJson, MatrixJson,
    OperatorJson, RankOneJson, ReductionJson, SetJson, StepJson,
};
use crate::jordan::{degenerate_to_rank_one, gl_nilpotent_limit, jordan_partition, nilpotency_residual};
use crate::lie::SkewMatrix;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_MALFORMED: i32 = 2;
pub const EXIT_KERNEL: i32 = 3;
pub const EXIT_INDEFINITE: i32 = 4;
pub const EXIT_IN_A0: i32 = 5;
pub const EXIT_INEQUALITY: i32 = 6;

#[derive(Debug, Parser)]
#[command(name = "curvlab", version, about = "Curvature-operator laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate R' = R² + R# and write the trace CSV.
    Flow(FlowArgs),
    /// Certify positivity of an operator on an invariant set.
    Certify(CertifyArgs),
    /// Degenerate a matrix to the minimal orbit (so) or rank one (gl).
    Degenerate(DegenerateArgs),
    /// Glue a cylindrical neck into a ball and scan positivity.
    Glue(GlueArgs),
    /// Decide which branch of the dichotomy a set falls in.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OperatorSource {
    /// Model name: sphere, cylinder, sphere_product, quarter_pinched, diagonal, zero.
    #[arg(long, conflicts_with = "operator")]
    pub model: Option<String>,
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    /// Model parameter (repeatable).
    #[arg(long = "param", allow_negative_numbers = true)]
    pub params: Vec<f64>,
    /// Operator JSON file.
    #[arg(long)]
    pub operator: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BudgetArgs {
    #[arg(long, default_value_t = Budget::default().restarts)]
    pub restarts: usize,
    #[arg(long, default_value_t = Budget::default().iterations)]
    pub iterations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl BudgetArgs {
    fn budget(&self) -> Budget {
        Budget { restarts: self.restarts, iterations: self.iterations }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FlowArgs {
    #[command(flatten)]
    pub source: OperatorSource,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 1e3)]
    pub norm_cap: f64,
    #[arg(long, default_value_t = 1)]
    pub record_every: usize,
    /// Sets to certify at every recorded step (s0, sprime, s1).
    #[arg(long, value_delimiter = ',')]
    pub check_cone: Vec<String>,
    #[command(flatten)]
    pub budget: BudgetArgs,
    #[arg(long, default_value = "flow.csv")]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub source: OperatorSource,
    /// Set name (s0, sprime, s1) or set descriptor JSON file.
    #[arg(long)]
    pub set: String,
    #[command(flatten)]
    pub budget: BudgetArgs,
    #[arg(long, default_value = "certificate.json")]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DegenerateMode {
    So,
    Gl,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DegenerateArgs {
    #[arg(long, value_enum)]
    pub mode: DegenerateMode,
    /// Matrix JSON file.
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long, default_value = "degeneration.json")]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BackgroundArg {
    Sphere,
    Flat,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GlueArgs {
    #[arg(long, value_enum, default_value = "sphere")]
    pub background: BackgroundArg,
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    /// Set name (s0, sprime, s1) or set descriptor JSON file.
    #[arg(long, default_value = "s0")]
    pub set: String,
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    #[arg(long, default_value_t = 2000)]
    pub grid: usize,
    /// Multiplies the estimated constant D.
    #[arg(long, default_value_t = 1.0)]
    pub d_scale: f64,
    #[command(flatten)]
    pub budget: BudgetArgs,
    #[arg(long, default_value = "profile.json")]
    #[serde(skip)]
    pub profile_out: PathBuf,
    #[arg(long, default_value = "scan.csv")]
    #[serde(skip)]
    pub scan_out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReportArgs {
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    /// Set name (s0, sprime, s1) or set descriptor JSON file.
    #[arg(long)]
    pub set: String,
    #[command(flatten)]
    pub budget: BudgetArgs,
    /// Output file; stdout when absent.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

/// Resolved configuration: the arguments plus the contents of every input
/// file, so that the hash changes when an input does.
#[derive(Serialize)]
struct RunConfig<'a, A: Serialize> {
    command: &'static str,
    args: &'a A,
    inputs: Vec<(String, String)>,
}

fn run_config<A: Serialize>(command: &'static str, args: &A, files: &[&Path]) -> Result<String> {
    let mut inputs = Vec::new();
    for f in files {
        let bytes = std::fs::read(f).map_err(|e| Error::Malformed(format!("{}: {e}", f.display())))?;
        inputs.push((f.display().to_string(), String::from_utf8_lossy(&bytes).into_owned()));
    }
    config_hash(&RunConfig { command, args, inputs })
}

fn load_operator(src: &OperatorSource) -> Result<CurvatureOperator> {
    match (&src.operator, &src.model) {
        (Some(path), _) => read_json::<OperatorJson>(path)?.into_operator(),
        (None, Some(name)) => Model::parse(name, src.n, &src.params)?.build(src.n),
        (None, None) => Err(Error::Malformed("give --model or --operator".into())),
    }
}

fn set_file(spec: &str) -> Option<&Path> {
    let p = Path::new(spec);
    p.is_file().then_some(p)
}

fn load_set(spec: &str) -> Result<InvariantSet> {
    match set_file(spec) {
        Some(p) => read_json::<SetJson>(p)?.into_set(),
        None => match spec {
            "s0" | "sprime" | "s1" => SetJson::kind(spec).into_set(),
            other => Err(Error::Malformed(format!("`{other}` is neither a set name nor a descriptor file"))),
        },
    }
}

fn inputs<'a>(operator: Option<&'a PathBuf>, set: Option<&'a str>) -> Vec<&'a Path> {
    operator.map(PathBuf::as_path).into_iter().chain(set.and_then(set_file)).collect()
}

fn exit_for(err: &Error) -> i32 {
    match err {
        Error::Malformed(_) | Error::Json(_) | Error::DimensionMismatch { .. } | Error::UnknownModel(_) => EXIT_MALFORMED,
        Error::InA0(_) => EXIT_IN_A0,
        Error::InequalityViolated { .. } => EXIT_INEQUALITY,
        _ => EXIT_FAILURE,
    }
}

#[derive(Serialize)]
struct FlowSummary {
    n: usize,
    records: usize,
    t_final: f64,
    blow_up_time: Option<f64>,
    trace: String,
}

fn cmd_flow(a: &FlowArgs) -> Result<i32> {
    let hash = run_config("flow", a, &inputs(a.source.operator.as_ref(), None))?;
    let r0 = load_operator(&a.source)?;
    let sets = a.check_cone.iter().map(|s| Ok((s.clone(), load_set(s)?))).collect::<Result<Vec<_>>>()?;
    let opts = FlowOptions { dt: a.dt, t_max: a.t_max, norm_cap: a.norm_cap, record_every: a.record_every.max(1) };
    let trace = flow_with(&r0, &opts)?;
    let mut extra = Vec::new();
    for (name, set) in &sets {
        let col = trace
            .operators
            .iter()
            .map(|r| certify(r, set, a.budget.budget(), a.budget.seed).map(|c| c.min_value))
            .collect::<Result<Vec<_>>>()?;
        extra.push((format!("qmin_{name}"), col));
    }
    write_csv(&a.out, &hash, a.budget.seed, &trace.to_csv(&extra))?;
    let summary = FlowSummary {
        n: r0.n(),
        records: trace.times.len(),
        t_final: trace.times.last().cloned().unwrap_or(0.0),
        blow_up_time: trace.blow_up_time,
        trace: a.out.display().to_string(),
    };
    print_json(&envelope(&hash, a.budget.seed, summary))?;
    Ok(EXIT_OK)
}

fn cmd_certify(a: &CertifyArgs) -> Result<i32> {
    let hash = run_config("certify", a, &inputs(a.source.operator.as_ref(), Some(&a.set)))?;
    let r = load_operator(&a.source)?;
    let set = load_set(&a.set)?;
    let cert = certify(&r, &set, a.budget.budget(), a.budget.seed)?;
    write_json(&a.out, &envelope(&hash, a.budget.seed, CertificateJson::from(&cert)))?;
    println!("{:?} min = {:.6e}", cert.status, cert.min_value);
    Ok(match cert.status {
        Status::PositiveDefiniteOnS => EXIT_OK,
        Status::NonnegativeWithKernel => EXIT_KERNEL,
        Status::Indefinite => EXIT_INDEFINITE,
    })
}

#[derive(Serialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
enum DegenerationJson {
    So {
        nilpotent_limit: StepJson,
        reduction: ReductionJson,
    },
    Gl {
        nilpotent_limit: MatrixJson,
        jordan: JordanJson,
        rank_one: RankOneJson,
    },
}

fn cmd_degenerate(a: &DegenerateArgs) -> Result<i32> {
    let hash = run_config("degenerate", a, &[a.matrix.as_path()])?;
    let m = read_json::<MatrixJson>(&a.matrix)?.into_matrix()?;
    let report = match a.mode {
        DegenerateMode::So => {
            let x = SkewMatrix::try_new(m, 1e-10)?;
            let step = crate::degeneration::nilpotent_limit(&x)?;
            let red = reduce_to_minimal(&x)?;
            DegenerationJson::So { nilpotent_limit: StepJson::from(&step), reduction: ReductionJson::from(&red) }
        }
        DegenerateMode::Gl => {
            let nil = if nilpotency_residual(&m) <= 1e-8 { m.clone() } else { gl_nilpotent_limit(&m)? };
            let jd = jordan_partition(&nil)?;
            let r1 = degenerate_to_rank_one(&nil)?;
            DegenerationJson::Gl {
                nilpotent_limit: MatrixJson::from_matrix(&nil),
                jordan: JordanJson::from(&jd),
                rank_one: RankOneJson::from(&r1),
            }
        }
    };
    write_json(&a.out, &envelope(&hash, 0, report))?;
    Ok(EXIT_OK)
}

fn witness_message(n: usize) -> Result<String> {
    let w = simple_radial(n)?;
    Ok(format!(
        "set lies in A0; witness X(e0,e1) + i X(e0,e2), normalized:\n{}",
        serde_json::to_string(&MatrixJson::from_matrix(w.matrix()))?
    ))
}

fn cmd_glue(a: &GlueArgs) -> Result<i32> {
    let hash = run_config("glue", a, &inputs(None, Some(&a.set)))?;
    let set = load_set(&a.set)?;
    let cfg = GlueConfig {
        n: a.n,
        background: match a.background {
            BackgroundArg::Sphere => Background::Sphere,
            BackgroundArg::Flat => Background::Flat,
        },
        eps: a.eps,
        grid: a.grid,
        d_scale: a.d_scale,
        budget: a.budget.budget(),
        seed: a.budget.seed,
    };
    let out = match glue(&cfg, &set) {
        Ok(out) => out,
        Err(Error::InA0(msg)) => {
            println!("{msg}");
            println!("{}", witness_message(a.n)?);
            return Ok(EXIT_IN_A0);
        }
        Err(Error::InequalityViolated { t, margin }) => {
            println!("profile inequality fails at grid point t = {t:.9}: margin {margin:.3e}");
            return Ok(EXIT_INEQUALITY);
        }
        Err(e) => return Err(e),
    };
    write_json(&a.profile_out, &envelope(&hash, a.budget.seed, &out))?;
    write_csv(&a.scan_out, &hash, a.budget.seed, &out.scan.to_csv())?;
    println!(
        "scan min {:.6e} at r = {:.6e}; routes agree to {:.3e}; neck deviation {:.3e}; chain {}",
        out.scan.min,
        out.scan.worst_r,
        out.curvature.max_disagreement,
        out.neck.max_deviation(),
        if out.chain.holds() { "holds" } else { "violated" },
    );
    Ok(if out.scan.positive() { EXIT_OK } else { EXIT_INDEFINITE })
}

fn cmd_report(a: &ReportArgs) -> Result<i32> {
    let hash = run_config("report", a, &inputs(None, Some(&a.set)))?;
    let set = load_set(&a.set)?;
    let rep = dichotomy_report(&set, a.n, a.budget.budget(), a.budget.seed)?;
    let env = envelope(&hash, a.budget.seed, DichotomyJson::from(&rep));
    match &a.out {
        Some(p) => write_json(p, &env)?,
        None => print_json(&env)?,
    }
    Ok(EXIT_OK)
}

fn envelope<T: Serialize>(hash: &str, seed: u64, payload: T) -> Envelope<'_, T> {
    Envelope { tool: "curvlab", version: env!("CARGO_PKG_VERSION"), config_hash: hash, seed, payload }
}

fn print_json<T: Serialize>(v: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn configure_threads() {
    if let Some(n) = std::env::var("CURVLAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // only fails if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

pub fn run(cli: &Cli) -> i32 {
    configure_threads();
    let res = match &cli.command {
        Command::Flow(a) => cmd_flow(a),
        Command::Certify(a) => cmd_certify(a),
        Command::Degenerate(a) => cmd_degenerate(a),
        Command::Glue(a) => cmd_glue(a),
        Command::Report(a) => cmd_report(a),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_for(&e)
        }
    }
}

/// Parses `std::env::args` and runs; returns the exit code.
pub fn main() -> i32 {
    run(&Cli::parse())
}
