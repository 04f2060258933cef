//! `calmness`: certificates, modulus bounds and perturbation estimates for linear programs.

mod render;

use calmness::certify::{certify, nominal_point, ConditionReport};
use calmness::empirical::{estimate_clm, replay_sequence, EmpiricalEstimate, EstimateConfig, Mode, ReplayRow, SequenceFile};
use calmness::moduli::{
    c1_directional, c1_sampling, c3_upper_bound, compute_report, csv_field, ModulusReport, ReportOptions, SamplingConfig,
};
use calmness::semiinf::{refine_and_track, ConvergenceTable};
use calmness::{CalmnessError, InputFile, NormSpec, Problem};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use render::{opt, sig, table, vector};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use thiserror::Error;

#[derive(Parser)]
#[command(name = "calmness", version, about = "Calmness moduli of the optimal-solution map of linear programs")]
struct Cli {
    /// Worker threads for parallel sections; all cores by default.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Write the output to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// Regularity conditions at the nominal point.
    Certify(Input),
    /// All modulus bounds, the exact value where available, and the inequality chain.
    Moduli(ModuliArgs),
    /// Perturbation estimate of the calmness modulus.
    Empirical(EmpiricalArgs),
    /// Track a quantity across grid refinements of a semi-infinite source.
    Semiinf(SemiinfArgs),
    /// Ratios along a recorded sequence of perturbed parameters.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct Input {
    /// Problem or semi-infinite source (JSON).
    file: PathBuf,
    /// Norm on the decision space: euclidean, one or infinity.
    #[arg(long)]
    norm: Option<NormSpec>,
    /// Grid size used to discretize a semi-infinite source.
    #[arg(long)]
    grid: Option<usize>,
    /// Feasibility tolerance.
    #[arg(long)]
    tol_feas: Option<f64>,
    /// Tolerance for a constraint to count as active.
    #[arg(long)]
    tol_active: Option<f64>,
    /// Tolerance on KKT residuals.
    #[arg(long)]
    tol_kkt: Option<f64>,
}

#[derive(Args)]
struct PerturbationArgs {
    /// Random seed.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Strictly decreasing perturbation radii.
    #[arg(long, value_delimiter = ',', default_values_t = [1e-2, 1e-3, 1e-4])]
    radii: Vec<f64>,
    /// Random samples per radius.
    #[arg(long, default_value_t = 512)]
    samples: usize,
}

#[derive(Args)]
struct ModuliArgs {
    #[command(flatten)]
    input: Input,
    /// Constants to skip: C1, C2, C3, exact, lip, gamma.
    #[arg(long, value_delimiter = ',')]
    skip: Vec<String>,
    /// Sampled directions per radius for C1.
    #[arg(long, default_value_t = 720)]
    directions: usize,
    /// Also run the perturbation estimate in both modes.
    #[arg(long)]
    empirical: bool,
    #[command(flatten)]
    perturb: PerturbationArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Full,
    BOnly,
}

#[derive(Args)]
struct EmpiricalArgs {
    #[command(flatten)]
    input: Input,
    /// Perturb both cost and right-hand side, or the right-hand side only.
    #[arg(long, value_enum, default_value_t = ModeArg::Full)]
    mode: ModeArg,
    #[command(flatten)]
    perturb: PerturbationArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum Quantity {
    #[value(name = "C3")]
    C3,
    #[value(name = "C1_sampling")]
    C1Sampling,
    #[value(name = "exact")]
    Exact,
    #[value(name = "empirical")]
    Empirical,
}

impl Quantity {
    fn name(self) -> &'static str {
        match self {
            Quantity::C3 => "C3",
            Quantity::C1Sampling => "C1_sampling",
            Quantity::Exact => "exact",
            Quantity::Empirical => "empirical",
        }
    }
}

#[derive(Args)]
struct SemiinfArgs {
    /// Semi-infinite source (JSON with a `families` key).
    file: PathBuf,
    /// Norm on the decision space: euclidean, one or infinity.
    #[arg(long)]
    norm: Option<NormSpec>,
    /// Grid sizes to evaluate.
    #[arg(long, value_delimiter = ',', default_values_t = [64, 256, 1024, 4096])]
    levels: Vec<usize>,
    /// Quantity tracked across levels.
    #[arg(long, value_enum, default_value_t = Quantity::C3)]
    quantity: Quantity,
    /// Sampled directions per radius for C1_sampling.
    #[arg(long, default_value_t = 720)]
    directions: usize,
    #[command(flatten)]
    perturb: PerturbationArgs,
}

#[derive(Args)]
struct ReplayArgs {
    #[command(flatten)]
    input: Input,
    /// Sequence file with perturbed parameters and optional claimed solutions.
    #[arg(long)]
    sequence: PathBuf,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: CalmnessError },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] CalmnessError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Read { .. } | CliError::Write { .. } | CliError::Parse { .. } | CliError::Usage(_) => 1,
            CliError::Core(e) => match e {
                CalmnessError::Invalid(_) | CalmnessError::DimensionMismatch { .. } | CalmnessError::ZeroNormal => 1,
                CalmnessError::Consistency(_) => 3,
                _ => 2,
            },
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Rendered output and the exit code it implies.
struct Output {
    text: String,
    code: u8,
}

impl Output {
    fn ok(text: String) -> Self {
        Output { text, code: 0 }
    }
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })
}

fn load_input(path: &Path) -> CliResult<InputFile> {
    InputFile::from_json(&read(path)?).map_err(|source| CliError::Parse { path: path.to_path_buf(), source })
}

impl Input {
    fn problem(&self) -> CliResult<Problem> {
        let mut problem = load_input(&self.file)?.problem(self.grid)?;
        if let Some(norm) = self.norm {
            problem = problem.with_norm(norm);
        }
        if self.tol_feas.is_some() || self.tol_active.is_some() || self.tol_kkt.is_some() {
            let mut tol = problem.default_tolerances();
            tol.feas = self.tol_feas.unwrap_or(tol.feas);
            tol.active = self.tol_active.unwrap_or(tol.active);
            tol.kkt = self.tol_kkt.unwrap_or(tol.kkt);
            problem = problem.with_tolerances(tol)?;
        }
        Ok(problem)
    }
}

impl PerturbationArgs {
    fn config(&self, mode: Mode) -> CliResult<EstimateConfig> {
        let cfg = EstimateConfig { radii: self.radii.clone(), samples: self.samples, mode, seed: self.seed };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output is serializable");
    s.push('\n');
    s
}

fn holds(b: bool) -> String {
    if b { "yes" } else { "no" }.into()
}

fn run_certify(input: &Input, format: Format) -> CliResult<Output> {
    let report = certify(&input.problem()?)?;
    let rows = condition_rows(&report);
    let text = match format {
        Format::Json => json(&report),
        Format::Csv => {
            let mut s = String::from("condition,holds,detail\n");
            for r in &rows {
                writeln!(s, "{},{},{}", r[0], r[1], csv_field(&r[2])).expect("string write");
            }
            s
        }
        Format::Table => {
            format!("x_bar   {}\nactive  {}\n\n{}", vector(&report.x_bar), report.active.join(" "), table(&["condition", "holds", "detail"], &rows))
        }
    };
    Ok(Output::ok(text))
}

fn condition_rows(r: &ConditionReport) -> Vec<Vec<String>> {
    let kkt_detail = match &r.kkt {
        Some(k) => format!("support {}, residual {}", k.support.join(" "), sig(k.residual)),
        None => String::new(),
    };
    vec![
        vec!["slater".into(), holds(r.slater.holds), format!("margin {}", opt(r.slater.margin))],
        vec!["kkt".into(), holds(r.kkt.is_some()), kkt_detail],
        vec!["strong_uniqueness".into(), holds(r.strong_unique.holds), format!("margin {}", sig(r.strong_unique.margin))],
        vec![
            "nurnberger".into(),
            holds(r.nurnberger.holds),
            r.nurnberger.violating.as_ref().map(|v| format!("KKT set {}", v.join(" "))).unwrap_or_default(),
        ],
        vec!["aubin".into(), holds(r.aubin), String::new()],
    ]
}

fn run_moduli(args: &ModuliArgs, format: Format) -> CliResult<Output> {
    let problem = args.input.problem()?;
    let opts = ReportOptions {
        skip: args.skip.clone(),
        sampling: SamplingConfig { directions: args.directions, seed: args.perturb.seed, ..SamplingConfig::default() },
        empirical: if args.empirical { Some(args.perturb.config(Mode::Full)?) } else { None },
    };
    let report = compute_report(&problem, &opts)?;
    let text = match format {
        Format::Json => json(&report),
        Format::Csv => report.to_csv(),
        Format::Table => moduli_table(&report),
    };
    if !report.inequality_chain_ok {
        log::error!("inequality chain violated: {:?}", report.violations);
    }
    Ok(Output { text, code: if report.inequality_chain_ok { 0 } else { 3 } })
}

fn moduli_table(r: &ModulusReport) -> String {
    let mut s = String::new();
    writeln!(s, "norm    {}", r.norm.name()).expect("string write");
    writeln!(s, "x_bar   {}", vector(&r.x_bar)).expect("string write");
    writeln!(s, "unique  {}", holds(r.unique)).expect("string write");
    if r.discretized {
        writeln!(s, "(discretized problem)").expect("string write");
    }
    s.push('\n');
    let rows: Vec<Vec<String>> = r
        .constants()
        .iter()
        .map(|c| vec![c.name.clone(), opt(c.value), c.method.clone(), c.witness.join(" "), c.note.clone().unwrap_or_default()])
        .collect();
    s.push_str(&table(&["constant", "value", "method", "witness", "note"], &rows));
    if !r.kkt_sets.is_empty() {
        s.push('\n');
        let rows: Vec<Vec<String>> =
            r.kkt_sets.iter().map(|k| vec![k.labels.join(" "), holds(k.in_t), opt(k.inverse_norm)]).collect();
        s.push_str(&table(&["KKT set", "in T", "inverse norm"], &rows));
    }
    s.push('\n');
    if r.inequality_chain_ok {
        s.push_str("inequality chain: ok\n");
    } else {
        s.push_str("inequality chain: VIOLATED\n");
        for v in &r.violations {
            writeln!(s, "  {}: {} vs {}", v.relation, sig(v.lhs), sig(v.rhs)).expect("string write");
        }
    }
    s
}

/// The estimate without the perturbation vectors, which can be as long as the grid.
#[derive(Serialize)]
struct EmpiricalSummary<'a> {
    estimate: f64,
    mode: Mode,
    seed: u64,
    per_radius: &'a [calmness::empirical::RadiusSummary],
    diagnostic: &'a Option<calmness::empirical::RadiusDiagnostic>,
    samples: Vec<SampleSummary<'a>>,
}

#[derive(Serialize)]
struct SampleSummary<'a> {
    radius: f64,
    kind: &'a str,
    structured: bool,
    ratio: Option<f64>,
    status: &'a str,
    vertices: usize,
    face_truncated: bool,
}

fn empirical_summary(e: &EmpiricalEstimate) -> EmpiricalSummary<'_> {
    EmpiricalSummary {
        estimate: e.estimate,
        mode: e.mode,
        seed: e.seed,
        per_radius: &e.per_radius,
        diagnostic: &e.diagnostic,
        samples: e
            .samples
            .iter()
            .map(|s| SampleSummary {
                radius: s.radius,
                kind: &s.kind,
                structured: s.structured,
                ratio: s.ratio,
                status: &s.status,
                vertices: s.vertices,
                face_truncated: s.face_truncated,
            })
            .collect(),
    }
}

fn run_empirical(args: &EmpiricalArgs, format: Format) -> CliResult<Output> {
    let problem = args.input.problem()?;
    let mode = match args.mode {
        ModeArg::Full => Mode::Full,
        ModeArg::BOnly => Mode::BOnly,
    };
    let est = estimate_clm(&problem, &args.perturb.config(mode)?)?;
    let text = match format {
        Format::Json => json(&empirical_summary(&est)),
        Format::Csv => est.to_csv(),
        Format::Table => {
            let mut s = format!("mode {}, seed {}\n\n", est.mode.name(), est.seed);
            let rows: Vec<Vec<String>> = est
                .per_radius
                .iter()
                .map(|r| {
                    vec![
                        sig(r.radius),
                        opt(r.max_ratio),
                        opt(r.structured_max),
                        opt(r.random_max),
                        r.solved.to_string(),
                        r.skipped.to_string(),
                    ]
                })
                .collect();
            s.push_str(&table(&["radius", "max ratio", "structured", "random", "solved", "skipped"], &rows));
            writeln!(s, "\nestimate  {}", sig(est.estimate)).expect("string write");
            if let Some(d) = &est.diagnostic {
                writeln!(s, "drift     {} (nondecreasing: {})", sig(d.drift), holds(d.nondecreasing)).expect("string write");
            }
            s
        }
    };
    Ok(Output::ok(text))
}

fn run_semiinf(args: &SemiinfArgs, format: Format) -> CliResult<Output> {
    let input = load_input(&args.file)?;
    let Some(source) = input.source() else {
        return Err(CliError::Usage(format!("{}: not a semi-infinite source (no `families` key)", args.file.display())));
    };
    let mut source = source.clone();
    if let Some(norm) = args.norm {
        source.norm = norm;
    }
    let sampling = SamplingConfig { directions: args.directions, seed: args.perturb.seed, ..SamplingConfig::default() };
    let est_cfg = args.perturb.config(Mode::Full)?;
    let quantity = args.quantity;
    let table_data = refine_and_track(&source, &args.levels, quantity.name(), |p| {
        let x_bar = nominal_point(p)?;
        match quantity {
            Quantity::C3 => Ok(c3_upper_bound(p, &x_bar)?.value),
            Quantity::C1Sampling => Ok(c1_sampling(p, &x_bar, &sampling)?.value),
            Quantity::Exact => Ok(c1_directional(p, &x_bar)?.value),
            Quantity::Empirical => Ok(estimate_clm(p, &est_cfg)?.estimate),
        }
    });
    let text = match format {
        Format::Json => json(&table_data),
        Format::Csv => {
            let mut s = String::from("quantity,grid,value,error\n");
            for l in &table_data.levels {
                let value = l.value.map(|v| v.to_string()).unwrap_or_default();
                writeln!(s, "{},{},{},{}", table_data.quantity, l.grid, value, csv_field(l.error.as_deref().unwrap_or("")))
                    .expect("string write");
            }
            s
        }
        Format::Table => semiinf_table(&table_data),
    };
    Ok(Output::ok(text))
}

fn semiinf_table(t: &ConvergenceTable) -> String {
    let mut prev: Option<f64> = None;
    let rows: Vec<Vec<String>> = t
        .levels
        .iter()
        .map(|l| {
            let delta = match (prev, l.value) {
                (Some(a), Some(b)) => sig((b - a).abs()),
                _ => "-".into(),
            };
            if l.value.is_some() {
                prev = l.value;
            }
            vec![l.grid.to_string(), opt(l.value), delta, l.error.clone().unwrap_or_default()]
        })
        .collect();
    let mut s = format!("quantity {}\n\n", t.quantity);
    s.push_str(&table(&["grid", "value", "delta", "error"], &rows));
    writeln!(s, "\nfinal delta  {}\nstabilizing  {}", opt(t.final_delta), holds(t.stabilizing)).expect("string write");
    s
}

fn run_replay(args: &ReplayArgs, format: Format) -> CliResult<Output> {
    let problem = args.input.problem()?;
    let text = read(&args.sequence)?;
    let seq: SequenceFile = serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: args.sequence.clone(),
        source: CalmnessError::Invalid(e.to_string()),
    })?;
    let rows = replay_sequence(&problem, &seq.entries)?;
    let text = match format {
        Format::Json => json(&rows),
        Format::Csv => replay_csv(&rows),
        Format::Table => {
            let cells: Vec<Vec<String>> = rows
                .iter()
                .map(|r| vec![r.index.to_string(), sig(r.param_distance), opt(r.distance), opt(r.ratio), r.status.clone()])
                .collect();
            table(&["index", "parameter distance", "distance", "ratio", "status"], &cells)
        }
    };
    Ok(Output::ok(text))
}

fn replay_csv(rows: &[ReplayRow]) -> String {
    let mut s = String::from("index,param_distance,distance,ratio,status,kkt_residual\n");
    let f = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        writeln!(s, "{},{},{},{},{},{}", r.index, r.param_distance, f(r.distance), f(r.ratio), csv_field(&r.status), f(r.kkt_residual))
            .expect("string write");
    }
    s
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn write_stdout(text: &str) -> CliResult<()> {
    use std::io::Write;
    let mut stdout = std::io::stdout().lock();
    match stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
            Err(CliError::Write { path: PathBuf::from("<stdout>"), source: e })
        }
        _ => Ok(()),
    }
}

fn run(cli: &Cli) -> CliResult<Output> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot configure thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Certify(input) => run_certify(input, cli.format),
        Command::Moduli(args) => run_moduli(args, cli.format),
        Command::Empirical(args) => run_empirical(args, cli.format),
        Command::Semiinf(args) => run_semiinf(args, cli.format),
        Command::Replay(args) => run_replay(args, cli.format),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CALMNESS_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    let result = run(&cli).and_then(|out| {
        match &cli.out {
            Some(path) => std::fs::write(path, &out.text).map_err(|source| CliError::Write { path: path.clone(), source })?,
            None => write_stdout(&out.text)?,
        }
        Ok(out.code)
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
