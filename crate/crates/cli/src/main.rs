use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use cpmap::analysis::{curve_csv, scan_csv, uniform_grid};
use cpmap::channel::DEFAULT_KRAUS_CUTOFF;
use cpmap::io::{
    choi_from_json, density_from_json, density_to_json, kraus_to_json, matrix_to_json,
    result_to_json, target_from_json, target_to_json,
};
use cpmap::{
    alpha_scan, analytic_r, apply, bloch_state, build_r_montecarlo, build_r_quadrature_with,
    dilation, fidelity, fidelity_bound, kraus_from_choi, mc_fidelity, model_family, paper_values,
    solve, state_fidelity_curve, validate_choi, DensityMatrix, Init, ModelSpec, QuadratureNodes,
    SolverOptions, TargetOperator,
};

#[derive(Parser)]
#[command(name = "cpmap", version, about = "Fidelity-optimal quantum channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find the optimal channel for a model or target file
    Solve(SolveArgs),
    /// Print the upper bound dim_in * lambda_max(R)
    Bound(SourceArgs),
    /// Build the target operator R
    Rmatrix(RmatrixArgs),
    /// Kraus operators of a Choi operator
    Kraus(KrausArgs),
    /// Isometric dilation of a Choi operator
    Dilate(DilateArgs),
    /// Apply a channel to a pure state or density matrix
    Apply(ApplyArgs),
    /// Shifter fidelity over a range of shift angles
    Scan(ScanArgs),
    /// Azimuth-averaged fidelity as a function of the polar angle
    Curve(CurveArgs),
    /// Check a channel and estimate its fidelity by sampling
    Validate(ValidateArgs),
    /// Print the table of closed-form optima next to solver results
    Verify(SolverFlags),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelName {
    Unot,
    Cloner,
    EntanglerA,
    EntanglerB,
    Shifter,
    Identity,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, value_enum)]
    model: Option<ModelName>,
    /// Number of copies for unot and cloner
    #[arg(long)]
    copies: Option<usize>,
    /// Shift angle in radians for the shifter
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
}

impl ModelArgs {
    fn spec(&self) -> Result<ModelSpec> {
        let name = self.model.ok_or_else(|| usage("--model is required"))?;
        let spec = match name {
            ModelName::Unot => ModelSpec::unot(self.copies.unwrap_or(1)),
            ModelName::Cloner => ModelSpec::cloner(self.copies.unwrap_or(1)),
            ModelName::EntanglerA => Ok(ModelSpec::EntanglerA),
            ModelName::EntanglerB => Ok(ModelSpec::EntanglerB),
            ModelName::Shifter => ModelSpec::shifter(self.alpha.unwrap_or(0.0)),
            ModelName::Identity => Ok(ModelSpec::Identity),
        };
        Ok(spec?)
    }
}

#[derive(Args)]
struct SourceArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Target operator JSON instead of a built-in model
    #[arg(long = "r", value_name = "FILE", conflicts_with = "model")]
    r: Option<PathBuf>,
}

impl SourceArgs {
    fn target(&self) -> Result<TargetOperator> {
        match &self.r {
            Some(path) => Ok(target_from_json(&read(path)?)?),
            None => Ok(analytic_r(&self.model.spec()?)),
        }
    }
}

#[derive(Args)]
struct SolverFlags {
    /// Stop when the fidelity changes by less than this
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// Stop when chi changes by less than this (Frobenius norm)
    #[arg(long, default_value_t = 1e-10)]
    chi_tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
}

impl SolverFlags {
    fn options(&self, init: Init) -> SolverOptions {
        SolverOptions {
            max_iters: self.max_iters,
            fid_tol: self.tol,
            chi_tol: self.chi_tol,
            init,
            ..Default::default()
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    solver: SolverFlags,
    /// maxmix, random:SEED, or a Choi JSON file
    #[arg(long, default_value = "maxmix")]
    init: String,
    /// Exit with status 4 if the iteration does not converge
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RmatrixArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Integrate numerically instead of using the closed form
    #[arg(long)]
    quadrature: bool,
    #[arg(long, requires = "quadrature")]
    nodes_theta: Option<usize>,
    #[arg(long, requires = "quadrature")]
    nodes_phi: Option<usize>,
    /// Monte-Carlo estimate with this many samples
    #[arg(long, conflicts_with = "quadrature")]
    samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct KrausArgs {
    #[arg(long)]
    chi: PathBuf,
    /// Relative eigenvalue cutoff
    #[arg(long, default_value_t = DEFAULT_KRAUS_CUTOFF)]
    cutoff: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DilateArgs {
    #[arg(long)]
    chi: PathBuf,
    #[arg(long, default_value_t = DEFAULT_KRAUS_CUTOFF)]
    cutoff: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ApplyArgs {
    #[arg(long)]
    chi: PathBuf,
    /// Pure input state as THETA,PHI in radians
    #[arg(
        long,
        value_name = "THETA,PHI",
        allow_hyphen_values = true,
        conflicts_with = "rho"
    )]
    state: Option<String>,
    /// Input density matrix JSON
    #[arg(long)]
    rho: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 0.0)]
    from: f64,
    #[arg(long, default_value_t = std::f64::consts::PI)]
    to: f64,
    #[arg(long, default_value_t = 101)]
    steps: usize,
    /// Worker threads (default: all processors)
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    solver: SolverFlags,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct CurveArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    chi: PathBuf,
    #[arg(long, default_value_t = 181)]
    steps: usize,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    chi: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Raised for bad flag combinations; maps to exit status 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Raised by `solve --strict`; maps to exit status 4.
#[derive(Debug)]
struct NotConverged(usize);

impl std::fmt::Display for NotConverged {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "solver did not converge within {} iterations", self.0)
    }
}

impl std::error::Error for NotConverged {}

fn exit_code(err: &anyhow::Error) -> u8 {
    use cpmap::Error as E;
    if err.downcast_ref::<NotConverged>().is_some() {
        return 4;
    }
    match err.downcast_ref::<cpmap::Error>() {
        Some(
            E::NotHermitian { .. }
            | E::ConvergenceFailure { .. }
            | E::NegativeEigenvalue { .. }
            | E::AllZero
            | E::InvalidChoi(_)
            | E::InvalidDensity(_)
            | E::InvalidTarget(_)
            | E::TraceConditionViolated { .. }
            | E::NormViolation { .. }
            | E::SingularLambda
            | E::UnsupportedDims { .. },
        ) => 3,
        Some(_) => 2,
        None if err.downcast_ref::<NumericalFailure>().is_some() => 3,
        None => 2,
    }
}

/// An invariant check that failed beyond tolerance; maps to exit status 3.
#[derive(Debug)]
struct NumericalFailure(String);

impl std::fmt::Display for NumericalFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for NumericalFailure {}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// Writes to `out` if given, else to stdout.
fn emit(out: Option<&Path>, contents: &str) -> Result<()> {
    match out {
        Some(p) => write(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn parse_init(s: &str) -> Result<Init> {
    if s == "maxmix" {
        return Ok(Init::MaxMix);
    }
    if let Some(seed) = s.strip_prefix("random:") {
        let seed = seed
            .parse()
            .map_err(|_| usage(format!("bad seed in --init {s}")))?;
        return Ok(Init::Random(seed));
    }
    Ok(Init::Explicit(choi_from_json(&read(Path::new(s))?)?))
}

fn parse_state(s: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [t, p] => match (t.parse(), p.parse()) {
            (Ok(t), Ok(p)) => Ok((t, p)),
            _ => Err(usage(format!("--state expects THETA,PHI, got '{s}'"))),
        },
        _ => Err(usage(format!("--state expects THETA,PHI, got '{s}'"))),
    }
}

/// Fixed ten decimals with trailing zeros removed.
fn trimmed(x: f64) -> String {
    let s = format!("{x:.10}");
    let s = s.trim_end_matches('0');
    s.strip_suffix('.').unwrap_or(s).to_string()
}

fn run_solve(args: &SolveArgs) -> Result<()> {
    let r = args.source.target()?;
    let opts = args.solver.options(parse_init(&args.init)?);
    let res = solve(&r, &opts)?;
    println!(
        "F = {:.10}  bound = {:.10}  iters = {}  converged = {}",
        res.fidelity, res.bound, res.iterations, res.converged
    );
    if let Some(out) = &args.out {
        write(out, &result_to_json(&res))?;
    }
    if args.strict && !res.converged {
        return Err(NotConverged(res.iterations).into());
    }
    Ok(())
}

fn run_rmatrix(args: &RmatrixArgs) -> Result<()> {
    let spec = args.model.spec()?;
    let r = if args.quadrature {
        let mut nodes = QuadratureNodes::for_degree(spec.polynomial_degree());
        nodes.theta = args.nodes_theta.unwrap_or(nodes.theta);
        nodes.phi = args.nodes_phi.unwrap_or(nodes.phi);
        build_r_quadrature_with(&model_family(&spec), nodes)?
    } else if let Some(samples) = args.samples {
        build_r_montecarlo(&model_family(&spec), samples, args.seed)?
    } else {
        analytic_r(&spec)
    };
    emit(args.out.as_deref(), &target_to_json(&r))?;
    if args.out.is_some() {
        println!(
            "{spec}: {}x{}  lambda_max = {:.12}  bound = {:.12}",
            r.matrix().rows(),
            r.matrix().cols(),
            r.lambda_max(),
            fidelity_bound(&r)
        );
    }
    Ok(())
}

fn run_kraus(args: &KrausArgs) -> Result<()> {
    let chi = choi_from_json(&read(&args.chi)?)?;
    let k = kraus_from_choi(&chi, args.cutoff)?;
    emit(args.out.as_deref(), &kraus_to_json(&k))?;
    if args.out.is_some() {
        let weights: Vec<String> = k.weights.iter().map(|w| format!("{w:.6e}")).collect();
        println!(
            "{} Kraus operators  weights = [{}]  max |sum A^H A - 1| = {:.3e}",
            k.len(),
            weights.join(", "),
            k.trace_condition_deviation()
        );
    }
    Ok(())
}

fn run_dilate(args: &DilateArgs) -> Result<()> {
    let chi = choi_from_json(&read(&args.chi)?)?;
    let k = kraus_from_choi(&chi, args.cutoff)?;
    let v = dilation(&k)?;
    emit(args.out.as_deref(), &matrix_to_json(&v, Some("dilation")))?;
    if args.out.is_some() {
        let gram = &v.adjoint() * &v;
        let dev = gram.max_abs_diff(&cpmap::ComplexMatrix::identity(v.cols()));
        println!(
            "dilation {}x{} ({} ancilla levels)  max |V^H V - 1| = {dev:.3e}",
            v.rows(),
            v.cols(),
            k.len()
        );
    }
    Ok(())
}

fn run_apply(args: &ApplyArgs) -> Result<()> {
    let chi = choi_from_json(&read(&args.chi)?)?;
    let rho = match (&args.state, &args.rho) {
        (Some(s), None) => {
            if chi.dim_in() != 2 {
                return Err(usage(
                    "--state builds a qubit; this channel's input is not a qubit",
                ));
            }
            let (t, p) = parse_state(s)?;
            DensityMatrix::pure(&bloch_state(t, p))?
        }
        (None, Some(path)) => density_from_json(&read(path)?)?,
        _ => return Err(usage("give exactly one of --state or --rho")),
    };
    let out = apply(&chi, &rho)?;
    emit(args.out.as_deref(), &density_to_json(&out))
}

fn run_scan(args: &ScanArgs) -> Result<()> {
    if !matches!(args.model.model, Some(ModelName::Shifter)) {
        return Err(usage("scan supports --model shifter only"));
    }
    if args.steps == 0 {
        return Err(usage("--steps must be positive"));
    }
    let alphas = uniform_grid(args.from, args.to, args.steps);
    let opts = args.solver.options(Init::MaxMix);
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = args.jobs {
        if j == 0 {
            return Err(usage("--jobs must be positive"));
        }
        pool = pool.num_threads(j);
    }
    let rows = pool.build()?.install(|| alpha_scan(&alphas, &opts))?;

    println!(
        "{:>14} {:>14} {:>14} {:>14} {:>14}",
        "alpha", "beta_opt", "F_solver", "F_closed", "F_bound"
    );
    for r in &rows {
        println!(
            "{:>14.10} {:>14.10} {:>14.10} {:>14.10} {:>14.10}{}",
            r.alpha,
            r.beta_opt,
            r.f_solver,
            r.f_closed,
            r.f_bound,
            r.error
                .as_deref()
                .map(|e| format!("  error: {e}"))
                .unwrap_or_default()
        );
    }
    if let Some(csv) = &args.csv {
        write(csv, &scan_csv(&rows))?;
    }
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        return Err(NumericalFailure(format!("{failed} scan rows failed")).into());
    }
    Ok(())
}

fn run_curve(args: &CurveArgs) -> Result<()> {
    let spec = args.model.spec()?;
    let chi = choi_from_json(&read(&args.chi)?)?;
    if args.steps < 2 {
        return Err(usage("--steps must be at least 2"));
    }
    let curve = state_fidelity_curve(&chi, &model_family(&spec), args.steps)?;
    let (t_min, f_min) = curve
        .iter()
        .copied()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| anyhow!("empty curve"))?;
    println!("min F = {f_min:.10} at theta = {t_min:.10}");
    match &args.csv {
        Some(path) => write(path, &curve_csv(&curve)),
        None => {
            print!("{}", curve_csv(&curve));
            Ok(())
        }
    }
}

fn run_validate(args: &ValidateArgs) -> Result<()> {
    let spec = args.model.spec()?;
    let chi = choi_from_json(&read(&args.chi)?)?;
    let report = validate_choi(&chi, cpmap::channel::PSD_TOL)?;
    let exact = fidelity(&chi, &analytic_r(&spec))?;
    let est = mc_fidelity(&chi, &model_family(&spec), args.samples, args.seed)?;
    println!(
        "min eigenvalue = {:.3e}  trace deviation = {:.3e}  hermiticity deviation = {:.3e}",
        report.min_eigenvalue, report.trace_preservation_deviation, report.hermiticity_deviation
    );
    println!(
        "F = {exact:.10}  F_mc = {:.10} +- {:.3e}  ({} samples, seed {})",
        est.mean, est.std_error, args.samples, args.seed
    );
    let tol = (4.0 * est.std_error).max(1e-9);
    if (est.mean - exact).abs() > tol {
        return Err(NumericalFailure(format!(
            "sampled fidelity {:.10} differs from Tr[chi R] = {exact:.10} by more than {tol:.3e}",
            est.mean
        ))
        .into());
    }
    Ok(())
}

fn run_verify(flags: &SolverFlags) -> Result<()> {
    let rows = paper_values(&flags.options(Init::MaxMix))?;
    let width = rows.iter().map(|r| r.label.len()).max().unwrap_or(0);
    println!(
        "{:<width$}  {:>16}  {:>16}  {:>10}",
        "quantity", "expected", "obtained", "|diff|"
    );
    for r in &rows {
        println!(
            "{:<width$}  {:>16.12}  {:>16.12}  {:>10.3e}",
            r.label, r.expected, r.obtained, r.abs_diff
        );
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Solve(a) => run_solve(a),
        Command::Bound(a) => {
            println!("bound = {}", trimmed(fidelity_bound(&a.target()?)));
            Ok(())
        }
        Command::Rmatrix(a) => run_rmatrix(a),
        Command::Kraus(a) => run_kraus(a),
        Command::Dilate(a) => run_dilate(a),
        Command::Apply(a) => run_apply(a),
        Command::Scan(a) => run_scan(a),
        Command::Curve(a) => run_curve(a),
        Command::Validate(a) => run_validate(a),
        Command::Verify(f) => run_verify(f),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("error: {}", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::from(exit_code(&e))
        }
    }
}
