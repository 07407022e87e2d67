//! `qproc`: decide or bracket uniqueness of a Q-process from the command line.
//!
//! Exit codes: 0 means a verdict was produced (including `inconclusive`),
//! 2 is a usage error, 3 a model definition or parse error, and 4 a runtime
//! failure such as a resource limit or an output file that cannot be written.

use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qproc_core::simulate::trial_seed;
use qproc_core::{
    enumerate_window, scan_drift_constant, simulate_path, CertificateKind, Error, GeneratorModel,
    StateVec,
};

use qproc_cli::analysis::{run_analysis, AnalysisConfig, AnalysisOutcome, MethodKind};
use qproc_cli::certfile::{self, CertFile};
use qproc_cli::dsl;
use qproc_cli::report::{self, ConfigEcho, ModelInfo, OverallVerdict, ParamEcho, ThresholdEcho};
use qproc_cli::zoo;

#[derive(Parser)]
#[command(
    name = "qproc",
    version,
    about = "Uniqueness and explosion analysis for countable-state Q-matrices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run analysis methods against a model and reconcile their verdicts.
    Analyze(AnalyzeArgs),
    /// Estimate the explosion probability by simulating jump paths.
    Simulate(SimulateArgs),
    /// Check a certificate sidecar file against a model.
    Certify(CertifyArgs),
    /// Parse a model file, report diagnostics, and echo its canonical form.
    #[command(name = "parse-check")]
    ParseCheck(ParseCheckArgs),
    /// Scan a window for the best drift constant of a given function.
    #[command(name = "scan-c")]
    ScanC(ScanArgs),
}

/// Ways a subcommand can fail, mapped onto exit codes.
enum Failure {
    Core(Error),
    /// A parse diagnostic, already annotated with its file.
    Parse(String),
    Io(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Core(Error::Usage(_)) => 2,
            Failure::Core(Error::ModelDefinition(_) | Error::RateOverflow(_)) => 3,
            Failure::Core(_) => 4,
            Failure::Parse(_) => 3,
            Failure::Io(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Parse(msg) | Failure::Io(msg) => f.write_str(msg),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn usage(message: String) -> Failure {
    Failure::Core(Error::Usage(message))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(args) => run_analyze(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Certify(args) => run_certify(args),
        Command::ParseCheck(args) => run_parse_check(args),
        Command::ScanC(args) => run_scan(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}

/// Model selection shared by every subcommand that needs a model.
#[derive(Args)]
struct ModelArgs {
    /// Model file in the .qm language.
    #[arg(long, value_name = "FILE", conflicts_with = "zoo")]
    model: Option<PathBuf>,
    /// Built-in model name; pass an unknown name to list the catalog.
    #[arg(long, value_name = "NAME")]
    zoo: Option<String>,
    /// Override a model parameter (repeatable).
    #[arg(long = "param", value_name = "NAME=VALUE")]
    params: Vec<String>,
}

impl ModelArgs {
    fn load(&self) -> Result<(GeneratorModel, String), Failure> {
        let overrides = parse_overrides(&self.params)?;
        if let Some(name) = &self.zoo {
            let model = zoo::build_zoo_model(name, &overrides)?;
            return Ok((model, format!("zoo:{name}")));
        }
        let Some(path) = &self.model else {
            return Err(usage(
                "a model is required: pass --model FILE or --zoo NAME".into(),
            ));
        };
        let mut spec = read_model_spec(path)?;
        apply_overrides(&mut spec, &overrides)?;
        let model = dsl::instantiate(&spec)?;
        Ok((model, format!("file:{}", path.display())))
    }
}

fn read_model_spec(path: &Path) -> Result<dsl::ModelSpec, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    dsl::parse_model(&text).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))
}

fn parse_overrides(items: &[String]) -> Result<Vec<(String, f64)>, Failure> {
    let mut out = Vec::new();
    for item in items {
        let Some((name, value)) = item.split_once('=') else {
            return Err(usage(format!("--param takes NAME=VALUE, got '{item}'")));
        };
        let name = name.trim();
        let value = value.trim();
        let parsed: f64 = value
            .parse()
            .map_err(|_| usage(format!("--param {name}: '{value}' is not a number")))?;
        out.push((name.to_string(), parsed));
    }
    Ok(out)
}

fn apply_overrides(
    spec: &mut dsl::ModelSpec,
    overrides: &[(String, f64)],
) -> Result<(), Failure> {
    for (name, value) in overrides {
        match spec.params.iter_mut().find(|(n, _)| n == name) {
            Some(slot) => slot.1 = *value,
            None => {
                return Err(usage(format!(
                    "model '{}' has no parameter '{name}'",
                    spec.name
                )))
            }
        }
    }
    Ok(())
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum OutputFormat {
    Text,
    Json,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    source: ModelArgs,
    /// Analysis method (repeatable); defaults to lyapunov, resolvent,
    /// embedded, and pure-birth-series.
    #[arg(long = "method", value_name = "NAME")]
    methods: Vec<String>,
    /// Resolvent parameter (repeatable); defaults to 1.
    #[arg(long = "lambda", value_name = "VALUE")]
    lambdas: Vec<f64>,
    /// Comma-separated strictly increasing level caps for truncations.
    #[arg(long = "cap-schedule", value_name = "N,N,...")]
    cap_schedule: Option<String>,
    /// Reference state coordinates, comma separated; defaults to the origin.
    #[arg(long, value_name = "N,N,...")]
    reference: Option<String>,
    /// Killing weight for the embedded-chain method.
    #[arg(long, default_value_t = 0.5)]
    decay: f64,
    /// Simulation trial count.
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    /// Simulation seed; required when the simulate method is selected.
    #[arg(long)]
    seed: Option<u64>,
    /// Simulation time horizon per path.
    #[arg(long = "t-max", default_value_t = 1000.0)]
    t_max: f64,
    /// Simulation jump budget per path.
    #[arg(long = "max-jumps", default_value_t = 100_000)]
    max_jumps: u64,
    /// Number of reciprocal-rate terms for the series method.
    #[arg(long = "series-n-max", default_value_t = 100_000)]
    series_n_max: u64,
    /// Certificate sidecar file; its method is added if not selected.
    #[arg(long, value_name = "FILE")]
    cert: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Report format.
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    format: OutputFormat,
    /// Export the truncation traces of bracket methods as CSV.
    #[arg(long = "trace-csv", value_name = "FILE")]
    trace_csv: Option<PathBuf>,
    /// Run independent method jobs on worker threads.
    #[arg(long)]
    parallel: bool,
}

fn run_analyze(args: AnalyzeArgs) -> Result<(), Failure> {
    let (model, source) = args.source.load()?;

    let mut methods = if args.methods.is_empty() {
        vec![
            MethodKind::Lyapunov,
            MethodKind::Resolvent,
            MethodKind::Embedded,
            MethodKind::Series,
        ]
    } else {
        let mut out = Vec::new();
        for name in &args.methods {
            out.push(MethodKind::from_str(name)?);
        }
        out
    };

    let cert = match &args.cert {
        Some(path) => Some(load_cert(path)?),
        None => None,
    };
    if let Some(cert) = &cert {
        let wanted = method_for_kind(cert.kind);
        if !methods.contains(&wanted) {
            methods.push(wanted);
        }
    }

    let mut config = AnalysisConfig::new(methods);
    if !args.lambdas.is_empty() {
        config.lambdas = args.lambdas.clone();
    }
    if let Some(text) = &args.cap_schedule {
        config.caps = parse_u64_list(text, "--cap-schedule")?;
    }
    config.reference = resolve_reference(args.reference.as_deref(), &model)?;
    config.decay = args.decay;
    config.trials = args.trials;
    config.seed = args.seed;
    config.sim.t_max = args.t_max;
    config.sim.max_jumps = args.max_jumps;
    config.series_n_max = args.series_n_max;
    config.certificate = cert;
    config.parallel = args.parallel;

    let outcome = run_analysis(&model, &config)?;
    let report = build_report(&model, &source, &config, args.cert.as_deref(), outcome);
    if let Some(path) = &args.trace_csv {
        write_file(path, &report::render_trace_csv(&report))?;
    }
    emit(&report, args.format, args.out.as_deref())
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    source: ModelArgs,
    /// Number of independent trials.
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    /// RNG seed; the same seed reproduces the same paths.
    #[arg(long)]
    seed: u64,
    /// Time horizon per path.
    #[arg(long = "t-max", default_value_t = 1000.0)]
    t_max: f64,
    /// Jump budget per path.
    #[arg(long = "max-jumps", default_value_t = 100_000)]
    max_jumps: u64,
    /// Residual reciprocal-rate mass below which a capped path is flagged.
    #[arg(long, default_value_t = 1e-4)]
    epsilon: f64,
    /// Initial state coordinates, comma separated; defaults to the origin.
    #[arg(long, value_name = "N,N,...")]
    reference: Option<String>,
    /// Write every simulated path as CSV (keep --trials small).
    #[arg(long = "dump-paths", value_name = "FILE")]
    dump_paths: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Report format.
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    format: OutputFormat,
}

fn run_simulate(args: SimulateArgs) -> Result<(), Failure> {
    let (model, source) = args.source.load()?;
    let mut config = AnalysisConfig::new(vec![MethodKind::Simulate]);
    config.reference = resolve_reference(args.reference.as_deref(), &model)?;
    config.trials = args.trials;
    config.seed = Some(args.seed);
    config.sim.t_max = args.t_max;
    config.sim.max_jumps = args.max_jumps;
    config.sim.epsilon = args.epsilon;

    let outcome = run_analysis(&model, &config)?;
    if let Some(path) = &args.dump_paths {
        write_file(path, &dump_paths_csv(&model, &config, args.seed)?)?;
    }
    let report = build_report(&model, &source, &config, None, outcome);
    emit(&report, args.format, args.out.as_deref())
}

/// One CSV row per visited state, replaying the exact estimator trials.
fn dump_paths_csv(
    model: &GeneratorModel,
    config: &AnalysisConfig,
    seed: u64,
) -> Result<String, Failure> {
    let mut out = String::from("trial,step,time,state,inverse_rate,prefix_sum,terminal\n");
    for trial in 0..config.trials {
        let path = simulate_path(model, &config.reference, trial_seed(seed, trial), &config.sim)?;
        let mut prefix = 0.0;
        for (step, state) in path.states.iter().enumerate() {
            let inverse = path.inverse_rates[step];
            prefix += inverse;
            let _ = writeln!(
                out,
                "{trial},{step},{},\"{state}\",{inverse},{prefix},{}",
                path.jump_times[step],
                path.terminal.as_str()
            );
        }
    }
    Ok(out)
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    source: ModelArgs,
    /// Certificate sidecar file.
    #[arg(long, value_name = "FILE")]
    cert: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Report format.
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    format: OutputFormat,
}

fn run_certify(args: CertifyArgs) -> Result<(), Failure> {
    let (model, source) = args.source.load()?;
    let cert = load_cert(&args.cert)?;
    let mut config = AnalysisConfig::new(vec![method_for_kind(cert.kind)]);
    config.reference = StateVec::origin(model.dimension());
    config.certificate = Some(cert);
    let outcome = run_analysis(&model, &config)?;
    let report = build_report(&model, &source, &config, Some(&args.cert), outcome);
    emit(&report, args.format, args.out.as_deref())
}

#[derive(Args)]
struct ParseCheckArgs {
    /// Model file to check.
    #[arg(value_name = "FILE")]
    file: PathBuf,
    /// Echo the canonical form of the model.
    #[arg(long)]
    print: bool,
}

fn run_parse_check(args: ParseCheckArgs) -> Result<(), Failure> {
    let spec = read_model_spec(&args.file)?;
    let model = dsl::instantiate(&spec)?;
    let origin = StateVec::origin(model.dimension());
    let row = model.transitions_of(&origin)?;
    println!(
        "ok: model '{}' (dimension {}, {} parameters, {} transition families, {} transitions out of {origin})",
        spec.name,
        spec.dimension,
        spec.params.len(),
        spec.families.len(),
        row.len()
    );
    if args.print {
        print!("{}", dsl::pretty_print(&spec));
    }
    Ok(())
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    source: ModelArgs,
    /// Drift function of the state, for example "1 + level" or "1 + x(0)^2".
    #[arg(long, value_name = "EXPR")]
    phi: String,
    /// Level cap of the scan window.
    #[arg(long, default_value_t = 200)]
    cap: u64,
    /// Direction of the scanned inequality.
    #[arg(long, value_enum, default_value_t = ScanKind::Uniqueness)]
    kind: ScanKind,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScanKind {
    Uniqueness,
    Corollary,
    #[value(name = "non-uniqueness")]
    NonUniqueness,
}

fn run_scan(args: ScanArgs) -> Result<(), Failure> {
    let (model, _) = args.source.load()?;
    let phi = certfile::compile_phi_source(&args.phi, &model)?;
    let window = enumerate_window(&model, args.cap)?;
    let kind = match args.kind {
        ScanKind::Uniqueness => CertificateKind::Uniqueness,
        ScanKind::Corollary => CertificateKind::UniquenessWithRateDomination,
        ScanKind::NonUniqueness => CertificateKind::NonUniqueness,
    };
    match scan_drift_constant(&model, &phi, &window, kind)? {
        Some(c) => println!("c = {c}"),
        None => println!("no admissible constant on levels <= {}", args.cap),
    }
    Ok(())
}

fn method_for_kind(kind: CertificateKind) -> MethodKind {
    match kind {
        CertificateKind::Uniqueness => MethodKind::Lyapunov,
        CertificateKind::UniquenessWithRateDomination => MethodKind::Corollary,
        CertificateKind::NonUniqueness => MethodKind::NonUniqueness,
    }
}

fn load_cert(path: &Path) -> Result<CertFile, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    certfile::parse_cert_file(&text)
        .map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))
}

fn parse_u64_list(text: &str, what: &str) -> Result<Vec<u64>, Failure> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        let n: u64 = part
            .parse()
            .map_err(|_| usage(format!("{what}: '{part}' is not a nonnegative integer")))?;
        out.push(n);
    }
    Ok(out)
}

fn resolve_reference(
    text: Option<&str>,
    model: &GeneratorModel,
) -> Result<StateVec, Failure> {
    let Some(text) = text else {
        return Ok(StateVec::origin(model.dimension()));
    };
    let mut coords = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        let c: u32 = part
            .parse()
            .map_err(|_| usage(format!("--reference: '{part}' is not a coordinate")))?;
        coords.push(c);
    }
    Ok(StateVec::new(&coords))
}

fn build_report(
    model: &GeneratorModel,
    source: &str,
    config: &AnalysisConfig,
    cert_path: Option<&Path>,
    outcome: AnalysisOutcome,
) -> report::Report {
    let model_info = ModelInfo {
        name: model.name().to_string(),
        dimension: model.dimension(),
        params: model
            .params()
            .iter()
            .map(|(name, value)| ParamEcho {
                name: name.clone(),
                value: *value,
            })
            .collect(),
        source: source.to_string(),
    };
    let config_echo = ConfigEcho {
        methods: config
            .methods
            .iter()
            .map(|m| m.as_str().to_string())
            .collect(),
        lambdas: config.lambdas.clone(),
        cap_schedule: config.caps.clone(),
        reference: config.reference.coords().to_vec(),
        decay: config.decay,
        trials: config.trials,
        seed: config.seed,
        t_max: config.sim.t_max,
        max_jumps: config.sim.max_jumps,
        series_n_max: config.series_n_max,
        certificate: cert_path.map(|p| p.display().to_string()),
        thresholds: ThresholdEcho {
            positive: config.thresholds.positive,
            zero: config.thresholds.zero,
            decay_max: config.thresholds.decay_max,
            decay_count: config.thresholds.decay_count,
        },
    };
    let verdict = OverallVerdict {
        overall: outcome.overall.as_str().to_string(),
        confidence: outcome.confidence.map(str::to_string),
        notes: outcome.notes,
    };
    report::assemble(model_info, config_echo, verdict, outcome.records)
}

fn emit(
    report: &report::Report,
    format: OutputFormat,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let text = match format {
        OutputFormat::Text => report::render_text(report),
        OutputFormat::Json => report::render_json(report),
    };
    match out {
        Some(path) => write_file(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text)
        .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
}
