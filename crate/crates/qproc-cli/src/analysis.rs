//! Runs the selected methods against one model and reconciles their
//! evidence into a single verdict.
//!
//! Every method produces a record even when it fails or does not apply:
//! errors become `failed` records with the message, inapplicable methods
//! become `skipped` records with the reason, and the remaining evidence is
//! still reconciled.  Analytic evidence outranks simulation: a flagged
//! simulation with no analytic support yields a non-unique verdict tagged
//! `simulation-only`.

use std::str::FromStr;

use qproc_core::{
    estimate_explosion_probability, pure_birth_verdict, scan_drift_constant, uniqueness_verdict_embedded,
    uniqueness_verdict_resolvent, BracketOptions, CertVerdict, CertificateKind, CertificateReport,
    CheckKind, Error, GeneratorModel, LyapunovCertificate, SimOptions, StateVec, VerdictThresholds,
    WindowFamily,
};

use crate::certfile::{self, CertFile};
use crate::report::{CertEcho, GrowthEcho, MethodRecord, SimEcho, TraceEcho, ViolationEcho};

/// The analysis methods reachable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MethodKind {
    Lyapunov,
    Corollary,
    NonUniqueness,
    Resolvent,
    Embedded,
    Simulate,
    Series,
}

pub const ALL_METHODS: [MethodKind; 7] = [
    MethodKind::Lyapunov,
    MethodKind::Corollary,
    MethodKind::NonUniqueness,
    MethodKind::Resolvent,
    MethodKind::Embedded,
    MethodKind::Simulate,
    MethodKind::Series,
];

impl MethodKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MethodKind::Lyapunov => "lyapunov",
            MethodKind::Corollary => "corollary",
            MethodKind::NonUniqueness => "non-uniqueness",
            MethodKind::Resolvent => "resolvent",
            MethodKind::Embedded => "embedded",
            MethodKind::Simulate => "simulate",
            MethodKind::Series => "pure-birth-series",
        }
    }

    /// Whether the method depends on the resolvent parameter.
    fn uses_lambda(self) -> bool {
        matches!(self, MethodKind::Resolvent | MethodKind::Embedded)
    }
}

impl FromStr for MethodKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Ok(match s {
            "lyapunov" => MethodKind::Lyapunov,
            "corollary" => MethodKind::Corollary,
            "non-uniqueness" | "nonuniqueness" => MethodKind::NonUniqueness,
            "resolvent" => MethodKind::Resolvent,
            "embedded" => MethodKind::Embedded,
            "simulate" => MethodKind::Simulate,
            "pure-birth-series" | "series" => MethodKind::Series,
            other => {
                return Err(Error::Usage(format!(
                    "unknown method '{other}'; available: lyapunov, corollary, non-uniqueness, resolvent, embedded, simulate, pure-birth-series"
                )))
            }
        })
    }
}

/// Everything a run needs besides the model itself.
#[derive(Debug, Clone)]
pub struct AnalysisConfig {
    pub methods: Vec<MethodKind>,
    pub lambdas: Vec<f64>,
    pub caps: Vec<u64>,
    pub reference: StateVec,
    pub decay: f64,
    pub bracket: BracketOptions,
    pub thresholds: VerdictThresholds,
    pub sim: SimOptions,
    pub trials: u64,
    pub seed: Option<u64>,
    pub series_n_max: u64,
    pub certificate: Option<CertFile>,
    pub parallel: bool,
}

impl AnalysisConfig {
    /// Defaults for a one-dimensional model; widen per model with
    /// [`AnalysisConfig::with_reference`].
    pub fn new(methods: Vec<MethodKind>) -> Self {
        AnalysisConfig {
            methods,
            lambdas: vec![1.0],
            caps: vec![25, 50, 100, 200],
            reference: StateVec::origin(1),
            decay: 0.5,
            bracket: BracketOptions::default(),
            thresholds: VerdictThresholds::default(),
            // A tail threshold of 1e-4 catches polynomial-rate explosions at
            // the default jump budget: a quadratic-rate path capped at 10^5
            // jumps leaves tail mass near 1e-5, well below the threshold,
            // while any summable-tail chain that is merely slow leaves far
            // more than 1e-4.
            sim: SimOptions {
                t_max: 1000.0,
                max_jumps: 100_000,
                epsilon: 1e-4,
            },
            trials: 1000,
            seed: None,
            series_n_max: 100_000,
            certificate: None,
            parallel: false,
        }
    }

    pub fn with_reference(mut self, reference: StateVec) -> Self {
        self.reference = reference;
        self
    }
}

/// Reconciled outcome plus the per-method records feeding it.
#[derive(Debug, Clone)]
pub struct AnalysisOutcome {
    pub overall: Overall,
    pub confidence: Option<&'static str>,
    pub notes: Vec<String>,
    pub records: Vec<MethodRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Overall {
    Unique,
    NonUnique,
    Inconclusive,
    Contradictory,
}

impl Overall {
    pub fn as_str(self) -> &'static str {
        match self {
            Overall::Unique => "unique",
            Overall::NonUnique => "non-unique",
            Overall::Inconclusive => "inconclusive",
            Overall::Contradictory => "contradictory",
        }
    }
}

const STATUS_UNIQUE: &str = "unique";
const STATUS_NON_UNIQUE: &str = "non-unique";
const STATUS_INCONCLUSIVE: &str = "inconclusive";
const STATUS_SKIPPED: &str = "skipped";
const STATUS_FAILED: &str = "failed";

/// One unit of work: a method at an optional resolvent parameter.
#[derive(Debug, Clone, Copy)]
struct Job {
    method: MethodKind,
    lambda: Option<f64>,
}

/// Runs every selected method and reconciles the evidence.
pub fn run_analysis(
    model: &GeneratorModel,
    config: &AnalysisConfig,
) -> qproc_core::Result<AnalysisOutcome> {
    validate(model, config)?;
    let jobs = expand_jobs(config);
    let records: Vec<MethodRecord> = if config.parallel {
        let mut slots: Vec<Option<MethodRecord>> = vec![None; jobs.len()];
        std::thread::scope(|scope| {
            let mut handles = Vec::with_capacity(jobs.len());
            for (slot, job) in slots.iter_mut().zip(&jobs) {
                handles.push(scope.spawn(move || {
                    *slot = Some(run_job(model, config, *job));
                }));
            }
            for handle in handles {
                handle.join().expect("method workers do not panic");
            }
        });
        slots.into_iter().map(|s| s.expect("every job ran")).collect()
    } else {
        jobs.iter().map(|job| run_job(model, config, *job)).collect()
    };
    Ok(reconcile(records))
}

fn validate(model: &GeneratorModel, config: &AnalysisConfig) -> qproc_core::Result<()> {
    if config.methods.is_empty() {
        return Err(Error::Usage("select at least one method".into()));
    }
    if config.methods.contains(&MethodKind::Simulate) && config.seed.is_none() {
        return Err(Error::Usage(
            "simulation needs an explicit seed for reproducibility".into(),
        ));
    }
    if config.lambdas.is_empty() {
        return Err(Error::Usage("the lambda list must not be empty".into()));
    }
    for &lambda in &config.lambdas {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Usage(format!(
                "resolvent parameters must be positive and finite, got {lambda}"
            )));
        }
    }
    if config.reference.dimension() != model.dimension() {
        return Err(Error::Usage(format!(
            "reference state {} has dimension {}, model '{}' expects {}",
            config.reference,
            config.reference.dimension(),
            model.name(),
            model.dimension()
        )));
    }
    model.transitions_of(&config.reference)?;
    Ok(())
}

fn expand_jobs(config: &AnalysisConfig) -> Vec<Job> {
    let mut jobs = Vec::new();
    let mut seen: Vec<MethodKind> = Vec::new();
    for &method in &config.methods {
        if seen.contains(&method) {
            continue;
        }
        seen.push(method);
        if method.uses_lambda() {
            for &lambda in &config.lambdas {
                jobs.push(Job {
                    method,
                    lambda: Some(lambda),
                });
            }
        } else {
            jobs.push(Job {
                method,
                lambda: None,
            });
        }
    }
    jobs
}

fn blank_record(job: Job) -> MethodRecord {
    MethodRecord {
        method: job.method.as_str().to_string(),
        lambda: job.lambda,
        status: STATUS_INCONCLUSIVE.to_string(),
        detail: String::new(),
        traces: Vec::new(),
        certificate: None,
        simulation: None,
    }
}

fn run_job(model: &GeneratorModel, config: &AnalysisConfig, job: Job) -> MethodRecord {
    let mut record = blank_record(job);
    let outcome = match job.method {
        MethodKind::Lyapunov => run_lyapunov(model, config, &mut record),
        MethodKind::Corollary => {
            run_certificate_method(model, config, CertificateKind::UniquenessWithRateDomination, &mut record)
        }
        MethodKind::NonUniqueness => {
            run_certificate_method(model, config, CertificateKind::NonUniqueness, &mut record)
        }
        MethodKind::Resolvent | MethodKind::Embedded => run_bracket(model, config, job, &mut record),
        MethodKind::Simulate => run_simulation(model, config, &mut record),
        MethodKind::Series => run_series(model, config, &mut record),
    };
    if let Err(error) = outcome {
        record.status = STATUS_FAILED.to_string();
        record.detail = error.to_string();
    }
    record
}

/// Default drift function when no certificate is supplied: `1 + level`,
/// with the constant scanned on a window strictly inside the checking one.
fn default_uniqueness_certificate(
    model: &GeneratorModel,
    caps: &[u64],
) -> qproc_core::Result<(LyapunovCertificate, Vec<String>)> {
    let phi = |state: &StateVec| 1.0 + state.level() as f64;
    let scan_at = if caps.len() >= 2 {
        caps[caps.len() - 2]
    } else {
        (caps[0] / 2).max(1)
    };
    let window = qproc_core::enumerate_window(model, scan_at)?;
    let scanned = scan_drift_constant(model, &phi, &window, CertificateKind::Uniqueness)?
        .ok_or_else(|| {
            Error::Precondition(format!(
                "no drift constant supports 1 + level on levels <= {scan_at}"
            ))
        })?
        .max(0.0);
    let cert = LyapunovCertificate {
        phi: std::sync::Arc::new(phi),
        drift_constant: scanned,
        kind: CertificateKind::Uniqueness,
        bound: None,
        family: WindowFamily::LevelCaps(caps.to_vec()),
    };
    let notes = vec![format!(
        "default drift function 1 + level; c = {scanned} scanned on levels <= {scan_at}"
    )];
    Ok((cert, notes))
}

fn run_lyapunov(
    model: &GeneratorModel,
    config: &AnalysisConfig,
    record: &mut MethodRecord,
) -> qproc_core::Result<()> {
    let supplied = config
        .certificate
        .as_ref()
        .filter(|file| file.kind == CertificateKind::Uniqueness);
    let (cert, mut notes) = match supplied {
        Some(file) => {
            let (cert, notes) = certfile::apply_cert(file, model)?;
            record.detail = format!("drift function from certificate: {}", file.phi_source);
            (cert, notes)
        }
        None => {
            let (cert, notes) = default_uniqueness_certificate(model, &config.caps)?;
            record.detail = "drift function 1 + level with a scanned constant".to_string();
            (cert, notes)
        }
    };
    let report = certfile::run_certificate(model, &cert)?;
    notes.extend(report.notes.iter().cloned());
    finish_certificate_record(record, &cert, &report, notes, CertificateKind::Uniqueness);
    Ok(())
}

fn run_certificate_method(
    model: &GeneratorModel,
    config: &AnalysisConfig,
    kind: CertificateKind,
    record: &mut MethodRecord,
) -> qproc_core::Result<()> {
    let Some(file) = config
        .certificate
        .as_ref()
        .filter(|file| file.kind == kind)
    else {
        record.status = STATUS_SKIPPED.to_string();
        record.detail = format!(
            "needs a certificate file with kind {}",
            kind_name(kind)
        );
        return Ok(());
    };
    let (cert, mut notes) = certfile::apply_cert(file, model)?;
    record.detail = format!("drift function from certificate: {}", file.phi_source);
    let report = certfile::run_certificate(model, &cert)?;
    notes.extend(report.notes.iter().cloned());
    finish_certificate_record(record, &cert, &report, notes, kind);
    Ok(())
}

fn kind_name(kind: CertificateKind) -> &'static str {
    match kind {
        CertificateKind::Uniqueness => "uniqueness",
        CertificateKind::UniquenessWithRateDomination => "corollary",
        CertificateKind::NonUniqueness => "non-uniqueness",
    }
}

fn check_name(check: CheckKind) -> &'static str {
    match check {
        CheckKind::Drift => "drift",
        CheckKind::RateDomination => "rate-domination",
        CheckKind::Bound => "bound",
        CheckKind::DeclaredRateBound => "declared-rate-bound",
    }
}

fn finish_certificate_record(
    record: &mut MethodRecord,
    cert: &LyapunovCertificate,
    report: &CertificateReport,
    notes: Vec<String>,
    kind: CertificateKind,
) {
    record.status = match (report.verdict, kind) {
        (CertVerdict::Supported, CertificateKind::NonUniqueness) => STATUS_NON_UNIQUE,
        (CertVerdict::Supported, _) => STATUS_UNIQUE,
        _ => STATUS_INCONCLUSIVE,
    }
    .to_string();
    let verdict = match report.verdict {
        CertVerdict::Supported => "supported",
        CertVerdict::Violated => "violated",
        CertVerdict::Inconclusive => "inconclusive",
    };
    record.detail = match report.verdict {
        CertVerdict::Supported => format!("{}; certificate supported", record.detail),
        CertVerdict::Violated => format!(
            "{}; certificate violated at {} of {} states (no evidence either way)",
            record.detail,
            report.violations.len(),
            report.checked_states
        ),
        CertVerdict::Inconclusive => format!(
            "{}; pointwise checks passed but the windows could not establish the structural requirements",
            record.detail
        ),
    };
    record.certificate = Some(CertEcho {
        verdict: verdict.to_string(),
        drift_constant: cert.drift_constant,
        bound: cert.bound,
        checked_states: report.checked_states,
        violations: report.violations.len() as u64,
        first_violations: report
            .violations
            .iter()
            .take(5)
            .map(|v| ViolationEcho {
                state: v.state.to_string(),
                lhs: v.lhs,
                rhs: v.rhs,
                check: check_name(v.check).to_string(),
            })
            .collect(),
        growth_trace: report
            .growth_trace
            .iter()
            .map(|&(cap, min_phi)| GrowthEcho { cap, min_phi })
            .collect(),
        notes,
    });
}

fn run_bracket(
    model: &GeneratorModel,
    config: &AnalysisConfig,
    job: Job,
    record: &mut MethodRecord,
) -> qproc_core::Result<()> {
    let lambda = job.lambda.expect("bracket methods carry a lambda");
    let verdict = match job.method {
        MethodKind::Resolvent => uniqueness_verdict_resolvent(
            model,
            lambda,
            &config.reference,
            &config.caps,
            &config.bracket,
            &config.thresholds,
        )?,
        _ => uniqueness_verdict_embedded(
            model,
            lambda,
            config.decay,
            &config.reference,
            &config.caps,
            &config.bracket,
            &config.thresholds,
        )?,
    };
    record.status = verdict.verdict.as_str().to_string();
    record.detail = verdict.detail;
    record.traces = verdict
        .traces
        .iter()
        .map(|t| TraceEcho {
            cap: t.cap,
            lower: t.lower,
            upper: t.upper,
            iterations: t.iterations,
            converged: t.converged,
        })
        .collect();
    Ok(())
}

fn run_simulation(
    model: &GeneratorModel,
    config: &AnalysisConfig,
    record: &mut MethodRecord,
) -> qproc_core::Result<()> {
    let seed = config.seed.expect("validated before running");
    let estimate = estimate_explosion_probability(
        model,
        &config.reference,
        config.trials,
        seed,
        &config.sim,
    )?;
    record.status = if estimate.flagged > 0 {
        STATUS_NON_UNIQUE
    } else {
        STATUS_UNIQUE
    }
    .to_string();
    record.detail = format!(
        "{} of {} paths flagged as explosive (t_max = {}, max_jumps = {}); finite-sample evidence only",
        estimate.flagged, estimate.trials, config.sim.t_max, config.sim.max_jumps
    );
    record.simulation = Some(SimEcho {
        trials: estimate.trials,
        flagged: estimate.flagged,
        fraction: estimate.fraction,
        ci_lower: estimate.ci_lower,
        ci_upper: estimate.ci_upper,
        absorbed: estimate.absorbed,
        time_capped: estimate.time_capped,
        jump_capped: estimate.jump_capped,
    });
    Ok(())
}

fn run_series(
    model: &GeneratorModel,
    config: &AnalysisConfig,
    record: &mut MethodRecord,
) -> qproc_core::Result<()> {
    match pure_birth_verdict(model, config.series_n_max) {
        Ok(verdict) => {
            record.status = verdict.verdict.as_str().to_string();
            record.detail = verdict.detail;
            Ok(())
        }
        Err(Error::Precondition(reason)) => {
            record.status = STATUS_SKIPPED.to_string();
            record.detail = reason;
            Ok(())
        }
        Err(other) => Err(other),
    }
}

fn reconcile(records: Vec<MethodRecord>) -> AnalysisOutcome {
    let mut notes = Vec::new();
    let unique_by: Vec<&str> = records
        .iter()
        .filter(|r| r.status == STATUS_UNIQUE)
        .map(|r| r.method.as_str())
        .collect();
    let non_unique_by: Vec<&str> = records
        .iter()
        .filter(|r| r.status == STATUS_NON_UNIQUE)
        .map(|r| r.method.as_str())
        .collect();
    let analytic = |methods: &[&str]| methods.iter().any(|&m| m != "simulate");
    let (overall, confidence) = if !non_unique_by.is_empty() && !unique_by.is_empty() {
        notes.push(format!(
            "methods disagree: {} report unique, {} report non-unique",
            unique_by.join("/"),
            non_unique_by.join("/")
        ));
        (Overall::Contradictory, None)
    } else if !non_unique_by.is_empty() {
        let confidence = if analytic(&non_unique_by) {
            "analytic"
        } else {
            notes.push(
                "only simulation flagged explosions; no analytic method corroborates".into(),
            );
            "simulation-only"
        };
        (Overall::NonUnique, Some(confidence))
    } else if !unique_by.is_empty() {
        let confidence = if analytic(&unique_by) {
            "analytic"
        } else {
            notes.push(
                "only simulation supports uniqueness; absence of flags is weak evidence".into(),
            );
            "simulation-only"
        };
        (Overall::Unique, Some(confidence))
    } else {
        notes.push("no method produced evidence at the configured windows".into());
        (Overall::Inconclusive, None)
    };
    for record in &records {
        if record.status == STATUS_FAILED {
            notes.push(format!("method {} failed: {}", record.method, record.detail));
        }
        if record.status == STATUS_SKIPPED {
            notes.push(format!(
                "method {} skipped: {}",
                record.method, record.detail
            ));
        }
    }
    AnalysisOutcome {
        overall,
        confidence,
        notes,
        records,
    }
}
