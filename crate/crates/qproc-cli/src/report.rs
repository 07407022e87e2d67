//! Report assembly and rendering: one data model, three renderers
//! (pretty JSON, aligned text, CSV trace export).
//!
//! Reports are deterministic given the same configuration and tool version;
//! the timestamp can be pinned through `QPROC_REPORT_TIMESTAMP` so golden
//! files stay byte-stable.

use std::fmt::Write as _;

use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable overriding the report timestamp.
pub const TIMESTAMP_ENV: &str = "QPROC_REPORT_TIMESTAMP";

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub model: ModelInfo,
    pub config: ConfigEcho,
    pub verdict: OverallVerdict,
    pub methods: Vec<MethodRecord>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelInfo {
    pub name: String,
    pub dimension: usize,
    pub params: Vec<ParamEcho>,
    pub source: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParamEcho {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub methods: Vec<String>,
    pub lambdas: Vec<f64>,
    pub cap_schedule: Vec<u64>,
    pub reference: Vec<u32>,
    pub decay: f64,
    pub trials: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub t_max: f64,
    pub max_jumps: u64,
    pub series_n_max: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<String>,
    pub thresholds: ThresholdEcho,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdEcho {
    pub positive: f64,
    pub zero: f64,
    pub decay_max: f64,
    pub decay_count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct OverallVerdict {
    pub overall: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confidence: Option<String>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodRecord {
    pub method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub status: String,
    pub detail: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub traces: Vec<TraceEcho>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertEcho>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimEcho>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TraceEcho {
    pub cap: u64,
    pub lower: f64,
    pub upper: f64,
    pub iterations: u64,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertEcho {
    pub verdict: String,
    pub drift_constant: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    pub checked_states: u64,
    pub violations: u64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub first_violations: Vec<ViolationEcho>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub growth_trace: Vec<GrowthEcho>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ViolationEcho {
    pub state: String,
    pub lhs: f64,
    pub rhs: f64,
    pub check: String,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GrowthEcho {
    pub cap: u64,
    pub min_phi: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SimEcho {
    pub trials: u64,
    pub flagged: u64,
    pub fraction: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub absorbed: u64,
    pub time_capped: u64,
    pub jump_capped: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool_version: String,
    pub config_hash: String,
    pub timestamp: String,
}

/// Sorts records, stamps provenance, and seals the report.
pub fn assemble(
    model: ModelInfo,
    config: ConfigEcho,
    verdict: OverallVerdict,
    mut methods: Vec<MethodRecord>,
) -> Report {
    methods.sort_by(|a, b| {
        (a.method.as_str(), a.lambda.unwrap_or(0.0))
            .partial_cmp(&(b.method.as_str(), b.lambda.unwrap_or(0.0)))
            .expect("lambdas are finite")
    });
    let hashed = serde_json::to_string(&(&model, &config)).expect("plain data serializes");
    let provenance = Provenance {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: format!("{:016x}", fnv1a(hashed.as_bytes())),
        timestamp: timestamp(),
    };
    Report {
        schema_version: SCHEMA_VERSION,
        model,
        config,
        verdict,
        methods,
        provenance,
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn timestamp() -> String {
    if let Ok(pinned) = std::env::var(TIMESTAMP_ENV) {
        return pinned;
    }
    let seconds = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    rfc3339(seconds)
}

/// Civil date from a Unix timestamp, without a calendar dependency.
fn rfc3339(seconds: u64) -> String {
    let days = (seconds / 86_400) as i64;
    let rem = seconds % 86_400;
    let (hour, minute, second) = (rem / 3600, (rem % 3600) / 60, rem % 60);
    let z = days + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z.rem_euclid(146_097);
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let day = doy - (153 * mp + 2) / 5 + 1;
    let month = if mp < 10 { mp + 3 } else { mp - 9 };
    let year = yoe + era * 400 + i64::from(month <= 2);
    format!("{year:04}-{month:02}-{day:02}T{hour:02}:{minute:02}:{second:02}Z")
}

/// Pretty JSON with a trailing newline.
pub fn render_json(report: &Report) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("reports serialize");
    text.push('\n');
    text
}

/// Human-readable summary.
pub fn render_text(report: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "model: {} (dimension {})",
        report.model.name, report.model.dimension
    );
    if !report.model.params.is_empty() {
        let params = report
            .model
            .params
            .iter()
            .map(|p| format!("{}={}", p.name, p.value))
            .collect::<Vec<_>>()
            .join(", ");
        let _ = writeln!(out, "params: {params}");
    }
    let _ = writeln!(out, "source: {}", report.model.source);
    match &report.verdict.confidence {
        Some(confidence) => {
            let _ = writeln!(
                out,
                "verdict: {} (confidence: {confidence})",
                report.verdict.overall
            );
        }
        None => {
            let _ = writeln!(out, "verdict: {}", report.verdict.overall);
        }
    }
    for note in &report.verdict.notes {
        let _ = writeln!(out, "  note: {note}");
    }
    for record in &report.methods {
        out.push('\n');
        match record.lambda {
            Some(lambda) => {
                let _ = writeln!(out, "method {} (lambda = {lambda})", record.method);
            }
            None => {
                let _ = writeln!(out, "method {}", record.method);
            }
        }
        let _ = writeln!(out, "  status: {}", record.status);
        let _ = writeln!(out, "  detail: {}", record.detail);
        if !record.traces.is_empty() {
            let _ = writeln!(
                out,
                "  {:>8}  {:>22}  {:>22}  {:>10}  converged",
                "cap", "lower", "upper", "iterations"
            );
            for t in &record.traces {
                let _ = writeln!(
                    out,
                    "  {:>8}  {:>22.16}  {:>22.16}  {:>10}  {}",
                    t.cap,
                    t.lower,
                    t.upper,
                    t.iterations,
                    if t.converged { "yes" } else { "no" }
                );
            }
        }
        if let Some(cert) = &record.certificate {
            let _ = writeln!(
                out,
                "  certificate: {} (c = {}, checked {} states, {} violations)",
                cert.verdict, cert.drift_constant, cert.checked_states, cert.violations
            );
            for v in &cert.first_violations {
                let _ = writeln!(
                    out,
                    "    violated {} at {}: {} vs {}",
                    v.check, v.state, v.lhs, v.rhs
                );
            }
            for note in &cert.notes {
                let _ = writeln!(out, "    note: {note}");
            }
        }
        if let Some(sim) = &record.simulation {
            let _ = writeln!(
                out,
                "  simulation: {}/{} flagged (fraction {:.4}, 95% CI [{:.4}, {:.4}])",
                sim.flagged, sim.trials, sim.fraction, sim.ci_lower, sim.ci_upper
            );
            let _ = writeln!(
                out,
                "    terminals: {} absorbed, {} time-capped, {} jump-capped",
                sim.absorbed, sim.time_capped, sim.jump_capped
            );
        }
    }
    out.push('\n');
    let _ = writeln!(
        out,
        "provenance: qproc {} config {} at {}",
        report.provenance.tool_version, report.provenance.config_hash, report.provenance.timestamp
    );
    out
}

/// Bracket traces as CSV, one row per (method, lambda, cap).
pub fn render_trace_csv(report: &Report) -> String {
    let mut out = String::from("method,lambda,cap,lower,upper,iterations,converged\n");
    for record in &report.methods {
        for t in &record.traces {
            let lambda = record
                .lambda
                .map_or_else(String::new, |l| format!("{l}"));
            let _ = writeln!(
                out,
                "{},{lambda},{},{},{},{},{}",
                record.method, t.cap, t.lower, t.upper, t.iterations, t.converged
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_report() -> Report {
        assemble(
            ModelInfo {
                name: "pb-linear".into(),
                dimension: 1,
                params: Vec::new(),
                source: "zoo:pb-linear".into(),
            },
            ConfigEcho {
                methods: vec!["resolvent".into()],
                lambdas: vec![1.0],
                cap_schedule: vec![25, 50],
                reference: vec![0],
                decay: 0.5,
                trials: 0,
                seed: None,
                t_max: 1.0,
                max_jumps: 1000,
                series_n_max: 1000,
                certificate: None,
                thresholds: ThresholdEcho {
                    positive: 1e-3,
                    zero: 1e-3,
                    decay_max: 0.98,
                    decay_count: 2,
                },
            },
            OverallVerdict {
                overall: "unique".into(),
                confidence: Some("analytic".into()),
                notes: Vec::new(),
            },
            vec![
                MethodRecord {
                    method: "resolvent".into(),
                    lambda: Some(1.0),
                    status: "unique".into(),
                    detail: "upper bound decays".into(),
                    traces: vec![TraceEcho {
                        cap: 25,
                        lower: 0.0,
                        upper: 0.038,
                        iterations: 12,
                        converged: true,
                    }],
                    certificate: None,
                    simulation: None,
                },
                MethodRecord {
                    method: "embedded".into(),
                    lambda: Some(1.0),
                    status: "unique".into(),
                    detail: "return probability tends to one".into(),
                    traces: Vec::new(),
                    certificate: None,
                    simulation: None,
                },
            ],
        )
    }

    #[test]
    fn records_sort_by_method_name() {
        let report = tiny_report();
        assert_eq!(report.methods[0].method, "embedded");
        assert_eq!(report.methods[1].method, "resolvent");
    }

    #[test]
    fn the_config_hash_is_stable_and_config_sensitive() {
        let a = tiny_report();
        let b = tiny_report();
        assert_eq!(a.provenance.config_hash, b.provenance.config_hash);
        let mut other = tiny_report();
        other.config.lambdas = vec![2.0];
        let rehashed = assemble(
            other.model.clone(),
            other.config.clone(),
            other.verdict.clone(),
            other.methods.clone(),
        );
        assert_ne!(a.provenance.config_hash, rehashed.provenance.config_hash);
    }

    #[test]
    fn civil_dates_match_known_timestamps() {
        assert_eq!(rfc3339(0), "1970-01-01T00:00:00Z");
        assert_eq!(rfc3339(951_782_400), "2000-02-29T00:00:00Z");
        assert_eq!(rfc3339(1_755_129_600), "2025-08-14T00:00:00Z");
    }

    #[test]
    fn csv_rows_carry_the_method_and_lambda() {
        let report = tiny_report();
        let csv = render_trace_csv(&report);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "method,lambda,cap,lower,upper,iterations,converged"
        );
        assert_eq!(lines.next().unwrap(), "resolvent,1,25,0,0.038,12,true");
    }

    #[test]
    fn json_reports_parse_back() {
        let report = tiny_report();
        let text = render_json(&report);
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["schema_version"], 1);
        assert_eq!(value["verdict"]["overall"], "unique");
        assert_eq!(value["methods"][1]["traces"][0]["cap"], 25);
    }
}
