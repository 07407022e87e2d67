//! End-to-end tests of the `qproc` binary: exit codes, report shape against
//! the committed schema, byte stability, and the file-emitting flags.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn repo_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn qproc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qproc"))
        .args(args)
        .env("QPROC_REPORT_TIMESTAMP", "2024-01-02T03:04:05Z")
        .output()
        .expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn temp_model(text: &str) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().expect("temp dir");
    let path = dir.path().join("model.qm");
    let mut f = std::fs::File::create(&path).expect("temp file");
    f.write_all(text.as_bytes()).expect("write temp model");
    (dir, path)
}

#[test]
fn analyze_produces_a_text_report_with_exit_zero() {
    let out = qproc(&["analyze", "--zoo", "pb-linear"]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(text.contains("verdict: unique"), "unexpected report:\n{text}");
    assert!(text.contains("method resolvent"), "missing method section:\n{text}");
}

#[test]
fn analyze_accepts_model_files_with_parameter_overrides() {
    let out = qproc(&[
        "analyze",
        "--model",
        repo_path("models/mm1-queue.qm").to_str().unwrap(),
        "--param",
        "arrival=2.5",
        "--format",
        "json",
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    let report: Value = serde_json::from_str(&stdout_of(&out)).expect("valid json");
    let params = report["model"]["params"].as_array().unwrap();
    let arrival = params
        .iter()
        .find(|p| p["name"] == "arrival")
        .expect("arrival echoed");
    assert_eq!(arrival["value"], 2.5);
    assert_eq!(report["verdict"]["overall"], "unique");
}

#[test]
fn unknown_parameter_overrides_are_usage_errors() {
    let out = qproc(&[
        "analyze",
        "--model",
        repo_path("models/mm1-queue.qm").to_str().unwrap(),
        "--param",
        "bogus=1",
    ]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr_of(&out).contains("bogus"));
}

#[test]
fn exit_codes_follow_the_documented_contract() {
    let usage = qproc(&["analyze", "--zoo", "no-such-model"]);
    assert_eq!(exit_code(&usage), 2, "unknown zoo name");
    assert!(stderr_of(&usage).contains("available"), "should list the catalog");

    let conflict = qproc(&["analyze", "--zoo", "pb-linear", "--model", "x.qm"]);
    assert_eq!(exit_code(&conflict), 2, "conflicting model sources");

    let seedless = qproc(&["analyze", "--zoo", "pb-linear", "--method", "simulate"]);
    assert_eq!(exit_code(&seedless), 2, "simulate without seed");
    assert!(stderr_of(&seedless).contains("seed"));

    let (dir, path) = temp_model("model broken\ndim 1\ntrans: delta +e(0) rate rate\n");
    let parse = qproc(&["analyze", "--model", path.to_str().unwrap()]);
    assert_eq!(exit_code(&parse), 3, "parse error");
    drop(dir);

    let (dir, path) = temp_model("model neg\ndim 1\ntrans: delta +e(0) rate x(0) - 1\n");
    let bad_rate = qproc(&["analyze", "--model", path.to_str().unwrap()]);
    assert_eq!(exit_code(&bad_rate), 3, "negative rate at the reference state");
    assert!(stderr_of(&bad_rate).contains("negative rate"));
    drop(dir);
}

#[test]
fn parse_check_reports_positions_and_expected_tokens() {
    let (dir, path) = temp_model("model bad\ndim 1\ntrans: rate 1\n");
    let out = qproc(&["parse-check", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 3);
    let err = stderr_of(&out);
    assert!(err.contains("line 3"), "no line: {err}");
    assert!(err.contains("column"), "no column: {err}");
    assert!(err.contains("expected"), "no expectation: {err}");
    drop(dir);
}

#[test]
fn parse_check_echoes_the_canonical_form() {
    let (dir, path) = temp_model("model ok\ndim 1\ntrans :   delta  +e( 0 ) rate (x(0))+1\n");
    let out = qproc(&["parse-check", path.to_str().unwrap(), "--print"]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(text.contains("ok: model 'ok'"), "summary line missing:\n{text}");
    assert!(
        text.contains("trans: delta +e(0) rate x(0) + 1"),
        "canonical form missing:\n{text}"
    );
    drop(dir);
}

#[test]
fn certify_reports_a_supported_escape_witness() {
    let out = qproc(&[
        "certify",
        "--model",
        repo_path("models/pb-quadratic.qm").to_str().unwrap(),
        "--cert",
        repo_path("models/certs/pb-quadratic-escape.cert").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(text.contains("verdict: non-unique"), "report:\n{text}");
    assert!(text.contains("supported"), "report:\n{text}");
}

#[test]
fn scan_c_prints_the_scanned_constant() {
    let out = qproc(&["scan-c", "--zoo", "pb-linear", "--phi", "1 + level", "--cap", "100"]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    assert_eq!(stdout_of(&out).trim(), "c = 1");
}

#[test]
fn output_files_are_written_where_requested() {
    let dir = tempfile::tempdir().unwrap();
    let report_path = dir.path().join("report.json");
    let csv_path = dir.path().join("traces.csv");
    let out = qproc(&[
        "analyze",
        "--zoo",
        "pb-linear",
        "--format",
        "json",
        "--out",
        report_path.to_str().unwrap(),
        "--trace-csv",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    assert!(stdout_of(&out).is_empty(), "report should go to the file");

    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["verdict"]["overall"], "unique");

    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("method,lambda,cap,lower,upper,iterations,converged")
    );
    assert!(lines.next().is_some(), "csv has no data rows");
}

#[test]
fn dump_paths_writes_one_row_per_visited_state() {
    let dir = tempfile::tempdir().unwrap();
    let paths_csv = dir.path().join("paths.csv");
    let out = qproc(&[
        "simulate",
        "--zoo",
        "pb-geometric",
        "--seed",
        "3",
        "--trials",
        "5",
        "--t-max",
        "2",
        "--dump-paths",
        paths_csv.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));

    let csv = std::fs::read_to_string(&paths_csv).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("trial,step,time,state,inverse_rate,prefix_sum,terminal")
    );
    let mut seen_trials = std::collections::BTreeSet::new();
    let mut last: Option<(u64, f64)> = None;
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 7, "bad row: {line}");
        let trial: u64 = fields[0].parse().unwrap();
        let prefix: f64 = fields[5].parse().unwrap();
        seen_trials.insert(trial);
        if let Some((prev_trial, prev_prefix)) = last {
            if prev_trial == trial {
                assert!(prefix >= prev_prefix, "prefix sum not monotone: {line}");
            }
        }
        last = Some((trial, prefix));
    }
    assert_eq!(seen_trials.len(), 5, "expected five trials");
}

#[test]
fn reports_are_byte_stable_under_a_pinned_timestamp() {
    let args = ["analyze", "--zoo", "pb-quadratic", "--format", "json"];
    let first = qproc(&args);
    let second = qproc(&args);
    assert_eq!(exit_code(&first), 0);
    assert_eq!(first.stdout, second.stdout, "identical runs must match byte for byte");
    let report: Value = serde_json::from_str(&stdout_of(&first)).unwrap();
    assert_eq!(report["provenance"]["timestamp"], "2024-01-02T03:04:05Z");
}

#[test]
fn the_golden_report_is_reproduced_exactly() {
    let out = qproc(&["analyze", "--zoo", "pb-linear", "--format", "json"]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    let golden = std::fs::read_to_string(repo_path(
        "crates/qproc-cli/tests/golden/pb-linear-report.json",
    ))
    .expect("golden file exists");
    assert_eq!(
        stdout_of(&out),
        golden,
        "report drifted from the golden file; regenerate it if the change is intended"
    );
}

#[test]
fn json_reports_validate_against_the_committed_schema() {
    let schema: Value =
        serde_json::from_str(&std::fs::read_to_string(repo_path("schema/report.schema.json")).unwrap())
            .expect("schema parses");

    let mut reports = Vec::new();
    reports.push(stdout_of(&qproc(&["analyze", "--zoo", "pb-quadratic", "--format", "json"])));
    reports.push(stdout_of(&qproc(&[
        "analyze", "--zoo", "pb-geometric", "--method", "resolvent", "--method", "simulate",
        "--seed", "7", "--trials", "40", "--t-max", "2", "--format", "json",
    ])));
    reports.push(stdout_of(&qproc(&[
        "certify",
        "--model",
        repo_path("models/schlogl-2.qm").to_str().unwrap(),
        "--cert",
        repo_path("models/certs/schlogl2-cubic.cert").to_str().unwrap(),
        "--format",
        "json",
    ])));

    for text in reports {
        let instance: Value = serde_json::from_str(&text).expect("report parses");
        let mut errors = Vec::new();
        validate(&schema, &schema, &instance, "$", &mut errors);
        assert!(errors.is_empty(), "schema violations: {errors:#?}\nreport:\n{text}");
    }
}

/// A small JSON-schema checker covering the subset the committed schema
/// uses: type, enum, required, properties, additionalProperties, items,
/// minimum, pattern (anchored literal/class/repeat patterns), and $ref.
fn validate(schema: &Value, root: &Value, inst: &Value, path: &str, errors: &mut Vec<String>) {
    if let Some(r) = schema.get("$ref").and_then(Value::as_str) {
        return validate(resolve_ref(root, r), root, inst, path, errors);
    }
    if let Some(ty) = schema.get("type").and_then(Value::as_str) {
        let ok = match ty {
            "object" => inst.is_object(),
            "array" => inst.is_array(),
            "string" => inst.is_string(),
            "boolean" => inst.is_boolean(),
            "number" => inst.is_number(),
            "integer" => inst.is_u64() || inst.is_i64(),
            other => {
                errors.push(format!("{path}: unsupported schema type '{other}'"));
                return;
            }
        };
        if !ok {
            errors.push(format!("{path}: expected {ty}, got {inst}"));
            return;
        }
    }
    if let Some(allowed) = schema.get("enum").and_then(Value::as_array) {
        if !allowed.contains(inst) {
            errors.push(format!("{path}: {inst} not in {allowed:?}"));
        }
    }
    if let Some(min) = schema.get("minimum").and_then(Value::as_f64) {
        if inst.as_f64().is_some_and(|v| v < min) {
            errors.push(format!("{path}: {inst} below minimum {min}"));
        }
    }
    if let Some(pattern) = schema.get("pattern").and_then(Value::as_str) {
        if let Some(text) = inst.as_str() {
            if !matches_simple_pattern(pattern, text) {
                errors.push(format!("{path}: '{text}' does not match {pattern}"));
            }
        }
    }
    if let Some(obj) = inst.as_object() {
        if let Some(required) = schema.get("required").and_then(Value::as_array) {
            for key in required.iter().filter_map(Value::as_str) {
                if !obj.contains_key(key) {
                    errors.push(format!("{path}: missing required key '{key}'"));
                }
            }
        }
        let props = schema.get("properties").and_then(Value::as_object);
        for (key, value) in obj {
            match props.and_then(|p| p.get(key)) {
                Some(sub) => validate(sub, root, value, &format!("{path}.{key}"), errors),
                None => {
                    if schema.get("additionalProperties") == Some(&Value::Bool(false)) {
                        errors.push(format!("{path}: unexpected key '{key}'"));
                    }
                }
            }
        }
    }
    if let Some(arr) = inst.as_array() {
        if let Some(items) = schema.get("items") {
            for (k, value) in arr.iter().enumerate() {
                validate(items, root, value, &format!("{path}[{k}]"), errors);
            }
        }
    }
}

fn resolve_ref<'a>(root: &'a Value, r: &str) -> &'a Value {
    let mut cur = root;
    for part in r.trim_start_matches("#/").split('/') {
        cur = cur.get(part).unwrap_or_else(|| panic!("dangling $ref {r}"));
    }
    cur
}

/// Matches `^...$` patterns built from literals, classes like `[0-9a-f]`,
/// and fixed repeats `{n}`; enough for the patterns the schema uses.
fn matches_simple_pattern(pattern: &str, text: &str) -> bool {
    let Some(inner) = pattern
        .strip_prefix('^')
        .and_then(|p| p.strip_suffix('$'))
    else {
        return true;
    };
    let mut atoms: Vec<(Vec<(char, char)>, usize)> = Vec::new();
    let mut chars = inner.chars().peekable();
    while let Some(c) = chars.next() {
        let ranges = if c == '[' {
            let mut ranges = Vec::new();
            loop {
                let a = chars.next().expect("unterminated class");
                if a == ']' {
                    break;
                }
                if chars.peek() == Some(&'-') {
                    chars.next();
                    let b = chars.next().expect("unterminated range");
                    ranges.push((a, b));
                } else {
                    ranges.push((a, a));
                }
            }
            ranges
        } else {
            vec![(c, c)]
        };
        let mut repeat = 1;
        if chars.peek() == Some(&'{') {
            chars.next();
            let mut digits = String::new();
            for d in chars.by_ref() {
                if d == '}' {
                    break;
                }
                digits.push(d);
            }
            repeat = digits.parse().expect("repeat count");
        }
        atoms.push((ranges, repeat));
    }
    let mut it = text.chars();
    for (ranges, repeat) in &atoms {
        for _ in 0..*repeat {
            match it.next() {
                Some(c) if ranges.iter().any(|&(a, b)| c >= a && c <= b) => {}
                _ => return false,
            }
        }
    }
    it.next().is_none()
}
