//! Certificate sidecar files: a drift function, a constant (given or
//! scanned), and the windows to check it on.
//!
//! ```text
//! cert quadratic escape witness
//! kind non-uniqueness
//! phi x(0) / (x(0) + 1)
//! c 1
//! bound 1
//! caps 100, 200
//! ```
//!
//! `c scan` asks the tool to find the constant itself.  The scan runs on a
//! smaller window than the final check (the second-largest cap, or half the
//! only cap): a constant fitted on the very window that certifies it would
//! be vacuous, so the check must see levels the scan never saw.

use std::sync::Arc;

use qproc_core::certificate::PROBE_CAP;
use qproc_core::{
    check_corollary_certificate, check_nonuniqueness_certificate, check_uniqueness_certificate,
    enumerate_window, scan_drift_constant, CertificateKind, CertificateReport, Error,
    GeneratorModel, LyapunovCertificate, StateVec, WindowFamily,
};

use crate::dsl::{parse_expression, Expr, ParseError, SiteExpr};

/// How the drift constant is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConstantSpec {
    Given(f64),
    Scan,
}

/// Where the certificate is checked.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilySpec {
    Caps(Vec<u64>),
    FullSpace(f64),
}

/// A parsed certificate file, not yet bound to a model.
#[derive(Debug, Clone)]
pub struct CertFile {
    pub name: String,
    pub kind: CertificateKind,
    pub phi_source: String,
    pub phi: Expr,
    pub constant: ConstantSpec,
    pub bound: Option<f64>,
    pub family: FamilySpec,
}

fn line_error(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::new(line as u32, 1, message)
}

/// Parses the sidecar format: one `key value` statement per line.
pub fn parse_cert_file(text: &str) -> Result<CertFile, ParseError> {
    let mut name: Option<String> = None;
    let mut kind: Option<CertificateKind> = None;
    let mut phi: Option<(String, Expr)> = None;
    let mut constant: Option<ConstantSpec> = None;
    let mut bound: Option<f64> = None;
    let mut family: Option<FamilySpec> = None;

    for (index, raw) in text.lines().enumerate() {
        let number = index + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, rest) = line
            .split_once(char::is_whitespace)
            .map(|(k, r)| (k, r.trim()))
            .unwrap_or((line, ""));
        let taken = match key {
            "cert" => {
                let taken = name.is_some();
                name = Some(rest.to_string());
                taken
            }
            "kind" => {
                let taken = kind.is_some();
                kind = Some(match rest {
                    "uniqueness" => CertificateKind::Uniqueness,
                    "corollary" => CertificateKind::UniquenessWithRateDomination,
                    "non-uniqueness" | "nonuniqueness" => CertificateKind::NonUniqueness,
                    other => {
                        return Err(line_error(
                            number,
                            format!("unknown certificate kind '{other}'"),
                        )
                        .expecting(vec!["uniqueness", "corollary", "non-uniqueness"]))
                    }
                });
                taken
            }
            "phi" => {
                let taken = phi.is_some();
                let expr = parse_expression(rest, true).map_err(|e| {
                    let column = raw.len() as u32 - rest.len() as u32 + e.col;
                    ParseError::new(number as u32, column, e.message).expecting(e.expected)
                })?;
                phi = Some((rest.to_string(), expr));
                taken
            }
            "c" => {
                let taken = constant.is_some();
                constant = Some(if rest == "scan" {
                    ConstantSpec::Scan
                } else {
                    ConstantSpec::Given(parse_number(number, "c", rest)?)
                });
                taken
            }
            "bound" => {
                let taken = bound.is_some();
                bound = Some(parse_number(number, "bound", rest)?);
                taken
            }
            "caps" => {
                let taken = family.is_some();
                let mut caps = Vec::new();
                for part in rest.split(',') {
                    let cap: u64 = part.trim().parse().map_err(|_| {
                        line_error(number, format!("malformed cap '{}'", part.trim()))
                    })?;
                    caps.push(cap);
                }
                if caps.is_empty() || !caps.windows(2).all(|w| w[0] < w[1]) {
                    return Err(line_error(number, "caps must be strictly increasing"));
                }
                family = Some(FamilySpec::Caps(caps));
                taken
            }
            "fullspace" => {
                let taken = family.is_some();
                family = Some(FamilySpec::FullSpace(parse_number(
                    number,
                    "fullspace",
                    rest,
                )?));
                taken
            }
            other => {
                return Err(line_error(number, format!("unknown statement '{other}'"))
                    .expecting(vec![
                        "cert", "kind", "phi", "c", "bound", "caps", "fullspace",
                    ]))
            }
        };
        if taken {
            return Err(line_error(number, format!("duplicate statement '{key}'")));
        }
    }

    let kind = kind.ok_or_else(|| line_error(1, "certificate needs a 'kind' statement"))?;
    let (phi_source, phi) =
        phi.ok_or_else(|| line_error(1, "certificate needs a 'phi' statement"))?;
    let constant =
        constant.ok_or_else(|| line_error(1, "certificate needs a 'c' statement"))?;
    let family = family.ok_or_else(|| {
        line_error(1, "certificate needs a 'caps' or 'fullspace' statement")
    })?;
    if kind == CertificateKind::NonUniqueness && bound.is_none() {
        return Err(line_error(
            1,
            "non-uniqueness certificates need a 'bound' statement",
        ));
    }
    Ok(CertFile {
        name: name.unwrap_or_default(),
        kind,
        phi_source,
        phi,
        constant,
        bound,
        family,
    })
}

fn parse_number(line: usize, key: &str, rest: &str) -> Result<f64, ParseError> {
    let value: f64 = rest
        .parse()
        .map_err(|_| line_error(line, format!("'{key}' needs a number, got '{rest}'")))?;
    if !value.is_finite() {
        return Err(line_error(line, format!("'{key}' must be finite")));
    }
    Ok(value)
}

fn max_site_index(expr: &Expr) -> Option<u32> {
    match expr {
        Expr::Coord(SiteExpr::Literal(k)) => Some(*k),
        Expr::Neg(inner) => max_site_index(inner),
        Expr::Bin(_, lhs, rhs) => max_site_index(lhs).max(max_site_index(rhs)),
        _ => None,
    }
}

/// The cap the scan runs on, strictly inside the final checking window.
fn scan_cap(caps: &[u64]) -> u64 {
    if caps.len() >= 2 {
        caps[caps.len() - 2]
    } else {
        (caps[0] / 2).max(1)
    }
}

/// Compiles an expression into a drift function bound to `model`,
/// validating coordinate indices against the model's dimension.
pub fn compile_phi(
    expr: &Expr,
    model: &GeneratorModel,
) -> qproc_core::Result<impl Fn(&StateVec) -> f64 + Send + Sync + Clone + 'static> {
    if let Some(site) = max_site_index(expr) {
        if site as usize >= model.dimension() {
            return Err(Error::ModelDefinition(format!(
                "drift function references x({site}) but model '{}' has dimension {}",
                model.name(),
                model.dimension()
            )));
        }
    }
    let dimension = model.dimension();
    let expr = expr.clone();
    Ok(move |state: &StateVec| {
        let env = crate::dsl::EvalEnv::bare(state, dimension);
        crate::dsl::eval_expr(&expr, &env).unwrap_or(f64::NAN)
    })
}

/// Parses and compiles a drift expression given on the command line.
pub fn compile_phi_source(
    source: &str,
    model: &GeneratorModel,
) -> qproc_core::Result<impl Fn(&StateVec) -> f64 + Send + Sync + Clone + 'static> {
    let expr = parse_expression(source, true)
        .map_err(|e| Error::Usage(format!("drift expression: {e}")))?;
    compile_phi(&expr, model)
}

/// Binds a parsed certificate to a model: validates coordinate indices,
/// compiles the drift function, and resolves a scanned constant.
pub fn apply_cert(
    file: &CertFile,
    model: &GeneratorModel,
) -> qproc_core::Result<(LyapunovCertificate, Vec<String>)> {
    let phi = compile_phi(&file.phi, model)?;
    let mut notes = Vec::new();
    let drift_constant = match file.constant {
        ConstantSpec::Given(c) => c,
        ConstantSpec::Scan => {
            let cap = match &file.family {
                FamilySpec::Caps(caps) => scan_cap(caps),
                FamilySpec::FullSpace(_) => PROBE_CAP,
            };
            let window = enumerate_window(model, cap)?;
            let scanned = scan_drift_constant(model, &phi, &window, file.kind)?.ok_or_else(
                || {
                    Error::Precondition(format!(
                        "no drift constant supports this certificate on levels <= {cap}"
                    ))
                },
            )?;
            let scanned = match file.kind {
                CertificateKind::NonUniqueness => {
                    if scanned <= 0.0 {
                        return Err(Error::Precondition(format!(
                            "scan found no positive drift constant on levels <= {cap} (tight value {scanned})"
                        )));
                    }
                    scanned
                }
                _ => scanned.max(0.0),
            };
            notes.push(format!(
                "drift constant c = {scanned} scanned on levels <= {cap}; the check runs on larger windows"
            ));
            scanned
        }
    };
    let family = match &file.family {
        FamilySpec::Caps(caps) => WindowFamily::LevelCaps(caps.clone()),
        FamilySpec::FullSpace(rate_bound) => WindowFamily::FullSpace {
            rate_bound: *rate_bound,
        },
    };
    let cert = LyapunovCertificate {
        phi: Arc::new(phi),
        drift_constant,
        kind: file.kind,
        bound: file.bound,
        family,
    };
    Ok((cert, notes))
}

/// Runs the check matching the certificate's kind.
pub fn run_certificate(
    model: &GeneratorModel,
    cert: &LyapunovCertificate,
) -> qproc_core::Result<CertificateReport> {
    match cert.kind {
        CertificateKind::Uniqueness => check_uniqueness_certificate(model, cert),
        CertificateKind::UniquenessWithRateDomination => {
            check_corollary_certificate(model, cert)
        }
        CertificateKind::NonUniqueness => check_nonuniqueness_certificate(model, cert),
    }
}
