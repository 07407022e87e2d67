//! Drift-function certificates for uniqueness and non-uniqueness.
//!
//! A certificate pairs a scalar function `φ` on the state space with a
//! drift constant `c` and a claim:
//!
//! * uniqueness: `Ωφ ≤ cφ` everywhere and `φ` grows without bound, so no
//!   trajectory can reach infinity in finite time;
//! * uniqueness with rate domination: `Ωφ ≤ cφ` and `φ ≥ q` pointwise,
//!   which replaces the growth requirement;
//! * non-uniqueness: `Ωφ ≥ cφ` with `c > 0` for a bounded `φ` that is
//!   positive somewhere, which forces escape mass.
//!
//! Here `Ωφ(i) = Σ_j q_ij (φ(j) − φ(i))` is the action of the generator.
//! The checker verifies the pointwise inequalities exhaustively on finite
//! windows and certifies growth through minima over level shells, which is
//! invariant under shifting or scaling `φ`.  A certificate is `Supported`
//! only when every pointwise check passed and the structural requirements
//! of its kind were established on the windows given.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::generator::{GeneratorModel, StateVec};
use crate::math;
use crate::window::{enumerate_shell, enumerate_window, Window, DEFAULT_MAX_WINDOW_STATES};

/// Minimal increase of shell minima, first to last, for growth to count.
pub const GROWTH_MIN: f64 = 1.0;

/// Window cap used to spot-check claims that quantify over all states.
pub const PROBE_CAP: u64 = 64;

/// What a certificate claims.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateKind {
    Uniqueness,
    UniquenessWithRateDomination,
    NonUniqueness,
}

impl CertificateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CertificateKind::Uniqueness => "uniqueness",
            CertificateKind::UniquenessWithRateDomination => "uniqueness-rate-domination",
            CertificateKind::NonUniqueness => "non-uniqueness",
        }
    }
}

/// Where a certificate is checked, and how unbounded claims are handled.
#[derive(Clone)]
pub enum WindowFamily {
    /// Exhaustive checks on the windows below each cap; growth is certified
    /// through shell minima at the caps.
    LevelCaps(Vec<u64>),
    /// The claim holds with globally bounded rates, so growth is not
    /// needed; the rate bound is spot-checked on a probe window.
    FullSpace { rate_bound: f64 },
    /// Like `LevelCaps`, but states of a declared part are exempt from the
    /// growth requirement and instead claim rates below `rate_bound`.
    DeclaredPart {
        member: Arc<dyn Fn(&StateVec) -> bool + Send + Sync>,
        rate_bound: f64,
        caps: Vec<u64>,
    },
}

impl core::fmt::Debug for WindowFamily {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            WindowFamily::LevelCaps(caps) => f.debug_tuple("LevelCaps").field(caps).finish(),
            WindowFamily::FullSpace { rate_bound } => f
                .debug_struct("FullSpace")
                .field("rate_bound", rate_bound)
                .finish(),
            WindowFamily::DeclaredPart {
                rate_bound, caps, ..
            } => f
                .debug_struct("DeclaredPart")
                .field("rate_bound", rate_bound)
                .field("caps", caps)
                .finish(),
        }
    }
}

/// A drift function with its constant, claim and checking windows.
#[derive(Clone)]
pub struct LyapunovCertificate {
    pub phi: Arc<dyn Fn(&StateVec) -> f64 + Send + Sync>,
    pub drift_constant: f64,
    pub kind: CertificateKind,
    /// Claimed upper bound on `φ`; required for non-uniqueness.
    pub bound: Option<f64>,
    pub family: WindowFamily,
}

impl core::fmt::Debug for LyapunovCertificate {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("LyapunovCertificate")
            .field("drift_constant", &self.drift_constant)
            .field("kind", &self.kind)
            .field("bound", &self.bound)
            .field("family", &self.family)
            .finish()
    }
}

/// Outcome of checking a certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertVerdict {
    /// Every pointwise check passed and the structural requirements were
    /// established on the given windows.
    Supported,
    /// At least one pointwise inequality failed.
    Violated,
    /// No inequality failed, but the windows could not establish a
    /// structural requirement (growth, positivity).
    Inconclusive,
}

impl CertVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            CertVerdict::Supported => "supported",
            CertVerdict::Violated => "violated",
            CertVerdict::Inconclusive => "inconclusive",
        }
    }
}

/// Which inequality a violation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    /// The drift inequality between `Ωφ` and `cφ`.
    Drift,
    /// `φ ≥ q` for rate-domination certificates.
    RateDomination,
    /// Sign or bound constraints on `φ` itself.
    Bound,
    /// The rate bound claimed for a declared part or the full space.
    DeclaredRateBound,
}

impl CheckKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckKind::Drift => "drift",
            CheckKind::RateDomination => "rate-domination",
            CheckKind::Bound => "bound",
            CheckKind::DeclaredRateBound => "declared-rate-bound",
        }
    }
}

/// One failed pointwise check.
#[derive(Debug, Clone)]
pub struct Violation {
    pub state: StateVec,
    pub lhs: f64,
    pub rhs: f64,
    pub check: CheckKind,
}

/// Everything the checker found.
#[derive(Debug, Clone)]
pub struct CertificateReport {
    pub verdict: CertVerdict,
    pub violations: Vec<Violation>,
    /// `(cap, shell minimum of φ)` pairs backing the growth requirement.
    pub growth_trace: Vec<(u64, f64)>,
    pub checked_states: u64,
    pub notes: Vec<String>,
}

fn drift_tol(rhs: f64) -> f64 {
    1e-9 * (1.0 + math::abs(rhs))
}

fn caps_of(family: &WindowFamily) -> Result<Option<&[u64]>> {
    let caps = match family {
        WindowFamily::LevelCaps(caps) => caps,
        WindowFamily::DeclaredPart { caps, .. } => caps,
        WindowFamily::FullSpace { .. } => return Ok(None),
    };
    if caps.is_empty() {
        return Err(Error::Usage("window family has no caps".into()));
    }
    if caps.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Usage(format!(
            "window caps must be strictly increasing, got {caps:?}"
        )));
    }
    Ok(Some(caps))
}

fn member_of(family: &WindowFamily) -> Option<&(dyn Fn(&StateVec) -> bool + Send + Sync)> {
    match family {
        WindowFamily::DeclaredPart { member, .. } => Some(&**member),
        _ => None,
    }
}

fn declared_rate_bound(family: &WindowFamily) -> Option<f64> {
    match family {
        WindowFamily::FullSpace { rate_bound } => Some(*rate_bound),
        WindowFamily::DeclaredPart { rate_bound, .. } => Some(*rate_bound),
        WindowFamily::LevelCaps(_) => None,
    }
}

fn checking_window(model: &GeneratorModel, family: &WindowFamily) -> Result<Window> {
    match caps_of(family)? {
        Some(caps) => enumerate_window(model, *caps.last().expect("non-empty")),
        None => enumerate_window(model, PROBE_CAP),
    }
}

/// Shell minima of `φ` at each cap, skipping declared-part states.
fn growth_trace(
    model: &GeneratorModel,
    cert: &LyapunovCertificate,
    caps: &[u64],
    notes: &mut Vec<String>,
) -> Result<(Vec<(u64, f64)>, bool)> {
    let member = member_of(&cert.family);
    let mut trace = Vec::with_capacity(caps.len());
    for &cap in caps {
        let shell = enumerate_shell(model.dimension(), cap, DEFAULT_MAX_WINDOW_STATES)?;
        let mut min: Option<f64> = None;
        for state in &shell {
            if member.is_some_and(|m| m(state)) {
                continue;
            }
            let v = (cert.phi)(state);
            if !v.is_finite() {
                return Err(Error::Evaluation(format!(
                    "drift function is not finite at {state}"
                )));
            }
            min = Some(match min {
                Some(m) if m <= v => m,
                _ => v,
            });
        }
        match min {
            Some(m) => trace.push((cap, m)),
            None => {
                notes.push(format!(
                    "shell at cap {cap} contains only declared-part states; growth not assessable there"
                ));
            }
        }
    }
    if trace.len() < 2 {
        notes.push(
            "growth needs shell minima at two caps or more; add caps to the window family".into(),
        );
        return Ok((trace, false));
    }
    let increasing = trace.windows(2).all(|w| w[1].1 > w[0].1);
    let rise = trace.last().expect("len >= 2").1 - trace[0].1;
    let ok = increasing && rise >= GROWTH_MIN;
    if !ok {
        notes.push(format!(
            "shell minima must increase strictly and rise by at least {GROWTH_MIN}; observed rise {rise:.6} ({})",
            if increasing { "increasing" } else { "not increasing" }
        ));
    }
    Ok((trace, ok))
}

/// Drift check `Ωφ ≤ cφ` (or `≥` when `reversed`) at one state.
fn check_drift_at(
    model: &GeneratorModel,
    cert: &LyapunovCertificate,
    state: &StateVec,
    reversed: bool,
    violations: &mut Vec<Violation>,
) -> Result<()> {
    let phi: &dyn Fn(&StateVec) -> f64 = &*cert.phi;
    let lhs = model.apply_generator(phi, state)?;
    let rhs = cert.drift_constant * phi(state);
    let tol = drift_tol(rhs);
    let bad = if reversed {
        lhs < rhs - tol
    } else {
        lhs > rhs + tol
    };
    if bad {
        violations.push(Violation {
            state: state.clone(),
            lhs,
            rhs,
            check: CheckKind::Drift,
        });
    }
    Ok(())
}

fn check_rate_bound_at(
    model: &GeneratorModel,
    state: &StateVec,
    rate_bound: f64,
    violations: &mut Vec<Violation>,
) -> Result<()> {
    let q = model.total_rate(state)?;
    if q > rate_bound + drift_tol(rate_bound) {
        violations.push(Violation {
            state: state.clone(),
            lhs: q,
            rhs: rate_bound,
            check: CheckKind::DeclaredRateBound,
        });
    }
    Ok(())
}

/// Checks a uniqueness certificate: `φ ≥ 0`, `Ωφ ≤ cφ`, and growth of `φ`
/// (unless waived by a rate-bound declaration).
pub fn check_uniqueness_certificate(
    model: &GeneratorModel,
    cert: &LyapunovCertificate,
) -> Result<CertificateReport> {
    if cert.kind != CertificateKind::Uniqueness {
        return Err(Error::Usage(format!(
            "expected a uniqueness certificate, got {}",
            cert.kind.as_str()
        )));
    }
    let mut notes = Vec::new();
    let mut violations = Vec::new();
    let window = checking_window(model, &cert.family)?;
    let member = member_of(&cert.family);
    let full_space_bound = matches!(cert.family, WindowFamily::FullSpace { .. })
        .then(|| declared_rate_bound(&cert.family))
        .flatten();
    let mut checked = 0u64;
    for state in window.states() {
        checked += 1;
        let v = (cert.phi)(state);
        if v < -drift_tol(0.0) {
            violations.push(Violation {
                state: state.clone(),
                lhs: v,
                rhs: 0.0,
                check: CheckKind::Bound,
            });
        }
        check_drift_at(model, cert, state, false, &mut violations)?;
        if let Some(bound) = full_space_bound {
            check_rate_bound_at(model, state, bound, &mut violations)?;
        }
        if let (Some(m), Some(bound)) = (member, declared_rate_bound(&cert.family)) {
            if m(state) {
                check_rate_bound_at(model, state, bound, &mut violations)?;
            }
        }
    }
    let (growth, growth_ok) = match caps_of(&cert.family)? {
        Some(caps) => growth_trace(model, cert, caps, &mut notes)?,
        None => {
            notes.push(format!(
                "growth requirement waived by the declared rate bound; rates spot-checked on levels up to {PROBE_CAP}"
            ));
            (Vec::new(), true)
        }
    };
    let verdict = if !violations.is_empty() {
        CertVerdict::Violated
    } else if growth_ok {
        CertVerdict::Supported
    } else {
        CertVerdict::Inconclusive
    };
    Ok(CertificateReport {
        verdict,
        violations,
        growth_trace: growth,
        checked_states: checked,
        notes,
    })
}

/// Checks a rate-domination certificate: `φ ≥ q` and `Ωφ ≤ cφ` pointwise.
pub fn check_corollary_certificate(
    model: &GeneratorModel,
    cert: &LyapunovCertificate,
) -> Result<CertificateReport> {
    if cert.kind != CertificateKind::UniquenessWithRateDomination {
        return Err(Error::Usage(format!(
            "expected a rate-domination certificate, got {}",
            cert.kind.as_str()
        )));
    }
    let mut notes = Vec::new();
    let mut violations = Vec::new();
    let window = checking_window(model, &cert.family)?;
    let mut checked = 0u64;
    for state in window.states() {
        checked += 1;
        let v = (cert.phi)(state);
        let q = model.total_rate(state)?;
        if v < q - drift_tol(q) {
            violations.push(Violation {
                state: state.clone(),
                lhs: v,
                rhs: q,
                check: CheckKind::RateDomination,
            });
        }
        check_drift_at(model, cert, state, false, &mut violations)?;
    }
    notes.push("rate domination replaces the growth requirement".into());
    let verdict = if violations.is_empty() {
        CertVerdict::Supported
    } else {
        CertVerdict::Violated
    };
    Ok(CertificateReport {
        verdict,
        violations,
        growth_trace: Vec::new(),
        checked_states: checked,
        notes,
    })
}

/// Checks a non-uniqueness certificate: `φ ≤ bound`, `Ωφ ≥ cφ` with
/// `c > 0`, and `φ` positive somewhere on the window.
pub fn check_nonuniqueness_certificate(
    model: &GeneratorModel,
    cert: &LyapunovCertificate,
) -> Result<CertificateReport> {
    if cert.kind != CertificateKind::NonUniqueness {
        return Err(Error::Usage(format!(
            "expected a non-uniqueness certificate, got {}",
            cert.kind.as_str()
        )));
    }
    let c_ok = cert.drift_constant > 0.0;
    if !c_ok {
        return Err(Error::Usage(format!(
            "non-uniqueness needs a positive drift constant, got {}",
            cert.drift_constant
        )));
    }
    let Some(bound) = cert.bound else {
        return Err(Error::Usage(
            "non-uniqueness needs a declared upper bound on the drift function".into(),
        ));
    };
    let mut notes = Vec::new();
    let mut violations = Vec::new();
    let window = checking_window(model, &cert.family)?;
    let mut checked = 0u64;
    let mut max_phi = f64::NEG_INFINITY;
    for state in window.states() {
        checked += 1;
        let v = (cert.phi)(state);
        max_phi = max_phi.max(v);
        if v > bound + drift_tol(bound) {
            violations.push(Violation {
                state: state.clone(),
                lhs: v,
                rhs: bound,
                check: CheckKind::Bound,
            });
        }
        check_drift_at(model, cert, state, true, &mut violations)?;
    }
    let verdict = if !violations.is_empty() {
        CertVerdict::Violated
    } else if max_phi > 0.0 {
        CertVerdict::Supported
    } else {
        notes.push(format!(
            "drift function must be positive somewhere; maximum on the window is {max_phi:.6}"
        ));
        CertVerdict::Inconclusive
    };
    Ok(CertificateReport {
        verdict,
        violations,
        growth_trace: Vec::new(),
        checked_states: checked,
        notes,
    })
}

/// Extremal drift constant compatible with `φ` on a window.
///
/// For uniqueness kinds this is the least `c` with `Ωφ ≤ cφ` on the
/// window; for non-uniqueness the greatest `c` with `Ωφ ≥ cφ`.  Returns
/// `None` when no finite constant satisfies all states, which happens when
/// `φ` vanishes against a drift of the wrong sign or when constraints from
/// states of opposite signs of `φ` are incompatible.
pub fn scan_drift_constant(
    model: &GeneratorModel,
    phi: &dyn Fn(&StateVec) -> f64,
    window: &Window,
    kind: CertificateKind,
) -> Result<Option<f64>> {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for state in window.states() {
        let omega = model.apply_generator(phi, state)?;
        let v = phi(state);
        if !v.is_finite() {
            return Err(Error::Evaluation(format!(
                "drift function is not finite at {state}"
            )));
        }
        // Ωφ ≤ cφ: φ > 0 gives c ≥ Ωφ/φ, φ < 0 gives c ≤ Ωφ/φ.
        // Ωφ ≥ cφ: the inequalities swap.
        let want_upper_bound = kind == CertificateKind::NonUniqueness;
        if v == 0.0 {
            let feasible = if want_upper_bound {
                omega >= -drift_tol(0.0)
            } else {
                omega <= drift_tol(0.0)
            };
            if !feasible {
                return Ok(None);
            }
            continue;
        }
        let ratio = omega / v;
        let is_lower = (v > 0.0) != want_upper_bound;
        if is_lower {
            lo = lo.max(ratio);
        } else {
            hi = hi.min(ratio);
        }
    }
    if lo > hi {
        return Ok(None);
    }
    let c = if kind == CertificateKind::NonUniqueness {
        hi
    } else {
        lo
    };
    Ok(c.is_finite().then_some(c))
}
