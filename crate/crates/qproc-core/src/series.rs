//! Convergence classification for positive series.
//!
//! For single-birth chains, divergence of the inverse-rate series is
//! equivalent to uniqueness of the process, so a numerical convergence
//! classifier doubles as a uniqueness test for that class of models.
//!
//! The classifier fits `ln t_n` against `ln n` over the top half of the
//! sampled range.  A slope clearly below −1 means convergence and a slope
//! clearly above −1 means divergence.  Near the critical exponent the
//! decision is delegated to a second fit that measures the logarithmic
//! correction `β` in `t_n ≈ C / (n · ln^β n)`, where `β ≤ 1` diverges and
//! `β > 1` converges.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::generator::{GeneratorModel, StateVec};
use crate::math;
use crate::verdict::{Evidence, MethodVerdict};

/// Slopes at or below this (after widening by the confidence halfwidth)
/// are classified as convergent without consulting the logarithmic fit.
pub const SLOPE_CONVERGE: f64 = -1.2;

/// Slopes at or above this (after narrowing by the confidence halfwidth)
/// are classified as divergent without consulting the logarithmic fit.
pub const SLOPE_DIVERGE: f64 = -0.95;

/// Logarithmic exponents at or below this diverge (borderline regime).
pub const LOG_DIVERGE_MAX: f64 = 1.1;

/// Logarithmic exponents at or above this converge (borderline regime).
pub const LOG_CONVERGE_MIN: f64 = 1.5;

/// Two-sided 95% normal quantile used for the slope halfwidth.
pub const CONFIDENCE_Z: f64 = 1.959963984540054;

const MIN_N_MAX: u64 = 1_000;

/// Outcome of the series classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesClass {
    Diverges,
    Converges,
    Inconclusive,
}

impl SeriesClass {
    pub fn as_str(self) -> &'static str {
        match self {
            SeriesClass::Diverges => "diverges",
            SeriesClass::Converges => "converges",
            SeriesClass::Inconclusive => "inconclusive",
        }
    }
}

/// Classification together with the fitted quantities behind it.
#[derive(Debug, Clone)]
pub struct SeriesReport {
    pub class: SeriesClass,
    /// Fitted exponent of `t_n ~ n^slope` over the top half of the range.
    pub slope: f64,
    /// 95% halfwidth of the fitted slope.
    pub halfwidth: f64,
    /// Fitted logarithmic exponent, when the borderline fit was consulted.
    pub log_correction: Option<f64>,
    /// Partial sum of the first `n_max` terms.
    pub partial_sum: f64,
    pub n_max: u64,
}

struct Fit {
    slope: f64,
    halfwidth: f64,
}

fn ols(points: &[(f64, f64)]) -> Fit {
    let m = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
    let sxy: f64 = points
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let rss: f64 = points
        .iter()
        .map(|p| {
            let r = p.1 - (intercept + slope * p.0);
            r * r
        })
        .sum();
    let variance = rss / (m - 2.0);
    let halfwidth = CONFIDENCE_Z * math::sqrt(variance / sxx);
    Fit { slope, halfwidth }
}

/// Classifies the positive series `Σ_{n≥1} terms(n)` from its first
/// `n_max` terms.
///
/// Terms must be strictly positive and finite.  `n_max` below 1000 is
/// rejected because the fits need a stable tail window.
pub fn classify_series(terms: impl Fn(u64) -> f64, n_max: u64) -> Result<SeriesReport> {
    if n_max < MIN_N_MAX {
        return Err(Error::Usage(format!(
            "series classification needs n_max >= {MIN_N_MAX}, got {n_max}"
        )));
    }
    let mut partial_sum = 0.0;
    let lo = n_max / 2;
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity((n_max - lo + 1) as usize);
    for n in 1..=n_max {
        let t = terms(n);
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Evaluation(format!(
                "series term at n = {n} is {t}, must be positive and finite"
            )));
        }
        partial_sum += t;
        if n >= lo {
            pts.push((math::ln(n as f64), math::ln(t)));
        }
    }
    let fit = ols(&pts);
    let (class, log_correction) = if fit.slope + fit.halfwidth < SLOPE_CONVERGE {
        (SeriesClass::Converges, None)
    } else if fit.slope - fit.halfwidth > SLOPE_DIVERGE {
        (SeriesClass::Diverges, None)
    } else {
        // Borderline: measure β in t_n ≈ C / (n ln^β n).
        let pts2: Vec<(f64, f64)> = pts
            .iter()
            .map(|&(x, y)| (math::ln(x), y + x))
            .collect();
        let beta = -ols(&pts2).slope;
        let class = if beta <= LOG_DIVERGE_MAX {
            SeriesClass::Diverges
        } else if beta >= LOG_CONVERGE_MIN {
            SeriesClass::Converges
        } else {
            SeriesClass::Inconclusive
        };
        (class, Some(beta))
    };
    Ok(SeriesReport {
        class,
        slope: fit.slope,
        halfwidth: fit.halfwidth,
        log_correction,
        partial_sum,
        n_max,
    })
}

/// Uniqueness verdict for a single-birth chain via its inverse-rate series.
///
/// The model must have exactly one transition `n → n+1` from every state up
/// to `n_max`; anything else is a precondition failure.  Divergence of
/// `Σ 1/q_n` is evidence of uniqueness, convergence of non-uniqueness.
pub fn pure_birth_verdict(model: &GeneratorModel, n_max: u64) -> Result<MethodVerdict> {
    if model.dimension() != 1 {
        return Err(Error::Precondition(format!(
            "inverse-rate series needs a one-dimensional chain, model {} has dimension {}",
            model.name(),
            model.dimension()
        )));
    }
    let mut rates: Vec<f64> = Vec::with_capacity(n_max as usize + 1);
    for n in 0..=n_max {
        let state = StateVec::single(u32::try_from(n).map_err(|_| {
            Error::Resource(format!("state index {n} exceeds the coordinate range"))
        })?);
        let row = model.transitions_of(&state)?;
        let up = state.offset(0, 1)?.expect("increment within range");
        if row.len() != 1 || row[0].target != up {
            return Err(Error::Precondition(format!(
                "state {state} is not single-birth: expected one transition to {up}"
            )));
        }
        rates.push(row[0].rate);
    }
    let report = classify_series(|n| 1.0 / rates[n as usize], n_max)?;
    let verdict = match report.class {
        SeriesClass::Diverges => Evidence::Unique,
        SeriesClass::Converges => Evidence::NonUnique,
        SeriesClass::Inconclusive => Evidence::Inconclusive,
    };
    let detail = match report.log_correction {
        Some(beta) => format!(
            "inverse-rate series {} (slope {:.4} +- {:.4}, log exponent {:.3}, partial sum {:.4} at n = {})",
            report.class.as_str(),
            report.slope,
            report.halfwidth,
            beta,
            report.partial_sum,
            report.n_max
        ),
        None => format!(
            "inverse-rate series {} (slope {:.4} +- {:.4}, partial sum {:.4} at n = {})",
            report.class.as_str(),
            report.slope,
            report.halfwidth,
            report.partial_sum,
            report.n_max
        ),
    };
    Ok(MethodVerdict {
        verdict,
        lambda: 0.0,
        reference: StateVec::single(0),
        traces: Vec::new(),
        detail,
    })
}
