//! Return-probability analysis of the killed jump chain with a fictitious
//! return state.
//!
//! Augment the `λ`-killed jump chain with one extra state `δ`: killed mass
//! is redirected to `δ`, and from `δ` the chain re-enters the state space
//! with a fixed positive distribution.  The process is unique exactly when
//! `δ` is certain to be revisited, so two-sided bounds on the return
//! probability give uniqueness evidence.  The bounds reuse the window
//! machinery of [`crate::resolvent`]: the chance of hitting `δ` from state
//! `i` is one minus the chance of escaping unkilled, so the same survival
//! credit that floors escape probabilities caps return probabilities.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::generator::{GeneratorModel, StateVec};
use crate::resolvent::{
    build_embedded_matrix, judge_decay, survival_credit, validate_schedule, BracketOptions,
    EmbeddedMatrix,
};
use crate::verdict::{CapTrace, Evidence, MethodVerdict, VerdictThresholds};
use crate::window::enumerate_window;

/// Geometric weights below this are clamped to keep the distribution
/// strictly positive in floating point.
const WEIGHT_FLOOR: f64 = 1e-300;

/// Killed jump chain on a window plus a fictitious return state.
#[derive(Debug, Clone)]
pub struct DeltaChain {
    matrix: EmbeddedMatrix,
    /// Re-entry distribution over the window states, normalized.
    return_weights: Vec<f64>,
    /// Upper bound `1 − credit` on hitting the return state from each
    /// boundary state.
    boundary_return_upper: Vec<f64>,
    decay: f64,
}

impl DeltaChain {
    pub fn matrix(&self) -> &EmbeddedMatrix {
        &self.matrix
    }

    pub fn return_weights(&self) -> &[f64] {
        &self.return_weights
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }
}

/// Builds the return-state chain on the window of states below `cap`.
///
/// The re-entry distribution is geometric in the level, proportional to
/// `decay^level` with `0 < decay < 1`.
pub fn build_delta_chain(
    model: &GeneratorModel,
    lambda: f64,
    cap: u64,
    decay: f64,
    credit: &crate::resolvent::CreditOptions,
) -> Result<DeltaChain> {
    if cap == 0 {
        return Err(Error::Usage("window cap must be at least 1".into()));
    }
    let decay_ok = decay > 0.0 && decay < 1.0;
    if !decay_ok {
        return Err(Error::Usage(format!(
            "re-entry decay must lie strictly between 0 and 1, got {decay}"
        )));
    }
    let window = enumerate_window(model, cap - 1)?;
    let matrix = build_embedded_matrix(model, lambda, window)?;
    let mut weights: Vec<f64> = matrix
        .window()
        .states()
        .iter()
        .map(|s| crate::math::pow(decay, s.level() as f64).max(WEIGHT_FLOOR))
        .collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    let mut boundary_return_upper = Vec::with_capacity(matrix.window().boundary().len());
    for b in matrix.window().boundary() {
        boundary_return_upper.push(1.0 - survival_credit(model, lambda, b, credit)?);
    }
    Ok(DeltaChain {
        matrix,
        return_weights: weights,
        boundary_return_upper,
        decay,
    })
}

/// Two-sided bound on the probability that the chain started at the return
/// state comes back to it.
#[derive(Debug, Clone, Copy)]
pub struct ReturnBracket {
    pub lower: f64,
    pub upper: f64,
    /// Sweeps used by the slower of the two sides.
    pub iterations: u64,
    pub converged: bool,
}

/// Brackets the return probability of the fictitious state.
///
/// Hitting probabilities toward the return state satisfy
/// `v = Π v + killing` on the window.  The lower side continues boundary
/// states with 0, the upper side with `1 − credit`; averaging either fixed
/// point against the re-entry weights bounds the return probability.  The
/// `credit` field of `opts` is not consulted here; credits were fixed when
/// the chain was built.
pub fn return_probability_bracket(chain: &DeltaChain, opts: &BracketOptions) -> ReturnBracket {
    let matrix = &chain.matrix;
    let n = matrix.window().states().len();
    let zeros = vec![0.0; matrix.window().boundary().len()];
    let mut v_lower = vec![0.0; n];
    let (lo_sweeps, lo_ok) = sweep_hitting(
        matrix,
        &mut v_lower,
        &zeros,
        opts.tol,
        opts.max_sweeps,
    );
    let mut v_upper = vec![1.0; n];
    let (up_sweeps, up_ok) = sweep_hitting(
        matrix,
        &mut v_upper,
        &chain.boundary_return_upper,
        opts.tol,
        opts.max_sweeps,
    );
    let mut lower = 0.0;
    let mut upper = 0.0;
    for i in 0..n {
        let v_up = v_upper[i].max(v_lower[i]);
        lower += chain.return_weights[i] * v_lower[i];
        upper += chain.return_weights[i] * v_up;
    }
    ReturnBracket {
        lower,
        upper: upper.min(1.0),
        iterations: lo_sweeps.max(up_sweeps),
        converged: lo_ok && up_ok,
    }
}

fn sweep_hitting(
    matrix: &EmbeddedMatrix,
    values: &mut [f64],
    exterior_data: &[f64],
    tol: f64,
    max_sweeps: u64,
) -> (u64, bool) {
    let n = values.len();
    for sweep in 1..=max_sweeps {
        let mut delta: f64 = 0.0;
        for i in (0..n).rev() {
            let row = &matrix.rows[i];
            let mut v = row.killing;
            for &(j, p) in &row.interior {
                v += p * values[j as usize];
            }
            for &(b, p) in &row.exterior {
                v += p * exterior_data[b as usize];
            }
            delta = delta.max(crate::math::abs(v - values[i]));
            values[i] = v;
        }
        if delta <= tol {
            return (sweep, true);
        }
    }
    (max_sweeps, false)
}

/// Uniqueness verdict from return-probability brackets over a cap schedule.
///
/// Traces store bounds on the return deficit (one minus the return
/// probability).  A certified positive deficit is evidence of
/// non-uniqueness; deficit upper bounds that vanish or keep decaying along
/// the schedule are evidence of uniqueness.
pub fn uniqueness_verdict_embedded(
    model: &GeneratorModel,
    lambda: f64,
    decay: f64,
    reference: &StateVec,
    caps: &[u64],
    opts: &BracketOptions,
    thresholds: &VerdictThresholds,
) -> Result<MethodVerdict> {
    validate_schedule(caps, reference, model.dimension())?;
    let mut traces: Vec<CapTrace> = Vec::with_capacity(caps.len());
    for &cap in caps {
        let chain = build_delta_chain(model, lambda, cap, decay, &opts.credit)?;
        let bracket = return_probability_bracket(&chain, opts);
        let deficit_lower = (1.0 - bracket.upper).max(0.0);
        let deficit_upper = 1.0 - bracket.lower;
        traces.push(CapTrace {
            cap,
            lower: deficit_lower,
            upper: deficit_upper,
            iterations: bracket.iterations,
            converged: bracket.converged,
        });
        if deficit_lower > thresholds.positive {
            let detail = format!(
                "return deficit of the fictitious state is at least {deficit_lower:.6e} (window cap {cap}, re-entry decay {decay})"
            );
            return Ok(MethodVerdict {
                verdict: Evidence::NonUnique,
                lambda,
                reference: reference.clone(),
                traces,
                detail,
            });
        }
    }
    let (verdict, detail) = judge_decay(&traces, reference, "return deficit", thresholds);
    Ok(MethodVerdict {
        verdict,
        lambda,
        reference: reference.clone(),
        traces,
        detail,
    })
}
