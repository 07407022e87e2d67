//! Two-sided brackets for the maximal bounded solution of `(λI − Q)u = 0`.
//!
//! For a conservative model and `λ > 0`, the maximal solution `z` of the
//! eigenproblem with `0 ≤ u ≤ 1` equals the escape probability of the
//! `λ`-killed jump chain: `z(i)` is the probability that the chain started
//! at `i` is never killed.  The process is unique exactly when `z ≡ 0`.
//!
//! On a finite window the killed chain is represented by a substochastic
//! matrix ([`EmbeddedMatrix`]).  Seeding the states beyond the window with 1
//! and iterating downward yields a certified upper bound on `z`; seeding
//! them with a provable survival probability ([`survival_credit`]) and
//! iterating upward yields a certified lower bound.  Both iterations are
//! monotone, so every intermediate sweep is already a valid bound.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::generator::{GeneratorModel, StateVec};
use crate::math;
use crate::verdict::{CapTrace, Evidence, MethodVerdict, VerdictThresholds};
use crate::window::{enumerate_window, Window};

const ROW_SUM_TOL: f64 = 1e-12;

/// One row of the killed jump chain on a window.
///
/// Entries are jump probabilities `q_ij / (λ + q_i)`; the defect
/// `λ / (λ + q_i)` is the killing mass.
#[derive(Debug, Clone)]
pub struct EmbeddedRow {
    /// Targets inside the window, as `(window index, probability)`.
    pub interior: Vec<(u32, f64)>,
    /// Targets beyond the window, as `(boundary index, probability)`.
    pub exterior: Vec<(u32, f64)>,
    /// Probability that the exponential clock fires before the next jump.
    pub killing: f64,
    /// Total jump rate `q_i` of the state.
    pub total_rate: f64,
}

/// The `λ`-killed jump chain restricted to a window.
#[derive(Debug, Clone)]
pub struct EmbeddedMatrix {
    pub(crate) lambda: f64,
    pub(crate) window: Window,
    pub(crate) rows: Vec<EmbeddedRow>,
}

impl EmbeddedMatrix {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn rows(&self) -> &[EmbeddedRow] {
        &self.rows
    }
}

/// Builds the killed jump chain of `model` on `window` for rate `λ > 0`.
pub fn build_embedded_matrix(
    model: &GeneratorModel,
    lambda: f64,
    window: Window,
) -> Result<EmbeddedMatrix> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Usage(format!(
            "killing rate must be positive and finite, got {lambda}"
        )));
    }
    let mut rows = Vec::with_capacity(window.states().len());
    for state in window.states() {
        let row = model.transitions_of(state)?;
        let total_rate: f64 = row.iter().map(|t| t.rate).sum();
        if !total_rate.is_finite() {
            return Err(Error::RateOverflow(format!(
                "total rate at {state} overflows"
            )));
        }
        let denom = lambda + total_rate;
        let mut interior = Vec::new();
        let mut exterior = Vec::new();
        let mut sum = 0.0;
        for t in &row {
            let p = t.rate / denom;
            sum += p;
            match window.index_of(&t.target) {
                Some(j) => interior.push((j as u32, p)),
                None => {
                    let b = window.boundary_index_of(&t.target).ok_or_else(|| {
                        Error::Evaluation(format!(
                            "target {} of {state} is neither interior nor boundary",
                            t.target
                        ))
                    })?;
                    exterior.push((b as u32, p));
                }
            }
        }
        let killing = lambda / denom;
        if math::abs(sum + killing - 1.0) > ROW_SUM_TOL {
            return Err(Error::Evaluation(format!(
                "row of {state} sums to {} instead of 1",
                sum + killing
            )));
        }
        rows.push(EmbeddedRow {
            interior,
            exterior,
            killing,
            total_rate,
        });
    }
    Ok(EmbeddedMatrix {
        lambda,
        window,
        rows,
    })
}

/// Tuning for [`survival_credit`].
#[derive(Debug, Clone)]
pub struct CreditOptions {
    /// Maximum number of path steps to follow.
    pub max_steps: usize,
    /// Tail estimate below which the walk stops early.
    pub stop_tail: f64,
    /// Largest tail estimate still accepted when the step budget runs out.
    pub accept_tail: f64,
    /// Survival products below this floor are treated as zero.
    pub floor: f64,
}

impl Default for CreditOptions {
    fn default() -> Self {
        CreditOptions {
            max_steps: 200_000,
            stop_tail: 1e-10,
            accept_tail: 1e-4,
            floor: 1e-12,
        }
    }
}

/// Smallest fitted power-law exponent the tail integral is trusted for.
const POWER_MIN: f64 = 1.2;

/// Certified lower bound on the probability that the `λ`-killed jump chain
/// started at `from` is never killed.
///
/// The bound follows a single deterministic path: from each state the
/// level-increasing transition of largest rate is taken, and the survival
/// factors `q_chosen / (λ + q_i)` are multiplied up.  The loss beyond the
/// followed prefix is controlled by extrapolating the per-step log-loss,
/// which must decay like a summable power law or geometrically; when
/// neither fit certifies a small tail, the function conservatively returns
/// zero.  Zero is also returned when the path leaves the representable
/// range, when no level-increasing transition exists, or when the product
/// falls below the floor.
pub fn survival_credit(
    model: &GeneratorModel,
    lambda: f64,
    from: &StateVec,
    opts: &CreditOptions,
) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Usage(format!(
            "killing rate must be positive and finite, got {lambda}"
        )));
    }
    let log_floor = math::ln(opts.floor);
    let mut state = from.clone();
    let mut log_p = 0.0;
    // Per-step log-loss sampled at power-of-two step counts.
    let mut loss_at = [0.0f64; 64];
    let mut last_tail: Option<f64> = None;
    let mut step: usize = 0;
    while step < opts.max_steps {
        step += 1;
        let row = match model.transitions_of(&state) {
            Ok(r) => r,
            Err(e) if e.is_representability() => return Ok(0.0),
            Err(e) => return Err(e),
        };
        let total: f64 = row.iter().map(|t| t.rate).sum();
        if !total.is_finite() {
            return Ok(0.0);
        }
        let mut chosen: Option<&crate::generator::Transition> = None;
        for t in &row {
            if t.target.level() > state.level() && chosen.is_none_or(|c| t.rate > c.rate) {
                chosen = Some(t);
            }
        }
        let Some(chosen) = chosen else {
            return Ok(0.0);
        };
        // ln((λ + q) / q_chosen) computed without cancellation for huge rates.
        let loss = math::ln_1p((lambda + (total - chosen.rate)) / chosen.rate);
        log_p -= loss;
        if log_p < log_floor {
            return Ok(0.0);
        }
        if step >= 32 && step.is_power_of_two() {
            let m = step.trailing_zeros() as usize;
            loss_at[m] = loss;
            if m >= 6 {
                if loss <= 1e-300 {
                    return Ok(math::exp(log_p));
                }
                let prev = loss_at[m - 1];
                if prev > 0.0 && loss < prev {
                    let mut tail = f64::INFINITY;
                    let power = math::ln(prev / loss) / core::f64::consts::LN_2;
                    if power > POWER_MIN {
                        tail = tail.min(loss * step as f64 / (power - 1.0));
                    }
                    let ratio = math::pow(loss / prev, 2.0 / step as f64);
                    if ratio < 1.0 {
                        tail = tail.min(loss * ratio / (1.0 - ratio));
                    }
                    if tail.is_finite() {
                        last_tail = Some(tail);
                        if tail < opts.stop_tail {
                            return Ok((math::exp(log_p) * (1.0 - 2.0 * tail)).max(0.0));
                        }
                    }
                }
            }
        }
        state = chosen.target.clone();
    }
    match last_tail {
        Some(tail) if tail < opts.accept_tail => {
            Ok((math::exp(log_p) * (1.0 - 2.0 * tail)).max(0.0))
        }
        _ => Ok(0.0),
    }
}

/// Tuning for the bracket iterations.
#[derive(Debug, Clone)]
pub struct BracketOptions {
    /// Sup-norm change per sweep below which a side counts as converged.
    pub tol: f64,
    /// Sweep budget per side.
    pub max_sweeps: u64,
    /// Settings for the boundary survival bound of the lower side.
    pub credit: CreditOptions,
}

impl Default for BracketOptions {
    fn default() -> Self {
        BracketOptions {
            tol: 1e-12,
            max_sweeps: 100_000,
            credit: CreditOptions::default(),
        }
    }
}

/// Entrywise bracket `lower ≤ z ≤ upper` on a window, in window state order.
#[derive(Debug, Clone)]
pub struct SolutionBracket {
    pub window: Window,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Sweeps used by the slower of the two sides.
    pub iterations: u64,
    /// Largest entrywise distance between the two sides.
    pub gap: f64,
    pub converged: bool,
}

impl SolutionBracket {
    /// The bracket at one state, if it lies in the window.
    pub fn at(&self, state: &StateVec) -> Option<(f64, f64)> {
        let i = self.window.index_of(state)?;
        Some((self.lower[i], self.upper[i]))
    }
}

/// Runs Gauss-Seidel sweeps in reverse state order until the sup-norm
/// change drops below `tol`.  Returns sweeps used and whether it converged.
fn sweep_to_fixed_point(
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
            let mut v = 0.0;
            for &(j, p) in &row.interior {
                v += p * values[j as usize];
            }
            for &(b, p) in &row.exterior {
                v += p * exterior_data[b as usize];
            }
            delta = delta.max(math::abs(v - values[i]));
            values[i] = v;
        }
        if delta <= tol {
            return (sweep, true);
        }
    }
    (max_sweeps, false)
}

/// Brackets the maximal solution on the window of states below `cap`.
///
/// The interior is `{ level < cap }`; its one-jump neighbourhood forms the
/// boundary.  The upper side assumes every boundary state escapes, the
/// lower side credits each boundary state with its certified survival
/// probability.  Sweep exhaustion is reported through `converged`, never as
/// an error, because intermediate iterates are themselves valid bounds.
pub fn maximal_solution_bracket(
    model: &GeneratorModel,
    lambda: f64,
    cap: u64,
    opts: &BracketOptions,
) -> Result<SolutionBracket> {
    if cap == 0 {
        return Err(Error::Usage("window cap must be at least 1".into()));
    }
    let window = enumerate_window(model, cap - 1)?;
    let matrix = build_embedded_matrix(model, lambda, window)?;
    let n = matrix.window.states().len();

    let ones = vec![1.0; matrix.window.boundary().len()];
    let mut credits = Vec::with_capacity(matrix.window.boundary().len());
    for b in matrix.window.boundary() {
        credits.push(survival_credit(model, lambda, b, &opts.credit)?);
    }

    let mut upper = vec![1.0; n];
    let (up_sweeps, up_ok) =
        sweep_to_fixed_point(&matrix, &mut upper, &ones, opts.tol, opts.max_sweeps);
    let mut lower = vec![0.0; n];
    let (lo_sweeps, lo_ok) =
        sweep_to_fixed_point(&matrix, &mut lower, &credits, opts.tol, opts.max_sweeps);

    let mut gap: f64 = 0.0;
    for i in 0..n {
        if lower[i] > upper[i] {
            lower[i] = upper[i];
        }
        gap = gap.max(upper[i] - lower[i]);
    }
    Ok(SolutionBracket {
        window: matrix.window,
        lower,
        upper,
        iterations: up_sweeps.max(lo_sweeps),
        gap,
        converged: up_ok && lo_ok,
    })
}

/// Lower bound on the resolvent mass `λ (λI − Q)^{-1} 1` on the window of
/// states below `cap`, from `n_terms` monotone Jacobi iterations.
///
/// The mass of the minimal process satisfies `m = Π m + killing` with zero
/// continuation beyond the window; each iteration adds the contribution of
/// one more jump, so the result increases to `1 − z` from below.  Values
/// are in window state order.
pub fn resolvent_mass(
    model: &GeneratorModel,
    lambda: f64,
    cap: u64,
    n_terms: u64,
) -> Result<Vec<f64>> {
    if cap == 0 {
        return Err(Error::Usage("window cap must be at least 1".into()));
    }
    let window = enumerate_window(model, cap - 1)?;
    let matrix = build_embedded_matrix(model, lambda, window)?;
    let n = matrix.window.states().len();
    let mut mass = vec![0.0; n];
    let mut next = vec![0.0; n];
    for _ in 0..n_terms {
        for (slot, row) in next.iter_mut().zip(&matrix.rows) {
            let mut v = row.killing;
            for &(j, p) in &row.interior {
                v += p * mass[j as usize];
            }
            *slot = v;
        }
        core::mem::swap(&mut mass, &mut next);
    }
    Ok(mass)
}

/// Uniqueness verdict from maximal-solution brackets over a cap schedule.
///
/// A certified positive lower bound at the reference state is immediate
/// evidence of non-uniqueness.  Uniqueness is reported when the upper
/// bounds decrease along the schedule and either fall below the zero
/// threshold outright or keep decaying by the configured factor over the
/// final steps.  Everything else is inconclusive.
pub fn uniqueness_verdict_resolvent(
    model: &GeneratorModel,
    lambda: f64,
    reference: &StateVec,
    caps: &[u64],
    opts: &BracketOptions,
    thresholds: &VerdictThresholds,
) -> Result<MethodVerdict> {
    validate_schedule(caps, reference, model.dimension())?;
    let mut traces: Vec<CapTrace> = Vec::with_capacity(caps.len());
    for &cap in caps {
        let bracket = maximal_solution_bracket(model, lambda, cap, opts)?;
        let (lo, up) = bracket
            .at(reference)
            .expect("reference lies inside every window");
        traces.push(CapTrace {
            cap,
            lower: lo,
            upper: up,
            iterations: bracket.iterations,
            converged: bracket.converged,
        });
        if lo > thresholds.positive {
            let detail = format!(
                "escape probability from {reference} is at least {lo:.6e} (window cap {cap})"
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
    let (verdict, detail) = judge_decay(&traces, reference, "escape probability", thresholds);
    Ok(MethodVerdict {
        verdict,
        lambda,
        reference: reference.clone(),
        traces,
        detail,
    })
}

pub(crate) fn validate_schedule(
    caps: &[u64],
    reference: &StateVec,
    dimension: usize,
) -> Result<()> {
    if caps.is_empty() {
        return Err(Error::Usage("cap schedule must not be empty".into()));
    }
    if caps.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Usage(format!(
            "cap schedule must be strictly increasing, got {caps:?}"
        )));
    }
    if reference.dimension() != dimension {
        return Err(Error::Usage(format!(
            "reference state {reference} has dimension {}, model has {dimension}",
            reference.dimension()
        )));
    }
    if reference.level() >= caps[0] {
        return Err(Error::Usage(format!(
            "reference state {reference} must lie inside the smallest window (cap {})",
            caps[0]
        )));
    }
    Ok(())
}

/// Shared decision rule on a trace of shrinking upper bounds.
pub(crate) fn judge_decay(
    traces: &[CapTrace],
    reference: &StateVec,
    quantity: &str,
    thresholds: &VerdictThresholds,
) -> (Evidence, String) {
    let uppers: Vec<f64> = traces.iter().map(|t| t.upper).collect();
    let last = *uppers.last().expect("non-empty schedule");
    let last_cap = traces.last().expect("non-empty schedule").cap;
    let monotone = uppers.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    if monotone {
        if last < thresholds.zero {
            return (
                Evidence::Unique,
                format!(
                    "{quantity} from {reference} is at most {last:.3e} at cap {last_cap}, below {:.1e}",
                    thresholds.zero
                ),
            );
        }
        if uppers.len() > thresholds.decay_count {
            let tail = &uppers[uppers.len() - thresholds.decay_count - 1..];
            let decaying = tail
                .windows(2)
                .all(|w| w[0] > 0.0 && w[1] / w[0] <= thresholds.decay_max);
            if decaying {
                let ratios: Vec<String> = tail
                    .windows(2)
                    .map(|w| format!("{:.4}", w[1] / w[0]))
                    .collect();
                return (
                    Evidence::Unique,
                    format!(
                        "{quantity} from {reference} keeps decaying (factors {} per cap step, last value {last:.3e})",
                        ratios.join(", ")
                    ),
                );
            }
        }
    }
    (
        Evidence::Inconclusive,
        format!(
            "{quantity} from {reference} is bracketed in [{:.3e}, {last:.3e}] at cap {last_cap} without certified decay",
            traces.last().expect("non-empty schedule").lower
        ),
    )
}
