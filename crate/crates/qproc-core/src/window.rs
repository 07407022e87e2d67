//! Finite truncations of the state space.
//!
//! A window holds every state with level at most a cap, sorted in the
//! canonical (lexicographic) order, together with its boundary: the states
//! outside the window that are reachable from inside in one jump.  Windows
//! are the common substrate of the certificate, resolvent, and embedded-chain
//! engines.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::generator::{GeneratorModel, StateVec};

/// Hard default on enumerated window cardinality.
pub const DEFAULT_MAX_WINDOW_STATES: usize = 5_000_000;

/// A level truncation of `Z_+^d` plus its one-jump boundary.
#[derive(Debug, Clone)]
pub struct Window {
    dimension: usize,
    level_cap: u64,
    states: Vec<StateVec>,
    boundary: Vec<StateVec>,
}

impl Window {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// The defining cap: every enumerated state satisfies `level ≤ cap`.
    pub fn level_cap(&self) -> u64 {
        self.level_cap
    }

    /// Window states in canonical order.
    pub fn states(&self) -> &[StateVec] {
        &self.states
    }

    /// Exterior states reachable in one jump, in canonical order.
    pub fn boundary(&self) -> &[StateVec] {
        &self.boundary
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn contains(&self, state: &StateVec) -> bool {
        self.index_of(state).is_some()
    }

    /// Position of `state` in the canonical order, if enumerated.
    pub fn index_of(&self, state: &StateVec) -> Option<usize> {
        self.states.binary_search(state).ok()
    }

    /// Position of `state` in the boundary list, if present.
    pub fn boundary_index_of(&self, state: &StateVec) -> Option<usize> {
        self.boundary.binary_search(state).ok()
    }
}

/// Number of states of `Z_+^d` with level ≤ cap, or `None` past `limit`.
fn ball_cardinality(dimension: usize, cap: u64, limit: usize) -> Option<usize> {
    // C(cap + d, d) computed incrementally with an early bail-out.
    let mut count: u128 = 1;
    for k in 1..=dimension as u128 {
        count = count * (cap as u128 + k) / k;
        if count > limit as u128 {
            return None;
        }
    }
    usize::try_from(count).ok().filter(|&c| c <= limit)
}

/// Appends every state with the given remaining budget in lexicographic order.
fn push_states(prefix: &mut Vec<u32>, remaining_sites: usize, budget: u64, out: &mut Vec<StateVec>) {
    if remaining_sites == 1 {
        for c in 0..=budget {
            prefix.push(c as u32);
            out.push(StateVec::new(prefix));
            prefix.pop();
        }
        return;
    }
    for c in 0..=budget {
        prefix.push(c as u32);
        push_states(prefix, remaining_sites - 1, budget - c, out);
        prefix.pop();
    }
}

/// Enumerates the window `{i : |i| ≤ level_cap}` with the default size limit.
pub fn enumerate_window(model: &GeneratorModel, level_cap: u64) -> Result<Window> {
    enumerate_window_bounded(model, level_cap, DEFAULT_MAX_WINDOW_STATES)
}

/// Enumerates the window `{i : |i| ≤ level_cap}` for `model`.
///
/// The boundary is produced by evaluating the model row on every window state
/// and collecting targets that fall outside.  Fails with a resource error when
/// the window would exceed `max_states`.
pub fn enumerate_window_bounded(
    model: &GeneratorModel,
    level_cap: u64,
    max_states: usize,
) -> Result<Window> {
    let d = model.dimension();
    let count = ball_cardinality(d, level_cap, max_states).ok_or_else(|| {
        Error::Resource(format!(
            "window of dimension {d} and cap {level_cap} exceeds {max_states} states"
        ))
    })?;

    let mut states = Vec::with_capacity(count);
    let mut prefix = Vec::with_capacity(d);
    push_states(&mut prefix, d, level_cap, &mut states);
    debug_assert_eq!(states.len(), count);
    debug_assert!(states.windows(2).all(|w| w[0] < w[1]));

    // Every state of level ≤ cap is enumerated, so "outside" is a level test.
    let mut boundary = BTreeSet::new();
    for s in &states {
        for t in model.transitions_of(s)? {
            if t.target.level() > level_cap {
                boundary.insert(t.target);
            }
        }
    }

    Ok(Window {
        dimension: d,
        level_cap,
        states,
        boundary: boundary.into_iter().collect(),
    })
}

/// Enumerates the shell `{i : |i| = level}` in canonical order.
///
/// Shells of `Z_+^d` have `C(level + d − 1, d − 1)` states; the call fails
/// with a resource error past `max_states`.
pub fn enumerate_shell(dimension: usize, level: u64, max_states: usize) -> Result<Vec<StateVec>> {
    if dimension == 0 {
        return Err(Error::Usage("shells need dimension at least 1".into()));
    }
    if dimension == 1 {
        return Ok(alloc::vec![StateVec::single(u32::try_from(level).map_err(
            |_| Error::Resource(format!("level {level} exceeds the coordinate range"))
        )?)]);
    }
    let count = ball_cardinality(dimension - 1, level, max_states).ok_or_else(|| {
        Error::Resource(format!(
            "shell of dimension {dimension} at level {level} exceeds {max_states} states"
        ))
    })?;
    let mut out = Vec::with_capacity(count);
    let mut prefix = Vec::with_capacity(dimension);
    push_shell(&mut prefix, dimension, level, &mut out);
    Ok(out)
}

fn push_shell(prefix: &mut Vec<u32>, remaining_sites: usize, budget: u64, out: &mut Vec<StateVec>) {
    if remaining_sites == 1 {
        prefix.push(budget as u32);
        out.push(StateVec::new(prefix));
        prefix.pop();
        return;
    }
    for c in 0..=budget {
        prefix.push(c as u32);
        push_shell(prefix, remaining_sites - 1, budget - c, out);
        prefix.pop();
    }
}
