//! Shared verdict vocabulary for the truncation-based engines.

use alloc::string::String;
use alloc::vec::Vec;

use crate::generator::StateVec;

/// What a finite computation says about uniqueness of the process.
///
/// `Unique` and `NonUnique` are evidence from a stated truncation, not proofs;
/// `Inconclusive` means the truncation did not separate the two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Evidence {
    Unique,
    NonUnique,
    Inconclusive,
}

impl Evidence {
    pub fn as_str(self) -> &'static str {
        match self {
            Evidence::Unique => "unique",
            Evidence::NonUnique => "non-unique",
            Evidence::Inconclusive => "inconclusive",
        }
    }
}

/// Decision thresholds shared by the resolvent and embedded-chain verdicts.
#[derive(Debug, Clone, Copy)]
pub struct VerdictThresholds {
    /// A certified bound this far above zero counts as positive.
    pub positive: f64,
    /// A bound this close to its trivial value counts as vanished.
    pub zero: f64,
    /// Geometric decay per cap doubling accepted as "tending to zero".
    pub decay_max: f64,
    /// How many final consecutive decays must satisfy `decay_max`.
    pub decay_count: usize,
}

impl Default for VerdictThresholds {
    fn default() -> Self {
        VerdictThresholds {
            positive: 1e-3,
            zero: 1e-3,
            decay_max: 0.98,
            decay_count: 2,
        }
    }
}

/// Bracket values observed at one cap of a schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapTrace {
    pub cap: u64,
    pub lower: f64,
    pub upper: f64,
    pub iterations: u64,
    pub converged: bool,
}

/// Outcome of a schedule-driven engine, with the full trace so callers can
/// extend the schedule instead of rerunning from scratch.
#[derive(Debug, Clone)]
pub struct MethodVerdict {
    pub verdict: Evidence,
    pub lambda: f64,
    pub reference: StateVec,
    pub traces: Vec<CapTrace>,
    pub detail: String,
}
