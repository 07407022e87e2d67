//! Analysis toolkit for conservative, totally stable Q-matrices on countable
//! state spaces `Z_+^d`.
//!
//! The crate answers one question about a model: is the minimal transition
//! function honest (the process is unique) or can mass escape to infinity in
//! finite time (explosion, hence non-uniqueness)?  Several routes to evidence
//! are provided:
//!
//! * [`certificate`] checks Lyapunov-style drift certificates for uniqueness
//!   and non-uniqueness on finite windows.
//! * [`series`] classifies reciprocal-rate series for single-birth chains.
//! * [`resolvent`] brackets the maximal bounded solution of `(λI − Q)u = 0`
//!   by monotone iteration on truncations.
//! * [`embedded`] studies the killed jump chain augmented with a fictitious
//!   return state and brackets its return probability.
//! * [`simulate`] runs reproducible jump-chain trials and flags paths whose
//!   inverse-rate sums stall, the classic signature of explosion.
//!
//! All verdicts produced from finite windows are labeled as evidence, not
//! proof; every engine reports the truncation it used.
//!
//! The crate is `no_std`-compatible (with `alloc`) when built without the
//! default `std` feature.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]
#![deny(missing_debug_implementations)]

extern crate alloc;

pub mod certificate;
pub mod embedded;
pub mod error;
pub mod generator;
mod math;
pub mod resolvent;
pub mod series;
pub mod simulate;
pub mod verdict;
pub mod window;
pub mod zoo;

pub use certificate::{
    check_corollary_certificate, check_nonuniqueness_certificate, check_uniqueness_certificate,
    scan_drift_constant, CertVerdict, CertificateKind, CertificateReport, CheckKind,
    LyapunovCertificate, Violation, WindowFamily,
};
pub use embedded::{
    build_delta_chain, return_probability_bracket, uniqueness_verdict_embedded, DeltaChain,
    ReturnBracket,
};
pub use error::{Error, Result};
pub use generator::{GeneratorModel, StateVec, Transition};
pub use resolvent::{
    build_embedded_matrix, maximal_solution_bracket, resolvent_mass, survival_credit,
    uniqueness_verdict_resolvent, BracketOptions, CreditOptions, EmbeddedMatrix, EmbeddedRow,
    SolutionBracket,
};
pub use series::{classify_series, pure_birth_verdict, SeriesClass, SeriesReport};
pub use simulate::{
    estimate_explosion_probability, flag_explosive, simulate_path, ExplosionEstimate, JumpPath,
    SimOptions, Terminal,
};
pub use verdict::{CapTrace, Evidence, MethodVerdict, VerdictThresholds};
pub use window::{enumerate_shell, enumerate_window, enumerate_window_bounded, Window};
