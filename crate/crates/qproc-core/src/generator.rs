//! States, transitions, and lazily evaluated Q-matrices.
//!
//! A model is a conservative, totally stable Q-matrix presented through its
//! off-diagonal rows: `transitions_of(i)` lists the states reachable from `i`
//! in one jump together with their rates `q_ij > 0`.  The total rate
//! `q_i = Σ_{j≠i} q_ij` is finite by construction and the diagonal entry is
//! `-q_i`, so conservativity never has to be checked, only exploited.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Inline storage for up to four coordinates; larger dimensions spill to the heap.
type Coords = SmallVec<[u32; 4]>;

/// A point of `Z_+^d`.
///
/// States are immutable value objects.  The derived total order is
/// lexicographic on coordinates, which makes window enumerations canonical.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateVec {
    coords: Coords,
}

impl StateVec {
    /// Builds a state from explicit coordinates.  Panics on dimension zero.
    pub fn new(coords: &[u32]) -> Self {
        assert!(!coords.is_empty(), "states need at least one coordinate");
        StateVec {
            coords: Coords::from_slice(coords),
        }
    }

    /// The all-zero state of the given dimension.
    pub fn origin(dimension: usize) -> Self {
        assert!(dimension > 0, "states need at least one coordinate");
        StateVec {
            coords: smallvec::smallvec![0; dimension],
        }
    }

    /// Convenience constructor for one-dimensional chains.
    pub fn single(n: u32) -> Self {
        StateVec::new(&[n])
    }

    pub fn dimension(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[u32] {
        &self.coords
    }

    pub fn coord(&self, site: usize) -> u32 {
        self.coords[site]
    }

    /// The level `|i| = Σ_u i_u`, exactly (no rounding: u32 sums fit in u64).
    pub fn level(&self) -> u64 {
        self.coords.iter().map(|&c| u64::from(c)).sum()
    }

    /// Returns the state shifted by `offset` at `site`, or `Ok(None)` when the
    /// move would leave `Z_+^d` (negative coordinate).  Overflow past `u32` is
    /// a resource error: such states are outside the representable range.
    pub fn offset(&self, site: usize, offset: i64) -> Result<Option<StateVec>> {
        let cur = i64::from(self.coords[site]);
        let next = cur + offset;
        if next < 0 {
            return Ok(None);
        }
        let next = u32::try_from(next).map_err(|_| {
            Error::Resource(format!(
                "coordinate overflow at state {self}: site {site} offset {offset}"
            ))
        })?;
        let mut coords = self.coords.clone();
        coords[site] = next;
        Ok(Some(StateVec { coords }))
    }
}

impl fmt::Display for StateVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, c) in self.coords.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Debug for StateVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// One off-diagonal entry of a Q-matrix row: a jump target and its rate.
#[derive(Clone, PartialEq, Debug)]
pub struct Transition {
    pub target: StateVec,
    pub rate: f64,
}

impl Transition {
    pub fn new(target: StateVec, rate: f64) -> Self {
        Transition { target, rate }
    }
}

type TransitionFn = dyn Fn(&StateVec) -> Result<Vec<Transition>> + Send + Sync;

/// A conservative totally stable Q-matrix given by a pure row function.
///
/// The row function must be deterministic: identical input states yield
/// identical transition lists on every call.  Every engine in this crate
/// relies on that contract for reproducibility.
#[derive(Clone)]
pub struct GeneratorModel {
    name: String,
    dimension: usize,
    params: Vec<(String, f64)>,
    rows: Arc<TransitionFn>,
}

impl fmt::Debug for GeneratorModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneratorModel")
            .field("name", &self.name)
            .field("dimension", &self.dimension)
            .field("params", &self.params)
            .finish_non_exhaustive()
    }
}

impl GeneratorModel {
    /// Wraps a row function into a model.  Panics on dimension zero.
    pub fn new(
        name: impl Into<String>,
        dimension: usize,
        rows: impl Fn(&StateVec) -> Result<Vec<Transition>> + Send + Sync + 'static,
    ) -> Self {
        assert!(dimension > 0, "models need at least one coordinate");
        GeneratorModel {
            name: name.into(),
            dimension,
            params: Vec::new(),
            rows: Arc::new(rows),
        }
    }

    /// Attaches named parameters used for reporting.
    pub fn with_params(mut self, params: Vec<(String, f64)>) -> Self {
        self.params = params;
        self
    }

    /// Replaces the display name (useful when wrapping zoo constructors).
    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn params(&self) -> &[(String, f64)] {
        &self.params
    }

    /// The validated off-diagonal row of state `i`.
    ///
    /// Zero-rate entries are dropped, negative or self-loop entries are
    /// model-definition errors naming the offending state and transition,
    /// and non-finite rates are rate-overflow errors.
    pub fn transitions_of(&self, i: &StateVec) -> Result<Vec<Transition>> {
        if i.dimension() != self.dimension {
            return Err(Error::Usage(format!(
                "state {i} has dimension {}, model '{}' expects {}",
                i.dimension(),
                self.name,
                self.dimension
            )));
        }
        let mut row = (self.rows)(i)?;
        row.retain(|t| t.rate != 0.0);
        for t in &row {
            if !t.rate.is_finite() {
                return Err(Error::RateOverflow(format!(
                    "rate {} -> {} is not finite in model '{}'",
                    i, t.target, self.name
                )));
            }
            if t.rate < 0.0 {
                return Err(Error::ModelDefinition(format!(
                    "negative rate {} on {} -> {} in model '{}'",
                    t.rate, i, t.target, self.name
                )));
            }
            if t.target.dimension() != self.dimension {
                return Err(Error::ModelDefinition(format!(
                    "transition {} -> {} leaves dimension {} in model '{}'",
                    i,
                    t.target,
                    self.dimension,
                    self.name
                )));
            }
            if t.target == *i {
                return Err(Error::ModelDefinition(format!(
                    "self loop at {} in model '{}'",
                    i, self.name
                )));
            }
        }
        Ok(row)
    }

    /// The total jump rate `q_i`; zero exactly when `i` is absorbing.
    pub fn total_rate(&self, i: &StateVec) -> Result<f64> {
        let q: f64 = self.transitions_of(i)?.iter().map(|t| t.rate).sum();
        if !q.is_finite() {
            return Err(Error::RateOverflow(format!(
                "total rate at {} is not finite in model '{}'",
                i, self.name
            )));
        }
        Ok(q)
    }

    /// Applies the generator to a function: `Ωf(i) = Σ_j q_ij (f(j) − f(i))`.
    pub fn apply_generator(&self, f: &dyn Fn(&StateVec) -> f64, i: &StateVec) -> Result<f64> {
        let fi = f(i);
        if !fi.is_finite() {
            return Err(Error::Evaluation(format!("f({i}) is not finite")));
        }
        let mut acc = 0.0;
        for t in self.transitions_of(i)? {
            let ft = f(&t.target);
            if !ft.is_finite() {
                return Err(Error::Evaluation(format!("f({}) is not finite", t.target)));
            }
            acc += t.rate * (ft - fi);
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_cycle() -> GeneratorModel {
        GeneratorModel::new("two_cycle", 1, |i| {
            let rate = if i.coord(0) == 0 { 2.0 } else { 3.0 };
            let target = if i.coord(0) == 0 { 1 } else { 0 };
            Ok(alloc::vec![Transition::new(StateVec::single(target), rate)])
        })
    }

    #[test]
    fn level_is_coordinate_sum() {
        assert_eq!(StateVec::new(&[3, 0, 4]).level(), 7);
        assert_eq!(StateVec::origin(5).level(), 0);
    }

    #[test]
    fn ordering_is_lexicographic() {
        let a = StateVec::new(&[0, 2]);
        let b = StateVec::new(&[1, 1]);
        assert!(a < b);
        assert!(StateVec::new(&[1, 0]) < StateVec::new(&[1, 1]));
    }

    #[test]
    fn offset_clips_below_zero() {
        let s = StateVec::new(&[0, 1]);
        assert_eq!(s.offset(0, -1).unwrap(), None);
        assert_eq!(
            s.offset(1, 2).unwrap(),
            Some(StateVec::new(&[0, 3]))
        );
    }

    #[test]
    fn offset_overflow_is_resource_error() {
        let s = StateVec::single(u32::MAX);
        assert!(matches!(s.offset(0, 1), Err(Error::Resource(_))));
    }

    #[test]
    fn total_rate_sums_the_row() {
        let m = two_cycle();
        assert_eq!(m.total_rate(&StateVec::single(0)).unwrap(), 2.0);
        assert_eq!(m.total_rate(&StateVec::single(1)).unwrap(), 3.0);
    }

    #[test]
    fn dimension_mismatch_is_usage_error() {
        let m = two_cycle();
        assert!(matches!(
            m.transitions_of(&StateVec::new(&[0, 0])),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn negative_rate_names_state_and_target() {
        let m = GeneratorModel::new("bad", 1, |_| {
            Ok(alloc::vec![Transition::new(StateVec::single(1), -1.0)])
        });
        let err = m.transitions_of(&StateVec::single(0)).unwrap_err();
        match err {
            Error::ModelDefinition(msg) => {
                assert!(msg.contains("(0)") && msg.contains("(1)"), "{msg}");
            }
            other => panic!("wrong class: {other:?}"),
        }
    }

    #[test]
    fn non_finite_rate_is_overflow() {
        let m = GeneratorModel::new("huge", 1, |_| {
            Ok(alloc::vec![Transition::new(
                StateVec::single(1),
                f64::INFINITY
            )])
        });
        assert!(matches!(
            m.transitions_of(&StateVec::single(0)),
            Err(Error::RateOverflow(_))
        ));
    }

    #[test]
    fn self_loops_are_rejected() {
        let m = GeneratorModel::new("loop", 1, |i| {
            Ok(alloc::vec![Transition::new(i.clone(), 1.0)])
        });
        assert!(matches!(
            m.transitions_of(&StateVec::single(0)),
            Err(Error::ModelDefinition(_))
        ));
    }

    #[test]
    fn zero_rates_are_dropped() {
        let m = GeneratorModel::new("sparse", 1, |i| {
            Ok(alloc::vec![
                Transition::new(StateVec::single(i.coord(0) + 1), 0.0),
                Transition::new(StateVec::single(i.coord(0) + 2), 1.5),
            ])
        });
        let row = m.transitions_of(&StateVec::single(0)).unwrap();
        assert_eq!(row.len(), 1);
        assert_eq!(row[0].target, StateVec::single(2));
    }

    #[test]
    fn rows_are_pure() {
        let m = two_cycle();
        let a = m.transitions_of(&StateVec::single(0)).unwrap();
        let b = m.transitions_of(&StateVec::single(0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn generator_application_matches_hand_value() {
        // Ωf(0) = 2 (f(1) − f(0)) with f = level ⇒ 2.
        let m = two_cycle();
        let f = |s: &StateVec| s.level() as f64;
        assert_eq!(m.apply_generator(&f, &StateVec::single(0)).unwrap(), 2.0);
    }

    #[test]
    fn non_finite_f_is_evaluation_error() {
        let m = two_cycle();
        let f = |s: &StateVec| {
            if s.coord(0) == 1 {
                f64::NAN
            } else {
                0.0
            }
        };
        assert!(matches!(
            m.apply_generator(&f, &StateVec::single(0)),
            Err(Error::Evaluation(_))
        ));
    }
}
