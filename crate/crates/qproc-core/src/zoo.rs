//! Reference model constructors.
//!
//! The zoo covers the standard behaviors the engines are calibrated against:
//! single-birth chains with prescribed rate growth, birth-death chains,
//! multi-site reaction-diffusion dynamics, and a parity interleaving that
//! glues two chains into one reducible model.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::generator::{GeneratorModel, StateVec, Transition};

/// Pure birth chain on `Z_+`: one transition `n → n+1` at rate `rate_fn(n)`.
///
/// Rates must be strictly positive; they are validated lazily as states are
/// probed, so models with astronomically growing rates are valid until the
/// first state whose rate leaves the representable range.
pub fn pure_birth(rate_fn: impl Fn(u64) -> f64 + Send + Sync + 'static) -> GeneratorModel {
    GeneratorModel::new("pure_birth", 1, move |i| {
        let n = u64::from(i.coord(0));
        let rate = rate_fn(n);
        if !rate.is_finite() {
            return Err(Error::RateOverflow(format!(
                "pure birth rate at {i} is not finite"
            )));
        }
        if rate <= 0.0 {
            return Err(Error::ModelDefinition(format!(
                "pure birth rate at {i} is {rate}, must be positive"
            )));
        }
        match i.offset(0, 1)? {
            Some(target) => Ok(alloc::vec![Transition::new(target, rate)]),
            None => Err(Error::Resource(format!("state {i} has no successor"))),
        }
    })
}

/// Birth-death chain on `Z_+` with birth rates `b(n)` and death rates `a(n)`.
///
/// Requires `a(0) = 0` (checked eagerly), `b(n) > 0` for all `n`, and
/// `a(n) > 0` for `n ≥ 1` (checked lazily).
pub fn birth_death(
    b: impl Fn(u64) -> f64 + Send + Sync + 'static,
    a: impl Fn(u64) -> f64 + Send + Sync + 'static,
) -> Result<GeneratorModel> {
    if a(0) != 0.0 {
        return Err(Error::ModelDefinition(format!(
            "birth-death needs a(0) = 0, got {}",
            a(0)
        )));
    }
    Ok(GeneratorModel::new("birth_death", 1, move |i| {
        let n = u64::from(i.coord(0));
        let birth = b(n);
        if !birth.is_finite() {
            return Err(Error::RateOverflow(format!(
                "birth rate at {i} is not finite"
            )));
        }
        if birth <= 0.0 {
            return Err(Error::ModelDefinition(format!(
                "birth rate at {i} is {birth}, must be positive"
            )));
        }
        let mut row = alloc::vec![Transition::new(
            i.offset(0, 1)?
                .ok_or_else(|| Error::Resource(format!("state {i} has no successor")))?,
            birth,
        )];
        if n > 0 {
            let death = a(n);
            if !death.is_finite() {
                return Err(Error::RateOverflow(format!(
                    "death rate at {i} is not finite"
                )));
            }
            if death <= 0.0 {
                return Err(Error::ModelDefinition(format!(
                    "death rate at {i} is {death}, must be positive"
                )));
            }
            if let Some(target) = i.offset(0, -1)? {
                row.push(Transition::new(target, death));
            }
        }
        Ok(row)
    }))
}

/// Parameters of the multi-site reaction-diffusion model.
///
/// Per site occupied by `k` particles, births occur at `b(k) = β0 + β2·k(k−1)`
/// and deaths at `a(k) = δ1·k + δ3·k(k−1)(k−2)`.  A particle at site `u`
/// additionally hops to `v` at rate `k_u · p(u,v)` where `p` is a row-stochastic
/// routing matrix with zero diagonal.
#[derive(Debug, Clone)]
pub struct SchloglParams {
    pub sites: usize,
    pub beta0: f64,
    pub beta2: f64,
    pub delta1: f64,
    pub delta3: f64,
    /// Routing matrix; `None` means uniform `1/(sites−1)` off the diagonal.
    pub routing: Option<Vec<Vec<f64>>>,
}

impl SchloglParams {
    /// All reaction constants 1 and uniform routing.
    pub fn unit(sites: usize) -> Self {
        SchloglParams {
            sites,
            beta0: 1.0,
            beta2: 1.0,
            delta1: 1.0,
            delta3: 1.0,
            routing: None,
        }
    }
}

const ROUTING_ROW_TOL: f64 = 1e-12;

/// Builds the reaction-diffusion model described by `params`.
pub fn schlogl(params: SchloglParams) -> Result<GeneratorModel> {
    let d = params.sites;
    if d == 0 {
        return Err(Error::Usage("site count must be at least 1".into()));
    }
    for (name, v) in [
        ("beta0", params.beta0),
        ("beta2", params.beta2),
        ("delta1", params.delta1),
        ("delta3", params.delta3),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::ModelDefinition(format!(
                "reaction constant {name} must be positive and finite, got {v}"
            )));
        }
    }
    let routing = match params.routing.clone() {
        Some(p) => {
            if p.len() != d || p.iter().any(|row| row.len() != d) {
                return Err(Error::ModelDefinition(format!(
                    "routing matrix must be {d}x{d}"
                )));
            }
            for (u, row) in p.iter().enumerate() {
                if row[u] != 0.0 {
                    return Err(Error::ModelDefinition(format!(
                        "routing matrix must have zero diagonal, got {} at site {u}",
                        row[u]
                    )));
                }
                if row.iter().any(|&x| x.is_nan() || x < 0.0 || !x.is_finite()) {
                    return Err(Error::ModelDefinition(format!(
                        "routing row {u} has a negative or non-finite entry"
                    )));
                }
                let sum: f64 = row.iter().sum();
                // A single site cannot route anywhere; its only valid row is zero.
                let want = if d == 1 { 0.0 } else { 1.0 };
                if (sum - want).abs() > ROUTING_ROW_TOL {
                    return Err(Error::ModelDefinition(format!(
                        "routing row {u} sums to {sum}, expected {want}"
                    )));
                }
            }
            p
        }
        None => {
            let off = if d > 1 { 1.0 / (d as f64 - 1.0) } else { 0.0 };
            (0..d)
                .map(|u| (0..d).map(|v| if u == v { 0.0 } else { off }).collect())
                .collect()
        }
    };

    let SchloglParams {
        beta0,
        beta2,
        delta1,
        delta3,
        ..
    } = params;
    let birth = move |k: f64| beta0 + beta2 * k * (k - 1.0);
    let death = move |k: f64| delta1 * k + delta3 * k * (k - 1.0) * (k - 2.0);

    let model = GeneratorModel::new("schlogl", d, move |i| {
        let mut row = Vec::new();
        for u in 0..d {
            let k = f64::from(i.coord(u));
            let b = birth(k);
            if let Some(target) = i.offset(u, 1)? {
                row.push(Transition::new(target, b));
            }
            if i.coord(u) > 0 {
                let a = death(k);
                if a > 0.0 {
                    if let Some(target) = i.offset(u, -1)? {
                        row.push(Transition::new(target, a));
                    }
                }
            }
        }
        for (u, routing_row) in routing.iter().enumerate() {
            if i.coord(u) == 0 {
                continue;
            }
            let k = f64::from(i.coord(u));
            for (v, &p_uv) in routing_row.iter().enumerate() {
                if v == u || p_uv == 0.0 {
                    continue;
                }
                if let Some(step) = i.offset(u, -1)? {
                    if let Some(target) = step.offset(v, 1)? {
                        row.push(Transition::new(target, k * p_uv));
                    }
                }
            }
        }
        Ok(row)
    });
    Ok(model.with_params(alloc::vec![
        ("sites".into(), d as f64),
        ("beta0".into(), beta0),
        ("beta2".into(), beta2),
        ("delta1".into(), delta1),
        ("delta3".into(), delta3),
    ]))
}

/// Interleaves two one-dimensional models on the parities of `Z_+`.
///
/// Odd states `2k+1` carry the dynamics of `odd_model` at its state `k`,
/// even states `2k` the dynamics of `even_model` at `k`; both parts keep
/// their parity, so the result is reducible.  With `bridge` set, unit-rate
/// transitions `0 ↔ 1` connect the parts.
pub fn interleaved(
    odd_model: GeneratorModel,
    even_model: GeneratorModel,
    bridge: bool,
) -> Result<GeneratorModel> {
    if odd_model.dimension() != 1 || even_model.dimension() != 1 {
        return Err(Error::Usage(
            "interleaving is defined for one-dimensional models".into(),
        ));
    }
    let odd_model = Arc::new(odd_model);
    let even_model = Arc::new(even_model);
    Ok(GeneratorModel::new("interleaved", 1, move |i| {
        let n = i.coord(0);
        let (inner, part): (&GeneratorModel, u32) = if n % 2 == 1 {
            (&odd_model, 1)
        } else {
            (&even_model, 0)
        };
        let k = StateVec::single(n / 2);
        let mut row = Vec::new();
        for t in inner.transitions_of(&k)? {
            let m = t.target.coord(0);
            let mapped = m
                .checked_mul(2)
                .and_then(|x| x.checked_add(part))
                .ok_or_else(|| {
                    Error::Resource(format!("coordinate overflow interleaving state {i}"))
                })?;
            row.push(Transition::new(StateVec::single(mapped), t.rate));
        }
        if bridge {
            if n == 0 {
                row.push(Transition::new(StateVec::single(1), 1.0));
            } else if n == 1 {
                row.push(Transition::new(StateVec::single(0), 1.0));
            }
        }
        Ok(row)
    }))
}

/// The first `n` primes by an Eratosthenes sieve.
pub fn first_n_primes(n: usize) -> Vec<u64> {
    if n == 0 {
        return Vec::new();
    }
    // p_n < n (ln n + ln ln n) for n ≥ 6; small n handled by a floor.
    let bound = if n < 6 {
        16.0
    } else {
        let nf = n as f64;
        nf * (crate::math::ln(nf) + crate::math::ln(crate::math::ln(nf)))
    } as usize
        + 1;
    let mut composite = alloc::vec![false; bound + 1];
    let mut primes = Vec::with_capacity(n);
    for p in 2..=bound {
        if composite[p] {
            continue;
        }
        primes.push(p as u64);
        if primes.len() == n {
            break;
        }
        let mut q = p * p;
        while q <= bound {
            composite[q] = true;
            q += p;
        }
    }
    debug_assert_eq!(primes.len(), n);
    primes
}

/// Pure birth chain whose rate at state `n` is the `(n+1)`-th prime.
///
/// The prime table is sieved eagerly up to `max_states`; probing a state at
/// or beyond that index reports the rate as unrepresentable.
pub fn prime_birth(max_states: usize) -> GeneratorModel {
    let primes = first_n_primes(max_states);
    pure_birth(move |n| {
        primes
            .get(n as usize)
            .map(|&p| p as f64)
            .unwrap_or(f64::NAN)
    })
    .renamed("prime_birth")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_birth_row() {
        let m = pure_birth(|n| (n + 1) as f64);
        let row = m.transitions_of(&StateVec::single(4)).unwrap();
        assert_eq!(row.len(), 1);
        assert_eq!(row[0].target, StateVec::single(5));
        assert_eq!(row[0].rate, 5.0);
    }

    #[test]
    fn birth_death_rejects_death_at_zero() {
        let err = birth_death(|_| 1.0, |_| 1.0).unwrap_err();
        assert!(matches!(err, Error::ModelDefinition(_)));
    }

    #[test]
    fn birth_death_row_orientation() {
        let m = birth_death(|n| (n + 1) as f64, |n| if n == 0 { 0.0 } else { 2.0 }).unwrap();
        let row = m.transitions_of(&StateVec::single(3)).unwrap();
        assert_eq!(row.len(), 2);
        assert_eq!(row[0].target, StateVec::single(4));
        assert_eq!(row[0].rate, 4.0);
        assert_eq!(row[1].target, StateVec::single(2));
        assert_eq!(row[1].rate, 2.0);
        assert_eq!(m.transitions_of(&StateVec::single(0)).unwrap().len(), 1);
    }

    #[test]
    fn reaction_rates_match_hand_computation() {
        // Unit constants, one site, state (3): birth 1 + 3·2 = 7,
        // death 3 + 3·2·1 = 9, total rate 16.
        let m = schlogl(SchloglParams::unit(1)).unwrap();
        let s = StateVec::single(3);
        assert_eq!(m.total_rate(&s).unwrap(), 16.0);
        let row = m.transitions_of(&s).unwrap();
        assert_eq!(row[0].rate, 7.0);
        assert_eq!(row[1].rate, 9.0);
    }

    #[test]
    fn single_site_state_two() {
        let m = schlogl(SchloglParams::unit(1)).unwrap();
        let row = m.transitions_of(&StateVec::single(2)).unwrap();
        assert_eq!(row.len(), 2);
        assert_eq!(row[0].target, StateVec::single(3));
        assert_eq!(row[0].rate, 3.0);
        assert_eq!(row[1].target, StateVec::single(1));
        assert_eq!(row[1].rate, 2.0);
    }

    #[test]
    fn diffusion_moves_one_particle() {
        let m = schlogl(SchloglParams::unit(2)).unwrap();
        let row = m.transitions_of(&StateVec::new(&[1, 0])).unwrap();
        // births at both sites, death at site 0, hop 0 → 1.
        let hop = row
            .iter()
            .find(|t| t.target == StateVec::new(&[0, 1]))
            .expect("hop transition");
        assert_eq!(hop.rate, 1.0);
    }

    #[test]
    fn diffusion_preserves_level() {
        let m = schlogl(SchloglParams::unit(3)).unwrap();
        let s = StateVec::new(&[2, 0, 5]);
        for t in m.transitions_of(&s).unwrap() {
            let dl = t.target.level() as i64 - s.level() as i64;
            assert!(dl.abs() <= 1);
            // Two-coordinate moves are hops and must be level neutral.
            let changed = t
                .target
                .coords()
                .iter()
                .zip(s.coords())
                .filter(|(a, b)| a != b)
                .count();
            if changed == 2 {
                assert_eq!(dl, 0);
            }
        }
    }

    #[test]
    fn generator_identity_level_plus_one() {
        // With φ(i) = 1 + |i| the hops cancel and Ωφ(i) = Σ_u [b(i_u) − a(i_u)].
        let m = schlogl(SchloglParams::unit(2)).unwrap();
        let phi = |s: &StateVec| 1.0 + s.level() as f64;
        let b = |k: f64| 1.0 + k * (k - 1.0);
        let a = |k: f64| k + k * (k - 1.0) * (k - 2.0);
        for i in crate::window::enumerate_window(&m, 12).unwrap().states() {
            let want: f64 = i
                .coords()
                .iter()
                .map(|&c| {
                    let k = f64::from(c);
                    b(k) - a(k)
                })
                .sum();
            let got = m.apply_generator(&phi, i).unwrap();
            assert!((got - want).abs() < 1e-9, "at {i}: {got} vs {want}");
        }
    }

    #[test]
    fn bad_routing_matrices_are_rejected() {
        let mut p = SchloglParams::unit(2);
        p.routing = Some(alloc::vec![
            alloc::vec![0.0, 0.5],
            alloc::vec![1.0, 0.0]
        ]);
        assert!(matches!(schlogl(p), Err(Error::ModelDefinition(_))));

        let mut p = SchloglParams::unit(2);
        p.routing = Some(alloc::vec![
            alloc::vec![0.5, 0.5],
            alloc::vec![1.0, 0.0]
        ]);
        assert!(matches!(schlogl(p), Err(Error::ModelDefinition(_))));
    }

    #[test]
    fn interleaving_keeps_parity() {
        let odd = birth_death(|_| 1.0, |n| if n == 0 { 0.0 } else { 1.0 }).unwrap();
        let even = pure_birth(|n| ((n + 1) * (n + 1)) as f64);
        let m = interleaved(odd, even, false).unwrap();
        for n in 0..60u32 {
            for t in m.transitions_of(&StateVec::single(n)).unwrap() {
                assert_eq!(t.target.coord(0) % 2, n % 2, "from {n}");
            }
        }
        // Even state 2k carries the quadratic chain at k.
        let row = m.transitions_of(&StateVec::single(6)).unwrap();
        assert_eq!(row.len(), 1);
        assert_eq!(row[0].target, StateVec::single(8));
        assert_eq!(row[0].rate, 16.0);
    }

    #[test]
    fn bridge_connects_the_parities() {
        let odd = birth_death(|_| 1.0, |n| if n == 0 { 0.0 } else { 1.0 }).unwrap();
        let even = pure_birth(|n| (n + 1) as f64);
        let m = interleaved(odd, even, true).unwrap();
        let from0 = m.transitions_of(&StateVec::single(0)).unwrap();
        assert!(from0.iter().any(|t| t.target == StateVec::single(1)));
        let from1 = m.transitions_of(&StateVec::single(1)).unwrap();
        assert!(from1.iter().any(|t| t.target == StateVec::single(0)));
    }

    #[test]
    fn prime_table_is_correct() {
        assert_eq!(
            first_n_primes(10),
            alloc::vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
        );
        let p = first_n_primes(100_000);
        assert_eq!(p.len(), 100_000);
        assert_eq!(p[99_999], 1_299_709);
    }

    #[test]
    fn prime_birth_rates_and_cutoff() {
        let m = prime_birth(100);
        let row = m.transitions_of(&StateVec::single(0)).unwrap();
        assert_eq!(row[0].rate, 2.0);
        assert!(matches!(
            m.transitions_of(&StateVec::single(100)),
            Err(Error::RateOverflow(_))
        ));
    }
}
