//! Reproducible simulation of the embedded jump chain.
//!
//! Holding times are exponential with the state's total rate, targets are
//! chosen proportionally to individual rates.  Randomness comes from a
//! counter-based generator keyed by `(seed, stream)`, so any trial of any
//! batch can be replayed in isolation and results are independent of
//! threading or evaluation order.
//!
//! Explosion never literally happens in finitely many simulated jumps; what
//! a path can show is the signature of explosion, a jump budget exhausted
//! while the remaining inverse rates sum to almost nothing.  A finite
//! inverse-rate sum along the whole trajectory is exactly what separates
//! explosive paths from honest ones, so [`flag_explosive`] tests the tail
//! of that sum against a small threshold.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::generator::{GeneratorModel, StateVec};
use crate::math;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// 64-bit avalanche mix (the splitmix64 finalizer).
fn mix(z: u64) -> u64 {
    let z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    let z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based uniform generator; each draw hashes `key + counter`.
#[derive(Debug, Clone)]
struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    fn new(seed: u64, stream: u64) -> Self {
        CounterRng {
            key: mix(seed ^ mix(stream.wrapping_mul(GOLDEN))),
            counter: 0,
        }
    }

    /// Uniform draw in the open interval (0, 1).
    fn uniform(&mut self) -> f64 {
        let c = self.counter;
        self.counter += 1;
        let bits = mix(self.key.wrapping_add(c.wrapping_mul(GOLDEN)));
        ((bits >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    fn exponential(&mut self, rate: f64) -> f64 {
        -math::ln(self.uniform()) / rate
    }
}

/// Why a simulated path ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Terminal {
    /// The current state has no outgoing transitions.
    Absorbed,
    /// The next holding time would cross the time horizon.
    TimeCapReached,
    /// The jump budget ran out, or rates left the representable range.
    JumpCapReached,
}

impl Terminal {
    pub fn as_str(self) -> &'static str {
        match self {
            Terminal::Absorbed => "absorbed",
            Terminal::TimeCapReached => "time-cap",
            Terminal::JumpCapReached => "jump-cap",
        }
    }
}

/// One simulated trajectory of the jump chain.
///
/// `states`, `jump_times` and `inverse_rates` are aligned per visited
/// state; `jump_times[0]` is 0.  The inverse rate of an absorbing state is
/// infinite, and a state whose rates overflow records an inverse rate of 0
/// together with a diagnostic.
#[derive(Debug, Clone)]
pub struct JumpPath {
    pub states: Vec<StateVec>,
    pub jump_times: Vec<f64>,
    pub inverse_rates: Vec<f64>,
    pub inverse_rate_sum: f64,
    pub terminal: Terminal,
    pub diagnostic: Option<String>,
}

/// Horizon and budget for one simulated path.
#[derive(Debug, Clone)]
pub struct SimOptions {
    pub t_max: f64,
    pub max_jumps: u64,
    /// Tail inverse-rate mass below which a budget-capped path is flagged.
    pub epsilon: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            t_max: 1_000.0,
            max_jumps: 100_000,
            epsilon: 1e-6,
        }
    }
}

/// Simulates one path of the jump chain started at `initial`.
///
/// The same `(model, initial, seed, options)` always yields the same path.
/// Rates that overflow mid-path end the trajectory as if the jump budget
/// were exhausted, with the cause recorded in `diagnostic`; such states
/// have unboundedly large rates, so their inverse rate is recorded as 0.
pub fn simulate_path(
    model: &GeneratorModel,
    initial: &StateVec,
    seed: u64,
    opts: &SimOptions,
) -> Result<JumpPath> {
    if initial.dimension() != model.dimension() {
        return Err(Error::Usage(format!(
            "initial state {initial} has dimension {}, model has {}",
            initial.dimension(),
            model.dimension()
        )));
    }
    let horizon_ok = opts.t_max.is_finite() && opts.t_max > 0.0;
    if !horizon_ok || opts.max_jumps == 0 {
        return Err(Error::Usage(
            "time horizon and jump budget must be positive".into(),
        ));
    }
    let mut rng = CounterRng::new(seed, 0);
    let mut states = alloc::vec![initial.clone()];
    let mut jump_times = alloc::vec![0.0f64];
    let mut inverse_rates: Vec<f64> = Vec::new();
    let mut inverse_rate_sum = 0.0f64;
    let mut t = 0.0f64;
    let mut jumps = 0u64;
    let (terminal, diagnostic) = loop {
        let current = states.last().expect("path is never empty");
        let row = match model.transitions_of(current) {
            Ok(r) => r,
            Err(e) if e.is_representability() => {
                inverse_rates.push(0.0);
                break (Terminal::JumpCapReached, Some(e.to_string()));
            }
            Err(e) => return Err(e),
        };
        let q: f64 = row.iter().map(|t| t.rate).sum();
        if q == 0.0 {
            inverse_rates.push(f64::INFINITY);
            inverse_rate_sum = f64::INFINITY;
            break (Terminal::Absorbed, None);
        }
        if !q.is_finite() {
            inverse_rates.push(0.0);
            break (
                Terminal::JumpCapReached,
                Some(format!("total rate at {current} overflows")),
            );
        }
        inverse_rates.push(1.0 / q);
        inverse_rate_sum += 1.0 / q;
        let holding = rng.exponential(q);
        if t + holding > opts.t_max {
            break (Terminal::TimeCapReached, None);
        }
        t += holding;
        let mark = rng.uniform() * q;
        let mut acc = 0.0;
        let mut target = &row[row.len() - 1].target;
        for tr in &row {
            acc += tr.rate;
            if mark <= acc {
                target = &tr.target;
                break;
            }
        }
        states.push(target.clone());
        jump_times.push(t);
        jumps += 1;
        if jumps == opts.max_jumps {
            let current = states.last().expect("just pushed");
            let inv = match model.transitions_of(current) {
                Ok(r) => {
                    let q: f64 = r.iter().map(|t| t.rate).sum();
                    if q == 0.0 {
                        f64::INFINITY
                    } else if q.is_finite() {
                        1.0 / q
                    } else {
                        0.0
                    }
                }
                Err(_) => 0.0,
            };
            inverse_rates.push(inv);
            inverse_rate_sum += inv;
            break (Terminal::JumpCapReached, None);
        }
    };
    Ok(JumpPath {
        states,
        jump_times,
        inverse_rates,
        inverse_rate_sum,
        terminal,
        diagnostic,
    })
}

/// Whether a path shows the signature of explosion: the jump budget was
/// exhausted while the inverse rates over the second half of the visited
/// states sum to less than `epsilon`.
pub fn flag_explosive(path: &JumpPath, epsilon: f64) -> bool {
    if path.terminal != Terminal::JumpCapReached {
        return false;
    }
    let tail: f64 = path.inverse_rates[path.inverse_rates.len() / 2..]
        .iter()
        .sum();
    tail < epsilon
}

/// Monte Carlo estimate of the probability that a path from `initial`
/// shows the explosion signature.
#[derive(Debug, Clone, Copy)]
pub struct ExplosionEstimate {
    pub trials: u64,
    pub flagged: u64,
    pub fraction: f64,
    /// 95% Wilson score interval for the flagged fraction.
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub absorbed: u64,
    pub time_capped: u64,
    pub jump_capped: u64,
}

const WILSON_Z: f64 = 1.959_963_984_540_054;

/// Runs `trials` independent paths and reports the flagged fraction with a
/// 95% Wilson score interval.  Trial `k` uses random stream `k`, so any
/// single trial can be reproduced with [`simulate_path`] and the seed
/// `mix(seed + k·GOLDEN)` reported by the path-dump tooling.
pub fn estimate_explosion_probability(
    model: &GeneratorModel,
    initial: &StateVec,
    trials: u64,
    seed: u64,
    opts: &SimOptions,
) -> Result<ExplosionEstimate> {
    if trials == 0 {
        return Err(Error::Usage("trial count must be positive".into()));
    }
    let mut flagged = 0u64;
    let mut absorbed = 0u64;
    let mut time_capped = 0u64;
    let mut jump_capped = 0u64;
    for k in 0..trials {
        let path = simulate_path(model, initial, trial_seed(seed, k), opts)?;
        match path.terminal {
            Terminal::Absorbed => absorbed += 1,
            Terminal::TimeCapReached => time_capped += 1,
            Terminal::JumpCapReached => jump_capped += 1,
        }
        if flag_explosive(&path, opts.epsilon) {
            flagged += 1;
        }
    }
    let n = trials as f64;
    let p = flagged as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z * math::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    Ok(ExplosionEstimate {
        trials,
        flagged,
        fraction: p,
        ci_lower: (center - half).max(0.0).min(p),
        ci_upper: (center + half).min(1.0).max(p),
        absorbed,
        time_capped,
        jump_capped,
    })
}

/// The per-trial seed used by [`estimate_explosion_probability`].
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    mix(seed.wrapping_add(trial.wrapping_mul(GOLDEN)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::Transition;
    use crate::zoo;

    fn pure_death() -> GeneratorModel {
        GeneratorModel::new("pure_death", 1, |i| {
            Ok(match i.offset(0, -1)? {
                Some(t) => alloc::vec![Transition::new(t, 1.0)],
                None => alloc::vec![],
            })
        })
    }

    #[test]
    fn uniform_draws_are_in_the_open_interval() {
        let mut rng = CounterRng::new(7, 0);
        let mut sum = 0.0;
        for _ in 0..100_000 {
            let u = rng.uniform();
            assert!(u > 0.0 && u < 1.0);
            sum += u;
        }
        let mean = sum / 100_000.0;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn exponential_draws_have_the_right_scale() {
        let mut rng = CounterRng::new(11, 3);
        let mut sum = 0.0;
        for _ in 0..50_000 {
            sum += rng.exponential(2.0);
        }
        let mean = sum / 50_000.0;
        assert!((mean - 0.5).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn paths_are_reproducible() {
        let m = zoo::birth_death(|_| 2.0, |n| if n == 0 { 0.0 } else { 1.0 }).unwrap();
        let opts = SimOptions {
            t_max: 50.0,
            ..SimOptions::default()
        };
        let a = simulate_path(&m, &StateVec::single(0), 99, &opts).unwrap();
        let b = simulate_path(&m, &StateVec::single(0), 99, &opts).unwrap();
        assert_eq!(a.states, b.states);
        assert_eq!(a.jump_times, b.jump_times);
        let c = simulate_path(&m, &StateVec::single(0), 100, &opts).unwrap();
        assert_ne!(a.jump_times, c.jump_times);
    }

    #[test]
    fn absorption_is_detected() {
        let m = pure_death();
        let p = simulate_path(&m, &StateVec::single(5), 1, &SimOptions::default()).unwrap();
        assert_eq!(p.terminal, Terminal::Absorbed);
        assert_eq!(p.states.len(), 6);
        assert_eq!(p.states.last().unwrap(), &StateVec::single(0));
        assert_eq!(p.inverse_rates.len(), p.states.len());
        assert!(p.inverse_rate_sum.is_infinite());
        assert!(!flag_explosive(&p, 1e-6));
    }

    #[test]
    fn time_cap_keeps_the_last_state() {
        let m = zoo::birth_death(|_| 1.0, |n| if n == 0 { 0.0 } else { 1.0 }).unwrap();
        let opts = SimOptions {
            t_max: 5.0,
            ..SimOptions::default()
        };
        let p = simulate_path(&m, &StateVec::single(0), 3, &opts).unwrap();
        assert_eq!(p.terminal, Terminal::TimeCapReached);
        assert!(p.jump_times.iter().all(|&t| t <= 5.0));
        assert_eq!(p.states.len(), p.jump_times.len());
        assert_eq!(p.inverse_rates.len(), p.states.len());
        assert!(!flag_explosive(&p, 1e-6));
    }

    #[test]
    fn jump_cap_without_stalling_is_not_flagged() {
        let m = zoo::pure_birth(|n| (n + 1) as f64);
        let opts = SimOptions {
            t_max: 1e9,
            max_jumps: 5_000,
            epsilon: 1e-6,
        };
        let p = simulate_path(&m, &StateVec::single(0), 17, &opts).unwrap();
        assert_eq!(p.terminal, Terminal::JumpCapReached);
        assert_eq!(p.states.len(), 5_001);
        assert!(!flag_explosive(&p, opts.epsilon));
    }

    #[test]
    fn geometric_rates_are_flagged_explosive() {
        let m = zoo::pure_birth(|n| 2f64.powi(n as i32));
        let p = simulate_path(&m, &StateVec::single(0), 5, &SimOptions::default()).unwrap();
        assert_eq!(p.terminal, Terminal::JumpCapReached);
        assert!(p.diagnostic.is_some(), "rates overflow before the budget");
        assert!(p.states.len() < 2_000);
        assert!(flag_explosive(&p, 1e-6));
    }

    #[test]
    fn estimates_are_deterministic_and_sane() {
        let m = zoo::pure_birth(|n| 2f64.powi(n as i32));
        let e = estimate_explosion_probability(
            &m,
            &StateVec::single(0),
            50,
            1234,
            &SimOptions::default(),
        )
        .unwrap();
        assert_eq!(e.trials, 50);
        assert_eq!(e.flagged, 50);
        assert_eq!(e.jump_capped, 50);
        assert!(e.ci_lower > 0.9 && e.ci_upper > 0.999_999);

        let honest = zoo::pure_birth(|n| (n + 1) as f64);
        let opts = SimOptions {
            t_max: 1e9,
            max_jumps: 4_000,
            epsilon: 1e-6,
        };
        let e2 = estimate_explosion_probability(&honest, &StateVec::single(0), 20, 1234, &opts)
            .unwrap();
        assert_eq!(e2.flagged, 0);
        assert_eq!(e2.fraction, 0.0);
        assert!(e2.ci_lower == 0.0 && e2.ci_upper < 0.2);
    }

    #[test]
    fn usage_errors() {
        let m = pure_death();
        assert!(matches!(
            simulate_path(&m, &StateVec::new(&[1, 1]), 0, &SimOptions::default()),
            Err(Error::Usage(_))
        ));
        assert!(matches!(
            estimate_explosion_probability(&m, &StateVec::single(1), 0, 0, &SimOptions::default()),
            Err(Error::Usage(_))
        ));
    }
}
