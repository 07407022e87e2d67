//! Randomized invariants across the engines, plus exhaustive structural
//! identities that hold state by state on whole windows.

use proptest::prelude::*;
use qproc_core::{
    build_delta_chain, build_embedded_matrix, check_nonuniqueness_certificate,
    check_uniqueness_certificate, classify_series, enumerate_window, estimate_explosion_probability,
    maximal_solution_bracket, resolvent_mass, return_probability_bracket, scan_drift_constant,
    simulate_path, BracketOptions, CertVerdict, CertificateKind, CheckKind, CreditOptions,
    GeneratorModel, LyapunovCertificate, SeriesClass, SimOptions, StateVec, WindowFamily,
};
use std::sync::Arc;

const POOL_SIZE: usize = 6;

/// Closed pool of well-behaved models covering the structural variety the
/// engines must handle: sub/super-linear birth, pull-back, several sites,
/// and a reducible two-part chain.
fn pool_model(index: usize) -> GeneratorModel {
    match index {
        0 => qproc_core::zoo::pure_birth(|n| (n + 1) as f64),
        1 => qproc_core::zoo::pure_birth(|n| ((n + 1) * (n + 1)) as f64),
        2 => qproc_core::zoo::birth_death(|n| (n + 1) as f64, |n| n as f64).unwrap(),
        3 => qproc_core::zoo::birth_death(|_| 1.0, |n| if n == 0 { 0.0 } else { 1.0 }).unwrap(),
        4 => qproc_core::zoo::schlogl(qproc_core::zoo::SchloglParams::unit(2)).unwrap(),
        _ => qproc_core::zoo::interleaved(
            qproc_core::zoo::birth_death(|_| 1.0, |n| if n == 0 { 0.0 } else { 1.0 }).unwrap(),
            qproc_core::zoo::pure_birth(|n| ((n + 1) * (n + 1)) as f64),
            false,
        )
        .unwrap(),
    }
}

fn arb_model() -> impl Strategy<Value = GeneratorModel> {
    (0..POOL_SIZE).prop_map(pool_model)
}

fn arb_state(dimension: usize, max_level: u32) -> impl Strategy<Value = StateVec> {
    proptest::collection::vec(0..=max_level, dimension)
        .prop_map(|coords| StateVec::new(&coords))
}

/// Budget-limited options so randomized cases stay fast.
fn quick_opts() -> BracketOptions {
    BracketOptions {
        tol: 1e-12,
        max_sweeps: 50_000,
        credit: CreditOptions {
            max_steps: 2_000,
            ..CreditOptions::default()
        },
    }
}

/// Options whose boundary credit is always zero, turning the lower side
/// into the plain absorbing-exterior solution with exact cap monotonicity.
fn zero_credit_opts() -> BracketOptions {
    BracketOptions {
        tol: 1e-12,
        max_sweeps: 50_000,
        credit: CreditOptions {
            max_steps: 8,
            floor: 2.0,
            ..CreditOptions::default()
        },
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generator_action_is_linear(
        index in 0..POOL_SIZE,
        alpha in -3.0f64..3.0,
        beta in -3.0f64..3.0,
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
    ) {
        let model = pool_model(index);
        let window = enumerate_window(&model, 8).unwrap();
        let f = |s: &StateVec| a * (s.level() as f64) * (s.level() as f64) + 1.0;
        let g = |s: &StateVec| b * (s.level() as f64) - 2.0;
        let combined = |s: &StateVec| alpha * f(s) + beta * g(s);
        for state in window.states() {
            let lhs = model.apply_generator(&combined, state).unwrap();
            let rhs = alpha * model.apply_generator(&f, state).unwrap()
                + beta * model.apply_generator(&g, state).unwrap();
            prop_assert!(
                (lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()),
                "at {state}: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn transition_rows_are_pure(index in 0..POOL_SIZE, level in 0u32..40) {
        let model = pool_model(index);
        let state = if model.dimension() == 1 {
            StateVec::single(level)
        } else {
            StateVec::new(&[level / 2, level - level / 2])
        };
        let first = model.transitions_of(&state).unwrap();
        let second = model.transitions_of(&state).unwrap();
        prop_assert_eq!(first.len(), second.len());
        for (x, y) in first.iter().zip(&second) {
            prop_assert_eq!(&x.target, &y.target);
            prop_assert_eq!(x.rate.to_bits(), y.rate.to_bits());
            prop_assert!(x.rate > 0.0 && x.rate.is_finite());
            prop_assert_ne!(&x.target, &state);
        }
    }

    #[test]
    fn windows_nest_and_boundaries_close(
        index in 0..POOL_SIZE,
        small in 3u64..20,
        extra in 1u64..20,
    ) {
        let model = pool_model(index);
        let inner = enumerate_window(&model, small).unwrap();
        let outer = enumerate_window(&model, small + extra).unwrap();
        for state in inner.states() {
            prop_assert!(state.level() <= small);
            prop_assert!(outer.contains(state), "{state} lost when the window grew");
        }
        for state in inner.boundary() {
            prop_assert!(state.level() > small);
        }
        for state in inner.states() {
            for t in model.transitions_of(state).unwrap() {
                let known = inner.contains(&t.target)
                    || inner.boundary_index_of(&t.target).is_some();
                prop_assert!(known, "target {} escapes the bookkeeping", t.target);
            }
        }
    }

    #[test]
    fn embedded_rows_partition_unit_mass(
        index in 0..POOL_SIZE,
        lambda in 0.5f64..2.0,
        cap in 3u64..25,
    ) {
        let model = pool_model(index);
        let window = enumerate_window(&model, cap).unwrap();
        let matrix = build_embedded_matrix(&model, lambda, window).unwrap();
        for row in matrix.rows() {
            let interior: f64 = row.interior.iter().map(|&(_, p)| p).sum();
            let exterior: f64 = row.exterior.iter().map(|&(_, p)| p).sum();
            prop_assert!(row.killing >= 0.0);
            prop_assert!(row.interior.iter().all(|&(_, p)| p >= 0.0));
            prop_assert!(row.exterior.iter().all(|&(_, p)| p >= 0.0));
            prop_assert!((interior + exterior + row.killing - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn brackets_stay_in_the_unit_interval(
        index in 0..POOL_SIZE,
        lambda in 0.5f64..2.0,
        cap in 5u64..40,
    ) {
        let model = pool_model(index);
        let bracket = maximal_solution_bracket(&model, lambda, cap, &quick_opts()).unwrap();
        let mut widest = 0.0f64;
        for (lo, up) in bracket.lower.iter().zip(&bracket.upper) {
            prop_assert!(*lo >= 0.0 && *up <= 1.0 && lo <= up, "[{lo}, {up}]");
            widest = widest.max(up - lo);
        }
        prop_assert!((bracket.gap - widest).abs() < 1e-15);
    }

    #[test]
    fn cap_refinement_tightens_both_sides(
        index in 0..POOL_SIZE,
        lambda in 0.5f64..2.0,
        cap in 5u64..25,
    ) {
        let model = pool_model(index);
        let opts = zero_credit_opts();
        let coarse = maximal_solution_bracket(&model, lambda, cap, &opts).unwrap();
        let fine = maximal_solution_bracket(&model, lambda, 2 * cap, &opts).unwrap();
        for (i, state) in coarse.window.states().iter().enumerate() {
            let j = fine.window.index_of(state).unwrap();
            prop_assert!(
                fine.upper[j] <= coarse.upper[i] + 1e-9,
                "upper grew at {state}: {} vs {}",
                fine.upper[j],
                coarse.upper[i]
            );
            prop_assert!(
                fine.lower[j] >= coarse.lower[i] - 1e-9,
                "lower fell at {state}: {} vs {}",
                fine.lower[j],
                coarse.lower[i]
            );
        }
    }

    #[test]
    fn mass_and_escape_are_complementary(
        index in 0..POOL_SIZE,
        lambda in 0.5f64..2.0,
        cap in 5u64..25,
    ) {
        let model = pool_model(index);
        let bracket = maximal_solution_bracket(&model, lambda, cap, &quick_opts()).unwrap();
        let mass = resolvent_mass(&model, lambda, cap, 100_000).unwrap();
        for (i, m) in mass.iter().enumerate() {
            prop_assert!(*m >= -1e-15 && *m <= 1.0 + 1e-12);
            let total = m + bracket.upper[i];
            prop_assert!(
                (total - 1.0).abs() < 1e-6,
                "state {}: killed {} + escaped {} is not unit",
                bracket.window.states()[i],
                m,
                bracket.upper[i]
            );
            prop_assert!(m + bracket.lower[i] <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn return_deficit_matches_weighted_escape(
        index in 0..POOL_SIZE,
        lambda in 0.5f64..2.0,
        cap in 5u64..25,
        decay in 0.3f64..0.95,
    ) {
        let model = pool_model(index);
        let opts = quick_opts();
        let chain = build_delta_chain(&model, lambda, cap, decay, &opts.credit).unwrap();
        let ret = return_probability_bracket(&chain, &opts);
        prop_assert!(ret.lower >= -1e-12 && ret.upper <= 1.0 + 1e-12);
        prop_assert!(ret.lower <= ret.upper + 1e-12);

        let weights = chain.return_weights();
        let sum: f64 = weights.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        prop_assert!(weights.iter().all(|w| *w > 0.0));

        let bracket = maximal_solution_bracket(&model, lambda, cap, &opts).unwrap();
        let escape_upper: f64 = weights
            .iter()
            .zip(&bracket.upper)
            .map(|(w, z)| w * z)
            .sum();
        let escape_lower: f64 = weights
            .iter()
            .zip(&bracket.lower)
            .map(|(w, z)| w * z)
            .sum();
        prop_assert!(
            1.0 - ret.upper <= escape_upper + 1e-8,
            "deficit {} exceeds weighted escape {}",
            1.0 - ret.upper,
            escape_upper
        );
        prop_assert!(1.0 - ret.lower >= escape_lower - 1e-8);
    }

    #[test]
    fn scanned_constant_supports_its_own_drift_check(
        index in 0..POOL_SIZE,
        cap in 10u64..30,
    ) {
        let model = pool_model(index);
        let phi = |s: &StateVec| 1.0 + s.level() as f64;
        let window = enumerate_window(&model, cap).unwrap();
        let scanned =
            scan_drift_constant(&model, &phi, &window, CertificateKind::Uniqueness).unwrap();
        if let Some(c) = scanned {
            let cert = LyapunovCertificate {
                phi: Arc::new(phi),
                drift_constant: c,
                kind: CertificateKind::Uniqueness,
                bound: None,
                family: WindowFamily::LevelCaps(vec![cap]),
            };
            let report = check_uniqueness_certificate(&model, &cert).unwrap();
            let drift_failures = report
                .violations
                .iter()
                .filter(|v| v.check == CheckKind::Drift)
                .count();
            prop_assert_eq!(drift_failures, 0, "scanned c = {} still violates", c);
        }
    }

    #[test]
    fn uniqueness_verdict_ignores_drift_scaling(
        alpha in 0.25f64..4.0,
        c in 0.5f64..2.0,
    ) {
        let model = pool_model(0);
        let baseline = LyapunovCertificate {
            phi: Arc::new(|s: &StateVec| 1.0 + s.level() as f64),
            drift_constant: c,
            kind: CertificateKind::Uniqueness,
            bound: None,
            family: WindowFamily::LevelCaps(vec![30, 60]),
        };
        let scaled = LyapunovCertificate {
            phi: Arc::new(move |s: &StateVec| alpha * (1.0 + s.level() as f64)),
            ..baseline.clone()
        };
        let a = check_uniqueness_certificate(&model, &baseline).unwrap();
        let b = check_uniqueness_certificate(&model, &scaled).unwrap();
        prop_assert_eq!(a.verdict, b.verdict);
    }

    #[test]
    fn uniqueness_support_survives_upward_shifts(shift in 0.0f64..100.0) {
        let model = pool_model(0);
        let cert = LyapunovCertificate {
            phi: Arc::new(move |s: &StateVec| 1.0 + s.level() as f64 + shift),
            drift_constant: 1.0,
            kind: CertificateKind::Uniqueness,
            bound: None,
            family: WindowFamily::LevelCaps(vec![30, 60]),
        };
        let report = check_uniqueness_certificate(&model, &cert).unwrap();
        prop_assert_eq!(report.verdict, CertVerdict::Supported);
    }

    #[test]
    fn simulated_paths_are_well_formed(
        index in 0..POOL_SIZE,
        seed in any::<u64>(),
    ) {
        let model = pool_model(index);
        let initial = StateVec::origin(model.dimension());
        let opts = SimOptions {
            t_max: 50.0,
            max_jumps: 2_000,
            epsilon: 1e-6,
        };
        let path = simulate_path(&model, &initial, seed, &opts).unwrap();
        prop_assert_eq!(path.states.len(), path.jump_times.len());
        prop_assert_eq!(path.states.len(), path.inverse_rates.len());
        prop_assert!(!path.states.is_empty());
        for pair in path.jump_times.windows(2) {
            prop_assert!(pair[0] < pair[1], "jump times not increasing");
        }
        prop_assert!(path.jump_times.iter().all(|t| *t <= opts.t_max));
        let replay = simulate_path(&model, &initial, seed, &opts).unwrap();
        prop_assert_eq!(path.jump_times, replay.jump_times);
    }

    #[test]
    fn explosion_estimates_keep_ordered_intervals(
        index in 0..POOL_SIZE,
        seed in any::<u64>(),
        trials in 1u64..16,
    ) {
        let model = pool_model(index);
        let initial = StateVec::origin(model.dimension());
        let opts = SimOptions {
            t_max: 20.0,
            max_jumps: 500,
            epsilon: 1e-6,
        };
        let est = estimate_explosion_probability(&model, &initial, trials, seed, &opts).unwrap();
        prop_assert_eq!(est.trials, trials);
        prop_assert!(est.ci_lower >= 0.0 && est.ci_upper <= 1.0);
        prop_assert!(est.ci_lower <= est.fraction && est.fraction <= est.ci_upper);
        prop_assert_eq!(est.absorbed + est.time_capped + est.jump_capped, trials);
    }

    #[test]
    fn state_ordering_is_total_and_levels_add_up(
        s in arb_state(3, 50),
        t in arb_state(3, 50),
    ) {
        let by_level: u64 = s.coords().iter().map(|&c| c as u64).sum();
        prop_assert_eq!(s.level(), by_level);
        match s.cmp(&t) {
            core::cmp::Ordering::Equal => prop_assert_eq!(s.coords(), t.coords()),
            core::cmp::Ordering::Less => prop_assert!(t.cmp(&s).is_gt()),
            core::cmp::Ordering::Greater => prop_assert!(t.cmp(&s).is_lt()),
        }
    }
}

#[test]
fn nonuniqueness_support_persists_at_smaller_constants() {
    let model = pool_model(1);
    let quadratic_tail: f64 = core::f64::consts::PI * core::f64::consts::PI / 6.0 - 1.0;
    let phi = move |s: &StateVec| {
        let k = s.level();
        let partial: f64 = (1..k).map(|j| 1.0 / (((j + 1) * (j + 1)) as f64)).sum();
        0.5 + partial - quadratic_tail
    };
    for c in [1.0, 0.5, 0.25] {
        let cert = LyapunovCertificate {
            phi: Arc::new(phi),
            drift_constant: c,
            kind: CertificateKind::NonUniqueness,
            bound: Some(0.5),
            family: WindowFamily::LevelCaps(vec![200]),
        };
        let report = check_nonuniqueness_certificate(&model, &cert).unwrap();
        assert_eq!(
            report.verdict,
            CertVerdict::Supported,
            "c = {c}: {:?}",
            report.violations.first()
        );
    }
}

#[test]
fn series_verdicts_do_not_flip_when_the_sample_doubles() {
    let primes = qproc_core::zoo::first_n_primes(20_000);
    let fixtures: Vec<(&str, Box<dyn Fn(u64) -> f64>)> = vec![
        ("harmonic", Box::new(|n| 1.0 / (n + 1) as f64)),
        ("quadratic", Box::new(|n| 1.0 / ((n + 1) * (n + 1)) as f64)),
        (
            "prime reciprocals",
            Box::new(move |n| 1.0 / primes[n as usize] as f64),
        ),
        (
            "log-squared damped",
            Box::new(|n| {
                let x = (n + 1) as f64;
                1.0 / (x * ((x + 1.0).ln() * (x + 1.0).ln()))
            }),
        ),
    ];
    for (name, terms) in &fixtures {
        for n_max in [2_000u64, 4_000, 8_000] {
            let coarse = classify_series(&**terms, n_max).unwrap();
            let fine = classify_series(&**terms, 2 * n_max).unwrap();
            if coarse.class != SeriesClass::Inconclusive {
                assert_eq!(
                    coarse.class, fine.class,
                    "{name} flipped between {n_max} and {}",
                    2 * n_max
                );
            }
        }
    }
}

#[test]
fn lower_bounds_rise_with_cap_under_full_credits() {
    let opts = BracketOptions::default();
    for index in 0..POOL_SIZE {
        let model = pool_model(index);
        let coarse = maximal_solution_bracket(&model, 1.0, 25, &opts).unwrap();
        let fine = maximal_solution_bracket(&model, 1.0, 50, &opts).unwrap();
        for (i, state) in coarse.window.states().iter().enumerate() {
            let j = fine.window.index_of(state).unwrap();
            assert!(
                fine.lower[j] >= coarse.lower[i] - 1e-8,
                "model {index} at {state}: {} vs {}",
                fine.lower[j],
                coarse.lower[i]
            );
            assert!(fine.upper[j] <= coarse.upper[i] + 1e-8);
        }
    }
}

#[test]
fn multi_site_drift_of_level_reduces_to_reaction_imbalance() {
    // For φ = 1 + level the hop terms cancel sitewise, leaving only the
    // birth/death imbalance summed over sites.
    let phi = |s: &StateVec| 1.0 + s.level() as f64;
    let unit_birth = |k: u64| 1.0 + (k * k.saturating_sub(1)) as f64;
    let unit_death = |k: u64| (k + k * k.saturating_sub(1) * k.saturating_sub(2)) as f64;
    for (sites, cap) in [(1usize, 200u64), (2, 200), (3, 60)] {
        let model = qproc_core::zoo::schlogl(qproc_core::zoo::SchloglParams::unit(sites)).unwrap();
        let window = enumerate_window(&model, cap).unwrap();
        for state in window.states() {
            let omega = model.apply_generator(&phi, state).unwrap();
            let expected: f64 = (0..sites)
                .map(|u| {
                    let k = state.coord(u) as u64;
                    unit_birth(k) - unit_death(k)
                })
                .sum();
            assert!(
                (omega - expected).abs() <= 1e-9 * (1.0 + expected.abs()),
                "sites {sites}, state {state}: {omega} vs {expected}"
            );
        }
    }
}

#[test]
fn interleaved_parts_never_exchange_states() {
    let bounded =
        qproc_core::zoo::birth_death(|_| 1.0, |n| if n == 0 { 0.0 } else { 1.0 }).unwrap();
    let quadratic = qproc_core::zoo::pure_birth(|n| ((n + 1) * (n + 1)) as f64);
    let model = qproc_core::zoo::interleaved(bounded.clone(), quadratic.clone(), false).unwrap();
    for n in 0u32..10_000 {
        let state = StateVec::single(n);
        for t in model.transitions_of(&state).unwrap() {
            assert_eq!(
                t.target.coord(0) % 2,
                n % 2,
                "{state} jumps across parities to {}",
                t.target
            );
        }
    }

    let bridged = qproc_core::zoo::interleaved(bounded, quadratic, true).unwrap();
    for n in 0u32..200 {
        let state = StateVec::single(n);
        for t in bridged.transitions_of(&state).unwrap() {
            let crosses = t.target.coord(0) % 2 != n % 2;
            assert!(
                !crosses || (n <= 1 && t.target.coord(0) <= 1),
                "unexpected crossing {state} to {}",
                t.target
            );
        }
    }
}
