use maxrel::evaluate::hitting_within;
use maxrel::oracle::min_hitting_within;
use maxrel::random::{random_model, random_policy, random_rational_model};
use maxrel::{
    absorbing_set_of_policy, check_improved_oe, compute_largest_absorbing,
    enumerate_restricted_policies, evaluate_in_class, evaluate_policy_pes, simulate_survival,
    solve, validate_model, BigRational, EvalOptions, FailureVector, ModelSpec, PolicyIter,
    SolveOptions, StateId, StationaryPolicy,
};
use num_traits::Zero;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn model_from(seed: u64) -> ModelSpec<f64> {
    random_model(&mut ChaCha8Rng::seed_from_u64(seed))
}

fn in_class_policy(m: &ModelSpec<f64>, seed: u64) -> StationaryPolicy {
    let an = compute_largest_absorbing(m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let choice = m
        .states()
        .map(|i| {
            let acts = an.restricted(i);
            acts[rng.random_range(0..acts.len())]
        })
        .collect();
    StationaryPolicy::new(m, choice).unwrap()
}

/// Componentwise minimum of `P_i(τ_B <= horizon)` over all deterministic Markov policies, i.e.
/// one action per state and time step, enumerated outright.
fn brute_force_min_hitting(m: &ModelSpec<f64>, horizon: usize) -> Vec<f64> {
    let stationary: Vec<StationaryPolicy> = PolicyIter::all(m, 10_000).unwrap().collect();
    let n = m.n_states();
    let mut best = vec![f64::INFINITY; n];
    let mut plan = vec![0usize; horizon];
    loop {
        let mut x: Vec<f64> = m
            .states()
            .map(|i| if m.is_failed(i) { 1.0 } else { 0.0 })
            .collect();
        for t in (0..horizon).rev() {
            let g = &stationary[plan[t]];
            x = m
                .states()
                .map(|i| {
                    if m.is_failed(i) {
                        1.0
                    } else {
                        m.policy_row(g, i).iter().zip(&x).map(|(p, v)| p * v).sum()
                    }
                })
                .collect();
        }
        for (b, v) in best.iter_mut().zip(&x) {
            *b = b.min(*v);
        }
        let mut k = 0;
        while k < horizon {
            plan[k] += 1;
            if plan[k] < stationary.len() {
                break;
            }
            plan[k] = 0;
            k += 1;
        }
        if k == horizon {
            return best;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 96, ..ProptestConfig::default() })]

    #[test]
    fn file_round_trip_preserves_models(seed in any::<u64>()) {
        let m = model_from(seed);
        let back = validate_model::<f64>(&m.to_raw(), 1e-9).unwrap();
        prop_assert_eq!(&back, &m);
        let text = m.to_raw().to_json_pretty();
        let reparsed = maxrel::RawModel::from_json(&text).unwrap();
        prop_assert_eq!(validate_model::<f64>(&reparsed, 1e-9).unwrap(), m);

        let r = random_rational_model(&mut ChaCha8Rng::seed_from_u64(seed));
        let text = r.to_raw().to_json_pretty();
        let back = validate_model::<BigRational>(&maxrel::RawModel::from_json(&text).unwrap(), 0.0).unwrap();
        prop_assert_eq!(back, r);
    }

    #[test]
    fn peeling_layers_partition_survivors(seed in any::<u64>()) {
        let m = model_from(seed);
        let an = compute_largest_absorbing(&m);
        let mut covered = m.failed().clone();
        for layer in &an.layers {
            prop_assert!(layer.is_disjoint(&covered));
            // every action of a layer state reaches what was peeled before it
            for i in layer.ones() {
                for &a in m.actions(StateId(i)) {
                    prop_assert!(ModelSpec::reaches(m.row(StateId(i), a).unwrap(), &covered));
                }
            }
            covered.union_with(layer);
        }
        prop_assert!(an.f_star.is_disjoint(&covered));
        prop_assert!(an.f_star.is_disjoint(&an.g_star));
        let mut all = covered.clone();
        all.union_with(&an.f_star);
        prop_assert_eq!(all.count_ones(..), m.n_states());
        // restricted actions keep F* closed, and only they do
        for i in an.f_star.ones() {
            let i = StateId(i);
            prop_assert!(!an.restricted(i).is_empty());
            for &a in m.actions(i) {
                let row = m.row(i, a).unwrap();
                let closed = row.iter().enumerate().all(|(j, p)| *p == 0.0 || an.f_star.contains(j));
                prop_assert_eq!(closed, an.restricted(i).contains(&a));
            }
        }
    }

    #[test]
    fn largest_absorbing_set_is_attained_and_maximal(seed in any::<u64>(), pseed in any::<u64>()) {
        let m = model_from(seed);
        let an = compute_largest_absorbing(&m);
        let g = random_policy(&m, &mut ChaCha8Rng::seed_from_u64(pseed));
        prop_assert!(absorbing_set_of_policy(&m, &g).unwrap().f_of_g.is_subset(&an.f_star));
        let witness = an.first_policy(&m).unwrap();
        prop_assert_eq!(absorbing_set_of_policy(&m, &witness).unwrap().f_of_g, an.f_star.clone());
    }

    #[test]
    fn solution_is_independent_of_start(seed in any::<u64>(), pseed in any::<u64>()) {
        let m = model_from(seed);
        let base = solve(&m, &SolveOptions::default()).unwrap();
        let opts = SolveOptions { initial_policy: Some(in_class_policy(&m, pseed)), ..SolveOptions::default() };
        let other = solve(&m, &opts).unwrap();
        prop_assert!(base.q_star.max_gap(&other.q_star) <= 1e-9);
    }

    #[test]
    fn optimum_is_below_every_policy(seed in any::<u64>(), pseed in any::<u64>()) {
        let m = model_from(seed);
        let star = solve(&m, &SolveOptions::default()).unwrap();
        let g = random_policy(&m, &mut ChaCha8Rng::seed_from_u64(pseed));
        let q = evaluate_policy_pes(&m, &g, &EvalOptions::default()).unwrap();
        for (a, b) in star.q_star.values().iter().zip(q.values()) {
            prop_assert!(*a <= b + 1e-9);
        }
    }

    #[test]
    fn supersolutions_dominate(seed in any::<u64>(), pseed in any::<u64>()) {
        let m = model_from(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(pseed);
        let g = random_policy(&m, &mut rng);
        let q = evaluate_policy_pes(&m, &g, &EvalOptions::default()).unwrap();
        let step = |y: &[f64], i: StateId| -> f64 {
            m.policy_row(&g, i).iter().zip(y).map(|(p, v)| p * v).sum()
        };
        // y <- max(y, T y) from a random start settles on a supersolution T y <= y
        let mut y: Vec<f64> = m
            .states()
            .map(|i| if m.is_failed(i) { 1.0 } else { rng.random_range(0.0..1.0) })
            .collect();
        for _ in 0..100_000 {
            let next: Vec<f64> = m
                .states()
                .map(|i| if m.is_failed(i) { 1.0 } else { y[i.0].max(step(&y, i)) })
                .collect();
            let moved = next.iter().zip(&y).any(|(a, b)| a != b);
            y = next;
            if !moved {
                break;
            }
        }
        for i in m.survivors() {
            prop_assert!(y[i.0] >= step(&y, i) - 1e-12);
            prop_assert!(y[i.0] >= q.get(i) - 1e-9, "{} < {}", y[i.0], q.get(i));
        }
    }

    #[test]
    fn finite_horizon_iterates_match_brute_force(seed in any::<u64>(), horizon in 0usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = maxrel::random::RandomModelConfig { max_states: 4, max_actions: 2, ..Default::default() };
        let m = maxrel::random::random_model_with(&mut rng, &cfg);
        let vi = min_hitting_within(&m, horizon);
        let brute = brute_force_min_hitting(&m, horizon);
        for (a, b) in vi.values().iter().zip(&brute) {
            prop_assert!((a - b).abs() <= 1e-12, "{} vs {}", a, b);
        }
    }

    #[test]
    fn value_iterates_are_monotone(seed in any::<u64>()) {
        let m = model_from(seed);
        let mut prev = min_hitting_within(&m, 0);
        for n in 1..20 {
            let next = min_hitting_within(&m, n);
            for (a, b) in prev.values().iter().zip(next.values()) {
                prop_assert!(a <= b);
            }
            prev = next;
        }
    }

    #[test]
    fn exact_and_float_solutions_agree(seed in any::<u64>()) {
        let exact = random_rational_model(&mut ChaCha8Rng::seed_from_u64(seed));
        let float = exact.to_float();
        let qe = solve(&exact, &SolveOptions::default()).unwrap();
        let qf = solve(&float, &SolveOptions::default()).unwrap();
        let qe_f = FailureVector::new(qe.q_star.to_f64());
        prop_assert!(qe_f.max_gap(&qf.q_star) <= 1e-9);
        let an = compute_largest_absorbing(&exact);
        prop_assert!(check_improved_oe(&exact, &an, &qe.q_star).is_zero());
    }

    #[test]
    fn exact_evaluators_agree_exactly(seed in any::<u64>()) {
        let m = random_rational_model(&mut ChaCha8Rng::seed_from_u64(seed));
        let an = compute_largest_absorbing(&m);
        let opts = EvalOptions::default();
        for g in enumerate_restricted_policies(&an, &m, 1_000).unwrap().take(20) {
            let a = evaluate_in_class(&m, &an, &g, &opts).unwrap();
            let b = evaluate_policy_pes(&m, &g, &opts).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn simulation_is_monotone_in_horizon_and_seeded(seed in any::<u64>(), pseed in any::<u64>()) {
        let m = model_from(seed);
        let g = random_policy(&m, &mut ChaCha8Rng::seed_from_u64(pseed));
        let start = m.survivors().next().unwrap();
        let mut prev = 0;
        for h in [0, 1, 3, 10, 40] {
            let est = simulate_survival(&m, &g, start, h, 400, seed).unwrap();
            let again = simulate_survival(&m, &g, start, h, 400, seed).unwrap();
            prop_assert_eq!(est.hit_count, again.hit_count);
            prop_assert!(est.hit_count >= prev);
            prev = est.hit_count;
        }
    }

    #[test]
    fn simulation_tracks_finite_horizon_probability(seed in any::<u64>(), pseed in any::<u64>()) {
        let m = model_from(seed);
        let g = random_policy(&m, &mut ChaCha8Rng::seed_from_u64(pseed));
        let start = m.survivors().next().unwrap();
        let exact = *hitting_within(&m, &g, 5).get(start);
        let est = simulate_survival(&m, &g, start, 5, 4000, seed).unwrap();
        // five standard errors, with a floor for probabilities near 0 or 1
        let se = (exact * (1.0 - exact) / 4000.0).sqrt().max(1e-3);
        prop_assert!((est.estimate - exact).abs() <= 5.0 * se, "{} vs {}", est.estimate, exact);
    }
}

#[test]
fn rational_zero_detection_matches_absorption() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..200 {
        let m = random_rational_model(&mut rng);
        let g = random_policy(&m, &mut rng);
        let pa = absorbing_set_of_policy(&m, &g).unwrap();
        let q = evaluate_policy_pes(&m, &g, &EvalOptions::default()).unwrap();
        for i in m.survivors() {
            assert_eq!(pa.f_of_g.contains(i.0), q.get(i).is_zero());
        }
    }
}
