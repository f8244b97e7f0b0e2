//! Property tests: every invariant promised by the public API, driven by the
//! seeded generators so failures replay from a single u64.

use proptest::prelude::*;
use std::collections::BTreeSet;

use unpred_core::automata::{accepts, compile, minimize, modify, ModifiedDfa};
use unpred_core::formula::{holds_on, is_minimal_good_prefix, parse, pretty_print, Formula};
use unpred_core::gen::{ap_set, random_formula, random_system, random_word, SplitMix64};
use unpred_core::product::{build_product, lift_path, project_path, ProductSystem};
use unpred_core::synthesis::{attractor, build_aes_bounded, decode, extract, SynthesisError};
use unpred_core::system::{Path, TransitionSystem};
use unpred_core::verify::{build_closed_loop, check_live, check_task, check_unpredictable};

fn compiled(f: &Formula) -> ModifiedDfa {
    modify(&minimize(&compile(f, &ap_set(2)).unwrap()))
}

fn random_instance(seed: u64) -> (TransitionSystem, Formula, ProductSystem, SplitMix64) {
    let mut rng = SplitMix64::new(seed);
    let ts = random_system(&mut rng, 5, 2, 2);
    let f = random_formula(&mut rng, 2, 2);
    let prod = build_product(&ts, &compiled(&f)).unwrap();
    (ts, f, prod, rng)
}

fn random_rooted_path(rng: &mut SplitMix64, ts: &TransitionSystem, len: usize) -> Path {
    let mut states = vec![ts.initial];
    let mut inputs = Vec::new();
    for _ in 0..len {
        let x = *states.last().unwrap();
        let act: Vec<usize> = ts.active_inputs(x).unwrap().into_iter().collect();
        let u = act[rng.below(act.len())];
        let succ: Vec<usize> = ts.delta[x][u].iter().copied().collect();
        states.push(succ[rng.below(succ.len())]);
        inputs.push(u);
    }
    Path { states, inputs }
}

proptest! {
    #[test]
    fn good_prefixes_are_extension_closed(seed in any::<u64>()) {
        let mut rng = SplitMix64::new(seed);
        let f = random_formula(&mut rng, 2, 3);
        let n = rng.below(6);
        let w = random_word(&mut rng, 2, n);
        let m = rng.below(4);
        let ext = random_word(&mut rng, 2, m);
        if holds_on(&w, &f) {
            let mut wx = w.clone();
            wx.extend(ext);
            prop_assert!(holds_on(&wx, &f));
        }
    }

    #[test]
    fn at_most_one_prefix_is_minimal(seed in any::<u64>()) {
        let mut rng = SplitMix64::new(seed);
        let f = random_formula(&mut rng, 2, 3);
        let n = rng.below(7);
        let w = random_word(&mut rng, 2, n);
        let minimal: Vec<usize> =
            (0..=w.len()).filter(|&i| is_minimal_good_prefix(&w[..i], &f)).collect();
        prop_assert!(minimal.len() <= 1, "{minimal:?}");
        for &i in &minimal {
            prop_assert!(holds_on(&w[..i], &f));
        }
        // A word that is a good prefix contains exactly one minimal one.
        prop_assert_eq!(minimal.len() == 1, holds_on(&w, &f));
    }

    #[test]
    fn printer_and_parser_are_inverse(seed in any::<u64>()) {
        let mut rng = SplitMix64::new(seed);
        let f = random_formula(&mut rng, 3, 4);
        let aps = ap_set(3);
        prop_assert_eq!(parse(&pretty_print(&f, &aps), &aps), Ok(f));
    }

    #[test]
    fn automata_transforms_preserve_the_language(seed in any::<u64>()) {
        let mut rng = SplitMix64::new(seed);
        let f = random_formula(&mut rng, 2, 3);
        let dfa = compile(&f, &ap_set(2)).unwrap();
        let min = minimize(&dfa);
        let md = modify(&min);
        prop_assert!(min.n_states() <= dfa.n_states());
        for _ in 0..8 {
            let n = rng.below(7);
            let w = random_word(&mut rng, 2, n);
            let want = holds_on(&w, &f);
            prop_assert_eq!(accepts(&dfa, &w), Ok(want));
            prop_assert_eq!(accepts(&min, &w), Ok(want));
            prop_assert_eq!(md.accepts(&w), Ok(want));
        }
    }

    #[test]
    fn nx_distributes_over_union(seed in any::<u64>()) {
        let mut rng = SplitMix64::new(seed);
        let ts = random_system(&mut rng, 6, 2, 2);
        let pick = |rng: &mut SplitMix64| -> BTreeSet<usize> {
            (0..ts.n_states()).filter(|_| rng.flip()).collect()
        };
        let a = pick(&mut rng);
        let b = pick(&mut rng);
        let u = rng.below(ts.n_inputs());
        let ab: BTreeSet<usize> = a.union(&b).copied().collect();
        let union: BTreeSet<usize> = ts.nx(&a, u).union(&ts.nx(&b, u)).copied().collect();
        prop_assert_eq!(ts.nx(&ab, u), union);
        prop_assert!(ts.nx(&a, u).is_subset(&ts.nx(&ab, u)));
    }

    #[test]
    fn add_stop_freezes_without_disturbing_dynamics(seed in any::<u64>()) {
        let mut rng = SplitMix64::new(seed);
        let ts = random_system(&mut rng, 6, 2, 2);
        let ts2 = ts.add_stop().unwrap();
        prop_assert_eq!(ts2.n_states(), ts.n_states() + 1);
        prop_assert!(ts2.validate().is_ok());

        let stop_state = ts2.state_id("stop").unwrap();
        let stop_input = ts2.input_id("stop").unwrap();
        // Stopping is always possible and permanent.
        for x in 0..ts2.n_states() {
            prop_assert_eq!(ts2.delta[x][stop_input].clone(), BTreeSet::from([stop_state]));
        }
        let act: Vec<usize> = ts2.active_inputs(stop_state).unwrap().into_iter().collect();
        prop_assert_eq!(act, vec![stop_input]);
        // Original moves survive by name.
        for x in 0..ts.n_states() {
            let x2 = ts2.state_id(&ts.state_names[x]).unwrap();
            for u in 0..ts.n_inputs() {
                let u2 = ts2.input_id(&ts.input_names[u]).unwrap();
                let old: BTreeSet<&str> = ts.delta[x][u]
                    .iter()
                    .map(|&t| ts.state_names[t].as_str())
                    .collect();
                let new: BTreeSet<&str> = ts2.delta[x2][u2]
                    .iter()
                    .map(|&t| ts2.state_names[t].as_str())
                    .collect();
                prop_assert_eq!(old, new);
            }
        }
    }

    #[test]
    fn product_paths_project_and_lift(seed in any::<u64>()) {
        let (ts, _, prod, mut rng) = random_instance(seed);
        let n = rng.below(6);
        let p = random_rooted_path(&mut rng, &prod.ts, n);
        let sys_path = project_path(&prod, &p);
        prop_assert!(sys_path.is_rooted(&ts));
        prop_assert_eq!(lift_path(&prod, &sys_path), Some(p));

        let m = rng.below(6);
        let q = random_rooted_path(&mut rng, &ts, m);
        let lifted = lift_path(&prod, &q).expect("complete automata lift every rooted path");
        prop_assert!(lifted.is_rooted(&prod.ts));
        prop_assert_eq!(project_path(&prod, &lifted), q);
    }

    #[test]
    fn xf_membership_matches_task_semantics(seed in any::<u64>()) {
        let (_, f, prod, mut rng) = random_instance(seed);
        for _ in 0..8 {
            let n = rng.below(6);
            let p = random_rooted_path(&mut rng, &prod.ts, n);
            let trace: Vec<_> = p.states.iter().map(|&x| prod.ts.labels[x]).collect();
            let last = *p.states.last().unwrap();
            prop_assert_eq!(prod.xf.contains(&last), is_minimal_good_prefix(&trace, &f));
            prop_assert_eq!(prod.xf_or_sink.contains(&last), holds_on(&trace, &f));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn aes_beliefs_keep_their_invariants(seed in any::<u64>()) {
        let (_, _, prod, mut rng) = random_instance(seed);
        let k = 1 + rng.below(3) as u8;
        let Some(aes) = build_aes_bounded(&prod, k, 200_000) else {
            return Ok(()); // budget exhausted: nothing to check
        };
        for y in &aes.y_states {
            prop_assert!(y.belief.is_functional());
            prop_assert!(y.belief.is_currently_consistent(&prod));
            prop_assert!(y.belief.is_secure());
            for a in &y.belief.0 {
                prop_assert_eq!(prod.ts.obs[a.state], y.obs);
                prop_assert_eq!(a.pred.k, k);
            }
        }
        for (&(y, u), zs) in &aes.yz {
            prop_assert!(y < aes.y_states.len());
            prop_assert!(u < prod.ts.n_inputs());
            prop_assert!(!zs.is_empty());
            prop_assert!(zs.iter().all(|&z| z < aes.z_states.len()));
        }
        for (&(z, _), &y) in &aes.zy {
            prop_assert!(z < aes.z_states.len());
            prop_assert!(y < aes.y_states.len());
        }
        for &y in &aes.y0 {
            let belief = &aes.y_states[y].belief;
            prop_assert_eq!(belief.0.len(), 1);
            prop_assert_eq!(belief.0.first().unwrap().state, prod.ts.initial);
        }
    }

    #[test]
    fn synthesized_controllers_pass_the_independent_checks(seed in any::<u64>()) {
        let (_, _, prod, mut rng) = random_instance(seed);
        let k = 1 + rng.below(3) as u8;
        let Some(aes) = build_aes_bounded(&prod, k, 200_000) else {
            return Ok(());
        };
        let dist = attractor(&aes, &prod);
        match extract(&aes, &dist) {
            Err(SynthesisError::NoSolution) => {}
            Err(other) => prop_assert!(false, "unexpected error {other:?}"),
            Ok(bts) => {
                let c = decode(bts);
                let cl = build_closed_loop(&prod, &c.to_mealy()).unwrap();
                prop_assert!(check_live(&cl));
                prop_assert!(check_task(&cl));
                let (ok, witness) = check_unpredictable(&cl, k);
                prop_assert!(ok, "intruder wins after {witness:?}");
            }
        }
    }
}
