//! The product of the system with the modified task automaton. Task
//! completion becomes reachability: a rooted path's trace is a minimal good
//! prefix exactly when it ends in `xf` (the secret states), and satisfies the
//! task at all exactly when it ends in `xf_or_sink` (`xf` plus the pairs that
//! moved on into the absorbing accept state).

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::automata::ModifiedDfa;
use crate::system::{Path, TransitionSystem};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProductError {
    AlphabetMismatch { system: usize, automaton: usize },
}

impl fmt::Display for ProductError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProductError::AlphabetMismatch { system, automaton } => write!(
                f,
                "system has {system} atomic propositions but the automaton expects {automaton}"
            ),
        }
    }
}

impl core::error::Error for ProductError {}

/// The reachable product, itself a transition system whose state `i` stands
/// for the pair `(sys_state[i], dfa_state[i])`. States are named `x1..xn` in
/// canonical pair order; labels and observations are inherited from the
/// system component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductSystem {
    pub ts: TransitionSystem,
    pub sys_state: Vec<usize>,
    pub dfa_state: Vec<usize>,
    /// Pair rendering such as `(1,s1)`, aligned with state ids.
    pub pair_names: Vec<String>,
    /// States whose automaton component is in the original accepting set F:
    /// exactly the first-completion instants.
    pub xf: BTreeSet<usize>,
    /// F plus the absorbing accept state; closed under successors.
    pub xf_or_sink: BTreeSet<usize>,
}

impl ProductSystem {
    pub fn n_states(&self) -> usize {
        self.ts.n_states()
    }

    pub fn pair_desc(&self, i: usize) -> &str {
        &self.pair_names[i]
    }
}

fn dfa_state_desc(m: &ModifiedDfa, s: usize) -> String {
    if s == m.sink_accept {
        String::from("s_F")
    } else if s == m.sink_bad {
        String::from("s_B")
    } else {
        format!("s{}", s + 1)
    }
}

/// Builds the reachable product of a validated system and a modified task
/// automaton over the same proposition universe.
pub fn build_product(
    ts: &TransitionSystem,
    m: &ModifiedDfa,
) -> Result<ProductSystem, ProductError> {
    if ts.aps.len() != m.dfa.ap_count {
        return Err(ProductError::AlphabetMismatch {
            system: ts.aps.len(),
            automaton: m.dfa.ap_count,
        });
    }

    // The automaton consumes the trace including the initial label.
    let initial_pair = (ts.initial, m.dfa.step(m.dfa.initial, ts.labels[ts.initial]));
    let mut reachable: BTreeSet<(usize, usize)> = BTreeSet::from([initial_pair]);
    let mut frontier = vec![initial_pair];
    while let Some((x, s)) = frontier.pop() {
        for row in &ts.delta[x] {
            for &x2 in row {
                let pair = (x2, m.dfa.step(s, ts.labels[x2]));
                if reachable.insert(pair) {
                    frontier.push(pair);
                }
            }
        }
    }

    // Canonical order: by system state, then automaton state.
    let pairs: Vec<(usize, usize)> = reachable.into_iter().collect();
    let index: BTreeMap<(usize, usize), usize> =
        pairs.iter().enumerate().map(|(i, &p)| (p, i)).collect();

    let delta = pairs
        .iter()
        .map(|&(x, s)| {
            ts.delta[x]
                .iter()
                .map(|row| row.iter().map(|&x2| index[&(x2, m.dfa.step(s, ts.labels[x2]))]).collect())
                .collect()
        })
        .collect();

    let xf: BTreeSet<usize> =
        (0..pairs.len()).filter(|&i| m.f_states[pairs[i].1]).collect();
    let xf_or_sink: BTreeSet<usize> = (0..pairs.len())
        .filter(|&i| m.f_states[pairs[i].1] || pairs[i].1 == m.sink_accept)
        .collect();

    Ok(ProductSystem {
        ts: TransitionSystem {
            state_names: (1..=pairs.len()).map(|i| format!("x{i}")).collect(),
            input_names: ts.input_names.clone(),
            obs_names: ts.obs_names.clone(),
            aps: ts.aps.clone(),
            initial: index[&initial_pair],
            labels: pairs.iter().map(|&(x, _)| ts.labels[x]).collect(),
            obs: pairs.iter().map(|&(x, _)| ts.obs[x]).collect(),
            delta,
        },
        sys_state: pairs.iter().map(|&(x, _)| x).collect(),
        dfa_state: pairs.iter().map(|&(_, s)| s).collect(),
        pair_names: pairs
            .iter()
            .map(|&(x, s)| format!("({},{})", ts.state_names[x], dfa_state_desc(m, s)))
            .collect(),
        xf,
        xf_or_sink,
    })
}

/// First-component projection of a product path onto the system.
pub fn project_path(prod: &ProductSystem, p: &Path) -> Path {
    Path {
        states: p.states.iter().map(|&i| prod.sys_state[i]).collect(),
        inputs: p.inputs.clone(),
    }
}

/// The unique rooted product path over a rooted system path; `None` if the
/// input does not start at the system's initial state or takes a missing
/// edge. Inverse of `project_path` on rooted paths.
pub fn lift_path(prod: &ProductSystem, sys_path: &Path) -> Option<Path> {
    if prod.sys_state[prod.ts.initial] != *sys_path.states.first()? {
        return None;
    }
    let mut states = vec![prod.ts.initial];
    for (i, &u) in sys_path.inputs.iter().enumerate() {
        let here = *states.last().unwrap();
        let next = *prod.ts.delta[here]
            .get(u)?
            .iter()
            .find(|&&p| prod.sys_state[p] == sys_path.states[i + 1])?;
        states.push(next);
    }
    Some(Path { states, inputs: sys_path.inputs.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::{compile, modify};
    use crate::formula::{holds_on, is_minimal_good_prefix, parse, ApSet, Label, Word};
    use alloc::string::ToString;
    use crate::testutil::{robot6, robot6_raw, robot_dfa, robot_formula};

    fn fixture() -> ProductSystem {
        build_product(&robot6(), &robot_dfa()).unwrap()
    }

    /// All rooted paths of exactly `n` inputs.
    fn rooted_paths(ts: &TransitionSystem, n: usize) -> Vec<Path> {
        let mut layer = vec![Path::root(ts.initial)];
        for _ in 0..n {
            let mut next = Vec::new();
            for p in &layer {
                let here = *p.states.last().unwrap();
                for (u, succs) in ts.delta[here].iter().enumerate() {
                    for &y in succs {
                        let mut q = p.clone();
                        q.states.push(y);
                        q.inputs.push(u);
                        next.push(q);
                    }
                }
            }
            layer = next;
        }
        layer
    }

    fn trace(ts: &TransitionSystem, p: &Path) -> Word {
        p.states.iter().map(|&x| ts.labels[x]).collect()
    }

    #[test]
    fn fixture_matches_the_expected_product() {
        let prod = fixture();
        assert_eq!(
            prod.pair_names,
            ["(1,s1)", "(2,s2)", "(3,s2)", "(4,s2)", "(5,s2)", "(6,s3)", "(6,s_F)"]
        );
        assert_eq!(prod.ts.state_names, ["x1", "x2", "x3", "x4", "x5", "x6", "x7"]);
        assert_eq!(prod.ts.initial, 0);
        assert_eq!(prod.xf, BTreeSet::from([5]));
        assert_eq!(prod.xf_or_sink, BTreeSet::from([5, 6]));

        let d = &prod.ts.delta;
        assert_eq!(d[0][0], BTreeSet::from([1]));
        assert!(d[0][1].is_empty());
        assert_eq!(d[1][0], BTreeSet::from([3, 4]));
        assert_eq!(d[1][1], BTreeSet::from([2]));
        assert_eq!(d[2][0], BTreeSet::from([5]));
        assert_eq!(d[3][0], BTreeSet::from([4, 5]));
        assert_eq!(d[3][1], BTreeSet::from([2]));
        assert_eq!(d[4][0], BTreeSet::from([3]));
        assert_eq!(d[4][1], BTreeSet::from([5]));
        assert_eq!(d[5][0], BTreeSet::from([6]));
        assert_eq!(d[6][0], BTreeSet::from([6]));

        // Observations and validity are inherited.
        assert_eq!(prod.ts.obs, vec![0, 1, 2, 3, 4, 5, 5]);
        assert!(prod.ts.validate().is_ok());
    }

    #[test]
    fn mismatched_alphabets_are_rejected() {
        let aps1 = ApSet::new(["p1"]).unwrap();
        let m = modify(&compile(&parse("F p1", &aps1).unwrap(), &aps1).unwrap());
        assert_eq!(
            build_product(&robot6(), &m),
            Err(ProductError::AlphabetMismatch { system: 2, automaton: 1 })
        );
    }

    #[test]
    fn unlabeled_system_yields_isomorphic_product() {
        let mut raw = robot6_raw();
        raw.ap = vec!["p1".to_string()];
        raw.labels.clear();
        let ts = TransitionSystem::from_raw(&raw).unwrap();
        let aps1 = ApSet::new(["p1"]).unwrap();
        let m = modify(&compile(&parse("F p1", &aps1).unwrap(), &aps1).unwrap());
        let prod = build_product(&ts, &m).unwrap();
        assert_eq!(prod.n_states(), ts.n_states());
        assert!(prod.xf.is_empty() && prod.xf_or_sink.is_empty());
        // Pair order follows system order here, so deltas agree id-for-id.
        assert_eq!(prod.sys_state, (0..6).collect::<Vec<_>>());
        assert_eq!(prod.ts.delta, ts.delta);
    }

    #[test]
    fn completion_path_reaches_xf_with_minimal_good_prefix() {
        let prod = fixture();
        let p = Path { states: vec![0, 1, 2, 5], inputs: vec![0, 1, 0] };
        assert!(p.is_valid(&prod.ts) && p.is_rooted(&prod.ts));
        assert!(prod.xf.contains(p.states.last().unwrap()));
        let w = trace(&prod.ts, &p);
        assert_eq!(w, vec![Label::EMPTY, Label(0b01), Label::EMPTY, Label(0b10)]);
        assert!(is_minimal_good_prefix(&w, &robot_formula()));
    }

    #[test]
    fn xf_membership_tracks_task_semantics_exhaustively() {
        let prod = fixture();
        let f = robot_formula();
        for n in 0..=8 {
            for p in rooted_paths(&prod.ts, n) {
                let w = trace(&prod.ts, &p);
                let last = *p.states.last().unwrap();
                assert_eq!(prod.xf.contains(&last), is_minimal_good_prefix(&w, &f), "{p:?}");
                assert_eq!(prod.xf_or_sink.contains(&last), holds_on(&w, &f), "{p:?}");
            }
        }
    }

    #[test]
    fn rooted_path_counts_agree_with_system() {
        let sys = robot6();
        let prod = fixture();
        for n in 0..=8 {
            assert_eq!(rooted_paths(&prod.ts, n).len(), rooted_paths(&sys, n).len());
        }
    }

    #[test]
    fn xf_or_sink_is_closed_under_successors() {
        let prod = fixture();
        for &i in &prod.xf_or_sink {
            for row in &prod.ts.delta[i] {
                assert!(row.iter().all(|s| prod.xf_or_sink.contains(s)));
            }
        }
    }

    #[test]
    fn project_and_lift_are_inverse_on_rooted_paths() {
        let sys = robot6();
        let prod = fixture();
        assert_eq!(
            project_path(&prod, &Path { states: vec![0, 1], inputs: vec![0] }),
            Path { states: vec![0, 1], inputs: vec![0] }
        );
        assert_eq!(project_path(&prod, &Path::root(0)), Path::root(0));
        for n in 0..=6 {
            for p in rooted_paths(&prod.ts, n) {
                let lifted = lift_path(&prod, &project_path(&prod, &p)).unwrap();
                assert_eq!(lifted, p);
            }
            for sp in rooted_paths(&sys, n) {
                assert_eq!(project_path(&prod, &lift_path(&prod, &sp).unwrap()), sp);
            }
        }
        assert_eq!(lift_path(&prod, &Path::root(3)), None);
    }
}
