//! Seeded generation of random formulas, systems, and words for property
//! tests and randomized cross-checks. Self-contained and deterministic so
//! any failure replays from its seed alone.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::formula::{ApSet, Formula, Label, Word};
use crate::system::{RawSystem, RawTransition, TransitionSystem};

/// SplitMix64: tiny, splittable, and good enough to drive test-case shapes.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> SplitMix64 {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform-ish draw from 0..n (modulo bias is irrelevant at test sizes).
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        (self.next_u64() % n as u64) as usize
    }

    pub fn flip(&mut self) -> bool {
        self.next_u64() & 1 == 1
    }
}

/// A random formula over `p1..p{n_ap}` with operator nesting at most `depth`.
pub fn random_formula(rng: &mut SplitMix64, n_ap: usize, depth: usize) -> Formula {
    debug_assert!(n_ap > 0);
    if depth == 0 || rng.below(4) == 0 {
        return match rng.below(5) {
            0 => Formula::True,
            1 | 2 => Formula::Atom(rng.below(n_ap)),
            _ => Formula::NegAtom(rng.below(n_ap)),
        };
    }
    match rng.below(5) {
        0 => Formula::and(
            random_formula(rng, n_ap, depth - 1),
            random_formula(rng, n_ap, depth - 1),
        ),
        1 => Formula::or(
            random_formula(rng, n_ap, depth - 1),
            random_formula(rng, n_ap, depth - 1),
        ),
        2 => Formula::next(random_formula(rng, n_ap, depth - 1)),
        3 => Formula::until(
            random_formula(rng, n_ap, depth - 1),
            random_formula(rng, n_ap, depth - 1),
        ),
        _ => Formula::eventually(random_formula(rng, n_ap, depth - 1)),
    }
}

/// The proposition set `p1..p{n_ap}` the generators draw from.
pub fn ap_set(n_ap: usize) -> ApSet {
    ApSet::new((1..=n_ap).map(|i| format!("p{i}"))).expect("generated names are valid")
}

/// A random word of exactly `len` labels over `n_ap` propositions.
pub fn random_word(rng: &mut SplitMix64, n_ap: usize, len: usize) -> Word {
    let mask = (1u32 << n_ap) - 1;
    (0..len).map(|_| Label(rng.next_u64() as u32 & mask)).collect()
}

/// A random live, uniformly observable transition system: up to `max_states`
/// states `q0..`, up to `max_inputs` single-letter inputs, labels over
/// `p1..p{n_ap}`. Half the draws observe states exactly; the rest merge them
/// into random observation classes. Active input sets are chosen per
/// observation class (so uniform observability holds by construction) and
/// every active pair gets one or two successors (so every state is live).
pub fn random_system(
    rng: &mut SplitMix64,
    max_states: usize,
    max_inputs: usize,
    n_ap: usize,
) -> TransitionSystem {
    debug_assert!(max_inputs <= 26);
    let n = 1 + rng.below(max_states);
    let n_inputs = 1 + rng.below(max_inputs);
    let states: Vec<String> = (0..n).map(|i| format!("q{i}")).collect();
    let inputs: Vec<String> = (0..n_inputs).map(|i| String::from((b'a' + i as u8) as char)).collect();

    let (class_of, observations) = if rng.flip() {
        ((0..n).collect::<Vec<_>>(), None)
    } else {
        let n_classes = 1 + rng.below(n);
        let class_of: Vec<usize> = (0..n).map(|_| rng.below(n_classes)).collect();
        let map: BTreeMap<String, String> = (0..n)
            .map(|i| (states[i].clone(), format!("o{}", class_of[i])))
            .collect();
        (class_of, Some(map))
    };

    // One nonempty active-input set per observation class.
    let n_classes = class_of.iter().max().unwrap() + 1;
    let mut active: Vec<Vec<usize>> = (0..n_classes)
        .map(|_| (0..n_inputs).filter(|_| rng.flip()).collect())
        .collect();
    for set in &mut active {
        if set.is_empty() {
            set.push(rng.below(n_inputs));
        }
    }

    let mut transitions = Vec::new();
    for x in 0..n {
        for &u in &active[class_of[x]] {
            for _ in 0..1 + rng.below(2) {
                transitions.push(RawTransition::new(
                    &states[x],
                    &inputs[u],
                    &states[rng.below(n)],
                ));
            }
        }
    }

    let mut labels: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for x in 0..n {
        let set: Vec<String> =
            (1..=n_ap).filter(|_| rng.flip()).map(|i| format!("p{i}")).collect();
        if !set.is_empty() {
            labels.insert(states[x].clone(), set);
        }
    }

    let raw = RawSystem {
        initial: states[rng.below(n)].clone(),
        states,
        inputs,
        transitions,
        ap: (1..=n_ap).map(|i| format!("p{i}")).collect(),
        labels,
        observations,
    };
    TransitionSystem::from_raw(&raw).expect("generated system is well-formed")
}
