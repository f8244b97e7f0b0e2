//! Compilation of scLTL into a DFA over `2^AP` accepting exactly the good
//! prefixes, the completion/sink modification that distinguishes first
//! completion from continued satisfaction, and DFA minimization.
//!
//! The compiler runs syntactic progression: each state is the canonical
//! disjunctive normal form of the obligations that remain after reading a
//! prefix. Canonicalization (contradiction pruning plus absorption) keeps the
//! residue set finite, so on-the-fly determinization terminates.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::formula::{ApSet, Formula, Label};

/// Default bound on `|AP|`: the alphabet `2^AP` is materialized explicitly.
pub const AP_LIMIT: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AutomataError {
    AlphabetTooLarge { ap_count: usize, limit: usize },
    LabelOutsideAlphabet { label: Label, ap_count: usize },
}

impl fmt::Display for AutomataError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AutomataError::AlphabetTooLarge { ap_count, limit } => {
                write!(f, "{ap_count} propositions exceed the compiler limit of {limit}")
            }
            AutomataError::LabelOutsideAlphabet { label, ap_count } => {
                write!(f, "label bits {:#b} outside the {ap_count}-proposition alphabet", label.0)
            }
        }
    }
}

impl core::error::Error for AutomataError {}

/// A complete DFA over the alphabet `2^AP`; all states are reachable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dfa {
    pub ap_count: usize,
    pub initial: usize,
    /// `delta[state][label]`, total by construction.
    pub delta: Vec<Vec<usize>>,
    pub accepting: Vec<bool>,
    /// Residual-obligation rendering per state, for diagnostics and DOT.
    pub state_names: Vec<String>,
}

impl Dfa {
    pub fn n_states(&self) -> usize {
        self.delta.len()
    }

    pub fn n_labels(&self) -> usize {
        1 << self.ap_count
    }

    pub fn step(&self, state: usize, label: Label) -> usize {
        self.delta[state][label.0 as usize]
    }
}

/// The compiled DFA after the three-step modification: a fresh accepting
/// state `s_F` absorbs everything one step after the original accepting set
/// `F`, and a fresh non-accepting sink `s_B` completes the automaton.
///
/// The inner automaton's `accepting` is `F ∪ {s_F}`; a run is in an `F` state
/// exactly at the first-completion instants of the task and in `s_F` ever
/// after, which is what lets the product separate the two.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModifiedDfa {
    pub dfa: Dfa,
    /// The original accepting set, over the extended state space.
    pub f_states: Vec<bool>,
    pub sink_accept: usize,
    pub sink_bad: usize,
}

impl ModifiedDfa {
    pub fn accepts(&self, w: &[Label]) -> Result<bool, AutomataError> {
        accepts(&self.dfa, w)
    }
}

// ---------------------------------------------------------------------------
// Canonical DNFs of progression obligations.

/// One obligation inside a conjunct. The closure of these under progression
/// is finite: atoms of the universe plus `Next`/`Until` nodes of the input
/// formula's subformula closure.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Base {
    Atom(usize),
    NegAtom(usize),
    Next(Formula),
    Until(Formula, Formula),
}

type Conj = BTreeSet<Base>;
type Dnf = BTreeSet<Conj>;

fn dnf_true() -> Dnf {
    BTreeSet::from([Conj::new()])
}

fn dnf_false() -> Dnf {
    Dnf::new()
}

fn contradictory(c: &Conj) -> bool {
    c.iter().any(|b| match b {
        Base::Atom(a) => c.contains(&Base::NegAtom(*a)),
        _ => false,
    })
}

// Drop contradictory conjuncts, then drop any conjunct subsumed by a smaller
// one (absorption). Both steps preserve the denoted language.
fn normalize(d: Dnf) -> Dnf {
    let kept: Vec<Conj> = d.into_iter().filter(|c| !contradictory(c)).collect();
    let mut out = Dnf::new();
    for c in &kept {
        if !kept.iter().any(|other| other != c && other.is_subset(c)) {
            out.insert(c.clone());
        }
    }
    out
}

fn dnf_or(a: Dnf, b: Dnf) -> Dnf {
    let mut u = a;
    u.extend(b);
    normalize(u)
}

fn dnf_and(a: &Dnf, b: &Dnf) -> Dnf {
    let mut out = Dnf::new();
    for ca in a {
        for cb in b {
            let mut c = ca.clone();
            c.extend(cb.iter().cloned());
            out.insert(c);
        }
    }
    normalize(out)
}

// The DNF whose satisfaction (now and onwards) is exactly the formula's.
fn dnf_of(f: &Formula) -> Dnf {
    match f {
        Formula::True => dnf_true(),
        Formula::Atom(a) => BTreeSet::from([Conj::from([Base::Atom(*a)])]),
        Formula::NegAtom(a) => BTreeSet::from([Conj::from([Base::NegAtom(*a)])]),
        Formula::And(l, r) => dnf_and(&dnf_of(l), &dnf_of(r)),
        Formula::Or(l, r) => dnf_or(dnf_of(l), dnf_of(r)),
        Formula::Next(s) => BTreeSet::from([Conj::from([Base::Next((**s).clone())])]),
        Formula::Until(l, r) => {
            BTreeSet::from([Conj::from([Base::Until((**l).clone(), (**r).clone())])])
        }
    }
}

// Progression through one label: the residue that must hold of the rest of
// the word. `U` unfolds one step, `X` sheds its operator.
fn prog_formula(f: &Formula, sigma: Label) -> Dnf {
    match f {
        Formula::True => dnf_true(),
        Formula::Atom(a) => {
            if sigma.contains(*a) {
                dnf_true()
            } else {
                dnf_false()
            }
        }
        Formula::NegAtom(a) => {
            if sigma.contains(*a) {
                dnf_false()
            } else {
                dnf_true()
            }
        }
        Formula::And(l, r) => dnf_and(&prog_formula(l, sigma), &prog_formula(r, sigma)),
        Formula::Or(l, r) => dnf_or(prog_formula(l, sigma), prog_formula(r, sigma)),
        Formula::Next(s) => dnf_of(s),
        Formula::Until(l, r) => {
            let hold = dnf_and(
                &prog_formula(l, sigma),
                &BTreeSet::from([Conj::from([Base::Until((**l).clone(), (**r).clone())])]),
            );
            dnf_or(prog_formula(r, sigma), hold)
        }
    }
}

fn prog_base(b: &Base, sigma: Label) -> Dnf {
    match b {
        Base::Atom(a) => prog_formula(&Formula::Atom(*a), sigma),
        Base::NegAtom(a) => prog_formula(&Formula::NegAtom(*a), sigma),
        Base::Next(s) => dnf_of(s),
        Base::Until(l, r) => {
            prog_formula(&Formula::until(l.clone(), r.clone()), sigma)
        }
    }
}

fn prog_dnf(d: &Dnf, sigma: Label) -> Dnf {
    let mut out = dnf_false();
    for conj in d {
        let mut acc = dnf_true();
        for base in conj {
            acc = dnf_and(&acc, &prog_base(base, sigma));
            if acc.is_empty() {
                break;
            }
        }
        out = dnf_or(out, acc);
    }
    out
}

// Value of an obligation when the word ends here: an atom has no position to
// look at, `X φ` and `φ U ψ` collapse to the end value of their payloads.
fn emptyval(f: &Formula) -> bool {
    match f {
        Formula::True => true,
        Formula::Atom(_) | Formula::NegAtom(_) => false,
        Formula::And(l, r) => emptyval(l) && emptyval(r),
        Formula::Or(l, r) => emptyval(l) || emptyval(r),
        Formula::Next(s) => emptyval(s),
        Formula::Until(_, r) => emptyval(r),
    }
}

fn base_emptyval(b: &Base) -> bool {
    match b {
        Base::Atom(_) | Base::NegAtom(_) => false,
        Base::Next(s) => emptyval(s),
        Base::Until(_, r) => emptyval(r),
    }
}

fn dnf_accepting(d: &Dnf) -> bool {
    d.iter().any(|c| c.iter().all(base_emptyval))
}

fn base_to_formula(b: &Base) -> Formula {
    match b {
        Base::Atom(a) => Formula::Atom(*a),
        Base::NegAtom(a) => Formula::NegAtom(*a),
        Base::Next(s) => Formula::next(s.clone()),
        Base::Until(l, r) => Formula::until(l.clone(), r.clone()),
    }
}

fn render_dnf(d: &Dnf, aps: &ApSet) -> String {
    if d.is_empty() {
        return String::from("false");
    }
    let as_formula = d
        .iter()
        .map(|c| {
            c.iter()
                .map(base_to_formula)
                .reduce(Formula::and)
                .unwrap_or(Formula::True)
        })
        .reduce(Formula::or)
        .unwrap();
    crate::formula::pretty_print(&as_formula, aps)
}

// ---------------------------------------------------------------------------

/// Compiles `f` into a DFA whose language is exactly the good prefixes of
/// `f`: `accepts(compile(f), w) ⇔ holds_on(w, f)` for every word `w`.
pub fn compile(f: &Formula, aps: &ApSet) -> Result<Dfa, AutomataError> {
    if aps.len() > AP_LIMIT {
        return Err(AutomataError::AlphabetTooLarge { ap_count: aps.len(), limit: AP_LIMIT });
    }
    let n_labels = 1usize << aps.len();

    let init = normalize(dnf_of(f));
    let mut index: BTreeMap<Dnf, usize> = BTreeMap::from([(init.clone(), 0)]);
    let mut states: Vec<Dnf> = vec![init];
    let mut delta: Vec<Vec<usize>> = Vec::new();

    let mut at = 0;
    while at < states.len() {
        let mut row = Vec::with_capacity(n_labels);
        for bits in 0..n_labels {
            let succ = prog_dnf(&states[at].clone(), Label(bits as u32));
            let id = match index.get(&succ) {
                Some(&id) => id,
                None => {
                    let id = states.len();
                    index.insert(succ.clone(), id);
                    states.push(succ);
                    id
                }
            };
            row.push(id);
        }
        delta.push(row);
        at += 1;
    }

    Ok(Dfa {
        ap_count: aps.len(),
        initial: 0,
        delta,
        accepting: states.iter().map(dnf_accepting).collect(),
        state_names: states.iter().map(|d| render_dnf(d, aps)).collect(),
    })
}

/// Applies the three modification steps to a good-prefix DFA: (1) add a fresh
/// accepting state `s_F` with self-loops on every label, (2) redirect every
/// transition out of an original accepting state to `s_F`, (3) add a fresh
/// absorbing non-accepting state `s_B` completing the automaton.
///
/// Because good-prefix languages are extension-closed, the result accepts
/// exactly the language of `a`. Our `Dfa` is total by construction, so `s_B`
/// stays unreachable; it is kept to make completeness explicit.
pub fn modify(a: &Dfa) -> ModifiedDfa {
    let n = a.n_states();
    let n_labels = a.n_labels();
    let s_f = n;
    let s_b = n + 1;

    let mut delta = a.delta.clone();
    for (s, row) in delta.iter_mut().enumerate() {
        if a.accepting[s] {
            row.iter_mut().for_each(|t| *t = s_f);
        }
    }
    delta.push(vec![s_f; n_labels]);
    delta.push(vec![s_b; n_labels]);

    let mut accepting = a.accepting.clone();
    accepting.push(true); // s_F
    accepting.push(false); // s_B

    let mut f_states = a.accepting.clone();
    f_states.push(false);
    f_states.push(false);

    let mut state_names = a.state_names.clone();
    state_names.push(String::from("s_F"));
    state_names.push(String::from("s_B"));

    ModifiedDfa {
        dfa: Dfa { ap_count: a.ap_count, initial: a.initial, delta, accepting, state_names },
        f_states,
        sink_accept: s_f,
        sink_bad: s_b,
    }
}

/// Runs the word through the automaton.
pub fn accepts(a: &Dfa, w: &[Label]) -> Result<bool, AutomataError> {
    let mut s = a.initial;
    for &l in w {
        if !l.is_within(a.ap_count) {
            return Err(AutomataError::LabelOutsideAlphabet { label: l, ap_count: a.ap_count });
        }
        s = a.delta[s][l.0 as usize];
    }
    Ok(a.accepting[s])
}

/// Language-preserving minimization (Moore partition refinement), with the
/// result renumbered by breadth-first search from the initial state in label
/// order so equal automata come out identical.
pub fn minimize(a: &Dfa) -> Dfa {
    let n = a.n_states();
    let n_labels = a.n_labels();

    let mut class: Vec<usize> = a.accepting.iter().map(|&b| b as usize).collect();
    loop {
        let mut sig_ids: BTreeMap<(usize, Vec<usize>), usize> = BTreeMap::new();
        let mut next: Vec<usize> = Vec::with_capacity(n);
        for s in 0..n {
            let sig = (class[s], a.delta[s].iter().map(|&t| class[t]).collect::<Vec<_>>());
            let fresh = sig_ids.len();
            next.push(*sig_ids.entry(sig).or_insert(fresh));
        }
        if next == class {
            break;
        }
        class = next;
    }

    // Quotient, renumbered by BFS from the initial class.
    let mut order: BTreeMap<usize, usize> = BTreeMap::new(); // class -> new id
    let mut rep: Vec<usize> = Vec::new(); // new id -> representative state
    let mut queue = vec![a.initial];
    order.insert(class[a.initial], 0);
    rep.push(a.initial);
    let mut at = 0;
    while at < queue.len() {
        let s = queue[at];
        at += 1;
        for l in 0..n_labels {
            let t = a.delta[s][l];
            if !order.contains_key(&class[t]) {
                order.insert(class[t], rep.len());
                rep.push(t);
                queue.push(t);
            }
        }
    }

    Dfa {
        ap_count: a.ap_count,
        initial: 0,
        delta: rep
            .iter()
            .map(|&s| a.delta[s].iter().map(|&t| order[&class[t]]).collect())
            .collect(),
        accepting: rep.iter().map(|&s| a.accepting[s]).collect(),
        state_names: rep.iter().map(|&s| a.state_names[s].clone()).collect(),
    }
}
