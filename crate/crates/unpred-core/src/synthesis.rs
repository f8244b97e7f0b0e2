//! Controller synthesis against a prediction-capable eavesdropper.
//!
//! The synthesizer plays a game over beliefs about augmented states `(x, h)`,
//! where `h` is a (K+1)-bit vector whose bit `i` claims "the run surely first
//! completes the task in exactly `i` steps". Alternating Y-states (after an
//! observation) and Z-states (after a control choice) form a bipartite
//! structure; pruning it to the largest complete substructure yields every
//! control strategy that keeps completion unpredictable, and a reachability
//! attractor over it extracts one that also guarantees completion.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::product::ProductSystem;

/// Predictions are machine-word bitmasks, so K is capped at 31.
pub const MAX_K: u8 = 31;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SynthesisError {
    KTooLarge { requested: u32 },
    LengthMismatch { left: u8, right: u8 },
    NoSolution,
}

impl fmt::Display for SynthesisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthesisError::KTooLarge { requested } => {
                write!(f, "K = {requested} exceeds the supported maximum of {MAX_K}")
            }
            SynthesisError::LengthMismatch { left, right } => {
                write!(f, "prediction lengths differ: K = {left} vs K = {right}")
            }
            SynthesisError::NoSolution => write!(f, "no solution exists"),
        }
    }
}

impl core::error::Error for SynthesisError {}

pub fn check_k(k: u32) -> Result<u8, SynthesisError> {
    if k <= MAX_K as u32 {
        Ok(k as u8)
    } else {
        Err(SynthesisError::KTooLarge { requested: k })
    }
}

/// A (K+1)-bit prediction vector; bit `i` of `bits` is `h[i]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Prediction {
    pub k: u8,
    pub bits: u32,
}

impl Prediction {
    pub fn new(k: u8, bits: u32) -> Self {
        debug_assert_eq!(bits >> (k as u32 + 1), 0);
        Prediction { k, bits }
    }

    pub fn zero(k: u8) -> Self {
        Prediction { k, bits: 0 }
    }

    pub fn get(&self, i: u8) -> bool {
        (self.bits >> i) & 1 == 1
    }

    /// `h[0] … h[K]` as a digit string, h[0] first.
    pub fn render(&self) -> String {
        (0..=self.k).map(|i| if self.get(i) { '1' } else { '0' }).collect()
    }

    /// Inverse of `render`.
    pub fn from_text(s: &str) -> Option<Self> {
        if s.is_empty() || s.len() > MAX_K as usize + 1 {
            return None;
        }
        let mut bits = 0u32;
        for (i, c) in s.chars().enumerate() {
            match c {
                '1' => bits |= 1 << i,
                '0' => {}
                _ => return None,
            }
        }
        Some(Prediction { k: (s.len() - 1) as u8, bits })
    }
}

/// A product state paired with a prediction about its future.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct AugmentedState {
    pub state: usize,
    pub pred: Prediction,
}

/// A set of augmented states; canonical order is (state id, prediction bits).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Belief(pub BTreeSet<AugmentedState>);

impl Belief {
    pub fn singleton(state: usize, pred: Prediction) -> Self {
        Belief(BTreeSet::from([AugmentedState { state, pred }]))
    }

    pub fn states(&self) -> BTreeSet<usize> {
        self.0.iter().map(|a| a.state).collect()
    }

    /// At most one prediction per state.
    pub fn is_functional(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.0.iter().all(|a| seen.insert(a.state))
    }

    /// Every member's `h[0]` agrees with membership of its state in `xf`.
    pub fn is_currently_consistent(&self, prod: &ProductSystem) -> bool {
        self.0.iter().all(|a| a.pred.get(0) == prod.xf.contains(&a.state))
    }

    /// Secure unless every member claims sure completion K steps ahead.
    /// The empty belief is insecure by convention.
    pub fn is_secure(&self) -> bool {
        self.0.iter().any(|a| !a.pred.get(a.pred.k))
    }
}

/// Belief plus the observation that produced it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct YState {
    pub belief: Belief,
    pub obs: usize,
}

/// Belief after a control choice; the choice itself lives on the incoming
/// edge, so Z-states with equal beliefs coincide.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ZState {
    pub belief: Belief,
}

/// One-step consistency Δ: a prediction `h` is compatible with the successor
/// predictions `hs` iff each sure claim shifts to all successors and each
/// unsure claim is witnessed by some successor. `h[0]` is unconstrained.
pub fn one_step_consistent(h: &Prediction, hs: &[Prediction]) -> Result<bool, SynthesisError> {
    if let Some(bad) = hs.iter().find(|p| p.k != h.k) {
        return Err(SynthesisError::LengthMismatch { left: h.k, right: bad.k });
    }
    Ok(delta_ok(h, hs))
}

fn delta_ok(h: &Prediction, hs: &[Prediction]) -> bool {
    (1..=h.k).all(|i| {
        if h.get(i) {
            hs.iter().all(|p| p.get(i - 1))
        } else {
            hs.iter().any(|p| !p.get(i - 1))
        }
    })
}

// Enumeration budget shared across one construction; counts candidate
// prediction assignments.
struct Budget {
    used: u64,
    limit: u64,
}

impl Budget {
    fn new(limit: u64) -> Self {
        Budget { used: 0, limit }
    }

    fn charge(&mut self) -> bool {
        self.used = self.used.saturating_add(1);
        self.used <= self.limit
    }
}

/// All Z-successors of `y` under `u`: every secure, functional, currently
/// consistent prediction assignment to the successor state set that is
/// one-step consistent with each member of `y`. Empty when `u` is inactive
/// or no assignment survives.
pub fn yz_successors(y: &YState, u: usize, prod: &ProductSystem, k: u8) -> BTreeSet<ZState> {
    yz_successors_impl(y, u, prod, k, &mut Budget::new(u64::MAX)).unwrap()
}

fn yz_successors_impl(
    y: &YState,
    u: usize,
    prod: &ProductSystem,
    k: u8,
    budget: &mut Budget,
) -> Option<BTreeSet<ZState>> {
    let succ: Vec<usize> = prod.ts.nx(&y.belief.states(), u).into_iter().collect();
    let mut out = BTreeSet::new();
    if succ.is_empty() {
        return Some(out);
    }
    // h[0] is forced by current consistency; h[1..=K] are free per state.
    let forced: Vec<u32> = succ.iter().map(|x| prod.xf.contains(x) as u32).collect();
    let free = 1u64 << k;
    let mut digits = vec![0u64; succ.len()];
    loop {
        if !budget.charge() {
            return None;
        }
        let belief = Belief(
            succ.iter()
                .zip(&digits)
                .zip(&forced)
                .map(|((&state, &digit), &f)| AugmentedState {
                    state,
                    pred: Prediction { k, bits: ((digit as u32) << 1) | f },
                })
                .collect(),
        );
        if belief.is_secure()
            && y.belief.0.iter().all(|a| {
                let hs: Vec<Prediction> = belief
                    .0
                    .iter()
                    .filter(|b| prod.ts.delta[a.state][u].contains(&b.state))
                    .map(|b| b.pred)
                    .collect();
                delta_ok(&a.pred, &hs)
            })
        {
            out.insert(ZState { belief });
        }
        // Odometer over the per-state free bits.
        let mut pos = 0;
        loop {
            if pos == digits.len() {
                return Some(out);
            }
            digits[pos] += 1;
            if digits[pos] < free {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
}

/// The Y-state reached from `z` on observation `o`: the members whose state
/// observes `o`. `None` when no member does. Security of the filtered belief
/// is the caller's concern.
pub fn zy_successor(z: &ZState, o: usize, prod: &ProductSystem) -> Option<YState> {
    let belief =
        Belief(z.belief.0.iter().filter(|a| prod.ts.obs[a.state] == o).copied().collect());
    if belief.0.is_empty() {
        None
    } else {
        Some(YState { belief, obs: o })
    }
}

/// One singleton Y-state per secure, currently consistent prediction for the
/// initial product state.
pub fn initial_y_states(prod: &ProductSystem, k: u8) -> Vec<YState> {
    let x0 = prod.ts.initial;
    let forced = prod.xf.contains(&x0) as u32;
    let obs = prod.ts.obs[x0];
    (0..1u64 << k)
        .map(|digit| YState {
            belief: Belief::singleton(x0, Prediction { k, bits: ((digit as u32) << 1) | forced }),
            obs,
        })
        .filter(|y| y.belief.is_secure())
        .collect()
}

// Exploration output before pruning: every node reachable by closing the
// initial Y-states under yz/zy, with Z-states that split into an insecure
// belief marked doomed.
struct RawBts {
    y_nodes: Vec<YState>,
    z_nodes: Vec<ZState>,
    yz: BTreeMap<(usize, usize), BTreeSet<usize>>,
    zy: BTreeMap<(usize, usize), usize>,
    z_doomed: Vec<bool>,
    y0: Vec<usize>,
}

fn explore(prod: &ProductSystem, k: u8, budget: &mut Budget) -> Option<RawBts> {
    let mut y_index: BTreeMap<YState, usize> = BTreeMap::new();
    let mut y_nodes: Vec<YState> = Vec::new();
    let mut z_index: BTreeMap<ZState, usize> = BTreeMap::new();
    let mut z_nodes: Vec<ZState> = Vec::new();
    let mut yz: BTreeMap<(usize, usize), BTreeSet<usize>> = BTreeMap::new();
    let mut zy: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut z_doomed: Vec<bool> = Vec::new();
    let mut pending: Vec<usize> = Vec::new();

    let intern_y = |y: YState,
                    y_index: &mut BTreeMap<YState, usize>,
                    y_nodes: &mut Vec<YState>,
                    pending: &mut Vec<usize>| match y_index.get(&y) {
        Some(&i) => i,
        None => {
            let i = y_nodes.len();
            y_index.insert(y.clone(), i);
            y_nodes.push(y);
            pending.push(i);
            i
        }
    };

    let y0: Vec<usize> = initial_y_states(prod, k)
        .into_iter()
        .map(|y| intern_y(y, &mut y_index, &mut y_nodes, &mut pending))
        .collect();

    while let Some(yi) = pending.pop() {
        let y = y_nodes[yi].clone();
        // Active inputs are uniform across a belief (members share an
        // observation), so any member's set serves.
        let probe = y.belief.0.iter().next().expect("beliefs are nonempty").state;
        for u in prod.ts.active_inputs(probe).expect("valid state") {
            for z in yz_successors_impl(&y, u, prod, k, budget)? {
                let zi = match z_index.get(&z) {
                    Some(&i) => i,
                    None => {
                        let i = z_nodes.len();
                        z_index.insert(z.clone(), i);
                        z_doomed.push(false);
                        // Split by observation; an insecure split dooms the
                        // Z-state rather than entering the structure.
                        let obs_set: BTreeSet<usize> =
                            z.belief.0.iter().map(|a| prod.ts.obs[a.state]).collect();
                        for o in obs_set {
                            let y2 = zy_successor(&z, o, prod).expect("member observation");
                            if y2.belief.is_secure() {
                                let ti = intern_y(y2, &mut y_index, &mut y_nodes, &mut pending);
                                zy.insert((i, o), ti);
                            } else {
                                z_doomed[i] = true;
                            }
                        }
                        z_nodes.push(z);
                        i
                    }
                };
                yz.entry((yi, u)).or_default().insert(zi);
            }
        }
    }

    Some(RawBts { y_nodes, z_nodes, yz, zy, z_doomed, y0 })
}

// A Y-state is complete iff some input keeps an alive Z-successor; a Z-state
// is complete iff it is not doomed and every observation split stays alive.
fn y_violates(raw: &RawBts, yi: usize, y_alive: &[bool], z_alive: &[bool]) -> bool {
    debug_assert!(y_alive[yi]);
    !raw.yz
        .range((yi, 0)..=(yi, usize::MAX))
        .any(|(_, zs)| zs.iter().any(|&z| z_alive[z]))
}

fn z_violates(raw: &RawBts, zi: usize, y_alive: &[bool]) -> bool {
    raw.z_doomed[zi]
        || raw.zy.range((zi, 0)..=(zi, usize::MAX)).any(|(_, &y)| !y_alive[y])
}

fn prune(raw: &RawBts) -> (Vec<bool>, Vec<bool>) {
    let mut y_alive = vec![true; raw.y_nodes.len()];
    let mut z_alive = vec![true; raw.z_nodes.len()];
    loop {
        let mut changed = false;
        for zi in 0..z_alive.len() {
            if z_alive[zi] && z_violates(raw, zi, &y_alive) {
                z_alive[zi] = false;
                changed = true;
            }
        }
        for yi in 0..y_alive.len() {
            if y_alive[yi] && y_violates(raw, yi, &y_alive, &z_alive) {
                y_alive[yi] = false;
                changed = true;
            }
        }
        if !changed {
            return (y_alive, z_alive);
        }
    }
}

// Same fixpoint, deleting one node per scan in caller-chosen order; the
// result must not depend on the order.
#[cfg(test)]
fn prune_in_order(raw: &RawBts, order: &[(bool, usize)]) -> (Vec<bool>, Vec<bool>) {
    let mut y_alive = vec![true; raw.y_nodes.len()];
    let mut z_alive = vec![true; raw.z_nodes.len()];
    loop {
        let victim = order.iter().copied().find(|&(is_y, i)| {
            if is_y {
                y_alive[i] && y_violates(raw, i, &y_alive, &z_alive)
            } else {
                z_alive[i] && z_violates(raw, i, &y_alive)
            }
        });
        match victim {
            Some((true, i)) => y_alive[i] = false,
            Some((false, i)) => z_alive[i] = false,
            None => return (y_alive, z_alive),
        }
    }
}

/// The pruned, reachable bipartite structure containing every secure control
/// strategy. Y/Z-states are stored in canonical sorted order; `yz` maps
/// (Y index, input) to Z indices, `zy` maps (Z index, observation) to the
/// unique Y successor. Empty when security alone is infeasible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Aes {
    pub k: u8,
    pub y_states: Vec<YState>,
    pub z_states: Vec<ZState>,
    pub yz: BTreeMap<(usize, usize), BTreeSet<usize>>,
    pub zy: BTreeMap<(usize, usize), usize>,
    pub y0: BTreeSet<usize>,
}

impl Aes {
    pub fn is_empty(&self) -> bool {
        self.y_states.is_empty()
    }
}

fn restrict(raw: &RawBts, y_alive: &[bool], z_alive: &[bool], k: u8) -> Aes {
    // Keep only what alive initial Y-states still reach.
    let mut y_reach = vec![false; raw.y_nodes.len()];
    let mut z_reach = vec![false; raw.z_nodes.len()];
    let mut stack: Vec<usize> = raw.y0.iter().copied().filter(|&y| y_alive[y]).collect();
    for &y in &stack {
        y_reach[y] = true;
    }
    while let Some(yi) = stack.pop() {
        for (_, zs) in raw.yz.range((yi, 0)..=(yi, usize::MAX)) {
            for &zi in zs {
                if z_alive[zi] && !z_reach[zi] {
                    z_reach[zi] = true;
                    for (_, &ti) in raw.zy.range((zi, 0)..=(zi, usize::MAX)) {
                        debug_assert!(y_alive[ti]);
                        if !y_reach[ti] {
                            y_reach[ti] = true;
                            stack.push(ti);
                        }
                    }
                }
            }
        }
    }

    // Renumber into canonical sorted order.
    let mut ys: Vec<usize> = (0..raw.y_nodes.len()).filter(|&i| y_reach[i]).collect();
    ys.sort_by(|&a, &b| raw.y_nodes[a].cmp(&raw.y_nodes[b]));
    let mut zs: Vec<usize> = (0..raw.z_nodes.len()).filter(|&i| z_reach[i]).collect();
    zs.sort_by(|&a, &b| raw.z_nodes[a].cmp(&raw.z_nodes[b]));
    let y_new: BTreeMap<usize, usize> = ys.iter().enumerate().map(|(n, &o)| (o, n)).collect();
    let z_new: BTreeMap<usize, usize> = zs.iter().enumerate().map(|(n, &o)| (o, n)).collect();

    let mut yz = BTreeMap::new();
    for (&(yi, u), zset) in &raw.yz {
        if let Some(&ny) = y_new.get(&yi) {
            let kept: BTreeSet<usize> =
                zset.iter().filter_map(|zi| z_new.get(zi).copied()).collect();
            if !kept.is_empty() {
                yz.insert((ny, u), kept);
            }
        }
    }
    let mut zy = BTreeMap::new();
    for (&(zi, o), &yi) in &raw.zy {
        if let Some(&nz) = z_new.get(&zi) {
            zy.insert((nz, o), y_new[&yi]);
        }
    }

    Aes {
        k,
        y_states: ys.iter().map(|&i| raw.y_nodes[i].clone()).collect(),
        z_states: zs.iter().map(|&i| raw.z_nodes[i].clone()).collect(),
        yz,
        zy,
        y0: raw.y0.iter().filter_map(|y| y_new.get(y).copied()).collect(),
    }
}

/// Builds the largest complete bipartite structure over secure beliefs:
/// forward exploration from the initial Y-states, then iterative deletion of
/// incomplete nodes, then restriction to what surviving initial states reach.
pub fn build_aes(prod: &ProductSystem, k: u8) -> Aes {
    build_aes_bounded(prod, k, u64::MAX).unwrap()
}

/// `build_aes` with a cap on enumerated prediction assignments; `None` when
/// the cap is hit (the structure's yz fan-out is exponential in belief size).
pub fn build_aes_bounded(prod: &ProductSystem, k: u8, max_assignments: u64) -> Option<Aes> {
    let mut budget = Budget::new(max_assignments);
    let raw = explore(prod, k, &mut budget)?;
    let (y_alive, z_alive) = prune(&raw);
    Some(restrict(&raw, &y_alive, &z_alive, k))
}

/// Attractor distances over an Aes: distance 0 at nodes whose belief lies
/// inside `xf_or_sink`; a Y-state is one more than the best Z-successor, a
/// Z-state one more than its worst observation split. `None` means the task
/// cannot be forced from there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dist {
    pub y: Vec<Option<u32>>,
    pub z: Vec<Option<u32>>,
}

pub fn attractor(aes: &Aes, prod: &ProductSystem) -> Dist {
    let target =
        |b: &Belief| b.0.iter().all(|a| prod.xf_or_sink.contains(&a.state));
    let mut dy: Vec<Option<u32>> =
        aes.y_states.iter().map(|y| target(&y.belief).then_some(0)).collect();
    let mut dz: Vec<Option<u32>> =
        aes.z_states.iter().map(|z| target(&z.belief).then_some(0)).collect();

    loop {
        let mut changed = false;
        for zi in 0..dz.len() {
            if dz[zi].is_some() {
                continue;
            }
            let mut worst = 0u32;
            let mut all_finite = true;
            for (_, &yi) in aes.zy.range((zi, 0)..=(zi, usize::MAX)) {
                match dy[yi] {
                    Some(d) => worst = worst.max(d),
                    None => {
                        all_finite = false;
                        break;
                    }
                }
            }
            if all_finite {
                dz[zi] = Some(worst + 1);
                changed = true;
            }
        }
        for yi in 0..dy.len() {
            if dy[yi].is_some() {
                continue;
            }
            let best = aes
                .yz
                .range((yi, 0)..=(yi, usize::MAX))
                .flat_map(|(_, zs)| zs.iter().filter_map(|&z| dz[z]))
                .min();
            if let Some(d) = best {
                dy[yi] = Some(d + 1);
                changed = true;
            }
        }
        if !changed {
            return Dist { y: dy, z: dz };
        }
    }
}

/// A deterministic sub-structure: unique initial Y-state, one chosen
/// (input, Z-successor) per Y-state, all observation splits kept.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetBts {
    pub k: u8,
    pub y_states: Vec<YState>,
    pub z_states: Vec<ZState>,
    pub y0: usize,
    /// Per Y index: the chosen (input, Z index).
    pub y_move: Vec<(usize, usize)>,
    pub zy: BTreeMap<(usize, usize), usize>,
}

/// Algorithm: pick the canonical initial Y-state with finite distance, then
/// greedily follow distance-decreasing edges; once inside the distance-0
/// region every edge stays there, so any canonical choice preserves both
/// liveness and the security invariant.
pub fn extract(aes: &Aes, dist: &Dist) -> Result<DetBts, SynthesisError> {
    let y0 = aes
        .y0
        .iter()
        .copied()
        .filter(|&y| dist.y[y].is_some())
        .min()
        .ok_or(SynthesisError::NoSolution)?;

    let mut chosen: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    let mut stack = vec![y0];
    while let Some(yi) = stack.pop() {
        if chosen.contains_key(&yi) {
            continue;
        }
        let dy = dist.y[yi].expect("reached states have finite distance");
        let pick = aes
            .yz
            .range((yi, 0)..=(yi, usize::MAX))
            .flat_map(|(&(_, u), zs)| zs.iter().map(move |&z| (u, z)))
            .filter(|&(_, z)| dy == 0 || dist.z[z].is_some_and(|d| d < dy))
            .min_by_key(|&(u, z)| (dist.z[z].unwrap_or(u32::MAX), u, z))
            .expect("finite-distance Y-states keep a candidate edge");
        chosen.insert(yi, pick);
        for (_, &ti) in aes.zy.range((pick.1, 0)..=(pick.1, usize::MAX)) {
            stack.push(ti);
        }
    }

    // Canonical renumbering: Aes stores states sorted, so index order is
    // already canonical.
    let ys: Vec<usize> = chosen.keys().copied().collect();
    let zs: BTreeSet<usize> = chosen.values().map(|&(_, z)| z).collect();
    let zs: Vec<usize> = zs.into_iter().collect();
    let y_new: BTreeMap<usize, usize> = ys.iter().enumerate().map(|(n, &o)| (o, n)).collect();
    let z_new: BTreeMap<usize, usize> = zs.iter().enumerate().map(|(n, &o)| (o, n)).collect();

    let mut zy = BTreeMap::new();
    for &zi in &zs {
        for (&(_, o), &yi) in aes.zy.range((zi, 0)..=(zi, usize::MAX)) {
            zy.insert((z_new[&zi], o), y_new[&yi]);
        }
    }

    Ok(DetBts {
        k: aes.k,
        y_states: ys.iter().map(|&i| aes.y_states[i].clone()).collect(),
        z_states: zs.iter().map(|&i| aes.z_states[i].clone()).collect(),
        y0: y_new[&y0],
        y_move: ys.iter().map(|&i| (chosen[&i].0, z_new[&chosen[&i].1])).collect(),
        zy,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ControlError {
    InfeasibleObservation { position: usize },
}

impl fmt::Display for ControlError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ControlError::InfeasibleObservation { position } => {
                write!(f, "observation at position {position} is infeasible under the controller")
            }
        }
    }
}

impl core::error::Error for ControlError {}

/// The finite presentation of the decoded policy: one row per feasible
/// observation sequence that can still occur before completion, plus the
/// inputs used at completed beliefs (the table's "else" line).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyTable {
    pub rows: Vec<(Vec<usize>, usize)>,
    pub else_inputs: BTreeSet<usize>,
}

/// Executable form of a deterministic structure: observation sequences in,
/// control inputs out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Controller {
    pub bts: DetBts,
}

pub fn decode(bts: DetBts) -> Controller {
    Controller { bts }
}

impl Controller {
    /// The Y-state reached by an observation sequence (first element is the
    /// initial observation).
    pub fn y_state_for(&self, obs: &[usize]) -> Result<usize, ControlError> {
        let t = &self.bts;
        match obs.first() {
            Some(&o) if o == t.y_states[t.y0].obs => {}
            _ => return Err(ControlError::InfeasibleObservation { position: 0 }),
        }
        let mut y = t.y0;
        for (i, &o) in obs.iter().enumerate().skip(1) {
            let z = t.y_move[y].1;
            y = *t
                .zy
                .get(&(z, o))
                .ok_or(ControlError::InfeasibleObservation { position: i })?;
        }
        Ok(y)
    }

    /// The control input after an observation sequence; infeasible sequences
    /// are rejected.
    pub fn input_for(&self, obs: &[usize]) -> Result<usize, ControlError> {
        Ok(self.bts.y_move[self.y_state_for(obs)?].0)
    }

    /// Total variant: infeasible sequences fall back to the smallest input
    /// the structure uses anywhere, mirroring the catch-all table row.
    pub fn input_or_default(&self, obs: &[usize]) -> usize {
        self.input_for(obs).unwrap_or_else(|_| self.default_input())
    }

    pub fn default_input(&self) -> usize {
        self.bts.y_move.iter().map(|&(u, _)| u).min().expect("nonempty structure")
    }

    /// Enumerates the pre-completion rows; finite because the attractor
    /// distance strictly decreases along them. Rows are sorted by (length,
    /// sequence); `else_inputs` collects the inputs at completed beliefs.
    pub fn policy_rows(&self, prod: &ProductSystem) -> PolicyTable {
        let t = &self.bts;
        let completed =
            |y: usize| t.y_states[y].belief.0.iter().all(|a| prod.xf_or_sink.contains(&a.state));
        let mut rows: Vec<(Vec<usize>, usize)> = Vec::new();
        let mut else_inputs = BTreeSet::new();
        let mut stack = vec![(t.y0, vec![t.y_states[t.y0].obs])];
        while let Some((y, seq)) = stack.pop() {
            if completed(y) {
                else_inputs.insert(t.y_move[y].0);
                continue;
            }
            rows.push((seq.clone(), t.y_move[y].0));
            let z = t.y_move[y].1;
            for (&(_, o), &y2) in t.zy.range((z, 0)..=(z, usize::MAX)) {
                let mut next = seq.clone();
                next.push(o);
                stack.push((y2, next));
            }
        }
        rows.sort_by(|a, b| (a.0.len(), &a.0).cmp(&(b.0.len(), &b.0)));
        PolicyTable { rows, else_inputs }
    }

    /// Finite-memory form for the independent checks: memory 0 awaits the
    /// first observation, memory y+1 executes Y-state y.
    pub fn to_mealy(&self) -> crate::verify::MealyController {
        let t = &self.bts;
        let mut update = BTreeMap::new();
        update.insert((0, t.y_states[t.y0].obs), t.y0 + 1);
        let mut output = alloc::vec![None];
        for (yi, &(u, z)) in t.y_move.iter().enumerate() {
            output.push(Some(u));
            for (&(_, o), &y2) in t.zy.range((z, 0)..=(z, usize::MAX)) {
                update.insert((yi + 1, o), y2 + 1);
            }
        }
        crate::verify::MealyController {
            n_mem: t.y_states.len() + 1,
            initial: 0,
            update,
            output,
        }
    }
}
