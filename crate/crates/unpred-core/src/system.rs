//! The nondeterministic transition system under control: states with atomic
//! proposition labels, control inputs, a set-valued successor relation, and
//! an observation map that drives what the controller (and any eavesdropper)
//! sees. Identifiers are strings at the boundary and dense integers inside;
//! models loaded from raw form sort every name table so equal models intern
//! identically.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::formula::{ApSet, ApSetError, Label};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SystemError {
    EmptyStates,
    EmptyName,
    DuplicateState(String),
    DuplicateInput(String),
    UnknownState(String),
    UnknownInput(String),
    UnknownAp(String),
    UnknownStateId(usize),
    MissingObservation(String),
    NameClash(String),
    Ap(ApSetError),
}

impl fmt::Display for SystemError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SystemError::EmptyStates => write!(f, "a system needs at least one state"),
            SystemError::EmptyName => write!(f, "empty identifier"),
            SystemError::DuplicateState(n) => write!(f, "duplicate state `{n}`"),
            SystemError::DuplicateInput(n) => write!(f, "duplicate input `{n}`"),
            SystemError::UnknownState(n) => write!(f, "unknown state `{n}`"),
            SystemError::UnknownInput(n) => write!(f, "unknown input `{n}`"),
            SystemError::UnknownAp(n) => write!(f, "unknown atomic proposition `{n}`"),
            SystemError::UnknownStateId(i) => write!(f, "state id {i} out of range"),
            SystemError::MissingObservation(n) => {
                write!(f, "state `{n}` has no observation symbol")
            }
            SystemError::NameClash(n) => write!(f, "identifier `{n}` is already in use"),
            SystemError::Ap(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for SystemError {}

impl From<ApSetError> for SystemError {
    fn from(e: ApSetError) -> Self {
        SystemError::Ap(e)
    }
}

/// String-named exchange form of a system, mirroring the model file layout.
/// `labels` may omit states (empty label); `observations: None` means the
/// identity map (each state observes its own name).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RawSystem {
    pub states: Vec<String>,
    pub initial: String,
    pub inputs: Vec<String>,
    pub transitions: Vec<RawTransition>,
    pub ap: Vec<String>,
    pub labels: BTreeMap<String, Vec<String>>,
    pub observations: Option<BTreeMap<String, String>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawTransition {
    pub from: String,
    pub input: String,
    pub to: String,
}

impl RawTransition {
    pub fn new(from: &str, input: &str, to: &str) -> Self {
        RawTransition { from: from.to_string(), input: input.to_string(), to: to.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionSystem {
    pub state_names: Vec<String>,
    pub input_names: Vec<String>,
    pub obs_names: Vec<String>,
    pub aps: ApSet,
    pub initial: usize,
    /// Proposition label per state.
    pub labels: Vec<Label>,
    /// Observation symbol per state.
    pub obs: Vec<usize>,
    /// `delta[state][input]` -> successor set; empty means inactive.
    pub delta: Vec<Vec<BTreeSet<usize>>>,
}

/// A finite alternating path `x0 u1 x1 … un xn`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Path {
    pub states: Vec<usize>,
    pub inputs: Vec<usize>,
}

impl Path {
    pub fn root(x: usize) -> Self {
        Path { states: vec![x], inputs: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Every consecutive triple is a transition and the shapes line up.
    pub fn is_valid(&self, ts: &TransitionSystem) -> bool {
        self.states.len() == self.inputs.len() + 1
            && self.states.iter().all(|&x| x < ts.n_states())
            && self.inputs.iter().enumerate().all(|(i, &u)| {
                u < ts.n_inputs() && ts.delta[self.states[i]][u].contains(&self.states[i + 1])
            })
    }

    pub fn is_rooted(&self, ts: &TransitionSystem) -> bool {
        self.states.first() == Some(&ts.initial)
    }
}

/// Standing-assumption check results; an empty report means the model is
/// usable for synthesis.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    /// States with no active input (liveness violations).
    pub dead_states: Vec<usize>,
    /// State pairs sharing an observation but not an active-input set.
    pub nonuniform: Vec<(usize, usize)>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.dead_states.is_empty() && self.nonuniform.is_empty()
    }
}

fn intern(names: &[String], kind_dup: fn(String) -> SystemError) -> Result<Vec<String>, SystemError> {
    let mut sorted: Vec<String> = names.to_vec();
    sorted.sort();
    if sorted.iter().any(|n| n.is_empty()) {
        return Err(SystemError::EmptyName);
    }
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            return Err(kind_dup(w[0].clone()));
        }
    }
    Ok(sorted)
}

// Name tables are small; a scan also serves directly-built systems (such as
// products) whose canonical order is not lexicographic.
fn id_of(names: &[String], name: &str) -> Option<usize> {
    names.iter().position(|n| n == name)
}

impl TransitionSystem {
    pub fn n_states(&self) -> usize {
        self.state_names.len()
    }

    pub fn n_inputs(&self) -> usize {
        self.input_names.len()
    }

    pub fn n_obs(&self) -> usize {
        self.obs_names.len()
    }

    pub fn state_id(&self, name: &str) -> Option<usize> {
        id_of(&self.state_names, name)
    }

    pub fn input_id(&self, name: &str) -> Option<usize> {
        id_of(&self.input_names, name)
    }

    pub fn obs_id(&self, name: &str) -> Option<usize> {
        id_of(&self.obs_names, name)
    }

    /// Successors of a single state under one input.
    pub fn succ(&self, x: usize, u: usize) -> &BTreeSet<usize> {
        &self.delta[x][u]
    }

    /// Successors of a state set under one input.
    pub fn nx(&self, q: &BTreeSet<usize>, u: usize) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        for &x in q {
            out.extend(self.delta[x][u].iter().copied());
        }
        out
    }

    /// Inputs with at least one successor at `x`.
    pub fn active_inputs(&self, x: usize) -> Result<BTreeSet<usize>, SystemError> {
        let row = self.delta.get(x).ok_or(SystemError::UnknownStateId(x))?;
        Ok((0..self.n_inputs()).filter(|&u| !row[u].is_empty()).collect())
    }

    /// The pointwise observation sequence of a path's states.
    pub fn observe(&self, p: &Path) -> Vec<usize> {
        p.states.iter().map(|&x| self.obs[x]).collect()
    }

    /// Checks liveness and observation-uniform control; reports every
    /// violation rather than failing on the first.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let active: Vec<BTreeSet<usize>> =
            (0..self.n_states()).map(|x| self.active_inputs(x).unwrap()).collect();
        for (x, a) in active.iter().enumerate() {
            if a.is_empty() {
                report.dead_states.push(x);
            }
        }
        for x in 0..self.n_states() {
            for y in x + 1..self.n_states() {
                if self.obs[x] == self.obs[y] && active[x] != active[y] {
                    report.nonuniform.push((x, y));
                }
            }
        }
        report
    }

    /// Appends a fresh absorbing `stop` state reachable from every state by a
    /// fresh `stop` input, with its own observation symbol. Fails if any of
    /// the three names is taken.
    pub fn add_stop(&self) -> Result<TransitionSystem, SystemError> {
        let taken = self
            .state_names
            .iter()
            .chain(&self.input_names)
            .chain(&self.obs_names)
            .any(|n| n == "stop");
        if taken {
            return Err(SystemError::NameClash("stop".to_string()));
        }
        let mut raw = self.to_raw();
        raw.states.push("stop".to_string());
        raw.inputs.push("stop".to_string());
        for s in raw.states.clone() {
            raw.transitions.push(RawTransition::new(&s, "stop", "stop"));
        }
        if let Some(map) = &mut raw.observations {
            map.insert("stop".to_string(), "stop".to_string());
        }
        TransitionSystem::from_raw(&raw)
    }

    pub fn from_raw(raw: &RawSystem) -> Result<TransitionSystem, SystemError> {
        if raw.states.is_empty() {
            return Err(SystemError::EmptyStates);
        }
        let state_names = intern(&raw.states, SystemError::DuplicateState)?;
        let input_names = intern(&raw.inputs, SystemError::DuplicateInput)?;
        let aps = ApSet::new(raw.ap.iter().cloned())?;

        let state = |n: &str| {
            id_of(&state_names, n).ok_or_else(|| SystemError::UnknownState(n.to_string()))
        };
        let initial = state(&raw.initial)?;

        let mut delta = vec![vec![BTreeSet::new(); input_names.len()]; state_names.len()];
        for t in &raw.transitions {
            let from = state(&t.from)?;
            let to = state(&t.to)?;
            let input = id_of(&input_names, &t.input)
                .ok_or_else(|| SystemError::UnknownInput(t.input.clone()))?;
            delta[from][input].insert(to);
        }

        let mut labels = vec![Label::EMPTY; state_names.len()];
        for (name, props) in &raw.labels {
            let x = state(name)?;
            for p in props {
                let i = aps.index_of(p).ok_or_else(|| SystemError::UnknownAp(p.clone()))?;
                labels[x] = labels[x].with(i);
            }
        }

        let (obs_names, obs) = match &raw.observations {
            None => (state_names.clone(), (0..state_names.len()).collect()),
            Some(map) => {
                for name in map.keys() {
                    state(name)?;
                }
                let mut symbols: Vec<String> = Vec::new();
                for name in &state_names {
                    let symbol = map
                        .get(name)
                        .ok_or_else(|| SystemError::MissingObservation(name.clone()))?;
                    if symbol.is_empty() {
                        return Err(SystemError::EmptyName);
                    }
                    symbols.push(symbol.clone());
                }
                let mut obs_names: Vec<String> = symbols.clone();
                obs_names.sort();
                obs_names.dedup();
                let obs = symbols.iter().map(|s| id_of(&obs_names, s).unwrap()).collect();
                (obs_names, obs)
            }
        };

        Ok(TransitionSystem {
            state_names,
            input_names,
            obs_names,
            aps,
            initial,
            labels,
            obs,
            delta,
        })
    }

    pub fn to_raw(&self) -> RawSystem {
        let mut transitions = Vec::new();
        for (x, row) in self.delta.iter().enumerate() {
            for (u, succs) in row.iter().enumerate() {
                for &y in succs {
                    transitions.push(RawTransition::new(
                        &self.state_names[x],
                        &self.input_names[u],
                        &self.state_names[y],
                    ));
                }
            }
        }

        let mut labels = BTreeMap::new();
        for (x, l) in self.labels.iter().enumerate() {
            let props: Vec<String> = (0..self.aps.len())
                .filter(|&i| l.contains(i))
                .map(|i| self.aps.name(i).to_string())
                .collect();
            if !props.is_empty() {
                labels.insert(self.state_names[x].clone(), props);
            }
        }

        let identity = self.obs_names == self.state_names
            && self.obs.iter().enumerate().all(|(x, &o)| o == x);
        let observations = if identity {
            None
        } else {
            Some(
                self.obs
                    .iter()
                    .enumerate()
                    .map(|(x, &o)| (self.state_names[x].clone(), self.obs_names[o].clone()))
                    .collect(),
            )
        };

        RawSystem {
            states: self.state_names.clone(),
            initial: self.state_names[self.initial].clone(),
            inputs: self.input_names.clone(),
            transitions,
            ap: self.aps.names().to_vec(),
            labels,
            observations,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{robot6, robot6_raw};

    #[test]
    fn from_raw_interns_running_example() {
        let ts = robot6();
        assert_eq!(ts.state_names, ["1", "2", "3", "4", "5", "6"]);
        assert_eq!(ts.input_names, ["c1", "c2"]);
        assert_eq!(ts.obs_names, ts.state_names);
        assert_eq!(ts.initial, 0);
        assert_eq!(ts.labels[1], Label(0b01)); // region 2 carries p1
        assert_eq!(ts.labels[5], Label(0b10)); // region 6 carries p2
        assert!(ts.labels.iter().enumerate().all(|(x, &l)| {
            x == 1 || x == 5 || l == Label::EMPTY
        }));
        assert_eq!(ts.obs, vec![0, 1, 2, 3, 4, 5]);
        // Frozen successor table.
        let d = &ts.delta;
        assert_eq!(d[0][0], BTreeSet::from([1]));
        assert!(d[0][1].is_empty());
        assert_eq!(d[1][0], BTreeSet::from([3, 4]));
        assert_eq!(d[1][1], BTreeSet::from([2]));
        assert_eq!(d[2][0], BTreeSet::from([5]));
        assert!(d[2][1].is_empty());
        assert_eq!(d[3][0], BTreeSet::from([4, 5]));
        assert_eq!(d[3][1], BTreeSet::from([2]));
        assert_eq!(d[4][0], BTreeSet::from([3]));
        assert_eq!(d[4][1], BTreeSet::from([5]));
        assert_eq!(d[5][0], BTreeSet::from([5]));
        assert!(d[5][1].is_empty());
    }

    #[test]
    fn from_raw_rejects_malformed_models() {
        let base = robot6_raw();

        let mut raw = base.clone();
        raw.states.push("3".to_string());
        assert_eq!(
            TransitionSystem::from_raw(&raw),
            Err(SystemError::DuplicateState("3".to_string()))
        );

        let mut raw = base.clone();
        raw.initial = "7".to_string();
        assert_eq!(
            TransitionSystem::from_raw(&raw),
            Err(SystemError::UnknownState("7".to_string()))
        );

        let mut raw = base.clone();
        raw.transitions.push(RawTransition::new("1", "c3", "2"));
        assert_eq!(
            TransitionSystem::from_raw(&raw),
            Err(SystemError::UnknownInput("c3".to_string()))
        );

        let mut raw = base.clone();
        raw.labels.insert("2".to_string(), vec!["p9".to_string()]);
        assert_eq!(
            TransitionSystem::from_raw(&raw),
            Err(SystemError::UnknownAp("p9".to_string()))
        );

        let mut raw = base.clone();
        raw.observations = Some(BTreeMap::from([("1".to_string(), "o".to_string())]));
        assert_eq!(
            TransitionSystem::from_raw(&raw),
            Err(SystemError::MissingObservation("2".to_string()))
        );

        let mut raw = base;
        raw.states.clear();
        assert_eq!(TransitionSystem::from_raw(&raw), Err(SystemError::EmptyStates));
    }

    #[test]
    fn validate_accepts_running_example() {
        assert!(robot6().validate().is_ok());
    }

    #[test]
    fn validate_reports_dead_states() {
        let mut raw = robot6_raw();
        // Drop region 6's self-loop: it becomes a sink.
        raw.transitions.retain(|t| t.from != "6");
        // Keep observation classes apart so only liveness is violated.
        let ts = TransitionSystem::from_raw(&raw).unwrap();
        let report = ts.validate();
        assert_eq!(report.dead_states, vec![5]);
        assert!(report.nonuniform.is_empty());
    }

    #[test]
    fn validate_reports_nonuniform_observation_classes() {
        // Merge the observations of regions 3 (active {c1}) and 5 ({c1,c2}).
        let mut raw = robot6_raw();
        let mut obs: BTreeMap<String, String> = ["1", "2", "3", "4", "5", "6"]
            .iter()
            .map(|s| (s.to_string(), s.to_string()))
            .collect();
        obs.insert("3".to_string(), "o35".to_string());
        obs.insert("5".to_string(), "o35".to_string());
        raw.observations = Some(obs);
        let ts = TransitionSystem::from_raw(&raw).unwrap();
        let report = ts.validate();
        assert!(report.dead_states.is_empty());
        assert_eq!(report.nonuniform, vec![(2, 4)]);
    }

    #[test]
    fn nx_matches_edge_scans() {
        let ts = robot6();
        let c1 = ts.input_id("c1").unwrap();
        let q2 = BTreeSet::from([ts.state_id("2").unwrap()]);
        let names = |q: &BTreeSet<usize>| -> Vec<&str> {
            q.iter().map(|&x| ts.state_names[x].as_str()).collect()
        };
        assert_eq!(names(&ts.nx(&q2, c1)), ["4", "5"]);
        assert!(ts.nx(&BTreeSet::new(), c1).is_empty());
        let q24 = BTreeSet::from([ts.state_id("2").unwrap(), ts.state_id("4").unwrap()]);
        assert_eq!(names(&ts.nx(&q24, c1)), ["4", "5", "6"]);
    }

    #[test]
    fn active_inputs_and_errors() {
        let ts = robot6();
        assert_eq!(ts.active_inputs(ts.state_id("2").unwrap()).unwrap(), BTreeSet::from([0, 1]));
        assert_eq!(ts.active_inputs(ts.state_id("4").unwrap()).unwrap(), BTreeSet::from([0, 1]));
        assert_eq!(ts.active_inputs(ts.state_id("6").unwrap()).unwrap(), BTreeSet::from([0]));
        assert_eq!(ts.active_inputs(99), Err(SystemError::UnknownStateId(99)));
    }

    #[test]
    fn observe_is_pointwise() {
        let ts = robot6();
        let p = Path { states: vec![0, 1, 2], inputs: vec![0, 1] };
        assert!(p.is_valid(&ts) && p.is_rooted(&ts));
        assert_eq!(ts.observe(&p), vec![0, 1, 2]);
        assert_eq!(ts.observe(&Path::root(3)), vec![3]);

        let mut raw = robot6_raw();
        raw.observations = Some(
            ["1", "2", "3", "4", "5", "6"]
                .iter()
                .map(|s| (s.to_string(), "o".to_string()))
                .collect(),
        );
        let constant = TransitionSystem::from_raw(&raw).unwrap();
        assert_eq!(constant.observe(&p), vec![0, 0, 0]);
    }

    #[test]
    fn path_validity_checks_triples() {
        let ts = robot6();
        assert!(Path { states: vec![0, 1, 3, 5], inputs: vec![0, 0, 0] }.is_valid(&ts));
        assert!(!Path { states: vec![0, 2], inputs: vec![0] }.is_valid(&ts));
        assert!(!Path { states: vec![0, 1], inputs: vec![] }.is_valid(&ts));
        assert!(!Path::root(2).is_rooted(&ts));
    }

    #[test]
    fn add_stop_appends_absorbing_state() {
        let ts = robot6();
        let stopped = ts.add_stop().unwrap();
        assert_eq!(stopped.n_states(), 7);
        assert_eq!(stopped.n_inputs(), 3);
        let stop = stopped.state_id("stop").unwrap();
        let stop_u = stopped.input_id("stop").unwrap();
        assert_eq!(stopped.obs_names[stopped.obs[stop]], "stop");
        assert_eq!(stopped.labels[stop], Label::EMPTY);
        for x in 0..stopped.n_states() {
            assert_eq!(stopped.delta[x][stop_u], BTreeSet::from([stop]));
        }
        assert!(stopped.validate().is_ok());
        assert_eq!(stopped.add_stop(), Err(SystemError::NameClash("stop".to_string())));
    }

    #[test]
    fn raw_round_trip_is_identity() {
        let ts = robot6();
        let raw = ts.to_raw();
        assert!(raw.observations.is_none()); // identity map stays implicit
        assert_eq!(TransitionSystem::from_raw(&raw).unwrap(), ts);

        let mut named = robot6_raw();
        named.observations = Some(
            ["1", "2", "3", "4", "5", "6"]
                .iter()
                .map(|s| (s.to_string(), alloc::format!("o{s}")))
                .collect(),
        );
        let ts2 = TransitionSystem::from_raw(&named).unwrap();
        let raw2 = ts2.to_raw();
        assert!(raw2.observations.is_some());
        assert_eq!(TransitionSystem::from_raw(&raw2).unwrap(), ts2);
    }
}
