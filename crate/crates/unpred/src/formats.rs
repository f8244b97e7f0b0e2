//! JSON schemas for models, controllers, hand-written policies, and
//! verification reports, with conversions to and from the core types.
//! Unknown fields are rejected everywhere so typos fail loudly.

use std::collections::BTreeMap;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use unpred_core::product::ProductSystem;
use unpred_core::synthesis::{check_k, AugmentedState, Belief, DetBts, Prediction, YState, ZState};
use unpred_core::system::{RawSystem, RawTransition};
use unpred_core::verify::MealyController;

/// Serializes with sorted keys, two-space indentation, and a trailing
/// newline — every file the toolkit writes goes through here.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

// ---------------------------------------------------------------------------
// Model files.

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionFile {
    pub from: String,
    pub input: String,
    pub to: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub states: Vec<String>,
    pub initial: String,
    pub inputs: Vec<String>,
    pub transitions: Vec<TransitionFile>,
    pub ap: Vec<String>,
    #[serde(default)]
    pub labels: BTreeMap<String, Vec<String>>,
    /// Omitted map means states are observed exactly.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observations: Option<BTreeMap<String, String>>,
}

impl ModelFile {
    pub fn to_raw(&self) -> RawSystem {
        RawSystem {
            states: self.states.clone(),
            initial: self.initial.clone(),
            inputs: self.inputs.clone(),
            transitions: self
                .transitions
                .iter()
                .map(|t| RawTransition::new(&t.from, &t.input, &t.to))
                .collect(),
            ap: self.ap.clone(),
            labels: self.labels.clone(),
            observations: self.observations.clone(),
        }
    }

    pub fn from_raw(raw: &RawSystem) -> ModelFile {
        ModelFile {
            states: raw.states.clone(),
            initial: raw.initial.clone(),
            inputs: raw.inputs.clone(),
            transitions: raw
                .transitions
                .iter()
                .map(|t| TransitionFile {
                    from: t.from.clone(),
                    input: t.input.clone(),
                    to: t.to.clone(),
                })
                .collect(),
            ap: raw.ap.clone(),
            labels: raw.labels.clone(),
            observations: raw.observations.clone(),
        }
    }
}

// ---------------------------------------------------------------------------
// Synthesized controller files (a serialized deterministic BTS).

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemberFile {
    pub state: String,
    /// Prediction bits rendered oldest-horizon-first, e.g. "0010".
    pub pred: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct YNodeFile {
    pub belief: Vec<MemberFile>,
    pub obs: String,
    pub input: String,
    pub z: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZNodeFile {
    pub belief: Vec<MemberFile>,
    /// Observation name → successor Y-node index.
    pub edges: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerFile {
    pub k: u32,
    pub initial: usize,
    pub y_nodes: Vec<YNodeFile>,
    pub z_nodes: Vec<ZNodeFile>,
}

fn members_of(belief: &Belief, prod: &ProductSystem) -> Vec<MemberFile> {
    belief
        .0
        .iter()
        .map(|a| MemberFile {
            state: prod.ts.state_names[a.state].clone(),
            pred: a.pred.render(),
        })
        .collect()
}

fn belief_of(members: &[MemberFile], prod: &ProductSystem, k: u8) -> Result<Belief> {
    let mut set = std::collections::BTreeSet::new();
    for m in members {
        let state = prod
            .ts
            .state_id(&m.state)
            .ok_or_else(|| anyhow!("unknown product state '{}'", m.state))?;
        let pred = Prediction::from_text(&m.pred)
            .ok_or_else(|| anyhow!("malformed prediction '{}'", m.pred))?;
        if pred.k != k {
            bail!("prediction '{}' has horizon {}, controller has {}", m.pred, pred.k, k);
        }
        set.insert(AugmentedState { state, pred });
    }
    if set.is_empty() {
        bail!("empty belief");
    }
    Ok(Belief(set))
}

pub fn controller_to_file(bts: &DetBts, prod: &ProductSystem) -> ControllerFile {
    ControllerFile {
        k: bts.k as u32,
        initial: bts.y0,
        y_nodes: bts
            .y_states
            .iter()
            .zip(&bts.y_move)
            .map(|(y, &(u, z))| YNodeFile {
                belief: members_of(&y.belief, prod),
                obs: prod.ts.obs_names[y.obs].clone(),
                input: prod.ts.input_names[u].clone(),
                z,
            })
            .collect(),
        z_nodes: bts
            .z_states
            .iter()
            .enumerate()
            .map(|(zi, z)| ZNodeFile {
                belief: members_of(&z.belief, prod),
                edges: bts
                    .zy
                    .range((zi, 0)..=(zi, usize::MAX))
                    .map(|(&(_, o), &y)| (prod.ts.obs_names[o].clone(), y))
                    .collect(),
            })
            .collect(),
    }
}

pub fn controller_from_file(cf: &ControllerFile, prod: &ProductSystem) -> Result<DetBts> {
    let k = check_k(cf.k).map_err(|e| anyhow!("{e}"))?;
    if cf.y_nodes.is_empty() {
        bail!("controller has no Y-nodes");
    }
    if cf.initial >= cf.y_nodes.len() {
        bail!("initial Y-node {} out of range", cf.initial);
    }
    let mut y_states = Vec::new();
    let mut y_move = Vec::new();
    for (i, y) in cf.y_nodes.iter().enumerate() {
        let belief = belief_of(&y.belief, prod, k).with_context(|| format!("y_nodes[{i}]"))?;
        let obs = prod
            .ts
            .obs_id(&y.obs)
            .ok_or_else(|| anyhow!("y_nodes[{i}]: unknown observation '{}'", y.obs))?;
        let input = prod
            .ts
            .input_id(&y.input)
            .ok_or_else(|| anyhow!("y_nodes[{i}]: unknown input '{}'", y.input))?;
        if y.z >= cf.z_nodes.len() {
            bail!("y_nodes[{i}]: Z-node {} out of range", y.z);
        }
        y_states.push(YState { belief, obs });
        y_move.push((input, y.z));
    }
    let mut z_states = Vec::new();
    let mut zy = BTreeMap::new();
    for (i, z) in cf.z_nodes.iter().enumerate() {
        let belief = belief_of(&z.belief, prod, k).with_context(|| format!("z_nodes[{i}]"))?;
        z_states.push(ZState { belief });
        for (obs_name, &y) in &z.edges {
            let o = prod
                .ts
                .obs_id(obs_name)
                .ok_or_else(|| anyhow!("z_nodes[{i}]: unknown observation '{obs_name}'"))?;
            if y >= cf.y_nodes.len() {
                bail!("z_nodes[{i}]: Y-node {y} out of range");
            }
            zy.insert((i, o), y);
        }
    }
    Ok(DetBts { k, y_states, z_states, y0: cf.initial, y_move, zy })
}

// ---------------------------------------------------------------------------
// Hand-written Mealy policy files (for baselines).

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UpdateFile {
    pub from: String,
    pub obs: String,
    pub to: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyFile {
    pub memories: Vec<String>,
    pub initial: String,
    pub update: Vec<UpdateFile>,
    /// Memory → input; memories that never follow an observation may be
    /// omitted.
    pub output: BTreeMap<String, String>,
}

pub fn policy_to_mealy(pf: &PolicyFile, prod: &ProductSystem) -> Result<MealyController> {
    let mem_id = |name: &str| -> Result<usize> {
        pf.memories
            .iter()
            .position(|m| m == name)
            .ok_or_else(|| anyhow!("unknown memory '{name}'"))
    };
    for (i, m) in pf.memories.iter().enumerate() {
        if pf.memories[..i].contains(m) {
            bail!("duplicate memory '{m}'");
        }
    }
    let initial = mem_id(&pf.initial)?;
    let mut update = BTreeMap::new();
    for u in &pf.update {
        let from = mem_id(&u.from)?;
        let to = mem_id(&u.to)?;
        let o = prod
            .ts
            .obs_id(&u.obs)
            .ok_or_else(|| anyhow!("unknown observation '{}'", u.obs))?;
        if update.insert((from, o), to).is_some() {
            bail!("duplicate update for ('{}', '{}')", u.from, u.obs);
        }
    }
    let mut output = vec![None; pf.memories.len()];
    for (mem, input) in &pf.output {
        let m = mem_id(mem)?;
        let u = prod
            .ts
            .input_id(input)
            .ok_or_else(|| anyhow!("unknown input '{input}'"))?;
        output[m] = Some(u);
    }
    Ok(MealyController { n_mem: pf.memories.len(), initial, update, output })
}

// ---------------------------------------------------------------------------
// Verification reports.

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessesFile {
    /// Observation sequence after which the intruder's prediction is certain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unpredictable: Option<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportFile {
    pub live: bool,
    pub task: bool,
    pub unpredictable: bool,
    pub witnesses: WitnessesFile,
}

impl ReportFile {
    pub fn all_pass(&self) -> bool {
        self.live && self.task && self.unpredictable
    }
}
