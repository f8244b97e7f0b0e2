//! Shared test fixtures: the 6-region robot model and its patrol task.

use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::vec;

use crate::automata::{compile, minimize, modify, ModifiedDfa};
use crate::formula::{parse, ApSet, Formula};
use crate::product::{build_product, ProductSystem};
use crate::system::{RawSystem, RawTransition, TransitionSystem};

/// The 6-region robot workspace: regions 1..6, inputs c1/c2, p1 at region 2,
/// p2 at region 6, identity observations.
pub fn robot6_raw() -> RawSystem {
    let t = RawTransition::new;
    RawSystem {
        states: ["1", "2", "3", "4", "5", "6"].map(str::to_string).to_vec(),
        initial: "1".to_string(),
        inputs: ["c1", "c2"].map(str::to_string).to_vec(),
        transitions: vec![
            t("1", "c1", "2"),
            t("2", "c1", "4"),
            t("2", "c1", "5"),
            t("2", "c2", "3"),
            t("3", "c1", "6"),
            t("4", "c1", "5"),
            t("4", "c1", "6"),
            t("4", "c2", "3"),
            t("5", "c1", "4"),
            t("5", "c2", "6"),
            t("6", "c1", "6"),
        ],
        ap: ["p1", "p2"].map(str::to_string).to_vec(),
        labels: BTreeMap::from([
            ("2".to_string(), vec!["p1".to_string()]),
            ("6".to_string(), vec!["p2".to_string()]),
        ]),
        observations: None,
    }
}

pub fn robot6() -> TransitionSystem {
    TransitionSystem::from_raw(&robot6_raw()).unwrap()
}

pub fn robot_aps() -> ApSet {
    ApSet::new(["p1", "p2"]).unwrap()
}

/// The patrol task: eventually reach p1 and afterwards p2.
pub fn robot_formula() -> Formula {
    parse("F(p1 & F p2)", &robot_aps()).unwrap()
}

/// The task automaton as used by the product: compiled, minimized, modified.
pub fn robot_dfa() -> ModifiedDfa {
    modify(&minimize(&compile(&robot_formula(), &robot_aps()).unwrap()))
}

/// The 7-state product x1..x7 with xf = {x6}, xf_or_sink = {x6, x7}.
pub fn robot_product() -> ProductSystem {
    build_product(&robot6(), &robot_dfa()).unwrap()
}

/// A single self-looping state labeled p1 under the task `p1`: the product's
/// initial state is already in xf.
pub fn immediate_product() -> ProductSystem {
    let aps = ApSet::new(["p1"]).unwrap();
    let raw = RawSystem {
        states: vec!["a".to_string()],
        initial: "a".to_string(),
        inputs: vec!["u".to_string()],
        transitions: vec![RawTransition::new("a", "u", "a")],
        ap: vec!["p1".to_string()],
        labels: BTreeMap::from([("a".to_string(), vec!["p1".to_string()])]),
        observations: None,
    };
    let ts = TransitionSystem::from_raw(&raw).unwrap();
    let m = modify(&compile(&parse("p1", &aps).unwrap(), &aps).unwrap());
    build_product(&ts, &m).unwrap()
}
