//! DOT renderings of the pipeline artifacts. Output is deterministic: nodes
//! in index order, edges in canonical map order, no timestamps — re-export
//! is byte-identical.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use unpred_core::automata::ModifiedDfa;
use unpred_core::formula::{ApSet, Label};
use unpred_core::product::ProductSystem;
use unpred_core::synthesis::{Aes, Belief, DetBts};

fn quoted(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// The modified task automaton: accepting states doubly circled, the
/// non-accepting sink dashed, edges grouped and labeled by letter sets.
pub fn dfa_dot(m: &ModifiedDfa, aps: &ApSet) -> String {
    let mut s = String::from("digraph dfa {\n  rankdir=LR;\n  node [shape=circle];\n");
    let _ = writeln!(s, "  start [shape=none, label=\"\"];");
    for (i, name) in m.dfa.state_names.iter().enumerate() {
        let mut attrs = vec![format!("label={}", quoted(name))];
        if m.dfa.accepting[i] {
            attrs.push(String::from("peripheries=2"));
        }
        if i == m.sink_bad {
            attrs.push(String::from("style=dashed"));
        }
        let _ = writeln!(s, "  q{i} [{}];", attrs.join(", "));
    }
    let _ = writeln!(s, "  start -> q{};", m.dfa.initial);
    let mut grouped: BTreeMap<(usize, usize), Vec<String>> = BTreeMap::new();
    for (i, row) in m.dfa.delta.iter().enumerate() {
        for (l, &j) in row.iter().enumerate() {
            grouped.entry((i, j)).or_default().push(Label(l as u32).render(aps));
        }
    }
    for ((i, j), labels) in grouped {
        let _ = writeln!(s, "  q{i} -> q{j} [label={}];", quoted(&labels.join(" | ")));
    }
    s.push_str("}\n");
    s
}

/// The product: completion states doubly circled, the absorbing
/// post-completion states filled, edges labeled by input.
pub fn product_dot(prod: &ProductSystem) -> String {
    let mut s = String::from("digraph product {\n  rankdir=LR;\n  node [shape=circle];\n");
    let _ = writeln!(s, "  start [shape=none, label=\"\"];");
    for i in 0..prod.n_states() {
        let label = format!("{}\\n{}", prod.ts.state_names[i], prod.pair_names[i]);
        let mut attrs = vec![format!("label=\"{label}\"")];
        if prod.xf.contains(&i) {
            attrs.push(String::from("peripheries=2"));
        } else if prod.xf_or_sink.contains(&i) {
            attrs.push(String::from("style=filled"));
        }
        let _ = writeln!(s, "  x{i} [{}];", attrs.join(", "));
    }
    let _ = writeln!(s, "  start -> x{};", prod.ts.initial);
    for (i, rows) in prod.ts.delta.iter().enumerate() {
        for (u, row) in rows.iter().enumerate() {
            for &j in row {
                let _ = writeln!(
                    s,
                    "  x{i} -> x{j} [label={}];",
                    quoted(&prod.ts.input_names[u])
                );
            }
        }
    }
    s.push_str("}\n");
    s
}

fn belief_lines(b: &Belief, prod: &ProductSystem) -> String {
    b.0.iter()
        .map(|a| format!("{}:{}", prod.ts.state_names[a.state], a.pred.render()))
        .collect::<Vec<_>>()
        .join("\\n")
}

/// The all-enforcement structure: Y-states as ellipses (initial ones doubly
/// circled), Z-states as boxes, edges labeled by input (Y→Z) or observation
/// (Z→Y). An empty structure renders as a bare header.
pub fn aes_dot(aes: &Aes, prod: &ProductSystem) -> String {
    let mut s = String::from("digraph aes {\n  rankdir=LR;\n");
    for (i, y) in aes.y_states.iter().enumerate() {
        let label = format!(
            "y{i} ({})\\n{}",
            prod.ts.obs_names[y.obs],
            belief_lines(&y.belief, prod)
        );
        let extra = if aes.y0.contains(&i) { ", peripheries=2" } else { "" };
        let _ = writeln!(s, "  y{i} [shape=ellipse, label=\"{label}\"{extra}];");
    }
    for (i, z) in aes.z_states.iter().enumerate() {
        let label = format!("z{i}\\n{}", belief_lines(&z.belief, prod));
        let _ = writeln!(s, "  z{i} [shape=box, label=\"{label}\"];");
    }
    for (&(y, u), zs) in &aes.yz {
        for &z in zs {
            let _ = writeln!(s, "  y{y} -> z{z} [label={}];", quoted(&prod.ts.input_names[u]));
        }
    }
    for (&(z, o), &y) in &aes.zy {
        let _ = writeln!(s, "  z{z} -> y{y} [label={}];", quoted(&prod.ts.obs_names[o]));
    }
    s.push_str("}\n");
    s
}

/// The extracted deterministic structure, same conventions as the AES.
pub fn detbts_dot(bts: &DetBts, prod: &ProductSystem) -> String {
    let mut s = String::from("digraph detbts {\n  rankdir=LR;\n");
    for (i, y) in bts.y_states.iter().enumerate() {
        let label = format!(
            "y{i} ({})\\n{}",
            prod.ts.obs_names[y.obs],
            belief_lines(&y.belief, prod)
        );
        let extra = if bts.y0 == i { ", peripheries=2" } else { "" };
        let _ = writeln!(s, "  y{i} [shape=ellipse, label=\"{label}\"{extra}];");
    }
    for (i, z) in bts.z_states.iter().enumerate() {
        let label = format!("z{i}\\n{}", belief_lines(&z.belief, prod));
        let _ = writeln!(s, "  z{i} [shape=box, label=\"{label}\"];");
    }
    for (y, &(u, z)) in bts.y_move.iter().enumerate() {
        let _ = writeln!(s, "  y{y} -> z{z} [label={}];", quoted(&prod.ts.input_names[u]));
    }
    for (&(z, o), &y) in &bts.zy {
        let _ = writeln!(s, "  z{z} -> y{y} [label={}];", quoted(&prod.ts.obs_names[o]));
    }
    s.push_str("}\n");
    s
}
