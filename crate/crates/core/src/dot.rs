//! Graphviz export of an argumentation graph.

use std::fmt::Write as _;

use crate::dataset::Schema;
use crate::graph::WeightedArgGraph;
use crate::semantics::{FinalWeights, Hundredths};

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Renders `graph` as a DOT digraph. Node labels carry the rounded final
/// weight when `weights` is given; edge labels are `votes/k`.
pub fn to_dot(graph: &WeightedArgGraph, schema: &Schema, weights: Option<&FinalWeights>) -> String {
    let mut out = String::from("digraph arguments {\n  node [shape=box];\n");
    for (i, arg) in graph.arguments().iter().enumerate() {
        let mut label = escape(&arg.display(schema));
        if let Some(fw) = weights {
            let _ = write!(label, "\\n{}", Hundredths::from_weight(fw.weights[i]));
        }
        let _ = writeln!(out, "  a{i} [label=\"{label}\"];");
    }
    for attack in graph.attacks() {
        let _ = writeln!(
            out,
            "  a{} -> a{} [label=\"{}/{}\"];",
            attack.attacker,
            attack.target,
            attack.votes,
            graph.k()
        );
    }
    out.push_str("}\n");
    out
}
