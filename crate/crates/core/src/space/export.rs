use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{classify_terminals, StateGraph, TerminalVerdict};
use crate::norm::{ContractState, TransitionLabel};

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', "\\n")
}

/// Graphviz rendering. Node ids follow canonical key order, so the output is
/// stable for a given spec.
pub fn export_dot(graph: &StateGraph) -> String {
    let ids: BTreeMap<&str, usize> = graph
        .nodes
        .keys()
        .enumerate()
        .map(|(i, k)| (k.as_str(), i))
        .collect();
    let terminals = classify_terminals(graph);

    let mut out = String::new();
    writeln!(out, "digraph \"{}\" {{", dot_escape(&graph.name)).unwrap();
    out.push_str("  rankdir=LR;\n  node [shape=box];\n");
    for (key, id) in &ids {
        let mut attrs = vec![format!("label=\"{}\"", dot_escape(key))];
        if *key == graph.initial {
            attrs.push("style=bold".into());
        }
        if terminals.contains_key(*key) {
            attrs.push("shape=doublecircle".into());
        }
        writeln!(out, "  n{id} [{}];", attrs.join(", ")).unwrap();
    }
    for e in &graph.edges {
        writeln!(
            out,
            "  n{} -> n{} [label=\"{}\"];",
            ids[e.from.as_str()],
            ids[e.to.as_str()],
            dot_escape(&e.label.to_string())
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeDoc {
    pub id: usize,
    pub key: String,
    pub state: ContractState,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeDoc {
    pub from: usize,
    pub to: usize,
    /// Human-readable form of `label`.
    pub text: String,
    pub label: TransitionLabel,
    pub rules: Vec<usize>,
}

/// The graph as a document for programmatic consumers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub name: String,
    pub initial: usize,
    pub nodes: Vec<NodeDoc>,
    pub edges: Vec<EdgeDoc>,
    pub terminals: BTreeMap<String, TerminalVerdict>,
}

pub fn export_structured_graph(graph: &StateGraph) -> GraphDocument {
    let ids: BTreeMap<&str, usize> = graph
        .nodes
        .keys()
        .enumerate()
        .map(|(i, k)| (k.as_str(), i))
        .collect();
    GraphDocument {
        name: graph.name.clone(),
        initial: ids[graph.initial.as_str()],
        nodes: graph
            .nodes
            .iter()
            .map(|(k, s)| NodeDoc {
                id: ids[k.as_str()],
                key: k.clone(),
                state: s.clone(),
            })
            .collect(),
        edges: graph
            .edges
            .iter()
            .map(|e| EdgeDoc {
                from: ids[e.from.as_str()],
                to: ids[e.to.as_str()],
                text: e.label.to_string(),
                label: e.label.clone(),
                rules: e.rules.clone(),
            })
            .collect(),
        terminals: classify_terminals(graph),
    }
}
