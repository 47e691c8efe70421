//! Explicit state space of a contract and the analyses run over it.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::EngineError;
use crate::norm::{ContractSpec, ContractState, TransitionLabel};

mod analysis;
mod export;
mod semantics;

pub use analysis::{
    analyze, classify_provision, classify_terminals, detect_ctd, AnalysisReport, CtdTriple,
    ProvisionClass, ProvisionReport, TerminalVerdict,
};
pub use export::{export_dot, export_structured_graph, EdgeDoc, GraphDocument, NodeDoc};
pub use semantics::{enabled_transitions, fire, initial_state, successor, Firing};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub from: String,
    pub label: TransitionLabel,
    pub to: String,
    /// Indices of the rules that fired; empty when a built-in default applied.
    pub rules: Vec<usize>,
    /// Position of `label` among the source state's enabled transitions.
    pub rank: usize,
}

/// Reachable states keyed by canonical key, with labelled edges between them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateGraph {
    pub name: String,
    pub nodes: BTreeMap<String, ContractState>,
    pub edges: Vec<Edge>,
    pub initial: String,
}

impl StateGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn outgoing<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges.iter().filter(move |e| e.from == key)
    }

    pub fn incoming<'a>(&'a self, key: &'a str) -> impl Iterator<Item = (usize, &'a Edge)> + 'a {
        self.edges.iter().enumerate().filter(move |(_, e)| e.to == key)
    }

    pub fn initial_state(&self) -> &ContractState {
        &self.nodes[&self.initial]
    }
}

/// Breadth-first closure of the initial state under the enabled transitions.
///
/// Fails once more than `config.state_bound` distinct states are discovered.
/// Edges are ordered by source key, then by the order of enabled transitions.
pub fn build_graph(spec: &ContractSpec) -> Result<StateGraph, EngineError> {
    let bound = spec.config.state_bound.max(1);
    let init = initial_state(spec);
    let init_key = init.canonical_key();

    let mut nodes = BTreeMap::new();
    nodes.insert(init_key.clone(), init);
    let mut queue = VecDeque::from([init_key.clone()]);
    let mut edges = Vec::new();

    while let Some(key) = queue.pop_front() {
        let state = nodes[&key].clone();
        for (rank, label) in enabled_transitions(spec, &state).into_iter().enumerate() {
            let firing = fire(spec, &state, &label)?;
            let to = firing.state.canonical_key();
            if !nodes.contains_key(&to) {
                if nodes.len() >= bound {
                    return Err(EngineError::StateBoundExceeded {
                        bound,
                        frontier: queue.len() + 1,
                    });
                }
                nodes.insert(to.clone(), firing.state);
                queue.push_back(to.clone());
            }
            edges.push(Edge {
                from: key.clone(),
                label,
                to,
                rules: firing.rules,
                rank,
            });
        }
    }

    edges.sort_by(|a, b| a.from.cmp(&b.from).then(a.rank.cmp(&b.rank)));
    Ok(StateGraph {
        name: spec.name.clone(),
        nodes,
        edges,
        initial: init_key,
    })
}
