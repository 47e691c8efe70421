//! Hypothetical reasoning for drafting: scenario trees, paths to a target,
//! and trial runs of events against a copy of a live session.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::MonitorError;
use crate::monitor::{Session, TransitionRecord};
use crate::norm::*;
use crate::space::{enabled_transitions, fire, StateGraph};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioNode {
    pub state: ContractState,
    pub via: Option<TransitionLabel>,
    pub children: Vec<ScenarioNode>,
    /// Set when `state` already occurs higher up on this branch; such nodes
    /// are not expanded again.
    pub revisit: Option<String>,
}

impl ScenarioNode {
    pub fn depth(&self) -> usize {
        self.children.iter().map(|c| c.depth() + 1).max().unwrap_or(0)
    }

    pub fn leaves(&self) -> Vec<&ScenarioNode> {
        if self.children.is_empty() {
            return vec![self];
        }
        self.children.iter().flat_map(|c| c.leaves()).collect()
    }

    /// The same tree cut off below `depth`.
    pub fn truncate(&self, depth: usize) -> ScenarioNode {
        ScenarioNode {
            state: self.state.clone(),
            via: self.via.clone(),
            children: if depth == 0 {
                Vec::new()
            } else {
                self.children.iter().map(|c| c.truncate(depth - 1)).collect()
            },
            revisit: self.revisit.clone(),
        }
    }
}

/// Unfold every enabled transition from `state` down to `depth` levels.
pub fn expand(spec: &ContractSpec, state: &ContractState, depth: usize) -> ScenarioNode {
    let mut path = vec![state.canonical_key()];
    grow(spec, state.clone(), None, depth, &mut path)
}

fn grow(
    spec: &ContractSpec,
    state: ContractState,
    via: Option<TransitionLabel>,
    depth: usize,
    path: &mut Vec<String>,
) -> ScenarioNode {
    let mut children = Vec::new();
    if depth > 0 {
        for label in enabled_transitions(spec, &state) {
            // Enabled labels always fire; a failure here would be a semantics bug.
            let next = fire(spec, &state, &label)
                .expect("enabled transition fires")
                .state;
            let key = next.canonical_key();
            if path.contains(&key) {
                children.push(ScenarioNode {
                    state: next,
                    via: Some(label),
                    children: Vec::new(),
                    revisit: Some(key),
                });
                continue;
            }
            path.push(key);
            children.push(grow(spec, next, Some(label), depth - 1, path));
            path.pop();
        }
    }
    ScenarioNode {
        state,
        via,
        children,
        revisit: None,
    }
}

/// Simple paths from the initial state to any state satisfying `target`,
/// with at most `max_len` transitions. Paths are ordered lexicographically by
/// the position of each label among its source's enabled transitions.
pub fn find_paths(
    graph: &StateGraph,
    target: impl Fn(&ContractState) -> bool,
    max_len: usize,
) -> Vec<Vec<TransitionLabel>> {
    let mut out = Vec::new();
    let mut visited = HashSet::from([graph.initial.clone()]);
    let mut path = Vec::new();
    walk(graph, &graph.initial, &target, max_len, &mut visited, &mut path, &mut out);
    out
}

fn walk(
    graph: &StateGraph,
    at: &str,
    target: &dyn Fn(&ContractState) -> bool,
    max_len: usize,
    visited: &mut HashSet<String>,
    path: &mut Vec<TransitionLabel>,
    out: &mut Vec<Vec<TransitionLabel>>,
) {
    if target(&graph.nodes[at]) {
        out.push(path.clone());
    }
    if path.len() == max_len {
        return;
    }
    let mut edges: Vec<_> = graph.outgoing(at).collect();
    edges.sort_by_key(|e| e.rank);
    for e in edges {
        if !visited.insert(e.to.clone()) {
            continue;
        }
        path.push(e.label.clone());
        walk(graph, &e.to, target, max_len, visited, path, out);
        path.pop();
        visited.remove(&e.to);
    }
}

/// Outcome of one hypothetical event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialStep {
    pub event: Event,
    pub records: Vec<TransitionRecord>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WhatIf {
    pub state: ContractState,
    pub clock: Time,
    pub steps: Vec<TrialStep>,
}

impl WhatIf {
    pub fn records(&self) -> impl Iterator<Item = &TransitionRecord> {
        self.steps.iter().flat_map(|s| s.records.iter())
    }

    pub fn first_error(&self) -> Option<(usize, &str)> {
        self.steps
            .iter()
            .enumerate()
            .find_map(|(i, s)| s.error.as_deref().map(|e| (i, e)))
    }
}

/// Submit `events` to a copy of `session`. A rejected event is reported and
/// skipped, exactly as the live session would.
pub fn what_if(session: &Session, events: &[Event]) -> WhatIf {
    let mut trial = session.clone();
    let steps = events
        .iter()
        .map(|ev| {
            let (records, error) = match trial.submit_event(ev.clone()) {
                Ok(r) => (r, None),
                Err(e) => (Vec::new(), Some(e.to_string())),
            };
            TrialStep {
                event: ev.clone(),
                records,
                error,
            }
        })
        .collect();
    WhatIf {
        state: trial.state().clone(),
        clock: trial.clock(),
        steps,
    }
}

/// Like [`what_if`] but stops at the first rejected event.
pub fn what_if_strict(session: &Session, events: &[Event]) -> Result<WhatIf, (usize, MonitorError)> {
    let mut trial = session.clone();
    let mut steps = Vec::new();
    for (i, ev) in events.iter().enumerate() {
        let records = trial.submit_event(ev.clone()).map_err(|e| (i, e))?;
        steps.push(TrialStep {
            event: ev.clone(),
            records,
            error: None,
        });
    }
    Ok(WhatIf {
        state: trial.state().clone(),
        clock: trial.clock(),
        steps,
    })
}
