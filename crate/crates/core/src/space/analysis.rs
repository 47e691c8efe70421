//! Terminal classification, contrary-to-duty detection, and provision classes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{build_graph, fire, StateGraph};
use crate::error::EngineError;
use crate::norm::*;

/// How a terminal node ended. Explicit termination classes always win;
/// otherwise the kinds of incoming edges decide, edge by edge when they disagree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalVerdict {
    Uniform(TerminalClass),
    /// `(edge index, class)` for every incoming edge.
    Mixed(Vec<(usize, TerminalClass)>),
}

fn edge_class(label: &TransitionLabel) -> TerminalClass {
    if label.is_violation() {
        TerminalClass::Unhappy
    } else {
        TerminalClass::Happy
    }
}

/// Classify every terminal node: `terminated` states, plus dead-end active
/// states that some transition leads into.
pub fn classify_terminals(graph: &StateGraph) -> BTreeMap<String, TerminalVerdict> {
    let mut out = BTreeMap::new();
    for (key, state) in &graph.nodes {
        if let Some(class) = state.terminal_class() {
            out.insert(key.clone(), TerminalVerdict::Uniform(class));
            continue;
        }
        if graph.outgoing(key).next().is_some() {
            continue;
        }
        let per_edge: Vec<(usize, TerminalClass)> = graph
            .incoming(key)
            .map(|(i, e)| (i, edge_class(&e.label)))
            .collect();
        let Some(&(_, first)) = per_edge.first() else {
            continue;
        };
        let verdict = if per_edge.iter().all(|(_, c)| *c == first) {
            TerminalVerdict::Uniform(first)
        } else {
            TerminalVerdict::Mixed(per_edge)
        };
        out.insert(key.clone(), verdict);
    }
    out
}

/// A secondary obligation that comes into force when its bearer violates a
/// primary one, either directly or through a power the breach confers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CtdTriple {
    pub primary: Obligation,
    pub via: TransitionLabel,
    pub secondary: Obligation,
}

/// Contrary-to-duty structures in the graph, one per (primary, violation,
/// secondary), ordered by the rule that produced the violation edge.
pub fn detect_ctd(graph: &StateGraph) -> Vec<CtdTriple> {
    let mut found: Vec<((usize, usize), CtdTriple)> = Vec::new();
    for (idx, edge) in graph.edges.iter().enumerate() {
        let LabelKind::Violate { agent, prop, .. } = &edge.label.kind else {
            continue;
        };
        let (Some(before), Some(after)) = (
            graph.nodes[&edge.from].norms(),
            graph.nodes[&edge.to].norms(),
        ) else {
            continue;
        };
        let primary = Obligation {
            bearer: agent.clone(),
            prop: prop.clone(),
        };
        let mut secondaries = Vec::new();
        for atom in after.difference(before) {
            match atom {
                NormAtom::Obligation(o) if o.bearer == *agent && o.prop != *prop => {
                    secondaries.push(o.clone())
                }
                NormAtom::Power(Power {
                    content: PowerContent::Obligation(o),
                    ..
                }) if o.bearer == *agent && o.prop != *prop => secondaries.push(o.clone()),
                _ => {}
            }
        }
        let order = (edge.rules.iter().copied().min().unwrap_or(usize::MAX), idx);
        for secondary in secondaries {
            let triple = CtdTriple {
                primary: primary.clone(),
                via: edge.label.clone(),
                secondary,
            };
            if !found.iter().any(|(_, t)| *t == triple) {
                found.push((order, triple));
            }
        }
    }
    found.sort_by_key(|(order, _)| *order);
    found.into_iter().map(|(_, t)| t).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProvisionClass {
    PromissoryCondition,
    Warranty,
    IntermediateTerm,
}

/// Classify an obligation by what its breach does to the contract.
///
/// * No rule attaches a consequence to its violation: intermediate term.
/// * A breach ends the contract, or hands a counter-party the power to end it:
///   promissory condition.
/// * A breach leaves some counter-party bound by an obligation: warranty.
/// * Otherwise the counter-party is discharged and only the bearer's
///   reparation remains, which is again a promissory condition.
pub fn classify_provision(
    spec: &ContractSpec,
    obligation: &NormAtom,
) -> Result<ProvisionClass, EngineError> {
    let NormAtom::Obligation(primary) = obligation else {
        return Err(EngineError::UnknownObligation {
            atom: obligation.to_string(),
        });
    };
    if !spec.rules.iter().any(|r| &r.guard == obligation) {
        return Err(EngineError::UnknownObligation {
            atom: obligation.to_string(),
        });
    }
    let breach_rules: Vec<usize> = spec
        .rules
        .iter()
        .enumerate()
        .filter(|(_, r)| {
            &r.guard == obligation
                && matches!(&r.label.kind, LabelKind::Violate { agent, prop, .. }
                    if *agent == primary.bearer && *prop == primary.prop)
        })
        .map(|(i, _)| i)
        .collect();
    if breach_rules.is_empty() {
        return Ok(ProvisionClass::IntermediateTerm);
    }

    // Outcomes of the breach wherever the obligation is actually in force;
    // fall back to the obligation on its own if it is never reached.
    let graph = build_graph(spec)?;
    let mut outcomes: Vec<ContractState> = graph
        .edges
        .iter()
        .filter(|e| {
            e.label.is_violation()
                && e.label.subject() == *obligation
                && e.rules.iter().any(|r| breach_rules.contains(r))
        })
        .map(|e| graph.nodes[&e.to].clone())
        .collect();
    if outcomes.is_empty() {
        let alone = ContractState::active([obligation.clone()]);
        for &i in &breach_rules {
            let mut label = spec.rules[i].label.clone();
            if let LabelKind::Violate { refinement, .. } = &mut label.kind {
                refinement.get_or_insert(ViolationRefinement::LAPSE);
            }
            outcomes.push(fire(spec, &alone, &label)?.state);
        }
    }

    let counterparty = |a: &AgentId| *a != primary.bearer;
    let voids = outcomes.iter().any(|s| match s {
        ContractState::Terminated { .. } => true,
        ContractState::Active { norms } => norms.powers().any(|p| {
            counterparty(&p.holder) && matches!(p.content, PowerContent::Terminate { .. })
        }),
    });
    if voids {
        return Ok(ProvisionClass::PromissoryCondition);
    }
    let binds_counterparty = outcomes.iter().any(|s| {
        s.norms()
            .is_some_and(|n| n.obligations().any(|o| counterparty(&o.bearer)))
    });
    Ok(if binds_counterparty {
        ProvisionClass::Warranty
    } else {
        ProvisionClass::PromissoryCondition
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvisionReport {
    pub obligation: Obligation,
    pub class: ProvisionClass,
}

/// Everything `analyze` reports for one contract.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub contract: String,
    pub states: usize,
    pub transitions: usize,
    pub terminals: BTreeMap<String, TerminalVerdict>,
    pub ctd: Vec<CtdTriple>,
    pub provisions: Vec<ProvisionReport>,
}

pub fn analyze(spec: &ContractSpec) -> Result<AnalysisReport, EngineError> {
    let graph = build_graph(spec)?;
    let mut guarded: Vec<&Obligation> = Vec::new();
    for rule in &spec.rules {
        if let NormAtom::Obligation(o) = &rule.guard {
            if !guarded.contains(&o) {
                guarded.push(o);
            }
        }
    }
    let provisions = guarded
        .into_iter()
        .map(|o| {
            classify_provision(spec, &NormAtom::Obligation(o.clone())).map(|class| ProvisionReport {
                obligation: o.clone(),
                class,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(AnalysisReport {
        contract: spec.name.clone(),
        states: graph.node_count(),
        transitions: graph.edge_count(),
        terminals: classify_terminals(&graph),
        ctd: detect_ctd(&graph),
        provisions,
    })
}
