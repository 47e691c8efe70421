//! Reference implementations used as test oracles. Written from the rule
//! semantics directly, sharing no code with the engine's `space` module: a
//! naive set-based successor function, a brute-force state space over every
//! subset of the atoms a spec can mention, and a truth-table classifier.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use pact_core::norm::*;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OState {
    Done(TerminalClass),
    Live(BTreeSet<NormAtom>),
}

impl OState {
    pub fn from_engine(s: &ContractState) -> OState {
        match s {
            ContractState::Terminated { class } => OState::Done(*class),
            ContractState::Active { norms } => OState::Live(norms.iter().cloned().collect()),
        }
    }
}

fn subject_of(label: &TransitionLabel) -> NormAtom {
    match &label.kind {
        LabelKind::Fulfil { agent, prop } | LabelKind::Violate { agent, prop, .. } => {
            NormAtom::Obligation(Obligation {
                bearer: agent.clone(),
                prop: prop.clone(),
            })
        }
        LabelKind::Exercise { agent, content } => NormAtom::Power(Power {
            holder: agent.clone(),
            content: content.clone(),
        }),
    }
}

fn lapse_of(o: &Obligation) -> TransitionLabel {
    TransitionLabel {
        kind: LabelKind::Violate {
            agent: o.bearer.clone(),
            prop: o.prop.clone(),
            refinement: Some(ViolationRefinement {
                nonconforming: false,
                late: false,
                wrong_performer: false,
                lapse: true,
            }),
        },
        qualifier: TemporalQualifier::None,
    }
}

/// Labels available in `s`, as a set.
pub fn labels(spec: &ContractSpec, s: &BTreeSet<NormAtom>) -> BTreeSet<String> {
    label_values(spec, s).iter().map(|l| l.to_string()).collect()
}

pub fn label_values(spec: &ContractSpec, s: &BTreeSet<NormAtom>) -> Vec<TransitionLabel> {
    let mut out: Vec<TransitionLabel> = Vec::new();
    let add = |l: TransitionLabel, out: &mut Vec<TransitionLabel>| {
        if !out.contains(&l) {
            out.push(l);
        }
    };
    for r in &spec.rules {
        if !s.contains(&subject_of(&r.label)) {
            continue;
        }
        match &r.label.kind {
            LabelKind::Violate {
                refinement: None,
                agent,
                prop,
            } => add(
                lapse_of(&Obligation {
                    bearer: agent.clone(),
                    prop: prop.clone(),
                }),
                &mut out,
            ),
            _ => add(r.label.clone(), &mut out),
        }
    }
    for atom in s {
        match atom {
            NormAtom::Obligation(o) => {
                let fulfilled = out.iter().any(|l| {
                    matches!(&l.kind, LabelKind::Fulfil { agent, prop } if *agent == o.bearer && *prop == o.prop)
                });
                if !fulfilled {
                    add(
                        TransitionLabel {
                            kind: LabelKind::Fulfil {
                                agent: o.bearer.clone(),
                                prop: o.prop.clone(),
                            },
                            qualifier: TemporalQualifier::None,
                        },
                        &mut out,
                    );
                }
                if spec.config.violation_axiom {
                    add(lapse_of(o), &mut out);
                }
            }
            NormAtom::Power(p) => add(
                TransitionLabel {
                    kind: LabelKind::Exercise {
                        agent: p.holder.clone(),
                        content: p.content.clone(),
                    },
                    qualifier: TemporalQualifier::None,
                },
                &mut out,
            ),
        }
    }
    out
}

/// Where `label` leads from `s`; `None` when firing rules disagree on how
/// to terminate.
pub fn step(spec: &ContractSpec, s: &BTreeSet<NormAtom>, label: &TransitionLabel) -> Option<OState> {
    let live: Vec<&Rule> = spec.rules.iter().filter(|r| s.contains(&r.guard)).collect();
    let fired: Vec<&Rule> = match &label.kind {
        LabelKind::Fulfil { .. } | LabelKind::Exercise { .. } => {
            live.into_iter().filter(|r| r.label == *label).collect()
        }
        LabelKind::Violate {
            agent,
            prop,
            refinement,
        } => {
            let wanted = refinement.unwrap_or(ViolationRefinement {
                nonconforming: false,
                late: false,
                wrong_performer: false,
                lapse: true,
            });
            let same = |r: &&Rule, want: Option<ViolationRefinement>| {
                r.label.qualifier == label.qualifier
                    && matches!(&r.label.kind, LabelKind::Violate { agent: a, prop: p, refinement: rf }
                        if a == agent && p == prop && *rf == want)
            };
            let exact: Vec<&Rule> = live.iter().copied().filter(|r| same(r, Some(wanted))).collect();
            if exact.is_empty() {
                live.iter().copied().filter(|r| same(r, None)).collect()
            } else {
                exact
            }
        }
    };
    let is_exercise = matches!(label.kind, LabelKind::Exercise { .. });
    if fired.is_empty() && label.is_violation() {
        return Some(OState::Done(TerminalClass::Unhappy));
    }

    let mut ends: BTreeSet<TerminalClass> = BTreeSet::new();
    let mut adds: BTreeSet<NormAtom> = BTreeSet::new();
    let mut gone: BTreeSet<NormAtom> = BTreeSet::new();
    for r in &fired {
        gone.insert(r.guard.clone());
        for c in &r.consequents {
            match c {
                Consequent::Add { atom } => {
                    adds.insert(atom.clone());
                }
                Consequent::Remove { atom } => {
                    gone.insert(atom.clone());
                }
                Consequent::Terminate { class } => {
                    ends.insert(*class);
                }
            }
        }
    }
    gone.insert(subject_of(label));
    if let LabelKind::Exercise { content, .. } = &label.kind {
        match content {
            PowerContent::Obligation(o) => {
                adds.insert(NormAtom::Obligation(o.clone()));
            }
            PowerContent::Terminate { class } => {
                ends.insert(*class);
            }
        }
    }
    match ends.len() {
        0 => {}
        1 => return Some(OState::Done(*ends.iter().next().unwrap())),
        _ => return None,
    }
    let persist = spec.config.frame_policy == FramePolicy::PersistUnmentioned
        || (is_exercise && fired.is_empty());
    let mut next: BTreeSet<NormAtom> = if persist {
        s.difference(&gone).cloned().collect()
    } else {
        BTreeSet::new()
    };
    next.extend(adds);
    Some(OState::Live(next))
}

/// Every atom a state of `spec` can contain.
pub fn universe(spec: &ContractSpec) -> Vec<NormAtom> {
    let mut u: BTreeSet<NormAtom> = spec.initial.iter().cloned().collect();
    for r in &spec.rules {
        for c in &r.consequents {
            if let Consequent::Add { atom } = c {
                u.insert(atom.clone());
            }
        }
    }
    let conferred: Vec<NormAtom> = u
        .iter()
        .filter_map(|a| match a {
            NormAtom::Power(Power {
                content: PowerContent::Obligation(o),
                ..
            }) => Some(NormAtom::Obligation(o.clone())),
            _ => None,
        })
        .collect();
    u.extend(conferred);
    u.into_iter().collect()
}

/// The reachable graph obtained by brute force: successors of every subset of
/// the universe are computed up front, then reachability from the initial
/// state is iterated to a fixpoint. `None` on a termination conflict.
pub struct BruteGraph {
    pub states: BTreeSet<OState>,
    pub edges: BTreeSet<(OState, String, OState)>,
    pub universe_size: usize,
}

pub fn brute_force(spec: &ContractSpec) -> Option<BruteGraph> {
    let u = universe(spec);
    assert!(u.len() <= 20, "universe of {} atoms is too large to enumerate", u.len());
    let n = u.len();
    let set_of = |mask: u32| -> BTreeSet<NormAtom> {
        (0..n).filter(|i| mask & (1 << i) != 0).map(|i| u[i].clone()).collect()
    };
    let index: HashMap<&NormAtom, usize> = u.iter().enumerate().map(|(i, a)| (a, i)).collect();
    let mask_of = |s: &BTreeSet<NormAtom>| -> u32 {
        s.iter().map(|a| 1u32 << index[a]).fold(0, |m, b| m | b)
    };

    // Node ids: masks first, then the two terminal states.
    let happy = 1usize << n;
    let unhappy = happy + 1;
    let id_of = |st: &OState| -> usize {
        match st {
            OState::Done(TerminalClass::Happy) => happy,
            OState::Done(TerminalClass::Unhappy) => unhappy,
            OState::Live(s) => mask_of(s) as usize,
        }
    };

    let mut succ: Vec<Vec<(String, usize, OState)>> = vec![Vec::new(); unhappy + 1];
    for mask in 0..(1u32 << n) {
        let s = set_of(mask);
        for l in label_values(spec, &s) {
            let to = step(spec, &s, &l)?;
            succ[mask as usize].push((l.to_string(), id_of(&to), to));
        }
    }

    let init = OState::Live(spec.initial.iter().cloned().collect());
    let mut reach = vec![false; unhappy + 1];
    reach[id_of(&init)] = true;
    loop {
        let mut changed = false;
        for from in 0..reach.len() {
            if !reach[from] {
                continue;
            }
            for (_, to, _) in &succ[from] {
                if !reach[*to] {
                    reach[*to] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }

    let state_of = |id: usize| -> OState {
        if id == happy {
            OState::Done(TerminalClass::Happy)
        } else if id == unhappy {
            OState::Done(TerminalClass::Unhappy)
        } else {
            OState::Live(set_of(id as u32))
        }
    };
    let mut states = BTreeSet::new();
    let mut edges = BTreeSet::new();
    for (id, &r) in reach.iter().enumerate() {
        if !r {
            continue;
        }
        states.insert(state_of(id));
        for (label, _, to) in &succ[id] {
            edges.insert((state_of(id), label.clone(), to.clone()));
        }
    }
    Some(BruteGraph {
        states,
        edges,
        universe_size: n,
    })
}

/// Truth-table classification of an action against an obligation: the
/// refinement flags are exactly the failed checks.
pub fn expected_label(
    bearer: &str,
    prop: &str,
    conforming: bool,
    in_time: bool,
    right_performer: bool,
    window: TemporalQualifier,
) -> TransitionLabel {
    let table = [
        (true, true, true, None),
        (false, true, true, Some((true, false, false))),
        (true, false, true, Some((false, true, false))),
        (true, true, false, Some((false, false, true))),
        (false, false, true, Some((true, true, false))),
        (false, true, false, Some((true, false, true))),
        (true, false, false, Some((false, true, true))),
        (false, false, false, Some((true, true, true))),
    ];
    let row = table
        .iter()
        .find(|(c, t, p, _)| (*c, *t, *p) == (conforming, in_time, right_performer))
        .unwrap();
    let kind = match row.3 {
        None => {
            return TransitionLabel {
                kind: LabelKind::Fulfil {
                    agent: AgentId::new(bearer),
                    prop: PropId::new(prop),
                },
                qualifier: window,
            }
        }
        Some((nonconforming, late, wrong_performer)) => LabelKind::Violate {
            agent: AgentId::new(bearer),
            prop: PropId::new(prop),
            refinement: Some(ViolationRefinement {
                nonconforming,
                late,
                wrong_performer,
                lapse: false,
            }),
        },
    };
    TransitionLabel {
        kind,
        qualifier: TemporalQualifier::None,
    }
}

/// Fold a transition log over the initial state with the oracle semantics.
pub fn fold_labels<'a>(
    spec: &ContractSpec,
    labels: impl IntoIterator<Item = &'a TransitionLabel>,
) -> Option<OState> {
    let mut st = OState::Live(spec.initial.iter().cloned().collect());
    for l in labels {
        let OState::Live(s) = &st else {
            return None;
        };
        if !s.contains(&subject_of(l)) {
            return None;
        }
        st = step(spec, s, l)?;
    }
    Some(st)
}
