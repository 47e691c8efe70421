//! One-step semantics: which transitions a state offers and where they lead.

use crate::error::EngineError;
use crate::norm::*;

pub fn initial_state(spec: &ContractSpec) -> ContractState {
    ContractState::Active {
        norms: spec.initial.clone(),
    }
}

fn push_unique(out: &mut Vec<TransitionLabel>, label: TransitionLabel) {
    if !out.contains(&label) {
        out.push(label);
    }
}

/// Transitions available from `state`, in rule order followed by the
/// axiom-generated ones.
///
/// Every obligation can be fulfilled and every power exercised. Violation
/// labels come from the rules (a generic `not x: Y` rule contributes the lapse
/// label it catches); with the violation axiom on, every obligation also gets
/// a lapse label even when no rule mentions its breach.
pub fn enabled_transitions(spec: &ContractSpec, state: &ContractState) -> Vec<TransitionLabel> {
    let Some(norms) = state.norms() else {
        return Vec::new();
    };
    let mut out = Vec::new();

    for rule in &spec.rules {
        if !norms.contains(&rule.label.subject()) {
            continue;
        }
        let label = match &rule.label.kind {
            LabelKind::Violate {
                agent,
                prop,
                refinement: None,
            } => TransitionLabel {
                kind: LabelKind::Violate {
                    agent: agent.clone(),
                    prop: prop.clone(),
                    refinement: Some(ViolationRefinement::LAPSE),
                },
                qualifier: rule.label.qualifier,
            },
            _ => rule.label.clone(),
        };
        push_unique(&mut out, label);
    }

    for o in norms.obligations() {
        let has_fulfil = out.iter().any(|l| {
            matches!(&l.kind, LabelKind::Fulfil { agent, prop } if *agent == o.bearer && *prop == o.prop)
        });
        if !has_fulfil {
            out.push(TransitionLabel {
                kind: LabelKind::Fulfil {
                    agent: o.bearer.clone(),
                    prop: o.prop.clone(),
                },
                qualifier: TemporalQualifier::None,
            });
        }
        if spec.config.violation_axiom {
            push_unique(
                &mut out,
                TransitionLabel {
                    kind: LabelKind::Violate {
                        agent: o.bearer.clone(),
                        prop: o.prop.clone(),
                        refinement: Some(ViolationRefinement::LAPSE),
                    },
                    qualifier: TemporalQualifier::None,
                },
            );
        }
    }
    for p in norms.powers() {
        let has_exercise = out.iter().any(|l| {
            matches!(&l.kind, LabelKind::Exercise { agent, content } if *agent == p.holder && *content == p.content)
        });
        if !has_exercise {
            out.push(TransitionLabel {
                kind: LabelKind::Exercise {
                    agent: p.holder.clone(),
                    content: p.content.clone(),
                },
                qualifier: TemporalQualifier::None,
            });
        }
    }
    out
}

/// A consequence-free rule guarded by the obligation just fulfilled or
/// violated, so that under a persisting frame the obligation itself is
/// always discharged unless some rule brings it back.
fn discharged(subject: &NormAtom, label: &TransitionLabel) -> Rule {
    Rule {
        id: "<discharge>".into(),
        guard: subject.clone(),
        label: label.clone(),
        consequents: Vec::new(),
    }
}

/// Outcome of taking one transition: the next state and the indices of the
/// rules that fired (empty when a built-in default applied).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Firing {
    pub state: ContractState,
    pub rules: Vec<usize>,
}

/// Successor of `state` under `label`, which must be one of
/// [`enabled_transitions`].
pub fn successor(
    spec: &ContractSpec,
    state: &ContractState,
    label: &TransitionLabel,
) -> Result<ContractState, EngineError> {
    if !enabled_transitions(spec, state).contains(label) {
        if let Some(class) = state.terminal_class() {
            return Err(EngineError::TerminalState { class });
        }
        return Err(EngineError::NotEnabled {
            label: label.to_string(),
            state: state.canonical_key(),
        });
    }
    fire(spec, state, label).map(|f| f.state)
}

/// Take `label` from `state` as long as the norm it concerns is in force.
///
/// Unlike [`successor`] this accepts violation refinements no rule mentions,
/// which is what the monitor produces when classifying real events.
pub fn fire(
    spec: &ContractSpec,
    state: &ContractState,
    label: &TransitionLabel,
) -> Result<Firing, EngineError> {
    let norms = match state {
        ContractState::Active { norms } => norms,
        ContractState::Terminated { class } => {
            return Err(EngineError::TerminalState { class: *class })
        }
    };
    let subject = label.subject();
    if !norms.contains(&subject) {
        return Err(EngineError::NotEnabled {
            label: label.to_string(),
            state: state.canonical_key(),
        });
    }

    let matching = |pred: &dyn Fn(&TransitionLabel) -> bool| -> Vec<usize> {
        spec.rules
            .iter()
            .enumerate()
            .filter(|(_, r)| norms.contains(&r.guard) && pred(&r.label))
            .map(|(i, _)| i)
            .collect()
    };

    match &label.kind {
        LabelKind::Fulfil { .. } => {
            let fired = matching(&|l| l == label);
            if fired.is_empty() {
                let next = match spec.config.frame_policy {
                    FramePolicy::DischargeUnmentioned => NormSet::new(),
                    FramePolicy::PersistUnmentioned => {
                        let mut kept = norms.clone();
                        kept.remove(&subject);
                        kept
                    }
                };
                return Ok(Firing {
                    state: ContractState::Active { norms: next },
                    rules: fired,
                });
            }
            let discharge = discharged(&subject, label);
            let mut rules: Vec<&Rule> = fired.iter().map(|&i| &spec.rules[i]).collect();
            rules.push(&discharge);
            let next = apply_effects(state, &rules, spec.config.frame_policy)?;
            Ok(Firing { state: next, rules: fired })
        }
        LabelKind::Violate {
            agent,
            prop,
            refinement,
        } => {
            let refinement = refinement.unwrap_or(ViolationRefinement::LAPSE);
            let exact = matching(&|l| {
                l.qualifier == label.qualifier
                    && matches!(&l.kind, LabelKind::Violate { agent: a, prop: p, refinement: Some(r) }
                        if a == agent && p == prop && *r == refinement)
            });
            let fired = if exact.is_empty() {
                matching(&|l| {
                    l.qualifier == label.qualifier
                        && matches!(&l.kind, LabelKind::Violate { agent: a, prop: p, refinement: None }
                            if a == agent && p == prop)
                })
            } else {
                exact
            };
            if fired.is_empty() {
                return Ok(Firing {
                    state: ContractState::Terminated {
                        class: TerminalClass::Unhappy,
                    },
                    rules: fired,
                });
            }
            let discharge = discharged(&subject, label);
            let mut rules: Vec<&Rule> = fired.iter().map(|&i| &spec.rules[i]).collect();
            rules.push(&discharge);
            let next = apply_effects(state, &rules, spec.config.frame_policy)?;
            Ok(Firing { state: next, rules: fired })
        }
        LabelKind::Exercise { content, .. } => {
            let fired = matching(&|l| l == label);
            // Exercising a power always brings its content about.
            let brought_about = Rule {
                id: "<power exercise>".into(),
                guard: subject.clone(),
                label: label.clone(),
                consequents: vec![match content {
                    PowerContent::Obligation(o) => Consequent::Add {
                        atom: NormAtom::Obligation(o.clone()),
                    },
                    PowerContent::Terminate { class } => Consequent::Terminate { class: *class },
                }],
            };
            let (rules, policy): (Vec<&Rule>, FramePolicy) = if fired.is_empty() {
                (vec![&brought_about], FramePolicy::PersistUnmentioned)
            } else {
                let mut rs: Vec<&Rule> = fired.iter().map(|&i| &spec.rules[i]).collect();
                rs.push(&brought_about);
                (rs, spec.config.frame_policy)
            };
            let next = apply_effects(state, &rules, policy)?;
            Ok(Firing { state: next, rules: fired })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::lang::parse;

    fn o(x: &str, y: &str) -> NormAtom {
        NormAtom::obligation(x, y)
    }

    #[test]
    fn initial_states() {
        let simple = parse(corpus::PIZZA_SIMPLE).unwrap();
        assert_eq!(initial_state(&simple), ContractState::active([o("s", "alpha")]));
        let power = parse(corpus::PIZZA_POWER).unwrap();
        assert_eq!(initial_state(&power), ContractState::active([o("s", "alpha")]));
        let empty = parse("contract e\n").unwrap();
        assert_eq!(initial_state(&empty), ContractState::active([]));
    }

    #[test]
    fn enabled_in_simple_initial_state() {
        let spec = parse(corpus::PIZZA_SIMPLE).unwrap();
        let labels = enabled_transitions(&spec, &initial_state(&spec));
        assert_eq!(
            labels,
            vec![
                TransitionLabel::fulfil("s", "alpha"),
                TransitionLabel::lapse("s", "alpha")
            ]
        );
    }

    #[test]
    fn nothing_enabled_when_terminated() {
        let spec = parse(corpus::PIZZA_SIMPLE).unwrap();
        assert!(enabled_transitions(&spec, &ContractState::terminated(TerminalClass::Happy)).is_empty());
    }

    #[test]
    fn power_state_offers_exercise() {
        let spec = parse(corpus::PIZZA_POWER).unwrap();
        let content = PowerContent::Obligation(Obligation::new("s", "phi"));
        let state = ContractState::active([NormAtom::power("p", content.clone())]);
        assert_eq!(
            enabled_transitions(&spec, &state),
            vec![TransitionLabel::exercise("p", content.clone())]
        );
        let next = successor(&spec, &state, &TransitionLabel::exercise("p", content)).unwrap();
        assert_eq!(next, ContractState::active([o("s", "phi")]));
    }

    #[test]
    fn simple_successors() {
        let spec = parse(corpus::PIZZA_SIMPLE).unwrap();
        let init = initial_state(&spec);
        assert_eq!(
            successor(&spec, &init, &TransitionLabel::fulfil("s", "alpha")).unwrap(),
            ContractState::active([o("p", "beta")])
        );
        assert_eq!(
            successor(&spec, &init, &TransitionLabel::lapse("s", "alpha")).unwrap(),
            ContractState::active([o("s", "phi")])
        );
    }

    #[test]
    fn successor_rejects_disabled_label() {
        let spec = parse(corpus::PIZZA_SIMPLE).unwrap();
        let init = initial_state(&spec);
        let err = successor(&spec, &init, &TransitionLabel::fulfil("p", "beta")).unwrap_err();
        assert!(matches!(err, EngineError::NotEnabled { .. }));
        // Refinements no rule mentions are not part of the static graph.
        let odd = TransitionLabel::violate("s", "alpha", ViolationRefinement::from_failures(false, false, true));
        assert!(successor(&spec, &init, &odd).is_err());
        // ...but the monitor may still take them; the generic rule catches them.
        assert_eq!(
            fire(&spec, &init, &odd).unwrap().state,
            ContractState::active([o("s", "phi")])
        );
    }

    #[test]
    fn most_specific_violation_rule_wins() {
        let spec = parse(corpus::PIZZA_TIMED).unwrap();
        let init = initial_state(&spec);
        let late = TransitionLabel::violate("s", "alpha", ViolationRefinement::from_failures(false, true, false));
        assert_eq!(
            successor(&spec, &init, &late).unwrap(),
            ContractState::active([o("p", "beta")])
        );
        let both = TransitionLabel::violate("s", "alpha", ViolationRefinement::from_failures(true, true, false));
        assert_eq!(
            successor(&spec, &init, &both).unwrap(),
            ContractState::active([o("p", "beta"), o("s", "phi")])
        );
        let wrong = TransitionLabel::violate("s", "alpha", ViolationRefinement::from_failures(true, false, false));
        assert_eq!(
            fire(&spec, &init, &wrong).unwrap().state,
            ContractState::active([o("s", "phi")])
        );
    }

    #[test]
    fn defaults_without_rules() {
        let src = "contract d\nagents s\nproposition a\nproposition b\ninitially O(s, a), O(s, b)\n";
        let mut spec = parse(src).unwrap();
        let init = initial_state(&spec);
        assert_eq!(
            successor(&spec, &init, &TransitionLabel::fulfil("s", "a")).unwrap(),
            ContractState::active([])
        );
        assert_eq!(
            successor(&spec, &init, &TransitionLabel::lapse("s", "a")).unwrap(),
            ContractState::terminated(TerminalClass::Unhappy)
        );
        spec.config.frame_policy = FramePolicy::PersistUnmentioned;
        assert_eq!(
            successor(&spec, &init, &TransitionLabel::fulfil("s", "a")).unwrap(),
            ContractState::active([o("s", "b")])
        );
    }

    #[test]
    fn violation_axiom_off_keeps_only_rule_violations() {
        let src = "contract d\nagents s\nproposition a\nproposition b\nconfig frame=discharge violation_axiom=off state_bound=10\ninitially O(s, a), O(s, b)\nrule r: O(s, a) -[ not s: a ]-> terminated unhappy\n";
        let spec = parse(src).unwrap();
        let labels = enabled_transitions(&spec, &initial_state(&spec));
        assert_eq!(
            labels,
            vec![
                TransitionLabel::lapse("s", "a"),
                TransitionLabel::fulfil("s", "a"),
                TransitionLabel::fulfil("s", "b"),
            ]
        );
    }

    #[test]
    fn exercise_with_rule_still_brings_content_about() {
        let src = "contract x\nagents s, p\nproposition a\nproposition b\ninitially POW(p, O(s, a))\nrule r: POW(p, O(s, a)) -[ exercise p: O(s, a) ]-> O(p, b)\n";
        let spec = parse(src).unwrap();
        let content = PowerContent::Obligation(Obligation::new("s", "a"));
        let next = successor(&spec, &initial_state(&spec), &TransitionLabel::exercise("p", content)).unwrap();
        assert_eq!(next, ContractState::active([o("s", "a"), o("p", "b")]));
    }
}
