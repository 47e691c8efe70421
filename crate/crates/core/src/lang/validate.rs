//! Semantic checks that go beyond the grammar.

use std::collections::{BTreeSet, HashMap, HashSet};

use super::{Diagnostic, SourceMap, SourceSpan};
use crate::norm::*;

enum Locus {
    Contract,
    Initial,
    Rule(usize),
    Prop(PropId),
}

struct Sink<'a> {
    map: Option<&'a SourceMap>,
    out: Vec<Diagnostic>,
}

impl Sink<'_> {
    fn span(&self, locus: &Locus) -> Option<SourceSpan> {
        let map = self.map?;
        let fallback = map.contract.or(Some(SourceSpan::new(1, 1, 1)));
        match locus {
            Locus::Contract => fallback,
            Locus::Initial => map.initial.or(fallback),
            Locus::Rule(i) => map.rules.get(*i).copied().or(fallback),
            Locus::Prop(p) => map.propositions.get(p).copied().or(fallback),
        }
    }

    fn error(&mut self, locus: Locus, msg: String) {
        let span = self.span(&locus);
        self.out.push(Diagnostic::error(msg, span));
    }

    fn warning(&mut self, locus: Locus, msg: String) {
        let span = self.span(&locus);
        self.out.push(Diagnostic::warning(msg, span));
    }
}

/// Validate a spec. Diagnostics carry no spans; use [`validate_with_map`]
/// when the spec came from source text.
pub fn validate(spec: &ContractSpec) -> Vec<Diagnostic> {
    run(spec, None)
}

pub fn validate_with_map(spec: &ContractSpec, map: &SourceMap) -> Vec<Diagnostic> {
    run(spec, Some(map))
}

fn atoms_of(atom: &NormAtom, out: &mut Vec<(AgentId, Option<PropId>)>) {
    match atom {
        NormAtom::Obligation(o) => out.push((o.bearer.clone(), Some(o.prop.clone()))),
        NormAtom::Power(p) => {
            out.push((p.holder.clone(), None));
            if let PowerContent::Obligation(o) = &p.content {
                out.push((o.bearer.clone(), Some(o.prop.clone())));
            }
        }
    }
}

fn label_refs(label: &TransitionLabel) -> Vec<(AgentId, Option<PropId>)> {
    let mut out = Vec::new();
    atoms_of(&label.subject(), &mut out);
    out
}

fn rule_refs(rule: &Rule) -> Vec<(AgentId, Option<PropId>)> {
    let mut out = Vec::new();
    atoms_of(&rule.guard, &mut out);
    out.extend(label_refs(&rule.label));
    for c in &rule.consequents {
        match c {
            Consequent::Add { atom } | Consequent::Remove { atom } => atoms_of(atom, &mut out),
            Consequent::Terminate { .. } => {}
        }
    }
    out
}

fn run(spec: &ContractSpec, map: Option<&SourceMap>) -> Vec<Diagnostic> {
    let mut sink = Sink {
        map,
        out: Vec::new(),
    };

    // Declarations.
    let mut agents = HashSet::new();
    for a in &spec.agents {
        if a.as_str().is_empty() {
            sink.error(Locus::Contract, "agent names must be non-empty".into());
        }
        if !agents.insert(a) {
            sink.error(Locus::Contract, format!("duplicate declaration of agent `{a}`"));
        }
    }
    let mut props = HashSet::new();
    for p in &spec.propositions {
        if !props.insert(&p.name) {
            sink.error(
                Locus::Prop(p.name.clone()),
                format!("duplicate declaration of proposition `{}`", p.name),
            );
        }
        if let Some(who) = &p.performer {
            if !agents.contains(who) {
                sink.error(Locus::Prop(p.name.clone()), format!("undeclared agent `{who}`"));
            }
        }
    }
    let check_refs = |sink: &mut Sink, locus: fn(usize) -> Locus, idx: usize, refs: Vec<(AgentId, Option<PropId>)>| {
        for (agent, prop) in refs {
            if !agents.contains(&agent) {
                sink.error(locus(idx), format!("undeclared agent `{agent}`"));
            }
            if let Some(prop) = prop {
                if !props.contains(&prop) {
                    sink.error(locus(idx), format!("undeclared proposition `{prop}`"));
                }
            }
        }
    };
    for atom in spec.initial.iter() {
        let mut refs = Vec::new();
        atoms_of(atom, &mut refs);
        check_refs(&mut sink, |_| Locus::Initial, 0, refs);
    }
    let mut ids = HashSet::new();
    for (i, rule) in spec.rules.iter().enumerate() {
        check_refs(&mut sink, Locus::Rule, i, rule_refs(rule));
        if !ids.insert(rule.id.as_str()) {
            sink.error(Locus::Rule(i), format!("duplicate rule id `{}`", rule.id));
        }
        let terms = rule
            .consequents
            .iter()
            .filter(|c| matches!(c, Consequent::Terminate { .. }))
            .count();
        if terms > 0 && rule.consequents.len() > 1 {
            sink.error(
                Locus::Rule(i),
                format!("rule `{}`: `terminated` must be the only consequent", rule.id),
            );
        }
        if let Some(r) = rule.label.refinement() {
            if !r.is_well_formed() {
                sink.error(
                    Locus::Rule(i),
                    format!("rule `{}`: malformed violation refinement", rule.id),
                );
            }
        }
    }
    if spec.config.state_bound == 0 {
        sink.error(Locus::Contract, "state_bound must be at least 1".into());
    }

    // Labels.
    for (i, rule) in spec.rules.iter().enumerate() {
        let q = rule.label.qualifier;
        if let TemporalQualifier::Between { from, to } = q {
            if from >= to {
                sink.error(
                    Locus::Rule(i),
                    format!("rule `{}`: empty interval between({from}, {to})", rule.id),
                );
            }
        }
        if !q.is_none() && !rule.label.is_fulfil() {
            sink.error(
                Locus::Rule(i),
                format!(
                    "rule `{}`: temporal qualifiers apply to fulfilment labels only; timing of a violation is expressed with `/ late`",
                    rule.id
                ),
            );
        }
        if let LabelKind::Exercise {
            content: PowerContent::Obligation(_),
            ..
        } = &rule.label.kind
        {
            if rule.terminate_class().is_some() {
                sink.error(
                    Locus::Rule(i),
                    format!(
                        "rule `{}`: exercising a power over an obligation must bring that obligation into force, not terminate",
                        rule.id
                    ),
                );
            }
        }
    }

    // Same (guard, label) with different terminal classes.
    let mut by_trigger: HashMap<(&NormAtom, &TransitionLabel), (usize, TerminalClass)> = HashMap::new();
    for (i, rule) in spec.rules.iter().enumerate() {
        let Some(class) = rule.terminate_class() else {
            continue;
        };
        match by_trigger.get(&(&rule.guard, &rule.label)) {
            Some(&(first, prev)) if prev != class => sink.error(
                Locus::Rule(i),
                format!(
                    "rules `{}` and `{}` share guard and label but terminate {prev} vs {class}",
                    spec.rules[first].id, rule.id
                ),
            ),
            Some(_) => {}
            None => {
                by_trigger.insert((&rule.guard, &rule.label), (i, class));
            }
        }
    }

    // Unused propositions.
    let mut used: HashSet<PropId> = HashSet::new();
    for rule in &spec.rules {
        used.extend(rule_refs(rule).into_iter().filter_map(|(_, p)| p));
    }
    for p in &spec.propositions {
        if !used.contains(&p.name) {
            sink.warning(
                Locus::Prop(p.name.clone()),
                format!("proposition `{}` is never used in any rule", p.name),
            );
        }
    }

    // Shallow reachability: atoms that could ever be in force.
    let mut reach: BTreeSet<&NormAtom> = spec.initial.iter().collect();
    let mut power_contents: Vec<NormAtom> = Vec::new();
    loop {
        let before = reach.len() + power_contents.len();
        for atom in reach.clone() {
            if let NormAtom::Power(Power {
                content: PowerContent::Obligation(o),
                ..
            }) = atom
            {
                let a = NormAtom::Obligation(o.clone());
                if !power_contents.contains(&a) {
                    power_contents.push(a);
                }
            }
        }
        for rule in &spec.rules {
            if reach.contains(&rule.guard) || power_contents.contains(&rule.guard) {
                reach.extend(rule.adds());
            }
        }
        if reach.len() + power_contents.len() == before {
            break;
        }
    }
    for (i, rule) in spec.rules.iter().enumerate() {
        if !reach.contains(&rule.guard) && !power_contents.contains(&rule.guard) {
            sink.warning(
                Locus::Rule(i),
                format!("rule `{}`: guard {} is never in force", rule.id, rule.guard),
            );
        }
    }

    sink.out
}
