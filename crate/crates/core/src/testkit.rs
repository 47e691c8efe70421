//! Seeded generators for random contracts and event streams, shared by the
//! property tests, the acceptance suite and the FFI tests.

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rust_decimal::Decimal;

use crate::lang::validate;
use crate::monitor::Session;
use crate::norm::*;
use crate::space::build_graph;

#[derive(Debug, Clone, Copy)]
pub struct SpecShape {
    pub max_agents: usize,
    pub max_props: usize,
    pub max_rules: usize,
    /// Allow `persist` frames and a disabled violation axiom.
    pub vary_config: bool,
}

impl SpecShape {
    pub const DEFAULT: SpecShape = SpecShape {
        max_agents: 5,
        max_props: 8,
        max_rules: 12,
        vary_config: true,
    };

    pub const SMALL: SpecShape = SpecShape {
        max_agents: 2,
        max_props: 3,
        max_rules: 8,
        vary_config: true,
    };
}

struct Gen<'a> {
    rng: &'a mut StdRng,
    agents: Vec<AgentId>,
    props: Vec<PropId>,
}

impl Gen<'_> {
    fn agent(&mut self) -> AgentId {
        self.agents.choose(self.rng).unwrap().clone()
    }

    fn obligation(&mut self) -> Obligation {
        Obligation {
            bearer: self.agent(),
            prop: self.props.choose(self.rng).unwrap().clone(),
        }
    }

    fn content(&mut self) -> PowerContent {
        if self.rng.gen_bool(0.7) {
            PowerContent::Obligation(self.obligation())
        } else {
            PowerContent::Terminate {
                class: self.class(),
            }
        }
    }

    fn class(&mut self) -> TerminalClass {
        if self.rng.gen_bool(0.5) {
            TerminalClass::Happy
        } else {
            TerminalClass::Unhappy
        }
    }

    fn atom(&mut self) -> NormAtom {
        if self.rng.gen_bool(0.8) {
            NormAtom::Obligation(self.obligation())
        } else {
            NormAtom::Power(Power {
                holder: self.agent(),
                content: self.content(),
            })
        }
    }

    fn qualifier(&mut self) -> TemporalQualifier {
        match self.rng.gen_range(0..6) {
            0 => TemporalQualifier::Before {
                t: self.rng.gen_range(0..60),
            },
            1 => TemporalQualifier::After {
                t: self.rng.gen_range(0..60),
            },
            2 => {
                let from = self.rng.gen_range(0..40);
                TemporalQualifier::Between {
                    from,
                    to: from + self.rng.gen_range(1..30),
                }
            }
            _ => TemporalQualifier::None,
        }
    }

    /// A label about `subject`.
    fn label(&mut self, subject: &NormAtom) -> TransitionLabel {
        match subject {
            NormAtom::Obligation(o) => {
                let (a, p) = (o.bearer.as_str(), o.prop.as_str());
                if self.rng.gen_bool(0.5) {
                    TransitionLabel::fulfil(a, p).with_qualifier(self.qualifier())
                } else {
                    let all = ViolationRefinement::all();
                    let refinement = if self.rng.gen_bool(0.4) {
                        None
                    } else {
                        Some(*all.choose(self.rng).unwrap())
                    };
                    TransitionLabel::violate(a, p, refinement)
                }
            }
            NormAtom::Power(p) => TransitionLabel::exercise(p.holder.as_str(), p.content.clone()),
        }
    }

    fn rule(&mut self, id: usize, guard: NormAtom) -> Rule {
        let subject = if self.rng.gen_bool(0.9) {
            guard.clone()
        } else {
            self.atom()
        };
        let label = self.label(&subject);
        let may_terminate = !matches!(
            label.kind,
            LabelKind::Exercise {
                content: PowerContent::Obligation(_),
                ..
            }
        );
        let consequents = if may_terminate && self.rng.gen_bool(0.3) {
            vec![Consequent::Terminate {
                class: self.class(),
            }]
        } else {
            (0..self.rng.gen_range(0..=3))
                .map(|_| {
                    let atom = self.atom();
                    if self.rng.gen_bool(0.8) {
                        Consequent::Add { atom }
                    } else {
                        Consequent::Remove { atom }
                    }
                })
                .collect()
        };
        Rule {
            id: format!("r{id}"),
            guard,
            label,
            consequents,
        }
    }
}

fn attrs(rng: &mut StdRng) -> Attrs {
    let mut out = Attrs::new();
    if rng.gen_bool(0.4) {
        out.insert("size".into(), AttrValue::Text(["small", "large"].choose(rng).unwrap().to_string()));
    }
    if rng.gen_bool(0.3) {
        out.insert("amount".into(), AttrValue::Amount(Decimal::new(rng.gen_range(100..5000), 2)));
    }
    out
}

fn candidate(rng: &mut StdRng, shape: SpecShape) -> ContractSpec {
    let n_agents = rng.gen_range(1..=shape.max_agents);
    let n_props = rng.gen_range(1..=shape.max_props);
    let n_rules = rng.gen_range(0..=shape.max_rules);
    let agents: Vec<AgentId> = (0..n_agents).map(|i| AgentId::new(format!("g{i}"))).collect();
    let propositions: Vec<Proposition> = (0..n_props)
        .map(|i| {
            let name = format!("a{i}");
            let mut p = Proposition::new(&name, &format!("act {i} done"));
            if rng.gen_bool(0.5) {
                p.performer = agents.choose(rng).cloned();
            }
            p.attrs = attrs(rng);
            p
        })
        .collect();
    let mut gen = Gen {
        rng,
        agents: agents.clone(),
        props: propositions.iter().map(|p| p.name.clone()).collect(),
    };

    let initial: NormSet = (0..gen.rng.gen_range(1..=2)).map(|_| gen.atom()).collect();
    // Guards are drawn mostly from atoms the contract can actually produce.
    let mut pool: Vec<NormAtom> = initial.iter().cloned().collect();
    let mut rules = Vec::new();
    for i in 0..n_rules {
        let guard = if gen.rng.gen_bool(0.8) {
            pool.choose(gen.rng).unwrap().clone()
        } else {
            gen.atom()
        };
        let rule = gen.rule(i, guard);
        for a in rule.adds() {
            if !pool.contains(a) {
                pool.push(a.clone());
            }
            if let NormAtom::Power(Power {
                content: PowerContent::Obligation(o),
                ..
            }) = a
            {
                let inner = NormAtom::Obligation(o.clone());
                if !pool.contains(&inner) {
                    pool.push(inner);
                }
            }
        }
        rules.push(rule);
    }

    let mut config = EngineConfig::default();
    if shape.vary_config {
        if gen.rng.gen_bool(0.3) {
            config.frame_policy = FramePolicy::PersistUnmentioned;
        }
        config.violation_axiom = gen.rng.gen_bool(0.8);
    }
    ContractSpec {
        name: "generated".into(),
        agents,
        propositions,
        initial,
        rules,
        config,
    }
}

/// A random spec that validates without errors and whose state space fits
/// its bound.
pub fn random_spec(seed: u64, shape: SpecShape) -> ContractSpec {
    let mut rng = StdRng::seed_from_u64(seed);
    loop {
        let spec = candidate(&mut rng, shape);
        if validate(&spec).iter().any(|d| d.is_error()) {
            continue;
        }
        if build_graph(&spec).is_err() {
            continue;
        }
        return spec;
    }
}

/// A plausible stream of events for a session on `spec`: mostly actions on
/// norms in force (some botched), with ticks, idle gaps and the occasional
/// event nobody expects. Generated against a live session so each event
/// makes sense in the state it reaches.
pub fn random_events(spec: &ContractSpec, seed: u64, len: usize) -> Vec<Event> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut session = Session::open(spec.clone(), 0).expect("generated specs are valid");
    let mut events = Vec::new();
    let mut t: Time = 0;
    for _ in 0..len {
        t += rng.gen_range(0..15);
        let ev = random_event(&mut rng, spec, session.state(), t);
        // Terminal or stale rejections are fine; the stream goes on.
        let _ = session.submit_event(ev.clone());
        events.push(ev);
    }
    events
}

fn random_event(rng: &mut StdRng, spec: &ContractSpec, state: &ContractState, at: Time) -> Event {
    let norms: Vec<NormAtom> = state.norms().map(|n| n.iter().cloned().collect()).unwrap_or_default();
    let roll = rng.gen_range(0..20);
    if norms.is_empty() || roll == 0 {
        return Event::Tick { at };
    }
    if roll == 1 {
        // Most likely nothing matches.
        let p = spec.propositions.choose(rng).unwrap();
        let who = spec.agents.choose(rng).unwrap();
        return Event::perform(at, who.as_str(), p.name.as_str(), Attrs::new());
    }
    match norms.choose(rng).unwrap() {
        NormAtom::Obligation(o) => {
            let declared = spec.proposition(&o.prop);
            let mut attrs = declared.map(|p| p.attrs.clone()).unwrap_or_default();
            if rng.gen_bool(0.2) {
                attrs.insert("defect".into(), AttrValue::Text("yes".into()));
            }
            let performer = declared
                .and_then(|p| p.performer.clone())
                .unwrap_or_else(|| o.bearer.clone());
            let actor = if rng.gen_bool(0.15) {
                spec.agents.choose(rng).unwrap().clone()
            } else {
                performer
            };
            Event::perform(at, actor.as_str(), o.prop.as_str(), attrs)
        }
        NormAtom::Power(p) => Event::exercise(at, p.holder.as_str(), p.content.clone()),
    }
}
