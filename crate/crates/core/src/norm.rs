//! Core vocabulary: agents, propositions, norms, transition labels, states,
//! rules, and the frame-policy effect algebra shared by every other module.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use crate::error::EngineError;

/// Minutes since the contract epoch.
pub type Time = u64;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub String);

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PropId(pub String);

impl AgentId {
    pub fn new(name: impl Into<String>) -> Self {
        AgentId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl PropId {
    pub fn new(name: impl Into<String>) -> Self {
        PropId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for PropId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Attribute value on a proposition or event. Values compare by exact equality.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttrValue {
    Text(String),
    Amount(Decimal),
}

impl fmt::Display for AttrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrValue::Text(s) => write!(f, "\"{}\"", escape_text(s)),
            AttrValue::Amount(d) => write!(f, "{d}"),
        }
    }
}

pub type Attrs = BTreeMap<String, AttrValue>;

pub(crate) fn escape_text(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out
}

pub(crate) fn write_attrs(f: &mut impl fmt::Write, attrs: &Attrs) -> fmt::Result {
    f.write_str("attrs{")?;
    for (i, (k, v)) in attrs.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{k}={v}")?;
    }
    f.write_str("}")
}

/// A state of affairs some agent may be obliged to bring about.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proposition {
    pub name: PropId,
    pub display: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub performer: Option<AgentId>,
    #[serde(default)]
    pub attrs: Attrs,
}

impl Proposition {
    pub fn new(name: &str, display: &str) -> Self {
        Proposition {
            name: PropId::new(name),
            display: display.to_string(),
            performer: None,
            attrs: Attrs::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalClass {
    Happy,
    Unhappy,
}

impl TerminalClass {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminalClass::Happy => "happy",
            TerminalClass::Unhappy => "unhappy",
        }
    }
}

impl fmt::Display for TerminalClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `O(bearer, prop)`: the bearer must see to it that `prop` obtains.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Obligation {
    pub bearer: AgentId,
    pub prop: PropId,
}

impl Obligation {
    pub fn new(bearer: &str, prop: &str) -> Self {
        Obligation {
            bearer: AgentId::new(bearer),
            prop: PropId::new(prop),
        }
    }
}

impl fmt::Display for Obligation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "O({}, {})", self.bearer, self.prop)
    }
}

/// What exercising a power brings about. One nesting level only.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PowerContent {
    Obligation(Obligation),
    Terminate { class: TerminalClass },
}

impl fmt::Display for PowerContent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PowerContent::Obligation(o) => o.fmt(f),
            PowerContent::Terminate { class } => write!(f, "terminated {class}"),
        }
    }
}

/// `POW(holder, content)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Power {
    pub holder: AgentId,
    pub content: PowerContent,
}

impl fmt::Display for Power {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "POW({}, {})", self.holder, self.content)
    }
}

/// One active legal relation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "modality", rename_all = "snake_case")]
pub enum NormAtom {
    Obligation(Obligation),
    Power(Power),
}

impl NormAtom {
    pub fn obligation(bearer: &str, prop: &str) -> Self {
        NormAtom::Obligation(Obligation::new(bearer, prop))
    }

    pub fn power(holder: &str, content: PowerContent) -> Self {
        NormAtom::Power(Power {
            holder: AgentId::new(holder),
            content,
        })
    }

    pub fn as_obligation(&self) -> Option<&Obligation> {
        match self {
            NormAtom::Obligation(o) => Some(o),
            NormAtom::Power(_) => None,
        }
    }

    pub fn as_power(&self) -> Option<&Power> {
        match self {
            NormAtom::Power(p) => Some(p),
            NormAtom::Obligation(_) => None,
        }
    }

    /// The agent who bears the obligation or holds the power.
    pub fn agent(&self) -> &AgentId {
        match self {
            NormAtom::Obligation(o) => &o.bearer,
            NormAtom::Power(p) => &p.holder,
        }
    }
}

impl From<Obligation> for NormAtom {
    fn from(o: Obligation) -> Self {
        NormAtom::Obligation(o)
    }
}

impl fmt::Display for NormAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormAtom::Obligation(o) => o.fmt(f),
            NormAtom::Power(p) => p.fmt(f),
        }
    }
}

/// Time restriction attached to a transition label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TemporalQualifier {
    #[default]
    None,
    Before { t: Time },
    After { t: Time },
    Between { from: Time, to: Time },
}

impl TemporalQualifier {
    pub fn is_none(&self) -> bool {
        matches!(self, TemporalQualifier::None)
    }

    /// `Before` is inclusive, `After` strict, `Between` inclusive on both ends.
    pub fn admits(&self, at: Time) -> bool {
        match *self {
            TemporalQualifier::None => true,
            TemporalQualifier::Before { t } => at <= t,
            TemporalQualifier::After { t } => at > t,
            TemporalQualifier::Between { from, to } => from <= at && at <= to,
        }
    }

    /// Last instant at which the window is still open, if the window closes.
    pub fn closes_at(&self) -> Option<Time> {
        match *self {
            TemporalQualifier::Before { t } => Some(t),
            TemporalQualifier::Between { to, .. } => Some(to),
            TemporalQualifier::None | TemporalQualifier::After { .. } => None,
        }
    }
}

impl fmt::Display for TemporalQualifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            TemporalQualifier::None => Ok(()),
            TemporalQualifier::Before { t } => write!(f, "@before({t})"),
            TemporalQualifier::After { t } => write!(f, "@after({t})"),
            TemporalQualifier::Between { from, to } => write!(f, "@between({from}, {to})"),
        }
    }
}

/// Failure dimensions of a violation. `lapse` means no qualifying event at all
/// and excludes the other three; otherwise at least one of them is set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct ViolationRefinement {
    pub nonconforming: bool,
    pub late: bool,
    pub wrong_performer: bool,
    pub lapse: bool,
}

impl ViolationRefinement {
    pub const LAPSE: ViolationRefinement = ViolationRefinement {
        nonconforming: false,
        late: false,
        wrong_performer: false,
        lapse: true,
    };

    /// Build a non-lapse refinement; `None` when every dimension conforms.
    pub fn from_failures(nonconforming: bool, late: bool, wrong_performer: bool) -> Option<Self> {
        let r = ViolationRefinement {
            nonconforming,
            late,
            wrong_performer,
            lapse: false,
        };
        r.is_well_formed().then_some(r)
    }

    pub fn is_well_formed(&self) -> bool {
        if self.lapse {
            !(self.nonconforming || self.late || self.wrong_performer)
        } else {
            self.nonconforming || self.late || self.wrong_performer
        }
    }

    /// Every well-formed refinement, lapse last.
    pub fn all() -> Vec<ViolationRefinement> {
        let mut out = Vec::with_capacity(8);
        for bits in 1u8..8 {
            out.extend(Self::from_failures(bits & 1 != 0, bits & 2 != 0, bits & 4 != 0));
        }
        out.push(Self::LAPSE);
        out
    }
}

impl fmt::Display for ViolationRefinement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lapse {
            return f.write_str("lapse");
        }
        let dims = [
            (self.nonconforming, "nonconforming"),
            (self.late, "late"),
            (self.wrong_performer, "wrong_performer"),
        ];
        let names: Vec<&str> = dims.iter().filter(|(on, _)| *on).map(|(_, n)| *n).collect();
        f.write_str(&names.join("+"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LabelKind {
    Fulfil {
        agent: AgentId,
        prop: PropId,
    },
    /// `refinement: None` is the generic `not x: Y`, which only appears in rule
    /// labels and catches every refinement no more specific rule claims.
    Violate {
        agent: AgentId,
        prop: PropId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        refinement: Option<ViolationRefinement>,
    },
    Exercise {
        agent: AgentId,
        content: PowerContent,
    },
}

/// A kind of transition between contract states.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TransitionLabel {
    #[serde(flatten)]
    pub kind: LabelKind,
    #[serde(default, skip_serializing_if = "TemporalQualifier::is_none")]
    pub qualifier: TemporalQualifier,
}

impl TransitionLabel {
    pub fn fulfil(agent: &str, prop: &str) -> Self {
        TransitionLabel {
            kind: LabelKind::Fulfil {
                agent: AgentId::new(agent),
                prop: PropId::new(prop),
            },
            qualifier: TemporalQualifier::None,
        }
    }

    pub fn violate(agent: &str, prop: &str, refinement: Option<ViolationRefinement>) -> Self {
        TransitionLabel {
            kind: LabelKind::Violate {
                agent: AgentId::new(agent),
                prop: PropId::new(prop),
                refinement,
            },
            qualifier: TemporalQualifier::None,
        }
    }

    pub fn lapse(agent: &str, prop: &str) -> Self {
        Self::violate(agent, prop, Some(ViolationRefinement::LAPSE))
    }

    pub fn exercise(agent: &str, content: PowerContent) -> Self {
        TransitionLabel {
            kind: LabelKind::Exercise {
                agent: AgentId::new(agent),
                content,
            },
            qualifier: TemporalQualifier::None,
        }
    }

    pub fn with_qualifier(mut self, qualifier: TemporalQualifier) -> Self {
        self.qualifier = qualifier;
        self
    }

    /// The norm whose presence makes this label possible at all.
    pub fn subject(&self) -> NormAtom {
        match &self.kind {
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

    pub fn is_fulfil(&self) -> bool {
        matches!(self.kind, LabelKind::Fulfil { .. })
    }

    pub fn is_violation(&self) -> bool {
        matches!(self.kind, LabelKind::Violate { .. })
    }

    pub fn is_exercise(&self) -> bool {
        matches!(self.kind, LabelKind::Exercise { .. })
    }

    pub fn refinement(&self) -> Option<ViolationRefinement> {
        match self.kind {
            LabelKind::Violate { refinement, .. } => refinement,
            _ => None,
        }
    }
}

impl fmt::Display for TransitionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            LabelKind::Fulfil { agent, prop } => write!(f, "{agent}: {prop}")?,
            LabelKind::Violate {
                agent,
                prop,
                refinement,
            } => {
                write!(f, "not {agent}: {prop}")?;
                if let Some(r) = refinement {
                    write!(f, " / {r}")?;
                }
            }
            LabelKind::Exercise { agent, content } => write!(f, "exercise {agent}: {content}")?,
        }
        if !self.qualifier.is_none() {
            write!(f, " {}", self.qualifier)?;
        }
        Ok(())
    }
}

/// Canonical, duplicate-free set of active norms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NormSet(BTreeSet<NormAtom>);

impl NormSet {
    pub fn new() -> Self {
        NormSet(BTreeSet::new())
    }

    pub fn contains(&self, atom: &NormAtom) -> bool {
        self.0.contains(atom)
    }

    pub fn insert(&mut self, atom: NormAtom) -> bool {
        self.0.insert(atom)
    }

    pub fn remove(&mut self, atom: &NormAtom) -> bool {
        self.0.remove(atom)
    }

    pub fn iter(&self) -> impl Iterator<Item = &NormAtom> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn obligations(&self) -> impl Iterator<Item = &Obligation> {
        self.0.iter().filter_map(NormAtom::as_obligation)
    }

    pub fn powers(&self) -> impl Iterator<Item = &Power> {
        self.0.iter().filter_map(NormAtom::as_power)
    }

    pub fn difference<'a>(&'a self, other: &'a NormSet) -> impl Iterator<Item = &'a NormAtom> {
        self.0.difference(&other.0)
    }
}

impl FromIterator<NormAtom> for NormSet {
    fn from_iter<I: IntoIterator<Item = NormAtom>>(iter: I) -> Self {
        NormSet(iter.into_iter().collect())
    }
}

impl IntoIterator for NormSet {
    type Item = NormAtom;
    type IntoIter = std::collections::btree_set::IntoIter<NormAtom>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

impl<'a> IntoIterator for &'a NormSet {
    type Item = &'a NormAtom;
    type IntoIter = std::collections::btree_set::Iter<'a, NormAtom>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Display for NormSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, atom) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            atom.fmt(f)?;
        }
        f.write_str("}")
    }
}

/// Status of the agreement at one point in its life.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ContractState {
    Active { norms: NormSet },
    Terminated { class: TerminalClass },
}

impl ContractState {
    pub fn active(norms: impl IntoIterator<Item = NormAtom>) -> Self {
        ContractState::Active {
            norms: norms.into_iter().collect(),
        }
    }

    pub fn terminated(class: TerminalClass) -> Self {
        ContractState::Terminated { class }
    }

    /// Order-insensitive identity of the state. Distinct norm sets give
    /// distinct keys because identifiers cannot contain the separators.
    pub fn canonical_key(&self) -> String {
        match self {
            ContractState::Active { norms } => norms.to_string(),
            ContractState::Terminated { class } => format!("terminated({class})"),
        }
    }

    pub fn holds(&self, atom: &NormAtom) -> bool {
        match self {
            ContractState::Active { norms } => norms.contains(atom),
            ContractState::Terminated { .. } => false,
        }
    }

    pub fn norms(&self) -> Option<&NormSet> {
        match self {
            ContractState::Active { norms } => Some(norms),
            ContractState::Terminated { .. } => None,
        }
    }

    pub fn is_terminated(&self) -> bool {
        matches!(self, ContractState::Terminated { .. })
    }

    pub fn terminal_class(&self) -> Option<TerminalClass> {
        match self {
            ContractState::Terminated { class } => Some(*class),
            ContractState::Active { .. } => None,
        }
    }
}

impl fmt::Display for ContractState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical_key())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Consequent {
    Add { atom: NormAtom },
    Remove { atom: NormAtom },
    Terminate { class: TerminalClass },
}

impl fmt::Display for Consequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Consequent::Add { atom } => atom.fmt(f),
            Consequent::Remove { atom } => write!(f, "not {atom}"),
            Consequent::Terminate { class } => write!(f, "terminated {class}"),
        }
    }
}

/// `guard -[label]-> consequents`: whenever `guard` holds, taking `label`
/// leads to a state shaped by `consequents`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub id: String,
    pub guard: NormAtom,
    pub label: TransitionLabel,
    pub consequents: Vec<Consequent>,
}

impl Rule {
    pub fn terminate_class(&self) -> Option<TerminalClass> {
        self.consequents.iter().find_map(|c| match c {
            Consequent::Terminate { class } => Some(*class),
            _ => None,
        })
    }

    pub fn adds(&self) -> impl Iterator<Item = &NormAtom> {
        self.consequents.iter().filter_map(|c| match c {
            Consequent::Add { atom } => Some(atom),
            _ => None,
        })
    }
}

/// How norms the fired rules do not mention carry across a transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FramePolicy {
    /// Only what the fired rules add survives.
    #[default]
    DischargeUnmentioned,
    /// Everything survives except fired guards and explicit removals.
    PersistUnmentioned,
}

pub const DEFAULT_STATE_BOUND: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EngineConfig {
    pub frame_policy: FramePolicy,
    pub violation_axiom: bool,
    pub state_bound: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            frame_policy: FramePolicy::DischargeUnmentioned,
            violation_axiom: true,
            state_bound: DEFAULT_STATE_BOUND,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractSpec {
    pub name: String,
    pub agents: Vec<AgentId>,
    pub propositions: Vec<Proposition>,
    pub initial: NormSet,
    pub rules: Vec<Rule>,
    pub config: EngineConfig,
}

impl ContractSpec {
    pub fn proposition(&self, name: &PropId) -> Option<&Proposition> {
        self.propositions.iter().find(|p| &p.name == name)
    }

    pub fn has_agent(&self, agent: &AgentId) -> bool {
        self.agents.contains(agent)
    }
}

/// What an agent did (or claims to have done).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Act {
    Perform { prop: PropId },
    Exercise { content: PowerContent },
}

/// Timestamped input to the monitor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    Action {
        at: Time,
        actor: AgentId,
        act: Act,
        #[serde(default)]
        attrs: Attrs,
    },
    Tick {
        at: Time,
    },
}

impl Event {
    pub fn perform(at: Time, actor: &str, prop: &str, attrs: Attrs) -> Self {
        Event::Action {
            at,
            actor: AgentId::new(actor),
            act: Act::Perform {
                prop: PropId::new(prop),
            },
            attrs,
        }
    }

    pub fn exercise(at: Time, actor: &str, content: PowerContent) -> Self {
        Event::Action {
            at,
            actor: AgentId::new(actor),
            act: Act::Exercise { content },
            attrs: Attrs::new(),
        }
    }

    pub fn at(&self) -> Time {
        match self {
            Event::Action { at, .. } | Event::Tick { at } => *at,
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::Tick { at } => write!(f, "t={at} tick"),
            Event::Action {
                at,
                actor,
                act,
                attrs,
            } => {
                write!(f, "t={at} agent={actor} ")?;
                match act {
                    Act::Perform { prop } => write!(f, "act={prop}")?,
                    Act::Exercise { content } => write!(f, "exercise {content}")?,
                }
                if !attrs.is_empty() {
                    f.write_str(" ")?;
                    write_attrs(f, attrs)?;
                }
                Ok(())
            }
        }
    }
}

/// Apply the consequents of `fired` to `state` under `policy`.
///
/// Any `Terminate` consequent wins over every `Add`. Under
/// [`FramePolicy::DischargeUnmentioned`] the result is exactly the union of
/// added atoms; under [`FramePolicy::PersistUnmentioned`] it is
/// `(state - guards - removals) + additions`.
pub fn apply_effects(
    state: &ContractState,
    fired: &[&Rule],
    policy: FramePolicy,
) -> Result<ContractState, EngineError> {
    let norms = match state {
        ContractState::Active { norms } => norms,
        ContractState::Terminated { class } => {
            return Err(EngineError::TerminalState { class: *class })
        }
    };

    let mut terminate: Option<TerminalClass> = None;
    for rule in fired {
        if let Some(class) = rule.terminate_class() {
            match terminate {
                Some(prev) if prev != class => {
                    return Err(EngineError::TerminateConflict {
                        rules: fired
                            .iter()
                            .filter(|r| r.terminate_class().is_some())
                            .map(|r| r.id.clone())
                            .collect(),
                    })
                }
                _ => terminate = Some(class),
            }
        }
    }
    if let Some(class) = terminate {
        return Ok(ContractState::Terminated { class });
    }

    let mut next = match policy {
        FramePolicy::DischargeUnmentioned => NormSet::new(),
        FramePolicy::PersistUnmentioned => {
            let mut kept = norms.clone();
            for rule in fired {
                kept.remove(&rule.guard);
                for c in &rule.consequents {
                    if let Consequent::Remove { atom } = c {
                        kept.remove(atom);
                    }
                }
            }
            kept
        }
    };
    for rule in fired {
        for atom in rule.adds() {
            next.insert(atom.clone());
        }
    }
    Ok(ContractState::Active { norms: next })
}
