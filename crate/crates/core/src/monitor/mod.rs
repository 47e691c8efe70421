//! Live monitoring of a contract against timestamped events.
//!
//! A [`Session`] holds the current state and clock. Each submitted event first
//! lets any closed fulfilment windows lapse, then is classified against the
//! obligation or power it names and applied. Every transition is logged, and
//! the log alone is enough to rebuild the session.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{EngineError, MonitorError};
use crate::lang::{self, validate};
use crate::norm::*;
use crate::space::{fire, initial_state};

mod classify;

pub use classify::classify_event;

/// What caused a transition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Cause {
    Event { event: Event },
    /// A fulfilment window closed with the obligation still in force.
    Lapse,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub at: Time,
    pub cause: Cause,
    pub label: TransitionLabel,
    pub before_key: String,
    pub after_key: String,
    pub activated: Vec<NormAtom>,
    pub discharged: Vec<NormAtom>,
    /// Ids of the rules that fired.
    pub rules: Vec<String>,
}

/// An event the session refused, kept for audit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub event: Event,
    pub error: String,
}

/// An active norm with the absolute time its fulfilment window closes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveNorm {
    pub atom: NormAtom,
    pub deadline: Option<Time>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Session {
    spec: Arc<ContractSpec>,
    state: ContractState,
    epoch: Time,
    clock: Time,
    log: Vec<TransitionRecord>,
    rejected: Vec<Rejection>,
    lapsed: BTreeSet<NormAtom>,
}

fn norms_of(state: &ContractState) -> NormSet {
    state.norms().cloned().unwrap_or_default()
}

impl Session {
    /// Start monitoring `spec` with the clock at `epoch`. Deadlines in the
    /// spec are relative to the epoch.
    pub fn open(spec: impl Into<Arc<ContractSpec>>, epoch: Time) -> Result<Self, MonitorError> {
        let spec = spec.into();
        let errors: Vec<String> = validate(&spec)
            .into_iter()
            .filter(|d| d.is_error())
            .map(|d| d.message)
            .collect();
        if !errors.is_empty() {
            return Err(EngineError::InvalidSpec(errors.join("; ")).into());
        }
        Ok(Session {
            state: initial_state(&spec),
            spec,
            epoch,
            clock: epoch,
            log: Vec::new(),
            rejected: Vec::new(),
            lapsed: BTreeSet::new(),
        })
    }

    /// Rebuild a session from its log, checking every record against the
    /// semantics. `clock` may be later than the last record.
    pub fn from_log(
        spec: impl Into<Arc<ContractSpec>>,
        epoch: Time,
        clock: Time,
        log: Vec<TransitionRecord>,
        rejected: Vec<Rejection>,
    ) -> Result<Self, MonitorError> {
        let mut session = Session::open(spec, epoch)?;
        session.state = replay(&session.spec, &log)?;
        let mut last = epoch;
        for (index, r) in log.iter().enumerate() {
            if r.at < last {
                return Err(MonitorError::ReplayMismatch {
                    index,
                    reason: format!("time goes backwards ({} after {last})", r.at),
                });
            }
            last = r.at;
            if r.cause == Cause::Lapse {
                session.lapsed.insert(r.label.subject());
            }
        }
        if clock < last {
            return Err(MonitorError::ReplayMismatch {
                index: log.len(),
                reason: format!("clock {clock} is before the last record at {last}"),
            });
        }
        session.clock = clock;
        session.log = log;
        session.rejected = rejected;
        Ok(session)
    }

    pub fn spec(&self) -> &ContractSpec {
        &self.spec
    }

    pub fn shared_spec(&self) -> Arc<ContractSpec> {
        Arc::clone(&self.spec)
    }

    pub fn state(&self) -> &ContractState {
        &self.state
    }

    pub fn clock(&self) -> Time {
        self.clock
    }

    pub fn epoch(&self) -> Time {
        self.epoch
    }

    pub fn history(&self) -> &[TransitionRecord] {
        &self.log
    }

    pub fn rejected(&self) -> &[Rejection] {
        &self.rejected
    }

    /// Current norms in canonical order, each obligation with its deadline.
    pub fn active_norms(&self) -> Vec<ActiveNorm> {
        let Some(norms) = self.state.norms() else {
            return Vec::new();
        };
        norms
            .iter()
            .map(|atom| ActiveNorm {
                atom: atom.clone(),
                deadline: atom
                    .as_obligation()
                    .and_then(|o| classify::deadline(&self.spec, norms, o))
                    .map(|d| self.epoch + d),
            })
            .collect()
    }

    /// Submit one event. Returns the records it produced: lapses of other
    /// obligations whose windows closed before `event.at`, then the event's
    /// own transition. A tick produces only lapses.
    ///
    /// On error nothing changes except that the rejection is recorded.
    pub fn submit_event(&mut self, event: Event) -> Result<Vec<TransitionRecord>, MonitorError> {
        let mut work = self.clone();
        match work.apply(&event) {
            Ok(records) => {
                *self = work;
                Ok(records)
            }
            Err(e) => {
                self.rejected.push(Rejection {
                    event,
                    error: e.to_string(),
                });
                Err(e)
            }
        }
    }

    /// Move the clock to `to`, lapsing every obligation whose window closes
    /// before it. Records come back in lapse order.
    pub fn advance_clock(&mut self, to: Time) -> Result<Vec<TransitionRecord>, MonitorError> {
        if let Some(class) = self.state.terminal_class() {
            return Err(MonitorError::Terminated { class });
        }
        if to < self.clock {
            return Err(MonitorError::StaleTimestamp {
                at: to,
                clock: self.clock,
            });
        }
        let mut work = self.clone();
        let records = work.lapse_until(to, &BTreeSet::new())?;
        work.clock = to;
        *self = work;
        Ok(records)
    }

    fn apply(&mut self, event: &Event) -> Result<Vec<TransitionRecord>, MonitorError> {
        let at = event.at();
        if let Some(class) = self.state.terminal_class() {
            return Err(MonitorError::Terminated { class });
        }
        if at < self.clock {
            return Err(MonitorError::StaleTimestamp {
                at,
                clock: self.clock,
            });
        }
        // The obligations this event speaks to are judged by the event itself,
        // not lapsed from under it.
        let targeted: BTreeSet<NormAtom> = match event {
            Event::Action {
                act: Act::Perform { prop },
                ..
            } => norms_of(&self.state)
                .obligations()
                .filter(|o| o.prop == *prop)
                .map(|o| NormAtom::Obligation(o.clone()))
                .collect(),
            _ => BTreeSet::new(),
        };
        let mut records = self.lapse_until(at, &targeted)?;
        self.clock = at;
        if let Event::Action { .. } = event {
            if let Some(class) = self.state.terminal_class() {
                return Err(MonitorError::Terminated { class });
            }
            let label = self.label_for(event)?;
            records.push(self.step(at, Cause::Event { event: event.clone() }, label)?);
        }
        Ok(records)
    }

    fn label_for(&self, event: &Event) -> Result<TransitionLabel, MonitorError> {
        let norms = norms_of(&self.state);
        let Event::Action { at, actor, act, .. } = event else {
            unreachable!("ticks carry no label")
        };
        match act {
            Act::Perform { prop } => {
                let candidates: Vec<&Obligation> =
                    norms.obligations().filter(|o| o.prop == *prop).collect();
                // Prefer the obligation the actor bears.
                let Some(o) = candidates
                    .iter()
                    .find(|o| o.bearer == *actor)
                    .or(candidates.first())
                else {
                    return Err(MonitorError::UnexpectedEvent {
                        reason: format!("no obligation in force concerns `{prop}`"),
                    });
                };
                let rel = at.saturating_sub(self.epoch);
                let window = classify::window_for(&self.spec, &norms, o, rel);
                Ok(classify_event(&self.spec, event, o, window, rel)
                    .expect("candidate obligation names the event's proposition"))
            }
            Act::Exercise { content } => {
                let held = norms
                    .powers()
                    .any(|p| p.holder == *actor && p.content == *content);
                if !held {
                    return Err(MonitorError::UnexpectedEvent {
                        reason: format!("`{actor}` holds no power over {content}"),
                    });
                }
                Ok(TransitionLabel::exercise(actor.as_str(), content.clone()))
            }
        }
    }

    /// Lapse obligations, one at a time and earliest first, until none has a
    /// window closing before `until`.
    fn lapse_until(
        &mut self,
        until: Time,
        skip: &BTreeSet<NormAtom>,
    ) -> Result<Vec<TransitionRecord>, MonitorError> {
        let mut records = Vec::new();
        while let Some(norms) = self.state.norms().cloned() {
            let due = norms
                .obligations()
                .filter_map(|o| {
                    let atom = NormAtom::Obligation(o.clone());
                    if skip.contains(&atom) || self.lapsed.contains(&atom) {
                        return None;
                    }
                    let fires = self.epoch + classify::deadline(&self.spec, &norms, o)? + 1;
                    (fires <= until).then_some((fires.max(self.clock), o.clone()))
                })
                .min();
            let Some((at, o)) = due else {
                break;
            };
            self.lapsed.insert(NormAtom::Obligation(o.clone()));
            self.clock = at;
            let label = TransitionLabel::lapse(o.bearer.as_str(), o.prop.as_str());
            records.push(self.step(at, Cause::Lapse, label)?);
        }
        Ok(records)
    }

    fn step(
        &mut self,
        at: Time,
        cause: Cause,
        label: TransitionLabel,
    ) -> Result<TransitionRecord, MonitorError> {
        let firing = fire(&self.spec, &self.state, &label)?;
        let before = norms_of(&self.state);
        let after = norms_of(&firing.state);
        let record = TransitionRecord {
            at,
            cause,
            label,
            before_key: self.state.canonical_key(),
            after_key: firing.state.canonical_key(),
            activated: after.difference(&before).cloned().collect(),
            discharged: before.difference(&after).cloned().collect(),
            rules: firing
                .rules
                .iter()
                .map(|&i| self.spec.rules[i].id.clone())
                .collect(),
        };
        self.state = firing.state;
        self.log.push(record.clone());
        Ok(record)
    }
}

/// Fold `log` over the initial state, checking each record's keys.
pub fn replay(spec: &ContractSpec, log: &[TransitionRecord]) -> Result<ContractState, MonitorError> {
    let mut state = initial_state(spec);
    for (index, r) in log.iter().enumerate() {
        let key = state.canonical_key();
        if key != r.before_key {
            return Err(MonitorError::ReplayMismatch {
                index,
                reason: format!("record starts from {} but state is {key}", r.before_key),
            });
        }
        state = fire(spec, &state, &r.label)
            .map_err(|e| MonitorError::ReplayMismatch {
                index,
                reason: e.to_string(),
            })?
            .state;
        let key = state.canonical_key();
        if key != r.after_key {
            return Err(MonitorError::ReplayMismatch {
                index,
                reason: format!("record ends in {} but replay reaches {key}", r.after_key),
            });
        }
    }
    Ok(state)
}

/// Parse a replay file, reporting the first malformed line.
pub fn parse_events(text: &str) -> Result<Vec<Event>, MonitorError> {
    lang::parse_events(text).map_err(|d| MonitorError::MalformedEvent {
        line: lang::line_of(&d),
        reason: d.message,
    })
}
