use pact_core::corpus;
use pact_core::error::MonitorError;
use pact_core::monitor::{Cause, Session};
use pact_core::norm::*;
use pact_core::parse;

fn alpha_attrs(spec: &ContractSpec) -> Attrs {
    spec.proposition(&PropId::new("alpha")).unwrap().attrs.clone()
}

#[test]
fn epoch_shifts_every_deadline() {
    let spec = parse(corpus::PIZZA_TIMED).unwrap();
    let attrs = alpha_attrs(&spec);
    let mut s = Session::open(spec, 1_000).unwrap();
    assert_eq!(s.active_norms()[0].deadline, Some(1_030));
    let records = s.submit_event(Event::perform(1_020, "s", "alpha", attrs)).unwrap();
    assert!(records[0].label.is_fulfil());
    assert_eq!(s.state().canonical_key(), "{O(p, beta_bar)}");
}

#[test]
fn tick_past_deadline_lapses_once() {
    let spec = parse(corpus::PIZZA_TIMED).unwrap();
    let mut s = Session::open(spec, 0).unwrap();
    let first = s.submit_event(Event::Tick { at: 60 }).unwrap();
    assert_eq!(first.len(), 1);
    assert_eq!(first[0].cause, Cause::Lapse);
    assert_eq!(first[0].at, 31);
    assert!(s.submit_event(Event::Tick { at: 90 }).unwrap().is_empty());
    assert_eq!(s.state().canonical_key(), "{O(s, phi)}");
}

#[test]
fn wrong_and_late_delivery_adds_damages() {
    let spec = parse(corpus::PIZZA_TIMED).unwrap();
    let mut attrs = alpha_attrs(&spec);
    attrs.insert("size".into(), AttrValue::Text("small".into()));
    let mut s = Session::open(spec, 0).unwrap();
    let r = s.submit_event(Event::perform(45, "s", "alpha", attrs)).unwrap();
    assert_eq!(r[0].rules, ["wrong_and_late"]);
    assert_eq!(s.state().canonical_key(), "{O(p, beta), O(s, phi)}");
}

#[test]
fn power_holder_exercises_through_session() {
    let spec = parse(corpus::PIZZA_POWER).unwrap();
    let mut s = Session::open(spec.clone(), 0).unwrap();
    // No deadline, so a non-conforming delivery is the breach.
    let r = s.submit_event(Event::perform(10, "s", "alpha", Attrs::new())).unwrap();
    assert!(r[0].label.is_violation());
    let content = PowerContent::Obligation(Obligation::new("s", "phi"));
    let err = s.submit_event(Event::exercise(12, "s", content.clone())).unwrap_err();
    assert!(matches!(err, MonitorError::UnexpectedEvent { .. }));
    s.submit_event(Event::exercise(15, "p", content)).unwrap();
    assert_eq!(s.state().canonical_key(), "{O(s, phi)}");
    assert_eq!(s.rejected().len(), 1);
}

#[test]
fn rejected_events_leave_state_alone() {
    let spec = parse(corpus::PIZZA_SIMPLE).unwrap();
    let mut s = Session::open(spec, 0).unwrap();
    let before = s.clone();
    let err = s.submit_event(Event::perform(5, "p", "beta", Attrs::new())).unwrap_err();
    assert!(matches!(err, MonitorError::UnexpectedEvent { .. }));
    assert_eq!(s.state(), before.state());
    assert!(s.history().is_empty());
    assert_eq!(s.clock(), before.clock());
}

#[test]
fn terminated_session_refuses_input() {
    let spec = parse(corpus::PIZZA_SIMPLE).unwrap();
    let attrs = alpha_attrs(&spec);
    let beta = spec.proposition(&PropId::new("beta")).unwrap().attrs.clone();
    let mut s = Session::open(spec, 0).unwrap();
    s.submit_event(Event::perform(1, "s", "alpha", attrs)).unwrap();
    s.submit_event(Event::perform(2, "p", "beta", beta)).unwrap();
    assert_eq!(s.state().terminal_class(), Some(TerminalClass::Happy));
    assert!(matches!(s.submit_event(Event::Tick { at: 3 }), Err(MonitorError::Terminated { .. })));
    assert!(matches!(s.advance_clock(4), Err(MonitorError::Terminated { .. })));
}
