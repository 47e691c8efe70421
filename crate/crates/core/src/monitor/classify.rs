use crate::norm::*;

/// Judge an action against one obligation it names.
///
/// Content conforms when the event's attributes equal the proposition's
/// exactly; timing conforms when `window` admits the event's time (relative
/// to the session epoch, already subtracted by the caller); the performer
/// conforms when it is the proposition's declared performer, or the bearer
/// when none is declared. A fulfilment carries `window` as its qualifier so
/// it matches the rule that set the window.
///
/// Returns `None` when the event is not an action on the obligation's
/// proposition, so the caller can try other obligations.
pub fn classify_event(
    spec: &ContractSpec,
    event: &Event,
    obligation: &Obligation,
    window: TemporalQualifier,
    relative_at: Time,
) -> Option<TransitionLabel> {
    let Event::Action {
        actor,
        act: Act::Perform { prop },
        attrs,
        ..
    } = event
    else {
        return None;
    };
    if *prop != obligation.prop {
        return None;
    }
    let declared = spec.proposition(prop);
    let expected_attrs = declared.map(|p| &p.attrs);
    let conforming = expected_attrs.map_or(attrs.is_empty(), |a| a == attrs);
    let in_time = window.admits(relative_at);
    let expected_performer = declared
        .and_then(|p| p.performer.as_ref())
        .unwrap_or(&obligation.bearer);
    let right_performer = actor == expected_performer;

    let bearer = obligation.bearer.as_str();
    let name = obligation.prop.as_str();
    Some(
        match ViolationRefinement::from_failures(!conforming, !in_time, !right_performer) {
            None => TransitionLabel::fulfil(bearer, name).with_qualifier(window),
            Some(r) => TransitionLabel::violate(bearer, name, Some(r)),
        },
    )
}

/// Fulfilment windows the rules attach to `obligation` in `state`, in rule
/// order. Empty when no guard-active rule qualifies its fulfilment.
pub(crate) fn windows(
    spec: &ContractSpec,
    norms: &NormSet,
    obligation: &Obligation,
) -> Vec<TemporalQualifier> {
    let mut out = Vec::new();
    for rule in &spec.rules {
        if !norms.contains(&rule.guard) {
            continue;
        }
        if let LabelKind::Fulfil { agent, prop } = &rule.label.kind {
            if *agent == obligation.bearer && *prop == obligation.prop && !out.contains(&rule.label.qualifier) {
                out.push(rule.label.qualifier);
            }
        }
    }
    out
}

/// The last instant (relative to the epoch) at which `obligation` can still
/// be fulfilled, if every fulfilment window closes.
pub(crate) fn deadline(spec: &ContractSpec, norms: &NormSet, obligation: &Obligation) -> Option<Time> {
    let ws = windows(spec, norms, obligation);
    if ws.is_empty() {
        return None;
    }
    ws.iter()
        .map(|w| w.closes_at())
        .collect::<Option<Vec<Time>>>()
        .and_then(|ends| ends.into_iter().max())
}

/// The window an action at `relative_at` falls into, preferring one that
/// admits it. Unqualified when no rule qualifies the fulfilment.
pub(crate) fn window_for(
    spec: &ContractSpec,
    norms: &NormSet,
    obligation: &Obligation,
    relative_at: Time,
) -> TemporalQualifier {
    let ws = windows(spec, norms, obligation);
    ws.iter()
        .copied()
        .find(|w| w.admits(relative_at))
        .or_else(|| ws.first().copied())
        .unwrap_or_default()
}
