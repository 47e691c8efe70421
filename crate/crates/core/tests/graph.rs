use pact_core::corpus;
use pact_core::error::EngineError;
use pact_core::norm::*;
use pact_core::parse;
use pact_core::space::{build_graph, classify_terminals, export_structured_graph, TerminalVerdict};

fn graph(src: &str) -> pact_core::StateGraph {
    build_graph(&parse(src).unwrap()).unwrap()
}

#[test]
fn bundled_graph_sizes() {
    let sizes = [
        (corpus::PIZZA_SIMPLE, 5, 6),
        (corpus::PIZZA_TIMED, 7, 14),
        (corpus::PIZZA_WARRANTY, 5, 8),
        (corpus::PIZZA_PROMISSORY, 5, 5),
        (corpus::PIZZA_POWER, 6, 7),
        (corpus::PIZZA_TYPES, 5, 7),
    ];
    for (src, nodes, edges) in sizes {
        let g = graph(src);
        assert_eq!((g.node_count(), g.edge_count()), (nodes, edges), "{}", g.name);
    }
}

#[test]
fn power_exercise_creates_damages_obligation() {
    let g = graph(corpus::PIZZA_POWER);
    let power = ContractState::active([NormAtom::power("p", PowerContent::Obligation(Obligation::new("s", "phi")))]);
    let key = power.canonical_key();
    let out: Vec<_> = g.outgoing(&key).collect();
    assert_eq!(out.len(), 1);
    assert!(matches!(out[0].label.kind, LabelKind::Exercise { .. }));
    let phi = ContractState::active([NormAtom::obligation("s", "phi")]);
    assert_eq!(out[0].to, phi.canonical_key());
}

#[test]
fn types_spec_routes_wrong_type_to_cheaper_price() {
    let g = graph(corpus::PIZZA_TYPES);
    let start = g.initial.clone();
    let cheaper = ContractState::active([NormAtom::obligation("p", "p2")]).canonical_key();
    assert!(g
        .outgoing(&start)
        .any(|e| e.to == cheaper && e.label.refinement().is_some_and(|r| r.nonconforming)));
}

#[test]
fn every_terminal_is_uniformly_classified() {
    for (_, src) in corpus::BUNDLED {
        let g = graph(src);
        for (key, verdict) in classify_terminals(&g) {
            assert!(matches!(verdict, TerminalVerdict::Uniform(_)), "{key}: {verdict:?}");
        }
    }
}

#[test]
fn persist_policy_keeps_unmentioned_norms() {
    let src = "contract both\nagents a, b\n\
               proposition x \"x done\" by a\nproposition y \"y done\" by b\n\
               initially O(a, x), O(b, y)\n\
               config frame=persist violation_axiom=on state_bound=100\n\
               rule rx: O(a, x) -[ a: x ]-> terminated happy\n";
    let spec = parse(src).unwrap();
    assert_eq!(spec.config.frame_policy, FramePolicy::PersistUnmentioned);
    let g = build_graph(&spec).unwrap();
    // Fulfilling y leaves O(a, x) in force.
    let only_x = ContractState::active([NormAtom::obligation("a", "x")]).canonical_key();
    assert!(g.nodes.contains_key(&only_x));
    let discharge = parse(&src.replace("frame=persist", "frame=discharge")).unwrap();
    let g = build_graph(&discharge).unwrap();
    assert!(!g.nodes.contains_key(&only_x));
}

#[test]
fn state_bound_is_enforced() {
    let mut spec = parse(corpus::PIZZA_TIMED).unwrap();
    spec.config.state_bound = 2;
    assert!(matches!(build_graph(&spec), Err(EngineError::StateBoundExceeded { bound: 2, .. })));
}

#[test]
fn structured_graph_names_rules() {
    // Rule 1 is no_delivery.
    let doc = export_structured_graph(&graph(corpus::PIZZA_SIMPLE));
    assert_eq!(doc.terminals.len(), 2);
    let lapse = doc.edges.iter().find(|e| e.rules == [1usize]).unwrap();
    assert!(lapse.text.starts_with("not s: alpha"));
}
