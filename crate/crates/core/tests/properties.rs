mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use common::{universe, OState};
use pact_core::explorer::{expand, find_paths, what_if};
use pact_core::lang::{parse, parse_event_line, pretty_print};
use pact_core::monitor::{replay, Session};
use pact_core::norm::*;
use pact_core::space::{build_graph, export_dot, successor};
use pact_core::testkit::{random_events, random_spec, SpecShape};

fn run(spec: &ContractSpec, seed: u64, len: usize) -> Session {
    let mut s = Session::open(spec.clone(), seed % 50).unwrap();
    for ev in random_events(spec, seed, len) {
        let _ = s.submit_event(ev);
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonical_key_is_injective(seed in any::<u64>(), a in prop::collection::vec(any::<bool>(), 0..16), b in prop::collection::vec(any::<bool>(), 0..16)) {
        let spec = random_spec(seed, SpecShape::DEFAULT);
        let u = universe(&spec);
        let pick = |mask: &[bool]| -> BTreeSet<NormAtom> {
            u.iter().zip(mask).filter(|(_, on)| **on).map(|(x, _)| x.clone()).collect()
        };
        let (sa, sb) = (pick(&a), pick(&b));
        let ka = ContractState::active(sa.iter().cloned()).canonical_key();
        let kb = ContractState::active(sb.iter().cloned()).canonical_key();
        prop_assert_eq!(ka == kb, sa == sb);
        for class in [TerminalClass::Happy, TerminalClass::Unhappy] {
            prop_assert_ne!(&ka, &ContractState::terminated(class).canonical_key());
        }
    }

    #[test]
    fn pretty_print_round_trips(seed in any::<u64>()) {
        let spec = random_spec(seed, SpecShape::DEFAULT);
        let text = pretty_print(&spec);
        let back = parse(&text).unwrap();
        prop_assert_eq!(&back, &spec);
        prop_assert_eq!(pretty_print(&back), text);
    }

    #[test]
    fn history_replays_to_live_state(seed in any::<u64>(), len in 0usize..16) {
        let spec = random_spec(seed, SpecShape::DEFAULT);
        let s = run(&spec, seed, len);
        prop_assert_eq!(&replay(&spec, s.history()).unwrap(), s.state());
        let folded = common::fold_labels(&spec, s.history().iter().map(|r| &r.label));
        prop_assert_eq!(folded, Some(OState::from_engine(s.state())));
        let rebuilt = Session::from_log(spec.clone(), s.epoch(), s.clock(), s.history().to_vec(), s.rejected().to_vec()).unwrap();
        prop_assert_eq!(rebuilt.state(), s.state());
    }

    #[test]
    fn clock_never_runs_backwards(seed in any::<u64>(), len in 0usize..16) {
        let spec = random_spec(seed, SpecShape::DEFAULT);
        let mut s = Session::open(spec.clone(), seed % 50).unwrap();
        let mut last = s.clock();
        for ev in random_events(&spec, seed, len) {
            let before = s.clock();
            match s.submit_event(ev.clone()) {
                Ok(records) => {
                    prop_assert!(s.clock() >= before);
                    prop_assert_eq!(s.clock(), ev.at().max(before));
                    for r in &records {
                        prop_assert!(r.at >= last && r.at <= s.clock());
                        last = r.at;
                    }
                }
                Err(_) => prop_assert_eq!(s.clock(), before),
            }
        }
        let times: Vec<Time> = s.history().iter().map(|r| r.at).collect();
        prop_assert!(times.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(times.iter().all(|t| *t >= s.epoch()));
    }

    #[test]
    fn what_if_leaves_session_untouched(seed in any::<u64>(), len in 0usize..10) {
        let spec = random_spec(seed, SpecShape::DEFAULT);
        let s = run(&spec, seed, len / 2);
        let before = s.clone();
        let trial = random_events(&spec, seed.wrapping_add(1), len);
        let hypo = what_if(&s, &trial);
        prop_assert_eq!(s.state(), before.state());
        prop_assert_eq!(s.history(), before.history());
        prop_assert_eq!(s.clock(), before.clock());

        // The hypothetical run is exactly what the live session would do.
        let mut live = s.clone();
        for ev in &trial {
            let _ = live.submit_event(ev.clone());
        }
        prop_assert_eq!(&hypo.state, live.state());
        prop_assert_eq!(hypo.clock, live.clock());
        let got: Vec<_> = hypo.records().cloned().collect();
        prop_assert_eq!(&got[..], &live.history()[s.history().len()..]);
    }

    #[test]
    fn deeper_trees_extend_shallower_ones(seed in any::<u64>(), d in 0usize..4) {
        let spec = random_spec(seed, SpecShape::DEFAULT);
        let init = ContractState::active(spec.initial.iter().cloned());
        let deep = expand(&spec, &init, d + 1);
        prop_assert_eq!(deep.truncate(d), expand(&spec, &init, d));
        prop_assert!(deep.depth() <= d + 1);
    }

    #[test]
    fn found_paths_lead_to_their_target(seed in any::<u64>()) {
        let spec = random_spec(seed, SpecShape::DEFAULT);
        let g = build_graph(&spec).unwrap();
        let target = |s: &ContractState| s.terminal_class() == Some(TerminalClass::Unhappy);
        for path in find_paths(&g, target, 5) {
            prop_assert!(path.len() <= 5);
            let mut state = g.initial_state().clone();
            let mut seen = vec![state.canonical_key()];
            for label in &path {
                state = successor(&spec, &state, label).unwrap();
                let key = state.canonical_key();
                prop_assert!(!seen.contains(&key), "path revisits {}", key);
                seen.push(key);
            }
            prop_assert!(target(&state));
        }
    }

    #[test]
    fn dot_export_is_deterministic(seed in any::<u64>()) {
        let spec = random_spec(seed, SpecShape::DEFAULT);
        let a = export_dot(&build_graph(&spec).unwrap());
        let b = export_dot(&build_graph(&parse(&pretty_print(&spec)).unwrap()).unwrap());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn event_lines_round_trip(seed in any::<u64>()) {
        let spec = random_spec(seed, SpecShape::DEFAULT);
        for ev in random_events(&spec, seed, 12) {
            let line = ev.to_string();
            prop_assert_eq!(parse_event_line(&line, 1).unwrap(), Some(ev));
        }
    }
}
