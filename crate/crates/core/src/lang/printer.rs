use std::fmt::Write;

use crate::norm::{escape_text, write_attrs, ContractSpec, EngineConfig, FramePolicy};

/// Render a spec as `.pact` source. Parsing the output yields an equal spec.
pub fn pretty_print(spec: &ContractSpec) -> String {
    let mut out = String::new();
    writeln!(out, "contract {}", spec.name).unwrap();
    if !spec.agents.is_empty() {
        let names: Vec<&str> = spec.agents.iter().map(|a| a.as_str()).collect();
        writeln!(out, "agents {}", names.join(", ")).unwrap();
    }
    for p in &spec.propositions {
        write!(out, "proposition {} \"{}\"", p.name, escape_text(&p.display)).unwrap();
        if let Some(who) = &p.performer {
            write!(out, " by {who}").unwrap();
        }
        if !p.attrs.is_empty() {
            out.push(' ');
            write_attrs(&mut out, &p.attrs).unwrap();
        }
        out.push('\n');
    }
    if spec.config != EngineConfig::default() {
        let frame = match spec.config.frame_policy {
            FramePolicy::DischargeUnmentioned => "discharge",
            FramePolicy::PersistUnmentioned => "persist",
        };
        let axiom = if spec.config.violation_axiom { "on" } else { "off" };
        writeln!(
            out,
            "config frame={frame} violation_axiom={axiom} state_bound={}",
            spec.config.state_bound
        )
        .unwrap();
    }
    if !spec.initial.is_empty() {
        let atoms: Vec<String> = spec.initial.iter().map(ToString::to_string).collect();
        writeln!(out, "initially {}", atoms.join(", ")).unwrap();
    }
    for r in &spec.rules {
        write!(out, "rule {}: {} -[ {} ]->", r.id, r.guard, r.label).unwrap();
        for (i, c) in r.consequents.iter().enumerate() {
            out.push_str(if i == 0 { " " } else { ", " });
            write!(out, "{c}").unwrap();
        }
        out.push('\n');
    }
    out
}
