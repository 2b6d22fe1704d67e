use std::fmt::Write;

use super::Workspace;
use crate::abstraction::MapDirection;
use crate::entity::{write_quoted, Attribute, EntitySpec, Rule};
use crate::ontology::Ontology;
use crate::scenario::{format_duration, Demand, ScenarioConfig};

fn quoted(s: &str) -> String {
    let mut out = String::new();
    write_quoted(&mut out, s).expect("writing to a String");
    out
}

/// Canonical text of a workspace. Blocks are separated by blank lines and
/// appear in a fixed order; names within each kind are sorted.
pub fn print(ws: &Workspace) -> String {
    let mut blocks: Vec<String> = Vec::new();

    for set in ws.sorts.sort_sets() {
        let mut b = format!("sortset {} {{\n", set.name());
        for sort in set.sorts() {
            let supers: Vec<&str> = set.direct_supersorts(sort).collect();
            if supers.is_empty() {
                writeln!(b, "  sort {sort};").unwrap();
            } else {
                writeln!(b, "  sort {sort} < {};", supers.join(", ")).unwrap();
            }
        }
        b.push_str("}\n");
        blocks.push(b);
    }

    let ranks: String = ws
        .sorts
        .ranks()
        .map(|(below, above)| format!("rank {below} < {above};\n"))
        .collect();
    if !ranks.is_empty() {
        blocks.push(ranks);
    }

    if !ws.alphabet.is_empty() {
        let mut b = String::from("alphabet {\n");
        for (sym, sorts) in ws.alphabet.symbols() {
            let list: Vec<String> = sorts.iter().map(|a| format!("{}.{}", a.sort_set, a.sort)).collect();
            writeln!(b, "  symbol {sym} : {};", list.join(", ")).unwrap();
        }
        b.push_str("}\n");
        blocks.push(b);
    }

    for o in ws.ontologies.values() {
        blocks.push(ontology(o));
    }

    for m in ws.models.values() {
        let mut b = format!("model {} in {} {{\n", m.name, m.sort_set);
        for (i, e) in m.entities.values().enumerate() {
            if i > 0 {
                b.push('\n');
            }
            entity(&mut b, e);
        }
        b.push_str("}\n");
        blocks.push(b);
    }

    for map in ws.sort_maps.values() {
        let kw = match map.direction {
            MapDirection::Abstracting => "abstractmap",
            MapDirection::Refining => "refinemap",
        };
        let mut b = format!("{kw} {} in {} {{\n", map.name, map.sort_set);
        for (source, entry) in &map.entries {
            write!(b, "  {source} -> {}", entry.target).unwrap();
            if let Some(a) = &entry.attr_name {
                write!(b, " as {a}").unwrap();
            }
            if let Some(m) = entry.mode {
                write!(b, " {}", m.keyword()).unwrap();
            }
            b.push_str(";\n");
        }
        b.push_str("}\n");
        blocks.push(b);
    }

    for exp in ws.expansions.values() {
        let mut b = format!("expansion {} {{\n", exp.name);
        for (entity, per_attr) in &exp.entries {
            for (attr, produced) in per_attr {
                writeln!(b, "  {entity}.{attr} {{").unwrap();
                for a in produced {
                    attribute(&mut b, "    ", a);
                }
                b.push_str("  }\n");
            }
        }
        b.push_str("}\n");
        blocks.push(b);
    }

    for mm in ws.mode_mappings.values() {
        let mut b = format!("modemap {} {{\n", mm.name);
        for (entity, links) in &mm.entries {
            writeln!(b, "  {entity} {{").unwrap();
            for l in links {
                let paths: Vec<String> = l.detailed.iter().map(|p| p.to_string()).collect();
                writeln!(
                    b,
                    "    {} <- {} as {};",
                    l.abstract_attr,
                    paths.join(", "),
                    l.mode.keyword()
                )
                .unwrap();
            }
            b.push_str("  }\n");
        }
        b.push_str("}\n");
        blocks.push(b);
    }

    for s in ws.scenarios.values() {
        blocks.push(scenario(s));
    }

    blocks.join("\n")
}

fn ontology(o: &Ontology) -> String {
    let mut b = format!("ontology {} over {} {{\n", o.name, o.sort_set);
    if !o.provenance.is_empty() {
        writeln!(b, "  provenance {};", quoted(&o.provenance)).unwrap();
    }
    for c in o.commitments() {
        writeln!(b, "  commitment {} on {} {{", c.id, c.applies_to).unwrap();
        if !c.rationale.is_empty() {
            writeln!(b, "    rationale {};", quoted(&c.rationale)).unwrap();
        }
        for r in &c.requirements {
            let kw = if r.required { "require" } else { "optional" };
            writeln!(b, "    {kw} {} : {};", r.attr, r.sort).unwrap();
        }
        for r in &c.rules {
            rule(&mut b, "    ", r);
        }
        b.push_str("  }\n");
    }
    b.push_str("}\n");
    b
}

fn attribute(b: &mut String, indent: &str, a: &Attribute) {
    writeln!(b, "{indent}attr {} : {} = {};", a.name, a.sort, a.value).unwrap();
}

fn rule(b: &mut String, indent: &str, r: &Rule) {
    writeln!(b, "{indent}rule {}: {};", r.id, r.expr).unwrap();
}

fn entity(b: &mut String, e: &EntitySpec) {
    write!(b, "  entity {}", e.name).unwrap();
    if !e.result_sort.is_empty() {
        write!(b, " : {}", e.result_sort.join(", ")).unwrap();
    }
    writeln!(b, " kind {} {{", e.kind.keyword()).unwrap();
    for a in &e.attributes {
        attribute(b, "    ", a);
    }
    if let Some(f) = &e.functor {
        writeln!(b, "    functor {} {{", f.mode.keyword()).unwrap();
        for func in &f.functions {
            write!(
                b,
                "      fn {}({}) -> {}",
                func.name,
                func.domain.join(", "),
                func.codomain
            )
            .unwrap();
            if let Some(body) = &func.body {
                write!(b, " = {body}").unwrap();
            }
            b.push_str(";\n");
        }
        b.push_str("    }\n");
    }
    for r in &e.rules {
        rule(b, "    ", r);
    }
    b.push_str("  }\n");
}

fn scenario(s: &ScenarioConfig) -> String {
    let mut b = format!("scenario {} {{\n", s.name);
    writeln!(b, "  model {};", s.model).unwrap();
    if let Some(m) = &s.abstract_model {
        writeln!(b, "  abstract {m};").unwrap();
    }
    if let Some(m) = &s.detailed_model {
        writeln!(b, "  detailed {m};").unwrap();
    }
    if let Some(p) = &s.profile {
        writeln!(b, "  profile {p};").unwrap();
    }
    writeln!(b, "  mode {};", s.mode).unwrap();
    writeln!(b, "  horizon {};", format_duration(s.horizon_us)).unwrap();
    writeln!(b, "  seed {};", s.seed).unwrap();
    for (line, d) in &s.demand {
        let spec = match *d {
            Demand::Every { interval_us, offset_us } => {
                with_offset(format!("every {}", format_duration(interval_us)), offset_us)
            }
            Demand::Exponential { mean_us, offset_us } => {
                with_offset(format!("exponential {}", format_duration(mean_us)), offset_us)
            }
            Demand::Batch { count, at_us } => format!("batch {count} at {}", format_duration(at_us)),
        };
        writeln!(b, "  demand {line} {spec};").unwrap();
    }
    for r in &s.routes {
        writeln!(b, "  route {} -> {};", r.from, r.to).unwrap();
    }
    b.push_str("}\n");
    b
}

fn with_offset(s: String, offset_us: u64) -> String {
    if offset_us == 0 {
        s
    } else {
        format!("{s} offset {}", format_duration(offset_us))
    }
}
