use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use super::lexer::{check_delimiters, tokenize};
use super::parser::{Item, Parser, ScenarioItem};
use super::{ParseDiagnostic, Parsed, SourceSpan, Workspace};
use crate::abstraction::{Expansion, ModeMapping, SortMap};
use crate::entity::{check_wellformed, InformationModel};
use crate::ontology::Ontology;
use crate::scenario::{ScenarioConfig, TransferMode};
use crate::sorts::{SortAssignment, SortSet};

/// Reads files and expands includes. Each file is included at most once;
/// an include that leads back to a file still being read is an error.
#[derive(Default)]
pub(crate) struct Loader {
    active: Vec<PathBuf>,
    done: BTreeSet<PathBuf>,
}

type Diags = Vec<ParseDiagnostic>;

impl Loader {
    pub(crate) fn load_file(&mut self, path: &Path, from: Option<&SourceSpan>) -> Result<Vec<Item>, Diags> {
        let display = path.display().to_string();
        let io_err = |e: std::io::Error| {
            let span = from.cloned().unwrap_or_else(|| SourceSpan::new(&display, 1, 1, 0));
            vec![ParseDiagnostic::error(span, format!("cannot read `{display}`: {e}"))]
        };
        let canonical = path.canonicalize().map_err(io_err)?;
        if self.active.contains(&canonical) {
            let span = from.cloned().unwrap_or_else(|| SourceSpan::new(&display, 1, 1, 0));
            return Err(vec![ParseDiagnostic::error(
                span,
                format!("include cycle through `{display}`"),
            )]);
        }
        if !self.done.insert(canonical.clone()) {
            return Ok(Vec::new());
        }
        let text = std::fs::read_to_string(path).map_err(io_err)?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        self.active.push(canonical);
        let result = self.load_text(&text, &display, &base);
        self.active.pop();
        result
    }

    pub(crate) fn load_text(&mut self, text: &str, file: &str, base: &Path) -> Result<Vec<Item>, Diags> {
        let tokens = tokenize(file, text).map_err(|d| vec![d])?;
        check_delimiters(&tokens).map_err(|d| vec![d])?;
        let items = Parser::new(tokens).items().map_err(|d| vec![d])?;
        let mut out = Vec::new();
        for item in items {
            match item {
                Item::Include(path) => {
                    let target = base.join(&path.value);
                    out.extend(self.load_file(&target, Some(&path.span))?);
                }
                other => out.push(other),
            }
        }
        Ok(out)
    }
}

fn dup(span: &SourceSpan, what: &str, name: &str) -> ParseDiagnostic {
    ParseDiagnostic::error(span.clone(), format!("{what} `{name}` is already defined"))
}

/// Builds the workspace from parsed items. Declarations are processed by kind
/// (sort sets first), so blocks may refer to ones that appear later.
pub(crate) fn build(items: Vec<Item>) -> Result<Parsed, Diags> {
    let mut ws = Workspace::default();
    let mut errors = Vec::new();

    // Sort sets: every sort before any edge, so declaration order is free.
    for item in &items {
        let Item::SortSet { name, sorts } = item else { continue };
        if ws.sorts.sort_set(&name.value).is_ok() {
            errors.push(dup(&name.span, "sort set", &name.value));
            continue;
        }
        let mut set = SortSet::new(name.value.clone());
        for d in sorts {
            if let Err(e) = set.declare_sort(&d.name.value) {
                errors.push(ParseDiagnostic::error(d.name.span.clone(), e.to_string()));
            }
        }
        for d in sorts {
            for sup in &d.supers {
                if !set.contains(&sup.value) {
                    errors.push(ParseDiagnostic::error(
                        sup.span.clone(),
                        format!("unknown sort `{}` in sort set `{}`", sup.value, name.value),
                    ));
                } else if let Err(e) = set.declare_subsort(&d.name.value, &sup.value) {
                    errors.push(ParseDiagnostic::error(sup.span.clone(), e.to_string()));
                }
            }
        }
        ws.sorts
            .insert_sort_set(set)
            .expect("duplicate sort sets are filtered above");
    }

    for item in &items {
        if let Item::Rank { below, above } = item {
            if let Err(e) = ws.sorts.rank_sort_sets(&below.value, &above.value) {
                errors.push(ParseDiagnostic::error(below.span.clone(), e.to_string()));
            }
        }
    }

    for item in &items {
        let Item::Alphabet(symbols) = item else { continue };
        for (sym, sorts) in symbols {
            let assignments = sorts
                .iter()
                .map(|(set, sort)| SortAssignment::new(set.value.clone(), sort.value.clone()));
            if let Err(e) = ws.alphabet.assign_symbol_sorts(&ws.sorts, &sym.value, assignments) {
                errors.push(ParseDiagnostic::error(sym.span.clone(), e.to_string()));
            }
        }
    }

    for item in &items {
        let Item::Ontology {
            name,
            sort_set,
            provenance,
            commitments,
        } = item
        else {
            continue;
        };
        if ws.ontologies.contains_key(&name.value) {
            errors.push(dup(&name.span, "ontology", &name.value));
            continue;
        }
        let mut o = Ontology::new(&name.value, &sort_set.value);
        o.provenance = provenance.clone().unwrap_or_default();
        for c in commitments {
            if let Err(e) = o.add_commitment(c.value.clone()) {
                errors.push(ParseDiagnostic::error(c.span.clone(), e.to_string()));
            }
        }
        if let Err(e) = o.check_against(&ws.sorts) {
            errors.push(ParseDiagnostic::error(sort_set.span.clone(), e.to_string()));
        }
        ws.ontologies.insert(name.value.clone(), o);
    }

    // Entity spans, for attaching well-formedness findings.
    let mut entity_spans: BTreeMap<(String, String), SourceSpan> = BTreeMap::new();
    for item in &items {
        let Item::Model {
            name,
            sort_set,
            entities,
        } = item
        else {
            continue;
        };
        if ws.models.contains_key(&name.value) {
            errors.push(dup(&name.span, "model", &name.value));
            continue;
        }
        if ws.sorts.sort_set(&sort_set.value).is_err() {
            errors.push(ParseDiagnostic::error(
                sort_set.span.clone(),
                format!("unknown sort set `{}`", sort_set.value),
            ));
        }
        let mut m = InformationModel::new(&name.value, &sort_set.value);
        for e in entities {
            if let Err(err) = m.define_entity(e.value.clone()) {
                errors.push(ParseDiagnostic::error(e.span.clone(), err.to_string()));
            }
            entity_spans
                .entry((name.value.clone(), e.value.name.clone()))
                .or_insert_with(|| e.span.clone());
        }
        ws.models.insert(name.value.clone(), m);
    }

    for item in &items {
        let Item::SortMap {
            name,
            direction,
            sort_set,
            entries,
        } = item
        else {
            continue;
        };
        if ws.sort_maps.contains_key(&name.value) {
            errors.push(dup(&name.span, "sort map", &name.value));
            continue;
        }
        let mut map = SortMap::new(&name.value, &sort_set.value, *direction);
        for (source, entry) in entries {
            if map.entries.insert(source.value.clone(), entry.clone()).is_some() {
                errors.push(dup(&source.span, "map entry for sort", &source.value));
            }
        }
        if let Err(e) = map.validate(&ws.sorts) {
            errors.push(ParseDiagnostic::error(name.span.clone(), e.to_string()));
        }
        ws.sort_maps.insert(name.value.clone(), map);
    }

    for item in &items {
        let Item::Expansion { name, entries } = item else {
            continue;
        };
        if ws.expansions.contains_key(&name.value) {
            errors.push(dup(&name.span, "expansion", &name.value));
            continue;
        }
        let mut exp = Expansion {
            name: name.value.clone(),
            entries: BTreeMap::new(),
        };
        for (entity, attr, produced) in entries {
            let slot = exp.entries.entry(entity.value.clone()).or_default();
            if slot.insert(attr.value.clone(), produced.clone()).is_some() {
                errors.push(dup(
                    &attr.span,
                    "expansion of",
                    &format!("{}.{}", entity.value, attr.value),
                ));
            }
        }
        ws.expansions.insert(name.value.clone(), exp);
    }

    for item in &items {
        let Item::ModeMap { name, entries } = item else {
            continue;
        };
        if ws.mode_mappings.contains_key(&name.value) {
            errors.push(dup(&name.span, "mode mapping", &name.value));
            continue;
        }
        let mut mm = ModeMapping {
            name: name.value.clone(),
            entries: BTreeMap::new(),
        };
        for (entity, links) in entries {
            if mm.entries.insert(entity.value.clone(), links.clone()).is_some() {
                errors.push(dup(&entity.span, "mapping for entity", &entity.value));
            }
        }
        ws.mode_mappings.insert(name.value.clone(), mm);
    }

    for item in &items {
        let Item::Scenario(s) = item else { continue };
        if ws.scenarios.contains_key(&s.name.value) {
            errors.push(dup(&s.name.span, "scenario", &s.name.value));
            continue;
        }
        match scenario(s, &ws) {
            Ok(cfg) => {
                ws.scenarios.insert(cfg.name.clone(), cfg);
            }
            Err(mut e) => errors.append(&mut e),
        }
    }

    if !errors.is_empty() {
        return Err(errors);
    }

    let mut diagnostics = Vec::new();
    for (name, model) in &ws.models {
        for d in check_wellformed(model, &ws.sorts).diagnostics {
            let span = entity_spans
                .get(&(name.clone(), d.entity.clone()))
                .cloned()
                .unwrap_or_else(|| SourceSpan::new("<workspace>", 1, 1, 0));
            diagnostics.push(super::ParseDiagnostic {
                span,
                severity: d.severity,
                message: format!("model `{name}`: {d}"),
            });
        }
    }
    Ok(Parsed {
        workspace: ws,
        diagnostics,
    })
}

fn scenario(s: &ScenarioItem, ws: &Workspace) -> Result<ScenarioConfig, Diags> {
    let mut errors = Vec::new();
    let Some(model) = &s.model else {
        return Err(vec![ParseDiagnostic::error(
            s.name.span.clone(),
            format!("scenario `{}` needs a `model` setting", s.name.value),
        )]);
    };
    let mut cfg = ScenarioConfig::new(&s.name.value, &model.value);
    for (slot, name) in [
        (&mut cfg.abstract_model, &s.abstract_model),
        (&mut cfg.detailed_model, &s.detailed_model),
    ] {
        if let Some(n) = name {
            if !ws.models.contains_key(&n.value) {
                errors.push(ParseDiagnostic::error(
                    n.span.clone(),
                    format!("unknown model `{}`", n.value),
                ));
            }
            *slot = Some(n.value.clone());
        }
    }
    if let Some(p) = &s.profile {
        if !ws.ontologies.contains_key(&p.value) {
            errors.push(ParseDiagnostic::error(
                p.span.clone(),
                format!("unknown ontology `{}`", p.value),
            ));
        }
        cfg.profile = Some(p.value.clone());
    }
    cfg.mode = s.mode.unwrap_or(TransferMode::Detailed);
    match &s.horizon {
        Some(h) if h.value == 0 => {
            errors.push(ParseDiagnostic::error(h.span.clone(), "horizon must be positive"));
        }
        Some(h) => cfg.horizon_us = h.value,
        None => {}
    }
    cfg.seed = s.seed.unwrap_or(0);
    for (line, d) in &s.demand {
        if cfg.demand.insert(line.value.clone(), *d).is_some() {
            errors.push(dup(&line.span, "demand for", &line.value));
        }
    }
    cfg.routes = s.routes.clone();
    if let Err(e) = cfg.validate() {
        errors.push(ParseDiagnostic::error(s.name.span.clone(), e.to_string()));
    }
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(errors)
    }
}
