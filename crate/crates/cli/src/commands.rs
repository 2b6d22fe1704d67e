use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use mfgsim_core::abstraction::{abstract_model, coordinate_modes, project_view, refine_model};
use mfgsim_core::lattice::build_conceptual_lattice;
use mfgsim_core::{parse_file, print, verify_model, InformationModel, TransferMode, Workspace};
use mfgsim_factory::{
    compare_modes, estimate_transfer_capacity, instantiate_scenario, od_demand, simulate, FactoryError, SimReport, Q,
};
use mfgsim_library::{Kind, Library, LibraryError};

use crate::args::{Cli, Command, LatticeFormat, LibCommand, SimulateArgs};
use crate::Failure;

type Out<'a> = &'a mut dyn Write;
type Res = Result<(), Failure>;

pub(crate) fn dispatch(cli: Cli, out: Out, err: Out) -> Res {
    match cli.command {
        Command::Check { file } => check(&file, err),
        Command::Verify { file, ontology, model } => verify(&file, &ontology, model.as_deref(), out, err),
        Command::Lattice {
            file,
            model,
            out: format,
        } => lattice(&file, model.as_deref(), format, out, err),
        Command::Abstract {
            file,
            map,
            model,
            out: dest,
        } => {
            let ws = load(&file, err)?;
            let m = ws
                .sort_maps
                .get(&map)
                .ok_or_else(|| Failure::diag(format!("no sort map `{map}`")))?;
            let applies = |x: &InformationModel| x.sort_set == m.sort_set;
            rewrite(
                ws.clone(),
                model.as_deref(),
                &applies,
                dest.as_deref(),
                out,
                err,
                |model| {
                    abstract_model(model, m, &ws.sorts)
                        .map(|r| (r.value, r.notes.iter().map(ToString::to_string).collect()))
                },
            )
        }
        Command::Refine {
            file,
            map,
            expansion,
            model,
            out: dest,
        } => {
            let ws = load(&file, err)?;
            let m = ws
                .sort_maps
                .get(&map)
                .ok_or_else(|| Failure::diag(format!("no sort map `{map}`")))?;
            let exp = ws
                .expansions
                .get(&expansion)
                .ok_or_else(|| Failure::diag(format!("no expansion `{expansion}`")))?;
            // An expansion names entities of the model it was written for.
            let applies = |x: &InformationModel| {
                x.sort_set == m.sort_set && exp.entries.keys().all(|e| x.entities.contains_key(e))
            };
            rewrite(
                ws.clone(),
                model.as_deref(),
                &applies,
                dest.as_deref(),
                out,
                err,
                |model| {
                    refine_model(model, m, exp, &ws.sorts)
                        .map(|r| (r.value, r.notes.iter().map(ToString::to_string).collect()))
                },
            )
        }
        Command::View {
            file,
            sortset,
            model,
            out: dest,
        } => {
            let ws = load(&file, err)?;
            rewrite(
                ws.clone(),
                model.as_deref(),
                &|_| true,
                dest.as_deref(),
                out,
                err,
                |model| project_view(model, &sortset, &ws.sorts).map(|v| (v, Vec::new())),
            )
        }
        Command::Coordinate {
            abstract_model,
            detailed_model,
            mapping,
        } => coordinate(&abstract_model, &detailed_model, &mapping, err),
        Command::Estimate { file, scenario } => estimate(&file, &scenario, out, err),
        Command::Simulate(a) => simulate_cmd(a, out, err),
        Command::Compare {
            file,
            scenario,
            seed,
            horizon,
            threshold,
            out: dest,
        } => compare(&file, &scenario, seed, horizon, threshold, dest.as_deref(), out, err),
        Command::Lib { command } => lib(command, out),
    }
}

fn factory(e: FactoryError) -> Failure {
    match e {
        FactoryError::Engine(e) => Failure::internal(e),
        FactoryError::VerificationFailed(ref r) => Failure::diag(format!("{e}\n{}", r.to_text().trim_end())),
        FactoryError::NotWellFormed { ref diagnostics, .. } => {
            let mut m = e.to_string();
            for d in diagnostics {
                let _ = write!(m, "\n{d}");
            }
            Failure::diag(m)
        }
        FactoryError::DeadlockDetected { ref waits, .. } => {
            let mut m = e.to_string();
            for w in waits {
                let _ = write!(
                    m,
                    "\n{} waits for {} held by {}",
                    w.waiter,
                    w.resource,
                    w.holders.join(", ")
                );
            }
            Failure::diag(m)
        }
        other => Failure::diag(other),
    }
}

fn library(e: LibraryError) -> Failure {
    match e {
        LibraryError::Io { .. } => Failure::internal(e),
        other => Failure::diag(other),
    }
}

fn write_file(path: &Path, data: &[u8]) -> Res {
    fs::write(path, data).map_err(|e| Failure::internal(format!("cannot write `{}`: {e}", path.display())))
}

fn emit(dest: Option<&Path>, data: &[u8], out: Out) -> Res {
    match dest {
        Some(p) => write_file(p, data),
        None => Ok(out.write_all(data)?),
    }
}

/// Parses `path`. Diagnostics go to `err`; hard parse failures stop here,
/// well-formedness findings are left to the command.
fn load(path: &Path, err: Out) -> Result<Workspace, Failure> {
    match parse_file(path) {
        Ok(parsed) => {
            for d in &parsed.diagnostics {
                writeln!(err, "{d}")?;
            }
            Ok(parsed.workspace)
        }
        Err(diags) => {
            for d in &diags {
                writeln!(err, "{d}")?;
            }
            Err(Failure::reported())
        }
    }
}

fn select<'a>(ws: &'a Workspace, model: Option<&str>) -> Result<Vec<&'a InformationModel>, Failure> {
    match model {
        Some(name) => ws
            .model(name)
            .map(|m| vec![m])
            .ok_or_else(|| Failure::diag(format!("no model `{name}`"))),
        None => Ok(ws.models.values().collect()),
    }
}

fn check(file: &Path, err: Out) -> Res {
    match parse_file(file) {
        Ok(parsed) => {
            for d in &parsed.diagnostics {
                writeln!(err, "{d}")?;
            }
            if parsed.has_errors() {
                Err(Failure::reported())
            } else {
                Ok(())
            }
        }
        Err(diags) => {
            for d in &diags {
                writeln!(err, "{d}")?;
            }
            Err(Failure::reported())
        }
    }
}

fn verify(file: &Path, ontology: &str, model: Option<&str>, out: Out, err: Out) -> Res {
    let ws = load(file, err)?;
    let onto = ws
        .ontology(ontology)
        .ok_or_else(|| Failure::diag(format!("no ontology `{ontology}`")))?;
    let mut failed = false;
    for m in select(&ws, model)? {
        let report = verify_model(m, onto, &ws.sorts).map_err(Failure::diag)?;
        if report.is_empty() {
            writeln!(out, "{}: ok", m.name)?;
        } else {
            failed = true;
            for v in &report.violations {
                writeln!(err, "{}: {v}", m.name)?;
            }
        }
    }
    if failed {
        Err(Failure::reported())
    } else {
        Ok(())
    }
}

fn lattice(file: &Path, model: Option<&str>, format: LatticeFormat, out: Out, err: Out) -> Res {
    let ws = load(file, err)?;
    for m in select(&ws, model)? {
        let l = build_conceptual_lattice(m, &ws.sorts).map_err(|e| Failure::diag(format!("{}: {e}", m.name)))?;
        match format {
            LatticeFormat::Dot => write!(out, "{}", l.to_dot(&m.name))?,
            LatticeFormat::Text => write!(out, "# {}\n{}", m.name, l.to_text())?,
        }
    }
    Ok(())
}

/// Replaces the selected models with `f(model)` and prints the workspace.
/// Without `--model`, only models passing `applies` are touched.
fn rewrite<E: std::fmt::Display>(
    mut ws: Workspace,
    model: Option<&str>,
    applies: &dyn Fn(&InformationModel) -> bool,
    dest: Option<&Path>,
    out: Out,
    err: Out,
    f: impl Fn(&InformationModel) -> Result<(InformationModel, Vec<String>), E>,
) -> Res {
    let names: Vec<String> = select(&ws, model)?
        .into_iter()
        .filter(|m| model.is_some() || applies(m))
        .map(|m| m.name.clone())
        .collect();
    for name in names {
        let (value, notes) = f(&ws.models[&name]).map_err(|e| Failure::diag(format!("{name}: {e}")))?;
        for n in notes {
            writeln!(err, "note: {name}: {n}")?;
        }
        ws.models.insert(name, value);
    }
    emit(dest, print(&ws).as_bytes(), out)
}

/// `FILE` or `FILE:MODEL`. A path that exists as given wins over the split.
fn operand(spec: &str) -> (PathBuf, Option<String>) {
    if !Path::new(spec).exists() {
        if let Some((file, model)) = spec.rsplit_once(':') {
            if !model.is_empty() && !model.contains(['/', '\\']) {
                return (PathBuf::from(file), Some(model.to_string()));
            }
        }
    }
    (PathBuf::from(spec), None)
}

fn only_model(ws: &Workspace, model: Option<String>, spec: &str) -> Result<InformationModel, Failure> {
    match model {
        Some(name) => ws
            .model(&name)
            .cloned()
            .ok_or_else(|| Failure::diag(format!("no model `{name}` in `{spec}`"))),
        None if ws.models.len() == 1 => Ok(ws.models.values().next().cloned().expect("one model")),
        None => Err(Failure::usage(format!(
            "`{spec}` declares {} models; name one as FILE:MODEL",
            ws.models.len()
        ))),
    }
}

fn coordinate(abs: &str, det: &str, mapping: &str, err: Out) -> Res {
    let (afile, amodel) = operand(abs);
    let (dfile, dmodel) = operand(det);
    let aws = load(&afile, err)?;
    let dws = load(&dfile, err)?;
    let a = only_model(&aws, amodel, abs)?;
    let d = only_model(&dws, dmodel, det)?;
    let map = dws
        .mode_mappings
        .get(mapping)
        .or_else(|| aws.mode_mappings.get(mapping))
        .ok_or_else(|| Failure::diag(format!("no mode mapping `{mapping}`")))?;
    let report = coordinate_modes(&a, &d, map, &dws.sorts);
    write!(err, "{}", report.to_text())?;
    if report.passes() {
        Ok(())
    } else {
        Err(Failure::reported())
    }
}

fn ratio(q: Q) -> String {
    format!("{} ({:.4})", q, *q.numer() as f64 / *q.denom() as f64)
}

fn secs(us: u64) -> String {
    format!("{:.3}", us as f64 / 1e6)
}

fn estimate(file: &Path, scenario: &str, out: Out, err: Out) -> Res {
    let ws = load(file, err)?;
    let plant = instantiate_scenario(&ws, scenario, Some(TransferMode::Abstract)).map_err(factory)?;
    let est = estimate_transfer_capacity(&plant, &od_demand(&plant)).map_err(factory)?;
    let mut rows = vec![[
        "from".to_string(),
        "to".into(),
        "per_hour".into(),
        "busy_s".into(),
        "latency_s".into(),
    ]];
    for p in &est.pairs {
        rows.push([
            p.from.clone(),
            p.to.clone(),
            p.per_hour.to_string(),
            secs(p.busy_us),
            secs(p.latency_us),
        ]);
    }
    let mut width = [0usize; 5];
    for r in &rows {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    writeln!(out, "model {} ({})", est.model, plant.source_model)?;
    for r in &rows {
        let mut line = format!("{:<w$}", r[0], w = width[0]);
        for (c, w) in r.iter().zip(width).skip(1) {
            let _ = write!(line, "  {c:>w$}");
        }
        writeln!(out, "{}", line.trim_end())?;
    }
    writeln!(out, "offered_load {}", ratio(est.offered_load))?;
    writeln!(out, "required_agvs {}", est.required_agvs)?;
    writeln!(out, "utilization_at_required {}", ratio(est.utilization_at_required))?;
    writeln!(out, "declared_fleet {}", est.fleet)?;
    if est.fleet < est.required_agvs {
        writeln!(
            err,
            "warning: declared fleet {} is below the estimate {}",
            est.fleet, est.required_agvs
        )?;
    }
    Ok(())
}

/// `r.csv` becomes `r.seed7.csv`.
fn per_seed(path: &Path, seed: u64) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.seed{seed}.{}", ext.to_string_lossy()),
        None => format!("{stem}.seed{seed}"),
    };
    path.with_file_name(name)
}

fn simulate_cmd(a: SimulateArgs, out: Out, err: Out) -> Res {
    if a.seeds.is_some() && a.report.is_none() {
        return Err(Failure::usage("--seeds needs --report to name the per-seed files"));
    }
    let lib = match (a.record, &a.root) {
        (true, Some(root)) => Some(Library::open(root).map_err(library)?),
        (true, None) => return Err(Failure::usage("--record needs --root or MFGSIM_LIB_ROOT")),
        _ => None,
    };
    let ws = load(&a.file, err)?;
    let plant = instantiate_scenario(&ws, &a.scenario, a.mode.map(Into::into)).map_err(factory)?;
    let horizon = a.horizon.unwrap_or(ws.scenarios[&a.scenario].horizon_us);
    let seeds: Vec<u64> = match a.seeds {
        Some((lo, hi)) => (lo..=hi).collect(),
        None => vec![a.seed.unwrap_or(plant.seed)],
    };
    let results: Vec<(u64, Result<SimReport, FactoryError>)> = if seeds.len() == 1 {
        vec![(seeds[0], simulate(&plant, seeds[0], horizon))]
    } else {
        std::thread::scope(|s| {
            let plant = &plant;
            let handles: Vec<_> = seeds
                .iter()
                .map(|&seed| (seed, s.spawn(move || simulate(plant, seed, horizon))))
                .collect();
            handles
                .into_iter()
                .map(|(seed, h)| (seed, h.join().expect("simulation thread panicked")))
                .collect()
        })
    };
    let fan_out = a.seeds.is_some();
    for (seed, result) in results {
        let report = result.map_err(factory)?;
        let csv = report.to_csv();
        let (report_path, trace_path) = if fan_out {
            (
                a.report.as_deref().map(|p| per_seed(p, seed)),
                a.trace.as_deref().map(|p| per_seed(p, seed)),
            )
        } else {
            (a.report.clone(), a.trace.clone())
        };
        emit(report_path.as_deref(), csv.as_bytes(), out)?;
        if let Some(t) = trace_path {
            write_file(&t, report.trace.to_jsonl().as_bytes())?;
        }
        if let Some(lib) = &lib {
            let name = format!("{}.{}.{}.seed{}", report.model, report.scenario, report.mode, seed);
            lib.store(Kind::Result, &name, csv.as_bytes()).map_err(library)?;
        }
        if !report.conservation_holds() {
            return Err(Failure::internal(format!(
                "seed {seed}: part conservation violated ({} released, {} completed, {} in process)",
                report.released, report.completed, report.wip
            )));
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn compare(
    file: &Path,
    scenario: &str,
    seed: Option<u64>,
    horizon: Option<u64>,
    threshold: f64,
    dest: Option<&Path>,
    out: Out,
    err: Out,
) -> Res {
    if !(threshold.is_finite() && threshold >= 0.0) {
        return Err(Failure::usage(format!(
            "threshold must be a non-negative number, got {threshold}"
        )));
    }
    let ws = load(file, err)?;
    let abs = instantiate_scenario(&ws, scenario, Some(TransferMode::Abstract)).map_err(factory)?;
    let det = instantiate_scenario(&ws, scenario, Some(TransferMode::Detailed)).map_err(factory)?;
    let est = estimate_transfer_capacity(&abs, &od_demand(&abs)).map_err(factory)?;
    let horizon = horizon.unwrap_or(ws.scenarios[scenario].horizon_us);
    let report = simulate(&det, seed.unwrap_or(det.seed), horizon).map_err(factory)?;
    let cmp = compare_modes(&est, &report, threshold).map_err(factory)?;
    write!(out, "{}", cmp.to_table())?;
    if let Some(p) = dest {
        write_file(p, cmp.to_csv().as_bytes())?;
    }
    if cmp.any_flagged() {
        for r in cmp.rows.iter().filter(|r| r.flagged) {
            writeln!(
                err,
                "{}: gap {:.2}% exceeds {:.2}%",
                r.metric,
                r.gap * 100.0,
                threshold * 100.0
            )?;
        }
        return Err(Failure::reported());
    }
    Ok(())
}

fn lib(cmd: LibCommand, out: Out) -> Res {
    match cmd {
        LibCommand::Add { root, kind, name, file } => {
            let payload =
                fs::read(&file).map_err(|e| Failure::diag(format!("cannot read `{}`: {e}", file.display())))?;
            let item = Library::open(&root)
                .map_err(library)?
                .store(kind, &name, &payload)
                .map_err(library)?;
            writeln!(
                out,
                "{} {} v{} {}",
                item.kind, item.name, item.version, item.content_hash
            )?;
        }
        LibCommand::Get {
            root,
            kind,
            name,
            version,
            out: dest,
        } => {
            let item = Library::open(&root)
                .map_err(library)?
                .load(kind, &name, version)
                .map_err(library)?;
            emit(dest.as_deref(), &item.payload, out)?;
        }
        LibCommand::List { root, kind } => {
            for m in Library::open(&root).map_err(library)?.list(kind).map_err(library)? {
                writeln!(out, "{}\t{}\t{}\t{}", m.kind, m.name, m.version, m.content_hash)?;
            }
        }
    }
    Ok(())
}
