use super::*;
use crate::entity::{AttributeValue, DiagCode};

const SMALL: &str = r#"
// transfer fragment
sortset mfg {
  sort StraightTrack < Track;
  sort Track < RouteElement;
  sort RouteElement;
  sort Speed;
  sort AGV;
  sort HomeStation;
}

model m in mfg {
  entity Home : HomeStation { }
  entity AGV1 : AGV kind object {
    attr speed : Speed = 1.5 m/s;
    attr home : HomeStation = ref Home;
    functor derive { fn pos(home) -> Speed; }
    rule speed <= 2.0 m/s;
    rule fast: not speed < 1 m/s and has(home);
  }
}

abstractmap up in mfg { StraightTrack -> RouteElement as elements aggregate; }
scenario s { model m; detailed m; horizon 8h; seed 42; demand ML1 every 120s offset 60s; route ML1 -> Assembly; }
"#;

#[test]
fn empty_input_is_empty_workspace() {
    let p = parse("").unwrap();
    assert_eq!(p.workspace, Workspace::default());
    assert!(p.diagnostics.is_empty());
    assert_eq!(print(&p.workspace), "");
}

#[test]
fn small_workspace_parses() {
    let p = parse(SMALL).unwrap();
    assert!(p.diagnostics.is_empty(), "{:?}", p.diagnostics);
    let ws = &p.workspace;
    let agv = &ws.models["m"].entities["AGV1"];
    assert_eq!(agv.rules[0].id, "r1");
    assert_eq!(agv.rules[1].id, "fast");
    assert_eq!(agv.attributes[1].value, AttributeValue::reference("Home"));
    assert!(ws.sorts.is_subsort("mfg", "StraightTrack", "RouteElement").unwrap());
    let s = &ws.scenarios["s"];
    assert_eq!(s.horizon_us, 8 * 3600 * 1_000_000);
    assert_eq!(s.seed, 42);
    assert_eq!(s.routes[0].to, "Assembly");
}

#[test]
fn print_is_a_fixed_point() {
    let ws = parse(SMALL).unwrap().workspace;
    let text = print(&ws);
    let again = parse(&text).unwrap().workspace;
    assert_eq!(again, ws);
    assert_eq!(print(&again), text);
}

#[test]
fn one_sort_prints_three_lines() {
    let ws = parse("sortset mfg { sort Track; }").unwrap().workspace;
    assert_eq!(print(&ws), "sortset mfg {\n  sort Track;\n}\n");
}

#[test]
fn unclosed_block_reports_at_eof() {
    let text = "entity AGV : { speed = 1.0 m/s";
    let errs = parse(text).unwrap_err();
    assert_eq!(errs.len(), 1);
    let span = &errs[0].span;
    assert_eq!((span.line, span.column), (1, text.len() + 1));
    assert!(span.within(text));
}

#[test]
fn syntax_error_mentions_expectation() {
    let errs = parse("sortset mfg { sort ; }").unwrap_err();
    assert_eq!(errs.len(), 1);
    assert_eq!(
        errs[0].to_string(),
        "<input>:1:20: error: expected sort name, found `;`"
    );
}

#[test]
fn resolution_errors_accumulate() {
    let text = "sortset a { sort X < Y; }\nmodel m in nope { }\nmodel m in a { }\n";
    let errs = parse(text).unwrap_err();
    assert_eq!(errs.len(), 3, "{errs:?}");
    assert!(errs.iter().all(|e| e.span.within(text)));
}

#[test]
fn cycle_rejected() {
    let errs = parse("sortset a { sort X < Y; sort Y < X; }").unwrap_err();
    assert!(errs[0].message.contains("cycle"));
}

#[test]
fn wellformedness_attached() {
    let p = parse("sortset a { sort X; }\nmodel m in a {\n  entity E : X { attr q : X = ref Gone; }\n}\n").unwrap();
    assert_eq!(p.diagnostics.len(), 1);
    assert_eq!(p.diagnostics[0].span.line, 3);
    assert!(p.diagnostics[0].message.contains(DiagCode::DanglingRef.as_str()));
    assert!(p.has_errors());
}

#[test]
fn includes_resolve_relative_once_and_reject_cycles() {
    let dir = std::env::temp_dir().join(format!("mim-inc-{}", std::process::id()));
    std::fs::create_dir_all(dir.join("sub")).unwrap();
    std::fs::write(dir.join("sub/sorts.mim"), "sortset a { sort X; }\n").unwrap();
    std::fs::write(
        dir.join("main.mim"),
        "include \"sub/sorts.mim\";\ninclude \"sub/sorts.mim\";\nmodel m in a { }\n",
    )
    .unwrap();
    let p = parse_file(dir.join("main.mim")).unwrap();
    assert!(p.workspace.models.contains_key("m"));

    std::fs::write(dir.join("x.mim"), "include \"y.mim\";\n").unwrap();
    std::fs::write(dir.join("y.mim"), "include \"x.mim\";\n").unwrap();
    let errs = parse_file(dir.join("x.mim")).unwrap_err();
    assert!(errs[0].message.contains("include cycle"), "{errs:?}");
    assert!(errs[0].span.file.ends_with("y.mim"));

    let errs = parse_file(dir.join("missing.mim")).unwrap_err();
    assert!(errs[0].message.contains("cannot read"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn durations_and_demand_forms() {
    let ws = parse(
        "sortset a { sort X; }\nmodel m in a { }\nscenario s { model m; mode abstract; horizon 90m; demand A batch 10 at 0s; demand B exponential 2m; }",
    )
    .unwrap()
    .workspace;
    let text = print(&ws);
    assert!(text.contains("  horizon 90m;\n"));
    assert!(text.contains("  demand A batch 10 at 0s;\n"));
    assert!(text.contains("  demand B exponential 2m;\n"));
    assert!(text.contains("  mode abstract;\n"));
    assert!(parse("scenario s { model m; horizon 0s; }").is_err());
    assert!(parse("scenario s { model m; horizon 5 d; }").is_err());
}
