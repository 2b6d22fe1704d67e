mod common;

use common::pilot;
use mfgsim_factory::catalog::violation_catalog;
use mfgsim_factory::*;

#[test]
fn intact_pilot_has_no_findings() {
    let ws = pilot();
    let profile = ws.ontology("mfg_profile").unwrap();
    for mode in [mfgsim_core::TransferMode::Abstract, mfgsim_core::TransferMode::Detailed] {
        let mut cfg = ws.scenarios["base"].clone();
        cfg.mode = mode;
        let m = ws.model(cfg.bound_model().unwrap()).unwrap();
        assert_eq!(audit(m, profile, &ws.sorts, &cfg), vec![]);
    }
}

#[test]
fn every_injected_defect_is_found() {
    let ws = pilot();
    let profile = ws.ontology("mfg_profile").unwrap();
    let cases = violation_catalog(&ws, "base");
    assert_eq!(cases.len(), 10);
    for c in cases {
        let found = audit(&c.model, profile, &ws.sorts, &c.config);
        assert_eq!(found.first(), Some(&c.expected), "{}: {found:?}", c.name);
    }
}
