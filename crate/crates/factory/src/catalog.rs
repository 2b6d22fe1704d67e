//! A catalog of single-defect edits to the pilot models, each paired with
//! the finding [`audit`](crate::audit) must report for it.

use mfgsim_core::{AttributeValue, InformationModel, Number, ScenarioConfig, TransferMode, Unit, Workspace};

use crate::Finding;

pub struct CatalogCase {
    pub name: &'static str,
    pub model: InformationModel,
    pub config: ScenarioConfig,
    pub expected: Finding,
}

fn set_value(m: &mut InformationModel, entity: &str, attr: &str, value: AttributeValue) {
    let e = m.entities.get_mut(entity).expect("pilot entity");
    e.attributes
        .iter_mut()
        .find(|a| a.name == attr)
        .expect("pilot attribute")
        .value = value;
}

fn drop_attr(m: &mut InformationModel, entity: &str, attr: &str) {
    m.entities
        .get_mut(entity)
        .expect("pilot entity")
        .attributes
        .retain(|a| a.name != attr);
}

/// Ten defects injected into the detailed pilot model (one into the abstract
/// one) of `ws`, which must hold the shipped pilot workspace.
pub fn violation_catalog(ws: &Workspace, scenario: &str) -> Vec<CatalogCase> {
    let base = ws.scenarios[scenario].clone();
    let mut detailed_cfg = base.clone();
    detailed_cfg.mode = TransferMode::Detailed;
    let detailed = ws
        .model(detailed_cfg.bound_model().expect("detailed model bound"))
        .expect("model")
        .clone();
    let abstract_model = ws
        .model(base.abstract_model.as_deref().expect("abstract model bound"))
        .expect("model")
        .clone();
    let dname = detailed.name.clone();
    let case = |name, edit: &dyn Fn(&mut InformationModel), expected: Finding| {
        let mut model = detailed.clone();
        edit(&mut model);
        CatalogCase {
            name,
            model,
            config: detailed_cfg.clone(),
            expected,
        }
    };
    let num = |mantissa, scale, unit| AttributeValue::number(Number::new(mantissa, scale).expect("number"), unit);
    vec![
        case(
            "missing required attribute",
            &|m| drop_attr(m, "AGV1", "speed"),
            Finding::new("agv", "AGV1", "speed"),
        ),
        case(
            "wrong attribute sort",
            &|m| {
                let e = m.entities.get_mut("ML1").unwrap();
                e.attributes.iter_mut().find(|a| a.name == "cycle_time").unwrap().sort = "Count".into();
            },
            Finding::new("line", "ML1", "cycle_time"),
        ),
        case(
            "failed commitment rule",
            &|m| set_value(m, "C1", "speed_factor", num(15, 1, Unit::None)),
            Finding::new("curve", "C1", "factor_range"),
        ),
        case(
            "dangling reference",
            &|m| set_value(m, "AGV2", "home", AttributeValue::reference("Nowhere")),
            Finding::new("dangling-ref", "AGV2", "home"),
        ),
        case(
            "functor domain outside the entity",
            &|m| {
                let f = m.entities.get_mut("ML1").unwrap().functor.as_mut().unwrap();
                f.functions[0].domain = vec!["throughput".into()];
            },
            Finding::new("functor-overlap", "ML1", "functor.rate"),
        ),
        CatalogCase {
            name: "transfer mode mismatch",
            expected: Finding::new("mode-mismatch", &abstract_model.name, "detailed"),
            model: abstract_model,
            config: detailed_cfg.clone(),
        },
        case(
            "missing component",
            &|m| {
                m.entities.remove("WH");
            },
            Finding::new("missing-component", &dname, "warehouse"),
        ),
        case(
            "route data without route elements",
            &|m| drop_attr(m, "P_ASM_WH", "nodes"),
            Finding::new("route_data", "P_ASM_WH", "RouteElement"),
        ),
        case(
            "zero warehouse capacity",
            &|m| set_value(m, "WH", "capacity", num(0, 0, Unit::Count)),
            Finding::new("warehouse", "WH", "capacity_positive"),
        ),
        case(
            "route data that is not an edge walk",
            &|m| {
                set_value(
                    m,
                    "P_ASM_WH",
                    "nodes",
                    AttributeValue::List(vec![
                        AttributeValue::reference("D_ASM"),
                        AttributeValue::reference("D_ML1"),
                    ]),
                )
            },
            Finding::new("invalid-parameter", "P_ASM_WH", "nodes"),
        ),
    ]
}
