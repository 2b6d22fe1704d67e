use mfgsim_core::testgen::{
    self, check_abstraction, check_lattice, check_roundtrip, check_sort_laws, check_spans, check_view,
};
use proptest::prelude::*;

fn ok(r: Result<(), String>) -> Result<(), TestCaseError> {
    r.map_err(TestCaseError::fail)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]
    #[test]
    fn sort_order_laws(h in testgen::hierarchy()) {
        ok(check_sort_laws(&h))?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]
    #[test]
    fn abstraction_is_sound(case in testgen::abstraction_case(), seed in any::<u64>()) {
        ok(check_abstraction(&case, seed))?;
    }

    #[test]
    fn dsl_round_trip(ws in testgen::workspace()) {
        ok(check_roundtrip(&ws))?;
    }

    #[test]
    fn parse_spans_in_bounds(text in testgen::mutated_text()) {
        ok(check_spans(&text))?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]
    #[test]
    fn view_projection_idempotent((sorts, model) in testgen::view_case()) {
        ok(check_view(&sorts, &model))?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]
    #[test]
    fn lattice_matches_oracle(incidence in testgen::incidence()) {
        ok(check_lattice(&incidence))?;
    }
}
