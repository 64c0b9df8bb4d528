//! Parser, printer and variable-set properties.

mod common;

use common::*;
use ppv::lang::{c1_vars, parse_program, pretty_print, vars_of_real, PrimOp, Program, Registry};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn printed_models_parse_back(body in with_loops()) {
        let p = Program::model(body);
        let printed = pretty_print(&p);
        let back = parse_program(&printed).map_err(|e| TestCaseError::fail(format!("{e}\n{printed}")))?;
        prop_assert_eq!(back, p, "{}", printed);
    }

    #[test]
    fn printed_guides_parse_back(body in loop_free(false)) {
        let p = Program::guide(&["t1", "t2"], body);
        let printed = pretty_print(&p);
        prop_assert_eq!(parse_program(&printed).unwrap(), p);
    }

    #[test]
    fn c1_vars_within_free_vars(e in real_expr(&VARS)) {
        let reg = Registry::standard();
        prop_assert!(c1_vars(&e, reg).is_subset(&vars_of_real(&e)));
    }

    #[test]
    fn dropping_c1_flags_shrinks_c1_vars(e in real_expr(&VARS), op in proptest::sample::select(vec![
        PrimOp::Add, PrimOp::Mul, PrimOp::Exp, PrimOp::Softplus, PrimOp::Tanh, PrimOp::Div, PrimOp::Log, PrimOp::Sigmoid,
    ])) {
        let reg = Registry::standard();
        let weaker = reg.without_c1(op);
        prop_assert!(c1_vars(&e, &weaker).is_subset(&c1_vars(&e, reg)));
    }
}
