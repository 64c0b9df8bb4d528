//! Core language: syntax tree, parser, printer, primitive registry and
//! static checks.

pub mod ast;
pub mod meta;
pub mod parser;
pub mod printer;
pub mod registry;
pub mod validate;

pub use ast::{BoolExpr, Command, DistKind, Distribution, MeasureTag, NameExpr, Program, RealExpr, Role, SupportShape};
pub use meta::{assigned_vars, c1_full, c1_vars, is_guarded_positive, vars_of_bool, vars_of_command, vars_of_dist, vars_of_name, vars_of_real, VarSet};
pub use parser::{parse_command, parse_program, parse_real, parse_source, ParseError, SourceFile};
pub use printer::{fmt_num, pretty_print, print_bool, print_command, print_dist, print_name, print_real};
pub use registry::{EvalError, PrimOp, Registry};
pub use validate::{validate, validate_pair, Issue};
