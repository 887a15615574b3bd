//! MCL source handling: lexing, parsing, name resolution, annotation lint
//! and pretty printing.

pub mod ast;
pub mod diag;
mod lexer;
pub mod lint;
pub mod parser;
pub mod pretty;
pub mod resolve;

pub use ast::*;
pub use diag::{Diagnostic, Diagnostics, Severity};
pub use parser::{parse, parse_expr};
pub use pretty::print_program;
pub use resolve::{resolve, MethodInfo, Resolved};
