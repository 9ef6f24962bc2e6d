//! Problem-file frontend: s-expression reader, problem parser, renderers
//! for the problem grammar and SMT-LIB-style output, and the command-line
//! driver.

pub mod cli;
pub mod parse;
pub mod render;
pub mod sexp;
