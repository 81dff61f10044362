//! The RobustFill string-transformation DSL.

mod ast;
mod eval;

pub use ast::*;
pub use eval::*;
