//! The universal AST: types, construction, the JSON codec, validation, the
//! reference interpreter and the random program generator.

pub mod ast;
pub mod build;
pub mod doc;
pub mod gen;
pub mod interp;
pub mod typeck;
pub mod validate;
pub mod value;

pub use ast::*;
pub use doc::{parse_uast, serialize_uast, ParseError};
pub use interp::{interpret, interpret_with, FaultKind, IntDivision, InterpError, Limits, RuntimeFault};
pub use validate::{validate, Severity, Violation};
pub use value::{Comparison, Value};
