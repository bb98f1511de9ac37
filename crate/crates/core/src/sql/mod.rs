//! SQL frontend: lexer, parser, canonical renderer, and schema-case
//! normalization for the conjunctive subset.

pub mod ast;
mod lexer;
mod normalize;
mod parser;
mod render;

pub use ast::*;
pub use normalize::{normalize_identifiers, NormalizeError, SchemaBinding};
pub use parser::{parse_sql, ParseError};
pub use render::render_sql;
