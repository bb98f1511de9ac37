//! Pattern-based Cypher subset: clause AST, canonical renderer, parser, and
//! the SQL-to-Cypher translator.

pub mod ast;
mod parser;
mod render;
mod translate;

pub use ast::*;
pub use parser::{parse_cypher, CypherParseError};
pub use render::render_cypher;
pub use translate::{
    like_to_regex, translate, translate_traced, ClauseRole, SqlKey, TranslationTrace,
    UntranslatableQuery,
};
