//! The `.qm` model language: indexed transition families with arithmetic
//! rate expressions, so multi-site reaction models fit in a few lines.
//!
//! ```text
//! model schlogl2
//! dim 2
//! param beta0 = 1
//! trans for u in sites: delta +e(u) rate beta0 + x(u) * (x(u) - 1)
//! trans for u in sites, v in sites where u != v: delta -e(u) +e(v) rate x(u) * uniform
//! ```
//!
//! Statements are newline separated and `#` starts a comment.  Parsing is
//! deterministic and reports line/column positions with the tokens that
//! would have been accepted; pretty-printing followed by reparsing is the
//! identity on the abstract form.

mod ast;
mod eval;
mod lexer;
mod parser;
mod pretty;

pub use ast::{BinOp, BoolExpr, CmpOp, DeltaTerm, Expr, ModelSpec, Sign, SiteExpr, TransitionFamily};
pub(crate) use eval::{eval_expr, EvalEnv};
pub use eval::instantiate;
pub use lexer::ParseError;
pub use parser::{parse_expression, parse_model};
pub use pretty::pretty_print;
