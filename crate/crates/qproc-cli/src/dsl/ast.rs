//! Abstract form of a model file: statements first, meaning later.

/// A parsed model file before instantiation.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub name: String,
    pub dimension: usize,
    pub params: Vec<(String, f64)>,
    pub families: Vec<TransitionFamily>,
}

/// One `trans` statement: an optional pair of site variables ranging over
/// all sites, an optional guard, a formal coordinate change, and a rate.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionFamily {
    pub site_vars: Vec<String>,
    pub guard: Option<BoolExpr>,
    pub delta: Vec<DeltaTerm>,
    pub rate: Expr,
}

/// A signed unit-vector term in a delta clause, e.g. `+e(u)` or `-e(0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaTerm(pub Sign, pub SiteExpr);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// A site position: either a bound site variable or a literal index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SiteExpr {
    Var(String),
    Literal(u32),
}

/// Arithmetic over literals, parameters, site variables, coordinates,
/// and the builtins `dim`, `uniform`, and (in certificates) `level`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Param(String),
    Site(String),
    Coord(SiteExpr),
    Dim,
    Uniform,
    Level,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// A guard: comparisons joined by `and` / `or`.
#[derive(Debug, Clone, PartialEq)]
pub enum BoolExpr {
    Cmp(CmpOp, Expr, Expr),
    And(Box<BoolExpr>, Box<BoolExpr>),
    Or(Box<BoolExpr>, Box<BoolExpr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}
