//! Recursive-descent parser for model files and standalone expressions.
//!
//! Identifier resolution happens here: parameters must be declared before
//! use, site variables only exist inside their family, literal site indices
//! must fit the declared dimension, and everything else is rejected with
//! the position and the token set that would have been accepted.

use super::ast::{
    BinOp, BoolExpr, CmpOp, DeltaTerm, Expr, ModelSpec, Sign, SiteExpr, TransitionFamily,
};
use super::lexer::{tokenize, ParseError, Spanned, Tok};

const MAX_DIMENSION: usize = 4096;

fn reserved(name: &str) -> bool {
    matches!(
        name,
        "model"
            | "dim"
            | "param"
            | "trans"
            | "for"
            | "in"
            | "sites"
            | "where"
            | "delta"
            | "rate"
            | "and"
            | "or"
            | "x"
            | "e"
            | "uniform"
            | "level"
    )
}

/// Parses a complete `.qm` model file.
pub fn parse_model(text: &str) -> Result<ModelSpec, ParseError> {
    let mut p = Parser::new(tokenize(text)?, true);
    p.model_file()
}

/// Parses a single arithmetic expression, as used by certificate files.
///
/// Site variables and parameters are not in scope; coordinates are written
/// `x(INDEX)` with the index checked against the model on application, and
/// `level` is available when `allow_level` is set.
pub fn parse_expression(text: &str, allow_level: bool) -> Result<Expr, ParseError> {
    let mut p = Parser::new(tokenize(text)?, allow_level);
    let expr = p.expr()?;
    p.expect(&Tok::Newline, "end of input")?;
    if !matches!(p.peek().tok, Tok::End) {
        let s = p.peek();
        return Err(
            ParseError::new(s.line, s.col, format!("unexpected {}", s.tok.describe()))
                .expecting(vec!["end of input"]),
        );
    }
    Ok(expr)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    params: Vec<(String, f64)>,
    site_vars: Vec<String>,
    dimension: Option<usize>,
    allow_level: bool,
}

impl Parser {
    fn new(toks: Vec<Spanned>, allow_level: bool) -> Self {
        Parser {
            toks,
            pos: 0,
            params: Vec::new(),
            site_vars: Vec::new(),
            dimension: None,
            allow_level,
        }
    }

    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Spanned {
        let s = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        s
    }

    fn unexpected(&self, expected: Vec<&'static str>) -> ParseError {
        let s = self.peek();
        ParseError::new(s.line, s.col, format!("unexpected {}", s.tok.describe()))
            .expecting(expected)
    }

    fn expect(&mut self, want: &Tok, what: &'static str) -> Result<Spanned, ParseError> {
        if &self.peek().tok == want {
            Ok(self.bump())
        } else {
            Err(self.unexpected(vec![what]))
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.at_keyword(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str, what: &'static str) -> Result<(), ParseError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.unexpected(vec![what]))
        }
    }

    fn ident_at(&mut self, what: &'static str) -> Result<(String, u32, u32), ParseError> {
        let s = self.peek().clone();
        if let Tok::Ident(name) = s.tok {
            self.bump();
            Ok((name, s.line, s.col))
        } else {
            Err(self.unexpected(vec![what]))
        }
    }

    fn number(&mut self, what: &'static str) -> Result<(f64, u32, u32), ParseError> {
        let s = self.peek().clone();
        if let Tok::Number(v) = s.tok {
            self.bump();
            Ok((v, s.line, s.col))
        } else {
            Err(self.unexpected(vec![what]))
        }
    }

    fn end_of_line(&mut self) -> Result<(), ParseError> {
        self.expect(&Tok::Newline, "end of line")?;
        Ok(())
    }

    fn model_file(&mut self) -> Result<ModelSpec, ParseError> {
        self.expect_keyword("model", "'model'")?;
        let (name, _, _) = self.ident_at("model name")?;
        self.end_of_line()?;

        self.expect_keyword("dim", "'dim'")?;
        let (value, line, col) = self.number("dimension")?;
        if value.fract() != 0.0 || value < 1.0 {
            return Err(ParseError::new(
                line,
                col,
                format!("dimension must be a positive integer, got {value}"),
            ));
        }
        if value > MAX_DIMENSION as f64 {
            return Err(ParseError::new(
                line,
                col,
                format!("dimension {value} exceeds the limit of {MAX_DIMENSION}"),
            ));
        }
        self.dimension = Some(value as usize);
        self.end_of_line()?;

        while self.at_keyword("param") {
            self.param_statement()?;
        }
        let mut families = Vec::new();
        while self.at_keyword("trans") {
            families.push(self.family()?);
        }
        if !matches!(self.peek().tok, Tok::End) {
            let expected = if families.is_empty() {
                vec!["'param'", "'trans'", "end of input"]
            } else {
                vec!["'trans'", "end of input"]
            };
            return Err(self.unexpected(expected));
        }
        Ok(ModelSpec {
            name,
            dimension: self.dimension.unwrap(),
            params: self.params.clone(),
            families,
        })
    }

    fn param_statement(&mut self) -> Result<(), ParseError> {
        self.bump();
        let (name, line, col) = self.ident_at("parameter name")?;
        if reserved(&name) {
            return Err(ParseError::new(
                line,
                col,
                format!("'{name}' is reserved and cannot name a parameter"),
            ));
        }
        if self.params.iter().any(|(p, _)| p == &name) {
            return Err(ParseError::new(
                line,
                col,
                format!("duplicate parameter '{name}'"),
            ));
        }
        self.expect(&Tok::Assign, "'='")?;
        let (value, _, _) = self.number("parameter value")?;
        self.end_of_line()?;
        self.params.push((name, value));
        Ok(())
    }

    fn site_variable(&mut self) -> Result<String, ParseError> {
        let (name, line, col) = self.ident_at("site variable")?;
        if reserved(&name) {
            return Err(ParseError::new(
                line,
                col,
                format!("'{name}' is reserved and cannot name a site variable"),
            ));
        }
        if self.params.iter().any(|(p, _)| p == &name) {
            return Err(ParseError::new(
                line,
                col,
                format!("'{name}' already names a parameter"),
            ));
        }
        if self.site_vars.contains(&name) {
            return Err(ParseError::new(
                line,
                col,
                format!("duplicate site variable '{name}'"),
            ));
        }
        self.expect_keyword("in", "'in'")?;
        self.expect_keyword("sites", "'sites'")?;
        Ok(name)
    }

    fn family(&mut self) -> Result<TransitionFamily, ParseError> {
        self.bump();
        self.site_vars.clear();
        if self.eat_keyword("for") {
            let first = self.site_variable()?;
            self.site_vars.push(first);
            if matches!(self.peek().tok, Tok::Comma) {
                self.bump();
                let second = self.site_variable()?;
                self.site_vars.push(second);
            }
        }
        let guard = if self.eat_keyword("where") {
            Some(self.bool_expr()?)
        } else {
            None
        };
        self.expect(&Tok::Colon, "':'")?;
        if !self.at_keyword("delta") {
            let s = self.peek();
            return Err(ParseError::new(s.line, s.col, "missing delta clause")
                .expecting(vec!["'delta'"]));
        }
        self.bump();
        let mut delta = vec![self.delta_term()?];
        while matches!(self.peek().tok, Tok::Plus | Tok::Minus) {
            delta.push(self.delta_term()?);
        }
        self.expect_keyword("rate", "'rate'")?;
        let rate = self.expr()?;
        self.end_of_line()?;
        Ok(TransitionFamily {
            site_vars: core::mem::take(&mut self.site_vars),
            guard,
            delta,
            rate,
        })
    }

    fn delta_term(&mut self) -> Result<DeltaTerm, ParseError> {
        let sign = match self.peek().tok {
            Tok::Plus => Sign::Plus,
            Tok::Minus => Sign::Minus,
            _ => return Err(self.unexpected(vec!["'+'", "'-'"])),
        };
        self.bump();
        self.expect_keyword("e", "'e'")?;
        self.expect(&Tok::LParen, "'('")?;
        let site = self.site_expr()?;
        self.expect(&Tok::RParen, "')'")?;
        Ok(DeltaTerm(sign, site))
    }

    fn site_expr(&mut self) -> Result<SiteExpr, ParseError> {
        let s = self.peek().clone();
        match s.tok {
            Tok::Ident(name) => {
                if self.site_vars.contains(&name) {
                    self.bump();
                    Ok(SiteExpr::Var(name))
                } else {
                    Err(ParseError::new(
                        s.line,
                        s.col,
                        format!("unknown site variable '{name}'"),
                    )
                    .expecting(vec!["site variable", "site index"]))
                }
            }
            Tok::Number(v) => {
                if v.fract() != 0.0 || v < 0.0 {
                    return Err(ParseError::new(
                        s.line,
                        s.col,
                        format!("site index must be a non-negative integer, got {v}"),
                    ));
                }
                if let Some(d) = self.dimension {
                    if v >= d as f64 {
                        return Err(ParseError::new(
                            s.line,
                            s.col,
                            format!("site index {v} out of range for dimension {d}"),
                        ));
                    }
                }
                self.bump();
                Ok(SiteExpr::Literal(v as u32))
            }
            _ => Err(self.unexpected(vec!["site variable", "site index"])),
        }
    }

    fn bool_expr(&mut self) -> Result<BoolExpr, ParseError> {
        let mut lhs = self.and_expr()?;
        while self.eat_keyword("or") {
            let rhs = self.and_expr()?;
            lhs = BoolExpr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<BoolExpr, ParseError> {
        let mut lhs = self.comparison()?;
        while self.eat_keyword("and") {
            let rhs = self.comparison()?;
            lhs = BoolExpr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn comparison(&mut self) -> Result<BoolExpr, ParseError> {
        let lhs = self.expr()?;
        let op = match self.peek().tok {
            Tok::EqEq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            _ => {
                return Err(self.unexpected(vec![
                    "'=='", "'!='", "'<'", "'<='", "'>'", "'>='",
                ]))
            }
        };
        self.bump();
        let rhs = self.expr()?;
        Ok(BoolExpr::Cmp(op, lhs, rhs))
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if matches!(self.peek().tok, Tok::Minus) {
            self.bump();
            let inner = self.unary()?;
            Ok(Expr::Neg(Box::new(inner)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if matches!(self.peek().tok, Tok::Caret) {
            self.bump();
            let exponent = self.unary()?;
            Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let s = self.peek().clone();
        match s.tok {
            Tok::Number(v) => {
                self.bump();
                Ok(Expr::Number(v))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(&Tok::RParen, "')'")?;
                Ok(inner)
            }
            Tok::Ident(name) => match name.as_str() {
                "x" => {
                    self.bump();
                    self.expect(&Tok::LParen, "'('")?;
                    let site = self.site_expr()?;
                    self.expect(&Tok::RParen, "')'")?;
                    Ok(Expr::Coord(site))
                }
                "dim" => {
                    self.bump();
                    Ok(Expr::Dim)
                }
                "uniform" => {
                    self.bump();
                    Ok(Expr::Uniform)
                }
                "level" if self.allow_level => {
                    self.bump();
                    Ok(Expr::Level)
                }
                _ => {
                    if self.site_vars.contains(&name) {
                        self.bump();
                        Ok(Expr::Site(name))
                    } else if self.params.iter().any(|(p, _)| p == &name) {
                        self.bump();
                        Ok(Expr::Param(name))
                    } else {
                        Err(ParseError::new(
                            s.line,
                            s.col,
                            format!("unknown identifier '{name}'"),
                        ))
                    }
                }
            },
            _ => Err(self.unexpected(vec!["number", "'('", "'x('", "identifier"])),
        }
    }
}
