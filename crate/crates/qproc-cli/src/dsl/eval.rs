//! Turns a parsed model into a live transition function.
//!
//! Each call expands every family over all site-variable assignments in a
//! fixed order (family, then first variable, then second), applies the
//! guard, accumulates the formal delta, drops targets that would leave the
//! nonnegative orthant, and evaluates the rate expression.  Arithmetic
//! failures are reported as model-definition errors naming the family and
//! the state, never as silent NaNs.

use qproc_core::{Error, GeneratorModel, Result, StateVec, Transition};

use super::ast::{BinOp, BoolExpr, CmpOp, Expr, ModelSpec, Sign, SiteExpr, TransitionFamily};

/// Evaluation context for one state and one site-variable assignment.
pub(crate) struct EvalEnv<'a> {
    pub state: &'a StateVec,
    pub dimension: usize,
    pub params: &'a [(String, f64)],
    pub site_names: &'a [String],
    pub site_values: [usize; 2],
}

impl<'a> EvalEnv<'a> {
    /// A context with no parameters or site variables in scope, as used by
    /// certificate expressions.
    pub fn bare(state: &'a StateVec, dimension: usize) -> Self {
        EvalEnv {
            state,
            dimension,
            params: &[],
            site_names: &[],
            site_values: [0, 0],
        }
    }

    fn site_value(&self, name: &str) -> std::result::Result<usize, String> {
        self.site_names
            .iter()
            .position(|n| n == name)
            .map(|k| self.site_values[k])
            .ok_or_else(|| format!("unbound site variable '{name}'"))
    }

    fn resolve_site(&self, site: &SiteExpr) -> std::result::Result<usize, String> {
        let k = match site {
            SiteExpr::Var(name) => self.site_value(name)?,
            SiteExpr::Literal(k) => *k as usize,
        };
        if k >= self.dimension {
            return Err(format!(
                "site index {k} out of range for dimension {}",
                self.dimension
            ));
        }
        Ok(k)
    }
}

/// Evaluates an arithmetic expression; errors are bare messages for the
/// caller to wrap with family and state context.
pub(crate) fn eval_expr(expr: &Expr, env: &EvalEnv<'_>) -> std::result::Result<f64, String> {
    Ok(match expr {
        Expr::Number(v) => *v,
        Expr::Param(name) => {
            env.params
                .iter()
                .find(|(p, _)| p == name)
                .ok_or_else(|| format!("unbound parameter '{name}'"))?
                .1
        }
        Expr::Site(name) => env.site_value(name)? as f64,
        Expr::Coord(site) => f64::from(env.state.coord(env.resolve_site(site)?)),
        Expr::Dim => env.dimension as f64,
        Expr::Uniform => {
            if env.dimension < 2 {
                return Err("uniform is undefined for a single site (dim = 1)".into());
            }
            1.0 / (env.dimension as f64 - 1.0)
        }
        Expr::Level => env.state.level() as f64,
        Expr::Neg(inner) => -eval_expr(inner, env)?,
        Expr::Bin(op, lhs, rhs) => {
            let a = eval_expr(lhs, env)?;
            let b = eval_expr(rhs, env)?;
            binary(*op, a, b)?
        }
    })
}

fn binary(op: BinOp, a: f64, b: f64) -> std::result::Result<f64, String> {
    Ok(match op {
        BinOp::Add => a + b,
        BinOp::Sub => a - b,
        BinOp::Mul => a * b,
        BinOp::Div => {
            if b == 0.0 {
                return Err("division by zero".into());
            }
            a / b
        }
        BinOp::Pow => {
            if (b - b.round()).abs() > 1e-9 {
                return Err(format!("exponent {b} is not an integer"));
            }
            let n = b.round();
            if a == 0.0 && n == 0.0 {
                return Err("0 ^ 0 is undefined".into());
            }
            if a == 0.0 && n < 0.0 {
                return Err("division by zero (zero raised to a negative power)".into());
            }
            if n.abs() <= f64::from(i32::MAX) {
                a.powi(n as i32)
            } else {
                a.powf(n)
            }
        }
    })
}

fn eval_guard(guard: &BoolExpr, env: &EvalEnv<'_>) -> std::result::Result<bool, String> {
    Ok(match guard {
        BoolExpr::Cmp(op, lhs, rhs) => {
            let a = eval_expr(lhs, env)?;
            let b = eval_expr(rhs, env)?;
            match op {
                CmpOp::Eq => a == b,
                CmpOp::Ne => a != b,
                CmpOp::Lt => a < b,
                CmpOp::Le => a <= b,
                CmpOp::Gt => a > b,
                CmpOp::Ge => a >= b,
            }
        }
        BoolExpr::And(lhs, rhs) => eval_guard(lhs, env)? && eval_guard(rhs, env)?,
        BoolExpr::Or(lhs, rhs) => eval_guard(lhs, env)? || eval_guard(rhs, env)?,
    })
}

/// Builds a transition function from a parsed model.
pub fn instantiate(spec: &ModelSpec) -> Result<GeneratorModel> {
    for (name, value) in &spec.params {
        if !value.is_finite() {
            return Err(Error::ModelDefinition(format!(
                "parameter '{name}' is not finite"
            )));
        }
    }
    let name = spec.name.clone();
    let dimension = spec.dimension;
    let params = spec.params.clone();
    let spec = spec.clone();
    let rows = move |state: &StateVec| expand(&spec, state);
    Ok(GeneratorModel::new(name, dimension, rows).with_params(params))
}

fn expand(spec: &ModelSpec, state: &StateVec) -> Result<Vec<Transition>> {
    let d = spec.dimension;
    let mut out = Vec::new();
    for (index, family) in spec.families.iter().enumerate() {
        match family.site_vars.len() {
            0 => emit(spec, index, family, state, [0, 0], &mut out)?,
            1 => {
                for u in 0..d {
                    emit(spec, index, family, state, [u, 0], &mut out)?;
                }
            }
            _ => {
                for u in 0..d {
                    for v in 0..d {
                        emit(spec, index, family, state, [u, v], &mut out)?;
                    }
                }
            }
        }
    }
    Ok(out)
}

fn emit(
    spec: &ModelSpec,
    index: usize,
    family: &TransitionFamily,
    state: &StateVec,
    site_values: [usize; 2],
    out: &mut Vec<Transition>,
) -> Result<()> {
    let env = EvalEnv {
        state,
        dimension: spec.dimension,
        params: &spec.params,
        site_names: &family.site_vars,
        site_values,
    };
    let wrap = |message: String| {
        Error::ModelDefinition(format!(
            "transition family {index} at state {state}: {message}"
        ))
    };
    if let Some(guard) = &family.guard {
        if !eval_guard(guard, &env).map_err(wrap)? {
            return Ok(());
        }
    }
    let mut net = vec![0i64; spec.dimension];
    for term in &family.delta {
        let site = env.resolve_site(&term.1).map_err(wrap)?;
        net[site] += match term.0 {
            Sign::Plus => 1,
            Sign::Minus => -1,
        };
    }
    if net.iter().all(|&c| c == 0) {
        return Err(wrap("the delta clause cancels to the zero vector".into()));
    }
    let mut coords = Vec::with_capacity(spec.dimension);
    for (site, &change) in net.iter().enumerate() {
        let next = i64::from(state.coord(site)) + change;
        if next < 0 {
            return Ok(());
        }
        let next = u32::try_from(next).map_err(|_| {
            Error::Resource(format!(
                "coordinate overflow at state {state} in transition family {index}"
            ))
        })?;
        coords.push(next);
    }
    let rate = eval_expr(&family.rate, &env).map_err(wrap)?;
    if rate < 0.0 {
        return Err(Error::ModelDefinition(format!(
            "negative rate {rate} at state {state} in transition family {index}"
        )));
    }
    if rate == 0.0 {
        return Ok(());
    }
    out.push(Transition::new(StateVec::new(&coords), rate));
    Ok(())
}
