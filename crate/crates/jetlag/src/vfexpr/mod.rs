//! Expression-language front end for user-defined vector fields.
//!
//! Expressions are parsed against declared variable and parameter name
//! lists, so no free identifiers survive construction. Evaluation is generic
//! over a scalar type; evaluating over [`Dual`] numbers yields exact partial
//! derivatives, which is how [`ExprField`] assembles Jacobians column by
//! column.
//!
//! Grammar, tightest first: `^` (right-associative, binds tighter than unary
//! minus), unary `-`, `* /` (left), `+ -` (left). Function calls from the
//! fixed set exp, ln, sqrt, sin, cos, abs, pow. No implicit multiplication.

mod dual;
mod lexer;
mod parser;

pub use dual::Dual;

use crate::field::{FieldError, VectorField};
use nalgebra::DMatrix;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ExprError {
    #[error("lexical error at position {pos}: {msg}")]
    Lex { pos: usize, msg: String },
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}`")]
    UnknownIdentifier { name: String },
    #[error("function `{name}` expects {expected} argument(s), got {got}")]
    Arity {
        name: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("dimension mismatch: {expected} variable(s) but {got} expression(s)")]
    Dimension { expected: usize, got: usize },
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvalError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("non-finite result")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Ln,
    Sqrt,
    Sin,
    Cos,
    Abs,
    Pow,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Abs => "abs",
            Func::Pow => "pow",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Pow => 2,
            _ => 1,
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "abs" => Func::Abs,
            "pow" => Func::Pow,
            _ => return None,
        })
    }
}

/// A bound expression tree. Variable and parameter references carry both the
/// resolved slot index and the declared name (the name is only used for
/// rendering and diagnostics).
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var { index: usize, name: String },
    Param { index: usize, name: String },
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

/// Parses `source` against the declared variable and parameter lists.
pub fn parse(source: &str, variables: &[&str], parameters: &[&str]) -> Result<Expr, ExprError> {
    let tokens = lexer::lex(source)?;
    parser::parse_tokens(&tokens, source.len(), variables, parameters)
}

/// Scalar abstraction shared by real and dual evaluation.
pub trait Scalar:
    Copy
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + std::ops::Neg<Output = Self>
{
    fn constant(v: f64) -> Self;
    fn real(self) -> f64;
    fn exp(self) -> Self;
    fn ln(self) -> Result<Self, EvalError>;
    fn sqrt(self) -> Result<Self, EvalError>;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn abs(self) -> Self;
    fn pow(self, e: Self) -> Result<Self, EvalError>;
}

impl Scalar for f64 {
    fn constant(v: f64) -> Self {
        v
    }
    fn real(self) -> f64 {
        self
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Result<Self, EvalError> {
        if self <= 0.0 {
            return Err(EvalError::Domain(format!("ln of non-positive value {self}")));
        }
        Ok(f64::ln(self))
    }
    fn sqrt(self) -> Result<Self, EvalError> {
        if self < 0.0 {
            return Err(EvalError::Domain(format!("sqrt of negative value {self}")));
        }
        Ok(f64::sqrt(self))
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn pow(self, e: Self) -> Result<Self, EvalError> {
        pow_real(self, e)
    }
}

/// `base^e` with an integer fast path (|e - round(e)| < 1e-12 uses repeated
/// multiplication, valid for any base sign); non-integer exponents require a
/// positive base.
pub(crate) fn pow_real(base: f64, e: f64) -> Result<f64, EvalError> {
    let rounded = e.round();
    if (e - rounded).abs() < 1e-12 && rounded.abs() <= i32::MAX as f64 {
        if base == 0.0 && rounded < 0.0 {
            return Err(EvalError::Domain("0 raised to a negative power".into()));
        }
        Ok(base.powi(rounded as i32))
    } else if base > 0.0 {
        Ok(base.powf(e))
    } else {
        Err(EvalError::Domain(format!(
            "non-integer power of non-positive base {base}"
        )))
    }
}

fn eval_generic<T: Scalar>(expr: &Expr, vars: &[T], params: &[T]) -> Result<T, EvalError> {
    Ok(match expr {
        Expr::Num(v) => T::constant(*v),
        Expr::Var { index, .. } => vars[*index],
        Expr::Param { index, .. } => params[*index],
        Expr::Neg(e) => -eval_generic(e, vars, params)?,
        Expr::Bin(op, a, b) => {
            let a = eval_generic(a, vars, params)?;
            let b = eval_generic(b, vars, params)?;
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => a / b,
                BinOp::Pow => a.pow(b)?,
            }
        }
        Expr::Call(f, args) => {
            let a = eval_generic(&args[0], vars, params)?;
            match f {
                Func::Exp => a.exp(),
                Func::Ln => a.ln()?,
                Func::Sqrt => a.sqrt()?,
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Abs => a.abs(),
                Func::Pow => {
                    let b = eval_generic(&args[1], vars, params)?;
                    a.pow(b)?
                }
            }
        }
    })
}

/// Real evaluation. Non-finite results (overflow, division by zero) are
/// reported as errors at the top level.
pub fn eval(expr: &Expr, vars: &[f64], params: &[f64]) -> Result<f64, EvalError> {
    let v = eval_generic(expr, vars, params)?;
    if !v.is_finite() {
        return Err(EvalError::NonFinite);
    }
    Ok(v)
}

/// Dual-number evaluation seeded on one variable; returns
/// `(value, d expr / d vars[seed])`.
pub fn eval_dual(
    expr: &Expr,
    vars: &[f64],
    params: &[f64],
    seed: usize,
) -> Result<(f64, f64), EvalError> {
    let dvars: Vec<Dual> = vars
        .iter()
        .enumerate()
        .map(|(i, &v)| Dual::new(v, if i == seed { 1.0 } else { 0.0 }))
        .collect();
    let dparams: Vec<Dual> = params.iter().map(|&v| Dual::constant(v)).collect();
    let out = eval_generic(expr, &dvars, &dparams)?;
    if !out.value.is_finite() || !out.deriv.is_finite() {
        return Err(EvalError::NonFinite);
    }
    Ok((out.value, out.deriv))
}

// Rendering precedence levels; higher binds tighter.
fn precedence(expr: &Expr) -> u8 {
    match expr {
        Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
        Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
        Expr::Neg(_) => 3,
        Expr::Bin(BinOp::Pow, ..) => 4,
        Expr::Num(v) if *v < 0.0 => 3,
        _ => 5,
    }
}

impl fmt::Display for Expr {
    /// Canonical rendering: minimal parentheses under the crate's
    /// precedence rules, so `parse(render(e))` is structurally `e`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
            if precedence(e) < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var { name, .. } | Expr::Param { name, .. } => write!(f, "{name}"),
            Expr::Neg(e) => {
                write!(f, "-")?;
                child(f, e, 3)
            }
            Expr::Bin(op, a, b) => {
                let (sym, prec, right_assoc) = match op {
                    BinOp::Add => ("+", 1, false),
                    BinOp::Sub => ("-", 1, false),
                    BinOp::Mul => ("*", 2, false),
                    BinOp::Div => ("/", 2, false),
                    BinOp::Pow => ("^", 4, true),
                };
                if right_assoc {
                    child(f, a, prec + 1)?;
                    write!(f, "{sym}")?;
                    child(f, b, prec)
                } else {
                    child(f, a, prec)?;
                    write!(f, "{sym}")?;
                    child(f, b, prec + 1)
                }
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// A vector field defined by one parsed expression per component, with a
/// frozen parameter binding. The Jacobian is assembled column-by-column via
/// dual-number evaluation.
#[derive(Debug, Clone)]
pub struct ExprField {
    exprs: Vec<Expr>,
    var_names: Vec<String>,
    param_values: Vec<f64>,
}

/// Builds a [`VectorField`] from `n` expressions over `n` variables.
pub fn field_from_exprs(
    exprs: Vec<Expr>,
    variables: &[&str],
    param_values: Vec<f64>,
) -> Result<ExprField, ExprError> {
    if exprs.len() != variables.len() {
        return Err(ExprError::Dimension {
            expected: variables.len(),
            got: exprs.len(),
        });
    }
    Ok(ExprField {
        exprs,
        var_names: variables.iter().map(|s| s.to_string()).collect(),
        param_values,
    })
}

impl ExprField {
    pub fn components(&self) -> &[Expr] {
        &self.exprs
    }
}

impl VectorField for ExprField {
    fn dim(&self) -> usize {
        self.exprs.len()
    }

    fn eval(&self, x: &[f64]) -> Result<Vec<f64>, FieldError> {
        self.check_domain(x)?;
        self.exprs
            .iter()
            .map(|e| eval(e, x, &self.param_values).map_err(|err| FieldError::Eval(err.to_string())))
            .collect()
    }

    fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>, FieldError> {
        self.check_domain(x)?;
        let n = self.dim();
        let mut jac = DMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..n {
                let (_, d) = eval_dual(&self.exprs[i], x, &self.param_values, j)
                    .map_err(|err| FieldError::Eval(err.to_string()))?;
                jac[(i, j)] = d;
            }
        }
        Ok(jac)
    }

    fn coordinate_name(&self, i: usize) -> String {
        self.var_names[i].clone()
    }
}
