//! Closed-form scalar expressions over chart coordinates `(x, y, z)`.
//!
//! Parsing is delegated to `meval`; evaluation goes through a thread-safe
//! context so compiled expressions can be shared across workers.

use std::fmt;
use std::str::FromStr;

use meval::{ContextProvider, FuncEvalError};

use crate::error::{Error, Result};

#[derive(Clone)]
pub struct Expression {
    source: String,
    expr: meval::Expr,
}

impl fmt::Debug for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Expression").field(&self.source).finish()
    }
}

impl PartialEq for Expression {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source
    }
}

impl Expression {
    pub fn parse(source: &str) -> Result<Self> {
        let expr = meval::Expr::from_str(source).map_err(|e| Error::Expression {
            src: source.to_string(),
            msg: e.to_string(),
        })?;
        let parsed = Self { source: source.to_string(), expr };
        // Surface unknown variables and functions at load time.
        parsed.try_eval(0.37, 0.61, 0.23)?;
        Ok(parsed)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn try_eval(&self, x: f64, y: f64, z: f64) -> Result<f64> {
        self.expr
            .eval_with_context(Vars { x, y, z })
            .map_err(|e| Error::Expression { src: self.source.clone(), msg: e.to_string() })
    }

    /// Evaluates, returning NaN if evaluation fails (parse-time checks make
    /// that unreachable for validated expressions).
    pub fn eval(&self, x: f64, y: f64, z: f64) -> f64 {
        self.try_eval(x, y, z).unwrap_or(f64::NAN)
    }
}

/// Quintic smoothstep `6t⁵ − 15t⁴ + 10t³` on `t` clamped to `[0, 1]`.
/// C² with vanishing first and second derivatives at both ends.
pub fn smoothstep5(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (t * (6.0 * t - 15.0) + 10.0)
}

struct Vars {
    x: f64,
    y: f64,
    z: f64,
}

fn unary(args: &[f64], f: impl Fn(f64) -> f64) -> std::result::Result<f64, FuncEvalError> {
    match args.len() {
        1 => Ok(f(args[0])),
        0 => Err(FuncEvalError::TooFewArguments),
        _ => Err(FuncEvalError::TooManyArguments),
    }
}

impl ContextProvider for Vars {
    fn get_var(&self, name: &str) -> Option<f64> {
        match name {
            "x" => Some(self.x),
            "y" => Some(self.y),
            "z" => Some(self.z),
            "pi" => Some(std::f64::consts::PI),
            "e" => Some(std::f64::consts::E),
            _ => None,
        }
    }

    fn eval_func(&self, name: &str, args: &[f64]) -> std::result::Result<f64, FuncEvalError> {
        match name {
            "sqrt" => unary(args, f64::sqrt),
            "exp" => unary(args, f64::exp),
            "ln" => unary(args, f64::ln),
            "log2" => unary(args, f64::log2),
            "abs" => unary(args, f64::abs),
            "sin" => unary(args, f64::sin),
            "cos" => unary(args, f64::cos),
            "tan" => unary(args, f64::tan),
            "tanh" => unary(args, f64::tanh),
            "smoothstep" => unary(args, smoothstep5),
            "min" | "max" => {
                if args.is_empty() {
                    return Err(FuncEvalError::TooFewArguments);
                }
                let init = args[0];
                Ok(args[1..].iter().fold(init, |acc, &v| {
                    if name == "min" {
                        acc.min(v)
                    } else {
                        acc.max(v)
                    }
                }))
            }
            "clamp" => match args.len() {
                3 => Ok(args[0].clamp(args[1], args[2])),
                n if n < 3 => Err(FuncEvalError::TooFewArguments),
                _ => Err(FuncEvalError::TooManyArguments),
            },
            _ => Err(FuncEvalError::UnknownFunction),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_powers_and_functions() {
        let e = Expression::parse("2^(2*x) + ln(y) - smoothstep(z)").unwrap();
        let v = e.eval(0.5, 1.0, 1.0);
        assert!((v - (2.0 - 0.0 - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn rejects_unknown_variable() {
        assert!(Expression::parse("x + w").is_err());
        assert!(Expression::parse("foo(x)").is_err());
    }

    #[test]
    fn smoothstep_endpoints() {
        assert_eq!(smoothstep5(0.0), 0.0);
        assert_eq!(smoothstep5(1.0), 1.0);
        assert_eq!(smoothstep5(-3.0), 0.0);
        assert!((smoothstep5(0.5) - 0.5).abs() < 1e-15);
    }
}
