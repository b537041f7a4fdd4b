use thiserror::Error;

use super::{unify, RelOp, Substitution, Term};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}` in arithmetic expression")]
    Unbound(String),
    #[error("`{0}` is not a number")]
    NotNumeric(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("arithmetic overflow")]
    Overflow,
}

/// Evaluates an arithmetic expression of numbers, bound variables and the
/// operators `+ - * /` (binary) and `-` (unary).
pub fn eval_arith(e: &Term, s: &Substitution) -> Result<f64, EvalError> {
    let value = match s.walk(e) {
        Term::Number(n) => *n,
        Term::Var(v) => return Err(EvalError::Unbound(v.clone())),
        Term::Structure(op, args) if args.len() == 2 && super::ARITH_OPS.contains(&op.as_str()) => {
            let a = eval_arith(&args[0], s)?;
            let b = eval_arith(&args[1], s)?;
            match op.as_str() {
                "+" => a + b,
                "-" => a - b,
                "*" => a * b,
                _ => {
                    if b == 0.0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    a / b
                }
            }
        }
        Term::Structure(op, args) if args.len() == 1 && op == "-" => -eval_arith(&args[0], s)?,
        other => return Err(EvalError::NotNumeric(s.apply(other).to_string())),
    };
    if value.is_finite() {
        Ok(if value == 0.0 { 0.0 } else { value })
    } else {
        Err(EvalError::Overflow)
    }
}

/// Applies `s` and reduces every arithmetic subterm to a number.
pub fn evaluate_term(t: &Term, s: &Substitution) -> Result<Term, EvalError> {
    let t = s.walk(t);
    if t.is_arith() {
        return eval_arith(t, s).map(Term::number);
    }
    Ok(match t {
        Term::Structure(f, args) => Term::Structure(
            f.clone(),
            args.iter().map(|a| evaluate_term(a, s)).collect::<Result<_, _>>()?,
        ),
        Term::List(items) => {
            Term::List(items.iter().map(|a| evaluate_term(a, s)).collect::<Result<_, _>>()?)
        }
        other => other.clone(),
    })
}

/// Evaluates a relational test. `Ok(None)` means the test is false;
/// `=` may extend the substitution.
pub fn test_relation(
    op: RelOp,
    lhs: &Term,
    rhs: &Term,
    s: &Substitution,
) -> Result<Option<Substitution>, EvalError> {
    let holds = match op {
        RelOp::Unify => {
            let l = evaluate_term(lhs, s)?;
            let r = evaluate_term(rhs, s)?;
            return Ok(unify(&l, &r, s));
        }
        RelOp::Eq | RelOp::Ne => {
            let same = match (eval_arith(lhs, s), eval_arith(rhs, s)) {
                (Ok(a), Ok(b)) => a == b,
                _ => evaluate_term(lhs, s)? == evaluate_term(rhs, s)?,
            };
            same == (op == RelOp::Eq)
        }
        _ => {
            let a = eval_arith(lhs, s)?;
            let b = eval_arith(rhs, s)?;
            match op {
                RelOp::Lt => a < b,
                RelOp::Le => a <= b,
                RelOp::Gt => a > b,
                _ => a >= b,
            }
        }
    };
    Ok(holds.then(|| s.clone()))
}
