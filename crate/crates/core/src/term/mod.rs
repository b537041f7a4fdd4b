//! Logic terms, plans and the small agent language built on top of them.
//!
//! Terms are immutable values. The canonical printer ([`fmt::Display`]) and
//! the parser in [`parser`] are inverses of each other: printing a parsed
//! term and parsing it again yields a structurally equal term.

mod eval;
mod parser;
mod plan;
mod unify;

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};

pub use eval::{eval_arith, evaluate_term, test_relation, EvalError};
pub use parser::{parse_body, parse_condition, parse_plan_library, parse_term, ParseError};
pub use plan::{
    BodyStep, Cond, InternalAction, Literal, Plan, RelOp, Trigger, TriggerKind, TriggerSign,
};
pub use unify::{unify, Substitution};

/// A first-order logic term.
#[derive(Debug, Clone)]
pub enum Term {
    Atom(String),
    Number(f64),
    Str(String),
    Var(String),
    Structure(String, Vec<Term>),
    List(Vec<Term>),
}

/// Binary arithmetic functors understood by the evaluator and printed infix.
pub const ARITH_OPS: [&str; 4] = ["+", "-", "*", "/"];

impl Term {
    pub fn atom(name: impl Into<String>) -> Term {
        Term::Atom(name.into())
    }

    /// Numbers are normalised so that `-0.0` and `0.0` are the same term.
    pub fn number(value: f64) -> Term {
        Term::Number(if value == 0.0 { 0.0 } else { value })
    }

    pub fn string(value: impl Into<String>) -> Term {
        Term::Str(value.into())
    }

    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    /// Builds a structure; with no arguments the result is an atom.
    pub fn structure(functor: impl Into<String>, args: Vec<Term>) -> Term {
        let functor = functor.into();
        if args.is_empty() {
            Term::Atom(functor)
        } else {
            Term::Structure(functor, args)
        }
    }

    pub fn list(items: Vec<Term>) -> Term {
        Term::List(items)
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Structure(_, args) | Term::List(args) => args.iter().all(Term::is_ground),
            _ => true,
        }
    }

    /// Collects variable names occurring in the term (the anonymous `_` included).
    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Structure(_, args) | Term::List(args) => {
                for a in args {
                    a.collect_vars(out);
                }
            }
            _ => {}
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn occurs(&self, var: &str) -> bool {
        match self {
            Term::Var(v) => v == var,
            Term::Structure(_, args) | Term::List(args) => args.iter().any(|a| a.occurs(var)),
            _ => false,
        }
    }

    /// Functor name and arity for atoms and structures.
    pub fn functor(&self) -> Option<(&str, usize)> {
        match self {
            Term::Atom(a) => Some((a, 0)),
            Term::Structure(f, args) => Some((f, args.len())),
            _ => None,
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Term::Number(n) => Some(*n),
            _ => None,
        }
    }

    /// Atom name or string content, used for identifiers passed to actions.
    pub fn as_name(&self) -> Option<&str> {
        match self {
            Term::Atom(a) | Term::Str(a) => Some(a),
            _ => None,
        }
    }

    /// Returns true when the term is an arithmetic operator application.
    pub fn is_arith(&self) -> bool {
        match self {
            Term::Structure(f, args) => {
                (args.len() == 2 && ARITH_OPS.contains(&f.as_str()))
                    || (args.len() == 1 && f == "-")
            }
            _ => false,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Term::Number(_) => 0,
            Term::Atom(_) => 1,
            Term::Str(_) => 2,
            Term::Var(_) => 3,
            Term::Structure(..) => 4,
            Term::List(_) => 5,
        }
    }

    /// Operator precedence used by the printer; higher binds tighter.
    fn precedence(&self) -> u8 {
        match self {
            Term::Structure(f, args) if args.len() == 2 && (f == "+" || f == "-") => 1,
            Term::Structure(f, args) if args.len() == 2 && (f == "*" || f == "/") => 2,
            Term::Structure(f, args) if args.len() == 1 && f == "-" => 3,
            _ => 4,
        }
    }
}

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Term {}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Term {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Term::Number(a), Term::Number(b)) => a.total_cmp(b),
            (Term::Atom(a), Term::Atom(b))
            | (Term::Str(a), Term::Str(b))
            | (Term::Var(a), Term::Var(b)) => a.cmp(b),
            (Term::Structure(f, xs), Term::Structure(g, ys)) => xs
                .len()
                .cmp(&ys.len())
                .then_with(|| f.cmp(g))
                .then_with(|| xs.cmp(ys)),
            (Term::List(xs), Term::List(ys)) => xs.cmp(ys),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl Hash for Term {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.rank().hash(state);
        match self {
            Term::Number(n) => {
                let n = if *n == 0.0 { 0.0 } else { *n };
                n.to_bits().hash(state)
            }
            Term::Atom(s) | Term::Str(s) | Term::Var(s) => s.hash(state),
            Term::Structure(f, args) => {
                f.hash(state);
                args.hash(state);
            }
            Term::List(items) => items.hash(state),
        }
    }
}

pub(crate) fn write_quoted(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    f.write_str("\"")?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            '\r' => f.write_str("\\r")?,
            c => write!(f, "{c}")?,
        }
    }
    f.write_str("\"")
}

fn write_args(f: &mut fmt::Formatter<'_>, args: &[Term]) -> fmt::Result {
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{a}")?;
    }
    Ok(())
}

/// Writes `t`, parenthesised when it binds looser than `min_prec`.
fn write_operand(f: &mut fmt::Formatter<'_>, t: &Term, min_prec: u8) -> fmt::Result {
    if t.precedence() < min_prec {
        write!(f, "({t})")
    } else {
        write!(f, "{t}")
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Atom(a) => f.write_str(a),
            Term::Number(n) => write!(f, "{n}"),
            Term::Str(s) => write_quoted(f, s),
            Term::Var(v) => f.write_str(v),
            Term::List(items) => {
                f.write_str("[")?;
                write_args(f, items)?;
                f.write_str("]")
            }
            Term::Structure(op, args) if self.is_arith() && args.len() == 2 => {
                let prec = self.precedence();
                write_operand(f, &args[0], prec)?;
                f.write_str(op)?;
                write_operand(f, &args[1], prec + 1)
            }
            Term::Structure(_, args) if self.is_arith() => {
                // a bare number after `-` would read back as a negative literal
                if matches!(args[0], Term::Number(_)) {
                    write!(f, "-({})", args[0])
                } else {
                    f.write_str("-")?;
                    write_operand(f, &args[0], 3)
                }
            }
            Term::Structure(functor, args) => {
                write!(f, "{functor}(")?;
                write_args(f, args)?;
                f.write_str(")")
            }
        }
    }
}

/// Terms serialize as their canonical printed form.
impl serde::Serialize for Term {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Identifier syntax for atoms and functors.
pub fn is_atom_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Identifier syntax for variables.
pub fn is_var_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_uppercase() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Resource-name syntax shared by agents, workspaces, artifacts and orgs.
pub fn is_resource_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printing_is_canonical() {
        let t = Term::structure(
            "foo",
            vec![
                Term::atom("bar"),
                Term::list(vec![Term::number(1.0), Term::number(2.5)]),
                Term::string("s\"q"),
            ],
        );
        assert_eq!(t.to_string(), r#"foo(bar,[1,2.5],"s\"q")"#);
    }

    #[test]
    fn arithmetic_prints_with_minimal_parens() {
        let t = parse_term("(a+b)*c-d/(e-f)").unwrap();
        assert_eq!(t.to_string(), "(a+b)*c-d/(e-f)");
        let neg = Term::structure("-", vec![Term::number(3.0)]);
        assert_eq!(neg.to_string(), "-(3)");
        assert_eq!(parse_term(&neg.to_string()).unwrap(), neg);
    }

    #[test]
    fn zero_is_normalised() {
        assert_eq!(Term::number(-0.0), Term::number(0.0));
        assert_eq!(Term::number(-0.0).to_string(), "0");
    }

    #[test]
    fn empty_structure_is_atom() {
        assert_eq!(Term::structure("a", vec![]), Term::atom("a"));
    }

    #[test]
    fn name_classes() {
        assert!(is_atom_name("count_2"));
        assert!(!is_atom_name("Count"));
        assert!(is_var_name("_X1"));
        assert!(!is_var_name("x"));
        assert!(is_resource_name("alice_2"));
        assert!(!is_resource_name("aliceB"));
    }
}
