use std::collections::BTreeMap;
use std::fmt;

use super::Term;

/// Variable bindings in triangular form: a bound term may mention other
/// bound variables, and [`Substitution::apply`] resolves chains to a
/// fixpoint. Bindings never create a cycle (the occurs check rejects them).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Substitution {
    bindings: BTreeMap<String, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn get(&self, var: &str) -> Option<&Term> {
        self.bindings.get(var)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Term)> {
        self.bindings.iter()
    }

    /// Adds a binding after an occurs check against the resolved term.
    /// Returns false (and leaves `self` untouched) when binding would
    /// create a cyclic term.
    pub fn bind(&mut self, var: &str, term: Term) -> bool {
        if var == "_" {
            return true;
        }
        if self.apply(&term).occurs(var) {
            return false;
        }
        self.bindings.insert(var.to_string(), term);
        true
    }

    /// Follows variable-to-variable bindings until an unbound variable or a
    /// non-variable term is reached.
    pub fn walk<'a>(&'a self, mut t: &'a Term) -> &'a Term {
        while let Term::Var(v) = t {
            match self.bindings.get(v) {
                Some(next) => t = next,
                None => break,
            }
        }
        t
    }

    /// Replaces every bound variable, recursively, until no bound variable remains.
    pub fn apply(&self, t: &Term) -> Term {
        match self.walk(t) {
            Term::Structure(f, args) => {
                Term::Structure(f.clone(), args.iter().map(|a| self.apply(a)).collect())
            }
            Term::List(items) => Term::List(items.iter().map(|a| self.apply(a)).collect()),
            other => other.clone(),
        }
    }

    /// Fully resolved copy: every binding's value is itself applied.
    pub fn resolved(&self) -> Substitution {
        Substitution {
            bindings: self.bindings.keys().map(|k| (k.clone(), self.apply(&Term::Var(k.clone())))).collect(),
        }
    }
}

impl FromIterator<(String, Term)> for Substitution {
    fn from_iter<I: IntoIterator<Item = (String, Term)>>(iter: I) -> Self {
        let mut s = Substitution::new();
        for (k, v) in iter {
            s.bindings.insert(k, v);
        }
        s
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.bindings.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}: {v}")?;
        }
        f.write_str("}")
    }
}

/// Most general unifier of `a` and `b` extending `s`, with occurs check.
/// The anonymous variable `_` unifies with anything and never binds.
pub fn unify(a: &Term, b: &Term, s: &Substitution) -> Option<Substitution> {
    let mut sub = s.clone();
    let mut stack: Vec<(Term, Term)> = vec![(a.clone(), b.clone())];
    while let Some((x, y)) = stack.pop() {
        let x = sub.walk(&x).clone();
        let y = sub.walk(&y).clone();
        match (&x, &y) {
            (Term::Var(v), Term::Var(w)) if v == w => {}
            (Term::Var(v), _) if v == "_" => {}
            (_, Term::Var(w)) if w == "_" => {}
            (Term::Var(v), other) | (other, Term::Var(v)) => {
                if !sub.bind(v, other.clone()) {
                    return None;
                }
            }
            (Term::Structure(f, xs), Term::Structure(g, ys)) => {
                if f != g || xs.len() != ys.len() {
                    return None;
                }
                stack.extend(xs.iter().cloned().zip(ys.iter().cloned()));
            }
            (Term::List(xs), Term::List(ys)) => {
                if xs.len() != ys.len() {
                    return None;
                }
                stack.extend(xs.iter().cloned().zip(ys.iter().cloned()));
            }
            _ => {
                if x != y {
                    return None;
                }
            }
        }
    }
    Some(sub)
}
