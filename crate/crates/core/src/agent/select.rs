use std::collections::BTreeSet;

use crate::term::{test_relation, unify, Cond, Literal, Plan, Substitution, Term, TriggerKind, TriggerSign};

/// Outcome of plan selection for one event.
#[derive(Debug, Clone, PartialEq)]
pub enum Selection {
    /// Index into the library and the unifier over plan and event variables.
    Applicable(usize, Substitution),
    /// Some trigger matched but no context held.
    NoApplicable,
    NoRelevant,
}

/// Picks the first plan, in library order, whose trigger unifies with the
/// event and whose context holds against `beliefs`.
///
/// Event variables must not clash with plan variables; callers rename the
/// event apart beforehand.
pub fn select_applicable_plan(
    plans: &[Plan],
    beliefs: &BTreeSet<Term>,
    sign: TriggerSign,
    kind: TriggerKind,
    content: &Term,
) -> Selection {
    let mut relevant = false;
    for (i, plan) in plans.iter().enumerate() {
        if plan.trigger.sign != sign || plan.trigger.kind != kind {
            continue;
        }
        let Some(s) = unify(&plan.trigger.pattern, content, &Substitution::new()) else { continue };
        relevant = true;
        if let Some(s) = solve_context(&plan.context, beliefs, s) {
            return Selection::Applicable(i, s);
        }
    }
    if relevant {
        Selection::NoApplicable
    } else {
        Selection::NoRelevant
    }
}

/// First solution of a conjunction, searching beliefs in set order with
/// backtracking.
pub fn solve_context(conds: &[Cond], beliefs: &BTreeSet<Term>, s: Substitution) -> Option<Substitution> {
    let Some((first, rest)) = conds.split_first() else { return Some(s) };
    match first {
        Cond::Lit(Literal { negated: false, term }) => {
            beliefs.iter().find_map(|b| unify(term, b, &s).and_then(|s2| solve_context(rest, beliefs, s2)))
        }
        Cond::Lit(Literal { negated: true, term }) => {
            if beliefs.iter().any(|b| unify(term, b, &s).is_some()) {
                None
            } else {
                solve_context(rest, beliefs, s)
            }
        }
        Cond::Rel(op, l, r) => match test_relation(*op, l, r, &s) {
            Ok(Some(s2)) => solve_context(rest, beliefs, s2),
            _ => None,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{parse_plan_library, parse_term};

    fn beliefs(src: &[&str]) -> BTreeSet<Term> {
        src.iter().map(|s| parse_term(s).unwrap()).collect()
    }

    #[test]
    fn first_plan_wins() {
        let plans = parse_plan_library("+!ping <- .print(a). +!ping <- .print(b).").unwrap();
        let sel = select_applicable_plan(&plans, &beliefs(&[]), TriggerSign::Add, TriggerKind::Goal, &parse_term("ping").unwrap());
        assert!(matches!(sel, Selection::Applicable(0, _)));
    }

    #[test]
    fn relational_context_binds() {
        let plans = parse_plan_library("+count(N) : N > 3 <- .print(N).").unwrap();
        let e = parse_term("count(5)").unwrap();
        let Selection::Applicable(0, s) = select_applicable_plan(&plans, &beliefs(&[]), TriggerSign::Add, TriggerKind::Belief, &e)
        else {
            panic!("expected a plan")
        };
        assert_eq!(s.apply(&Term::var("N")), Term::number(5.0));
        let e = parse_term("count(2)").unwrap();
        assert_eq!(
            select_applicable_plan(&plans, &beliefs(&[]), TriggerSign::Add, TriggerKind::Belief, &e),
            Selection::NoApplicable
        );
        assert_eq!(
            select_applicable_plan(&plans, &beliefs(&[]), TriggerSign::Del, TriggerKind::Belief, &e),
            Selection::NoRelevant
        );
    }

    #[test]
    fn conjunction_backtracks() {
        let plans = parse_plan_library("+!go : p(X) & q(X) <- .print(X).").unwrap();
        let b = beliefs(&["p(1)", "p(2)", "q(2)"]);
        let Selection::Applicable(_, s) =
            select_applicable_plan(&plans, &b, TriggerSign::Add, TriggerKind::Goal, &Term::atom("go"))
        else {
            panic!("expected a plan")
        };
        assert_eq!(s.apply(&Term::var("X")), Term::number(2.0));
    }

    #[test]
    fn default_negation() {
        let plans = parse_plan_library("+!go : not busy <- .print(free).").unwrap();
        let go = Term::atom("go");
        assert!(matches!(
            select_applicable_plan(&plans, &beliefs(&[]), TriggerSign::Add, TriggerKind::Goal, &go),
            Selection::Applicable(..)
        ));
        assert_eq!(
            select_applicable_plan(&plans, &beliefs(&["busy"]), TriggerSign::Add, TriggerKind::Goal, &go),
            Selection::NoApplicable
        );
    }
}
