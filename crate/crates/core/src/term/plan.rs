use std::collections::BTreeSet;
use std::fmt;

use super::Term;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TriggerSign {
    Add,
    Del,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TriggerKind {
    Belief,
    Goal,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Trigger {
    pub sign: TriggerSign,
    pub kind: TriggerKind,
    pub pattern: Term,
}

/// A context literal. `negated` is default negation: `not p(X)` holds when
/// no belief unifies with `p(X)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Literal {
    pub negated: bool,
    pub term: Term,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RelOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    /// `=`: unify both sides after evaluating arithmetic.
    Unify,
}

impl RelOp {
    pub fn symbol(self) -> &'static str {
        match self {
            RelOp::Lt => "<",
            RelOp::Le => "<=",
            RelOp::Gt => ">",
            RelOp::Ge => ">=",
            RelOp::Eq => "==",
            RelOp::Ne => "\\==",
            RelOp::Unify => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Cond {
    Lit(Literal),
    Rel(RelOp, Term, Term),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InternalAction {
    Send,
    Print,
    Register,
    Deregister,
    JoinWorkspace,
    Focus,
    Act,
    AdoptRole,
    CommitMission,
    GoalAchieved,
}

impl InternalAction {
    pub const ALL: [InternalAction; 10] = [
        InternalAction::Send,
        InternalAction::Print,
        InternalAction::Register,
        InternalAction::Deregister,
        InternalAction::JoinWorkspace,
        InternalAction::Focus,
        InternalAction::Act,
        InternalAction::AdoptRole,
        InternalAction::CommitMission,
        InternalAction::GoalAchieved,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InternalAction::Send => "send",
            InternalAction::Print => "print",
            InternalAction::Register => "register",
            InternalAction::Deregister => "deregister",
            InternalAction::JoinWorkspace => "joinWorkspace",
            InternalAction::Focus => "focus",
            InternalAction::Act => "act",
            InternalAction::AdoptRole => "adoptRole",
            InternalAction::CommitMission => "commitMission",
            InternalAction::GoalAchieved => "goalAchieved",
        }
    }

    pub fn from_name(name: &str) -> Option<InternalAction> {
        Self::ALL.into_iter().find(|a| a.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BodyStep {
    Subgoal(Term),
    AddBelief(Term),
    DelBelief(Term),
    Internal(InternalAction, Vec<Term>),
    Test(Cond),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Plan {
    pub trigger: Trigger,
    /// Conjunction; empty means `true`.
    pub context: Vec<Cond>,
    pub body: Vec<BodyStep>,
}

impl Plan {
    /// Checks that every variable is bound before a step needs its value.
    pub fn check_scoping(&self) -> Result<(), String> {
        let mut bound = self.trigger.pattern.vars();
        for c in &self.context {
            bind_cond(c, &mut bound, "context")?;
        }
        check_body_scoping(&self.body, bound)
    }
}

/// Scoping check for a body run with `bound` variables already in scope.
pub(crate) fn check_body_scoping(body: &[BodyStep], mut bound: BTreeSet<String>) -> Result<(), String> {
    for step in body {
        match step {
            BodyStep::Subgoal(t) | BodyStep::DelBelief(t) => bound.extend(t.vars()),
            BodyStep::AddBelief(t) => require(&bound, t.vars(), step)?,
            BodyStep::Internal(_, args) => {
                for a in args {
                    require(&bound, a.vars(), step)?;
                }
            }
            BodyStep::Test(c) => bind_cond(c, &mut bound, &step.to_string())?,
        }
    }
    Ok(())
}

fn bind_cond(c: &Cond, bound: &mut BTreeSet<String>, place: &str) -> Result<(), String> {
    match c {
        Cond::Lit(Literal { negated: false, term }) => bound.extend(term.vars()),
        Cond::Lit(Literal { negated: true, .. }) => {}
        Cond::Rel(RelOp::Unify, l, r) => {
            bound.extend(l.vars());
            bound.extend(r.vars());
        }
        Cond::Rel(_, l, r) => {
            for v in l.vars().into_iter().chain(r.vars()) {
                if v != "_" && !bound.contains(&v) {
                    return Err(format!("variable `{v}` is unbound in relational test in {place}"));
                }
            }
        }
    }
    Ok(())
}

fn require(bound: &BTreeSet<String>, used: BTreeSet<String>, step: &BodyStep) -> Result<(), String> {
    match used.into_iter().find(|v| v != "_" && !bound.contains(v)) {
        Some(v) => Err(format!("variable `{v}` is not bound before use in `{step}`")),
        None => Ok(()),
    }
}

impl fmt::Display for Trigger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = match self.sign {
            TriggerSign::Add => "+",
            TriggerSign::Del => "-",
        };
        let bang = match self.kind {
            TriggerKind::Goal => "!",
            TriggerKind::Belief => "",
        };
        write!(f, "{sign}{bang}{}", self.pattern)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "not {}", self.term)
        } else {
            write!(f, "{}", self.term)
        }
    }
}

impl fmt::Display for Cond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cond::Lit(l) => write!(f, "{l}"),
            Cond::Rel(op, l, r) => write!(f, "{l} {} {r}", op.symbol()),
        }
    }
}

impl fmt::Display for BodyStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BodyStep::Subgoal(t) => write!(f, "!{t}"),
            BodyStep::AddBelief(t) => write!(f, "+{t}"),
            BodyStep::DelBelief(t) => write!(f, "-{t}"),
            BodyStep::Internal(a, args) if args.is_empty() => write!(f, ".{}", a.name()),
            BodyStep::Internal(a, args) => {
                write!(f, ".{}(", a.name())?;
                for (i, t) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{t}")?;
                }
                f.write_str(")")
            }
            BodyStep::Test(c @ Cond::Lit(_)) => write!(f, "?{c}"),
            // a leading `-` would read back as a belief deletion
            BodyStep::Test(Cond::Rel(op, l, r)) if l.to_string().starts_with('-') => {
                write!(f, "({l}) {} {r}", op.symbol())
            }
            BodyStep::Test(c) => write!(f, "{c}"),
        }
    }
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.trigger)?;
        if !self.context.is_empty() {
            f.write_str(" : ")?;
            for (i, c) in self.context.iter().enumerate() {
                if i > 0 {
                    f.write_str(" & ")?;
                }
                write!(f, "{c}")?;
            }
        }
        if !self.body.is_empty() {
            f.write_str(" <- ")?;
            for (i, s) in self.body.iter().enumerate() {
                if i > 0 {
                    f.write_str("; ")?;
                }
                write!(f, "{s}")?;
            }
        }
        f.write_str(".")
    }
}
