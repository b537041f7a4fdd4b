//! Seeded generators for terms and plans that respect the parser's scoping
//! rule: every variable used in a context or body occurs in the trigger.

use masrest::term::{BodyStep, Cond, InternalAction, Literal, Plan, RelOp, Term, Trigger, TriggerKind, TriggerSign};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const ATOMS: &[&str] = &["a", "b", "ping", "count", "x1", "foo_bar", "aB", "nil"];
const VARS: &[&str] = &["X", "Y", "Z", "Agent", "N2", "_Tmp"];
const STRING_CHARS: &[char] = &['a', 'Z', ' ', '"', '\\', '\n', '\t', 'é', '1', '.'];
const RESERVED: &[&str] = &["not", "true"];
const REL_OPS: &[RelOp] = &[RelOp::Lt, RelOp::Le, RelOp::Gt, RelOp::Ge, RelOp::Eq, RelOp::Ne, RelOp::Unify];

pub struct Gen {
    rng: StdRng,
}

impl Gen {
    pub fn new(seed: u64) -> Gen {
        Gen { rng: StdRng::seed_from_u64(seed) }
    }

    pub fn rng(&mut self) -> &mut StdRng {
        &mut self.rng
    }

    fn pick<'a, T>(&mut self, xs: &'a [T]) -> &'a T {
        &xs[self.rng.gen_range(0..xs.len())]
    }

    pub fn atom_name(&mut self) -> String {
        if self.rng.gen_bool(0.7) {
            return self.pick(ATOMS).to_string();
        }
        loop {
            let mut s = String::new();
            s.push(self.rng.gen_range(b'a'..=b'z') as char);
            for _ in 0..self.rng.gen_range(0..6) {
                let c = match self.rng.gen_range(0..4) {
                    0 => self.rng.gen_range(b'A'..=b'Z'),
                    1 => self.rng.gen_range(b'0'..=b'9'),
                    2 => b'_',
                    _ => self.rng.gen_range(b'a'..=b'z'),
                } as char;
                s.push(c);
            }
            if !RESERVED.contains(&s.as_str()) {
                return s;
            }
        }
    }

    pub fn number(&mut self) -> Term {
        let n = self.rng.gen_range(-50i32..=50) as f64;
        if self.rng.gen_bool(0.3) {
            Term::number(n / 4.0 + if n == 0.0 { 0.25 } else { 0.0 })
        } else {
            Term::number(n)
        }
    }

    fn string(&mut self) -> Term {
        let len = self.rng.gen_range(0..6);
        Term::string((0..len).map(|_| *self.pick(STRING_CHARS)).collect::<String>())
    }

    /// A random term of at most `depth` nesting levels over `vars`.
    pub fn term(&mut self, depth: u32, vars: &[String]) -> Term {
        let leaf_only = depth == 0 || self.rng.gen_bool(0.3);
        let choices = if leaf_only { 4 } else { 8 };
        match self.rng.gen_range(0..choices) {
            0 => Term::atom(self.atom_name()),
            1 => self.number(),
            2 => self.string(),
            3 if !vars.is_empty() => Term::var(self.pick(vars).clone()),
            3 => Term::atom(self.atom_name()),
            4 | 5 => self.structure(depth, vars),
            6 => {
                let n = self.rng.gen_range(0..4);
                Term::list((0..n).map(|_| self.term(depth - 1, vars)).collect())
            }
            _ => {
                let op = *self.pick(&["+", "-", "*", "/", "neg"]);
                if op == "neg" {
                    Term::structure("-", vec![self.term(depth - 1, vars)])
                } else {
                    Term::structure(op, vec![self.term(depth - 1, vars), self.term(depth - 1, vars)])
                }
            }
        }
    }

    /// An atom or a compound with an identifier functor.
    pub fn structure(&mut self, depth: u32, vars: &[String]) -> Term {
        let f = self.atom_name();
        if depth == 0 {
            return Term::atom(f);
        }
        let n = self.rng.gen_range(1..4);
        Term::structure(f, (0..n).map(|_| self.term(depth - 1, vars)).collect())
    }

    fn literal_head(&mut self, vars: &[String]) -> Term {
        if self.rng.gen_bool(0.2) {
            Term::atom(self.atom_name())
        } else {
            self.structure(2, vars)
        }
    }

    fn relation(&mut self, vars: &[String]) -> (RelOp, Term, Term) {
        let op = *self.pick(REL_OPS);
        (op, self.term(2, vars), self.term(2, vars))
    }

    pub fn plan(&mut self) -> Plan {
        let pool: Vec<String> = VARS.iter().filter(|_| self.rng.gen_bool(0.5)).map(|v| v.to_string()).collect();
        let pattern = self.structure(3, &pool);
        let vars: Vec<String> = pattern.vars().into_iter().collect();
        let trigger = Trigger {
            sign: if self.rng.gen_bool(0.7) { TriggerSign::Add } else { TriggerSign::Del },
            kind: if self.rng.gen_bool(0.5) { TriggerKind::Goal } else { TriggerKind::Belief },
            pattern,
        };
        let context = (0..self.rng.gen_range(0..4))
            .map(|_| {
                if self.rng.gen_bool(0.6) {
                    Cond::Lit(Literal { negated: self.rng.gen_bool(0.3), term: self.literal_head(&vars) })
                } else {
                    let (op, l, r) = self.relation(&vars);
                    Cond::Rel(op, l, r)
                }
            })
            .collect();
        let body = (0..self.rng.gen_range(0..5)).map(|_| self.step(&vars)).collect();
        Plan { trigger, context, body }
    }

    fn step(&mut self, vars: &[String]) -> BodyStep {
        match self.rng.gen_range(0..6) {
            0 => BodyStep::Subgoal(self.literal_head(vars)),
            1 => BodyStep::AddBelief(self.literal_head(vars)),
            2 => BodyStep::DelBelief(self.literal_head(vars)),
            3 => {
                let action = *self.pick(&InternalAction::ALL);
                let arity = match action {
                    InternalAction::Print => self.rng.gen_range(0..4),
                    InternalAction::Register | InternalAction::Deregister | InternalAction::JoinWorkspace => 1,
                    InternalAction::Focus | InternalAction::CommitMission => 2,
                    _ => 3,
                };
                BodyStep::Internal(action, (0..arity).map(|_| self.term(2, vars)).collect())
            }
            4 => BodyStep::Test(Cond::Lit(Literal { negated: self.rng.gen_bool(0.2), term: self.literal_head(vars) })),
            _ => {
                let (op, l, r) = self.relation(vars);
                BodyStep::Test(Cond::Rel(op, l, r))
            }
        }
    }
}
