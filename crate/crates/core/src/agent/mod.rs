//! BDI agents: beliefs, a plan library, events and intentions, advanced by
//! a four-phase reasoning cycle.
//!
//! Everything that reaches an agent from outside (messages, commands,
//! percepts, organisational notes, plan replacements) is queued in its
//! [`AgentInbox`] and only read at the start of a cycle, so each cycle sees
//! a stable plan library and belief base.

pub mod select;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub use select::{select_applicable_plan, solve_context, Selection};

use crate::error::{MasError, Result};
use crate::term::{
    evaluate_term, test_relation, unify, BodyStep, Cond, InternalAction, Literal, Plan, Substitution, Term,
    TriggerKind, TriggerSign,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Performative {
    Tell,
    Untell,
    Achieve,
    Signal,
}

impl Performative {
    pub fn name(self) -> &'static str {
        match self {
            Performative::Tell => "tell",
            Performative::Untell => "untell",
            Performative::Achieve => "achieve",
            Performative::Signal => "signal",
        }
    }
}

impl FromStr for Performative {
    type Err = MasError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tell" => Ok(Performative::Tell),
            "untell" => Ok(Performative::Untell),
            "achieve" => Ok(Performative::Achieve),
            "signal" => Ok(Performative::Signal),
            other => Err(MasError::UnsupportedPerformative(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MessageStatus {
    Queued,
    Delivered,
    Processed,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandStatus {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MessageRecord {
    pub id: u64,
    pub sender: String,
    pub performative: Performative,
    pub content: Term,
    pub status: MessageStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
}

impl MessageRecord {
    pub fn is_terminal(&self) -> bool {
        matches!(self.status, MessageStatus::Processed | MessageStatus::Failed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommandRecord {
    pub id: u64,
    pub body: String,
    #[serde(skip)]
    pub steps: Vec<BodyStep>,
    pub status: CommandStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
}

impl CommandRecord {
    pub fn is_terminal(&self) -> bool {
        matches!(self.status, CommandStatus::Done | CommandStatus::Failed)
    }
}

/// Where an event or intention came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Internal,
    Message(u64),
    Percept,
    Command(u64),
    Organisation,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Internal => f.write_str("internal"),
            Origin::Message(id) => write!(f, "message:{id}"),
            Origin::Percept => f.write_str("percept"),
            Origin::Command(id) => write!(f, "command:{id}"),
            Origin::Organisation => f.write_str("organisation"),
        }
    }
}

impl Serialize for Origin {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// A belief change pushed by the environment or the organisation.
#[derive(Debug, Clone, PartialEq)]
pub struct Note {
    pub add: bool,
    pub literal: Term,
    pub origin: Origin,
}

#[derive(Debug, Clone)]
struct PlanSwap {
    plans: Vec<Plan>,
    source: String,
}

/// Input queues and status records of one agent. Guarded by its own mutex
/// so that posting and polling never wait for a running cycle.
#[derive(Debug, Default)]
pub struct AgentInbox {
    next_message: u64,
    next_command: u64,
    messages: BTreeMap<u64, MessageRecord>,
    commands: BTreeMap<u64, CommandRecord>,
    mailbox: VecDeque<u64>,
    command_queue: VecDeque<u64>,
    notes: VecDeque<Note>,
    plan_swap: Option<PlanSwap>,
}

impl AgentInbox {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn post_message(&mut self, sender: &str, performative: Performative, content: Term) -> u64 {
        self.next_message += 1;
        let id = self.next_message;
        let now = Utc::now();
        self.messages.insert(
            id,
            MessageRecord {
                id,
                sender: sender.to_string(),
                performative,
                content,
                status: MessageStatus::Queued,
                reason: None,
                created_at: now,
                updated_at: now,
            },
        );
        self.mailbox.push_back(id);
        id
    }

    pub fn post_command(&mut self, source: &str, steps: Vec<BodyStep>) -> u64 {
        self.next_command += 1;
        let id = self.next_command;
        let now = Utc::now();
        self.commands.insert(
            id,
            CommandRecord {
                id,
                body: source.to_string(),
                steps,
                status: CommandStatus::Queued,
                reason: None,
                created_at: now,
                updated_at: now,
            },
        );
        self.command_queue.push_back(id);
        id
    }

    pub fn post_note(&mut self, note: Note) {
        self.notes.push_back(note);
    }

    /// Stages a plan library to be installed at the next cycle boundary.
    pub fn stage_plans(&mut self, plans: Vec<Plan>, source: &str) {
        self.plan_swap = Some(PlanSwap { plans, source: source.to_string() });
    }

    pub fn message(&self, id: u64) -> Option<&MessageRecord> {
        self.messages.get(&id)
    }

    pub fn command(&self, id: u64) -> Option<&CommandRecord> {
        self.commands.get(&id)
    }

    pub fn messages(&self) -> impl Iterator<Item = &MessageRecord> {
        self.messages.values()
    }

    pub fn commands(&self) -> impl Iterator<Item = &CommandRecord> {
        self.commands.values()
    }

    /// True when nothing is waiting to be read by a cycle.
    pub fn is_idle(&self) -> bool {
        self.mailbox.is_empty() && self.command_queue.is_empty() && self.notes.is_empty() && self.plan_swap.is_none()
    }

    fn set_message(&mut self, id: u64, status: MessageStatus, reason: Option<String>) {
        if let Some(m) = self.messages.get_mut(&id) {
            if status > m.status && !m.is_terminal() {
                m.status = status;
                m.reason = reason;
                m.updated_at = Utc::now();
            }
        }
    }

    fn set_command(&mut self, id: u64, status: CommandStatus, reason: Option<String>) {
        if let Some(c) = self.commands.get_mut(&id) {
            if status > c.status && !c.is_terminal() {
                c.status = status;
                c.reason = reason;
                c.updated_at = Utc::now();
            }
        }
    }
}

/// Effects an agent can have outside itself, implemented by the system.
pub trait World {
    fn send(&self, from: &str, to: &str, performative: Performative, content: Term) -> Result<()>;
    fn register(&self, agent: &str, service: &str) -> Result<()>;
    fn deregister(&self, agent: &str, service: &str) -> Result<()>;
    fn join_workspace(&self, agent: &str, workspace: &str) -> Result<()>;
    fn focus(&self, agent: &str, workspace: &str, artifact: &str) -> Result<()>;
    fn act(&self, agent: &str, workspace: &str, artifact: &str, op: &Term) -> Result<()>;
    fn adopt_role(&self, agent: &str, org: &str, group: &str, role: &str) -> Result<()>;
    fn commit_mission(&self, agent: &str, org: &str, mission: &str) -> Result<()>;
    fn goal_achieved(&self, agent: &str, org: &str, scheme: &str, goal: &str) -> Result<()>;
}

#[derive(Debug, Clone)]
struct Event {
    sign: TriggerSign,
    kind: TriggerKind,
    content: Term,
    origin: Origin,
    /// Intention suspended on this event, for subgoals.
    intention: Option<u64>,
}

#[derive(Debug, Clone)]
struct Frame {
    trigger: String,
    body: Vec<BodyStep>,
    pc: usize,
    bindings: Substitution,
    /// (parent variable, renamed variable) pairs used to hand results back.
    back: Vec<(String, String)>,
}

#[derive(Debug, Clone)]
struct Intention {
    id: u64,
    origin: Origin,
    stack: Vec<Frame>,
    /// Some while suspended on a subgoal event; the flag records whether the
    /// goal-failure event has already been posted.
    waiting: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IntentionSummary {
    pub id: u64,
    pub origin: Origin,
    pub state: &'static str,
    /// Triggers of the stacked plans, outermost first.
    pub stack: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub next: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ObservedRef {
    pub workspace: String,
    pub artifact: String,
}

/// Point-in-time copy of an agent taken between cycles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentSnapshot {
    pub name: String,
    pub cycle_count: u64,
    pub beliefs: Vec<Term>,
    pub plans: String,
    pub plan_count: usize,
    pub intentions: Vec<IntentionSummary>,
    pub pending_events: usize,
    pub services: Vec<String>,
    pub workspaces: Vec<String>,
    pub observed: Vec<ObservedRef>,
}

/// Hex SHA-256 over the canonical belief lines, used to compare belief
/// bases across snapshots and traces.
pub fn belief_digest<'a>(beliefs: impl IntoIterator<Item = &'a Term>) -> String {
    let mut h = Sha256::new();
    for b in beliefs {
        h.update(b.to_string().as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

#[derive(Debug)]
pub struct AgentState {
    name: String,
    beliefs: BTreeSet<Term>,
    plans: Arc<Vec<Plan>>,
    plan_source: String,
    events: VecDeque<Event>,
    intentions: Vec<Intention>,
    next_intention: u64,
    last_run: u64,
    cycle_count: u64,
    log: Vec<String>,
    services: BTreeSet<String>,
    workspaces: BTreeSet<String>,
    observed: BTreeSet<(String, String)>,
    fresh: u64,
    trace: Option<Vec<(u64, String)>>,
}

impl AgentState {
    pub fn new(name: &str, plans: Vec<Plan>, source: &str) -> AgentState {
        AgentState {
            name: name.to_string(),
            beliefs: BTreeSet::new(),
            plans: Arc::new(plans),
            plan_source: source.to_string(),
            events: VecDeque::new(),
            intentions: Vec::new(),
            next_intention: 0,
            last_run: 0,
            cycle_count: 0,
            log: Vec::new(),
            services: BTreeSet::new(),
            workspaces: BTreeSet::new(),
            observed: BTreeSet::new(),
            fresh: 0,
            trace: None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn beliefs(&self) -> &BTreeSet<Term> {
        &self.beliefs
    }

    pub fn plan_source(&self) -> &str {
        &self.plan_source
    }

    pub fn plans(&self) -> &[Plan] {
        &self.plans
    }

    pub fn cycle_count(&self) -> u64 {
        self.cycle_count
    }

    pub fn log(&self) -> &[String] {
        &self.log
    }

    pub fn observed(&self) -> &BTreeSet<(String, String)> {
        &self.observed
    }

    /// No pending events and no intentions.
    pub fn is_idle(&self) -> bool {
        self.events.is_empty() && self.intentions.is_empty()
    }

    /// Starts recording `(cycle_count, belief digest)` after every cycle.
    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn trace(&self) -> Option<&[(u64, String)]> {
        self.trace.as_deref()
    }

    pub fn snapshot(&self) -> AgentSnapshot {
        AgentSnapshot {
            name: self.name.clone(),
            cycle_count: self.cycle_count,
            beliefs: self.beliefs.iter().cloned().collect(),
            plans: self.plan_source.clone(),
            plan_count: self.plans.len(),
            intentions: self.intentions.iter().map(summarize).collect(),
            pending_events: self.events.len(),
            services: self.services.iter().cloned().collect(),
            workspaces: self.workspaces.iter().cloned().collect(),
            observed: self
                .observed
                .iter()
                .map(|(w, a)| ObservedRef { workspace: w.clone(), artifact: a.clone() })
                .collect(),
        }
    }

    /// One reasoning cycle:
    /// 1. ingest notes, plan replacement and commands;
    /// 2. process at most one mailbox message;
    /// 3. handle at most one event;
    /// 4. execute one body step of one intention, round-robin.
    pub fn step(&mut self, inbox: &Mutex<AgentInbox>, world: &dyn World) {
        let (notes, swap, commands, message) = {
            let mut ib = inbox.lock().expect("inbox lock");
            let notes: Vec<Note> = ib.notes.drain(..).collect();
            let swap = ib.plan_swap.take();
            let ids: Vec<u64> = ib.command_queue.drain(..).collect();
            let mut commands = Vec::new();
            for id in ids {
                ib.set_command(id, CommandStatus::Running, None);
                commands.push((id, ib.commands[&id].steps.clone()));
            }
            let message = ib.mailbox.pop_front().map(|id| {
                ib.set_message(id, MessageStatus::Delivered, None);
                ib.messages[&id].clone()
            });
            (notes, swap, commands, message)
        };

        for note in notes {
            if note.add {
                self.add_belief(note.literal, note.origin);
            } else if self.beliefs.remove(&note.literal) {
                self.post(TriggerSign::Del, TriggerKind::Belief, note.literal, note.origin, None);
            }
        }
        if let Some(swap) = swap {
            self.plans = Arc::new(swap.plans);
            self.plan_source = swap.source;
        }
        for (id, steps) in commands {
            let frame = Frame { trigger: "+!command".into(), body: steps, pc: 0, bindings: Substitution::new(), back: vec![] };
            let iid = self.new_intention(Origin::Command(id), frame);
            self.settle(iid, inbox);
        }

        if let Some(m) = message {
            self.process_message(&m, inbox);
        }

        if let Some(ev) = self.events.pop_front() {
            self.handle_event(ev, inbox);
        }

        self.run_one(inbox, world);

        self.cycle_count += 1;
        if let Some(trace) = &mut self.trace {
            trace.push((self.cycle_count, belief_digest(&self.beliefs)));
        }
    }

    fn post(&mut self, sign: TriggerSign, kind: TriggerKind, content: Term, origin: Origin, intention: Option<u64>) {
        self.events.push_back(Event { sign, kind, content, origin, intention });
    }

    /// Set semantics: adding a present belief changes nothing and raises no event.
    fn add_belief(&mut self, b: Term, origin: Origin) {
        if self.beliefs.insert(b.clone()) {
            self.post(TriggerSign::Add, TriggerKind::Belief, b, origin, None);
        }
    }

    fn process_message(&mut self, m: &MessageRecord, inbox: &Mutex<AgentInbox>) {
        let origin = Origin::Message(m.id);
        let outcome = match m.performative {
            Performative::Tell if !m.content.is_ground() => Err("content is not ground".to_string()),
            Performative::Tell => {
                self.add_belief(m.content.clone(), origin);
                Ok(true)
            }
            Performative::Untell => {
                let gone: Vec<Term> =
                    self.beliefs.iter().filter(|b| unify(&m.content, b, &Substitution::new()).is_some()).cloned().collect();
                for b in gone {
                    self.beliefs.remove(&b);
                    self.post(TriggerSign::Del, TriggerKind::Belief, b, origin, None);
                }
                Ok(true)
            }
            Performative::Signal => {
                self.post(TriggerSign::Add, TriggerKind::Belief, m.content.clone(), origin, None);
                Ok(true)
            }
            Performative::Achieve => {
                self.post(TriggerSign::Add, TriggerKind::Goal, m.content.clone(), origin, None);
                Ok(false)
            }
        };
        let mut ib = inbox.lock().expect("inbox lock");
        match outcome {
            Ok(true) => ib.set_message(m.id, MessageStatus::Processed, None),
            Ok(false) => {}
            Err(reason) => ib.set_message(m.id, MessageStatus::Failed, Some(reason)),
        }
    }

    /// Renames the free variables of an event apart from plan variables.
    /// The `$` prefix cannot occur in parsed variable names.
    fn rename_apart(&mut self, t: &Term) -> (Term, Vec<(String, String)>) {
        self.fresh += 1;
        let k = self.fresh;
        let back: Vec<(String, String)> =
            t.vars().into_iter().filter(|v| v != "_").map(|v| (v.clone(), format!("${k}_{v}"))).collect();
        let map: BTreeMap<&str, &str> = back.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        (rename(t, &mut |v| map.get(v).map(|s| s.to_string()).unwrap_or_else(|| v.to_string())), back)
    }

    fn handle_event(&mut self, ev: Event, inbox: &Mutex<AgentInbox>) {
        let (renamed, back) = self.rename_apart(&ev.content);
        let plans = self.plans.clone();
        match select_applicable_plan(&plans, &self.beliefs, ev.sign, ev.kind, &renamed) {
            Selection::Applicable(i, bindings) => {
                let plan = &plans[i];
                let frame = Frame { trigger: plan.trigger.to_string(), body: plan.body.clone(), pc: 0, bindings, back };
                let iid = match ev.intention {
                    Some(id) => match self.intentions.iter_mut().find(|it| it.id == id) {
                        Some(it) => {
                            it.stack.push(frame);
                            it.waiting = None;
                            id
                        }
                        None => return,
                    },
                    None => self.new_intention(ev.origin, frame),
                };
                if let (Origin::Message(mid), TriggerKind::Goal) = (ev.origin, ev.kind) {
                    inbox.lock().expect("inbox lock").set_message(mid, MessageStatus::Processed, None);
                }
                self.settle(iid, inbox);
            }
            sel => {
                let reason = if sel == Selection::NoRelevant { "no relevant plan" } else { "no applicable plan" };
                match (ev.intention, ev.kind) {
                    (Some(id), TriggerKind::Goal) => {
                        let Some(it) = self.intentions.iter_mut().find(|it| it.id == id) else { return };
                        if ev.sign == TriggerSign::Add && it.waiting == Some(false) {
                            it.waiting = Some(true);
                            self.post(TriggerSign::Del, TriggerKind::Goal, ev.content, ev.origin, Some(id));
                        } else {
                            let goal = Term::to_string(&ev.content);
                            self.fail(id, format!("{reason} for +!{goal}"), inbox);
                        }
                    }
                    (_, TriggerKind::Goal) => {
                        if let Origin::Message(mid) = ev.origin {
                            inbox.lock().expect("inbox lock").set_message(mid, MessageStatus::Failed, Some(reason.into()));
                        }
                    }
                    _ => {}
                }
            }
        }
    }

    fn new_intention(&mut self, origin: Origin, frame: Frame) -> u64 {
        self.next_intention += 1;
        let id = self.next_intention;
        self.intentions.push(Intention { id, origin, stack: vec![frame], waiting: None });
        id
    }

    /// Pops finished frames, handing bindings back to callers, and retires
    /// the intention once its stack is empty.
    fn settle(&mut self, id: u64, inbox: &Mutex<AgentInbox>) {
        let Some(pos) = self.intentions.iter().position(|it| it.id == id) else { return };
        loop {
            let it = &mut self.intentions[pos];
            if it.waiting.is_some() {
                return;
            }
            let top = it.stack.last().expect("live intentions have frames");
            if top.pc < top.body.len() {
                return;
            }
            let done = it.stack.pop().expect("checked");
            match it.stack.last_mut() {
                Some(parent) => {
                    self.fresh += 1;
                    if let Err(reason) = bind_back(&done, parent, self.fresh) {
                        self.fail(id, reason, inbox);
                        return;
                    }
                }
                None => {
                    let it = self.intentions.remove(pos);
                    if let Origin::Command(cid) = it.origin {
                        inbox.lock().expect("inbox lock").set_command(cid, CommandStatus::Done, None);
                    }
                    return;
                }
            }
        }
    }

    fn fail(&mut self, id: u64, reason: String, inbox: &Mutex<AgentInbox>) {
        let Some(pos) = self.intentions.iter().position(|it| it.id == id) else { return };
        let it = self.intentions.remove(pos);
        log::debug!("agent {}: intention {id} failed: {reason}", self.name);
        self.log.push(format!("intention {id} failed: {reason}"));
        if let Origin::Command(cid) = it.origin {
            inbox.lock().expect("inbox lock").set_command(cid, CommandStatus::Failed, Some(reason));
        }
    }

    fn run_one(&mut self, inbox: &Mutex<AgentInbox>, world: &dyn World) {
        let runnable = |it: &&Intention| it.waiting.is_none();
        let next = self
            .intentions
            .iter()
            .filter(runnable)
            .find(|it| it.id > self.last_run)
            .or_else(|| self.intentions.iter().find(|it| it.waiting.is_none()))
            .map(|it| it.id);
        let Some(id) = next else { return };
        self.last_run = id;
        let pos = self.intentions.iter().position(|it| it.id == id).expect("found above");
        let frame = self.intentions[pos].stack.last_mut().expect("live intentions have frames");
        let step = frame.body[frame.pc].clone();
        frame.pc += 1;
        let bindings = frame.bindings.clone();
        match self.execute(id, &step, bindings, world) {
            Ok(Some(s)) => {
                if let Some(it) = self.intentions.iter_mut().find(|it| it.id == id) {
                    it.stack.last_mut().expect("frame").bindings = s;
                }
                self.settle(id, inbox);
            }
            Ok(None) => self.settle(id, inbox),
            Err(reason) => self.fail(id, format!("`{step}`: {reason}"), inbox),
        }
    }

    /// Runs one step; returns updated bindings when the step extends them.
    fn execute(
        &mut self,
        id: u64,
        step: &BodyStep,
        s: Substitution,
        world: &dyn World,
    ) -> std::result::Result<Option<Substitution>, String> {
        let eval = |t: &Term| evaluate_term(t, &s).map_err(|e| e.to_string());
        match step {
            BodyStep::Subgoal(g) => {
                let g = eval(g)?;
                let origin = self.intentions.iter().find(|it| it.id == id).map(|it| it.origin).unwrap_or(Origin::Internal);
                self.post(TriggerSign::Add, TriggerKind::Goal, g, origin, Some(id));
                if let Some(it) = self.intentions.iter_mut().find(|it| it.id == id) {
                    it.waiting = Some(false);
                }
                Ok(None)
            }
            BodyStep::AddBelief(b) => {
                let b = eval(b)?;
                if !b.is_ground() {
                    return Err(format!("belief `{b}` is not ground"));
                }
                self.add_belief(b, Origin::Internal);
                Ok(None)
            }
            BodyStep::DelBelief(p) => {
                let p = eval(p)?;
                let hit = self.beliefs.iter().find_map(|b| unify(&p, b, &s).map(|s2| (b.clone(), s2)));
                match hit {
                    Some((b, s2)) => {
                        self.beliefs.remove(&b);
                        self.post(TriggerSign::Del, TriggerKind::Belief, b, Origin::Internal, None);
                        Ok(Some(s2))
                    }
                    None => Ok(None),
                }
            }
            BodyStep::Test(Cond::Lit(Literal { negated: false, term })) => self
                .beliefs
                .iter()
                .find_map(|b| unify(term, b, &s))
                .map(Some)
                .ok_or_else(|| format!("no belief matches `{}`", s.apply(term))),
            BodyStep::Test(Cond::Lit(Literal { negated: true, term })) => {
                if self.beliefs.iter().any(|b| unify(term, b, &s).is_some()) {
                    Err(format!("a belief matches `{}`", s.apply(term)))
                } else {
                    Ok(None)
                }
            }
            BodyStep::Test(Cond::Rel(op, l, r)) => match test_relation(*op, l, r, &s) {
                Ok(Some(s2)) => Ok(Some(s2)),
                Ok(None) => Err("test is false".into()),
                Err(e) => Err(e.to_string()),
            },
            BodyStep::Internal(action, args) => {
                let args = args.iter().map(eval).collect::<std::result::Result<Vec<_>, _>>()?;
                self.internal(*action, &args, world).map(|_| None)
            }
        }
    }

    fn internal(&mut self, action: InternalAction, args: &[Term], world: &dyn World) -> std::result::Result<(), String> {
        use InternalAction as A;
        let want = match action {
            A::Print => args.len(),
            A::Register | A::Deregister | A::JoinWorkspace => 1,
            A::Focus | A::CommitMission => 2,
            A::Send | A::Act | A::AdoptRole | A::GoalAchieved => 3,
        };
        if args.len() != want {
            return Err(format!(".{} expects {want} argument(s), got {}", action.name(), args.len()));
        }
        let name = |i: usize| -> std::result::Result<String, String> {
            args[i].as_name().map(str::to_string).ok_or_else(|| format!("`{}` is not an atom or string", args[i]))
        };
        let me = self.name.clone();
        let r = match action {
            A::Print => {
                let line: String = args
                    .iter()
                    .map(|a| match a {
                        Term::Str(s) => s.clone(),
                        other => other.to_string(),
                    })
                    .collect();
                log::info!("[{me}] {line}");
                self.log.push(line);
                Ok(())
            }
            A::Send => {
                let performative = name(1)?.parse::<Performative>().map_err(|e| e.to_string())?;
                world.send(&me, &name(0)?, performative, args[2].clone())
            }
            A::Register => {
                let svc = name(0)?;
                world.register(&me, &svc).map(|_| {
                    self.services.insert(svc);
                })
            }
            A::Deregister => {
                let svc = name(0)?;
                world.deregister(&me, &svc).map(|_| {
                    self.services.remove(&svc);
                })
            }
            A::JoinWorkspace => {
                let ws = name(0)?;
                world.join_workspace(&me, &ws).map(|_| {
                    self.workspaces.insert(ws);
                })
            }
            A::Focus => {
                let (ws, art) = (name(0)?, name(1)?);
                world.focus(&me, &ws, &art).map(|_| {
                    self.observed.insert((ws, art));
                })
            }
            A::Act => {
                if !args[2].is_ground() {
                    return Err(format!("operation `{}` is not ground", args[2]));
                }
                world.act(&me, &name(0)?, &name(1)?, &args[2])
            }
            A::AdoptRole => world.adopt_role(&me, &name(0)?, &name(1)?, &name(2)?),
            A::CommitMission => world.commit_mission(&me, &name(0)?, &name(1)?),
            A::GoalAchieved => world.goal_achieved(&me, &name(0)?, &name(1)?, &name(2)?),
        };
        r.map_err(|e| e.to_string())
    }
}

fn summarize(it: &Intention) -> IntentionSummary {
    let next = it.stack.last().and_then(|f| f.body.get(f.pc)).map(|s| s.to_string());
    IntentionSummary {
        id: it.id,
        origin: it.origin,
        state: if it.waiting.is_some() { "waiting" } else { "running" },
        stack: it.stack.iter().map(|f| f.trigger.clone()).collect(),
        next: if it.waiting.is_some() { None } else { next },
    }
}

fn rename(t: &Term, f: &mut dyn FnMut(&str) -> String) -> Term {
    match t {
        Term::Var(v) if v == "_" => t.clone(),
        Term::Var(v) => Term::Var(f(v)),
        Term::Structure(n, args) => Term::Structure(n.clone(), args.iter().map(|a| rename(a, f)).collect()),
        Term::List(items) => Term::List(items.iter().map(|a| rename(a, f)).collect()),
        other => other.clone(),
    }
}

/// Transfers what a finished subgoal frame learned about the caller's
/// variables. Variables still free in the result are either mapped back to
/// the caller's own names or given fresh names.
fn bind_back(child: &Frame, parent: &mut Frame, k: u64) -> std::result::Result<(), String> {
    let reverse: BTreeMap<&str, &str> = child.back.iter().map(|(p, r)| (r.as_str(), p.as_str())).collect();
    let mut locals: BTreeMap<String, String> = BTreeMap::new();
    for (pv, rv) in &child.back {
        let value = child.bindings.apply(&Term::var(rv.clone()));
        let value = rename(&value, &mut |v| match reverse.get(v) {
            Some(p) => p.to_string(),
            None => locals.entry(v.to_string()).or_insert_with(|| format!("${k}_{v}")).clone(),
        });
        parent.bindings = unify(&Term::var(pv.clone()), &value, &parent.bindings)
            .ok_or_else(|| format!("cannot bind `{pv}` to `{value}`"))?;
    }
    Ok(())
}
