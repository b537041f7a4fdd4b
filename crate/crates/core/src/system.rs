//! The running multi-agent system: agents, environment, organisations,
//! directory and revision history behind one thread-safe handle.
//!
//! Lock order, outermost first: the agent map (never held while acquiring
//! another lock except the revision store), one agent's state, then the
//! environment, organisations, directory or revision store, and finally
//! agent inboxes, which are leaves.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Condvar, Mutex, RwLock, Weak};
use std::thread::JoinHandle;
use std::time::Duration;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::agent::{
    AgentInbox, AgentSnapshot, AgentState, CommandRecord, MessageRecord, Note, Origin, Performative, World,
};
use crate::directory::Directory;
use crate::environment::{
    ArtifactTemplate, ArtifactView, Caller, Environment, PerceptDelivery, TemplateDoc, WorkspaceView,
};
use crate::error::{MasError, Result};
use crate::organisation::{
    CompiledOrg, GroupView, MissionBinding, OrgNote, OrgSpec, OrgView, Organisation, RoleBinding, SchemeView,
};
use crate::revision::{Bump, Recorded, RevisionRecord, RevisionStore};
use crate::term::{is_resource_name, parse_body, parse_plan_library, parse_term, Term};

pub fn plans_entity(agent: &str) -> String {
    format!("/agents/{agent}/plans")
}

pub fn template_entity(template: &str) -> String {
    format!("/artifact-templates/{template}")
}

pub fn org_entity(org: &str) -> String {
    format!("/organisations/{org}")
}

#[derive(Debug)]
struct AgentHandle {
    state: Mutex<AgentState>,
    inbox: Mutex<AgentInbox>,
    alive: AtomicBool,
}

impl AgentHandle {
    fn has_work(&self, state: &AgentState) -> bool {
        !state.is_idle() || !self.inbox.lock().expect("inbox lock").is_idle()
    }
}

#[derive(Debug, Default)]
struct SchedState {
    paused: bool,
    /// Bumped on every external post so a sleeping driver re-checks.
    signal: u64,
    shutdown: bool,
}

#[derive(Debug)]
struct Inner {
    agents: RwLock<BTreeMap<String, Arc<AgentHandle>>>,
    env: Mutex<Environment>,
    orgs: Mutex<BTreeMap<String, Organisation>>,
    directory: Mutex<Directory>,
    revisions: Mutex<RevisionStore>,
    sched: Mutex<SchedState>,
    wake: Condvar,
    /// Held for a whole round of cycles so manual stepping and the driver
    /// never interleave.
    rounds: Mutex<()>,
    tracing: AtomicBool,
}

/// Cheap-to-clone handle to a running system.
#[derive(Debug, Clone)]
pub struct Mas {
    inner: Arc<Inner>,
    driver: Arc<Mutex<Option<JoinHandle<()>>>>,
}

/// Agent snapshot joined with its organisational and environmental context.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentDetail {
    #[serde(flatten)]
    pub snapshot: AgentSnapshot,
    pub roles: Vec<RoleBinding>,
    pub missions: Vec<MissionBinding>,
    /// Summaries of observed artifacts, as rendered by the environment.
    pub artifacts: Vec<ArtifactView>,
}

impl Default for Mas {
    fn default() -> Self {
        Mas::new(RevisionStore::in_memory())
    }
}

impl Mas {
    /// A system with the scheduler paused and no driver thread; call
    /// [`Mas::start`] to run agents in the background.
    pub fn new(revisions: RevisionStore) -> Mas {
        Mas {
            inner: Arc::new(Inner {
                agents: RwLock::new(BTreeMap::new()),
                env: Mutex::new(Environment::new()),
                orgs: Mutex::new(BTreeMap::new()),
                directory: Mutex::new(Directory::new()),
                revisions: Mutex::new(revisions),
                sched: Mutex::new(SchedState { paused: true, ..Default::default() }),
                wake: Condvar::new(),
                rounds: Mutex::new(()),
                tracing: AtomicBool::new(false),
            }),
            driver: Arc::new(Mutex::new(None)),
        }
    }

    /// Spawns the round-robin driver thread (once) and resumes scheduling.
    pub fn start(&self) {
        let mut driver = self.driver.lock().expect("driver lock");
        if driver.is_none() {
            let weak = Arc::downgrade(&self.inner);
            *driver = Some(std::thread::Builder::new().name("mas-driver".into()).spawn(move || drive(weak)).expect("spawn driver"));
        }
        drop(driver);
        self.resume();
    }

    pub fn pause(&self) {
        // taking the round lock waits for an in-flight round to finish
        let _round = self.inner.rounds.lock().expect("round lock");
        self.inner.sched.lock().expect("sched lock").paused = true;
    }

    pub fn resume(&self) {
        self.inner.sched.lock().expect("sched lock").paused = false;
        self.inner.wake.notify_all();
    }

    pub fn is_paused(&self) -> bool {
        self.inner.sched.lock().expect("sched lock").paused
    }

    /// Stops the driver thread and waits for it.
    pub fn shutdown(&self) {
        self.inner.sched.lock().expect("sched lock").shutdown = true;
        self.inner.wake.notify_all();
        if let Some(h) = self.driver.lock().expect("driver lock").take() {
            let _ = h.join();
        }
    }

    fn wake(&self) {
        self.inner.sched.lock().expect("sched lock").signal += 1;
        self.inner.wake.notify_all();
    }

    /// Records a per-cycle belief digest for agents spawned from now on.
    pub fn set_tracing(&self, on: bool) {
        self.inner.tracing.store(on, Ordering::SeqCst);
    }

    /// Cycles agents that have work, round-robin, until none has or
    /// `max_rounds` rounds ran. Returns true when quiescent.
    pub fn run_until_quiescent(&self, max_rounds: usize) -> bool {
        for _ in 0..max_rounds {
            if !self.inner.round(false) {
                return true;
            }
        }
        self.is_quiescent()
    }

    pub fn is_quiescent(&self) -> bool {
        self.inner.handles().iter().all(|h| !h.has_work(&h.state.lock().expect("state lock")))
    }

    fn handle(&self, name: &str) -> Result<Arc<AgentHandle>> {
        self.inner.handle(name)
    }

    // ---- agents ----

    /// Starts an agent. A blank library records no revision unless the name
    /// already has history, so plan history starts at the first real library.
    pub fn spawn_agent(&self, name: &str, source: &str) -> Result<Option<Arc<RevisionRecord>>> {
        if !is_resource_name(name) {
            return Err(MasError::InvalidSpec(format!("agent name `{name}` must match [a-z][a-z0-9_]*")));
        }
        let plans = parse_plan_library(source)?;
        let mut agents = self.inner.agents.write().expect("agents lock");
        if agents.contains_key(name) {
            return Err(MasError::conflict("agent", name));
        }
        let rec = {
            let mut revs = self.inner.revisions.lock().expect("revisions lock");
            let entity = plans_entity(name);
            if source.trim().is_empty() && revs.head(&entity).is_none() {
                None
            } else {
                Some(revs.record(&entity, source, Bump::Patch)?.record)
            }
        };
        let mut state = AgentState::new(name, plans, source);
        if self.inner.tracing.load(Ordering::SeqCst) {
            state.enable_trace();
        }
        agents.insert(
            name.to_string(),
            Arc::new(AgentHandle { state: Mutex::new(state), inbox: Mutex::new(AgentInbox::new()), alive: AtomicBool::new(true) }),
        );
        drop(agents);
        self.wake();
        Ok(rec)
    }

    /// Stops an agent and releases its directory entries, observations and
    /// roles. Its revision history is kept.
    pub fn kill_agent(&self, name: &str) -> Result<()> {
        let handle =
            self.inner.agents.write().expect("agents lock").remove(name).ok_or_else(|| MasError::not_found("agent", name))?;
        handle.alive.store(false, Ordering::SeqCst);
        // waits for a cycle in progress to finish
        let _state = handle.state.lock().expect("state lock");
        self.inner.env.lock().expect("env lock").release_agent(name);
        for org in self.inner.orgs.lock().expect("orgs lock").values_mut() {
            org.release_agent(name);
        }
        self.inner.directory.lock().expect("directory lock").prune(name);
        Ok(())
    }

    pub fn agent_names(&self) -> Vec<String> {
        self.inner.agents.read().expect("agents lock").keys().cloned().collect()
    }

    pub fn snapshot_agent(&self, name: &str) -> Result<AgentSnapshot> {
        Ok(self.handle(name)?.state.lock().expect("state lock").snapshot())
    }

    pub fn agent_detail(&self, name: &str) -> Result<AgentDetail> {
        let h = self.handle(name)?;
        let state = h.state.lock().expect("state lock");
        let snapshot = state.snapshot();
        let artifacts = {
            let env = self.inner.env.lock().expect("env lock");
            state.observed().iter().filter_map(|(w, a)| env.artifact_view(w, a).ok()).collect()
        };
        drop(state);
        let orgs = self.inner.orgs.lock().expect("orgs lock");
        Ok(AgentDetail {
            snapshot,
            roles: orgs.values().flat_map(|o| o.roles_of(name)).collect(),
            missions: orgs.values().flat_map(|o| o.missions_of(name)).collect(),
            artifacts,
        })
    }

    pub fn agent_log(&self, name: &str) -> Result<Vec<String>> {
        Ok(self.handle(name)?.state.lock().expect("state lock").log().to_vec())
    }

    /// `(cycle_count, belief digest)` per cycle, when tracing was on at spawn.
    pub fn agent_trace(&self, name: &str) -> Result<Option<Vec<(u64, String)>>> {
        Ok(self.handle(name)?.state.lock().expect("state lock").trace().map(<[_]>::to_vec))
    }

    /// Current plan library source: the head revision, which may not yet be
    /// installed if the agent has not reached a cycle boundary.
    pub fn plan_source(&self, name: &str) -> Result<String> {
        self.handle(name)?;
        let revs = self.inner.revisions.lock().expect("revisions lock");
        Ok(revs.head(&plans_entity(name)).map(|r| r.content.clone()).unwrap_or_default())
    }

    /// Parses and stages a new plan library. Identical content returns the
    /// current head without creating a revision.
    pub fn update_plans(&self, name: &str, source: &str, bump: Bump) -> Result<Recorded> {
        let h = self.handle(name)?;
        let plans = parse_plan_library(source)?;
        let rec = self.inner.revisions.lock().expect("revisions lock").record(&plans_entity(name), source, bump)?;
        if rec.created {
            h.inbox.lock().expect("inbox lock").stage_plans(plans, source);
            self.wake();
        }
        Ok(rec)
    }

    pub fn deliver_message(&self, to: &str, sender: &str, performative: &str, content: &str) -> Result<u64> {
        let h = self.handle(to)?;
        let performative: Performative = performative.parse()?;
        let content = parse_term(content)?;
        let id = h.inbox.lock().expect("inbox lock").post_message(sender, performative, content);
        self.wake();
        Ok(id)
    }

    pub fn submit_command(&self, to: &str, body: &str) -> Result<u64> {
        let h = self.handle(to)?;
        let steps = parse_body(body)?;
        let id = h.inbox.lock().expect("inbox lock").post_command(body, steps);
        self.wake();
        Ok(id)
    }

    pub fn message(&self, agent: &str, id: u64) -> Result<MessageRecord> {
        self.handle(agent)?
            .inbox
            .lock()
            .expect("inbox lock")
            .message(id)
            .cloned()
            .ok_or_else(|| MasError::not_found("message", format!("{agent}/{id}")))
    }

    pub fn messages(&self, agent: &str) -> Result<Vec<MessageRecord>> {
        Ok(self.handle(agent)?.inbox.lock().expect("inbox lock").messages().cloned().collect())
    }

    pub fn command(&self, agent: &str, id: u64) -> Result<CommandRecord> {
        self.handle(agent)?
            .inbox
            .lock()
            .expect("inbox lock")
            .command(id)
            .cloned()
            .ok_or_else(|| MasError::not_found("command", format!("{agent}/{id}")))
    }

    pub fn commands(&self, agent: &str) -> Result<Vec<CommandRecord>> {
        Ok(self.handle(agent)?.inbox.lock().expect("inbox lock").commands().cloned().collect())
    }

    // ---- revisions ----

    pub fn revisions(&self, entity: &str) -> Vec<Arc<RevisionRecord>> {
        self.inner.revisions.lock().expect("revisions lock").list(entity)
    }

    pub fn revision(&self, entity: &str, revision: u64) -> Result<Arc<RevisionRecord>> {
        self.inner
            .revisions
            .lock()
            .expect("revisions lock")
            .get(entity, revision)
            .ok_or_else(|| MasError::not_found("revision", format!("{entity}/{revision}")))
    }

    pub fn head_revision(&self, entity: &str) -> Option<Arc<RevisionRecord>> {
        self.inner.revisions.lock().expect("revisions lock").head(entity)
    }

    // ---- environment ----

    /// Registers a new template; fails if the name is taken.
    pub fn create_template(&self, doc: TemplateDoc) -> Result<Recorded> {
        let tpl = ArtifactTemplate::from_doc(doc)?;
        let mut env = self.inner.env.lock().expect("env lock");
        if env.template(&tpl.name).is_some() {
            return Err(MasError::conflict("template", tpl.name));
        }
        let rec = self.inner.revisions.lock().expect("revisions lock").record(
            &template_entity(&tpl.name),
            &tpl.canonical_json(),
            Bump::Patch,
        )?;
        env.register_template(tpl);
        Ok(rec)
    }

    /// Creates or replaces the template `name`. Live instances are unaffected.
    pub fn put_template(&self, name: &str, doc: TemplateDoc, bump: Bump) -> Result<Recorded> {
        if doc.name != name {
            return Err(MasError::InvalidSpec(format!("template name `{}` does not match `{name}`", doc.name)));
        }
        let tpl = ArtifactTemplate::from_doc(doc)?;
        let mut env = self.inner.env.lock().expect("env lock");
        let rec =
            self.inner.revisions.lock().expect("revisions lock").record(&template_entity(name), &tpl.canonical_json(), bump)?;
        if rec.created || env.template(name).is_none() {
            env.register_template(tpl);
        }
        Ok(rec)
    }

    pub fn template_names(&self) -> Vec<String> {
        self.inner.env.lock().expect("env lock").templates().map(|t| t.name.clone()).collect()
    }

    pub fn template(&self, name: &str) -> Result<TemplateDoc> {
        self.inner
            .env
            .lock()
            .expect("env lock")
            .template(name)
            .map(|t| t.doc.clone())
            .ok_or_else(|| MasError::not_found("template", name))
    }

    pub fn create_workspace(&self, name: &str) -> Result<()> {
        self.inner.env.lock().expect("env lock").create_workspace(name)
    }

    pub fn workspace_names(&self) -> Vec<String> {
        self.inner.env.lock().expect("env lock").workspace_names().cloned().collect()
    }

    pub fn workspace(&self, name: &str) -> Result<WorkspaceView> {
        self.inner.env.lock().expect("env lock").workspace_view(name)
    }

    pub fn instantiate(&self, workspace: &str, artifact: &str, template: &str) -> Result<ArtifactView> {
        let mut env = self.inner.env.lock().expect("env lock");
        env.instantiate(workspace, artifact, template)?;
        env.artifact_view(workspace, artifact)
    }

    pub fn artifact(&self, workspace: &str, artifact: &str) -> Result<ArtifactView> {
        self.inner.env.lock().expect("env lock").artifact_view(workspace, artifact)
    }

    // ---- organisations ----

    pub fn create_org(&self, spec: OrgSpec) -> Result<Recorded> {
        let compiled = CompiledOrg::compile(spec)?;
        let name = compiled.spec.name.clone();
        let mut orgs = self.inner.orgs.lock().expect("orgs lock");
        if orgs.contains_key(&name) {
            return Err(MasError::conflict("organisation", name));
        }
        let rec = self.inner.revisions.lock().expect("revisions lock").record(
            &org_entity(&name),
            &compiled.canonical_json(),
            Bump::Patch,
        )?;
        orgs.insert(name, Organisation::new(compiled));
        Ok(rec)
    }

    /// Creates or replaces an organisation spec. Existing players are
    /// re-adopted where the new spec still allows it.
    pub fn put_org(&self, name: &str, spec: OrgSpec, bump: Bump) -> Result<Recorded> {
        if spec.name != name {
            return Err(MasError::InvalidSpec(format!("organisation name `{}` does not match `{name}`", spec.name)));
        }
        let compiled = CompiledOrg::compile(spec)?;
        let handles = self.inner.handles_by_name();
        let mut orgs = self.inner.orgs.lock().expect("orgs lock");
        let rec =
            self.inner.revisions.lock().expect("revisions lock").record(&org_entity(name), &compiled.canonical_json(), bump)?;
        match orgs.get(name) {
            None => {
                orgs.insert(name.to_string(), Organisation::new(compiled));
            }
            Some(old) if rec.created => {
                let (next, notes) = old.replaced_by(compiled);
                orgs.insert(name.to_string(), next);
                deliver_org_notes(&handles, notes);
            }
            Some(_) => {}
        }
        drop(orgs);
        self.wake();
        Ok(rec)
    }

    pub fn org_names(&self) -> Vec<String> {
        self.inner.orgs.lock().expect("orgs lock").keys().cloned().collect()
    }

    pub fn org(&self, name: &str) -> Result<OrgView> {
        self.with_org(name, |o| Ok(o.view()))
    }

    /// The spec the organisation currently runs, as last created or put.
    pub fn org_spec(&self, name: &str) -> Result<OrgSpec> {
        self.with_org(name, |o| Ok(o.compiled().spec.clone()))
    }

    pub fn group(&self, org: &str, group: &str) -> Result<GroupView> {
        self.with_org(org, |o| o.group_view(group))
    }

    pub fn scheme(&self, org: &str, scheme: &str) -> Result<SchemeView> {
        self.with_org(org, |o| o.scheme_view(scheme))
    }

    fn with_org<T>(&self, name: &str, f: impl FnOnce(&Organisation) -> Result<T>) -> Result<T> {
        let orgs = self.inner.orgs.lock().expect("orgs lock");
        f(orgs.get(name).ok_or_else(|| MasError::not_found("organisation", name))?)
    }

    /// Management-side role assignment; same path as `.adoptRole`.
    pub fn adopt_role(&self, agent: &str, org: &str, group: &str, role: &str) -> Result<()> {
        self.handle(agent)?;
        self.inner.adopt_role(agent, org, group, role)?;
        self.wake();
        Ok(())
    }

    // ---- directory ----

    /// Providers per service; with `service`, just that entry (possibly empty).
    pub fn services(&self, service: Option<&str>) -> BTreeMap<String, Vec<String>> {
        let dir = self.inner.directory.lock().expect("directory lock");
        match service {
            Some(s) => BTreeMap::from([(s.to_string(), dir.lookup(s).into_iter().collect())]),
            None => dir.all().iter().map(|(k, v)| (k.clone(), v.iter().cloned().collect())).collect(),
        }
    }

    // ---- whole-state digest ----

    /// Everything observable through the API except timestamps.
    pub fn state_value(&self) -> Value {
        let mut agents = serde_json::Map::new();
        for name in self.agent_names() {
            let Ok(h) = self.handle(&name) else { continue };
            let snap = h.state.lock().expect("state lock").snapshot();
            let ib = h.inbox.lock().expect("inbox lock");
            let messages: Vec<&MessageRecord> = ib.messages().collect();
            let commands: Vec<&CommandRecord> = ib.commands().collect();
            agents.insert(
                name,
                serde_json::json!({ "snapshot": snap, "messages": messages, "commands": commands, "idle": ib.is_idle() }),
            );
        }
        let env = {
            let env = self.inner.env.lock().expect("env lock");
            let ws: Vec<WorkspaceView> = env.workspace_names().filter_map(|w| env.workspace_view(w).ok()).collect();
            let tpls: Vec<&TemplateDoc> = env.templates().map(|t| &t.doc).collect();
            serde_json::json!({ "workspaces": ws, "templates": tpls })
        };
        let orgs: Vec<OrgView> = self.inner.orgs.lock().expect("orgs lock").values().map(Organisation::view).collect();
        let revisions: Vec<(String, u64, String)> = {
            let revs = self.inner.revisions.lock().expect("revisions lock");
            let entities: Vec<String> = revs.entities().cloned().collect();
            entities.iter().filter_map(|e| revs.head(e)).map(|r| (r.entity.clone(), r.revision, r.content_hash.clone())).collect()
        };
        let mut v = serde_json::json!({
            "agents": agents,
            "environment": env,
            "organisations": orgs,
            "services": self.services(None),
            "revisions": revisions,
        });
        strip_times(&mut v);
        v
    }

    /// SHA-256 over [`Mas::state_value`].
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.state_value().to_string().as_bytes()))
    }
}

fn strip_times(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.remove("created_at");
            map.remove("updated_at");
            map.values_mut().for_each(strip_times);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_times),
        _ => {}
    }
}

fn deliver_percepts(handles: &BTreeMap<String, Arc<AgentHandle>>, deliveries: Vec<PerceptDelivery>) {
    for d in deliveries {
        if let Some(h) = handles.get(&d.agent) {
            h.inbox.lock().expect("inbox lock").post_note(Note { add: d.add, literal: d.literal, origin: Origin::Percept });
        }
    }
}

fn deliver_org_notes(handles: &BTreeMap<String, Arc<AgentHandle>>, notes: Vec<OrgNote>) {
    for n in notes {
        if let Some(h) = handles.get(&n.agent) {
            h.inbox.lock().expect("inbox lock").post_note(Note { add: n.add, literal: n.literal, origin: Origin::Organisation });
        }
    }
}

impl Inner {
    fn handle(&self, name: &str) -> Result<Arc<AgentHandle>> {
        self.agents.read().expect("agents lock").get(name).cloned().ok_or_else(|| MasError::not_found("agent", name))
    }

    fn handles(&self) -> Vec<Arc<AgentHandle>> {
        self.agents.read().expect("agents lock").values().cloned().collect()
    }

    fn handles_by_name(&self) -> BTreeMap<String, Arc<AgentHandle>> {
        self.agents.read().expect("agents lock").clone()
    }

    /// One cycle for every live agent with work. Returns whether any ran.
    fn round(&self, from_driver: bool) -> bool {
        let _round = self.rounds.lock().expect("round lock");
        if from_driver && self.sched.lock().expect("sched lock").paused {
            return false;
        }
        let mut ran = false;
        for h in self.handles() {
            if !h.alive.load(Ordering::SeqCst) {
                continue;
            }
            let mut state = h.state.lock().expect("state lock");
            if !h.alive.load(Ordering::SeqCst) || !h.has_work(&state) {
                continue;
            }
            state.step(&h.inbox, self);
            ran = true;
        }
        ran
    }

    fn adopt_role(&self, agent: &str, org: &str, group: &str, role: &str) -> Result<()> {
        let handles = self.handles_by_name();
        let mut orgs = self.orgs.lock().expect("orgs lock");
        let o = orgs.get_mut(org).ok_or_else(|| MasError::not_found("organisation", org))?;
        let notes = o.adopt_role(agent, group, role)?;
        deliver_org_notes(&handles, notes);
        Ok(())
    }
}

impl World for Inner {
    fn send(&self, from: &str, to: &str, performative: Performative, content: Term) -> Result<()> {
        let h = self.handle(to)?;
        h.inbox.lock().expect("inbox lock").post_message(from, performative, content);
        Ok(())
    }

    fn register(&self, agent: &str, service: &str) -> Result<()> {
        self.directory.lock().expect("directory lock").register(agent, service);
        Ok(())
    }

    fn deregister(&self, agent: &str, service: &str) -> Result<()> {
        self.directory.lock().expect("directory lock").deregister(agent, service);
        Ok(())
    }

    fn join_workspace(&self, agent: &str, workspace: &str) -> Result<()> {
        self.env.lock().expect("env lock").join(agent, workspace)
    }

    fn focus(&self, agent: &str, workspace: &str, artifact: &str) -> Result<()> {
        let handles = self.handles_by_name();
        let mut env = self.env.lock().expect("env lock");
        let deliveries = env.focus(agent, workspace, artifact)?;
        deliver_percepts(&handles, deliveries);
        Ok(())
    }

    fn act(&self, agent: &str, workspace: &str, artifact: &str, op: &Term) -> Result<()> {
        let handles = self.handles_by_name();
        let mut env = self.env.lock().expect("env lock");
        let deliveries = env.invoke(&Caller::Agent(agent.to_string()), workspace, artifact, op)?;
        deliver_percepts(&handles, deliveries);
        Ok(())
    }

    fn adopt_role(&self, agent: &str, org: &str, group: &str, role: &str) -> Result<()> {
        Inner::adopt_role(self, agent, org, group, role)
    }

    fn commit_mission(&self, agent: &str, org: &str, mission: &str) -> Result<()> {
        let handles = self.handles_by_name();
        let mut orgs = self.orgs.lock().expect("orgs lock");
        let o = orgs.get_mut(org).ok_or_else(|| MasError::not_found("organisation", org))?;
        let notes = o.commit_mission(agent, mission)?;
        deliver_org_notes(&handles, notes);
        Ok(())
    }

    fn goal_achieved(&self, agent: &str, org: &str, scheme: &str, goal: &str) -> Result<()> {
        let handles = self.handles_by_name();
        let mut orgs = self.orgs.lock().expect("orgs lock");
        let o = orgs.get_mut(org).ok_or_else(|| MasError::not_found("organisation", org))?;
        let notes = o.set_goal_achieved(agent, scheme, goal)?;
        deliver_org_notes(&handles, notes);
        Ok(())
    }
}

fn drive(weak: Weak<Inner>) {
    loop {
        let Some(inner) = weak.upgrade() else { return };
        let seen = {
            let mut s = inner.sched.lock().expect("sched lock");
            while s.paused && !s.shutdown {
                s = inner.wake.wait(s).expect("sched lock");
            }
            if s.shutdown {
                return;
            }
            s.signal
        };
        if !inner.round(true) {
            let s = inner.sched.lock().expect("sched lock");
            if s.signal == seen && !s.shutdown {
                let _ = inner.wake.wait_timeout(s, Duration::from_millis(20)).expect("sched lock");
            }
        }
    }
}
