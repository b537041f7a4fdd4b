//! Workspaces and artifacts.
//!
//! An artifact is an instance of a template: a set of ground observable
//! properties plus named operations. Each operation is a list of rewrite
//! rules; invoking it fires the first rule whose match patterns all unify
//! with current properties and whose guard holds. Matched properties are
//! replaced by the evaluated update literals, and observers receive the
//! property diff as percepts.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{MasError, Result};
use crate::term::{
    evaluate_term, is_atom_name, is_resource_name, is_var_name, parse_condition, parse_term,
    test_relation, unify, Cond, Substitution, Term,
};

/// Wire form of an artifact template.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateDoc {
    pub name: String,
    #[serde(default)]
    pub properties: Vec<String>,
    #[serde(default)]
    pub operations: Vec<OperationDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperationDoc {
    pub name: String,
    #[serde(default)]
    pub params: Vec<String>,
    pub rules: Vec<RuleDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleDoc {
    #[serde(rename = "match", default)]
    pub matches: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guard: Option<String>,
    #[serde(default)]
    pub update: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RewriteRule {
    pub params: Vec<String>,
    pub matches: Vec<Term>,
    pub guard: Option<Cond>,
    pub update: Vec<Term>,
}

#[derive(Debug, Clone)]
pub struct Operation {
    pub name: String,
    pub params: Vec<String>,
    pub rules: Vec<RewriteRule>,
}

#[derive(Debug, Clone)]
pub struct ArtifactTemplate {
    pub name: String,
    pub initial_properties: Vec<Term>,
    pub operations: BTreeMap<String, Operation>,
    pub doc: TemplateDoc,
}

fn invalid(msg: String) -> MasError {
    MasError::InvalidSpec(msg)
}

fn parse_in(what: &str, src: &str) -> Result<Term> {
    parse_term(src).map_err(|e| invalid(format!("{what} `{src}`: {e}")))
}

fn literal_in(what: &str, src: &str) -> Result<Term> {
    let t = parse_in(what, src)?;
    match t.functor() {
        Some((f, _)) if is_atom_name(f) => Ok(t),
        _ => Err(invalid(format!("{what} `{src}` is not an atom or structure"))),
    }
}

impl ArtifactTemplate {
    pub fn from_doc(doc: TemplateDoc) -> Result<ArtifactTemplate> {
        if !is_resource_name(&doc.name) {
            return Err(invalid(format!("template name `{}` must match [a-z][a-z0-9_]*", doc.name)));
        }
        let mut initial_properties = Vec::new();
        for src in &doc.properties {
            let t = literal_in("property", src)?;
            if !t.is_ground() {
                return Err(invalid(format!("initial property `{src}` is not ground")));
            }
            initial_properties.push(t);
        }
        let mut operations = BTreeMap::new();
        for op in &doc.operations {
            if !is_atom_name(&op.name) {
                return Err(invalid(format!("operation name `{}` is not an identifier", op.name)));
            }
            if operations.contains_key(&op.name) {
                return Err(invalid(format!("operation `{}` declared twice", op.name)));
            }
            let mut seen = BTreeSet::new();
            for p in &op.params {
                if !is_var_name(p) || p == "_" {
                    return Err(invalid(format!("parameter `{p}` of `{}` is not a variable name", op.name)));
                }
                if !seen.insert(p.clone()) {
                    return Err(invalid(format!("parameter `{p}` of `{}` repeated", op.name)));
                }
            }
            if op.rules.is_empty() {
                return Err(invalid(format!("operation `{}` has no rules", op.name)));
            }
            let mut rules = Vec::new();
            for (i, r) in op.rules.iter().enumerate() {
                let ctx = format!("operation `{}` rule {}", op.name, i + 1);
                let matches =
                    r.matches.iter().map(|m| literal_in("match pattern", m)).collect::<Result<Vec<_>>>()?;
                let update =
                    r.update.iter().map(|u| literal_in("update", u)).collect::<Result<Vec<_>>>()?;
                let guard = match &r.guard {
                    None => None,
                    Some(src) => match parse_condition(src) {
                        Ok(c @ Cond::Rel(..)) => Some(c),
                        Ok(_) => return Err(invalid(format!("{ctx}: guard `{src}` is not a relational test"))),
                        Err(e) => return Err(invalid(format!("{ctx}: guard `{src}`: {e}"))),
                    },
                };
                let mut scope: BTreeSet<String> = op.params.iter().cloned().collect();
                for m in &matches {
                    m.collect_vars(&mut scope);
                }
                let mut used = BTreeSet::new();
                for u in &update {
                    u.collect_vars(&mut used);
                }
                if let Some(Cond::Rel(_, l, rr)) = &guard {
                    l.collect_vars(&mut used);
                    rr.collect_vars(&mut used);
                }
                if let Some(v) = used.iter().find(|v| !scope.contains(*v)) {
                    return Err(invalid(format!(
                        "{ctx}: variable `{v}` is not a parameter and does not occur in a match pattern"
                    )));
                }
                rules.push(RewriteRule { params: op.params.clone(), matches, guard, update });
            }
            operations.insert(op.name.clone(), Operation { name: op.name.clone(), params: op.params.clone(), rules });
        }
        Ok(ArtifactTemplate { name: doc.name.clone(), initial_properties, operations, doc })
    }

    /// Canonical serialisation used as revision content.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string_pretty(&self.doc).expect("template docs serialize")
    }
}

#[derive(Debug, Clone)]
pub struct ArtifactInstance {
    pub name: String,
    pub template: Arc<ArtifactTemplate>,
    pub properties: BTreeSet<Term>,
    pub observers: BTreeSet<String>,
}

#[derive(Debug, Clone, Default)]
pub struct Workspace {
    pub name: String,
    pub artifacts: BTreeMap<String, ArtifactInstance>,
    pub members: BTreeSet<String>,
}

/// A property change to be delivered to an observing agent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerceptDelivery {
    pub agent: String,
    pub add: bool,
    pub literal: Term,
    pub workspace: String,
    pub artifact: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Caller {
    Agent(String),
    Management,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OperationSummary {
    pub name: String,
    pub params: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ArtifactView {
    pub name: String,
    pub workspace: String,
    pub template: String,
    pub properties: Vec<String>,
    pub operations: Vec<OperationSummary>,
    pub observers: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WorkspaceView {
    pub name: String,
    pub members: Vec<String>,
    pub artifacts: Vec<ArtifactView>,
}

#[derive(Debug, Default)]
pub struct Environment {
    templates: BTreeMap<String, Arc<ArtifactTemplate>>,
    workspaces: BTreeMap<String, Workspace>,
}

impl Environment {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds or replaces a template. Live instances keep the template they
    /// were created from.
    pub fn register_template(&mut self, template: ArtifactTemplate) {
        self.templates.insert(template.name.clone(), Arc::new(template));
    }

    pub fn template(&self, name: &str) -> Option<&Arc<ArtifactTemplate>> {
        self.templates.get(name)
    }

    pub fn templates(&self) -> impl Iterator<Item = &Arc<ArtifactTemplate>> {
        self.templates.values()
    }

    pub fn create_workspace(&mut self, name: &str) -> Result<()> {
        if !is_resource_name(name) {
            return Err(invalid(format!("workspace name `{name}` must match [a-z][a-z0-9_]*")));
        }
        if self.workspaces.contains_key(name) {
            return Err(MasError::conflict("workspace", name));
        }
        self.workspaces.insert(name.to_string(), Workspace { name: name.to_string(), ..Default::default() });
        Ok(())
    }

    pub fn workspace_names(&self) -> impl Iterator<Item = &String> {
        self.workspaces.keys()
    }

    fn ws_mut(&mut self, name: &str) -> Result<&mut Workspace> {
        self.workspaces.get_mut(name).ok_or_else(|| MasError::not_found("workspace", name))
    }

    pub fn instantiate(&mut self, workspace: &str, artifact: &str, template: &str) -> Result<()> {
        if !is_resource_name(artifact) {
            return Err(invalid(format!("artifact name `{artifact}` must match [a-z][a-z0-9_]*")));
        }
        let tpl = self.templates.get(template).cloned().ok_or_else(|| MasError::not_found("template", template))?;
        let ws = self.ws_mut(workspace)?;
        if ws.artifacts.contains_key(artifact) {
            return Err(MasError::conflict("artifact", format!("{workspace}/{artifact}")));
        }
        let properties = tpl.initial_properties.iter().cloned().collect();
        ws.artifacts.insert(
            artifact.to_string(),
            ArtifactInstance { name: artifact.to_string(), template: tpl, properties, observers: BTreeSet::new() },
        );
        Ok(())
    }

    pub fn join(&mut self, agent: &str, workspace: &str) -> Result<()> {
        self.ws_mut(workspace)?.members.insert(agent.to_string());
        Ok(())
    }

    /// Leaves a workspace, dropping any observations inside it.
    pub fn leave(&mut self, agent: &str, workspace: &str) -> Result<()> {
        let ws = self.ws_mut(workspace)?;
        ws.members.remove(agent);
        for a in ws.artifacts.values_mut() {
            a.observers.remove(agent);
        }
        Ok(())
    }

    /// Starts observing an artifact. Percepts for every current property
    /// are returned for delivery; focusing twice is a no-op.
    pub fn focus(&mut self, agent: &str, workspace: &str, artifact: &str) -> Result<Vec<PerceptDelivery>> {
        let ws = self.ws_mut(workspace)?;
        if !ws.artifacts.contains_key(artifact) {
            return Err(MasError::not_found("artifact", format!("{workspace}/{artifact}")));
        }
        if !ws.members.contains(agent) {
            return Err(MasError::Precondition(format!(
                "agent `{agent}` must join workspace `{workspace}` before focusing"
            )));
        }
        let art = ws.artifacts.get_mut(artifact).expect("checked above");
        if !art.observers.insert(agent.to_string()) {
            return Ok(vec![]);
        }
        Ok(art
            .properties
            .iter()
            .map(|p| PerceptDelivery {
                agent: agent.to_string(),
                add: true,
                literal: p.clone(),
                workspace: workspace.to_string(),
                artifact: artifact.to_string(),
            })
            .collect())
    }

    pub fn unfocus(&mut self, agent: &str, workspace: &str, artifact: &str) -> Result<()> {
        let ws = self.ws_mut(workspace)?;
        let art = ws
            .artifacts
            .get_mut(artifact)
            .ok_or_else(|| MasError::not_found("artifact", format!("{workspace}/{artifact}")))?;
        art.observers.remove(agent);
        Ok(())
    }

    /// Drops every membership and observation held by `agent`.
    pub fn release_agent(&mut self, agent: &str) {
        for ws in self.workspaces.values_mut() {
            ws.members.remove(agent);
            for a in ws.artifacts.values_mut() {
                a.observers.remove(agent);
            }
        }
    }

    /// Runs operation `op` (e.g. `inc` or `add(5)`) on an artifact.
    pub fn invoke(&mut self, caller: &Caller, workspace: &str, artifact: &str, op: &Term) -> Result<Vec<PerceptDelivery>> {
        let ws = self.ws_mut(workspace)?;
        if let Caller::Agent(agent) = caller {
            if !ws.members.contains(agent) {
                return Err(MasError::Precondition(format!(
                    "agent `{agent}` is not a member of workspace `{workspace}`"
                )));
            }
        }
        let art = ws
            .artifacts
            .get_mut(artifact)
            .ok_or_else(|| MasError::not_found("artifact", format!("{workspace}/{artifact}")))?;
        let (op_name, args): (&str, &[Term]) = match op {
            Term::Atom(a) => (a, &[]),
            Term::Structure(f, args) => (f, args),
            other => return Err(MasError::OpFailure(format!("`{other}` does not name an operation"))),
        };
        let operation = art
            .template
            .operations
            .get(op_name)
            .ok_or_else(|| MasError::not_found("operation", format!("{artifact}.{op_name}")))?;
        if args.len() != operation.params.len() {
            return Err(MasError::OpFailure(format!(
                "operation `{op_name}` expects {} argument(s), got {}",
                operation.params.len(),
                args.len()
            )));
        }
        if let Some(a) = args.iter().find(|a| !a.is_ground()) {
            return Err(MasError::OpFailure(format!("argument `{a}` is not ground")));
        }
        let mut base = Substitution::new();
        for (p, a) in operation.params.iter().zip(args) {
            base.bind(p, a.clone());
        }
        let props: Vec<Term> = art.properties.iter().cloned().collect();
        for rule in &operation.rules {
            let Some((s, matched)) = find_match(rule, &props, &base) else { continue };
            let mut updates = BTreeSet::new();
            for u in &rule.update {
                let t = evaluate_term(u, &s).map_err(|e| MasError::OpFailure(format!("update `{u}`: {e}")))?;
                if !t.is_ground() {
                    return Err(MasError::OpFailure(format!("update `{t}` is not ground")));
                }
                updates.insert(t);
            }
            let mut next: BTreeSet<Term> =
                props.iter().enumerate().filter(|(i, _)| !matched.contains(i)).map(|(_, p)| p.clone()).collect();
            next.extend(updates);
            let removed: Vec<Term> = art.properties.difference(&next).cloned().collect();
            let added: Vec<Term> = next.difference(&art.properties).cloned().collect();
            art.properties = next;
            let mut out = Vec::new();
            for obs in &art.observers {
                let diff = removed.iter().map(|p| (false, p)).chain(added.iter().map(|p| (true, p)));
                for (add, p) in diff {
                    out.push(PerceptDelivery {
                        agent: obs.clone(),
                        add,
                        literal: p.clone(),
                        workspace: workspace.to_string(),
                        artifact: artifact.to_string(),
                    });
                }
            }
            return Ok(out);
        }
        Err(MasError::OpFailure("no rule applicable".to_string()))
    }

    pub fn artifact_view(&self, workspace: &str, artifact: &str) -> Result<ArtifactView> {
        let ws = self.workspaces.get(workspace).ok_or_else(|| MasError::not_found("workspace", workspace))?;
        let art = ws
            .artifacts
            .get(artifact)
            .ok_or_else(|| MasError::not_found("artifact", format!("{workspace}/{artifact}")))?;
        Ok(view_of(workspace, art))
    }

    pub fn workspace_view(&self, workspace: &str) -> Result<WorkspaceView> {
        let ws = self.workspaces.get(workspace).ok_or_else(|| MasError::not_found("workspace", workspace))?;
        Ok(WorkspaceView {
            name: ws.name.clone(),
            members: ws.members.iter().cloned().collect(),
            artifacts: ws.artifacts.values().map(|a| view_of(workspace, a)).collect(),
        })
    }
}

fn view_of(workspace: &str, art: &ArtifactInstance) -> ArtifactView {
    ArtifactView {
        name: art.name.clone(),
        workspace: workspace.to_string(),
        template: art.template.name.clone(),
        properties: art.properties.iter().map(Term::to_string).collect(),
        operations: art
            .template
            .operations
            .values()
            .map(|o| OperationSummary { name: o.name.clone(), params: o.params.clone() })
            .collect(),
        observers: art.observers.iter().cloned().collect(),
    }
}

/// First assignment of distinct properties to the rule's match patterns
/// (in pattern order, properties in set order) whose guard holds.
fn find_match(rule: &RewriteRule, props: &[Term], base: &Substitution) -> Option<(Substitution, Vec<usize>)> {
    fn go(
        rule: &RewriteRule,
        props: &[Term],
        k: usize,
        s: &Substitution,
        used: &mut Vec<usize>,
    ) -> Option<Substitution> {
        if k == rule.matches.len() {
            return match &rule.guard {
                None => Some(s.clone()),
                Some(Cond::Rel(op, l, r)) => test_relation(*op, l, r, s).ok().flatten(),
                Some(Cond::Lit(_)) => None,
            };
        }
        for (i, p) in props.iter().enumerate() {
            if used.contains(&i) {
                continue;
            }
            if let Some(s2) = unify(&rule.matches[k], p, s) {
                used.push(i);
                if let Some(found) = go(rule, props, k + 1, &s2, used) {
                    return Some(found);
                }
                used.pop();
            }
        }
        None
    }
    let mut used = Vec::new();
    go(rule, props, 0, base, &mut used).map(|s| (s, used))
}
