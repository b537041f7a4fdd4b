use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{MasError, Result};
use crate::term::{is_atom_name, is_resource_name};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrgSpec {
    pub name: String,
    #[serde(default)]
    pub roles: Vec<RoleSpec>,
    #[serde(default)]
    pub groups: Vec<GroupSpec>,
    #[serde(default)]
    pub schemes: Vec<SchemeSpec>,
    #[serde(default)]
    pub norms: Vec<NormSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoleSpec {
    pub name: String,
    #[serde(default)]
    pub min: u32,
    pub max: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub name: String,
    pub roles: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormSpec {
    pub role: String,
    pub mission: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GoalType {
    And,
    Or,
    Leaf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalSpec {
    pub id: String,
    #[serde(rename = "type")]
    pub kind: GoalType,
    #[serde(default)]
    pub children: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissionSpec {
    pub name: String,
    pub goals: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSpec {
    pub name: String,
    pub root: String,
    pub goals: Vec<GoalSpec>,
    #[serde(default)]
    pub missions: Vec<MissionSpec>,
}

#[derive(Debug, Clone)]
struct Node {
    id: String,
    kind: GoalType,
    children: Vec<usize>,
    parent: Option<usize>,
}

/// A validated AND/OR goal tree.
///
/// AND children are enabled one after the other, left to right; OR
/// children are enabled together until one of them is satisfied.
#[derive(Debug, Clone)]
pub struct GoalTree {
    nodes: Vec<Node>,
    index: BTreeMap<String, usize>,
    root: usize,
}

fn invalid(msg: String) -> MasError {
    MasError::InvalidSpec(msg)
}

impl GoalTree {
    pub fn build(root: &str, goals: &[GoalSpec]) -> Result<GoalTree> {
        let mut index = BTreeMap::new();
        for (i, g) in goals.iter().enumerate() {
            if !is_atom_name(&g.id) {
                return Err(invalid(format!("goal id `{}` is not an identifier", g.id)));
            }
            if index.insert(g.id.clone(), i).is_some() {
                return Err(invalid(format!("goal `{}` declared twice", g.id)));
            }
        }
        let mut nodes: Vec<Node> =
            goals.iter().map(|g| Node { id: g.id.clone(), kind: g.kind, children: vec![], parent: None }).collect();
        for (i, g) in goals.iter().enumerate() {
            match g.kind {
                GoalType::Leaf if !g.children.is_empty() => {
                    return Err(invalid(format!("leaf goal `{}` has children", g.id)))
                }
                GoalType::And | GoalType::Or if g.children.is_empty() => {
                    return Err(invalid(format!("goal `{}` needs at least one child", g.id)))
                }
                _ => {}
            }
            for c in &g.children {
                let ci = *index.get(c).ok_or_else(|| invalid(format!("goal `{}` refers to unknown goal `{c}`", g.id)))?;
                if nodes[ci].parent.is_some() {
                    return Err(invalid(format!("goal `{c}` has more than one parent")));
                }
                nodes[ci].parent = Some(i);
                nodes[i].children.push(ci);
            }
        }
        let root_idx = *index.get(root).ok_or_else(|| invalid(format!("root goal `{root}` is not declared")))?;
        if nodes[root_idx].parent.is_some() {
            return Err(invalid(format!("root goal `{root}` has a parent (goal cycle)")));
        }
        // every node reachable from the root exactly once; anything else is a cycle or a detached goal
        let mut seen = vec![false; nodes.len()];
        let mut stack = vec![root_idx];
        while let Some(n) = stack.pop() {
            if std::mem::replace(&mut seen[n], true) {
                return Err(invalid(format!("goal cycle through `{}`", nodes[n].id)));
            }
            stack.extend(nodes[n].children.iter().copied());
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(invalid(format!("goal `{}` is not reachable from the root (cycle or detached)", nodes[i].id)));
        }
        Ok(GoalTree { nodes, index, root: root_idx })
    }

    pub fn root(&self) -> &str {
        &self.nodes[self.root].id
    }

    pub fn contains(&self, goal: &str) -> bool {
        self.index.contains_key(goal)
    }

    pub fn kind(&self, goal: &str) -> Option<GoalType> {
        self.index.get(goal).map(|&i| self.nodes[i].kind)
    }

    pub fn children(&self, goal: &str) -> Vec<&str> {
        self.index
            .get(goal)
            .map(|&i| self.nodes[i].children.iter().map(|&c| self.nodes[c].id.as_str()).collect())
            .unwrap_or_default()
    }

    /// Goal ids in declaration order.
    pub fn goals(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(|n| n.id.as_str())
    }

    fn eval_idx(&self, i: usize, achieved: &BTreeSet<String>) -> bool {
        let n = &self.nodes[i];
        match n.kind {
            GoalType::Leaf => achieved.contains(&n.id),
            GoalType::And => n.children.iter().all(|&c| self.eval_idx(c, achieved)),
            GoalType::Or => n.children.iter().any(|&c| self.eval_idx(c, achieved)),
        }
    }

    /// Satisfaction of `goal` given the achieved leaves; unknown goals are false.
    pub fn evaluate(&self, goal: &str, achieved: &BTreeSet<String>) -> bool {
        self.index.get(goal).is_some_and(|&i| self.eval_idx(i, achieved))
    }

    /// Whether an unachieved leaf may be worked on now.
    pub fn is_enabled(&self, goal: &str, achieved: &BTreeSet<String>) -> bool {
        let Some(&i) = self.index.get(goal) else { return false };
        if self.nodes[i].kind != GoalType::Leaf || achieved.contains(goal) {
            return false;
        }
        let mut child = i;
        while let Some(p) = self.nodes[child].parent {
            let parent = &self.nodes[p];
            let ok = match parent.kind {
                GoalType::And => parent
                    .children
                    .iter()
                    .take_while(|&&c| c != child)
                    .all(|&c| self.eval_idx(c, achieved)),
                GoalType::Or => !self.eval_idx(p, achieved),
                GoalType::Leaf => unreachable!("leaves have no children"),
            };
            if !ok {
                return false;
            }
            child = p;
        }
        true
    }

    /// Enabled leaves among `goals`, in the given order.
    pub fn enabled_among<'a>(&self, goals: &'a [String], achieved: &BTreeSet<String>) -> Vec<&'a str> {
        goals.iter().filter(|g| self.is_enabled(g, achieved)).map(String::as_str).collect()
    }
}

/// An organisation specification that passed validation.
#[derive(Debug, Clone)]
pub struct CompiledOrg {
    pub spec: OrgSpec,
    pub trees: BTreeMap<String, GoalTree>,
    /// mission name -> scheme name
    pub mission_scheme: BTreeMap<String, String>,
}

impl CompiledOrg {
    pub fn compile(spec: OrgSpec) -> Result<CompiledOrg> {
        if !is_resource_name(&spec.name) {
            return Err(invalid(format!("organisation name `{}` must match [a-z][a-z0-9_]*", spec.name)));
        }
        let mut roles = BTreeSet::new();
        for r in &spec.roles {
            if !is_resource_name(&r.name) {
                return Err(invalid(format!("role name `{}` must match [a-z][a-z0-9_]*", r.name)));
            }
            if !roles.insert(r.name.as_str()) {
                return Err(invalid(format!("role `{}` declared twice", r.name)));
            }
            if r.min > r.max {
                return Err(invalid(format!("role `{}` has min {} greater than max {}", r.name, r.min, r.max)));
            }
        }
        let mut groups = BTreeSet::new();
        for g in &spec.groups {
            if !is_resource_name(&g.name) {
                return Err(invalid(format!("group name `{}` must match [a-z][a-z0-9_]*", g.name)));
            }
            if !groups.insert(g.name.as_str()) {
                return Err(invalid(format!("group `{}` declared twice", g.name)));
            }
            for r in &g.roles {
                if !roles.contains(r.as_str()) {
                    return Err(invalid(format!("group `{}` refers to unknown role `{r}`", g.name)));
                }
            }
        }
        let mut trees = BTreeMap::new();
        let mut mission_scheme = BTreeMap::new();
        for s in &spec.schemes {
            if !is_resource_name(&s.name) {
                return Err(invalid(format!("scheme name `{}` must match [a-z][a-z0-9_]*", s.name)));
            }
            let tree = GoalTree::build(&s.root, &s.goals)
                .map_err(|e| invalid(format!("scheme `{}`: {}", s.name, strip(e))))?;
            for m in &s.missions {
                if !is_atom_name(&m.name) {
                    return Err(invalid(format!("mission name `{}` is not an identifier", m.name)));
                }
                if mission_scheme.insert(m.name.clone(), s.name.clone()).is_some() {
                    return Err(invalid(format!("mission `{}` declared twice", m.name)));
                }
                for g in &m.goals {
                    match tree.kind(g) {
                        None => return Err(invalid(format!("mission `{}` refers to unknown goal `{g}`", m.name))),
                        Some(GoalType::Leaf) => {}
                        Some(_) => return Err(invalid(format!("mission `{}` goal `{g}` is not a leaf", m.name))),
                    }
                }
            }
            if trees.insert(s.name.clone(), tree).is_some() {
                return Err(invalid(format!("scheme `{}` declared twice", s.name)));
            }
        }
        for n in &spec.norms {
            if !roles.contains(n.role.as_str()) {
                return Err(invalid(format!("norm refers to unknown role `{}`", n.role)));
            }
            if !mission_scheme.contains_key(&n.mission) {
                return Err(invalid(format!("norm refers to unknown mission `{}`", n.mission)));
            }
        }
        Ok(CompiledOrg { spec, trees, mission_scheme })
    }

    pub fn role(&self, name: &str) -> Option<&RoleSpec> {
        self.spec.roles.iter().find(|r| r.name == name)
    }

    pub fn group(&self, name: &str) -> Option<&GroupSpec> {
        self.spec.groups.iter().find(|g| g.name == name)
    }

    pub fn mission(&self, name: &str) -> Option<&MissionSpec> {
        let scheme = self.mission_scheme.get(name)?;
        self.spec.schemes.iter().find(|s| &s.name == scheme)?.missions.iter().find(|m| m.name == name)
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string_pretty(&self.spec).expect("org specs serialize")
    }
}

fn strip(e: MasError) -> String {
    match e {
        MasError::InvalidSpec(m) => m,
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(id: &str, kind: GoalType, children: &[&str]) -> GoalSpec {
        GoalSpec { id: id.into(), kind, children: children.iter().map(|c| c.to_string()).collect() }
    }

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn and_is_sequential() {
        let t = GoalTree::build(
            "r",
            &[g("r", GoalType::And, &["a", "b"]), g("a", GoalType::Leaf, &[]), g("b", GoalType::Leaf, &[])],
        )
        .unwrap();
        let goals = vec!["a".to_string(), "b".to_string()];
        assert_eq!(t.enabled_among(&goals, &set(&[])), vec!["a"]);
        assert_eq!(t.enabled_among(&goals, &set(&["a"])), vec!["b"]);
        assert!(!t.evaluate("r", &set(&["a"])));
        assert!(t.evaluate("r", &set(&["a", "b"])));
    }

    #[test]
    fn or_is_concurrent() {
        let t = GoalTree::build(
            "r",
            &[g("r", GoalType::Or, &["a", "b"]), g("a", GoalType::Leaf, &[]), g("b", GoalType::Leaf, &[])],
        )
        .unwrap();
        let goals = vec!["a".to_string(), "b".to_string()];
        assert_eq!(t.enabled_among(&goals, &set(&[])), vec!["a", "b"]);
        assert!(t.evaluate("r", &set(&["b"])));
        assert!(t.enabled_among(&goals, &set(&["b"])).is_empty());
    }

    #[test]
    fn mixed_tree() {
        let t = GoalTree::build(
            "r",
            &[
                g("r", GoalType::And, &["a", "o"]),
                g("a", GoalType::Leaf, &[]),
                g("o", GoalType::Or, &["b", "c"]),
                g("b", GoalType::Leaf, &[]),
                g("c", GoalType::Leaf, &[]),
            ],
        )
        .unwrap();
        assert!(t.evaluate("r", &set(&["a", "c"])));
        assert!(!t.evaluate("r", &set(&[])));
        assert!(!t.is_enabled("b", &set(&[])));
        assert!(t.is_enabled("b", &set(&["a"])));
    }

    #[test]
    fn malformed_trees() {
        let cyc = GoalTree::build(
            "r",
            &[g("r", GoalType::And, &["a"]), g("a", GoalType::And, &["b"]), g("b", GoalType::Or, &["a"])],
        );
        assert!(cyc.is_err());
        let self_loop = GoalTree::build("r", &[g("r", GoalType::And, &["r"])]);
        assert!(self_loop.is_err());
        let dangling = GoalTree::build("r", &[g("r", GoalType::And, &["zz"])]);
        assert!(dangling.is_err());
        let empty_and = GoalTree::build("r", &[g("r", GoalType::And, &[])]);
        assert!(empty_and.is_err());
        let two_parents = GoalTree::build(
            "r",
            &[g("r", GoalType::And, &["a", "x"]), g("x", GoalType::Or, &["a"]), g("a", GoalType::Leaf, &[])],
        );
        assert!(two_parents.is_err());
        let detached = GoalTree::build("r", &[g("r", GoalType::Leaf, &[]), g("z", GoalType::Leaf, &[])]);
        assert!(detached.is_err());
    }
}
