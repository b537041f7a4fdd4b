//! Groups with role cardinalities, schemes as AND/OR goal trees, missions
//! bound to roles by norms, and the obligations that follow from them.

mod spec;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

pub use spec::{CompiledOrg, GoalSpec, GoalTree, GoalType, GroupSpec, MissionSpec, NormSpec, OrgSpec, RoleSpec, SchemeSpec};

use crate::error::{MasError, Result};
use crate::term::Term;

/// An obligation belief to add to or remove from an agent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrgNote {
    pub agent: String,
    pub add: bool,
    pub literal: Term,
}

#[derive(Debug, Clone, Default)]
struct GroupInstance {
    /// (agent, role) in adoption order
    players: Vec<(String, String)>,
}

#[derive(Debug, Clone, Default)]
struct SchemeInstance {
    achieved: BTreeSet<String>,
    commitments: BTreeSet<(String, String)>,
}

/// (agent, scheme, mission, goal)
type ObligationKey = (String, String, String, String);

#[derive(Debug, Clone)]
pub struct Organisation {
    compiled: CompiledOrg,
    groups: BTreeMap<String, GroupInstance>,
    schemes: BTreeMap<String, SchemeInstance>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PlayerView {
    pub agent: String,
    pub role: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoleSlotView {
    pub name: String,
    pub min: u32,
    pub max: u32,
    pub players: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GroupView {
    pub name: String,
    pub organisation: String,
    pub roles: Vec<RoleSlotView>,
    pub players: Vec<PlayerView>,
    /// False while some role has fewer players than its minimum.
    pub well_formed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GoalView {
    pub id: String,
    #[serde(rename = "type")]
    pub kind: GoalType,
    pub children: Vec<String>,
    pub achieved: bool,
    pub satisfied: bool,
    pub enabled: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CommitmentView {
    pub agent: String,
    pub mission: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ObligationState {
    Active,
    Fulfilled,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ObligationView {
    pub agent: String,
    pub mission: String,
    pub goal: String,
    pub state: ObligationState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeStatus {
    Running,
    Completed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SchemeView {
    pub id: String,
    pub organisation: String,
    pub spec: String,
    pub root: String,
    pub status: SchemeStatus,
    pub goals: Vec<GoalView>,
    pub missions: Vec<MissionSpec>,
    pub commitments: Vec<CommitmentView>,
    pub obligations: Vec<ObligationView>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrgView {
    pub name: String,
    pub roles: Vec<RoleSpec>,
    pub norms: Vec<NormSpec>,
    pub groups: Vec<GroupView>,
    pub schemes: Vec<SchemeView>,
}

/// The organisational memberships of one agent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoleBinding {
    pub organisation: String,
    pub group: String,
    pub role: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MissionBinding {
    pub organisation: String,
    pub scheme: String,
    pub mission: String,
}

impl Organisation {
    /// One group instance per group spec and one scheme instance per scheme
    /// spec, named after their specs.
    pub fn new(compiled: CompiledOrg) -> Organisation {
        let groups = compiled.spec.groups.iter().map(|g| (g.name.clone(), GroupInstance::default())).collect();
        let schemes = compiled.spec.schemes.iter().map(|s| (s.name.clone(), SchemeInstance::default())).collect();
        Organisation { compiled, groups, schemes }
    }

    pub fn name(&self) -> &str {
        &self.compiled.spec.name
    }

    pub fn compiled(&self) -> &CompiledOrg {
        &self.compiled
    }

    pub fn group_names(&self) -> impl Iterator<Item = &String> {
        self.groups.keys()
    }

    pub fn scheme_names(&self) -> impl Iterator<Item = &String> {
        self.schemes.keys()
    }

    fn obligation_literal(&self, key: &ObligationKey) -> Term {
        let (_, scheme, mission, goal) = key;
        Term::structure(
            "obligation",
            vec![Term::atom(self.name()), Term::atom(scheme), Term::atom(mission), Term::atom(goal)],
        )
    }

    fn active_obligations(&self) -> BTreeSet<ObligationKey> {
        let mut out = BTreeSet::new();
        for (sname, inst) in &self.schemes {
            let tree = &self.compiled.trees[sname];
            for (agent, mission) in &inst.commitments {
                let Some(m) = self.compiled.mission(mission) else { continue };
                for goal in tree.enabled_among(&m.goals, &inst.achieved) {
                    out.insert((agent.clone(), sname.clone(), mission.clone(), goal.to_string()));
                }
            }
        }
        out
    }

    fn diff(&self, before: &BTreeSet<ObligationKey>) -> Vec<OrgNote> {
        let after = self.active_obligations();
        let removed = before.difference(&after).map(|k| (false, k));
        let added = after.difference(before).map(|k| (true, k));
        removed
            .chain(added)
            .map(|(add, k)| OrgNote { agent: k.0.clone(), add, literal: self.obligation_literal(k) })
            .collect()
    }

    pub fn plays(&self, agent: &str) -> bool {
        self.groups.values().any(|g| g.players.iter().any(|(a, _)| a == agent))
    }

    /// Adopts `role` in `group`. Norms on the role commit the agent to their
    /// missions; the returned notes carry any resulting obligations.
    pub fn adopt_role(&mut self, agent: &str, group: &str, role: &str) -> Result<Vec<OrgNote>> {
        let gspec = self
            .compiled
            .group(group)
            .ok_or_else(|| MasError::not_found("group", format!("{}/{group}", self.name())))?;
        if !gspec.roles.iter().any(|r| r == role) {
            return Err(MasError::not_found("role", format!("{}/{group}/{role}", self.name())));
        }
        let max = self.compiled.role(role).map(|r| r.max).unwrap_or(0);
        let inst = &self.groups[group];
        if inst.players.iter().any(|(a, r)| a == agent && r == role) {
            return Ok(vec![]);
        }
        let count = inst.players.iter().filter(|(_, r)| r == role).count();
        if count >= max as usize {
            return Err(MasError::CardinalityExceeded { group: group.to_string(), role: role.to_string(), max });
        }
        let before = self.active_obligations();
        self.groups.get_mut(group).expect("instance per group spec").players.push((agent.to_string(), role.to_string()));
        let missions: Vec<String> =
            self.compiled.spec.norms.iter().filter(|n| n.role == role).map(|n| n.mission.clone()).collect();
        for m in missions {
            let scheme = self.compiled.mission_scheme[&m].clone();
            self.schemes.get_mut(&scheme).expect("instance per scheme spec").commitments.insert((agent.to_string(), m));
        }
        Ok(self.diff(&before))
    }

    /// Commits to a mission directly; the agent must play some role here.
    pub fn commit_mission(&mut self, agent: &str, mission: &str) -> Result<Vec<OrgNote>> {
        let scheme = self
            .compiled
            .mission_scheme
            .get(mission)
            .cloned()
            .ok_or_else(|| MasError::not_found("mission", format!("{}/{mission}", self.name())))?;
        if !self.plays(agent) {
            return Err(MasError::Precondition(format!(
                "agent `{agent}` plays no role in organisation `{}`",
                self.name()
            )));
        }
        let before = self.active_obligations();
        self.schemes.get_mut(&scheme).expect("instance per scheme spec").commitments.insert((agent.to_string(), mission.to_string()));
        Ok(self.diff(&before))
    }

    pub fn set_goal_achieved(&mut self, agent: &str, scheme: &str, goal: &str) -> Result<Vec<OrgNote>> {
        let name = self.name().to_string();
        let tree = self
            .compiled
            .trees
            .get(scheme)
            .ok_or_else(|| MasError::not_found("scheme", format!("{name}/{scheme}")))?;
        match tree.kind(goal) {
            None => return Err(MasError::not_found("goal", format!("{name}/{scheme}/{goal}"))),
            Some(GoalType::Leaf) => {}
            Some(_) => return Err(MasError::Precondition(format!("goal `{goal}` is not a leaf"))),
        }
        let inst = &self.schemes[scheme];
        let committed = inst.commitments.iter().any(|(a, m)| {
            a == agent && self.compiled.mission(m).is_some_and(|ms| ms.goals.iter().any(|g| g == goal))
        });
        if !committed {
            return Err(MasError::NotCommitted { agent: agent.to_string(), goal: goal.to_string() });
        }
        let before = self.active_obligations();
        self.schemes.get_mut(scheme).expect("checked").achieved.insert(goal.to_string());
        Ok(self.diff(&before))
    }

    /// Removes a departed agent from every group and commitment.
    pub fn release_agent(&mut self, agent: &str) {
        for g in self.groups.values_mut() {
            g.players.retain(|(a, _)| a != agent);
        }
        for s in self.schemes.values_mut() {
            s.commitments.retain(|(a, _)| a != agent);
        }
    }

    /// Builds the organisation for a replacement spec, carrying over players,
    /// explicit commitments and achieved goals that remain valid. Returns the
    /// new organisation and the obligation changes relative to `self`.
    pub fn replaced_by(&self, compiled: CompiledOrg) -> (Organisation, Vec<OrgNote>) {
        let before = self.active_obligations();
        let mut next = Organisation::new(compiled);
        for (gname, g) in &self.groups {
            for (agent, role) in &g.players {
                let _ = next.adopt_role(agent, gname, role);
            }
        }
        for s in self.schemes.values() {
            for (agent, mission) in &s.commitments {
                let _ = next.commit_mission(agent, mission);
            }
        }
        for (sname, s) in &self.schemes {
            if let (Some(tree), Some(inst)) = (next.compiled.trees.get(sname), next.schemes.get_mut(sname)) {
                inst.achieved.extend(s.achieved.iter().filter(|g| tree.kind(g) == Some(GoalType::Leaf)).cloned());
            }
        }
        let notes = next.diff(&before);
        (next, notes)
    }

    pub fn is_completed(&self, scheme: &str) -> bool {
        match (self.compiled.trees.get(scheme), self.schemes.get(scheme)) {
            (Some(t), Some(i)) => t.evaluate(t.root(), &i.achieved),
            _ => false,
        }
    }

    pub fn roles_of(&self, agent: &str) -> Vec<RoleBinding> {
        let mut out = Vec::new();
        for (g, inst) in &self.groups {
            for (a, r) in &inst.players {
                if a == agent {
                    out.push(RoleBinding { organisation: self.name().to_string(), group: g.clone(), role: r.clone() });
                }
            }
        }
        out
    }

    pub fn missions_of(&self, agent: &str) -> Vec<MissionBinding> {
        let mut out = Vec::new();
        for (s, inst) in &self.schemes {
            for (a, m) in &inst.commitments {
                if a == agent {
                    out.push(MissionBinding {
                        organisation: self.name().to_string(),
                        scheme: s.clone(),
                        mission: m.clone(),
                    });
                }
            }
        }
        out
    }

    pub fn group_view(&self, group: &str) -> Result<GroupView> {
        let gspec = self
            .compiled
            .group(group)
            .ok_or_else(|| MasError::not_found("group", format!("{}/{group}", self.name())))?;
        let inst = &self.groups[group];
        let roles: Vec<RoleSlotView> = gspec
            .roles
            .iter()
            .map(|r| {
                let rs = self.compiled.role(r).expect("validated");
                RoleSlotView {
                    name: r.clone(),
                    min: rs.min,
                    max: rs.max,
                    players: inst.players.iter().filter(|(_, pr)| pr == r).map(|(a, _)| a.clone()).collect(),
                }
            })
            .collect();
        let well_formed = roles.iter().all(|r| r.players.len() >= r.min as usize);
        Ok(GroupView {
            name: group.to_string(),
            organisation: self.name().to_string(),
            roles,
            players: inst.players.iter().map(|(a, r)| PlayerView { agent: a.clone(), role: r.clone() }).collect(),
            well_formed,
        })
    }

    pub fn scheme_view(&self, scheme: &str) -> Result<SchemeView> {
        let sspec = self
            .compiled
            .spec
            .schemes
            .iter()
            .find(|s| s.name == scheme)
            .ok_or_else(|| MasError::not_found("scheme", format!("{}/{scheme}", self.name())))?;
        let tree = &self.compiled.trees[scheme];
        let inst = &self.schemes[scheme];
        let goals = tree
            .goals()
            .map(|g| GoalView {
                id: g.to_string(),
                kind: tree.kind(g).expect("own goal"),
                children: tree.children(g).into_iter().map(String::from).collect(),
                achieved: inst.achieved.contains(g),
                satisfied: tree.evaluate(g, &inst.achieved),
                enabled: tree.is_enabled(g, &inst.achieved),
            })
            .collect();
        let mut obligations = Vec::new();
        for (agent, mission) in &inst.commitments {
            let Some(m) = self.compiled.mission(mission) else { continue };
            for goal in &m.goals {
                let state = if inst.achieved.contains(goal) {
                    ObligationState::Fulfilled
                } else if tree.is_enabled(goal, &inst.achieved) {
                    ObligationState::Active
                } else {
                    continue;
                };
                obligations.push(ObligationView {
                    agent: agent.clone(),
                    mission: mission.clone(),
                    goal: goal.clone(),
                    state,
                });
            }
        }
        Ok(SchemeView {
            id: scheme.to_string(),
            organisation: self.name().to_string(),
            spec: sspec.name.clone(),
            root: tree.root().to_string(),
            status: if self.is_completed(scheme) { SchemeStatus::Completed } else { SchemeStatus::Running },
            goals,
            missions: sspec.missions.clone(),
            commitments: inst
                .commitments
                .iter()
                .map(|(a, m)| CommitmentView { agent: a.clone(), mission: m.clone() })
                .collect(),
            obligations,
        })
    }

    pub fn view(&self) -> OrgView {
        OrgView {
            name: self.name().to_string(),
            roles: self.compiled.spec.roles.clone(),
            norms: self.compiled.spec.norms.clone(),
            groups: self.groups.keys().map(|g| self.group_view(g).expect("own group")).collect(),
            schemes: self.schemes.keys().map(|s| self.scheme_view(s).expect("own scheme")).collect(),
        }
    }
}
