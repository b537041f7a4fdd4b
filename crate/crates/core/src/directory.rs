//! Yellow-pages registry mapping service labels to the agents providing them.

use std::collections::{BTreeMap, BTreeSet};

/// A directory mutation, as logged or replayed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DirectoryOp {
    Register { agent: String, service: String },
    Deregister { agent: String, service: String },
    /// Remove an agent from every entry (agent killed).
    Prune { agent: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Directory {
    services: BTreeMap<String, BTreeSet<String>>,
}

impl Directory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, agent: &str, service: &str) {
        self.services.entry(service.to_string()).or_default().insert(agent.to_string());
    }

    pub fn deregister(&mut self, agent: &str, service: &str) {
        if let Some(providers) = self.services.get_mut(service) {
            providers.remove(agent);
            if providers.is_empty() {
                self.services.remove(service);
            }
        }
    }

    pub fn prune(&mut self, agent: &str) {
        self.services.retain(|_, providers| {
            providers.remove(agent);
            !providers.is_empty()
        });
    }

    pub fn apply(&mut self, op: &DirectoryOp) {
        match op {
            DirectoryOp::Register { agent, service } => self.register(agent, service),
            DirectoryOp::Deregister { agent, service } => self.deregister(agent, service),
            DirectoryOp::Prune { agent } => self.prune(agent),
        }
    }

    /// Providers of one service; empty when nobody offers it.
    pub fn lookup(&self, service: &str) -> BTreeSet<String> {
        self.services.get(service).cloned().unwrap_or_default()
    }

    pub fn all(&self) -> &BTreeMap<String, BTreeSet<String>> {
        &self.services
    }
}
