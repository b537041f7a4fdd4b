//! JSON project documents: everything needed to boot a system in one file.
//!
//! [`Project::load`] runs every check and reports all problems at once;
//! [`Project::boot`] then builds the system in dependency order, leaving the
//! scheduler paused so nothing runs before the caller says so.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::environment::{ArtifactTemplate, TemplateDoc};
use crate::error::Result;
use crate::organisation::{CompiledOrg, OrgSpec};
use crate::revision::RevisionStore;
use crate::system::Mas;
use crate::term::{is_atom_name, parse_plan_library};

/// One validation problem, located as precisely as the source allows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub file: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.file)?;
        if let Some(l) = self.line {
            write!(f, ":{l}")?;
            if let Some(c) = self.column {
                write!(f, ":{c}")?;
            }
        }
        write!(f, ": {}", self.message)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProjectDoc {
    name: String,
    #[serde(default)]
    agents: Vec<AgentEntry>,
    #[serde(default)]
    artifact_templates: Vec<serde_json::Value>,
    #[serde(default)]
    workspaces: Vec<WorkspaceEntry>,
    #[serde(default)]
    organisations: Vec<serde_json::Value>,
    #[serde(default)]
    http: HttpConfig,
    #[serde(default)]
    persistence: PersistenceConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AgentEntry {
    name: String,
    #[serde(default = "empty_source")]
    source: SourceRef,
}

fn empty_source() -> SourceRef {
    SourceRef::Inline(String::new())
}

/// Plan text given inline or as `{"file": path}` relative to the project.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum SourceRef {
    Inline(String),
    File { file: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkspaceEntry {
    pub name: String,
    #[serde(default)]
    pub artifacts: Vec<ArtifactEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArtifactEntry {
    pub name: String,
    pub template: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HttpConfig {
    #[serde(default = "default_port")]
    pub port: u16,
    #[serde(default = "default_bind")]
    pub bind: String,
}

fn default_port() -> u16 {
    8080
}

fn default_bind() -> String {
    "127.0.0.1".into()
}

impl Default for HttpConfig {
    fn default() -> Self {
        HttpConfig { port: default_port(), bind: default_bind() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PersistenceMode {
    #[default]
    Memory,
    File,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PersistenceConfig {
    #[serde(default)]
    pub mode: PersistenceMode,
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentDef {
    pub name: String,
    pub source: String,
}

/// A validated project with every file reference resolved.
#[derive(Debug, Clone)]
pub struct Project {
    pub name: String,
    pub agents: Vec<AgentDef>,
    pub templates: Vec<TemplateDoc>,
    pub workspaces: Vec<WorkspaceEntry>,
    pub organisations: Vec<OrgSpec>,
    pub http: HttpConfig,
    pub persistence: PersistenceConfig,
    /// Directory relative paths were resolved against.
    pub base_dir: PathBuf,
}

struct Checker {
    diags: Vec<Diagnostic>,
}

impl Checker {
    fn error(&mut self, file: &str, message: impl Into<String>) {
        self.diags.push(Diagnostic { file: file.to_string(), line: None, column: None, message: message.into() });
    }

    fn located(&mut self, file: &str, line: usize, column: usize, message: impl Into<String>) {
        self.diags.push(Diagnostic { file: file.to_string(), line: Some(line), column: Some(column), message: message.into() });
    }

    fn json<T: serde::de::DeserializeOwned>(&mut self, file: &str, text: &str) -> Option<T> {
        match serde_json::from_str(text) {
            Ok(v) => Some(v),
            Err(e) => {
                self.located(file, e.line(), e.column(), e.to_string());
                None
            }
        }
    }

    fn read(&mut self, base: &Path, path: &Path) -> Option<(String, String)> {
        let full = base.join(path);
        let label = full.display().to_string();
        match std::fs::read_to_string(&full) {
            Ok(text) => Some((label, text)),
            Err(e) => {
                self.error(&label, format!("cannot read file: {e}"));
                None
            }
        }
    }

    /// A document given inline, or as a string path to a JSON file.
    fn inline<T: serde::de::DeserializeOwned>(
        &mut self,
        project: &str,
        base: &Path,
        entry: serde_json::Value,
    ) -> Option<(String, T)> {
        match entry {
            serde_json::Value::String(p) => {
                let (label, text) = self.read(base, Path::new(&p))?;
                let doc = self.json(&label, &text)?;
                Some((label, doc))
            }
            other => match serde_json::from_value(other) {
                Ok(d) => Some((project.to_string(), d)),
                Err(e) => {
                    self.error(project, e.to_string());
                    None
                }
            },
        }
    }
}

fn note_duplicate(seen: &mut BTreeSet<String>, c: &mut Checker, file: &str, kind: &str, name: &str) {
    if !seen.insert(name.to_string()) {
        c.error(file, format!("duplicate {kind} name `{name}`"));
    }
}

impl Project {
    pub fn load(path: impl AsRef<Path>) -> std::result::Result<Project, Vec<Diagnostic>> {
        let path = path.as_ref();
        let label = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| {
            vec![Diagnostic { file: label.clone(), line: None, column: None, message: format!("cannot read file: {e}") }]
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Project::parse(&text, &label, &base)
    }

    /// Validates project text; relative paths resolve against `base_dir`.
    pub fn parse(text: &str, label: &str, base_dir: &Path) -> std::result::Result<Project, Vec<Diagnostic>> {
        let mut c = Checker { diags: Vec::new() };
        let Some(doc) = c.json::<ProjectDoc>(label, text) else { return Err(c.diags) };

        let mut templates = Vec::new();
        let mut template_names = BTreeSet::new();
        for entry in doc.artifact_templates {
            let Some((file, t)) = c.inline::<TemplateDoc>(label, base_dir, entry) else { continue };
            note_duplicate(&mut template_names, &mut c, &file, "template", &t.name);
            match ArtifactTemplate::from_doc(t.clone()) {
                Ok(_) => templates.push(t),
                Err(e) => c.error(&file, format!("template `{}`: {e}", t.name)),
            }
        }

        let mut ws_names = BTreeSet::new();
        for w in &doc.workspaces {
            note_duplicate(&mut ws_names, &mut c, label, "workspace", &w.name);
            if !is_atom_name(&w.name) {
                c.error(label, format!("workspace name `{}` is not an atom", w.name));
            }
            let mut art_names = BTreeSet::new();
            for a in &w.artifacts {
                note_duplicate(&mut art_names, &mut c, label, &format!("artifact in workspace `{}`", w.name), &a.name);
                if !is_atom_name(&a.name) {
                    c.error(label, format!("artifact name `{}` is not an atom", a.name));
                }
                if !template_names.contains(&a.template) {
                    c.error(label, format!("artifact `{}` references unknown template `{}`", a.name, a.template));
                }
            }
        }

        let mut organisations = Vec::new();
        let mut org_names = BTreeSet::new();
        for entry in doc.organisations {
            let Some((file, spec)) = c.inline::<OrgSpec>(label, base_dir, entry) else { continue };
            note_duplicate(&mut org_names, &mut c, &file, "organisation", &spec.name);
            match CompiledOrg::compile(spec.clone()) {
                Ok(_) => organisations.push(spec),
                Err(e) => c.error(&file, format!("organisation `{}`: {e}", spec.name)),
            }
        }

        let mut agents = Vec::new();
        let mut agent_names = BTreeSet::new();
        for a in doc.agents {
            note_duplicate(&mut agent_names, &mut c, label, "agent", &a.name);
            if !is_atom_name(&a.name) {
                c.error(label, format!("agent name `{}` is not an atom", a.name));
            }
            let (file, source) = match a.source {
                SourceRef::Inline(s) => (label.to_string(), s),
                SourceRef::File { file } => match c.read(base_dir, &file) {
                    Some(read) => read,
                    None => continue,
                },
            };
            match parse_plan_library(&source) {
                Ok(_) => agents.push(AgentDef { name: a.name, source }),
                Err(e) => c.located(&file, e.line, e.column, format!("agent `{}`: {e}", a.name)),
            }
        }

        if doc.persistence.mode == PersistenceMode::File && doc.persistence.dir.is_none() {
            c.error(label, "file persistence needs a `dir`");
        }

        if !c.diags.is_empty() {
            return Err(c.diags);
        }
        let mut persistence = doc.persistence;
        persistence.dir = persistence.dir.map(|d| base_dir.join(d));
        Ok(Project {
            name: doc.name,
            agents,
            templates,
            workspaces: doc.workspaces,
            organisations,
            http: doc.http,
            persistence,
            base_dir: base_dir.to_path_buf(),
        })
    }

    /// The revision store the project asks for; `dir_override` forces file
    /// persistence in that directory.
    pub fn revision_store(&self, dir_override: Option<&Path>) -> Result<RevisionStore> {
        match (dir_override, self.persistence.mode, &self.persistence.dir) {
            (Some(d), _, _) => RevisionStore::open(d),
            (None, PersistenceMode::File, Some(d)) => RevisionStore::open(d),
            _ => Ok(RevisionStore::in_memory()),
        }
    }

    /// Builds the system: templates, then workspaces and artifacts, then
    /// organisations, then agents. The scheduler is left paused.
    pub fn boot(&self, store: RevisionStore) -> Result<Mas> {
        let mas = Mas::new(store);
        let built = self.populate(&mas);
        if built.is_err() {
            mas.shutdown();
        }
        built.map(|()| mas)
    }

    fn populate(&self, mas: &Mas) -> Result<()> {
        for t in &self.templates {
            mas.create_template(t.clone())?;
        }
        for w in &self.workspaces {
            mas.create_workspace(&w.name)?;
            for a in &w.artifacts {
                mas.instantiate(&w.name, &a.name, &a.template)?;
            }
        }
        for o in &self.organisations {
            mas.create_org(o.clone())?;
        }
        for a in &self.agents {
            mas.spawn_agent(&a.name, &a.source)?;
        }
        Ok(())
    }
}
