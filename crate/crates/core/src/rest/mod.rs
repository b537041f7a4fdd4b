//! Hypermedia REST surface over a [`Mas`].
//!
//! [`Api::handle`] is transport independent: it maps a method, path, query
//! and body onto a status, headers and a JSON body. The axum adapter in
//! [`http`] is a thin shim around it, and tests drive `handle` directly.

pub mod http;
pub mod routes;
pub mod walk;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::environment::TemplateDoc;
use crate::error::MasError;
use crate::organisation::OrgSpec;
use crate::revision::{Bump, RevisionRecord};
use crate::system::{org_entity, plans_entity, template_entity, Mas};
use routes::{allow, match_route, Route, RouteId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Request {
    pub method: String,
    pub path: String,
    pub query: Vec<(String, String)>,
    pub body: Vec<u8>,
}

impl Request {
    pub fn new(method: &str, target: &str, body: impl Into<Vec<u8>>) -> Request {
        let (path, query) = match target.split_once('?') {
            Some((p, q)) => (p, form_urlencoded::parse(q.as_bytes()).into_owned().collect()),
            None => (target, Vec::new()),
        };
        Request { method: method.to_ascii_uppercase(), path: path.to_string(), query, body: body.into() }
    }

    pub fn get(target: &str) -> Request {
        Request::new("GET", target, Vec::new())
    }

    fn query(&self, key: &str) -> Option<&str> {
        self.query.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Response {
    pub status: u16,
    pub headers: Vec<(String, String)>,
    pub body: Option<Value>,
}

impl Response {
    fn json(status: u16, body: Value) -> Response {
        Response { status, headers: Vec::new(), body: Some(body) }
    }

    fn no_content() -> Response {
        Response { status: 204, headers: Vec::new(), body: None }
    }

    fn with_header(mut self, name: &str, value: impl Into<String>) -> Response {
        self.headers.push((name.to_string(), value.into()));
        self
    }

    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers.iter().find(|(k, _)| k.eq_ignore_ascii_case(name)).map(|(_, v)| v.as_str())
    }

    /// Serialized body bytes; empty for 204.
    pub fn body_bytes(&self) -> Vec<u8> {
        match &self.body {
            Some(v) => serde_json::to_vec(v).expect("json values serialize"),
            None => Vec::new(),
        }
    }
}

/// Error payload and status in one place.
#[derive(Debug)]
pub struct ApiError {
    pub status: u16,
    pub code: &'static str,
    pub message: String,
    pub detail: Option<Value>,
}

impl ApiError {
    fn new(status: u16, code: &'static str, message: impl Into<String>) -> ApiError {
        ApiError { status, code, message: message.into(), detail: None }
    }

    fn bad_request(message: impl Into<String>) -> ApiError {
        ApiError::new(400, "bad_request", message)
    }

    fn into_response(self) -> Response {
        let mut body = json!({ "status": self.status, "code": self.code, "message": self.message });
        if let Some(d) = self.detail {
            body["detail"] = d;
        }
        Response::json(self.status, body)
    }
}

impl From<MasError> for ApiError {
    fn from(e: MasError) -> ApiError {
        let message = e.to_string();
        let (status, code, detail) = match &e {
            MasError::NotFound { kind, name } => (404, "not_found", Some(json!({ "kind": kind, "name": name }))),
            MasError::Conflict { kind, name } => (409, "conflict", Some(json!({ "kind": kind, "name": name }))),
            MasError::Parse(p) => (
                400,
                "parse_error",
                Some(json!({ "line": p.line, "column": p.column, "expected": p.expected, "found": p.found })),
            ),
            MasError::InvalidSpec(_) => (400, "invalid_spec", None),
            MasError::UnsupportedPerformative(p) => (422, "unsupported_performative", Some(json!({ "performative": p }))),
            MasError::Precondition(_) => (409, "precondition_failed", None),
            MasError::CardinalityExceeded { group, role, max } => {
                (409, "cardinality_exceeded", Some(json!({ "group": group, "role": role, "max": max })))
            }
            MasError::NotCommitted { agent, goal } => (409, "not_committed", Some(json!({ "agent": agent, "goal": goal }))),
            MasError::OpFailure(_) => (409, "operation_failed", None),
            MasError::Io(_) => (500, "io_error", None),
        };
        ApiError { status, code, message, detail }
    }
}

type ApiResult = Result<Response, ApiError>;

/// Link object with the target's allowed methods taken from the route table.
pub fn link(rel: &str, href: &str) -> Value {
    let methods: Vec<&str> = route_of(href).map(|r| r.methods.to_vec()).unwrap_or_default();
    json!({ "rel": rel, "href": href, "methods": methods })
}

/// Route of an href, ignoring any query string.
pub fn route_of(href: &str) -> Option<&'static Route> {
    let path = href.split_once('?').map_or(href, |(p, _)| p);
    match_route(path).map(|(r, _)| r)
}

fn links(pairs: &[(&str, String)]) -> Value {
    Value::Array(pairs.iter().map(|(rel, href)| link(rel, href)).collect())
}

/// `Link` header value for collection responses, whose bodies are bare
/// arrays. Methods are space separated so the value stays comma-splittable.
fn link_header(pairs: &[(&str, String)]) -> String {
    pairs
        .iter()
        .map(|(rel, href)| {
            let methods = route_of(href).map(|r| r.methods.join(" ")).unwrap_or_default();
            format!("<{href}>; rel=\"{rel}\"; methods=\"{methods}\"")
        })
        .collect::<Vec<_>>()
        .join(", ")
}

/// Parses a `Link` header produced by this API into `(rel, href, methods)`.
pub fn parse_link_header(value: &str) -> Vec<(String, String, Vec<String>)> {
    value
        .split(", <")
        .filter_map(|part| {
            let part = part.trim_start_matches('<');
            let (href, rest) = part.split_once('>')?;
            let attr = |name: &str| {
                rest.split(';').map(str::trim).find_map(|kv| {
                    kv.strip_prefix(name).and_then(|v| v.strip_prefix("=\"")).and_then(|v| v.strip_suffix('"'))
                })
            };
            let rel = attr("rel")?.to_string();
            let methods = attr("methods").unwrap_or("").split_whitespace().map(str::to_string).collect();
            Some((rel, href.to_string(), methods))
        })
        .collect()
}

fn with_links(value: impl serde::Serialize, pairs: &[(&str, String)]) -> Value {
    let mut v = serde_json::to_value(value).expect("views serialize");
    if let Value::Object(m) = &mut v {
        m.insert("links".into(), links(pairs));
    }
    v
}

fn collection(items: Vec<Value>, pairs: &[(&str, String)]) -> Response {
    Response::json(200, Value::Array(items)).with_header("Link", link_header(pairs))
}

fn created(location: String, body: Value) -> Response {
    Response::json(201, body).with_header("Location", location)
}

fn parse_json<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed request body: {e}")))
}

fn bump_of(req: &Request) -> Result<Bump, ApiError> {
    match req.query("bump") {
        None => Ok(Bump::Patch),
        Some(b) => b.parse().map_err(ApiError::bad_request),
    }
}

fn numeric_id(raw: &str, kind: &'static str) -> Result<u64, ApiError> {
    raw.parse().map_err(|_| MasError::not_found(kind, raw).into())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewAgent {
    name: String,
    #[serde(default, alias = "source")]
    plans: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PlansBody {
    source: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewMessage {
    #[serde(default = "external_sender")]
    sender: String,
    performative: String,
    content: String,
}

fn external_sender() -> String {
    "external".into()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewCommand {
    body: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewWorkspace {
    name: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewArtifact {
    name: String,
    template: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewPlayer {
    agent: String,
    role: String,
}

/// The REST facade. Cloning shares the underlying system.
#[derive(Debug, Clone)]
pub struct Api {
    mas: Mas,
}

impl Api {
    pub fn new(mas: Mas) -> Api {
        Api { mas }
    }

    pub fn mas(&self) -> &Mas {
        &self.mas
    }

    pub fn handle(&self, req: &Request) -> Response {
        let Some((route, params)) = match_route(&req.path) else {
            return ApiError::new(404, "not_found", format!("no resource at `{}`", req.path)).into_response();
        };
        let allowed = allow(route).join(", ");
        let result = if req.method == "OPTIONS" {
            self.options(route, &req.path)
        } else if !route.methods.contains(&req.method.as_str()) {
            Err(ApiError::new(405, "method_not_allowed", format!("{} is not allowed on `{}`", req.method, req.path)))
        } else {
            self.dispatch(route.id, &params, req)
        };
        let resp = result.unwrap_or_else(ApiError::into_response);
        if resp.status == 405 || req.method == "OPTIONS" {
            resp.with_header("Allow", allowed)
        } else {
            resp
        }
    }

    /// OPTIONS: the allowed methods plus the links the resource exposes.
    /// Resources that do not exist yield 404, like GET.
    fn options(&self, route: &Route, path: &str) -> ApiResult {
        let probe = if route.methods.contains(&"GET") {
            path.to_string()
        } else {
            path.rsplit_once('/').map(|(p, _)| p.to_string()).unwrap_or_default()
        };
        let got = self.handle(&Request::get(&probe));
        if got.status != 200 {
            return Ok(got);
        }
        let mut out = vec![link("self", path)];
        if probe == path {
            out.extend(extract_links(&got).into_iter().filter(|l| l["rel"] != "self"));
        }
        Ok(Response::json(200, json!({ "href": path, "allow": allow(route), "links": out })))
    }

    fn dispatch(&self, id: RouteId, p: &[String], req: &Request) -> ApiResult {
        let m = req.method.as_str();
        match (id, m) {
            (RouteId::Root, _) => Ok(Response::json(
                200,
                json!({
                    "name": "masrest",
                    "links": links(&[
                        ("self", "/".into()),
                        ("agents", "/agents".into()),
                        ("workspaces", "/workspaces".into()),
                        ("artifact-templates", "/artifact-templates".into()),
                        ("organisations", "/organisations".into()),
                        ("services", "/services".into()),
                    ]),
                }),
            )),
            (RouteId::Agents, "GET") => self.list_agents(),
            (RouteId::Agents, "POST") => {
                let body: NewAgent = parse_json(&req.body)?;
                let rec = self.mas.spawn_agent(&body.name, &body.plans)?;
                let href = format!("/agents/{}", body.name);
                let resp = created(href, self.agent_body(&body.name)?);
                Ok(match rec {
                    Some(r) => resp.with_header("X-Revision", r.revision.to_string()),
                    None => resp,
                })
            }
            (RouteId::Agent, "GET") => Ok(Response::json(200, self.agent_body(&p[0])?)),
            (RouteId::Agent, "DELETE") => {
                self.mas.kill_agent(&p[0])?;
                Ok(Response::no_content())
            }
            (RouteId::Plans, "GET") => self.get_plans(&p[0]),
            (RouteId::Plans, "PUT") => {
                let source = plans_source(&req.body)?;
                let rec = self.mas.update_plans(&p[0], &source, bump_of(req)?)?;
                let mut resp = self.get_plans(&p[0])?;
                if let Some(Value::Object(m)) = &mut resp.body {
                    m.insert("created".into(), Value::Bool(rec.created));
                }
                Ok(resp)
            }
            (RouteId::Beliefs, _) => {
                let snap = self.mas.snapshot_agent(&p[0])?;
                let base = format!("/agents/{}", p[0]);
                Ok(Response::json(
                    200,
                    json!({
                        "agent": snap.name,
                        "cycle_count": snap.cycle_count,
                        "beliefs": snap.beliefs,
                        "links": links(&[("self", format!("{base}/beliefs")), ("agent", base)]),
                    }),
                ))
            }
            (RouteId::Inbox, _) => {
                let body: NewMessage = parse_json(&req.body)?;
                let id = self.mas.deliver_message(&p[0], &body.sender, &body.performative, &body.content)?;
                let href = format!("/agents/{}/inbox/{id}", p[0]);
                Ok(created(href, self.message_body(&p[0], id)?))
            }
            (RouteId::Message, _) => Ok(Response::json(200, self.message_body(&p[0], numeric_id(&p[1], "message")?)?)),
            (RouteId::Command, _) => {
                let body: NewCommand = parse_json(&req.body)?;
                let id = self.mas.submit_command(&p[0], &body.body)?;
                let href = format!("/agents/{}/command/{id}", p[0]);
                Ok(created(href, self.command_body(&p[0], id)?))
            }
            (RouteId::CommandStatus, _) => {
                Ok(Response::json(200, self.command_body(&p[0], numeric_id(&p[1], "command")?)?))
            }
            (RouteId::AgentRevisions, _) => {
                self.mas.snapshot_agent(&p[0])?;
                self.revision_list(&plans_entity(&p[0]), &format!("/agents/{}", p[0]))
            }
            (RouteId::AgentRevision, _) => {
                self.mas.snapshot_agent(&p[0])?;
                self.revision_item(&plans_entity(&p[0]), &format!("/agents/{}", p[0]), &p[1])
            }
            (RouteId::AgentLog, _) => {
                let lines = self.mas.agent_log(&p[0])?;
                let base = format!("/agents/{}", p[0]);
                Ok(Response::json(
                    200,
                    json!({
                        "agent": p[0],
                        "lines": lines,
                        "links": links(&[("self", format!("{base}/log")), ("agent", base)]),
                    }),
                ))
            }
            (RouteId::Workspaces, "GET") => {
                let mut items = Vec::new();
                for w in self.mas.workspace_names() {
                    let href = format!("/workspaces/{w}");
                    items.push(json!({ "name": w, "href": href, "links": links(&[("self", href.clone())]) }));
                }
                Ok(collection(items, &[("self", "/workspaces".into()), ("up", "/".into())]))
            }
            (RouteId::Workspaces, "POST") => {
                let body: NewWorkspace = parse_json(&req.body)?;
                self.mas.create_workspace(&body.name)?;
                Ok(created(format!("/workspaces/{}", body.name), self.workspace_body(&body.name)?))
            }
            (RouteId::Workspace, _) => Ok(Response::json(200, self.workspace_body(&p[0])?)),
            (RouteId::Artifacts, "GET") => {
                let ws = self.mas.workspace(&p[0])?;
                let items = ws.artifacts.iter().map(artifact_body).collect();
                let base = format!("/workspaces/{}", p[0]);
                Ok(collection(items, &[("self", format!("{base}/artifacts")), ("workspace", base)]))
            }
            (RouteId::Artifacts, "POST") => {
                let body: NewArtifact = parse_json(&req.body)?;
                let view = self.mas.instantiate(&p[0], &body.name, &body.template)?;
                Ok(created(format!("/workspaces/{}/artifacts/{}", p[0], body.name), artifact_body(&view)))
            }
            (RouteId::Artifact, _) => Ok(Response::json(200, artifact_body(&self.mas.artifact(&p[0], &p[1])?))),
            (RouteId::Templates, "GET") => {
                let items = self
                    .mas
                    .template_names()
                    .into_iter()
                    .map(|t| {
                        let href = format!("/artifact-templates/{t}");
                        json!({ "name": t, "href": href, "links": links(&[("self", href.clone())]) })
                    })
                    .collect();
                Ok(collection(items, &[("self", "/artifact-templates".into()), ("up", "/".into())]))
            }
            (RouteId::Templates, "POST") => {
                let doc: TemplateDoc = parse_json(&req.body)?;
                let name = doc.name.clone();
                self.mas.create_template(doc)?;
                Ok(created(format!("/artifact-templates/{name}"), self.template_body(&name)?))
            }
            (RouteId::Template, "GET") => Ok(Response::json(200, self.template_body(&p[0])?)),
            (RouteId::Template, "PUT") => {
                let doc: TemplateDoc = parse_json(&req.body)?;
                let existed = self.mas.template(&p[0]).is_ok();
                self.mas.put_template(&p[0], doc, bump_of(req)?)?;
                let body = self.template_body(&p[0])?;
                Ok(put_response(existed, format!("/artifact-templates/{}", p[0]), body))
            }
            (RouteId::TemplateRevisions, _) => {
                self.mas.template(&p[0])?;
                self.revision_list(&template_entity(&p[0]), &format!("/artifact-templates/{}", p[0]))
            }
            (RouteId::TemplateRevision, _) => {
                self.mas.template(&p[0])?;
                self.revision_item(&template_entity(&p[0]), &format!("/artifact-templates/{}", p[0]), &p[1])
            }
            (RouteId::Organisations, "GET") => {
                let items = self
                    .mas
                    .org_names()
                    .into_iter()
                    .map(|o| {
                        let href = format!("/organisations/{o}");
                        json!({ "name": o, "href": href, "links": links(&[("self", href.clone())]) })
                    })
                    .collect();
                Ok(collection(items, &[("self", "/organisations".into()), ("up", "/".into())]))
            }
            (RouteId::Organisations, "POST") => {
                let spec: OrgSpec = parse_json(&req.body)?;
                let name = spec.name.clone();
                self.mas.create_org(spec)?;
                Ok(created(format!("/organisations/{name}"), self.org_body(&name)?))
            }
            (RouteId::Organisation, "GET") => Ok(Response::json(200, self.org_body(&p[0])?)),
            (RouteId::Organisation, "PUT") => {
                let spec: OrgSpec = parse_json(&req.body)?;
                let existed = self.mas.org(&p[0]).is_ok();
                self.mas.put_org(&p[0], spec, bump_of(req)?)?;
                let body = self.org_body(&p[0])?;
                Ok(put_response(existed, format!("/organisations/{}", p[0]), body))
            }
            (RouteId::Group, _) => Ok(Response::json(200, self.group_body(&p[0], &p[1])?)),
            (RouteId::Players, "GET") => {
                let g = self.mas.group(&p[0], &p[1])?;
                let base = format!("/organisations/{}/groups/{}", p[0], p[1]);
                let items = g
                    .players
                    .iter()
                    .map(|pl| {
                        let href = format!("{base}/players/{}", pl.agent);
                        json!({
                            "agent": pl.agent,
                            "role": pl.role,
                            "href": href,
                            "links": links(&[("self", href.clone()), ("agent", format!("/agents/{}", pl.agent))]),
                        })
                    })
                    .collect();
                Ok(collection(items, &[("self", format!("{base}/players")), ("group", base)]))
            }
            (RouteId::Players, "POST") => {
                let body: NewPlayer = parse_json(&req.body)?;
                self.mas.adopt_role(&body.agent, &p[0], &p[1], &body.role)?;
                let href = format!("/organisations/{}/groups/{}/players/{}", p[0], p[1], body.agent);
                Ok(created(href, self.player_body(&p[0], &p[1], &body.agent)?))
            }
            (RouteId::Player, _) => Ok(Response::json(200, self.player_body(&p[0], &p[1], &p[2])?)),
            (RouteId::Scheme, _) => Ok(Response::json(200, self.scheme_body(&p[0], &p[1])?)),
            (RouteId::OrgRevisions, _) => {
                self.mas.org(&p[0])?;
                self.revision_list(&org_entity(&p[0]), &format!("/organisations/{}", p[0]))
            }
            (RouteId::OrgRevision, _) => {
                self.mas.org(&p[0])?;
                self.revision_item(&org_entity(&p[0]), &format!("/organisations/{}", p[0]), &p[1])
            }
            (RouteId::Services, _) => {
                let filter = req.query("service");
                let services = self.mas.services(filter);
                let providers: Map<String, Value> = services
                    .into_iter()
                    .map(|(s, agents)| {
                        let entries = agents
                            .into_iter()
                            .map(|a| json!({ "agent": a, "href": format!("/agents/{a}") }))
                            .collect();
                        (s, Value::Array(entries))
                    })
                    .collect();
                let self_href = match filter {
                    Some(s) => format!("/services?service={s}"),
                    None => "/services".into(),
                };
                Ok(Response::json(
                    200,
                    json!({ "services": providers, "links": links(&[("self", self_href), ("up", "/".into())]) }),
                ))
            }
            _ => unreachable!("route table and dispatch disagree on {id:?} {m}"),
        }
    }

    fn list_agents(&self) -> ApiResult {
        let mut items = Vec::new();
        for name in self.mas.agent_names() {
            // An agent killed between listing and snapshot is skipped.
            let Ok(snap) = self.mas.snapshot_agent(&name) else { continue };
            let href = format!("/agents/{name}");
            items.push(json!({
                "name": name,
                "href": href,
                "cycle_count": snap.cycle_count,
                "links": links(&[("self", href.clone())]),
            }));
        }
        Ok(collection(items, &[("self", "/agents".into()), ("up", "/".into())]))
    }

    fn agent_body(&self, name: &str) -> Result<Value, ApiError> {
        let detail = self.mas.agent_detail(name)?;
        let messages = self.mas.messages(name)?;
        let commands = self.mas.commands(name)?;
        let base = format!("/agents/{name}");
        let mut v = serde_json::to_value(&detail).expect("views serialize");
        let m = v.as_object_mut().expect("agent detail is an object");
        m.remove("artifacts");
        m.insert("observed".into(), Value::Array(detail.artifacts.iter().map(artifact_body).collect()));
        m.insert(
            "messages".into(),
            messages
                .iter()
                .map(|r| json!({ "id": r.id, "status": r.status, "href": format!("{base}/inbox/{}", r.id) }))
                .collect(),
        );
        m.insert(
            "commands".into(),
            commands
                .iter()
                .map(|r| json!({ "id": r.id, "status": r.status, "href": format!("{base}/command/{}", r.id) }))
                .collect(),
        );
        let mut pairs: Vec<(&str, String)> = vec![
            ("self", base.clone()),
            ("collection", "/agents".into()),
            ("plans", format!("{base}/plans")),
            ("beliefs", format!("{base}/beliefs")),
            ("inbox", format!("{base}/inbox")),
            ("command", format!("{base}/command")),
            ("revisions", format!("{base}/revisions")),
            ("log", format!("{base}/log")),
        ];
        for w in &detail.snapshot.workspaces {
            pairs.push(("workspace", format!("/workspaces/{w}")));
        }
        for a in &detail.artifacts {
            pairs.push(("observes", format!("/workspaces/{}/artifacts/{}", a.workspace, a.name)));
        }
        for r in &detail.roles {
            pairs.push(("group", format!("/organisations/{}/groups/{}", r.organisation, r.group)));
        }
        for ms in &detail.missions {
            pairs.push(("scheme", format!("/organisations/{}/schemes/{}", ms.organisation, ms.scheme)));
        }
        for r in &messages {
            pairs.push(("message", format!("{base}/inbox/{}", r.id)));
        }
        for r in &commands {
            pairs.push(("command-status", format!("{base}/command/{}", r.id)));
        }
        m.insert("links".into(), links(&pairs));
        Ok(v)
    }

    fn get_plans(&self, name: &str) -> ApiResult {
        let source = self.mas.plan_source(name)?;
        let head = self.mas.head_revision(&plans_entity(name));
        let base = format!("/agents/{name}");
        Ok(Response::json(
            200,
            json!({
                "agent": name,
                "source": source,
                "revision": head.as_ref().map(|h| h.revision),
                "semver": head.as_ref().map(|h| h.semver.to_string()),
                "links": links(&[
                    ("self", format!("{base}/plans")),
                    ("agent", base.clone()),
                    ("revisions", format!("{base}/revisions")),
                ]),
            }),
        ))
    }

    fn message_body(&self, agent: &str, id: u64) -> Result<Value, ApiError> {
        let rec = self.mas.message(agent, id)?;
        let base = format!("/agents/{agent}");
        Ok(with_links(rec, &[("self", format!("{base}/inbox/{id}")), ("agent", base.clone()), ("inbox", format!("{base}/inbox"))]))
    }

    fn command_body(&self, agent: &str, id: u64) -> Result<Value, ApiError> {
        let rec = self.mas.command(agent, id)?;
        let base = format!("/agents/{agent}");
        Ok(with_links(
            rec,
            &[("self", format!("{base}/command/{id}")), ("agent", base.clone()), ("command", format!("{base}/command"))],
        ))
    }

    fn revision_list(&self, entity: &str, owner: &str) -> ApiResult {
        let items = self
            .mas
            .revisions(entity)
            .iter()
            .map(|r| {
                let href = format!("{owner}/revisions/{}", r.revision);
                json!({
                    "revision": r.revision,
                    "semver": r.semver.to_string(),
                    "content_hash": r.content_hash,
                    "created_at": r.created_at,
                    "href": href,
                    "links": links(&[("self", href.clone())]),
                })
            })
            .collect();
        Ok(collection(items, &[("self", format!("{owner}/revisions")), ("owner", owner.to_string())]))
    }

    fn revision_item(&self, entity: &str, owner: &str, raw: &str) -> ApiResult {
        let r = numeric_id(raw, "revision")?;
        let rec = self.mas.revision(entity, r)?;
        Ok(Response::json(200, revision_body(&rec, owner)))
    }

    fn workspace_body(&self, name: &str) -> Result<Value, ApiError> {
        let ws = self.mas.workspace(name)?;
        let base = format!("/workspaces/{name}");
        let mut pairs: Vec<(&str, String)> =
            vec![("self", base.clone()), ("collection", "/workspaces".into()), ("artifacts", format!("{base}/artifacts"))];
        for a in &ws.artifacts {
            pairs.push(("artifact", format!("{base}/artifacts/{}", a.name)));
        }
        for m in &ws.members {
            pairs.push(("member", format!("/agents/{m}")));
        }
        let mut v = serde_json::to_value(&ws).expect("views serialize");
        v["artifacts"] = ws.artifacts.iter().map(artifact_body).collect();
        v["links"] = links(&pairs);
        Ok(v)
    }

    fn template_body(&self, name: &str) -> Result<Value, ApiError> {
        let doc = self.mas.template(name)?;
        let head = self.mas.head_revision(&template_entity(name));
        let base = format!("/artifact-templates/{name}");
        let mut v = serde_json::to_value(&doc).expect("templates serialize");
        v["revision"] = json!(head.as_ref().map(|h| h.revision));
        v["semver"] = json!(head.as_ref().map(|h| h.semver.to_string()));
        v["links"] = links(&[
            ("self", base.clone()),
            ("collection", "/artifact-templates".into()),
            ("revisions", format!("{base}/revisions")),
        ]);
        Ok(v)
    }

    fn org_body(&self, name: &str) -> Result<Value, ApiError> {
        let view = self.mas.org(name)?;
        let spec = self.mas.org_spec(name)?;
        let head = self.mas.head_revision(&org_entity(name));
        let base = format!("/organisations/{name}");
        let mut pairs: Vec<(&str, String)> =
            vec![("self", base.clone()), ("collection", "/organisations".into()), ("revisions", format!("{base}/revisions"))];
        for g in &view.groups {
            pairs.push(("group", format!("{base}/groups/{}", g.name)));
            pairs.push(("players", format!("{base}/groups/{}/players", g.name)));
        }
        for s in &view.schemes {
            pairs.push(("scheme", format!("{base}/schemes/{}", s.id)));
        }
        let mut v = serde_json::to_value(&view).expect("views serialize");
        v["spec"] = serde_json::to_value(&spec).expect("specs serialize");
        v["revision"] = json!(head.as_ref().map(|h| h.revision));
        v["semver"] = json!(head.as_ref().map(|h| h.semver.to_string()));
        v["links"] = links(&pairs);
        Ok(v)
    }

    fn group_body(&self, org: &str, group: &str) -> Result<Value, ApiError> {
        let g = self.mas.group(org, group)?;
        let base = format!("/organisations/{org}/groups/{group}");
        let mut pairs: Vec<(&str, String)> =
            vec![("self", base.clone()), ("organisation", format!("/organisations/{org}")), ("players", format!("{base}/players"))];
        for pl in &g.players {
            pairs.push(("player", format!("{base}/players/{}", pl.agent)));
        }
        Ok(with_links(g, &pairs))
    }

    fn player_body(&self, org: &str, group: &str, agent: &str) -> Result<Value, ApiError> {
        let g = self.mas.group(org, group)?;
        let roles: Vec<&str> = g.players.iter().filter(|p| p.agent == agent).map(|p| p.role.as_str()).collect();
        if roles.is_empty() {
            return Err(MasError::not_found("player", agent).into());
        }
        let base = format!("/organisations/{org}/groups/{group}");
        Ok(json!({
            "agent": agent,
            "group": group,
            "organisation": org,
            "roles": roles,
            "links": links(&[
                ("self", format!("{base}/players/{agent}")),
                ("group", base.clone()),
                ("agent", format!("/agents/{agent}")),
            ]),
        }))
    }

    fn scheme_body(&self, org: &str, scheme: &str) -> Result<Value, ApiError> {
        let s = self.mas.scheme(org, scheme)?;
        let mut pairs: Vec<(&str, String)> =
            vec![("self", format!("/organisations/{org}/schemes/{scheme}")), ("organisation", format!("/organisations/{org}"))];
        for c in &s.commitments {
            pairs.push(("committed", format!("/agents/{}", c.agent)));
        }
        Ok(with_links(s, &pairs))
    }
}

/// Summary form of an artifact. The agent resource embeds exactly this
/// value for each observed artifact.
fn artifact_body(view: &crate::environment::ArtifactView) -> Value {
    let href = format!("/workspaces/{}/artifacts/{}", view.workspace, view.name);
    let mut pairs: Vec<(&str, String)> = vec![
        ("self", href.clone()),
        ("workspace", format!("/workspaces/{}", view.workspace)),
        ("template", format!("/artifact-templates/{}", view.template)),
    ];
    for o in &view.observers {
        pairs.push(("observer", format!("/agents/{o}")));
    }
    let mut v = with_links(view, &pairs);
    v["href"] = Value::String(href);
    v
}

fn revision_body(rec: &RevisionRecord, owner: &str) -> Value {
    with_links(
        rec,
        &[
            ("self", format!("{owner}/revisions/{}", rec.revision)),
            ("collection", format!("{owner}/revisions")),
            ("owner", owner.to_string()),
        ],
    )
}

fn put_response(existed: bool, location: String, body: Value) -> Response {
    if existed {
        Response::json(200, body)
    } else {
        created(location, body)
    }
}

/// PUT plans accepts `{"source": ...}` or the raw plan text.
fn plans_source(body: &[u8]) -> Result<String, ApiError> {
    let text = std::str::from_utf8(body).map_err(|_| ApiError::bad_request("plan source is not UTF-8"))?;
    if text.trim_start().starts_with('{') {
        Ok(parse_json::<PlansBody>(body)?.source)
    } else {
        Ok(text.to_string())
    }
}

/// Every link object in a response: the `links` array of an object body,
/// the `links` of each array element, and the `Link` header.
pub fn extract_links(resp: &Response) -> Vec<Value> {
    let mut out = Vec::new();
    match &resp.body {
        Some(Value::Object(m)) => {
            if let Some(Value::Array(ls)) = m.get("links") {
                out.extend(ls.iter().cloned());
            }
        }
        Some(Value::Array(items)) => {
            for item in items {
                if let Some(Value::Array(ls)) = item.get("links") {
                    out.extend(ls.iter().cloned());
                }
            }
        }
        _ => {}
    }
    if let Some(h) = resp.header("Link") {
        for (rel, href, methods) in parse_link_header(h) {
            out.push(json!({ "rel": rel, "href": href, "methods": methods }));
        }
    }
    out
}
