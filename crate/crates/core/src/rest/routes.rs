//! The route table. Every link the API renders takes its method list from
//! here, so links and `Allow` headers cannot drift apart.

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RouteId {
    Root,
    Agents,
    Agent,
    Plans,
    Beliefs,
    Inbox,
    Message,
    Command,
    CommandStatus,
    AgentRevisions,
    AgentRevision,
    AgentLog,
    Workspaces,
    Workspace,
    Artifacts,
    Artifact,
    Templates,
    Template,
    TemplateRevisions,
    TemplateRevision,
    Organisations,
    Organisation,
    Group,
    Players,
    Player,
    Scheme,
    OrgRevisions,
    OrgRevision,
    Services,
}

#[derive(Debug, Clone, Copy)]
pub struct Route {
    pub id: RouteId,
    pub pattern: &'static str,
    /// Implemented methods, OPTIONS excluded (it is implemented everywhere).
    pub methods: &'static [&'static str],
}

const GET: &[&str] = &["GET"];
const GET_POST: &[&str] = &["GET", "POST"];
const GET_PUT: &[&str] = &["GET", "PUT"];
const POST: &[&str] = &["POST"];

pub const ROUTES: &[Route] = &[
    Route { id: RouteId::Root, pattern: "/", methods: GET },
    Route { id: RouteId::Agents, pattern: "/agents", methods: GET_POST },
    Route { id: RouteId::Agent, pattern: "/agents/{agent}", methods: &["GET", "DELETE"] },
    Route { id: RouteId::Plans, pattern: "/agents/{agent}/plans", methods: GET_PUT },
    Route { id: RouteId::Beliefs, pattern: "/agents/{agent}/beliefs", methods: GET },
    Route { id: RouteId::Inbox, pattern: "/agents/{agent}/inbox", methods: POST },
    Route { id: RouteId::Message, pattern: "/agents/{agent}/inbox/{message}", methods: GET },
    Route { id: RouteId::Command, pattern: "/agents/{agent}/command", methods: POST },
    Route { id: RouteId::CommandStatus, pattern: "/agents/{agent}/command/{command}", methods: GET },
    Route { id: RouteId::AgentRevisions, pattern: "/agents/{agent}/revisions", methods: GET },
    Route { id: RouteId::AgentRevision, pattern: "/agents/{agent}/revisions/{revision}", methods: GET },
    Route { id: RouteId::AgentLog, pattern: "/agents/{agent}/log", methods: GET },
    Route { id: RouteId::Workspaces, pattern: "/workspaces", methods: GET_POST },
    Route { id: RouteId::Workspace, pattern: "/workspaces/{workspace}", methods: GET },
    Route { id: RouteId::Artifacts, pattern: "/workspaces/{workspace}/artifacts", methods: GET_POST },
    Route { id: RouteId::Artifact, pattern: "/workspaces/{workspace}/artifacts/{artifact}", methods: GET },
    Route { id: RouteId::Templates, pattern: "/artifact-templates", methods: GET_POST },
    Route { id: RouteId::Template, pattern: "/artifact-templates/{template}", methods: GET_PUT },
    Route { id: RouteId::TemplateRevisions, pattern: "/artifact-templates/{template}/revisions", methods: GET },
    Route { id: RouteId::TemplateRevision, pattern: "/artifact-templates/{template}/revisions/{revision}", methods: GET },
    Route { id: RouteId::Organisations, pattern: "/organisations", methods: GET_POST },
    Route { id: RouteId::Organisation, pattern: "/organisations/{org}", methods: GET_PUT },
    Route { id: RouteId::Group, pattern: "/organisations/{org}/groups/{group}", methods: GET },
    Route { id: RouteId::Players, pattern: "/organisations/{org}/groups/{group}/players", methods: GET_POST },
    Route { id: RouteId::Player, pattern: "/organisations/{org}/groups/{group}/players/{agent}", methods: GET },
    Route { id: RouteId::Scheme, pattern: "/organisations/{org}/schemes/{scheme}", methods: GET },
    Route { id: RouteId::OrgRevisions, pattern: "/organisations/{org}/revisions", methods: GET },
    Route { id: RouteId::OrgRevision, pattern: "/organisations/{org}/revisions/{revision}", methods: GET },
    Route { id: RouteId::Services, pattern: "/services", methods: GET },
];

fn segments(path: &str) -> Vec<&str> {
    path.split('/').filter(|s| !s.is_empty()).collect()
}

/// Finds the route for a path (query string excluded) and its parameters.
pub fn match_route(path: &str) -> Option<(&'static Route, Vec<String>)> {
    let segs = segments(path);
    'routes: for route in ROUTES {
        let pat = segments(route.pattern);
        if pat.len() != segs.len() {
            continue;
        }
        let mut params = Vec::new();
        for (p, s) in pat.iter().zip(&segs) {
            if p.starts_with('{') {
                params.push((*s).to_string());
            } else if p != s {
                continue 'routes;
            }
        }
        return Some((route, params));
    }
    None
}

/// The `Allow` set for a route: its methods plus OPTIONS.
pub fn allow(route: &Route) -> Vec<&'static str> {
    let mut m = route.methods.to_vec();
    m.push("OPTIONS");
    m
}
