//! One function per acceptance criterion. Each returns a one-line summary
//! on success and a description of the first violations on failure. The
//! `acceptance` target prints them; the topical test files assert them.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use masrest::organisation::{CompiledOrg, GoalSpec, GoalTree, ObligationState, OrgSpec, Organisation, SchemeStatus};
use masrest::rest::routes::{allow, RouteId, ROUTES};
use masrest::rest::walk::walk;
use masrest::rest::{route_of, Api, Request};
use masrest::system::plans_entity;
use masrest::term::{parse_plan_library, parse_term, unify, Substitution, Term};
use masrest::Mas;
use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::{json, Value};

use super::gen::Gen;
use super::{call, get, project_path};

pub type Outcome = Result<String, String>;

fn verdict(checked: usize, violations: Vec<String>, what: &str) -> Outcome {
    if violations.is_empty() {
        Ok(format!("{checked} {what}, 0 violations"))
    } else {
        let shown: Vec<&String> = violations.iter().take(5).collect();
        Err(format!("{} of {checked} {what} violated; first: {shown:?}", violations.len()))
    }
}

// ---------------------------------------------------------------- unification

/// Every term over {a, b, f/1, f/2, X, Y} of depth at most two.
pub fn depth2_space() -> Vec<Term> {
    let base = vec![Term::atom("a"), Term::atom("b"), Term::var("X"), Term::var("Y")];
    let grow = |prev: &[Term]| {
        let mut out = base.clone();
        out.extend(prev.iter().map(|t| Term::structure("f", vec![t.clone()])));
        for l in prev {
            for r in prev {
                out.push(Term::structure("f", vec![l.clone(), r.clone()]));
            }
        }
        out
    };
    grow(&grow(&base))
}

/// Replaces X and Y; the oracle's own substitution, independent of the crate's.
fn ground_apply(t: &Term, x: &Term, y: &Term) -> Term {
    match t {
        Term::Var(v) if v == "X" => x.clone(),
        Term::Var(v) if v == "Y" => y.clone(),
        Term::Structure(f, args) => Term::structure(f.clone(), args.iter().map(|a| ground_apply(a, x, y)).collect()),
        other => other.clone(),
    }
}

/// Image ids of `t` under every ground substitution.
fn images(t: &Term, thetas: &[(Term, Term)], intern: &mut HashMap<Term, u32>) -> Vec<u32> {
    thetas
        .iter()
        .map(|(x, y)| {
            let g = ground_apply(t, x, y);
            let next = intern.len() as u32;
            *intern.entry(g).or_insert(next)
        })
        .collect()
}

/// Brute force: θ solves s = t iff θ(s) and θ(t) are identical, for every
/// ground θ over the 74 ground terms of the space. The unifier agrees when
/// it fails exactly on the unsolvable pairs and its solutions are exactly
/// the θ with θ∘σ = θ.
pub fn unification_oracle() -> Outcome {
    let space = depth2_space();
    let ground: Vec<Term> = space.iter().filter(|t| t.is_ground()).cloned().collect();
    if space.len() != 604 || ground.len() != 74 {
        return Err(format!("space has {} terms ({} ground), expected 604 (74)", space.len(), ground.len()));
    }
    let thetas: Vec<(Term, Term)> =
        ground.iter().flat_map(|x| ground.iter().map(move |y| (x.clone(), y.clone()))).collect();
    let mut intern = HashMap::new();
    let imgs: Vec<Vec<u32>> = space.iter().map(|t| images(t, &thetas, &mut intern)).collect();
    let index: HashMap<&Term, usize> = space.iter().enumerate().map(|(i, t)| (t, i)).collect();
    let (vx, vy) = (Term::var("X"), Term::var("Y"));
    let (ix, iy) = (index[&vx], index[&vy]);
    let mut extra: HashMap<Term, Vec<u32>> = HashMap::new();
    let mut violations = Vec::new();
    let mut unifiable = 0usize;
    for (i, s) in space.iter().enumerate() {
        for (j, t) in space.iter().enumerate() {
            let (is, it) = (&imgs[i], &imgs[j]);
            match unify(s, t, &Substitution::new()) {
                None => {
                    if is.iter().zip(it).any(|(a, b)| a == b) {
                        violations.push(format!("{s} = {t}: unifier failed but a ground solution exists"));
                    }
                }
                Some(sig) => {
                    unifiable += 1;
                    if sig.apply(s) != sig.apply(t) {
                        violations.push(format!("{s} = {t}: σ(s) != σ(t)"));
                        continue;
                    }
                    let sx = sig.apply(&vx);
                    let sy = sig.apply(&vy);
                    for v in [&sx, &sy] {
                        if !index.contains_key(v) && !extra.contains_key(v) {
                            let im = images(v, &thetas, &mut intern);
                            extra.insert(v.clone(), im);
                        }
                    }
                    let img = |v: &Term| index.get(v).map(|&k| &imgs[k]).unwrap_or_else(|| &extra[v]);
                    let (gx, gy) = (img(&sx), img(&sy));
                    let (bx, by) = (&imgs[ix], &imgs[iy]);
                    let agree = (0..thetas.len()).all(|k| (gx[k] == bx[k] && gy[k] == by[k]) == (is[k] == it[k]));
                    if !agree {
                        violations.push(format!("{s} = {t}: solutions differ from instances of the unifier"));
                    }
                }
            }
        }
    }
    let pairs = space.len() * space.len();
    verdict(pairs, violations, "term pairs").map(|m| format!("{m} ({unifiable} unifiable, {} ground substitutions)", thetas.len()))
}

// ---------------------------------------------------------------- parser

/// Print then parse 500 random terms (depth ≤ 5) and 500 random plans,
/// checking structural equality of both the first and second parse.
pub fn parser_round_trip(seed: u64) -> Outcome {
    let mut g = Gen::new(seed);
    let vars: Vec<String> = ["X", "Y", "Z", "Agent", "N2", "_Tmp"].iter().map(|s| s.to_string()).collect();
    let mut violations = Vec::new();
    for _ in 0..500 {
        let t = g.term(5, &vars);
        let printed = t.to_string();
        match parse_term(&printed) {
            Ok(u) if u == t => {
                if parse_term(&u.to_string()).as_ref() != Ok(&t) {
                    violations.push(format!("second parse differs: {printed}"));
                }
            }
            Ok(u) => violations.push(format!("{printed} parsed as {u}")),
            Err(e) => violations.push(format!("{printed}: {e}")),
        }
    }
    for _ in 0..500 {
        let p = g.plan();
        let printed = p.to_string();
        match parse_plan_library(&printed) {
            Ok(ps) if ps.len() == 1 && ps[0] == p => {
                if parse_plan_library(&ps[0].to_string()).ok().as_deref() != Some(std::slice::from_ref(&p)) {
                    violations.push(format!("second parse differs: {printed}"));
                }
            }
            Ok(ps) => violations.push(format!("{printed} parsed as {:?}", ps.iter().map(ToString::to_string).collect::<Vec<_>>())),
            Err(e) => violations.push(format!("{printed}: {e}")),
        }
    }
    verdict(1000, violations, "terms and plans")
}

// ---------------------------------------------------------------- REST

pub fn counter_template() -> Value {
    json!({
        "name": "counter",
        "properties": ["count(0)"],
        "operations": [
            {"name": "inc", "rules": [{"match": ["count(N)"], "update": ["count(N+1)"]}]},
            {"name": "add", "params": ["K"], "rules": [{"match": ["count(N)"], "guard": "K > 0", "update": ["count(N+K)"]}]}
        ]
    })
}

pub fn writing_org() -> Value {
    json!({
        "name": "paper",
        "roles": [{"name": "writer", "min": 1, "max": 2}, {"name": "editor", "max": 1}],
        "groups": [{"name": "team", "roles": ["writer", "editor"]}],
        "schemes": [{
            "name": "writing",
            "root": "wpaper",
            "goals": [
                {"id": "wpaper", "type": "and", "children": ["wtitle", "wabs"]},
                {"id": "wtitle", "type": "leaf"},
                {"id": "wabs", "type": "leaf"}
            ],
            "missions": [{"name": "mwrite", "goals": ["wtitle", "wabs"]}]
        }],
        "norms": [{"role": "writer", "mission": "mwrite"}]
    })
}

fn expect_status(api: &Api, method: &str, target: &str, body: Value, status: u16) {
    let r = call(api, method, target, body);
    assert_eq!(r.status, status, "{method} {target}: {:?}", r.body);
}

/// A paused system with one of everything, built through the API alone.
pub fn populated_api() -> Api {
    let api = Api::new(Mas::default());
    expect_status(&api, "POST", "/artifact-templates", counter_template(), 201);
    expect_status(&api, "POST", "/workspaces", json!({"name": "w1"}), 201);
    expect_status(&api, "POST", "/workspaces/w1/artifacts", json!({"name": "c1", "template": "counter"}), 201);
    expect_status(&api, "POST", "/organisations", writing_org(), 201);
    let bob = "+!start <- .register(helper); .joinWorkspace(w1); .focus(w1, c1); .act(w1, c1, inc).\n\
               +obligation(O, S, M, G) : obligation(O, S, M, G) <- .print(G).";
    expect_status(&api, "POST", "/agents", json!({"name": "bob", "plans": bob}), 201);
    expect_status(&api, "POST", "/agents", json!({"name": "alice", "plans": "+!hi <- +greeted."}), 201);
    expect_status(&api, "POST", "/agents/bob/inbox", json!({"performative": "achieve", "content": "start"}), 201);
    expect_status(&api, "POST", "/agents/alice/inbox", json!({"performative": "tell", "content": "p(1)"}), 201);
    expect_status(&api, "POST", "/agents/alice/command", json!({"body": "!hi"}), 201);
    expect_status(&api, "POST", "/organisations/paper/groups/team/players", json!({"agent": "bob", "role": "writer"}), 201);
    api.mas().run_until_quiescent(200);
    api
}

fn allow_set(h: Option<&str>) -> BTreeSet<String> {
    h.unwrap_or("").split(',').map(|m| m.trim().to_string()).filter(|m| !m.is_empty()).collect()
}

/// Walker-based conformance: OPTIONS exactness, GET-safety, PUT
/// double-apply and hypermedia closure.
pub fn rest_conformance(seed: u64) -> Outcome {
    let api = populated_api();
    let mas = api.mas().clone();
    let mut violations = Vec::new();

    // (d) closure
    let report = walk(&api, "/", 10_000);
    violations.extend(report.problems.iter().map(|p| format!("closure: {p}")));
    for r in ROUTES.iter().filter(|r| r.methods.contains(&"GET")) {
        if !report.routes.contains(&r.id) {
            violations.push(format!("closure: {} never reached", r.pattern));
        }
    }
    let hrefs: Vec<String> = report.visited.iter().filter(|(_, s)| **s == 200).map(|(h, _)| h.clone()).collect();

    // (a) OPTIONS exactness, on one concrete path per route
    let mut concrete: BTreeMap<RouteId, String> = BTreeMap::new();
    for h in &hrefs {
        if let Some(r) = route_of(h) {
            concrete.entry(r.id).or_insert_with(|| h.split('?').next().unwrap().to_string());
        }
    }
    concrete.insert(RouteId::Inbox, "/agents/bob/inbox".into());
    concrete.insert(RouteId::Command, "/agents/bob/command".into());
    let before = mas.digest();
    for route in ROUTES {
        let Some(path) = concrete.get(&route.id) else {
            violations.push(format!("options: no concrete path for {}", route.pattern));
            continue;
        };
        let expected: BTreeSet<String> = allow(route).iter().map(|m| m.to_string()).collect();
        let r = api.handle(&Request::new("OPTIONS", path, Vec::new()));
        if r.status != 200 || allow_set(r.header("Allow")) != expected {
            violations.push(format!("options: {path} answered {} with Allow {:?}", r.status, r.header("Allow")));
        }
        for m in ["GET", "POST", "PUT", "DELETE", "PATCH"] {
            if m == "DELETE" && route.methods.contains(&m) {
                continue; // exercised on a scratch agent below
            }
            let r = api.handle(&Request::new(m, path, b"{".to_vec()));
            let ok = if !route.methods.contains(&m) {
                r.status == 405 && allow_set(r.header("Allow")) == expected
            } else {
                match m {
                    "GET" => r.status == 200,
                    // implemented, so a malformed body is a client error
                    _ => r.status == 400,
                }
            };
            if !ok {
                violations.push(format!("options: {m} {path} answered {}", r.status));
            }
        }
    }
    if mas.digest() != before {
        violations.push("options: probing changed state".into());
    }
    // DELETE, with the state-level idempotency check
    expect_status(&api, "POST", "/agents", json!({"name": "scratch"}), 201);
    let first = api.handle(&Request::new("DELETE", "/agents/scratch", Vec::new()));
    let after_one = mas.digest();
    let second = api.handle(&Request::new("DELETE", "/agents/scratch", Vec::new()));
    if first.status != 204 || second.status != 404 || mas.digest() != after_one {
        violations.push(format!("delete: statuses {} then {}, or state changed", first.status, second.status));
    }

    // (b) GET-safety under 200 random reads with the scheduler paused
    if !mas.is_paused() {
        violations.push("get-safety: scheduler not paused".into());
    }
    let mut g = Gen::new(seed);
    let before = mas.digest();
    for _ in 0..200 {
        let h = hrefs.choose(g.rng()).expect("walk found resources");
        let method = if g.rng().gen_bool(0.8) { "GET" } else { "OPTIONS" };
        api.handle(&Request::new(method, h, Vec::new()));
    }
    if mas.digest() != before {
        violations.push("get-safety: digest changed after 200 reads".into());
    }

    // (c) PUT double-apply
    let mut template = counter_template();
    template["operations"].as_array_mut().unwrap().push(json!({"name": "zero", "rules": [{"match": ["count(N)"], "update": ["count(0)"]}]}));
    let mut org = writing_org();
    org["roles"][1]["max"] = json!(2);
    let puts = [
        ("/agents/alice/plans", json!({"source": "+!hi <- +greeted; .print(again)."}), plans_entity("alice")),
        ("/artifact-templates/counter", template, "/artifact-templates/counter".to_string()),
        ("/organisations/paper", org, "/organisations/paper".to_string()),
    ];
    for (path, body, entity) in puts {
        let r1 = call(&api, "PUT", path, body.clone());
        let (d1, h1) = (mas.digest(), mas.head_revision(&entity).map(|r| r.revision));
        let r2 = call(&api, "PUT", path, body);
        let (d2, h2) = (mas.digest(), mas.head_revision(&entity).map(|r| r.revision));
        if r1.status != 200 || r2.status != 200 || d1 != d2 || h1 != h2 {
            violations.push(format!("put: {path} twice gave {}/{} heads {h1:?}/{h2:?} digests equal {}", r1.status, r2.status, d1 == d2));
        }
    }

    let routes = ROUTES.len();
    verdict(routes, violations, "routes checked").map(|m| {
        format!("{m}; walker visited {} resources, 200 GETs safe, 3 PUTs idempotent", report.visited.len())
    })
}

// ---------------------------------------------------------------- messages

pub const SCRIPTED_PLANS: &str = "\
+!note(N) <- +noted(N).
+!guarded(N) : ready <- +passed(N).
+flag(N) <- +echo(N).
";

/// Hand-executed model of one scripted agent.
#[derive(Default)]
struct Model {
    beliefs: BTreeSet<String>,
}

impl Model {
    /// Applies a message; returns (performative, content, expect processed).
    fn step(&mut self, g: &mut Gen) -> (&'static str, String, bool) {
        let n = g.rng().gen_range(0..5);
        let b = &mut self.beliefs;
        match g.rng().gen_range(0..11) {
            0 => {
                b.insert(format!("k({n})"));
                ("tell", format!("k({n})"), true)
            }
            1 => ("tell", "k(X)".into(), false),
            2 => {
                b.remove(&format!("k({n})"));
                ("untell", format!("k({n})"), true)
            }
            3 => {
                b.retain(|x| !x.starts_with("k("));
                ("untell", "k(X)".into(), true)
            }
            4 => {
                b.insert(format!("noted({n})"));
                ("achieve", format!("note({n})"), true)
            }
            5 => ("achieve", format!("missing({n})"), false),
            6 => {
                let ready = b.contains("ready");
                if ready {
                    b.insert(format!("passed({n})"));
                }
                ("achieve", format!("guarded({n})"), ready)
            }
            7 => {
                b.insert("ready".into());
                ("tell", "ready".into(), true)
            }
            8 => {
                b.remove("ready");
                ("untell", "ready".into(), true)
            }
            9 => {
                b.insert(format!("echo({n})"));
                ("signal", format!("flag({n})"), true)
            }
            _ => {
                if b.insert(format!("flag({n})")) {
                    b.insert(format!("echo({n})"));
                }
                ("tell", format!("flag({n})"), true)
            }
        }
    }
}

/// 100 random tell/untell/achieve/signal messages to two scripted agents,
/// each run to quiescence and checked against the model.
pub fn message_lifecycle(seed: u64) -> Outcome {
    let api = Api::new(Mas::default());
    let mas = api.mas().clone();
    let agents = ["a1", "a2"];
    for a in agents {
        expect_status(&api, "POST", "/agents", json!({"name": a, "plans": SCRIPTED_PLANS}), 201);
    }
    let mut models: BTreeMap<&str, Model> = agents.iter().map(|a| (*a, Model::default())).collect();
    let mut sent: BTreeMap<&str, Vec<(u64, bool)>> = BTreeMap::new();
    let mut g = Gen::new(seed);
    let mut violations = Vec::new();
    for i in 0..100 {
        let agent = agents[g.rng().gen_range(0..2)];
        let (perf, content, ok) = models.get_mut(agent).unwrap().step(&mut g);
        let r = call(&api, "POST", &format!("/agents/{agent}/inbox"), json!({"sender": "tester", "performative": perf, "content": content}));
        if r.status != 201 {
            violations.push(format!("#{i} {perf} {content}: POST answered {}", r.status));
            continue;
        }
        let id = r.body.as_ref().unwrap()["id"].as_u64().unwrap();
        sent.entry(agent).or_default().push((id, ok));
        mas.run_until_quiescent(200);
        let rec = get(&api, &format!("/agents/{agent}/inbox/{id}"));
        let want = if ok { "processed" } else { "failed" };
        if rec["status"] != want {
            violations.push(format!("#{i} {perf} {content} to {agent}: {} (expected {want})", rec["status"]));
        }
        let beliefs: BTreeSet<String> = mas.snapshot_agent(agent).unwrap().beliefs.iter().map(ToString::to_string).collect();
        if beliefs != models[agent].beliefs {
            violations.push(format!("#{i} {perf} {content} to {agent}: beliefs {beliefs:?} != {:?}", models[agent].beliefs));
        }
    }
    // conservation: every accepted id appears once, terminal
    for (agent, ids) in &sent {
        let records = mas.messages(agent).unwrap();
        let seen: Vec<u64> = records.iter().map(|m| m.id).collect();
        let expected: Vec<u64> = ids.iter().map(|(id, _)| *id).collect();
        if seen != expected {
            violations.push(format!("{agent}: ids {seen:?} != accepted {expected:?}"));
        }
        if let Some(m) = records.iter().find(|m| !m.is_terminal()) {
            violations.push(format!("{agent}: message {} left {:?}", m.id, m.status));
        }
    }
    verdict(100, violations, "messages")
}

// ---------------------------------------------------------------- hot swap

/// An intention running under the old library keeps its old body while
/// the next event after a PUT selects from the new one.
pub fn hot_swap() -> Outcome {
    let api = Api::new(Mas::default());
    let mas = api.mas().clone();
    let v1 = "+tick(N) <- .print(\"v1 start \", N); .print(\"v1 middle \", N); .print(\"v1 end \", N).";
    let v2 = "+tick(N) <- .print(\"v2 \", N).";
    expect_status(&api, "POST", "/agents", json!({"name": "clock", "plans": v1}), 201);
    expect_status(&api, "POST", "/agents/clock/inbox", json!({"performative": "tell", "content": "tick(1)"}), 201);
    let log = |m: &Mas| m.agent_log("clock").unwrap();
    let mut rounds = 0;
    while !log(&mas).iter().any(|l| l == "v1 middle 1") {
        mas.run_until_quiescent(1);
        rounds += 1;
        if rounds > 20 {
            return Err("first tick never reached its middle step".into());
        }
    }
    if log(&mas).iter().any(|l| l == "v1 end 1") {
        return Err("first intention finished before the swap; scenario proves nothing".into());
    }
    let r = call(&api, "PUT", "/agents/clock/plans", json!({"source": v2}));
    if r.status != 200 {
        return Err(format!("PUT plans answered {}", r.status));
    }
    expect_status(&api, "POST", "/agents/clock/inbox", json!({"performative": "tell", "content": "tick(2)"}), 201);
    if !mas.run_until_quiescent(100) {
        return Err("agent did not settle".into());
    }
    let lines = log(&mas);
    let expected = ["v1 start 1", "v1 middle 1", "v1 end 1", "v2 2"];
    let mut got: Vec<&str> = lines.iter().map(String::as_str).collect();
    got.sort_by_key(|l| expected.iter().position(|e| e == l).unwrap_or(usize::MAX));
    if got != expected {
        return Err(format!("log {lines:?}"));
    }
    Ok(format!("old intention finished under v1, next tick ran v2 (log {lines:?})"))
}

// ---------------------------------------------------------------- revisions

pub fn revisions(k: u64) -> Outcome {
    let api = Api::new(Mas::default());
    expect_status(&api, "POST", "/agents", json!({"name": "writer"}), 201);
    let bodies: Vec<String> = (1..=k).map(|i| format!("+!step{i} <- .print({i}).")).collect();
    let mut violations = Vec::new();
    for (i, b) in bodies.iter().enumerate() {
        let r = call(&api, "PUT", "/agents/writer/plans", json!({"source": b}));
        let body = r.body.unwrap_or_default();
        if r.status != 200 || body["revision"] != json!(i as u64 + 1) || body["created"] != json!(true) {
            violations.push(format!("PUT #{}: {} {}", i + 1, r.status, body));
        }
    }
    let list = api.handle(&Request::get("/agents/writer/revisions")).body.unwrap_or_default();
    let numbers: Vec<u64> = list.as_array().map(|a| a.iter().filter_map(|r| r["revision"].as_u64()).collect()).unwrap_or_default();
    if numbers != (1..=k).collect::<Vec<_>>() {
        violations.push(format!("revision list {numbers:?}"));
    }
    for (i, b) in bodies.iter().enumerate() {
        let rec = get(&api, &format!("/agents/writer/revisions/{}", i + 1));
        if rec["content"].as_str() != Some(b.as_str()) {
            violations.push(format!("revision {} content differs", i + 1));
        }
    }
    let again = call(&api, "PUT", "/agents/writer/plans", json!({"source": bodies.last().unwrap()}));
    let after = api.handle(&Request::get("/agents/writer/revisions")).body.unwrap_or_default();
    if again.body.unwrap_or_default()["created"] != json!(false) || after.as_array().map(Vec::len) != Some(k as usize) {
        violations.push("hash-identical PUT created a revision".into());
    }
    verdict(k as usize, violations, "plan PUTs").map(|m| format!("{m}; revisions 1..{k} gapless, identical PUT is a no-op"))
}

// ---------------------------------------------------------------- organisation

#[derive(Debug, Clone)]
pub struct Node {
    /// "leaf", "and" or "or"
    pub kind: &'static str,
    pub children: Vec<usize>,
}

/// Reference semantics written top-down, independently of the crate.
pub fn oracle_satisfied(tree: &[Node], i: usize, achieved: &BTreeSet<usize>) -> bool {
    let n = &tree[i];
    match n.kind {
        "leaf" => achieved.contains(&i),
        "and" => n.children.iter().all(|&c| oracle_satisfied(tree, c, achieved)),
        _ => n.children.iter().any(|&c| oracle_satisfied(tree, c, achieved)),
    }
}

pub fn oracle_enabled(tree: &[Node], i: usize, gate: bool, achieved: &BTreeSet<usize>, out: &mut BTreeSet<usize>) {
    let n = &tree[i];
    match n.kind {
        "leaf" => {
            if gate && !achieved.contains(&i) {
                out.insert(i);
            }
        }
        "and" => {
            let mut open = gate;
            for &c in &n.children {
                oracle_enabled(tree, c, open, achieved, out);
                open = open && oracle_satisfied(tree, c, achieved);
            }
        }
        _ => {
            let open = gate && !oracle_satisfied(tree, i, achieved);
            for &c in &n.children {
                oracle_enabled(tree, c, open, achieved, out);
            }
        }
    }
}

/// All ordered tree shapes with exactly `n` nodes, as child lists (root 0).
fn shapes(n: usize) -> Vec<Vec<Vec<usize>>> {
    fn forests(m: usize) -> Vec<Vec<Vec<Vec<usize>>>> {
        if m == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for first in 1..=m {
            for t in shapes(first) {
                for rest in forests(m - first) {
                    let mut f = vec![t.clone()];
                    f.extend(rest);
                    out.push(f);
                }
            }
        }
        out
    }
    forests(n - 1)
        .into_iter()
        .map(|forest| {
            let mut nodes: Vec<Vec<usize>> = vec![vec![]];
            for t in forest {
                let offset = nodes.len();
                nodes[0].push(offset);
                for ch in t {
                    nodes.push(ch.into_iter().map(|c| c + offset).collect());
                }
            }
            nodes
        })
        .collect()
}

/// Every and/or labelling of internal nodes.
fn labellings(shape: &[Vec<usize>]) -> Vec<Vec<Node>> {
    let internal: Vec<usize> = (0..shape.len()).filter(|&i| !shape[i].is_empty()).collect();
    (0..1u32 << internal.len())
        .map(|mask| {
            shape
                .iter()
                .enumerate()
                .map(|(i, ch)| {
                    let kind = match internal.iter().position(|&x| x == i) {
                        None => "leaf",
                        Some(bit) if mask & (1 << bit) != 0 => "or",
                        Some(_) => "and",
                    };
                    Node { kind, children: ch.clone() }
                })
                .collect()
        })
        .collect()
}

fn random_tree(g: &mut Gen, size: usize) -> Vec<Node> {
    // attach each new node under a random earlier node, keeping preorder-ish ids
    let mut children: Vec<Vec<usize>> = vec![vec![]];
    for i in 1..size {
        let parent = g.rng().gen_range(0..i);
        children[parent].push(i);
        children.push(vec![]);
    }
    children
        .into_iter()
        .map(|ch| {
            let kind = if ch.is_empty() {
                "leaf"
            } else if g.rng().gen_bool(0.5) {
                "and"
            } else {
                "or"
            };
            Node { kind, children: ch }
        })
        .collect()
}

fn goal_specs(tree: &[Node]) -> Vec<Value> {
    tree.iter()
        .enumerate()
        .map(|(i, n)| json!({"id": format!("g{i}"), "type": n.kind, "children": n.children.iter().map(|c| format!("g{c}")).collect::<Vec<_>>()}))
        .collect()
}

fn subsets(g: &mut Gen, leaves: &[usize]) -> Vec<BTreeSet<usize>> {
    if leaves.len() <= 10 {
        (0..1u32 << leaves.len())
            .map(|mask| leaves.iter().enumerate().filter(|(b, _)| mask & (1 << b) != 0).map(|(_, &l)| l).collect())
            .collect()
    } else {
        (0..1000).map(|_| leaves.iter().copied().filter(|_| g.rng().gen_bool(0.5)).collect()).collect()
    }
}

fn check_tree(tree: &[Node], sets: &[BTreeSet<usize>], violations: &mut Vec<String>) -> usize {
    let specs: Vec<GoalSpec> = serde_json::from_value(Value::Array(goal_specs(tree))).unwrap();
    let gt = match GoalTree::build("g0", &specs) {
        Ok(t) => t,
        Err(e) => {
            violations.push(format!("tree rejected: {e}"));
            return 0;
        }
    };
    let leaves: Vec<String> = (0..tree.len()).filter(|&i| tree[i].kind == "leaf").map(|i| format!("g{i}")).collect();
    for achieved in sets {
        let names: BTreeSet<String> = achieved.iter().map(|i| format!("g{i}")).collect();
        for i in 0..tree.len() {
            if gt.evaluate(&format!("g{i}"), &names) != oracle_satisfied(tree, i, achieved) {
                violations.push(format!("evaluate g{i} on {tree:?} with {achieved:?}"));
            }
        }
        let mut want = BTreeSet::new();
        oracle_enabled(tree, 0, true, achieved, &mut want);
        let got: BTreeSet<usize> = gt.enabled_among(&leaves, &names).iter().map(|g| g[1..].parse().unwrap()).collect();
        if got != want {
            violations.push(format!("enabled on {tree:?} with {achieved:?}: {got:?} != {want:?}"));
        }
    }
    sets.len()
}

/// Scheme completion and obligations while leaves are achieved one by one.
fn check_completion(g: &mut Gen, tree: &[Node], violations: &mut Vec<String>) {
    let leaves: Vec<usize> = (0..tree.len()).filter(|&i| tree[i].kind == "leaf").collect();
    let spec: OrgSpec = serde_json::from_value(json!({
        "name": "o",
        "roles": [{"name": "r", "max": 1}],
        "groups": [{"name": "grp", "roles": ["r"]}],
        "schemes": [{
            "name": "s",
            "root": "g0",
            "goals": goal_specs(tree),
            "missions": [{"name": "m", "goals": leaves.iter().map(|l| format!("g{l}")).collect::<Vec<_>>()}]
        }],
        "norms": [{"role": "r", "mission": "m"}]
    }))
    .unwrap();
    let mut org = Organisation::new(CompiledOrg::compile(spec).unwrap());
    org.adopt_role("ag", "grp", "r").unwrap();
    let mut order = leaves.clone();
    order.shuffle(g.rng());
    let mut achieved = BTreeSet::new();
    for step in std::iter::once(None).chain(order.into_iter().map(Some)) {
        if let Some(l) = step {
            org.set_goal_achieved("ag", "s", &format!("g{l}")).unwrap();
            achieved.insert(l);
        }
        let done = oracle_satisfied(tree, 0, &achieved);
        let view = org.scheme_view("s").unwrap();
        if org.is_completed("s") != done || (view.status == SchemeStatus::Completed) != done {
            violations.push(format!("completion on {tree:?} with {achieved:?}: expected {done}"));
        }
        let mut want = BTreeSet::new();
        oracle_enabled(tree, 0, true, &achieved, &mut want);
        let active: BTreeSet<usize> = view
            .obligations
            .iter()
            .filter(|o| o.state == ObligationState::Active)
            .map(|o| o.goal[1..].parse().unwrap())
            .collect();
        if active != want {
            violations.push(format!("obligations on {tree:?} with {achieved:?}: {active:?} != {want:?}"));
        }
    }
}

pub fn organisation_oracle(seed: u64) -> Outcome {
    let mut g = Gen::new(seed);
    let mut violations = Vec::new();
    let (mut trees, mut evaluations) = (0usize, 0usize);
    for n in 1..=7 {
        for shape in shapes(n) {
            for tree in labellings(&shape) {
                let leaves: Vec<usize> = (0..tree.len()).filter(|&i| tree[i].kind == "leaf").collect();
                let sets = subsets(&mut g, &leaves);
                evaluations += check_tree(&tree, &sets, &mut violations);
                trees += 1;
            }
        }
    }
    for _ in 0..400 {
        let size = g.rng().gen_range(8..=15);
        let tree = random_tree(&mut g, size);
        let leaves: Vec<usize> = (0..tree.len()).filter(|&i| tree[i].kind == "leaf").collect();
        let sets = subsets(&mut g, &leaves);
        evaluations += check_tree(&tree, &sets, &mut violations);
        trees += 1;
    }
    for _ in 0..300 {
        let size = g.rng().gen_range(1..=15);
        let tree = random_tree(&mut g, size);
        check_completion(&mut g, &tree, &mut violations);
    }
    verdict(evaluations, violations, "achieved-sets").map(|m| format!("{m} over {trees} trees; completion iff root holds on 300 runs"))
}

// ---------------------------------------------------------------- scenario

/// Boots the ping-pong project and drives it through the API only.
pub fn end_to_end_scenario() -> Outcome {
    let project = masrest::project::Project::load(project_path("pingpong.json"))
        .map_err(|d| format!("project invalid: {}", d.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")))?;
    let mas = project.boot(masrest::revision::RevisionStore::in_memory()).map_err(|e| e.to_string())?;
    let api = Api::new(mas.clone());
    for agent in ["ping", "pong"] {
        let r = call(&api, "POST", &format!("/agents/{agent}/inbox"), json!({"performative": "achieve", "content": "start"}));
        if r.status != 201 {
            return Err(format!("start {agent}: {}", r.status));
        }
        let r = call(&api, "POST", "/organisations/paper/groups/team/players", json!({"agent": agent, "role": "writer"}));
        if r.status != 201 {
            return Err(format!("adopt {agent}: {} {:?}", r.status, r.body));
        }
    }
    if !mas.run_until_quiescent(500) {
        return Err("system did not settle".into());
    }
    let counter = get(&api, "/workspaces/room/artifacts/c");
    let scheme = get(&api, "/organisations/paper/schemes/writing");
    let services = get(&api, "/services");
    let mut providers: Vec<&str> = services["services"]
        .as_object()
        .map(|m| m.values().flat_map(|v| v.as_array().unwrap().iter().filter_map(|e| e["agent"].as_str())).collect())
        .unwrap_or_default();
    providers.sort();
    let mut problems = Vec::new();
    if counter["properties"] != json!(["count(3)"]) {
        problems.push(format!("counter {}", counter["properties"]));
    }
    if scheme["status"] != "completed" {
        problems.push(format!("scheme {}", scheme["status"]));
    }
    if providers != ["ping", "pong"] {
        problems.push(format!("directory {providers:?}"));
    }
    if problems.is_empty() {
        Ok("count(3), scheme completed, directory lists ping and pong".into())
    } else {
        Err(problems.join("; "))
    }
}
