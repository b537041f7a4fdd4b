//! Breadth-first hypermedia crawl, used to check that every advertised link
//! resolves and that the graph reaches every documented GET route.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::routes::RouteId;
use super::{extract_links, route_of, Api, Request};

#[derive(Debug, Default)]
pub struct WalkReport {
    /// Every GET-able href reached, with the status it answered.
    pub visited: BTreeMap<String, u16>,
    pub routes: BTreeSet<RouteId>,
    /// Human-readable descriptions of broken or inconsistent links.
    pub problems: Vec<String>,
}

/// Follows GET links from `start` until no new hrefs appear or `limit`
/// resources have been fetched.
pub fn walk(api: &Api, start: &str, limit: usize) -> WalkReport {
    let mut report = WalkReport::default();
    let mut queue = VecDeque::from([(String::from("(start)"), start.to_string())]);
    let mut seen = BTreeSet::from([start.to_string()]);
    while let Some((from, href)) = queue.pop_front() {
        if report.visited.len() >= limit {
            break;
        }
        let resp = api.handle(&Request::get(&href));
        report.visited.insert(href.clone(), resp.status);
        if resp.status != 200 {
            report.problems.push(format!("{from} -> {href}: status {}", resp.status));
            continue;
        }
        if let Some(r) = route_of(&href) {
            report.routes.insert(r.id);
        }
        let links = extract_links(&resp);
        if links.is_empty() {
            report.problems.push(format!("{href}: no links"));
        }
        for l in links {
            let target = l["href"].as_str().unwrap_or_default().to_string();
            let Some(route) = route_of(&target) else {
                report.problems.push(format!("{href} -> {target}: matches no route"));
                continue;
            };
            let methods: Vec<&str> = l["methods"]
                .as_array()
                .map(|a| a.iter().filter_map(|m| m.as_str()).collect())
                .unwrap_or_default();
            if methods != route.methods {
                report.problems.push(format!("{href} -> {target}: methods {methods:?} != {:?}", route.methods));
            }
            if methods.contains(&"GET") && seen.insert(target.clone()) {
                queue.push_back((href.clone(), target));
            }
        }
    }
    report
}
