#![allow(dead_code)]

pub mod criteria;
pub mod gen;

use std::path::PathBuf;

use masrest::rest::{Api, Request, Response};
use serde_json::Value;

pub fn project_path(file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("projects").join(file)
}

pub fn call(api: &Api, method: &str, target: &str, body: Value) -> Response {
    let bytes = if body.is_null() { Vec::new() } else { serde_json::to_vec(&body).unwrap() };
    api.handle(&Request::new(method, target, bytes))
}

pub fn get(api: &Api, target: &str) -> Value {
    let r = api.handle(&Request::get(target));
    assert_eq!(r.status, 200, "GET {target}: {:?}", r.body);
    r.body.unwrap_or(Value::Null)
}
