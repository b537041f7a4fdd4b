//! axum adapter: every request goes to one fallback handler that forwards
//! to [`Api::handle`].

use std::future::Future;

use axum::body::{Body, Bytes};
use axum::extract::State;
use axum::http::{header, HeaderName, HeaderValue, Method, StatusCode, Uri};
use axum::Router;
use tokio::net::TcpListener;

use super::{Api, Request, Response};

pub fn router(api: Api) -> Router {
    Router::new().fallback(handler).with_state(api)
}

async fn handler(State(api): State<Api>, method: Method, uri: Uri, body: Bytes) -> axum::response::Response {
    let target = uri.path_and_query().map_or("/", |p| p.as_str()).to_string();
    let req = Request::new(method.as_str(), &target, body.to_vec());
    log::debug!("{} {}", req.method, target);
    // Handlers take short std mutexes; keep them off the async workers.
    let resp = match tokio::task::spawn_blocking(move || api.handle(&req)).await {
        Ok(r) => r,
        Err(e) => {
            log::error!("request handler panicked: {e}");
            return axum::response::Response::builder()
                .status(StatusCode::INTERNAL_SERVER_ERROR)
                .body(Body::empty())
                .expect("static response");
        }
    };
    to_axum(resp)
}

fn to_axum(resp: Response) -> axum::response::Response {
    let bytes = resp.body_bytes();
    let mut out = axum::response::Response::new(Body::from(bytes));
    *out.status_mut() = StatusCode::from_u16(resp.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    let headers = out.headers_mut();
    if resp.body.is_some() {
        headers.insert(header::CONTENT_TYPE, HeaderValue::from_static("application/json"));
    }
    for (k, v) in &resp.headers {
        if let (Ok(k), Ok(v)) = (HeaderName::try_from(k.as_str()), HeaderValue::try_from(v.as_str())) {
            headers.append(k, v);
        }
    }
    out
}

/// Serves the API on `listener` until `shutdown` resolves.
pub async fn serve(
    api: Api,
    listener: TcpListener,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(api)).with_graceful_shutdown(shutdown).await
}
