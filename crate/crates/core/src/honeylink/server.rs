use std::future::Future;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Body;
use axum::extract::{ConnectInfo, State};
use axum::http::{header, HeaderMap, Method, Response, StatusCode, Uri};
use axum::Router;
use tokio::net::TcpListener;

use super::log::{AccessLog, AccessLogEntry};
use super::registry::LinkRegistry;
use crate::time::Timestamp;

/// A request as the tracker sees it, independent of the HTTP stack.
#[derive(Debug, Clone)]
pub struct ClickRequest {
    pub peer: SocketAddr,
    pub method: String,
    /// Path including any query string.
    pub path: String,
    pub headers: Vec<(String, String)>,
    pub received_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServeResponse {
    pub status: u16,
    pub location: Option<String>,
}

/// The redirect-and-log handler. Cheap to clone; the registry is read-only
/// while serving and all log writes go through one [`AccessLog`].
#[derive(Clone)]
pub struct LinkServer {
    registry: Arc<LinkRegistry>,
    log: Arc<AccessLog>,
}

fn route_token<'a>(method: &str, path: &'a str) -> Option<&'a str> {
    if method != "GET" && method != "HEAD" {
        return None;
    }
    let path = path.split(['?', '#']).next().unwrap_or_default();
    let token = path.strip_prefix("/t/")?;
    (!token.is_empty() && token.bytes().all(|b| b.is_ascii_alphanumeric())).then_some(token)
}

impl LinkServer {
    pub fn new(registry: Arc<LinkRegistry>, log: Arc<AccessLog>) -> Self {
        LinkServer { registry, log }
    }

    pub fn registry(&self) -> &LinkRegistry {
        &self.registry
    }

    pub fn log(&self) -> &AccessLog {
        &self.log
    }

    /// Logs the request, then decides the response: 302 to the redirect
    /// target for `/t/<known token>`, 404 for everything else. A failed log
    /// write is counted by the [`AccessLog`] and does not change the answer.
    pub fn handle(&self, req: ClickRequest) -> ServeResponse {
        let token = route_token(&req.method, &req.path)
            .filter(|t| self.registry.resolve(t).is_some())
            .map(str::to_string);
        let found = token.is_some();
        let entry = AccessLogEntry {
            ip: req.peer.ip().to_canonical(),
            port: req.peer.port(),
            method: req.method,
            path: req.path,
            headers: req.headers,
            received_at: req.received_at,
            token,
        };
        let _ = self.log.record(entry);
        if found {
            ServeResponse { status: 302, location: Some(self.registry.redirect_target().to_string()) }
        } else {
            ServeResponse { status: 404, location: None }
        }
    }
}

async fn track(
    State(server): State<LinkServer>,
    ConnectInfo(peer): ConnectInfo<SocketAddr>,
    method: Method,
    uri: Uri,
    headers: HeaderMap,
) -> Response<Body> {
    let path = uri.path_and_query().map(|p| p.as_str().to_string()).unwrap_or_else(|| uri.path().to_string());
    let headers = headers
        .iter()
        .map(|(name, value)| (name.as_str().to_string(), String::from_utf8_lossy(value.as_bytes()).into_owned()))
        .collect();
    let req = ClickRequest { peer, method: method.as_str().to_string(), path, headers, received_at: crate::time::now() };
    let resp = server.handle(req);
    let mut builder = Response::builder().status(StatusCode::from_u16(resp.status).expect("valid status"));
    if let Some(location) = resp.location {
        builder = builder.header(header::LOCATION, location);
        builder.body(Body::empty()).expect("valid response")
    } else {
        builder.header(header::CONTENT_TYPE, "text/plain").body(Body::from("Not Found\n")).expect("valid response")
    }
}

/// Serves HTTP/1.1 on `listener` until `shutdown` resolves.
pub async fn run_http(
    server: LinkServer,
    listener: TcpListener,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let app = Router::new().fallback(track).with_state(server);
    axum::serve(listener, app.into_make_service_with_connect_info::<SocketAddr>())
        .with_graceful_shutdown(shutdown)
        .await
}
