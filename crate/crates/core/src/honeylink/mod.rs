//! Tracked short links: minting, the redirect-and-log server, and visitor
//! user-agent classification.

mod log;
mod registry;
mod server;
mod useragent;

pub use log::{parse_log, AccessLog, AccessLogEntry, FileSink, LogParse, LogSink, MemorySink};
pub use registry::{HoneyLink, LinkRegistry, TargetClass, Token, DEFAULT_TOKEN_LEN};
pub use server::{run_http, ClickRequest, LinkServer, ServeResponse};
pub use useragent::{parse_user_agent, Browser, Os};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinkError {
    #[error("invalid destination {url:?}: {reason}")]
    BadDestination { url: String, reason: String },
    #[error("token keyspace exhausted ({0} tokens in use)")]
    KeyspaceExhausted(usize),
    #[error("invalid token {0:?}")]
    BadToken(String),
    #[error("duplicate token {0} in registry")]
    DuplicateToken(String),
    #[error("malformed log line: {0}")]
    BadLogLine(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
