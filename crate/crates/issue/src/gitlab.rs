//! Publishing rendered issues through the GitLab v4 REST API.

use std::fmt;
use std::sync::Mutex;
use std::time::Duration;

use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use serde::{Deserialize, Serialize};

use crate::draft::{image_placeholder, RenderedIssue, Screenshot};
use crate::error::IssueError;

const PATH_SEGMENT: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-').remove(b'_').remove(b'.').remove(b'~');

/// Longest Retry-After we are willing to wait.
const MAX_RETRY_AFTER: Duration = Duration::from_secs(60);

/// A secret string that never shows up in `Debug` or `Display` output.
#[derive(Clone, PartialEq, Eq)]
pub struct Token(String);

impl Token {
    pub fn new(value: impl Into<String>) -> Self {
        Self(value.into())
    }

    pub fn expose(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Token(***)")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProjectRef {
    Id(u64),
    /// `group/subgroup/project`
    Path(String),
}

impl ProjectRef {
    /// Numeric strings are ids, anything else is a namespaced path.
    pub fn parse(value: &str) -> Self {
        match value.parse() {
            Ok(id) => ProjectRef::Id(id),
            Err(_) => ProjectRef::Path(value.to_owned()),
        }
    }

    pub fn url_segment(&self) -> String {
        match self {
            ProjectRef::Id(id) => id.to_string(),
            ProjectRef::Path(path) => utf8_percent_encode(path, PATH_SEGMENT).to_string(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GitLabTarget {
    pub base_url: String,
    pub project: ProjectRef,
    pub token: Token,
}

impl GitLabTarget {
    pub fn new(base_url: &str, project: ProjectRef, token: Token) -> Self {
        Self {
            base_url: base_url.trim_end_matches('/').to_owned(),
            project,
            token,
        }
    }

    /// Takes the token from `GITLAB_TOKEN`.
    pub fn from_env(base_url: &str, project: ProjectRef) -> Result<Self, IssueError> {
        match std::env::var("GITLAB_TOKEN") {
            Ok(token) if !token.is_empty() => Ok(Self::new(base_url, project, Token::new(token))),
            _ => Err(IssueError::MissingToken),
        }
    }

    fn project_url(&self) -> String {
        format!("{}/api/v4/projects/{}", self.base_url, self.project.url_segment())
    }
}

#[derive(Clone, PartialEq, Eq)]
pub enum RequestBody {
    Form(Vec<(String, String)>),
    File {
        field: String,
        file_name: String,
        content_type: String,
        bytes: Vec<u8>,
    },
}

#[derive(Clone, PartialEq, Eq)]
pub struct HttpRequest {
    pub url: String,
    pub headers: Vec<(String, String)>,
    pub body: RequestBody,
}

impl fmt::Debug for HttpRequest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let headers: Vec<(&str, &str)> = self
            .headers
            .iter()
            .map(|(k, v)| {
                if k.eq_ignore_ascii_case("private-token") {
                    (k.as_str(), "***")
                } else {
                    (k.as_str(), v.as_str())
                }
            })
            .collect();
        let body = match &self.body {
            RequestBody::Form(fields) => format!("form {:?}", fields.iter().map(|(k, _)| k).collect::<Vec<_>>()),
            RequestBody::File { field, file_name, bytes, .. } => {
                format!("multipart {field}={file_name} ({} bytes)", bytes.len())
            }
        };
        f.debug_struct("HttpRequest")
            .field("url", &self.url)
            .field("headers", &headers)
            .field("body", &body)
            .finish()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
}

impl HttpResponse {
    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }
}

/// Sends POST requests. Implemented over HTTP by [`HttpTransport`] and by
/// recording mocks in tests.
pub trait Transport {
    /// `Err` carries a description of a connection-level failure.
    fn post(&self, request: &HttpRequest) -> Result<HttpResponse, String>;

    fn sleep(&self, duration: Duration) {
        std::thread::sleep(duration);
    }
}

/// Blocking reqwest client. Must not be driven from inside an async runtime
/// thread.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new() -> Result<Self, IssueError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(30))
            .build()
            .map_err(|e| IssueError::TransportError(e.to_string()))?;
        Ok(Self { client })
    }
}

impl Transport for HttpTransport {
    fn post(&self, request: &HttpRequest) -> Result<HttpResponse, String> {
        let mut builder = self.client.post(&request.url);
        for (k, v) in &request.headers {
            builder = builder.header(k, v);
        }
        builder = match &request.body {
            RequestBody::Form(fields) => builder.form(fields),
            RequestBody::File {
                field,
                file_name,
                content_type,
                bytes,
            } => {
                let part = reqwest::blocking::multipart::Part::bytes(bytes.clone())
                    .file_name(file_name.clone())
                    .mime_str(content_type)
                    .map_err(|e| e.to_string())?;
                builder.multipart(reqwest::blocking::multipart::Form::new().part(field.clone(), part))
            }
        };
        let response = builder.send().map_err(|e| e.without_url().to_string())?;
        let status = response.status().as_u16();
        let headers = response
            .headers()
            .iter()
            .filter_map(|(k, v)| Some((k.as_str().to_owned(), v.to_str().ok()?.to_owned())))
            .collect();
        let body = response.bytes().map_err(|e| e.without_url().to_string())?.to_vec();
        Ok(HttpResponse { status, headers, body })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssueRef {
    pub url: String,
    pub iid: u64,
}

#[derive(Deserialize)]
struct UploadReply {
    markdown: String,
}

#[derive(Deserialize)]
struct IssueReply {
    iid: u64,
    web_url: String,
}

fn content_type(file_name: &str) -> &'static str {
    let lower = file_name.to_ascii_lowercase();
    match lower.rsplit('.').next() {
        Some("png") => "image/png",
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("gif") => "image/gif",
        Some("webp") => "image/webp",
        _ => "application/octet-stream",
    }
}

/// Publishes issues to one GitLab project.
pub struct Publisher<T> {
    target: GitLabTarget,
    transport: T,
}

impl<T: Transport> Publisher<T> {
    pub fn new(target: GitLabTarget, transport: T) -> Self {
        Self { target, transport }
    }

    pub fn transport(&self) -> &T {
        &self.transport
    }

    /// Uploads every screenshot, swaps its placeholder line for the
    /// returned markdown and creates the issue.
    pub fn publish(&self, issue: &RenderedIssue, screenshots: &[Screenshot]) -> Result<IssueRef, IssueError> {
        self.publish_inner(issue, screenshots).map_err(|e| self.scrub(e))
    }

    fn publish_inner(&self, issue: &RenderedIssue, screenshots: &[Screenshot]) -> Result<IssueRef, IssueError> {
        let base = self.target.project_url();
        let mut body = issue.body.clone();
        for shot in screenshots {
            let request = self.request(
                format!("{base}/uploads"),
                RequestBody::File {
                    field: "file".into(),
                    file_name: shot.file_name.clone(),
                    content_type: content_type(&shot.file_name).into(),
                    bytes: shot.data.clone(),
                },
            );
            let reply: UploadReply = self.call(&request)?;
            let placeholder = image_placeholder(&shot.file_name);
            if body.contains(&placeholder) {
                body = body.replacen(&placeholder, &reply.markdown, 1);
            } else {
                body.push_str("\n\n");
                body.push_str(&reply.markdown);
            }
        }
        let request = self.request(
            format!("{base}/issues"),
            RequestBody::Form(vec![
                ("title".into(), issue.title.clone()),
                ("description".into(), body),
            ]),
        );
        let reply: IssueReply = self.call(&request)?;
        log::info!("created issue #{} at {}", reply.iid, reply.web_url);
        Ok(IssueRef {
            url: reply.web_url,
            iid: reply.iid,
        })
    }

    fn request(&self, url: String, body: RequestBody) -> HttpRequest {
        HttpRequest {
            url,
            headers: vec![("PRIVATE-TOKEN".into(), self.target.token.expose().to_owned())],
            body,
        }
    }

    fn call<R: for<'de> Deserialize<'de>>(&self, request: &HttpRequest) -> Result<R, IssueError> {
        let mut retried = false;
        loop {
            log::debug!("POST {}", request.url);
            let response = self.transport.post(request).map_err(IssueError::TransportError)?;
            log::debug!("HTTP {} from {}", response.status, request.url);
            match response.status {
                200..=299 => {
                    return serde_json::from_slice(&response.body).map_err(|e| IssueError::RemoteError {
                        status: response.status,
                        message: format!("unexpected reply: {e}"),
                    })
                }
                401 | 403 => return Err(IssueError::AuthFailed(response.status)),
                404 => return Err(IssueError::ProjectNotFound),
                500..=599 if !retried => {
                    let wait = response
                        .header("retry-after")
                        .and_then(|v| v.trim().parse::<u64>().ok())
                        .map(Duration::from_secs);
                    match wait {
                        Some(wait) => {
                            let wait = wait.min(MAX_RETRY_AFTER);
                            log::warn!("HTTP {} from GitLab, retrying in {}s", response.status, wait.as_secs());
                            self.transport.sleep(wait);
                            retried = true;
                        }
                        None => return Err(remote(&response)),
                    }
                }
                _ => return Err(remote(&response)),
            }
        }
    }

    /// Removes the token from anything an error might echo back.
    fn scrub(&self, error: IssueError) -> IssueError {
        let token = self.target.token.expose();
        if token.is_empty() {
            return error;
        }
        let clean = |s: String| s.replace(token, "***");
        match error {
            IssueError::RemoteError { status, message } => IssueError::RemoteError {
                status,
                message: clean(message),
            },
            IssueError::TransportError(m) => IssueError::TransportError(clean(m)),
            other => other,
        }
    }
}

fn remote(response: &HttpResponse) -> IssueError {
    let text = String::from_utf8_lossy(&response.body);
    let message = serde_json::from_str::<serde_json::Value>(&text)
        .ok()
        .and_then(|v| v.get("message").or_else(|| v.get("error")).map(|m| m.to_string()))
        .unwrap_or_else(|| text.chars().take(200).collect());
    IssueError::RemoteError {
        status: response.status,
        message,
    }
}

/// Transport that answers from a script and records every request.
#[derive(Default)]
pub struct MockTransport {
    replies: Mutex<Vec<Result<HttpResponse, String>>>,
    requests: Mutex<Vec<HttpRequest>>,
    sleeps: Mutex<Vec<Duration>>,
}

impl MockTransport {
    /// Replies are served in order; running out yields a transport error.
    pub fn new(replies: Vec<Result<HttpResponse, String>>) -> Self {
        Self {
            replies: Mutex::new(replies.into_iter().rev().collect()),
            ..Default::default()
        }
    }

    pub fn json(status: u16, body: serde_json::Value) -> Result<HttpResponse, String> {
        Ok(HttpResponse {
            status,
            headers: vec![("content-type".into(), "application/json".into())],
            body: body.to_string().into_bytes(),
        })
    }

    pub fn requests(&self) -> Vec<HttpRequest> {
        self.requests.lock().expect("mock lock").clone()
    }

    pub fn sleeps(&self) -> Vec<Duration> {
        self.sleeps.lock().expect("mock lock").clone()
    }
}

impl Transport for MockTransport {
    fn post(&self, request: &HttpRequest) -> Result<HttpResponse, String> {
        self.requests.lock().expect("mock lock").push(request.clone());
        self.replies
            .lock()
            .expect("mock lock")
            .pop()
            .unwrap_or_else(|| Err("mock transport has no more replies".into()))
    }

    fn sleep(&self, duration: Duration) {
        self.sleeps.lock().expect("mock lock").push(duration);
    }
}
