//! HTTP and websocket front end for the room registry.
//!
//! * `GET /ws` upgrades to the room protocol; the first frame must be `join`.
//! * `POST /rooms` takes a structure document and answers `{"roomId"}`.
//! * `GET /rooms/{id}/layout` lays out the room's current effective model.
//! * `POST /issues` renders (and, when a publisher is configured, publishes)
//!   an issue draft against a room's changelog.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use cityplan_core::ingest::parse_structure;
use cityplan_core::layout::{layout_landscape, write_layout_file};
use cityplan_core::LayoutConfig;
use cityplan_issue::{
    render_markdown, GitLabTarget, HttpTransport, IssueDraft, IssueError, IssueRef, ProjectRef, Publisher,
    RenderedIssue, Screenshot,
};
use futures::{SinkExt, StreamExt};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::mpsc;

use crate::error::CollabError;
use crate::protocol::{ClientMessage, ServerEvent};
use crate::registry::Registry;

/// Publishes a rendered issue. Called on a blocking thread.
pub type PublishFn = Arc<dyn Fn(&RenderedIssue, &[Screenshot]) -> Result<IssueRef, IssueError> + Send + Sync>;

#[derive(Clone)]
pub struct AppState {
    pub registry: Arc<Registry>,
    pub publish: Option<PublishFn>,
}

impl AppState {
    pub fn new(registry: Arc<Registry>) -> Self {
        Self {
            registry,
            publish: None,
        }
    }

    pub fn with_publisher(mut self, publish: PublishFn) -> Self {
        self.publish = Some(publish);
        self
    }
}

/// A GitLab publisher configured from `GITLAB_URL`, `GITLAB_PROJECT` and
/// `GITLAB_TOKEN`, or `None` when `GITLAB_URL` or `GITLAB_PROJECT` is unset.
pub fn publisher_from_env() -> Result<Option<PublishFn>, IssueError> {
    let (Ok(url), Ok(project)) = (std::env::var("GITLAB_URL"), std::env::var("GITLAB_PROJECT")) else {
        return Ok(None);
    };
    let target = GitLabTarget::from_env(&url, ProjectRef::parse(&project))?;
    Ok(Some(gitlab_publisher(target)))
}

pub fn gitlab_publisher(target: GitLabTarget) -> PublishFn {
    Arc::new(move |issue, screenshots| {
        let transport = HttpTransport::new()?;
        Publisher::new(target.clone(), transport).publish(issue, screenshots)
    })
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/ws", get(ws_upgrade))
        .route("/rooms", post(create_room))
        .route("/rooms/:id/layout", get(room_layout))
        .route("/issues", post(post_issue))
        .with_state(state)
}

/// Serves until ctrl-c.
pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

fn error_response(status: StatusCode, reason: &str, message: impl ToString) -> Response {
    (status, Json(json!({ "reason": reason, "message": message.to_string() }))).into_response()
}

fn collab_error_response(error: &CollabError) -> Response {
    let status = match error {
        CollabError::UnknownRoom(_) => StatusCode::NOT_FOUND,
        _ => StatusCode::BAD_REQUEST,
    };
    error_response(status, error.kind(), error)
}

async fn ws_upgrade(ws: WebSocketUpgrade, State(state): State<AppState>) -> Response {
    ws.on_upgrade(move |socket| session(socket, state))
}

async fn send_error(socket: &mut WebSocket, error: &CollabError) {
    let event = ServerEvent::Error {
        reason: error.kind().into(),
        message: error.to_string(),
    };
    let _ = socket.send(Message::Text(event.to_text())).await;
    let _ = socket.send(Message::Close(None)).await;
}

async fn first_text(socket: &mut WebSocket) -> Option<String> {
    while let Some(Ok(message)) = socket.recv().await {
        match message {
            Message::Text(text) => return Some(text),
            Message::Close(_) => return None,
            _ => {}
        }
    }
    None
}

async fn session(mut socket: WebSocket, state: AppState) {
    let Some(text) = first_text(&mut socket).await else {
        return;
    };
    let (room_id, name) = match serde_json::from_str::<ClientMessage>(&text) {
        Ok(ClientMessage::Join { room, name }) => (room, name),
        Ok(_) => return send_error(&mut socket, &CollabError::NotMember("anonymous".into())).await,
        Err(e) => return send_error(&mut socket, &CollabError::MalformedMessage(e.to_string())).await,
    };
    let handle = match state.registry.room(&room_id) {
        Ok(handle) => handle,
        Err(e) => return send_error(&mut socket, &e).await,
    };
    let (tx, mut rx) = mpsc::unbounded_channel();
    let user_id = match handle.join(&name, tx) {
        Ok(user_id) => user_id,
        Err(e) => return send_error(&mut socket, &e).await,
    };
    log::info!("{user_id} joined room {room_id}");

    let (mut sink, mut stream) = socket.split();
    let writer = tokio::spawn(async move {
        while let Some(event) = rx.recv().await {
            if sink.send(Message::Text(event.to_text())).await.is_err() {
                break;
            }
        }
        let _ = sink.close().await;
    });
    while let Some(Ok(message)) = stream.next().await {
        match message {
            Message::Text(text) => handle.submit_text(&user_id, &text),
            Message::Binary(_) => handle.submit_text(&user_id, "<binary frame>"),
            Message::Close(_) => break,
            Message::Ping(_) | Message::Pong(_) => {}
        }
    }
    handle.leave(&user_id);
    log::info!("{user_id} left room {room_id}");
    let _ = writer.await;
}

async fn create_room(State(state): State<AppState>, body: Bytes) -> Response {
    let landscape = match parse_structure(&body) {
        Ok(landscape) => landscape,
        Err(e) => return error_response(StatusCode::BAD_REQUEST, e.kind(), e),
    };
    match state.registry.create_room(landscape) {
        Ok(room_id) => (StatusCode::CREATED, Json(json!({ "roomId": room_id }))).into_response(),
        Err(e) => collab_error_response(&e),
    }
}

async fn room_layout(State(state): State<AppState>, Path(id): Path<String>) -> Response {
    let handle = match state.registry.room(&id) {
        Ok(handle) => handle,
        Err(e) => return collab_error_response(&e),
    };
    let landscape = handle.with_room(|room| room.plan().model().to_landscape());
    match layout_landscape(&landscape, &LayoutConfig::default()) {
        Ok(layout) => (
            [(header::CONTENT_TYPE, "application/json")],
            write_layout_file(&layout),
        )
            .into_response(),
        Err(e) => error_response(StatusCode::INTERNAL_SERVER_ERROR, e.kind(), e),
    }
}

/// `POST /issues` body.
#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct IssueRequest {
    pub room: String,
    pub draft: IssueDraft,
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum IssueResponse {
    Preview { title: String, body: String },
    Published { title: String, body: String, url: String, iid: u64 },
}

fn issue_status(error: &IssueError) -> StatusCode {
    match error {
        IssueError::EmptySelection
        | IssueError::UnknownEntry(_)
        | IssueError::InvalidDraft(_)
        | IssueError::InvalidMention(_) => StatusCode::UNPROCESSABLE_ENTITY,
        IssueError::AuthFailed(_)
        | IssueError::ProjectNotFound
        | IssueError::RemoteError { .. }
        | IssueError::TransportError(_) => StatusCode::BAD_GATEWAY,
        IssueError::MissingToken | IssueError::IoError(_) => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

async fn post_issue(State(state): State<AppState>, body: Bytes) -> Response {
    let request: IssueRequest = match serde_json::from_slice(&body) {
        Ok(request) => request,
        Err(e) => return error_response(StatusCode::BAD_REQUEST, "MalformedMessage", e),
    };
    let handle = match state.registry.room(&request.room) {
        Ok(handle) => handle,
        Err(e) => return collab_error_response(&e),
    };
    let changelog = match handle.with_room(|room| room.plan().changelog_export()) {
        Ok(changelog) => changelog,
        Err(e) => return error_response(StatusCode::INTERNAL_SERVER_ERROR, e.kind(), e),
    };
    let rendered = match render_markdown(&request.draft, &changelog) {
        Ok(rendered) => rendered,
        Err(e) => return error_response(issue_status(&e), e.kind(), e),
    };
    let Some(publish) = state.publish.clone() else {
        return Json(IssueResponse::Preview {
            title: rendered.title,
            body: rendered.body,
        })
        .into_response();
    };
    let screenshots = request.draft.screenshots;
    let task = tokio::task::spawn_blocking(move || {
        let result = publish(&rendered, &screenshots);
        (rendered, result)
    });
    match task.await {
        Ok((rendered, Ok(issue))) => (
            StatusCode::CREATED,
            Json(IssueResponse::Published {
                title: rendered.title,
                body: rendered.body,
                url: issue.url,
                iid: issue.iid,
            }),
        )
            .into_response(),
        Ok((_, Err(e))) => error_response(issue_status(&e), e.kind(), e),
        Err(e) => error_response(StatusCode::INTERNAL_SERVER_ERROR, "TransportError", e),
    }
}
