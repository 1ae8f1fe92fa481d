//! Collaborative planning rooms. A room owns one plan; members submit
//! changes over a websocket and every member receives the same ordered
//! stream of events.

pub mod error;
pub mod mirror;
pub mod protocol;
pub mod registry;
pub mod room;
pub mod server;
#[cfg(feature = "testkit")]
pub mod sim;

pub use error::CollabError;
pub use mirror::{ClientMirror, MirrorError};
pub use protocol::{ClientMessage, EntrySummary, ServerEvent, Snapshot, UserInfo, WireEntry};
pub use registry::{Registry, RoomHandle};
pub use room::{Outbound, Recipient, Room, PALETTE};
pub use server::{router, serve, AppState, IssueRequest, IssueResponse, PublishFn};
