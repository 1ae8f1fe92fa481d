//! Room lookup and per-room serialization.
//!
//! Each room sits behind its own mutex together with the member outboxes.
//! Events are pushed into the outboxes while the lock is held, so every
//! member observes the same total order and per-member delivery is FIFO.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use cityplan_core::Landscape;
use parking_lot::Mutex;
use rand::Rng;
use tokio::sync::mpsc::UnboundedSender;

use crate::error::CollabError;
use crate::protocol::ServerEvent;
use crate::room::{Outbound, Room};

pub const ROOM_ID_LEN: usize = 8;

pub type Outbox = UnboundedSender<ServerEvent>;

const ROOM_ID_CHARS: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789";

pub fn random_room_id<R: Rng>(rng: &mut R) -> String {
    (0..ROOM_ID_LEN)
        .map(|_| ROOM_ID_CHARS[rng.gen_range(0..ROOM_ID_CHARS.len())] as char)
        .collect()
}

struct Shared {
    room: Room,
    outboxes: BTreeMap<String, Outbox>,
}

impl Shared {
    fn deliver(&mut self, events: Vec<Outbound>) {
        for out in events {
            for (user, outbox) in &self.outboxes {
                if out.to.includes(user) {
                    // A closed outbox belongs to a member whose leave is pending.
                    let _ = outbox.send(out.event.clone());
                }
            }
        }
    }
}

/// A room plus the outboxes of its connected members.
pub struct RoomHandle {
    shared: Mutex<Shared>,
}

impl RoomHandle {
    fn new(room: Room) -> Self {
        Self {
            shared: Mutex::new(Shared {
                room,
                outboxes: BTreeMap::new(),
            }),
        }
    }

    /// Admits a member. The welcome is the first event in `outbox`.
    pub fn join(&self, name: &str, outbox: Outbox) -> Result<String, CollabError> {
        let mut shared = self.shared.lock();
        let (user_id, events) = shared.room.join(name)?;
        shared.outboxes.insert(user_id.clone(), outbox);
        shared.deliver(events);
        Ok(user_id)
    }

    pub fn submit_text(&self, user_id: &str, text: &str) {
        let mut shared = self.shared.lock();
        let events = shared.room.handle_text(user_id, text);
        shared.deliver(events);
    }

    pub fn leave(&self, user_id: &str) {
        let mut shared = self.shared.lock();
        shared.outboxes.remove(user_id);
        let events = shared.room.leave(user_id);
        shared.deliver(events);
    }

    /// Runs `f` against the room state under the room lock.
    pub fn with_room<T>(&self, f: impl FnOnce(&Room) -> T) -> T {
        f(&self.shared.lock().room)
    }
}

#[derive(Default)]
pub struct Registry {
    rooms: Mutex<HashMap<String, Arc<RoomHandle>>>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn create_room(&self, base: Landscape) -> Result<String, CollabError> {
        self.create_room_with(&mut rand::thread_rng(), base)
    }

    pub fn create_room_with<R: Rng>(&self, rng: &mut R, base: Landscape) -> Result<String, CollabError> {
        let mut rooms = self.rooms.lock();
        let id = loop {
            let id = random_room_id(rng);
            if !rooms.contains_key(&id) {
                break id;
            }
        };
        let room = Room::new(id.clone(), base)?;
        rooms.insert(id.clone(), Arc::new(RoomHandle::new(room)));
        log::info!("created room {id}");
        Ok(id)
    }

    pub fn room(&self, id: &str) -> Result<Arc<RoomHandle>, CollabError> {
        self.rooms
            .lock()
            .get(id)
            .cloned()
            .ok_or_else(|| CollabError::UnknownRoom(id.to_owned()))
    }

    pub fn room_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.rooms.lock().keys().cloned().collect();
        ids.sort();
        ids
    }
}
