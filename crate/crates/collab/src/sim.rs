//! Simulated protocol clients for convergence checks. Every event and
//! submission goes through its JSON text form, as it would on the wire.

use std::collections::BTreeMap;

use cityplan_core::testkit::random_op;
use cityplan_core::{EntityId, Landscape};
use rand::rngs::StdRng;
use rand::seq::IteratorRandom;
use rand::{Rng, SeedableRng};
use tokio::sync::mpsc::{unbounded_channel, UnboundedReceiver};

use crate::mirror::ClientMirror;
use crate::protocol::{ClientMessage, ServerEvent};
use crate::registry::{Registry, RoomHandle};

struct SimClient {
    user_id: String,
    inbox: UnboundedReceiver<ServerEvent>,
    mirror: ClientMirror,
    last_seq: u64,
}

impl SimClient {
    /// Applies every pending event; returns the events in arrival order.
    fn drain(&mut self, report: &mut ConvergenceReport) -> Vec<ServerEvent> {
        let mut seen = vec![];
        while let Ok(event) = self.inbox.try_recv() {
            let event: ServerEvent = serde_json::from_str(&event.to_text()).expect("event round trips");
            if let ServerEvent::Applied { seq, .. } = &event {
                if *seq != self.last_seq + 1 {
                    report.gaps += 1;
                }
                self.last_seq = *seq;
            }
            if let Err(e) = self.mirror.apply(&event) {
                report.mismatches.push(format!("{}: {e}", self.user_id));
            }
            seen.push(event);
        }
        seen
    }
}

#[derive(Clone, Debug, Default)]
pub struct ConvergenceReport {
    pub clients: usize,
    pub submissions: usize,
    pub applied: usize,
    pub rejected: usize,
    /// Rejected submissions after which the room's event sequence moved.
    pub rejected_seq_changes: usize,
    /// Rejected submissions that reached a member other than the sender.
    pub rejected_leaks: usize,
    pub gaps: usize,
    pub final_seq: u64,
    pub final_entries: usize,
    pub peak_entries: usize,
    pub mismatches: Vec<String>,
}

impl ConvergenceReport {
    pub fn converged(&self) -> bool {
        self.mismatches.is_empty() && self.gaps == 0 && self.rejected_seq_changes == 0 && self.rejected_leaks == 0
    }
}

fn join(handle: &RoomHandle, name: &str, report: &mut ConvergenceReport) -> SimClient {
    let (tx, mut inbox) = unbounded_channel();
    let user_id = handle.join(name, tx).expect("join");
    let welcome = inbox.try_recv().expect("welcome first");
    let welcome: ServerEvent = serde_json::from_str(&welcome.to_text()).expect("welcome round trips");
    let mirror = ClientMirror::from_welcome(&welcome).unwrap_or_else(|e| {
        report.mismatches.push(format!("{name}: {e}"));
        panic!("welcome does not replay: {e}");
    });
    SimClient {
        user_id,
        inbox,
        last_seq: mirror.seq,
        mirror,
    }
}

fn random_message(rng: &mut StdRng, mirror: &ClientMirror) -> ClientMessage {
    match rng.gen_range(0..10) {
        0..=6 => ClientMessage::Op {
            op: random_op(rng, mirror.plan.model()),
        },
        7 => {
            let known = mirror.plan.entries().iter().map(|e| e.id).choose(rng);
            let entry_id = match known {
                Some(id) if rng.gen_bool(0.85) => id,
                _ => rng.gen_range(1..mirror.plan.next_entry_id() + 3),
            };
            ClientMessage::Undo { entry_id }
        }
        _ => {
            let entity_id = match rng.gen_range(0..6) {
                0 => None,
                1 => Some(EntityId::from("base-nowhere")),
                _ => mirror.plan.model().nodes().map(|(id, _)| id.clone()).choose(rng),
            };
            ClientMessage::Select { entity_id }
        }
    }
}

/// Runs `submissions` random submissions from `clients` members through one
/// room. Members lag behind by a random number of events, so many ops are
/// generated against stale state. One extra member joins halfway through.
pub fn run_convergence(base: Landscape, seed: u64, clients: usize, submissions: usize) -> ConvergenceReport {
    let mut rng = StdRng::seed_from_u64(seed);
    let registry = Registry::new();
    let room_id = registry.create_room_with(&mut rng, base).expect("valid base");
    let handle = registry.room(&room_id).expect("room exists");
    let mut report = ConvergenceReport {
        clients,
        submissions,
        ..Default::default()
    };
    let mut members: Vec<SimClient> = (0..clients)
        .map(|i| join(&handle, &format!("client{i}"), &mut report))
        .collect();

    for step in 0..submissions {
        if step == submissions / 2 {
            let late = join(&handle, "latecomer", &mut report);
            members.push(late);
        }
        let sender = rng.gen_range(0..members.len());
        let message = random_message(&mut rng, &members[sender].mirror);
        let is_change = !matches!(message, ClientMessage::Select { .. });
        let text = serde_json::to_string(&message).expect("message serializes");

        let pending: Vec<usize> = members.iter().map(|m| m.inbox.len()).collect();
        let seq_before = handle.with_room(|r| r.event_seq());
        handle.submit_text(&members[sender].user_id, &text);
        let seq_after = handle.with_room(|r| r.event_seq());

        let events = members[sender].drain(&mut report);
        let rejected = matches!(events.last(), Some(ServerEvent::Rejected { .. }));
        if rejected {
            report.rejected += 1;
            if seq_after != seq_before {
                report.rejected_seq_changes += 1;
            }
            let leaked = members
                .iter()
                .enumerate()
                .any(|(i, m)| i != sender && m.inbox.len() != pending[i]);
            if leaked {
                report.rejected_leaks += 1;
            }
        } else if is_change {
            report.applied += 1;
            let entries = handle.with_room(|r| r.plan().entries().len());
            report.peak_entries = report.peak_entries.max(entries);
            if seq_after != seq_before + 1 {
                report.mismatches.push(format!("step {step}: applied without seq step"));
            }
        }

        for (i, member) in members.iter_mut().enumerate() {
            if i != sender && rng.gen_bool(0.3) {
                member.drain(&mut report);
            }
        }
    }
    for member in &mut members {
        member.drain(&mut report);
    }

    let (server_model, server_entries, server_selections, seq, summaries) = handle.with_room(|r| {
        let summaries: BTreeMap<_, _> = r
            .plan()
            .changelog_export()
            .expect("server changelog renders")
            .into_iter()
            .map(|e| (e.id, e.summary))
            .collect();
        (
            r.plan().model().canonical_json(),
            r.plan().entries().to_vec(),
            r.selections().clone(),
            r.event_seq(),
            summaries,
        )
    });
    report.final_seq = seq;
    report.final_entries = server_entries.len();
    for member in &members {
        let m = &member.mirror;
        let who = &member.user_id;
        if m.plan.model().canonical_json() != server_model {
            report.mismatches.push(format!("{who}: effective model differs"));
        }
        if m.plan.entries() != server_entries.as_slice() {
            report.mismatches.push(format!("{who}: changelog differs"));
        }
        if m.summaries != summaries {
            report.mismatches.push(format!("{who}: summaries differ"));
        }
        if m.selections != server_selections {
            report.mismatches.push(format!("{who}: selections differ"));
        }
        if m.seq != seq {
            report.mismatches.push(format!("{who}: at seq {} of {seq}", m.seq));
        }
    }
    report
}
