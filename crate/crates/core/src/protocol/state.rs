//! Session state machine.
//!
//! ```text
//! Initial --CacheComplete--> Ready --ServiceRequest--> Preparing
//! Preparing --KnowledgeShared--> Delivering
//! Delivering --ViewpointRequest--> Delivering      (encode, transmit, decode)
//! Delivering --ViewpointDelivered--> Preparing     (next round)
//! Delivering --ServiceRequest--> Preparing
//! Preparing | Delivering --SessionEnd--> Completed
//! ```
//! Any other pair is a protocol violation.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    Initial,
    Ready,
    Preparing,
    Delivering,
    Completed,
}

impl Phase {
    pub const ALL: [Phase; 5] = [
        Phase::Initial,
        Phase::Ready,
        Phase::Preparing,
        Phase::Delivering,
        Phase::Completed,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Event {
    CacheComplete,
    ServiceRequest,
    KnowledgeShared,
    ViewpointRequest(u32),
    ViewpointDelivered,
    SessionEnd,
}

impl Event {
    /// One representative of every event kind.
    pub const KINDS: [Event; 6] = [
        Event::CacheComplete,
        Event::ServiceRequest,
        Event::KnowledgeShared,
        Event::ViewpointRequest(1),
        Event::ViewpointDelivered,
        Event::SessionEnd,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    SelectEncoder,
    ShareKnowledge,
    Encode,
    Transmit,
    Decode,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionState {
    pub phase: Phase,
    /// Viewpoint whose delivery is in flight.
    pub current_viewpoint: Option<u32>,
    pub delivered: Vec<u32>,
}

impl Default for SessionState {
    fn default() -> Self {
        SessionState {
            phase: Phase::Initial,
            current_viewpoint: None,
            delivered: Vec::new(),
        }
    }
}

pub fn step(state: &SessionState, event: Event) -> Result<(SessionState, Vec<Action>)> {
    use Action::*;
    let mut next = state.clone();
    let actions = match (state.phase, event) {
        (Phase::Initial, Event::CacheComplete) => {
            next.phase = Phase::Ready;
            vec![]
        }
        (Phase::Ready | Phase::Delivering, Event::ServiceRequest) => {
            next.phase = Phase::Preparing;
            next.current_viewpoint = None;
            vec![SelectEncoder, ShareKnowledge]
        }
        (Phase::Preparing, Event::KnowledgeShared) => {
            next.phase = Phase::Delivering;
            vec![]
        }
        (Phase::Delivering, Event::ViewpointRequest(v)) => {
            next.current_viewpoint = Some(v);
            vec![Encode, Transmit, Decode]
        }
        (Phase::Delivering, Event::ViewpointDelivered) if state.current_viewpoint.is_some() => {
            next.phase = Phase::Preparing;
            next.delivered.extend(next.current_viewpoint.take());
            vec![SelectEncoder, ShareKnowledge]
        }
        (Phase::Preparing | Phase::Delivering, Event::SessionEnd) => {
            next.phase = Phase::Completed;
            next.current_viewpoint = None;
            vec![]
        }
        (phase, event) => {
            return Err(Error::ProtocolViolation {
                state: phase.to_string(),
                event: event.to_string(),
            })
        }
    };
    Ok((next, actions))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(phase: Phase) -> SessionState {
        SessionState {
            phase,
            ..SessionState::default()
        }
    }

    #[test]
    fn examples() {
        let (s, a) = step(&at(Phase::Initial), Event::CacheComplete).unwrap();
        assert_eq!((s.phase, a), (Phase::Ready, vec![]));
        let err = step(&at(Phase::Ready), Event::ViewpointRequest(1)).unwrap_err();
        assert!(err.to_string().contains("Ready") && err.to_string().contains("ViewpointRequest"));
        let (s, a) = step(&at(Phase::Delivering), Event::ViewpointRequest(2)).unwrap();
        assert_eq!(s.phase, Phase::Delivering);
        assert_eq!(s.current_viewpoint, Some(2));
        assert_eq!(a, vec![Action::Encode, Action::Transmit, Action::Decode]);
    }

    #[test]
    fn delivered_needs_a_request_in_flight() {
        assert!(step(&at(Phase::Delivering), Event::ViewpointDelivered).is_err());
        let (s, _) = step(&at(Phase::Delivering), Event::ViewpointRequest(4)).unwrap();
        let (s, _) = step(&s, Event::ViewpointDelivered).unwrap();
        assert_eq!(s.phase, Phase::Preparing);
        assert_eq!(s.delivered, vec![4]);
    }

    #[test]
    fn completed_is_terminal() {
        for e in Event::KINDS {
            assert!(step(&at(Phase::Completed), e).is_err());
        }
    }
}
