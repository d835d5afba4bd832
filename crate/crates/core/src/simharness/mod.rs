//! Deterministic visitor simulator.
//!
//! [`simulate`] turns visitor profiles and a seed into an [`ActionTrace`] of
//! opens, edit sessions and link clicks. [`replay`] drives a trace through the
//! sheet monitors, the mailbox and the link server so the ordinary
//! ingest/aggregate path can run on the result.

mod generate;
mod profile;
mod replay;

#[cfg(test)]
mod fixtures;

use std::net::IpAddr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::honeylink::TargetClass;
use crate::sheetstore::{EditCommand, SheetId};
use crate::time::{serde_millis, Timestamp};

pub use generate::{simulate, PhaseTarget, SimParams, TargetCounts};
pub use profile::{default_profiles, ActionMix, ClicksPerVisit, VisitorProfile, DEFAULT_USER_AGENTS};
pub use replay::{ground_truth, replay, ReplayStats};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("bad visitor profile {name:?}: {reason}")]
    BadProfile { name: String, reason: String },
    #[error("infeasible targets: {0}")]
    InfeasibleTargets(String),
    #[error("trace is not in time order at action {0}")]
    Unordered(usize),
    #[error("action {index} rejected: {reason}")]
    Rejected { index: usize, reason: String },
}

/// What an editing visitor set out to do.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditBehavior {
    ExpandColumns,
    DeleteContent,
    Deface,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Action {
    Open,
    Edit {
        behavior: EditBehavior,
        edits: Vec<EditCommand>,
    },
    Click {
        token: String,
        channel: TargetClass,
        ip: IpAddr,
        port: u16,
        user_agent: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimedAction {
    #[serde(with = "serde_millis")]
    pub at: Timestamp,
    pub visitor: String,
    pub sheet_id: SheetId,
    #[serde(flatten)]
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ActionTrace {
    pub seed: u64,
    pub actions: Vec<TimedAction>,
}

impl ActionTrace {
    /// Index of the first action that happens before its predecessor.
    pub fn first_unordered(&self) -> Option<usize> {
        self.actions.windows(2).position(|w| w[1].at < w[0].at).map(|i| i + 1)
    }

    pub fn count_opens(&self) -> usize {
        self.actions.iter().filter(|a| matches!(a.action, Action::Open)).count()
    }

    pub fn count_edits(&self) -> usize {
        self.actions.iter().filter(|a| matches!(a.action, Action::Edit { .. })).count()
    }

    pub fn count_clicks(&self, channel: Option<TargetClass>) -> usize {
        self.actions
            .iter()
            .filter(|a| matches!(&a.action, Action::Click { channel: c, .. } if channel.is_none_or(|want| want == *c)))
            .count()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("trace serializes");
        s.push('\n');
        s
    }
}
