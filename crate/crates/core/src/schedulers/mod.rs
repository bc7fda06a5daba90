//! Scheduling policies mapping a [`CoflowInstance`] to a [`Schedule`].

mod bvn;
mod grouping;
mod lp_ii_gb;
mod lp_ov_gb;
mod lp_ov_ls;
mod schedule;
mod varys;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use bvn::{bvn_decompose, Permutation};
pub use grouping::{group_coflows, interval_index, GroupPartition};
pub use lp_ii_gb::{lp_ii_gb, lp_ii_gb_with, SlotConfig};
pub use lp_ov_gb::{lp_ov_gb, lp_ov_gb_with};
pub use lp_ov_ls::{lp_ov_ls, lp_ov_ls_online, lp_ov_ls_with, ResolveMode};
pub use schedule::{FlowCompletion, FlowRate, Schedule, Segment};
pub use varys::varys;

use crate::error::{argument, Error, Result};
use crate::model::CoflowInstance;

/// The schedulers selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SchedulerKind {
    #[serde(rename = "lp-ov-ls")]
    LpOvLs,
    #[serde(rename = "lp-ov-ls-online")]
    LpOvLsOnline,
    #[serde(rename = "varys")]
    Varys,
    #[serde(rename = "lp-ii-gb")]
    LpIiGb,
    #[serde(rename = "lp-ov-gb")]
    LpOvGb,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 5] = [
        SchedulerKind::LpOvLs,
        SchedulerKind::LpOvLsOnline,
        SchedulerKind::Varys,
        SchedulerKind::LpIiGb,
        SchedulerKind::LpOvGb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::LpOvLs => "lp-ov-ls",
            Self::LpOvLsOnline => "lp-ov-ls-online",
            Self::Varys => "varys",
            Self::LpIiGb => "lp-ii-gb",
            Self::LpOvGb => "lp-ov-gb",
        }
    }

    /// Runs the scheduler with its default settings.
    pub fn run(self, instance: &CoflowInstance) -> Result<Schedule> {
        self.run_with_slot(instance, SlotConfig::default())
    }

    /// Like [`SchedulerKind::run`], with an explicit slot size for `lp-ii-gb`.
    pub fn run_with_slot(self, instance: &CoflowInstance, slot: SlotConfig) -> Result<Schedule> {
        match self {
            Self::LpOvLs => lp_ov_ls(instance),
            Self::LpOvLsOnline => lp_ov_ls_online(instance, ResolveMode::OnArrival),
            Self::Varys => varys(instance),
            Self::LpIiGb => lp_ii_gb_with(instance, slot),
            Self::LpOvGb => lp_ov_gb(instance),
        }
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchedulerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| argument(format!("unknown scheduler `{s}`")))
    }
}

/// Position of each coflow id in `ordering`.
pub(crate) fn positions(ordering: &[usize]) -> Vec<usize> {
    let mut pos = vec![0; ordering.len()];
    for (p, &k) in ordering.iter().enumerate() {
        pos[k] = p;
    }
    pos
}
