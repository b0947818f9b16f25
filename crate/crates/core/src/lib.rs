//! Proportional-fair traffic splitting across a macro cell and WLAN small
//! cells, with a fluid flow-level simulator to compare it against
//! association baselines.

pub mod allocator;
pub mod baselines;
pub mod config;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod radio;
pub mod simulator;

#[cfg(any(test, feature = "oracle"))]
pub mod oracle;

pub use allocator::{de_split, effective_rate, opt_alloc, split_ratio, Allocation, UeId, UeLinkState};
pub use baselines::{Policy, PolicyConfig};
pub use config::ScenarioConfig;
pub use error::{AllocError, SimError};
pub use metrics::MetricsReport;
pub use simulator::Scenario;
