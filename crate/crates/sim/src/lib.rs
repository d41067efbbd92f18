//! Deterministic ICN simulation for secure delivery of protected content.
//!
//! [`fabric`] forwards interests and data between nodes with FIB routing,
//! PIT aggregation and LRU content stores. [`world`] hosts the protocol roles
//! from `sdpc-core` on the fabric's endpoint nodes and plays consumer scripts.
//! [`scenario`] runs configured scripts and collects metrics; [`attack`] runs
//! adversaries against the canonical network.

pub mod attack;
pub mod config;
pub mod fabric;
pub mod metrics;
pub mod mpeg;
pub mod packet;
pub mod scenario;
pub mod topology;
pub mod world;

pub use config::{six_node_scenario, AdversaryKind, AdversarySpec, Mode, ScenarioConfig};
pub use metrics::MetricsReport;
pub use scenario::{compare_modes, execute, run_scenario, ModeComparison, ScenarioRun, SimError};
