//! Deterministic discrete-event simulation of a policy-driven brokerage
//! service that admits, balances, offloads and blocks mobile flows across
//! heterogeneous wireless access technologies, plus a techno-economic
//! planner for long-term operator strategy comparison.
//!
//! The crate is `no_std` (with `alloc`): everything here is pure
//! computation driven by a fixed-tick engine. IO, the CLI and file formats
//! live in the companion `hetflow` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod backhaul;
pub mod broker;
pub mod engine;
pub mod geom;
pub mod ids;
pub mod metrics;
pub mod mobility;
pub mod nap;
pub mod planner;
pub mod policy;
pub mod scenario;
pub mod stats;
pub mod terminal;
pub mod traffic;

pub use ids::{FlowId, NapId, ProviderId, TechnologyId, TerminalId};
pub use metrics::{Quality, RankScore};
pub use policy::{BackhaulQualityMode, CsClass, PolicySet};
