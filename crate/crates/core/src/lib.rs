//! Downlink OFDMA scheduling: delay and rate based allocation (DRA) with a
//! proportional-fair power/bandwidth stage, an M-LWDF baseline, and the
//! frame-level simulator that compares them.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod allocation;
pub mod cell;
pub mod channel;
pub mod dra_alloc;
pub mod dra_select;
pub mod engine;
pub mod mlwdf;
pub mod pf_solver;
pub mod phy_mcs;
pub mod streams;
pub mod traffic;

pub use allocation::{Allocation, Grant};
pub use cell::{CellConfig, UserFrame};
pub use phy_mcs::{McsLevel, McsTable, RateModel};
pub use traffic::{TrafficClass, TrafficProfile};
