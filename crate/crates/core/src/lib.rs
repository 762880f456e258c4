//! Matrix life-cycle assessment with a battery bill-of-materials layer.
//!
//! The inventory model (flows, processes, exchanges) is solved as
//! `A·s = f`, `g = B·s`, and `g` is characterized into impact categories.
//! The battery module turns cell and pack layouts into per-Wh demand
//! vectors, and the scenario module applies overrides and compares systems.

pub mod battery;
pub mod contribution;
pub mod dataio;
pub mod inventory;
pub mod lcia;
pub mod model;
pub mod scenario;
pub mod solver;
pub mod units;
