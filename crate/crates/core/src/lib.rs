//! Uplink NOMA resource allocation for LPWA networks.
//!
//! The pipeline mirrors how a simulation trial runs:
//!
//! 1. [`network::generate_deployment`] draws node positions and fading,
//! 2. [`clustering`] spreads nodes over channels,
//! 3. [`time_alloc`] gives each node a transmission time (spreading factor),
//! 4. [`power`] picks transmit powers that maximize the minimum rate,
//! 5. [`interference::evaluate`] scores the result under a receiver model.
//!
//! [`experiment`] wraps all of it into seeded Monte-Carlo sweeps.

pub mod clustering;
pub mod error;
pub mod experiment;
pub mod interference;
pub mod network;
pub mod power;
pub mod radio;
pub mod rng;
pub mod time_alloc;

pub use clustering::{allocate_channels_random, allocate_channels_roundrobin, Allocation, RankBy};
pub use error::{Error, Result};
pub use interference::{evaluate, oma_min_rate, RateReport, ReceiverModel};
pub use network::{generate_deployment, Deployment, FadingModel, NetworkConfig};
pub use power::{optimize_powers, Feasibility, OrderConstraint, PowerOptions, PowerProblem, PowerSolution};
pub use radio::{RadioParams, RadioProfile};
pub use experiment::{ChannelStrategy, PowerStrategy};
pub use time_alloc::TimeStrategy;
