//! Load balancing for IEEE 802.11 networks carrying real-time video.
//!
//! The crate models stations that can hear several access points, measures
//! how evenly traffic is spread over each overlap zone, and moves stations
//! from overloaded to underloaded APs. In the SNR-aware mode a move is only
//! made when the destination link keeps more than half of the source link's
//! SNR (in dB), which keeps cameras off links too weak to carry their video.
//!
//! - [`topology`]: APs, stations, overlap zones and per-AP load.
//! - [`channel`]: Shannon capacity and airtime sharing.
//! - [`lba`]: balance index, load classification, the SNR gate and the
//!   rebalancing controller, plus an exhaustive reference search.
//! - [`metrics`]: PSNR, jitter, bitrate, delay and loss.
//! - [`scenario`]: the scenario file format.
//! - [`sim`]: a deterministic packet-level simulator.
//! - [`cli`]: the `wlan-lba run` front end and its CSV reports.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod cli;
pub mod lba;
pub mod metrics;
pub mod scenario;
pub mod sim;
pub mod topology;
