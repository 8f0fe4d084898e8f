//! Link and contention model: SNR to Shannon capacity, proportional airtime
//! sharing among the stations of one AP, and per-packet service time.

use thiserror::Error;

use crate::topology::{AccessPoint, StationId};

/// Channel width assumed when a scenario does not give one (one 802.11 channel).
pub const DEFAULT_BANDWIDTH_HZ: f64 = 20e6;

/// Slack allowed on the airtime sum.
pub const AIRTIME_EPSILON: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("bandwidth must be positive, got {0}")]
    NonPositiveBandwidth(f64),
    #[error("linear SNR must be non-negative, got {0}")]
    NegativeSnr(f64),
    #[error("demand of station `{0}` is negative")]
    NegativeDemand(StationId),
}

pub fn db_to_linear(snr_db: f64) -> f64 {
    10f64.powf(snr_db / 10.0)
}

/// `BW * log2(1 + SNR)` with a linear SNR.
pub fn shannon_capacity(bandwidth_hz: f64, snr_linear: f64) -> Result<f64, ChannelError> {
    if !(bandwidth_hz > 0.0) {
        return Err(ChannelError::NonPositiveBandwidth(bandwidth_hz));
    }
    if !(snr_linear >= 0.0) {
        return Err(ChannelError::NegativeSnr(snr_linear));
    }
    Ok(bandwidth_hz * (1.0 + snr_linear).log2())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkBudget {
    pub snr_db: f64,
    pub snr_linear: f64,
    /// Achievable rate in bits/second after the AP's rate cap.
    pub capacity_bps: f64,
}

impl LinkBudget {
    pub fn new(ap: &AccessPoint, snr_db: f64) -> Result<Self, ChannelError> {
        let snr_linear = db_to_linear(snr_db);
        let mut capacity_bps = shannon_capacity(ap.bandwidth_hz, snr_linear)?;
        if let Some(cap) = ap.capacity_cap_bps {
            capacity_bps = capacity_bps.min(cap);
        }
        Ok(Self {
            snr_db,
            snr_linear,
            capacity_bps,
        })
    }
}

/// One station competing for an AP's airtime.
#[derive(Clone, Debug, PartialEq)]
pub struct Member {
    pub station: StationId,
    pub demand_bps: f64,
    pub snr_db: f64,
}

impl Member {
    pub fn new(station: impl Into<String>, demand_bps: f64, snr_db: f64) -> Self {
        Self {
            station: StationId::new(station),
            demand_bps,
            snr_db,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StationShare {
    pub station: StationId,
    pub capacity_bps: f64,
    /// Fraction of the AP's airtime actually granted.
    pub airtime: f64,
    pub achieved_bps: f64,
    /// Set when the link has zero capacity but the station has traffic.
    pub starved: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AirtimeShare {
    pub shares: Vec<StationShare>,
    /// Sum of requested airtime before scaling; above 1 means the AP is saturated.
    pub requested_airtime: f64,
}

impl AirtimeShare {
    pub fn total_airtime(&self) -> f64 {
        self.shares.iter().map(|s| s.airtime).sum()
    }

    pub fn get(&self, station: &StationId) -> Option<&StationShare> {
        self.shares.iter().find(|s| &s.station == station)
    }
}

/// Proportional airtime contention. Each station asks for
/// `demand / capacity` of the medium; when the requests add up to more than
/// the whole medium, every request is scaled down by the same factor.
pub fn effective_throughput(
    ap: &AccessPoint,
    members: &[Member],
) -> Result<AirtimeShare, ChannelError> {
    let mut shares = Vec::with_capacity(members.len());
    let mut requested_airtime = 0.0;
    for m in members {
        if !(m.demand_bps >= 0.0) {
            return Err(ChannelError::NegativeDemand(m.station.clone()));
        }
        let capacity_bps = LinkBudget::new(ap, m.snr_db)?.capacity_bps;
        let starved = capacity_bps <= 0.0 && m.demand_bps > 0.0;
        let airtime = if capacity_bps > 0.0 {
            m.demand_bps / capacity_bps
        } else {
            0.0
        };
        requested_airtime += airtime;
        shares.push(StationShare {
            station: m.station.clone(),
            capacity_bps,
            airtime,
            achieved_bps: if starved { 0.0 } else { m.demand_bps },
            starved,
        });
    }

    if requested_airtime > 1.0 {
        let scale = 1.0 / requested_airtime;
        for s in &mut shares {
            s.airtime *= scale;
            s.achieved_bps *= scale;
        }
    }

    Ok(AirtimeShare {
        shares,
        requested_airtime,
    })
}

/// Time to put `size_bits` on the air at `rate_bps`. `None` when the rate is
/// zero: the packet cannot be served until the rate recovers.
pub fn packet_service_time(size_bits: f64, rate_bps: f64) -> Option<f64> {
    if rate_bps > 0.0 {
        Some(size_bits / rate_bps)
    } else {
        None
    }
}
