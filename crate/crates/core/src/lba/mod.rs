//! Load-balancing controller.
//!
//! Loads are compared against the average network load (ANL) over every AP,
//! widened by a tolerance `alpha` into an overload threshold
//! `ANL * (1 + alpha)` and an underload threshold `ANL * (1 - alpha)`. Zones
//! are ranked by their balance index `(sum T)^2 / (n * sum T^2)`; stations are
//! moved out of overloaded APs of the worst zone, picking the station whose
//! demand is closest to the AP's excess over ANL.
//!
//! [`LbaMode::SnrAware`] adds a gate on every move: the destination link must
//! have an SNR strictly above half of the current link's SNR, in dB.

mod oracle;

pub use oracle::{
    brute_force_best_assignment, OracleResult, ORACLE_MAX_ASSIGNMENTS, ORACLE_MAX_STATIONS,
};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::topology::{
    derive_zones, validate, ApId, NetworkState, OverlapZone, StationId, Violation,
};

pub const DEFAULT_ALPHA: f64 = 0.2;
/// Tolerance range outside of which a warning is emitted.
pub const RECOMMENDED_ALPHA: (f64, f64) = (0.1, 0.2);
pub const DEFAULT_MAX_MOVES: usize = 32;

/// Comparison slack on balance indices.
const BETA_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LbaError {
    #[error("network is empty")]
    EmptyNetwork,
    #[error("no overlap zone to balance across")]
    NoZones,
    #[error("alpha must be within [0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("max_moves must be at least 1")]
    InvalidMaxMoves,
    #[error("invalid network: {}", join_violations(.0))]
    InvalidNetwork(Vec<Violation>),
    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LbaMode {
    /// Traffic-only decisions.
    Baseline,
    /// Traffic decisions restricted by the SNR gate.
    SnrAware,
}

impl fmt::Display for LbaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LbaMode::Baseline => "baseline",
            LbaMode::SnrAware => "snr-aware",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BalanceParams {
    pub alpha: f64,
    pub mode: LbaMode,
    pub max_moves: usize,
}

impl BalanceParams {
    pub fn new(mode: LbaMode) -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            mode,
            max_moves: DEFAULT_MAX_MOVES,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_max_moves(mut self, max_moves: usize) -> Self {
        self.max_moves = max_moves;
        self
    }

    pub fn check(&self) -> Result<(), LbaError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(LbaError::InvalidAlpha(self.alpha));
        }
        if self.max_moves == 0 {
            return Err(LbaError::InvalidMaxMoves);
        }
        Ok(())
    }
}

/// True when `alpha` lies in the recommended tolerance range.
pub fn alpha_in_recommended_range(alpha: f64) -> bool {
    alpha >= RECOMMENDED_ALPHA.0 && alpha <= RECOMMENDED_ALPHA.1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LoadState {
    Overloaded,
    Balanced,
    Underloaded,
}

impl fmt::Display for LoadState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LoadState::Overloaded => "overloaded",
            LoadState::Balanced => "balanced",
            LoadState::Underloaded => "underloaded",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoadClassification {
    pub anl: f64,
    /// Overload threshold.
    pub delta1: f64,
    /// Underload threshold.
    pub delta2: f64,
    /// Per-AP load (kbps) and label.
    pub aps: BTreeMap<ApId, (f64, LoadState)>,
}

impl LoadClassification {
    pub fn state(&self, ap: &ApId) -> Option<LoadState> {
        self.aps.get(ap).map(|(_, s)| *s)
    }

    pub fn load(&self, ap: &ApId) -> Option<f64> {
        self.aps.get(ap).map(|(l, _)| *l)
    }

    pub fn any_overloaded(&self) -> bool {
        self.aps.values().any(|(_, s)| *s == LoadState::Overloaded)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Move {
    pub station: StationId,
    pub from: ApId,
    pub to: ApId,
    pub snr_from_db: f64,
    pub snr_to_db: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MovePlan {
    pub moves: Vec<Move>,
    pub final_classification: LoadClassification,
    pub converged: bool,
}

/// Balance index of a set of loads; 1 means perfectly even. All-zero loads
/// count as balanced.
pub fn balance_index(loads: &[f64]) -> Result<f64, LbaError> {
    if loads.is_empty() {
        return Err(LbaError::EmptyNetwork);
    }
    let sum: f64 = loads.iter().sum();
    let sum_sq: f64 = loads.iter().map(|t| t * t).sum();
    if sum_sq == 0.0 {
        return Ok(1.0);
    }
    Ok(sum * sum / (loads.len() as f64 * sum_sq))
}

pub fn average_network_load(loads: &[f64]) -> Result<f64, LbaError> {
    if loads.is_empty() {
        return Err(LbaError::EmptyNetwork);
    }
    Ok(loads.iter().sum::<f64>() / loads.len() as f64)
}

/// `(overload, underload)` thresholds around the average load.
pub fn thresholds(anl: f64, alpha: f64) -> (f64, f64) {
    (anl + alpha * anl, anl - alpha * anl)
}

/// Loads exactly on a threshold are balanced.
pub fn classify_ap(load: f64, delta1: f64, delta2: f64) -> LoadState {
    if load > delta1 {
        LoadState::Overloaded
    } else if load < delta2 {
        LoadState::Underloaded
    } else {
        LoadState::Balanced
    }
}

pub fn classify_network(
    network: &NetworkState,
    alpha: f64,
) -> Result<LoadClassification, LbaError> {
    let loads = network.loads();
    let values: Vec<f64> = loads.iter().map(|(_, l)| *l).collect();
    let anl = average_network_load(&values)?;
    let (delta1, delta2) = thresholds(anl, alpha);
    let aps = loads
        .into_iter()
        .map(|(id, load)| (id, (load, classify_ap(load, delta1, delta2))))
        .collect();
    Ok(LoadClassification {
        anl,
        delta1,
        delta2,
        aps,
    })
}

/// Balance index over the member APs of a zone.
pub fn zone_balance(loads: &BTreeMap<ApId, f64>, zone: &OverlapZone) -> f64 {
    let member: Vec<f64> = zone
        .aps
        .iter()
        .map(|ap| loads.get(ap).copied().unwrap_or(0.0))
        .collect();
    // zones always hold at least two APs
    balance_index(&member).unwrap_or(1.0)
}

/// Smallest zone balance index in the network, 1 when there is no zone.
pub fn min_zone_balance(network: &NetworkState) -> f64 {
    let loads = network.load_map();
    derive_zones(network)
        .iter()
        .map(|z| zone_balance(&loads, z))
        .fold(1.0, f64::min)
}

/// Zones sorted from least to most balanced; ties keep the id order.
fn zones_by_balance<'a>(
    loads: &BTreeMap<ApId, f64>,
    zones: &'a [OverlapZone],
) -> Vec<(&'a OverlapZone, f64)> {
    let mut ranked: Vec<_> = zones.iter().map(|z| (z, zone_balance(loads, z))).collect();
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.aps.cmp(&b.0.aps)));
    ranked
}

pub fn find_zone_min(
    network: &NetworkState,
    zones: &[OverlapZone],
) -> Result<OverlapZone, LbaError> {
    let loads = network.load_map();
    zones_by_balance(&loads, zones)
        .first()
        .map(|(z, _)| (*z).clone())
        .ok_or(LbaError::NoZones)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gate {
    Allow,
    Block,
}

impl Gate {
    pub fn is_allowed(self) -> bool {
        self == Gate::Allow
    }
}

/// A move is allowed only if the destination SNR is strictly above half of
/// the source SNR (both in dB).
pub fn snr_gate(snr_source_db: f64, snr_dest_db: f64) -> Gate {
    if snr_dest_db > snr_source_db / 2.0 {
        Gate::Allow
    } else {
        Gate::Block
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub station: StationId,
    pub to: ApId,
    pub demand_kbps: f64,
    /// Distance between the station's demand and the AP's excess over ANL.
    pub distance: f64,
}

/// Every eligible (station, destination) pair for relieving `overloaded_ap`,
/// best first.
fn rank_candidates(
    network: &NetworkState,
    overloaded_ap: &ApId,
    anl: f64,
    zone: &OverlapZone,
    params: &BalanceParams,
    exclude: &BTreeSet<StationId>,
) -> Vec<Candidate> {
    let loads = network.load_map();
    let (_, delta2) = thresholds(anl, params.alpha);
    let excess = loads.get(overloaded_ap).copied().unwrap_or(0.0) - anl;

    let mut underloaded: Vec<(&ApId, f64)> = zone
        .aps
        .iter()
        .filter(|ap| *ap != overloaded_ap)
        .filter_map(|ap| loads.get(ap).map(|l| (ap, *l)))
        .filter(|(_, l)| classify_ap(*l, f64::INFINITY, delta2) == LoadState::Underloaded)
        .collect();
    underloaded.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(b.0)));

    let mut out: Vec<Candidate> = network
        .stations
        .iter()
        .filter(|st| st.associated_ap.as_ref() == Some(overloaded_ap))
        .filter(|st| !exclude.contains(&st.id))
        .filter_map(|st| {
            let src_snr = st.snr_to(overloaded_ap)?;
            let dest = underloaded.iter().find(|(ap, _)| {
                st.snr_to(ap).is_some_and(|snr| match params.mode {
                    LbaMode::Baseline => true,
                    LbaMode::SnrAware => snr_gate(src_snr, snr).is_allowed(),
                })
            })?;
            let demand = st.total_demand_kbps();
            Some(Candidate {
                station: st.id.clone(),
                to: dest.0.clone(),
                demand_kbps: demand,
                distance: (demand - excess).abs(),
            })
        })
        .collect();
    out.sort_by(|a, b| {
        a.distance
            .total_cmp(&b.distance)
            .then_with(|| a.station.cmp(&b.station))
    });
    out
}

/// The station whose demand is nearest to `load(overloaded_ap) - anl`, along
/// with the least loaded underloaded zone AP it can reach.
pub fn select_candidate(
    network: &NetworkState,
    overloaded_ap: &ApId,
    anl: f64,
    zone: &OverlapZone,
    params: &BalanceParams,
) -> Option<Candidate> {
    rank_candidates(network, overloaded_ap, anl, zone, params, &BTreeSet::new())
        .into_iter()
        .next()
}

/// Runs the controller loop on a copy of `network` and returns the moves it
/// would issue.
///
/// A candidate move is kept only if it does not lower the minimum zone
/// balance index; otherwise the next candidate is tried. No station moves
/// twice in one plan.
pub fn rebalance(network: &NetworkState, params: &BalanceParams) -> Result<MovePlan, LbaError> {
    validate(network).map_err(LbaError::InvalidNetwork)?;
    params.check()?;
    if network.aps.is_empty() {
        return Err(LbaError::EmptyNetwork);
    }

    let zones = derive_zones(network);
    let mut work = network.clone();
    let mut moves = Vec::new();
    let mut moved = BTreeSet::new();

    while moves.len() < params.max_moves {
        let class = classify_network(&work, params.alpha)?;
        if !class.any_overloaded() {
            break;
        }
        match next_move(&work, &zones, &class, params, &moved) {
            Some(mv) => {
                let st = work
                    .station_mut(&mv.station)
                    .expect("candidate comes from the working network");
                st.associated_ap = Some(mv.to.clone());
                moved.insert(mv.station.clone());
                moves.push(mv);
            }
            None => break,
        }
    }

    let final_classification = classify_network(&work, params.alpha)?;
    let converged = !final_classification.any_overloaded();
    Ok(MovePlan {
        moves,
        final_classification,
        converged,
    })
}

fn next_move(
    work: &NetworkState,
    zones: &[OverlapZone],
    class: &LoadClassification,
    params: &BalanceParams,
    moved: &BTreeSet<StationId>,
) -> Option<Move> {
    let loads = work.load_map();
    let current_min = min_zone_balance(work);

    for (zone, _) in zones_by_balance(&loads, zones) {
        let mut overloaded: Vec<(&ApId, f64)> = zone
            .aps
            .iter()
            .filter(|ap| class.state(ap) == Some(LoadState::Overloaded))
            .map(|ap| (ap, loads[ap]))
            .collect();
        overloaded.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));

        for (src, _) in overloaded {
            for cand in rank_candidates(work, src, class.anl, zone, params, moved) {
                let mut trial = work.clone();
                let st = trial.station_mut(&cand.station)?;
                let snr_from_db = st.snr_to(src)?;
                let snr_to_db = st.snr_to(&cand.to)?;
                st.associated_ap = Some(cand.to.clone());
                if min_zone_balance(&trial) + BETA_EPS >= current_min {
                    return Some(Move {
                        station: cand.station,
                        from: src.clone(),
                        to: cand.to,
                        snr_from_db,
                        snr_to_db,
                    });
                }
            }
        }
    }
    None
}
