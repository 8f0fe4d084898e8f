//! Static model of the extended service set: access points, stations,
//! per-link SNR, current associations and the overlap zones derived from
//! station reachability.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use thiserror::Error;

/// Access point identifier. Ordering is lexicographic and is used for every
/// deterministic tie-break in the crate.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ApId(pub String);

/// Mobile station identifier. Also the flow identifier of the station's traffic.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StationId(pub String);

macro_rules! id_impls {
    ($t:ident) => {
        impl $t {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $t {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }
    };
}

id_impls!(ApId);
id_impls!(StationId);

#[derive(Clone, Debug, PartialEq)]
pub struct AccessPoint {
    pub id: ApId,
    /// Channel bandwidth in hertz.
    pub bandwidth_hz: f64,
    /// Optional hard ceiling on the link rate, in bits/second.
    pub capacity_cap_bps: Option<f64>,
}

impl AccessPoint {
    pub fn new(id: impl Into<String>, bandwidth_hz: f64) -> Self {
        Self {
            id: ApId::new(id),
            bandwidth_hz,
            capacity_cap_bps: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MobileStation {
    pub id: StationId,
    /// Link SNR in dB for every AP this station can hear.
    pub reachable: BTreeMap<ApId, f64>,
    pub associated_ap: Option<ApId>,
    pub demand_up_kbps: f64,
    pub demand_down_kbps: f64,
}

impl MobileStation {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: StationId::new(id),
            reachable: BTreeMap::new(),
            associated_ap: None,
            demand_up_kbps: 0.0,
            demand_down_kbps: 0.0,
        }
    }

    pub fn with_link(mut self, ap: impl Into<String>, snr_db: f64) -> Self {
        self.reachable.insert(ApId::new(ap), snr_db);
        self
    }

    pub fn with_demand(mut self, up_kbps: f64, down_kbps: f64) -> Self {
        self.demand_up_kbps = up_kbps;
        self.demand_down_kbps = down_kbps;
        self
    }

    pub fn associated_to(mut self, ap: impl Into<String>) -> Self {
        self.associated_ap = Some(ApId::new(ap));
        self
    }

    /// Up-link plus down-link offered traffic, in kbps.
    pub fn total_demand_kbps(&self) -> f64 {
        self.demand_up_kbps + self.demand_down_kbps
    }

    pub fn snr_to(&self, ap: &ApId) -> Option<f64> {
        self.reachable.get(ap).copied()
    }

    /// SNR of the current association, if any.
    pub fn current_snr_db(&self) -> Option<f64> {
        self.associated_ap.as_ref().and_then(|ap| self.snr_to(ap))
    }
}

/// A set of at least two APs that some station can reach simultaneously.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OverlapZone {
    pub id: String,
    pub aps: BTreeSet<ApId>,
}

impl OverlapZone {
    pub fn new(aps: BTreeSet<ApId>) -> Self {
        let id = aps.iter().map(ApId::as_str).collect::<Vec<_>>().join("+");
        Self { id, aps }
    }

    pub fn contains(&self, ap: &ApId) -> bool {
        self.aps.contains(ap)
    }
}

/// The controller's view of the network.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NetworkState {
    pub aps: Vec<AccessPoint>,
    pub stations: Vec<MobileStation>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("unknown access point `{0}`")]
    UnknownAp(ApId),
    #[error("unknown station `{0}`")]
    UnknownStation(StationId),
}

/// One invariant violation found by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DuplicateAp(ApId),
    DuplicateStation(StationId),
    NonPositiveBandwidth(ApId),
    NonPositiveCapacityCap(ApId),
    UnknownLinkAp { station: StationId, ap: ApId },
    NegativeSnr { station: StationId, ap: ApId },
    UnreachableAssociation { station: StationId, ap: ApId },
    NegativeDemand(StationId),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateAp(ap) => write!(f, "duplicate access point id `{ap}`"),
            Violation::DuplicateStation(st) => write!(f, "duplicate station id `{st}`"),
            Violation::NonPositiveBandwidth(ap) => {
                write!(f, "access point `{ap}` has non-positive bandwidth")
            }
            Violation::NonPositiveCapacityCap(ap) => {
                write!(f, "access point `{ap}` has non-positive capacity cap")
            }
            Violation::UnknownLinkAp { station, ap } => {
                write!(
                    f,
                    "station `{station}` links to unknown access point `{ap}`"
                )
            }
            Violation::NegativeSnr { station, ap } => {
                write!(
                    f,
                    "station `{station}` has negative or non-finite SNR towards `{ap}`"
                )
            }
            Violation::UnreachableAssociation { station, ap } => {
                write!(
                    f,
                    "station `{station}` is associated to unreachable access point `{ap}`"
                )
            }
            Violation::NegativeDemand(st) => write!(f, "station `{st}` has a negative demand"),
        }
    }
}

impl NetworkState {
    pub fn new(aps: Vec<AccessPoint>, stations: Vec<MobileStation>) -> Self {
        Self { aps, stations }
    }

    pub fn ap(&self, id: &ApId) -> Option<&AccessPoint> {
        self.aps.iter().find(|ap| &ap.id == id)
    }

    pub fn station(&self, id: &StationId) -> Option<&MobileStation> {
        self.stations.iter().find(|st| &st.id == id)
    }

    pub fn station_mut(&mut self, id: &StationId) -> Option<&mut MobileStation> {
        self.stations.iter_mut().find(|st| &st.id == id)
    }

    pub fn zones(&self) -> Vec<OverlapZone> {
        derive_zones(self)
    }

    /// Loads of every AP in declaration order, in kbps.
    pub fn loads(&self) -> Vec<(ApId, f64)> {
        self.aps
            .iter()
            .map(|ap| (ap.id.clone(), load_of(self, &ap.id)))
            .collect()
    }

    pub fn load_map(&self) -> BTreeMap<ApId, f64> {
        self.loads().into_iter().collect()
    }
}

/// One zone per distinct reachability set of two or more APs, sorted by the
/// sorted member ids.
pub fn derive_zones(network: &NetworkState) -> Vec<OverlapZone> {
    let sets: BTreeSet<BTreeSet<ApId>> = network
        .stations
        .iter()
        .map(|st| st.reachable.keys().cloned().collect::<BTreeSet<_>>())
        .filter(|set| set.len() >= 2)
        .collect();
    sets.into_iter().map(OverlapZone::new).collect()
}

fn load_of(network: &NetworkState, ap: &ApId) -> f64 {
    network
        .stations
        .iter()
        .filter(|st| st.associated_ap.as_ref() == Some(ap))
        .map(MobileStation::total_demand_kbps)
        .fold(0.0, |acc, d| acc + d)
}

/// Offered load of an AP: sum of up-link and down-link demand of its
/// associated stations, in kbps.
pub fn ap_load(network: &NetworkState, ap: &ApId) -> Result<f64, TopologyError> {
    if network.ap(ap).is_none() {
        return Err(TopologyError::UnknownAp(ap.clone()));
    }
    Ok(load_of(network, ap))
}

pub fn validate(network: &NetworkState) -> Result<(), Vec<Violation>> {
    let mut violations = Vec::new();

    let mut seen_aps = HashSet::new();
    for ap in &network.aps {
        if !seen_aps.insert(&ap.id) {
            violations.push(Violation::DuplicateAp(ap.id.clone()));
        }
        if !(ap.bandwidth_hz > 0.0) || !ap.bandwidth_hz.is_finite() {
            violations.push(Violation::NonPositiveBandwidth(ap.id.clone()));
        }
        if let Some(cap) = ap.capacity_cap_bps {
            if !(cap > 0.0) {
                violations.push(Violation::NonPositiveCapacityCap(ap.id.clone()));
            }
        }
    }

    let mut seen_stations = HashSet::new();
    for st in &network.stations {
        if !seen_stations.insert(&st.id) {
            violations.push(Violation::DuplicateStation(st.id.clone()));
        }
        for (ap, snr) in &st.reachable {
            if !seen_aps.contains(ap) {
                violations.push(Violation::UnknownLinkAp {
                    station: st.id.clone(),
                    ap: ap.clone(),
                });
            }
            if !(*snr >= 0.0) || !snr.is_finite() {
                violations.push(Violation::NegativeSnr {
                    station: st.id.clone(),
                    ap: ap.clone(),
                });
            }
        }
        if let Some(ap) = &st.associated_ap {
            if !st.reachable.contains_key(ap) || !seen_aps.contains(ap) {
                violations.push(Violation::UnreachableAssociation {
                    station: st.id.clone(),
                    ap: ap.clone(),
                });
            }
        }
        if !(st.demand_up_kbps >= 0.0) || !(st.demand_down_kbps >= 0.0) {
            violations.push(Violation::NegativeDemand(st.id.clone()));
        }
    }

    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}
