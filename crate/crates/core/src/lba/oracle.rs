//! Exhaustive search over station-to-AP assignments. Used as a reference for
//! the controller heuristic on small instances; it shares no code with it
//! beyond zone derivation.

use std::collections::BTreeMap;

use super::{BalanceParams, LbaError, LbaMode};
use crate::topology::{derive_zones, validate, ApId, NetworkState, StationId};

pub const ORACLE_MAX_STATIONS: usize = 10;
pub const ORACLE_MAX_ASSIGNMENTS: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    /// Chosen AP for every station, keyed by station id. Unassociated
    /// stations stay unassociated.
    pub assignment: BTreeMap<StationId, Option<ApId>>,
    pub min_zone_beta: f64,
    /// Stations whose AP differs from the input network.
    pub moves: usize,
}

/// Finds the assignment maximising the minimum zone balance index.
///
/// Ties prefer fewer moves from the current assignment, then the
/// lexicographically smallest assignment in station-id order. In snr-aware
/// mode a station may only leave its current AP for a link that passes the
/// SNR gate.
pub fn brute_force_best_assignment(
    network: &NetworkState,
    params: &BalanceParams,
) -> Result<OracleResult, LbaError> {
    validate(network).map_err(LbaError::InvalidNetwork)?;
    if network.stations.len() > ORACLE_MAX_STATIONS {
        return Err(LbaError::TooLarge(format!(
            "{} stations (limit {ORACLE_MAX_STATIONS})",
            network.stations.len()
        )));
    }

    let mut order: Vec<usize> = (0..network.stations.len()).collect();
    order.sort_by(|&a, &b| network.stations[a].id.cmp(&network.stations[b].id));

    // candidate APs per station, initial AP first
    let mut options: Vec<Vec<Option<ApId>>> = Vec::with_capacity(order.len());
    let mut total: u64 = 1;
    for &i in &order {
        let st = &network.stations[i];
        let opts = match &st.associated_ap {
            None => vec![None],
            Some(current) => {
                let src = st.reachable[current];
                let mut v = vec![Some(current.clone())];
                for (ap, snr) in &st.reachable {
                    if ap == current {
                        continue;
                    }
                    let allowed = match params.mode {
                        LbaMode::Baseline => true,
                        LbaMode::SnrAware => *snr > src / 2.0,
                    };
                    if allowed {
                        v.push(Some(ap.clone()));
                    }
                }
                v
            }
        };
        total = total.saturating_mul(opts.len() as u64);
        options.push(opts);
    }
    if total > ORACLE_MAX_ASSIGNMENTS {
        return Err(LbaError::TooLarge(format!(
            "{total} assignments (limit {ORACLE_MAX_ASSIGNMENTS})"
        )));
    }

    let zones = derive_zones(network);
    let ap_index: BTreeMap<&ApId, usize> = network
        .aps
        .iter()
        .enumerate()
        .map(|(i, ap)| (&ap.id, i))
        .collect();
    let zone_members: Vec<Vec<usize>> = zones
        .iter()
        .map(|z| z.aps.iter().map(|ap| ap_index[ap]).collect())
        .collect();
    let demands: Vec<f64> = order
        .iter()
        .map(|&i| network.stations[i].demand_up_kbps + network.stations[i].demand_down_kbps)
        .collect();

    let mut digits = vec![0usize; order.len()];
    let mut best: Option<(f64, usize, Vec<usize>)> = None;
    loop {
        let mut loads = vec![0.0; network.aps.len()];
        for (k, d) in digits.iter().enumerate() {
            if let Some(ap) = &options[k][*d] {
                loads[ap_index[ap]] += demands[k];
            }
        }
        let mut beta = 1.0f64;
        for members in &zone_members {
            let s: f64 = members.iter().map(|&m| loads[m]).sum();
            let q: f64 = members.iter().map(|&m| loads[m] * loads[m]).sum();
            if q > 0.0 {
                beta = beta.min(s * s / (members.len() as f64 * q));
            }
        }
        let moves = digits.iter().filter(|d| **d != 0).count();

        let better = match &best {
            None => true,
            Some((b, m, a)) => {
                if beta > b + 1e-12 {
                    true
                } else if beta + 1e-12 < *b {
                    false
                } else if moves != *m {
                    moves < *m
                } else {
                    lex_less(&options, &digits, a)
                }
            }
        };
        if better {
            best = Some((beta, moves, digits.clone()));
        }

        // odometer increment
        let mut k = 0;
        loop {
            if k == digits.len() {
                let (beta, moves, digits) = best.expect("at least one assignment");
                let assignment = order
                    .iter()
                    .zip(&digits)
                    .enumerate()
                    .map(|(pos, (&i, &d))| {
                        (network.stations[i].id.clone(), options[pos][d].clone())
                    })
                    .collect();
                return Ok(OracleResult {
                    assignment,
                    min_zone_beta: beta,
                    moves,
                });
            }
            digits[k] += 1;
            if digits[k] < options[k].len() {
                break;
            }
            digits[k] = 0;
            k += 1;
        }
    }
}

fn lex_less(options: &[Vec<Option<ApId>>], a: &[usize], b: &[usize]) -> bool {
    let key = |d: &[usize]| -> Vec<Option<ApId>> {
        d.iter()
            .enumerate()
            .map(|(k, i)| options[k][*i].clone())
            .collect()
    };
    key(a) < key(b)
}
