//! Compares the controller with exhaustive search on random small networks
//! and prints how often the heuristic reaches the best achievable minimum
//! zone balance.
//!
//! ```text
//! cargo run --release --example oracle_check [networks] [seed]
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wlan_lba::lba::{
    brute_force_best_assignment, min_zone_balance, rebalance, BalanceParams, LbaMode,
};
use wlan_lba::topology::{AccessPoint, MobileStation, NetworkState};

fn random_network(rng: &mut ChaCha8Rng) -> NetworkState {
    let aps: Vec<AccessPoint> = (0..rng.random_range(2..=4))
        .map(|i| AccessPoint::new(format!("ap{i}"), 20e6))
        .collect();
    let stations = (0..rng.random_range(2..=7))
        .map(|i| {
            let mut st = MobileStation::new(format!("s{i}"));
            for ap in &aps {
                if st.reachable.is_empty() || rng.random_bool(0.5) {
                    st = st.with_link(ap.id.as_str(), f64::from(rng.random_range(10..=80)));
                }
            }
            let home = st.reachable.keys().next().cloned().unwrap();
            st.with_demand(0.0, 100.0 * f64::from(rng.random_range(1..=6)))
                .associated_to(home.as_str())
        })
        .collect();
    NetworkState::new(aps, stations)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(Ok(500), |a| a.parse())?;
    let seed: u64 = args.next().map_or(Ok(1), |a| a.parse())?;
    let rng = ChaCha8Rng::seed_from_u64(seed);

    for mode in [LbaMode::Baseline, LbaMode::SnrAware] {
        let mut rng_mode = rng.clone();
        let (mut optimal, mut gap_sum) = (0, 0.0);
        for _ in 0..n {
            let net = random_network(&mut rng_mode);
            let params = BalanceParams::new(mode);
            let plan = rebalance(&net, &params)?;
            let mut after = net.clone();
            for m in &plan.moves {
                if let Some(st) = after.station_mut(&m.station) {
                    st.associated_ap = Some(m.to.clone());
                }
            }
            let best = brute_force_best_assignment(&net, &params)?;
            let gap = best.min_zone_beta - min_zone_balance(&after);
            if gap <= 1e-9 {
                optimal += 1;
            }
            gap_sum += gap.max(0.0);
        }
        println!(
            "{mode}: heuristic optimal on {optimal}/{n} networks, mean balance gap {:.4}",
            gap_sum / n as f64
        );
    }
    Ok(())
}
