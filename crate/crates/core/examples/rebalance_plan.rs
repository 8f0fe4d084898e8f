//! Plans moves for an overloaded AP in both controller modes. The mover
//! carries 400 kbps and hears the idle AP at 28 dB, less than half of its
//! 60 dB home link, so only the baseline controller moves it.
//!
//! ```text
//! cargo run --example rebalance_plan
//! ```

use wlan_lba::lba::{rebalance, BalanceParams, LbaMode};
use wlan_lba::topology::{AccessPoint, MobileStation, NetworkState};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = NetworkState::new(
        vec![AccessPoint::new("ap1", 20e6), AccessPoint::new("ap2", 20e6)],
        vec![
            MobileStation::new("fixed1")
                .with_link("ap1", 50.0)
                .with_demand(0.0, 500.0)
                .associated_to("ap1"),
            MobileStation::new("fixed2")
                .with_link("ap2", 50.0)
                .with_demand(0.0, 100.0)
                .associated_to("ap2"),
            MobileStation::new("mover")
                .with_link("ap1", 60.0)
                .with_link("ap2", 28.0)
                .with_demand(150.0, 250.0)
                .associated_to("ap1"),
        ],
    );

    for mode in [LbaMode::Baseline, LbaMode::SnrAware] {
        let plan = rebalance(&net, &BalanceParams::new(mode))?;
        println!("{mode}: converged = {}", plan.converged);
        for m in &plan.moves {
            println!(
                "  move {} {} -> {} ({} dB -> {} dB)",
                m.station, m.from, m.to, m.snr_from_db, m.snr_to_db
            );
        }
        for (ap, (load, state)) in &plan.final_classification.aps {
            println!("  {ap}: {load} kbps {state:?}");
        }
    }
    Ok(())
}
