//! Balance index, average load and load classification for a three-AP
//! network.
//!
//! ```text
//! cargo run --example balance_index
//! ```

use wlan_lba::lba::{balance_index, classify_network, min_zone_balance, DEFAULT_ALPHA};
use wlan_lba::topology::{AccessPoint, MobileStation, NetworkState};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for loads in [
        [500.0, 500.0, 500.0],
        [900.0, 500.0, 100.0],
        [1500.0, 0.0, 0.0],
    ] {
        println!("beta({loads:?}) = {:.4}", balance_index(&loads)?);
    }

    let net = NetworkState::new(
        vec![
            AccessPoint::new("ap1", 20e6),
            AccessPoint::new("ap2", 20e6),
            AccessPoint::new("ap3", 20e6),
        ],
        vec![
            MobileStation::new("a")
                .with_link("ap1", 40.0)
                .with_demand(300.0, 600.0)
                .associated_to("ap1"),
            MobileStation::new("b")
                .with_link("ap1", 30.0)
                .with_link("ap2", 35.0)
                .with_demand(0.0, 500.0)
                .associated_to("ap2"),
            MobileStation::new("c")
                .with_link("ap2", 25.0)
                .with_link("ap3", 50.0)
                .with_demand(100.0, 0.0)
                .associated_to("ap3"),
        ],
    );
    let class = classify_network(&net, DEFAULT_ALPHA)?;
    println!(
        "\nANL {:.1} kbps, band [{:.1}, {:.1}]",
        class.anl, class.delta2, class.delta1
    );
    for (ap, (load, state)) in &class.aps {
        println!("  {ap}: {load:>6.1} kbps {state:?}");
    }
    for zone in net.zones() {
        println!("zone {}", zone.id);
    }
    println!("minimum zone balance {:.4}", min_zone_balance(&net));
    Ok(())
}
