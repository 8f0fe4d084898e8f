//! Shannon capacity of a link and how airtime is shared when an AP is
//! oversubscribed.
//!
//! ```text
//! cargo run --example link_capacity
//! ```

use wlan_lba::channel::{db_to_linear, effective_throughput, shannon_capacity, Member};
use wlan_lba::topology::AccessPoint;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ap = AccessPoint::new("ap1", 100e3);

    println!("capacity of a 100 kHz channel");
    for snr_db in [10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 80.0] {
        let c = shannon_capacity(ap.bandwidth_hz, db_to_linear(snr_db))?;
        println!("  {snr_db:>4} dB -> {:>7.0} kbps", c / 1e3);
    }

    // A camera on a weak link next to a bulk transfer on a strong one.
    let members = [
        Member::new("bulk", 1.5e6, 80.0),
        Member::new("cam", 0.8e6, 20.0),
    ];
    let share = effective_throughput(&ap, &members)?;
    println!("\nrequested airtime {:.2}", share.requested_airtime);
    for s in &share.shares {
        println!(
            "  {:<5} link {:>7.0} kbps  airtime {:.2}  achieved {:>6.0} kbps",
            s.station.as_str(),
            s.capacity_bps / 1e3,
            s.airtime,
            s.achieved_bps / 1e3
        );
    }
    Ok(())
}
