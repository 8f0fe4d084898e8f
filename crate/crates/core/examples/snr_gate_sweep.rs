//! The built-in `table1` setup: a camera on a saturated AP at 80 dB with a
//! second AP whose link SNR is swept. Compares lba off, baseline and
//! snr-aware at each point.
//!
//! ```text
//! cargo run --release --example snr_gate_sweep
//! ```

use wlan_lba::scenario::{builtin, parse_scenario_with};
use wlan_lba::sim;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!(
        "{:>6} {:>10} {:>14} {:>10}",
        "ap2 dB", "mode", "bitrate kbps", "delay ms"
    );
    for snr in [20, 30, 40, 50, 60] {
        for mode in ["off", "baseline", "snr-aware"] {
            let overrides = [
                ("station.cam.link.ap2.snr_db".to_owned(), snr.to_string()),
                ("sim.lba_mode".to_owned(), mode.to_owned()),
            ];
            let scenario = parse_scenario_with(builtin::TABLE1, &overrides)?.scenario;
            let report = sim::run(&scenario)?;
            let q = &report.flows[0].qos;
            let delay = q
                .mean_delay_ms
                .map_or("-".to_owned(), |d| format!("{d:.1}"));
            println!("{snr:>6} {mode:>10} {:>14.1} {delay:>10}", q.bitrate_kbps);
        }
    }
    Ok(())
}
