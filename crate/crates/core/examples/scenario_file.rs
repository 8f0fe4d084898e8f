//! Parses a scenario from text, shows validation warnings and
//! line-anchored errors, then renders it back to the file format.
//!
//! ```text
//! cargo run --example scenario_file
//! ```

use wlan_lba::scenario::parse_scenario;

const GOOD: &str = "\
[sim]
horizon_s = 5
seed = 3
alpha = 0.3

[monitor]
flows = cam

[ap.ap1]
bandwidth_hz = 100000

[station.cam]
profile = video
frame_rate_fps = 15
frame_size_bits = 24000
packets_per_frame = 2
link.ap1.snr_db = 45
";

const BAD: &str = "\
[sim]
horizon_s = 5
seed = 3

[ap.ap1]
bandwidth_hz = 100000

[station.cam]
profile = ftp
rate_kbps = 300
link.ap9.snr_db = 45
rate_kpbs = 200
";

fn main() {
    match parse_scenario(GOOD) {
        Ok(parsed) => {
            for w in &parsed.warnings {
                println!("warning: {w}");
            }
            println!("--- rendered ---\n{}", parsed.scenario.render());
        }
        Err(e) => println!("unexpected error:\n{e}"),
    }
    match parse_scenario(BAD) {
        Ok(_) => println!("unexpectedly parsed"),
        Err(e) => println!("--- diagnostics ---\n{e}"),
    }
}
