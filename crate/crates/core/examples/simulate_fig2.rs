//! Runs the built-in `fig2` scenario in each controller mode and writes the
//! CSV reports under a temporary directory.
//!
//! ```text
//! cargo run --release --example simulate_fig2
//! ```

use wlan_lba::cli::{write_reports, RunOutcome};
use wlan_lba::scenario::{builtin, parse_scenario_with};
use wlan_lba::sim::{self, AssocMessage};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::temp_dir().join("wlan-lba-fig2");
    for mode in ["off", "baseline", "snr-aware"] {
        let parsed = parse_scenario_with(builtin::FIG2, &[("sim.lba_mode".into(), mode.into())])?;
        let report = sim::run(&parsed.scenario)?;
        println!("{mode}");
        for f in &report.flows {
            let path: Vec<&str> = f.ap_path.iter().map(|a| a.as_str()).collect();
            println!(
                "  {:<5} via {:<8} {:>7.1} kbps  loss {:.3}  psnr {}",
                f.flow.as_str(),
                path.join(">"),
                f.qos.bitrate_kbps,
                f.qos.loss_fraction,
                f.qos
                    .video_psnr_db
                    .map_or("-".into(), |p| format!("{p:.1} dB"))
            );
        }
        for m in report
            .messages
            .iter()
            .filter(|m| matches!(m.message, AssocMessage::MoveCommand { .. }))
        {
            println!("  t={:.2}s {:?}", m.time_s, m.message);
        }
        let run = RunOutcome {
            label: parsed.scenario.display_name().to_owned(),
            scenario: parsed.scenario,
            report,
        };
        write_reports(std::slice::from_ref(&run), &out.join(mode), true)?;
    }
    println!("reports in {}", out.display());
    Ok(())
}
