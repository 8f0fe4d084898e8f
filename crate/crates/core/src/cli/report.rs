use std::fs;
use std::io::Write;
use std::path::Path;

use crate::metrics::PacketRecord;
use crate::scenario::Scenario;
use crate::sim::{SimReport, TimedMove};

pub const SUMMARY_HEADER: [&str; 12] = [
    "scenario",
    "seed",
    "mode",
    "alpha",
    "flow",
    "ap_path",
    "bitrate_kbps",
    "mean_delay_ms",
    "mean_abs_jitter_ms",
    "jitter_range_ms",
    "psnr_db",
    "loss_fraction",
];
pub const MOVES_HEADER: [&str; 6] = [
    "time_s",
    "station",
    "from_ap",
    "to_ap",
    "snr_from_db",
    "snr_to_db",
];
pub const TRACE_HEADER: [&str; 6] = [
    "flow",
    "seq",
    "frame",
    "size_bits",
    "send_time_s",
    "arrival_time_s",
];

/// One simulated run and the scenario it came from.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    /// Scenario name, with the sweep point appended for sweeps.
    pub label: String,
    pub scenario: Scenario,
    pub report: SimReport,
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per monitored flow per run.
pub fn write_summary<W: Write>(runs: &[RunOutcome], w: W) -> Result<(), csv::Error> {
    let mut out = writer(w);
    out.write_record(SUMMARY_HEADER)?;
    for run in runs {
        let sim = &run.scenario.sim;
        for flow in &run.report.flows {
            let path: Vec<&str> = flow.ap_path.iter().map(|a| a.as_str()).collect();
            let q = &flow.qos;
            out.write_record([
                run.label.clone(),
                sim.seed.to_string(),
                sim.lba_mode.to_string(),
                sim.alpha.to_string(),
                flow.flow.to_string(),
                path.join(">"),
                q.bitrate_kbps.to_string(),
                opt(q.mean_delay_ms),
                opt(q.mean_abs_jitter_ms),
                opt(q.jitter_range_ms),
                opt(q.video_psnr_db),
                q.loss_fraction.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_moves<W: Write>(moves: &[TimedMove], w: W) -> Result<(), csv::Error> {
    let mut out = writer(w);
    out.write_record(MOVES_HEADER)?;
    for m in moves {
        out.write_record([
            m.time_s.to_string(),
            m.mv.station.to_string(),
            m.mv.from.to_string(),
            m.mv.to.to_string(),
            m.mv.snr_from_db.to_string(),
            m.mv.snr_to_db.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_trace<W: Write>(trace: &[PacketRecord], w: W) -> Result<(), csv::Error> {
    let mut out = writer(w);
    out.write_record(TRACE_HEADER)?;
    for p in trace {
        out.write_record([
            p.flow.to_string(),
            p.seq.to_string(),
            p.frame.map(|f| f.to_string()).unwrap_or_default(),
            p.size_bits.to_string(),
            p.send_time_s.to_string(),
            opt(p.arrival_time_s),
        ])?;
    }
    out.flush()?;
    Ok(())
}

fn write_run(run: &RunOutcome, dir: &Path, trace: bool) -> Result<(), csv::Error> {
    write_moves(&run.report.moves, fs::File::create(dir.join("moves.csv"))?)?;
    if trace {
        write_trace(&run.report.trace, fs::File::create(dir.join("trace.csv"))?)?;
    }
    Ok(())
}

/// Writes `summary.csv` into `out_dir`. A single run puts `moves.csv` and
/// `trace.csv` beside it; several runs get one `run-NNN` directory each, in
/// sweep order.
pub fn write_reports(runs: &[RunOutcome], out_dir: &Path, trace: bool) -> Result<(), csv::Error> {
    fs::create_dir_all(out_dir)?;
    write_summary(runs, fs::File::create(out_dir.join("summary.csv"))?)?;
    if let [run] = runs {
        write_run(run, out_dir, trace)?;
    } else {
        for (i, run) in runs.iter().enumerate() {
            let dir = out_dir.join(format!("run-{i:03}"));
            fs::create_dir_all(&dir)?;
            write_run(run, &dir, trace)?;
        }
    }
    Ok(())
}
