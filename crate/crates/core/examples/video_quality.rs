//! PSNR of a synthetic clip when frames are lost and concealed by repeating
//! the last good frame, plus frame jitter from a short timing trace.
//!
//! ```text
//! cargo run --example video_quality
//! ```

use wlan_lba::metrics::{jitter_stats, video_psnr, FrameTiming};
use wlan_lba::sim::{conceal, generate_frames};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let reference = generate_frames(0, 25, 32, 24)?;
    for lost_every in [0, 10, 5, 2] {
        let delivered: Vec<bool> = (0..reference.len())
            .map(|i| lost_every == 0 || i % lost_every != lost_every - 1)
            .collect();
        let received = conceal(&reference, &delivered);
        let lost = delivered.iter().filter(|d| !**d).count();
        println!(
            "{lost:>2} of 25 frames lost -> PSNR {:.2} dB",
            video_psnr(&reference, &received)?
        );
    }

    let timings = [(0.0, 0.10), (1.0, 1.10), (2.0, 2.15), (3.0, 3.12)];
    let frames: Vec<FrameTiming> = timings
        .iter()
        .map(|&(s, a)| FrameTiming {
            send_time_s: s,
            arrival_time_s: Some(a),
        })
        .collect();
    let j = jitter_stats(&frames)?;
    println!(
        "jitter: mean |j| {:.1} ms, range {:.1} ms",
        j.mean_abs_ms, j.range_ms
    );
    Ok(())
}
