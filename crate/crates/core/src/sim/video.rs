//! Synthetic video source and freeze-frame concealment.

use crate::metrics::{Frame, MetricsError};

/// Sample value substituted while no frame has been delivered yet.
pub const MID_GRAY: u8 = 128;

/// Shifting ramp: sample `(x, y)` of frame `i` is `(x + y + 7 i + seed) mod 256`,
/// so consecutive frames always differ.
pub fn generate_frames(
    pattern_seed: u64,
    count: usize,
    width: usize,
    height: usize,
) -> Result<Vec<Frame>, MetricsError> {
    if width == 0 || height == 0 {
        return Err(MetricsError::EmptyFrame);
    }
    (0..count)
        .map(|i| {
            let base = (7 * i as u64).wrapping_add(pattern_seed);
            let mut samples = Vec::with_capacity(width * height);
            for y in 0..height {
                for x in 0..width {
                    samples.push(((x as u64 + y as u64).wrapping_add(base) % 256) as u8);
                }
            }
            Frame::new(width, height, samples)
        })
        .collect()
}

/// What the player shows: delivered frames as-is, lost frames replaced by the
/// last delivered one, or mid-gray before the first delivery.
pub fn conceal(reference: &[Frame], delivered: &[bool]) -> Vec<Frame> {
    let mut last: Option<&Frame> = None;
    reference
        .iter()
        .enumerate()
        .map(|(i, f)| {
            if delivered.get(i).copied().unwrap_or(false) {
                last = Some(f);
                f.clone()
            } else {
                match last {
                    Some(prev) => prev.clone(),
                    None => Frame::filled(f.width(), f.height(), MID_GRAY)
                        .expect("reference frames are non-empty"),
                }
            }
        })
        .collect()
}
