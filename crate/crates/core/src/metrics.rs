//! Receiver-side QoS metrics: bitrate, end-to-end delay, frame jitter and
//! MSE/PSNR over 8-bit luma frames.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::topology::StationId;

/// PSNR reported for identical frames.
pub const PSNR_CAP_DB: f64 = 100.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("frame dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("frame has {got} samples, expected {expected}")]
    BadSampleCount { expected: usize, got: usize },
    #[error("frame dimensions must be positive")]
    EmptyFrame,
    #[error("sequence lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("no frames to score")]
    NoFrames,
    #[error("jitter needs at least 3 delivered frames, got {0}")]
    TooFewFrames(usize),
    #[error("no delivered packets")]
    NoDeliveries,
}

/// Grayscale frame, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    samples: Vec<u8>,
}

impl Frame {
    pub fn new(width: usize, height: usize, samples: Vec<u8>) -> Result<Self, MetricsError> {
        if width == 0 || height == 0 {
            return Err(MetricsError::EmptyFrame);
        }
        if samples.len() != width * height {
            return Err(MetricsError::BadSampleCount {
                expected: width * height,
                got: samples.len(),
            });
        }
        Ok(Self {
            width,
            height,
            samples,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self, MetricsError> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.samples[y * self.width + x]
    }
}

/// One packet of a flow as seen by the receiver.
#[derive(Clone, Debug, PartialEq)]
pub struct PacketRecord {
    pub flow: StationId,
    pub seq: u64,
    /// Video frame this packet belongs to.
    pub frame: Option<u64>,
    pub size_bits: u64,
    pub send_time_s: f64,
    /// `None` when the packet was lost.
    pub arrival_time_s: Option<f64>,
}

impl PacketRecord {
    pub fn delay_s(&self) -> Option<f64> {
        self.arrival_time_s.map(|a| a - self.send_time_s)
    }
}

/// Send and (if delivered) arrival instants of one frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameTiming {
    pub send_time_s: f64,
    pub arrival_time_s: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JitterStats {
    pub mean_abs_ms: f64,
    pub range_ms: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QosReport {
    pub bitrate_kbps: f64,
    pub mean_delay_ms: Option<f64>,
    pub mean_abs_jitter_ms: Option<f64>,
    pub jitter_range_ms: Option<f64>,
    pub video_psnr_db: Option<f64>,
    pub loss_fraction: f64,
}

fn same_dims(a: &Frame, b: &Frame) -> Result<(), MetricsError> {
    if a.width != b.width || a.height != b.height {
        return Err(MetricsError::DimensionMismatch(
            a.width, a.height, b.width, b.height,
        ));
    }
    Ok(())
}

pub fn mse(a: &Frame, b: &Frame) -> Result<f64, MetricsError> {
    same_dims(a, b)?;
    let sum: u64 = a
        .samples
        .iter()
        .zip(&b.samples)
        .map(|(&x, &y)| {
            let d = i64::from(x) - i64::from(y);
            (d * d) as u64
        })
        .sum();
    Ok(sum as f64 / a.samples.len() as f64)
}

fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        PSNR_CAP_DB
    } else {
        (20.0 * (255.0 / mse.sqrt()).log10()).min(PSNR_CAP_DB)
    }
}

/// `20 log10(255 / RMSE)`, capped at [`PSNR_CAP_DB`].
pub fn psnr(a: &Frame, b: &Frame) -> Result<f64, MetricsError> {
    mse(a, b).map(psnr_from_mse)
}

/// Mean of per-frame PSNR.
pub fn video_psnr(reference: &[Frame], received: &[Frame]) -> Result<f64, MetricsError> {
    if reference.len() != received.len() {
        return Err(MetricsError::LengthMismatch(
            reference.len(),
            received.len(),
        ));
    }
    if reference.is_empty() {
        return Err(MetricsError::NoFrames);
    }
    let mut total = 0.0;
    for (r, x) in reference.iter().zip(received) {
        total += psnr(r, x)?;
    }
    Ok(total / reference.len() as f64)
}

/// Jitter over consecutive delivered frames: the arrival gap minus the send
/// gap. Lost frames are skipped, so a loss merges two gaps into one.
pub fn jitter_stats(frames: &[FrameTiming]) -> Result<JitterStats, MetricsError> {
    let delivered: Vec<(f64, f64)> = frames
        .iter()
        .filter_map(|f| f.arrival_time_s.map(|a| (f.send_time_s, a)))
        .collect();
    if delivered.len() < 3 {
        return Err(MetricsError::TooFewFrames(delivered.len()));
    }
    let jitter: Vec<f64> = delivered
        .windows(2)
        .map(|w| ((w[1].1 - w[0].1) - (w[1].0 - w[0].0)) * 1000.0)
        .collect();
    let mean_abs_ms = jitter.iter().map(|j| j.abs()).sum::<f64>() / jitter.len() as f64;
    let max = jitter.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = jitter.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(JitterStats {
        mean_abs_ms,
        range_ms: max - min,
    })
}

/// Groups packets by their frame index. A frame counts as delivered when
/// none of its packets was lost; its arrival is the last packet's.
/// Packets without a frame index form single-packet frames.
pub fn frame_timings(records: &[PacketRecord]) -> Vec<FrameTiming> {
    let mut frames: BTreeMap<(u64, u64), FrameTiming> = BTreeMap::new();
    for r in records {
        let key = match r.frame {
            Some(f) => (f, 0),
            None => (r.seq, 1),
        };
        frames
            .entry(key)
            .and_modify(|t| {
                t.send_time_s = t.send_time_s.min(r.send_time_s);
                t.arrival_time_s = match (t.arrival_time_s, r.arrival_time_s) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    _ => None,
                };
            })
            .or_insert(FrameTiming {
                send_time_s: r.send_time_s,
                arrival_time_s: r.arrival_time_s,
            });
    }
    let mut out: Vec<FrameTiming> = frames.into_values().collect();
    out.sort_by(|a, b| a.send_time_s.total_cmp(&b.send_time_s));
    out
}

/// Received kbps over `[window_start_s, window_end_s)`, by arrival time.
pub fn bitrate(records: &[PacketRecord], window_start_s: f64, window_end_s: f64) -> f64 {
    let len = window_end_s - window_start_s;
    if !(len > 0.0) {
        return 0.0;
    }
    let bits: u64 = records
        .iter()
        .filter(|r| {
            r.arrival_time_s
                .is_some_and(|a| a >= window_start_s && a < window_end_s)
        })
        .map(|r| r.size_bits)
        .sum();
    bits as f64 / (len * 1000.0)
}

/// Mean one-way delay of delivered packets, in milliseconds.
pub fn mean_delay(records: &[PacketRecord]) -> Result<f64, MetricsError> {
    let delays: Vec<f64> = records.iter().filter_map(PacketRecord::delay_s).collect();
    if delays.is_empty() {
        return Err(MetricsError::NoDeliveries);
    }
    Ok(delays.iter().sum::<f64>() / delays.len() as f64 * 1000.0)
}

pub fn loss_fraction(records: &[PacketRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    let lost = records
        .iter()
        .filter(|r| r.arrival_time_s.is_none())
        .count();
    lost as f64 / records.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel_eq(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-300)
    }

    fn rec(seq: u64, size: u64, send: f64, arrival: Option<f64>) -> PacketRecord {
        PacketRecord {
            flow: StationId::from("f"),
            seq,
            frame: None,
            size_bits: size,
            send_time_s: send,
            arrival_time_s: arrival,
        }
    }

    #[test]
    fn mse_examples() {
        let a = Frame::filled(4, 3, 17).unwrap();
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        let z = Frame::new(1, 1, vec![0]).unwrap();
        let w = Frame::new(1, 1, vec![255]).unwrap();
        assert_eq!(mse(&z, &w).unwrap(), 65025.0);
        let a = Frame::new(2, 1, vec![0, 0]).unwrap();
        let b = Frame::new(2, 1, vec![3, 4]).unwrap();
        assert_eq!(mse(&a, &b).unwrap(), 12.5);
    }

    #[test]
    fn mse_dimension_mismatch() {
        let a = Frame::filled(2, 1, 0).unwrap();
        let b = Frame::filled(1, 2, 0).unwrap();
        assert_eq!(
            mse(&a, &b),
            Err(MetricsError::DimensionMismatch(2, 1, 1, 2))
        );
        assert!(psnr(&a, &b).is_err());
    }

    #[test]
    fn frame_construction_checks() {
        assert_eq!(Frame::new(0, 3, vec![]), Err(MetricsError::EmptyFrame));
        assert_eq!(
            Frame::new(2, 2, vec![1, 2, 3]),
            Err(MetricsError::BadSampleCount {
                expected: 4,
                got: 3
            })
        );
    }

    #[test]
    fn psnr_examples() {
        let a = Frame::filled(8, 8, 0).unwrap();
        assert_eq!(psnr(&a, &a).unwrap(), PSNR_CAP_DB);
        let b = Frame::filled(8, 8, 255).unwrap();
        assert_eq!(psnr(&a, &b).unwrap(), 0.0);
        let c = Frame::filled(8, 8, 1).unwrap();
        assert!(rel_eq(psnr(&a, &c).unwrap(), 20.0 * 255f64.log10()));
        assert!(rel_eq(psnr(&a, &c).unwrap(), 48.130_803_608_679_1));
    }

    #[test]
    fn video_psnr_examples() {
        let a = Frame::filled(2, 2, 0).unwrap();
        assert_eq!(
            video_psnr(&[a.clone(), a.clone()], &[a.clone(), a.clone()]).unwrap(),
            100.0
        );
        let x = Frame::new(1, 1, vec![0]).unwrap();
        let y20 = Frame::new(1, 1, vec![25]).unwrap();
        let p20 = psnr(&x, &y20).unwrap();
        let ref_seq = vec![x.clone(), x.clone()];
        let y_low = Frame::new(1, 1, vec![3]).unwrap();
        let p_low = psnr(&x, &y_low).unwrap();
        let v = video_psnr(&ref_seq, &[y20, y_low]).unwrap();
        assert!(rel_eq(v, (p20 + p_low) / 2.0));
        assert_eq!(video_psnr(&[], &[]), Err(MetricsError::NoFrames));
        assert_eq!(
            video_psnr(&ref_seq, &[x]),
            Err(MetricsError::LengthMismatch(2, 1))
        );
    }

    #[test]
    fn video_psnr_mean_of_forty_and_twenty() {
        // one sample off by 51: mse 2601/4 → 20 dB, 2601/400 → 40 dB
        let with_spike = |w: usize, h: usize| {
            let mut s = vec![0u8; w * h];
            s[0] = 51;
            Frame::new(w, h, s).unwrap()
        };
        let refs = [
            Frame::filled(2, 2, 0).unwrap(),
            Frame::filled(20, 20, 0).unwrap(),
        ];
        let recv = [with_spike(2, 2), with_spike(20, 20)];
        assert!(rel_eq(psnr(&refs[0], &recv[0]).unwrap(), 20.0));
        assert!(rel_eq(psnr(&refs[1], &recv[1]).unwrap(), 40.0));
        assert!(rel_eq(video_psnr(&refs, &recv).unwrap(), 30.0));
    }

    #[test]
    fn jitter_periodic_is_zero() {
        let frames: Vec<_> = (0..5)
            .map(|i| FrameTiming {
                send_time_s: i as f64 * 0.04,
                arrival_time_s: Some(i as f64 * 0.04 + 0.01),
            })
            .collect();
        let j = jitter_stats(&frames).unwrap();
        assert!(j.mean_abs_ms.abs() < 1e-9 && j.range_ms.abs() < 1e-9);
    }

    #[test]
    fn jitter_worked_example() {
        let frames = [
            FrameTiming {
                send_time_s: 0.0,
                arrival_time_s: Some(0.10),
            },
            FrameTiming {
                send_time_s: 1.0,
                arrival_time_s: Some(1.10),
            },
            FrameTiming {
                send_time_s: 2.0,
                arrival_time_s: Some(2.15),
            },
        ];
        let j = jitter_stats(&frames).unwrap();
        assert!((j.mean_abs_ms - 25.0).abs() < 1e-9);
        assert!((j.range_ms - 50.0).abs() < 1e-9);
    }

    #[test]
    fn jitter_needs_three_delivered() {
        let frames = [
            FrameTiming {
                send_time_s: 0.0,
                arrival_time_s: Some(0.1),
            },
            FrameTiming {
                send_time_s: 1.0,
                arrival_time_s: None,
            },
            FrameTiming {
                send_time_s: 2.0,
                arrival_time_s: Some(2.1),
            },
        ];
        assert_eq!(jitter_stats(&frames), Err(MetricsError::TooFewFrames(2)));
    }

    #[test]
    fn lost_frame_merges_gaps() {
        let frames = [
            FrameTiming {
                send_time_s: 0.0,
                arrival_time_s: Some(0.1),
            },
            FrameTiming {
                send_time_s: 1.0,
                arrival_time_s: None,
            },
            FrameTiming {
                send_time_s: 2.0,
                arrival_time_s: Some(2.1),
            },
            FrameTiming {
                send_time_s: 3.0,
                arrival_time_s: Some(3.2),
            },
        ];
        let j = jitter_stats(&frames).unwrap();
        assert!((j.mean_abs_ms - 50.0).abs() < 1e-9);
        assert!((j.range_ms - 100.0).abs() < 1e-9);
    }

    #[test]
    fn frame_grouping() {
        let mut recs = vec![
            rec(0, 10, 0.0, Some(0.05)),
            rec(1, 10, 0.0, Some(0.07)),
            rec(2, 10, 1.0, Some(1.02)),
            rec(3, 10, 1.0, None),
        ];
        recs[0].frame = Some(0);
        recs[1].frame = Some(0);
        recs[2].frame = Some(1);
        recs[3].frame = Some(1);
        let f = frame_timings(&recs);
        assert_eq!(f.len(), 2);
        assert_eq!(f[0].arrival_time_s, Some(0.07));
        assert_eq!(f[1].arrival_time_s, None);
    }

    #[test]
    fn bitrate_examples() {
        let recs: Vec<_> = (0..1000)
            .map(|i| rec(i, 1000, i as f64 / 1000.0, Some(i as f64 / 1000.0 + 1e-4)))
            .collect();
        assert!(rel_eq(bitrate(&recs, 0.0, 1.0), 1000.0));
        assert!(rel_eq(bitrate(&recs, 0.0, 2.0), 500.0));
        assert_eq!(bitrate(&[], 0.0, 1.0), 0.0);
        assert_eq!(bitrate(&[rec(0, 5, 0.0, None)], 0.0, 1.0), 0.0);
    }

    #[test]
    fn delay_examples() {
        assert!(rel_eq(
            mean_delay(&[rec(0, 1, 1.0, Some(1.052))]).unwrap(),
            52.0
        ));
        let recs = [
            rec(0, 1, 0.0, Some(0.010)),
            rec(1, 1, 0.0, Some(0.030)),
            rec(2, 1, 0.0, None),
        ];
        assert!(rel_eq(mean_delay(&recs).unwrap(), 20.0));
        assert!(rel_eq(loss_fraction(&recs), 1.0 / 3.0));
        assert_eq!(
            mean_delay(&[rec(0, 1, 0.0, None)]),
            Err(MetricsError::NoDeliveries)
        );
        assert_eq!(loss_fraction(&[]), 0.0);
    }

    fn arb_frame_pair() -> impl Strategy<Value = (Frame, Frame)> {
        (1usize..6, 1usize..6).prop_flat_map(|(w, h)| {
            (
                proptest::collection::vec(any::<u8>(), w * h),
                proptest::collection::vec(any::<u8>(), w * h),
            )
                .prop_map(move |(a, b)| {
                    (Frame::new(w, h, a).unwrap(), Frame::new(w, h, b).unwrap())
                })
        })
    }

    proptest! {
        #[test]
        fn mse_symmetric_and_zero_iff_equal((a, b) in arb_frame_pair()) {
            let ab = mse(&a, &b).unwrap();
            prop_assert_eq!(ab, mse(&b, &a).unwrap());
            prop_assert!(ab >= 0.0);
            prop_assert_eq!(ab == 0.0, a == b);
        }

        #[test]
        fn psnr_decreasing_in_mse(m1 in 1e-3f64..65025.0, m2 in 1e-3f64..65025.0) {
            prop_assume!(m1 < m2);
            let (p1, p2) = (psnr_from_mse(m1), psnr_from_mse(m2));
            prop_assert!(p1 >= p2);
            if p1 < PSNR_CAP_DB {
                prop_assert!(p1 > p2);
            }
        }

        #[test]
        fn video_psnr_weighted_over_concatenation(
            (pairs, k) in (1usize..6, 1usize..6, 2usize..8).prop_flat_map(|(w, h, n)| {
                let frame = move || proptest::collection::vec(any::<u8>(), w * h)
                    .prop_map(move |s| Frame::new(w, h, s).unwrap());
                (proptest::collection::vec((frame(), frame()), n), 1..n)
            }),
        ) {
            let (refs, recv): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            let all = video_psnr(&refs, &recv).unwrap();
            let a = video_psnr(&refs[..k], &recv[..k]).unwrap();
            let b = video_psnr(&refs[k..], &recv[k..]).unwrap();
            let n = refs.len() as f64;
            let weighted = (a * k as f64 + b * (n - k as f64)) / n;
            prop_assert!((all - weighted).abs() <= 1e-9 * all.max(1.0));
        }

        #[test]
        fn jitter_shift_invariant(
            gaps in proptest::collection::vec((0.001f64..1.0, 0.0f64..0.5), 3..20),
            ds in -100.0f64..100.0,
            da in -100.0f64..100.0,
        ) {
            let mut t = 0.0;
            let frames: Vec<FrameTiming> = gaps
                .iter()
                .map(|(g, d)| {
                    t += g;
                    FrameTiming { send_time_s: t, arrival_time_s: Some(t + d) }
                })
                .collect();
            let shifted: Vec<FrameTiming> = frames
                .iter()
                .map(|f| FrameTiming {
                    send_time_s: f.send_time_s + ds,
                    arrival_time_s: f.arrival_time_s.map(|a| a + da),
                })
                .collect();
            let j1 = jitter_stats(&frames).unwrap();
            let j2 = jitter_stats(&shifted).unwrap();
            prop_assert!((j1.mean_abs_ms - j2.mean_abs_ms).abs() < 1e-6);
            prop_assert!((j1.range_ms - j2.range_ms).abs() < 1e-6);
        }

        #[test]
        fn bitrate_additive(
            arrivals in proptest::collection::vec((0.0f64..10.0, 1u64..20000), 0..50),
            cut in 0.01f64..9.99,
        ) {
            let recs: Vec<_> = arrivals
                .iter()
                .enumerate()
                .map(|(i, (a, s))| rec(i as u64, *s, 0.0, Some(*a)))
                .collect();
            let whole = bitrate(&recs, 0.0, 10.0) * 10.0;
            let parts = bitrate(&recs, 0.0, cut) * cut + bitrate(&recs, cut, 10.0) * (10.0 - cut);
            prop_assert!((whole - parts).abs() <= 1e-9 * whole.max(1.0));
        }
    }
}
