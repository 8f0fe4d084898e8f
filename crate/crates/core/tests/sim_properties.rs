use proptest::prelude::*;

use wlan_lba::channel::LinkBudget;
use wlan_lba::lba::{snr_gate, LbaMode};
use wlan_lba::scenario::{ModeSetting, Scenario, SimSettings, StationSpec, TrafficProfile};
use wlan_lba::sim;
use wlan_lba::topology::AccessPoint;

fn arb_profile() -> impl Strategy<Value = TrafficProfile> {
    prop_oneof![
        (
            prop::sample::select(vec![1u32, 3, 7, 15, 25]),
            1u64..40,
            1u32..5
        )
            .prop_map(|(fps, kbits, ppf)| {
                TrafficProfile::Video {
                    frame_rate_fps: fps,
                    frame_size_bits: kbits * 1000,
                    packets_per_frame: ppf,
                }
            }),
        (50.0f64..1500.0).prop_map(|r| TrafficProfile::Ftp {
            rate_kbps: r.round(),
            packet_bits: 12_000,
        }),
        (100.0f64..1500.0, 0.2f64..2.0, 0.2f64..2.0).prop_map(|(p, on, off)| {
            TrafficProfile::Http {
                peak_kbps: p.round(),
                mean_on_s: on,
                mean_off_s: off,
                packet_bits: 8000,
            }
        }),
    ]
}

fn arb_scenario() -> impl Strategy<Value = Scenario> {
    let station = (
        arb_profile(),
        prop::collection::vec(prop::option::of(5.0f64..80.0), 3),
        0.0f64..2.0,
        prop::option::of(2.0f64..4.0),
    );
    (
        1usize..=3,
        prop::collection::vec(station, 1..6),
        0u64..1000,
        prop::sample::select(vec![
            ModeSetting::Off,
            ModeSetting::Lba(LbaMode::Baseline),
            ModeSetting::Lba(LbaMode::SnrAware),
        ]),
        1usize..50,
    )
        .prop_map(|(n_aps, stations, seed, mode, queue)| {
            let mut s = SimSettings::new(4.0, seed);
            s.lba_mode = mode;
            s.queue_capacity = queue;
            let mut sc = Scenario::new(s);
            sc.aps = (0..n_aps)
                .map(|i| AccessPoint::new(format!("ap{i}"), 200e3))
                .collect();
            for (i, (profile, links, join, leave)) in stations.into_iter().enumerate() {
                let mut st = StationSpec::new(format!("s{i}"), profile).joining_at(join);
                for (a, snr) in links.into_iter().take(n_aps).enumerate() {
                    if let Some(snr) = snr {
                        st = st.with_link(format!("ap{a}"), snr.round());
                    }
                }
                st.leave_time_s = leave;
                sc.monitor.flows.push(st.id.clone());
                sc.stations.push(st);
            }
            sc
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn runs_are_reproducible(sc in arb_scenario()) {
        prop_assert_eq!(sim::run(&sc).unwrap(), sim::run(&sc).unwrap());
    }

    #[test]
    fn packets_are_conserved(sc in arb_scenario()) {
        let r = sim::run(&sc).unwrap();
        for (id, c) in &r.flow_counters {
            prop_assert_eq!(c.generated, c.delivered + c.dropped + c.queued, "{}", id);
        }
        let in_trace = r.trace.len() as u64;
        let finished: u64 = r.flow_counters.values().map(|c| c.delivered + c.dropped).sum();
        prop_assert_eq!(in_trace, finished);
    }

    #[test]
    fn deliveries_respect_link_capacity(sc in arb_scenario()) {
        let r = sim::run(&sc).unwrap();
        for (rec, ap) in r.trace.iter().zip(&r.served_by) {
            let (Some(arrival), Some(ap)) = (rec.arrival_time_s, ap) else { continue };
            prop_assert!(arrival <= sc.sim.horizon_s);
            let spec = sc.station(&rec.flow).unwrap();
            let apd = sc.aps.iter().find(|a| &a.id == ap).unwrap();
            let cap = LinkBudget::new(apd, spec.links[ap]).unwrap().capacity_bps;
            prop_assert!(arrival >= rec.send_time_s + rec.size_bits as f64 / cap - 1e-9);
        }
    }

    #[test]
    fn moves_follow_the_mode(sc in arb_scenario()) {
        let r = sim::run(&sc).unwrap();
        match sc.sim.lba_mode {
            ModeSetting::Off => {
                prop_assert!(r.moves.is_empty());
                for f in &r.flows {
                    prop_assert!(f.ap_path.len() <= 1);
                }
            }
            ModeSetting::Lba(LbaMode::SnrAware) => {
                for m in &r.moves {
                    prop_assert!(snr_gate(m.mv.snr_from_db, m.mv.snr_to_db).is_allowed());
                }
            }
            ModeSetting::Lba(LbaMode::Baseline) => {}
        }
    }

    #[test]
    fn qos_values_are_sane(sc in arb_scenario()) {
        let r = sim::run(&sc).unwrap();
        for f in &r.flows {
            let q = &f.qos;
            prop_assert!(q.bitrate_kbps >= 0.0);
            prop_assert!((0.0..=1.0).contains(&q.loss_fraction));
            if let Some(d) = q.mean_delay_ms {
                prop_assert!(d >= 0.0);
            }
            if let Some(p) = q.video_psnr_db {
                prop_assert!((0.0..=100.0).contains(&p));
            }
            if let (Some(m), Some(rg)) = (q.mean_abs_jitter_ms, q.jitter_range_ms) {
                prop_assert!(m >= 0.0 && rg >= 0.0);
            }
        }
    }
}
