//! Deterministic discrete-event engine.
//!
//! Each AP is a single shared medium with a drop-tail FIFO. A packet from
//! station `s` occupies the medium for `size / capacity(s, ap)` seconds, so
//! the airtime a station consumes grows as its link SNR drops. Stations join
//! the AP with the best SNR; the controller runs on joins that overload the
//! target AP, on departures, on demand changes and optionally on a timer.
//! Moves are applied after a handoff latency during which the moving
//! station's new packets are held back.

pub mod event;
pub mod video;

pub use event::{Event, EventKind, EventQueue};
pub use video::{conceal, generate_frames, MID_GRAY};

use std::collections::{BTreeMap, VecDeque};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use thiserror::Error;

use crate::channel::{packet_service_time, LinkBudget};
use crate::lba::{classify_network, rebalance, BalanceParams, LbaError, LoadClassification, Move};
use crate::metrics::{
    bitrate, frame_timings, jitter_stats, loss_fraction, mean_delay, video_psnr, FrameTiming,
    MetricsError, PacketRecord, QosReport,
};
use crate::scenario::{Scenario, ScenarioError, TrafficProfile};
use crate::topology::{ApId, MobileStation, NetworkState, StationId};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario:\n{0}")]
    InvalidScenario(#[from] ScenarioError),
    #[error("controller failed: {0}")]
    Lba(#[from] LbaError),
    #[error("metric evaluation failed: {0}")]
    Metrics(#[from] MetricsError),
}

/// Simplified association/control protocol messages, kept as a log.
#[derive(Clone, Debug, PartialEq)]
pub enum AssocMessage {
    AssocRequest {
        station: StationId,
        required_kbps: f64,
    },
    AssocAccept {
        station: StationId,
        ap: ApId,
    },
    AssocReject {
        station: StationId,
    },
    MoveCommand {
        station: StationId,
        from: ApId,
        to: ApId,
    },
    LoadReport {
        ap: ApId,
        load_kbps: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoggedMessage {
    pub time_s: f64,
    pub message: AssocMessage,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimedMove {
    /// Decision time; the re-association completes one handoff latency later.
    pub time_s: f64,
    pub mv: Move,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FlowCounters {
    pub generated: u64,
    pub delivered: u64,
    pub dropped: u64,
    /// Still queued, in service or held during handoff at the horizon.
    pub queued: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EventCounters {
    pub processed: u64,
    pub joins: u64,
    pub rejects: u64,
    pub lba_runs: u64,
    pub moves: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowReport {
    pub flow: StationId,
    /// Every AP the station was associated with, in order.
    pub ap_path: Vec<ApId>,
    pub qos: QosReport,
    pub counters: FlowCounters,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimReport {
    /// One entry per monitored flow, in monitor order.
    pub flows: Vec<FlowReport>,
    pub moves: Vec<TimedMove>,
    /// Classification of the associations at the horizon.
    pub final_classification: Option<LoadClassification>,
    pub flow_counters: BTreeMap<StationId, FlowCounters>,
    pub counters: EventCounters,
    /// Delivered and lost packets of every flow, in generation order.
    pub trace: Vec<PacketRecord>,
    /// AP that transmitted each trace record (`None` for drops).
    pub served_by: Vec<Option<ApId>>,
    pub messages: Vec<LoggedMessage>,
}

#[derive(Clone, Copy, Debug)]
struct Packet {
    id: usize,
    station: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Fate {
    InFlight,
    Delivered(f64),
    Lost,
}

#[derive(Clone, Debug)]
struct PacketInfo {
    station: usize,
    seq: u64,
    frame: Option<u64>,
    size_bits: u64,
    send_time_s: f64,
    fate: Fate,
    served_by: Option<usize>,
}

#[derive(Default)]
struct ApRuntime {
    queue: VecDeque<Packet>,
    in_service: Option<Packet>,
}

impl ApRuntime {
    fn occupancy(&self) -> usize {
        self.queue.len() + usize::from(self.in_service.is_some())
    }
}

struct FrameSlot {
    send_time_s: f64,
    arrived: u32,
    last_arrival_s: f64,
    on_time: Option<bool>,
}

struct StationRuntime {
    assoc: Option<usize>,
    handoff_to: Option<usize>,
    held: Vec<Packet>,
    up_kbps: f64,
    down_kbps: f64,
    base_total_kbps: f64,
    active: bool,
    emitting: bool,
    started_at: f64,
    next_seq: u64,
    next_frame: u64,
    frames: Vec<FrameSlot>,
    http_on: bool,
    phase_end: f64,
    rng: ChaCha8Rng,
    path: Vec<usize>,
    generated: u64,
}

impl StationRuntime {
    fn rate_scale(&self) -> f64 {
        if self.base_total_kbps > 0.0 {
            (self.up_kbps + self.down_kbps) / self.base_total_kbps
        } else {
            1.0
        }
    }
}

struct Engine<'a> {
    scn: &'a Scenario,
    now: f64,
    events: EventQueue,
    aps: Vec<ApRuntime>,
    stations: Vec<StationRuntime>,
    /// Link capacity in bits/s, `[station][ap]`, `None` when unreachable.
    capacity: Vec<Vec<Option<f64>>>,
    ap_index: BTreeMap<ApId, usize>,
    packets: Vec<PacketInfo>,
    moves: Vec<TimedMove>,
    messages: Vec<LoggedMessage>,
    counters: EventCounters,
}

/// Runs a scenario to its horizon. The same scenario always yields the same
/// report.
pub fn run(scenario: &Scenario) -> Result<SimReport, SimError> {
    scenario.validate()?;
    let mut engine = Engine::new(scenario);
    engine.schedule_initial();
    engine.process()?;
    engine.finish()
}

fn station_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

impl<'a> Engine<'a> {
    fn new(scn: &'a Scenario) -> Self {
        let ap_index: BTreeMap<ApId, usize> = scn
            .aps
            .iter()
            .enumerate()
            .map(|(i, ap)| (ap.id.clone(), i))
            .collect();
        let capacity = scn
            .stations
            .iter()
            .map(|st| {
                scn.aps
                    .iter()
                    .map(|ap| {
                        st.links
                            .get(&ap.id)
                            .map(|snr| LinkBudget::new(ap, *snr).map_or(0.0, |lb| lb.capacity_bps))
                    })
                    .collect()
            })
            .collect();
        let stations = scn
            .stations
            .iter()
            .enumerate()
            .map(|(i, st)| {
                let (up, down) = st.declared_demand();
                StationRuntime {
                    assoc: None,
                    handoff_to: None,
                    held: Vec::new(),
                    up_kbps: up,
                    down_kbps: down,
                    base_total_kbps: up + down,
                    active: false,
                    emitting: false,
                    started_at: 0.0,
                    next_seq: 0,
                    next_frame: 0,
                    frames: Vec::new(),
                    http_on: true,
                    phase_end: 0.0,
                    rng: ChaCha8Rng::seed_from_u64(station_seed(scn.sim.seed, i)),
                    path: Vec::new(),
                    generated: 0,
                }
            })
            .collect();
        Self {
            scn,
            now: 0.0,
            events: EventQueue::new(),
            aps: scn.aps.iter().map(|_| ApRuntime::default()).collect(),
            stations,
            capacity,
            ap_index,
            packets: Vec::new(),
            moves: Vec::new(),
            messages: Vec::new(),
            counters: EventCounters::default(),
        }
    }

    fn horizon(&self) -> f64 {
        self.scn.sim.horizon_s
    }

    fn schedule_initial(&mut self) {
        for (i, st) in self.scn.stations.iter().enumerate() {
            self.events
                .push(st.join_time_s, EventKind::StationJoin { station: i });
            for ch in &st.demand_changes {
                self.events.push(
                    ch.time_s,
                    EventKind::DemandChange {
                        station: i,
                        up_kbps: ch.up_kbps,
                        down_kbps: ch.down_kbps,
                    },
                );
            }
            if let Some(t) = st.leave_time_s {
                self.events.push(t, EventKind::StationLeave { station: i });
            }
        }
        if let (Some(period), Some(_)) = (self.scn.sim.lba_period_s, self.scn.sim.lba_mode.lba()) {
            let mut k = 1u64;
            loop {
                let t = period * k as f64;
                if t > self.horizon() {
                    break;
                }
                self.events.push(t, EventKind::LbaRun);
                k += 1;
            }
        }
    }

    fn process(&mut self) -> Result<(), SimError> {
        while let Some(t) = self.events.peek_time() {
            if t > self.horizon() {
                break;
            }
            let ev = self.events.pop().expect("peeked");
            self.now = ev.time_s;
            self.counters.processed += 1;
            match ev.kind {
                EventKind::PacketArrivalAtAp { station } => self.emit(station),
                EventKind::PacketDeparture { ap } => self.depart(ap),
                EventKind::StationJoin { station } => self.join(station)?,
                EventKind::StationLeave { station } => self.leave(station),
                EventKind::DemandChange {
                    station,
                    up_kbps,
                    down_kbps,
                } => self.change_demand(station, up_kbps, down_kbps),
                EventKind::LbaRun => self.lba_run()?,
                EventKind::MoveCommand { station, to } => self.complete_move(station, to),
                EventKind::FrameDeadline { station, frame } => self.frame_deadline(station, frame),
            }
        }
        Ok(())
    }

    fn log(&mut self, message: AssocMessage) {
        self.messages.push(LoggedMessage {
            time_s: self.now,
            message,
        });
    }

    fn station_id(&self, s: usize) -> StationId {
        self.scn.stations[s].id.clone()
    }

    fn ap_id(&self, a: usize) -> ApId {
        self.scn.aps[a].id.clone()
    }

    /// The controller's current view. Stations in handoff count at their
    /// destination.
    fn snapshot(&self) -> NetworkState {
        let stations = self
            .scn
            .stations
            .iter()
            .zip(&self.stations)
            .map(|(spec, rt)| MobileStation {
                id: spec.id.clone(),
                reachable: spec.links.clone(),
                associated_ap: if rt.active {
                    rt.handoff_to.or(rt.assoc).map(|a| self.ap_id(a))
                } else {
                    None
                },
                demand_up_kbps: rt.up_kbps,
                demand_down_kbps: rt.down_kbps,
            })
            .collect();
        NetworkState::new(self.scn.aps.clone(), stations)
    }

    fn join(&mut self, s: usize) -> Result<(), SimError> {
        let spec = &self.scn.stations[s];
        self.counters.joins += 1;
        let required_kbps = self.stations[s].up_kbps + self.stations[s].down_kbps;
        self.log(AssocMessage::AssocRequest {
            station: spec.id.clone(),
            required_kbps,
        });

        // best SNR, lowest id on ties
        let mut best: Option<(&ApId, f64)> = None;
        for (ap, snr) in &spec.links {
            if best.is_none_or(|(_, b)| *snr > b) {
                best = Some((ap, *snr));
            }
        }
        let Some((target_id, _)) = best else {
            self.counters.rejects += 1;
            self.log(AssocMessage::AssocReject {
                station: spec.id.clone(),
            });
            return Ok(());
        };
        let target = self.ap_index[target_id];

        let rt = &mut self.stations[s];
        rt.assoc = Some(target);
        rt.active = true;
        rt.started_at = self.now;
        rt.path.push(target);
        self.log(AssocMessage::AssocAccept {
            station: spec.id.clone(),
            ap: target_id.clone(),
        });

        if let TrafficProfile::Http { mean_on_s, .. } = spec.profile {
            let rt = &mut self.stations[s];
            rt.http_on = true;
            rt.phase_end = self.now
                + Exp::new(1.0 / mean_on_s)
                    .expect("validated")
                    .sample(&mut rt.rng);
        }
        self.start_source(s);

        if self.scn.sim.lba_mode.lba().is_some() {
            let class = classify_network(&self.snapshot(), self.scn.sim.alpha)?;
            if class.load(target_id).unwrap_or(0.0) > class.delta1 {
                self.events.push(self.now, EventKind::LbaRun);
            }
        }
        Ok(())
    }

    fn start_source(&mut self, s: usize) {
        let rt = &mut self.stations[s];
        if rt.active
            && !rt.emitting
            && !matches!(self.scn.stations[s].profile, TrafficProfile::Idle)
        {
            rt.emitting = true;
            self.events
                .push(self.now, EventKind::PacketArrivalAtAp { station: s });
        }
    }

    fn leave(&mut self, s: usize) {
        let rt = &mut self.stations[s];
        if !rt.active {
            return;
        }
        rt.active = false;
        rt.assoc = None;
        rt.handoff_to = None;
        let held = std::mem::take(&mut rt.held);
        for p in held {
            self.packets[p.id].fate = Fate::Lost;
        }
        if self.scn.sim.lba_mode.lba().is_some() {
            self.events.push(self.now, EventKind::LbaRun);
        }
    }

    fn change_demand(&mut self, s: usize, up: f64, down: f64) {
        let rt = &mut self.stations[s];
        rt.up_kbps = up;
        rt.down_kbps = down;
        if rt.active && rt.rate_scale() > 0.0 {
            self.start_source(s);
        }
        if self.stations[s].active && self.scn.sim.lba_mode.lba().is_some() {
            self.events.push(self.now, EventKind::LbaRun);
        }
    }

    fn new_packet(&mut self, s: usize, size_bits: u64, frame: Option<u64>) -> Packet {
        let rt = &mut self.stations[s];
        let seq = rt.next_seq;
        rt.next_seq += 1;
        rt.generated += 1;
        let id = self.packets.len();
        self.packets.push(PacketInfo {
            station: s,
            seq,
            frame,
            size_bits,
            send_time_s: self.now,
            fate: Fate::InFlight,
            served_by: None,
        });
        Packet { id, station: s }
    }

    fn emit(&mut self, s: usize) {
        if !self.stations[s].active {
            self.stations[s].emitting = false;
            return;
        }
        let next = match self.scn.stations[s].profile {
            TrafficProfile::Video {
                frame_rate_fps,
                frame_size_bits,
                packets_per_frame,
            } => {
                let period = 1.0 / f64::from(frame_rate_fps);
                let frame = self.stations[s].next_frame;
                self.stations[s].next_frame += 1;
                self.stations[s].frames.push(FrameSlot {
                    send_time_s: self.now,
                    arrived: 0,
                    last_arrival_s: 0.0,
                    on_time: None,
                });
                let ppf = u64::from(packets_per_frame);
                let base = frame_size_bits / ppf;
                for k in 0..ppf {
                    let size = if k + 1 == ppf {
                        frame_size_bits - base * (ppf - 1)
                    } else {
                        base
                    };
                    let p = self.new_packet(s, size, Some(frame));
                    self.enqueue(p);
                }
                self.events.push(
                    self.now + period,
                    EventKind::FrameDeadline { station: s, frame },
                );
                Some(self.stations[s].started_at + (frame + 1) as f64 * period)
            }
            TrafficProfile::Ftp {
                rate_kbps,
                packet_bits,
            } => {
                let rate_bps = rate_kbps * 1000.0 * self.stations[s].rate_scale();
                if rate_bps > 0.0 {
                    let p = self.new_packet(s, packet_bits, None);
                    self.enqueue(p);
                    Some(self.now + packet_bits as f64 / rate_bps)
                } else {
                    None
                }
            }
            TrafficProfile::Http {
                peak_kbps,
                mean_on_s,
                mean_off_s,
                packet_bits,
            } => {
                let rate_bps = peak_kbps * 1000.0 * self.stations[s].rate_scale();
                if rate_bps > 0.0 {
                    let on = Exp::new(1.0 / mean_on_s).expect("validated");
                    let off = Exp::new(1.0 / mean_off_s).expect("validated");
                    let rt = &mut self.stations[s];
                    while self.now >= rt.phase_end {
                        rt.http_on = !rt.http_on;
                        let d = if rt.http_on {
                            on.sample(&mut rt.rng)
                        } else {
                            off.sample(&mut rt.rng)
                        };
                        rt.phase_end += d;
                    }
                    if rt.http_on {
                        let p = self.new_packet(s, packet_bits, None);
                        self.enqueue(p);
                    }
                    Some(self.now + packet_bits as f64 / rate_bps)
                } else {
                    None
                }
            }
            TrafficProfile::Idle => None,
        };
        match next {
            Some(t) if t < self.horizon() => {
                self.events
                    .push(t, EventKind::PacketArrivalAtAp { station: s });
            }
            _ => self.stations[s].emitting = false,
        }
    }

    fn enqueue(&mut self, p: Packet) {
        let rt = &mut self.stations[p.station];
        if rt.handoff_to.is_some() {
            rt.held.push(p);
            return;
        }
        match rt.assoc {
            Some(ap) => self.push_to_ap(ap, p),
            None => self.packets[p.id].fate = Fate::Lost,
        }
    }

    fn push_to_ap(&mut self, ap: usize, p: Packet) {
        if self.aps[ap].occupancy() >= self.scn.sim.queue_capacity {
            self.packets[p.id].fate = Fate::Lost;
            return;
        }
        self.aps[ap].queue.push_back(p);
        if self.aps[ap].in_service.is_none() {
            self.start_service(ap);
        }
    }

    fn start_service(&mut self, ap: usize) {
        while let Some(p) = self.aps[ap].queue.pop_front() {
            let rate = self.capacity[p.station][ap].unwrap_or(0.0);
            let bits = self.packets[p.id].size_bits as f64;
            match packet_service_time(bits, rate) {
                Some(t) => {
                    self.aps[ap].in_service = Some(p);
                    self.events
                        .push(self.now + t, EventKind::PacketDeparture { ap });
                    return;
                }
                // zero-rate links never recover in this model
                None => self.packets[p.id].fate = Fate::Lost,
            }
        }
    }

    fn depart(&mut self, ap: usize) {
        let Some(p) = self.aps[ap].in_service.take() else {
            return;
        };
        let info = &mut self.packets[p.id];
        info.fate = Fate::Delivered(self.now);
        info.served_by = Some(ap);
        if let Some(f) = info.frame {
            let slot = &mut self.stations[p.station].frames[f as usize];
            slot.arrived += 1;
            slot.last_arrival_s = self.now;
        }
        self.start_service(ap);
    }

    fn frame_deadline(&mut self, s: usize, frame: u64) {
        let ppf = match self.scn.stations[s].profile {
            TrafficProfile::Video {
                packets_per_frame, ..
            } => packets_per_frame,
            _ => return,
        };
        let slot = &mut self.stations[s].frames[frame as usize];
        slot.on_time = Some(slot.arrived == ppf);
    }

    fn lba_run(&mut self) -> Result<(), SimError> {
        let Some(mode) = self.scn.sim.lba_mode.lba() else {
            return Ok(());
        };
        if self.scn.aps.is_empty() {
            return Ok(());
        }
        self.counters.lba_runs += 1;
        let snapshot = self.snapshot();
        for (ap, load) in snapshot.loads() {
            self.log(AssocMessage::LoadReport {
                ap,
                load_kbps: load,
            });
        }
        let params = BalanceParams {
            alpha: self.scn.sim.alpha,
            mode,
            max_moves: self.scn.sim.max_moves,
        };
        let plan = rebalance(&snapshot, &params)?;
        let station_index: BTreeMap<&StationId, usize> = self
            .scn
            .stations
            .iter()
            .enumerate()
            .map(|(i, st)| (&st.id, i))
            .collect();
        for mv in plan.moves {
            let s = station_index[&mv.station];
            let to = self.ap_index[&mv.to];
            self.stations[s].handoff_to = Some(to);
            self.log(AssocMessage::MoveCommand {
                station: mv.station.clone(),
                from: mv.from.clone(),
                to: mv.to.clone(),
            });
            self.counters.moves += 1;
            self.moves.push(TimedMove {
                time_s: self.now,
                mv,
            });
            self.events.push(
                self.now + self.scn.sim.handoff_latency_s,
                EventKind::MoveCommand { station: s, to },
            );
        }
        Ok(())
    }

    fn complete_move(&mut self, s: usize, to: usize) {
        let rt = &mut self.stations[s];
        if !rt.active || rt.handoff_to != Some(to) {
            return;
        }
        rt.handoff_to = None;
        rt.assoc = Some(to);
        rt.path.push(to);
        let held = std::mem::take(&mut rt.held);
        for p in held {
            self.push_to_ap(to, p);
        }
    }

    fn finish(self) -> Result<SimReport, SimError> {
        let horizon = self.horizon();
        let mut flow_counters: BTreeMap<StationId, FlowCounters> = BTreeMap::new();
        let mut per_station: Vec<Vec<PacketRecord>> = vec![Vec::new(); self.stations.len()];
        let mut trace = Vec::new();
        let mut served_by = Vec::new();
        let mut delivered = vec![0u64; self.stations.len()];
        let mut dropped = vec![0u64; self.stations.len()];

        for p in &self.packets {
            let arrival_time_s = match p.fate {
                Fate::InFlight => continue,
                Fate::Delivered(t) => {
                    delivered[p.station] += 1;
                    Some(t)
                }
                Fate::Lost => {
                    dropped[p.station] += 1;
                    None
                }
            };
            let rec = PacketRecord {
                flow: self.station_id(p.station),
                seq: p.seq,
                frame: p.frame,
                size_bits: p.size_bits,
                send_time_s: p.send_time_s,
                arrival_time_s,
            };
            per_station[p.station].push(rec.clone());
            trace.push(rec);
            served_by.push(p.served_by.map(|a| self.ap_id(a)));
        }

        // count what is still inside the network from the queues themselves
        let mut queued = vec![0u64; self.stations.len()];
        for ap in &self.aps {
            for p in ap.queue.iter().chain(ap.in_service.iter()) {
                queued[p.station] += 1;
            }
        }
        for rt in &self.stations {
            for p in &rt.held {
                queued[p.station] += 1;
            }
        }

        for (i, rt) in self.stations.iter().enumerate() {
            flow_counters.insert(
                self.station_id(i),
                FlowCounters {
                    generated: rt.generated,
                    delivered: delivered[i],
                    dropped: dropped[i],
                    queued: queued[i],
                },
            );
        }

        let index: BTreeMap<&StationId, usize> = self
            .scn
            .stations
            .iter()
            .enumerate()
            .map(|(i, st)| (&st.id, i))
            .collect();
        let mut flows = Vec::new();
        for flow in &self.scn.monitor.flows {
            let s = index[flow];
            let rt = &self.stations[s];
            let records = &per_station[s];
            let window_start = self.scn.stations[s].join_time_s;
            let (jitter, psnr) = match self.scn.stations[s].profile {
                TrafficProfile::Video { .. } => {
                    let frames: Vec<FrameTiming> = rt
                        .frames
                        .iter()
                        .filter_map(|f| {
                            f.on_time.map(|ok| FrameTiming {
                                send_time_s: f.send_time_s,
                                arrival_time_s: ok.then_some(f.last_arrival_s),
                            })
                        })
                        .collect();
                    let psnr = if frames.is_empty() {
                        None
                    } else {
                        let m = &self.scn.monitor;
                        let reference = generate_frames(
                            m.pattern_seed,
                            frames.len(),
                            m.frame_width,
                            m.frame_height,
                        )?;
                        let flags: Vec<bool> =
                            frames.iter().map(|f| f.arrival_time_s.is_some()).collect();
                        Some(video_psnr(&reference, &conceal(&reference, &flags))?)
                    };
                    (jitter_stats(&frames).ok(), psnr)
                }
                _ => (jitter_stats(&frame_timings(records)).ok(), None),
            };
            flows.push(FlowReport {
                flow: flow.clone(),
                ap_path: rt.path.iter().map(|a| self.ap_id(*a)).collect(),
                qos: QosReport {
                    bitrate_kbps: bitrate(records, window_start, horizon),
                    mean_delay_ms: mean_delay(records).ok(),
                    mean_abs_jitter_ms: jitter.map(|j| j.mean_abs_ms),
                    jitter_range_ms: jitter.map(|j| j.range_ms),
                    video_psnr_db: psnr,
                    loss_fraction: loss_fraction(records),
                },
                counters: flow_counters[flow],
            });
        }

        let final_classification = if self.scn.aps.is_empty() {
            None
        } else {
            Some(classify_network(&self.snapshot(), self.scn.sim.alpha)?)
        };

        Ok(SimReport {
            flows,
            moves: self.moves,
            final_classification,
            flow_counters,
            counters: self.counters,
            trace,
            served_by,
            messages: self.messages,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lba::{snr_gate, LbaMode};
    use crate::scenario::{ModeSetting, SimSettings, StationSpec};
    use crate::topology::AccessPoint;

    fn cam() -> TrafficProfile {
        TrafficProfile::Video {
            frame_rate_fps: 25,
            frame_size_bits: 32_000,
            packets_per_frame: 4,
        }
    }

    fn ftp(rate_kbps: f64) -> TrafficProfile {
        TrafficProfile::Ftp {
            rate_kbps,
            packet_bits: 12_000,
        }
    }

    fn two_ap(mode: ModeSetting, cam_ap2_snr: f64) -> Scenario {
        let mut sim = SimSettings::new(10.0, 1);
        sim.lba_mode = mode;
        let mut sc = Scenario::new(sim);
        sc.aps = vec![
            AccessPoint::new("ap1", 100e3),
            AccessPoint::new("ap2", 100e3),
        ];
        sc.stations = vec![
            StationSpec::new("bg1", ftp(4150.0)).with_link("ap1", 80.0),
            StationSpec::new("bg2", ftp(450.0)).with_link("ap2", 80.0),
            StationSpec::new("cam", cam())
                .with_link("ap1", 80.0)
                .with_link("ap2", cam_ap2_snr)
                .joining_at(1.0),
        ];
        sc.monitor.flows = vec![StationId::from("cam")];
        sc
    }

    #[test]
    fn empty_scenario() {
        let sc = Scenario::new(SimSettings::new(1.0, 0));
        let r = run(&sc).unwrap();
        assert!(r.flows.is_empty() && r.moves.is_empty() && r.trace.is_empty());
        assert_eq!(r.final_classification, None);
    }

    #[test]
    fn invalid_scenario_rejected_before_running() {
        let mut sc = Scenario::new(SimSettings::new(-1.0, 0));
        sc.monitor.flows.push(StationId::from("ghost"));
        assert!(matches!(run(&sc), Err(SimError::InvalidScenario(_))));
    }

    #[test]
    fn uncontended_cbr_delivers_offered_rate() {
        let mut sc = Scenario::new(SimSettings::new(10.0, 4));
        sc.aps = vec![AccessPoint::new("ap1", 20e6)];
        sc.stations = vec![StationSpec::new("f", ftp(1000.0)).with_link("ap1", 30.0)];
        sc.monitor.flows = vec![StationId::from("f")];
        let r = run(&sc).unwrap();
        let got = r.flows[0].qos.bitrate_kbps;
        assert!((got - 1000.0).abs() <= 10.0, "{got}");
        assert_eq!(r.flows[0].qos.loss_fraction, 0.0);
    }

    #[test]
    fn join_picks_best_snr() {
        let mut sc = Scenario::new(SimSettings::new(1.0, 0));
        sc.aps = vec![AccessPoint::new("a", 1e6), AccessPoint::new("b", 1e6)];
        sc.stations = vec![StationSpec::new("s", TrafficProfile::Idle)
            .with_link("a", 30.0)
            .with_link("b", 50.0)];
        sc.monitor.flows = vec![StationId::from("s")];
        let r = run(&sc).unwrap();
        assert_eq!(r.flows[0].ap_path, vec![ApId::from("b")]);
    }

    #[test]
    fn unreachable_station_is_rejected() {
        let mut sc = Scenario::new(SimSettings::new(1.0, 0));
        sc.aps = vec![AccessPoint::new("a", 1e6)];
        sc.stations = vec![StationSpec::new("s", ftp(10.0))];
        let r = run(&sc).unwrap();
        assert_eq!(r.counters.rejects, 1);
        assert!(r.messages.iter().any(|m| m.message
            == AssocMessage::AssocReject {
                station: StationId::from("s")
            }));
        assert_eq!(r.flow_counters[&StationId::from("s")].generated, 0);
    }

    #[test]
    fn join_into_empty_single_ap_needs_no_lba() {
        let mut sim = SimSettings::new(1.0, 0);
        sim.lba_mode = ModeSetting::Lba(LbaMode::Baseline);
        let mut sc = Scenario::new(sim);
        sc.aps = vec![AccessPoint::new("a", 1e6)];
        sc.stations = vec![StationSpec::new("s", ftp(10.0)).with_link("a", 30.0)];
        let r = run(&sc).unwrap();
        assert_eq!(r.counters.lba_runs, 0);
    }

    #[test]
    fn overloading_join_triggers_lba() {
        let r = run(&two_ap(ModeSetting::Lba(LbaMode::Baseline), 50.0)).unwrap();
        assert!(r.counters.lba_runs >= 1);
        // load reports precede the first move command
        let first_move = r
            .messages
            .iter()
            .position(|m| matches!(m.message, AssocMessage::MoveCommand { .. }))
            .unwrap();
        assert!(matches!(
            r.messages[first_move - 1].message,
            AssocMessage::LoadReport { .. }
        ));
    }

    #[test]
    fn gate_decides_move_in_sim() {
        for (snr, expect_move) in [(50.0, true), (40.0, false), (30.0, false)] {
            let r = run(&two_ap(ModeSetting::Lba(LbaMode::SnrAware), snr)).unwrap();
            assert_eq!(!r.moves.is_empty(), expect_move, "ap2 at {snr} dB");
            assert_eq!(snr_gate(80.0, snr).is_allowed(), expect_move);
            for m in &r.moves {
                assert!(snr_gate(m.mv.snr_from_db, m.mv.snr_to_db).is_allowed());
            }
            let base = run(&two_ap(ModeSetting::Lba(LbaMode::Baseline), snr)).unwrap();
            assert_eq!(base.moves.len(), 1);
        }
    }

    #[test]
    fn lba_off_never_moves() {
        let r = run(&two_ap(ModeSetting::Off, 50.0)).unwrap();
        assert!(r.moves.is_empty());
        assert_eq!(r.counters.lba_runs, 0);
        assert_eq!(r.flows[0].ap_path, vec![ApId::from("ap1")]);
    }

    #[test]
    fn handoff_path_and_latency() {
        let r = run(&two_ap(ModeSetting::Lba(LbaMode::SnrAware), 50.0)).unwrap();
        assert_eq!(
            r.flows[0].ap_path,
            vec![ApId::from("ap1"), ApId::from("ap2")]
        );
        assert_eq!(r.moves[0].time_s, 1.0);
        // packets generated during the handoff wait for the re-association
        let held: Vec<_> = r
            .trace
            .iter()
            .zip(&r.served_by)
            .filter(|(rec, ap)| {
                rec.flow.as_str() == "cam"
                    && rec.send_time_s > 1.0
                    && rec.send_time_s < 1.05
                    && ap.as_ref().map(ApId::as_str) == Some("ap2")
            })
            .collect();
        assert!(!held.is_empty());
        for (rec, _) in held {
            assert!(rec.arrival_time_s.unwrap() >= 1.05);
        }
    }

    #[test]
    fn conservation_and_causality() {
        for mode in [
            ModeSetting::Off,
            ModeSetting::Lba(LbaMode::Baseline),
            ModeSetting::Lba(LbaMode::SnrAware),
        ] {
            let sc = two_ap(mode, 50.0);
            let r = run(&sc).unwrap();
            for (id, c) in &r.flow_counters {
                assert_eq!(c.generated, c.delivered + c.dropped + c.queued, "{id}");
            }
            for (rec, ap) in r.trace.iter().zip(&r.served_by) {
                if let (Some(a), Some(ap)) = (rec.arrival_time_s, ap) {
                    let spec = sc.station(&rec.flow).unwrap();
                    let apd = sc.aps.iter().find(|x| &x.id == ap).unwrap();
                    let cap = LinkBudget::new(apd, spec.links[ap]).unwrap().capacity_bps;
                    assert!(a >= rec.send_time_s + rec.size_bits as f64 / cap - 1e-12);
                }
            }
        }
    }

    #[test]
    fn http_source_is_seeded() {
        let mut sc = Scenario::new(SimSettings::new(5.0, 11));
        sc.aps = vec![AccessPoint::new("a", 1e6)];
        sc.stations = vec![StationSpec::new(
            "w",
            TrafficProfile::Http {
                peak_kbps: 500.0,
                mean_on_s: 0.5,
                mean_off_s: 0.5,
                packet_bits: 8000,
            },
        )
        .with_link("a", 40.0)];
        let a = run(&sc).unwrap();
        let b = run(&sc).unwrap();
        assert_eq!(a, b);
        sc.sim.seed = 12;
        let c = run(&sc).unwrap();
        assert_ne!(a.trace, c.trace);
    }

    #[test]
    fn demand_change_and_leave() {
        let mut sim = SimSettings::new(4.0, 2);
        sim.lba_mode = ModeSetting::Lba(LbaMode::Baseline);
        let mut sc = Scenario::new(sim);
        sc.aps = vec![AccessPoint::new("a", 1e6)];
        let mut st = StationSpec::new("f", ftp(100.0)).with_link("a", 40.0);
        st.demand_changes.push(crate::scenario::DemandChange {
            label: "1".into(),
            time_s: 1.0,
            up_kbps: 0.0,
            down_kbps: 0.0,
        });
        st.demand_changes.push(crate::scenario::DemandChange {
            label: "2".into(),
            time_s: 2.0,
            up_kbps: 0.0,
            down_kbps: 200.0,
        });
        st.leave_time_s = Some(3.0);
        sc.stations = vec![st];
        let r = run(&sc).unwrap();
        let sends: Vec<f64> = r.trace.iter().map(|p| p.send_time_s).collect();
        assert!(sends
            .iter()
            .all(|t| *t < 1.0 + 1e-9 || (*t >= 2.0 && *t < 3.0)));
        // 100 kbps for 1 s and 200 kbps for 1 s at 12 kbit per packet
        let c = r.flow_counters[&StationId::from("f")];
        assert!((c.generated as i64 - 26).abs() <= 2, "{}", c.generated);
        assert_eq!(r.counters.lba_runs, 3);
    }
}
