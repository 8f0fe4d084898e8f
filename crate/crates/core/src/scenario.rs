//! Scenario description and its text format.
//!
//! The format is a flat, sectioned key/value file:
//!
//! ```text
//! # comment
//! [sim]
//! horizon_s = 20
//! seed = 7
//! lba_mode = snr-aware
//!
//! [ap.ap1]
//! bandwidth_hz = 100000
//!
//! [station.cam]
//! profile = video
//! frame_rate_fps = 25
//! link.ap1.snr_db = 80
//! ```
//!
//! Every value has a dotted path made of its section and key, e.g.
//! `station.cam.link.ap1.snr_db`; overrides and sweeps address values by
//! that path. Unknown sections and keys are errors.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use thiserror::Error;

use crate::channel::DEFAULT_BANDWIDTH_HZ;
use crate::lba::{
    alpha_in_recommended_range, LbaMode, DEFAULT_ALPHA, DEFAULT_MAX_MOVES, RECOMMENDED_ALPHA,
};
use crate::topology::{AccessPoint, ApId, StationId};

/// Frame rates the camera supports.
pub const VIDEO_FRAME_RATES: [u32; 5] = [1, 3, 7, 15, 25];
pub const DEFAULT_HANDOFF_LATENCY_S: f64 = 0.05;
pub const DEFAULT_QUEUE_CAPACITY: usize = 100;
pub const DEFAULT_PACKET_BITS: u64 = 12_000;
pub const DEFAULT_FRAME_WIDTH: usize = 32;
pub const DEFAULT_FRAME_HEIGHT: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModeSetting {
    Off,
    Lba(LbaMode),
}

impl ModeSetting {
    pub fn lba(self) -> Option<LbaMode> {
        match self {
            ModeSetting::Off => None,
            ModeSetting::Lba(m) => Some(m),
        }
    }
}

impl fmt::Display for ModeSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModeSetting::Off => f.write_str("off"),
            ModeSetting::Lba(m) => m.fmt(f),
        }
    }
}

impl FromStr for ModeSetting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "off" => Ok(ModeSetting::Off),
            "baseline" => Ok(ModeSetting::Lba(LbaMode::Baseline)),
            "snr-aware" => Ok(ModeSetting::Lba(LbaMode::SnrAware)),
            other => Err(format!(
                "unknown mode `{other}` (expected off, baseline or snr-aware)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TrafficProfile {
    /// Constant-rate video: one frame every `1 / frame_rate_fps` seconds,
    /// split into `packets_per_frame` packets sent back to back.
    Video {
        frame_rate_fps: u32,
        frame_size_bits: u64,
        packets_per_frame: u32,
    },
    /// Constant-rate bulk transfer.
    Ftp { rate_kbps: f64, packet_bits: u64 },
    /// Exponential on/off bursts at `peak_kbps` while on.
    Http {
        peak_kbps: f64,
        mean_on_s: f64,
        mean_off_s: f64,
        packet_bits: u64,
    },
    /// Associates but sends nothing.
    Idle,
}

impl TrafficProfile {
    pub fn name(&self) -> &'static str {
        match self {
            TrafficProfile::Video { .. } => "video",
            TrafficProfile::Ftp { .. } => "ftp",
            TrafficProfile::Http { .. } => "http",
            TrafficProfile::Idle => "idle",
        }
    }

    /// Long-run mean rate in kbps.
    pub fn mean_kbps(&self) -> f64 {
        match self {
            TrafficProfile::Video {
                frame_rate_fps,
                frame_size_bits,
                ..
            } => f64::from(*frame_rate_fps) * *frame_size_bits as f64 / 1000.0,
            TrafficProfile::Ftp { rate_kbps, .. } => *rate_kbps,
            TrafficProfile::Http {
                peak_kbps,
                mean_on_s,
                mean_off_s,
                ..
            } => peak_kbps * mean_on_s / (mean_on_s + mean_off_s),
            TrafficProfile::Idle => 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DemandChange {
    pub label: String,
    pub time_s: f64,
    pub up_kbps: f64,
    pub down_kbps: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StationSpec {
    pub id: StationId,
    pub links: BTreeMap<ApId, f64>,
    /// Declared demand; when absent it is derived from the profile (video
    /// counts as up-link, ftp and http as down-link).
    pub demand_up_kbps: Option<f64>,
    pub demand_down_kbps: Option<f64>,
    pub profile: TrafficProfile,
    pub join_time_s: f64,
    pub leave_time_s: Option<f64>,
    pub demand_changes: Vec<DemandChange>,
}

impl StationSpec {
    pub fn new(id: impl Into<String>, profile: TrafficProfile) -> Self {
        Self {
            id: StationId::new(id),
            links: BTreeMap::new(),
            demand_up_kbps: None,
            demand_down_kbps: None,
            profile,
            join_time_s: 0.0,
            leave_time_s: None,
            demand_changes: Vec::new(),
        }
    }

    pub fn with_link(mut self, ap: impl Into<String>, snr_db: f64) -> Self {
        self.links.insert(ApId::new(ap), snr_db);
        self
    }

    pub fn joining_at(mut self, t: f64) -> Self {
        self.join_time_s = t;
        self
    }

    pub fn declared_demand(&self) -> (f64, f64) {
        let mean = self.profile.mean_kbps();
        let (up, down) = match self.profile {
            TrafficProfile::Video { .. } => (mean, 0.0),
            _ => (0.0, mean),
        };
        (
            self.demand_up_kbps.unwrap_or(up),
            self.demand_down_kbps.unwrap_or(down),
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimSettings {
    pub name: Option<String>,
    pub horizon_s: f64,
    pub seed: u64,
    pub alpha: f64,
    pub lba_mode: ModeSetting,
    pub handoff_latency_s: f64,
    pub queue_capacity: usize,
    /// Optional periodic controller run.
    pub lba_period_s: Option<f64>,
    pub max_moves: usize,
}

impl SimSettings {
    pub fn new(horizon_s: f64, seed: u64) -> Self {
        Self {
            name: None,
            horizon_s,
            seed,
            alpha: DEFAULT_ALPHA,
            lba_mode: ModeSetting::Off,
            handoff_latency_s: DEFAULT_HANDOFF_LATENCY_S,
            queue_capacity: DEFAULT_QUEUE_CAPACITY,
            lba_period_s: None,
            max_moves: DEFAULT_MAX_MOVES,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonitorSpec {
    pub flows: Vec<StationId>,
    pub frame_width: usize,
    pub frame_height: usize,
    pub pattern_seed: u64,
}

impl Default for MonitorSpec {
    fn default() -> Self {
        Self {
            flows: Vec::new(),
            frame_width: DEFAULT_FRAME_WIDTH,
            frame_height: DEFAULT_FRAME_HEIGHT,
            pattern_seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub sim: SimSettings,
    pub aps: Vec<AccessPoint>,
    pub stations: Vec<StationSpec>,
    pub monitor: MonitorSpec,
}

/// A problem found in a scenario. `path` is the dotted key path (or the
/// section) it concerns; `line` is filled in when the scenario came from text.
#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostic {
    pub line: Option<usize>,
    pub path: String,
    pub message: String,
}

impl Diagnostic {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            line: None,
            path: path.into(),
            message: message.into(),
        }
    }

    fn at(line: usize, path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(l) = self.line {
            write!(f, "line {l}: ")?;
        }
        if self.path.is_empty() {
            f.write_str(&self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{}", render_diagnostics(.diagnostics))]
pub struct ScenarioError {
    pub diagnostics: Vec<Diagnostic>,
}

fn render_diagnostics(d: &[Diagnostic]) -> String {
    d.iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("\n")
}

/// A successfully parsed scenario and any non-fatal warnings.
#[derive(Clone, Debug, PartialEq)]
pub struct Parsed {
    pub scenario: Scenario,
    pub warnings: Vec<Diagnostic>,
}

impl Scenario {
    pub fn new(sim: SimSettings) -> Self {
        Self {
            sim,
            aps: Vec::new(),
            stations: Vec::new(),
            monitor: MonitorSpec::default(),
        }
    }

    pub fn station(&self, id: &StationId) -> Option<&StationSpec> {
        self.stations.iter().find(|s| &s.id == id)
    }

    pub fn display_name(&self) -> &str {
        self.sim.name.as_deref().unwrap_or("scenario")
    }

    /// Checks every semantic rule; returns the warnings on success.
    pub fn validate(&self) -> Result<Vec<Diagnostic>, ScenarioError> {
        let mut errs = Vec::new();
        let mut warns = Vec::new();
        let s = &self.sim;

        if !(s.horizon_s > 0.0) || !s.horizon_s.is_finite() {
            errs.push(Diagnostic::new("sim.horizon_s", "must be positive"));
        }
        if !(0.0..=1.0).contains(&s.alpha) {
            errs.push(Diagnostic::new("sim.alpha", "must be within [0, 1]"));
        } else if !alpha_in_recommended_range(s.alpha) {
            warns.push(Diagnostic::new(
                "sim.alpha",
                format!(
                    "{} is outside the recommended range [{}, {}]",
                    s.alpha, RECOMMENDED_ALPHA.0, RECOMMENDED_ALPHA.1
                ),
            ));
        }
        if !(s.handoff_latency_s >= 0.0) || !s.handoff_latency_s.is_finite() {
            errs.push(Diagnostic::new(
                "sim.handoff_latency_s",
                "must be non-negative",
            ));
        }
        if s.queue_capacity == 0 {
            errs.push(Diagnostic::new("sim.queue_capacity", "must be at least 1"));
        }
        if s.max_moves == 0 {
            errs.push(Diagnostic::new("sim.max_moves", "must be at least 1"));
        }
        if let Some(p) = s.lba_period_s {
            if !(p > 0.0) || !p.is_finite() {
                errs.push(Diagnostic::new("sim.lba_period_s", "must be positive"));
            }
        }

        let mut ap_ids = HashMap::new();
        for ap in &self.aps {
            let sec = format!("ap.{}", ap.id);
            if ap_ids.insert(ap.id.clone(), ()).is_some() {
                errs.push(Diagnostic::new(
                    sec.clone(),
                    format!("duplicate access point id `{}`", ap.id),
                ));
            }
            if !(ap.bandwidth_hz > 0.0) || !ap.bandwidth_hz.is_finite() {
                errs.push(Diagnostic::new(
                    format!("{sec}.bandwidth_hz"),
                    "must be positive",
                ));
            }
            if let Some(c) = ap.capacity_cap_bps {
                if !(c > 0.0) {
                    errs.push(Diagnostic::new(
                        format!("{sec}.capacity_cap_bps"),
                        "must be positive",
                    ));
                }
            }
        }

        let mut st_ids = HashMap::new();
        for st in &self.stations {
            let sec = format!("station.{}", st.id);
            if st_ids.insert(st.id.clone(), ()).is_some() {
                errs.push(Diagnostic::new(
                    sec.clone(),
                    format!("duplicate station id `{}`", st.id),
                ));
            }
            for (ap, snr) in &st.links {
                let key = format!("{sec}.link.{ap}.snr_db");
                if !ap_ids.contains_key(ap) {
                    errs.push(Diagnostic::new(
                        key.clone(),
                        format!("station `{}` links to unknown access point `{ap}`", st.id),
                    ));
                }
                if !(*snr >= 0.0) || !snr.is_finite() {
                    errs.push(Diagnostic::new(
                        key,
                        "SNR must be a non-negative number of dB",
                    ));
                }
            }
            for (key, v) in [
                ("demand_up_kbps", st.demand_up_kbps),
                ("demand_down_kbps", st.demand_down_kbps),
            ] {
                if let Some(v) = v {
                    if !(v >= 0.0) || !v.is_finite() {
                        errs.push(Diagnostic::new(
                            format!("{sec}.{key}"),
                            "must be non-negative",
                        ));
                    }
                }
            }
            if !(st.join_time_s >= 0.0) || !st.join_time_s.is_finite() {
                errs.push(Diagnostic::new(
                    format!("{sec}.join_time_s"),
                    "must be non-negative",
                ));
            }
            if let Some(l) = st.leave_time_s {
                if !(l >= st.join_time_s) {
                    errs.push(Diagnostic::new(
                        format!("{sec}.leave_time_s"),
                        "must not precede join_time_s",
                    ));
                }
            }
            for ch in &st.demand_changes {
                let p = format!("{sec}.change.{}", ch.label);
                if !(ch.time_s >= 0.0) || !ch.time_s.is_finite() {
                    errs.push(Diagnostic::new(
                        format!("{p}.time_s"),
                        "must be non-negative",
                    ));
                }
                if !(ch.up_kbps >= 0.0) || !(ch.down_kbps >= 0.0) {
                    errs.push(Diagnostic::new(p, "demands must be non-negative"));
                }
            }
            validate_profile(&sec, &st.profile, &mut errs);
        }

        for flow in &self.monitor.flows {
            if !st_ids.contains_key(flow) {
                errs.push(Diagnostic::new(
                    "monitor.flows",
                    format!("unknown station `{flow}`"),
                ));
            }
        }
        if self.monitor.frame_width == 0 || self.monitor.frame_height == 0 {
            errs.push(Diagnostic::new(
                "monitor",
                "frame dimensions must be positive",
            ));
        }

        if errs.is_empty() {
            Ok(warns)
        } else {
            Err(ScenarioError { diagnostics: errs })
        }
    }

    /// Canonical text form; parsing it yields an equal scenario.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let s = &self.sim;
        out.push_str("[sim]\n");
        if let Some(name) = &s.name {
            let _ = writeln!(out, "name = {name}");
        }
        let _ = writeln!(out, "horizon_s = {}", s.horizon_s);
        let _ = writeln!(out, "seed = {}", s.seed);
        let _ = writeln!(out, "alpha = {}", s.alpha);
        let _ = writeln!(out, "lba_mode = {}", s.lba_mode);
        let _ = writeln!(out, "handoff_latency_s = {}", s.handoff_latency_s);
        let _ = writeln!(out, "queue_capacity = {}", s.queue_capacity);
        let _ = writeln!(out, "max_moves = {}", s.max_moves);
        if let Some(p) = s.lba_period_s {
            let _ = writeln!(out, "lba_period_s = {p}");
        }

        let m = &self.monitor;
        out.push_str("\n[monitor]\n");
        let flows: Vec<&str> = m.flows.iter().map(StationId::as_str).collect();
        let _ = writeln!(out, "flows = {}", flows.join(", "));
        let _ = writeln!(out, "frame_width = {}", m.frame_width);
        let _ = writeln!(out, "frame_height = {}", m.frame_height);
        let _ = writeln!(out, "pattern_seed = {}", m.pattern_seed);

        for ap in &self.aps {
            let _ = writeln!(out, "\n[ap.{}]", ap.id);
            let _ = writeln!(out, "bandwidth_hz = {}", ap.bandwidth_hz);
            if let Some(c) = ap.capacity_cap_bps {
                let _ = writeln!(out, "capacity_cap_bps = {c}");
            }
        }

        for st in &self.stations {
            let _ = writeln!(out, "\n[station.{}]", st.id);
            let _ = writeln!(out, "profile = {}", st.profile.name());
            match &st.profile {
                TrafficProfile::Video {
                    frame_rate_fps,
                    frame_size_bits,
                    packets_per_frame,
                } => {
                    let _ = writeln!(out, "frame_rate_fps = {frame_rate_fps}");
                    let _ = writeln!(out, "frame_size_bits = {frame_size_bits}");
                    let _ = writeln!(out, "packets_per_frame = {packets_per_frame}");
                }
                TrafficProfile::Ftp {
                    rate_kbps,
                    packet_bits,
                } => {
                    let _ = writeln!(out, "rate_kbps = {rate_kbps}");
                    let _ = writeln!(out, "packet_bits = {packet_bits}");
                }
                TrafficProfile::Http {
                    peak_kbps,
                    mean_on_s,
                    mean_off_s,
                    packet_bits,
                } => {
                    let _ = writeln!(out, "peak_kbps = {peak_kbps}");
                    let _ = writeln!(out, "mean_on_s = {mean_on_s}");
                    let _ = writeln!(out, "mean_off_s = {mean_off_s}");
                    let _ = writeln!(out, "packet_bits = {packet_bits}");
                }
                TrafficProfile::Idle => {}
            }
            for (ap, snr) in &st.links {
                let _ = writeln!(out, "link.{ap}.snr_db = {snr}");
            }
            if let Some(v) = st.demand_up_kbps {
                let _ = writeln!(out, "demand_up_kbps = {v}");
            }
            if let Some(v) = st.demand_down_kbps {
                let _ = writeln!(out, "demand_down_kbps = {v}");
            }
            let _ = writeln!(out, "join_time_s = {}", st.join_time_s);
            if let Some(v) = st.leave_time_s {
                let _ = writeln!(out, "leave_time_s = {v}");
            }
            for ch in &st.demand_changes {
                let _ = writeln!(out, "change.{}.time_s = {}", ch.label, ch.time_s);
                let _ = writeln!(out, "change.{}.up_kbps = {}", ch.label, ch.up_kbps);
                let _ = writeln!(out, "change.{}.down_kbps = {}", ch.label, ch.down_kbps);
            }
        }
        out
    }
}

fn validate_profile(sec: &str, profile: &TrafficProfile, errs: &mut Vec<Diagnostic>) {
    match profile {
        TrafficProfile::Video {
            frame_rate_fps,
            frame_size_bits,
            packets_per_frame,
        } => {
            if !VIDEO_FRAME_RATES.contains(frame_rate_fps) {
                errs.push(Diagnostic::new(
                    format!("{sec}.frame_rate_fps"),
                    format!("must be one of {VIDEO_FRAME_RATES:?}"),
                ));
            }
            if *packets_per_frame == 0 {
                errs.push(Diagnostic::new(
                    format!("{sec}.packets_per_frame"),
                    "must be at least 1",
                ));
            }
            if *frame_size_bits < u64::from(*packets_per_frame) || *frame_size_bits == 0 {
                errs.push(Diagnostic::new(
                    format!("{sec}.frame_size_bits"),
                    "must be positive and at least one bit per packet",
                ));
            }
        }
        TrafficProfile::Ftp {
            rate_kbps,
            packet_bits,
        } => {
            if !(*rate_kbps > 0.0) || !rate_kbps.is_finite() {
                errs.push(Diagnostic::new(
                    format!("{sec}.rate_kbps"),
                    "must be positive",
                ));
            }
            if *packet_bits == 0 {
                errs.push(Diagnostic::new(
                    format!("{sec}.packet_bits"),
                    "must be positive",
                ));
            }
        }
        TrafficProfile::Http {
            peak_kbps,
            mean_on_s,
            mean_off_s,
            packet_bits,
        } => {
            for (k, v) in [
                ("peak_kbps", peak_kbps),
                ("mean_on_s", mean_on_s),
                ("mean_off_s", mean_off_s),
            ] {
                if !(*v > 0.0) || !v.is_finite() {
                    errs.push(Diagnostic::new(format!("{sec}.{k}"), "must be positive"));
                }
            }
            if *packet_bits == 0 {
                errs.push(Diagnostic::new(
                    format!("{sec}.packet_bits"),
                    "must be positive",
                ));
            }
        }
        TrafficProfile::Idle => {}
    }
}

/// A raw `key = value` line.
#[derive(Clone, Debug)]
struct Entry {
    key: String,
    value: String,
    line: usize,
}

#[derive(Clone, Debug)]
struct Section {
    name: String,
    line: usize,
    entries: Vec<Entry>,
}

#[derive(Clone, Debug, Default)]
struct Document {
    sections: Vec<Section>,
}

fn lex(text: &str) -> Result<Document, ScenarioError> {
    let mut doc = Document::default();
    let mut errs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        // `#` after whitespace starts a trailing comment
        let content = raw
            .char_indices()
            .find(|&(i, c)| c == '#' && raw[..i].ends_with(char::is_whitespace))
            .map_or(raw, |(i, _)| &raw[..i]);
        let trimmed = content.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with(';') {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                errs.push(Diagnostic::at(line, "", "unterminated section header"));
                continue;
            };
            let name = name.trim().to_owned();
            if doc.sections.iter().any(|s| s.name == name) {
                errs.push(Diagnostic::at(
                    line,
                    name.clone(),
                    "duplicate section (duplicate id)",
                ));
            }
            doc.sections.push(Section {
                name,
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let Some((k, v)) = trimmed.split_once('=') else {
            errs.push(Diagnostic::at(line, "", "expected `key = value`"));
            continue;
        };
        let (key, value) = (k.trim().to_owned(), v.trim().to_owned());
        let Some(section) = doc.sections.last_mut() else {
            errs.push(Diagnostic::at(line, key, "key outside of any section"));
            continue;
        };
        if section.entries.iter().any(|e| e.key == key) {
            errs.push(Diagnostic::at(
                line,
                format!("{}.{key}", section.name),
                "duplicate key",
            ));
            continue;
        }
        section.entries.push(Entry { key, value, line });
    }
    if errs.is_empty() {
        Ok(doc)
    } else {
        Err(ScenarioError { diagnostics: errs })
    }
}

impl Document {
    /// Sets the value at a dotted path. The longest existing section name
    /// that prefixes the path owns the key.
    fn set(&mut self, path: &str, value: &str) -> Result<(), Diagnostic> {
        let section = self
            .sections
            .iter_mut()
            .filter(|s| {
                path.len() > s.name.len() + 1
                    && path.starts_with(&s.name)
                    && path.as_bytes()[s.name.len()] == b'.'
            })
            .max_by_key(|s| s.name.len())
            .ok_or_else(|| {
                Diagnostic::new(
                    path,
                    "override does not address any section of the scenario",
                )
            })?;
        let key = &path[section.name.len() + 1..];
        match section.entries.iter_mut().find(|e| e.key == key) {
            Some(e) => e.value = value.to_owned(),
            None => section.entries.push(Entry {
                key: key.to_owned(),
                value: value.to_owned(),
                line: section.line,
            }),
        }
        Ok(())
    }
}

struct Reader<'a> {
    section: &'a Section,
    used: Vec<bool>,
    errs: &'a mut Vec<Diagnostic>,
}

impl<'a> Reader<'a> {
    fn new(section: &'a Section, errs: &'a mut Vec<Diagnostic>) -> Self {
        Self {
            used: vec![false; section.entries.len()],
            section,
            errs,
        }
    }

    fn raw(&mut self, key: &str) -> Option<(&'a str, usize)> {
        let i = self.section.entries.iter().position(|e| e.key == key)?;
        self.used[i] = true;
        let e = &self.section.entries[i];
        Some((e.value.as_str(), e.line))
    }

    fn path(&self, key: &str) -> String {
        format!("{}.{key}", self.section.name)
    }

    fn parse<T: FromStr>(&mut self, key: &str, what: &str) -> Option<T> {
        let (v, line) = self.raw(key)?;
        match v.parse::<T>() {
            Ok(x) => Some(x),
            Err(_) => {
                let p = self.path(key);
                self.errs.push(Diagnostic::at(
                    line,
                    p,
                    format!("expected {what}, got `{v}`"),
                ));
                None
            }
        }
    }

    fn number(&mut self, key: &str) -> Option<f64> {
        let (v, line) = self.raw(key)?;
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Some(x),
            _ => {
                let p = self.path(key);
                self.errs.push(Diagnostic::at(
                    line,
                    p,
                    format!("expected a finite number, got `{v}`"),
                ));
                None
            }
        }
    }

    fn required<T>(&mut self, key: &str, v: Option<T>) -> Option<T> {
        if v.is_none() && !self.section.entries.iter().any(|e| e.key == key) {
            let p = self.path(key);
            self.errs
                .push(Diagnostic::at(self.section.line, p, "missing required key"));
        }
        v
    }

    /// Keys matching `prefix.<label>.<suffix>`, in file order.
    fn labelled(&mut self, prefix: &str) -> Vec<(String, String, &'a str, usize)> {
        let mut out = Vec::new();
        for (i, e) in self.section.entries.iter().enumerate() {
            if let Some(rest) = e.key.strip_prefix(prefix).and_then(|r| r.strip_prefix('.')) {
                if let Some((label, suffix)) = rest.rsplit_once('.') {
                    self.used[i] = true;
                    out.push((
                        label.to_owned(),
                        suffix.to_owned(),
                        e.value.as_str(),
                        e.line,
                    ));
                }
            }
        }
        out
    }

    fn finish(self) {
        for (e, used) in self.section.entries.iter().zip(&self.used) {
            if !used {
                self.errs.push(Diagnostic::at(
                    e.line,
                    format!("{}.{}", self.section.name, e.key),
                    "unknown key",
                ));
            }
        }
    }
}

pub fn parse_scenario(text: &str) -> Result<Parsed, ScenarioError> {
    parse_scenario_with(text, &[])
}

/// Parses `text` after replacing the values at the given dotted paths.
pub fn parse_scenario_with(
    text: &str,
    overrides: &[(String, String)],
) -> Result<Parsed, ScenarioError> {
    let mut doc = lex(text)?;
    let mut errs = Vec::new();
    for (path, value) in overrides {
        if let Err(d) = doc.set(path, value) {
            errs.push(d);
        }
    }
    if !errs.is_empty() {
        return Err(ScenarioError { diagnostics: errs });
    }
    build(&doc)
}

fn build(doc: &Document) -> Result<Parsed, ScenarioError> {
    let mut errs = Vec::new();
    let mut sim = None;
    let mut monitor = None;
    let mut aps = Vec::new();
    let mut stations = Vec::new();

    for section in &doc.sections {
        if section.name == "sim" {
            sim = Some((read_sim(section, &mut errs), section.line));
        } else if section.name == "monitor" {
            monitor = Some(read_monitor(section, &mut errs));
        } else if let Some(id) = section.name.strip_prefix("ap.") {
            aps.push(read_ap(id, section, &mut errs));
        } else if let Some(id) = section.name.strip_prefix("station.") {
            if let Some(st) = read_station(id, section, &mut errs) {
                stations.push(st);
            }
        } else {
            errs.push(Diagnostic::at(
                section.line,
                section.name.clone(),
                "unknown section",
            ));
        }
    }
    for (name, id) in doc.sections.iter().filter_map(|s| {
        s.name
            .strip_prefix("ap.")
            .or_else(|| s.name.strip_prefix("station."))
            .map(|id| (s, id))
    }) {
        if id.is_empty() || id.contains('.') || id.contains(char::is_whitespace) {
            errs.push(Diagnostic::at(
                name.line,
                name.name.clone(),
                "ids must be non-empty and contain no dots or spaces",
            ));
        }
    }

    let sim = match sim {
        Some((Some(s), _)) => Some(s),
        Some((None, _)) => None,
        None => {
            errs.push(Diagnostic::new("sim", "missing [sim] section"));
            None
        }
    };

    let anchor = |mut d: Diagnostic| {
        d.line = line_of(doc, &d.path);
        d
    };
    let Some(sim) = sim else {
        return Err(ScenarioError { diagnostics: errs });
    };
    let scenario = Scenario {
        sim,
        aps,
        stations,
        monitor: monitor.unwrap_or_default(),
    };
    // report semantic problems alongside syntax ones
    match scenario.validate() {
        Ok(warnings) if errs.is_empty() => Ok(Parsed {
            scenario,
            warnings: warnings.into_iter().map(anchor).collect(),
        }),
        Ok(_) => Err(ScenarioError { diagnostics: errs }),
        Err(e) => {
            errs.extend(e.diagnostics.into_iter().map(anchor));
            Err(ScenarioError { diagnostics: errs })
        }
    }
}

/// Line of the key at `path`, falling back to its section header.
fn line_of(doc: &Document, path: &str) -> Option<usize> {
    let mut best: Option<(usize, usize)> = None;
    for s in &doc.sections {
        if path == s.name {
            return Some(s.line);
        }
        if let Some(key) = path.strip_prefix(&s.name).and_then(|r| r.strip_prefix('.')) {
            if let Some(e) = s.entries.iter().find(|e| e.key == key) {
                return Some(e.line);
            }
            // prefix of a labelled key, e.g. station.x.change.1
            if let Some(e) = s.entries.iter().find(|e| e.key.starts_with(key)) {
                return Some(e.line);
            }
            if best.is_none_or(|(len, _)| s.name.len() > len) {
                best = Some((s.name.len(), s.line));
            }
        }
    }
    best.map(|(_, l)| l)
}

fn read_sim(section: &Section, errs: &mut Vec<Diagnostic>) -> Option<SimSettings> {
    let mut r = Reader::new(section, errs);
    let name = r.raw("name").map(|(v, _)| v.to_owned());
    let horizon = r.number("horizon_s");
    let horizon = r.required("horizon_s", horizon);
    let seed = r.parse::<u64>("seed", "an unsigned integer");
    let seed = r.required("seed", seed);
    let alpha = r.number("alpha").unwrap_or(DEFAULT_ALPHA);
    let lba_mode = match r.raw("lba_mode") {
        None => ModeSetting::Off,
        Some((v, line)) => match v.parse() {
            Ok(m) => m,
            Err(msg) => {
                let p = r.path("lba_mode");
                r.errs.push(Diagnostic::at(line, p, msg));
                ModeSetting::Off
            }
        },
    };
    let handoff_latency_s = r
        .number("handoff_latency_s")
        .unwrap_or(DEFAULT_HANDOFF_LATENCY_S);
    let queue_capacity = r
        .parse::<usize>("queue_capacity", "an unsigned integer")
        .unwrap_or(DEFAULT_QUEUE_CAPACITY);
    let max_moves = r
        .parse::<usize>("max_moves", "an unsigned integer")
        .unwrap_or(DEFAULT_MAX_MOVES);
    let lba_period_s = r.number("lba_period_s");
    r.finish();
    Some(SimSettings {
        name,
        horizon_s: horizon?,
        seed: seed?,
        alpha,
        lba_mode,
        handoff_latency_s,
        queue_capacity,
        lba_period_s,
        max_moves,
    })
}

fn read_monitor(section: &Section, errs: &mut Vec<Diagnostic>) -> MonitorSpec {
    let mut r = Reader::new(section, errs);
    let flows = r
        .raw("flows")
        .map(|(v, _)| {
            v.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(StationId::from)
                .collect()
        })
        .unwrap_or_default();
    let frame_width = r
        .parse::<usize>("frame_width", "an unsigned integer")
        .unwrap_or(DEFAULT_FRAME_WIDTH);
    let frame_height = r
        .parse::<usize>("frame_height", "an unsigned integer")
        .unwrap_or(DEFAULT_FRAME_HEIGHT);
    let pattern_seed = r
        .parse::<u64>("pattern_seed", "an unsigned integer")
        .unwrap_or(0);
    r.finish();
    MonitorSpec {
        flows,
        frame_width,
        frame_height,
        pattern_seed,
    }
}

fn read_ap(id: &str, section: &Section, errs: &mut Vec<Diagnostic>) -> AccessPoint {
    let mut r = Reader::new(section, errs);
    let bandwidth_hz = r.number("bandwidth_hz").unwrap_or(DEFAULT_BANDWIDTH_HZ);
    let capacity_cap_bps = r.number("capacity_cap_bps");
    r.finish();
    AccessPoint {
        id: ApId::from(id),
        bandwidth_hz,
        capacity_cap_bps,
    }
}

fn read_station(id: &str, section: &Section, errs: &mut Vec<Diagnostic>) -> Option<StationSpec> {
    let mut r = Reader::new(section, errs);
    let profile_name = r.raw("profile").map(|(v, l)| (v.to_owned(), l));
    let profile = match profile_name.as_ref().map(|(v, l)| (v.as_str(), *l)) {
        None | Some(("idle", _)) => Some(TrafficProfile::Idle),
        Some(("video", _)) => {
            let frame_rate_fps = r.parse::<u32>("frame_rate_fps", "an unsigned integer");
            let frame_rate_fps = r.required("frame_rate_fps", frame_rate_fps);
            let frame_size_bits = r.parse::<u64>("frame_size_bits", "an unsigned integer");
            let frame_size_bits = r.required("frame_size_bits", frame_size_bits);
            let packets_per_frame = r
                .parse::<u32>("packets_per_frame", "an unsigned integer")
                .unwrap_or(1);
            match (frame_rate_fps, frame_size_bits) {
                (Some(frame_rate_fps), Some(frame_size_bits)) => Some(TrafficProfile::Video {
                    frame_rate_fps,
                    frame_size_bits,
                    packets_per_frame,
                }),
                _ => None,
            }
        }
        Some(("ftp", _)) => {
            let rate = r.number("rate_kbps");
            let rate = r.required("rate_kbps", rate);
            let packet_bits = r
                .parse::<u64>("packet_bits", "an unsigned integer")
                .unwrap_or(DEFAULT_PACKET_BITS);
            rate.map(|rate_kbps| TrafficProfile::Ftp {
                rate_kbps,
                packet_bits,
            })
        }
        Some(("http", _)) => {
            let peak = r.number("peak_kbps");
            let peak = r.required("peak_kbps", peak);
            let on = r.number("mean_on_s");
            let on = r.required("mean_on_s", on);
            let off = r.number("mean_off_s");
            let off = r.required("mean_off_s", off);
            let packet_bits = r
                .parse::<u64>("packet_bits", "an unsigned integer")
                .unwrap_or(DEFAULT_PACKET_BITS);
            match (peak, on, off) {
                (Some(peak_kbps), Some(mean_on_s), Some(mean_off_s)) => {
                    Some(TrafficProfile::Http {
                        peak_kbps,
                        mean_on_s,
                        mean_off_s,
                        packet_bits,
                    })
                }
                _ => None,
            }
        }
        Some((other, line)) => {
            let p = r.path("profile");
            r.errs.push(Diagnostic::at(
                line,
                p,
                format!("unknown profile `{other}` (expected video, ftp, http or idle)"),
            ));
            None
        }
    };

    let mut links = BTreeMap::new();
    for (ap, suffix, value, line) in r.labelled("link") {
        let path = format!("{}.link.{ap}.{suffix}", section.name);
        if suffix != "snr_db" {
            r.errs.push(Diagnostic::at(line, path, "unknown key"));
            continue;
        }
        match value.parse::<f64>() {
            Ok(v) if v.is_finite() => {
                links.insert(ApId::new(ap), v);
            }
            _ => r.errs.push(Diagnostic::at(
                line,
                path,
                format!("expected a finite number, got `{value}`"),
            )),
        }
    }

    // label -> (time_s, up_kbps, down_kbps, first line)
    type Slot = (Option<f64>, Option<f64>, Option<f64>, usize);
    let mut changes: BTreeMap<String, Slot> = BTreeMap::new();
    for (label, suffix, value, line) in r.labelled("change") {
        let path = format!("{}.change.{label}.{suffix}", section.name);
        let v = match value.parse::<f64>() {
            Ok(v) if v.is_finite() => v,
            _ => {
                r.errs.push(Diagnostic::at(
                    line,
                    path,
                    format!("expected a finite number, got `{value}`"),
                ));
                continue;
            }
        };
        let slot = changes.entry(label).or_insert((None, None, None, line));
        match suffix.as_str() {
            "time_s" => slot.0 = Some(v),
            "up_kbps" => slot.1 = Some(v),
            "down_kbps" => slot.2 = Some(v),
            _ => r.errs.push(Diagnostic::at(line, path, "unknown key")),
        }
    }
    let mut demand_changes = Vec::new();
    for (label, (t, up, down, line)) in changes {
        match t {
            Some(time_s) => demand_changes.push(DemandChange {
                label,
                time_s,
                up_kbps: up.unwrap_or(0.0),
                down_kbps: down.unwrap_or(0.0),
            }),
            None => r.errs.push(Diagnostic::at(
                line,
                format!("{}.change.{label}.time_s", section.name),
                "missing required key",
            )),
        }
    }

    let demand_up_kbps = r.number("demand_up_kbps");
    let demand_down_kbps = r.number("demand_down_kbps");
    let join_time_s = r.number("join_time_s").unwrap_or(0.0);
    let leave_time_s = r.number("leave_time_s");
    r.finish();

    Some(StationSpec {
        id: StationId::from(id),
        links,
        demand_up_kbps,
        demand_down_kbps,
        profile: profile?,
        join_time_s,
        leave_time_s,
        demand_changes,
    })
}

/// Scenario files shipped with the crate.
pub mod builtin {
    /// Two APs, a camera flow and FTP/HTTP background traffic.
    pub const FIG2: &str = include_str!("../scenarios/fig2.scn");
    /// Camera on a saturated AP at 80 dB with an under-loaded second AP;
    /// sweep `station.cam.link.ap2.snr_db` to explore the SNR gate.
    pub const TABLE1: &str = include_str!("../scenarios/table1.scn");

    pub const ALL: [(&str, &str); 2] = [("fig2.scn", FIG2), ("table1.scn", TABLE1)];
}
