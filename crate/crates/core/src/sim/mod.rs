//! The per-run simulation engine: event dispatch, the DCF state machine of
//! every station, integration-mode routing, the LTE scheduler and hybrid
//! tunnel, CTS-to-Self reservations, and metrics assembly.

mod medium;

pub use medium::Medium;

use std::collections::{HashMap, HashSet, VecDeque};

use crate::frame::{Direction, Frame, FrameKind, StationId, AP};
use crate::kernel::{EventHandle, EventQueue, RngStream, SimTime};
use crate::lte::{LteDelivery, LteLink, LtePathKind};
use crate::mac::{next_cw, BackoffGrid, MacPhase};
use crate::modes::{
    route, split_downlink_bearer, AssociationOutcome, Mode, RoutedInterface, TrafficClass,
};
use crate::phy::LinkBudget;
use crate::report::{
    AirtimeBreakdown, AssociationRecord, CtsMetrics, GoodputMetrics, LteMetrics, MetricsReport,
    StationMetrics, TunnelMetrics, WifiMetrics, REPORT_SCHEMA_VERSION,
};
use crate::scenario::ScenarioConfig;
use crate::traffic::{choose_subflow, ChosenSubflow, FlowDeliveryState, SourceKind, SubflowMetrics, Transport};

/// One line of the event trace, recorded when tracing is enabled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceRecord {
    pub t_us: u64,
    pub station: StationId,
    pub event: TraceEvent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceEvent {
    TxStart { kind: FrameKind, dst: StationId },
    TxEnd { kind: FrameKindDecoded },
    NavSet { until_us: u64 },
    CtsWindow { start_us: u64, end_us: u64 },
}

/// Frame kind plus whether the addressed receiver decoded it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameKindDecoded {
    pub kind: FrameKind,
    pub decoded: bool,
}

impl std::fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.event {
            TraceEvent::TxStart { kind, dst } => {
                write!(f, "t={} station={} tx_start kind={:?} dst={}", self.t_us, self.station, kind, dst)
            }
            TraceEvent::TxEnd { kind } => {
                write!(f, "t={} station={} tx_end kind={:?} decoded={}", self.t_us, self.station, kind.kind, kind.decoded)
            }
            TraceEvent::NavSet { until_us } => {
                write!(f, "t={} station={} nav_set until={}", self.t_us, self.station, until_us)
            }
            TraceEvent::CtsWindow { start_us, end_us } => {
                write!(f, "t={} station={} cts_window start={} end={}", self.t_us, self.station, start_us, end_us)
            }
        }
    }
}

#[derive(Debug)]
enum Ev {
    BackoffExpire { s: StationId },
    TxEnd { tx_id: u64 },
    SendMacAck { src: StationId, ack: Frame },
    AckTimeout { s: StationId },
    NavExpire { s: StationId },
    BurstNext,
    HybridAckExpire { client: StationId, direction: Direction, seq: u64 },
    LteEpoch,
    TunnelArrive { frame: Frame, handed_off_at: SimTime },
    SourceTick { client: StationId, direction: Direction },
    MgmtTick { client: StationId },
    CtsTick,
    SplitterTick,
    InterfererStart,
}

struct StationState {
    is_ap: bool,
    is_interferer: bool,
    mode: Mode,
    associated: bool,
    // DCF machine
    phase: MacPhase,
    cw: u32,
    base_cw: u32,
    retries: u32,
    remaining_slots: u32,
    anchor: SimTime,
    pending_expire: Option<EventHandle>,
    pending_at: SimTime,
    nav_until: SimTime,
    nav_expire: Option<EventHandle>,
    head: Option<Frame>,
    head_since: SimTime,
    queue: VecDeque<Frame>,
    ack_timer: Option<EventHandle>,
    current_tx: Option<u64>,
    burst_until: SimTime,
    // counters
    ul_wifi_bytes: u64,
    dl_wifi_bytes: u64,
    ul_lte_bytes: u64,
    dl_lte_bytes: u64,
    tunneled_bytes: u64,
    collisions: u64,
    retransmissions: u64,
    drops: u64,
}

#[derive(Default)]
struct FlowRuntime {
    next_seq: u64,
    delivery: FlowDeliveryState,
    dedup: HashSet<u64>,
    pace_next_us: f64,
}

struct HybridPending {
    handle: Option<EventHandle>,
    frame: Frame,
}

#[derive(Default)]
struct SplitterState {
    /// Explicit downlink frames awaiting a split decision (paced segments,
    /// downlink-direction transport ACKs).
    pending: VecDeque<Frame>,
    /// Tight-destined segments staged for the Wi-Fi queue.
    wifi_staged: VecDeque<Frame>,
    prev_wifi_bytes: u64,
    prev_lte_bytes: u64,
    rr_next: usize,
    ticked_once: bool,
}

#[derive(Default)]
struct RawCounters {
    airtime: AirtimeBreakdown,
    collisions: u64,
    retransmissions: u64,
    drops: u64,
    tx_frames: u64,
    delivered_frames: u64,
    duplicate_frames: u64,
    ul_wifi_bytes: u64,
    dl_wifi_bytes: u64,
    ul_lte_bytes: u64,
    dl_lte_bytes: u64,
    ul_tunnel_bytes: u64,
    tunnel_tx_bytes: u64,
    tunnel_tx_frames: u64,
    tunnel_ingested_bytes: u64,
    tunnel_ingested_frames: u64,
    tunnel_in_transit_bytes: u64,
    tunnel_latency_sum_us: u64,
    late_acks: u64,
    cts_windows: u64,
    cts_reserved_us: u64,
    cts_violations: u64,
    cts_window_list: Vec<(u64, u64)>,
    /// Receiver-side Wi-Fi/LTE downlink payload to tight clients, the
    /// splitter's drain-rate inputs.
    wifi_dl_tight_bytes: u64,
    lte_dl_tight_bytes: u64,
}

pub struct CellSim {
    cfg: ScenarioConfig,
    queue: EventQueue<Ev>,
    medium: Medium,
    stations: Vec<StationState>,
    interferer: Option<StationId>,
    backoff_rng: Vec<RngStream>,
    lte: LteLink,
    ul_flows: Vec<FlowRuntime>,
    dl_flows: Vec<FlowRuntime>,
    splitter: SplitterState,
    hybrid_timers: HashMap<(StationId, Direction, u64), HybridPending>,
    counters: RawCounters,
    trace: Option<Vec<TraceRecord>>,
    associations: Vec<AssociationRecord>,
    subflow_metrics: SubflowMetrics,
    prev_wifi_bytes_for_bw: u64,
    prev_lte_bytes_for_bw: u64,
    mgmt_seq: u64,
    rr_dl_client: usize,
    duration: SimTime,
    // resolved constants
    seg_airtime_us: u64,
    ack_airtime_us: u64,
    ack_timeout_us: u64,
    hybrid_timeout_us: u64,
    current_window: Option<(SimTime, SimTime)>,
}

const MAC_ACK_BYTES: u64 = 14;
const CTS_BYTES: u64 = 14;
/// Saturated LTE-routed queues are topped up to this many segments each
/// scheduler epoch.
const LTE_TOPUP_SEGMENTS: u64 = 4;

impl CellSim {
    pub fn new(cfg: ScenarioConfig, traced: bool) -> Self {
        let clients = cfg.resolved_clients();
        let n = clients.len();
        let interferer = cfg.interferer.enabled.then_some(n + 1);
        let total = n + 1 + usize::from(cfg.interferer.enabled);

        let mut positions = Vec::with_capacity(total);
        let mut powers = Vec::with_capacity(total);
        positions.push(crate::phy::Position::new(cfg.ap.position[0], cfg.ap.position[1]));
        powers.push(cfg.ap.tx_power_dbm);
        for c in &clients {
            positions.push(c.position);
            powers.push(c.tx_power_dbm);
        }
        if cfg.interferer.enabled {
            positions.push(crate::phy::Position::new(cfg.interferer.position[0], cfg.interferer.position[1]));
            powers.push(cfg.interferer.tx_power_dbm);
        }

        let budget = LinkBudget {
            tx_power_dbm: cfg.ap.tx_power_dbm,
            sensitivity_dbm: cfg.budget.sensitivity_dbm,
            noise_floor_dbm: cfg.budget.noise_floor_dbm,
            capture_threshold_db: cfg.budget.capture_threshold_db,
        };
        let mut rx_dbm = vec![vec![f64::NEG_INFINITY; total]; total];
        for tx in 0..total {
            for rx in 0..total {
                if tx == rx {
                    continue;
                }
                let d = positions[tx].distance_to(&positions[rx]);
                rx_dbm[tx][rx] = powers[tx] - cfg.path_loss.path_loss_db(d, false);
            }
        }
        let medium = Medium::new(rx_dbm, cfg.budget.cs_threshold_dbm, budget);

        // Association decisions are geometric: which SSIDs each client can
        // decode and whether its uplink reaches the AP.
        let mut associations = Vec::with_capacity(n);
        let mut station_states: Vec<StationState> = Vec::with_capacity(total);
        station_states.push(Self::blank_station(true, false, Mode::Standard, true));
        for (i, c) in clients.iter().enumerate() {
            let outcome = cfg.resolve_association(c);
            associations.push(AssociationRecord { client: i + 1, outcome });
            let (mode, associated) = match outcome {
                AssociationOutcome::Associated(m) => (m, true),
                AssociationOutcome::LteOnly => (c.preferred_mode, false),
            };
            station_states.push(Self::blank_station(false, false, mode, associated));
        }
        if cfg.interferer.enabled {
            station_states.push(Self::blank_station(false, true, Mode::Standard, false));
        }

        let backoff_rng = (0..total).map(|s| RngStream::new(cfg.seed, s as u64)).collect();
        let lte = LteLink::new(cfg.lte, total);
        let seg_airtime_us = cfg.phy.frame_airtime_us(cfg.traffic.segment_bytes, cfg.phy.data_rate_mbps);
        let ack_airtime_us = cfg.phy.frame_airtime_us(MAC_ACK_BYTES, cfg.phy.control_rate_mbps);
        let ack_timeout_us = cfg.mac.resolved_ack_timeout_us(ack_airtime_us);
        let hybrid_timeout_us = cfg.tunnel.resolved_hybrid_ack_timeout_us();
        let duration = SimTime::from_us(cfg.duration_us());

        let mut sim = CellSim {
            queue: EventQueue::new(),
            medium,
            stations: station_states,
            interferer,
            backoff_rng,
            lte,
            ul_flows: (0..total).map(|_| FlowRuntime::default()).collect(),
            dl_flows: (0..total).map(|_| FlowRuntime::default()).collect(),
            splitter: SplitterState::default(),
            hybrid_timers: HashMap::new(),
            counters: RawCounters::default(),
            trace: traced.then(Vec::new),
            associations,
            subflow_metrics: SubflowMetrics::default(),
            prev_wifi_bytes_for_bw: 0,
            prev_lte_bytes_for_bw: 0,
            mgmt_seq: 0,
            rr_dl_client: 1,
            duration,
            seg_airtime_us,
            ack_airtime_us,
            ack_timeout_us,
            hybrid_timeout_us,
            current_window: None,
            cfg,
        };
        sim.init_events();
        sim
    }

    fn blank_station(is_ap: bool, is_interferer: bool, mode: Mode, associated: bool) -> StationState {
        StationState {
            is_ap,
            is_interferer,
            mode,
            associated,
            phase: MacPhase::Idle,
            cw: 0,
            base_cw: 0,
            retries: 0,
            remaining_slots: 0,
            anchor: SimTime::ZERO,
            pending_expire: None,
            pending_at: SimTime::ZERO,
            nav_until: SimTime::ZERO,
            nav_expire: None,
            head: None,
            head_since: SimTime::ZERO,
            queue: VecDeque::new(),
            ack_timer: None,
            current_tx: None,
            burst_until: SimTime::ZERO,
            ul_wifi_bytes: 0,
            dl_wifi_bytes: 0,
            ul_lte_bytes: 0,
            dl_lte_bytes: 0,
            tunneled_bytes: 0,
            collisions: 0,
            retransmissions: 0,
            drops: 0,
        }
    }

    fn client_count(&self) -> usize {
        self.stations.len() - 1 - usize::from(self.interferer.is_some())
    }

    fn clients(&self) -> std::ops::RangeInclusive<usize> {
        1..=self.client_count()
    }

    fn init_events(&mut self) {
        for s in self.clients() {
            self.stations[s].cw = self.cfg.mac.cw_min;
            self.stations[s].base_cw = self.cfg.mac.cw_min;
        }
        // With every associated client in hybrid mode nothing else contends
        // on the Wi-Fi channel, so the AP runs its window at the minimum
        // level to cut protocol overhead.
        let any = self.clients().any(|c| self.stations[c].associated);
        let all_hybrid = any
            && self
                .clients()
                .all(|c| !self.stations[c].associated || self.stations[c].mode == Mode::Hybrid);
        let ap_cw = if all_hybrid { self.cfg.mac.integrated_cw_min } else { self.cfg.mac.cw_min };
        self.stations[AP].cw = ap_cw;
        self.stations[AP].base_cw = ap_cw;

        // Association-time management frame, then the periodic probe load.
        if self.cfg.mgmt.enabled {
            let n = self.client_count() as u64;
            for c in self.clients() {
                if !self.stations[c].associated {
                    continue;
                }
                let assoc = self.make_mgmt_frame(c);
                self.route_client_control(c, assoc, TrafficClass::WifiMgmt);
                let stagger = (c as u64 - 1) * self.cfg.mgmt.period_us / n.max(1);
                self.queue
                    .schedule(SimTime::from_us(self.cfg.mgmt.period_us + stagger), Ev::MgmtTick { client: c });
            }
        }

        // Constant-rate sources.
        for c in self.clients() {
            if !self.stations[c].associated {
                continue;
            }
            if let SourceKind::ConstantRate { mbps } = self.cfg.traffic.uplink {
                let interval = self.cfg.traffic.pacing_interval_us(mbps);
                self.ul_flows[c].pace_next_us = interval;
                self.queue.schedule(
                    SimTime::from_us(interval.round() as u64),
                    Ev::SourceTick { client: c, direction: Direction::Uplink },
                );
            }
            if let SourceKind::ConstantRate { mbps } = self.cfg.traffic.downlink {
                let interval = self.cfg.traffic.pacing_interval_us(mbps);
                self.dl_flows[c].pace_next_us = interval;
                self.queue.schedule(
                    SimTime::from_us(interval.round() as u64),
                    Ev::SourceTick { client: c, direction: Direction::Downlink },
                );
            }
        }

        self.queue
            .schedule(SimTime::from_us(self.cfg.lte.scheduler_epoch_us), Ev::LteEpoch);
        self.lte_topups();

        if self.cfg.downlink_only.enabled {
            self.queue
                .schedule(SimTime::from_us(self.cfg.downlink_only.period_us), Ev::CtsTick);
        }
        if self.has_tight_clients() {
            self.queue
                .schedule(SimTime::from_us(self.cfg.splitter.control_epoch_us), Ev::SplitterTick);
        }
        if self.cfg.interferer.enabled {
            let at = SimTime::from_us((self.cfg.interferer.start_s * 1e6).round() as u64);
            self.queue.schedule(at, Ev::InterfererStart);
        }

        // Saturated Wi-Fi stations start contending immediately.
        for s in 0..self.stations.len() {
            self.poke(s);
        }
    }

    fn has_tight_clients(&self) -> bool {
        self.clients()
            .any(|c| self.stations[c].associated && self.stations[c].mode == Mode::Tight)
    }

    /// Run to the configured duration and assemble the report.
    pub fn run(mut self) -> (MetricsReport, Option<Vec<TraceRecord>>) {
        loop {
            match self.queue.pop_due(self.duration) {
                Some((t, ev)) => self.dispatch(t, ev),
                None => break,
            }
        }
        self.finalize()
    }

    fn dispatch(&mut self, now: SimTime, ev: Ev) {
        match ev {
            Ev::BackoffExpire { s } => self.on_backoff_expire(s, now),
            Ev::TxEnd { tx_id } => self.on_tx_end(tx_id, now),
            Ev::SendMacAck { src, ack } => self.on_send_mac_ack(src, ack, now),
            Ev::AckTimeout { s } => self.on_ack_timeout(s, now),
            Ev::NavExpire { s } => self.on_nav_expire(s, now),
            Ev::BurstNext => self.on_burst_next(now),
            Ev::HybridAckExpire { client, direction, seq } => {
                self.on_hybrid_ack_expire(client, direction, seq, now)
            }
            Ev::LteEpoch => self.on_lte_epoch(now),
            Ev::TunnelArrive { frame, handed_off_at } => self.on_tunnel_arrive(frame, handed_off_at, now),
            Ev::SourceTick { client, direction } => self.on_source_tick(client, direction, now),
            Ev::MgmtTick { client } => self.on_mgmt_tick(client, now),
            Ev::CtsTick => self.on_cts_tick(now),
            Ev::SplitterTick => self.on_splitter_tick(now),
            Ev::InterfererStart => self.start_interferer_frame(now),
        }
    }

    fn trace(&mut self, t: SimTime, station: StationId, event: TraceEvent) {
        if let Some(tr) = self.trace.as_mut() {
            tr.push(TraceRecord { t_us: t.as_us(), station, event });
        }
    }

    // ----------------------------------------------------------------
    // DCF state machine
    // ----------------------------------------------------------------

    /// Give an idle station a chance to pull its next frame and contend.
    fn poke(&mut self, s: StationId) {
        if self.stations[s].is_interferer {
            return;
        }
        if self.stations[s].phase != MacPhase::Idle {
            return;
        }
        let now = self.queue.now();
        if self.stations[s].is_ap && now < self.stations[s].burst_until {
            // Residual reservation: stay burst-driven until the window ends.
            self.stations[s].phase = MacPhase::Burst;
            self.queue.schedule(now, Ev::BurstNext);
            return;
        }
        if let Some(frame) = self.pull_next_frame(s, None) {
            let st = &mut self.stations[s];
            st.head = Some(frame);
            st.head_since = now;
            self.enter_backoff(s, true);
        }
    }

    fn enter_backoff(&mut self, s: StationId, fresh_draw: bool) {
        let st = &mut self.stations[s];
        st.phase = MacPhase::Backoff;
        if fresh_draw {
            st.remaining_slots = self.backoff_rng[s].uniform_int(0, st.cw as u64) as u32;
        }
        self.try_schedule_expire(s);
    }

    fn grid(&self, s: StationId) -> BackoffGrid {
        BackoffGrid {
            anchor: self.stations[s].anchor,
            difs_us: self.cfg.mac.difs_us,
            slot_us: self.cfg.mac.slot_us,
        }
    }

    fn try_schedule_expire(&mut self, s: StationId) {
        let now = self.queue.now();
        let view = &self.medium.views[s];
        if view.cs_busy > 0 || self.stations[s].nav_until > now {
            return; // a resume will reschedule when the medium clears
        }
        let anchor = view.idle_since.max(self.stations[s].nav_until).max(now);
        let st = &mut self.stations[s];
        st.anchor = anchor;
        let at = anchor.add_us(self.cfg.mac.difs_us + st.remaining_slots as u64 * self.cfg.mac.slot_us);
        st.pending_at = at;
        st.pending_expire = Some(self.queue.schedule(at, Ev::BackoffExpire { s }));
    }

    /// The medium (or NAV) went busy at `busy_at`: cancel a pending expiry
    /// and bank the slots that completed. An expiry scheduled for exactly
    /// `busy_at` is left alone — that station decides at its boundary with
    /// the medium state of the instant before, which is how simultaneous
    /// transmissions (collisions) happen.
    fn freeze(&mut self, s: StationId, busy_at: SimTime) {
        if self.stations[s].phase != MacPhase::Backoff {
            return;
        }
        let Some(handle) = self.stations[s].pending_expire else { return };
        if self.stations[s].pending_at <= busy_at {
            return;
        }
        self.queue.cancel(handle);
        let elapsed = self.grid(s).slots_elapsed(busy_at, self.stations[s].remaining_slots);
        let st = &mut self.stations[s];
        st.remaining_slots -= elapsed;
        st.pending_expire = None;
    }

    fn resume(&mut self, s: StationId) {
        if self.stations[s].phase == MacPhase::Backoff && self.stations[s].pending_expire.is_none() {
            self.try_schedule_expire(s);
        }
    }

    fn on_backoff_expire(&mut self, s: StationId, now: SimTime) {
        self.stations[s].pending_expire = None;
        if self.medium.busy_before(s, now) || self.stations[s].nav_until > now {
            // Should have been frozen; recover by waiting for the next
            // resume instead of transmitting into a known-busy medium.
            debug_assert!(false, "backoff expiry on busy medium");
            return;
        }
        self.stations[s].remaining_slots = 0;
        let Some(frame) = self.stations[s].head.clone() else {
            debug_assert!(false, "backoff without head frame");
            self.stations[s].phase = MacPhase::Idle;
            return;
        };
        self.stations[s].phase = MacPhase::Transmitting;
        let tx_id = self.start_tx(s, frame, now);
        self.stations[s].current_tx = Some(tx_id);
    }

    /// Put a frame on the air (both DCF heads and control-path frames).
    fn start_tx(&mut self, s: StationId, frame: Frame, now: SimTime) -> u64 {
        self.counters.tx_frames += 1;
        if let Some((w_start, w_end)) = self.current_window {
            if !self.stations[s].is_ap
                && !self.stations[s].is_interferer
                && self.stations[s].mode == Mode::Standard
                && now > w_start
                && now < w_end
            {
                self.counters.cts_violations += 1;
            }
        }
        self.trace(now, s, TraceEvent::TxStart { kind: frame.kind, dst: frame.dst });
        let (tx_id, end, went_busy) = self.medium.begin_tx(s, frame, now);
        for r in went_busy {
            self.freeze(r, now);
        }
        self.queue.schedule(end, Ev::TxEnd { tx_id });
        tx_id
    }

    fn on_tx_end(&mut self, tx_id: u64, now: SimTime) {
        let (tx, newly_idle, receptions) = self.medium.end_tx(tx_id, now);
        self.account_airtime(&tx.frame, tx.frame.airtime_us);
        for r in newly_idle {
            self.resume(r);
        }
        self.handle_tx_complete(tx.src, &tx.frame, tx_id, now);
        let mut decoded_at_dst = false;
        for rx in receptions {
            if rx.station == tx.frame.dst {
                decoded_at_dst = rx.decoded;
            }
            self.handle_reception(rx.station, &tx.frame, rx.decoded, rx.rx_dbm, now);
        }
        self.trace(
            now,
            tx.src,
            TraceEvent::TxEnd { kind: FrameKindDecoded { kind: tx.frame.kind, decoded: decoded_at_dst } },
        );
    }

    fn account_airtime(&mut self, frame: &Frame, airtime_us: u64) {
        let from_ap = frame.src == AP;
        if self.interferer == Some(frame.src) {
            return; // the jammer is not part of the cell's airtime budget
        }
        let a = &mut self.counters.airtime;
        match (frame.kind, from_ap) {
            (FrameKind::Data, false) => a.ul_data_us += airtime_us,
            (FrameKind::Data, true) => a.dl_data_us += airtime_us,
            (FrameKind::MacAck, false) => a.ul_mac_ack_us += airtime_us,
            (FrameKind::MacAck, true) => a.dl_mac_ack_us += airtime_us,
            (FrameKind::CtsSelf, _) => a.cts_self_us += airtime_us,
            (FrameKind::Mgmt, _) => a.ul_mgmt_us += airtime_us,
            (FrameKind::TransportAck, false) => a.ul_transport_ack_us += airtime_us,
            (FrameKind::TransportAck, true) => a.dl_transport_ack_us += airtime_us,
        }
    }

    fn handle_tx_complete(&mut self, src: StationId, frame: &Frame, tx_id: u64, now: SimTime) {
        if self.interferer == Some(src) {
            // Back-to-back jamming.
            if now < self.duration {
                self.start_interferer_frame(now);
            }
            return;
        }
        match frame.kind {
            FrameKind::CtsSelf => {
                debug_assert!(self.stations[src].is_ap);
                self.stations[src].current_tx = None;
                let window_end = now.add_us(frame.nav_duration_us);
                self.stations[src].burst_until = window_end;
                self.stations[src].phase = MacPhase::Burst;
                self.stations[src].head = None;
                self.counters.cts_windows += 1;
                self.counters.cts_reserved_us += frame.nav_duration_us;
                self.counters.cts_window_list.push((now.as_us(), window_end.as_us()));
                self.current_window = Some((now, window_end));
                self.trace(now, src, TraceEvent::CtsWindow { start_us: now.as_us(), end_us: window_end.as_us() });
                self.queue
                    .schedule(now.add_us(self.cfg.mac.sifs_us), Ev::BurstNext);
            }
            FrameKind::MacAck => {
                // Control-path response; the sender's DCF state is untouched.
            }
            _ if self.stations[src].phase == MacPhase::Transmitting
                && self.stations[src].current_tx == Some(tx_id) =>
            {
                self.stations[src].current_tx = None;
                let hybrid_dl = self.stations[src].is_ap
                    && frame.dst != AP
                    && Some(frame.dst) != self.interferer
                    && self.stations[frame.dst].mode == Mode::Hybrid;
                if hybrid_dl && frame.requires_mac_ack {
                    // The AP does not wait for an over-the-air ACK from a
                    // hybrid client: it arms a tunnel-ACK timer and keeps
                    // the pipeline moving.
                    self.arm_hybrid_timer(frame, now);
                    self.stations[src].head = None;
                    self.stations[src].phase = MacPhase::Idle;
                    self.poke(src);
                } else if frame.requires_mac_ack {
                    self.stations[src].phase = MacPhase::AwaitingAck;
                    let h = self
                        .queue
                        .schedule(now.add_us(self.ack_timeout_us), Ev::AckTimeout { s: src });
                    self.stations[src].ack_timer = Some(h);
                } else {
                    self.stations[src].head = None;
                    self.stations[src].phase = MacPhase::Idle;
                    self.poke(src);
                }
            }
            _ if self.stations[src].phase == MacPhase::Burst => {
                // Burst frame done; next one after SIFS.
                self.queue.schedule(now.add_us(self.cfg.mac.sifs_us), Ev::BurstNext);
            }
            _ => {}
        }
    }

    fn arm_hybrid_timer(&mut self, frame: &Frame, now: SimTime) {
        if frame.retransmission {
            // One retransmission per frame: the tunnel never loses the ACK,
            // it only delays it, so the second copy just waits it out.
            return;
        }
        let direction = frame.flow.map_or(Direction::Downlink, |f| f.direction);
        let key = (frame.dst, direction, frame.seq);
        let at = now.add_us(self.hybrid_timeout_us);
        let expire = Ev::HybridAckExpire { client: key.0, direction: key.1, seq: key.2 };
        let handle = Some(self.queue.schedule(at, expire));
        self.hybrid_timers
            .insert(key, HybridPending { handle, frame: frame.clone() });
    }

    fn on_hybrid_ack_expire(&mut self, client: StationId, direction: Direction, seq: u64, now: SimTime) {
        let _ = now;
        let Some(pending) = self.hybrid_timers.get_mut(&(client, direction, seq)) else { return };
        pending.handle = None;
        let mut retx = pending.frame.clone();
        retx.retransmission = true;
        self.counters.retransmissions += 1;
        self.stations[AP].retransmissions += 1;
        self.stations[AP].queue.push_back(retx);
        self.poke(AP);
    }

    fn on_ack_timeout(&mut self, s: StationId, now: SimTime) {
        debug_assert_eq!(self.stations[s].phase, MacPhase::AwaitingAck);
        self.stations[s].ack_timer = None;
        self.stations[s].retries += 1;
        self.counters.retransmissions += 1;
        self.stations[s].retransmissions += 1;
        let cw_max = self.cfg.mac.cw_max;
        self.stations[s].cw = next_cw(self.stations[s].cw, cw_max);
        if self.cfg.mac.retry_limit.exceeded_by(self.stations[s].retries) {
            // Drop, report the loss upward, start over at cw_min.
            self.counters.drops += 1;
            self.stations[s].drops += 1;
            self.stations[s].head = None;
            self.stations[s].retries = 0;
            self.stations[s].cw = self.stations[s].base_cw;
            self.stations[s].phase = MacPhase::Idle;
            self.poke(s);
        } else {
            if let Some(head) = self.stations[s].head.as_mut() {
                head.retransmission = true;
            }
            let _ = now;
            self.enter_backoff(s, true);
        }
    }

    fn on_nav_expire(&mut self, s: StationId, _now: SimTime) {
        self.stations[s].nav_expire = None;
        self.resume(s);
    }

    fn on_send_mac_ack(&mut self, src: StationId, ack: Frame, now: SimTime) {
        if self.medium.views[src].transmitting {
            debug_assert!(false, "ack sender busy at SIFS boundary");
            return;
        }
        self.start_tx(src, ack, now);
    }

    // ----------------------------------------------------------------
    // Receptions and deliveries
    // ----------------------------------------------------------------

    fn handle_reception(&mut self, r: StationId, frame: &Frame, decoded: bool, rx_dbm: f64, now: SimTime) {
        if self.interferer == Some(r) || self.interferer == Some(frame.src) {
            return;
        }
        if !decoded {
            if frame.dst == r && rx_dbm >= self.cfg.budget.sensitivity_dbm {
                self.counters.collisions += 1;
                self.stations[frame.src].collisions += 1;
            }
            return;
        }
        if frame.kind == FrameKind::CtsSelf {
            // Every decoder honors the reservation.
            let until = now.add_us(frame.nav_duration_us);
            if until > self.stations[r].nav_until {
                self.stations[r].nav_until = until;
                if let Some(h) = self.stations[r].nav_expire.take() {
                    self.queue.cancel(h);
                }
                self.stations[r].nav_expire = Some(self.queue.schedule(until, Ev::NavExpire { s: r }));
                self.freeze(r, now);
                self.trace(now, r, TraceEvent::NavSet { until_us: until.as_us() });
            }
            return;
        }
        if frame.dst != r {
            return;
        }
        self.counters.delivered_frames += 1;
        match frame.kind {
            FrameKind::Data | FrameKind::TransportAck | FrameKind::Mgmt => {
                if frame.requires_mac_ack {
                    self.send_mac_ack_for(r, frame, now);
                }
                self.deliver_payload(r, frame, WifiOrLte::Wifi, now);
            }
            FrameKind::MacAck => self.on_mac_ack_decoded(r, frame, now),
            FrameKind::CtsSelf => unreachable!("handled above"),
        }
    }

    fn send_mac_ack_for(&mut self, r: StationId, frame: &Frame, now: SimTime) {
        let ack = Frame {
            kind: FrameKind::MacAck,
            src: r,
            dst: frame.src,
            payload_bytes: MAC_ACK_BYTES,
            airtime_us: self.ack_airtime_us,
            requires_mac_ack: false,
            nav_duration_us: 0,
            seq: frame.seq,
            flow: frame.flow,
            retransmission: false,
        };
        if !self.stations[r].is_ap && self.stations[r].mode == Mode::Hybrid {
            // MAC ACKs of hybrid clients ride the tunnel, not the air.
            self.tunnel_enqueue(r, ack, now);
        } else {
            self.queue
                .schedule(now.add_us(self.cfg.mac.sifs_us), Ev::SendMacAck { src: r, ack });
        }
    }

    fn on_mac_ack_decoded(&mut self, r: StationId, ack: &Frame, now: SimTime) {
        let matches = self.stations[r].phase == MacPhase::AwaitingAck
            && self.stations[r]
                .head
                .as_ref()
                .is_some_and(|h| h.seq == ack.seq && h.dst == ack.src);
        if !matches {
            return; // stray or late ACK
        }
        if let Some(h) = self.stations[r].ack_timer.take() {
            self.queue.cancel(h);
        }
        // Success: contention window and retry counter reset.
        let service_us = now.since(self.stations[r].head_since) as f64;
        let rtt = &mut self.subflow_metrics.wifi.measured_rtt_us;
        *rtt = if *rtt == 0.0 { service_us } else { 0.9 * *rtt + 0.1 * service_us };
        self.stations[r].head = None;
        self.stations[r].retries = 0;
        self.stations[r].cw = self.stations[r].base_cw;
        self.stations[r].phase = MacPhase::Idle;
        self.poke(r);
    }

    // ----------------------------------------------------------------
    // Payload delivery, transport ACKs, routing
    // ----------------------------------------------------------------

    fn deliver_payload(&mut self, r: StationId, frame: &Frame, via: WifiOrLte, now: SimTime) {
        match frame.kind {
            FrameKind::Mgmt => {
                // Probe/association refresh; nothing flows upward.
            }
            FrameKind::TransportAck => {
                // Transport ACK reached its endpoint; pure accounting.
            }
            FrameKind::Data => {
                let Some(flow) = frame.flow else { return };
                let flows = match flow.direction {
                    Direction::Uplink => &mut self.ul_flows,
                    Direction::Downlink => &mut self.dl_flows,
                };
                if !flows[flow.client].dedup.insert(frame.seq) {
                    self.counters.duplicate_frames += 1;
                    return;
                }
                let bytes = frame.payload_bytes;
                match (flow.direction, via) {
                    (Direction::Uplink, WifiOrLte::Wifi) => {
                        self.counters.ul_wifi_bytes += bytes;
                        self.stations[flow.client].ul_wifi_bytes += bytes;
                    }
                    (Direction::Uplink, WifiOrLte::Lte) => {
                        self.counters.ul_lte_bytes += bytes;
                        self.stations[flow.client].ul_lte_bytes += bytes;
                    }
                    (Direction::Uplink, WifiOrLte::Tunnel) => {
                        self.counters.ul_tunnel_bytes += bytes;
                        self.stations[flow.client].tunneled_bytes += bytes;
                    }
                    (Direction::Downlink, WifiOrLte::Wifi) => {
                        self.counters.dl_wifi_bytes += bytes;
                        self.stations[flow.client].dl_wifi_bytes += bytes;
                        if self.stations[flow.client].mode == Mode::Tight {
                            self.counters.wifi_dl_tight_bytes += bytes;
                        }
                    }
                    (Direction::Downlink, WifiOrLte::Lte) => {
                        self.counters.dl_lte_bytes += bytes;
                        self.stations[flow.client].dl_lte_bytes += bytes;
                        if self.stations[flow.client].mode == Mode::Tight {
                            self.counters.lte_dl_tight_bytes += bytes;
                        }
                    }
                    (Direction::Downlink, WifiOrLte::Tunnel) => unreachable!("tunnel is uplink-only"),
                }
                if self.cfg.traffic.transport == Transport::Reliable {
                    let emit = flows[flow.client].delivery.on_segment_delivered(&self.cfg.ack_policy);
                    if emit {
                        self.emit_transport_ack(flow.client, flow.direction, now);
                    }
                }
                let _ = r;
            }
            _ => {}
        }
    }

    /// Generate a transport ACK for `data_direction` traffic of `client`
    /// and hand it to whatever interface the mode's policy selects.
    fn emit_transport_ack(&mut self, client: StationId, data_direction: Direction, now: SimTime) {
        let mode = self.stations[client].mode;
        let bytes = self.cfg.ack_policy.ack_bytes;
        let flow = crate::frame::FlowKey { client, direction: data_direction };
        match data_direction {
            Direction::Downlink => {
                // ACK travels uplink from the client.
                let seq = self.dl_flows[client].delivery.acks_emitted;
                let ack = Frame {
                    kind: FrameKind::TransportAck,
                    src: client,
                    dst: AP,
                    payload_bytes: bytes,
                    airtime_us: self.cfg.phy.frame_airtime_us(bytes, self.cfg.phy.data_rate_mbps),
                    requires_mac_ack: true,
                    nav_duration_us: 0,
                    seq,
                    flow: Some(flow),
                    retransmission: false,
                };
                self.route_client_control(client, ack, TrafficClass::TransportAckForDl);
            }
            Direction::Uplink => {
                // ACK travels downlink toward the client; it is routed like
                // downlink data for the client's mode.
                let seq = self.ul_flows[client].delivery.acks_emitted;
                let ack = Frame {
                    kind: FrameKind::TransportAck,
                    src: AP,
                    dst: client,
                    payload_bytes: bytes,
                    airtime_us: self.cfg.phy.frame_airtime_us(bytes, self.cfg.phy.data_rate_mbps),
                    requires_mac_ack: true,
                    nav_duration_us: 0,
                    seq,
                    flow: Some(flow),
                    retransmission: false,
                };
                match route(mode, TrafficClass::DlData) {
                    RoutedInterface::Wifi => {
                        self.stations[AP].queue.push_back(ack);
                        self.poke(AP);
                    }
                    RoutedInterface::PerScheduler => match self.choose(Direction::Downlink) {
                        ChosenSubflow::Wifi => {
                            self.stations[AP].queue.push_back(ack);
                            self.poke(AP);
                        }
                        ChosenSubflow::Lte => {
                            self.lte
                                .enqueue(Direction::Downlink, client, ack, LtePathKind::Native, bytes, now);
                        }
                    },
                    RoutedInterface::PerSplitter => self.splitter.pending.push_back(ack),
                    RoutedInterface::LteNative => {
                        self.lte
                            .enqueue(Direction::Downlink, client, ack, LtePathKind::Native, bytes, now);
                    }
                    RoutedInterface::LteTunnel => unreachable!("downlink never tunnels"),
                }
            }
        }
    }

    /// Route a client-originated control frame (mgmt or uplink transport
    /// ACK) per the mode policy.
    fn route_client_control(&mut self, client: StationId, frame: Frame, class: TrafficClass) {
        let now = self.queue.now();
        match route(self.stations[client].mode, class) {
            RoutedInterface::Wifi => {
                self.stations[client].queue.push_back(frame);
                self.poke(client);
            }
            RoutedInterface::LteTunnel => self.tunnel_enqueue(client, frame, now),
            RoutedInterface::LteNative => {
                let bytes = frame.payload_bytes;
                self.lte
                    .enqueue(Direction::Uplink, client, frame, LtePathKind::Native, bytes, now);
            }
            RoutedInterface::PerScheduler | RoutedInterface::PerSplitter => {
                unreachable!("control classes route to a concrete interface")
            }
        }
    }

    fn choose(&self, direction: Direction) -> ChosenSubflow {
        let mut m = self.subflow_metrics;
        m.wifi.uplink_cost = self.cfg.subflow.wifi_uplink_cost;
        m.wifi.downlink_cost = self.cfg.subflow.wifi_downlink_cost;
        m.lte.uplink_cost = self.cfg.subflow.lte_uplink_cost;
        m.lte.downlink_cost = self.cfg.subflow.lte_downlink_cost;
        m.wifi.available = true;
        m.lte.available = self.cfg.lte.capacity_mbps(direction) > 0.0;
        choose_subflow(&m, &self.cfg.subflow.weights(), direction)
    }

    // ----------------------------------------------------------------
    // Frame sources
    // ----------------------------------------------------------------

    fn make_segment(&mut self, client: StationId, direction: Direction) -> Frame {
        let flows = match direction {
            Direction::Uplink => &mut self.ul_flows,
            Direction::Downlink => &mut self.dl_flows,
        };
        let seq = flows[client].next_seq;
        flows[client].next_seq += 1;
        let (src, dst) = match direction {
            Direction::Uplink => (client, AP),
            Direction::Downlink => (AP, client),
        };
        Frame {
            kind: FrameKind::Data,
            src,
            dst,
            payload_bytes: self.cfg.traffic.segment_bytes,
            airtime_us: self.seg_airtime_us,
            requires_mac_ack: true,
            nav_duration_us: 0,
            seq,
            flow: Some(crate::frame::FlowKey { client, direction }),
            retransmission: false,
        }
    }

    fn make_mgmt_frame(&mut self, client: StationId) -> Frame {
        self.mgmt_seq += 1;
        Frame {
            kind: FrameKind::Mgmt,
            src: client,
            dst: AP,
            payload_bytes: self.cfg.mgmt.frame_bytes,
            airtime_us: self
                .cfg
                .phy
                .frame_airtime_us(self.cfg.mgmt.frame_bytes, self.cfg.phy.data_rate_mbps),
            requires_mac_ack: true,
            nav_duration_us: 0,
            seq: self.mgmt_seq,
            flow: None,
            retransmission: false,
        }
    }

    /// Is this client's downlink data served over Wi-Fi right now?
    fn wifi_dl_routed(&self, client: StationId) -> bool {
        match route(self.stations[client].mode, TrafficClass::DlData) {
            RoutedInterface::Wifi => true,
            RoutedInterface::PerScheduler => self.choose(Direction::Downlink) == ChosenSubflow::Wifi,
            RoutedInterface::PerSplitter => false, // fed via the staged queue
            _ => false,
        }
    }

    fn wifi_ul_routed(&self, client: StationId) -> bool {
        match route(self.stations[client].mode, TrafficClass::UlData) {
            RoutedInterface::Wifi => true,
            RoutedInterface::PerScheduler => self.choose(Direction::Uplink) == ChosenSubflow::Wifi,
            _ => false,
        }
    }

    /// Next frame for a station's Wi-Fi MAC. `max_airtime_us` (burst mode)
    /// refuses frames that do not fit the remaining reservation without
    /// consuming them.
    fn pull_next_frame(&mut self, s: StationId, max_airtime_us: Option<u64>) -> Option<Frame> {
        let fits = |air: u64| max_airtime_us.is_none_or(|m| air <= m);
        if let Some(front) = self.stations[s].queue.front() {
            if !fits(front.airtime_us) {
                return None;
            }
            return self.stations[s].queue.pop_front();
        }
        if self.stations[s].is_ap {
            if let Some(front) = self.splitter.wifi_staged.front() {
                if !fits(front.airtime_us) {
                    return None;
                }
                return self.splitter.wifi_staged.pop_front();
            }
            if self.cfg.traffic.downlink == SourceKind::Saturated {
                if !fits(self.seg_airtime_us) {
                    return None;
                }
                let n = self.client_count();
                for step in 0..n {
                    let c = (self.rr_dl_client - 1 + step) % n + 1;
                    if self.stations[c].associated && self.wifi_dl_routed(c) {
                        self.rr_dl_client = c % n + 1;
                        return Some(self.make_segment(c, Direction::Downlink));
                    }
                }
            }
            return None;
        }
        // Client-side saturated uplink, when routed over Wi-Fi.
        if self.stations[s].associated
            && self.cfg.traffic.uplink == SourceKind::Saturated
            && self.wifi_ul_routed(s)
        {
            if !fits(self.seg_airtime_us) {
                return None;
            }
            return Some(self.make_segment(s, Direction::Uplink));
        }
        None
    }

    // ----------------------------------------------------------------
    // CTS-to-Self reservation and downlink burst
    // ----------------------------------------------------------------

    fn on_cts_tick(&mut self, now: SimTime) {
        let window = self.cfg.downlink_only.window_us;
        let cts = Frame {
            kind: FrameKind::CtsSelf,
            src: AP,
            dst: AP,
            payload_bytes: CTS_BYTES,
            airtime_us: self.cfg.phy.frame_airtime_us(CTS_BYTES, self.cfg.phy.control_rate_mbps),
            requires_mac_ack: false,
            nav_duration_us: window,
            seq: 0,
            flow: None,
            retransmission: false,
        };
        self.stations[AP].queue.push_front(cts);
        self.poke(AP);
        self.queue
            .schedule(now.add_us(self.cfg.downlink_only.period_us), Ev::CtsTick);
    }

    fn on_burst_next(&mut self, now: SimTime) {
        if self.stations[AP].phase != MacPhase::Burst {
            return;
        }
        let until = self.stations[AP].burst_until;
        let remaining = until.since(now);
        if remaining == 0 {
            self.stations[AP].phase = MacPhase::Idle;
            self.poke(AP);
            return;
        }
        match self.pull_next_frame(AP, Some(remaining)) {
            Some(mut frame) => {
                // Frames under the reservation are sent without immediate
                // MAC ACKs so no client transmission ever starts inside the
                // window.
                frame.requires_mac_ack = false;
                self.start_tx(AP, frame, now);
            }
            None => {
                // Nothing fits in what is left of the reservation: concede
                // the tail and fall back to normal contention. Anything the
                // AP starts now ends after the NAV expiry, so responses
                // still begin outside the window.
                self.stations[AP].burst_until = now;
                self.stations[AP].phase = MacPhase::Idle;
                self.poke(AP);
            }
        }
    }

    // ----------------------------------------------------------------
    // LTE, tunnel, splitter
    // ----------------------------------------------------------------

    fn tunnel_enqueue(&mut self, client: StationId, frame: Frame, now: SimTime) {
        let payload = frame.payload_bytes;
        self.counters.tunnel_tx_bytes += payload;
        self.counters.tunnel_tx_frames += 1;
        let wire = payload + self.cfg.tunnel.per_packet_overhead_bytes;
        self.lte
            .enqueue(Direction::Uplink, client, frame, LtePathKind::Tunnel, wire, now);
    }

    fn on_lte_epoch(&mut self, now: SimTime) {
        let deliveries = self.lte.on_epoch(now);
        for d in deliveries {
            self.apply_lte_delivery(d, now);
        }
        self.lte_topups();
        self.update_bandwidth_estimates();
        self.queue
            .schedule(now.add_us(self.cfg.lte.scheduler_epoch_us), Ev::LteEpoch);
    }

    fn apply_lte_delivery(&mut self, d: LteDelivery, now: SimTime) {
        match d.path {
            LtePathKind::Tunnel => {
                self.counters.tunnel_in_transit_bytes += d.frame.payload_bytes;
                let at = d.granted_at.add_us(self.cfg.tunnel.latency_us());
                self.queue
                    .schedule(at, Ev::TunnelArrive { frame: d.frame, handed_off_at: d.enqueued_at });
            }
            LtePathKind::Native => match d.direction {
                Direction::Uplink => {
                    // Native uplink terminates at the LTE core / server side.
                    self.deliver_payload(AP, &d.frame, WifiOrLte::Lte, now);
                }
                Direction::Downlink => {
                    self.deliver_payload(d.frame.dst, &d.frame, WifiOrLte::Lte, now);
                }
            },
        }
    }

    /// Tunnel termination at the AP: the frame enters the stack exactly as
    /// if it had been decoded from the radio.
    fn on_tunnel_arrive(&mut self, frame: Frame, handed_off_at: SimTime, now: SimTime) {
        self.counters.tunnel_in_transit_bytes -= frame.payload_bytes;
        self.counters.tunnel_ingested_bytes += frame.payload_bytes;
        self.counters.tunnel_ingested_frames += 1;
        self.counters.tunnel_latency_sum_us += now.since(handed_off_at);
        match frame.kind {
            FrameKind::MacAck => {
                // A tunneled MAC ACK cancels the pending retransmission
                // timer of the matching downlink frame.
                let direction = frame.flow.map_or(Direction::Downlink, |f| f.direction);
                let key = (frame.src, direction, frame.seq);
                match self.hybrid_timers.remove(&key) {
                    Some(HybridPending { handle: Some(h), .. }) => {
                        self.queue.cancel(h);
                    }
                    // Timer already fired (retransmission queued) or no
                    // record at all: the ACK is late either way.
                    Some(HybridPending { handle: None, .. }) | None => {
                        self.counters.late_acks += 1;
                    }
                }
            }
            _ => self.deliver_payload(AP, &frame, WifiOrLte::Tunnel, now),
        }
    }

    /// Keep saturated LTE-routed uplink (and loose LTE downlink) queues
    /// topped up so the grant scheduler always sees the offered load.
    fn lte_topups(&mut self) {
        let now = self.queue.now();
        if self.cfg.traffic.uplink == SourceKind::Saturated {
            for c in self.clients() {
                if !self.stations[c].associated {
                    continue;
                }
                let target = LTE_TOPUP_SEGMENTS * self.cfg.traffic.segment_bytes;
                match route(self.stations[c].mode, TrafficClass::UlData) {
                    RoutedInterface::LteNative => {
                        while self.lte.station_backlog_bytes(Direction::Uplink, c) < target {
                            let seg = self.make_segment(c, Direction::Uplink);
                            let bytes = seg.payload_bytes;
                            self.lte.enqueue(Direction::Uplink, c, seg, LtePathKind::Native, bytes, now);
                        }
                    }
                    RoutedInterface::LteTunnel => {
                        while self.lte.station_backlog_bytes(Direction::Uplink, c) < target {
                            let seg = self.make_segment(c, Direction::Uplink);
                            self.tunnel_enqueue(c, seg, now);
                        }
                    }
                    RoutedInterface::PerScheduler => {
                        if self.choose(Direction::Uplink) == ChosenSubflow::Lte {
                            while self.lte.station_backlog_bytes(Direction::Uplink, c) < target {
                                let seg = self.make_segment(c, Direction::Uplink);
                                let bytes = seg.payload_bytes;
                                self.lte.enqueue(Direction::Uplink, c, seg, LtePathKind::Native, bytes, now);
                            }
                        }
                    }
                    _ => {}
                }
            }
        }
        if self.cfg.traffic.downlink == SourceKind::Saturated {
            for c in self.clients() {
                if !self.stations[c].associated || self.stations[c].mode != Mode::Loose {
                    continue;
                }
                if self.choose(Direction::Downlink) == ChosenSubflow::Lte {
                    let target = LTE_TOPUP_SEGMENTS * self.cfg.traffic.segment_bytes;
                    while self.lte.station_backlog_bytes(Direction::Downlink, c) < target {
                        let seg = self.make_segment(c, Direction::Downlink);
                        let bytes = seg.payload_bytes;
                        self.lte.enqueue(Direction::Downlink, c, seg, LtePathKind::Native, bytes, now);
                    }
                }
            }
        }
    }

    fn update_bandwidth_estimates(&mut self) {
        let wifi_now = self.counters.ul_wifi_bytes + self.counters.dl_wifi_bytes;
        let lte_now = self.counters.ul_lte_bytes + self.counters.dl_lte_bytes + self.counters.ul_tunnel_bytes;
        let epoch = self.cfg.lte.scheduler_epoch_us as f64;
        let wifi_inst = (wifi_now - self.prev_wifi_bytes_for_bw) as f64 * 8.0 / epoch;
        let lte_inst = (lte_now - self.prev_lte_bytes_for_bw) as f64 * 8.0 / epoch;
        self.prev_wifi_bytes_for_bw = wifi_now;
        self.prev_lte_bytes_for_bw = lte_now;
        let w = &mut self.subflow_metrics.wifi.measured_bandwidth_mbps;
        *w = 0.9 * *w + 0.1 * wifi_inst;
        let l = &mut self.subflow_metrics.lte.measured_bandwidth_mbps;
        *l = 0.9 * *l + 0.1 * lte_inst;
        self.subflow_metrics.lte.measured_rtt_us = self.cfg.lte.scheduler_epoch_us as f64;
    }

    /// Tight-mode bearer splitter control epoch: re-measure drain rates and
    /// re-allocate staged downlink bytes proportionally.
    fn on_splitter_tick(&mut self, now: SimTime) {
        let epoch_us = self.cfg.splitter.control_epoch_us as f64;
        let wifi_drained = self.counters.wifi_dl_tight_bytes - self.splitter.prev_wifi_bytes;
        let lte_drained = self.counters.lte_dl_tight_bytes - self.splitter.prev_lte_bytes;
        self.splitter.prev_wifi_bytes = self.counters.wifi_dl_tight_bytes;
        self.splitter.prev_lte_bytes = self.counters.lte_dl_tight_bytes;
        let (wifi_drain_mbps, lte_drain_mbps) = if self.splitter.ticked_once {
            (wifi_drained as f64 * 8.0 / epoch_us, lte_drained as f64 * 8.0 / epoch_us)
        } else {
            // Bootstrap epoch: no drain history yet, assume an even split.
            (1.0, 1.0)
        };
        self.splitter.ticked_once = true;

        // Route explicit pending frames (paced segments, downlink ACKs).
        if !self.splitter.pending.is_empty() {
            let backlog: u64 = self.splitter.pending.iter().map(|f| f.payload_bytes).sum();
            let (mut to_wifi, _) = split_downlink_bearer(backlog, wifi_drain_mbps, lte_drain_mbps);
            if wifi_drain_mbps + lte_drain_mbps > 0.0 {
                while let Some(frame) = self.splitter.pending.pop_front() {
                    let bytes = frame.payload_bytes;
                    if to_wifi >= bytes {
                        to_wifi -= bytes;
                        self.stations[AP].queue.push_back(frame);
                    } else {
                        let dst = frame.dst;
                        self.lte
                            .enqueue(Direction::Downlink, dst, frame, LtePathKind::Native, bytes, now);
                    }
                }
                self.poke(AP);
            }
        }

        // Saturated source: top both interfaces up to one epoch of their
        // measured drain plus headroom, so each stays backlogged exactly in
        // proportion to what it can serve.
        if self.cfg.traffic.downlink == SourceKind::Saturated {
            let tight: Vec<StationId> = self
                .clients()
                .filter(|&c| self.stations[c].associated && self.stations[c].mode == Mode::Tight)
                .collect();
            if !tight.is_empty() {
                let seg = self.cfg.traffic.segment_bytes;
                let chunk = wifi_drained + lte_drained + 4 * seg;
                let (wifi_level, lte_level) = split_downlink_bearer(chunk, wifi_drain_mbps, lte_drain_mbps);
                let mut staged: u64 = self.splitter.wifi_staged.iter().map(|f| f.payload_bytes).sum();
                while staged + seg <= wifi_level {
                    let c = tight[self.splitter.rr_next % tight.len()];
                    self.splitter.rr_next += 1;
                    let frame = self.make_segment(c, Direction::Downlink);
                    staged += frame.payload_bytes;
                    self.splitter.wifi_staged.push_back(frame);
                }
                let mut lte_backlog: u64 = tight
                    .iter()
                    .map(|&c| self.lte.station_backlog_bytes(Direction::Downlink, c))
                    .sum();
                while lte_backlog + seg <= lte_level {
                    let c = tight[self.splitter.rr_next % tight.len()];
                    self.splitter.rr_next += 1;
                    let frame = self.make_segment(c, Direction::Downlink);
                    lte_backlog += frame.payload_bytes;
                    self.lte
                        .enqueue(Direction::Downlink, c, frame, LtePathKind::Native, seg, now);
                }
                self.poke(AP);
            }
        }

        self.queue
            .schedule(now.add_us(self.cfg.splitter.control_epoch_us), Ev::SplitterTick);
    }

    // ----------------------------------------------------------------
    // Periodic sources
    // ----------------------------------------------------------------

    fn on_mgmt_tick(&mut self, client: StationId, now: SimTime) {
        if self.stations[client].associated {
            let frame = self.make_mgmt_frame(client);
            self.route_client_control(client, frame, TrafficClass::WifiMgmt);
        }
        self.queue
            .schedule(now.add_us(self.cfg.mgmt.period_us), Ev::MgmtTick { client });
    }

    fn on_source_tick(&mut self, client: StationId, direction: Direction, now: SimTime) {
        let SourceKind::ConstantRate { mbps } = self.cfg.traffic.source(direction) else { return };
        if self.stations[client].associated {
            let seg = self.make_segment(client, direction);
            match direction {
                Direction::Uplink => match route(self.stations[client].mode, TrafficClass::UlData) {
                    RoutedInterface::Wifi => {
                        self.stations[client].queue.push_back(seg);
                        self.poke(client);
                    }
                    RoutedInterface::PerScheduler => match self.choose(Direction::Uplink) {
                        ChosenSubflow::Wifi => {
                            self.stations[client].queue.push_back(seg);
                            self.poke(client);
                        }
                        ChosenSubflow::Lte => {
                            let bytes = seg.payload_bytes;
                            self.lte.enqueue(Direction::Uplink, client, seg, LtePathKind::Native, bytes, now);
                        }
                    },
                    RoutedInterface::LteNative => {
                        let bytes = seg.payload_bytes;
                        self.lte.enqueue(Direction::Uplink, client, seg, LtePathKind::Native, bytes, now);
                    }
                    RoutedInterface::LteTunnel => self.tunnel_enqueue(client, seg, now),
                    RoutedInterface::PerSplitter => unreachable!(),
                },
                Direction::Downlink => match route(self.stations[client].mode, TrafficClass::DlData) {
                    RoutedInterface::Wifi => {
                        self.stations[AP].queue.push_back(seg);
                        self.poke(AP);
                    }
                    RoutedInterface::PerScheduler => match self.choose(Direction::Downlink) {
                        ChosenSubflow::Wifi => {
                            self.stations[AP].queue.push_back(seg);
                            self.poke(AP);
                        }
                        ChosenSubflow::Lte => {
                            let bytes = seg.payload_bytes;
                            self.lte.enqueue(Direction::Downlink, client, seg, LtePathKind::Native, bytes, now);
                        }
                    },
                    RoutedInterface::PerSplitter => self.splitter.pending.push_back(seg),
                    RoutedInterface::LteNative => {
                        let bytes = seg.payload_bytes;
                        self.lte.enqueue(Direction::Downlink, client, seg, LtePathKind::Native, bytes, now);
                    }
                    RoutedInterface::LteTunnel => unreachable!(),
                },
            }
        }
        // Exact pacing: accumulate the fractional interval.
        let flows = match direction {
            Direction::Uplink => &mut self.ul_flows,
            Direction::Downlink => &mut self.dl_flows,
        };
        let interval = self.cfg.traffic.pacing_interval_us(mbps);
        flows[client].pace_next_us += interval;
        let at = SimTime::from_us(flows[client].pace_next_us.round() as u64);
        let at = at.max(now.add_us(1));
        self.queue.schedule(at, Ev::SourceTick { client, direction });
    }

    fn start_interferer_frame(&mut self, now: SimTime) {
        let Some(jam) = self.interferer else { return };
        let frame = Frame {
            kind: FrameKind::Data,
            src: jam,
            dst: jam,
            payload_bytes: 0,
            airtime_us: self.cfg.interferer.frame_us,
            requires_mac_ack: false,
            nav_duration_us: 0,
            seq: 0,
            flow: None,
            retransmission: false,
        };
        self.start_tx(jam, frame, now);
    }

    // ----------------------------------------------------------------
    // Report assembly
    // ----------------------------------------------------------------

    fn finalize(mut self) -> (MetricsReport, Option<Vec<TraceRecord>>) {
        let duration_us = self.duration.as_us();
        // Transmissions still on the air contribute their truncated airtime
        // so the channel accounting identity closes exactly.
        let leftovers: Vec<(Frame, u64)> = self
            .medium
            .active_iter()
            .map(|tx| (tx.frame.clone(), self.duration.since(tx.start)))
            .collect();
        for (frame, partial) in leftovers {
            self.account_airtime(&frame, partial);
        }
        self.medium.finalize(self.duration);

        let busy_us = self.medium.busy_union_us;
        let idle_us = duration_us - busy_us;
        let overlap_us = self.medium.overlap_us;

        let mbps = |bytes: u64| bytes as f64 * 8.0 / duration_us as f64;
        let c = &self.counters;
        let goodput = GoodputMetrics {
            ul_wifi_bytes: c.ul_wifi_bytes,
            dl_wifi_bytes: c.dl_wifi_bytes,
            ul_lte_bytes: c.ul_lte_bytes,
            dl_lte_bytes: c.dl_lte_bytes,
            ul_tunnel_bytes: c.ul_tunnel_bytes,
            ul_wifi_mbps: mbps(c.ul_wifi_bytes),
            dl_wifi_mbps: mbps(c.dl_wifi_bytes),
            ul_lte_mbps: mbps(c.ul_lte_bytes),
            dl_lte_mbps: mbps(c.dl_lte_bytes),
            ul_tunnel_mbps: mbps(c.ul_tunnel_bytes),
            total_mbps: mbps(c.ul_wifi_bytes + c.dl_wifi_bytes + c.ul_lte_bytes + c.dl_lte_bytes + c.ul_tunnel_bytes),
        };
        let cap_bytes = |mbps_cap: f64| mbps_cap * duration_us as f64 / 8.0;
        let ul_cap = cap_bytes(self.cfg.lte.capacity_mbps(Direction::Uplink));
        let dl_cap = cap_bytes(self.cfg.lte.capacity_mbps(Direction::Downlink));
        let lte = LteMetrics {
            ul_delivered_bytes: self.lte.delivered_bytes(Direction::Uplink),
            dl_delivered_bytes: self.lte.delivered_bytes(Direction::Downlink),
            ul_utilization: if ul_cap > 0.0 {
                self.lte.delivered_wire_bytes(Direction::Uplink) as f64 / ul_cap
            } else {
                0.0
            },
            dl_utilization: if dl_cap > 0.0 {
                self.lte.delivered_wire_bytes(Direction::Downlink) as f64 / dl_cap
            } else {
                0.0
            },
            ul_backlog_bytes_end: self.lte.backlog_bytes(Direction::Uplink),
            dl_backlog_bytes_end: self.lte.backlog_bytes(Direction::Downlink),
        };
        let tunnel = TunnelMetrics {
            tx_bytes: c.tunnel_tx_bytes,
            tx_frames: c.tunnel_tx_frames,
            ingested_bytes: c.tunnel_ingested_bytes,
            ingested_frames: c.tunnel_ingested_frames,
            in_flight_bytes_end: self.lte.tunnel_backlog_payload_bytes() + c.tunnel_in_transit_bytes,
            mean_latency_us: if c.tunnel_ingested_frames > 0 {
                c.tunnel_latency_sum_us as f64 / c.tunnel_ingested_frames as f64
            } else {
                0.0
            },
            late_acks: c.late_acks,
        };
        let wifi = WifiMetrics {
            busy_us,
            idle_us,
            overlap_us,
            airtime: c.airtime,
            collisions: c.collisions,
            retransmissions: c.retransmissions,
            drops: c.drops,
            tx_frames: c.tx_frames,
            delivered_frames: c.delivered_frames,
            duplicate_frames: c.duplicate_frames,
        };
        let cts = CtsMetrics {
            windows: c.cts_windows,
            reserved_us: c.cts_reserved_us,
            violations: c.cts_violations,
            window_list: c.cts_window_list.clone(),
        };
        let stations = self
            .stations
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != self.interferer)
            .map(|(i, s)| StationMetrics {
                id: i,
                role: if s.is_ap { "ap".into() } else { "client".into() },
                mode: (!s.is_ap).then_some(s.mode),
                associated: s.associated,
                ul_wifi_bytes: s.ul_wifi_bytes,
                dl_wifi_bytes: s.dl_wifi_bytes,
                ul_lte_bytes: s.ul_lte_bytes,
                dl_lte_bytes: s.dl_lte_bytes,
                tunneled_bytes: s.tunneled_bytes,
                collisions: s.collisions,
                retransmissions: s.retransmissions,
                drops: s.drops,
            })
            .collect();

        let report = MetricsReport {
            schema_version: REPORT_SCHEMA_VERSION,
            config: self.cfg,
            duration_us,
            goodput,
            wifi,
            lte,
            tunnel,
            cts,
            associations: self.associations,
            stations,
        };
        (report, self.trace)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum WifiOrLte {
    Wifi,
    Lte,
    Tunnel,
}

/// Run a validated scenario to completion.
pub fn run_scenario(cfg: &ScenarioConfig) -> MetricsReport {
    CellSim::new(cfg.clone(), false).run().0
}

/// Run with the event trace enabled.
pub fn run_scenario_traced(cfg: &ScenarioConfig) -> (MetricsReport, Vec<TraceRecord>) {
    let (report, trace) = CellSim::new(cfg.clone(), true).run();
    (report, trace.expect("trace enabled"))
}

/// One run per axis value with seeds derived as base seed + index, so rows
/// are independent of each other and of any values added later.
pub fn run_sweep(
    base: &ScenarioConfig,
    axis: crate::scenario::SweepAxis,
    values: &[String],
) -> Result<Vec<(String, MetricsReport)>, crate::scenario::ScenarioError> {
    let mut rows = Vec::with_capacity(values.len());
    for (i, value) in values.iter().enumerate() {
        let mut cfg = crate::scenario::apply_axis(base, axis, value)?;
        cfg.seed = crate::scenario::sweep_seed(base.seed, i);
        rows.push((value.clone(), run_scenario(&cfg)));
    }
    Ok(rows)
}
