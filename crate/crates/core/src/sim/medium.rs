//! Shared-medium bookkeeping: who hears what, per-station carrier-sense
//! views, and SINR capture tracking for every in-flight frame.
//!
//! Interference is tracked incrementally: each arrival remembers the worst
//! concurrent interference sum it ever saw, so the capture rule (minimum
//! SINR over the frame's full duration) is decided exactly at frame end
//! without replaying intervals.

use crate::frame::{Frame, StationId};
use crate::kernel::SimTime;
use crate::phy::{dbm_to_mw, decodes, LinkBudget};

#[derive(Debug)]
pub struct ActiveTx {
    pub id: u64,
    pub src: StationId,
    pub frame: Frame,
    pub start: SimTime,
    pub end: SimTime,
}

#[derive(Debug)]
struct Arrival {
    tx_id: u64,
    rx_dbm: f64,
    mw: f64,
    /// Receiver was transmitting at some point during this arrival
    /// (half-duplex) — never decodable.
    corrupt: bool,
    /// Worst interference sum (mW, noise excluded) seen so far.
    worst_mw: f64,
}

/// One station's view of the medium.
#[derive(Debug)]
pub struct StationView {
    /// Number of audible ongoing transmissions (including our own).
    pub cs_busy: u32,
    /// When the current busy period started (valid while `cs_busy > 0`).
    pub busy_since: SimTime,
    /// When the view last became idle.
    pub idle_since: SimTime,
    pub transmitting: bool,
    arrivals: Vec<Arrival>,
}

/// Outcome of one frame at one receiver, reported at frame end.
#[derive(Debug)]
pub struct Reception {
    pub station: StationId,
    pub decoded: bool,
    pub rx_dbm: f64,
}

pub struct Medium {
    /// Receive power in dBm, indexed `[tx][rx]`.
    rx_dbm: Vec<Vec<f64>>,
    cs_threshold_dbm: f64,
    budget: LinkBudget,
    pub views: Vec<StationView>,
    active: Vec<ActiveTx>,
    next_tx_id: u64,
    /// Union of all transmission intervals on the channel.
    pub busy_union_us: u64,
    /// Channel time counted more than once by overlapping transmissions.
    pub overlap_us: u64,
    last_transition: SimTime,
}

impl Medium {
    pub fn new(rx_dbm: Vec<Vec<f64>>, cs_threshold_dbm: f64, budget: LinkBudget) -> Self {
        let n = rx_dbm.len();
        Medium {
            rx_dbm,
            cs_threshold_dbm,
            budget,
            views: (0..n)
                .map(|_| StationView {
                    cs_busy: 0,
                    busy_since: SimTime::ZERO,
                    idle_since: SimTime::ZERO,
                    transmitting: false,
                    arrivals: Vec::new(),
                })
                .collect(),
            active: Vec::new(),
            next_tx_id: 0,
            busy_union_us: 0,
            overlap_us: 0,
            last_transition: SimTime::ZERO,
        }
    }

    pub fn rx_dbm(&self, tx: StationId, rx: StationId) -> f64 {
        self.rx_dbm[tx][rx]
    }

    pub fn active_iter(&self) -> impl Iterator<Item = &ActiveTx> {
        self.active.iter()
    }

    /// Integrate busy and overlap time up to `now` with the current active
    /// count, then move the accounting boundary.
    fn account_until(&mut self, now: SimTime) {
        let dt = now.since(self.last_transition);
        let k = self.active.len() as u64;
        if k >= 1 {
            self.busy_union_us += dt;
        }
        if k >= 2 {
            self.overlap_us += (k - 1) * dt;
        }
        self.last_transition = now;
    }

    /// True when `station`'s view was busy strictly before `now` — the test
    /// a station applies at its own slot boundary. A transmission that
    /// started exactly at `now` is not yet sensed (CCA needs a slot), which
    /// is what makes simultaneous slot-boundary transmissions collide.
    pub fn busy_before(&self, station: StationId, now: SimTime) -> bool {
        let v = &self.views[station];
        v.cs_busy > 0 && v.busy_since < now
    }

    /// Start a transmission. Returns its id, the end time, and every
    /// station whose carrier-sense view transitioned idle -> busy.
    pub fn begin_tx(&mut self, src: StationId, frame: Frame, now: SimTime) -> (u64, SimTime, Vec<StationId>) {
        self.account_until(now);
        let id = self.next_tx_id;
        self.next_tx_id += 1;
        let end = now.add_us(frame.airtime_us);

        let mut went_busy = Vec::new();
        for r in 0..self.views.len() {
            if r == src {
                let view = &mut self.views[r];
                view.transmitting = true;
                // Half-duplex: anything arriving at a transmitter is lost.
                for a in &mut view.arrivals {
                    a.corrupt = true;
                }
                if view.cs_busy == 0 {
                    view.busy_since = now;
                    went_busy.push(r);
                }
                view.cs_busy += 1;
                continue;
            }
            let rx = self.rx_dbm[src][r];
            let mw = dbm_to_mw(rx);
            let view = &mut self.views[r];
            let sum_before: f64 = view.arrivals.iter().map(|a| a.mw).sum();
            // The new frame raises every in-progress arrival's interference.
            for a in &mut view.arrivals {
                a.worst_mw = a.worst_mw.max(sum_before - a.mw + mw);
            }
            view.arrivals.push(Arrival {
                tx_id: id,
                rx_dbm: rx,
                mw,
                corrupt: view.transmitting,
                worst_mw: sum_before,
            });
            if rx >= self.cs_threshold_dbm {
                if view.cs_busy == 0 {
                    view.busy_since = now;
                    went_busy.push(r);
                }
                view.cs_busy += 1;
            }
        }

        self.active.push(ActiveTx { id, src, frame, start: now, end });
        (id, end, went_busy)
    }

    /// Finish a transmission. Returns the transmission record, the stations
    /// whose views went idle, and the per-receiver capture outcomes.
    pub fn end_tx(&mut self, tx_id: u64, now: SimTime) -> (ActiveTx, Vec<StationId>, Vec<Reception>) {
        self.account_until(now);
        let idx = self
            .active
            .iter()
            .position(|t| t.id == tx_id)
            .expect("unknown transmission id");
        let tx = self.active.swap_remove(idx);

        let mut newly_idle = Vec::new();
        let mut receptions = Vec::new();
        for r in 0..self.views.len() {
            if r == tx.src {
                let view = &mut self.views[r];
                view.transmitting = false;
                view.cs_busy -= 1;
                if view.cs_busy == 0 {
                    view.idle_since = now;
                    newly_idle.push(r);
                }
                continue;
            }
            let audible = self.rx_dbm[tx.src][r] >= self.cs_threshold_dbm;
            let view = &mut self.views[r];
            let pos = view
                .arrivals
                .iter()
                .position(|a| a.tx_id == tx_id)
                .expect("arrival tracked");
            let arrival = view.arrivals.swap_remove(pos);
            let decoded = !arrival.corrupt && decodes(arrival.rx_dbm, arrival.worst_mw, &self.budget);
            receptions.push(Reception { station: r, decoded, rx_dbm: arrival.rx_dbm });
            if audible {
                view.cs_busy -= 1;
                if view.cs_busy == 0 {
                    view.idle_since = now;
                    newly_idle.push(r);
                }
            }
        }
        (tx, newly_idle, receptions)
    }

    /// Close the busy/overlap accounting at the end of the run.
    pub fn finalize(&mut self, t_end: SimTime) {
        self.account_until(t_end);
    }
}
