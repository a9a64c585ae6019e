//! Analytic DCF saturation-throughput model used as an independent check on
//! the MAC simulator.
//!
//! The model treats every station as saturated, decouples stations through a
//! per-slot transmission probability `tau`, and couples `tau` to the
//! conditional collision probability `p` through a fixed point. The basic
//! access (no RTS/CTS) variant is used, matching the simulator.

use crate::mac::MacParams;
use crate::phy::PhyParams;

pub const MAC_ACK_BYTES: u64 = 14;

/// Inputs of the analytic model. Frame-exchange durations are derived from
/// the same airtime arithmetic and MAC parameters the simulator uses, so a
/// comparison isolates the MAC dynamics rather than framing math.
#[derive(Debug, Clone, Copy)]
pub struct BianchiParams {
    /// Saturated station count.
    pub n: u32,
    /// Initial window size, `cw_min + 1`.
    pub w: u32,
    /// Backoff stages: `log2((cw_max+1)/(cw_min+1))`.
    pub m: u32,
    pub payload_bits: u64,
    pub slot_us: u64,
    /// Busy time of a successful exchange: data + SIFS + ACK + DIFS.
    pub t_success_us: u64,
    /// Busy time of a collision: data + DIFS (EIFS simplified to DIFS).
    pub t_collision_us: u64,
}

impl BianchiParams {
    /// Build model inputs from the simulator's own MAC/PHY parameters.
    pub fn from_cell(mac: &MacParams, phy: &PhyParams, n: u32, payload_bytes: u64) -> Self {
        let w = mac.cw_min + 1;
        let stages_ratio = (mac.cw_max + 1) / (mac.cw_min + 1);
        let m = stages_ratio.ilog2();
        let t_data = phy.frame_airtime_us(payload_bytes, phy.data_rate_mbps);
        let t_ack = phy.frame_airtime_us(MAC_ACK_BYTES, phy.control_rate_mbps);
        BianchiParams {
            n,
            w,
            m,
            payload_bits: payload_bytes * 8,
            slot_us: mac.slot_us,
            t_success_us: t_data + mac.sifs_us + t_ack + mac.difs_us,
            t_collision_us: t_data + mac.difs_us,
        }
    }
}

/// Per-station transmission probability, conditional collision probability,
/// and the resulting saturation throughput.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ThroughputEstimate {
    pub tau: f64,
    pub p: f64,
    pub s_mbps: f64,
}

/// Transmission probability for a given conditional collision probability.
fn tau_given_p(p: f64, w: f64, m: u32) -> f64 {
    let one_minus_2p = 1.0 - 2.0 * p;
    let geo = 1.0 - (2.0 * p).powi(m as i32);
    let denom = one_minus_2p * (w + 1.0) + p * w * geo;
    if denom.abs() < 1e-300 || one_minus_2p.abs() < 1e-12 {
        // Removable singularity at p = 1/2.
        return 4.0 / (2.0 * w + 2.0 + w * m as f64);
    }
    2.0 * one_minus_2p / denom
}

fn p_given_tau(tau: f64, n: u32) -> f64 {
    1.0 - (1.0 - tau).powi(n as i32 - 1)
}

/// Solve the coupled equations by bisection on `tau`.
///
/// The residual `tau - tau_given_p(p(tau))` is strictly increasing on (0,1)
/// and changes sign, so the bracket always closes; non-convergence would be
/// a programming error and asserts.
pub fn solve_tau(params: &BianchiParams) -> (f64, f64) {
    let w = params.w as f64;
    if params.n == 1 {
        return (2.0 / (w + 1.0), 0.0);
    }
    let residual = |tau: f64| tau - tau_given_p(p_given_tau(tau, params.n), w, params.m);
    let mut lo = 1e-12;
    let mut hi = 1.0 - 1e-12;
    assert!(residual(lo) < 0.0 && residual(hi) > 0.0, "fixed point bracket failed");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if residual(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = 0.5 * (lo + hi);
    let p = p_given_tau(tau, params.n);
    assert!(
        (tau - tau_given_p(p, w, params.m)).abs() < 1e-10,
        "fixed point did not converge"
    );
    (tau, p)
}

/// Saturation throughput in Mbps.
pub fn saturation_throughput(params: &BianchiParams) -> ThroughputEstimate {
    let (tau, p) = solve_tau(params);
    let n = params.n as f64;
    let p_tr = 1.0 - (1.0 - tau).powi(params.n as i32);
    let p_s = if p_tr > 0.0 {
        n * tau * (1.0 - tau).powi(params.n as i32 - 1) / p_tr
    } else {
        0.0
    };
    let denom_us = (1.0 - p_tr) * params.slot_us as f64
        + p_tr * p_s * params.t_success_us as f64
        + p_tr * (1.0 - p_s) * params.t_collision_us as f64;
    // bits per microsecond == Mbps
    let s_mbps = p_s * p_tr * params.payload_bits as f64 / denom_us;
    ThroughputEstimate { tau, p, s_mbps }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: u32, cw_min: u32) -> BianchiParams {
        let mac = MacParams { cw_min, ..MacParams::default() };
        BianchiParams::from_cell(&mac, &PhyParams::default(), n, 1500)
    }

    #[test]
    fn derived_exchange_durations() {
        let p = params(1, 15);
        assert_eq!(p.t_success_us, 244 + 16 + 28 + 34);
        assert_eq!(p.t_collision_us, 244 + 34);
        assert_eq!(p.w, 16);
        assert_eq!(p.m, 6);
    }

    #[test]
    fn single_station_closed_form() {
        let (tau, p) = solve_tau(&params(1, 15));
        assert_eq!(p, 0.0);
        assert!((tau - 2.0 / 17.0).abs() < 1e-12);
        assert!((tau - 0.117647).abs() < 1e-6);
    }

    #[test]
    fn fixed_point_residuals_vanish() {
        // The oracle of the oracle: substituting the solution back into both
        // defining equations leaves residuals below 1e-10.
        let prm = params(2, 15);
        let (tau, p) = solve_tau(&prm);
        let r1 = tau - tau_given_p(p, prm.w as f64, prm.m);
        let r2 = p - p_given_tau(tau, prm.n);
        assert!(r1.abs() < 1e-10, "tau residual {r1}");
        assert!(r2.abs() < 1e-10, "p residual {r2}");
    }

    #[test]
    fn residuals_vanish_across_n() {
        for n in [2, 5, 10, 20, 50] {
            let prm = params(n, 15);
            let (tau, p) = solve_tau(&prm);
            assert!((tau - tau_given_p(p, prm.w as f64, prm.m)).abs() < 1e-10);
            assert!((p - p_given_tau(tau, prm.n)).abs() < 1e-10);
        }
    }

    #[test]
    fn tau_monotone_decreasing_in_n() {
        let mut last = f64::INFINITY;
        for n in 1..=50 {
            let (tau, _) = solve_tau(&params(n, 15));
            assert!(tau < last, "tau not decreasing at n={n}");
            last = tau;
        }
    }

    #[test]
    fn throughput_degrades_with_many_stations() {
        let s10 = saturation_throughput(&params(10, 15)).s_mbps;
        let s20 = saturation_throughput(&params(20, 15)).s_mbps;
        let s50 = saturation_throughput(&params(50, 15)).s_mbps;
        assert!(s10 > s20 && s20 > s50, "{s10} {s20} {s50}");
    }

    #[test]
    fn larger_window_hurts_small_n_helps_large_n() {
        let small_cw15 = saturation_throughput(&params(2, 15)).s_mbps;
        let small_cw31 = saturation_throughput(&params(2, 31)).s_mbps;
        assert!(small_cw31 < small_cw15, "{small_cw31} vs {small_cw15}");
        let big_cw15 = saturation_throughput(&params(50, 15)).s_mbps;
        let big_cw31 = saturation_throughput(&params(50, 31)).s_mbps;
        assert!(big_cw31 > big_cw15, "{big_cw31} vs {big_cw15}");
    }

    #[test]
    fn zero_payload_zero_throughput() {
        let mac = MacParams::default();
        let prm = BianchiParams::from_cell(&mac, &PhyParams::default(), 5, 0);
        assert_eq!(saturation_throughput(&prm).s_mbps, 0.0);
    }

    #[test]
    fn throughput_below_perfect_scheduling_bound() {
        for n in [1, 2, 5, 10, 20, 50] {
            let prm = params(n, 15);
            let est = saturation_throughput(&prm);
            let bound = prm.payload_bits as f64 / prm.t_success_us as f64;
            assert!(est.s_mbps <= bound, "n={n}: {} > {bound}", est.s_mbps);
        }
    }
}
