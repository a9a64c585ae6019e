// scratch probe
use hetcell::modes::Mode;
use hetcell::scenario::ScenarioConfig;
use hetcell::traffic::SourceKind;

fn main() {
    // Late-ack halving: latency 50 ms, timeout 20 ms.
    for (lat, timeout) in [(None, None), (Some(50_000u64), Some(20_000u64))] {
        let mut cfg = ScenarioConfig::default();
        cfg.clients = 1;
        cfg.duration_s = 5.0;
        cfg.seed = 2;
        cfg.mode = Mode::Hybrid;
        cfg.traffic.uplink = SourceKind::None;
        cfg.tunnel.one_way_latency_us = lat;
        cfg.tunnel.hybrid_ack_timeout_us = timeout;
        cfg.validate().unwrap();
        let r = hetcell::run_scenario(&cfg);
        println!(
            "lat={:?} timeout={:?}: dl_wifi={:.3} retx={} dups={} late={} delivered={}",
            lat, timeout, r.goodput.dl_wifi_mbps, r.wifi.retransmissions,
            r.wifi.duplicate_frames, r.tunnel.late_acks, r.wifi.delivered_frames
        );
    }
}
