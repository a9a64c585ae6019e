//! Scenario configuration: the declarative description of one simulation
//! run, its documented defaults, parsing from TOML, and validation.
//!
//! The all-defaults configuration is the reference scenario: an 802.11a
//! cell at 54 Mbps with saturated bidirectional traffic, ten clients on a
//! 5 m circle, standard mode.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lte::{LteConfig, TunnelConfig};
use crate::mac::MacParams;
use crate::modes::{ClientCapability, Mode};
use crate::phy::{PathLossModel, PhyParams, Position};
use crate::traffic::{AckPolicy, FlowSpec, SchedulerWeights, SourceKind};

/// Maximum CTS-to-Self airtime reservation.
pub const MAX_CTS_WINDOW_US: u64 = 32_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ApConfig {
    pub position: [f64; 2],
    /// Full (integrated-SSID) EIRP; 36 dBm is the 4 W regulatory limit.
    pub tx_power_dbm: f64,
    /// Power of the standard-access SSID beacon, kept near client power so
    /// standard association range tracks client uplink range.
    pub standard_ssid_power_dbm: f64,
}

impl Default for ApConfig {
    fn default() -> Self {
        ApConfig {
            position: [0.0, 0.0],
            tx_power_dbm: 36.0,
            standard_ssid_power_dbm: 16.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Placement {
    /// Clients evenly spread on a circle around the AP: equidistant from
    /// the AP, all within carrier-sense range of each other.
    Circle { radius_m: f64 },
    /// All clients at the same point, `distance_m` from the AP.
    Colocated { distance_m: f64 },
    /// Explicit client positions; the client count follows the list.
    Explicit { positions: Vec<[f64; 2]> },
}

impl Default for Placement {
    fn default() -> Self {
        Placement::Circle { radius_m: 5.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClientDefaults {
    pub tx_power_dbm: f64,
    pub capability: ClientCapability,
}

impl Default for ClientDefaults {
    fn default() -> Self {
        ClientDefaults {
            tx_power_dbm: 16.0, // 40 mW
            capability: ClientCapability::Integrated,
        }
    }
}

/// Per-client override of the global defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClientOverride {
    pub index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capability: Option<ClientCapability>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx_power_dbm: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetConfig {
    pub sensitivity_dbm: f64,
    pub noise_floor_dbm: f64,
    pub capture_threshold_db: f64,
    /// Receive power above which the medium is sensed busy; distinct from
    /// the capture threshold so hidden-node collisions can arise.
    pub cs_threshold_dbm: f64,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        BudgetConfig {
            sensitivity_dbm: -76.0,
            noise_floor_dbm: -95.0,
            capture_threshold_db: 10.0,
            cs_threshold_dbm: -82.0,
        }
    }
}

/// Periodic small-frame management load (probe/association refresh) per
/// client, so the tight-vs-hybrid uplink distinction is measurable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MgmtConfig {
    pub enabled: bool,
    pub frame_bytes: u64,
    pub period_us: u64,
}

impl Default for MgmtConfig {
    fn default() -> Self {
        MgmtConfig { enabled: true, frame_bytes: 100, period_us: 500_000 }
    }
}

/// Downlink-only period schedule: the AP reserves the channel with
/// CTS-to-Self every `period_us` for `window_us`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DownlinkOnlyConfig {
    pub enabled: bool,
    pub period_us: u64,
    pub window_us: u64,
}

impl Default for DownlinkOnlyConfig {
    fn default() -> Self {
        DownlinkOnlyConfig { enabled: false, period_us: 100_000, window_us: 32_000 }
    }
}

/// Loose-mode subflow scheduler configuration: scoring weights plus the
/// administrative costs per interface and direction. The default Wi-Fi
/// uplink cost steers uplink data onto the LTE subflow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubflowConfig {
    pub alpha: f64,
    pub beta: f64,
    pub rtt_ref_us: f64,
    pub bw_ref_mbps: f64,
    pub wifi_uplink_cost: f64,
    pub lte_uplink_cost: f64,
    pub wifi_downlink_cost: f64,
    pub lte_downlink_cost: f64,
}

impl Default for SubflowConfig {
    fn default() -> Self {
        SubflowConfig {
            alpha: 0.0,
            beta: 0.0,
            rtt_ref_us: 10_000.0,
            bw_ref_mbps: 10.0,
            wifi_uplink_cost: 10.0,
            lte_uplink_cost: 0.0,
            wifi_downlink_cost: 0.0,
            lte_downlink_cost: 0.0,
        }
    }
}

impl SubflowConfig {
    pub fn weights(&self) -> SchedulerWeights {
        SchedulerWeights {
            alpha: self.alpha,
            beta: self.beta,
            rtt_ref_us: self.rtt_ref_us,
            bw_ref_mbps: self.bw_ref_mbps,
        }
    }
}

/// Tight-mode bearer splitter control loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitterConfig {
    pub control_epoch_us: u64,
}

impl Default for SplitterConfig {
    fn default() -> Self {
        SplitterConfig { control_epoch_us: 10_000 }
    }
}

/// Optional co-channel interferer: a non-contending transmitter that jams
/// the cell from `start_s` on, used to exercise drain-rate reactions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterfererConfig {
    pub enabled: bool,
    pub position: [f64; 2],
    pub tx_power_dbm: f64,
    pub start_s: f64,
    pub frame_us: u64,
}

impl Default for InterfererConfig {
    fn default() -> Self {
        InterfererConfig {
            enabled: false,
            position: [10.0, 0.0],
            tx_power_dbm: 36.0,
            start_s: 5.0,
            frame_us: 2_000,
        }
    }
}

/// Full declarative description of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub clients: usize,
    pub mode: Mode,
    pub duration_s: f64,
    pub seed: u64,
    pub ap: ApConfig,
    pub placement: Placement,
    pub client_defaults: ClientDefaults,
    #[serde(rename = "client", skip_serializing_if = "Vec::is_empty")]
    pub client_overrides: Vec<ClientOverride>,
    pub mac: MacParams,
    pub phy: PhyParams,
    pub path_loss: PathLossModel,
    pub budget: BudgetConfig,
    pub lte: LteConfig,
    pub tunnel: TunnelConfig,
    pub traffic: FlowSpec,
    pub ack_policy: AckPolicy,
    pub mgmt: MgmtConfig,
    pub downlink_only: DownlinkOnlyConfig,
    pub subflow: SubflowConfig,
    pub splitter: SplitterConfig,
    pub interferer: InterfererConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            clients: 10,
            mode: Mode::Standard,
            duration_s: 10.0,
            seed: 1,
            ap: ApConfig::default(),
            placement: Placement::default(),
            client_defaults: ClientDefaults::default(),
            client_overrides: Vec::new(),
            mac: MacParams::default(),
            phy: PhyParams::default(),
            path_loss: PathLossModel::default(),
            budget: BudgetConfig::default(),
            lte: LteConfig::default(),
            tunnel: TunnelConfig::default(),
            traffic: FlowSpec::default(),
            ack_policy: AckPolicy::default(),
            mgmt: MgmtConfig::default(),
            downlink_only: DownlinkOnlyConfig::default(),
            subflow: SubflowConfig::default(),
            splitter: SplitterConfig::default(),
            interferer: InterfererConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationError {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for ValidationError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid scenario:\n{}", .0.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<ValidationError>),
}

fn is_pow2_minus_1(v: u32) -> bool {
    (v as u64 + 1).is_power_of_two()
}

impl ScenarioConfig {
    /// Parse and validate a scenario file, filling every default.
    pub fn parse(text: &str) -> Result<ScenarioConfig, ScenarioError> {
        let mut cfg: ScenarioConfig = toml::from_str(text)?;
        cfg.resolve_client_count();
        cfg.validate().map_err(ScenarioError::Invalid)?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    fn resolve_client_count(&mut self) {
        if let Placement::Explicit { positions } = &self.placement {
            self.clients = positions.len();
        }
    }

    /// Full validation; every violation is reported with its field path.
    pub fn validate(&self) -> Result<(), Vec<ValidationError>> {
        let mut errors = Vec::new();
        let mut err = |path: &str, message: String| {
            errors.push(ValidationError { path: path.to_string(), message });
        };

        if !(self.duration_s > 0.0) {
            err("duration_s", "duration must be positive".into());
        }
        if self.clients == 0 {
            err("clients", "at least one client is required".into());
        }
        if !is_pow2_minus_1(self.mac.cw_min) {
            err("mac.cw_min", "cw_min must be 2^k − 1".into());
        }
        if !is_pow2_minus_1(self.mac.cw_max) {
            err("mac.cw_max", "cw_max must be 2^k − 1".into());
        }
        if !is_pow2_minus_1(self.mac.integrated_cw_min) {
            err("mac.integrated_cw_min", "integrated_cw_min must be 2^k − 1".into());
        }
        if self.mac.integrated_cw_min > self.mac.cw_max {
            err("mac.integrated_cw_min", "integrated_cw_min must not exceed cw_max".into());
        }
        if self.mac.cw_min > self.mac.cw_max {
            err("mac.cw_min", format!("cw_min ({}) must not exceed cw_max ({})", self.mac.cw_min, self.mac.cw_max));
        }
        if self.mac.slot_us == 0 {
            err("mac.slot_us", "slot time must be positive".into());
        }
        if self.mac.difs_us != self.mac.sifs_us + 2 * self.mac.slot_us {
            err(
                "mac.difs_us",
                format!(
                    "difs_us must equal sifs_us + 2*slot_us ({} + 2*{} = {})",
                    self.mac.sifs_us,
                    self.mac.slot_us,
                    self.mac.sifs_us + 2 * self.mac.slot_us
                ),
            );
        }
        if !(self.phy.data_rate_mbps > 0.0) {
            err("phy.data_rate_mbps", "data rate must be positive".into());
        }
        if !(self.phy.control_rate_mbps > 0.0) {
            err("phy.control_rate_mbps", "control rate must be positive".into());
        }
        if self.phy.symbol_us == 0 {
            err("phy.symbol_us", "symbol duration must be positive".into());
        }
        if !(self.path_loss.exponent > 0.0) {
            err("path_loss.exponent", "path loss exponent must be positive".into());
        }
        if self.path_loss.reference_loss_db < 0.0 {
            err("path_loss.reference_loss_db", "reference loss must be non-negative".into());
        }
        if !(self.path_loss.reference_distance_m > 0.0) {
            err("path_loss.reference_distance_m", "reference distance must be positive".into());
        }
        if self.budget.sensitivity_dbm <= self.budget.noise_floor_dbm {
            err("budget.sensitivity_dbm", "sensitivity must lie above the noise floor".into());
        }
        if self.lte.ul_capacity_mbps < 0.0 || self.lte.dl_capacity_mbps < 0.0 || self.lte.total_capacity_mbps < 0.0 {
            err("lte", "capacities must be non-negative".into());
        }
        if !(0.0..=1.0).contains(&self.lte.ul_fraction) {
            err("lte.ul_fraction", "TDD uplink fraction must lie in [0, 1]".into());
        }
        if self.lte.scheduler_epoch_us == 0 {
            err("lte.scheduler_epoch_us", "scheduler epoch must be positive".into());
        }
        if self.traffic.segment_bytes == 0 {
            err("traffic.segment_bytes", "segment size must be positive".into());
        }
        for (dir, source) in [("uplink", self.traffic.uplink), ("downlink", self.traffic.downlink)] {
            if let SourceKind::ConstantRate { mbps } = source {
                if !(mbps > 0.0) {
                    err(&format!("traffic.{dir}"), "constant rate must be positive".into());
                }
            }
        }
        if self.ack_policy.segments_per_ack == 0 {
            err("ack_policy.segments_per_ack", "segments_per_ack must be at least 1".into());
        }
        if self.ack_policy.ack_bytes == 0 {
            err("ack_policy.ack_bytes", "ack_bytes must be positive".into());
        }
        if self.downlink_only.window_us > MAX_CTS_WINDOW_US {
            err(
                "downlink_only.window_us",
                format!(
                    "CTS-to-Self reservation of {} us exceeds the 32 ms (32000 us) limit",
                    self.downlink_only.window_us
                ),
            );
        }
        if self.downlink_only.enabled && self.downlink_only.period_us <= self.downlink_only.window_us {
            err("downlink_only.period_us", "period must exceed the reservation window".into());
        }
        if self.mgmt.enabled && self.mgmt.period_us == 0 {
            err("mgmt.period_us", "management period must be positive".into());
        }
        if self.interferer.enabled && self.interferer.frame_us == 0 {
            err("interferer.frame_us", "interferer frame duration must be positive".into());
        }
        if !(self.subflow.rtt_ref_us > 0.0) {
            err("subflow.rtt_ref_us", "rtt reference must be positive".into());
        }
        if !(self.subflow.bw_ref_mbps > 0.0) {
            err("subflow.bw_ref_mbps", "bandwidth reference must be positive".into());
        }
        if self.splitter.control_epoch_us == 0 {
            err("splitter.control_epoch_us", "control epoch must be positive".into());
        }
        for (i, o) in self.client_overrides.iter().enumerate() {
            if o.index >= self.clients {
                err(
                    &format!("client[{i}].index"),
                    format!("index {} out of range for {} clients", o.index, self.clients),
                );
            }
        }
        if let Placement::Explicit { positions } = &self.placement {
            if positions.is_empty() {
                err("placement.positions", "explicit placement needs at least one position".into());
            }
        }

        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }

    pub fn duration_us(&self) -> u64 {
        (self.duration_s * 1e6).round() as u64
    }

    /// Concrete per-client view after placement and overrides.
    pub fn resolved_clients(&self) -> Vec<ResolvedClient> {
        let mut out: Vec<ResolvedClient> = (0..self.clients)
            .map(|i| {
                let position = match &self.placement {
                    Placement::Circle { radius_m } => {
                        let angle = 2.0 * std::f64::consts::PI * i as f64 / self.clients as f64;
                        Position::new(
                            self.ap.position[0] + radius_m * angle.cos(),
                            self.ap.position[1] + radius_m * angle.sin(),
                        )
                    }
                    Placement::Colocated { distance_m } => {
                        Position::new(self.ap.position[0] + distance_m, self.ap.position[1])
                    }
                    Placement::Explicit { positions } => {
                        Position::new(positions[i][0], positions[i][1])
                    }
                };
                ResolvedClient {
                    position,
                    preferred_mode: self.mode,
                    capability: self.client_defaults.capability,
                    tx_power_dbm: self.client_defaults.tx_power_dbm,
                }
            })
            .collect();
        for o in &self.client_overrides {
            let c = &mut out[o.index];
            if let Some(m) = o.mode {
                c.preferred_mode = m;
            }
            if let Some(p) = o.position {
                c.position = Position::new(p[0], p[1]);
            }
            if let Some(cap) = o.capability {
                c.capability = cap;
            }
            if let Some(p) = o.tx_power_dbm {
                c.tx_power_dbm = p;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedClient {
    pub position: Position,
    pub preferred_mode: Mode,
    pub capability: ClientCapability,
    pub tx_power_dbm: f64,
}

impl ScenarioConfig {
    /// Connection-manager decision for one client: which SSIDs it decodes
    /// at its distance from the AP and whether its uplink reaches the AP
    /// decide the mode it associates in, if any.
    pub fn resolve_association(&self, client: &ResolvedClient) -> crate::modes::AssociationOutcome {
        let ap = Position::new(self.ap.position[0], self.ap.position[1]);
        let loss = self.path_loss.path_loss_db(client.position.distance_to(&ap), false);
        let sees_standard = self.ap.standard_ssid_power_dbm - loss >= self.budget.sensitivity_dbm;
        let sees_integrated = self.ap.tx_power_dbm - loss >= self.budget.sensitivity_dbm;
        let uplink = client.tx_power_dbm - loss >= self.budget.sensitivity_dbm;
        crate::modes::select_mode(client.preferred_mode, client.capability, sees_standard, sees_integrated, uplink)
    }
}

/// Sweepable scenario axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    NClients,
    CwMin,
    RetryLimit,
    Mode,
    UlFraction,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::NClients => "n_clients",
            SweepAxis::CwMin => "cw_min",
            SweepAxis::RetryLimit => "retry_limit",
            SweepAxis::Mode => "mode",
            SweepAxis::UlFraction => "ul_fraction",
        }
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "n_clients" => Ok(SweepAxis::NClients),
            "cw_min" => Ok(SweepAxis::CwMin),
            "retry_limit" => Ok(SweepAxis::RetryLimit),
            "mode" => Ok(SweepAxis::Mode),
            "ul_fraction" => Ok(SweepAxis::UlFraction),
            other => Err(format!(
                "unknown sweep axis '{other}' (expected n_clients|cw_min|retry_limit|mode|ul_fraction)"
            )),
        }
    }
}

/// Apply one sweep-axis value on top of a base config; the result is
/// re-validated so invalid axis values surface the same errors as a
/// hand-written scenario.
pub fn apply_axis(
    base: &ScenarioConfig,
    axis: SweepAxis,
    value: &str,
) -> Result<ScenarioConfig, ScenarioError> {
    use crate::mac::{RetryLimit, RetryLimitName};
    let mut cfg = base.clone();
    let bad = |msg: String| ScenarioError::Invalid(vec![ValidationError { path: axis.name().into(), message: msg }]);
    match axis {
        SweepAxis::NClients => {
            cfg.clients = value.parse().map_err(|_| bad(format!("not a client count: '{value}'")))?;
            if matches!(cfg.placement, Placement::Explicit { .. }) {
                return Err(bad("cannot sweep n_clients with explicit placement".into()));
            }
        }
        SweepAxis::CwMin => {
            cfg.mac.cw_min = value.parse().map_err(|_| bad(format!("not a window size: '{value}'")))?;
        }
        SweepAxis::RetryLimit => {
            cfg.mac.retry_limit = if value == "unlimited" {
                RetryLimit::Named(RetryLimitName::Unlimited)
            } else {
                RetryLimit::Count(value.parse().map_err(|_| bad(format!("not a retry limit: '{value}'")))?)
            };
        }
        SweepAxis::Mode => {
            cfg.mode = value.parse().map_err(bad)?;
        }
        SweepAxis::UlFraction => {
            cfg.lte.ul_fraction = value.parse().map_err(|_| bad(format!("not a fraction: '{value}'")))?;
        }
    }
    cfg.validate().map_err(ScenarioError::Invalid)?;
    Ok(cfg)
}

/// Seed of the i-th sweep point: derived as base seed + index so adding a
/// value never perturbs earlier rows.
pub fn sweep_seed(base_seed: u64, index: usize) -> u64 {
    base_seed.wrapping_add(index as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mac::{RetryLimit, RetryLimitName};

    #[test]
    fn minimal_file_fills_documented_defaults() {
        let cfg = ScenarioConfig::parse(
            "clients = 10\nmode = \"standard\"\nduration_s = 10.0\nseed = 1\n",
        )
        .unwrap();
        assert_eq!(cfg, ScenarioConfig::default());
        assert_eq!(cfg.mac.cw_min, 15);
        assert_eq!(cfg.phy.data_rate_mbps, 54.0);
        assert_eq!(cfg.budget.sensitivity_dbm, -76.0);
        assert_eq!(cfg.tunnel.per_packet_overhead_bytes, 40);
    }

    #[test]
    fn cw_min_not_power_of_two_minus_one_is_rejected() {
        let err = ScenarioConfig::parse("[mac]\ncw_min = 14\n").unwrap_err();
        let ScenarioError::Invalid(errors) = err else { panic!("expected validation error") };
        assert!(errors.iter().any(|e| e.path == "mac.cw_min" && e.message.contains("2^k − 1")));
    }

    #[test]
    fn cts_window_over_32ms_is_rejected_citing_bound() {
        let err = ScenarioConfig::parse("[downlink_only]\nenabled = true\nwindow_us = 33000\n").unwrap_err();
        let ScenarioError::Invalid(errors) = err else { panic!("expected validation error") };
        let e = errors.iter().find(|e| e.path == "downlink_only.window_us").unwrap();
        assert!(e.message.contains("32 ms"), "message: {}", e.message);
        // The boundary itself is accepted.
        assert!(ScenarioConfig::parse("[downlink_only]\nenabled = true\nwindow_us = 32000\n").is_ok());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ScenarioConfig::parse("not_a_key = 3\n").unwrap_err();
        assert!(matches!(err, ScenarioError::Parse(_)));
    }

    #[test]
    fn inconsistent_difs_is_rejected() {
        let err = ScenarioConfig::parse("[mac]\ndifs_us = 50\n").unwrap_err();
        let ScenarioError::Invalid(errors) = err else { panic!() };
        assert!(errors.iter().any(|e| e.path == "mac.difs_us"));
    }

    #[test]
    fn multiple_violations_all_reported() {
        let err = ScenarioConfig::parse("duration_s = -1.0\n[mac]\ncw_min = 14\n").unwrap_err();
        let ScenarioError::Invalid(errors) = err else { panic!() };
        assert!(errors.len() >= 2, "{errors:?}");
    }

    #[test]
    fn retry_limit_accepts_unlimited() {
        let cfg = ScenarioConfig::parse("[mac]\nretry_limit = \"unlimited\"\n").unwrap();
        assert_eq!(cfg.mac.retry_limit, RetryLimit::Named(RetryLimitName::Unlimited));
        let cfg = ScenarioConfig::parse("[mac]\nretry_limit = 3\n").unwrap();
        assert_eq!(cfg.mac.retry_limit, RetryLimit::Count(3));
    }

    #[test]
    fn toml_roundtrip_preserves_config() {
        let mut cfg = ScenarioConfig::default();
        cfg.clients = 7;
        cfg.mode = Mode::Tight;
        cfg.downlink_only.enabled = true;
        cfg.client_overrides.push(ClientOverride {
            index: 3,
            mode: Some(Mode::Hybrid),
            position: Some([40.0, 0.0]),
            capability: None,
            tx_power_dbm: None,
        });
        let text = cfg.to_toml_string();
        let back = ScenarioConfig::parse(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn explicit_placement_sets_client_count() {
        let cfg = ScenarioConfig::parse(
            "clients = 99\n[placement]\nkind = \"explicit\"\npositions = [[1.0, 0.0], [2.0, 0.0]]\n",
        )
        .unwrap();
        assert_eq!(cfg.clients, 2);
        let resolved = cfg.resolved_clients();
        assert_eq!(resolved.len(), 2);
        assert_eq!(resolved[1].position, Position::new(2.0, 0.0));
    }

    #[test]
    fn circle_placement_is_equidistant_from_ap() {
        let cfg = ScenarioConfig::parse("clients = 6\n").unwrap();
        let ap = Position::new(0.0, 0.0);
        for c in cfg.resolved_clients() {
            assert!((c.position.distance_to(&ap) - 5.0).abs() < 1e-9);
        }
    }

    #[test]
    fn override_out_of_range_is_rejected() {
        let err = ScenarioConfig::parse("clients = 2\n[[client]]\nindex = 5\nmode = \"hybrid\"\n").unwrap_err();
        let ScenarioError::Invalid(errors) = err else { panic!() };
        assert!(errors.iter().any(|e| e.path.starts_with("client[0]")));
    }

    #[test]
    fn sweep_axis_application() {
        let base = ScenarioConfig::default();
        let swept = apply_axis(&base, SweepAxis::NClients, "25").unwrap();
        assert_eq!(swept.clients, 25);
        let swept = apply_axis(&base, SweepAxis::CwMin, "31").unwrap();
        assert_eq!(swept.mac.cw_min, 31);
        let swept = apply_axis(&base, SweepAxis::Mode, "hybrid").unwrap();
        assert_eq!(swept.mode, Mode::Hybrid);
        let swept = apply_axis(&base, SweepAxis::RetryLimit, "unlimited").unwrap();
        assert_eq!(swept.mac.retry_limit, RetryLimit::Named(RetryLimitName::Unlimited));
        // Invalid axis values reuse scenario validation.
        assert!(apply_axis(&base, SweepAxis::CwMin, "14").is_err());
        assert!(apply_axis(&base, SweepAxis::UlFraction, "1.5").is_err());
    }

    #[test]
    fn sweep_seeds_derive_from_index() {
        assert_eq!(sweep_seed(10, 0), 10);
        assert_eq!(sweep_seed(10, 3), 13);
    }
}
