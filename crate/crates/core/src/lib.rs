//! hetcell — a deterministic discrete-event simulator of a single Wi-Fi/LTE
//! heterogeneous cell.
//!
//! The simulator models a CSMA/CA (DCF) Wi-Fi channel with SINR-based frame
//! capture, an abstract scheduled LTE link, and four integration modes that
//! redirect uplink traffic classes from Wi-Fi onto LTE: standard (everything
//! on Wi-Fi), loose (multipath subflow scheduling), tight (native LTE uplink
//! plus a downlink bearer splitter), and hybrid (all uplink, including MAC
//! ACKs and management, tunneled through LTE back to the AP). An analytic
//! DCF saturation-throughput model serves as an independent validation
//! oracle for the MAC simulator, and link-budget coverage math quantifies
//! the range extension the hybrid mode unlocks.

pub mod frame;
pub mod kernel;
pub mod lte;
pub mod mac;
pub mod modes;
pub mod oracle;
pub mod phy;
pub mod report;
pub mod scenario;
pub mod sim;
pub mod traffic;

pub use frame::{Direction, Frame, FrameKind, StationId, AP};
pub use kernel::{EventHandle, EventQueue, RngStream, SimTime};
pub use lte::{Duplex, LteConfig, TunnelConfig, TunnelPath};
pub use mac::{MacParams, RetryLimit};
pub use modes::{AssociationOutcome, ClientCapability, Mode};
pub use oracle::{saturation_throughput, solve_tau, BianchiParams, ThroughputEstimate};
pub use phy::{LinkBudget, PathLossModel, PhyParams, Position};
pub use report::{MetricsReport, REPORT_SCHEMA_VERSION};
pub use scenario::{apply_axis, sweep_seed, ScenarioConfig, ScenarioError, SweepAxis};
pub use sim::{run_scenario, run_scenario_traced, TraceRecord};
pub use traffic::{AckPolicy, FlowSpec, SourceKind, Transport};
