//! Simulation and analysis toolkit for spin-polarization correlation
//! experiments: classical probability fixtures, the two-photon quantum
//! oracle, hidden-variable model families, a switched-settings Kolmogorov
//! model, pairing of one-sided records and the statistics layer.

pub mod classical;
pub mod error;
pub mod feasibility;
pub mod hv;
pub mod inference;
pub mod pairing;
pub mod quantum;
pub mod sampling;
pub mod switching;

pub use error::{Error, Result};
pub use feasibility::{embed_pairwise, Embedding, PairTable};
pub use hv::{Event, Outcome, SettingPair, Side};
pub use inference::{ChshReport, CorrelationEstimate, Decision, TestReport, ZeroPolicy};
pub use pairing::{PairedSample, PairingPolicy, TimeSeries, WindowPolicy, WindowRule};
pub use quantum::{ChshAngles, DensityMatrix};
pub use sampling::{derive_stream, DiscreteDistribution, RngStream};
pub use switching::{SwitchRecord, SwitchingTargets};
