//! Reverse reconciliation with soft information for PAM constellations
//! over AWGN: channel model, softening transform, soft metrics, secret-key
//! rate analysis, a syndrome-aware LDPC decoder and a Monte-Carlo
//! reconciliation harness.

pub mod channel;
pub mod constellation;
pub mod error;
pub mod ldpc;
pub mod metrics;
pub mod quad;
pub mod sim;
pub mod skr;
pub mod snr;
pub mod special;
pub mod transform;
pub mod validate;

pub use channel::{AwgnChannel, ChannelModel, DecisionGrid, NoiseModel, ThresholdStrategy};
pub use constellation::Constellation;
pub use error::{Error, Result};
pub use transform::{Configuration, EquivalenceClass, SofteningTransform};
