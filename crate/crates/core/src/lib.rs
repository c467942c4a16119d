//! Robust total-MMSE precoder/receiver design for the multiuser MIMO
//! downlink when only channel statistics (mean and Kronecker correlations)
//! are known, with a QPSK link-level simulator to measure BER and MSE.
//!
//! - [`channel`]: statistical CSI, correlation models, channel sampling
//! - [`robust`]: closed-form average MSE and the alternating robust design
//! - [`baseline`]: the conventional design that trusts the channel mean
//! - [`link`]: QPSK Monte Carlo simulation and the three sweeps
//! - [`config`], [`runner`]: experiment configuration and CSV output

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod channel;
pub mod config;
pub mod error;
pub mod linalg;
pub mod link;
pub mod robust;
pub mod runner;
pub mod streams;

pub use baseline::design_baseline;
pub use channel::{
    exp_correlation, sample_channel, to_equivalent, ChannelRealization, ChannelStats,
    ChannelStatsRaw, CorrelationMatrix, RicianFactor,
};
pub use config::{parse_config, Scheme, SimConfig};
pub use error::{Error, Result};
pub use linalg::{psd_sqrt, CMat, C64};
pub use robust::{design, SolverSettings, TransceiverDesign};
pub use runner::{run, Experiment, ExperimentRecord};
