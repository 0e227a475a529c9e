//! Polyphase transmit waveform design for MIMO radar space-time adaptive
//! processing.
//!
//! The design maximizes the output SINR against clutter, jamming and noise
//! by cyclic optimization over a relaxed waveform covariance (kept in
//! factored form `UᴴU`) and the receive filter, then recovers finite-alphabet
//! waveforms by Gaussian randomization.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod covariance;
pub mod error;
pub mod evaluation;
pub mod linalg;
pub mod model;
pub mod optimizer;
pub mod presets;
pub mod reference;
pub mod synthesis;
pub mod validation;

pub use covariance::{
    ClutterSpectralTables, CommutationPermutation, CovarianceModel, FastCovariance, FilterVector,
    ShiftMatrix, WaveformFactor,
};
pub use error::{Error, Result};
pub use evaluation::{
    doppler_sweep, exhaustive_oracle, true_sinr, OracleOptions, OracleReport, SweepSpec,
};
pub use linalg::{CMatrix, CVector, C64};
pub use model::{ArrayGeometry, ClutterConfig, JammerConfig, PulseParams, Scenario, TargetParams};
pub use optimizer::{design, DesignOutput, OptimizerConfig, RunTrace};
pub use synthesis::{CandidatePool, PolyphaseWaveform, Selection, SelectionMethod};
