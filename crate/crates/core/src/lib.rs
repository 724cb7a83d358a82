//! Signal model, estimators, optimizers and detectors for a splitting
//! receiver that jointly processes coherently detected (I-Q) and
//! power-detected (P) copies of the received signal.
//!
//! Module map:
//!
//! - [`special`]: Q-function, `erfc`, `E1`, the exponentially modified Gaussian.
//! - [`channel`]: channel realizations, splitting ratios, MRC, the splitting-channel sampler.
//! - [`mi`]: mutual information (closed forms, quadrature, Monte-Carlo histogram, high-SNR forms).
//! - [`optimize`]: splitting-ratio optimization and simplified-receiver partitioning.
//! - [`modem`]: constellations, ML detection in I-Q-P space, SER simulation and approximations.

pub mod channel;
pub mod error;
pub mod mi;
pub mod modem;
pub mod optimize;
pub mod quadrature;
pub mod seed;
pub mod special;

pub use channel::{
    compute_theta, operating_snr, sample_channel_iid_rayleigh, sample_splitting_channel, ChannelRealization,
    LinkBudget, OperatingSnr, SplitConfig, SplitSample, SplittingChannel, ThetaPair,
};
pub use error::{Error, Result};
pub use num_complex::Complex64;
