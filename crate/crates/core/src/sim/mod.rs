//! Monte Carlo simulator: Gaussian random codebooks, the standard-form
//! channel, and two-step SIC threshold decoding with early decoding at the
//! stronger user.

pub mod codebook;
pub mod decode;
pub mod density;
pub mod experiment;
pub mod rng;

pub use codebook::{generate_codebook, Codebook, Codewords, LazyCodebook};
pub use decode::{sic_decode_user1, sic_decode_user2, sic_decode_user2_window, Step1Window};
pub use density::{density_moments, density_variance_lower_bound, information_density, DensityMoments};
pub use experiment::{
    run_experiment, run_experiment_sequential, run_trial, CodebookMode, Estimate, SimCounts, SimExperiment,
    SimResult,
};
