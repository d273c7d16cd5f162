//! Finite-blocklength analysis of the two-user Gaussian interference channel
//! with heterogeneous blocklengths, early decoding and successive
//! interference cancellation.

pub mod budget;
pub mod early_decoding;
pub mod error;
pub mod fbl;
pub mod model;
pub mod region;
pub mod registry;
pub mod sim;

pub use error::{Error, Result};
