//! Loschmidt echo simulations of a spin-1/2 ladder.

pub mod analysis;
pub mod cli_io;
pub mod ensemble;
pub mod error;
pub mod hilbert;
pub mod linalg;
pub mod model;
pub mod onebody;
pub mod propagate;
pub mod protocols;

pub use error::{Error, Result};
