//! Classical simulator and experiment harness for dissipative quantum neural
//! networks: density-matrix training with closed-form update matrices,
//! graph-structured and generative-adversarial extensions, no-free-lunch
//! bound checks, and a shot-sampled parametrized-circuit backend.
//!
//! The crate is organised around a small dense complex linear-algebra core
//! ([`linalg`], [`state`], [`random`]) on which the network modules
//! ([`dqnn`], [`graph`], [`dqgan`], [`nfl`], [`circuit`]) are built. The
//! [`experiment`] module drives seeded, reproducible runs and CSV emission;
//! the `dqnn-lab` binary is a thin front end over it. Each major capability
//! also has a runnable example under `examples/`.

pub mod circuit;
pub mod dqgan;
pub mod dqnn;
mod error;
pub mod experiment;
pub mod graph;
pub mod linalg;
pub mod nfl;
pub mod random;
pub mod state;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, PureState, C64};
pub use random::RngStream;
pub use state::DensityMatrix;
