//! Dissipative statistical solutions of 1D systems of conservation laws:
//! RKDG solver, space-time reconstruction, Monte-Carlo ensembles, exact
//! Wasserstein distances and a posteriori error estimation.

pub mod ensemble;
pub mod error;
pub mod estimator;
pub mod field;
pub mod harness;
pub mod mesh;
pub mod physics;
pub mod quadrature;
pub mod rkdg;
pub mod strec;
pub mod transport;

pub use error::{Error, Result};
