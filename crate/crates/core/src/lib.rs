//! Adaptive tube MPC for linear systems with polytopic parameter uncertainty.

pub mod adaptation;
pub mod artifact;
pub mod geometry;
pub mod linalg;
pub mod model;
pub mod mpc;
pub mod qp;
pub mod sim;
pub mod synthesis;
