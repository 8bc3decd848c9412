//! Resource-block allocation for multi-slice Open RAN deployments.
//!
//! The pipeline is: generate or load a [`net::Scenario`], build the binary
//! [`model::ConstrainedModel`], solve it with one of the backends in
//! [`solve`] (the annealer goes through [`qubo`]), then check the result with
//! [`verify::verify_allocation`].

pub mod bench;
pub mod model;
pub mod net;
pub mod qubo;
pub mod solve;
pub mod verify;
