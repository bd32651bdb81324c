//! Parity-unfolded Reed-Muller magic-state factories.
//!
//! The crate builds the planar `uRM(m)` layouts that realise the Z-type checks of a
//! first-order quantum Reed-Muller code on a grid, verifies their code-theoretic
//! properties, samples the distillation circuit under biased circuit-level noise,
//! and prices the resulting gates against synthesis over Clifford+T style gate sets.
//!
//! Modules are layered bottom-up:
//!
//! * [`bits`] and [`codes`]: packed GF(2) linear algebra and Reed-Muller codes.
//! * [`layout`]: grid placement, boundary stabilizers, parity labels, export.
//! * [`verify`]: rank, label, distance and transversality checks.
//! * [`noisemodel`]: closed-form error analytics.
//! * [`sim`]: Pauli-frame Monte-Carlo of the distillation circuit.
//! * [`cost`]: qubit counts and space-time cost model.
//! * [`synth`]: single-qubit synthesis over `{Clifford, T}` and `{Clifford, T, sqrt(T)}`.

pub mod bits;
pub mod codes;
pub mod cost;
pub mod error;
pub mod layout;
pub mod noisemodel;
pub mod sim;
pub mod synth;
pub mod verify;

pub use error::{Error, Result};
