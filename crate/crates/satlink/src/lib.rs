//! Satellite-to-ground optical channel and decoy-state QKD simulator.
//!
//! The crate models the full downlink/uplink loss chain for a ground station
//! communicating with a LEO satellite:
//!
//! * pass geometry (slant range, zenith angles, pass timelines) — [`orbit`]
//! * layered standard atmosphere and refractive-index profile — [`atmosphere`]
//! * ray bending and geometric path elongation — [`refraction`]
//! * aerosol/molecular extinction along the slant path — [`extinction`]
//! * turbulence strength profiles and integrated path statistics — [`turbulence`]
//! * beam-spread, wandering and transmittance moments — [`beam`]
//! * probability distribution of transmittance (PDT) — [`pdt`]
//! * finite-key decoy-state BB84 secret-key rate — [`qkd`]
//! * scenario configuration, sweeps and CSV/JSON output — [`scenario`]
//!
//! Supporting numerics (adaptive quadrature, special functions, seeded
//! parallel Monte Carlo, splines, root finding) live in [`numerics`].

pub mod atmosphere;
pub mod beam;
pub mod error;
pub mod extinction;
pub mod numerics;
pub mod orbit;
pub mod pdt;
pub mod qkd;
pub mod refraction;
pub mod scenario;
pub mod turbulence;

pub use error::{ModelError, Result};
