//! Simulation and classification toolkit for heteroclinic cycles and
//! networks: the equivariant-cubic / Lotka-Volterra model family, an
//! adaptive integrator tailored to near-heteroclinic dynamics, analytic
//! stability indices, itinerary extraction, and empirical classification
//! of invariant sets under both the classical stability notions and the
//! visibility taxonomy.

pub mod analysis;
pub mod error;
pub mod export;
pub mod geometry;
pub mod integrator;
pub mod models;
pub mod presets;
pub mod visibility;

pub use error::{Error, Result};
