//! Numerics for geodesic periods of Hecke-Maass forms on compact arithmetic
//! hyperbolic surfaces: the group PSL2(R), real quadratic fields, quaternion
//! orders, the spherical transform and the amplified relative trace formula.

pub mod amplifier;
pub mod arith;
pub mod error;
pub mod hctransform;
pub mod psl2;
pub mod quadfield;
pub mod quadrature;
pub mod quatorder;

pub use error::{Error, Result};
