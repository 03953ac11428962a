//! Symbolic dynamics of the geodesic flow on finite graphs of finite groups:
//! Bass-Serre tree expansion, geodesic subshifts, acylindricity certificates,
//! boundary shadow densities, Markov codings with stationary measures and
//! entropy, and mixing verdicts.

pub mod error;
pub mod group;
pub mod density;
pub mod gog;
pub mod parse;
pub mod shift;
pub mod spectral;
pub mod tree;
pub mod word;
pub mod zoo;

pub use error::{Error, Result};
