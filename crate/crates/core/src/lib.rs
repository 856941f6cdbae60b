//! Numerical toolkit for Lᵖ convolution algebras on locally compact groups:
//! group models with Haar weights and modular functions, convolution,
//! tempered (convolution-operator) norms, Fourier analysis on finite abelian
//! groups, Følner sets, and a verification harness.

pub mod amenability;
pub mod convolution;
pub mod error;
pub mod group;
pub mod harness;
pub mod lp;
pub mod numeric;
pub mod spectral;
pub mod tempered;

pub use error::{LtpError, Result};
pub use group::{build_group, Element, GroupKind, GroupModel, GroupSpec};
pub use lp::{Exponent, GFunction};
