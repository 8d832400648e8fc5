//! Eigen-deformation modes for parametric linear systems
//! `E ẋ = A(μ) x + b(μ)`: sampled and tracked eigenmodes, their
//! mass-weighted compression, mode interpolation and modal reduced-order
//! models.

// `!(x > 0.0)` deliberately rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod numerics;

pub use error::{Error, Result};
pub mod edm;
pub mod interp;
pub mod modal;
pub mod rom;
pub mod systems;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/systems.md")]
    mod systems {}
    #[doc = include_str!("../../../book/src/eigenproblems.md")]
    mod eigenproblems {}
    #[doc = include_str!("../../../book/src/databases.md")]
    mod databases {}
    #[doc = include_str!("../../../book/src/edms.md")]
    mod edms {}
    #[doc = include_str!("../../../book/src/roms.md")]
    mod roms {}
}
