//! Hamiltonian vector fields of functions on model surfaces, their flows and
//! shift maps, Kronrod-Reeb graphs, the centralizer of a function realized as
//! graph functions, and volume obstructions for symplectic isotopies.
//!
//! The crate is `no_std` and needs only `alloc`. Float math goes through
//! `num_traits::Float` (libm); when `std` is also linked its inherent methods
//! take precedence, which is why those imports carry `allow(unused_imports)`.

#![no_std]
// `!(x <= tol)` is used on purpose so that NaN fails.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod builtin;
pub mod dynamics;
pub mod error;
pub mod fields;
pub mod function;
pub mod geometry;
pub mod math;
pub mod obstruction;
pub mod reeb;

pub use error::{Error, Result};
pub use geometry::{SurfaceModel, SurfacePoint};
pub use math::{Mat2, Vec2};
