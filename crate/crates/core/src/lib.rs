//! Positive solutions of the beam equation `u'''' + f(u) = 0` on `[0, 1]`
//! with `u'(0) = u'(1) = u''(0) = 0` and `u(0) = ∫₀¹ a(s) u(s) ds`.
//!
//! The problem is recast as the Hammerstein fixed-point equation `u = Au`
//! with an explicit kernel ([`kernel`]), discretised by the Nyström method
//! ([`solver`]) and cross-checked against an independent finite-difference
//! discretisation ([`oracle`]).

pub mod analysis;
pub mod cli;
pub mod config;
pub mod error;
pub mod expr;
pub mod kernel;
pub mod oracle;
pub mod quadrature;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
