//! Extremal coefficient functions on finite ground sets: validation,
//! max-linear realization, dependency sets, Bernstein transforms,
//! estimation and storm processes. See `book/` for a guided tour.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alternation;
pub mod depset;
pub mod error;
pub mod estimate;
pub mod io;
pub mod maxlinear;
pub mod numeric;
pub mod random;
pub mod setfun;
pub mod stationary;
pub mod transform;

pub use error::{Error, Result};

// The guide's code blocks run as doctests, one module per chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/set-functions.md")]
    mod set_functions {}
    #[doc = include_str!("../../../book/src/complete-alternation.md")]
    mod complete_alternation {}
    #[doc = include_str!("../../../book/src/max-linear.md")]
    mod max_linear {}
    #[doc = include_str!("../../../book/src/dependency-sets.md")]
    mod dependency_sets {}
    #[doc = include_str!("../../../book/src/bernstein.md")]
    mod bernstein {}
    #[doc = include_str!("../../../book/src/estimation.md")]
    mod estimation {}
    #[doc = include_str!("../../../book/src/storms.md")]
    mod storms {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
