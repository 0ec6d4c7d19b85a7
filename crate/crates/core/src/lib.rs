//! Constructive frequent hypercyclicity for weighted backward shifts.
//!
//! The crate builds, term by term, a vector `x` for the operator `T = ωB`
//! (a multiple `|ω| > 1` of the unilateral backward shift on `ℓ_p` or `c₀`)
//! whose orbit visits every non-empty open set along a set of positive lower
//! density, yet whose return set into the half-space
//! `U₀ = {y : Re y₀ > 0}` has no asymptotic density.
//!
//! Everything that can be exact is exact: sets of integers are described by
//! closed-form predicates, densities are big rationals, and vector
//! coefficients are Gaussian rationals. Floating point only appears in
//! norms, each of which carries a certified truncation bound.
//!
//! The crate is organised bottom-up:
//!
//! * [`densities`]: counting and density estimators over integer sets.
//! * [`dyadic_sets`]: the separated block families `D_s`, the geometric sums
//!   `S(a, b)` and their limits, the checkpoints `N_l`, and verifiers for
//!   every separation and counting property the construction relies on.
//! * [`shift_model`]: the operator, its backward chain, lazily represented
//!   vectors and certified norms.
//! * [`fhc_vector`]: the assembled vector, its return set, the predicted
//!   lower/upper density limits and the density experiment.
//!
//! The companion book (under `book/` in the repository) walks through the
//! construction chapter by chapter; its code listings are compiled and run as
//! doctests of this crate.
//!
//! ```
//! use irregular_orbits::dyadic_sets::{SeparationParams, LevelSet};
//! use irregular_orbits::densities::IntegerSet;
//!
//! let params = SeparationParams::minimal(1).unwrap();
//! let d1 = LevelSet::restricted(params, 1).unwrap();
//! assert_eq!(d1.members_up_to(256), vec![40, 136, 144, 152, 160, 168, 176, 184]);
//! ```

pub mod densities;
pub mod dyadic_sets;
mod error;
pub mod fhc_vector;
pub mod report;
pub mod scalar;
pub mod shift_model;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/densities.md")]
    mod densities {}
    #[doc = include_str!("../../../book/src/dyadic-blocks.md")]
    mod dyadic_blocks {}
    #[doc = include_str!("../../../book/src/geometric-sums.md")]
    mod geometric_sums {}
    #[doc = include_str!("../../../book/src/shift-operator.md")]
    mod shift_operator {}
    #[doc = include_str!("../../../book/src/assembled-vector.md")]
    mod assembled_vector {}
    #[doc = include_str!("../../../book/src/irregular-orbit.md")]
    mod irregular_orbit {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
