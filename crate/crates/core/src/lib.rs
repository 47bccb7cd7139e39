//! Euler-Maruyama simulation of `dX = b(X) dt + dL_t` where `L` is a
//! rotationally invariant `alpha`-stable process realised as Brownian motion
//! subordinated by an `alpha/2`-stable subordinator.
//!
//! The crate bundles exact noise samplers, the heat kernel of the noise, the
//! scheme itself with exact coarse/fine coupling, the discrete parametrix
//! expansion of the scheme's transition density, and Monte Carlo experiments
//! for occupation-time estimates and strong convergence rates.

pub mod error;
pub mod params;
pub mod rng;
pub mod stats;
pub mod quad;
pub mod levy;
pub mod density;
pub mod drift;
pub mod engine;
pub mod estimates;
pub mod convergence;
pub mod parametrix;
pub mod report;
pub mod selftest;

pub use error::{Error, Result};
pub use params::StableParams;
pub use rng::RngStream;

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
pub mod readme {}

#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/noise.md")]
    pub mod noise {}
    #[doc = include_str!("../../../book/src/heat_kernel.md")]
    pub mod heat_kernel {}
    #[doc = include_str!("../../../book/src/scheme.md")]
    pub mod scheme {}
    #[doc = include_str!("../../../book/src/parametrix.md")]
    pub mod parametrix {}
    #[doc = include_str!("../../../book/src/estimates.md")]
    pub mod estimates {}
    #[doc = include_str!("../../../book/src/convergence.md")]
    pub mod convergence {}
    #[doc = include_str!("../../../book/src/reproducibility.md")]
    pub mod reproducibility {}
}
