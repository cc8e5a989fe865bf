//! Certified convergence rates for mirror descent.
//!
//! Mirror descent is rewritten as a Lur'e system ([`reform`]), its gradient
//! nonlinearities are described by integral quadratic constraints
//! ([`iqc`]), and the resulting matrix inequalities ([`lmi`]) are decided by
//! a small dense solver ([`sdp`]). [`certify`] searches for the best rate a
//! given multiplier family can prove, and [`mdlab`] runs the algorithms so
//! the certified numbers can be checked against real trajectories.
//!
//! ```
//! use mdcert::certify::{ct_certified_rate, MultiplierMode, RateQuery};
//! use mdcert::model::{Mode, ProblemSpec};
//!
//! let spec = ProblemSpec::from_constants(1.0, 10.0, 1.0, 1.0, 1.0, Mode::Continuous)?;
//! let cert = ct_certified_rate(&RateQuery::new(spec, MultiplierMode::Default))?;
//! assert!((cert.rho - 1.0).abs() < 1e-6);
//! # Ok::<(), mdcert::Error>(())
//! ```

pub mod certify;
pub mod error;
pub mod iqc;
pub mod lmi;
pub mod mdlab;
pub mod model;
pub mod reform;
pub mod sdp;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/getting-started.md")]
    mod getting_started {}
    #[doc = include_str!("../../../book/src/lure.md")]
    mod lure {}
    #[doc = include_str!("../../../book/src/multipliers.md")]
    mod multipliers {}
    #[doc = include_str!("../../../book/src/certificates.md")]
    mod certificates {}
    #[doc = include_str!("../../../book/src/projected.md")]
    mod projected {}
    #[doc = include_str!("../../../book/src/laboratory.md")]
    mod laboratory {}
}
