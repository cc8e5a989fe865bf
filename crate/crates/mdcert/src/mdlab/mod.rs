//! Runnable mirror descent, gradient descent and projected mirror descent,
//! plus the objectives and distance-generating functions used to test the
//! certificates against actual iterates.
//!
//! ```
//! use mdcert::mdlab::{dgf_6_3, empirical_rate, quad_6_3, run_dt_md, DgfPair, SmoothFunction};
//! use nalgebra::DVector;
//!
//! let (f, dgf) = (quad_6_3(), dgf_6_3());
//! let x_opt = f.minimizer().unwrap();
//! let traj = run_dt_md(&f, &dgf, &DVector::zeros(2), 2.0 / (0.9576 + 11.4868), 400)?;
//! let fit = empirical_rate(&traj, &x_opt)?;
//! assert!(fit.rho < 0.85);
//! # Ok::<(), mdcert::Error>(())
//! ```

mod dgf;
mod functions;
mod rate;
mod registry;
mod run;
mod sets;

pub use dgf::{DgfPair, QuadraticDgf, SeparableDgf};
pub use functions::{sigmoid, softplus, spd_extremes, unit_softplus, Quadratic, SmoothFunction, SoftplusFamily};
pub use rate::{empirical_rate, rate_from_distances, RateEstimate, FLOOR, MIN_SAMPLES};
pub use registry::{
    dgf_6_3, quad_6_3, random_diagonal_dgf, random_quadratic, random_quadratic_dgf, random_rotation,
    random_separable_dgf, random_softplus, random_spd, registry, Registry,
};
pub use run::{
    bregman_projection, ct_step, inclusion_residual, run_ct_md, run_dt_md, run_gd, run_proj_md, Trajectory,
};
pub use sets::ConstraintSet;
