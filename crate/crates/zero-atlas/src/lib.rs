//! Limit laws for zeros of random analytic functions.
//!
//! Random series `G(z) = sum_k xi_k f_k z^k` with i.i.d. noise `xi_k` and
//! deterministic coefficients whose log-magnitudes follow a radial profile
//! have a universal limiting zero distribution: rescaled by `1/n`, the
//! empirical zero measure converges to a rotationally invariant measure
//! whose radial CDF is the derivative of the convex conjugate of the
//! profile. This crate builds the whole pipeline:
//!
//! * [`schedule`] — radial profiles `(f, u = -log f)` and concrete
//!   coefficient schedules, all in log domain;
//! * [`conjugate`] — the numerical Legendre-Fenchel engine, with jump and
//!   constancy analysis of the derivative;
//! * [`limitlaw`] — the limiting measure: radial CDF, density, atoms, gaps,
//!   and sampling;
//! * [`sampler`] — noise models, truncation degrees, stable evaluation;
//! * [`roots`] — certified simultaneous-iteration root finding plus an
//!   argument-principle counting oracle;
//! * [`empirics`] — KS statistics and Monte Carlo comparison campaigns;
//! * [`potential`] — equilibrium potentials of truncated laws, energy
//!   functional, flatness certificates, orthogonal-weight moments;
//! * [`report`] — reproducible text/JSON serialization.

pub mod conjugate;
pub mod empirics;
pub mod error;
pub mod limitlaw;
pub mod potential;
pub mod report;
pub mod roots;
pub mod sampler;
pub mod schedule;

pub use conjugate::{conjugate, conjugate_analyzed, convex_hull, left_derivative, ConjugateProfile};
pub use error::{Error, Result};
pub use limitlaw::LimitMeasure;
pub use sampler::{instantiate, NoiseDistribution, RandomFunctionInstance};
pub use schedule::{
    coefficients, coefficients_truncated, schedule_for_window, CoefficientSchedule, ProfileKind,
    RadialProfile,
};

/// Default seed used by reproducible-by-default entry points.
pub const DEFAULT_SEED: u64 = 0x5EED;
