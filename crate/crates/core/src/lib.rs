//! Time-dependent Ornstein–Uhlenbeck evolution systems
//! `dX = (A(t)X + f(t))dt + B(t)dW`.
//!
//! The crate computes the transition kernels `P_{s,t}` (Gaussian with mean
//! `U(t,s)x + g(t,s)` and covariance `Q(t,s)`), the Floquet data of periodic
//! coefficients, the evolution system of measures `{ν_t}`, decay and
//! sharpness of `P_{s,t}` towards `ν_s`, the spectrum of the Poincaré map
//! `P_{t,t+T}` on `L²(ν_t)`, logarithmic Sobolev inequalities and the
//! hypercontractivity exponent. A Monte Carlo integrator of the SDE serves
//! as an independent oracle.
//!
//! All numerical code is generic over [`Real`] (`f32` or `f64`); the
//! aliases at the crate root fix `f64`.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod coefficients;
pub mod error;
pub mod hyper;
pub mod kernel;
pub mod linalg;
pub mod measures;
pub mod polynomial;
pub mod propagator;
pub mod quadrature;
pub mod scalar;
pub mod sde;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::Real;

/// `f64` instances of the generic types.
pub type CoefficientField = coefficients::CoefficientField<f64>;
pub type Profile = coefficients::Profile<f64>;
pub type Propagator = propagator::Propagator<f64>;
pub type FloquetData = propagator::FloquetData<f64>;
pub type GaussianMeasure = measures::GaussianMeasure<f64>;
pub type TransitionKernel = measures::TransitionKernel<f64>;
pub type EvolutionSystem = measures::EvolutionSystem<f64>;
pub type EntranceLaw = measures::EntranceLaw<f64>;
pub type Polynomial = polynomial::Polynomial<f64>;
pub type Observable = kernel::Observable<f64>;
