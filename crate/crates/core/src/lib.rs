//! Finite-state Markov model of chain-of-thought inference.
//!
//! A reasoning instance is an initial law `mu` and per-step kernels
//! `P(1), ..., P(T)`; the correct answer for start state `i` is the argmax of
//! row `i` of `Q = P(1) ... P(T)`. The crate provides exact kernel algebra,
//! spectral diagnostics, trajectory sampling, count-and-argmax estimators,
//! closed-form sample-size bounds, benchmark generators and a sweep harness.

pub mod benchgen;
pub mod bounds;
pub mod chain;
pub mod estimators;
pub mod harness;
pub mod sampling;
pub mod scalar;

use num_rational::BigRational;

pub type Kernel64 = chain::Kernel<f64>;
pub type Kernel32 = chain::Kernel<f32>;
pub type ExactKernel = chain::Kernel<BigRational>;
pub type Distribution64 = chain::Distribution<f64>;
pub type Distribution32 = chain::Distribution<f32>;
pub type ExactDistribution = chain::Distribution<BigRational>;
pub type Instance64 = chain::Instance<f64>;
pub type Instance32 = chain::Instance<f32>;
pub type ExactInstance = chain::Instance<BigRational>;
