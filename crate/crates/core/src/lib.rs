//! Space-homogeneous DSMC for inelastic multi-species granular gases, with
//! the analytic energy, moment and entropy bounds as runtime checks.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` deliberately rejects NaN.

pub mod cli;
pub mod bounds;
pub mod engine;
pub mod kernels;
pub mod kinematics;
pub mod observables;
pub mod quadrature;
pub mod rng;
pub mod vector;
