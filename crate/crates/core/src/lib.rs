//! Numerical laboratory for residual networks viewed as dynamical systems:
//! discrete and continuous forward maps, Rademacher complexity estimators,
//! generalization-bound calculators and small-scale experiment harnesses.

pub mod activation;
pub mod resnet;
pub mod rademacher;
pub mod train;
pub mod bounds;
pub mod seed;
pub mod experiments;
pub mod io;
