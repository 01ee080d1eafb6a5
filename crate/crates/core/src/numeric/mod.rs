//! Numerical building blocks shared by the analysis modules.

pub mod normal;
pub mod optim;
pub mod poly;
pub mod quad;
pub mod rng;
pub mod roots;
pub mod stats;
