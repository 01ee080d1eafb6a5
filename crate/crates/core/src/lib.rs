pub mod basis;
pub mod copula;
pub mod error;
pub mod estimate;
pub mod numeric;
pub mod population;
pub mod transform;
pub mod udpinv;

pub use error::{Error, Result};
