//! Piecewise monotone transformations, their pushforward distributions and
//! the uniform-distribution-preserving (udp) transformations they induce.

mod piecewise;
mod pushforward;
mod udp;

pub use piecewise::{PiecewiseMonotone, RealFn, TransformSpec};
pub use pushforward::PushforwardDistribution;
pub use udp::{build_udp, v_transform, Generator, Preimage, RegularUdp, UdpSpec};
