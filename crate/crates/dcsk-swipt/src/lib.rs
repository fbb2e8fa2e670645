//! Buffer-aided DCSK-SWIPT decode-and-forward relay.
//!
//! The signal path (`dcsk`, `channel`, `swipt`) is generic over the scalar
//! type; the Monte Carlo engine and the analytical evaluator work in `f64`.

pub mod channel;
pub mod dcsk;
pub mod linksel;
pub mod montecarlo;
pub mod real;
pub mod swipt;
pub mod theory;

pub use real::Real;

pub type ChaoticFrame = dcsk::ChaoticFrame<f64>;
pub type DecisionMetric = dcsk::DecisionMetric<f64>;
pub type ChannelProfile = channel::ChannelProfile<f64>;
pub type ChannelRealization<'a> = channel::ChannelRealization<'a, f64>;
pub type HarvestReport = swipt::HarvestReport<f64>;
pub type SwiptParams = swipt::SwiptParams<f64>;

pub use linksel::{Action, BufferState, Cause, LinkDecision};
pub use montecarlo::{Baseline, Protocol, RunResult, SystemParams};
pub use theory::{BufferChain, GaussHermiteRule, TheoryPoint};
