//! Analytical evaluation: special functions, buffer chains, BER bounds and
//! average delays.

use thiserror::Error;

pub mod ber;
pub mod chain;
pub mod delay;
pub mod hermite;
pub mod meijer;
pub mod mixture;
pub mod special;

pub use ber::{ber_protocol1, ber_protocol2, link_selection_probs, BerComponents, TheoryPoint};
pub use chain::{steady_state, BufferChain, ChainProtocol};
pub use delay::{delay_protocol1, delay_protocol2, DelayComponents};
pub use hermite::GaussHermiteRule;
pub use meijer::meijer_g_2002;
pub use special::{erfc, reg_lower_gamma};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoryError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
}
