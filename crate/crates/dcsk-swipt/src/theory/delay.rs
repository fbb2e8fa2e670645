//! Average packet delay: queueing time plus silent-slot terms.

use serde::Serialize;

use super::ber::LinkModel;
use super::chain::{steady_state, BufferChain, ChainProtocol, BALANCE_TOL};
use super::TheoryError;
use crate::montecarlo::SystemParams;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct DelayComponents {
    /// Mean buffer occupancy Q.
    pub queue_length: f64,
    /// Packets admitted per slot R.
    pub arrival_rate: f64,
    /// Queueing delay Q/R.
    pub t_qt: f64,
    /// Empty-buffer shortage slots.
    pub t_st: f64,
    /// Empty-buffer slots where R→D wins (Protocol 2 only).
    pub t_cs: f64,
    pub total: f64,
}

/// Σ_{k=1}^{J−1} (J−k)·ξ^k + J, the bracket shared by both queue-length forms.
fn weighted_bracket(j: usize, xi: f64) -> f64 {
    let jf = j as f64;
    if (xi - 1.0).abs() < BALANCE_TOL {
        return jf * (jf - 1.0) / 2.0 + jf;
    }
    let r = 1.0 - 1.0 / xi;
    (xi.powi(j as i32 - 1) - 1.0) / (r * r) - (jf - 1.0) / r + jf
}

/// Mean occupancy of the Protocol 1 chain from its full-state probability.
pub fn queue_length_protocol1(capacity: usize, p_sr: f64, p_rd: f64, p_es: f64, p_full: f64) -> f64 {
    let j = capacity as f64;
    let xi = p_rd / ((1.0 - p_es) * p_sr);
    let inner = weighted_bracket(capacity, xi) - j;
    p_full * (inner / p_rd + j)
}

/// Mean occupancy of the Protocol 2 chain from its full-state probability.
pub fn queue_length_protocol2(capacity: usize, p_rd: f64, p_es: f64, p_full: f64) -> f64 {
    let xi = p_rd / ((1.0 - p_es) * (1.0 - p_rd));
    p_full * weighted_bracket(capacity, xi)
}

fn silent_ratio(p: f64) -> f64 {
    if p >= 1.0 {
        f64::INFINITY
    } else {
        p / (1.0 - p)
    }
}

/// Delay terms for a solved chain.
pub fn delay_components(chain: &BufferChain) -> Result<DelayComponents, TheoryError> {
    let (j, p_sr, p_rd, p_es) = (chain.capacity, chain.p_sr, chain.p_rd, chain.p_es);
    let p_full = chain.p_full();
    let s = (1.0 - p_es) * p_sr;
    let (q, r, t_cs) = match chain.protocol {
        ChainProtocol::One => {
            (queue_length_protocol1(j, p_sr, p_rd, p_es, p_full), s * (1.0 - p_full) + p_rd * chain.p_empty(), 0.0)
        }
        ChainProtocol::Two => {
            (queue_length_protocol2(j, p_rd, p_es, p_full), s * (1.0 - p_full), silent_ratio(chain.p_empty()))
        }
    };
    // the geometric forms break down when a link never fires
    let q = if q.is_finite() && q >= 0.0 { q } else { chain.mean_occupancy() };
    let t_qt = if r > 0.0 { q / r } else { f64::INFINITY };
    let t_st = silent_ratio(p_es);
    Ok(DelayComponents { queue_length: q, arrival_rate: r, t_qt, t_st, t_cs, total: t_qt + t_st + t_cs })
}

fn chain_for(params: &SystemParams, protocol: ChainProtocol) -> Result<BufferChain, TheoryError> {
    let m = LinkModel::new(params)?;
    let p_sr = super::ber::selection_probability(m.l_sr, m.l_rd, m.scale_sr, m.scale_rd, m.delta);
    steady_state(protocol, params.buffer_size, p_sr, 1.0 - p_sr, m.p_es()?)
}

/// Average delay of Protocol 1 in slots.
pub fn delay_protocol1(params: &SystemParams) -> Result<DelayComponents, TheoryError> {
    delay_components(&chain_for(params, ChainProtocol::One)?)
}

/// Average delay of Protocol 2 in slots.
pub fn delay_protocol2(params: &SystemParams) -> Result<DelayComponents, TheoryError> {
    delay_components(&chain_for(params, ChainProtocol::Two)?)
}
