//! BER bounds of the two link-selection protocols.
//!
//! Every link term is an average of the Gaussian-approximation kernel
//! q(γ) = ½·erfc(γ/√(8γ + 8β)) over the law of the link SNR. The laws are
//! kept exact: Σh² is Gamma(L, Ω) per hop, and conditioning on the selection
//! event or removing the decoding cost P_I keeps the harvested powers inside
//! signed Gamma mixtures. The S→R terms are then one-dimensional integrals
//! and the R→D terms are integrals against Gamma-product densities.

use std::sync::OnceLock;

use log::warn;
use serde::Serialize;

use super::chain::{steady_state, BufferChain, ChainProtocol};
use super::delay::{delay_components, DelayComponents};
use super::hermite::GaussHermiteRule;
use super::meijer::ln_gamma_product_pdf;
use super::mixture::{signed_log_sum, GammaMixture};
use super::special::{factorial, ln_erfc, ln_gamma, reg_lower_gamma};
use super::TheoryError;
use crate::montecarlo::SystemParams;

/// Relative M=30 / M=60 disagreement above which a warning is attached.
pub const CONVERGENCE_TOL: f64 = 1e-6;
/// Clamping by more than this is reported.
const CLAMP_WARN: f64 = 1e-9;

/// ln q(γ) for the kernel with spreading factor β.
pub fn ln_q(gamma: f64, beta: f64) -> f64 {
    if gamma.is_infinite() {
        return f64::NEG_INFINITY;
    }
    if !(gamma > 0.0) {
        return 0.5f64.ln();
    }
    0.5f64.ln() + ln_erfc(gamma / (8.0 * gamma + 8.0 * beta).sqrt())
}

/// q(γ) = ½·erfc(γ/√(8γ+8β)).
pub fn q_ga(gamma: f64, beta: f64) -> f64 {
    ln_q(gamma, beta).exp()
}

/// Hop statistics shared by every term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkModel {
    pub l_sr: u32,
    pub l_rd: u32,
    /// Per-path mean of P_SR,EH (Gamma scale).
    pub scale_sr: f64,
    /// Per-path mean of P_DR,EH.
    pub scale_rd: f64,
    pub p_i: f64,
    pub delta: f64,
    pub beta: f64,
    pub w1: f64,
    pub w2: f64,
}

impl LinkModel {
    pub fn new(params: &SystemParams) -> Result<Self, TheoryError> {
        params.validate().map_err(|e| TheoryError::Domain(e.to_string()))?;
        for (name, taps) in [("S-R", &params.taps_sr), ("R-D", &params.taps_rd)] {
            if !taps.is_equal_power() {
                return Err(TheoryError::Domain(format!(
                    "{name} taps must have equal mean powers for the Gamma law of the channel gain"
                )));
            }
        }
        let m = Self {
            l_sr: params.taps_sr.powers.len() as u32,
            l_rd: params.taps_rd.powers.len() as u32,
            scale_sr: params.mean_harvest_sr(),
            scale_rd: params.mean_harvest_dr(),
            p_i: params.p_i,
            delta: params.delta,
            beta: params.beta as f64,
            w1: params.w1(),
            w2: params.w2(),
        };
        if !(m.scale_sr > 0.0 && m.scale_rd > 0.0) {
            return Err(TheoryError::Domain("average harvested powers must be positive".into()));
        }
        Ok(m)
    }

    pub fn p_es(&self) -> Result<f64, TheoryError> {
        if self.p_i == 0.0 {
            return Ok(0.0);
        }
        reg_lower_gamma(self.l_sr as f64, self.p_i / self.scale_sr)
    }

    /// Mean γ_SR, W1·L·P̄_SR,EH.
    pub fn mean_gamma_sr(&self) -> f64 {
        self.w1 * self.l_sr as f64 * self.scale_sr
    }

    fn harvest_sr(&self) -> GammaMixture {
        GammaMixture::single(self.l_sr as f64, self.scale_sr)
    }

    fn harvest_rd(&self) -> GammaMixture {
        GammaMixture::single(self.l_rd as f64, self.scale_rd)
    }

    /// Density of P_SR,EH on the S→R selection event (mass P_SR).
    fn sr_selected(&self) -> GammaMixture {
        if self.delta == 0.0 {
            return self.harvest_sr();
        }
        self.harvest_sr().times_cdf(self.l_rd, self.scale_rd, 1.0 / self.delta)
    }

    /// Density of P_DR,EH on the R→D selection event (mass P_RD).
    fn rd_selected(&self) -> GammaMixture {
        self.harvest_rd().times_cdf(self.l_sr, self.scale_sr, self.delta)
    }
}

/// Pr(P_SR,EH ≥ δ·P_DR,EH) as a finite sum, and its complement.
pub fn link_selection_probs(params: &SystemParams) -> Result<(f64, f64), TheoryError> {
    let m = LinkModel::new(params)?;
    let p = selection_probability(m.l_sr, m.l_rd, m.scale_sr, m.scale_rd, m.delta);
    Ok((p, 1.0 - p))
}

/// P_SR for Gamma(l_sr, s_sr) against δ·Gamma(l_rd, s_rd).
pub fn selection_probability(l_sr: u32, l_rd: u32, s_sr: f64, s_rd: f64, delta: f64) -> f64 {
    if delta == 0.0 {
        return 1.0;
    }
    let lr = l_rd as f64;
    let den = (delta * s_rd + s_sr).ln();
    let p: f64 = (0..l_sr)
        .map(|l| {
            let lf = l as f64;
            (lr * s_sr.ln() + lf * (delta * s_rd).ln() + ln_gamma(lr + lf)
                - ln_gamma(lr)
                - factorial(l).ln()
                - (lf + lr) * den)
                .exp()
        })
        .sum();
    p.clamp(0.0, 1.0)
}

fn normalized_or_err(m: &GammaMixture, what: &str) -> Result<GammaMixture, TheoryError> {
    let mass = m.mass();
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(TheoryError::Domain(format!("{what} has no probability mass")));
    }
    Ok(m.normalized())
}

/// E{q(W1·(P_I + U))} for U with the given (normalized) law.
fn sr_average(model: &LinkModel, law: &GammaMixture, shift: f64, rule: &GaussHermiteRule) -> f64 {
    let (lo, hi) = law.scale_range();
    let ln_g = |kappa: f64| {
        let u = kappa.exp();
        ln_q(model.w1 * (shift + u), model.beta) + law.ln_pdf(u) + kappa
    };
    rule.integrate_ln(ln_g, (lo.ln() - 25.0, hi.ln() + 5.0))
}

/// E{q(W2·P_R·ζ)} for independent P_R and ζ with the given (normalized) laws.
fn rd_average(model: &LinkModel, arrival: &GammaMixture, departure: &GammaMixture, rule: &GaussHermiteRule) -> f64 {
    let pairs: Vec<(f64, f64, f64, f64)> = arrival
        .components
        .iter()
        .flat_map(|a| {
            departure.components.iter().map(move |d| (a.weight * d.weight, a.shape, d.shape, a.scale * d.scale))
        })
        .collect();
    let lo = pairs.iter().map(|p| p.3).fold(f64::INFINITY, f64::min);
    let hi = pairs.iter().map(|p| p.3).fold(0.0, f64::max);
    let max_shape = pairs.iter().map(|p| p.1 * p.2).fold(1.0, f64::max);
    let ln_g = |kappa: f64| {
        let z = kappa.exp();
        let ln_f = signed_log_sum(pairs.iter().map(|&(w, a, b, c)| (w, ln_gamma_product_pdf(z, a, b, c))));
        ln_q(model.w2 * z, model.beta) + ln_f + kappa
    };
    rule.integrate_ln(ln_g, (lo.ln() - 30.0, (hi * max_shape).ln() + 8.0))
}

/// Conditional link BERs for every combination of arrival and departure law.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct LinkTerms {
    /// S→R BER of a packet admitted on the selection event.
    pub sr_cond: f64,
    /// S→R BER of a packet admitted without comparison (empty buffer).
    pub sr_uncond: f64,
    /// R→D BER, selection-admitted packet sent on the R→D selection event.
    pub rd_cc: f64,
    /// R→D BER, packet admitted at an empty buffer, sent on selection.
    pub rd_uc: f64,
    /// R→D BER, selection-admitted packet forced out of a full buffer.
    pub rd_cu: f64,
    /// R→D BER with both laws unconditioned.
    pub rd_uu: f64,
    /// (1 − P_ES)·∫ q(W1 v) f(v) Pr(δ·P_DR,EH ≤ v) dv, with no decodability cut.
    pub k1: f64,
}

impl LinkTerms {
    fn values(&self) -> [f64; 7] {
        [self.sr_cond, self.sr_uncond, self.rd_cc, self.rd_uc, self.rd_cu, self.rd_uu, self.k1]
    }
}

/// Evaluates all link terms with one quadrature rule.
pub fn link_terms(model: &LinkModel, rule: &GaussHermiteRule) -> Result<LinkTerms, TheoryError> {
    let p_es = model.p_es()?;
    let sel = model.sr_selected();
    let k1 = (1.0 - p_es) * sr_average(model, &sel, 0.0, rule);

    let arr_u = normalized_or_err(&model.harvest_sr().shifted(model.p_i), "harvest above P_I")?;
    let dep_u = model.harvest_rd();
    // a selection event of zero probability never carries packets; any law will do
    let arr_c = normalized_or_err(&sel.shifted(model.p_i), "S-R selection").unwrap_or_else(|_| arr_u.clone());
    let dep_c = normalized_or_err(&model.rd_selected(), "R-D selection").unwrap_or_else(|_| dep_u.clone());

    Ok(LinkTerms {
        sr_cond: sr_average(model, &arr_c, model.p_i, rule),
        sr_uncond: sr_average(model, &arr_u, model.p_i, rule),
        rd_cc: rd_average(model, &arr_c, &dep_c, rule),
        rd_uc: rd_average(model, &arr_u, &dep_c, rule),
        rd_cu: rd_average(model, &arr_c, &dep_u, rule),
        rd_uu: rd_average(model, &arr_u, &dep_u, rule),
        k1,
    })
}

/// Named intermediates of a theory point.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct BerComponents {
    pub p_es: f64,
    pub p_sr: f64,
    pub p_rd: f64,
    pub p_full: f64,
    pub p_empty: f64,
    pub mean_gamma_sr: f64,
    pub w1: f64,
    pub w2: f64,
    /// Joint S→R error and selection term (see [`LinkTerms::k1`]).
    pub k1: f64,
    /// Joint R→D error and selection term, P_RD·P'_RD.
    pub k2: f64,
    /// Conditioned S→R BER P'_SR.
    pub sr_cond: f64,
    /// Conditioned R→D BER P'_RD.
    pub rd_cond: f64,
    /// Unconditioned S→R BER P''_SR.
    pub sr_uncond: f64,
    /// Unconditioned R→D BER P''_RD.
    pub rd_uncond: f64,
    pub rd_empty_arrival: f64,
    pub rd_full_departure: f64,
    /// Fraction of packets admitted into an empty buffer.
    pub weight_empty_arrival: f64,
    /// Fraction of packets forced out of a full buffer.
    pub weight_full_departure: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryPoint {
    pub ber_bound: f64,
    pub avg_delay: f64,
    pub components: BerComponents,
    pub delay: DelayComponents,
    /// Largest relative M=30 / M=60 difference over the link terms.
    pub quadrature_rel_diff: f64,
    pub warnings: Vec<String>,
}

fn reference_rule(order: usize) -> &'static GaussHermiteRule {
    static R30: OnceLock<GaussHermiteRule> = OnceLock::new();
    static R60: OnceLock<GaussHermiteRule> = OnceLock::new();
    let cell = if order == 30 { &R30 } else { &R60 };
    cell.get_or_init(|| GaussHermiteRule::new(order).expect("orders 30 and 60 are valid"))
}

fn convergence_gap(model: &LinkModel) -> Result<f64, TheoryError> {
    let a = link_terms(model, reference_rule(30))?.values();
    let b = link_terms(model, reference_rule(60))?.values();
    Ok(a.iter().zip(&b).map(|(&x, &y)| if y == 0.0 { x.abs() } else { ((x - y) / y).abs() }).fold(0.0, f64::max))
}

fn clamp_prob(name: &str, v: f64, warnings: &mut Vec<String>) -> f64 {
    let c = if v.is_nan() { 0.5 } else { v.clamp(0.0, 1.0) };
    if (c - v).abs() > CLAMP_WARN || v.is_nan() {
        let msg = format!("{name} = {v} clamped to {c}");
        warn!("{msg}");
        warnings.push(msg);
    }
    c
}

fn evaluate(
    params: &SystemParams,
    rule: &GaussHermiteRule,
    protocol: ChainProtocol,
) -> Result<TheoryPoint, TheoryError> {
    if rule.order() < 20 {
        return Err(TheoryError::Domain(format!("quadrature order {} below 20", rule.order())));
    }
    let model = LinkModel::new(params)?;
    let p_es = model.p_es()?;
    let p_sr = selection_probability(model.l_sr, model.l_rd, model.scale_sr, model.scale_rd, model.delta);
    let p_rd = 1.0 - p_sr;
    let chain = steady_state(protocol, params.buffer_size, p_sr, p_rd, p_es)?;
    let terms = link_terms(&model, rule)?;
    let mut warnings = Vec::new();

    let (ber, w_empty, w_full) = match protocol {
        ChainProtocol::One => assemble_protocol1(&chain, &terms),
        ChainProtocol::Two => (terms.sr_cond + terms.rd_cc, 0.0, 0.0),
    };
    let ber_bound = clamp_prob("BER bound", ber, &mut warnings);

    let gap = convergence_gap(&model)?;
    if gap > CONVERGENCE_TOL {
        let msg = format!("quadrature M=30 and M=60 differ by {gap:.3e} relative");
        warn!("{msg}");
        warnings.push(msg);
    }

    let delay = delay_components(&chain)?;
    let mut components = BerComponents {
        p_es,
        p_sr,
        p_rd,
        p_full: chain.p_full(),
        p_empty: chain.p_empty(),
        mean_gamma_sr: model.mean_gamma_sr(),
        w1: model.w1,
        w2: model.w2,
        k1: terms.k1,
        k2: p_rd * terms.rd_cc,
        sr_cond: terms.sr_cond,
        rd_cond: terms.rd_cc,
        sr_uncond: terms.sr_uncond,
        rd_uncond: terms.rd_uu,
        rd_empty_arrival: terms.rd_uc,
        rd_full_departure: terms.rd_cu,
        weight_empty_arrival: w_empty,
        weight_full_departure: w_full,
    };
    for (name, v) in [
        ("K1", &mut components.k1),
        ("K2", &mut components.k2),
        ("P'_SR", &mut components.sr_cond),
        ("P'_RD", &mut components.rd_cond),
        ("P''_SR", &mut components.sr_uncond),
        ("P''_RD", &mut components.rd_uncond),
        ("RD empty arrival", &mut components.rd_empty_arrival),
        ("RD full departure", &mut components.rd_full_departure),
    ] {
        *v = clamp_prob(name, *v, &mut warnings);
    }

    Ok(TheoryPoint { ber_bound, avg_delay: delay.total, components, delay, quadrature_rel_diff: gap, warnings })
}

/// Four-case average over how each packet entered and left the buffer.
/// Returns (BER, share of empty-buffer arrivals, share of full-buffer departures).
fn assemble_protocol1(chain: &BufferChain, t: &LinkTerms) -> (f64, f64, f64) {
    let rate = chain.arrival_rate();
    if !(rate > 0.0) {
        return (0.5, 0.0, 0.0);
    }
    let a_e = (chain.p_empty() * chain.transitions(0).0 / rate).clamp(0.0, 1.0);
    let d_f = (chain.p_full() / rate).clamp(0.0, 1.0);
    let ber = (1.0 - a_e) * (1.0 - d_f) * (t.sr_cond + t.rd_cc)
        + a_e * d_f * (t.sr_uncond + t.rd_uu)
        + a_e * (1.0 - d_f) * (t.sr_uncond + t.rd_uc)
        + (1.0 - a_e) * d_f * (t.sr_cond + t.rd_cu);
    (ber, a_e, d_f)
}

/// BER bound and average delay of Protocol 1 (forced boundary transmissions).
pub fn ber_protocol1(params: &SystemParams, rule: &GaussHermiteRule) -> Result<TheoryPoint, TheoryError> {
    evaluate(params, rule, ChainProtocol::One)
}

/// BER bound and average delay of Protocol 2 (silent at the boundaries).
pub fn ber_protocol2(params: &SystemParams, rule: &GaussHermiteRule) -> Result<TheoryPoint, TheoryError> {
    evaluate(params, rule, ChainProtocol::Two)
}

/// Gamma scale of P_R under the single-Gamma approximation
/// (mean L·P̄_SR,EH − P_I, shape L_sr).
pub fn approx_residual_scale(params: &SystemParams) -> Result<f64, TheoryError> {
    let m = LinkModel::new(params)?;
    let s = (m.l_sr as f64 * m.scale_sr - m.p_i) / m.l_sr as f64;
    if s > 0.0 {
        Ok(s)
    } else {
        Err(TheoryError::Domain("decoding cost exceeds the mean harvest".into()))
    }
}

/// Density of γ_RD when P_R follows the single-Gamma approximation:
/// γ_RD = (2/d^α)·P_R·Σh²/N0,rd.
pub fn gamma_rd_pdf(params: &SystemParams, z: f64) -> Result<f64, TheoryError> {
    let m = LinkModel::new(params)?;
    let omega = params.taps_rd.powers[0];
    let c = 2.0 / params.d_rd.powf(params.alpha) * approx_residual_scale(params)? * omega / params.n0_rd;
    Ok(ln_gamma_product_pdf(z, m.l_sr as f64, m.l_rd as f64, c).exp())
}
