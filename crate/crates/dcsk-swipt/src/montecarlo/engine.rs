//! Bit-level transmission of one packet over one hop.

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use super::params::Engine;
use crate::channel::{add_noise, convolve, ChannelRealization};
use crate::dcsk::{demodulate, draw_seed, modulate, normalize_reference, random_reference, ChipNormalization};

/// Receiver front end of a hop.
///
/// Antenna noise of density `n0_front` is added to the received chips, the
/// result is scaled by `gain` (√(1−θ) after a power splitter, 1 otherwise)
/// and `n0_back` models conversion noise after the splitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hop {
    pub tx_power: f64,
    pub gain: f64,
    pub n0_front: f64,
    pub n0_back: f64,
}

impl Hop {
    /// Total noise density at the correlator input.
    pub fn total_noise(&self) -> f64 {
        self.gain * self.gain * self.n0_front + self.n0_back
    }
}

pub struct BitEngine {
    kind: Engine,
    beta: usize,
    normalization: ChipNormalization,
    chi: Option<ChiSquared<f64>>,
}

impl BitEngine {
    pub fn new(kind: Engine, beta: usize, normalization: ChipNormalization) -> Self {
        let chi = if beta > 1 { ChiSquared::new((beta - 1) as f64).ok() } else { None };
        Self { kind, beta, normalization, chi }
    }

    /// Sends `bits` through the realization and returns the hard decisions.
    pub fn transmit<R: Rng + ?Sized>(
        &self,
        bits: &[u8],
        realization: &ChannelRealization<'_, f64>,
        hop: Hop,
        rng: &mut R,
    ) -> Vec<u8> {
        match self.kind {
            Engine::Chip => bits.iter().map(|&b| self.transmit_chips(b, realization, hop, rng)).collect(),
            Engine::Correlator => self.transmit_correlator(bits, realization, hop, rng),
        }
    }

    /// Correlator path without per-bit allocations; same statistics as
    /// modulate → convolve → correlator.
    fn transmit_correlator<R: Rng + ?Sized>(
        &self,
        bits: &[u8],
        realization: &ChannelRealization<'_, f64>,
        hop: Hop,
        rng: &mut R,
    ) -> Vec<u8> {
        let beta = self.beta;
        let profile = realization.profile;
        let amp = (hop.tx_power / profile.path_loss()).sqrt() * hop.gain;
        let taps: Vec<(f64, usize)> =
            realization.taps.iter().zip(&profile.tap_delays).map(|(&h, &d)| (amp * h, d)).collect();
        let max_delay = taps.iter().map(|t| t.1).max().unwrap_or(0).min(beta);
        let noise = hop.total_noise();
        let mut refs = Vec::new();
        let mut out = Vec::with_capacity(bits.len());
        for chunk in bits.chunks(LANES) {
            reference_batch(rng, beta, chunk.len(), self.normalization, &mut refs);
            for (&bit, r) in chunk.iter().zip(refs.chunks(beta)) {
                let sign = if bit == 1 { 1.0 } else { -1.0 };
                // received reference half a_k and data half d_k = ±a_k + spill_k,
                // where spill_k is the delayed tail of the reference
                let (mut s_plus, mut s_minus, mut z) = (0.0, 0.0, 0.0);
                for k in 0..max_delay {
                    let (mut a, mut spill) = (0.0, 0.0);
                    for &(g, tau) in &taps {
                        if k >= tau {
                            a += g * r[k - tau];
                        } else {
                            spill += g * r[beta + k - tau];
                        }
                    }
                    let d = sign * a + spill;
                    s_plus += (a + d) * (a + d);
                    s_minus += (a - d) * (a - d);
                    z += a * d;
                }
                let mut energy = 0.0;
                match taps[..] {
                    [(g0, t0), (g1, t1), (g2, t2)] => {
                        for k in max_delay..beta {
                            let a = g0 * r[k - t0] + g1 * r[k - t1] + g2 * r[k - t2];
                            energy += a * a;
                        }
                    }
                    _ => {
                        for k in max_delay..beta {
                            let a: f64 = taps.iter().map(|&(g, tau)| g * r[k - tau]).sum();
                            energy += a * a;
                        }
                    }
                }
                if sign > 0.0 {
                    s_plus += 4.0 * energy;
                } else {
                    s_minus += 4.0 * energy;
                }
                z += sign * energy;
                out.push(self.decide_from_sums(s_plus, s_minus, z, noise, rng));
            }
        }
        out
    }

    fn transmit_chips<R: Rng + ?Sized>(
        &self,
        bit: u8,
        realization: &ChannelRealization<'_, f64>,
        hop: Hop,
        rng: &mut R,
    ) -> u8 {
        let reference: Vec<f64> = random_reference(rng, self.beta, self.normalization);
        let frame = modulate(bit, &reference).expect("bits are 0 or 1");
        let mut rx = convolve(&frame.chips(), realization, hop.tx_power).expect("delays checked at validation");
        add_noise(&mut rx, hop.n0_front, rng);
        for c in rx.iter_mut() {
            *c *= hop.gain;
        }
        add_noise(&mut rx, hop.n0_back, rng);
        demodulate(&rx, self.beta).expect("frame length is 2β").0
    }

    /// Draws sign(Σ r_k d_k) exactly: with per-chip noise variance σ²,
    /// Σ r·d = σ²/2·(X − Y) where X, Y are independent noncentral χ²_β
    /// variates built from the sums and differences of the two halves.
    /// `s_plus`, `s_minus` are Σ(a+d)², Σ(a−d)² of the noiseless halves and
    /// `z` their noiseless correlation.
    fn decide_from_sums<R: Rng + ?Sized>(&self, s_plus: f64, s_minus: f64, z: f64, noise: f64, rng: &mut R) -> u8 {
        let sigma2 = noise / 2.0;
        if sigma2 == 0.0 {
            return u8::from(z > 0.0);
        }
        let x = self.noncentral_chi2(s_plus / (2.0 * sigma2), rng);
        let y = self.noncentral_chi2(s_minus / (2.0 * sigma2), rng);
        u8::from(x > y)
    }

    fn noncentral_chi2<R: Rng + ?Sized>(&self, lambda: f64, rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        let central = self.chi.as_ref().map_or(0.0, |c| c.sample(rng));
        (z + lambda.sqrt()).powi(2) + central
    }
}

const LANES: usize = 8;

/// `count` references of length β, stored back to back. The logistic
/// recursions run interleaved so the sequential dependency of each map does
/// not serialize the whole batch; values match [`random_reference`].
fn reference_batch<R: Rng + ?Sized>(
    rng: &mut R,
    beta: usize,
    count: usize,
    mode: ChipNormalization,
    out: &mut Vec<f64>,
) {
    let mut c = [0.0f64; LANES];
    for s in c.iter_mut().take(count) {
        *s = draw_seed(rng);
    }
    if out.len() != count * beta {
        out.resize(count * beta, 0.0);
    }
    for k in 0..beta {
        for (lane, s) in c.iter_mut().enumerate().take(count) {
            out[lane * beta + k] = *s;
            *s = (1.0 - 2.0 * *s * *s).max(-1.0);
        }
    }
    for r in out.chunks_mut(beta) {
        normalize_reference(r, mode);
    }
}

/// Number of positions where the two bit vectors differ.
pub fn bit_errors(a: &[u8], b: &[u8]) -> u64 {
    a.iter().zip(b).filter(|(x, y)| x != y).count() as u64
}
