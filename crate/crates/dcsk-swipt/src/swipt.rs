//! Power-splitting energy harvesting, decoding cost and the per-packet
//! energy ledger.

use rand::Rng;
use thiserror::Error;

use crate::channel::{add_noise, channel_energy, ChannelProfile, ChannelRealization};
use crate::real::Real;
use crate::theory::special::reg_lower_gamma;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SwiptError {
    #[error("{name} must lie in [0, 1], got {value}")]
    Fraction { name: &'static str, value: f64 },
    #[error("decoding cost must be non-negative, got {0}")]
    NegativeCost(f64),
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("stored residual power must be positive, got {0}")]
    EmptyLedgerEntry(f64),
    #[error("N0,IR = {n0_ir} is below the scaled antenna noise (1-θ)·N0,sr = {scaled}")]
    NoiseComposition { n0_ir: f64, scaled: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwiptParams<T> {
    pub eta: T,
    pub theta: T,
    pub p_s: T,
    pub p_d: T,
    pub p_i: T,
}

impl<T: Real> SwiptParams<T> {
    pub fn validate(&self) -> Result<(), SwiptError> {
        for (name, v) in [("eta", self.eta), ("theta", self.theta)] {
            if !(v >= T::zero() && v <= T::one()) {
                return Err(SwiptError::Fraction { name, value: v.to_f64_lossy() });
            }
        }
        if !(self.p_i >= T::zero()) {
            return Err(SwiptError::NegativeCost(self.p_i.to_f64_lossy()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarvestReport<T> {
    pub p_sr_eh: T,
    pub p_dr_eh: T,
    /// Decoding cost the report was judged against.
    pub p_i: T,
    pub shortage: bool,
}

impl<T: Real> HarvestReport<T> {
    pub fn new(p_sr_eh: T, p_dr_eh: T, p_i: T) -> Self {
        Self { p_sr_eh, p_dr_eh, p_i, shortage: p_sr_eh < p_i }
    }

    /// Enough harvested power to run the demodulator (strictly above P_I).
    pub fn decodable(&self) -> bool {
        self.p_sr_eh > self.p_i
    }
}

/// Residual power stored with a packet and spent when it is forwarded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyLedgerEntry<T> {
    pub packet_id: u64,
    pub residual_power: T,
}

impl<T: Real> EnergyLedgerEntry<T> {
    pub fn new(packet_id: u64, residual_power: T) -> Result<Self, SwiptError> {
        if residual_power > T::zero() {
            Ok(Self { packet_id, residual_power })
        } else {
            Err(SwiptError::EmptyLedgerEntry(residual_power.to_f64_lossy()))
        }
    }
}

/// ηθ·P·Σh²/d^α.
pub fn harvested_power<T: Real>(params: &SwiptParams<T>, tx_power: T, energy: T, profile: &ChannelProfile<T>) -> T {
    params.eta * params.theta * tx_power * energy / profile.path_loss()
}

pub fn harvest<T: Real>(
    realization_sr: &ChannelRealization<'_, T>,
    realization_rd: &ChannelRealization<'_, T>,
    params: &SwiptParams<T>,
) -> HarvestReport<T> {
    let p_sr_eh = harvested_power(params, params.p_s, channel_energy(realization_sr), realization_sr.profile);
    let p_dr_eh = harvested_power(params, params.p_d, channel_energy(realization_rd), realization_rd.profile);
    HarvestReport::new(p_sr_eh, p_dr_eh, params.p_i)
}

/// Conversion noise N0,SI that makes (1−θ)·N0,sr + N0,SI equal a pinned N0,IR.
pub fn conversion_noise_for<T: Real>(theta: T, n0_sr: T, n0_ir: T) -> Result<T, SwiptError> {
    let scaled = (T::one() - theta) * n0_sr;
    let n0_si = n0_ir - scaled;
    // tolerate rounding at equality
    if n0_si < -T::epsilon() * n0_ir.abs().max(T::one()) * T::lit(16.0) {
        return Err(SwiptError::NoiseComposition { n0_ir: n0_ir.to_f64_lossy(), scaled: scaled.to_f64_lossy() });
    }
    Ok(n0_si.max(T::zero()))
}

pub fn effective_id_noise<T: Real>(theta: T, n0_sr: T, n0_si: T) -> T {
    (T::one() - theta) * n0_sr + n0_si
}

/// Information-decoding branch: √(1−θ)·r plus conversion noise of variance N0,SI/2.
pub fn split_for_decoding<T: Real, R: Rng + ?Sized>(received: &[T], theta: T, n0_si: T, rng: &mut R) -> Vec<T> {
    let g = (T::one() - theta).max(T::zero()).sqrt();
    let mut out: Vec<T> = received.iter().map(|&r| g * r).collect();
    add_noise(&mut out, n0_si, rng);
    out
}

/// Pr(P_SR,EH < P_I) with Σh² ~ Gamma(L, Ω): γ(L, P_I·d^α/(ηθP_SΩ))/Γ(L).
pub fn energy_shortage_probability(
    params: &SwiptParams<f64>,
    profile_sr: &ChannelProfile<f64>,
) -> Result<f64, SwiptError> {
    if params.p_i < 0.0 {
        return Err(SwiptError::NegativeCost(params.p_i));
    }
    let mean = params.eta * params.theta * params.p_s * profile_sr.mean_tap_power() / profile_sr.path_loss();
    if !(mean > 0.0) {
        return Err(SwiptError::NonPositive("eta*theta*P_S"));
    }
    if params.p_i == 0.0 {
        return Ok(0.0);
    }
    if params.p_i.is_infinite() {
        return Ok(1.0);
    }
    Ok(reg_lower_gamma(profile_sr.num_paths() as f64, params.p_i / mean).expect("positive shape"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn defaults() -> SwiptParams<f64> {
        SwiptParams { eta: 0.6, theta: 0.5, p_s: 1.0, p_d: 1.0, p_i: 0.01 }
    }

    #[test]
    fn harvest_examples() {
        let p = ChannelProfile::new(vec![1.0], vec![0], 1.0, 2.0).unwrap();
        let r = ChannelRealization { taps: vec![1.0], profile: &p, slot_index: 0 };
        let h = harvest(&r, &r, &defaults());
        assert!((h.p_sr_eh - 0.3).abs() < 1e-15);
        assert!(!h.shortage);
        let h = harvest(&r, &r, &SwiptParams { theta: 0.0, ..defaults() });
        assert_eq!(h.p_sr_eh, 0.0);
        assert!(h.shortage);
        let z = ChannelRealization { taps: vec![0.0], profile: &p, slot_index: 0 };
        assert_eq!(harvest(&z, &r, &defaults()).p_sr_eh, 0.0);
    }

    #[test]
    fn harvest_monotone() {
        let near = ChannelProfile::three_path(1.0, 3.5);
        let far = ChannelProfile::three_path(2.0, 3.5);
        let e = 0.8;
        let base = harvested_power(&defaults(), 1.0, e, &near);
        assert!(harvested_power(&SwiptParams { theta: 0.6, ..defaults() }, 1.0, e, &near) > base);
        assert!(harvested_power(&SwiptParams { eta: 0.7, ..defaults() }, 1.0, e, &near) > base);
        assert!(harvested_power(&defaults(), 2.0, e, &near) > base);
        assert!(harvested_power(&defaults(), 1.0, e, &far) < base);
    }

    #[test]
    fn split_identity_and_cutoff() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = vec![0.5, -0.25, 1.0];
        assert_eq!(split_for_decoding(&x, 0.0, 0.0, &mut rng), x);
        assert_eq!(split_for_decoding(&x, 1.0, 0.0, &mut rng), vec![0.0; 3]);
    }

    #[test]
    fn split_noise_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (theta, n0, n0_si) = (0.5, 0.2, 0.1);
        let mut r = vec![0.0; 1_000_000];
        add_noise(&mut r, n0, &mut rng);
        let y = split_for_decoding(&r, theta, n0_si, &mut rng);
        let var = y.iter().map(|v| v * v).sum::<f64>() / y.len() as f64;
        let want = effective_id_noise(theta, n0, n0_si) / 2.0;
        assert!((var / want - 1.0).abs() < 0.02, "{var} vs {want}");
    }

    #[test]
    fn pinned_ir_noise() {
        assert!((conversion_noise_for(0.5f64, 1.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(conversion_noise_for(0.0, 1.0, 1.0).unwrap(), 0.0);
        assert!(conversion_noise_for(0.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn shortage_probability_limits() {
        let prof = ChannelProfile::three_path(1.0, 3.5);
        assert_eq!(energy_shortage_probability(&SwiptParams { p_i: 0.0, ..defaults() }, &prof).unwrap(), 0.0);
        assert_eq!(energy_shortage_probability(&SwiptParams { p_i: f64::INFINITY, ..defaults() }, &prof).unwrap(), 1.0);
        assert!(energy_shortage_probability(&SwiptParams { p_i: -1.0, ..defaults() }, &prof).is_err());
        let big = energy_shortage_probability(&SwiptParams { p_i: 1e3, ..defaults() }, &prof).unwrap();
        assert!((big - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ledger_rejects_empty_entries() {
        assert!(EnergyLedgerEntry::new(0, 0.0f64).is_err());
        assert!(EnergyLedgerEntry::new(0, 1e-3f64).is_ok());
    }
}
