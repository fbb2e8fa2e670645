//! Multipath Rayleigh fading with chip delays, path loss and AWGN.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use thiserror::Error;

use crate::real::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("profile needs at least one path")]
    NoPaths,
    #[error("tap vectors differ in length: {powers} powers, {delays} delays")]
    TapMismatch { powers: usize, delays: usize },
    #[error("tap {index} has non-positive mean power {power}")]
    BadTapPower { index: usize, power: f64 },
    #[error("tap delays must be strictly increasing")]
    DelaysNotIncreasing,
    #[error("distance must be positive, got {0}")]
    BadDistance(f64),
    #[error("path-loss exponent must be finite and non-negative, got {0}")]
    BadExponent(f64),
    #[error("delay {delay} chips not shorter than the {frame}-chip frame")]
    DelayTooLong { delay: usize, frame: usize },
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ChannelProfile<T> {
    pub tap_mean_powers: Vec<T>,
    pub tap_delays: Vec<usize>,
    pub distance: T,
    pub path_loss_exponent: T,
}

impl<T: Real> ChannelProfile<T> {
    pub fn new(
        tap_mean_powers: Vec<T>,
        tap_delays: Vec<usize>,
        distance: T,
        path_loss_exponent: T,
    ) -> Result<Self, ChannelError> {
        let p = Self { tap_mean_powers, tap_delays, distance, path_loss_exponent };
        p.validate()?;
        Ok(p)
    }

    /// Three equal-power paths at chip delays 0, 2, 5.
    pub fn three_path(distance: T, path_loss_exponent: T) -> Self {
        let third = T::one() / T::lit(3.0);
        Self::new(vec![third; 3], vec![0, 2, 5], distance, path_loss_exponent).expect("static profile is valid")
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        if self.tap_mean_powers.is_empty() {
            return Err(ChannelError::NoPaths);
        }
        if self.tap_mean_powers.len() != self.tap_delays.len() {
            return Err(ChannelError::TapMismatch {
                powers: self.tap_mean_powers.len(),
                delays: self.tap_delays.len(),
            });
        }
        for (index, &p) in self.tap_mean_powers.iter().enumerate() {
            if !(p > T::zero()) || !p.is_finite() {
                return Err(ChannelError::BadTapPower { index, power: p.to_f64_lossy() });
            }
        }
        if self.tap_delays.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ChannelError::DelaysNotIncreasing);
        }
        if !(self.distance > T::zero()) || !self.distance.is_finite() {
            return Err(ChannelError::BadDistance(self.distance.to_f64_lossy()));
        }
        if !(self.path_loss_exponent >= T::zero()) || !self.path_loss_exponent.is_finite() {
            return Err(ChannelError::BadExponent(self.path_loss_exponent.to_f64_lossy()));
        }
        Ok(())
    }

    pub fn num_paths(&self) -> usize {
        self.tap_mean_powers.len()
    }

    pub fn total_power(&self) -> T {
        self.tap_mean_powers.iter().fold(T::zero(), |a, &p| a + p)
    }

    /// Per-path mean power Ω (mean over taps).
    pub fn mean_tap_power(&self) -> T {
        self.total_power() / T::lit(self.num_paths() as f64)
    }

    pub fn path_loss(&self) -> T {
        self.distance.powf(self.path_loss_exponent)
    }

    pub fn max_delay(&self) -> usize {
        self.tap_delays.last().copied().unwrap_or(0)
    }

    /// True when the delay spread is small against β (τ_max ≤ β/10).
    pub fn delay_spread_ok(&self, beta: usize) -> bool {
        10 * self.max_delay() <= beta
    }
}

/// Fading magnitudes of one link for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization<'a, T> {
    pub taps: Vec<T>,
    pub profile: &'a ChannelProfile<T>,
    pub slot_index: u64,
}

pub fn draw_realization<'a, T: Real, R: Rng + ?Sized>(
    profile: &'a ChannelProfile<T>,
    slot_index: u64,
    rng: &mut R,
) -> ChannelRealization<'a, T> {
    let taps = profile
        .tap_mean_powers
        .iter()
        .map(|&omega| {
            let e: f64 = Exp1.sample(rng);
            (omega * T::lit(e)).sqrt()
        })
        .collect();
    ChannelRealization { taps, profile, slot_index }
}

pub fn channel_energy<T: Real>(realization: &ChannelRealization<'_, T>) -> T {
    realization.taps.iter().fold(T::zero(), |a, &h| a + h * h)
}

/// Noiseless received chips: √(P/d^α)·Σ h_l·x[k−τ_l], zero before the frame.
pub fn convolve<T: Real>(
    chips: &[T],
    realization: &ChannelRealization<'_, T>,
    tx_power: T,
) -> Result<Vec<T>, ChannelError> {
    let n = chips.len();
    let profile = realization.profile;
    if let Some(&delay) = profile.tap_delays.iter().find(|&&d| d >= n.max(1)) {
        return Err(ChannelError::DelayTooLong { delay, frame: n });
    }
    let amp = (tx_power / profile.path_loss()).sqrt();
    let mut out = vec![T::zero(); n];
    for (&h, &tau) in realization.taps.iter().zip(&profile.tap_delays) {
        let g = amp * h;
        for (o, &x) in out[tau..].iter_mut().zip(chips) {
            *o = *o + g * x;
        }
    }
    Ok(out)
}

/// Adds zero-mean Gaussian noise of variance N0/2 to every chip.
pub fn add_noise<T: Real, R: Rng + ?Sized>(chips: &mut [T], noise_psd: T, rng: &mut R) {
    let sd = (noise_psd / T::lit(2.0)).sqrt();
    if sd == T::zero() {
        return;
    }
    for c in chips.iter_mut() {
        *c = *c + sd * T::normal(rng);
    }
}

pub fn propagate<T: Real, R: Rng + ?Sized>(
    chips: &[T],
    realization: &ChannelRealization<'_, T>,
    tx_power: T,
    noise_psd: T,
    rng: &mut R,
) -> Result<Vec<T>, ChannelError> {
    let mut out = convolve(chips, realization, tx_power)?;
    add_noise(&mut out, noise_psd, rng);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_profile() -> ChannelProfile<f64> {
        ChannelProfile::new(vec![1.0], vec![0], 1.0, 2.0).unwrap()
    }

    #[test]
    fn rejects_bad_profiles() {
        assert_eq!(ChannelProfile::<f64>::new(vec![], vec![], 1.0, 2.0), Err(ChannelError::NoPaths));
        assert!(matches!(ChannelProfile::new(vec![0.0], vec![0], 1.0, 2.0), Err(ChannelError::BadTapPower { .. })));
        assert_eq!(ChannelProfile::new(vec![0.5, 0.5], vec![2, 2], 1.0, 2.0), Err(ChannelError::DelaysNotIncreasing));
        assert!(ChannelProfile::new(vec![1.0], vec![0], 0.0, 2.0).is_err());
        assert!(ChannelProfile::new(vec![1.0], vec![0, 1], 1.0, 2.0).is_err());
    }

    #[test]
    fn identity_channel() {
        let p = unit_profile();
        let r = ChannelRealization { taps: vec![1.0], profile: &p, slot_index: 0 };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = vec![0.3, -0.1, 0.7, 0.2];
        assert_eq!(propagate(&x, &r, 1.0, 0.0, &mut rng).unwrap(), x);
    }

    #[test]
    fn impulse_response() {
        let p = ChannelProfile::new(vec![0.5, 0.5], vec![0, 1], 2.0, 2.0).unwrap();
        let r = ChannelRealization { taps: vec![1.0, 1.0], profile: &p, slot_index: 0 };
        let y = convolve(&[1.0, 0.0, 0.0, 0.0], &r, 8.0).unwrap();
        let a = (8.0f64 / 4.0).sqrt();
        assert_eq!(y, vec![a, a, 0.0, 0.0]);
    }

    #[test]
    fn delay_longer_than_frame() {
        let p = ChannelProfile::new(vec![0.5, 0.5], vec![0, 4], 1.0, 2.0).unwrap();
        let r = ChannelRealization { taps: vec![1.0, 1.0], profile: &p, slot_index: 0 };
        assert!(matches!(convolve(&[1.0; 4], &r, 1.0), Err(ChannelError::DelayTooLong { .. })));
    }

    #[test]
    fn pure_noise_variance() {
        let p = unit_profile();
        let r = ChannelRealization { taps: vec![1.0], profile: &p, slot_index: 0 };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let y = propagate(&vec![1.0; 1_000_000], &r, 0.0, 0.4, &mut rng).unwrap();
        let var = y.iter().map(|v| v * v).sum::<f64>() / y.len() as f64;
        assert!((var / 0.2 - 1.0).abs() < 0.02, "variance {var}");
        let lag1 = y.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / (y.len() - 1) as f64 / var;
        assert!(lag1.abs() < 0.01);
    }

    #[test]
    fn energy_examples() {
        let p = ChannelProfile::three_path(1.0, 2.0);
        let r = ChannelRealization { taps: vec![1.0, 0.0, 0.0], profile: &p, slot_index: 0 };
        assert_eq!(channel_energy(&r), 1.0);
        let r = ChannelRealization { taps: vec![0.5; 3], profile: &p, slot_index: 0 };
        assert_eq!(channel_energy(&r), 0.75);
    }

    #[test]
    fn mean_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p1 = unit_profile();
        let p3 = ChannelProfile::three_path(1.0, 2.0);
        let n = 1_000_000;
        let m1 = (0..n).map(|i| channel_energy(&draw_realization(&p1, i, &mut rng))).sum::<f64>() / n as f64;
        let m3 = (0..n).map(|i| channel_energy(&draw_realization(&p3, i, &mut rng))).sum::<f64>() / n as f64;
        assert!((m1 - 1.0).abs() < 0.01, "{m1}");
        assert!((m3 - 1.0).abs() < 0.01, "{m3}");
    }

    #[test]
    fn f32_profile() {
        let p = ChannelProfile::<f32>::three_path(2.0, 3.0);
        assert!((p.path_loss() - 8.0).abs() < 1e-5);
        assert!(p.delay_spread_ok(160));
        assert!(!p.delay_spread_ok(40));
    }
}
