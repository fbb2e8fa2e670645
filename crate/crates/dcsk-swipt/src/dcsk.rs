//! Chaotic sequence generation, DCSK modulation and correlator demodulation.

use rand::Rng;
use thiserror::Error;

use crate::real::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DcskError {
    #[error("chip value {0} outside [-1, 1]")]
    Domain(f64),
    #[error("seed {0} is a fixed point of the logistic map")]
    FixedPoint(f64),
    #[error("expected {expected} chips, got {got}")]
    Length { expected: usize, got: usize },
    #[error("bit must be 0 or 1, got {0}")]
    Bit(u8),
}

/// One bit worth of DCSK chips: reference half followed by the data half.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaoticFrame<T> {
    pub reference: Vec<T>,
    pub data: Vec<T>,
    pub bit: u8,
}

impl<T: Real> ChaoticFrame<T> {
    pub fn beta(&self) -> usize {
        self.reference.len()
    }

    /// Reference then data, 2β chips.
    pub fn chips(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(2 * self.beta());
        out.extend_from_slice(&self.reference);
        out.extend_from_slice(&self.data);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionMetric<T> {
    pub z: T,
}

/// How a reference sequence is scaled before transmission.
///
/// `UnitBitEnergy` fixes the reference half energy at exactly 1/2, so one bit
/// (both halves) carries unit energy. `Raw` only applies the deterministic
/// 1/√β factor and leaves the chaotic energy fluctuation in place.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChipNormalization {
    #[default]
    UnitBitEnergy,
    Raw,
}

pub fn logistic_step<T: Real>(c: T) -> Result<T, DcskError> {
    if !(c.abs() <= T::one()) {
        return Err(DcskError::Domain(c.to_f64_lossy()));
    }
    let two = T::lit(2.0);
    // clamp guards the last ulp: 1 - 2c² is in [-1, 1] mathematically
    Ok((T::one() - two * c * c).max(-T::one()))
}

fn is_fixed_point<T: Real>(c: T) -> bool {
    c == T::lit(0.5) || c == -T::one()
}

pub fn generate_chaos<T: Real>(seed: T, length: usize) -> Result<Vec<T>, DcskError> {
    if !(seed.abs() <= T::one()) {
        return Err(DcskError::Domain(seed.to_f64_lossy()));
    }
    if is_fixed_point(seed) {
        return Err(DcskError::FixedPoint(seed.to_f64_lossy()));
    }
    let mut out = Vec::with_capacity(length);
    let mut c = seed;
    for _ in 0..length {
        out.push(c);
        c = logistic_step(c)?;
    }
    Ok(out)
}

/// Draw a seed uniformly in (-1, 1), skipping the fixed points.
pub fn draw_seed<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    loop {
        let u: f64 = rng.random::<f64>() * 2.0 - 1.0;
        let s = T::lit(u);
        if u > -1.0 && !is_fixed_point(s) {
            return s;
        }
    }
}

pub fn normalize_reference<T: Real>(chips: &mut [T], mode: ChipNormalization) {
    let beta = chips.len();
    if beta == 0 {
        return;
    }
    let scale = match mode {
        ChipNormalization::UnitBitEnergy => {
            let e = chips.iter().fold(T::zero(), |acc, &c| acc + c * c);
            if e > T::zero() {
                (T::lit(0.5) / e).sqrt()
            } else {
                T::zero()
            }
        }
        ChipNormalization::Raw => T::one() / T::lit(beta as f64).sqrt(),
    };
    for c in chips.iter_mut() {
        *c = *c * scale;
    }
}

/// Fresh reference of length β from a random seed, scaled for transmission.
pub fn random_reference<T: Real, R: Rng + ?Sized>(rng: &mut R, beta: usize, mode: ChipNormalization) -> Vec<T> {
    let seed = draw_seed::<T, R>(rng);
    let mut chips = generate_chaos(seed, beta).expect("seed drawn inside the valid range");
    normalize_reference(&mut chips, mode);
    chips
}

pub fn modulate<T: Real>(bit: u8, reference: &[T]) -> Result<ChaoticFrame<T>, DcskError> {
    if bit > 1 {
        return Err(DcskError::Bit(bit));
    }
    let sign = if bit == 1 { T::one() } else { -T::one() };
    Ok(ChaoticFrame { reference: reference.to_vec(), data: reference.iter().map(|&c| sign * c).collect(), bit })
}

pub fn decision_metric<T: Real>(received: &[T], beta: usize) -> Result<DecisionMetric<T>, DcskError> {
    if received.len() != 2 * beta {
        return Err(DcskError::Length { expected: 2 * beta, got: received.len() });
    }
    let (r, d) = received.split_at(beta);
    let z = r.iter().zip(d).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
    Ok(DecisionMetric { z })
}

/// Bit 1 iff z > 0; a zero metric decides 0.
pub fn decide<T: Real>(metric: DecisionMetric<T>) -> u8 {
    u8::from(metric.z > T::zero())
}

pub fn demodulate<T: Real>(received: &[T], beta: usize) -> Result<(u8, DecisionMetric<T>), DcskError> {
    let m = decision_metric(received, beta)?;
    Ok((decide(m), m))
}
