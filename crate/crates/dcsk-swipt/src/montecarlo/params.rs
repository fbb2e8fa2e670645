//! Physical and protocol parameters of one simulation or theory point.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{ChannelError, ChannelProfile};
use crate::dcsk::ChipNormalization;
use crate::swipt::{conversion_noise_for, SwiptError, SwiptParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("{field}: {message}")]
    Invalid { field: &'static str, message: String },
    #[error("channel profile: {0}")]
    Channel(#[from] ChannelError),
    #[error("swipt: {0}")]
    Swipt(#[from] SwiptError),
}

fn invalid(field: &'static str, message: impl Into<String>) -> ParamError {
    ParamError::Invalid { field, message: message.into() }
}

/// Fading taps of one link: per-path mean powers E{h_l²} and chip delays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TapProfile {
    pub powers: Vec<f64>,
    pub delays: Vec<usize>,
}

impl TapProfile {
    pub fn three_path() -> Self {
        Self { powers: vec![1.0 / 3.0; 3], delays: vec![0, 2, 5] }
    }

    pub fn is_equal_power(&self) -> bool {
        self.powers.windows(2).all(|w| (w[0] - w[1]).abs() <= 1e-12 * w[0].abs())
    }
}

/// How the correlator output of every bit is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    /// Explicit chips through the multipath channel and per-chip noise.
    Chip,
    /// Exact draw of the correlator statistic given the noiseless halves.
    #[default]
    Correlator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    pub beta: usize,
    pub theta: f64,
    pub eta: f64,
    pub delta: f64,
    pub buffer_size: usize,
    pub p_s: f64,
    pub p_d: f64,
    pub p_i: f64,
    pub alpha: f64,
    pub d_sr: f64,
    pub d_rd: f64,
    pub taps_sr: TapProfile,
    pub taps_rd: TapProfile,
    pub n0_sr: f64,
    pub n0_rd: f64,
    /// Pins the information-decoding noise N0,IR; when absent it is
    /// (1−θ)·N0,sr + N0,SI.
    pub n0_ir: Option<f64>,
    pub n0_si: f64,
    pub packet_bits: usize,
    pub slots: u64,
    pub seed: u64,
    /// Discarded slots before statistics; defaults to 10·J.
    pub warmup: Option<u64>,
    pub normalization: ChipNormalization,
    pub engine: Engine,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self::at_snr(20.0)
    }
}

/// Linear ratio from decibels.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl SystemParams {
    /// Simulation defaults at a given P_S/N0 in dB.
    pub fn at_snr(snr_db: f64) -> Self {
        let n0 = 1.0 / db_to_linear(snr_db);
        Self {
            beta: 160,
            theta: 0.5,
            eta: 0.6,
            delta: 1.05,
            buffer_size: 10,
            p_s: 1.0,
            p_d: 1.0,
            p_i: 0.01,
            alpha: 3.5,
            d_sr: 1.0,
            d_rd: 1.0,
            taps_sr: TapProfile::three_path(),
            taps_rd: TapProfile::three_path(),
            n0_sr: n0,
            n0_rd: n0,
            n0_ir: Some(n0),
            n0_si: 0.0,
            packet_bits: 100,
            slots: 200_000,
            seed: 1,
            warmup: None,
            normalization: ChipNormalization::UnitBitEnergy,
            engine: Engine::Correlator,
        }
    }

    /// Sets every noise level from P_S/N0 in dB, keeping N0,IR pinned if it was.
    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        let n0 = self.p_s / db_to_linear(snr_db);
        self.n0_sr = n0;
        self.n0_rd = n0;
        if self.n0_ir.is_some() {
            self.n0_ir = Some(n0);
        }
        self
    }

    pub fn snr_db(&self) -> f64 {
        10.0 * (self.p_s / self.n0_sr).log10()
    }

    pub fn profile_sr(&self) -> Result<ChannelProfile<f64>, ChannelError> {
        ChannelProfile::new(self.taps_sr.powers.clone(), self.taps_sr.delays.clone(), self.d_sr, self.alpha)
    }

    pub fn profile_rd(&self) -> Result<ChannelProfile<f64>, ChannelError> {
        ChannelProfile::new(self.taps_rd.powers.clone(), self.taps_rd.delays.clone(), self.d_rd, self.alpha)
    }

    pub fn swipt(&self) -> SwiptParams<f64> {
        SwiptParams { eta: self.eta, theta: self.theta, p_s: self.p_s, p_d: self.p_d, p_i: self.p_i }
    }

    pub fn warmup_slots(&self) -> u64 {
        self.warmup.unwrap_or(10 * self.buffer_size as u64)
    }

    /// Conversion noise actually added in the decoding branch.
    pub fn n0_si_effective(&self) -> Result<f64, SwiptError> {
        match self.n0_ir {
            Some(ir) => conversion_noise_for(self.theta, self.n0_sr, ir),
            None => Ok(self.n0_si),
        }
    }

    pub fn n0_ir_effective(&self) -> f64 {
        self.n0_ir.unwrap_or((1.0 - self.theta) * self.n0_sr + self.n0_si)
    }

    /// Per-path mean harvest ηθP_SΩ_sr/d_sr^α (Gamma scale of P_SR,EH).
    pub fn mean_harvest_sr(&self) -> f64 {
        let omega = self.taps_sr.powers.iter().sum::<f64>() / self.taps_sr.powers.len() as f64;
        self.eta * self.theta * self.p_s * omega / self.d_sr.powf(self.alpha)
    }

    /// Per-path mean harvest ηθP_DΩ_rd/d_rd^α (Gamma scale of P_DR,EH).
    pub fn mean_harvest_dr(&self) -> f64 {
        let omega = self.taps_rd.powers.iter().sum::<f64>() / self.taps_rd.powers.len() as f64;
        self.eta * self.theta * self.p_d * omega / self.d_rd.powf(self.alpha)
    }

    /// γ_SR = W1·P_SR,EH.
    pub fn w1(&self) -> f64 {
        2.0 * (1.0 - self.theta) / (self.eta * self.theta * self.n0_ir_effective())
    }

    /// γ_RD = W2·P_R·P_DR,EH.
    pub fn w2(&self) -> f64 {
        2.0 / (self.eta * self.theta * self.p_d * self.n0_rd)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if self.beta == 0 {
            return Err(invalid("beta", "must be at least 1"));
        }
        if self.buffer_size == 0 {
            return Err(invalid("buffer_size", "must be at least 1"));
        }
        for (field, v) in [("theta", self.theta), ("eta", self.eta)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid(field, format!("{v} outside [0, 1]")));
            }
        }
        for (field, v) in [
            ("p_s", self.p_s),
            ("p_d", self.p_d),
            ("p_i", self.p_i),
            ("n0_sr", self.n0_sr),
            ("n0_rd", self.n0_rd),
            ("n0_si", self.n0_si),
            ("delta", self.delta),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(invalid(field, format!("{v} must be finite and non-negative")));
            }
        }
        if let Some(ir) = self.n0_ir {
            if !(ir >= 0.0) || !ir.is_finite() {
                return Err(invalid("n0_ir", format!("{ir} must be finite and non-negative")));
            }
        }
        for (field, v) in [("d_sr", self.d_sr), ("d_rd", self.d_rd)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(field, format!("{v} must be positive")));
            }
        }
        if self.packet_bits == 0 {
            return Err(invalid("packet_bits", "must be at least 1"));
        }
        let sr = self.profile_sr()?;
        let rd = self.profile_rd()?;
        for p in [&sr, &rd] {
            if p.max_delay() >= 2 * self.beta {
                return Err(invalid("taps", format!("delay {} not shorter than the 2β frame", p.max_delay())));
            }
        }
        self.n0_si_effective()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_values() {
        let p = SystemParams::at_snr(20.0);
        p.validate().unwrap();
        assert!((p.n0_sr - 0.01).abs() < 1e-15);
        assert!((p.mean_harvest_sr() - 0.1).abs() < 1e-15);
        assert!((p.n0_si_effective().unwrap() - 0.005).abs() < 1e-15);
        assert!((p.w1() - 2.0 * 0.5 / (0.3 * 0.01)).abs() < 1e-9);
        assert!((p.snr_db() - 20.0).abs() < 1e-12);
        assert_eq!(p.warmup_slots(), 100);
    }

    #[test]
    fn rejects_bad_physics() {
        let mut p = SystemParams::at_snr(20.0);
        p.theta = 1.5;
        assert!(p.validate().is_err());
        let mut p = SystemParams::at_snr(20.0);
        p.p_s = -1.0;
        assert!(p.validate().is_err());
        let mut p = SystemParams::at_snr(20.0);
        p.taps_sr.delays = vec![0, 2, 400];
        assert!(p.validate().is_err());
    }
}
