//! Signed mixtures of Gamma densities.
//!
//! Conditioning a Gamma-distributed harvest on a link-selection event or
//! removing the decoding cost keeps the density inside this family, which is
//! what makes the selection-aware BER terms finite sums of kernels.

use super::special::{binomial, factorial, ln_gamma};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaComponent {
    pub weight: f64,
    pub shape: f64,
    pub scale: f64,
}

impl GammaComponent {
    pub fn ln_pdf(&self, x: f64) -> f64 {
        (self.shape - 1.0) * x.ln() - x / self.scale - ln_gamma(self.shape) - self.shape * self.scale.ln()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GammaMixture {
    pub components: Vec<GammaComponent>,
}

/// Σ sign_i·exp(l_i) in log form; −∞ when the sum is not positive.
pub fn signed_log_sum(terms: impl Iterator<Item = (f64, f64)>) -> f64 {
    let terms: Vec<(f64, f64)> = terms.filter(|&(w, l)| w != 0.0 && l > f64::NEG_INFINITY).collect();
    let Some(m) = terms.iter().map(|&(w, l)| l + w.abs().ln()).reduce(f64::max) else {
        return f64::NEG_INFINITY;
    };
    if !m.is_finite() {
        return m;
    }
    let s: f64 = terms.iter().map(|&(w, l)| w.signum() * (l + w.abs().ln() - m).exp()).sum();
    if s > 0.0 {
        m + s.ln()
    } else {
        f64::NEG_INFINITY
    }
}

impl GammaMixture {
    pub fn single(shape: f64, scale: f64) -> Self {
        Self { components: vec![GammaComponent { weight: 1.0, shape, scale }] }
    }

    pub fn mass(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }

    pub fn mean(&self) -> f64 {
        self.components.iter().map(|c| c.weight * c.shape * c.scale).sum::<f64>() / self.mass()
    }

    pub fn normalized(&self) -> Self {
        let m = self.mass();
        Self { components: self.components.iter().map(|c| GammaComponent { weight: c.weight / m, ..*c }).collect() }
    }

    pub fn scale_range(&self) -> (f64, f64) {
        self.components.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), c| (lo.min(c.scale), hi.max(c.scale * c.shape)))
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return f64::NEG_INFINITY;
        }
        signed_log_sum(self.components.iter().map(|c| (c.weight, c.ln_pdf(x))))
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    /// Multiplies the density by Pr(Y ≤ k·x) for an independent
    /// Y ~ Gamma(other_shape, other_scale) with integer shape.
    pub fn times_cdf(&self, other_shape: u32, other_scale: f64, k: f64) -> Self {
        let rate = k / other_scale;
        let mut out = self.components.clone();
        for c in &self.components {
            let s = 1.0 / (1.0 / c.scale + rate);
            for l in 0..other_shape {
                let lf = l as f64;
                let ln_coef = ln_gamma(c.shape + lf) + (c.shape + lf) * s.ln() + lf * rate.ln()
                    - ln_gamma(c.shape)
                    - c.shape * c.scale.ln()
                    - factorial(l).ln();
                let coef = if l == 0 { (c.shape * (s / c.scale).ln()).exp() } else { ln_coef.exp() };
                out.push(GammaComponent { weight: -c.weight * coef, shape: c.shape + lf, scale: s });
            }
        }
        Self { components: out }.merged()
    }

    /// Density of U = X − p on {X > p}, unnormalized (mass Pr(X > p)).
    /// Component shapes must be integers.
    pub fn shifted(&self, p: f64) -> Self {
        if p == 0.0 {
            return self.clone();
        }
        let mut out = Vec::new();
        for c in &self.components {
            let a = c.shape.round();
            assert!((c.shape - a).abs() < 1e-12 && a >= 1.0, "shift needs integer shapes, got {}", c.shape);
            let a = a as u32;
            for k in 0..a {
                let kf = k as f64;
                let ln_w = binomial(a - 1, k).ln() + (a - 1 - k) as f64 * p.ln() - p / c.scale
                    + ln_gamma(kf + 1.0)
                    + (kf + 1.0) * c.scale.ln()
                    - ln_gamma(a as f64)
                    - a as f64 * c.scale.ln();
                out.push(GammaComponent { weight: c.weight * ln_w.exp(), shape: kf + 1.0, scale: c.scale });
            }
        }
        Self { components: out }.merged()
    }

    /// Combines components with identical shape and scale.
    pub fn merged(mut self) -> Self {
        let mut out: Vec<GammaComponent> = Vec::with_capacity(self.components.len());
        for c in self.components.drain(..) {
            match out.iter_mut().find(|o| o.shape == c.shape && o.scale == c.scale) {
                Some(o) => o.weight += c.weight,
                None => out.push(c),
            }
        }
        out.retain(|c| c.weight != 0.0);
        Self { components: out }
    }
}
