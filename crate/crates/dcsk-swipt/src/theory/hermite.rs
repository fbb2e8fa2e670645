//! Gauss–Hermite rules and a mode-centred integrator for positive
//! integrands on the log scale.

use super::TheoryError;

const PIM4: f64 = 0.751_125_544_464_942_5;
const STRETCH: f64 = 2.0;
/// Fraction of the Laplace width used as the rule scale.
const SCALE: f64 = 0.6;
/// Beyond this the unscaled recurrence overflows near the outermost roots.
pub const MAX_ORDER: usize = 180;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermiteRule {
    order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    ln_weights: Vec<f64>,
}

impl GaussHermiteRule {
    /// Nodes and weights by Newton iteration on the normalized Hermite
    /// recurrence.
    pub fn new(order: usize) -> Result<Self, TheoryError> {
        if order == 0 || order > MAX_ORDER {
            return Err(TheoryError::Domain(format!("Gauss-Hermite order {order} outside 1..={MAX_ORDER}")));
        }
        let n = order;
        let nf = n as f64;
        let mut x = vec![0.0; n];
        let mut lw = vec![0.0; n];
        let m = n.div_ceil(2);
        let mut z = 0.0f64;
        for i in 0..m {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-0.166_67),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * x[0],
                3 => 1.91 * z - 0.91 * x[1],
                _ => 2.0 * z - x[i - 2],
            };
            let mut pp = 0.0;
            let mut converged = false;
            for _ in 0..100 {
                let mut p1 = PIM4;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(TheoryError::NoConvergence(format!("Hermite root {i} of order {n}")));
            }
            x[i] = z;
            x[n - 1 - i] = -z;
            lw[i] = 2f64.ln() - 2.0 * pp.abs().ln();
            lw[n - 1 - i] = lw[i];
        }
        if n % 2 == 1 {
            x[m - 1] = 0.0;
        }
        // ascending order
        x.reverse();
        lw.reverse();
        let weights: Vec<f64> = lw.iter().map(|l| l.exp()).collect();
        let total: f64 = weights.iter().sum();
        if (total / std::f64::consts::PI.sqrt() - 1.0).abs() > 1e-10 || x.windows(2).any(|w| w[0] >= w[1]) {
            return Err(TheoryError::NoConvergence(format!("Gauss-Hermite rule of order {n} failed its checks")));
        }
        Ok(Self { order, nodes: x, weights, ln_weights: lw })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// ∫ e^{−x²} f(x) dx.
    pub fn integrate_weighted(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// ∫ g(u) du ≈ Σ w_m e^{u_m²} g(u_m).
    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.ln_weights)
            .map(|(&x, &lw)| {
                let v = g(x);
                if v == 0.0 {
                    0.0
                } else {
                    v * (lw + x * x).exp()
                }
            })
            .sum()
    }

    /// ∫_ℝ exp(ln_g(κ)) dκ for a positive, roughly unimodal integrand.
    ///
    /// The rule is centred on the mode of ln_g (searched inside `bracket`),
    /// scaled by its curvature and stretched with κ = μ + σ·t·sinh(x/t) so that
    /// exponential tails are covered.
    pub fn integrate_ln(&self, ln_g: impl Fn(f64) -> f64, bracket: (f64, f64)) -> f64 {
        let (mu, sigma) = laplace_centre(&ln_g, bracket);
        self.nodes
            .iter()
            .zip(&self.ln_weights)
            .map(|(&x, &lw)| {
                let s = x / STRETCH;
                let kappa = mu + sigma * STRETCH * s.sinh();
                let l = ln_g(kappa);
                if !l.is_finite() {
                    return 0.0;
                }
                let t = (lw + x * x + l + (sigma * s.cosh()).ln()).exp();
                if t.is_finite() {
                    t
                } else {
                    0.0
                }
            })
            .sum()
    }
}

fn finite_or_neg_inf(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// Mode and curvature scale of ln_g.
fn laplace_centre(ln_g: &impl Fn(f64) -> f64, (lo, hi): (f64, f64)) -> (f64, f64) {
    const GRID: usize = 240;
    let step = (hi - lo) / GRID as f64;
    let mut best = (lo, f64::NEG_INFINITY);
    for i in 0..=GRID {
        let k = lo + step * i as f64;
        let v = finite_or_neg_inf(ln_g(k));
        if v > best.1 {
            best = (k, v);
        }
    }
    // golden-section refinement on the bracketing cell pair
    let (mut a, mut b) = (best.0 - step, best.0 + step);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = finite_or_neg_inf(ln_g(c));
    let mut fd = finite_or_neg_inf(ln_g(d));
    for _ in 0..60 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = finite_or_neg_inf(ln_g(c));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = finite_or_neg_inf(ln_g(d));
        }
        if (b - a).abs() < 1e-9 {
            break;
        }
    }
    let mu = 0.5 * (a + b);
    let h = 1e-2;
    let f0 = ln_g(mu);
    let d2 = (ln_g(mu + h) - 2.0 * f0 + ln_g(mu - h)) / (h * h);
    let sigma = if d2.is_finite() && d2 < 0.0 {
        (SCALE / (-d2).sqrt()).clamp(1e-3, 50.0)
    } else {
        ((hi - lo) / 20.0).clamp(1e-3, 50.0)
    };
    (mu, sigma)
}
