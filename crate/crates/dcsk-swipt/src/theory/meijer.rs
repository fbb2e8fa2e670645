//! G^{2,0}_{0,2} through its Bessel-K form and the Gamma-product density.

use super::special::{ln_bessel_k, ln_gamma};
use super::TheoryError;

/// G^{2,0}_{0,2}(x | b1, b2) = 2·x^{(b1+b2)/2}·K_{b1−b2}(2√x).
pub fn meijer_g_2002(x: f64, b1: f64, b2: f64) -> Result<f64, TheoryError> {
    Ok(ln_meijer_g_2002(x, b1, b2)?.exp())
}

pub fn ln_meijer_g_2002(x: f64, b1: f64, b2: f64) -> Result<f64, TheoryError> {
    if !(x > 0.0) {
        return Err(TheoryError::Domain(format!("Meijer-G argument {x} must be positive")));
    }
    Ok(2f64.ln() + 0.5 * (b1 + b2) * x.ln() + ln_bessel_k(b1 - b2, 2.0 * x.sqrt())?)
}

/// ln density of c·X·Y with X ~ Gamma(a, 1), Y ~ Gamma(b, 1), at z > 0.
pub fn ln_gamma_product_pdf(z: f64, a: f64, b: f64, c: f64) -> f64 {
    if !(z > 0.0) {
        return f64::NEG_INFINITY;
    }
    let x = z / c;
    match ln_meijer_g_2002(x, a - 1.0, b - 1.0) {
        Ok(g) => g - ln_gamma(a) - ln_gamma(b) - c.ln(),
        Err(_) => f64::NEG_INFINITY,
    }
}
