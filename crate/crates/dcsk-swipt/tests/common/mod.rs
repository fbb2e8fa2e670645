//! Independent numerical oracles shared by the integration tests.
#![allow(dead_code)]

use num_complex::Complex64;
use quadrature::double_exponential;

/// ∫_a^b f by tanh-sinh quadrature.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    double_exponential::integrate(f, a, b, 1e-14).integral
}

/// ∫_a^∞ f via x = a + t/(1−t).
pub fn integrate_to_inf(f: impl Fn(f64) -> f64, a: f64) -> f64 {
    integrate(
        |t| {
            if t >= 1.0 {
                return 0.0;
            }
            let x = a + t / (1.0 - t);
            let v = f(x) / ((1.0 - t) * (1.0 - t));
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
    )
}

/// Splits [0, ∞) at `knots` so peaked integrands are resolved.
pub fn integrate_half_line(f: impl Fn(f64) -> f64, knots: &[f64]) -> f64 {
    let mut total = 0.0;
    let mut lo = 0.0;
    for &k in knots {
        total += integrate(&f, lo, k);
        lo = k;
    }
    total + integrate_to_inf(&f, lo)
}

/// ∫_ℝ f via x = t/(1−t²).
pub fn integrate_real_line(f: impl Fn(f64) -> f64) -> f64 {
    integrate(
        |t| {
            let d = 1.0 - t * t;
            if d <= 0.0 {
                return 0.0;
            }
            let v = f(t / d) * (1.0 + t * t) / (d * d);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        -1.0,
        1.0,
    )
}

/// Γ(z) for complex z (Lanczos g=7 with reflection).
pub fn complex_gamma(z: Complex64) -> Complex64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    let pi = std::f64::consts::PI;
    if z.re < 0.5 {
        return pi / ((z * pi).sin() * complex_gamma(1.0 - z));
    }
    let z = z - 1.0;
    let mut a = Complex64::new(C[0], 0.0);
    for (i, &c) in C.iter().enumerate().skip(1) {
        a += c / (z + i as f64);
    }
    let t = z + G + 0.5;
    (2.0 * pi).sqrt() * t.powc(z + 0.5) * (-t).exp() * a
}

/// G^{2,0}_{0,2}(x | b1, b2) from its Mellin–Barnes integral on Re s = c.
pub fn meijer_mellin_barnes(x: f64, b1: f64, b2: f64) -> f64 {
    let c = 1.0 - b1.min(b2);
    let lnx = x.ln();
    let v = integrate_real_line(|t| {
        let s = Complex64::new(c, t);
        let g = complex_gamma(s + b1) * complex_gamma(s + b2) * (-s * lnx).exp();
        g.re
    });
    v / (2.0 * std::f64::consts::PI)
}

/// ∫_a^b f over `pieces` equal subintervals.
pub fn integrate_pieces(f: impl Fn(f64) -> f64, a: f64, b: f64, pieces: usize) -> f64 {
    let h = (b - a) / pieces as f64;
    (0..pieces).map(|i| integrate(&f, a + h * i as f64, a + h * (i + 1) as f64)).sum()
}

/// K_ν(z) = ∫_0^∞ e^{−z cosh t} cosh(νt) dt, computed as e^{−z}·∫ e^{−z(cosh t − 1)}….
pub fn bessel_k_integral(nu: f64, z: f64) -> f64 {
    // integrand below e^{−700} of its peak past t_max
    let t_max = (1.0 + 700.0 / z).acosh() + 1.0;
    (-z).exp()
        * integrate_pieces(
            |t| (-z * (t.cosh() - 1.0) + nu * t).exp() * 0.5 * (1.0 + (-2.0 * nu * t).exp()),
            0.0,
            t_max,
            16,
        )
}

/// Solves A x = b by Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Stationary vector of a row-stochastic matrix: (Tᵀ − I)π = 0 with one
/// equation replaced by Σπ = 1.
pub fn stationary(t: &[Vec<f64>]) -> Vec<f64> {
    let n = t.len();
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            a[k][i] = t[i][k] - if i == k { 1.0 } else { 0.0 };
        }
    }
    a[n - 1] = vec![1.0; n];
    let mut b = vec![0.0; n];
    b[n - 1] = 1.0;
    solve(a, b)
}

pub fn gamma_pdf(x: f64, shape: f64, scale: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let ln = (shape - 1.0) * x.ln() - x / scale - shape * scale.ln() - ln_gamma_real(shape);
    ln.exp()
}

/// ln Γ for positive reals through the complex Lanczos form.
pub fn ln_gamma_real(x: f64) -> f64 {
    complex_gamma(Complex64::new(x, 0.0)).re.ln()
}
