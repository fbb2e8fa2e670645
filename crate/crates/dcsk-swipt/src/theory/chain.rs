//! Buffer-occupancy Markov chains of the two link-selection protocols.

use super::TheoryError;

/// Balanced-chain threshold on |ξ − 1| below which limits replace the
/// geometric closed forms.
pub const BALANCE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum ChainProtocol {
    One,
    Two,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BufferChain {
    pub protocol: ChainProtocol,
    pub capacity: usize,
    pub p_sr: f64,
    pub p_rd: f64,
    pub p_es: f64,
    pub steady_state: Vec<f64>,
}

fn check_prob(name: &str, p: f64) -> Result<(), TheoryError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(TheoryError::Domain(format!("{name} = {p} is not a probability")))
    }
}

fn normalize_log(lw: &[f64]) -> Vec<f64> {
    let m = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = lw.iter().map(|&l| (l - m).exp()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// Σ_{m=1}^{n} x^m.
fn geometric_sum(x: f64, n: usize) -> f64 {
    if (x - 1.0).abs() < BALANCE_TOL {
        n as f64
    } else {
        (x - x.powi(n as i32 + 1)) / (1.0 - x)
    }
}

impl BufferChain {
    /// Per-step transition probabilities (up, stay, down) out of state ν.
    pub fn transitions(&self, nu: usize) -> (f64, f64, f64) {
        let j = self.capacity;
        let s = (1.0 - self.p_es) * self.p_sr;
        let (up, down) = match self.protocol {
            ChainProtocol::One => {
                if nu == 0 {
                    (1.0 - self.p_es * self.p_sr, 0.0)
                } else if nu == j {
                    (0.0, 1.0)
                } else {
                    (s, self.p_rd)
                }
            }
            ChainProtocol::Two => (if nu < j { s } else { 0.0 }, if nu > 0 { self.p_rd } else { 0.0 }),
        };
        (up, 1.0 - up - down, down)
    }

    /// Dense (J+1)×(J+1) transition matrix, row-stochastic.
    pub fn transition_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.capacity + 1;
        let mut t = vec![vec![0.0; n]; n];
        for (nu, row) in t.iter_mut().enumerate() {
            let (up, stay, down) = self.transitions(nu);
            row[nu] += stay;
            if nu + 1 < n {
                row[nu + 1] += up;
            }
            if nu > 0 {
                row[nu - 1] += down;
            }
        }
        t
    }

    pub fn p_full(&self) -> f64 {
        self.steady_state[self.capacity]
    }

    pub fn p_empty(&self) -> f64 {
        self.steady_state[0]
    }

    /// Mean number of packets in the buffer.
    pub fn mean_occupancy(&self) -> f64 {
        self.steady_state.iter().enumerate().map(|(j, p)| j as f64 * p).sum()
    }

    /// Packets admitted per slot in steady state.
    pub fn arrival_rate(&self) -> f64 {
        (0..self.capacity).map(|nu| self.steady_state[nu] * self.transitions(nu).0).sum()
    }

    /// Largest absolute residual of π = πT.
    pub fn balance_residual(&self) -> f64 {
        let t = self.transition_matrix();
        let n = self.capacity + 1;
        (0..n)
            .map(|k| {
                let flow: f64 = (0..n).map(|i| self.steady_state[i] * t[i][k]).sum();
                (flow - self.steady_state[k]).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Stationary distribution from the birth–death structure of the chain.
pub fn steady_state(
    protocol: ChainProtocol,
    capacity: usize,
    p_sr: f64,
    p_rd: f64,
    p_es: f64,
) -> Result<BufferChain, TheoryError> {
    if capacity == 0 {
        return Err(TheoryError::Domain("buffer capacity must be at least 1".into()));
    }
    check_prob("P_SR", p_sr)?;
    check_prob("P_RD", p_rd)?;
    check_prob("P_ES", p_es)?;
    if p_sr + p_rd > 1.0 + 1e-12 {
        return Err(TheoryError::Domain(format!("P_SR + P_RD = {} exceeds 1", p_sr + p_rd)));
    }
    let mut chain = BufferChain { protocol, capacity, p_sr, p_rd, p_es, steady_state: Vec::new() };
    let j = capacity;
    // detailed balance: π_{ν+1}·down(ν+1) = π_ν·up(ν)
    let mut lw = vec![0.0; j + 1];
    for nu in 0..j {
        let up = chain.transitions(nu).0;
        let down = chain.transitions(nu + 1).2;
        let next = lw[nu] + up.ln() - down.ln();
        if next.is_nan() {
            return Err(TheoryError::Domain("chain has no unique stationary distribution".into()));
        }
        if next == f64::INFINITY {
            // states below cannot be re-entered: they are transient
            lw[..=nu].iter_mut().for_each(|l| *l = f64::NEG_INFINITY);
            lw[nu + 1] = 0.0;
        } else {
            lw[nu + 1] = next;
        }
    }
    chain.steady_state = normalize_log(&lw);
    Ok(chain)
}

/// Closed-form P_full for Protocol 1.
pub fn p_full_protocol1(capacity: usize, p_sr: f64, p_rd: f64, p_es: f64) -> f64 {
    let j = capacity;
    let xi = p_rd / ((1.0 - p_es) * p_sr);
    let a = 1.0 - p_es * p_sr;
    let interior = if j >= 2 { geometric_sum(xi, j - 1) / p_rd } else { 0.0 };
    1.0 / (1.0 + interior + xi.powi(j as i32 - 1) / a)
}

/// Closed-form P_empty for Protocol 1.
pub fn p_empty_protocol1(capacity: usize, p_sr: f64, p_rd: f64, p_es: f64) -> f64 {
    let xi = p_rd / ((1.0 - p_es) * p_sr);
    xi.powi(capacity as i32 - 1) / (1.0 - p_es * p_sr) * p_full_protocol1(capacity, p_sr, p_rd, p_es)
}

/// Closed-form P_full for Protocol 2.
pub fn p_full_protocol2(capacity: usize, p_sr: f64, p_rd: f64, p_es: f64) -> f64 {
    let j = capacity as i32;
    let s = (1.0 - p_es) * p_sr;
    if ((s / p_rd) - 1.0).abs() < BALANCE_TOL {
        return 1.0 / (capacity as f64 + 1.0);
    }
    s.powi(j) * (s - p_rd) / (s.powi(j + 1) - p_rd.powi(j + 1))
}

/// Closed-form P_empty for Protocol 2.
pub fn p_empty_protocol2(capacity: usize, p_sr: f64, p_rd: f64, p_es: f64) -> f64 {
    let j = capacity as i32;
    let s = (1.0 - p_es) * (1.0 - p_rd);
    let _ = p_sr;
    if ((s / p_rd) - 1.0).abs() < BALANCE_TOL {
        return 1.0 / (capacity as f64 + 1.0);
    }
    p_rd.powi(j) * (p_rd - s) / (p_rd.powi(j + 1) - s.powi(j + 1))
}
