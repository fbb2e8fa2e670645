mod common;

use common::*;
use dcsk_swipt::montecarlo::{SystemParams, TapProfile};
use dcsk_swipt::theory::ber::{approx_residual_scale, gamma_rd_pdf, q_ga};
use dcsk_swipt::theory::special::erfc;
use dcsk_swipt::theory::{ber_protocol1, ber_protocol2, delay_protocol1, delay_protocol2, link_selection_probs};
use dcsk_swipt::GaussHermiteRule;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn rule() -> GaussHermiteRule {
    GaussHermiteRule::new(40).unwrap()
}

/// Gamma CDF for integer shape.
fn gamma_cdf(x: f64, shape: u32, scale: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let y = x / scale;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..shape {
        term *= y / k as f64;
        sum += term;
    }
    1.0 - (-y).exp() * sum
}

fn kernel(g: f64, beta: f64) -> f64 {
    0.5 * erfc(g / (8.0 * g + 8.0 * beta).sqrt())
}

fn random_params(rng: &mut ChaCha8Rng) -> SystemParams {
    let mut p = SystemParams::at_snr(rng.random_range(10.0..32.0));
    p.theta = rng.random_range(0.15..0.85);
    p.delta = rng.random_range(0.4..2.5);
    p.p_i = rng.random_range(0.0..0.03);
    p.buffer_size = rng.random_range(1..40);
    p
}

#[test]
fn k1_matches_double_integral() {
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    for _ in 0..5 {
        let p = random_params(&mut rng);
        let t = ber_protocol1(&p, &rule()).unwrap();
        let (s_sr, s_rd) = (p.mean_harvest_sr(), p.mean_harvest_dr());
        let (w1, beta, delta) = (p.w1(), p.beta as f64, p.delta);
        let decodable = integrate_half_line(|v| gamma_pdf(v, 3.0, s_sr), &[p.p_i.max(1e-300), 3.0 * s_sr])
            - integrate(|v| gamma_pdf(v, 3.0, s_sr), 0.0, p.p_i);
        // ∫∫_{δu ≤ v} q(W1 v) f_SR(v) f_DR(u) du dv
        let inner = |v: f64| integrate(|u| gamma_pdf(u, 3.0, s_rd), 0.0, v / delta);
        let knots = [0.3 * s_sr, s_sr, 3.0 * s_sr, 10.0 * s_sr];
        let outer = integrate_half_line(|v| kernel(w1 * v, beta) * gamma_pdf(v, 3.0, s_sr) * inner(v), &knots);
        let oracle = decodable * outer;
        let k1 = t.components.k1;
        assert!(rel(k1, oracle) < 1e-4, "{p:?}: K1 {k1} vs {oracle}");
    }
}

#[test]
fn conditioned_link_terms_match_direct_integration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..3 {
        let p = random_params(&mut rng);
        let t = ber_protocol2(&p, &rule()).unwrap().components;
        let (s_sr, s_rd, pi, d) = (p.mean_harvest_sr(), p.mean_harvest_dr(), p.p_i, p.delta);
        let beta = p.beta as f64;
        // arrival harvest: selected (F_DR(v/δ)) and decodable (v > P_I)
        let f_arr = |v: f64| if v > pi { gamma_pdf(v, 3.0, s_sr) * gamma_cdf(v / d, 3, s_rd) } else { 0.0 };
        // departure harvest: R→D wins (P_SR,EH < δζ)
        let f_dep = |z: f64| gamma_pdf(z, 3.0, s_rd) * gamma_cdf(d * z, 3, s_sr);
        let kv = [pi.max(1e-12), pi + s_sr, pi + 4.0 * s_sr];
        let kz = [0.3 * s_rd, s_rd, 4.0 * s_rd];
        let mass_a = integrate_half_line(f_arr, &kv);
        let mass_d = integrate_half_line(f_dep, &kz);
        let sr = integrate_half_line(|v| kernel(p.w1() * v, beta) * f_arr(v), &kv) / mass_a;
        let rd = integrate_half_line(
            |v| f_arr(v) * integrate_half_line(|z| kernel(p.w2() * (v - pi) * z, beta) * f_dep(z), &kz),
            &kv,
        ) / (mass_a * mass_d);
        assert!(rel(t.sr_cond, sr) < 1e-5, "P'_SR {} vs {sr}", t.sr_cond);
        assert!(rel(t.rd_cond, rd) < 1e-5, "P'_RD {} vs {rd}", t.rd_cond);
    }
}

#[test]
fn selection_probability_matches_sampling() {
    let p = SystemParams::at_snr(25.0);
    let (p_sr, p_rd) = link_selection_probs(&p).unwrap();
    assert!((p_sr + p_rd - 1.0).abs() < 1e-15);
    let g_sr = Gamma::new(3.0, p.mean_harvest_sr()).unwrap();
    let g_rd = Gamma::new(3.0, p.mean_harvest_dr()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 10_000_000u64;
    let wins = (0..n).filter(|_| g_sr.sample(&mut rng) >= p.delta * g_rd.sample(&mut rng)).count();
    let mc = wins as f64 / n as f64;
    assert!((mc - p_sr).abs() < 5e-4, "{p_sr} vs sampled {mc}");
}

#[test]
fn selection_probability_limits() {
    let mut p = SystemParams::at_snr(20.0);
    p.taps_sr = TapProfile { powers: vec![1.0], delays: vec![0] };
    p.taps_rd = p.taps_sr.clone();
    p.delta = 1.0;
    assert!((link_selection_probs(&p).unwrap().0 - 0.5).abs() < 1e-15);
    let mut q = SystemParams::at_snr(20.0);
    q.delta = 1e-9;
    assert!(link_selection_probs(&q).unwrap().0 > 1.0 - 1e-9);
}

#[test]
fn gamma_rd_density_normalized() {
    let p = SystemParams::at_snr(25.0);
    let c = 2.0 * approx_residual_scale(&p).unwrap() * (1.0 / 3.0) / p.n0_rd;
    let knots = [1e-3 * c, 0.1 * c, c, 9.0 * c, 40.0 * c];
    let total = integrate_half_line(|z| gamma_rd_pdf(&p, z).unwrap(), &knots);
    assert!((total - 1.0).abs() < 1e-6, "{total}");
}

#[test]
fn gamma_rd_density_matches_samples() {
    let p = SystemParams::at_snr(25.0);
    let s = approx_residual_scale(&p).unwrap();
    let pr = Gamma::new(3.0, s).unwrap();
    let gain = Gamma::new(3.0, 1.0 / 3.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut z: Vec<f64> = (0..100_000).map(|_| 2.0 * pr.sample(&mut rng) * gain.sample(&mut rng) / p.n0_rd).collect();
    z.sort_by(f64::total_cmp);
    let n = z.len() as f64;
    let mut cdf = 0.0;
    let mut prev = 0.0;
    let mut ks: f64 = 0.0;
    for (i, &x) in z.iter().enumerate() {
        cdf += integrate(|t| gamma_rd_pdf(&p, t).unwrap(), prev, x);
        prev = x;
        ks = ks.max((cdf - i as f64 / n).abs()).max((cdf - (i + 1) as f64 / n).abs());
    }
    assert!(ks < 0.01, "KS {ks}");
}

#[test]
fn noiseless_limit_drives_bound_to_zero() {
    let mut p = SystemParams::at_snr(90.0);
    p.p_i = 0.0;
    for t in [ber_protocol1(&p, &rule()).unwrap(), ber_protocol2(&p, &rule()).unwrap()] {
        assert!(t.ber_bound < 1e-6, "{}", t.ber_bound);
    }
    assert!(q_ga(1e9, 160.0) < 1e-100);
}

#[test]
fn components_are_probabilities_under_fuzz() {
    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    let r = rule();
    for _ in 0..1000 {
        let p = random_params(&mut rng);
        for t in [ber_protocol1(&p, &r).unwrap(), ber_protocol2(&p, &r).unwrap()] {
            let c = &t.components;
            for v in [
                t.ber_bound,
                c.p_es,
                c.p_sr,
                c.p_rd,
                c.p_full,
                c.p_empty,
                c.k1,
                c.k2,
                c.sr_cond,
                c.rd_cond,
                c.sr_uncond,
                c.rd_uncond,
                c.rd_empty_arrival,
                c.rd_full_departure,
            ] {
                assert!((0.0..=1.0).contains(&v), "{p:?}: {c:?}");
            }
            for v in [t.avg_delay, t.delay.t_qt, t.delay.t_st, t.delay.t_cs] {
                assert!(v >= 0.0, "{p:?}: {:?}", t.delay);
            }
        }
    }
}

#[test]
fn protocol2_bound_below_protocol1() {
    for snr in [10.0, 15.0, 20.0, 25.0, 30.0] {
        let p = SystemParams::at_snr(snr);
        let (a, b) = (ber_protocol1(&p, &rule()).unwrap(), ber_protocol2(&p, &rule()).unwrap());
        assert!(b.ber_bound <= a.ber_bound, "{snr} dB");
        assert!(a.quadrature_rel_diff < 1e-6 && b.quadrature_rel_diff < 1e-6, "{snr} dB: {}", a.quadrature_rel_diff);
        assert!(a.warnings.is_empty() && b.warnings.is_empty());
    }
}

#[test]
fn bound_decreases_with_snr() {
    let mut last = [1.0, 1.0];
    for snr in [10.0, 15.0, 20.0, 25.0, 30.0] {
        let p = SystemParams::at_snr(snr);
        let now = [ber_protocol1(&p, &rule()).unwrap().ber_bound, ber_protocol2(&p, &rule()).unwrap().ber_bound];
        assert!(now[0] < last[0] && now[1] < last[1]);
        last = now;
    }
}

#[test]
fn low_order_rules_rejected() {
    let p = SystemParams::at_snr(20.0);
    assert!(ber_protocol1(&p, &GaussHermiteRule::new(10).unwrap()).is_err());
}

#[test]
fn no_decoding_cost_means_no_shortage_delay() {
    let mut p = SystemParams::at_snr(20.0);
    p.p_i = 0.0;
    assert_eq!(delay_protocol1(&p).unwrap().t_st, 0.0);
    assert_eq!(delay_protocol2(&p).unwrap().t_st, 0.0);
}

#[test]
fn protocol2_contention_delay_grows_with_threshold() {
    let mut last = 0.0;
    for i in 0..12 {
        let mut p = SystemParams::at_snr(30.0);
        p.delta = 2.0 + 0.5 * i as f64;
        let d = delay_protocol2(&p).unwrap();
        assert!(d.t_cs > last, "δ={}: {}", p.delta, d.t_cs);
        last = d.t_cs;
    }
}

#[test]
fn unequal_taps_rejected_by_theory() {
    let mut p = SystemParams::at_snr(20.0);
    p.taps_sr = TapProfile { powers: vec![0.5, 0.3, 0.2], delays: vec![0, 2, 5] };
    assert!(ber_protocol1(&p, &rule()).is_err());
}
