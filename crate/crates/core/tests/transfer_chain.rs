use std::f64::consts::PI;

use lzscatter::asymptotics::{self, Prefactor};
use lzscatter::gamma;
use lzscatter::geometry;
use lzscatter::matrix;
use lzscatter::potential::{Family, Potential};
use lzscatter::propagator::{Regime, Thresholds};
use lzscatter::transfer::{self, TransferChain};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn gamma_reflection() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let z = C64::new(rng.gen_range(-4.0..4.0), rng.gen_range(-3.0..3.0));
        let lhs = gamma::gamma(z).unwrap() * gamma::gamma(1.0 - z).unwrap();
        let rhs = PI / (PI * z).sin();
        assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm(), "z={z}");
    }
}

#[test]
fn branching_moduli() {
    for v in [0.5, 1.0, 2.0] {
        let mu: f64 = 1e-4;
        let bc = transfer::branching_constants_scaled(mu, v).unwrap();
        // |b|² = 1/|p|² = πμ/v (1 + O(μ))
        let b2 = 1.0 / bc.p.norm_sqr();
        assert!((b2 / mu - PI / v).abs() < (PI / v) * (PI * mu / v), "v={v}");
        for mu in [1e-3, 1e-2, 0.1] {
            let bc = transfer::branching_constants_scaled(mu, v).unwrap();
            let c2 = (-PI * mu / v).exp();
            assert!((1.0 / bc.p.norm_sqr() + c2 - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn cancelled_exponents_match_phase_products() {
    let p = Potential::preset("three-zero").unwrap();
    let g = geometry::geometry(&p, 0.2).unwrap();
    for h in [0.05, 0.01] {
        let ph = transfer::phase_transfers(&g, h);
        let (same, mixed) = transfer::act_cancel(&g, 2, h);
        assert!((same - ph.a[1] * ph.a[2]).norm() < 1e-12);
        assert!((mixed - ph.a[1] * ph.a[2].conj()).norm() < 1e-12);
    }
}

#[test]
fn ring_and_dense_chains_agree() {
    let th = Thresholds::default();
    for name in ["one-zero", "two-zero", "tanh-pair", "three-zero"] {
        let p = Potential::preset(name).unwrap();
        let h = 0.01;
        let g = geometry::geometry(&p, (0.02 * h as f64).sqrt()).unwrap();
        let chain = TransferChain::build(&g, h, Regime::Nonadiabatic, &th).unwrap();
        let dense = transfer::chain_product(&chain).s_matrix;
        let ring = transfer::chain_product_ring(&chain);
        assert!(matrix::max_abs_diff(&dense, &ring) < 1e-13, "{name}");
    }
}

#[test]
fn single_crossing_chain_is_exact() {
    let th = Thresholds::default();
    for a in [1.0, 2.0] {
        let p = Potential::new(Family::TanhScaled { a }).unwrap();
        for mu in [0.001, 0.01, 0.05] {
            let h = 0.02;
            let g = geometry::geometry(&p, (mu * h as f64).sqrt()).unwrap();
            let chain = TransferChain::build(&g, h, Regime::Nonadiabatic, &th).unwrap();
            let pp = transfer::chain_product(&chain).probability;
            let v = p.slopes[0];
            assert!((pp - (-PI * mu / v).exp()).abs() < 1e-13, "a={a} μ={mu}");
        }
    }
}

/// The linear model has no bounded tails; for one crossing the tail phases are
/// unimodular and drop out of |s21|, so they are set to zero here.
fn linear_geometry(eps: f64) -> geometry::CrossingGeometry {
    let p = Potential::preset("linear").unwrap();
    let a = geometry::action_a(&p, 1, eps).unwrap();
    let (alpha, k_set) = geometry::alpha_and_k(&p.slopes, &[a]);
    geometry::CrossingGeometry {
        epsilon: eps,
        zeros: p.zeros.clone(),
        slopes: p.slopes.clone(),
        turning_points: vec![geometry::turning_point(&p, 1, eps).unwrap()],
        actions_a: vec![a],
        actions_r: vec![],
        actions_r0: vec![],
        action_right: 0.0,
        action_left: 0.0,
        lambda_right: 1.0,
        lambda_left: 1.0,
        alpha,
        k_set,
    }
}

#[test]
fn adiabatic_linear_model_is_landau_zener() {
    let th = Thresholds::default();
    let eps = 0.3;
    let g = linear_geometry(eps);
    assert!((g.actions_a[0] - C64::new(0.0, PI * eps * eps / 2.0)).norm() < 1e-13);
    for h in [0.002, 0.005, 0.009] {
        let pred = asymptotics::predict_adiabatic(&g, h, &th).unwrap();
        let lz = asymptotics::landau_zener_exact(1.0, eps, h);
        assert!((pred.value - lz).abs() <= 1e-10 * lz, "h={h}: {} vs {lz}", pred.value);
        let chain = TransferChain::build(&g, h, Regime::Adiabatic, &th).unwrap();
        let pp = transfer::chain_product(&chain).probability;
        assert!((pp - lz).abs() <= 1e-10 * lz, "h={h}: chain {pp} vs {lz}");
    }
}

/// μ-coefficient of P (even n) or 1 − P (odd n) from the chain, with the
/// O(μ² log μ) remainder removed by one Richardson step.
fn chain_coefficient(p: &Potential, h: f64, mu: f64) -> f64 {
    let th = Thresholds::default();
    let ratio = |m: f64| {
        let g = geometry::geometry(p, (m * h).sqrt()).unwrap();
        let chain = TransferChain::build(&g, h, Regime::Nonadiabatic, &th).unwrap();
        let pp = transfer::chain_product(&chain).probability;
        if p.n() % 2 == 1 { (1.0 - pp) / m } else { pp / m }
    };
    2.0 * ratio(mu / 2.0) - ratio(mu)
}

#[test]
fn chain_reproduces_the_prefactor() {
    for name in ["two-zero", "tanh-pair", "three-zero"] {
        let p = Potential::preset(name).unwrap();
        let pf = Prefactor::new(&p).unwrap();
        let cmax: f64 = pf.slopes.iter().map(|v| v.powf(-0.5)).sum::<f64>().powi(2);
        let mut checked = 0;
        for j in 0..12 {
            let h = 0.01 + 0.0035 * j as f64;
            let cn = pf.eval(h);
            let coef = chain_coefficient(&p, h, 1e-3);
            assert!((coef - PI * cn).abs() <= 0.01 * PI * cmax, "{name} h={h}: {coef} vs {}", PI * cn);
            if cn >= 0.5 * cmax {
                assert!((coef / (PI * cn) - 1.0).abs() < 2e-3, "{name} h={h}: {coef} vs {}", PI * cn);
                checked += 1;
            }
        }
        assert!(checked > 0, "{name}");
    }
}
