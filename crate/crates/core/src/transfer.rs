//! Transfer matrices between local solution bases and their product.
//!
//! S = T_r⁻¹ T₁ T_{1,2} ⋯ T_n T_l = ∏_{k=0}^{n} 𝒯_k with 𝒯_k = T_k T_{k,k+1},
//! T₀ = Id, T_{0,1} = T_r⁻¹ and T_{n,n+1} = T_l. Only principal parts are
//! built; the dropped 1 + 𝒪(·) factors are listed in `error_orders`.

use num_complex::Complex64 as C64;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::gamma::ln_gamma;
use crate::geometry::CrossingGeometry;
use crate::matrix::{self, M2};
use crate::propagator::{Regime, Thresholds};
use crate::ring::{self, RingElement};

const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchingConstants {
    pub p: C64,
    pub q: C64,
    pub gamma: C64,
}

/// p, q, γ of the branching model at slope v:
/// γ = (1/i)√(v/(πμ)) μ^{−iμ/(2v)} Γ(1 − iμ/(2v)), p = γe^{πμ/(4v)}, q = γe^{−πμ/(4v)}.
pub fn branching_constants_scaled(mu: f64, v: f64) -> Result<BranchingConstants> {
    if !(mu > 0.0) || !(v > 0.0) {
        return Err(Error::Config(format!("branching constants need μ > 0 and v > 0, got μ={mu}, v={v}")));
    }
    let y = mu / (2.0 * v);
    // log of everything except the 1/i prefactor
    let lg = 0.5 * (v / (PI * mu)).ln() - I * y * mu.ln() + ln_gamma(C64::new(1.0, -y))?;
    let gamma = -I * lg.exp();
    let s = PI * mu / (4.0 * v);
    Ok(BranchingConstants { p: gamma * s.exp(), q: gamma * (-s).exp(), gamma })
}

pub fn branching_constants(mu: f64) -> Result<BranchingConstants> {
    branching_constants_scaled(mu, 1.0)
}

/// ϑ = π/4 + μ log μ, the phase of ω/ω̄ for ω ∝ e^{iπ/8}. With 3π/4 in its
/// place the interference term between crossings changes sign and the chain
/// no longer matches direct propagation for n ≥ 2.
pub fn theta(mu: f64) -> f64 {
    if mu == 0.0 {
        0.25 * PI
    } else {
        0.25 * PI + mu * mu.ln()
    }
}

/// (b, c) with b = e^{iϑ}/p̄ and c = q/(ip) at slope v. At μ = 0 the limits b = 0, c = 1/i are used.
fn b_c(mu: f64, v: f64) -> Result<(C64, C64)> {
    if mu == 0.0 {
        return Ok((C64::new(0.0, 0.0), -I));
    }
    let bc = branching_constants_scaled(mu, v)?;
    let b = C64::from_polar(1.0, theta(mu)) / bc.p.conj();
    // q/p = e^{−πμ/(2v)} exactly; taking the ratio of the computed values keeps rounding noise out
    let c = -I * (-PI * mu / (2.0 * v)).exp();
    Ok((b, c))
}

fn symmetric(b: C64, c: C64) -> M2 {
    [[b, c], [c, b.conj()]]
}

fn check_nonadiabatic(mu: f64, th: &Thresholds) -> Result<()> {
    if mu > th.mu0 {
        return Err(Error::Regime {
            regime: "nonadiabatic",
            detail: format!("μ = {mu} above threshold {}", th.mu0),
        });
    }
    Ok(())
}

/// Principal part of the branching-model transfer matrix:
/// [[e^{iϑ}/p̄, q/(ip)], [q/(ip), conj(e^{iϑ}/p̄)]].
pub fn local_transfer_nonadiabatic(mu: f64, th: &Thresholds) -> Result<M2> {
    check_nonadiabatic(mu, th)?;
    let (b, c) = b_c(mu, 1.0)?;
    Ok(symmetric(b, c))
}

/// T_k after the rescaling t ↦ √v_k (t − t_k).
pub fn scaled_transfer_k(slope: f64, eps: f64, h: f64, th: &Thresholds) -> Result<M2> {
    let mu = eps * eps / h;
    check_nonadiabatic(mu, th)?;
    let (b, c) = b_c(mu, slope)?;
    Ok(symmetric(b, c))
}

/// [[1, (−1)^{k−1} i e^{iA_k/h}], [same, 1]]
pub fn adiabatic_transfer_k(geom: &CrossingGeometry, k: usize, h: f64, th: &Thresholds) -> Result<M2> {
    let eps = geom.epsilon;
    if !(h <= th.adiabatic0 * eps * eps) {
        return Err(Error::Regime {
            regime: "adiabatic",
            detail: format!("h/ε² = {} above threshold {}", h / (eps * eps), th.adiabatic0),
        });
    }
    let c = adiabatic_c(geom, k, h);
    Ok(symmetric(C64::new(1.0, 0.0), c))
}

fn adiabatic_c(geom: &CrossingGeometry, k: usize, h: f64) -> C64 {
    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
    sign * I * (I * geom.a(k) / h).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseFactors {
    /// a_0 = 1/a_r, a_1, …, a_{n−1}, a_n = a_l
    pub a: Vec<C64>,
    pub a_r: C64,
    pub a_l: C64,
    pub t_r: M2,
    pub t_l: M2,
}

/// a_k = e^{(i/2h)(A_k − A_{k+1} + R_k)}, a_r = e^{(i/2h)(A_1 − A_r + 2λ_r t_1)},
/// a_l = e^{(i/2h)(A_n − A_l + 2λ_l t_n)}.
pub fn phase_transfers(geom: &CrossingGeometry, h: f64) -> PhaseFactors {
    let n = geom.n();
    let e = |x: C64| (I * x / (2.0 * h)).exp();
    let a_r = e(geom.a(1) - geom.action_right + 2.0 * geom.lambda_right * geom.zeros[0]);
    let a_l = e(geom.a(n) - geom.action_left + 2.0 * geom.lambda_left * geom.zeros[n - 1]);
    let mut a = vec![1.0 / a_r];
    for k in 1..n {
        a.push(e(geom.a(k) - geom.a(k + 1) + geom.r(k)));
    }
    a.push(a_l);
    let t_r = matrix::diag(-a_r, (I * a_r).conj());
    let t_l = matrix::diag(-a_l, (I * a_l).conj());
    PhaseFactors { a, a_r, a_l, t_r, t_l }
}

/// a_{k−1}a_k and a_{k−1}ā_k through the cancelled exponents, for 2 ≤ k ≤ n−1.
pub fn act_cancel(geom: &CrossingGeometry, k: usize, h: f64) -> (C64, C64) {
    let e = |x: C64| (I * x / (2.0 * h)).exp();
    let (am, a, ap) = (geom.a(k - 1), geom.a(k), geom.a(k + 1));
    let (rm, r) = (geom.r(k - 1), geom.r(k));
    (e(am - ap + rm + r), e(am + ap.conj() - 2.0 * a.re + rm - r))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabeledMatrix {
    pub label: String,
    pub matrix: M2,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferChain {
    pub n: usize,
    pub regime: Regime,
    pub epsilon: f64,
    pub h: f64,
    pub mu: f64,
    /// [T_r⁻¹, T_1, T_{1,2}, …, T_n, T_l]
    pub entries: Vec<LabeledMatrix>,
    pub a: Vec<C64>,
    pub b: Vec<C64>,
    pub c: Vec<C64>,
    pub error_orders: Vec<String>,
}

impl TransferChain {
    pub fn build(geom: &CrossingGeometry, h: f64, regime: Regime, th: &Thresholds) -> Result<TransferChain> {
        let n = geom.n();
        let eps = geom.epsilon;
        let mu = eps * eps / h;
        let ph = phase_transfers(geom, h);
        let mut b = Vec::with_capacity(n);
        let mut c = Vec::with_capacity(n);
        let mut tk = Vec::with_capacity(n);
        for k in 1..=n {
            let m = match regime {
                Regime::Nonadiabatic => scaled_transfer_k(geom.slopes[k - 1], eps, h, th)?,
                Regime::Adiabatic => adiabatic_transfer_k(geom, k, h, th)?,
                Regime::Critical => {
                    return Err(Error::Regime { regime: "critical", detail: "no transfer asymptotics".into() })
                }
            };
            b.push(m[0][0]);
            c.push(m[1][0]);
            tk.push(m);
        }
        let mut entries = vec![LabeledMatrix { label: "T_r^-1".into(), matrix: matrix::inverse(&ph.t_r) }];
        for k in 1..=n {
            entries.push(LabeledMatrix { label: format!("T_{k}"), matrix: tk[k - 1] });
            if k < n {
                entries.push(LabeledMatrix {
                    label: format!("T_{k},{}", k + 1),
                    matrix: matrix::diag(ph.a[k], ph.a[k].conj()),
                });
            }
        }
        entries.push(LabeledMatrix { label: "T_l".into(), matrix: ph.t_l });
        let error_orders = match regime {
            Regime::Nonadiabatic => vec![
                "T_k: 1 + O(sqrt(h)) + O(eps/sqrt(h))".into(),
                "T_{k,k+1}, T_r, T_l: 1 + O(h)".into(),
                "P: O(sqrt(h) mu) + O(mu^(3/2))".into(),
            ],
            _ => vec![
                "T_k diagonal: 1 + O(h/eps^2)".into(),
                "T_k off-diagonal: 1 + O(h)".into(),
                "T_{k,k+1}, T_r, T_l: 1 + O(h)".into(),
                "P: O((h/eps^2) exp(-2 alpha/h))".into(),
            ],
        };
        Ok(TransferChain { n, regime, epsilon: eps, h, mu, entries, a: ph.a, b, c, error_orders })
    }

    /// Factors 𝒯_0 … 𝒯_n in ring form, without the constant diag(−1, i) and diag(−1, −i) ends.
    pub fn ring_factors(&self) -> Vec<RingElement> {
        let z = C64::new(0.0, 0.0);
        let mut v = vec![RingElement::new(self.a[0], self.a[0].conj(), z, z)];
        for k in 1..=self.n {
            v.push(ring::script_t(self.a[k], self.b[k - 1], self.c[k - 1]));
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainProduct {
    pub s_matrix: M2,
    pub probability: f64,
}

/// Dense product in the stored order; P_pred = |S₂₁|².
pub fn chain_product(chain: &TransferChain) -> ChainProduct {
    let s = matrix::product(chain.entries.iter().map(|e| &e.matrix));
    ChainProduct { s_matrix: s, probability: s[1][0].norm_sqr() }
}

/// The same product through the ring, with the constant end factors restored.
pub fn chain_product_ring(chain: &TransferChain) -> M2 {
    let inner = ring::ring_product(&chain.ring_factors()).to_dense();
    let left = matrix::diag(C64::new(-1.0, 0.0), I);
    let right = matrix::diag(C64::new(-1.0, 0.0), -I);
    matrix::mul(&matrix::mul(&left, &inner), &right)
}
