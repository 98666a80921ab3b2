//! Direct integration of ih ψ' = H(t;ε) ψ and extraction of the scattering matrix.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, Side};
use crate::matrix::{self, M2, V2};
use crate::ode;
use crate::potential::Potential;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Nonadiabatic,
    Adiabatic,
    Critical,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Nonadiabatic => "nonadiabatic",
            Regime::Adiabatic => "adiabatic",
            Regime::Critical => "critical",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// non-adiabatic when μ = ε²/h ≤ mu0
    pub mu0: f64,
    /// adiabatic when h/ε² ≤ adiabatic0
    pub adiabatic0: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { mu0: 0.1, adiabatic0: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeParams {
    pub epsilon: f64,
    pub h: f64,
    pub mu: f64,
    pub regime: Regime,
}

impl RegimeParams {
    pub fn new(epsilon: f64, h: f64) -> Result<RegimeParams> {
        RegimeParams::with_thresholds(epsilon, h, &Thresholds::default())
    }

    pub fn with_thresholds(epsilon: f64, h: f64, th: &Thresholds) -> Result<RegimeParams> {
        if !(epsilon >= 0.0) || !(h > 0.0) || !epsilon.is_finite() || !h.is_finite() {
            return Err(Error::Config(format!("need ε ≥ 0 and h > 0, got ε={epsilon}, h={h}")));
        }
        let mu = epsilon * epsilon / h;
        let regime = if mu <= th.mu0 {
            Regime::Nonadiabatic
        } else if h <= th.adiabatic0 * epsilon * epsilon {
            Regime::Adiabatic
        } else {
            Regime::Critical
        };
        Ok(RegimeParams { epsilon, h, mu, regime })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegratorStats {
    pub steps: u64,
    pub rejected: u64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatteringResult {
    pub s_matrix: M2,
    pub probability: f64,
    pub unitarity_defect: f64,
    pub truncation_t: f64,
    /// largest change of |s_ij| and P between the runs at T and 1.5 T
    pub t_drift: f64,
    /// max relative deviation of column norms along the trajectory
    pub norm_defect: f64,
    pub integrator_stats: IntegratorStats,
}

pub const DEFAULT_TOL: f64 = 1e-13;
/// Refuse runs whose estimated step count exceeds this.
pub const STEP_BUDGET: f64 = 5e7;
/// Empirical DOP853 steps per radian of the fast phase at tol = 1e−12;
/// the count grows like tol^{−1/8}.
const STEPS_PER_RADIAN: f64 = 4.6;

fn state_from(u: &M2) -> [f64; 8] {
    [u[0][0].re, u[0][0].im, u[1][0].re, u[1][0].im, u[0][1].re, u[0][1].im, u[1][1].re, u[1][1].im]
}

fn state_to(y: &[f64; 8]) -> M2 {
    [[C64::new(y[0], y[1]), C64::new(y[4], y[5])], [C64::new(y[2], y[3]), C64::new(y[6], y[7])]]
}

/// Fundamental matrix U(t_to, t_from) together with integrator statistics
/// and the largest relative column-norm deviation seen along the way.
pub fn propagate_fundamental(p: &Potential, rp: &RegimeParams, t_from: f64, t_to: f64, tol: f64) -> Result<(M2, ode::Stats, f64)> {
    if !(tol >= 1e-13) {
        return Err(Error::Config(format!("tolerance {tol} below 1e-13")));
    }
    let (eps, inv_h) = (rp.epsilon, 1.0 / rp.h);
    let rhs = |t: f64, y: &[f64; 8], d: &mut [f64; 8]| {
        let v = p.value_re(t);
        for c in 0..2 {
            let o = 4 * c;
            let (xr, xi, yr, yi) = (y[o], y[o + 1], y[o + 2], y[o + 3]);
            // −(i/h)(H ψ)
            let (ar, ai) = (v * xr + eps * yr, v * xi + eps * yi);
            let (br, bi) = (eps * xr - v * yr, eps * xi - v * yi);
            d[o] = ai * inv_h;
            d[o + 1] = -ar * inv_h;
            d[o + 2] = bi * inv_h;
            d[o + 3] = -br * inv_h;
        }
    };
    let mut y = state_from(&matrix::identity());
    let opts = ode::Options { rtol: tol, atol: tol, h_max: 0.0, max_steps: STEP_BUDGET as u64 };
    let mut defect: f64 = 0.0;
    let stats = ode::integrate(rhs, t_from, t_to, &mut y, &opts, |_, y| {
        let n0 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2] + y[3] * y[3];
        let n1 = y[4] * y[4] + y[5] * y[5] + y[6] * y[6] + y[7] * y[7];
        defect = defect.max((n0.sqrt() - 1.0).abs()).max((n1.sqrt() - 1.0).abs());
    })?;
    Ok((state_to(&y), stats, defect))
}

/// ψ(t_to) for the initial value ψ(t_from) = ψ₀.
pub fn propagate(p: &Potential, rp: &RegimeParams, t_from: f64, t_to: f64, psi0: V2, tol: f64) -> Result<V2> {
    let (u, _, _) = propagate_fundamental(p, rp, t_from, t_to, tol)?;
    Ok(matrix::apply(&u, &psi0))
}

/// Jost vector of the given side and sign at time t: the eigenvector of
/// H(t;ε) for ∓λ times exp(±(i/h)Φ), Φ(t) = λ_⋆ t + ∫_{±∞}^t (λ − λ_⋆).
///
/// The rotation angle is taken from V(t) itself, 2θ = atan2(ε, V(t)), which
/// tends to θ_⋆, and the first adiabatic correction −x·(other eigenvector),
/// x = ihθ'/(2λ), is added. Both keep slowly decaying tails from leaking into S.
pub fn jost_vector(p: &Potential, rp: &RegimeParams, side: Side, plus: bool, t: f64) -> Result<V2> {
    let eps = rp.epsilon;
    let e = match side {
        Side::Right => p.e_right,
        Side::Left => p.e_left,
    };
    let on_side = match side {
        Side::Right => t > 0.0,
        Side::Left => t < 0.0,
    };
    let dev = if on_side { p.tail_deviation(t) } else { f64::INFINITY };
    if !on_side || (eps > 0.0 && dev.abs() >= 0.01 * eps) {
        return Err(Error::GuardViolation(format!("|V({t}) − E| = {:.3e} not below 0.01·ε", dev.abs())));
    }
    let v = e + dev;
    let theta = 0.5 * eps.atan2(v);
    let lam = geometry::lambda(p, side, eps);
    let phi = lam * t - geometry::tail_integral(p, side, eps, t)?;
    let (s, c) = theta.sin_cos();
    let dtheta = -eps * p.deriv_re(t) / (2.0 * (v * v + eps * eps));
    let x = C64::new(0.0, rp.h * dtheta / (2.0 * v.hypot(eps)));
    // e₁ = (cos θ, sin θ) for +λ, e₂ = (−sin θ, cos θ) for −λ
    if plus {
        let ph = C64::from_polar(1.0, phi / rp.h);
        Ok([ph * (-s - x * c), ph * (c - x * s)])
    } else {
        let ph = C64::from_polar(1.0, -phi / rp.h);
        Ok([ph * (c + x * s), ph * (s - x * c)])
    }
}

fn jost_basis(p: &Potential, rp: &RegimeParams, side: Side, t: f64) -> Result<M2> {
    Ok(matrix::from_columns(&jost_vector(p, rp, side, true, t)?, &jost_vector(p, rp, side, false, t)?))
}

/// Smallest T with |V(±T) − E_⋆| < 1e−3·ε on both sides, doubled. For ε = 0
/// the threshold uses ε = 1e−3.
pub fn default_truncation(p: &Potential, eps: f64) -> f64 {
    let thr = 1e-3 * eps.max(1e-3);
    let reach = p.zeros.iter().fold(1.0f64, |m, z| m.max(z.abs() + 1.0));
    let ok = |t: f64| p.tail_deviation(t).abs() < thr && p.tail_deviation(-t).abs() < thr;
    let mut hi = reach;
    while !ok(hi) {
        hi *= 2.0;
    }
    let mut lo = reach;
    if ok(lo) {
        return 2.0 * lo;
    }
    for _ in 0..60 {
        let m = 0.5 * (lo + hi);
        if ok(m) {
            hi = m;
        } else {
            lo = m;
        }
    }
    2.0 * hi
}

/// Rough number of integrator steps across [−t1, t1].
pub fn estimate_steps(p: &Potential, rp: &RegimeParams, t1: f64, tol: f64) -> f64 {
    let lam = geometry::lambda(p, Side::Right, rp.epsilon).max(geometry::lambda(p, Side::Left, rp.epsilon));
    STEPS_PER_RADIAN * (1e-12 / tol).powf(0.125) * 2.0 * t1 * lam / rp.h
}

pub fn unitarity_defect(s: &M2) -> f64 {
    let c0 = s[0][0].norm_sqr() + s[1][0].norm_sqr() - 1.0;
    let c1 = s[0][1].norm_sqr() + s[1][1].norm_sqr() - 1.0;
    let sym1 = (s[0][0] - s[1][1].conj()).norm();
    let sym2 = (s[0][1] + s[1][0].conj()).norm();
    c0.abs().max(c1.abs()).max(sym1).max(sym2)
}

fn moduli_drift(a: &M2, b: &M2) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            m = m.max((a[i][j].norm() - b[i][j].norm()).abs());
        }
    }
    m.max((a[1][0].norm_sqr() - b[1][0].norm_sqr()).abs())
}

/// S with (J₊ˡ J₋ˡ) = (J₊ʳ J₋ʳ) S. The run is repeated at 1.5 T by extending
/// the trajectory on both ends; the moduli of S must agree within
/// max(10·tol, 1e−8).
pub fn scattering_matrix(p: &Potential, rp: &RegimeParams, t: f64, tol: f64) -> Result<ScatteringResult> {
    let t15 = 1.5 * t;
    let est = estimate_steps(p, rp, t15, tol);
    if est > STEP_BUDGET {
        return Err(Error::BudgetExceeded(format!("about {est:.3e} integrator steps needed")));
    }
    let left = jost_basis(p, rp, Side::Left, -t)?;
    let right = jost_basis(p, rp, Side::Right, t)?;
    let (u, st, d1) = propagate_fundamental(p, rp, -t, t, tol)?;
    let s = matrix::mul(&matrix::adjoint(&right), &matrix::mul(&u, &left));

    let (u_lo, st_lo, d0) = propagate_fundamental(p, rp, -t15, -t, tol)?;
    let (u_hi, st_hi, d2) = propagate_fundamental(p, rp, t, t15, tol)?;
    let long = matrix::mul(&u_hi, &matrix::mul(&u, &u_lo));
    let left15 = jost_basis(p, rp, Side::Left, -t15)?;
    let right15 = jost_basis(p, rp, Side::Right, t15)?;
    let s15 = matrix::mul(&matrix::adjoint(&right15), &matrix::mul(&long, &left15));

    let drift = moduli_drift(&s, &s15);
    let threshold = (10.0 * tol).max(1e-8);
    if drift > threshold {
        return Err(Error::TDependence { drift, threshold });
    }
    let mut stats = st;
    stats.merge(&st_lo);
    stats.merge(&st_hi);
    Ok(ScatteringResult {
        probability: s[1][0].norm_sqr().clamp(0.0, 1.0),
        unitarity_defect: unitarity_defect(&s),
        s_matrix: s,
        truncation_t: t,
        t_drift: drift,
        norm_defect: d0.max(d1).max(d2),
        integrator_stats: IntegratorStats { steps: stats.accepted, rejected: stats.rejected, tolerance: tol },
    })
}

/// P(ε,h) = |s21|² with the default truncation and tolerance.
pub fn transition_probability(p: &Potential, rp: &RegimeParams) -> Result<ScatteringResult> {
    scattering_matrix(p, rp, default_truncation(p, rp.epsilon), DEFAULT_TOL)
}
