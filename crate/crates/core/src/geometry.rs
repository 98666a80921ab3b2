//! Complex turning points and action integrals.
//!
//! Crossing indices are 1-based (`k = 1..=n` refers to `t_k`), matching the
//! parity factors (−1)^k used downstream.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::quad;

const REL_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Right,
    Left,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossingGeometry {
    pub epsilon: f64,
    pub zeros: Vec<f64>,
    pub slopes: Vec<f64>,
    pub turning_points: Vec<C64>,
    pub actions_a: Vec<C64>,
    /// R_j for j = 1..n−1, stored at index j−1
    pub actions_r: Vec<f64>,
    pub actions_r0: Vec<f64>,
    pub action_right: f64,
    pub action_left: f64,
    pub lambda_right: f64,
    pub lambda_left: f64,
    pub alpha: f64,
    /// 1-based indices of the crossings with maximal slope
    pub k_set: Vec<usize>,
}

impl CrossingGeometry {
    pub fn n(&self) -> usize {
        self.zeros.len()
    }

    pub fn a(&self, k: usize) -> C64 {
        self.actions_a[k - 1]
    }

    pub fn r(&self, j: usize) -> f64 {
        self.actions_r[j - 1]
    }
}

fn check_index(p: &Potential, k: usize) -> Result<()> {
    if k == 0 || k > p.n() {
        return Err(Error::InvalidPotential(format!("crossing index {k} outside 1..={}", p.n())));
    }
    Ok(())
}

fn neighbour_gap(p: &Potential, k: usize) -> f64 {
    let t = p.zeros[k - 1];
    p.zeros
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != k - 1)
        .map(|(_, z)| (z - t).abs())
        .fold(f64::INFINITY, f64::min)
}

/// ζ_k(ε): the root of V(ζ) = i·sgn(V'(t_k))·ε near t_k with Im ζ > 0.
pub fn turning_point(p: &Potential, k: usize, eps: f64) -> Result<C64> {
    check_index(p, k)?;
    let (tk, vk, sk) = (p.zeros[k - 1], p.slopes[k - 1], p.slope_signs[k - 1]);
    if eps == 0.0 {
        return Ok(C64::new(tk, 0.0));
    }
    let gap = p.min_gap();
    let limit = 0.2 * gap * vk;
    if eps >= limit {
        return Err(Error::BasinGuard { epsilon: eps, limit });
    }
    let target = C64::new(0.0, sk * eps);
    let mut z = C64::new(tk, eps / vk);
    let half_gap = 0.5 * neighbour_gap(p, k);
    let scale = eps / vk;
    let mut prev_step = f64::INFINITY;
    for _ in 0..50 {
        let f = p.value(z) - target;
        let dz = f / p.deriv(z);
        z -= dz;
        if (z - tk).norm() > half_gap {
            return Err(Error::EscapedBasin { k });
        }
        let step = dz.norm();
        // stop once the step is at rounding level or has stopped shrinking
        let small = step <= 1e-15 * z.norm().max(scale);
        let stalled = step <= 1e-10 * scale && step >= 0.5 * prev_step;
        if small || stalled {
            let res = (p.value(z) - target).norm();
            // rounding floor: one ulp of ζ times |V'| plus one ulp of V
            let floor = 8.0 * f64::EPSILON * (z.norm() * p.deriv(z).norm() + eps.max(p.value(z).norm()));
            if res <= 1e-13 * eps || res <= floor {
                if !p.in_sector(z) {
                    return Err(Error::DomainViolation { re: z.re, im: z.im });
                }
                return Ok(z);
            }
        }
        prev_step = step;
    }
    Err(Error::NonConvergence { what: "turning point Newton iteration", iterations: 50 })
}

/// V² + ε² written as a product of two factors to keep precision near ζ.
fn radicand(p: &Potential, t: C64, eps: f64) -> C64 {
    let v = p.value(t);
    (v - C64::new(0.0, eps)) * (v + C64::new(0.0, eps))
}

/// 2∫ √(V²+ε²) along the straight segment from t_k to ζ_k.
pub fn action_a(p: &Potential, k: usize, eps: f64) -> Result<C64> {
    let zeta = turning_point(p, k, eps)?;
    if eps == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    action_a_with(p, k, eps, zeta, 20)
}

/// Same as [`action_a`] with an explicit number of geometric levels toward ζ.
pub fn action_a_with(p: &Potential, k: usize, eps: f64, zeta: C64, levels: usize) -> Result<C64> {
    let t0 = C64::new(p.zeros[k - 1], 0.0);
    let d = zeta - t0;
    let mut g = |t: C64| radicand(p, t, eps);
    let mut anchor = C64::new(eps, 0.0);
    let mut total = C64::new(0.0, 0.0);
    let mut s0 = 0.0;
    // |A_k| is of order |ζ − t_k|·ε
    let scale = 0.1 * d.norm() * eps;
    for level in 1..=levels {
        let s1 = if level == levels { 1.0 } else { 1.0 - 0.5f64.powi(level as i32) };
        let (val, end) = quad::integrate_sqrt_scaled(&mut g, t0 + d * s0, t0 + d * s1, anchor, REL_TOL, scale)?;
        total += val;
        anchor = end;
        s0 = s1;
    }
    Ok(total * 2.0)
}

/// R_j = 2∫_{t_{j+1}}^{t_j} √(V²+ε²) dt, j = 1..n−1.
pub fn action_r(p: &Potential, j: usize, eps: f64) -> Result<f64> {
    if j == 0 || j >= p.n() {
        return Err(Error::InvalidPotential(format!("R index {j} outside 1..{}", p.n())));
    }
    let (a, b) = (p.zeros[j], p.zeros[j - 1]);
    let e2 = eps * eps;
    let v = quad::integrate_real(&mut |t| (p.value_re(t).powi(2) + e2).sqrt(), a, b, REL_TOL)?;
    Ok(2.0 * v)
}

/// 𝓡_j = 2∫_{t_{j+1}}^{t_j} |V| dt.
pub fn action_r0(p: &Potential, j: usize) -> Result<f64> {
    if j == 0 || j >= p.n() {
        return Err(Error::InvalidPotential(format!("R index {j} outside 1..{}", p.n())));
    }
    let (a, b) = (p.zeros[j], p.zeros[j - 1]);
    Ok(2.0 * quad::integrate_real(&mut |t| p.value_re(t).abs(), a, b, REL_TOL)?)
}

/// λ_⋆ = √(E_⋆² + ε²)
pub fn lambda(p: &Potential, side: Side, eps: f64) -> f64 {
    let e = match side {
        Side::Right => p.e_right,
        Side::Left => p.e_left,
    };
    e.hypot(eps)
}

/// ∫_x^{±∞} (√(V²+ε²) − λ_⋆) dt for |x| ≥ 1 on the given side, through u = 1/t.
pub fn tail_integral(p: &Potential, side: Side, eps: f64, x: f64) -> Result<f64> {
    let lam = lambda(p, side, eps);
    let e = match side {
        Side::Right => p.e_right,
        Side::Left => p.e_left,
    };
    let f = |t: f64| {
        let dev = p.tail_deviation(t);
        let v = e + dev;
        dev * (v + e) / ((v * v + eps * eps).sqrt() + lam)
    };
    // ∫_x^∞ f dt = ∫_0^{1/x} f(1/u)/u² du; the left side mirrors with t = −1/u
    let sgn = if side == Side::Right { 1.0 } else { -1.0 };
    let ux = 1.0 / x.abs();
    let v = quad::integrate_real(
        &mut |u: f64| {
            if u <= 0.0 {
                return 0.0;
            }
            let g = f(sgn / u) / (u * u);
            if g.is_finite() { g } else { 0.0 }
        },
        0.0,
        ux,
        REL_TOL,
    )?;
    Ok(sgn * v)
}

/// A_r = 2∫_{t_1}^{+∞}(√ − λ_r), A_l = 2∫_{t_n}^{−∞}(√ − λ_l), both oriented.
pub fn action_infinity(p: &Potential, side: Side, eps: f64) -> Result<f64> {
    if !(p.decay_exponent > 1.0) {
        return Err(Error::SlowDecay(p.decay_exponent));
    }
    let lam = lambda(p, side, eps);
    let (start, sgn) = match side {
        Side::Right => (p.zeros[0], 1.0),
        Side::Left => (p.zeros[p.n() - 1], -1.0),
    };
    // cut where the stable tail form takes over
    let cut = sgn * (start.abs() + 1.0).max(2.0);
    let near = quad::integrate_real(&mut |t| (p.value_re(t).powi(2) + eps * eps).sqrt() - lam, start, cut, REL_TOL)?;
    let far = tail_integral(p, side, eps, cut)?;
    Ok(2.0 * (near + far))
}

/// 𝒦 = argmax v_k (relative tie tolerance 1e−9), α = min_{k∈𝒦} Im A_k.
pub fn alpha_and_k(slopes: &[f64], actions_a: &[C64]) -> (f64, Vec<usize>) {
    let vmax = slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ks: Vec<usize> = slopes
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= vmax * (1.0 - 1e-9))
        .map(|(i, _)| i + 1)
        .collect();
    let alpha = ks.iter().map(|&k| actions_a[k - 1].im).fold(f64::INFINITY, f64::min);
    (alpha, ks)
}

pub fn geometry(p: &Potential, eps: f64) -> Result<CrossingGeometry> {
    let n = p.n();
    let mut tps = Vec::with_capacity(n);
    let mut aa = Vec::with_capacity(n);
    for k in 1..=n {
        let z = turning_point(p, k, eps)?;
        tps.push(z);
        aa.push(if eps == 0.0 { C64::new(0.0, 0.0) } else { action_a_with(p, k, eps, z, 20)? });
    }
    let mut rr = Vec::new();
    let mut r0 = Vec::new();
    for j in 1..n {
        rr.push(action_r(p, j, eps)?);
        r0.push(action_r0(p, j)?);
    }
    let (alpha, k_set) = alpha_and_k(&p.slopes, &aa);
    Ok(CrossingGeometry {
        epsilon: eps,
        zeros: p.zeros.clone(),
        slopes: p.slopes.clone(),
        turning_points: tps,
        actions_a: aa,
        actions_r: rr,
        actions_r0: r0,
        action_right: action_infinity(p, Side::Right, eps)?,
        action_left: action_infinity(p, Side::Left, eps)?,
        lambda_right: lambda(p, Side::Right, eps),
        lambda_left: lambda(p, Side::Left, eps),
        alpha,
        k_set,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn linear_model_closed_forms() {
        let p = Potential::preset("linear").unwrap();
        let z = turning_point(&p, 1, 0.1).unwrap();
        assert!((z - C64::new(0.0, 0.1)).norm() < 1e-16);
        for eps in [1e-3, 0.1, 0.5] {
            let a = action_a(&p, 1, eps).unwrap();
            let exact = C64::new(0.0, PI * eps * eps / 2.0);
            assert!((a - exact).norm() < 1e-12 * exact.norm(), "{a} vs {exact}");
        }
    }

    #[test]
    fn rational_turning_point_residual() {
        let p = Potential::preset("two-zero").unwrap();
        for k in 1..=2 {
            for eps in [1e-4, 0.05, 0.15] {
                let z = turning_point(&p, k, eps).unwrap();
                assert!(z.im > 0.0);
                let v = p.value(z);
                assert!((v * v + eps * eps).norm() <= 1e-12 * eps * eps, "k={k} eps={eps}");
                let vc = p.value(z.conj());
                assert!((vc * vc + eps * eps).norm() <= 1e-12 * eps * eps);
            }
        }
        assert!(matches!(turning_point(&p, 1, 0.5), Err(Error::BasinGuard { .. })));
    }

    #[test]
    fn turning_point_first_order_limit() {
        let p = Potential::preset("tanh-pair").unwrap();
        for k in 1..=2 {
            let eps = 1e-3;
            let z = turning_point(&p, k, eps).unwrap();
            let ratio = (z - p.zeros[k - 1]).norm() / eps;
            assert!((ratio * p.slopes[k - 1] - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn zero_coupling_actions() {
        let p = Potential::preset("two-zero").unwrap();
        assert_eq!(action_a(&p, 1, 0.0).unwrap(), C64::new(0.0, 0.0));
        // 2∫_{−1}^{1} (1−t²)/(1+t²) dt = 2(π − 2)
        let r0 = action_r0(&p, 1).unwrap();
        assert!((r0 - 2.0 * (PI - 2.0)).abs() < 1e-13);
        assert!((action_r(&p, 1, 0.0).unwrap() - r0).abs() < 1e-13);
    }

    #[test]
    fn infinity_actions_match_antiderivatives() {
        let t = Potential::preset("one-zero").unwrap();
        let ar = action_infinity(&t, Side::Right, 0.0).unwrap();
        assert!((ar + 2.0 * 2f64.ln()).abs() < 1e-12, "{ar}");
        // 2∫_0^{−∞} (−tanh t − 1) dt = 2 ln 2 with the orientation kept
        let al = action_infinity(&t, Side::Left, 0.0).unwrap();
        assert!((al - 2.0 * 2f64.ln()).abs() < 1e-12, "{al}");
        let r = Potential::preset("two-zero").unwrap();
        // 2∫_1^∞ −2/(t²+1) dt = −π
        assert!((action_infinity(&r, Side::Right, 0.0).unwrap() + PI).abs() < 1e-12);
        for eps in [0.0, 0.03, 0.1] {
            let (a_r, a_l) = (action_infinity(&r, Side::Right, eps).unwrap(), action_infinity(&r, Side::Left, eps).unwrap());
            assert!((a_r + a_l).abs() < 1e-12, "mirror image with reversed orientation");
        }
    }

    #[test]
    fn alpha_and_k_rules() {
        let a = [C64::new(0.0, 0.3), C64::new(0.0, 0.2)];
        assert_eq!(alpha_and_k(&[1.0, 1.0], &a), (0.2, vec![1, 2]));
        assert_eq!(alpha_and_k(&[2.0, 1.0], &a), (0.3, vec![1]));
        assert_eq!(alpha_and_k(&[1.0, 1.0 + 1e-12], &a).1, vec![1, 2]);
    }
}
