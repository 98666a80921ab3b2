//! Closed-form predictors for P(ε, h) in the two asymptotic regimes.

use num_complex::Complex64 as C64;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::CrossingGeometry;
use crate::potential::Potential;
use crate::propagator::{Regime, Thresholds};
use crate::quad;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticPrediction {
    pub regime: Regime,
    pub value: f64,
    /// C_n(h) in the non-adiabatic regime, |Σ_{k∈𝒦} …|² in the adiabatic one
    pub prefactor: f64,
    pub error_orders: Vec<String>,
    pub epsilon: f64,
    pub h: f64,
    pub mu: f64,
    pub alpha: Option<f64>,
    /// even n with C_n(h) = 0: no leading term is available
    pub order_degenerate: bool,
    pub warnings: Vec<String>,
}

/// Phases entering C_n: φ_j = (2/h)∫_{t_1}^{t_j} V − (−1)^j π/4, with V oriented so that V'(t_1) > 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prefactor {
    pub slopes: Vec<f64>,
    /// ∫_{t_1}^{t_j} V, j = 1..n
    pub integrals: Vec<f64>,
}

impl Prefactor {
    pub fn new(p: &Potential) -> Result<Prefactor> {
        let s1 = p.slope_signs[0];
        let mut integrals = vec![0.0];
        let mut acc = 0.0;
        for j in 1..p.n() {
            let (a, b) = (p.zeros[j - 1], p.zeros[j]);
            acc += s1 * quad::integrate_real(&mut |t| p.value_re(t), a, b, 1e-14)?;
            integrals.push(acc);
        }
        Ok(Prefactor { slopes: p.slopes.clone(), integrals })
    }

    pub fn n(&self) -> usize {
        self.slopes.len()
    }

    /// Σ_j e^{iφ_j}/√v_j
    pub fn amplitude(&self, h: f64) -> C64 {
        self.slopes
            .iter()
            .zip(&self.integrals)
            .enumerate()
            .map(|(i, (v, ji))| {
                let sign = if (i + 1) % 2 == 0 { -1.0 } else { 1.0 };
                C64::from_polar(1.0 / v.sqrt(), 2.0 * ji / h + sign * PI / 4.0)
            })
            .sum()
    }

    /// C_n(h) = Σ 1/v_k + 2Σ_{j<k} cos[(2/h)∫_{t_k}^{t_j}V + ((−1)^k − (−1)^j)π/4] / √(v_j v_k)
    pub fn eval(&self, h: f64) -> f64 {
        let n = self.n();
        let mut c: f64 = self.slopes.iter().map(|v| 1.0 / v).sum();
        let par = |j: usize| if j.is_multiple_of(2) { 1.0 } else { -1.0 };
        for j in 1..=n {
            for k in j + 1..=n {
                let arg = 2.0 / h * (self.integrals[j - 1] - self.integrals[k - 1]) + (par(k) - par(j)) * PI / 4.0;
                c += 2.0 * arg.cos() / (self.slopes[j - 1] * self.slopes[k - 1]).sqrt();
            }
        }
        c
    }

    /// Σ 1/v_k − 2Σ_{j<k} 1/√(v_j v_k)
    pub fn lower_bound(&self) -> f64 {
        let n = self.n();
        let mut c: f64 = self.slopes.iter().map(|v| 1.0 / v).sum();
        for j in 0..n {
            for k in j + 1..n {
                c -= 2.0 / (self.slopes[j] * self.slopes[k]).sqrt();
            }
        }
        c
    }
}

pub fn prefactor_cn(p: &Potential, h: f64) -> Result<f64> {
    Ok(Prefactor::new(p)?.eval(h))
}

fn nonadiabatic_orders() -> Vec<String> {
    vec!["O(sqrt(h) mu)".into(), "O(mu^(3/2))".into()]
}

pub fn predict_nonadiabatic(p: &Potential, eps: f64, h: f64, th: &Thresholds) -> Result<AsymptoticPrediction> {
    let pf = Prefactor::new(p)?;
    predict_nonadiabatic_with(&pf, eps, h, th)
}

/// Odd n: 1 − πC_nμ, even n: πC_nμ, clipped to [0, 1].
pub fn predict_nonadiabatic_with(pf: &Prefactor, eps: f64, h: f64, th: &Thresholds) -> Result<AsymptoticPrediction> {
    if !(h > 0.0) || !(eps >= 0.0) {
        return Err(Error::Config(format!("need ε ≥ 0 and h > 0, got ε={eps}, h={h}")));
    }
    let mu = eps * eps / h;
    if mu > th.mu0 {
        return Err(Error::Regime { regime: "nonadiabatic", detail: format!("μ = {mu} above threshold {}", th.mu0) });
    }
    let cn = pf.eval(h);
    let odd = pf.n() % 2 == 1;
    let raw = if odd { 1.0 - PI * cn * mu } else { PI * cn * mu };
    let scale: f64 = pf.slopes.iter().map(|v| 1.0 / v).sum();
    let order_degenerate = !odd && cn.abs() <= 1e-12 * scale;
    Ok(AsymptoticPrediction {
        regime: Regime::Nonadiabatic,
        value: raw.clamp(0.0, 1.0),
        prefactor: cn,
        error_orders: nonadiabatic_orders(),
        epsilon: eps,
        h,
        mu,
        alpha: None,
        order_degenerate,
        warnings: vec![],
    })
}

/// |Σ_{k∈𝒦} (−1)^k e^{(i/h)(A_k + Re A_k − Σ_{j<k} R_j)}|²
pub fn predict_adiabatic(geom: &CrossingGeometry, h: f64, th: &Thresholds) -> Result<AsymptoticPrediction> {
    let eps = geom.epsilon;
    if !(h > 0.0) || !(h <= th.adiabatic0 * eps * eps) {
        return Err(Error::Regime {
            regime: "adiabatic",
            detail: format!("h/ε² = {} above threshold {}", h / (eps * eps), th.adiabatic0),
        });
    }
    let i = C64::new(0.0, 1.0);
    let mut sum = C64::new(0.0, 0.0);
    for &k in &geom.k_set {
        let rsum: f64 = (1..k).map(|j| geom.r(j)).sum();
        let a = geom.a(k);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * (i / h * (a + a.re - rsum)).exp();
    }
    let vmax = geom.slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut warnings = Vec::new();
    for (idx, v) in geom.slopes.iter().enumerate() {
        if !geom.k_set.contains(&(idx + 1)) && *v >= 0.9 * vmax {
            let w = format!("crossing {} has slope {v} within 10% of the maximum {vmax}; the remainder may dominate", idx + 1);
            log::warn!("{w}");
            warnings.push(w);
        }
    }
    let value = sum.norm_sqr();
    Ok(AsymptoticPrediction {
        regime: Regime::Adiabatic,
        value,
        prefactor: value,
        error_orders: vec!["O((h/eps^2) exp(-2 alpha/h))".into()],
        epsilon: eps,
        h,
        mu: eps * eps / h,
        alpha: Some(geom.alpha),
        order_degenerate: false,
        warnings,
    })
}

/// e^{−(π/v)(ε²/h)}
pub fn landau_zener_exact(v: f64, eps: f64, h: f64) -> f64 {
    (-PI * eps * eps / (v * h)).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BsRoots {
    pub roots: Vec<f64>,
    /// "closed-form" for two equal slopes, "numerical" otherwise
    pub method: String,
}

/// Zeros of C_n(h) in [h_min, h_max], ascending.
///
/// For n = 2 with equal slopes C_2 = (2/v)(1 − sin[(2/h)∫_{t_2}^{t_1}V]), which
/// vanishes at ∫_{t_2}^{t_1}V = (N + 1/4)πh; the integral is negative, so this is
/// |∫_{t_2}^{t_1}V| = (M − 1/4)πh with M = −N ≥ 1. Otherwise the
/// minima of |Σ e^{iφ_j}/√v_j| on a grid in 1/h are refined by golden
/// section and kept when C_n vanishes there.
pub fn bohr_sommerfeld_roots(p: &Potential, h_min: f64, h_max: f64) -> Result<BsRoots> {
    if !(h_min > 0.0) || !(h_max > h_min) {
        return Err(Error::Config(format!("need 0 < h_min < h_max, got [{h_min}, {h_max}]")));
    }
    let pf = Prefactor::new(p)?;
    let floor = pf.lower_bound();
    let scale: f64 = pf.slopes.iter().map(|v| 1.0 / v).sum();
    let no_roots = Error::NoRoots { lo: h_min, hi: h_max, floor };
    if pf.n() < 2 || floor > 1e-12 * scale {
        return Err(no_roots);
    }
    if pf.n() == 2 && (pf.slopes[0] - pf.slopes[1]).abs() <= 1e-6 * pf.slopes[0].max(pf.slopes[1]) {
        let int = pf.integrals[0] - pf.integrals[1];
        let (x0, x1) = (int / (PI * h_max), int / (PI * h_min));
        let (lo, hi) = (x0.min(x1), x0.max(x1));
        let mut roots: Vec<f64> = ((lo - 0.25).ceil() as i64..=(hi - 0.25).floor() as i64)
            .map(|n| int / ((n as f64 + 0.25) * PI))
            .filter(|h| *h >= h_min && *h <= h_max)
            .collect();
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if roots.is_empty() {
            return Err(no_roots);
        }
        return Ok(BsRoots { roots, method: "closed-form".into() });
    }
    numerical_roots(&pf, h_min, h_max).ok_or(no_roots)
}

fn numerical_roots(pf: &Prefactor, h_min: f64, h_max: f64) -> Option<BsRoots> {
    let scale: f64 = pf.slopes.iter().map(|v| 1.0 / v).sum();
    let spread = pf.integrals.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - pf.integrals.iter().cloned().fold(f64::INFINITY, f64::min);
    let (u0, u1) = (1.0 / h_max, 1.0 / h_min);
    let du = 0.05 / (2.0 * spread).max(1e-300);
    let m = (((u1 - u0) / du).ceil() as usize).clamp(16, 50_000_000);
    let f = |u: f64| pf.amplitude(1.0 / u).norm();
    let grid: Vec<f64> = (0..=m).map(|i| u0 + (u1 - u0) * i as f64 / m as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&u| f(u)).collect();
    let mut roots = Vec::new();
    for i in 1..m {
        if vals[i] <= vals[i - 1] && vals[i] <= vals[i + 1] {
            let h = 1.0 / golden_min(&f, grid[i - 1], grid[i + 1]);
            if pf.eval(h).abs() <= 1e-12 * scale && h >= h_min && h <= h_max {
                roots.push(h);
            }
        }
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-10 * a.abs());
    if roots.is_empty() {
        return None;
    }
    Some(BsRoots { roots, method: "numerical".into() })
}

fn golden_min<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a) > 1e-14 * b.abs() {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::Family;

    #[test]
    fn single_crossing_prefactor() {
        let p = Potential::new(Family::TanhScaled { a: 2.0 }).unwrap();
        for h in [0.003, 0.05, 0.7] {
            assert!((prefactor_cn(&p, h).unwrap() - 0.5).abs() < 1e-14);
        }
        let th = Thresholds::default();
        let one = Potential::preset("one-zero").unwrap();
        let pr = predict_nonadiabatic(&one, (0.02f64 * 0.01).sqrt(), 0.01, &th).unwrap();
        assert!((pr.value - (1.0 - 0.02 * PI)).abs() < 1e-14);
        assert_eq!(predict_nonadiabatic(&one, 0.0, 0.01, &th).unwrap().value, 1.0);
        let two = Potential::preset("two-zero").unwrap();
        assert_eq!(predict_nonadiabatic(&two, 0.0, 0.01, &th).unwrap().value, 0.0);
    }

    #[test]
    fn equal_slope_pair_matches_sine_form() {
        let p = Potential::preset("two-zero").unwrap();
        let pf = Prefactor::new(&p).unwrap();
        let int = 2.0 - PI;
        assert!((pf.integrals[0] - pf.integrals[1] - int).abs() < 1e-13);
        for h in [0.004, 0.017, 0.09] {
            let expect = 2.0 * (1.0 - (2.0 * int / h).sin());
            assert!((pf.eval(h) - expect).abs() < 1e-11, "h={h}");
            assert!((pf.amplitude(h).norm_sqr() - expect).abs() < 1e-11);
        }
    }

    #[test]
    fn bohr_sommerfeld_closed_and_numerical_agree() {
        let p = Potential::preset("two-zero").unwrap();
        let closed = bohr_sommerfeld_roots(&p, 0.005, 0.05).unwrap();
        assert_eq!(closed.method, "closed-form");
        let int = PI - 2.0;
        for h in &closed.roots {
            assert!(prefactor_cn(&p, *h).unwrap().abs() < 1e-12);
            // |∫_{t_2}^{t_1}V| = (M − 1/4)πh
            let m = int / (PI * h) + 0.25;
            assert!((m - m.round()).abs() < 1e-9);
        }
        let pf = Prefactor::new(&p).unwrap();
        let num = numerical_roots(&pf, 0.005, 0.05).unwrap();
        assert_eq!(num.roots.len(), closed.roots.len());
        for (a, b) in num.roots.iter().zip(&closed.roots) {
            assert!((a / b - 1.0).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn unequal_slopes_have_no_roots() {
        let p = Potential::new(Family::RationalPair { roots: vec![2.0, -1.0], width: 1.0 }).unwrap();
        assert!(p.slopes[0] != p.slopes[1]);
        assert!(matches!(bohr_sommerfeld_roots(&p, 0.005, 0.05), Err(Error::NoRoots { .. })));
    }

    #[test]
    fn orientation_invariance() {
        let th = Thresholds::default();
        for name in ["one-zero", "two-zero", "three-zero"] {
            let p = Potential::preset(name).unwrap();
            let q = p.negated();
            for h in [0.007, 0.02] {
                let a = predict_nonadiabatic(&p, 0.01, h, &th).unwrap().value;
                let b = predict_nonadiabatic(&q, 0.01, h, &th).unwrap().value;
                assert!((a - b).abs() < 1e-13, "{name}");
            }
        }
    }

    #[test]
    fn landau_zener_values() {
        assert_eq!(landau_zener_exact(1.0, 0.0, 0.1), 1.0);
        assert!((landau_zener_exact(2.0, 0.2, 0.02) - (-PI).exp()).abs() < 1e-15);
    }
}
