//! Analytic potential families V(t) with nonzero limits at ±∞ and simple real zeros.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tagged family descriptor. In config files this is the `potential` table:
/// `family = "rational_pair"`, `params = { roots = [1.0, -1.0] }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum Family {
    /// V = tanh(a t)
    TanhScaled { a: f64 },
    /// V = ∏ (t − r_j) / (t² + w²)^{n/2}, n even
    RationalPair {
        roots: Vec<f64>,
        #[serde(default = "unit_width")]
        width: f64,
    },
    /// V = ∏ tanh(t − o_j)
    TanhProduct { offsets: Vec<f64> },
    /// V = num(t)/den(t), coefficients in ascending powers
    Rational { numerator: Vec<f64>, denominator: Vec<f64> },
    /// V = s t. Local model only: no finite limits.
    Linear { slope: f64 },
    /// One of the named presets, see [`Potential::preset`].
    Preset { name: String },
}

fn unit_width() -> f64 {
    1.0
}

pub const PRESETS: [&str; 5] = ["one-zero", "two-zero", "tanh-pair", "three-zero", "linear"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroSearch {
    pub window: Option<(f64, f64)>,
    pub spacing: f64,
    pub degenerate_slope: f64,
}

impl Default for ZeroSearch {
    fn default() -> Self {
        ZeroSearch { window: None, spacing: 0.05, degenerate_slope: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Potential {
    pub name: String,
    pub family: Family,
    /// ±1; V is multiplied by this. `negated()` flips it.
    pub orientation: f64,
    pub e_right: f64,
    pub e_left: f64,
    /// Tail exponent δ; `f64::INFINITY` for exponential tails.
    pub decay_exponent: f64,
    pub sector_angle: f64,
    /// t_1 > … > t_n
    pub zeros: Vec<f64>,
    /// v_k = |V'(t_k)|
    pub slopes: Vec<f64>,
    /// sign of V'(t_k)
    pub slope_signs: Vec<f64>,
    pub window: (f64, f64),
}

fn ctanh(z: C64) -> C64 {
    if z.re < 0.0 {
        return -ctanh(-z);
    }
    // e^{−2z} − 1 without cancellation for small |z|
    let m = expm1(-2.0 * z);
    -m / (m + 2.0)
}

fn expm1(w: C64) -> C64 {
    let half = (0.5 * w.im).sin();
    C64::new(w.re.exp_m1() * w.im.cos() - 2.0 * half * half, w.re.exp() * w.im.sin())
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn horner(c: &[f64], t: C64) -> C64 {
    c.iter().rev().fold(C64::new(0.0, 0.0), |acc, &k| acc * t + k)
}

fn horner_d(c: &[f64], t: C64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for (i, &k) in c.iter().enumerate().skip(1).rev() {
        acc = acc * t + k * i as f64;
    }
    acc
}

fn trim(c: &[f64]) -> Vec<f64> {
    let mut v = c.to_vec();
    while v.len() > 1 && *v.last().unwrap() == 0.0 {
        v.pop();
    }
    v
}

impl Family {
    fn resolve(self) -> Result<(String, Family)> {
        match self {
            Family::Preset { name } => {
                let fam = match name.as_str() {
                    "one-zero" | "tanh" => Family::TanhScaled { a: 1.0 },
                    "two-zero" | "rational" => Family::RationalPair { roots: vec![1.0, -1.0], width: 1.0 },
                    "tanh-pair" => Family::TanhProduct { offsets: vec![-1.0, 1.0] },
                    "three-zero" => Family::TanhProduct { offsets: vec![-2.0, 0.0, 2.0] },
                    "linear" => Family::Linear { slope: 1.0 },
                    other => return Err(Error::InvalidPotential(format!("unknown preset '{other}'"))),
                };
                Ok((name, fam))
            }
            f => Ok((f.label(), f)),
        }
    }

    fn label(&self) -> String {
        match self {
            Family::TanhScaled { a } => format!("tanh_scaled(a={a})"),
            Family::RationalPair { roots, width } => format!("rational_pair(roots={roots:?}, width={width})"),
            Family::TanhProduct { offsets } => format!("tanh_product(offsets={offsets:?})"),
            Family::Rational { numerator, denominator } => format!("rational({numerator:?}/{denominator:?})"),
            Family::Linear { slope } => format!("linear(slope={slope})"),
            Family::Preset { name } => name.clone(),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidPotential(m.to_string()));
        match self {
            Family::TanhScaled { a } if *a == 0.0 || !a.is_finite() => bad("tanh scale must be finite and nonzero"),
            Family::RationalPair { roots, .. } if roots.is_empty() || roots.len() % 2 == 1 => {
                bad("rational_pair needs an even, nonzero number of roots")
            }
            Family::RationalPair { width, .. } if *width <= 0.0 => bad("rational_pair width must be positive"),
            Family::TanhProduct { offsets } if offsets.is_empty() => bad("tanh_product needs at least one offset"),
            Family::Rational { numerator, denominator } => {
                let (n, d) = (trim(numerator), trim(denominator));
                if d.iter().all(|&x| x == 0.0) {
                    return bad("zero denominator");
                }
                if n.len() > d.len() {
                    return bad("numerator degree exceeds denominator degree");
                }
                Ok(())
            }
            Family::Linear { slope } if *slope == 0.0 => bad("linear slope must be nonzero"),
            _ => Ok(()),
        }
    }

    fn limits(&self) -> (f64, f64) {
        match self {
            Family::TanhScaled { a } => (a.signum(), -a.signum()),
            Family::RationalPair { .. } => (1.0, 1.0),
            Family::TanhProduct { offsets } => (1.0, if offsets.len() % 2 == 0 { 1.0 } else { -1.0 }),
            Family::Rational { numerator, denominator } => {
                let (n, d) = (trim(numerator), trim(denominator));
                let e = if n.len() == d.len() { n[n.len() - 1] / d[d.len() - 1] } else { 0.0 };
                (e, e)
            }
            Family::Linear { slope } => (f64::INFINITY * slope.signum(), -f64::INFINITY * slope.signum()),
            Family::Preset { .. } => unreachable!("presets are resolved on construction"),
        }
    }

    fn default_window(&self) -> (f64, f64) {
        match self {
            Family::TanhScaled { a } => (-10.0 / a.abs(), 10.0 / a.abs()),
            Family::RationalPair { roots, .. } => span(roots, 10.0),
            Family::TanhProduct { offsets } => span(offsets, 10.0),
            Family::Rational { .. } => (-100.0, 100.0),
            Family::Linear { .. } => (-10.0, 10.0),
            Family::Preset { .. } => unreachable!(),
        }
    }

    fn value(&self, t: C64) -> C64 {
        match self {
            Family::TanhScaled { a } => ctanh(t * *a),
            Family::RationalPair { roots, width } => {
                let num = roots.iter().fold(C64::new(1.0, 0.0), |acc, r| acc * (t - r));
                let q = t * t + width * width;
                num / q.powi((roots.len() / 2) as i32)
            }
            Family::TanhProduct { offsets } => offsets.iter().fold(C64::new(1.0, 0.0), |acc, o| acc * ctanh(t - o)),
            Family::Rational { numerator, denominator } => horner(numerator, t) / horner(denominator, t),
            Family::Linear { slope } => t * *slope,
            Family::Preset { .. } => unreachable!(),
        }
    }

    fn deriv(&self, t: C64) -> C64 {
        match self {
            Family::TanhScaled { a } => {
                let th = ctanh(t * *a);
                (1.0 - th * th) * *a
            }
            Family::RationalPair { roots, width } => {
                let m = (roots.len() / 2) as i32;
                let q = t * t + width * width;
                let num = roots.iter().fold(C64::new(1.0, 0.0), |acc, r| acc * (t - r));
                let mut dnum = C64::new(0.0, 0.0);
                for j in 0..roots.len() {
                    let mut p = C64::new(1.0, 0.0);
                    for (i, r) in roots.iter().enumerate() {
                        if i != j {
                            p *= t - r;
                        }
                    }
                    dnum += p;
                }
                let den = q.powi(m);
                dnum / den - num * t * (2.0 * m as f64) / (q * den)
            }
            Family::TanhProduct { offsets } => {
                let th: Vec<C64> = offsets.iter().map(|o| ctanh(t - o)).collect();
                let mut s = C64::new(0.0, 0.0);
                for j in 0..th.len() {
                    let mut p = 1.0 - th[j] * th[j];
                    for (i, x) in th.iter().enumerate() {
                        if i != j {
                            p *= x;
                        }
                    }
                    s += p;
                }
                s
            }
            Family::Rational { numerator, denominator } => {
                let (n, d) = (horner(numerator, t), horner(denominator, t));
                (horner_d(numerator, t) * d - n * horner_d(denominator, t)) / (d * d)
            }
            Family::Linear { slope } => C64::new(*slope, 0.0),
            Family::Preset { .. } => unreachable!(),
        }
    }

    /// V(x) − E on the side of sign(x), evaluated without cancellation.
    fn deviation(&self, x: f64, e: f64) -> f64 {
        match self {
            Family::TanhScaled { a } => {
                let y = a * x;
                // tanh y − sign(y) = −sign(y)·2/(e^{2|y|}+1)
                -y.signum() * 2.0 / ((2.0 * y.abs()).exp() + 1.0)
            }
            Family::RationalPair { roots, width } => {
                let m = roots.len() / 2;
                let mut num = vec![1.0];
                for r in roots {
                    num = poly_mul(&num, &[-r, 1.0]);
                }
                let mut den = vec![1.0];
                for _ in 0..m {
                    den = poly_mul(&den, &[width * width, 0.0, 1.0]);
                }
                let mut diff: Vec<f64> = num.iter().zip(&den).map(|(a, b)| a - b).collect();
                diff.pop();
                let t = C64::new(x, 0.0);
                (horner(&diff, t) / horner(&den, t)).re
            }
            Family::TanhProduct { offsets } => {
                // each factor is ±(1 − d_j); the product is E·(1 − d)…
                let mut log = 0.0;
                for o in offsets {
                    let y = x - o;
                    let d = 2.0 / ((2.0 * y.abs()).exp() + 1.0);
                    log += (-d).ln_1p();
                }
                e * log.exp_m1()
            }
            Family::Rational { numerator, denominator } => {
                let (n, d) = (trim(numerator), trim(denominator));
                let mut diff: Vec<f64> = (0..d.len()).map(|i| n.get(i).copied().unwrap_or(0.0) - e * d[i]).collect();
                if n.len() == d.len() {
                    diff.pop();
                }
                let t = C64::new(x, 0.0);
                (horner(&diff, t) / horner(&d, t)).re
            }
            Family::Linear { .. } => f64::INFINITY,
            Family::Preset { .. } => unreachable!(),
        }
    }
}

fn span(v: &[f64], pad: f64) -> (f64, f64) {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (lo - pad, hi + pad)
}

impl Potential {
    pub fn new(family: Family) -> Result<Potential> {
        Potential::with_search(family, ZeroSearch::default())
    }

    pub fn with_search(family: Family, search: ZeroSearch) -> Result<Potential> {
        let (name, family) = family.resolve()?;
        family.validate()?;
        let (e_right, e_left) = family.limits();
        let window = search.window.unwrap_or_else(|| family.default_window());
        let mut p = Potential {
            name,
            family,
            orientation: 1.0,
            e_right,
            e_left,
            decay_exponent: f64::NAN,
            sector_angle: std::f64::consts::FRAC_PI_6,
            zeros: vec![],
            slopes: vec![],
            slope_signs: vec![],
            window,
        };
        p.decay_exponent = p.fit_tail_exponent();
        let (zeros, slopes) = p.find_zeros_and_slopes(&search)?;
        p.slope_signs = zeros.iter().map(|&z| p.deriv_re(z).signum()).collect();
        p.zeros = zeros;
        p.slopes = slopes;
        Ok(p)
    }

    pub fn preset(name: &str) -> Result<Potential> {
        Potential::new(Family::Preset { name: name.to_string() })
    }

    /// −V: same zeros and slopes, opposite orientation.
    pub fn negated(&self) -> Potential {
        let mut p = self.clone();
        p.orientation = -p.orientation;
        p.e_right = -p.e_right;
        p.e_left = -p.e_left;
        p.slope_signs.iter_mut().for_each(|s| *s = -*s);
        p.name = format!("-({})", self.name);
        p
    }

    pub fn n(&self) -> usize {
        self.zeros.len()
    }

    /// ⟨x⟩ = √(1+x²)
    pub fn in_sector(&self, t: C64) -> bool {
        t.im.abs() < self.sector_angle.tan() * (1.0 + t.re * t.re).sqrt()
    }

    /// V(t) with the sector check.
    pub fn eval(&self, t: C64) -> Result<C64> {
        if !self.in_sector(t) {
            return Err(Error::DomainViolation { re: t.re, im: t.im });
        }
        Ok(self.value(t))
    }

    /// V(t) without the sector check.
    pub fn value(&self, t: C64) -> C64 {
        self.family.value(t) * self.orientation
    }

    pub fn value_re(&self, x: f64) -> f64 {
        match &self.family {
            Family::TanhScaled { a } => (a * x).tanh() * self.orientation,
            Family::TanhProduct { offsets } => offsets.iter().map(|o| (x - o).tanh()).product::<f64>() * self.orientation,
            Family::Linear { slope } => slope * x * self.orientation,
            _ => self.value(C64::new(x, 0.0)).re,
        }
    }

    pub fn deriv(&self, t: C64) -> C64 {
        self.family.deriv(t) * self.orientation
    }

    pub fn deriv_re(&self, x: f64) -> f64 {
        self.deriv(C64::new(x, 0.0)).re
    }

    /// Complex-step derivative, used as an independent check.
    pub fn deriv_complex_step(&self, x: f64) -> f64 {
        let hstep = 1e-20 * x.abs().max(1.0);
        self.value(C64::new(x, hstep)).im / hstep
    }

    /// V(x) − E_⋆ with E_⋆ the limit on the side of sign(x).
    pub fn tail_deviation(&self, x: f64) -> f64 {
        let e = if x >= 0.0 { self.e_right } else { self.e_left };
        self.family.deviation(x, e * self.orientation) * self.orientation
    }

    fn fit_tail_exponent(&self) -> f64 {
        let side = |sgn: f64| -> f64 {
            let base = self.window.0.abs().max(self.window.1.abs()).max(10.0);
            let r: Vec<f64> = (0..7).map(|i| self.tail_deviation(sgn * base * 2f64.powi(i)).abs()).collect();
            if r.iter().any(|x| !x.is_finite()) {
                return f64::NAN;
            }
            if r.iter().any(|&x| x < 1e-280) {
                return f64::INFINITY;
            }
            let s: Vec<f64> = r.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
            let k = s.len();
            if s[k - 1] > 10.0 && s[k - 1] > 1.5 * s[k - 2] {
                return f64::INFINITY;
            }
            (s[k - 1] + s[k - 2] + s[k - 3]) / 3.0
        };
        let (r, l) = (side(1.0), side(-1.0));
        if r.is_nan() || l.is_nan() {
            f64::NAN
        } else {
            r.min(l)
        }
    }

    /// Brackets sign changes on a uniform grid and refines each by bisection
    /// followed by Newton. Zeros are returned in descending order.
    pub fn find_zeros_and_slopes(&self, search: &ZeroSearch) -> Result<(Vec<f64>, Vec<f64>)> {
        let (lo, hi) = self.window;
        let steps = ((hi - lo) / search.spacing).ceil() as usize;
        let grid: Vec<f64> = (0..=steps).map(|i| lo + (hi - lo) * i as f64 / steps as f64).collect();
        let vals: Vec<f64> = grid.iter().map(|&x| self.value_re(x)).collect();
        let mut zeros = Vec::new();
        for i in 0..steps {
            let (a, b) = (grid[i], grid[i + 1]);
            let (fa, fb) = (vals[i], vals[i + 1]);
            if fa == 0.0 {
                zeros.push(a);
                continue;
            }
            if fa * fb < 0.0 {
                zeros.push(self.refine_zero(a, b));
            } else if i > 0 && fb != 0.0 {
                // a touching zero shows up as a tiny local minimum of |V|
                let fm = vals[i - 1];
                if fm * fa > 0.0 && fa.abs() < fm.abs() && fa.abs() < fb.abs() && fa.abs() < 1e-6 {
                    return Err(Error::DegenerateZero { t: a, slope: self.deriv_re(a).abs() });
                }
            }
        }
        if vals[steps] == 0.0 {
            zeros.push(hi);
        }
        if zeros.is_empty() {
            return Err(Error::NoZeros { lo, hi });
        }
        zeros.sort_by(|a, b| b.partial_cmp(a).unwrap());
        zeros.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let mut slopes = Vec::with_capacity(zeros.len());
        for &z in &zeros {
            let v = self.deriv_re(z).abs();
            if v < search.degenerate_slope {
                return Err(Error::DegenerateZero { t: z, slope: v });
            }
            slopes.push(v);
        }
        Ok((zeros, slopes))
    }

    fn refine_zero(&self, mut a: f64, mut b: f64) -> f64 {
        let mut fa = self.value_re(a);
        while b - a > 1e-6 {
            let m = 0.5 * (a + b);
            let fm = self.value_re(m);
            if fm == 0.0 {
                return m;
            }
            if fa * fm < 0.0 {
                b = m;
            } else {
                a = m;
                fa = fm;
            }
        }
        let mut x = 0.5 * (a + b);
        for _ in 0..50 {
            let dx = self.value_re(x) / self.deriv_re(x);
            let nx = (x - dx).clamp(a, b);
            if (nx - x).abs() <= 1e-14 * x.abs().max(1.0) {
                x = nx;
                break;
            }
            x = nx;
        }
        x
    }

    /// Smallest distance between consecutive zeros (∞ for a single zero).
    pub fn min_gap(&self) -> f64 {
        self.zeros.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub degenerate_slope: f64,
    pub min_limit: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { degenerate_slope: 1e-8, min_limit: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub potential: String,
    pub checks: Vec<Check>,
    pub fitted_exponent: f64,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub fn validate_assumptions(p: &Potential, tol: &Tolerances) -> ValidationReport {
    let mut checks = Vec::new();
    let min_slope = p.slopes.iter().cloned().fold(f64::INFINITY, f64::min);
    checks.push(Check {
        name: "simple_zeros",
        passed: !p.zeros.is_empty() && min_slope > tol.degenerate_slope,
        detail: format!("{} zeros, min |V'| = {min_slope:.3e}", p.zeros.len()),
    });
    let limits_ok = p.e_right.is_finite()
        && p.e_left.is_finite()
        && p.e_right.abs() > tol.min_limit
        && p.e_left.abs() > tol.min_limit;
    checks.push(Check {
        name: "nonzero_limits",
        passed: limits_ok,
        detail: format!("E_r = {}, E_l = {}", p.e_right, p.e_left),
    });
    checks.push(Check {
        name: "tail_decay",
        passed: p.decay_exponent > 1.0,
        detail: if p.decay_exponent.is_infinite() {
            "exponential tail".to_string()
        } else {
            format!("fitted exponent {:.4}", p.decay_exponent)
        },
    });
    let lead = p.zeros.first().map(|&z| p.deriv_re(z)).unwrap_or(f64::NAN);
    checks.push(Check {
        name: "orientation",
        passed: lead > 0.0,
        detail: format!("V'(t_1) = {lead:.6}"),
    });
    let sector_ok = p.zeros.iter().all(|&z| p.in_sector(C64::new(z, 0.0)));
    checks.push(Check { name: "sector", passed: sector_ok, detail: format!("θ₀ = {:.6}", p.sector_angle) });
    ValidationReport { potential: p.name.clone(), checks, fitted_exponent: p.decay_exponent }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_have_expected_zeros() {
        let t = Potential::preset("one-zero").unwrap();
        assert_eq!(t.zeros.len(), 1);
        assert!(t.zeros[0].abs() < 1e-14 && (t.slopes[0] - 1.0).abs() < 1e-14);
        let r = Potential::preset("two-zero").unwrap();
        assert!((r.zeros[0] - 1.0).abs() < 1e-14 && (r.zeros[1] + 1.0).abs() < 1e-14);
        // 4t/(t²+1)² at ±1
        assert!((r.slopes[0] - 1.0).abs() < 1e-13 && (r.slopes[1] - 1.0).abs() < 1e-13);
        assert_eq!(r.slope_signs, vec![1.0, -1.0]);
    }

    #[test]
    fn complex_tanh_small_argument() {
        for z in [C64::new(1e-9, 3e-9), C64::new(-2e-6, 1e-5), C64::new(0.0, 1e-7)] {
            let series = z - z * z * z / 3.0;
            assert!((ctanh(z) - series).norm() <= 1e-15 * z.norm());
        }
        let z = C64::new(0.7, -0.3);
        let direct = (z.exp() - (-z).exp()) / (z.exp() + (-z).exp());
        assert!((ctanh(z) - direct).norm() < 1e-15);
    }

    #[test]
    fn tanh_pair_slopes_are_tanh_2a() {
        for a in [0.5, 1.0, 1.7] {
            let p = Potential::new(Family::TanhProduct { offsets: vec![-a, a] }).unwrap();
            assert!((p.zeros[0] - a).abs() < 1e-13 && (p.zeros[1] + a).abs() < 1e-13);
            for v in &p.slopes {
                assert!((v - (2.0 * a).tanh()).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn simple_values() {
        let t = Potential::preset("one-zero").unwrap();
        assert_eq!(t.eval(C64::new(0.0, 0.0)).unwrap(), C64::new(0.0, 0.0));
        let v = t.eval(C64::new(0.0, 0.5)).unwrap();
        assert!((v - C64::new(0.0, 0.5f64.tan())).norm() < 1e-15);
        let r = Potential::preset("two-zero").unwrap();
        assert_eq!(r.eval(C64::new(0.0, 0.0)).unwrap().re, -1.0);
        assert!(matches!(t.eval(C64::new(0.0, 0.9)), Err(Error::DomainViolation { .. })));
    }

    #[test]
    fn stable_tanh_far_out() {
        let t = Potential::preset("three-zero").unwrap();
        let v = t.value(C64::new(800.0, 0.3));
        assert!((v - 1.0).norm() < 1e-15);
        assert_eq!(t.tail_deviation(30.0), t.tail_deviation(30.0));
        assert!(t.tail_deviation(30.0) < 0.0);
    }

    #[test]
    fn tail_deviation_matches_direct_difference() {
        let r = Potential::preset("two-zero").unwrap();
        for x in [3.0, -7.0, 40.0] {
            let direct = -2.0 / (x * x + 1.0);
            assert!((r.tail_deviation(x) - direct).abs() < 1e-15 * direct.abs().max(1e-300) + 1e-17);
        }
        let p = Potential::new(Family::TanhProduct { offsets: vec![-1.0, 0.5, 2.0] }).unwrap();
        for x in [4.0, -4.0] {
            let e = if x > 0.0 { p.e_right } else { p.e_left };
            assert!((p.tail_deviation(x) - (p.value_re(x) - e)).abs() < 1e-13);
        }
    }

    #[test]
    fn validation_reports() {
        let r = validate_assumptions(&Potential::preset("two-zero").unwrap(), &Tolerances::default());
        assert!(r.all_passed(), "{r:?}");
        assert!((r.fitted_exponent - 2.0).abs() < 0.1);
        let t = validate_assumptions(&Potential::preset("one-zero").unwrap(), &Tolerances::default());
        assert!(t.all_passed());
        assert!(t.fitted_exponent.is_infinite());
        // V = t/(t²+1) tends to 0 at both ends
        let z = Potential::new(Family::Rational { numerator: vec![0.0, 1.0], denominator: vec![1.0, 0.0, 1.0] }).unwrap();
        let zr = validate_assumptions(&z, &Tolerances::default());
        assert!(!zr.check("nonzero_limits").unwrap().passed);
        let neg = validate_assumptions(&Potential::preset("one-zero").unwrap().negated(), &Tolerances::default());
        assert!(!neg.check("orientation").unwrap().passed);
    }

    #[test]
    fn degenerate_zero_is_rejected() {
        // (t−1)²/(t²+1) touches zero without changing sign
        let r = Potential::new(Family::Rational { numerator: vec![1.0, -2.0, 1.0], denominator: vec![1.0, 0.0, 1.0] });
        assert!(matches!(r, Err(Error::DegenerateZero { .. }) | Err(Error::NoZeros { .. })));
        let odd = Potential::new(Family::RationalPair { roots: vec![0.0], width: 1.0 });
        assert!(matches!(odd, Err(Error::InvalidPotential(_))));
    }
}
