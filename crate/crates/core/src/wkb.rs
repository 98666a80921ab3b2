//! Exact WKB solutions of the reduced system (h/i)φ' = [[0, α], [−β, 0]]φ,
//! α = −iV − ε, β = −iV + ε, and their resummed symbols.
//!
//! φ_± = e^{±z_a/h} M_± w_± with M_± = [[K⁻¹, K⁻¹], [∓iK, ±iK]] and
//! K = (β/α)^{1/4}; the solutions of the original equation are
//! ½[[1, i], [i, 1]] φ_±. Wronskians are reported for φ, whose leading value is
//! det M_± = ±2i; the constant map halves them.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry;
use crate::matrix::V2;
use crate::potential::Potential;
use crate::quad;

const I: C64 = C64 { re: 0.0, im: 1.0 };
const REL_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WkbType {
    Plus,
    Minus,
}

impl WkbType {
    pub fn sign(self) -> f64 {
        match self {
            WkbType::Plus => 1.0,
            WkbType::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WkbSpec {
    pub phase_base: C64,
    pub symbol_base: C64,
    pub kind: WkbType,
    /// crossing at which K = e^{−iπ/4}
    pub anchor: usize,
}

/// All turning points ζ_k and their conjugates.
pub fn turning_points(p: &Potential, eps: f64) -> Result<Vec<C64>> {
    let mut out = Vec::with_capacity(2 * p.n());
    for k in 1..=p.n() {
        let z = geometry::turning_point(p, k, eps)?;
        out.push(z);
        out.push(z.conj());
    }
    Ok(out)
}

/// max(2ε/v_k, 4√h)·1.5
pub fn exclusion_radius(p: &Potential, eps: f64, h: f64) -> f64 {
    let vmin = p.slopes.iter().cloned().fold(f64::INFINITY, f64::min);
    1.5 * (2.0 * eps / vmin).max(4.0 * h.sqrt())
}

fn radicand(p: &Potential, t: C64, eps: f64) -> C64 {
    let v = p.value(t);
    (v - C64::new(0.0, eps)) * (v + C64::new(0.0, eps))
}

fn real_root(p: &Potential, x: f64, eps: f64) -> f64 {
    p.value_re(x).hypot(eps)
}

/// K on the real axis: −i e^{iφ/2} with φ = atan2(ε, V) ∈ (0, π).
pub fn symbol_k_real(p: &Potential, x: f64, eps: f64) -> C64 {
    let phi = eps.atan2(p.value_re(x));
    -I * C64::from_polar(1.0, 0.5 * phi)
}

/// √(V² + ε²) and K continued vertically from the real point Re t.
fn continue_vertically(p: &Potential, t: C64, eps: f64) -> Result<(C64, C64)> {
    let x = t.re;
    let mut root = C64::new(real_root(p, x, eps), 0.0);
    let mut k = symbol_k_real(p, x, eps);
    let steps = (t.im.abs() / 0.005).ceil() as usize + 4;
    for j in 1..=steps {
        let s = C64::new(x, t.im * j as f64 / steps as f64);
        let (r, kk) = step_branch(p, s, eps, root, k)?;
        root = r;
        k = kk;
    }
    Ok((root, k))
}

fn step_branch(p: &Potential, s: C64, eps: f64, root: C64, k: C64) -> Result<(C64, C64)> {
    let r = quad::track_sqrt(radicand(p, s, eps), root).ok_or(Error::BranchAmbiguity { re: s.re, im: s.im })?;
    let cand = -I * ((p.value(s) + C64::new(0.0, eps)) / r).sqrt();
    let kk = if (cand - k).norm() <= (cand + k).norm() { cand } else { -cand };
    Ok((r, kk))
}

/// K(z(t)) = (β/α)^{1/4} with K(t_k) = e^{−iπ/4}.
pub fn symbol_k(p: &Potential, t: C64, eps: f64, radius: f64) -> Result<C64> {
    for z in turning_points(p, eps)? {
        if (t - z).norm() < radius {
            return Err(Error::TurningPointProximity { re: t.re, im: t.im });
        }
    }
    Ok(continue_vertically(p, t, eps)?.1)
}

/// z_a(t) = i∫_a^t √(V² + ε²) along a → Re a → Re t → t, with the root positive
/// on the real axis.
pub fn phase_z(p: &Potential, a: C64, t: C64, eps: f64) -> Result<C64> {
    let leg = |x: f64, to: C64| -> Result<C64> {
        if to.im == 0.0 {
            return Ok(C64::new(0.0, 0.0));
        }
        let start = C64::new(x, 0.0);
        let mut g = |s: C64| radicand(p, s, eps);
        Ok(quad::integrate_sqrt(&mut g, start, to, C64::new(real_root(p, x, eps), 0.0), REL_TOL)?.0)
    };
    let down = leg(a.re, a)?;
    let along = if a.re == t.re { 0.0 } else { quad::integrate_real(&mut |x| real_root(p, x, eps), a.re, t.re, REL_TOL)? };
    let up = leg(t.re, t)?;
    Ok(I * (up + along - down))
}

/// Ordered waypoints; each segment is split into `nodes` panels (chosen from h when empty).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolylinePath {
    pub waypoints: Vec<C64>,
    pub nodes: Vec<usize>,
}

impl PolylinePath {
    pub fn new(waypoints: Vec<C64>) -> PolylinePath {
        PolylinePath { waypoints, nodes: vec![] }
    }

    pub fn with_nodes(waypoints: Vec<C64>, nodes: Vec<usize>) -> PolylinePath {
        PolylinePath { waypoints, nodes }
    }

    pub fn reversed(&self) -> PolylinePath {
        let mut w = self.waypoints.clone();
        w.reverse();
        let mut n = self.nodes.clone();
        n.reverse();
        PolylinePath { waypoints: w, nodes: n }
    }

    pub fn length(&self) -> f64 {
        self.waypoints.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    /// Vertical segment through x from x + ic down to x − ic.
    pub fn vertical(x: f64, c: f64) -> PolylinePath {
        PolylinePath::new(vec![C64::new(x, c), C64::new(x, -c)])
    }
}

/// Default abscissa of the symbol base points next to crossing k:
/// (t_{k−1} + t_k)/2, or t_1 + min(1, gap/2) to the right of the first crossing.
pub fn default_base_abscissa(p: &Potential, k: usize) -> f64 {
    let half_gap = if p.n() > 1 { 0.5 * p.min_gap() } else { 1.0 };
    if k == 1 {
        p.zeros[0] + half_gap.min(1.0)
    } else {
        0.5 * (p.zeros[k - 2] + p.zeros[k - 1])
    }
}

/// Default offset c = 0.5·min(1, gap/2).
pub fn default_base_offset(p: &Potential) -> f64 {
    let half_gap = if p.n() > 1 { 0.5 * p.min_gap() } else { 1.0 };
    0.5 * half_gap.min(1.0)
}

/// Path data on a node grid.
#[derive(Debug, Clone)]
struct Grid {
    t: Vec<C64>,
    /// z_{t_0}(t_j)
    z: Vec<C64>,
    /// K'/K dz/dt = −iεV'/(2(V² + ε²))
    q: Vec<C64>,
    k: Vec<C64>,
}

fn panel_counts(p: &Potential, path: &PolylinePath, eps: f64, h: f64) -> Vec<usize> {
    let segs = path.waypoints.len() - 1;
    if path.nodes.len() == segs {
        return path.nodes.clone();
    }
    path.waypoints
        .windows(2)
        .map(|w| {
            let len = (w[1] - w[0]).norm();
            let rmax = (0..=8)
                .map(|j| radicand(p, w[0] + (w[1] - w[0]) * (j as f64 / 8.0), eps).norm().sqrt())
                .fold(0.0, f64::max);
            // keep the exponential rate per panel near 0.05
            ((len * 2.0 * rmax / h / 0.05).ceil() as usize).max(200)
        })
        .collect()
}

fn build_grid(p: &Potential, path: &PolylinePath, eps: f64, counts: &[usize]) -> Result<Grid> {
    let start = path.waypoints[0];
    let (mut root, mut kk) = continue_vertically(p, start, eps)?;
    let mut t = vec![start];
    let mut z = vec![C64::new(0.0, 0.0)];
    let mut k = vec![kk];
    let mut g = |s: C64| radicand(p, s, eps);
    for (seg, w) in path.waypoints.windows(2).enumerate() {
        let n = counts[seg];
        for j in 1..=n {
            let a = *t.last().unwrap();
            let b = w[0] + (w[1] - w[0]) * (j as f64 / n as f64);
            let (val, end) = quad::integrate_sqrt(&mut g, a, b, root, REL_TOL)?;
            let r_end = end;
            let cand = -I * ((p.value(b) + C64::new(0.0, eps)) / r_end).sqrt();
            kk = if (cand - kk).norm() <= (cand + kk).norm() { cand } else { -cand };
            root = r_end;
            z.push(z.last().unwrap() + I * val);
            t.push(b);
            k.push(kk);
        }
    }
    let q = t
        .iter()
        .map(|&s| {
            let v = p.value(s);
            -I * eps * p.deriv(s) / (2.0 * (v * v + eps * eps))
        })
        .collect();
    Ok(Grid { t, z, q, k })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub canonical: bool,
    /// smallest increment of ±Re z between consecutive nodes
    pub min_increment: f64,
    pub min_distance: f64,
}

/// Checks the exclusion radius and that ±Re z increases strictly along the path.
pub fn certify_path(p: &Potential, path: &PolylinePath, eps: f64, h: f64, kind: WkbType, radius: f64) -> Result<Certificate> {
    if path.waypoints.len() < 2 {
        return Err(Error::Config("a path needs at least two waypoints".into()));
    }
    for &w in &path.waypoints {
        if !p.in_sector(w) {
            return Err(Error::DomainViolation { re: w.re, im: w.im });
        }
    }
    let tps = turning_points(p, eps)?;
    let counts = panel_counts(p, path, eps, h);
    let grid = build_grid(p, path, eps, &counts)?;
    certify_grid(&grid, &tps, kind, radius)
}

fn certify_grid(grid: &Grid, tps: &[C64], kind: WkbType, radius: f64) -> Result<Certificate> {
    let mut min_distance = f64::INFINITY;
    for &t in &grid.t {
        for &z in tps {
            let d = (t - z).norm();
            min_distance = min_distance.min(d);
            if d < radius {
                return Err(Error::TurningPointProximity { re: t.re, im: t.im });
            }
        }
    }
    let s = kind.sign();
    let mut min_increment = f64::INFINITY;
    for j in 1..grid.z.len() {
        let inc = s * (grid.z[j].re - grid.z[j - 1].re);
        min_increment = min_increment.min(inc);
        if !(inc > 0.0) {
            return Err(Error::NonCanonicalPath { node: j });
        }
    }
    Ok(Certificate { canonical: true, min_increment, min_distance })
}

/// ∫_0^1 e^{λ(x−1)} dx and ∫_0^1 x e^{λ(x−1)} dx.
fn filon_weights(lam: C64) -> (C64, C64) {
    if lam.norm() < 0.5 {
        let mut i0 = C64::new(0.0, 0.0);
        let mut i1 = C64::new(0.0, 0.0);
        let mut term = C64::new(1.0, 0.0);
        for m in 0..24 {
            let mf = m as f64;
            i0 += term / (mf + 1.0);
            i1 += term / ((mf + 1.0) * (mf + 2.0));
            term *= -lam / (mf + 1.0);
        }
        (i0, i1)
    } else {
        let one_minus_e = -expm1(-lam);
        let i0 = one_minus_e / lam;
        (i0, (C64::new(1.0, 0.0) - i0) / lam)
    }
}

fn expm1(w: C64) -> C64 {
    let half = (0.5 * w.im).sin();
    C64::new(w.re.exp_m1() * w.im.cos() - 2.0 * half * half, w.re.exp() * w.im.sin())
}

/// Raw recursion on one grid. Returns the partial sums of (even, odd) at every
/// node and the end value of every order.
fn volterra(grid: &Grid, kind: WkbType, h: f64, k_max: usize) -> (Vec<C64>, Vec<C64>, Vec<(C64, C64)>) {
    let n = grid.t.len();
    let c = kind.sign() * 2.0 / h;
    let mut even = vec![C64::new(1.0, 0.0); n];
    let mut sum_even = even.clone();
    let mut sum_odd = vec![C64::new(0.0, 0.0); n];
    let mut ends = Vec::with_capacity(k_max);
    let weights: Vec<(C64, C64)> = (1..n).map(|j| filon_weights(c * (grid.z[j] - grid.z[j - 1]))).collect();
    let decay: Vec<C64> = (1..n).map(|j| (-c * (grid.z[j] - grid.z[j - 1])).exp()).collect();
    let mut odd = vec![C64::new(0.0, 0.0); n];
    for _ in 0..k_max {
        odd[0] = C64::new(0.0, 0.0);
        for j in 1..n {
            let dt = grid.t[j] - grid.t[j - 1];
            let (i0, i1) = weights[j - 1];
            let g0 = grid.q[j - 1] * even[j - 1];
            let g1 = grid.q[j] * even[j];
            odd[j] = decay[j - 1] * odd[j - 1] + dt * (g0 * (i0 - i1) + g1 * i1);
        }
        even[0] = C64::new(0.0, 0.0);
        for j in 1..n {
            let dt = grid.t[j] - grid.t[j - 1];
            even[j] = even[j - 1] + 0.5 * dt * (grid.q[j - 1] * odd[j - 1] + grid.q[j] * odd[j]);
        }
        for j in 0..n {
            sum_even[j] += even[j];
            sum_odd[j] += odd[j];
        }
        ends.push((even[n - 1], odd[n - 1]));
        let size = even.iter().chain(odd.iter()).map(|w| w.norm()).fold(0.0, f64::max);
        if size < 1e-30 {
            break;
        }
    }
    (sum_even, sum_odd, ends)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymbolOnPath {
    pub nodes: Vec<C64>,
    /// z_{t_0}(t) at the nodes, t_0 the path start
    pub z: Vec<C64>,
    pub k: Vec<C64>,
    /// Σ_{k≤K} w_{±,2k}
    pub even: Vec<C64>,
    /// Σ_{k≤K} w_{±,2k−1}
    pub odd: Vec<C64>,
    /// |(w_{±,2k}, w_{±,2k−1})| at the path end, k = 1..K
    pub term_norms: Vec<f64>,
    /// magnitude of the last included term
    pub truncation_estimate: f64,
    pub certificate: Certificate,
}

/// Resummed symbol w_±(z(t), z(b)) along a path from b; the recursion runs on
/// the node grid and on its refinement, combined by Richardson extrapolation.
pub fn resum_symbol_on_path(p: &Potential, eps: f64, h: f64, kind: WkbType, path: &PolylinePath, k_max: usize, radius: f64) -> Result<SymbolOnPath> {
    if path.waypoints.len() < 2 {
        return Err(Error::Config("a path needs at least two waypoints".into()));
    }
    for &w in &path.waypoints {
        if !p.in_sector(w) {
            return Err(Error::DomainViolation { re: w.re, im: w.im });
        }
    }
    let tps = turning_points(p, eps)?;
    let counts = panel_counts(p, path, eps, h);
    let fine_counts: Vec<usize> = counts.iter().map(|c| 2 * c).collect();
    let fine = build_grid(p, path, eps, &fine_counts)?;
    let certificate = certify_grid(&fine, &tps, kind, radius)?;
    let coarse = Grid {
        t: fine.t.iter().step_by(2).cloned().collect(),
        z: fine.z.iter().step_by(2).cloned().collect(),
        q: fine.q.iter().step_by(2).cloned().collect(),
        k: fine.k.iter().step_by(2).cloned().collect(),
    };
    let (ce, co, cends) = volterra(&coarse, kind, h, k_max);
    let (fe, fo, fends) = volterra(&fine, kind, h, k_max);
    let rich = |f: C64, c: C64| (4.0 * f - c) / 3.0;
    let even: Vec<C64> = ce.iter().enumerate().map(|(j, c)| rich(fe[2 * j], *c)).collect();
    let odd: Vec<C64> = co.iter().enumerate().map(|(j, c)| rich(fo[2 * j], *c)).collect();
    let term_norms: Vec<f64> = cends
        .iter()
        .zip(&fends)
        .map(|((ce, co), (fe, fo))| (rich(*fe, *ce).norm_sqr() + rich(*fo, *co).norm_sqr()).sqrt())
        .collect();
    let truncation_estimate = term_norms.last().cloned().unwrap_or(0.0);
    Ok(SymbolOnPath {
        nodes: coarse.t,
        z: coarse.z,
        k: coarse.k,
        even,
        odd,
        term_norms,
        truncation_estimate,
        certificate,
    })
}

/// (Σ w_{±,2k}, Σ w_{±,2k−1}) at the end of the path and the truncation estimate.
pub fn resum_symbol(p: &Potential, eps: f64, h: f64, kind: WkbType, path: &PolylinePath, k_max: usize, radius: f64) -> Result<(V2, f64)> {
    let s = resum_symbol_on_path(p, eps, h, kind, path, k_max, radius)?;
    let last = s.nodes.len() - 1;
    Ok(([s.even[last], s.odd[last]], s.truncation_estimate))
}

/// Cap on the number of orders; the recursion stops early once a whole order is below 1e−30.
pub const DEFAULT_K_MAX: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WronskianResult {
    pub h: f64,
    pub value: C64,
    pub defect_from_2i: f64,
    /// inf |z_ζ(t)| over the path and all turning points
    pub dist: f64,
    pub truncation_estimate: f64,
}

/// 𝒲[φ_+(·, a, b_+), φ_−(·, a, b_−)] = 2i Σ_k w_{+,2k}(z(b_−), z(b_+)) for a
/// path of type + from b_+ to b_−.
pub fn wronskian(p: &Potential, eps: f64, h: f64, path: &PolylinePath, k_max: usize, radius: f64) -> Result<WronskianResult> {
    let s = resum_symbol_on_path(p, eps, h, WkbType::Plus, path, k_max, radius)?;
    let last = s.nodes.len() - 1;
    let value = 2.0 * I * s.even[last];
    let dist = distance_to_turning_points(p, eps, &s.nodes, &s.z)?;
    Ok(WronskianResult { h, value, defect_from_2i: (value - 2.0 * I).norm(), dist, truncation_estimate: s.truncation_estimate })
}

/// inf |z_ζ(t)| over nodes t and ζ ∈ {ζ_k, ζ̄_k}, with z_{t_0} the node phases.
fn distance_to_turning_points(p: &Potential, eps: f64, nodes: &[C64], z: &[C64]) -> Result<f64> {
    // z_{t_0}(ζ) = z_{t_0}(t_k) + iA_k/2 (or i·conj(A_k)/2 below the axis)
    let z0_tk = |k: usize| phase_z(p, nodes[0], C64::new(p.zeros[k - 1], 0.0), eps);
    let mut best = f64::INFINITY;
    for k in 1..=p.n() {
        let base = z0_tk(k)?;
        let a = geometry::action_a(p, k, eps)?;
        for zeta_z in [base + I * a / 2.0, base + I * a.conj() / 2.0] {
            for zt in z {
                best = best.min((zt - zeta_z).norm());
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndependenceCheck {
    pub samples: Vec<C64>,
    pub values: Vec<C64>,
    /// max |𝒲(t) − 𝒲(t_0)| / |𝒲(t_0)|
    pub defect: f64,
}

/// det(φ_+(t), φ_−(t)) at `samples` evenly spaced nodes of a type-+ path from
/// b_+ to b_−; φ_− is built on the reversed path from b_−.
pub fn wronskian_t_independence(p: &Potential, eps: f64, h: f64, path: &PolylinePath, k_max: usize, radius: f64, samples: usize) -> Result<IndependenceCheck> {
    // both directions share one node grid
    let mut fixed = path.clone();
    fixed.nodes = panel_counts(p, path, eps, h);
    let plus = resum_symbol_on_path(p, eps, h, WkbType::Plus, &fixed, k_max, radius)?;
    let minus = resum_symbol_on_path(p, eps, h, WkbType::Minus, &fixed.reversed(), k_max, radius)?;
    let n = plus.nodes.len();
    assert_eq!(n, minus.nodes.len());
    // phase base at the path midpoint keeps e^{±z/h} moderate
    let mid = n / 2;
    let mut out_t = Vec::new();
    let mut out_v = Vec::new();
    for s in 0..samples {
        let j = if samples == 1 { mid } else { s * (n - 1) / (samples - 1) };
        let jm = n - 1 - j;
        let z = plus.z[j] - plus.z[mid];
        let k = plus.k[j];
        let kinv = 1.0 / k;
        let (ep, op) = (plus.even[j], plus.odd[j]);
        let (em, om) = (minus.even[jm], minus.odd[jm]);
        let phi_p = [(z / h).exp() * kinv * (ep + op), (z / h).exp() * (-I * k) * (ep - op)];
        let phi_m = [(-z / h).exp() * kinv * (em + om), (-z / h).exp() * (I * k) * (em - om)];
        out_t.push(plus.nodes[j]);
        out_v.push(phi_p[0] * phi_m[1] - phi_p[1] * phi_m[0]);
    }
    let w0 = out_v[0];
    let defect = out_v.iter().map(|w| (w - w0).norm() / w0.norm()).fold(0.0, f64::max);
    Ok(IndependenceCheck { samples: out_t, values: out_v, defect })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeadingTerms {
    /// ψ^r_{+,0}, ψ^r_{−,0} at t_k + s and ψ^l_{+,0}, ψ^l_{−,0} at t_k − s
    pub r_plus: V2,
    pub r_minus: V2,
    pub l_plus: V2,
    pub l_minus: V2,
}

/// λ₀√h < |t − t_k| < 2λ₀√h
pub fn annulus(h: f64, lambda0: f64) -> (f64, f64) {
    (lambda0 * h.sqrt(), 2.0 * lambda0 * h.sqrt())
}

fn check_annulus(s: f64, h: f64, lambda0: f64) -> Result<()> {
    let (inner, outer) = annulus(h, lambda0);
    if !(s > inner && s < outer) {
        return Err(Error::OutOfAnnulus { offset: s, inner, outer });
    }
    Ok(())
}

fn require_rising(p: &Potential, k: usize) -> Result<f64> {
    if k == 0 || k > p.n() {
        return Err(Error::InvalidPotential(format!("crossing index {k} outside 1..={}", p.n())));
    }
    if p.slope_signs[k - 1] < 0.0 {
        return Err(Error::Unsupported(format!("leading terms at crossing {k} with V' < 0")));
    }
    Ok(p.slopes[k - 1])
}

/// Leading terms of the four exact WKB solutions near a crossing with V'(t_k) = v > 0,
/// at t = t_k ± s:
/// ψ^r_{+,0} = −ν̄ e^{(i/h)∫V} s^{iμ/2v} (−ε/(2vs), 1),
/// ψ^r_{−,0} = iν e^{−(i/h)∫V} s^{−iμ/2v} (1, ε/(2vs)),
/// ψ^l_{+,0} = ν e^{−(i/h)∫V} s^{−iμ/2v} (1, −ε/(2vs)),
/// ψ^l_{−,0} = iν̄ e^{(i/h)∫V} s^{iμ/2v} (ε/(2vs), 1),
/// with ν = e^{(iμ/2v) log ε} and ∫V from t_k.
pub fn leading_terms_near_crossing(p: &Potential, k: usize, eps: f64, h: f64, s: f64, lambda0: f64) -> Result<LeadingTerms> {
    let v = require_rising(p, k)?;
    check_annulus(s, h, lambda0)?;
    let tk = p.zeros[k - 1];
    let mu = eps * eps / h;
    let nu = if eps > 0.0 { C64::from_polar(1.0, mu / (2.0 * v) * eps.ln()) } else { C64::new(1.0, 0.0) };
    let int_r = quad::integrate_real(&mut |x| p.value_re(x), tk, tk + s, REL_TOL)?;
    let int_l = quad::integrate_real(&mut |x| p.value_re(x), tk, tk - s, REL_TOL)?;
    let pw = C64::from_polar(1.0, mu / (2.0 * v) * s.ln());
    let e = eps / (2.0 * v * s);
    let er = C64::from_polar(1.0, int_r / h);
    let el = C64::from_polar(1.0, int_l / h);
    let one = C64::new(1.0, 0.0);
    Ok(LeadingTerms {
        r_plus: [-nu.conj() * er * pw * (-e), -nu.conj() * er * pw * one],
        r_minus: [I * nu * er.conj() * pw.conj() * one, I * nu * er.conj() * pw.conj() * e],
        // at t = t_k − s the factor ε/(2t) becomes −ε/(2vs)
        l_plus: [nu * el.conj() * pw.conj() * one, nu * el.conj() * pw.conj() * (-e)],
        l_minus: [I * nu.conj() * el * pw * e, I * nu.conj() * el * pw * one],
    })
}

/// ½(K⁻¹ ± K, i(K⁻¹ ∓ K)) e^{±z_{ζ_±}(t)/h} at real t, ζ_+ = ζ_k, ζ_− = ζ̄_k.
pub fn wkb_leading(p: &Potential, k: usize, eps: f64, h: f64, t: f64, kind: WkbType) -> Result<V2> {
    let kk = symbol_k_real(p, t, eps);
    let a = geometry::action_a(p, k, eps)?;
    let tk = p.zeros[k - 1];
    let base = I * quad::integrate_real(&mut |x| real_root(p, x, eps), tk, t, REL_TOL)?;
    let (z, s) = match kind {
        WkbType::Plus => (base - I * a / 2.0, 1.0),
        WkbType::Minus => (base - I * a.conj() / 2.0, -1.0),
    };
    let kinv = 1.0 / kk;
    let e = (s * z / h).exp();
    Ok([0.5 * (kinv + s * kk) * e, 0.5 * I * (kinv - s * kk) * e])
}

/// sup over the real annulus of h/|z_ζ(t)| for ζ ∈ {ζ_k, ζ̄_k}.
pub fn annulus_error_estimate(p: &Potential, k: usize, eps: f64, h: f64, lambda0: f64) -> Result<f64> {
    require_rising(p, k)?;
    let (inner, outer) = annulus(h, lambda0);
    let tk = p.zeros[k - 1];
    let a = geometry::action_a(p, k, eps)?;
    let mut worst: f64 = 0.0;
    for side in [1.0, -1.0] {
        for j in 0..=32 {
            let s = inner + (outer - inner) * j as f64 / 32.0;
            let x = tk + side * s;
            let base = I * quad::integrate_real(&mut |y| real_root(p, y, eps), tk, x, REL_TOL)?;
            for zz in [base - I * a / 2.0, base - I * a.conj() / 2.0] {
                worst = worst.max(h / zz.norm());
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode;

    #[test]
    fn phase_of_the_linear_model() {
        let p = Potential::preset("linear").unwrap();
        let eps = 0.2;
        for t in [0.3, 1.1, -0.7] {
            let z = phase_z(&p, C64::new(0.0, 0.0), C64::new(t, 0.0), eps).unwrap();
            let exact = 0.5 * (t * (t * t + eps * eps).sqrt() + eps * eps * (t / eps).asinh());
            assert!((z - I * exact).norm() < 1e-13, "t={t}");
        }
        assert_eq!(phase_z(&p, C64::new(0.4, 0.1), C64::new(0.4, 0.1), eps).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn base_point_shift_is_additive() {
        let p = Potential::preset("two-zero").unwrap();
        let eps = 0.1;
        let (a, b) = (C64::new(0.3, 0.2), C64::new(-1.7, -0.1));
        let shift = phase_z(&p, a, b, eps).unwrap();
        for j in 0..10 {
            let t = C64::new(-2.0 + 0.45 * j as f64, 0.25 * ((j as f64).sin()));
            let d = phase_z(&p, a, t, eps).unwrap() - phase_z(&p, b, t, eps).unwrap();
            assert!((d - shift).norm() < 1e-11, "j={j}");
        }
    }

    #[test]
    fn symbol_on_the_real_axis() {
        let p = Potential::preset("one-zero").unwrap();
        let eps = 0.05;
        let k0 = symbol_k(&p, C64::new(0.0, 0.0), eps, 1e-3).unwrap();
        assert!((k0 - C64::from_polar(1.0, -std::f64::consts::FRAC_PI_4)).norm() < 1e-15);
        for x in [-3.0, -0.2, 0.4, 5.0] {
            assert!((symbol_k_real(&p, x, eps).norm() - 1.0).abs() < 1e-12);
        }
        let k = symbol_k_real(&p, 8.0, 1e-6);
        assert!((1.0 / k - k - 2.0 * I).norm() < 1e-5);
        // K⁴ = β/α off the axis
        let t = C64::new(0.8, 0.3);
        let k = symbol_k(&p, t, eps, 1e-3).unwrap();
        let v = p.value(t);
        let ratio = (-I * v + eps) / (-I * v - eps);
        assert!((k.powi(4) - ratio).norm() < 1e-12);
        assert!(matches!(symbol_k(&p, C64::new(0.0, 0.05), eps, 0.01), Err(Error::TurningPointProximity { .. })));
    }

    #[test]
    fn zero_order_symbol_and_wronskian() {
        let p = Potential::preset("one-zero").unwrap();
        let path = PolylinePath::vertical(1.0, 0.5);
        let (w, est) = resum_symbol(&p, 0.3, 0.02, WkbType::Plus, &path, 0, 0.1).unwrap();
        assert_eq!(w, [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        assert_eq!(est, 0.0);
        assert_eq!(wronskian(&p, 0.3, 0.02, &path, 0, 0.1).unwrap().value, 2.0 * I);
    }

    #[test]
    fn upward_path_is_not_canonical_for_plus() {
        let p = Potential::preset("one-zero").unwrap();
        let path = PolylinePath::vertical(1.0, 0.5).reversed();
        assert!(matches!(resum_symbol(&p, 0.3, 0.02, WkbType::Plus, &path, 3, 0.1), Err(Error::NonCanonicalPath { .. })));
    }

    /// dw/dt = [[0, q], [q, ∓(2/h) z'(t)]] w along the vertical path, integrated by DOP853.
    fn symbol_by_ode(p: &Potential, eps: f64, h: f64, kind: WkbType, x: f64, c: f64) -> V2 {
        let sgn = kind.sign();
        let f = |s: f64, y: &[f64; 4], dy: &mut [f64; 4]| {
            let t = C64::new(x, c - s);
            let dt = -I;
            let v = p.value(t);
            let r2 = v * v + eps * eps;
            assert!(r2.re > 0.0);
            let zp = I * r2.sqrt();
            let q = -I * eps * p.deriv(t) / (2.0 * r2);
            let w = [C64::new(y[0], y[1]), C64::new(y[2], y[3])];
            let d0 = q * w[1] * dt;
            let d1 = (q * w[0] - sgn * 2.0 / h * zp * w[1]) * dt;
            *dy = [d0.re, d0.im, d1.re, d1.im];
        };
        let mut y = [1.0, 0.0, 0.0, 0.0];
        let opts = ode::Options { rtol: 1e-13, atol: 1e-15, ..Default::default() };
        ode::integrate(f, 0.0, 2.0 * c, &mut y, &opts, |_, _| {}).unwrap();
        [C64::new(y[0], y[1]), C64::new(y[2], y[3])]
    }

    #[test]
    fn resummed_symbol_matches_direct_integration() {
        let p = Potential::preset("one-zero").unwrap();
        let (eps, h) = (0.3, 0.01);
        let path = PolylinePath::vertical(1.0, 0.5);
        let (w, est) = resum_symbol(&p, eps, h, WkbType::Plus, &path, DEFAULT_K_MAX, 0.1).unwrap();
        let oracle = symbol_by_ode(&p, eps, h, WkbType::Plus, 1.0, 0.5);
        assert!(est < 1e-16);
        assert!((w[0] - oracle[0]).norm() < 1e-11, "{:?} vs {:?}", w, oracle);
        assert!((w[1] - oracle[1]).norm() < 1e-11);
    }

    #[test]
    fn refinement_changes_little() {
        let p = Potential::preset("one-zero").unwrap();
        let (eps, h) = (0.3, 0.01);
        let base = PolylinePath::vertical(1.0, 0.5);
        let counts = panel_counts(&p, &base, eps, h);
        let a = PolylinePath::with_nodes(base.waypoints.clone(), counts.clone());
        let b = PolylinePath::with_nodes(base.waypoints.clone(), counts.iter().map(|c| 2 * c).collect());
        let (wa, _) = resum_symbol(&p, eps, h, WkbType::Plus, &a, 20, 0.1).unwrap();
        let (wb, _) = resum_symbol(&p, eps, h, WkbType::Plus, &b, 20, 0.1).unwrap();
        let rel = ((wa[0] - wb[0]).norm() + (wa[1] - wb[1]).norm()) / (wb[0].norm() + wb[1].norm());
        assert!(rel < 1e-9, "{rel:e}");
    }

    #[test]
    fn wronskian_is_constant_along_the_path() {
        let p = Potential::preset("one-zero").unwrap();
        let path = PolylinePath::vertical(1.0, 0.5);
        let chk = wronskian_t_independence(&p, 0.3, 0.02, &path, DEFAULT_K_MAX, 0.1, 5).unwrap();
        let w = wronskian(&p, 0.3, 0.02, &path, DEFAULT_K_MAX, 0.1).unwrap();
        assert!(chk.defect < 1e-9, "{:e}", chk.defect);
        assert!((chk.values[0] - w.value).norm() < 1e-9 * w.value.norm());
    }

    #[test]
    fn leading_terms_in_the_small_coupling_limit() {
        let p = Potential::preset("two-zero").unwrap();
        let h: f64 = 1e-3;
        let s = 1.5 * 3.0 * h.sqrt();
        let lt = leading_terms_near_crossing(&p, 1, 1e-9, h, s, 3.0).unwrap();
        let int = quad::integrate_real(&mut |x| p.value_re(x), 1.0, 1.0 + s, 1e-14).unwrap();
        let expect = -C64::from_polar(1.0, int / h);
        assert!((lt.r_plus[1] - expect).norm() < 1e-9);
        assert!(lt.r_plus[0].norm() < 1e-8);
        assert!(matches!(leading_terms_near_crossing(&p, 1, 0.01, h, 0.5, 3.0), Err(Error::OutOfAnnulus { .. })));
        assert!(matches!(leading_terms_near_crossing(&p, 2, 0.01, h, s, 3.0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn leading_terms_track_the_wkb_leading_part() {
        let p = Potential::preset("two-zero").unwrap();
        let mut errs = Vec::new();
        for mu in [4e-3, 2e-3, 1e-3] {
            let h: f64 = 1e-4;
            let eps = (mu * h).sqrt();
            let s = 4.5 * h.sqrt();
            let lt = leading_terms_near_crossing(&p, 1, eps, h, s, 3.0).unwrap();
            let w = wkb_leading(&p, 1, eps, h, 1.0 + s, WkbType::Plus).unwrap();
            let rel = ((w[0] - lt.r_plus[0]).norm() + (w[1] - lt.r_plus[1]).norm()) / lt.r_plus[1].norm();
            errs.push(rel);
        }
        let slope = (errs[0] / errs[2]).ln() / 4f64.ln();
        assert!(slope > 0.8 && slope < 1.2, "{errs:?}");
    }

    #[test]
    fn annulus_estimate_scales_with_lambda() {
        let p = Potential::preset("two-zero").unwrap();
        let (eps, h) = (0.003, 1e-3);
        let a = annulus_error_estimate(&p, 1, eps, h, 3.0).unwrap();
        let b = annulus_error_estimate(&p, 1, eps, h, 6.0).unwrap();
        let ratio = a / b;
        assert!(ratio > 3.5 && ratio < 4.5, "{ratio}");
    }
}
