//! Gauss–Legendre rules and adaptive panel integration.

use num_complex::Complex64 as C64;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// The 32-point rule used by every panel integrator.
pub fn gl32() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(32))
}

/// One 32-point panel of a complex integrand along the straight segment [a, b].
pub fn panel<F: FnMut(C64) -> C64>(f: &mut F, a: C64, b: C64) -> C64 {
    let (x, w) = gl32();
    let mid = (a + b) * 0.5;
    let half = (b - a) * 0.5;
    let mut s = C64::new(0.0, 0.0);
    for (xi, wi) in x.iter().zip(w) {
        s += f(mid + half * *xi) * *wi;
    }
    s * half
}

/// Adaptive composite Gauss–Legendre along a segment; halves panels until the
/// coarse and refined estimates agree to `rel_tol`.
pub fn integrate_segment<F: FnMut(C64) -> C64>(f: &mut F, a: C64, b: C64, rel_tol: f64) -> Result<C64> {
    let whole = panel(f, a, b);
    let scale = whole.norm().max(1e-300);
    adapt(f, a, b, whole, rel_tol, scale, 0)
}

fn adapt<F: FnMut(C64) -> C64>(f: &mut F, a: C64, b: C64, whole: C64, tol: f64, scale: f64, depth: usize) -> Result<C64> {
    let m = (a + b) * 0.5;
    let l = panel(f, a, m);
    let r = panel(f, m, b);
    let sum = l + r;
    let scale = scale.max(sum.norm());
    if (sum - whole).norm() <= tol * scale || (b - a).norm() < 1e-14 * (1.0 + a.norm()) {
        return Ok(sum);
    }
    if depth > 40 {
        return Err(Error::NonConvergence { what: "adaptive quadrature", iterations: depth });
    }
    Ok(adapt(f, a, m, l, tol, scale, depth + 1)? + adapt(f, m, b, r, tol, scale, depth + 1)?)
}

/// Real-line convenience wrapper.
pub fn integrate_real<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    let mut g = |z: C64| C64::new(f(z.re), 0.0);
    Ok(integrate_segment(&mut g, C64::new(a, 0.0), C64::new(b, 0.0), rel_tol)?.re)
}

/// Picks the square root of `radicand` nearest to `prev`. Fails when the two
/// candidates are nearly equidistant, i.e. the step turned by more than π/2.
pub fn track_sqrt(radicand: C64, prev: C64) -> Option<C64> {
    let r = radicand.sqrt();
    let (d_plus, d_minus) = ((r - prev).norm(), (r + prev).norm());
    let pick = if d_plus <= d_minus { r } else { -r };
    if prev.norm() > 0.0 && pick.norm() > 0.0 {
        let turn = (pick / prev).arg().abs();
        if turn > std::f64::consts::FRAC_PI_2 {
            return None;
        }
    }
    Some(pick)
}

/// ∫ √g along [a, b] with the root continued from `anchor` (the value at `a`).
/// Returns the integral and the tracked root at `b`.
pub fn sqrt_panel<G: FnMut(C64) -> C64>(g: &mut G, a: C64, b: C64, anchor: C64) -> Result<(C64, C64)> {
    let (x, w) = gl32();
    let mid = (a + b) * 0.5;
    let half = (b - a) * 0.5;
    let mut prev = anchor;
    let mut s = C64::new(0.0, 0.0);
    for (xi, wi) in x.iter().zip(w) {
        let t = mid + half * *xi;
        let root = track_sqrt(g(t), prev).ok_or(Error::BranchAmbiguity { re: t.re, im: t.im })?;
        s += root * *wi;
        prev = root;
    }
    let end = track_sqrt(g(b), prev).ok_or(Error::BranchAmbiguity { re: b.re, im: b.im })?;
    Ok((s * half, end))
}

/// Adaptive ∫ √g with branch tracking. A panel whose nodes cannot be
/// continued is split; the coarse/fine comparison drives refinement.
pub fn integrate_sqrt<G: FnMut(C64) -> C64>(g: &mut G, a: C64, b: C64, anchor: C64, rel_tol: f64) -> Result<(C64, C64)> {
    sqrt_adapt(g, a, b, anchor, rel_tol, 0.0, 0)
}

/// As [`integrate_sqrt`], with the tolerance taken relative to `scale` rather
/// than to the panel's own value (for pieces of a larger integral).
pub fn integrate_sqrt_scaled<G: FnMut(C64) -> C64>(g: &mut G, a: C64, b: C64, anchor: C64, rel_tol: f64, scale: f64) -> Result<(C64, C64)> {
    sqrt_adapt(g, a, b, anchor, rel_tol, scale, 0)
}

fn sqrt_adapt<G: FnMut(C64) -> C64>(
    g: &mut G,
    a: C64,
    b: C64,
    anchor: C64,
    tol: f64,
    scale: f64,
    depth: usize,
) -> Result<(C64, C64)> {
    if depth > 40 {
        return Err(Error::BranchAmbiguity { re: a.re, im: a.im });
    }
    let m = (a + b) * 0.5;
    let whole = sqrt_panel(g, a, b, anchor);
    let left = sqrt_panel(g, a, m, anchor);
    let (l, mid_root) = match left {
        Ok(v) => v,
        Err(_) => {
            let (l, mr) = sqrt_adapt(g, a, m, anchor, tol, scale, depth + 1)?;
            let (r, end) = sqrt_adapt(g, m, b, mr, tol, scale, depth + 1)?;
            return Ok((l + r, end));
        }
    };
    let (r, end) = match sqrt_panel(g, m, b, mid_root) {
        Ok(v) => v,
        Err(_) => {
            let (r, end) = sqrt_adapt(g, m, b, mid_root, tol, scale, depth + 1)?;
            return Ok((l + r, end));
        }
    };
    let sum = l + r;
    let scale = scale.max(sum.norm());
    if let Ok((wv, wend)) = whole {
        let same_sheet = (wend - end).norm() <= 1e-8 * (1.0 + end.norm());
        if same_sheet && ((wv - sum).norm() <= tol * scale || (b - a).norm() < 1e-14 * (1.0 + a.norm())) {
            return Ok((sum, end));
        }
    }
    let (l, mr) = sqrt_adapt(g, a, m, anchor, tol, scale, depth + 1)?;
    let (r, end) = sqrt_adapt(g, m, b, mr, tol, scale, depth + 1)?;
    Ok((l + r, end))
}
