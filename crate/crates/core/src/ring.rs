//! The basis D₁, D₂, N₁, N₂ of 2×2 matrices and the σ/τ sequences built on it.
//!
//! D₁ = [[1,0],[0,0]], D₂ = [[0,0],[0,1]], N₁ = [[0,0],[1,0]], N₂ = [[0,1],[0,0]].

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::matrix::M2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RingElement {
    pub d1: C64,
    pub d2: C64,
    pub n1: C64,
    pub n2: C64,
}

impl RingElement {
    pub fn new(d1: C64, d2: C64, n1: C64, n2: C64) -> Self {
        RingElement { d1, d2, n1, n2 }
    }

    pub fn identity() -> Self {
        let (o, z) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
        RingElement::new(o, o, z, z)
    }

    pub fn from_dense(m: &M2) -> Self {
        RingElement::new(m[0][0], m[1][1], m[1][0], m[0][1])
    }

    pub fn to_dense(&self) -> M2 {
        [[self.d1, self.n2], [self.n1, self.d2]]
    }

    /// Product through the table D_iD_i = D_i, D₁N₂ = N₂, D₂N₁ = N₁,
    /// N₁D₁ = N₁, N₂D₂ = N₂, N₁N₂ = D₂, N₂N₁ = D₁, all others zero.
    /// Terms are summed in the same order as the dense product so the two agree bitwise.
    pub fn mul(&self, o: &RingElement) -> RingElement {
        RingElement {
            // D₁D₁ + N₂N₁
            d1: self.d1 * o.d1 + self.n2 * o.n1,
            // N₁N₂ + D₂D₂
            d2: self.n1 * o.n2 + self.d2 * o.d2,
            // N₁D₁ + D₂N₁
            n1: self.n1 * o.d1 + self.d2 * o.n1,
            // D₁N₂ + N₂D₂
            n2: self.d1 * o.n2 + self.n2 * o.d2,
        }
    }
}

pub fn ring_product(elements: &[RingElement]) -> RingElement {
    elements.iter().fold(RingElement::identity(), |acc, e| acc.mul(e))
}

/// 𝒞^{(l)}: complex conjugation applied l times.
pub fn conj_pow(l: usize, z: C64) -> C64 {
    if l % 2 == 1 {
        z.conj()
    } else {
        z
    }
}

/// σ_n, τ_n by their recursions. `a` has n+1 entries, `b` and `c` have n;
/// b_k, c_k sit at index k−1.
pub fn sigma_tau(a: &[C64], b: &[C64], c: &[C64]) -> (C64, C64) {
    let n = b.len();
    assert!(n >= 1 && c.len() == n && a.len() == n + 1, "need a: n+1, b, c: n entries");
    let mut sigma = a[0] * a[1].conj() * c[0];
    let mut tau = a[0] * a[1] * b[0];
    for m in 2..=n {
        // τ_m uses σ_{m−1} and τ_{m−1}
        let t = tau * conj_pow(m - 1, a[m]) * c[m - 1] + sigma * conj_pow(m - 1, a[m] * b[m - 1]);
        sigma = sigma * conj_pow(m, a[m]) * c[m - 1];
        tau = t;
    }
    (sigma, tau)
}

/// Closed forms σ_n = ∏𝒞^{(l)}a_l ∏c_l and
/// τ_n = ∏c_l Σ_k [∏_{l<k} 𝒞^{(l)}a_l ∏_{l=k−1}^{n−1} 𝒞^{(l)}a_{l+1} 𝒞^{(k−1)}b_k / c_k].
pub fn sigma_tau_closed(a: &[C64], b: &[C64], c: &[C64]) -> (C64, C64) {
    let n = b.len();
    let prod_c: C64 = c.iter().product();
    let sigma = (0..=n).map(|l| conj_pow(l, a[l])).product::<C64>() * prod_c;
    let mut sum = C64::new(0.0, 0.0);
    for k in 1..=n {
        let head: C64 = (0..k).map(|l| conj_pow(l, a[l])).product();
        let tail: C64 = (k - 1..n).map(|l| conj_pow(l, a[l + 1])).product();
        sum += head * tail * conj_pow(k - 1, b[k - 1]) / c[k - 1];
    }
    (sigma, prod_c * sum)
}

/// |τ_n|² from the double-sum expansion.
pub fn tau_squared(a: &[C64], b: &[C64], c: &[C64]) -> f64 {
    let n = b.len();
    let a2: Vec<f64> = a.iter().map(|x| x.norm_sqr()).collect();
    let pc: f64 = c.iter().map(|x| x.norm_sqr()).product();
    let pa: f64 = a2.iter().product();
    let first = pa * pc * (0..n).map(|k| (b[k] / c[k]).norm_sqr()).sum::<f64>();
    let mut cross = C64::new(0.0, 0.0);
    for k in 2..=n {
        let outer: f64 = a2[k..=n].iter().product();
        let ck = conj_pow(k, b[k - 1]) * (C64::new(1.0, 0.0) / c[k - 1]).conj();
        let mut inner = C64::new(0.0, 0.0);
        for j in 1..k {
            let head: f64 = a2[..j].iter().product();
            let phase: C64 = (j - 1..=k - 2).map(|l| conj_pow(l, a[l + 1] * a[l + 1])).product();
            inner += head * phase * conj_pow(j - 1, b[j - 1]) / c[j - 1];
        }
        cross += outer * ck * inner;
    }
    first + 2.0 * pc * cross.re
}

/// 𝒯_k = T_k T_{k,k+1} = a b D₁ + conj(a b) D₂ + a c N₁ + ā c N₂.
pub fn script_t(a: C64, b: C64, c: C64) -> RingElement {
    RingElement::new(a * b, (a * b).conj(), a * c, a.conj() * c)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionReport {
    pub n: usize,
    /// residuals of the coefficients against their σ/τ leading terms, in the
    /// order (D₁, D₂, N₁, N₂)
    pub residuals: [f64; 4],
    /// which coefficients carry 𝒪(b²) remainders (the others are 𝒪(b³))
    pub quadratic: [bool; 4],
}

/// Dense ∏_{j=0}^{n} 𝒯_j (𝒯₀ = diag(a₀, ā₀)) against the leading terms:
/// odd n: D₁ ≈ τ(a,b,c), D₂ ≈ conj τ(a,b,c̄), N₁ ≈ conj σ(a,c̄), N₂ ≈ σ(a,c);
/// even n: D₁ ≈ σ(a,c), D₂ ≈ conj σ(a,c̄), N₁ ≈ conj τ(a,b,c̄), N₂ ≈ τ(a,b,c).
pub fn expansion_check(a: &[C64], b: &[C64], c: &[C64]) -> ExpansionReport {
    let n = b.len();
    let mut elems = vec![RingElement::new(a[0], a[0].conj(), C64::new(0.0, 0.0), C64::new(0.0, 0.0))];
    for k in 1..=n {
        elems.push(script_t(a[k], b[k - 1], c[k - 1]));
    }
    let dense = crate::matrix::product(elems.iter().map(|e| e.to_dense()).collect::<Vec<_>>().iter());
    let prod = RingElement::from_dense(&dense);
    let cbar: Vec<C64> = c.iter().map(|x| x.conj()).collect();
    let (sig, tau) = sigma_tau(a, b, c);
    let (sig_bar, tau_bar) = sigma_tau(a, b, &cbar);
    let (expected, quadratic) = if n % 2 == 1 {
        ([tau, tau_bar.conj(), sig_bar.conj(), sig], [false, false, true, true])
    } else {
        ([sig, sig_bar.conj(), tau_bar.conj(), tau], [true, true, false, false])
    };
    let got = [prod.d1, prod.d2, prod.n1, prod.n2];
    let mut residuals = [0.0; 4];
    for i in 0..4 {
        residuals[i] = (got[i] - expected[i]).norm();
    }
    ExpansionReport { n, residuals, quadratic }
}
