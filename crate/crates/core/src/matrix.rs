//! Dense 2×2 complex matrices.

use num_complex::Complex64 as C64;

pub type M2 = [[C64; 2]; 2];
pub type V2 = [C64; 2];

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

pub fn identity() -> M2 {
    [[ONE, ZERO], [ZERO, ONE]]
}

pub fn diag(a: C64, b: C64) -> M2 {
    [[a, ZERO], [ZERO, b]]
}

pub fn mul(a: &M2, b: &M2) -> M2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

pub fn apply(a: &M2, v: &V2) -> V2 {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

pub fn adjoint(a: &M2) -> M2 {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

pub fn det(a: &M2) -> C64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

pub fn inverse(a: &M2) -> M2 {
    let d = det(a);
    [[a[1][1] / d, -a[0][1] / d], [-a[1][0] / d, a[0][0] / d]]
}

/// Matrix with the given vectors as columns.
pub fn from_columns(c0: &V2, c1: &V2) -> M2 {
    [[c0[0], c1[0]], [c0[1], c1[1]]]
}

pub fn max_abs_diff(a: &M2, b: &M2) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            m = m.max((a[i][j] - b[i][j]).norm());
        }
    }
    m
}

pub fn product<'a, I: IntoIterator<Item = &'a M2>>(ms: I) -> M2 {
    ms.into_iter().fold(identity(), |acc, m| mul(&acc, m))
}
