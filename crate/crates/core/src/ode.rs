//! Dormand–Prince 8(5,3) with the standard step-size controller.
//!
//! Coefficients follow Hairer & Wanner's DOP853; stage 12 sits at t + h.

#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};

const C: [f64; 12] = [
    0.0,
    0.052_600_151_958_767_731_878_558_754_448_8,
    0.078_900_227_938_151_597_817_838_131_673_2,
    0.118_350_341_907_227_396_726_757_197_510,
    0.281_649_658_092_772_603_273_242_802_490,
    1.0 / 3.0,
    0.25,
    0.307_692_307_692_307_692_307_692_307_692,
    0.651_282_051_282_051_282_051_282_051_282,
    0.6,
    0.857_142_857_142_857_142_857_142_857_142,
    1.0,
];

#[rustfmt::skip]
const A: [[f64; 11]; 12] = [
    [0.0; 11],
    [5.26001519587677318785587544488E-2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.97250569845378994544595329183E-2, 5.91751709536136983633785987549E-2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [2.95875854768068491816892993775E-2, 0.0, 8.87627564304205475450678981324E-2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [2.41365134159266685502369798665E-1, 0.0, -8.84549479328286085344864962717E-1, 9.24834003261792003115737966543E-1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.7037037037037037037037037037E-2, 0.0, 0.0, 1.70828608729473871279604482173E-1, 1.25467687566822425016691814123E-1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.7109375E-2, 0.0, 0.0, 1.70252211019544039314978060272E-1, 6.02165389804559606850219397283E-2, -1.7578125E-2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.70920001185047927108779319836E-2, 0.0, 0.0, 1.70383925712239993810214054705E-1, 1.07262030446373284651809199168E-1, -1.53194377486244017527936158236E-2, 8.27378916381402288758473766002E-3, 0.0, 0.0, 0.0, 0.0],
    [6.24110958716075717114429577812E-1, 0.0, 0.0, -3.36089262944694129406857109825E0, -8.68219346841726006818189891453E-1, 2.75920996994467083049415600797E1, 2.01540675504778934086186788979E1, -4.34898841810699588477366255144E1, 0.0, 0.0, 0.0],
    [4.77662536438264365890433908527E-1, 0.0, 0.0, -2.48811461997166764192642586468E0, -5.90290826836842996371446475743E-1, 2.12300514481811942347288949897E1, 1.52792336328824235832596922938E1, -3.32882109689848629194453265587E1, -2.03312017085086261358222928593E-2, 0.0, 0.0],
    [-9.3714243008598732571704021658E-1, 0.0, 0.0, 5.18637242884406370830023853209E0, 1.09143734899672957818500254654E0, -8.14978701074692612513997267357E0, -1.85200656599969598641566180701E1, 2.27394870993505042818970056734E1, 2.49360555267965238987089396762E0, -3.0467644718982195003823669022E0, 0.0],
    [2.27331014751653820792359768449E0, 0.0, 0.0, -1.05344954667372501984066689879E1, -2.00087205822486249909675718444E0, -1.79589318631187989172765950534E1, 2.79488845294199600508499808837E1, -2.85899827713502369474065508674E0, -8.87285693353062954433549289258E0, 1.23605671757943030647266201528E1, 6.43392746015763530355970484046E-1],
];

#[rustfmt::skip]
const B: [f64; 12] = [
    5.42937341165687622380535766363E-2, 0.0, 0.0, 0.0, 0.0,
    4.45031289275240888144113950566E0, 1.89151789931450038304281599044E0,
    -5.8012039600105847814672114227E0, 3.1116436695781989440891606237E-1,
    -1.52160949662516078556178806805E-1, 2.01365400804030348374776537501E-1,
    4.47106157277725905176885569043E-2,
];

const BHH: [f64; 3] = [
    0.244_094_488_188_976_377_952_755_905_512,
    0.733_846_688_281_611_857_341_361_741_547,
    0.022_058_823_529_411_764_705_882_352_941_2,
];

#[rustfmt::skip]
const E: [f64; 12] = [
    0.1312004499419488073250102996E-01, 0.0, 0.0, 0.0, 0.0,
    -0.1225156446376204440720569753E+01, -0.4957589496572501915214079952E+00,
    0.1664377182454986536961530415E+01, -0.3503288487499736816886487290E+00,
    0.3341791187130174790297318841E+00, 0.8192320648511571246570742613E-01,
    -0.2235530786388629525884427845E-01,
];

#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub rtol: f64,
    pub atol: f64,
    /// Largest allowed |step|; 0 means the whole interval.
    pub h_max: f64,
    pub max_steps: u64,
}

impl Default for Options {
    fn default() -> Self {
        Options { rtol: 1e-12, atol: 1e-12, h_max: 0.0, max_steps: 50_000_000 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Stats {
    pub accepted: u64,
    pub rejected: u64,
    pub evaluations: u64,
}

impl Stats {
    pub fn merge(&mut self, o: &Stats) {
        self.accepted += o.accepted;
        self.rejected += o.rejected;
        self.evaluations += o.evaluations;
    }
}

fn scaled_norm2<const N: usize>(v: &[f64; N], y: &[f64; N], y1: &[f64; N], o: &Options) -> f64 {
    let mut s = 0.0;
    for i in 0..N {
        let sk = o.atol + o.rtol * y[i].abs().max(y1[i].abs());
        s += (v[i] / sk) * (v[i] / sk);
    }
    s
}

fn initial_step<const N: usize, F>(f: &mut F, t: f64, y: &[f64; N], f0: &[f64; N], dir: f64, hmax: f64, o: &Options) -> f64
where
    F: FnMut(f64, &[f64; N], &mut [f64; N]),
{
    let mut dnf = 0.0;
    let mut dny = 0.0;
    for i in 0..N {
        let sk = o.atol + o.rtol * y[i].abs();
        dnf += (f0[i] / sk).powi(2);
        dny += (y[i] / sk).powi(2);
    }
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { (dny / dnf).sqrt() * 0.01 };
    h = h.min(hmax);
    let mut y1 = [0.0; N];
    for i in 0..N {
        y1[i] = y[i] + dir * h * f0[i];
    }
    let mut f1 = [0.0; N];
    f(t + dir * h, &y1, &mut f1);
    let mut der2 = 0.0;
    for i in 0..N {
        let sk = o.atol + o.rtol * y[i].abs();
        der2 += ((f1[i] - f0[i]) / sk).powi(2);
    }
    let der12 = (der2.sqrt() / h).max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 { (h * 1e-3).max(1e-6) } else { (0.01 / der12).powf(1.0 / 8.0) };
    (100.0 * h).min(h1).min(hmax)
}

/// Integrates y' = f(t, y) from `t0` to `t1` in place. `observe` sees every
/// accepted step.
pub fn integrate<const N: usize, F, O>(mut f: F, t0: f64, t1: f64, y: &mut [f64; N], o: &Options, mut observe: O) -> Result<Stats>
where
    F: FnMut(f64, &[f64; N], &mut [f64; N]),
    O: FnMut(f64, &[f64; N]),
{
    let mut stats = Stats::default();
    let span = (t1 - t0).abs();
    if span == 0.0 {
        return Ok(stats);
    }
    let dir = (t1 - t0).signum();
    let hmax = if o.h_max > 0.0 { o.h_max.min(span) } else { span };
    let mut k = [[0.0; N]; 12];
    let mut t = t0;
    f(t, y, &mut k[0]);
    stats.evaluations += 1;
    let mut h = initial_step(&mut f, t, y, &k[0].clone(), dir, hmax, o);
    stats.evaluations += 1;
    let mut last_rejected = false;
    let mut ytmp = [0.0; N];
    let mut ynew = [0.0; N];
    let mut incr = [0.0; N];
    loop {
        if stats.accepted + stats.rejected >= o.max_steps {
            return Err(Error::BudgetExceeded(format!("more than {} integrator steps", o.max_steps)));
        }
        let remaining = (t1 - t) * dir;
        let mut last = false;
        if h >= remaining {
            h = remaining;
            last = true;
        }
        if h < 1e-15 * span && !last {
            return Err(Error::StepUnderflow { t });
        }
        let hs = dir * h;
        for s in 1..12 {
            for i in 0..N {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s][j] * kj[i];
                }
                ytmp[i] = y[i] + hs * acc;
            }
            let (_, rest) = k.split_at_mut(s);
            f(t + C[s] * hs, &ytmp, &mut rest[0]);
        }
        stats.evaluations += 11;
        for i in 0..N {
            let mut acc = 0.0;
            for (s, ks) in k.iter().enumerate() {
                acc += B[s] * ks[i];
            }
            incr[i] = acc;
            ynew[i] = y[i] + hs * acc;
        }
        let mut e5 = [0.0; N];
        let mut e3 = [0.0; N];
        for i in 0..N {
            let mut acc = 0.0;
            for (s, ks) in k.iter().enumerate() {
                acc += E[s] * ks[i];
            }
            e5[i] = acc;
            e3[i] = incr[i] - BHH[0] * k[0][i] - BHH[1] * k[8][i] - BHH[2] * k[11][i];
        }
        let err5 = scaled_norm2(&e5, y, &ynew, o);
        let err3 = scaled_norm2(&e3, y, &ynew, o);
        let mut deno = err5 + 0.01 * err3;
        if deno <= 0.0 {
            deno = 1.0;
        }
        let err = h * err5 * (1.0 / (N as f64 * deno)).sqrt();
        let fac11 = err.powf(1.0 / 8.0);
        let fac = (fac11 / 0.9).clamp(1.0 / 6.0, 3.0);
        let mut hnew = h / fac;
        if err <= 1.0 {
            stats.accepted += 1;
            t = if last { t1 } else { t + hs };
            *y = ynew;
            observe(t, y);
            if last {
                return Ok(stats);
            }
            f(t, y, &mut k[0]);
            stats.evaluations += 1;
            if hnew > hmax {
                hnew = hmax;
            }
            if last_rejected {
                hnew = hnew.min(h);
            }
            last_rejected = false;
        } else {
            hnew = h / (fac11 / 0.9).min(3.0);
            stats.rejected += 1;
            last_rejected = true;
        }
        h = hnew;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tableau_is_consistent() {
        for s in 0..12 {
            let row: f64 = A[s].iter().sum();
            assert!((row - C[s]).abs() < 1e-13, "row {s}: {row} vs {}", C[s]);
        }
        assert!((B.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(E.iter().sum::<f64>().abs() < 1e-13);
        assert!((BHH.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eighth_order_on_a_nonautonomous_problem() {
        // y' = cos(t) y, y(0)=1  =>  y = exp(sin t)
        let run = |h: f64| {
            let mut y = [1.0];
            let o = Options { rtol: 1.0, atol: 1.0, h_max: h, max_steps: 1_000_000 };
            // huge tolerances: every step is accepted at h_max
            integrate(|t, y: &[f64; 1], d: &mut [f64; 1]| d[0] = t.cos() * y[0], 0.0, 2.0, &mut y, &o, |_, _| {}).unwrap();
            (y[0] - 2f64.sin().exp()).abs()
        };
        let (e1, e2) = (run(0.2), run(0.1));
        let order = (e1 / e2).log2();
        assert!(order > 7.5, "observed order {order} ({e1:e}, {e2:e})");
    }

    #[test]
    fn backward_integration_returns_to_start() {
        let f = |_t: f64, y: &[f64; 2], d: &mut [f64; 2]| {
            d[0] = y[1];
            d[1] = -y[0];
        };
        let o = Options { rtol: 1e-13, atol: 1e-13, ..Default::default() };
        let mut y = [1.0, 0.0];
        integrate(f, 0.0, 10.0, &mut y, &o, |_, _| {}).unwrap();
        assert!((y[0] - 10f64.cos()).abs() < 1e-11);
        integrate(f, 10.0, 0.0, &mut y, &o, |_, _| {}).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-11 && y[1].abs() < 1e-11);
    }

    #[test]
    fn step_budget_is_enforced() {
        let o = Options { rtol: 1e-13, atol: 1e-13, h_max: 0.0, max_steps: 10 };
        let mut y = [1.0, 0.0];
        let r = integrate(
            |_t, y: &[f64; 2], d: &mut [f64; 2]| {
                d[0] = 100.0 * y[1];
                d[1] = -100.0 * y[0];
            },
            0.0,
            100.0,
            &mut y,
            &o,
            |_, _| {},
        );
        assert!(matches!(r, Err(Error::BudgetExceeded(_))));
    }
}
