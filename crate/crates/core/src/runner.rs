//! Experiment orchestration: TOML configs, (ε, h) sweeps, caching and reports.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::asymptotics::{self, Prefactor};
use crate::error::{Error, Result};
use crate::geometry;
use crate::potential::{Family, Potential, ZeroSearch};
use crate::propagator::{self, RegimeParams, Thresholds};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const DEFAULT_BUDGET: usize = 2000;
pub const CSV_HEADER: &str = "epsilon,h,mu,P_ode,P_nonadiabatic,P_adiabatic,C_n,alpha,unitarity_defect,runtime_s";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    #[serde(flatten)]
    pub family: Family,
    #[serde(default)]
    pub window: Option<[f64; 2]>,
}

impl PotentialSpec {
    pub fn build(&self) -> Result<Potential> {
        let search = ZeroSearch { window: self.window.map(|w| (w[0], w[1])), ..ZeroSearch::default() };
        Potential::with_search(self.family.clone(), search)
    }
}

/// Either an explicit list or `{ min, max, count, log }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    List(Vec<f64>),
    Range {
        min: f64,
        max: f64,
        count: usize,
        #[serde(default)]
        log: bool,
    },
}

impl Axis {
    pub fn len(&self) -> usize {
        match self {
            Axis::List(v) => v.len(),
            Axis::Range { count, .. } => *count,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn values(&self) -> Vec<f64> {
        match *self {
            Axis::List(ref v) => v.clone(),
            Axis::Range { min, max, count, log } => (0..count)
                .map(|i| {
                    let s = if count == 1 { 0.0 } else { i as f64 / (count - 1) as f64 };
                    if i == 0 {
                        min
                    } else if i + 1 == count {
                        max
                    } else if log {
                        (min.ln() + s * (max.ln() - min.ln())).exp()
                    } else {
                        min + s * (max - min)
                    }
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub epsilon: Axis,
    pub h: Axis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RegimeChoice {
    /// each prediction only where its regime threshold allows it
    #[default]
    Auto,
    Nonadiabatic,
    Adiabatic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepTolerances {
    pub ode: f64,
    pub mu0: f64,
    pub adiabatic0: f64,
    /// truncation time; the default is chosen per ε
    pub truncation: Option<f64>,
}

impl Default for SweepTolerances {
    fn default() -> Self {
        let th = Thresholds::default();
        SweepTolerances { ode: propagator::DEFAULT_TOL, mu0: th.mu0, adiabatic0: th.adiabatic0, truncation: None }
    }
}

impl SweepTolerances {
    pub fn thresholds(&self) -> Thresholds {
        Thresholds { mu0: self.mu0, adiabatic0: self.adiabatic0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Output {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
    /// Wall-clock runtimes in the tables. With `false` the column is zero
    /// and fresh runs are bit-identical.
    pub timing: bool,
}

impl Default for Output {
    fn default() -> Self {
        Output { directory: PathBuf::from("results"), formats: vec![Format::Csv, Format::Json], timing: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub potential: PotentialSpec,
    pub sweep: Sweep,
    #[serde(default)]
    pub regime: RegimeChoice,
    #[serde(default)]
    pub tolerances: SweepTolerances,
    #[serde(default)]
    pub output: Output,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_budget")]
    pub budget: usize,
}

fn default_budget() -> usize {
    DEFAULT_BUDGET
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        ExperimentConfig::from_toml(&text)
    }

    /// ε ≥ 0 (ε = 0 is the decoupled limit), h > 0, ranges well formed,
    /// grid within budget.
    pub fn validate(&self) -> Result<()> {
        for (name, axis, allow_zero) in [("epsilon", &self.sweep.epsilon, true), ("h", &self.sweep.h, false)] {
            if let Axis::Range { min, max, log, .. } = *axis {
                if !(min <= max) || (log && !(min > 0.0)) {
                    return Err(Error::Config(format!("{name} range [{min}, {max}] is not valid")));
                }
            }
            for x in axis.values() {
                let ok = x.is_finite() && (x > 0.0 || (allow_zero && x == 0.0));
                if !ok {
                    return Err(Error::Config(format!("{name} = {x} is not allowed")));
                }
            }
        }
        let t = &self.tolerances;
        if !(t.ode > 0.0) || !(t.mu0 > 0.0) || !(t.adiabatic0 > 0.0) || t.truncation.is_some_and(|x| !(x > 0.0)) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        let size = self.grid_size();
        if size > self.budget {
            return Err(Error::BudgetExceeded(format!("{size} grid points, budget {}", self.budget)));
        }
        Ok(())
    }

    pub fn grid_size(&self) -> usize {
        self.sweep.epsilon.len() * self.sweep.h.len()
    }

    /// Row-major (ε outer, h inner).
    pub fn grid(&self) -> Vec<(f64, f64)> {
        let hs = self.sweep.h.values();
        self.sweep.epsilon.values().into_iter().flat_map(|e| hs.iter().map(move |&h| (e, h))).collect()
    }

    /// SHA-256 over every field that affects the numbers, plus the crate version.
    pub fn hash(&self) -> String {
        #[derive(Serialize)]
        struct Keyed<'a> {
            version: &'a str,
            potential: &'a PotentialSpec,
            sweep: &'a Sweep,
            regime: RegimeChoice,
            tolerances: &'a SweepTolerances,
            seed: u64,
            timing: bool,
        }
        let k = Keyed {
            version: VERSION,
            potential: &self.potential,
            sweep: &self.sweep,
            regime: self.regime,
            tolerances: &self.tolerances,
            seed: self.seed,
            timing: self.output.timing,
        };
        let bytes = serde_json::to_vec(&k).expect("config serialises");
        hex::encode(Sha256::digest(&bytes))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub epsilon: f64,
    pub h: f64,
    pub mu: f64,
    pub p_ode: Option<f64>,
    pub p_nonadiabatic: Option<f64>,
    pub p_adiabatic: Option<f64>,
    pub c_n: Option<f64>,
    pub alpha: Option<f64>,
    pub unitarity_defect: Option<f64>,
    pub runtime_s: f64,
    pub regime: String,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub version: String,
    pub potential: String,
    pub n: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepResult {
    pub provenance: Provenance,
    pub rows: Vec<Row>,
    /// zeros of C_n over the swept h range
    pub bs_roots: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheStatus {
    Hit,
    Miss,
}

fn keep<T>(r: Result<T>, errors: &mut Vec<String>, label: &str) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            errors.push(format!("{label}: {e}"));
            None
        }
    }
}

fn evaluate(cfg: &ExperimentConfig, p: &Potential, pf: &Prefactor, eps: f64, h: f64) -> Row {
    let start = Instant::now();
    let tol = &cfg.tolerances;
    let th = tol.thresholds();
    let mut errors = Vec::new();
    let rp = RegimeParams::with_thresholds(eps, h, &th);
    let (mu, regime) = rp.as_ref().map(|r| (r.mu, r.regime.name().to_string())).unwrap_or((eps * eps / h, String::new()));

    let ode = rp.and_then(|rp| {
        let t = tol.truncation.unwrap_or_else(|| propagator::default_truncation(p, eps));
        propagator::scattering_matrix(p, &rp, t, tol.ode)
    });
    let ode = keep(ode, &mut errors, "ode");

    let forced = Thresholds { mu0: f64::INFINITY, adiabatic0: f64::INFINITY };
    let want_non = cfg.regime != RegimeChoice::Adiabatic;
    let want_adi = cfg.regime != RegimeChoice::Nonadiabatic;
    let th_pred = if cfg.regime == RegimeChoice::Auto { th } else { forced };

    let p_non = if want_non && (cfg.regime != RegimeChoice::Auto || mu <= th.mu0) {
        keep(asymptotics::predict_nonadiabatic_with(pf, eps, h, &th_pred), &mut errors, "nonadiabatic").map(|a| a.value)
    } else {
        None
    };

    let geom = if eps > 0.0 { keep(geometry::geometry(p, eps), &mut errors, "geometry") } else { None };
    let adiabatic_ok = cfg.regime != RegimeChoice::Auto || h <= th.adiabatic0 * eps * eps;
    let p_adi = match (&geom, want_adi && adiabatic_ok) {
        (Some(g), true) => keep(asymptotics::predict_adiabatic(g, h, &th_pred), &mut errors, "adiabatic").map(|a| a.value),
        _ => None,
    };

    let runtime = if cfg.output.timing { start.elapsed().as_secs_f64() } else { 0.0 };
    Row {
        epsilon: eps,
        h,
        mu,
        p_ode: ode.as_ref().map(|s| s.probability),
        p_nonadiabatic: p_non,
        p_adiabatic: p_adi,
        c_n: Some(pf.eval(h)),
        alpha: geom.map(|g| g.alpha),
        unitarity_defect: ode.map(|s| s.unitarity_defect),
        runtime_s: runtime,
        regime,
        errors,
    }
}

/// Evaluates the grid without touching the file system.
pub fn compute_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let p = cfg.potential.build()?;
    let pf = Prefactor::new(&p)?;
    let grid = cfg.grid();
    let rows: Vec<Row> = grid.par_iter().map(|&(e, h)| evaluate(cfg, &p, &pf, e, h)).collect();
    for r in rows.iter().filter(|r| !r.errors.is_empty()) {
        log::warn!("ε={} h={}: {}", r.epsilon, r.h, r.errors.join("; "));
    }
    let hs = cfg.sweep.h.values();
    let (lo, hi) = hs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &h| (a.min(h), b.max(h)));
    let bs_roots = if p.n() >= 2 && hi > lo {
        match asymptotics::bohr_sommerfeld_roots(&p, lo, hi) {
            Ok(r) => r.roots,
            Err(e) => {
                log::info!("no Bohr-Sommerfeld roots: {e}");
                vec![]
            }
        }
    } else {
        vec![]
    };
    Ok(SweepResult {
        provenance: Provenance { config_hash: cfg.hash(), version: VERSION.into(), potential: p.name.clone(), n: p.n(), seed: cfg.seed },
        rows,
        bs_roots,
    })
}

pub fn cache_path(dir: &Path, hash: &str) -> PathBuf {
    dir.join("cache").join(format!("{hash}.json"))
}

/// Loads `<dir>/cache/<hash>.json` unless `force`; otherwise computes and
/// stores it.
pub fn run_sweep(cfg: &ExperimentConfig, force: bool) -> Result<(SweepResult, CacheStatus)> {
    cfg.validate()?;
    let path = cache_path(&cfg.output.directory, &cfg.hash());
    if !force && path.exists() {
        let text = fs::read_to_string(&path)?;
        match serde_json::from_str::<SweepResult>(&text) {
            Ok(r) => {
                log::info!("cache hit {}", path.display());
                return Ok((r, CacheStatus::Hit));
            }
            Err(e) => log::warn!("ignoring unreadable cache {}: {e}", path.display()),
        }
    }
    let result = compute_sweep(cfg)?;
    fs::create_dir_all(path.parent().expect("cache dir"))?;
    fs::write(&path, serde_json::to_string(&result).map_err(|e| Error::Io(e.to_string()))?)?;
    Ok((result, CacheStatus::Miss))
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn to_csv(result: &SweepResult) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER.split(',')).map_err(|e| Error::Io(e.to_string()))?;
    for r in &result.rows {
        let rec = [
            num(r.epsilon),
            num(r.h),
            num(r.mu),
            opt(r.p_ode),
            opt(r.p_nonadiabatic),
            opt(r.p_adiabatic),
            opt(r.c_n),
            opt(r.alpha),
            opt(r.unitarity_defect),
            num(r.runtime_s),
        ];
        w.write_record(&rec).map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("ascii"))
}

pub fn to_json(result: &SweepResult) -> Result<String> {
    serde_json::to_string_pretty(result).map_err(|e| Error::Io(e.to_string()))
}

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub series: Vec<Series>,
    /// vertical markers
    pub markers: Vec<f64>,
}

const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

impl Plot {
    pub fn to_svg(&self) -> String {
        let (w, h, m) = (640.0, 420.0, 60.0);
        let tx = |x: f64| if self.log_x { x.log10() } else { x };
        let pts: Vec<(f64, f64)> = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|&(x, y)| (tx(x), y)))
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .collect();
        let bound = |it: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi > lo {
                (lo, hi)
            } else {
                (lo - 0.5, hi + 0.5)
            }
        };
        let (x0, x1) = bound(&mut pts.iter().map(|p| p.0));
        let (y0, y1) = bound(&mut pts.iter().map(|p| p.1));
        let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
        let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);

        let mut s = String::new();
        let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
        let _ = writeln!(s, r#"<title>{}</title>"#, escape(&self.title));
        let _ = writeln!(s, r#"<rect x="{m}" y="{m}" width="{}" height="{}" fill="none" stroke="black"/>"#, w - 2.0 * m, h - 2.0 * m);
        let xl = if self.log_x { format!("log10 {}", self.x_label) } else { self.x_label.clone() };
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, w / 2.0, h - 15.0, escape(&xl));
        let _ = writeln!(s, r#"<text x="15" y="{}" transform="rotate(-90 15 {})" text-anchor="middle">{}</text>"#, h / 2.0, h / 2.0, escape(&self.y_label));
        for (v, anchor, x, y) in [(x0, "start", m, h - m + 15.0), (x1, "end", w - m, h - m + 15.0)] {
            let _ = writeln!(s, r#"<text x="{x}" y="{y}" text-anchor="{anchor}" font-size="10">{v:.4}</text>"#);
        }
        for (v, y) in [(y0, h - m), (y1, m + 10.0)] {
            let _ = writeln!(s, r#"<text x="{}" y="{y}" text-anchor="end" font-size="10">{v:.4}</text>"#, m - 4.0);
        }
        for &mk in &self.markers {
            let x = tx(mk);
            if x.is_finite() && x >= x0 && x <= x1 {
                let _ = writeln!(s, r#"<line class="marker" x1="{0:.3}" y1="{m}" x2="{0:.3}" y2="{1}" stroke="gray" stroke-dasharray="4 3"/>"#, sx(x), h - m);
            }
        }
        for (i, ser) in self.series.iter().enumerate() {
            let mut p: Vec<(f64, f64)> = ser.points.iter().map(|&(x, y)| (tx(x), y)).filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
            p.sort_by(|a, b| a.0.total_cmp(&b.0));
            let coords: Vec<String> = p.iter().map(|&(x, y)| format!("{:.3},{:.3}", sx(x), sy(y))).collect();
            let color = COLORS[i % COLORS.len()];
            let _ = writeln!(s, r#"<polyline data-series="{}" fill="none" stroke="{color}" points="{}"/>"#, escape(&ser.name), coords.join(" "));
            let _ = writeln!(s, r#"<text x="{}" y="{}" fill="{color}" font-size="11">{}</text>"#, w - m - 120.0, m + 15.0 + 14.0 * i as f64, escape(&ser.name));
        }
        s.push_str("</svg>\n");
        s
    }
}

fn series(result: &SweepResult, name: &str, f: impl Fn(&Row) -> Option<(f64, f64)>) -> Series {
    Series { name: name.into(), points: result.rows.iter().filter_map(f).collect() }
}

pub fn plots(result: &SweepResult) -> Vec<(&'static str, Plot)> {
    let p_vs_mu = Plot {
        title: "P vs mu".into(),
        x_label: "mu".into(),
        y_label: "P".into(),
        log_x: true,
        series: vec![
            series(result, "P_ode", |r| r.p_ode.map(|p| (r.mu, p))),
            series(result, "P_nonadiabatic", |r| r.p_nonadiabatic.map(|p| (r.mu, p))),
            series(result, "P_adiabatic", |r| r.p_adiabatic.map(|p| (r.mu, p))),
        ],
        markers: vec![],
    };
    let mut cn = series(result, "C_n", |r| r.c_n.map(|c| (r.h, c)));
    cn.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    cn.points.dedup_by(|a, b| a.0 == b.0);
    let cn_vs_h = Plot {
        title: "C_n vs h".into(),
        x_label: "h".into(),
        y_label: "C_n".into(),
        log_x: false,
        series: vec![cn],
        markers: result.bs_roots.clone(),
    };
    let log_p = |p: Option<f64>| p.filter(|&p| p > 0.0).map(f64::ln);
    let adiabatic = Plot {
        title: "adiabatic log P vs 1/h".into(),
        x_label: "1/h".into(),
        y_label: "log P".into(),
        log_x: false,
        series: vec![
            series(result, "P_ode", |r| r.p_adiabatic.and(log_p(r.p_ode)).map(|y| (1.0 / r.h, y))),
            series(result, "P_adiabatic", |r| log_p(r.p_adiabatic).map(|y| (1.0 / r.h, y))),
        ],
        markers: vec![],
    };
    vec![("p_vs_mu.svg", p_vs_mu), ("cn_vs_h.svg", cn_vs_h), ("adiabatic_logp.svg", adiabatic)]
}

/// Writes `sweep.csv`, `sweep.json` and the SVG plots into `dir`.
pub fn emit_reports(result: &SweepResult, formats: &[Format], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str, body: String| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, body)?;
        written.push(path);
        Ok(())
    };
    if formats.contains(&Format::Csv) {
        put("sweep.csv", to_csv(result)?)?;
    }
    if formats.contains(&Format::Json) {
        put("sweep.json", to_json(result)?)?;
    }
    if formats.contains(&Format::Svg) {
        for (name, plot) in plots(result) {
            put(name, plot.to_svg())?;
        }
    }
    Ok(written)
}
