use std::f64::consts::PI;
use std::fs;

use lzscatter::runner::{self, CacheStatus, ExperimentConfig, Format, Provenance, SweepResult, CSV_HEADER};

fn config(dir: &std::path::Path, body: &str) -> ExperimentConfig {
    let text = format!("{body}\n[output]\ndirectory = {:?}\nformats = [\"csv\", \"json\", \"svg\"]\n", dir.to_str().unwrap());
    ExperimentConfig::from_toml(&text).unwrap()
}

const SMALL: &str = r#"
[potential]
family = "preset"
params = { name = "two-zero" }
[sweep]
epsilon = [0.01, 0.02]
h = { min = 0.02, max = 0.05, count = 3 }
"#;

fn check_svg(text: &str, series: usize) {
    let doc = roxmltree::Document::parse(text).expect("well-formed svg");
    let polylines = doc.descendants().filter(|n| n.has_tag_name("polyline")).count();
    assert_eq!(polylines, series);
}

#[test]
fn rerun_hits_cache_with_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), SMALL);
    let (r1, s1) = runner::run_sweep(&cfg, false).unwrap();
    assert_eq!(s1, CacheStatus::Miss);
    assert_eq!(r1.rows.len(), 6);
    let files = runner::emit_reports(&r1, &cfg.output.formats, dir.path()).unwrap();
    let first: Vec<Vec<u8>> = files.iter().map(|f| fs::read(f).unwrap()).collect();

    let (r2, s2) = runner::run_sweep(&cfg, false).unwrap();
    assert_eq!(s2, CacheStatus::Hit);
    runner::emit_reports(&r2, &cfg.output.formats, dir.path()).unwrap();
    let second: Vec<Vec<u8>> = files.iter().map(|f| fs::read(f).unwrap()).collect();
    assert_eq!(first, second);

    let (_, s3) = runner::run_sweep(&cfg, true).unwrap();
    assert_eq!(s3, CacheStatus::Miss);
}

#[test]
fn untimed_fresh_runs_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path(), SMALL);
    cfg.output.timing = false;
    let a = runner::compute_sweep(&cfg).unwrap();
    let b = runner::compute_sweep(&cfg).unwrap();
    assert_eq!(runner::to_csv(&a).unwrap(), runner::to_csv(&b).unwrap());
    assert_eq!(runner::to_json(&a).unwrap(), runner::to_json(&b).unwrap());
}

#[test]
fn reports_have_the_declared_shape() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), SMALL);
    let r = runner::compute_sweep(&cfg).unwrap();
    runner::emit_reports(&r, &[Format::Csv, Format::Json, Format::Svg], dir.path()).unwrap();

    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), CSV_HEADER);
    for line in lines {
        let first = line.split(',').next().unwrap();
        let mantissa = first.split('e').next().unwrap().replace(['.', '-'], "");
        assert_eq!(mantissa.len(), 17, "{first}");
    }
    let back: SweepResult = serde_json::from_str(&fs::read_to_string(dir.path().join("sweep.json")).unwrap()).unwrap();
    assert_eq!(back, r);

    check_svg(&fs::read_to_string(dir.path().join("p_vs_mu.svg")).unwrap(), 3);
    check_svg(&fs::read_to_string(dir.path().join("cn_vs_h.svg")).unwrap(), 1);
    check_svg(&fs::read_to_string(dir.path().join("adiabatic_logp.svg")).unwrap(), 2);
    let cn = fs::read_to_string(dir.path().join("cn_vs_h.svg")).unwrap();
    assert!(cn.contains("class=\"marker\""), "BS roots in [0.02, 0.05] are marked");
    for row in &r.rows {
        for p in [row.p_ode, row.p_nonadiabatic, row.p_adiabatic].into_iter().flatten() {
            assert!((0.0..=1.0).contains(&p));
        }
    }
}

#[test]
fn empty_result_gives_valid_files() {
    let dir = tempfile::tempdir().unwrap();
    let empty = SweepResult {
        provenance: Provenance { config_hash: "0".into(), version: runner::VERSION.into(), potential: "none".into(), n: 0, seed: 0 },
        rows: vec![],
        bs_roots: vec![],
    };
    runner::emit_reports(&empty, &[Format::Csv, Format::Json, Format::Svg], dir.path()).unwrap();
    assert_eq!(fs::read_to_string(dir.path().join("sweep.csv")).unwrap(), format!("{CSV_HEADER}\n"));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("sweep.json")).unwrap()).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 0);
    check_svg(&fs::read_to_string(dir.path().join("p_vs_mu.svg")).unwrap(), 3);
}

#[test]
fn failed_rows_do_not_abort_the_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let body = SMALL.replace("epsilon = [0.01, 0.02]", "epsilon = [0.01, 5.0]");
    let r = runner::compute_sweep(&config(dir.path(), &body)).unwrap();
    assert_eq!(r.rows.len(), 6);
    assert!(r.rows[..3].iter().all(|row| row.p_ode.is_some()));
    assert!(r.rows[3..].iter().all(|row| !row.errors.is_empty()));
}

#[test]
fn mu_ladder_residuals_shrink_superlinearly() {
    let dir = tempfile::tempdir().unwrap();
    let h = 0.01;
    let mus = [0.08, 0.04, 0.02, 0.01];
    let eps: Vec<String> = mus.iter().map(|m: &f64| format!("{:e}", (m * h).sqrt())).collect();
    let body = format!(
        "[potential]\nfamily = \"tanh_scaled\"\nparams = {{ a = 1.0 }}\n[sweep]\nepsilon = [{}]\nh = [{h}]\n",
        eps.join(", ")
    );
    let r = runner::compute_sweep(&config(dir.path(), &body)).unwrap();
    let pts: Vec<(f64, f64)> = r.rows.iter().map(|row| (row.mu.ln(), (row.p_ode.unwrap() - (1.0 - PI * row.mu)).abs().ln())).collect();
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!(slope >= 1.4, "fitted exponent {slope}");
    for w in pts.windows(2) {
        assert!(w[1].1 < w[0].1);
    }
}
