use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lzscatter::asymptotics;
use lzscatter::geometry;
use lzscatter::potential::{self, Potential};
use lzscatter::propagator::{self, Regime, RegimeParams, Thresholds};
use lzscatter::runner::{self, CacheStatus, ExperimentConfig};
use lzscatter::transfer::{self, TransferChain};
use lzscatter::wkb::{self, PolylinePath};
use lzscatter::{Error, C64};
use serde_json::json;

#[derive(Parser)]
#[command(name = "lzscatter", version, about = "Two-level avoided-crossing scattering lab")]
struct Cli {
    /// experiment config (TOML)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// output directory; overrides the config
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// ignore cached sweep results
    #[arg(long, global = true)]
    force: bool,
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, default_value = "warn")]
    log_level: log::LevelFilter,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct PotentialArg {
    /// preset name; defaults to the config's potential, else one-zero
    #[arg(long)]
    potential: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeArg {
    Auto,
    Nonadiabatic,
    Adiabatic,
}

#[derive(Subcommand)]
enum Command {
    /// P(ε, h) by direct propagation
    #[command(allow_negative_numbers = true)]
    Probability {
        #[command(flatten)]
        pot: PotentialArg,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        h: f64,
        #[arg(long, default_value_t = propagator::DEFAULT_TOL)]
        tol: f64,
        /// truncation time
        #[arg(long = "T")]
        t: Option<f64>,
    },
    /// Run the sweep described by --config
    Sweep,
    /// Actions, turning points and α at ε
    #[command(allow_negative_numbers = true)]
    Actions {
        #[command(flatten)]
        pot: PotentialArg,
        #[arg(long)]
        epsilon: f64,
    },
    /// Leading-order predictions
    #[command(allow_negative_numbers = true)]
    Asymptote {
        #[command(flatten)]
        pot: PotentialArg,
        #[arg(long, value_enum, default_value = "auto")]
        regime: RegimeArg,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, conflicts_with = "h_list")]
        h: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        h_list: Vec<f64>,
    },
    /// Zeros of C_n(h) in [h_min, h_max]
    #[command(allow_negative_numbers = true)]
    BsRoots {
        #[command(flatten)]
        pot: PotentialArg,
        #[arg(long)]
        h_min: f64,
        #[arg(long)]
        h_max: f64,
    },
    /// Transfer-matrix chain and its product
    #[command(allow_negative_numbers = true)]
    Chain {
        #[command(flatten)]
        pot: PotentialArg,
        #[arg(long, value_enum, default_value = "auto")]
        regime: RegimeArg,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        h: f64,
    },
    /// Wronskian of the resummed WKB solutions along a path
    #[command(allow_negative_numbers = true)]
    WkbWronskian {
        #[command(flatten)]
        pot: PotentialArg,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        h_list: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        crossing: usize,
        /// "x1,y1;x2,y2;…" or "auto-offset [c]"
        #[arg(long, default_value = "auto-offset", allow_hyphen_values = true)]
        path: String,
        /// turning-point exclusion radius; default 1.5·max(2ε/v, 4√h)
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long, default_value_t = wkb::DEFAULT_K_MAX)]
        k_max: usize,
    },
    /// Check the potential against the standing assumptions
    Validate {
        #[command(flatten)]
        pot: PotentialArg,
    },
}

enum Failure {
    Config(String),
    Numerical(String),
    Budget(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidPotential(_) | Error::NoZeros { .. } | Error::DegenerateZero { .. } | Error::Regime { .. } => {
                Failure::Config(e.to_string())
            }
            Error::BudgetExceeded(_) => Failure::Budget(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

type Out = Result<(), Failure>;

struct Ctx {
    config: Option<ExperimentConfig>,
    out: Option<PathBuf>,
    force: bool,
}

impl Ctx {
    fn potential(&self, arg: &PotentialArg) -> Result<Potential, Failure> {
        Ok(match (&arg.potential, &self.config) {
            (Some(name), _) => Potential::preset(name)?,
            (None, Some(cfg)) => cfg.potential.build()?,
            (None, None) => Potential::preset("one-zero")?,
        })
    }

    fn thresholds(&self) -> Thresholds {
        self.config.as_ref().map(|c| c.tolerances.thresholds()).unwrap_or_default()
    }

    fn emit(&self, name: &str, body: &str) -> Out {
        let _ = writeln!(std::io::stdout().lock(), "{body}");
        if let Some(dir) = &self.out {
            fs::create_dir_all(dir).map_err(|e| Failure::Numerical(e.to_string()))?;
            fs::write(dir.join(name), format!("{body}\n")).map_err(|e| Failure::Numerical(e.to_string()))?;
        }
        Ok(())
    }

    fn emit_json(&self, name: &str, v: &serde_json::Value) -> Out {
        self.emit(&format!("{name}.json"), &serde_json::to_string_pretty(v).expect("json"))
    }
}

fn regime_for(arg: RegimeArg, eps: f64, h: f64, th: &Thresholds) -> Result<Regime, Failure> {
    Ok(match arg {
        RegimeArg::Nonadiabatic => Regime::Nonadiabatic,
        RegimeArg::Adiabatic => Regime::Adiabatic,
        RegimeArg::Auto => RegimeParams::with_thresholds(eps, h, th)?.regime,
    })
}

fn parse_path(p: &Potential, spec: &str, k: usize) -> Result<PolylinePath, Failure> {
    let spec = spec.trim();
    if let Some(rest) = spec.strip_prefix("auto-offset") {
        let rest = rest.trim();
        let c = if rest.is_empty() {
            wkb::default_base_offset(p)
        } else {
            rest.parse().map_err(|_| Failure::Config(format!("bad offset '{rest}'")))?
        };
        return Ok(PolylinePath::vertical(wkb::default_base_abscissa(p, k), c));
    }
    let pts = spec
        .split(';')
        .map(|pair| {
            let v: Vec<f64> = pair.split(',').map(|x| x.trim().parse()).collect::<Result<_, _>>().map_err(|_| Failure::Config(format!("bad waypoint '{pair}'")))?;
            match v[..] {
                [re, im] => Ok(C64::new(re, im)),
                _ => Err(Failure::Config(format!("waypoint '{pair}' needs two numbers"))),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    if pts.len() < 2 {
        return Err(Failure::Config("a path needs at least two waypoints".into()));
    }
    Ok(PolylinePath::new(pts))
}

fn run(cli: Cli) -> Out {
    let config = cli.config.as_deref().map(ExperimentConfig::load).transpose()?;
    let ctx = Ctx { config, out: cli.out.clone(), force: cli.force };
    match cli.command {
        Command::Probability { pot, epsilon, h, tol, t } => {
            let p = ctx.potential(&pot)?;
            let rp = RegimeParams::with_thresholds(epsilon, h, &ctx.thresholds())?;
            let t = t.unwrap_or_else(|| propagator::default_truncation(&p, epsilon));
            let r = propagator::scattering_matrix(&p, &rp, t, tol)?;
            ctx.emit_json(
                "probability",
                &json!({
                    "epsilon": epsilon, "h": h, "mu": rp.mu, "regime": rp.regime.name(),
                    "P": r.probability, "unitarity_defect": r.unitarity_defect,
                    "T": r.truncation_t, "steps": r.integrator_stats.steps,
                }),
            )
        }
        Command::Sweep => {
            let mut cfg = ctx.config.clone().ok_or_else(|| Failure::Config("sweep needs --config".into()))?;
            if let Some(dir) = &ctx.out {
                cfg.output.directory = dir.clone();
            }
            let (result, status) = runner::run_sweep(&cfg, ctx.force)?;
            let files = runner::emit_reports(&result, &cfg.output.formats, &cfg.output.directory)?;
            let failed = result.rows.iter().filter(|r| !r.errors.is_empty()).count();
            let summary = json!({
                "config_hash": result.provenance.config_hash,
                "cache": if status == CacheStatus::Hit { "hit" } else { "miss" },
                "rows": result.rows.len(),
                "failed_rows": failed,
                "files": files,
            });
            let _ = writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(&summary).expect("json"));
            Ok(())
        }
        Command::Actions { pot, epsilon } => {
            let p = ctx.potential(&pot)?;
            let g = geometry::geometry(&p, epsilon)?;
            ctx.emit_json(
                "actions",
                &json!({
                    "epsilon": epsilon,
                    "turning_points": g.turning_points,
                    "A": g.actions_a,
                    "R": g.actions_r,
                    "R0": g.actions_r0,
                    "A_r": g.action_right,
                    "A_l": g.action_left,
                    "alpha": g.alpha,
                    "K": g.k_set,
                }),
            )
        }
        Command::Asymptote { pot, regime, epsilon, h, h_list } => {
            let p = ctx.potential(&pot)?;
            let th = ctx.thresholds();
            let hs: Vec<f64> = h.into_iter().chain(h_list).collect();
            if hs.is_empty() {
                return Err(Failure::Config("give --h or --h-list".into()));
            }
            let geom = std::cell::OnceCell::new();
            let mut out = Vec::new();
            for h in hs {
                let pred = match regime_for(regime, epsilon, h, &th)? {
                    Regime::Nonadiabatic => asymptotics::predict_nonadiabatic(&p, epsilon, h, &th)?,
                    Regime::Adiabatic => {
                        if geom.get().is_none() {
                            let _ = geom.set(geometry::geometry(&p, epsilon)?);
                        }
                        asymptotics::predict_adiabatic(geom.get().expect("set"), h, &th)?
                    }
                    Regime::Critical => {
                        return Err(Error::Regime { regime: "critical", detail: format!("no asymptotic prediction at ε={epsilon}, h={h}") }.into())
                    }
                };
                out.push(serde_json::to_value(pred).expect("json"));
            }
            ctx.emit_json("asymptote", &serde_json::Value::Array(out))
        }
        Command::BsRoots { pot, h_min, h_max } => {
            let p = ctx.potential(&pot)?;
            let r = asymptotics::bohr_sommerfeld_roots(&p, h_min, h_max)?;
            ctx.emit_json("bs_roots", &json!(r.roots))
        }
        Command::Chain { pot, regime, epsilon, h } => {
            let p = ctx.potential(&pot)?;
            let th = ctx.thresholds();
            let regime = regime_for(regime, epsilon, h, &th)?;
            let g = geometry::geometry(&p, epsilon)?;
            let chain = TransferChain::build(&g, h, regime, &th)?;
            let prod = transfer::chain_product(&chain);
            ctx.emit_json(
                "chain",
                &json!({
                    "epsilon": epsilon, "h": h, "mu": chain.mu, "regime": regime.name(),
                    "matrices": chain.entries,
                    "product": prod.s_matrix,
                    "P_pred": prod.probability,
                    "error_orders": chain.error_orders,
                }),
            )
        }
        Command::WkbWronskian { pot, epsilon, h_list, crossing, path, radius, k_max } => {
            let p = ctx.potential(&pot)?;
            if crossing == 0 || crossing > p.n() {
                return Err(Failure::Config(format!("crossing must be in 1..={}", p.n())));
            }
            let path = parse_path(&p, &path, crossing)?;
            let mut lines = vec!["h,re_W,im_W,abs_W_minus_2i,dist".to_string()];
            for h in h_list {
                let r = radius.unwrap_or_else(|| wkb::exclusion_radius(&p, epsilon, h));
                let w = wkb::wronskian(&p, epsilon, h, &path, k_max, r)?;
                lines.push(format!("{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}", h, w.value.re, w.value.im, w.defect_from_2i, w.dist));
            }
            ctx.emit("wkb_wronskian.csv", &lines.join("\n"))
        }
        Command::Validate { pot } => {
            let p = ctx.potential(&pot)?;
            let report = potential::validate_assumptions(&p, &potential::Tolerances::default());
            ctx.emit_json("validate", &serde_json::to_value(&report).expect("json"))?;
            if report.all_passed() {
                Ok(())
            } else {
                Err(Failure::Config(format!("{} violates the standing assumptions", p.name)))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().filter_level(cli.log_level).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (code, msg) = match f {
                Failure::Config(m) => (2, m),
                Failure::Numerical(m) => (3, m),
                Failure::Budget(m) => (4, m),
            };
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
