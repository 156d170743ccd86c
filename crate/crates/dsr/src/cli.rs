//! Command-line front end.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use dsr_core::analysis::Scenario;

use crate::bundle::{print_table, write_outputs, ResultBundle};
use crate::commands::{cmd_outage, cmd_plan, cmd_rate, cmd_sweep};
use crate::config::{Mode, ScenarioConfig};
use crate::engine::{Engine, DEBUG_LOG_HEADER};
use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "dsr",
    version,
    about = "LTE small cells over a GSM band with punctured PRBs: rates, GSM outage, placement sweeps and spectrum plans"
)]
pub struct Cli {
    /// Worker threads for Monte Carlo drops and quadrature batches [env: DSR_WORKERS].
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML scenario config; built-in defaults when omitted.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Override the top-level seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Record the wall-clock time in the result bundle.
    #[arg(long)]
    pub stamp: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// LTE UE rates, analysis vs simulation.
    Rate {
        #[command(flatten)]
        common: Common,
        /// UE offsets from the small cell, `x,y;x,y;…` (m).
        #[arg(long, allow_hyphen_values = true)]
        ue_positions: Option<String>,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        /// Per-drop log `drop_id,tti,ue_id,band,sinr_db,scheduled`.
        #[arg(long)]
        debug_log: Option<PathBuf>,
    },
    /// GSM outage curves per probe and disk-averaged per scenario.
    Outage {
        #[command(flatten)]
        common: Common,
        /// Probes w.r.t. the small cell, `r,psi_deg;…`.
        #[arg(long, allow_hyphen_values = true)]
        probes: Option<String>,
        /// Thresholds in dB, `start:end:step` or `a,b,c`.
        #[arg(long, allow_hyphen_values = true)]
        thresholds: Option<String>,
        /// Comma-separated subset of `no_lte,direct,dsr`, or `all`.
        #[arg(long)]
        scenarios: Option<String>,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
    },
    /// Small-cell throughput over a (D, θ) grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Distances D (m), `start:end:step` or `a,b,c`.
        #[arg(long, allow_hyphen_values = true)]
        d_grid: Option<String>,
        /// Azimuths θ (degrees), `start:end:step` or `a,b,c`.
        #[arg(long, allow_hyphen_values = true)]
        theta_grid: Option<String>,
    },
    /// Carrier grid, reserved PRBs, cell IDs, guard radius and small-cell power.
    Plan {
        #[command(flatten)]
        common: Common,
    },
    /// Print the default config as TOML.
    Defaults,
}

fn number(s: &str, what: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("{what}: `{s}` is not a number")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("{what}: `{s}` is not finite")))
    }
}

/// `x,y;x,y;…`. An empty string is an empty list.
pub fn parse_points(s: &str, what: &str) -> Result<Vec<[f64; 2]>> {
    s.split(';')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            let xy: Vec<&str> = p.split(',').collect();
            match xy.as_slice() {
                [x, y] => Ok([number(x, what)?, number(y, what)?]),
                _ => Err(CliError::Usage(format!("{what}: `{p}` is not a pair `a,b`"))),
            }
        })
        .collect()
}

/// `start:end:step` (inclusive) or a comma-separated list.
pub fn parse_grid(s: &str, what: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [a, b, step] => {
            let (a, b, step) = (number(a, what)?, number(b, what)?, number(step, what)?);
            if step <= 0.0 || b < a {
                return Err(CliError::Usage(format!(
                    "{what}: `{s}` needs start <= end and step > 0"
                )));
            }
            Ok(crate::config::linspace_step(a, b, step))
        }
        [_] => s
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(|p| number(p, what))
            .collect(),
        _ => Err(CliError::Usage(format!(
            "{what}: `{s}` is neither `start:end:step` nor a list"
        ))),
    }
}

pub fn parse_scenarios(s: &str) -> Result<Vec<Scenario>> {
    if s.trim() == "all" {
        return Ok(Scenario::ALL.to_vec());
    }
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse().map_err(|e: dsr_core::Error| CliError::Usage(e.to_string())))
        .collect()
}

fn load(common: &Common) -> Result<ScenarioConfig> {
    let mut cfg = match &common.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn out_dir(common: &Common, cfg: &ScenarioConfig) -> PathBuf {
    common.out.clone().unwrap_or_else(|| cfg.output.dir.clone())
}

fn finish(bundle: &ResultBundle, dir: &Path, stem: &str, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let paths = write_outputs(bundle, dir, stem)?;
    let io = |e| CliError::Io {
        context: "stdout".into(),
        source: e,
    };
    for w in &bundle.warnings {
        writeln!(stderr, "warning: {w}").map_err(io)?;
    }
    for p in paths {
        writeln!(stdout, "wrote {}", p.display()).map_err(io)?;
    }
    Ok(())
}

fn rate_table(bundle: &ResultBundle, out: &mut dyn Write) -> std::io::Result<()> {
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut keys: Vec<(f64, f64)> = Vec::new();
    for r in &bundle.tables.rate {
        if !keys.contains(&(r.ue_x, r.ue_y)) {
            keys.push((r.ue_x, r.ue_y));
        }
    }
    let cols = ["sim", "analysis", "gap", "gap_over_sim"];
    for (x, y) in keys {
        let mut row = vec![format!("({x}, {y})")];
        for c in cols {
            let v = bundle
                .tables
                .rate
                .iter()
                .find(|r| r.ue_x == x && r.ue_y == y && r.mode == c)
                .map_or_else(
                    || "-".to_string(),
                    |r| {
                        if c == "gap_over_sim" {
                            format!("{:.2}", r.rate_bps)
                        } else {
                            format!("{:.2}", r.rate_bps / 1e6)
                        }
                    },
                );
            row.push(v);
        }
        rows.push(row);
    }
    print_table(out, &["UE position", "Simulation", "Analysis", "Gap", "Gap/Sim"], &rows)?;
    writeln!(out, "(rates in Mbit/s)")
}

/// Runs the CLI on `args`; returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { CliError::EXIT_USAGE } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(stderr, "{text}")
            } else {
                write!(stdout, "{text}")
            };
            return code;
        }
    };
    match execute(cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let workers = Engine::worker_count(cli.workers)?;
    let engine = || Engine::new(workers);
    match cli.command {
        Command::Defaults => {
            write!(stdout, "{}", ScenarioConfig::default().to_toml_string()).map_err(|e| CliError::Io {
                context: "stdout".into(),
                source: e,
            })?;
            Ok(())
        }
        Command::Rate {
            common,
            ue_positions,
            mode,
            debug_log,
        } => {
            let mut cfg = load(&common)?;
            if let Some(p) = ue_positions {
                cfg.run.ue_positions = parse_points(&p, "--ue-positions")?;
                if cfg.run.ue_positions.is_empty() {
                    return Err(CliError::Usage("--ue-positions: empty position list".into()));
                }
            }
            if let Some(m) = mode {
                cfg.run.rate_mode = m;
            }
            let log_path = debug_log.or_else(|| cfg.output.debug_log.clone());
            let engine = engine()?;
            let bundle = match &log_path {
                Some(path) => {
                    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
                    }
                    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
                    let mut w = BufWriter::new(file);
                    writeln!(w, "{DEBUG_LOG_HEADER}").map_err(|e| CliError::io(path, e))?;
                    let bundle = cmd_rate(&cfg, &engine, common.stamp, Some(&mut w))?;
                    w.flush().map_err(|e| CliError::io(path, e))?;
                    bundle
                }
                None => cmd_rate(&cfg, &engine, common.stamp, None)?,
            };
            rate_table(&bundle, stdout).map_err(|e| CliError::Io {
                context: "stdout".into(),
                source: e,
            })?;
            finish(&bundle, &out_dir(&common, &cfg), "rate", stdout, stderr)
        }
        Command::Outage {
            common,
            probes,
            thresholds,
            scenarios,
            mode,
        } => {
            let mut cfg = load(&common)?;
            if let Some(p) = probes {
                cfg.run.probes = Some(parse_points(&p, "--probes")?);
            }
            if let Some(t) = thresholds {
                cfg.run.thresholds_db = parse_grid(&t, "--thresholds")?;
            }
            if let Some(s) = scenarios {
                cfg.run.scenarios = parse_scenarios(&s)?;
            }
            if let Some(m) = mode {
                cfg.run.outage_mode = m;
            }
            let bundle = cmd_outage(&cfg, &engine()?, common.stamp)?;
            for c in &bundle.curves {
                let probe = match (c.probe_r, c.probe_psi) {
                    (Some(r), Some(p)) => format!("r = {r:.1} m, ψ = {p:.1}°"),
                    _ => "disk average".into(),
                };
                let t = c.threshold_db_at_10pct.map_or("-".into(), |t| format!("{t:.2} dB"));
                writeln!(stdout, "{:<16} {:<28} T(10%) = {t}", c.scenario, probe).map_err(|e| CliError::Io {
                    context: "stdout".into(),
                    source: e,
                })?;
            }
            finish(&bundle, &out_dir(&common, &cfg), "outage", stdout, stderr)
        }
        Command::Sweep {
            common,
            d_grid,
            theta_grid,
        } => {
            let mut cfg = load(&common)?;
            if let Some(d) = d_grid {
                cfg.run.d_grid = parse_grid(&d, "--d-grid")?;
            }
            if let Some(t) = theta_grid {
                cfg.run.theta_grid_deg = parse_grid(&t, "--theta-grid")?;
            }
            let bundle = cmd_sweep(&cfg, &engine()?, common.stamp)?;
            finish(&bundle, &out_dir(&common, &cfg), "sweep", stdout, stderr)
        }
        Command::Plan { common } => {
            let cfg = load(&common)?;
            let bundle = cmd_plan(&cfg, common.stamp)?;
            if let Some(plan) = &bundle.plan {
                let io = |e| CliError::Io {
                    context: "stdout".into(),
                    source: e,
                };
                writeln!(
                    stdout,
                    "R_s = {:.2} m, P_l = {:.3} mW, guard-border loss = {:.3} dB",
                    plan.guard_radius_m,
                    plan.lte_power_w * 1e3,
                    plan.guard_border_degradation_db
                )
                .map_err(io)?;
                for s in &plan.sectors {
                    writeln!(
                        stdout,
                        "sector {}: carriers {:?}, PRBs {:?}, cell IDs {:?}",
                        s.sector, s.reserved_carriers, s.reserved_prbs, s.allowed_cell_ids
                    )
                    .map_err(io)?;
                }
            }
            finish(&bundle, &out_dir(&common, &cfg), "plan", stdout, stderr)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points() {
        assert_eq!(
            parse_points("-22.1,4.6; 17.8,25.7", "p").unwrap(),
            vec![[-22.1, 4.6], [17.8, 25.7]]
        );
        assert!(parse_points("", "p").unwrap().is_empty());
        assert!(parse_points("1,2,3", "p").is_err());
        assert!(parse_points("a,2", "p").is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("-10:20:10", "g").unwrap(), vec![-10.0, 0.0, 10.0, 20.0]);
        assert_eq!(parse_grid("1, 2.5", "g").unwrap(), vec![1.0, 2.5]);
        assert_eq!(parse_grid("350", "g").unwrap(), vec![350.0]);
        assert!(parse_grid("1:0:1", "g").is_err());
        assert!(parse_grid("0:1:0", "g").is_err());
    }

    #[test]
    fn scenarios() {
        assert_eq!(parse_scenarios("all").unwrap(), Scenario::ALL.to_vec());
        assert_eq!(
            parse_scenarios("dsr,no_lte").unwrap(),
            vec![Scenario::Dsr, Scenario::NoLte]
        );
        assert!(parse_scenarios("bogus").is_err());
    }
}
