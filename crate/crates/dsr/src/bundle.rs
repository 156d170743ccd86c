//! Result bundles (JSON) and the CSV plot-data files derived from them.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::{CliError, Result};
use crate::planning::PlanDocument;

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    /// Seconds since the Unix epoch; only written when asked for, so that
    /// repeated runs produce identical files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp_unix: Option<u64>,
}

impl RunMeta {
    pub fn new(command: &str, config_hash: &str, seed: u64, stamp: bool) -> Self {
        let timestamp_unix = stamp.then(|| {
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_secs())
        });
        RunMeta {
            tool: TOOL_NAME.into(),
            tool_version: TOOL_VERSION.into(),
            command: command.into(),
            config_hash: config_hash.into(),
            seed,
            timestamp_unix,
        }
    }
}

/// Rate of one UE. `mode` is `analysis`, `sim`, `gap` (sim − analysis, bit/s)
/// or `gap_over_sim` (dimensionless, stored in `rate_bps`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub config_hash: String,
    pub ue_x: f64,
    pub ue_y: f64,
    pub mode: String,
    pub rate_bps: f64,
    pub ci_halfwidth: f64,
}

/// One point of an outage curve. Per-probe curves are labelled
/// `analysis/<scenario>` or `sim/<scenario>`; disk averages `avg/<scenario>`
/// with no probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutageRow {
    pub config_hash: String,
    pub probe_r: Option<f64>,
    /// Degrees.
    pub probe_psi: Option<f64>,
    pub scenario: String,
    pub threshold_db: f64,
    pub p_out: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Mean small-cell throughput at one placement; `theta` in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub config_hash: String,
    pub d: f64,
    pub theta: f64,
    pub mean_rate_bps: f64,
    pub ci: f64,
}

/// Threshold at which an outage curve crosses 10%.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSummary {
    pub config_hash: String,
    pub scenario: String,
    pub probe_r: Option<f64>,
    pub probe_psi: Option<f64>,
    pub threshold_db_at_10pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Tables {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rate: Vec<RateRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outage: Vec<OutageRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultBundle {
    pub meta: RunMeta,
    /// The resolved config that produced the results.
    pub config: ScenarioConfig,
    pub tables: Tables,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub curves: Vec<CurveSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<PlanDocument>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl ResultBundle {
    pub fn new(meta: RunMeta, config: ScenarioConfig) -> Self {
        ResultBundle {
            meta,
            config,
            tables: Tables::default(),
            curves: Vec::new(),
            plan: None,
            warnings: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("bundle serializes to JSON");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::config("<bundle>", e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, self.to_json().as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn csv_bytes<R: Serialize>(header: &[&str], rows: impl Iterator<Item = R>) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub const RATE_HEADER: [&str; 5] = ["ue_x", "ue_y", "mode", "rate_bps", "ci_halfwidth"];
pub const OUTAGE_HEADER: [&str; 7] = [
    "probe_r",
    "probe_psi",
    "scenario",
    "threshold_db",
    "p_out",
    "ci_lo",
    "ci_hi",
];
pub const SWEEP_HEADER: [&str; 4] = ["d", "theta", "mean_rate_bps", "ci"];

pub fn rate_csv(rows: &[RateRow]) -> Vec<u8> {
    csv_bytes(
        &RATE_HEADER,
        rows.iter()
            .map(|r| (r.ue_x, r.ue_y, r.mode.as_str(), r.rate_bps, r.ci_halfwidth)),
    )
}

pub fn outage_csv(rows: &[OutageRow]) -> Vec<u8> {
    csv_bytes(
        &OUTAGE_HEADER,
        rows.iter().map(|r| {
            (
                r.probe_r,
                r.probe_psi,
                r.scenario.as_str(),
                r.threshold_db,
                r.p_out,
                r.ci_lo,
                r.ci_hi,
            )
        }),
    )
}

pub fn sweep_csv(rows: &[SweepRow]) -> Vec<u8> {
    csv_bytes(
        &SWEEP_HEADER,
        rows.iter().map(|r| (r.d, r.theta, r.mean_rate_bps, r.ci)),
    )
}

/// Writes `<stem>.json` and, when the bundle has rows of that kind,
/// `<stem>.csv` into `dir`. Returns the paths written.
pub fn write_outputs(bundle: &ResultBundle, dir: &Path, stem: &str) -> Result<Vec<std::path::PathBuf>> {
    let mut written = Vec::new();
    let json = dir.join(format!("{stem}.json"));
    bundle.write(&json)?;
    written.push(json);
    let csv = match stem {
        "rate" => Some(rate_csv(&bundle.tables.rate)),
        "outage" => Some(outage_csv(&bundle.tables.outage)),
        "sweep" => Some(sweep_csv(&bundle.tables.sweep)),
        _ => None,
    };
    if let Some(bytes) = csv {
        let path = dir.join(format!("{stem}.csv"));
        write_file(&path, &bytes)?;
        written.push(path);
    }
    Ok(written)
}

/// Prints a fixed-width table to `w`.
pub fn print_table(w: &mut dyn Write, header: &[&str], rows: &[Vec<String>]) -> std::io::Result<()> {
    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            rows.iter()
                .map(|r| r[c].len())
                .chain([header[c].len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let line = |cells: &[&str]| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ")
    };
    writeln!(w, "{}", line(header))?;
    for r in rows {
        let cells: Vec<&str> = r.iter().map(String::as_str).collect();
        writeln!(w, "{}", line(&cells))?;
    }
    Ok(())
}
