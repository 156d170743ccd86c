//! Scenario configuration.
//!
//! One TOML document with nested sections. Every field has a default and the
//! defaults are the reference deployment (`R_m = 1000 m`, small cell at
//! `D = 350 m`, `θ = 0`, 40 W GSM sites, `(2, 3, 3)` MHz LTE bands), so an
//! empty file is a valid config.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use dsr_core::analysis::{AnalysisContext, Scenario};
use dsr_core::geometry::{macro_density, sector_area, CochannelRadius, NetworkGeometry, Point2};
use dsr_core::plan::{calibrate_power, size_guard_region, PrbGrid, WindowPosition, CARRIER_BANDWIDTH};
use dsr_core::radio::{AntennaPattern, FadingModel, RadioParams};
use dsr_core::simulator::{Placement, Scheduler, SimConfig};
use dsr_core::{math, QuadratureSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// Which engine produces a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Analysis,
    Sim,
    #[default]
    Both,
}

impl Mode {
    pub fn analysis(self) -> bool {
        matches!(self, Mode::Analysis | Mode::Both)
    }

    pub fn sim(self) -> bool {
        matches!(self, Mode::Sim | Mode::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Root of every random stream.
    pub seed: u64,
    pub geometry: GeometryConfig,
    pub radio: RadioConfig,
    pub bands: BandsConfig,
    pub sim: SimSection,
    pub plan: PlanConfig,
    pub quadrature: QuadratureConfig,
    pub run: RunConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub macro_side: f64,
    pub small_cell_distance: f64,
    pub small_cell_azimuth_deg: f64,
    pub coverage_radius: f64,
    /// Explicit `R_s`; derived from `guard_area_fraction` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub guard_radius: Option<f64>,
    /// Guard disk area as a fraction of the sector area.
    pub guard_area_fraction: f64,
    pub guard_annulus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioConfig {
    pub gsm_power_w: f64,
    /// Explicit small-cell power; calibrated from `max_degradation_db` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lte_power_w: Option<f64>,
    pub max_degradation_db: f64,
    pub path_loss_exponent: f64,
    pub noise_psd_dbm_hz: f64,
    pub shannon_gap_db: f64,
    pub wavelength_m: f64,
    /// Path gain at 1 m; free space at `wavelength_m` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BandsConfig {
    pub bandwidths_hz: [f64; 3],
    /// Carriers kept free of LTE in the serving sector.
    pub reserved_hz: f64,
    /// Macro density override (analysis only); `2/(3√3 R_m²)` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_bs: Option<f64>,
    /// LTE UE density; when absent a rate run assumes as many users per
    /// small cell as it has UE positions.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_ue: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub fading: FadingModel,
    pub pattern: AntennaPattern,
    pub scheduler: Scheduler,
    pub pf_window: f64,
    pub n_drops: u64,
    pub n_tti: u32,
    pub placement: Placement,
    pub cochannel_radius: CochannelRadius,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanConfig {
    pub window: WindowPosition,
    pub max_cell_ids: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub inner_rel_tol: f64,
    pub outer_rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    pub truncation_eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub rate_mode: Mode,
    /// UE offsets `(x, y)` from the small cell (m).
    pub ue_positions: Vec<[f64; 2]>,
    pub outage_mode: Mode,
    /// GSM probes `(r, ψ°)` w.r.t. the small cell; the three guard-border
    /// reference users when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probes: Option<Vec<[f64; 2]>>,
    pub thresholds_db: Vec<f64>,
    pub scenarios: Vec<Scenario>,
    pub d_grid: Vec<f64>,
    pub theta_grid_deg: Vec<f64>,
    pub sweep_n_ues: usize,
    pub sweep_n_drops: u64,
    pub sweep_n_tti: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Per-drop rate records, one line per (drop, TTI, UE, band).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub debug_log: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 1,
            geometry: GeometryConfig::default(),
            radio: RadioConfig::default(),
            bands: BandsConfig::default(),
            sim: SimSection::default(),
            plan: PlanConfig::default(),
            quadrature: QuadratureConfig::default(),
            run: RunConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig {
            macro_side: 1000.0,
            small_cell_distance: 350.0,
            small_cell_azimuth_deg: 0.0,
            coverage_radius: 50.0,
            guard_radius: None,
            guard_area_fraction: 0.25,
            guard_annulus: 100.0,
        }
    }
}

impl Default for RadioConfig {
    fn default() -> Self {
        RadioConfig {
            gsm_power_w: 40.0,
            lte_power_w: None,
            max_degradation_db: 1.0,
            path_loss_exponent: 3.0,
            noise_psd_dbm_hz: -174.0,
            shannon_gap_db: 3.0,
            wavelength_m: 0.375,
            l0: None,
        }
    }
}

impl Default for BandsConfig {
    fn default() -> Self {
        BandsConfig {
            bandwidths_hz: [2e6, 3e6, 3e6],
            reserved_hz: 1e6,
            lambda_bs: None,
            lambda_ue: None,
        }
    }
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            grid_rows: 6,
            grid_cols: 6,
            fading: FadingModel::Rayleigh,
            pattern: AntennaPattern::TriSector3gpp,
            scheduler: Scheduler::ProportionalFair,
            pf_window: 100.0,
            n_drops: 200,
            n_tti: 500,
            placement: Placement::Hexagonal,
            cochannel_radius: CochannelRadius::CellAzimuth,
        }
    }
}

impl Default for PlanConfig {
    fn default() -> Self {
        PlanConfig {
            window: WindowPosition::FarEdge,
            max_cell_ids: 16,
        }
    }
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        let q = QuadratureSpec::default();
        QuadratureConfig {
            inner_rel_tol: q.inner_rel_tol,
            outer_rel_tol: q.outer_rel_tol,
            abs_tol: q.abs_tol,
            max_subdivisions: q.max_subdivisions,
            truncation_eps: q.truncation_eps,
        }
    }
}

impl From<&QuadratureConfig> for QuadratureSpec {
    fn from(q: &QuadratureConfig) -> Self {
        QuadratureSpec {
            inner_rel_tol: q.inner_rel_tol,
            outer_rel_tol: q.outer_rel_tol,
            abs_tol: q.abs_tol,
            max_subdivisions: q.max_subdivisions,
            truncation_eps: q.truncation_eps,
        }
    }
}

/// The four UE offsets of the reference rate experiment.
pub const REFERENCE_UES: [[f64; 2]; 4] = [[-22.1, 4.6], [17.8, 25.7], [-7.8, 41.5], [30.0, -35.8]];

/// `start, start + step, …` up to and including `end` (within rounding).
pub fn linspace_step(start: f64, end: f64, step: f64) -> Vec<f64> {
    let n = ((end - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| start + step * i as f64).collect()
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            rate_mode: Mode::Both,
            ue_positions: REFERENCE_UES.to_vec(),
            outage_mode: Mode::Both,
            probes: None,
            thresholds_db: linspace_step(-10.0, 20.0, 1.0),
            scenarios: Scenario::ALL.to_vec(),
            d_grid: linspace_step(150.0, 700.0, 50.0),
            theta_grid_deg: linspace_step(-60.0, 60.0, 10.0),
            sweep_n_ues: 4,
            sweep_n_drops: 20,
            sweep_n_tti: 100,
        }
    }
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            debug_log: None,
        }
    }
}

/// Everything a command needs, derived from a validated config.
#[derive(Debug, Clone)]
pub struct Resolved {
    /// The config with every derived default written out.
    pub config: ScenarioConfig,
    pub hash: String,
    pub geometry: NetworkGeometry,
    pub radio: RadioParams,
    pub analysis: AnalysisContext,
    pub sim: SimConfig,
}

fn check(ok: bool, field: &str, message: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::config(field, message()))
    }
}

fn positive(x: f64, field: &str) -> Result<()> {
    check(x.is_finite() && x > 0.0, field, || {
        format!("must be finite and > 0, got {x}")
    })
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let field = e
                .span()
                .map_or_else(|| "<document>".to_string(), |s| key_at(text, s.start));
            CliError::config(field, e.message().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes to TOML")
    }

    /// Field-level and cross-field checks that need no numerics.
    pub fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        positive(g.macro_side, "geometry.macro_side")?;
        positive(g.coverage_radius, "geometry.coverage_radius")?;
        positive(g.small_cell_distance, "geometry.small_cell_distance")?;
        check(
            g.small_cell_azimuth_deg.is_finite(),
            "geometry.small_cell_azimuth_deg",
            || "must be finite".into(),
        )?;
        check(
            g.guard_area_fraction > 0.0 && g.guard_area_fraction <= 1.0,
            "geometry.guard_area_fraction",
            || format!("must lie in (0, 1], got {}", g.guard_area_fraction),
        )?;
        if let Some(rs) = g.guard_radius {
            positive(rs, "geometry.guard_radius")?;
        }
        check(g.guard_annulus >= 0.0, "geometry.guard_annulus", || {
            format!("must be >= 0, got {}", g.guard_annulus)
        })?;

        let r = &self.radio;
        positive(r.gsm_power_w, "radio.gsm_power_w")?;
        if let Some(p) = r.lte_power_w {
            check(p.is_finite() && p >= 0.0, "radio.lte_power_w", || {
                format!("must be >= 0, got {p}")
            })?;
        }
        check(
            r.max_degradation_db.is_finite() && r.max_degradation_db >= 0.0,
            "radio.max_degradation_db",
            || format!("must be >= 0, got {}", r.max_degradation_db),
        )?;
        check(r.path_loss_exponent > 2.0, "radio.path_loss_exponent", || {
            format!("must be > 2, got {}", r.path_loss_exponent)
        })?;
        check(r.noise_psd_dbm_hz.is_finite(), "radio.noise_psd_dbm_hz", || {
            "must be finite".into()
        })?;
        check(r.shannon_gap_db >= 0.0, "radio.shannon_gap_db", || {
            format!("must be >= 0 dB, got {}", r.shannon_gap_db)
        })?;
        positive(r.wavelength_m, "radio.wavelength_m")?;
        if let Some(l0) = r.l0 {
            positive(l0, "radio.l0")?;
        }

        let b = &self.bands;
        for (i, &w) in b.bandwidths_hz.iter().enumerate() {
            positive(w, &format!("bands.bandwidths_hz[{i}]"))?;
        }
        check(b.reserved_hz >= 0.0, "bands.reserved_hz", || {
            format!("must be >= 0, got {}", b.reserved_hz)
        })?;
        let carriers = b.reserved_hz / CARRIER_BANDWIDTH;
        check((carriers - carriers.round()).abs() < 1e-6, "bands.reserved_hz", || {
            format!("must be a whole number of 200 kHz carriers, got {}", b.reserved_hz)
        })?;
        let occupied = PrbGrid::default().occupied();
        let total: f64 = b.bandwidths_hz.iter().sum::<f64>() + b.reserved_hz;
        check((total - occupied).abs() < 1.0, "bands", || {
            format!(
                "B1 + B2 + B3 + reserved must equal the {} MHz occupied by the LTE carrier, got {} MHz",
                occupied / 1e6,
                total / 1e6
            )
        })?;
        if let Some(l) = b.lambda_bs {
            positive(l, "bands.lambda_bs")?;
            if let Placement::Ppp { .. } = self.sim.placement {
                let derived = macro_density(g.macro_side);
                check((l - derived).abs() <= 1e-9 * derived, "bands.lambda_bs", || {
                    format!("PPP placement draws sites at 2/(3√3 R_m²) = {derived:e}; an override of {l:e} would make analysis and simulation disagree")
                })?;
            }
        }
        if let Some(l) = b.lambda_ue {
            check(l.is_finite() && l >= 0.0, "bands.lambda_ue", || {
                format!("must be >= 0, got {l}")
            })?;
        }

        let s = &self.sim;
        check(s.grid_rows >= 1 && s.grid_cols >= 1, "sim.grid_rows", || {
            format!("grid needs at least one cell, got {}x{}", s.grid_rows, s.grid_cols)
        })?;
        check(s.pf_window >= 1.0, "sim.pf_window", || {
            format!("must be >= 1, got {}", s.pf_window)
        })?;
        check(s.n_drops >= 1, "sim.n_drops", || "must be >= 1".into())?;
        check(s.n_tti >= 1, "sim.n_tti", || "must be >= 1".into())?;
        if let Placement::Ppp { field_radius } = s.placement {
            positive(field_radius, "sim.placement.field_radius")?;
        }
        if let AntennaPattern::TriSector {
            beamwidth_deg,
            floor_db,
        } = s.pattern
        {
            positive(beamwidth_deg, "sim.pattern.beamwidth_deg")?;
            check(floor_db >= 0.0, "sim.pattern.floor_db", || {
                format!("must be >= 0, got {floor_db}")
            })?;
        }

        check(self.plan.max_cell_ids >= 1, "plan.max_cell_ids", || {
            "must be >= 1".into()
        })?;
        QuadratureSpec::from(&self.quadrature)
            .validate()
            .map_err(|e| CliError::in_section("quadrature", e))?;

        let run = &self.run;
        for (i, p) in run.ue_positions.iter().enumerate() {
            let r = p[0].hypot(p[1]);
            check(
                r > 0.0 && r <= g.coverage_radius,
                &format!("run.ue_positions[{i}]"),
                || {
                    format!(
                        "({}, {}) must lie inside the coverage disk (0 < r <= {})",
                        p[0], p[1], g.coverage_radius
                    )
                },
            )?;
        }
        if let Some(probes) = &run.probes {
            for (i, p) in probes.iter().enumerate() {
                check(
                    p[0] > 0.0 && p[0].is_finite() && p[1].is_finite(),
                    &format!("run.probes[{i}]"),
                    || format!("probe ({}, {}°) needs r > 0", p[0], p[1]),
                )?;
            }
        }
        for (i, t) in run.thresholds_db.iter().enumerate() {
            check(t.is_finite(), &format!("run.thresholds_db[{i}]"), || {
                "must be finite".into()
            })?;
        }
        for (i, d) in run.d_grid.iter().enumerate() {
            positive(*d, &format!("run.d_grid[{i}]"))?;
        }
        for (i, t) in run.theta_grid_deg.iter().enumerate() {
            check(t.is_finite(), &format!("run.theta_grid_deg[{i}]"), || {
                "must be finite".into()
            })?;
        }
        check(run.sweep_n_ues >= 1, "run.sweep_n_ues", || "must be >= 1".into())?;
        check(run.sweep_n_drops >= 1, "run.sweep_n_drops", || "must be >= 1".into())?;
        check(run.sweep_n_tti >= 1, "run.sweep_n_tti", || "must be >= 1".into())?;
        Ok(())
    }

    /// Validates, fills every derived default (guard radius, `L_0`, macro
    /// density, calibrated small-cell power) and builds the core contexts.
    pub fn resolve(&self) -> Result<Resolved> {
        self.validate()?;
        let mut config = self.clone();
        let gc = &mut config.geometry;
        let rs = *gc
            .guard_radius
            .get_or_insert_with(|| size_guard_region(sector_area(gc.macro_side), gc.guard_area_fraction));
        let geometry = NetworkGeometry::new(
            gc.macro_side,
            gc.small_cell_distance,
            gc.small_cell_azimuth_deg.to_radians(),
            gc.coverage_radius,
            rs,
            gc.guard_annulus,
        )
        .map_err(|e| CliError::in_section("geometry", e))?;

        let rc = &mut config.radio;
        let l0 = *rc.l0.get_or_insert_with(|| RadioParams::free_space_l0(rc.wavelength_m));
        let mut radio = RadioParams {
            gsm_power: rc.gsm_power_w,
            lte_power: 0.0,
            l0,
            path_loss_exponent: rc.path_loss_exponent,
            noise_psd: math::dbm_to_watts(rc.noise_psd_dbm_hz),
            shannon_gap: math::db_to_linear(rc.shannon_gap_db),
            wavelength: rc.wavelength_m,
        };
        radio.validate().map_err(|e| CliError::in_section("radio", e))?;

        let lambda_bs = *config
            .bands
            .lambda_bs
            .get_or_insert_with(|| macro_density(geometry.macro_side));
        let s = &config.sim;
        let mut analysis = AnalysisContext::with_bands(geometry, radio, config.bands.bandwidths_hz)
            .map_err(|e| CliError::in_section("bands", e))?;
        analysis.pattern = s.pattern;
        analysis.interferer_fading = s.fading;
        analysis.cochannel_radius = s.cochannel_radius;
        analysis.bands.lambda_bs = lambda_bs;
        analysis.bands.lambda_ue = config.bands.lambda_ue;
        analysis.quadrature = QuadratureSpec::from(&config.quadrature);
        if let Placement::Ppp { field_radius } = s.placement {
            analysis.field_radius = Some(field_radius);
        }

        let lte_power = match config.radio.lte_power_w {
            Some(p) => p,
            None => calibrate_power(&analysis, config.radio.max_degradation_db)?,
        };
        config.radio.lte_power_w = Some(lte_power);
        radio.lte_power = lte_power;
        analysis.radio = radio;

        let sim = SimConfig {
            geometry,
            grid_rows: s.grid_rows,
            grid_cols: s.grid_cols,
            radio,
            fading: s.fading,
            pattern: s.pattern,
            bandwidths: config.bands.bandwidths_hz,
            scheduler: s.scheduler,
            pf_window: s.pf_window,
            n_drops: s.n_drops,
            n_tti: s.n_tti,
            seed: config.seed,
            placement: s.placement,
            cochannel_radius: s.cochannel_radius,
        };
        sim.validate().map_err(|e| CliError::in_section("sim", e))?;

        let hash = config_hash(&config);
        Ok(Resolved {
            config,
            hash,
            geometry,
            radio,
            analysis,
            sim,
        })
    }
}

/// SHA-256 over the canonical JSON of the config, output paths excluded.
/// Callers pass a resolved config so that spelling a default explicitly does
/// not change the hash.
pub fn config_hash(config: &ScenarioConfig) -> String {
    let mut semantic = config.clone();
    semantic.output = OutputConfig::default();
    let value = serde_json::to_value(&semantic).expect("config serializes to JSON");
    let digest = Sha256::digest(value.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

impl Resolved {
    /// `(r, ψ)` probes in radians.
    pub fn probes(&self) -> Result<Vec<(f64, f64)>> {
        match &self.config.run.probes {
            Some(p) => Ok(p.iter().map(|&[r, psi]| (r, psi.to_radians())).collect()),
            None => Ok(self.geometry.reference_probes()?.to_vec()),
        }
    }

    pub fn ue_offsets(&self) -> Vec<Point2> {
        self.config
            .run
            .ue_positions
            .iter()
            .map(|&[x, y]| Point2::new(x, y))
            .collect()
    }

    /// Analysis context for a rate run over `n_ues` UEs: without a configured
    /// UE density every simulated UE is counted as a user of the small cell.
    pub fn rate_analysis(&self, n_ues: usize) -> AnalysisContext {
        let mut ctx = self.analysis.clone();
        if ctx.bands.lambda_ue.is_none() {
            let rc = self.geometry.coverage_radius;
            ctx.bands.lambda_ue = Some(n_ues as f64 / (PI * rc * rc));
        }
        ctx
    }
}

/// Dotted key of the TOML entry around byte `offset`, for error messages.
fn key_at(text: &str, offset: usize) -> String {
    let before = &text[..offset.min(text.len())];
    let mut section = String::new();
    for line in before.lines() {
        let t = line.trim();
        if t.starts_with('[') && t.ends_with(']') {
            section = t.trim_matches(|c| c == '[' || c == ']').trim().to_string();
        }
    }
    let line_start = before.rfind('\n').map_or(0, |i| i + 1);
    let line = text[line_start..].lines().next().unwrap_or("");
    let key = line.split('=').next().unwrap_or("").trim();
    match (section.is_empty(), key.is_empty() || key.starts_with('[')) {
        (true, true) => "<document>".into(),
        (true, false) => key.into(),
        (false, true) => section,
        (false, false) => format!("{section}.{key}"),
    }
}
