//! Monte Carlo system-level simulation.
//!
//! Work is split into drops. Drop `k` draws everything from its own ChaCha8
//! stream `(seed, k)`, so a drop's outcome does not depend on which worker
//! runs it. The drivers here run drops sequentially; the per-drop kernels
//! and accumulators are public so a parallel engine can reproduce the same
//! bits by folding outcomes in drop order.
//!
//! Fading is block fading: one independent draw per link per TTI. Within a
//! TTI the draw order is fixed: for each UE and band, the signal fade, then
//! one fade per interferer.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::analysis::AnalysisContext;
use crate::error::{ensure, Result};
use crate::geometry::{
    gsm_cochannel_radius, macro_density, sector_boresight, serving_sector, validate_placement, CochannelRadius,
    HexGrid, NetworkGeometry, Point2, SECTORS,
};
use crate::math::{self, PI, TAU};
use crate::plan::CARRIER_BANDWIDTH;
use crate::radio::{AntennaPattern, FadingModel, RadioParams};

/// How macro BSs are placed.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Placement {
    /// The regular hexagonal grid of the configuration.
    #[default]
    Hexagonal,
    /// A fresh PPP per drop with the analysis' density, exclusion radii and
    /// randomly oriented sectors, truncated at `field_radius` around each
    /// receiver.
    Ppp { field_radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Scheduler {
    /// UE `t mod K` gets every band in TTI `t`.
    RoundRobin,
    /// Per band, the UE maximising instantaneous over averaged rate.
    #[default]
    ProportionalFair,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimConfig {
    pub geometry: NetworkGeometry,
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub radio: RadioParams,
    /// Fading of every link.
    pub fading: FadingModel,
    pub pattern: AntennaPattern,
    /// LTE band widths `B_1..B_3` (Hz).
    pub bandwidths: [f64; SECTORS],
    pub scheduler: Scheduler,
    /// Averaging window of the proportional-fair metric (TTIs).
    pub pf_window: f64,
    pub n_drops: u64,
    pub n_tti: u32,
    pub seed: u64,
    pub placement: Placement,
    /// Exclusion radius of co-channel GSM interferers in PPP mode.
    pub cochannel_radius: CochannelRadius,
}

impl SimConfig {
    /// 6×6 grid, Rayleigh fading, 3GPP pattern, PF over 500 TTIs, 200 drops.
    pub fn table_one(geometry: NetworkGeometry, radio: RadioParams) -> Self {
        SimConfig {
            geometry,
            grid_rows: 6,
            grid_cols: 6,
            radio,
            fading: FadingModel::Rayleigh,
            pattern: AntennaPattern::TriSector3gpp,
            bandwidths: [2e6, 3e6, 3e6],
            scheduler: Scheduler::ProportionalFair,
            pf_window: 100.0,
            n_drops: 200,
            n_tti: 500,
            seed: 1,
            placement: Placement::Hexagonal,
            cochannel_radius: CochannelRadius::CellAzimuth,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.radio.validate()?;
        ensure!(self.n_drops >= 1, "n_drops", "must be >= 1");
        ensure!(self.n_tti >= 1, "n_tti", "must be >= 1");
        ensure!(
            self.pf_window >= 1.0,
            "pf_window",
            "must be >= 1, got {}",
            self.pf_window
        );
        ensure!(
            self.grid_rows >= 1 && self.grid_cols >= 1,
            "grid",
            "needs at least one cell, got {}x{}",
            self.grid_rows,
            self.grid_cols
        );
        for b in self.bandwidths {
            ensure!(b > 0.0, "bandwidth", "must be > 0, got {b}");
        }
        if let Placement::Ppp { field_radius } = self.placement {
            ensure!(
                field_radius > 0.0 && field_radius.is_finite(),
                "field_radius",
                "must be > 0, got {field_radius}"
            );
        }
        Ok(())
    }

    /// Analysis context describing the same model (field truncated as in PPP mode).
    pub fn analysis_context(&self) -> Result<AnalysisContext> {
        let mut ctx = AnalysisContext::with_bands(self.geometry, self.radio, self.bandwidths)?;
        ctx.pattern = self.pattern;
        ctx.interferer_fading = self.fading;
        ctx.cochannel_radius = self.cochannel_radius;
        if let Placement::Ppp { field_radius } = self.placement {
            ctx.field_radius = Some(field_radius);
        }
        Ok(ctx)
    }

    fn band_noise(&self) -> Result<[f64; SECTORS]> {
        let mut out = [0.0; SECTORS];
        for (o, b) in out.iter_mut().zip(self.bandwidths) {
            *o = self.radio.noise_power(b)?;
        }
        Ok(out)
    }
}

/// The random stream owned by one drop.
pub fn drop_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mean received power `P̂ G(φ) d^{−α}` from a sector with the given boresight.
fn sector_gain(rp: &RadioParams, pattern: &AntennaPattern, from: Point2, boresight: f64, to: Point2) -> f64 {
    let v = to - from;
    rp.gsm_power_hat() * pattern.gain(v.angle() - boresight) * rp.distance_gain(v.norm())
}

/// Uniform point in a disk of radius `radius` around `centre`.
fn uniform_in_disk<R: Rng + ?Sized>(rng: &mut R, centre: Point2, radius: f64) -> Point2 {
    let rad = radius * math::sqrt(rng.random::<f64>());
    let ang = TAU * rng.random::<f64>();
    centre + Point2::polar(rad, ang)
}

/// PPP with `density` on the annulus `[inner, outer]` around `centre`.
fn ppp_annulus<R: Rng + ?Sized>(rng: &mut R, centre: Point2, density: f64, inner: f64, outer: f64) -> Vec<Point2> {
    let area = PI * (outer * outer - inner * inner);
    let mean = density * area;
    let n = if mean > 0.0 {
        Poisson::new(mean).map(|p| p.sample(rng) as usize).unwrap_or(0)
    } else {
        0
    };
    (0..n)
        .map(|_| {
            let rad = math::sqrt(inner * inner + rng.random::<f64>() * (outer * outer - inner * inner));
            centre + Point2::polar(rad, TAU * rng.random::<f64>())
        })
        .collect()
}

/// Fixed part of a rate drop: UE positions and, on the grid, mean interferer gains.
#[derive(Debug, Clone)]
pub struct RateScene {
    /// UE offsets from the small cell.
    pub offsets: Vec<Point2>,
    ues: Vec<Point2>,
    /// `P̂_l r^{−α}` per UE.
    signal: Vec<f64>,
    noise: [f64; SECTORS],
    /// `[ue][band][site]` mean interference gains on the grid.
    grid_gains: Option<Vec<[Vec<f64>; SECTORS]>>,
    bs_positions: Vec<Point2>,
}

impl RateScene {
    pub fn new(cfg: &SimConfig, offsets: &[Point2]) -> Result<Self> {
        cfg.validate()?;
        ensure!(!offsets.is_empty(), "ue_positions", "at least one UE is required");
        let rc = cfg.geometry.coverage_radius;
        for o in offsets {
            let r = o.norm();
            ensure!(
                r > 0.0 && r <= rc + 1e-9,
                "ue_positions",
                "UE offset ({}, {}) must lie in (0, R_c = {rc}]",
                o.x,
                o.y
            );
        }
        let cell = cfg.geometry.small_cell_position();
        let ues: Vec<Point2> = offsets.iter().map(|&o| cell + o).collect();
        let signal = offsets
            .iter()
            .map(|o| cfg.radio.lte_power_hat() * cfg.radio.distance_gain(o.norm()))
            .collect();
        let (grid_gains, bs_positions) = match cfg.placement {
            Placement::Hexagonal => {
                let grid = HexGrid::new(cfg.grid_rows, cfg.grid_cols, cfg.geometry.macro_side)?;
                let sites: Vec<Point2> = grid.bs_positions().collect();
                let gains = ues
                    .iter()
                    .map(|&ue| {
                        core::array::from_fn(|b| {
                            sites
                                .iter()
                                .map(|&s| sector_gain(&cfg.radio, &cfg.pattern, s, sector_boresight(b), ue))
                                .collect()
                        })
                    })
                    .collect();
                (Some(gains), sites)
            }
            Placement::Ppp { .. } => (None, Vec::new()),
        };
        Ok(RateScene {
            offsets: offsets.to_vec(),
            ues,
            signal,
            noise: cfg.band_noise()?,
            grid_gains,
            bs_positions,
        })
    }

    pub fn len(&self) -> usize {
        self.ues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ues.is_empty()
    }
}

/// One TTI of a recorded drop.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TtiRecord {
    pub tti: u32,
    /// `[ue][band]` signal fades.
    pub signal_fades: Vec<[f64; SECTORS]>,
    /// `[ue][band]` SINR (linear).
    pub sinr: Vec<[f64; SECTORS]>,
    /// UE scheduled on each band.
    pub scheduled: [usize; SECTORS],
}

/// Everything drawn and decided in one rate drop.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DropRecord {
    pub drop: u64,
    pub bs_positions: Vec<Point2>,
    pub ue_positions: Vec<Point2>,
    pub ttis: Vec<TtiRecord>,
    /// Fraction of (band, TTI) slots each UE was scheduled on.
    pub shares: Vec<f64>,
    /// Mean achieved rate per UE (bit/s).
    pub rates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateDrop {
    /// Mean achieved rate per UE over the drop (bit/s).
    pub rates: Vec<f64>,
    pub record: Option<DropRecord>,
}

/// Interferers of one (UE, band) link in a PPP drop: mean gains.
fn ppp_band_gains<R: Rng + ?Sized>(
    cfg: &SimConfig,
    rng: &mut R,
    ues: &[Point2],
    field_radius: f64,
    guard: &[f64; SECTORS],
) -> (Vec<Point2>, Vec<[Vec<f64>; SECTORS]>) {
    let cell = cfg.geometry.small_cell_position();
    let reach = field_radius + cfg.geometry.coverage_radius;
    let density = macro_density(cfg.geometry.macro_side);
    let points = ppp_annulus(rng, cell, density, 0.0, reach);
    let orientation: Vec<f64> = points.iter().map(|_| TAU * rng.random::<f64>()).collect();
    let gains = ues
        .iter()
        .map(|&ue| {
            core::array::from_fn(|b| {
                points
                    .iter()
                    .zip(&orientation)
                    .filter_map(|(&p, &w)| {
                        let d = p.distance(ue);
                        (d >= guard[b] && d <= field_radius)
                            .then(|| sector_gain(&cfg.radio, &cfg.pattern, p, w + sector_boresight(b), ue))
                    })
                    .collect()
            })
        })
        .collect();
    (points, gains)
}

/// Runs drop `drop` of a rate simulation.
pub fn rate_drop(cfg: &SimConfig, scene: &RateScene, drop: u64, record: bool) -> Result<RateDrop> {
    let mut rng = drop_rng(cfg.seed, drop);
    rate_drop_with(cfg, scene, &mut rng, drop, record)
}

fn rate_drop_with(
    cfg: &SimConfig,
    scene: &RateScene,
    rng: &mut ChaCha8Rng,
    drop: u64,
    record: bool,
) -> Result<RateDrop> {
    let k = scene.len();
    let drawn;
    let (gains, bs_positions): (&[[Vec<f64>; SECTORS]], &[Point2]) = match (&scene.grid_gains, cfg.placement) {
        (Some(g), _) => (g, &scene.bs_positions),
        (None, Placement::Ppp { field_radius }) => {
            let guard = crate::geometry::band_guard_radii(&cfg.geometry)?;
            drawn = ppp_band_gains(cfg, rng, &scene.ues, field_radius, &guard);
            (&drawn.1, &drawn.0)
        }
        (None, Placement::Hexagonal) => unreachable!("grid scenes carry gains"),
    };

    let eta = cfg.radio.shannon_gap;
    let w = cfg.pf_window;
    let mut average = vec![[1.0f64; SECTORS]; k];
    let mut served_total = vec![0.0f64; k];
    let mut slots = vec![0u64; k];
    let mut inst = vec![[0.0f64; SECTORS]; k];
    let mut sinr = vec![[0.0f64; SECTORS]; k];
    let mut fades = vec![[0.0f64; SECTORS]; k];
    let mut ttis = Vec::new();

    for t in 0..cfg.n_tti {
        for u in 0..k {
            for b in 0..SECTORS {
                let h = cfg.fading.draw(rng);
                let mut interference = 0.0;
                for &g in &gains[u][b] {
                    interference += g * cfg.fading.draw(rng);
                }
                let s = scene.signal[u] * h / (interference + scene.noise[b]);
                fades[u][b] = h;
                sinr[u][b] = s;
                inst[u][b] = cfg.bandwidths[b] * math::log2(1.0 + s / eta);
            }
        }
        let mut scheduled = [0usize; SECTORS];
        for (b, pick) in scheduled.iter_mut().enumerate() {
            *pick = match cfg.scheduler {
                Scheduler::RoundRobin => t as usize % k,
                Scheduler::ProportionalFair => {
                    let mut best = 0;
                    let mut best_metric = f64::NEG_INFINITY;
                    for u in 0..k {
                        let m = inst[u][b] / average[u][b];
                        if m > best_metric {
                            best = u;
                            best_metric = m;
                        }
                    }
                    best
                }
            };
        }
        for u in 0..k {
            for b in 0..SECTORS {
                let served = if scheduled[b] == u { inst[u][b] } else { 0.0 };
                average[u][b] += (served - average[u][b]) / w;
                if scheduled[b] == u {
                    served_total[u] += served;
                    slots[u] += 1;
                }
            }
        }
        if record {
            ttis.push(TtiRecord {
                tti: t,
                signal_fades: fades.clone(),
                sinr: sinr.clone(),
                scheduled,
            });
        }
    }

    let n = cfg.n_tti as f64;
    let rates: Vec<f64> = served_total.iter().map(|s| s / n).collect();
    let record = record.then(|| DropRecord {
        drop,
        bs_positions: bs_positions.to_vec(),
        ue_positions: scene.ues.clone(),
        ttis,
        shares: slots.iter().map(|&s| s as f64 / (n * SECTORS as f64)).collect(),
        rates: rates.clone(),
    });
    Ok(RateDrop { rates, record })
}

/// Mean and 95% normal confidence half-width of a per-drop statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MeanEstimate {
    pub mean: f64,
    pub ci_halfwidth: f64,
    pub samples: u64,
}

pub const Z95: f64 = 1.959_963_984_540_054;

/// Running sums of per-drop vectors, folded in drop order.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanAccumulator {
    n: u64,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl MeanAccumulator {
    pub fn new(width: usize) -> Self {
        MeanAccumulator {
            n: 0,
            sum: vec![0.0; width],
            sum_sq: vec![0.0; width],
        }
    }

    pub fn push(&mut self, values: &[f64]) {
        self.n += 1;
        for ((s, q), &v) in self.sum.iter_mut().zip(&mut self.sum_sq).zip(values) {
            *s += v;
            *q += v * v;
        }
    }

    pub fn finish(&self) -> Vec<MeanEstimate> {
        let n = self.n as f64;
        self.sum
            .iter()
            .zip(&self.sum_sq)
            .map(|(&s, &q)| {
                let mean = s / n;
                let ci_halfwidth = if self.n > 1 {
                    let var = ((q - n * mean * mean) / (n - 1.0)).max(0.0);
                    Z95 * math::sqrt(var / n)
                } else {
                    0.0
                };
                MeanEstimate {
                    mean,
                    ci_halfwidth,
                    samples: self.n,
                }
            })
            .collect()
    }
}

/// Per-UE mean rate.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RateEstimate {
    /// UE offset from the small cell.
    pub ue: Point2,
    pub rate_bps: f64,
    pub ci_halfwidth: f64,
    pub drops: u64,
}

/// Outage estimate at one probe and threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OutageEstimate {
    /// `(r, ψ)` w.r.t. the small cell.
    pub probe: (f64, f64),
    pub threshold_db: f64,
    pub p_out: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub below: u64,
    pub samples: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EmpiricalResult {
    pub rates: Vec<RateEstimate>,
    pub outages: Vec<OutageEstimate>,
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * math::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
    let lo = if k == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if k as f64 == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

pub fn finish_rates(scene: &RateScene, acc: &MeanAccumulator) -> Vec<RateEstimate> {
    scene
        .offsets
        .iter()
        .zip(acc.finish())
        .map(|(&ue, m)| RateEstimate {
            ue,
            rate_bps: m.mean,
            ci_halfwidth: m.ci_halfwidth,
            drops: m.samples,
        })
        .collect()
}

/// Per-UE mean rates over `cfg.n_drops` drops.
pub fn run_rate_sim(cfg: &SimConfig, ue_offsets: &[Point2]) -> Result<EmpiricalResult> {
    let scene = RateScene::new(cfg, ue_offsets)?;
    let mut acc = MeanAccumulator::new(scene.len());
    for d in 0..cfg.n_drops {
        acc.push(&rate_drop(cfg, &scene, d, false)?.rates);
    }
    Ok(EmpiricalResult {
        rates: finish_rates(&scene, &acc),
        outages: Vec::new(),
    })
}

/// Fixed part of an outage drop.
#[derive(Debug, Clone)]
pub struct OutageScene {
    pub probes: Vec<(f64, f64)>,
    pub thresholds_db: Vec<f64>,
    thresholds: Vec<f64>,
    with_lte: bool,
    users: Vec<Point2>,
    /// Mean desired power per probe.
    desired: Vec<f64>,
    /// Serving sector per probe.
    pub serving_sectors: Vec<usize>,
    /// `P̂_l r^{−α}` per probe.
    lte: Vec<f64>,
    /// Grid co-channel gains per probe.
    grid_gains: Option<Vec<Vec<f64>>>,
    noise: f64,
    cochannel_radius: f64,
}

impl OutageScene {
    pub fn new(cfg: &SimConfig, probes: &[(f64, f64)], thresholds_db: &[f64], with_lte: bool) -> Result<Self> {
        cfg.validate()?;
        ensure!(!probes.is_empty(), "probes", "at least one probe is required");
        ensure!(
            !thresholds_db.is_empty(),
            "thresholds",
            "at least one threshold is required"
        );
        for &t in thresholds_db {
            ensure!(t.is_finite(), "thresholds", "must be finite, got {t}");
        }
        let g = &cfg.geometry;
        let mut users = Vec::with_capacity(probes.len());
        let mut desired = Vec::with_capacity(probes.len());
        let mut sector = Vec::with_capacity(probes.len());
        let mut lte = Vec::with_capacity(probes.len());
        for &(r, psi) in probes {
            ensure!(
                r > 0.0 && r.is_finite(),
                "probes",
                "probe distance must be > 0, got {r}"
            );
            let u = g.user_position(r, psi);
            ensure!(
                u.norm() > 0.0,
                "probes",
                "probe ({r}, {psi}) coincides with the macro BS"
            );
            let s = serving_sector(u.angle());
            users.push(u);
            sector.push(s);
            desired.push(sector_gain(
                &cfg.radio,
                &cfg.pattern,
                Point2::ORIGIN,
                sector_boresight(s),
                u,
            ));
            lte.push(cfg.radio.lte_power_hat() * cfg.radio.distance_gain(r));
        }
        let grid_gains = match cfg.placement {
            Placement::Hexagonal => {
                let grid = HexGrid::new(cfg.grid_rows, cfg.grid_cols, g.macro_side)?;
                Some(
                    users
                        .iter()
                        .zip(&sector)
                        .map(|(&u, &s)| {
                            grid.cochannel_sites()
                                .map(|site| {
                                    sector_gain(&cfg.radio, &cfg.pattern, site.position, sector_boresight(s), u)
                                })
                                .collect()
                        })
                        .collect(),
                )
            }
            Placement::Ppp { .. } => None,
        };
        Ok(OutageScene {
            probes: probes.to_vec(),
            thresholds_db: thresholds_db.to_vec(),
            thresholds: thresholds_db.iter().map(|&t| math::db_to_linear(t)).collect(),
            with_lte,
            users,
            desired,
            serving_sectors: sector,
            lte,
            grid_gains,
            noise: cfg.radio.noise_power(CARRIER_BANDWIDTH)?,
            cochannel_radius: gsm_cochannel_radius(g, cfg.cochannel_radius, g.small_cell_azimuth),
        })
    }

    pub fn width(&self) -> usize {
        self.probes.len() * self.thresholds.len()
    }
}

/// Runs drop `drop` of an outage simulation; returns the number of samples
/// below each threshold, laid out `[probe][threshold]`.
pub fn outage_drop(cfg: &SimConfig, scene: &OutageScene, drop: u64) -> Vec<u64> {
    let mut rng = drop_rng(cfg.seed, drop);
    let nt = scene.thresholds.len();
    let mut below = vec![0u64; scene.width()];
    for p in 0..scene.probes.len() {
        let drawn;
        let gains: &[f64] = match (&scene.grid_gains, cfg.placement) {
            (Some(g), _) => &g[p],
            (None, Placement::Ppp { field_radius }) => {
                let user = scene.users[p];
                let inner = scene.cochannel_radius.min(field_radius);
                let density = macro_density(cfg.geometry.macro_side) / 3.0;
                let points = ppp_annulus(&mut rng, user, density, inner, field_radius);
                drawn = points
                    .iter()
                    .map(|&x| {
                        let w = TAU * rng.random::<f64>();
                        sector_gain(&cfg.radio, &cfg.pattern, x, w, user)
                    })
                    .collect::<Vec<f64>>();
                &drawn
            }
            (None, Placement::Hexagonal) => unreachable!("grid scenes carry gains"),
        };
        for _ in 0..cfg.n_tti {
            let fg = cfg.fading.draw(&mut rng);
            let mut interference = scene.noise;
            for &g in gains {
                interference += g * cfg.fading.draw(&mut rng);
            }
            // Always drawn so streams line up with and without the small cell.
            let fl = cfg.fading.draw(&mut rng);
            if scene.with_lte {
                interference += scene.lte[p] * fl;
            }
            let sinr = scene.desired[p] * fg / interference;
            for (t, &thr) in scene.thresholds.iter().enumerate() {
                if sinr < thr {
                    below[p * nt + t] += 1;
                }
            }
        }
    }
    below
}

/// Sums per-drop outage counts in drop order.
#[derive(Debug, Clone, PartialEq)]
pub struct CountAccumulator {
    drops: u64,
    below: Vec<u64>,
}

impl CountAccumulator {
    pub fn new(width: usize) -> Self {
        CountAccumulator {
            drops: 0,
            below: vec![0; width],
        }
    }

    pub fn push(&mut self, counts: &[u64]) {
        self.drops += 1;
        for (a, &c) in self.below.iter_mut().zip(counts) {
            *a += c;
        }
    }

    pub fn finish(&self, cfg: &SimConfig, scene: &OutageScene) -> Vec<OutageEstimate> {
        let samples = self.drops * cfg.n_tti as u64;
        let nt = scene.thresholds.len();
        let mut out = Vec::with_capacity(scene.width());
        for (p, &probe) in scene.probes.iter().enumerate() {
            for (t, &threshold_db) in scene.thresholds_db.iter().enumerate() {
                let below = self.below[p * nt + t];
                let (ci_lo, ci_hi) = wilson_interval(below, samples, Z95);
                out.push(OutageEstimate {
                    probe,
                    threshold_db,
                    p_out: below as f64 / samples as f64,
                    ci_lo,
                    ci_hi,
                    below,
                    samples,
                });
            }
        }
        out
    }
}

/// Empirical `P(SINR_g < T)` per probe `(r, ψ)` and threshold (dB).
pub fn run_outage_sim(
    cfg: &SimConfig,
    probes: &[(f64, f64)],
    thresholds_db: &[f64],
    with_lte: bool,
) -> Result<EmpiricalResult> {
    let scene = OutageScene::new(cfg, probes, thresholds_db, with_lte)?;
    let mut acc = CountAccumulator::new(scene.width());
    for d in 0..cfg.n_drops {
        acc.push(&outage_drop(cfg, &scene, d));
    }
    Ok(EmpiricalResult {
        rates: Vec::new(),
        outages: acc.finish(cfg, &scene),
    })
}

/// One point of a small-cell position sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepPoint {
    pub d: f64,
    pub theta: f64,
    /// False if the guard region leaves the serving sector; no rate is computed.
    pub valid: bool,
    /// Mean small-cell throughput (sum over UEs, bit/s).
    pub mean_rate_bps: f64,
    pub ci: f64,
}

/// Stream of drop `drop` at sweep position `index`.
pub fn sweep_stream(index: usize, drop: u64) -> u64 {
    ((index as u64) << 32) | (drop & 0xffff_ffff)
}

/// Geometry of sweep position `(d, θ)`, or `None` if it fails placement.
pub fn sweep_geometry(cfg: &SimConfig, d: f64, theta: f64) -> Option<NetworkGeometry> {
    let g = NetworkGeometry {
        small_cell_distance: d,
        small_cell_azimuth: theta,
        ..cfg.geometry
    };
    (g.validate().is_ok() && validate_placement(&g)).then_some(g)
}

/// Cell throughput of one sweep drop with `n_ues` UEs dropped uniformly in
/// the coverage disk.
pub fn sweep_drop(cfg: &SimConfig, geometry: &NetworkGeometry, index: usize, n_ues: usize, drop: u64) -> Result<f64> {
    let cfg = SimConfig {
        geometry: *geometry,
        ..cfg.clone()
    };
    let mut rng = drop_rng(cfg.seed, sweep_stream(index, drop));
    let offsets: Vec<Point2> = (0..n_ues)
        .map(|_| loop {
            let p = uniform_in_disk(&mut rng, Point2::ORIGIN, geometry.coverage_radius);
            if p.norm() > 0.0 {
                break p;
            }
        })
        .collect();
    let scene = RateScene::new(&cfg, &offsets)?;
    Ok(rate_drop_with(&cfg, &scene, &mut rng, drop, false)?.rates.iter().sum())
}

/// Mean small-cell throughput at each `(D, θ)`; invalid placements are flagged.
pub fn sweep_small_cell_position(cfg: &SimConfig, positions: &[(f64, f64)], n_ues: usize) -> Result<Vec<SweepPoint>> {
    ensure!(n_ues >= 1, "n_ues", "must be >= 1");
    let mut out = Vec::with_capacity(positions.len());
    for (i, &(d, theta)) in positions.iter().enumerate() {
        let Some(g) = sweep_geometry(cfg, d, theta) else {
            out.push(SweepPoint {
                d,
                theta,
                valid: false,
                mean_rate_bps: 0.0,
                ci: 0.0,
            });
            continue;
        };
        let mut acc = MeanAccumulator::new(1);
        for drop in 0..cfg.n_drops {
            acc.push(&[sweep_drop(cfg, &g, i, n_ues, drop)?]);
        }
        let m = acc.finish()[0];
        out.push(SweepPoint {
            d,
            theta,
            valid: true,
            mean_rate_bps: m.mean,
            ci: m.ci_halfwidth,
        });
    }
    Ok(out)
}
