//! Spectrum planning for a 10 MHz GSM block refarmed by LTE.
//!
//! Frequencies are offsets in Hz from the lower edge of the block. GSM
//! carrier `k` occupies `[200 kHz + 200k, 400 kHz + 200k)`, leaving 200 kHz
//! guards at both ends. The 50 LTE PRBs are centred in the block, so PRB `j`
//! occupies `[500 kHz + 180j, 680 kHz + 180j)`.

use alloc::format;
use alloc::vec::Vec;
use core::ops::Range;

use crate::analysis::AnalysisContext;
use crate::error::{ensure, Error, Result};
use crate::geometry::SECTORS;
use crate::math::{self, PI};

pub const CHANNEL_BANDWIDTH: f64 = 10e6;
pub const CARRIER_BANDWIDTH: f64 = 200e3;
pub const EDGE_GUARD: f64 = 200e3;
pub const CARRIERS: usize = 48;
pub const TRAFFIC_CARRIERS_PER_SECTOR: usize = 13;
pub const CONTROL_CARRIERS: usize = 9;

pub const PRB_BANDWIDTH: f64 = 180e3;
pub const PRBS: usize = 50;
/// PRBs carrying PSS/SSS/PBCH.
pub const CENTRAL_PRBS: Range<usize> = 22..28;

/// What a GSM carrier is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum CarrierUse {
    /// 1/3 reuse traffic carrier of a sector.
    Traffic { sector: usize },
    /// 3/9 reuse control carrier of `sector` in cells of reuse colour `color`.
    Control { color: u8, sector: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Carrier {
    pub index: usize,
    pub center_hz: f64,
    pub usage: CarrierUse,
}

impl Carrier {
    pub fn span(&self) -> (f64, f64) {
        let half = CARRIER_BANDWIDTH / 2.0;
        (self.center_hz - half, self.center_hz + half)
    }
}

/// The 48-carrier GSM plan: three contiguous 13-carrier sector blocks
/// followed by the 9 control carriers.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CarrierGrid {
    pub carriers: Vec<Carrier>,
}

impl CarrierGrid {
    pub fn traffic_block(&self, sector: usize) -> Range<usize> {
        let start = sector * TRAFFIC_CARRIERS_PER_SECTOR;
        start..start + TRAFFIC_CARRIERS_PER_SECTOR
    }

    pub fn control_carrier(&self, color: u8, sector: usize) -> usize {
        SECTORS * TRAFFIC_CARRIERS_PER_SECTOR + SECTORS * color as usize + sector
    }

    /// Frequency range covered by a run of contiguous carriers.
    pub fn span_of(&self, carriers: Range<usize>) -> (f64, f64) {
        let lo = self.carriers[carriers.start].span().0;
        let hi = self.carriers[carriers.end - 1].span().1;
        (lo, hi)
    }
}

pub fn build_carrier_grid() -> CarrierGrid {
    let traffic = SECTORS * TRAFFIC_CARRIERS_PER_SECTOR;
    let carriers = (0..CARRIERS)
        .map(|k| {
            let usage = if k < traffic {
                CarrierUse::Traffic {
                    sector: k / TRAFFIC_CARRIERS_PER_SECTOR,
                }
            } else {
                let c = k - traffic;
                CarrierUse::Control {
                    color: (c / SECTORS) as u8,
                    sector: c % SECTORS,
                }
            };
            Carrier {
                index: k,
                center_hz: EDGE_GUARD + CARRIER_BANDWIDTH * (k as f64 + 0.5),
                usage,
            }
        })
        .collect();
    CarrierGrid { carriers }
}

/// The LTE resource-block raster inside the block.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PrbGrid {
    pub count: usize,
    pub width: f64,
    pub first_edge: f64,
    pub central: (usize, usize),
}

impl Default for PrbGrid {
    fn default() -> Self {
        PrbGrid {
            count: PRBS,
            width: PRB_BANDWIDTH,
            first_edge: (CHANNEL_BANDWIDTH - PRBS as f64 * PRB_BANDWIDTH) / 2.0,
            central: (CENTRAL_PRBS.start, CENTRAL_PRBS.end),
        }
    }
}

impl PrbGrid {
    pub fn span(&self, prb: usize) -> (f64, f64) {
        let lo = self.first_edge + self.width * prb as f64;
        (lo, lo + self.width)
    }

    pub fn is_central(&self, prb: usize) -> bool {
        prb >= self.central.0 && prb < self.central.1
    }

    /// Bandwidth occupied by all PRBs.
    pub fn occupied(&self) -> f64 {
        self.width * self.count as f64
    }

    /// Smallest run of PRBs overlapping `[lo, hi)`, clipped to the raster.
    pub fn cover(&self, lo: f64, hi: f64) -> Range<usize> {
        if hi <= lo {
            return 0..0;
        }
        let first = math::floor((lo - self.first_edge) / self.width).max(0.0);
        let last = (-math::floor(-(hi - self.first_edge) / self.width)).min(self.count as f64);
        if last <= first {
            return 0..0;
        }
        first as usize..last as usize
    }
}

/// Where the reserved carriers sit inside the sector's traffic block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum WindowPosition {
    /// Block edge farthest from the channel centre.
    #[default]
    FarEdge,
    /// Explicit offset (in carriers) from the start of the block.
    Offset(usize),
}

/// GSM carriers kept free of LTE in one sector, and the PRBs punctured for them.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Reservation {
    pub sector: usize,
    pub carriers: Range<usize>,
    pub prbs: Vec<usize>,
    /// True when the requested window hit the sync region and was moved.
    pub relocated: bool,
}

/// Reserves `reserved_hz` of contiguous carriers inside `sector`'s traffic
/// block and returns the minimal PRB set covering them. A window whose cover
/// touches the central PRBs is moved to the nearest window that does not.
pub fn reserve_prbs(
    grid: &CarrierGrid,
    prbs: &PrbGrid,
    sector: usize,
    reserved_hz: f64,
    position: WindowPosition,
) -> Result<Reservation> {
    ensure!(sector < SECTORS, "sector", "must be < {SECTORS}, got {sector}");
    ensure!(
        reserved_hz >= 0.0 && reserved_hz.is_finite(),
        "reserved_bandwidth",
        "must be >= 0, got {reserved_hz}"
    );
    let n_f = math::round(reserved_hz / CARRIER_BANDWIDTH);
    ensure!(
        (n_f * CARRIER_BANDWIDTH - reserved_hz).abs() < 1.0,
        "reserved_bandwidth",
        "must be a multiple of {CARRIER_BANDWIDTH} Hz, got {reserved_hz}"
    );
    let n = n_f as usize;
    ensure!(
        n <= TRAFFIC_CARRIERS_PER_SECTOR,
        "reserved_bandwidth",
        "{n} carriers exceed the {TRAFFIC_CARRIERS_PER_SECTOR}-carrier sector block"
    );
    let block = grid.traffic_block(sector);
    if n == 0 {
        return Ok(Reservation {
            sector,
            carriers: block.start..block.start,
            prbs: Vec::new(),
            relocated: false,
        });
    }

    let last_start = block.end - n;
    let preferred = match position {
        WindowPosition::FarEdge => {
            let (lo, hi) = grid.span_of(block.clone());
            let centre = CHANNEL_BANDWIDTH / 2.0;
            if (centre - lo).abs() >= (hi - centre).abs() {
                block.start
            } else {
                last_start
            }
        }
        WindowPosition::Offset(off) => {
            ensure!(
                block.start + off <= last_start,
                "reserved_offset",
                "offset {off} leaves no room for {n} carriers in a {TRAFFIC_CARRIERS_PER_SECTOR}-carrier block"
            );
            block.start + off
        }
    };

    let cover_of = |start: usize| {
        let (lo, hi) = grid.span_of(start..start + n);
        prbs.cover(lo, hi)
    };
    let feasible = |start: usize| !cover_of(start).any(|j| prbs.is_central(j));

    let chosen = (block.start..=last_start)
        .filter(|&s| feasible(s))
        .min_by_key(|&s| (s.abs_diff(preferred), s))
        .ok_or_else(|| {
            Error::Infeasible(format!(
                "every {n}-carrier window in sector {sector} overlaps the central PRBs {}..{}",
                prbs.central.0, prbs.central.1
            ))
        })?;

    Ok(Reservation {
        sector,
        carriers: chosen..chosen + n,
        prbs: cover_of(chosen).collect(),
        relocated: chosen != preferred,
    })
}

/// `R_s` such that `π R_s² = fraction · sector_area`.
pub fn size_guard_region(sector_area: f64, reserved_fraction: f64) -> f64 {
    math::sqrt(reserved_fraction * sector_area / PI)
}

/// Reserved bandwidth proportional to the guard-area fraction of a sector,
/// rounded to whole carriers. A sector's share of the block is a third.
pub fn reserved_bandwidth_for_area(area_fraction: f64) -> f64 {
    let share = CHANNEL_BANDWIDTH / SECTORS as f64;
    math::round(area_fraction * share / CARRIER_BANDWIDTH) * CARRIER_BANDWIDTH
}

/// LTE band widths `(B_1, B_2, B_3)`: the occupied bandwidth split evenly
/// between the three sector bands, with the reserved part removed from the
/// band of the serving sector.
pub fn band_partition(prbs: &PrbGrid, reserved_hz: f64) -> Result<[f64; 3]> {
    let share = prbs.occupied() / SECTORS as f64;
    ensure!(
        reserved_hz >= 0.0 && reserved_hz < share,
        "reserved_bandwidth",
        "must lie in [0, {share}) Hz, got {reserved_hz}"
    );
    Ok([share - reserved_hz, share, share])
}

/// Physical cell IDs whose control-format indicator avoids the reserved PRBs.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CellIdPlan {
    pub ids: Vec<u16>,
    pub feasible: bool,
}

pub const PHYSICAL_CELL_IDS: u16 = 504;

/// PRBs holding the four PCFICH resource-element groups of a cell.
pub fn pcfich_prbs(prbs: &PrbGrid, cell_id: u16) -> [usize; 4] {
    let n_rb = prbs.count;
    let subcarriers = 12 * n_rb;
    let k_bar = 6 * (cell_id as usize % (2 * n_rb));
    core::array::from_fn(|i| ((k_bar + i * (n_rb / 2) * 6) % subcarriers) / 12)
}

/// Up to `max_count` cell IDs (lowest first) whose PCFICH misses `reserved`.
pub fn allowed_cell_ids(prbs: &PrbGrid, reserved: &[usize], max_count: usize) -> CellIdPlan {
    let ids: Vec<u16> = (0..PHYSICAL_CELL_IDS)
        .filter(|&id| pcfich_prbs(prbs, id).iter().all(|p| !reserved.contains(p)))
        .take(max_count)
        .collect();
    let feasible = !ids.is_empty();
    CellIdPlan { ids, feasible }
}

/// Mean co-channel GSM interference plus noise seen on a 200 kHz carrier at
/// the guard border.
fn guard_border_floor(ctx: &AnalysisContext) -> Result<f64> {
    let i0 = ctx.cochannel_field()?.mean(&ctx.quadrature)?;
    Ok(i0 + ctx.radio.noise_power(CARRIER_BANDWIDTH)?)
}

/// Largest `P_l` (W) keeping the mean SINR loss of a GSM user at distance
/// `R_s` from the small cell within `max_degradation_db`.
pub fn calibrate_power(ctx: &AnalysisContext, max_degradation_db: f64) -> Result<f64> {
    ensure!(
        max_degradation_db >= 0.0 && max_degradation_db.is_finite(),
        "max_degradation_db",
        "must be >= 0, got {max_degradation_db}"
    );
    let rs = ctx.geometry.guard_radius;
    ensure!(rs > 0.0, "guard_radius", "must be > 0, got {rs}");
    let floor = guard_border_floor(ctx)?;
    let p_hat = math::exp_m1(max_degradation_db * math::ln(10.0) / 10.0) * floor / ctx.radio.distance_gain(rs);
    Ok(p_hat / ctx.radio.l0)
}

/// Mean SINR loss (dB) at the guard border caused by an LTE power `p_l` (W).
pub fn guard_border_degradation_db(ctx: &AnalysisContext, p_l: f64) -> Result<f64> {
    let floor = guard_border_floor(ctx)?;
    let lte = p_l * ctx.radio.l0 * ctx.radio.distance_gain(ctx.geometry.guard_radius);
    Ok(math::linear_to_db((floor + lte) / floor))
}
