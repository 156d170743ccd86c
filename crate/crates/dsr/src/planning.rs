//! Plan export: carrier assignments, punctured PRBs, allowed cell IDs, `R_s`
//! and the calibrated small-cell power.

use dsr_core::geometry::SECTORS;
use dsr_core::plan::{
    allowed_cell_ids, band_partition, build_carrier_grid, guard_border_degradation_db, reserve_prbs, CarrierUse,
    PrbGrid,
};
use serde::{Deserialize, Serialize};

use crate::config::Resolved;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarrierEntry {
    pub index: usize,
    pub center_hz: f64,
    /// `traffic` or `control`.
    pub usage: String,
    pub sector: usize,
    /// Reuse colour of a control carrier.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorPlan {
    pub sector: usize,
    pub traffic_carriers: Vec<usize>,
    pub reserved_carriers: Vec<usize>,
    pub reserved_prbs: Vec<usize>,
    /// The configured window hit the central PRBs and was moved.
    pub relocated: bool,
    pub allowed_cell_ids: Vec<u16>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanDocument {
    pub config_hash: String,
    pub guard_radius_m: f64,
    pub lte_power_w: f64,
    /// Mean GSM SINR loss at the guard border caused by `lte_power_w`.
    pub guard_border_degradation_db: f64,
    pub reserved_hz: f64,
    /// `(B_1, B_2, B_3)` implied by the reservation.
    pub band_partition_hz: [f64; 3],
    pub central_prbs: [usize; 2],
    pub carriers: Vec<CarrierEntry>,
    pub sectors: Vec<SectorPlan>,
}

/// Builds the spectrum plan of a resolved config.
pub fn build_plan(r: &Resolved) -> Result<PlanDocument> {
    let grid = build_carrier_grid();
    let prbs = PrbGrid::default();
    let reserved_hz = r.config.bands.reserved_hz;
    let carriers = grid
        .carriers
        .iter()
        .map(|c| {
            let (usage, sector, color) = match c.usage {
                CarrierUse::Traffic { sector } => ("traffic", sector, None),
                CarrierUse::Control { color, sector } => ("control", sector, Some(color)),
            };
            CarrierEntry {
                index: c.index,
                center_hz: c.center_hz,
                usage: usage.into(),
                sector,
                color,
            }
        })
        .collect();

    let mut sectors = Vec::with_capacity(SECTORS);
    for sector in 0..SECTORS {
        let res = reserve_prbs(&grid, &prbs, sector, reserved_hz, r.config.plan.window)?;
        let ids = allowed_cell_ids(&prbs, &res.prbs, r.config.plan.max_cell_ids);
        if !ids.feasible {
            return Err(CliError::Infeasible(format!(
                "no physical cell ID keeps its PCFICH off the reserved PRBs {:?} of sector {sector}",
                res.prbs
            )));
        }
        sectors.push(SectorPlan {
            sector,
            traffic_carriers: grid.traffic_block(sector).collect(),
            reserved_carriers: res.carriers.clone().collect(),
            reserved_prbs: res.prbs,
            relocated: res.relocated,
            allowed_cell_ids: ids.ids,
        });
    }

    Ok(PlanDocument {
        config_hash: r.hash.clone(),
        guard_radius_m: r.geometry.guard_radius,
        lte_power_w: r.radio.lte_power,
        guard_border_degradation_db: guard_border_degradation_db(&r.analysis, r.radio.lte_power)?,
        reserved_hz,
        band_partition_hz: band_partition(&prbs, reserved_hz)?,
        central_prbs: [prbs.central.0, prbs.central.1],
        carriers,
        sectors,
    })
}
