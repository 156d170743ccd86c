//! The four runs behind the CLI subcommands. Each returns a [`ResultBundle`];
//! writing files is left to the caller.

use std::io::Write;

use dsr_core::analysis::{lte_user_rate, outage_curve, scenario_average_outage, OutageCurve, Scenario};
use dsr_core::math;

use crate::bundle::{CurveSummary, OutageRow, RateRow, ResultBundle, RunMeta, SweepRow};
use crate::config::{Resolved, ScenarioConfig};
use crate::engine::Engine;
use crate::error::{CliError, Result};
use crate::planning::build_plan;

/// Outage level at which curve offsets are summarised.
pub const SUMMARY_OUTAGE: f64 = 0.1;

fn new_bundle(command: &str, r: &Resolved, stamp: bool) -> ResultBundle {
    ResultBundle::new(RunMeta::new(command, &r.hash, r.config.seed, stamp), r.config.clone())
}

/// Per-UE rates by analysis and/or simulation, plus the gap columns in
/// `both` mode.
pub fn cmd_rate(
    config: &ScenarioConfig,
    engine: &Engine,
    stamp: bool,
    debug_log: Option<&mut dyn Write>,
) -> Result<ResultBundle> {
    if config.run.ue_positions.is_empty() {
        return Err(CliError::Usage("the rate run needs at least one UE position".into()));
    }
    let r = config.resolve()?;
    let mode = r.config.run.rate_mode;
    let offsets = r.ue_offsets();
    let mut bundle = new_bundle("rate", &r, stamp);

    let analysis = if mode.analysis() {
        let ctx = r.rate_analysis(offsets.len());
        let rates = engine.map(offsets.len(), |i| lte_user_rate(offsets[i].norm(), &ctx));
        Some(rates.into_iter().collect::<dsr_core::Result<Vec<f64>>>()?)
    } else {
        None
    };
    let sim = if mode.sim() {
        Some(engine.rate_sim(&r.sim, &offsets, debug_log)?)
    } else {
        None
    };

    let row = |i: usize, mode: &str, rate_bps: f64, ci_halfwidth: f64| RateRow {
        config_hash: r.hash.clone(),
        ue_x: offsets[i].x,
        ue_y: offsets[i].y,
        mode: mode.into(),
        rate_bps,
        ci_halfwidth,
    };
    for i in 0..offsets.len() {
        if let Some(a) = &analysis {
            bundle.tables.rate.push(row(i, "analysis", a[i], 0.0));
        }
        if let Some(s) = &sim {
            bundle.tables.rate.push(row(i, "sim", s[i].rate_bps, s[i].ci_halfwidth));
        }
        if let (Some(a), Some(s)) = (&analysis, &sim) {
            let (a, s, ci) = (a[i], s[i].rate_bps, s[i].ci_halfwidth);
            bundle.tables.rate.push(row(i, "gap", s - a, ci));
            if s > 0.0 {
                // Delta-method half-width of 1 − a/s.
                bundle
                    .tables
                    .rate
                    .push(row(i, "gap_over_sim", (s - a) / s, ci * a / (s * s)));
            } else {
                bundle.warnings.push(format!(
                    "UE ({}, {}): simulated rate is zero, gap/sim undefined",
                    offsets[i].x, offsets[i].y
                ));
            }
        }
    }
    Ok(bundle)
}

fn curve_summary(r: &Resolved, scenario: String, probe: Option<(f64, f64)>, curve: &OutageCurve) -> CurveSummary {
    CurveSummary {
        config_hash: r.hash.clone(),
        scenario,
        probe_r: probe.map(|p| p.0),
        probe_psi: probe.map(|p| p.1.to_degrees()),
        threshold_db_at_10pct: curve.threshold_at(SUMMARY_OUTAGE),
    }
}

/// Per-probe outage curves by analysis and/or simulation, and the analytical
/// disk averages of every requested scenario.
pub fn cmd_outage(config: &ScenarioConfig, engine: &Engine, stamp: bool) -> Result<ResultBundle> {
    let run = &config.run;
    if run.thresholds_db.is_empty() {
        return Err(CliError::Usage("the outage run needs at least one threshold".into()));
    }
    if run.scenarios.is_empty() {
        return Err(CliError::Usage("the outage run needs at least one scenario".into()));
    }
    if matches!(&run.probes, Some(p) if p.is_empty()) {
        return Err(CliError::Usage("the outage run needs at least one probe".into()));
    }
    let r = config.resolve()?;
    let run = &r.config.run;
    let mode = run.outage_mode;
    let probes = r.probes()?;
    let thresholds = &run.thresholds_db;
    let nt = thresholds.len();
    let scenarios = &run.scenarios;
    let rs = r.geometry.guard_radius;
    let mut bundle = new_bundle("outage", &r, stamp);

    let push_curve =
        |bundle: &mut ResultBundle, label: String, probe: Option<(f64, f64)>, points: Vec<(f64, f64, f64)>| {
            for (t, &(p, lo, hi)) in thresholds.iter().zip(&points) {
                bundle.tables.outage.push(OutageRow {
                    config_hash: r.hash.clone(),
                    probe_r: probe.map(|p| p.0),
                    probe_psi: probe.map(|p| p.1.to_degrees()),
                    scenario: label.clone(),
                    threshold_db: *t,
                    p_out: p,
                    ci_lo: lo,
                    ci_hi: hi,
                });
            }
            let curve = OutageCurve {
                thresholds_db: thresholds.clone(),
                probabilities: points.iter().map(|p| p.0).collect(),
            };
            let summary = curve_summary(&r, label, probe, &curve);
            bundle.curves.push(summary);
        };

    if mode.analysis() {
        let jobs: Vec<(usize, Scenario)> = (0..probes.len())
            .flat_map(|p| scenarios.iter().map(move |&s| (p, s)))
            .collect();
        let curves = engine.map(jobs.len(), |j| {
            let (p, s) = jobs[j];
            let (rr, psi) = probes[p];
            outage_curve(rr, psi, thresholds, s.lte_at(rr, rs), &r.analysis)
        });
        for (&(p, s), curve) in jobs.iter().zip(curves) {
            let curve = curve?;
            let points = curve.probabilities.iter().map(|&x| (x, x, x)).collect();
            push_curve(&mut bundle, format!("analysis/{}", s.name()), Some(probes[p]), points);
        }
    }

    if mode.sim() {
        let needs = |lte: bool| {
            scenarios
                .iter()
                .any(|s| probes.iter().any(|p| s.lte_at(p.0, rs) == lte))
        };
        let mut by_lte = [None, None];
        for lte in [false, true] {
            if needs(lte) {
                by_lte[lte as usize] = Some(engine.outage_sim(&r.sim, &probes, thresholds, lte)?);
            }
        }
        for (p, &probe) in probes.iter().enumerate() {
            for &s in scenarios {
                let est = by_lte[s.lte_at(probe.0, rs) as usize]
                    .as_ref()
                    .expect("simulated above");
                let points = est[p * nt..(p + 1) * nt]
                    .iter()
                    .map(|e| (e.p_out, e.ci_lo, e.ci_hi))
                    .collect();
                push_curve(&mut bundle, format!("sim/{}", s.name()), Some(probe), points);
            }
        }
    }

    let averages = engine.map(scenarios.len() * nt, |j| {
        let t = math::db_to_linear(thresholds[j % nt]);
        scenario_average_outage(scenarios[j / nt], t, &r.analysis)
    });
    let averages = averages.into_iter().collect::<dsr_core::Result<Vec<f64>>>()?;
    for (&s, chunk) in scenarios.iter().zip(averages.chunks(nt)) {
        let points = chunk.iter().map(|&p| (p, p, p)).collect();
        push_curve(&mut bundle, format!("avg/{}", s.name()), None, points);
    }
    Ok(bundle)
}

/// Small-cell throughput over a `(D, θ)` grid; placements whose guard region
/// leaves the serving sector are skipped with a warning.
pub fn cmd_sweep(config: &ScenarioConfig, engine: &Engine, stamp: bool) -> Result<ResultBundle> {
    let run = &config.run;
    if run.d_grid.is_empty() || run.theta_grid_deg.is_empty() {
        return Err(CliError::Usage("the sweep needs non-empty D and θ grids".into()));
    }
    let r = config.resolve()?;
    let run = &r.config.run;
    let mut sim = r.sim.clone();
    sim.n_drops = run.sweep_n_drops;
    sim.n_tti = run.sweep_n_tti;
    let positions: Vec<(f64, f64)> = run
        .d_grid
        .iter()
        .flat_map(|&d| run.theta_grid_deg.iter().map(move |&t| (d, t.to_radians())))
        .collect();
    let points = engine.sweep(&sim, &positions, run.sweep_n_ues)?;
    let mut bundle = new_bundle("sweep", &r, stamp);
    let mut invalid = 0;
    for p in points {
        if p.valid {
            bundle.tables.sweep.push(SweepRow {
                config_hash: r.hash.clone(),
                d: p.d,
                theta: p.theta.to_degrees(),
                mean_rate_bps: p.mean_rate_bps,
                ci: p.ci,
            });
        } else {
            invalid += 1;
            bundle.warnings.push(format!(
                "placement (D = {}, θ = {}°) skipped: guard region leaves the serving sector",
                p.d,
                math::round(p.theta.to_degrees() * 1e9) / 1e9
            ));
        }
    }
    if invalid == positions.len() {
        bundle.warnings.push("no valid placement in the sweep grid".into());
    }
    Ok(bundle)
}

/// Carrier grid, punctured PRBs, cell IDs, `R_s` and calibrated `P_l`.
pub fn cmd_plan(config: &ScenarioConfig, stamp: bool) -> Result<ResultBundle> {
    let r = config.resolve()?;
    let mut bundle = new_bundle("plan", &r, stamp);
    let plan = build_plan(&r)?;
    for s in plan.sectors.iter().filter(|s| s.relocated) {
        bundle.warnings.push(format!(
            "sector {}: reserved window moved to carriers {:?} to keep clear of the central PRBs",
            s.sector, s.reserved_carriers
        ));
    }
    bundle.plan = Some(plan);
    Ok(bundle)
}
