use dsr_core::analysis::{gsm_outage, lte_user_rate, outage_curve, scenario_average_outage, AnalysisContext, Scenario};
use dsr_core::geometry::{NetworkGeometry, Point2};
use dsr_core::math::db_to_linear;
use dsr_core::plan::{build_carrier_grid, calibrate_power, reserve_prbs, PrbGrid, WindowPosition, CENTRAL_PRBS};
use dsr_core::radio::RadioParams;
use dsr_core::simulator::{run_outage_sim, run_rate_sim, Placement, Scheduler, SimConfig};
use proptest::prelude::*;

fn context(d: f64) -> AnalysisContext {
    let mut ctx = AnalysisContext::table_one(NetworkGeometry::with_distance(d), RadioParams::table_one()).unwrap();
    ctx.radio.lte_power = calibrate_power(&ctx, 1.0).unwrap();
    ctx
}

fn sim_config(ctx: &AnalysisContext) -> SimConfig {
    let mut cfg = SimConfig::table_one(ctx.geometry, ctx.radio);
    cfg.n_drops = 40;
    cfg.n_tti = 20;
    cfg
}

#[test]
fn rate_falls_with_distance_from_the_small_cell() {
    let ctx = context(350.0);
    let rates: Vec<f64> = [5.0, 15.0, 25.0, 35.0, 45.0]
        .iter()
        .map(|&r| lte_user_rate(r, &ctx).unwrap())
        .collect();
    assert!(rates.windows(2).all(|w| w[1] < w[0]), "{rates:?}");
}

#[test]
fn outage_curve_is_a_cdf() {
    let ctx = context(350.0);
    let thresholds: Vec<f64> = (-10..=20).map(f64::from).collect();
    let probes = ctx.geometry.reference_probes().unwrap();
    for (r, psi) in probes {
        for lte in [false, true] {
            let c = outage_curve(r, psi, &thresholds, lte, &ctx).unwrap();
            assert!(c.is_valid_cdf());
        }
        let t = db_to_linear(5.0);
        assert!(gsm_outage(r, psi, t, false, &ctx).unwrap() <= gsm_outage(r, psi, t, true, &ctx).unwrap());
    }
}

#[test]
fn scenario_averages_are_ordered() {
    let ctx = context(350.0);
    for t_db in [-5.0, 0.0, 10.0] {
        let t = db_to_linear(t_db);
        let p = |s| scenario_average_outage(s, t, &ctx).unwrap();
        assert!(p(Scenario::NoLte) <= p(Scenario::Dsr) + 1e-12);
        assert!(p(Scenario::Dsr) <= p(Scenario::DirectOverlay) + 1e-12);
    }
}

#[test]
fn simulation_is_a_function_of_the_seed() {
    let ctx = context(350.0);
    let ues = [Point2::new(-22.1, 4.6), Point2::new(30.0, -35.8)];
    let cfg = sim_config(&ctx);
    let a = run_rate_sim(&cfg, &ues).unwrap();
    assert_eq!(a, run_rate_sim(&cfg, &ues).unwrap());
    let mut other = cfg.clone();
    other.seed += 1;
    assert_ne!(a, run_rate_sim(&other, &ues).unwrap());
}

#[test]
fn ppp_outage_tracks_the_analysis() {
    let mut ctx = context(350.0);
    let mut cfg = sim_config(&ctx);
    cfg.placement = Placement::Ppp { field_radius: 5000.0 };
    cfg.scheduler = Scheduler::RoundRobin;
    cfg.n_drops = 20_000;
    cfg.n_tti = 1;
    ctx.field_radius = Some(5000.0);
    let probes = ctx.geometry.reference_probes().unwrap();
    let res = run_outage_sim(&cfg, &probes, &[0.0, 10.0], false).unwrap();
    for e in res.outages {
        let a = gsm_outage(e.probe.0, e.probe.1, db_to_linear(e.threshold_db), false, &ctx).unwrap();
        // Wide band: this is a smoke check, the acceptance suite runs the tight one.
        assert!((a - e.p_out).abs() < 0.02, "{a} vs {}", e.p_out);
    }
}

proptest! {
    #[test]
    fn reservations_avoid_the_central_prbs(sector in 0usize..3, carriers in 0usize..=13, offset in 0usize..13) {
        let grid = build_carrier_grid();
        let prbs = PrbGrid::default();
        let hz = carriers as f64 * 200e3;
        for w in [WindowPosition::FarEdge, WindowPosition::Offset(offset.min(13 - carriers))] {
            if let Ok(res) = reserve_prbs(&grid, &prbs, sector, hz, w) {
                prop_assert_eq!(res.carriers.len(), carriers);
                prop_assert!(res.prbs.iter().all(|p| !CENTRAL_PRBS.contains(p)));
            }
        }
    }

    #[test]
    fn probe_conversion_round_trips(d in 100.0f64..900.0, theta in -1.0f64..1.0, bs_d in 1.0f64..2000.0, az in -3.1f64..3.1) {
        let mut g = NetworkGeometry::with_distance(d);
        g.small_cell_azimuth = theta;
        let (r, psi) = g.small_cell_relative(bs_d, az);
        let back = g.user_position(r, psi);
        prop_assert!(back.distance(Point2::polar(bs_d, az)) < 1e-9);
    }
}
