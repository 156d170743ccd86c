use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dsr::bundle::ResultBundle;
use dsr::config::ScenarioConfig;
use tempfile::TempDir;

fn dsr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dsr"))
        .args(args)
        .env_remove("DSR_WORKERS")
        .output()
        .expect("spawn dsr")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("scenario.toml");
    fs::write(&path, text).unwrap();
    path
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    rdr.records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect()
}

#[test]
fn defaults_round_trip_through_toml() {
    let out = dsr(&["defaults"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(ScenarioConfig::from_toml_str(&text).unwrap(), ScenarioConfig::default());
}

#[test]
fn analysis_rate_is_repeatable_and_round_trips() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let out = dsr(&["rate", "--mode", "analysis", "-o", dir.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        assert!(String::from_utf8_lossy(&out.stdout).contains("Analysis"));
    }
    for file in ["rate.json", "rate.csv"] {
        assert_eq!(
            fs::read(a.join(file)).unwrap(),
            fs::read(b.join(file)).unwrap(),
            "{file}"
        );
    }

    let json = fs::read_to_string(a.join("rate.json")).unwrap();
    let bundle = ResultBundle::from_json(&json).unwrap();
    assert_eq!(bundle.to_json(), json);
    assert_eq!(bundle.tables.rate.len(), 4);
    assert!(bundle
        .tables
        .rate
        .iter()
        .all(|r| r.config_hash == bundle.meta.config_hash));
    assert!(bundle.meta.timestamp_unix.is_none());

    let text = fs::read_to_string(a.join("rate.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "ue_x,ue_y,mode,rate_bps,ci_halfwidth");
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn stamp_adds_a_timestamp() {
    let tmp = TempDir::new().unwrap();
    let out = dsr(&["plan", "--stamp", "-o", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let bundle = ResultBundle::read(&tmp.path().join("plan.json")).unwrap();
    assert!(bundle.meta.timestamp_unix.is_some());
}

#[test]
fn empty_position_list_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let out = dsr(&["rate", "--ue-positions", "", "-o", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("position"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(code(&dsr(&["rate", "--no-such-flag"])), 2);
    assert_eq!(code(&dsr(&["--workers", "0", "plan"])), 2);
}

#[test]
fn config_errors_name_the_field() {
    let tmp = TempDir::new().unwrap();
    let out_dir = tmp.path().join("out");
    let cases = [
        ("[geometry]\nmacro_side = -5.0\n", "macro_side"),
        ("[radio]\npath_loss_exponent = 1.5\n", "path_loss_exponent"),
        ("[geometry]\nno_such_key = 1\n", "no_such_key"),
        ("[bands]\nbandwidths_hz = [3e6, 3e6, 3e6]\n", "bands"),
        ("[run]\nue_positions = [[100.0, 0.0]]\n", "ue_positions"),
    ];
    for (text, field) in cases {
        let cfg = write_config(tmp.path(), text);
        let out = dsr(&[
            "rate",
            "--mode",
            "analysis",
            "-c",
            cfg.to_str().unwrap(),
            "-o",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 3, "{text}: {}", stderr(&out));
        assert!(stderr(&out).contains(field), "{text}: {}", stderr(&out));
    }
}

#[test]
fn missing_config_file_is_an_io_error() {
    let out = dsr(&["plan", "-c", "/nonexistent/scenario.toml"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn default_plan_has_48_carriers_and_three_reservations() {
    let tmp = TempDir::new().unwrap();
    let out = dsr(&["plan", "-o", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let plan = ResultBundle::read(&tmp.path().join("plan.json")).unwrap().plan.unwrap();
    assert_eq!(plan.carriers.len(), 48);
    assert_eq!(plan.sectors.len(), 3);
    assert!(plan.lte_power_w > 0.0);
    for s in &plan.sectors {
        assert_eq!(s.reserved_carriers.len(), 5);
        assert!(!s.reserved_prbs.is_empty());
        assert!(s.reserved_prbs.iter().all(|p| !(22..28).contains(p)));
        assert!(!s.allowed_cell_ids.is_empty());
    }
}

#[test]
fn zero_reservation_plan_is_empty() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "[bands]\nbandwidths_hz = [3e6, 3e6, 3e6]\nreserved_hz = 0.0\n",
    );
    let out = dsr(&["plan", "-c", cfg.to_str().unwrap(), "-o", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let plan = ResultBundle::read(&tmp.path().join("plan.json")).unwrap().plan.unwrap();
    for s in &plan.sectors {
        assert!(s.reserved_carriers.is_empty());
        assert!(s.reserved_prbs.is_empty());
    }
}

#[test]
fn central_overlap_plan_is_infeasible() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "[bands]\nbandwidths_hz = [0.4e6, 3e6, 3e6]\nreserved_hz = 2.6e6\n",
    );
    let out = dsr(&["plan", "-c", cfg.to_str().unwrap(), "-o", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&out), 5, "{}", stderr(&out));
    assert!(!tmp.path().join("plan.json").exists());
}

#[test]
fn dsr_without_annulus_matches_no_lte() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "[geometry]\nguard_annulus = 0.0\n");
    let out = dsr(&[
        "outage",
        "--mode",
        "analysis",
        "--scenarios",
        "no_lte,dsr",
        "--thresholds",
        "-10:20:5",
        "-c",
        cfg.to_str().unwrap(),
        "-o",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = ResultBundle::read(&tmp.path().join("outage.json"))
        .unwrap()
        .tables
        .outage;
    let curve = |label: &str| -> Vec<f64> { rows.iter().filter(|r| r.scenario == label).map(|r| r.p_out).collect() };
    let (none, dsr_avg) = (curve("avg/no_lte"), curve("avg/dsr"));
    assert_eq!(none.len(), 7);
    for (a, b) in none.iter().zip(&dsr_avg) {
        assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
    }
    assert_eq!(curve("analysis/no_lte"), curve("analysis/dsr"));
    assert!(none.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn outage_csv_has_blank_probe_fields_for_averages() {
    let tmp = TempDir::new().unwrap();
    let out = dsr(&[
        "outage",
        "--mode",
        "analysis",
        "--thresholds",
        "0,10",
        "-o",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = csv_rows(&tmp.path().join("outage.csv"));
    // 3 probes × 3 scenarios + 3 averages, two thresholds each.
    assert_eq!(rows.len(), 24);
    for r in &rows {
        assert_eq!(r[0].is_empty(), r[2].starts_with("avg/"));
        let p: f64 = r[4].parse().unwrap();
        assert!((0.0..=1.0).contains(&p));
    }
}

#[test]
fn single_point_sweep_has_one_row() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "[run]\nsweep_n_drops = 4\nsweep_n_tti = 5\n");
    let out = dsr(&[
        "sweep",
        "--d-grid",
        "350",
        "--theta-grid",
        "0",
        "-c",
        cfg.to_str().unwrap(),
        "-o",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = csv_rows(&tmp.path().join("sweep.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0].parse::<f64>().unwrap(), 350.0);
    assert!(rows[0][2].parse::<f64>().unwrap() > 0.0);
}

#[test]
fn all_invalid_sweep_is_empty_with_a_warning() {
    let tmp = TempDir::new().unwrap();
    let out = dsr(&[
        "sweep",
        "--d-grid",
        "300",
        "--theta-grid",
        "58,59",
        "-o",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = fs::read_to_string(tmp.path().join("sweep.csv")).unwrap();
    assert_eq!(text, "d,theta,mean_rate_bps,ci\n");
    assert!(stderr(&out).contains("no valid placement"));
    let bundle = ResultBundle::read(&tmp.path().join("sweep.json")).unwrap();
    assert!(bundle.tables.sweep.is_empty());
    assert!(!bundle.warnings.is_empty());
}

#[test]
fn sim_rate_is_identical_across_worker_counts() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "[sim]\nn_drops = 300\nn_tti = 10\n");
    let mut outputs = Vec::new();
    for workers in ["1", "3"] {
        let dir = tmp.path().join(workers);
        let out = dsr(&[
            "--workers",
            workers,
            "rate",
            "--mode",
            "sim",
            "-c",
            cfg.to_str().unwrap(),
            "-o",
            dir.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        outputs.push(fs::read(dir.join("rate.json")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn debug_log_lists_every_record() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "[sim]\nn_drops = 2\nn_tti = 3\n");
    let log = tmp.path().join("drops.csv");
    let out = dsr(&[
        "rate",
        "--mode",
        "sim",
        "--ue-positions",
        "0,10;20,-5",
        "--debug-log",
        log.to_str().unwrap(),
        "-c",
        cfg.to_str().unwrap(),
        "-o",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = fs::read_to_string(&log).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "drop_id,tti,ue_id,band,sinr_db,scheduled");
    // drops × TTIs × UEs × bands
    assert_eq!(lines.count(), 2 * 3 * 2 * 3);
}

#[test]
fn seed_flag_changes_the_hash() {
    let tmp = TempDir::new().unwrap();
    let mut hashes = Vec::new();
    for seed in ["1", "2"] {
        let dir = tmp.path().join(seed);
        let out = dsr(&["plan", "--seed", seed, "-o", dir.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        let b = ResultBundle::read(&dir.join("plan.json")).unwrap();
        assert_eq!(b.meta.seed.to_string(), seed);
        hashes.push(b.meta.config_hash);
    }
    assert_ne!(hashes[0], hashes[1]);
}
