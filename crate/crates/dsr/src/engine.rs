//! Parallel drop execution.
//!
//! Drops run on a rayon pool in chunks; each chunk is collected in drop
//! order and folded sequentially into the core accumulators. Since every
//! drop owns its random stream, results are bit-identical for any worker
//! count.

use std::io::Write;

use dsr_core::geometry::{Point2, SECTORS};
use dsr_core::math;
use dsr_core::simulator::{
    finish_rates, outage_drop, rate_drop, sweep_drop, sweep_geometry, CountAccumulator, DropRecord, MeanAccumulator,
    OutageEstimate, OutageScene, RateEstimate, RateScene, SimConfig, SweepPoint,
};
use rayon::prelude::*;

use crate::error::{CliError, Result};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "DSR_WORKERS";

/// Drops materialised at once; bounds memory when drops are recorded.
const CHUNK: usize = 256;

pub struct Engine {
    pool: rayon::ThreadPool,
}

impl Engine {
    pub fn new(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(CliError::Usage("worker count must be >= 1".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {workers} workers: {e}")))?;
        Ok(Engine { pool })
    }

    /// `flag`, else `DSR_WORKERS`, else the available parallelism.
    pub fn worker_count(flag: Option<usize>) -> Result<usize> {
        let n = match (flag, std::env::var(WORKERS_ENV)) {
            (Some(n), _) => n,
            (None, Ok(v)) => v
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("{WORKERS_ENV}={v:?} is not a worker count")))?,
            (None, Err(_)) => return Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
        };
        if n == 0 {
            return Err(CliError::Usage("the worker count must be at least 1".into()));
        }
        Ok(n)
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// `f(0..n)` evaluated in parallel, returned in index order.
    pub fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..n).into_par_iter().map(f).collect())
    }

    /// Runs `f` for every drop and hands the outcomes to `sink` in drop order.
    pub fn for_each_drop<T, F, S>(&self, n_drops: u64, f: F, mut sink: S) -> Result<()>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
        S: FnMut(u64, T) -> Result<()>,
    {
        let mut start = 0u64;
        while start < n_drops {
            let len = (n_drops - start).min(CHUNK as u64) as usize;
            let chunk = self.map(len, |i| f(start + i as u64));
            for (i, out) in chunk.into_iter().enumerate() {
                sink(start + i as u64, out)?;
            }
            start += len as u64;
        }
        Ok(())
    }

    /// Per-UE mean rates; with `log`, every drop is recorded and written out.
    pub fn rate_sim(
        &self,
        cfg: &SimConfig,
        offsets: &[Point2],
        mut log: Option<&mut dyn Write>,
    ) -> Result<Vec<RateEstimate>> {
        let scene = RateScene::new(cfg, offsets)?;
        let record = log.is_some();
        let mut acc = MeanAccumulator::new(scene.len());
        self.for_each_drop(
            cfg.n_drops,
            |d| rate_drop(cfg, &scene, d, record),
            |_, out| {
                let out = out?;
                acc.push(&out.rates);
                if let (Some(w), Some(rec)) = (log.as_deref_mut(), &out.record) {
                    write_drop_record(w, rec).map_err(|e| CliError::Io {
                        context: "debug log".into(),
                        source: e,
                    })?;
                }
                Ok(())
            },
        )?;
        Ok(finish_rates(&scene, &acc))
    }

    /// Empirical outage per probe and threshold.
    pub fn outage_sim(
        &self,
        cfg: &SimConfig,
        probes: &[(f64, f64)],
        thresholds_db: &[f64],
        with_lte: bool,
    ) -> Result<Vec<OutageEstimate>> {
        let scene = OutageScene::new(cfg, probes, thresholds_db, with_lte)?;
        let mut acc = CountAccumulator::new(scene.width());
        self.for_each_drop(
            cfg.n_drops,
            |d| outage_drop(cfg, &scene, d),
            |_, counts| {
                acc.push(&counts);
                Ok(())
            },
        )?;
        Ok(acc.finish(cfg, &scene))
    }

    /// Mean small-cell throughput at each `(D, θ)`.
    pub fn sweep(&self, cfg: &SimConfig, positions: &[(f64, f64)], n_ues: usize) -> Result<Vec<SweepPoint>> {
        if n_ues == 0 {
            return Err(CliError::Usage("a sweep needs at least one UE per drop".into()));
        }
        let mut out = Vec::with_capacity(positions.len());
        for (index, &(d, theta)) in positions.iter().enumerate() {
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
            self.for_each_drop(
                cfg.n_drops,
                |drop| sweep_drop(cfg, &g, index, n_ues, drop),
                |_, rate| {
                    acc.push(&[rate?]);
                    Ok(())
                },
            )?;
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
}

/// Header of the per-drop debug log.
pub const DEBUG_LOG_HEADER: &str = "drop_id,tti,ue_id,band,sinr_db,scheduled";

/// One line per (TTI, UE, band) of a recorded drop.
pub fn write_drop_record(w: &mut dyn Write, rec: &DropRecord) -> std::io::Result<()> {
    for t in &rec.ttis {
        for (ue, sinr) in t.sinr.iter().enumerate() {
            for (band, &x) in sinr.iter().enumerate().take(SECTORS) {
                writeln!(
                    w,
                    "{},{},{},{},{},{}",
                    rec.drop,
                    t.tti,
                    ue,
                    band,
                    math::linear_to_db(x),
                    u8::from(t.scheduled[band] == ue)
                )?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use dsr_core::geometry::NetworkGeometry;
    use dsr_core::radio::RadioParams;
    use dsr_core::simulator::{run_outage_sim, run_rate_sim};

    fn small_config() -> SimConfig {
        let mut rp = RadioParams::table_one();
        rp.lte_power = 0.01;
        let mut cfg = SimConfig::table_one(NetworkGeometry::with_distance(350.0), rp);
        cfg.n_drops = 300;
        cfg.n_tti = 20;
        cfg
    }

    #[test]
    fn parallel_rates_match_sequential_driver() {
        let cfg = small_config();
        let ues = [Point2::new(-22.1, 4.6), Point2::new(30.0, -35.8)];
        let seq = run_rate_sim(&cfg, &ues).unwrap().rates;
        for workers in [1, 3] {
            let par = Engine::new(workers).unwrap().rate_sim(&cfg, &ues, None).unwrap();
            assert_eq!(par, seq);
        }
    }

    #[test]
    fn parallel_outage_matches_sequential_driver() {
        let cfg = small_config();
        let probes = [(300.0, 0.5), (262.5, 3.0)];
        let t = [-5.0, 0.0, 5.0];
        let seq = run_outage_sim(&cfg, &probes, &t, true).unwrap().outages;
        let par = Engine::new(4).unwrap().outage_sim(&cfg, &probes, &t, true).unwrap();
        assert_eq!(par, seq);
    }

    #[test]
    fn debug_log_lines() {
        let mut cfg = small_config();
        cfg.n_drops = 2;
        cfg.n_tti = 3;
        let mut buf = Vec::new();
        let ues = [Point2::new(10.0, 0.0)];
        Engine::new(2).unwrap().rate_sim(&cfg, &ues, Some(&mut buf)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2 * 3 * SECTORS);
        assert!(lines[0].starts_with("0,0,0,0,"));
        assert!(lines.iter().all(|l| l.ends_with(",1")), "a single UE gets every band");
        assert!(lines.last().unwrap().starts_with("1,2,0,2,"));
    }

    #[test]
    fn zero_workers_rejected() {
        assert!(Engine::new(0).is_err());
    }
}
