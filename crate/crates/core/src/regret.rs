//! Regret measurement: slots in which the network is not at an equilibrium.

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dsee::{run_unknown_with, SlotKind, SlotRecord};
use crate::error::{Error, Result};
use crate::model::Instance;
use crate::rng::substream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegretPoint {
    pub t: u64,
    pub regret: u64,
    pub regret_over_log: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretCurve {
    pub g: f64,
    pub seed: u64,
    pub digest: String,
    pub points: Vec<RegretPoint>,
}

impl RegretCurve {
    pub fn at(&self, t: u64) -> Option<&RegretPoint> {
        self.points.iter().find(|p| p.t == t)
    }
}

/// Whether a slot counts toward regret: every exploration and routing slot,
/// and exploitation slots away from equilibrium.
pub fn is_regret_slot(r: &SlotRecord) -> bool {
    r.kind != SlotKind::Exploit || !r.at_nash
}

/// Powers of two from 2 up to `horizon`, plus `horizon` itself.
pub fn default_checkpoints(horizon: u64) -> Vec<u64> {
    let mut out: Vec<u64> = std::iter::successors(Some(2u64), |&t| t.checked_mul(2))
        .take_while(|&t| t <= horizon)
        .collect();
    if horizon >= 2 && out.last() != Some(&horizon) {
        out.push(horizon);
    }
    out
}

fn check_checkpoints(checkpoints: &[u64], len: u64) -> Result<()> {
    for w in checkpoints.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidParameter(
                "checkpoints must be strictly increasing".into(),
            ));
        }
    }
    for &c in checkpoints {
        if c < 2 {
            return Err(Error::InvalidParameter(format!(
                "checkpoint {c} is below 2, where ln T vanishes"
            )));
        }
        if c > len {
            return Err(Error::CheckpointOutOfRange { checkpoint: c, len });
        }
    }
    Ok(())
}

/// Incremental regret counter for streamed slot records.
#[derive(Debug, Clone)]
pub struct RegretCounter {
    checkpoints: Vec<u64>,
    next: usize,
    regret: u64,
    seen: u64,
    points: Vec<RegretPoint>,
}

impl RegretCounter {
    pub fn new(checkpoints: Vec<u64>) -> Self {
        RegretCounter {
            checkpoints,
            next: 0,
            regret: 0,
            seen: 0,
            points: Vec::new(),
        }
    }

    /// Records must arrive in slot order starting at `t = 1`.
    pub fn push(&mut self, r: &SlotRecord) {
        self.seen += 1;
        debug_assert_eq!(r.t, self.seen);
        if is_regret_slot(r) {
            self.regret += 1;
        }
        if self.checkpoints.get(self.next) == Some(&r.t) {
            self.points.push(RegretPoint {
                t: r.t,
                regret: self.regret,
                regret_over_log: self.regret as f64 / (r.t as f64).ln(),
            });
            self.next += 1;
        }
    }

    pub fn finish(self) -> Result<Vec<RegretPoint>> {
        check_checkpoints(&self.checkpoints, self.seen)?;
        Ok(self.points)
    }
}

/// Regret at each checkpoint of a full trace.
pub fn regret_trace(trace: &[SlotRecord], checkpoints: &[u64]) -> Result<RegretCurve> {
    check_checkpoints(checkpoints, trace.len() as u64)?;
    let mut counter = RegretCounter::new(checkpoints.to_vec());
    trace.iter().for_each(|r| counter.push(r));
    Ok(RegretCurve {
        g: f64::NAN,
        seed: 0,
        digest: String::new(),
        points: counter.finish()?,
    })
}

/// Cost-based regret at each checkpoint: realized cost minus `ne_cost` in
/// exploitation slots, and a flat `charge` for every slot without traffic.
pub fn classic_regret(trace: &[SlotRecord], checkpoints: &[u64], ne_cost: f64, charge: f64) -> Result<Vec<f64>> {
    check_checkpoints(checkpoints, trace.len() as u64)?;
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut sum = 0.0;
    let mut next = checkpoints.iter().peekable();
    for r in trace {
        sum += match r.kind {
            SlotKind::Exploit => r.realized_cost - ne_cost,
            _ => charge,
        };
        if next.peek() == Some(&&r.t) {
            out.push(sum);
            next.next();
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegretStudyConfig {
    /// Base value of `G`; the study runs `multiplier * g_base` for each multiplier.
    pub g_base: f64,
    pub multipliers: Vec<f64>,
    pub horizon: u64,
    pub replications: usize,
    /// Defaults to powers of two plus the horizon.
    pub checkpoints: Option<Vec<u64>>,
}

impl Default for RegretStudyConfig {
    fn default() -> Self {
        RegretStudyConfig {
            g_base: 20.0,
            multipliers: vec![0.1, 1.0, 4.0],
            horizon: 100_000,
            replications: 20,
            checkpoints: None,
        }
    }
}

impl RegretStudyConfig {
    pub fn checkpoints(&self) -> Vec<u64> {
        self.checkpoints
            .clone()
            .unwrap_or_else(|| default_checkpoints(self.horizon))
    }

    pub fn g_values(&self) -> Vec<f64> {
        self.multipliers.iter().map(|m| m * self.g_base).collect()
    }
}

/// Mean, min and max regret over replications at one `(G, T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub g: f64,
    pub t: u64,
    pub mean: f64,
    pub min: u64,
    pub max: u64,
    pub mean_over_log: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretStudyResult {
    pub digest: String,
    /// Ordered by `G`, then replication.
    pub curves: Vec<RegretCurve>,
    pub aggregate: Vec<AggregateRow>,
}

impl RegretStudyResult {
    pub fn aggregate_at(&self, g: f64, t: u64) -> Option<&AggregateRow> {
        self.aggregate.iter().find(|r| r.g == g && r.t == t)
    }
}

/// Seed of replication `i`, shared by every `G` so that the sweep compares
/// values of `G` on the same randomness.
pub fn replication_seed(seed: u64, i: usize) -> u64 {
    substream(seed, "replication", i as u64).next_u64()
}

/// One unknown-model run reduced to its regret curve.
pub fn regret_run(inst: &Instance, g: f64, horizon: u64, seed: u64, checkpoints: &[u64]) -> Result<RegretCurve> {
    let mut counter = RegretCounter::new(checkpoints.to_vec());
    run_unknown_with(inst, g, horizon, seed, |r| counter.push(r))?;
    Ok(RegretCurve {
        g,
        seed,
        digest: inst.digest(),
        points: counter.finish()?,
    })
}

/// Runs every `(G, replication)` cell, `jobs` at a time, and aggregates.
pub fn regret_study(inst: &Instance, cfg: &RegretStudyConfig, seed: u64, jobs: usize) -> Result<RegretStudyResult> {
    if cfg.replications == 0 || cfg.multipliers.is_empty() {
        return Err(Error::InvalidParameter(
            "regret study needs at least one G and one replication".into(),
        ));
    }
    let checkpoints = cfg.checkpoints();
    check_checkpoints(&checkpoints, cfg.horizon)?;
    let cells: Vec<(f64, u64)> = cfg
        .g_values()
        .into_iter()
        .flat_map(|g| (0..cfg.replications).map(move |i| (g, replication_seed(seed, i))))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let curves = pool.install(|| {
        cells
            .par_iter()
            .map(|&(g, s)| regret_run(inst, g, cfg.horizon, s, &checkpoints))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut aggregate = Vec::new();
    for g in cfg.g_values() {
        let group: Vec<&RegretCurve> = curves.iter().filter(|c| c.g == g).collect();
        for (i, &t) in checkpoints.iter().enumerate() {
            let values: Vec<u64> = group.iter().map(|c| c.points[i].regret).collect();
            let mean = values.iter().sum::<u64>() as f64 / values.len() as f64;
            aggregate.push(AggregateRow {
                g,
                t,
                mean,
                min: *values.iter().min().expect("nonempty"),
                max: *values.iter().max().expect("nonempty"),
                mean_over_log: mean / (t as f64).ln(),
            });
        }
    }
    Ok(RegretStudyResult {
        digest: inst.digest(),
        curves,
        aggregate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsee::run_unknown;
    use crate::model::fixtures::d1;

    fn record(t: u64, kind: SlotKind, at_nash: bool) -> SlotRecord {
        SlotRecord {
            t,
            kind,
            tag: 0,
            at_nash,
            realized_cost: 0.0,
            card: 0,
        }
    }

    #[test]
    fn checkpoints_grid() {
        assert_eq!(default_checkpoints(10), vec![2, 4, 8, 10]);
        assert_eq!(default_checkpoints(8), vec![2, 4, 8]);
        assert!(default_checkpoints(1).is_empty());
    }

    #[test]
    fn counting_convention() {
        let trace = vec![
            record(1, SlotKind::Explore, false),
            record(2, SlotKind::Explore, false),
            record(3, SlotKind::BellmanFord, false),
            record(4, SlotKind::Exploit, false),
            record(5, SlotKind::Exploit, true),
            record(6, SlotKind::Exploit, true),
        ];
        let c = regret_trace(&trace, &[2, 4, 6]).unwrap();
        let regrets: Vec<u64> = c.points.iter().map(|p| p.regret).collect();
        assert_eq!(regrets, vec![2, 4, 4]);
        assert!((c.points[0].regret_over_log - 2.0 / 2f64.ln()).abs() < 1e-12);
        assert!(matches!(
            regret_trace(&trace, &[7]),
            Err(Error::CheckpointOutOfRange { checkpoint: 7, len: 6 })
        ));
        assert!(regret_trace(&trace, &[1]).is_err());
        assert!(regret_trace(&trace, &[4, 2]).is_err());
    }

    #[test]
    fn streamed_counter_matches_trace() {
        let inst = d1();
        let run = run_unknown(&inst, 5.0, 4_096, 9).unwrap();
        let cps = default_checkpoints(4_096);
        let from_trace = regret_trace(&run.trace, &cps).unwrap();
        let streamed = regret_run(&inst, 5.0, 4_096, 9, &cps).unwrap();
        assert_eq!(from_trace.points, streamed.points);
    }

    #[test]
    fn study_is_deterministic_and_ordered() {
        let inst = d1();
        let cfg = RegretStudyConfig {
            g_base: 5.0,
            multipliers: vec![1.0, 2.0],
            horizon: 2_000,
            replications: 3,
            checkpoints: None,
        };
        let a = regret_study(&inst, &cfg, 4, 1).unwrap();
        let b = regret_study(&inst, &cfg, 4, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.curves.len(), 6);
        assert_eq!(a.aggregate.len(), 2 * cfg.checkpoints().len());
        let row = a.aggregate_at(10.0, 2_000).unwrap();
        assert!(row.min as f64 <= row.mean && row.mean <= row.max as f64);
    }
}
