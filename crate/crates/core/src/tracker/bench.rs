use std::time::Instant;

use super::solve::{prepare, thread_pool, track_all, SolveError};
use super::{PathResult, PathStatus, StepStats, TrackerOptions};
use crate::algebra::PolynomialSystem;
use crate::predictor::PredictorMethod;
use crate::scalar::Scalar;

/// Mean per-path step counts of one controller configuration.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BenchmarkRow {
    pub controller: String,
    pub mean_accepted: f64,
    pub mean_rejected: f64,
    pub mean_total: f64,
    /// `mean_total / mean_total(old)`.
    pub ratio_to_old: f64,
    pub paths: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BenchmarkTable {
    pub runs: usize,
    pub seed: u64,
    pub t_end: f64,
    pub rows: Vec<BenchmarkRow>,
}

#[derive(Default)]
struct Tally {
    stats: StepStats,
    paths: usize,
    failures: usize,
}

impl Tally {
    fn add<T: Scalar>(&mut self, results: &[PathResult<T>]) {
        for r in results {
            self.stats.accepted += r.stats.accepted;
            self.stats.rejected += r.stats.rejected;
            self.stats.newton_iters_total += r.stats.newton_iters_total;
            self.stats.tangent_solves += r.stats.tangent_solves;
            self.paths += 1;
            self.failures += usize::from(r.status != PathStatus::Success);
        }
    }

    fn mean(&self, v: usize) -> f64 {
        if self.paths == 0 {
            0.0
        } else {
            v as f64 / self.paths as f64
        }
    }
}

/// Compares two tracker configurations over `runs` gamma draws (seeds `seed..seed + runs`),
/// tracking every start path from `t_start` to `t_end` of the respective options.
pub fn benchmark<T: Scalar>(
    target: &PolynomialSystem<T>,
    opts_old: &TrackerOptions<T>,
    opts_new: &TrackerOptions<T>,
    runs: usize,
    seed: u64,
    threads: usize,
) -> Result<BenchmarkTable, SolveError> {
    if runs == 0 {
        return Err(SolveError::Invalid("runs must be positive".into()));
    }
    opts_old.validate()?;
    opts_new.validate()?;
    let pool = thread_pool(threads)?;
    let (mut old, mut new) = (Tally::default(), Tally::default());
    for r in 0..runs as u64 {
        let run_seed = seed.wrapping_add(r);
        let prep = prepare(target, run_seed)?;
        old.add(&track_all(&pool, &prep.homotopy, &prep.starts, opts_old, run_seed));
        new.add(&track_all(&pool, &prep.homotopy, &prep.starts, opts_new, run_seed));
    }
    let row = |label: &str, t: &Tally, reference: f64| {
        let total = t.mean(t.stats.total());
        BenchmarkRow {
            controller: label.to_string(),
            mean_accepted: t.mean(t.stats.accepted),
            mean_rejected: t.mean(t.stats.rejected),
            mean_total: total,
            ratio_to_old: total / reference,
            paths: t.paths,
            failures: t.failures,
        }
    };
    let old_total = old.mean(old.stats.total());
    Ok(BenchmarkTable {
        runs,
        seed,
        t_end: opts_new.t_end.as_f64(),
        rows: vec![row("old", &old, old_total), row("new", &new, old_total)],
    })
}

/// Per-predictor runtime and step statistics.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PredictorRow {
    pub predictor: PredictorMethod,
    /// Wall time relative to Euler (or to the first row when Euler is absent).
    pub normalized_runtime: f64,
    pub seconds: f64,
    pub mean_accepted: f64,
    pub mean_rejected: f64,
    pub mean_total: f64,
    pub mean_tangent_solves: f64,
    pub failures: usize,
}

/// Tracks every path with each predictor over `runs` gamma draws and times it.
pub fn predictor_study<T: Scalar>(
    target: &PolynomialSystem<T>,
    base: &TrackerOptions<T>,
    methods: &[PredictorMethod],
    runs: usize,
    seed: u64,
    threads: usize,
) -> Result<Vec<PredictorRow>, SolveError> {
    if runs == 0 || methods.is_empty() {
        return Err(SolveError::Invalid("need at least one run and one predictor".into()));
    }
    base.validate()?;
    let pool = thread_pool(threads)?;
    let preps = (0..runs as u64)
        .map(|r| prepare(target, seed.wrapping_add(r)).map(|p| (seed.wrapping_add(r), p)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::with_capacity(methods.len());
    for &m in methods {
        let opts = TrackerOptions { predictor: m, ..base.clone() };
        let mut tally = Tally::default();
        let clock = Instant::now();
        for (s, prep) in &preps {
            tally.add(&track_all(&pool, &prep.homotopy, &prep.starts, &opts, *s));
        }
        let seconds = clock.elapsed().as_secs_f64();
        rows.push(PredictorRow {
            predictor: m,
            normalized_runtime: 0.0,
            seconds,
            mean_accepted: tally.mean(tally.stats.accepted),
            mean_rejected: tally.mean(tally.stats.rejected),
            mean_total: tally.mean(tally.stats.total()),
            mean_tangent_solves: tally.mean(tally.stats.tangent_solves),
            failures: tally.failures,
        });
    }
    let reference = rows
        .iter()
        .find(|r| r.predictor == PredictorMethod::Euler)
        .unwrap_or(&rows[0])
        .seconds;
    for r in &mut rows {
        r.normalized_runtime = r.seconds / reference;
    }
    Ok(rows)
}
