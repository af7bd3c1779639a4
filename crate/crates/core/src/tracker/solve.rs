use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{track_projective, OptionsError, PathResult, PathStatus, TrackerOptions};
use crate::algebra::{total_degree_start, AlgebraError, PolynomialSystem};
use crate::corrector::refine;
use crate::homotopy::{random_gamma, straight_line, Homotopy, Patched};
use crate::linalg::{inner, norm2};
use crate::projective::path_rng;
use crate::scalar::{Scalar, C};

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Options(#[from] OptionsError),
    #[error("cannot build thread pool: {0}")]
    ThreadPool(String),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolveOptions<T: Scalar> {
    pub tracker: TrackerOptions<T>,
    pub seed: u64,
    /// Worker threads; 0 uses the rayon default.
    pub threads: usize,
    /// Endpoints closer than this projective chordal distance are merged.
    pub dedup_tol: f64,
    /// Endpoints with `|x_0| <= finite_tol * ‖x‖` are treated as lying at infinity.
    pub finite_tol: f64,
    pub refine_tol: f64,
    pub refine_iters: usize,
}

impl<T: Scalar> Default for SolveOptions<T> {
    fn default() -> Self {
        Self {
            tracker: TrackerOptions::default(),
            seed: 0,
            threads: 0,
            dedup_tol: 1e-6,
            finite_tol: 1e-8,
            refine_tol: 1e-12,
            refine_iters: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolveMetadata<T: Scalar> {
    pub seed: u64,
    pub gamma: [T; 2],
    pub variables: Vec<String>,
    pub bezout_number: u64,
    pub options: SolveOptions<T>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolutionEntry<T: Scalar> {
    /// Affine coordinates as `[re, im]` pairs.
    pub coordinates: Vec<[T; 2]>,
    /// `‖F(x)‖`.
    pub residual: f64,
    /// `‖F(x)‖ / (1 + ‖x‖^d)` with `d` the largest degree.
    pub relative_residual: f64,
    pub multiplicity: usize,
    /// Indices of the paths that ended here.
    pub paths: Vec<usize>,
    /// Whether Newton polishing reached the refinement tolerance.
    pub refined: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointClass {
    Finite,
    Infinite,
    Failed,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PathEntry {
    pub index: usize,
    pub status: PathStatus,
    pub t_reached: f64,
    pub accepted: usize,
    pub rejected: usize,
    pub newton_iters: usize,
    pub tangent_solves: usize,
    pub endpoint: EndpointClass,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Aggregates {
    pub paths: usize,
    pub successes: usize,
    pub step_size_too_small: usize,
    pub singular_jacobian: usize,
    pub diverged: usize,
    pub mean_accepted: f64,
    pub mean_rejected: f64,
    pub mean_total: f64,
    pub mean_newton_iters: f64,
    pub mean_tangent_solves: f64,
    pub finite_endpoints: usize,
    pub infinite_endpoints: usize,
    pub distinct_solutions: usize,
}

impl Aggregates {
    pub fn from_paths(paths: &[PathEntry], distinct_solutions: usize) -> Self {
        let n = paths.len();
        let count = |s: PathStatus| paths.iter().filter(|p| p.status == s).count();
        let mean = |f: &dyn Fn(&PathEntry) -> usize| {
            if n == 0 {
                0.0
            } else {
                paths.iter().map(|p| f(p) as f64).sum::<f64>() / n as f64
            }
        };
        Self {
            paths: n,
            successes: count(PathStatus::Success),
            step_size_too_small: count(PathStatus::StepSizeTooSmall),
            singular_jacobian: count(PathStatus::SingularJacobian),
            diverged: count(PathStatus::Diverged),
            mean_accepted: mean(&|p| p.accepted),
            mean_rejected: mean(&|p| p.rejected),
            mean_total: mean(&|p| p.accepted + p.rejected),
            mean_newton_iters: mean(&|p| p.newton_iters),
            mean_tangent_solves: mean(&|p| p.tangent_solves),
            finite_endpoints: paths.iter().filter(|p| p.endpoint == EndpointClass::Finite).count(),
            infinite_endpoints: paths.iter().filter(|p| p.endpoint == EndpointClass::Infinite).count(),
            distinct_solutions,
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolveReport<T: Scalar> {
    pub metadata: SolveMetadata<T>,
    pub solutions: Vec<SolutionEntry<T>>,
    pub paths: Vec<PathEntry>,
    pub aggregates: Aggregates,
    pub wall_seconds: f64,
}

/// Full solve output: the report plus raw per-path results and the homotopy tracked.
#[derive(Debug, Clone)]
pub struct SolveRun<T: Scalar> {
    pub report: SolveReport<T>,
    pub paths: Vec<PathResult<T>>,
    /// Refined projective endpoints (unit norm), one per path.
    pub endpoints: Vec<Vec<C<T>>>,
    pub homotopy: Homotopy<T>,
    pub start_points: Vec<Vec<C<T>>>,
}

/// Homogenized total-degree homotopy for `target` with `gamma` drawn from `seed`.
pub(crate) struct Prepared<T: Scalar> {
    pub homotopy: Homotopy<T>,
    pub starts: Vec<Vec<C<T>>>,
    pub bezout: u64,
}

pub(crate) fn prepare<T: Scalar>(target: &PolynomialSystem<T>, seed: u64) -> Result<Prepared<T>, SolveError> {
    if !target.is_square() {
        return Err(AlgebraError::NotSquare {
            equations: target.neqs(),
            variables: target.nvars(),
        }
        .into());
    }
    let bezout = target.bezout_number()?;
    let start = total_degree_start(target)?;
    let one = C::new(T::one(), T::zero());
    let starts = start
        .solutions
        .iter()
        .map(|s| std::iter::once(one).chain(s.iter().copied()).collect())
        .collect();
    let gamma = random_gamma(&mut gamma_rng(seed));
    let homotopy = straight_line(target.homogenize(), start.system.homogenize(), gamma).expect("matching shapes");
    Ok(Prepared { homotopy, starts, bezout })
}

fn gamma_rng(seed: u64) -> ChaCha8Rng {
    path_rng(seed, u64::MAX)
}

pub(crate) fn thread_pool(threads: usize) -> Result<rayon::ThreadPool, SolveError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| SolveError::ThreadPool(e.to_string()))
}

pub(crate) fn track_all<T: Scalar>(
    pool: &rayon::ThreadPool,
    h: &Homotopy<T>,
    starts: &[Vec<C<T>>],
    opts: &TrackerOptions<T>,
    seed: u64,
) -> Vec<PathResult<T>> {
    pool.install(|| {
        starts
            .par_iter()
            .enumerate()
            .map(|(i, s)| track_projective(h, s, opts, &mut path_rng(seed, i as u64)))
            .collect()
    })
}

/// Sine of the angle between two projective representatives.
pub fn chordal_distance<T: Scalar>(x: &[C<T>], y: &[C<T>]) -> f64 {
    let (nx, ny) = (norm2(x), norm2(y));
    if nx == T::zero() || ny == T::zero() {
        return 1.0;
    }
    // residual of projecting the unit x onto the line through y
    let xu: Vec<C<T>> = x.iter().map(|z| *z / nx).collect();
    let yu: Vec<C<T>> = y.iter().map(|z| *z / ny).collect();
    let c = inner(&xu, &yu);
    let r: Vec<C<T>> = xu.iter().zip(&yu).map(|(a, b)| *a - c * *b).collect();
    norm2(&r).as_f64().min(1.0)
}

/// Newton polish of a projective endpoint on the patch through its own unit representative.
fn polish<T: Scalar>(target: &PolynomialSystem<T>, x: &[C<T>], t: T, tol: f64, iters: usize) -> (Vec<C<T>>, bool) {
    let scale = C::new(norm2(x).recip(), T::zero());
    let unit: Vec<C<T>> = x.iter().map(|z| *z * scale).collect();
    let Ok(patched) = Patched::new(target, unit.clone()) else {
        return (unit, false);
    };
    match refine(&patched, &unit, t, T::lit(tol), iters) {
        Ok(r) => {
            let s = C::new(norm2(&r.x).recip(), T::zero());
            (r.x.iter().map(|z| *z * s).collect(), r.converged)
        }
        Err(_) => (unit, false),
    }
}

/// Solves a square polynomial system by total-degree homotopy continuation.
pub fn solve<T: Scalar>(target: &PolynomialSystem<T>, opts: &SolveOptions<T>) -> Result<SolveReport<T>, SolveError> {
    solve_with_paths(target, opts).map(|r| r.report)
}

pub fn solve_with_paths<T: Scalar>(target: &PolynomialSystem<T>, opts: &SolveOptions<T>) -> Result<SolveRun<T>, SolveError> {
    opts.tracker.validate()?;
    let clock = Instant::now();
    let prep = prepare(target, opts.seed)?;
    let pool = thread_pool(opts.threads)?;
    let paths = track_all(&pool, &prep.homotopy, &prep.starts, &opts.tracker, opts.seed);
    let target_h = prep.homotopy.target();
    let t_end = opts.tracker.t_end;
    let at_target = t_end == T::zero();

    let polished: Vec<(Vec<C<T>>, bool)> = pool.install(|| {
        paths
            .par_iter()
            .map(|p| {
                if p.status == PathStatus::Success && at_target {
                    polish(target_h, &p.endpoint, t_end, opts.refine_tol, opts.refine_iters)
                } else {
                    let s = C::new(norm2(&p.endpoint).recip(), T::zero());
                    (p.endpoint.iter().map(|z| *z * s).collect(), false)
                }
            })
            .collect()
    });

    let mut entries = Vec::with_capacity(paths.len());
    let mut clusters: Vec<(Vec<C<T>>, Vec<usize>, bool)> = Vec::new();
    for (i, (p, (x, refined))) in paths.iter().zip(&polished).enumerate() {
        let finite = x[0].norm().as_f64() > opts.finite_tol * norm2(x).as_f64();
        let class = match (p.status, finite) {
            (PathStatus::Success, true) => EndpointClass::Finite,
            (PathStatus::Success, false) => EndpointClass::Infinite,
            _ => EndpointClass::Failed,
        };
        if class == EndpointClass::Finite && at_target {
            match clusters.iter_mut().find(|c| chordal_distance(&c.0, x) < opts.dedup_tol) {
                Some(c) => {
                    c.1.push(i);
                    c.2 |= *refined;
                }
                None => clusters.push((x.clone(), vec![i], *refined)),
            }
        }
        entries.push(PathEntry {
            index: i,
            status: p.status,
            t_reached: p.t_reached.as_f64(),
            accepted: p.stats.accepted,
            rejected: p.stats.rejected,
            newton_iters: p.stats.newton_iters_total,
            tangent_solves: p.stats.tangent_solves,
            endpoint: class,
        });
    }

    let max_deg = target.degrees().into_iter().max().unwrap_or(1) as i32;
    let solutions: Vec<SolutionEntry<T>> = clusters
        .into_iter()
        .map(|(x, paths, refined)| {
            let inv = x[0].inv();
            let y: Vec<C<T>> = x[1..].iter().map(|z| *z * inv).collect();
            let residual = target.evaluate(&y).map(|v| norm2(&v).as_f64()).unwrap_or(f64::INFINITY);
            let relative_residual = residual / (1.0 + norm2(&y).as_f64().powi(max_deg));
            SolutionEntry {
                coordinates: y.iter().map(|z| [z.re, z.im]).collect(),
                residual,
                relative_residual,
                multiplicity: paths.len(),
                paths,
                refined,
            }
        })
        .collect();

    let aggregates = Aggregates::from_paths(&entries, solutions.len());
    let gamma = prep.homotopy.gamma();
    let report = SolveReport {
        metadata: SolveMetadata {
            seed: opts.seed,
            gamma: [gamma.re, gamma.im],
            variables: target.var_names().to_vec(),
            bezout_number: prep.bezout,
            options: opts.clone(),
        },
        solutions,
        paths: entries,
        aggregates,
        wall_seconds: clock.elapsed().as_secs_f64(),
    };
    Ok(SolveRun {
        report,
        paths,
        endpoints: polished.into_iter().map(|p| p.0).collect(),
        homotopy: prep.homotopy,
        start_points: prep.starts,
    })
}
