//! The predictor-corrector tracking loop and the end-to-end solve pipeline.

mod bench;
mod solve;

pub use bench::{benchmark, predictor_study, BenchmarkRow, BenchmarkTable, PredictorRow};
pub use solve::{
    chordal_distance, solve, solve_with_paths, Aggregates, PathEntry, SolutionEntry, SolveError, SolveMetadata, SolveOptions,
    SolveReport, SolveRun,
};

use rand_chacha::ChaCha8Rng;

use crate::corrector::{newton_correct, CorrectorOptions};
use crate::homotopy::{PathFunction, Patched};
use crate::linalg::{dist2, norm2};
use crate::predictor::{predict, tangent, PredictorMethod, TangentCache};
use crate::projective::{init_patch, PatchError, PatchKind, PatchStrategy};
use crate::scalar::{all_finite, Scalar, C};
use crate::stepcontrol::{Controller, ControllerKind, ControllerParams};

/// Configuration of a single path track.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrackerOptions<T: Scalar> {
    pub predictor: PredictorMethod,
    pub controller: ControllerKind,
    pub corrector: CorrectorOptions<T>,
    pub patch: PatchKind,
    pub t_start: T,
    pub t_end: T,
    pub params: ControllerParams<T>,
    /// Budget of step attempts; exhausting it reports the path as diverged.
    pub max_steps: usize,
    /// Affine tracks whose iterate grows beyond this norm are reported as diverged.
    pub max_norm: T,
}

impl<T: Scalar> Default for TrackerOptions<T> {
    fn default() -> Self {
        Self {
            predictor: PredictorMethod::default(),
            controller: ControllerKind::default(),
            corrector: CorrectorOptions::default(),
            patch: PatchKind::default(),
            t_start: T::one(),
            t_end: T::zero(),
            params: ControllerParams::default(),
            max_steps: 20_000,
            max_norm: T::lit(1e14),
        }
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum OptionsError {
    #[error("need 0 <= t_end <= t_start <= 1")]
    Interval,
    #[error(transparent)]
    Corrector(#[from] crate::corrector::CorrectorError),
    #[error(transparent)]
    Controller(#[from] crate::stepcontrol::StepControlError),
}

impl<T: Scalar> TrackerOptions<T> {
    pub fn validate(&self) -> Result<(), OptionsError> {
        if !(self.t_end >= T::zero() && self.t_end <= self.t_start && self.t_start <= T::one()) {
            return Err(OptionsError::Interval);
        }
        self.corrector.validate()?;
        self.params.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathStatus {
    Success,
    StepSizeTooSmall,
    SingularJacobian,
    Diverged,
}

impl PathStatus {
    pub fn name(self) -> &'static str {
        match self {
            PathStatus::Success => "success",
            PathStatus::StepSizeTooSmall => "step_size_too_small",
            PathStatus::SingularJacobian => "singular_jacobian",
            PathStatus::Diverged => "diverged",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub newton_iters_total: usize,
    pub tangent_solves: usize,
}

impl StepStats {
    pub fn total(&self) -> usize {
        self.accepted + self.rejected
    }
}

#[derive(Debug, Clone)]
pub struct PathResult<T: Scalar> {
    pub status: PathStatus,
    /// Final point; a projective representative for patched tracks.
    pub endpoint: Vec<C<T>>,
    pub t_reached: T,
    pub stats: StepStats,
    /// Corrector bound at the last accepted point (0 for zero-length tracks).
    pub accuracy_bound: T,
    /// Patch vector at the end of a projective track.
    pub patch: Option<Vec<C<T>>>,
}

/// One step attempt, reported to observers after it is resolved.
#[derive(Debug)]
pub struct StepEvent<'a, T: Scalar> {
    pub accepted: bool,
    /// `t` after the attempt (unchanged on rejection).
    pub t: T,
    pub dt: T,
    /// Current point after the attempt (patched for accepted projective steps).
    pub x: &'a [C<T>],
    pub patch: Option<&'a [C<T>]>,
    /// Linear solves spent on derivatives in this attempt.
    pub tangent_solves: usize,
    pub theta0: Option<T>,
    pub accuracy_bound: T,
    pub omega: Option<T>,
    pub next_dt: T,
}

/// The square function tracked plus the re-patching hook run after accepted steps.
trait TrackTarget<T: Scalar>: PathFunction<T> {
    fn after_accept(&mut self, x: &mut [C<T>]) -> Result<(), PatchError>;
    fn patch(&self) -> Option<&[C<T>]>;
    fn projective(&self) -> bool;
}

struct Affine<'a, H>(&'a H);

impl<T: Scalar, H: PathFunction<T>> PathFunction<T> for Affine<'_, H> {
    fn nvars(&self) -> usize {
        self.0.nvars()
    }
    fn neqs(&self) -> usize {
        self.0.neqs()
    }
    fn eval_into(&self, x: &[C<T>], t: T, out: &mut [C<T>]) {
        self.0.eval_into(x, t, out)
    }
    fn eval_jac_into(&self, x: &[C<T>], t: T, out: &mut [C<T>], jac: &mut crate::linalg::Matrix<T>) {
        self.0.eval_jac_into(x, t, out, jac)
    }
    fn dt_into(&self, x: &[C<T>], t: T, out: &mut [C<T>]) {
        self.0.dt_into(x, t, out)
    }
    fn series_into(&self, coeffs: &[Vec<C<T>>], t: T, out: &mut [Vec<C<T>>]) {
        self.0.series_into(coeffs, t, out)
    }
}

impl<T: Scalar, H: PathFunction<T>> TrackTarget<T> for Affine<'_, H> {
    fn after_accept(&mut self, _x: &mut [C<T>]) -> Result<(), PatchError> {
        Ok(())
    }
    fn patch(&self) -> Option<&[C<T>]> {
        None
    }
    fn projective(&self) -> bool {
        false
    }
}

struct Projective<'a, T: Scalar, H: PathFunction<T>> {
    patched: Patched<'a, T, H>,
    strategy: PatchStrategy<T>,
}

impl<T: Scalar, H: PathFunction<T>> PathFunction<T> for Projective<'_, T, H> {
    fn nvars(&self) -> usize {
        self.patched.nvars()
    }
    fn neqs(&self) -> usize {
        self.patched.neqs()
    }
    fn eval_into(&self, x: &[C<T>], t: T, out: &mut [C<T>]) {
        self.patched.eval_into(x, t, out)
    }
    fn eval_jac_into(&self, x: &[C<T>], t: T, out: &mut [C<T>], jac: &mut crate::linalg::Matrix<T>) {
        self.patched.eval_jac_into(x, t, out, jac)
    }
    fn dt_into(&self, x: &[C<T>], t: T, out: &mut [C<T>]) {
        self.patched.dt_into(x, t, out)
    }
    fn series_into(&self, coeffs: &[Vec<C<T>>], t: T, out: &mut [Vec<C<T>>]) {
        self.patched.series_into(coeffs, t, out)
    }
}

impl<T: Scalar, H: PathFunction<T>> TrackTarget<T> for Projective<'_, T, H> {
    fn after_accept(&mut self, x: &mut [C<T>]) -> Result<(), PatchError> {
        self.strategy.update(x)?;
        self.patched.set_patch(&self.strategy.vector);
        Ok(())
    }
    fn patch(&self) -> Option<&[C<T>]> {
        Some(&self.strategy.vector)
    }
    fn projective(&self) -> bool {
        true
    }
}

/// Tracks a square (affine) path `H(x, t) = 0` from `x_start` at `t_start` to `t_end`.
pub fn track<T: Scalar, H: PathFunction<T>>(h: &H, x_start: &[C<T>], opts: &TrackerOptions<T>) -> PathResult<T> {
    track_observed(h, x_start, opts, &mut |_| {})
}

pub fn track_observed<T: Scalar, H: PathFunction<T>>(
    h: &H,
    x_start: &[C<T>],
    opts: &TrackerOptions<T>,
    observer: &mut dyn FnMut(&StepEvent<'_, T>),
) -> PathResult<T> {
    let mut target = Affine(h);
    run(&mut target, x_start.to_vec(), opts, observer)
}

/// Tracks a homogenized path on the affine patch chosen by `opts.patch`.
///
/// `rng` seeds the fixed random patch; the start point is moved onto the patch first.
pub fn track_projective<T: Scalar, H: PathFunction<T>>(
    h: &H,
    x_start: &[C<T>],
    opts: &TrackerOptions<T>,
    rng: &mut ChaCha8Rng,
) -> PathResult<T> {
    track_projective_observed(h, x_start, opts, rng, &mut |_| {})
}

pub fn track_projective_observed<T: Scalar, H: PathFunction<T>>(
    h: &H,
    x_start: &[C<T>],
    opts: &TrackerOptions<T>,
    rng: &mut ChaCha8Rng,
    observer: &mut dyn FnMut(&StepEvent<'_, T>),
) -> PathResult<T> {
    let (strategy, x0) = match init_patch(opts.patch, x_start, rng) {
        Ok(v) => v,
        Err(_) => {
            return PathResult {
                status: PathStatus::Diverged,
                endpoint: x_start.to_vec(),
                t_reached: opts.t_start,
                stats: StepStats::default(),
                accuracy_bound: T::infinity(),
                patch: None,
            }
        }
    };
    let patched = Patched::new(h, strategy.vector.clone()).expect("patch sized to the homotopy");
    let mut target = Projective { patched, strategy };
    run(&mut target, x0, opts, observer)
}

fn run<T: Scalar, P: TrackTarget<T>>(
    hp: &mut P,
    mut x: Vec<C<T>>,
    opts: &TrackerOptions<T>,
    observer: &mut dyn FnMut(&StepEvent<'_, T>),
) -> PathResult<T> {
    let n_newton = opts.corrector.max_newton_iters;
    let mut ctrl = Controller::new(opts.controller, n_newton, opts.corrector.tau, opts.predictor.order(), opts.params);
    let mut cache = TangentCache::new();
    let mut stats = StepStats::default();
    let mut t = opts.t_start;
    let mut bound = T::zero();

    let finish = |status, x: Vec<C<T>>, t, stats, bound, hp: &P| PathResult {
        status,
        endpoint: x,
        t_reached: t,
        stats,
        accuracy_bound: bound,
        patch: hp.patch().map(|p| p.to_vec()),
    };

    while t > opts.t_end {
        if stats.total() >= opts.max_steps {
            return finish(PathStatus::Diverged, x, t, stats, bound, hp);
        }
        let remaining = t - opts.t_end;
        let mut dt = ctrl.dt();
        let landing = dt >= remaining;
        if landing {
            dt = remaining;
        }
        let t_next = if landing { opts.t_end } else { t - dt };

        let mut solves = 0;
        if cache.get(&x, t).is_none() {
            match tangent(&*hp, &x, t) {
                Ok(v) => {
                    cache.insert(&x, t, &v);
                    solves += 1;
                }
                Err(_) => return finish(PathStatus::SingularJacobian, x, t, stats, bound, hp),
            }
        }

        let attempt = predict(opts.predictor, &*hp, &x, t, dt, &mut cache).map(|p| {
            solves += p.solves;
            p.x
        });
        stats.tangent_solves += solves;
        let corrected = attempt
            .ok()
            .map(|xh| (newton_correct(&*hp, &xh, t_next, &opts.corrector), xh));

        let (accepted_result, theta0) = match corrected {
            Some((Ok(r), xh)) => {
                stats.newton_iters_total += r.iterations();
                let th = r.theta0();
                if r.converged && all_finite(r.point()) {
                    (Some((r, xh)), th)
                } else {
                    (None, th)
                }
            }
            Some((Err(_), _)) | None => (None, None),
        };

        match accepted_result {
            Some((r, xh)) => {
                stats.accepted += 1;
                let pred_err = dist2(&xh, r.point());
                x = r.point().to_vec();
                bound = r.accuracy_bound;
                t = t_next;
                if hp.after_accept(&mut x).is_err() {
                    return finish(PathStatus::Diverged, x, t, stats, bound, hp);
                }
                cache.invalidate();
                let xn = norm2(&x);
                if !hp.projective() && !(xn <= opts.max_norm) {
                    return finish(PathStatus::Diverged, x, t, stats, bound, hp);
                }
                let next = ctrl.on_success(r.usable_norms(), pred_err, xn, dt, t - opts.t_end);
                observer(&StepEvent {
                    accepted: true,
                    t,
                    dt,
                    x: &x,
                    patch: hp.patch(),
                    tangent_solves: solves,
                    theta0,
                    accuracy_bound: bound,
                    omega: ctrl.omega(),
                    next_dt: next,
                });
            }
            None => {
                stats.rejected += 1;
                let next = ctrl.on_failure(theta0, dt);
                observer(&StepEvent {
                    accepted: false,
                    t,
                    dt,
                    x: &x,
                    patch: hp.patch(),
                    tangent_solves: solves,
                    theta0,
                    accuracy_bound: T::infinity(),
                    omega: ctrl.omega(),
                    next_dt: next,
                });
                if next < opts.params.dt_min {
                    return finish(PathStatus::StepSizeTooSmall, x, t, stats, bound, hp);
                }
            }
        }
    }
    finish(PathStatus::Success, x, t, stats, bound, hp)
}

/// Controller-comparison setup: `τ = 1e-7`, three corrector
/// iterations (`N = 2`), Heun, orthogonal patch, `t: 1 -> 0.1`.
pub fn benchmark_options<T: Scalar>(controller: ControllerKind) -> TrackerOptions<T> {
    TrackerOptions {
        predictor: PredictorMethod::Heun,
        controller,
        corrector: CorrectorOptions::default(),
        patch: PatchKind::Orthogonal,
        t_end: T::lit(0.1),
        ..TrackerOptions::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{parse_system, PolynomialSystem};
    use crate::homotopy::straight_line;

    fn c(re: f64) -> C<f64> {
        C::new(re, 0.0)
    }

    fn sys(text: &str) -> PolynomialSystem<f64> {
        parse_system(text).unwrap()
    }

    #[test]
    fn univariate_sqrt_path() {
        // H = t (x^2 - 1) + (1 - t)(x^2 - 2): x(t) = sqrt(2 - t)
        let h = straight_line(sys("vars: x\nx^2 - 2\n"), sys("vars: x\nx^2 - 1\n"), c(1.0)).unwrap();
        for kind in [ControllerKind::Adaptive, ControllerKind::Simple] {
            let opts = TrackerOptions { controller: kind, ..TrackerOptions::default() };
            let mut ts = vec![];
            let r = track_observed(&h, &[c(1.0)], &opts, &mut |e| {
                if e.accepted {
                    ts.push(e.t);
                    assert!(e.accuracy_bound <= 1e-7);
                }
            });
            assert_eq!(r.status, PathStatus::Success);
            assert_eq!(r.t_reached, 0.0);
            assert!((r.endpoint[0] - c(2f64.sqrt())).norm() <= 1e-7);
            assert!(ts.windows(2).all(|w| w[1] < w[0]));
            assert_eq!(*ts.last().unwrap(), 0.0);
            assert_eq!(r.stats.total(), r.stats.accepted + r.stats.rejected);
        }
    }

    #[test]
    fn zero_length_interval() {
        let h = straight_line(sys("vars: x\nx^2 - 2\n"), sys("vars: x\nx^2 - 1\n"), c(1.0)).unwrap();
        let opts = TrackerOptions { t_start: 0.5, t_end: 0.5, ..TrackerOptions::default() };
        let x = [c(1.5f64.sqrt())];
        let r = track(&h, &x, &opts);
        assert_eq!(r.status, PathStatus::Success);
        assert_eq!(r.stats, StepStats::default());
        assert_eq!(r.endpoint, x);
    }

    #[test]
    fn singular_endpoint_fails() {
        // H = t (x^2 - 1) + (1 - t) x^2: x(t) = sqrt(t) collides at 0
        let h = straight_line(sys("vars: x\nx^2\n"), sys("vars: x\nx^2 - 1\n"), c(1.0)).unwrap();
        let mut opts = TrackerOptions::default();
        opts.params.dt_min = 1e-6;
        let r = track(&h, &[c(1.0)], &opts);
        assert!(matches!(r.status, PathStatus::StepSizeTooSmall | PathStatus::SingularJacobian), "{:?}", r.status);
        assert!(r.t_reached > 0.0);
    }

    #[test]
    fn rejection_reuses_tangent() {
        let f: PolynomialSystem<f64> = crate::algebra::generate_benchmark(crate::algebra::Family::Katsura, 3).unwrap();
        let prep = solve::prepare(&f, 11).unwrap();
        for m in PredictorMethod::ALL {
            let opts = TrackerOptions { predictor: m, ..TrackerOptions::default() };
            let full = match m {
                PredictorMethod::Euler => 1,
                PredictorMethod::Heun => 2,
                PredictorMethod::Rk4 => 4,
                PredictorMethod::Pade21 => 3,
            };
            let mut rejections = 0;
            for (i, s) in prep.starts.iter().enumerate() {
                let mut events = vec![];
                let mut rng = crate::projective::path_rng(11, i as u64);
                track_projective_observed(&prep.homotopy, s, &opts, &mut rng, &mut |e| events.push((e.accepted, e.tangent_solves)));
                assert_eq!(events[0].1, full);
                for w in events.windows(2) {
                    let expected = if w[0].0 { full } else { full - 1 };
                    assert_eq!(w[1].1, expected, "{m}");
                }
                rejections += events.iter().filter(|e| !e.0).count();
            }
            assert!(rejections > 0, "{m}: no rejection");
        }
    }

    #[test]
    fn projective_track_keeps_patch() {
        let f = sys("vars: x\nx^2 - 2\n").homogenize();
        let g = sys("vars: x\nx^2 - 1\n").homogenize();
        let h = straight_line(f, g, C::new(0.6, 0.8)).unwrap();
        let opts = TrackerOptions::<f64>::default();
        let mut rng = crate::projective::path_rng(3, 0);
        let r = track_projective_observed(&h, &[c(1.0), c(1.0)], &opts, &mut rng, &mut |e| {
            if e.accepted {
                assert!((norm2(e.x) - 1.0).abs() < 1e-12);
                assert_eq!(e.patch.unwrap(), e.x);
            }
        });
        assert_eq!(r.status, PathStatus::Success);
        let y = r.endpoint[1] / r.endpoint[0];
        assert!((y - c(2f64.sqrt())).norm() < 1e-6 || (y + c(2f64.sqrt())).norm() < 1e-6);
    }

    #[test]
    fn options_validation() {
        let bad = TrackerOptions::<f64> { t_start: 0.1, t_end: 0.5, ..TrackerOptions::default() };
        assert_eq!(bad.validate(), Err(OptionsError::Interval));
        assert!(TrackerOptions::<f64>::default().validate().is_ok());
        assert!(benchmark_options::<f64>(ControllerKind::Simple).validate().is_ok());
    }
}
