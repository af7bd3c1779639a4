//! Bounded Newton corrector with contraction monitoring.
//!
//! The corrector runs at most `N + 1` Newton-type iterations and stops as soon
//! as an affine covariant error estimate certifies the requested accuracy
//! `tau`. Three termination rules are supported:
//!
//! * a-posteriori: `‖Δx^k‖ / (1 - Θ_k) <= tau`, needs the next correction;
//! * a-priori: `‖Δx^k‖ / (1 - 2 Θ_{k-1}^2) <= tau`;
//! * simplified a-priori: `N` full steps, then one simplified step reusing the
//!   last factorization, `Δ̄x^N = -J(x^{N-1})^+ H(x^N)`, accepted when
//!   `‖Δ̄x^N‖ / (1 - 2 Θ̄_{N-1}^2) <= tau`.
//!
//! Any contraction factor `Θ >= 1/2` aborts the iteration.

use thiserror::Error;

use crate::homotopy::PathFunction;
use crate::linalg::{factorize_owned, norm2, Factorization, Matrix};
use crate::scalar::{all_finite, cz, Scalar, C};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorrectorError {
    #[error("singular Jacobian at iteration {iteration}")]
    SingularJacobian { iteration: usize },
    #[error("non-finite values at iteration {iteration}")]
    NonFinite { iteration: usize },
    #[error("Newton iteration diverged (contraction factor {theta})")]
    Diverged { theta: f64 },
    #[error("invalid corrector options: {0}")]
    InvalidOptions(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    APosteriori,
    APriori,
    #[default]
    SimplifiedAPriori,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CorrectorOptions<T: Scalar> {
    /// Accuracy tolerance.
    pub tau: T,
    /// `N`: the corrector may run `N + 1` iterations in total.
    pub max_newton_iters: usize,
    pub criterion: Criterion,
}

impl<T: Scalar> CorrectorOptions<T> {
    pub fn new(tau: T, max_newton_iters: usize, criterion: Criterion) -> Result<Self, CorrectorError> {
        let opts = Self {
            tau,
            max_newton_iters,
            criterion,
        };
        opts.validate()?;
        Ok(opts)
    }

    pub fn validate(&self) -> Result<(), CorrectorError> {
        if !(self.tau > T::zero()) || !self.tau.is_finite() {
            return Err(CorrectorError::InvalidOptions("tau must be positive"));
        }
        if self.max_newton_iters == 0 {
            return Err(CorrectorError::InvalidOptions("N must be at least 1"));
        }
        Ok(())
    }
}

impl<T: Scalar> Default for CorrectorOptions<T> {
    fn default() -> Self {
        Self {
            tau: T::lit(1e-7),
            max_newton_iters: 2,
            criterion: Criterion::SimplifiedAPriori,
        }
    }
}

/// Why a corrector run did not converge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shortfall {
    /// Some `Θ_k >= 1/2`.
    Contraction,
    /// The termination criterion was still unmet after `N + 1` iterations.
    Budget,
    /// Corrections reached rounding level before the bound dropped below `τ`.
    Precision,
}

#[derive(Debug, Clone)]
pub struct CorrectorResult<T: Scalar> {
    /// `x^0, x^1, ..`; the last entry is the returned point.
    pub iterates: Vec<Vec<C<T>>>,
    /// `‖Δx^k‖`, the simplified correction last when that criterion is used.
    pub correction_norms: Vec<T>,
    /// `Θ_k = ‖Δx^{k+1}‖ / ‖Δx^k‖`.
    pub thetas: Vec<T>,
    pub omega_est: Option<T>,
    pub converged: bool,
    /// Left-hand side of the termination test that was last evaluated.
    pub accuracy_bound: T,
    pub shortfall: Option<Shortfall>,
    /// Corrections at or below this size are rounding noise.
    pub noise_floor: T,
}

impl<T: Scalar> CorrectorResult<T> {
    /// Leading correction norms above the rounding floor; only these carry
    /// information about the Lipschitz constant.
    pub fn usable_norms(&self) -> &[T] {
        let k = self
            .correction_norms
            .iter()
            .position(|&n| n <= self.noise_floor)
            .unwrap_or(self.correction_norms.len());
        &self.correction_norms[..k]
    }

    pub fn point(&self) -> &[C<T>] {
        self.iterates.last().expect("at least the start point")
    }

    pub fn theta0(&self) -> Option<T> {
        self.thetas.first().copied()
    }

    /// Number of Newton-type iterations performed.
    pub fn iterations(&self) -> usize {
        self.correction_norms.len()
    }
}

/// Size below which a Newton correction at `x` is indistinguishable from rounding error.
pub fn noise_floor<T: Scalar>(x: &[C<T>]) -> T {
    T::lit(16.0) * T::epsilon() * (T::one() + norm2(x))
}

/// `max_k 2 ‖Δx^k‖ / ‖Δx^{k-1}‖^2`, or `None` with fewer than two usable norms.
pub fn omega_estimate<T: Scalar>(correction_norms: &[T]) -> Option<T> {
    correction_norms
        .windows(2)
        .filter(|w| w[0] > T::zero())
        .map(|w| T::lit(2.0) * w[1] / (w[0] * w[0]))
        .fold(None, |acc: Option<T>, v| Some(acc.map_or(v, |a| a.max(v))))
}

/// Newton step machinery shared by the corrector and `refine`.
struct NewtonStep<'h, T: Scalar, H: PathFunction<T>> {
    h: &'h H,
    t: T,
    val: Vec<C<T>>,
    jac: Matrix<T>,
}

impl<'h, T: Scalar, H: PathFunction<T>> NewtonStep<'h, T, H> {
    fn new(h: &'h H, t: T) -> Self {
        Self {
            h,
            t,
            val: vec![cz(); h.neqs()],
            jac: Matrix::zeros(h.neqs(), h.nvars()),
        }
    }

    /// Returns the factorization of `J(x)` and the full Newton correction.
    fn full(&mut self, x: &[C<T>], iteration: usize) -> Result<(Factorization<T>, Vec<C<T>>), CorrectorError> {
        self.jac.reset(self.h.neqs(), self.h.nvars());
        self.h.eval_jac_into(x, self.t, &mut self.val, &mut self.jac);
        if !all_finite(&self.val) {
            return Err(CorrectorError::NonFinite { iteration });
        }
        let fact = factorize_owned(std::mem::replace(&mut self.jac, Matrix::zeros(0, 0)))
            .map_err(|_| CorrectorError::SingularJacobian { iteration })?;
        let dx = self.apply(&fact, iteration)?;
        Ok((fact, dx))
    }

    /// Simplified correction `-J_old^+ H(x)`.
    fn simplified(&mut self, fact: &Factorization<T>, x: &[C<T>], iteration: usize) -> Result<Vec<C<T>>, CorrectorError> {
        self.h.eval_into(x, self.t, &mut self.val);
        if !all_finite(&self.val) {
            return Err(CorrectorError::NonFinite { iteration });
        }
        self.apply(fact, iteration)
    }

    fn apply(&self, fact: &Factorization<T>, iteration: usize) -> Result<Vec<C<T>>, CorrectorError> {
        let mut dx = fact
            .solve(&self.val)
            .map_err(|_| CorrectorError::SingularJacobian { iteration })?;
        for z in dx.iter_mut() {
            *z = -*z;
        }
        if !all_finite(&dx) {
            return Err(CorrectorError::NonFinite { iteration });
        }
        Ok(dx)
    }
}

fn add<T: Scalar>(x: &[C<T>], dx: &[C<T>]) -> Vec<C<T>> {
    x.iter().zip(dx).map(|(a, b)| *a + *b).collect()
}

/// Runs the bounded Newton corrector for `H(., t) = 0` from `x0`.
pub fn newton_correct<T: Scalar, H: PathFunction<T>>(
    h: &H,
    x0: &[C<T>],
    t: T,
    opts: &CorrectorOptions<T>,
) -> Result<CorrectorResult<T>, CorrectorError> {
    opts.validate()?;
    let big_n = opts.max_newton_iters;
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let mut step = NewtonStep::new(h, t);
    let mut res = CorrectorResult {
        iterates: vec![x0.to_vec()],
        correction_norms: Vec::with_capacity(big_n + 1),
        thetas: Vec::with_capacity(big_n),
        omega_est: None,
        converged: false,
        accuracy_bound: T::infinity(),
        shortfall: None,
        noise_floor: noise_floor(x0),
    };
    let finish = |mut res: CorrectorResult<T>, converged: bool, shortfall: Option<Shortfall>| {
        res.converged = converged;
        res.shortfall = shortfall;
        res.omega_est = omega_estimate(res.usable_norms());
        Ok(res)
    };
    // a correction at rounding level leaves an error of the same size
    let at_floor = |res: CorrectorResult<T>, tau: T| {
        let mut res = res;
        res.accuracy_bound = res.noise_floor;
        let ok = res.noise_floor <= tau;
        finish(res, ok, (!ok).then_some(Shortfall::Precision))
    };

    let full_iters = match opts.criterion {
        Criterion::SimplifiedAPriori => big_n,
        _ => big_n + 1,
    };
    let mut last_fact = None;
    for j in 0..full_iters {
        let x = res.iterates.last().expect("nonempty").clone();
        let (fact, dx) = step.full(&x, j)?;
        let norm = norm2(&dx);
        res.correction_norms.push(norm);
        res.iterates.push(add(&x, &dx));
        last_fact = Some(fact);
        // a vanishing correction only says the residual rounded to zero
        if norm <= res.noise_floor {
            return at_floor(res, opts.tau);
        }
        if j == 0 {
            continue;
        }
        let theta = norm / res.correction_norms[j - 1];
        res.thetas.push(theta);
        if theta >= half {
            return finish(res, false, Some(Shortfall::Contraction));
        }
        let bound = match opts.criterion {
            Criterion::APosteriori => {
                let denom = T::one() - theta;
                (denom > T::zero()).then(|| res.correction_norms[j - 1] / denom)
            }
            Criterion::APriori => {
                let denom = T::one() - two * theta * theta;
                (denom > T::zero()).then(|| norm / denom)
            }
            Criterion::SimplifiedAPriori => None,
        };
        if let Some(b) = bound {
            res.accuracy_bound = b;
            if b <= opts.tau {
                return finish(res, true, None);
            }
        }
    }

    if opts.criterion != Criterion::SimplifiedAPriori {
        return finish(res, false, Some(Shortfall::Budget));
    }

    let fact = last_fact.expect("N >= 1 full steps");
    let x = res.iterates.last().expect("nonempty").clone();
    let dx = step.simplified(&fact, &x, big_n)?;
    let norm = norm2(&dx);
    let prev = res.correction_norms[big_n - 1];
    res.correction_norms.push(norm);
    res.iterates.push(add(&x, &dx));
    if norm <= res.noise_floor {
        return at_floor(res, opts.tau);
    }
    let theta = norm / prev;
    res.thetas.push(theta);
    if theta >= half {
        return finish(res, false, Some(Shortfall::Contraction));
    }
    let denom = T::one() - two * theta * theta;
    if denom <= T::zero() {
        return finish(res, false, Some(Shortfall::Contraction));
    }
    res.accuracy_bound = norm / denom;
    let ok = res.accuracy_bound <= opts.tau;
    finish(res, ok, (!ok).then_some(Shortfall::Budget))
}

/// Outcome of [`refine`].
#[derive(Debug, Clone)]
pub struct Refined<T: Scalar> {
    pub x: Vec<C<T>>,
    pub converged: bool,
    pub iterations: usize,
    pub last_correction: T,
}

/// Plain Newton polishing until `‖Δx‖ <= tol` or `max_iters` iterations.
///
/// A growing correction (`Θ > 1`) is reported as divergence.
pub fn refine<T: Scalar, H: PathFunction<T>>(
    h: &H,
    x: &[C<T>],
    t: T,
    tol: T,
    max_iters: usize,
) -> Result<Refined<T>, CorrectorError> {
    let mut step = NewtonStep::new(h, t);
    let mut x = x.to_vec();
    let mut prev: Option<T> = None;
    let mut last = T::infinity();
    for it in 0..max_iters {
        let (_, dx) = step.full(&x, it)?;
        let norm = norm2(&dx);
        last = norm;
        let tol = tol.max(noise_floor(&x));
        if let Some(p) = prev {
            if p > T::zero() && norm / p > T::one() && norm > tol {
                return Err(CorrectorError::Diverged {
                    theta: (norm / p).as_f64(),
                });
            }
        }
        x = add(&x, &dx);
        if norm <= tol {
            return Ok(Refined {
                x,
                converged: true,
                iterations: it + 1,
                last_correction: norm,
            });
        }
        prev = Some(norm);
    }
    Ok(Refined {
        x,
        converged: false,
        iterations: max_iters,
        last_correction: last,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{parse_system, PolynomialSystem};

    fn c(re: f64) -> C<f64> {
        C::new(re, 0.0)
    }

    fn sqrt2_system() -> PolynomialSystem<f64> {
        parse_system("vars: x\nx^2 - 2\n").unwrap()
    }

    /// Hand Newton iteration for x^2 - 2 in plain reals.
    fn newton_real(x0: f64, steps: usize) -> Vec<f64> {
        let mut xs = vec![x0];
        for _ in 0..steps {
            let x = *xs.last().unwrap();
            xs.push(x - (x * x - 2.0) / (2.0 * x));
        }
        xs
    }

    #[test]
    fn sqrt2_iteration_values() {
        let f = sqrt2_system();
        let opts = CorrectorOptions::new(1e-7, 2, Criterion::SimplifiedAPriori).unwrap();
        let r = newton_correct(&f, &[c(1.5)], 0.0, &opts).unwrap();
        let xs = newton_real(1.5, 2);
        assert!((r.correction_norms[0] - 1.0 / 12.0).abs() < 1e-15);
        assert!((r.iterates[1][0].re - xs[1]).abs() < 1e-15);
        assert!((r.iterates[1][0].re - 1.4166667).abs() < 1e-7);
        assert!((r.correction_norms[1] - 2.4510e-3).abs() < 1e-7);
        assert!((r.thetas[0] - 2.941e-2).abs() < 1e-5);
        // simplified step: -f(x^2) / f'(x^1) = -(1/166464) / (17/6)
        let simplified = 6.0 / (166464.0 * 17.0);
        assert!((r.correction_norms[2] - simplified).abs() < 1e-15);
        // x^2 is 2.12e-6 from sqrt(2), so tau = 1e-7 cannot be certified with N = 2
        assert!(!r.converged);
        assert_eq!(r.shortfall, Some(Shortfall::Budget));
        assert!(r.accuracy_bound > 2.12e-6 && r.accuracy_bound < 2.13e-6);

        let loose = CorrectorOptions::new(1e-5, 2, Criterion::SimplifiedAPriori).unwrap();
        assert!(newton_correct(&f, &[c(1.5)], 0.0, &loose).unwrap().converged);
        let more = CorrectorOptions::new(1e-7, 3, Criterion::SimplifiedAPriori).unwrap();
        let r = newton_correct(&f, &[c(1.5)], 0.0, &more).unwrap();
        assert!(r.converged);
        assert!((r.point()[0].re - 2f64.sqrt()).abs() <= r.accuracy_bound);
    }

    #[test]
    fn fixed_point_converges_immediately() {
        let f: PolynomialSystem<f64> = parse_system("vars: x\nx^2 - 4\n").unwrap();
        for crit in [Criterion::APosteriori, Criterion::APriori, Criterion::SimplifiedAPriori] {
            let r = newton_correct(&f, &[c(2.0)], 0.0, &CorrectorOptions::new(1e-7, 2, crit).unwrap()).unwrap();
            assert!(r.converged);
            // an exact root still only carries rounding-level accuracy
            assert_eq!(r.accuracy_bound, noise_floor(&[c(2.0)]));
            assert_eq!(r.correction_norms, vec![0.0]);
            assert_eq!(r.point(), &[c(2.0)]);
        }
    }

    #[test]
    fn far_start_fails_within_budget() {
        let f = sqrt2_system();
        let opts = CorrectorOptions::new(1e-7, 1, Criterion::SimplifiedAPriori).unwrap();
        let r = newton_correct(&f, &[c(100.0)], 0.0, &opts).unwrap();
        assert!((r.correction_norms[0] - 49.99).abs() < 1e-12);
        assert!(!r.converged);
        for crit in [Criterion::APosteriori, Criterion::APriori] {
            let r = newton_correct(&f, &[c(100.0)], 0.0, &CorrectorOptions::new(1e-7, 1, crit).unwrap()).unwrap();
            assert!(!r.converged);
        }
    }

    #[test]
    fn contraction_abort() {
        // a double root contracts with factor 1/2
        let f: PolynomialSystem<f64> = parse_system("vars: x\nx^2\n").unwrap();
        let opts = CorrectorOptions::new(1e-7, 3, Criterion::APriori).unwrap();
        let r = newton_correct(&f, &[c(1.0)], 0.0, &opts).unwrap();
        assert!(!r.converged);
        assert_eq!(r.shortfall, Some(Shortfall::Contraction));
        assert_eq!(r.thetas, vec![0.5]);
    }

    #[test]
    fn a_posteriori_and_a_priori_accept() {
        let f = sqrt2_system();
        for crit in [Criterion::APosteriori, Criterion::APriori] {
            let r = newton_correct(&f, &[c(1.45)], 0.0, &CorrectorOptions::new(1e-6, 3, crit).unwrap()).unwrap();
            assert!(r.converged, "{crit:?}");
            assert!(r.accuracy_bound <= 1e-6);
            assert!((r.point()[0].re - 2f64.sqrt()).abs() <= r.accuracy_bound);
            for (k, th) in r.thetas.iter().enumerate() {
                assert_eq!(*th, r.correction_norms[k + 1] / r.correction_norms[k]);
            }
        }
    }

    #[test]
    fn singular_jacobian_is_an_error() {
        let f: PolynomialSystem<f64> = parse_system("vars: x\nx^2 - 1\n").unwrap();
        let opts = CorrectorOptions::default();
        assert_eq!(
            newton_correct(&f, &[c(0.0)], 0.0, &opts).unwrap_err(),
            CorrectorError::SingularJacobian { iteration: 0 }
        );
        assert!(matches!(refine(&f, &[c(0.0)], 0.0, 1e-12, 5), Err(CorrectorError::SingularJacobian { .. })));
    }

    #[test]
    fn options_validation() {
        assert!(CorrectorOptions::new(0.0, 2, Criterion::APriori).is_err());
        assert!(CorrectorOptions::new(1e-7, 0, Criterion::APriori).is_err());
    }

    #[test]
    fn omega_examples() {
        assert_eq!(omega_estimate(&[1e-2, 5e-5]), Some(2.0 * 5e-5 / 1e-4));
        assert!((omega_estimate::<f64>(&[1e-2, 5e-5]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(omega_estimate(&[0.3]), None);
        assert_eq!(omega_estimate::<f64>(&[]), None);
        assert!((omega_estimate::<f64>(&[1e-1, 1e-2, 1e-4]).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn omega_bounds_observed_contraction() {
        let f = sqrt2_system();
        let opts = CorrectorOptions::new(1e-12, 3, Criterion::APriori).unwrap();
        let r = newton_correct(&f, &[c(1.7)], 0.0, &opts).unwrap();
        let w = r.omega_est.unwrap();
        for k in 1..r.correction_norms.len() {
            let lhs = r.correction_norms[k];
            let rhs = 0.5 * w * r.correction_norms[k - 1].powi(2);
            assert!(lhs <= rhs * 1.01);
        }
        let again = newton_correct(&f, &[c(1.7)], 0.0, &opts).unwrap();
        assert_eq!(again.omega_est, r.omega_est);
    }

    #[test]
    fn refine_examples() {
        let f = sqrt2_system();
        let r = refine(&f, &[c(1.4)], 0.0, 1e-14, 10).unwrap();
        assert!(r.converged);
        assert!((r.x[0].re - 2f64.sqrt()).abs() < 1e-14);
        let g: PolynomialSystem<f64> = parse_system("vars: x\nx^2 - 4\n").unwrap();
        let r = refine(&g, &[c(2.0)], 0.0, 1e-14, 10).unwrap();
        assert_eq!(r.x, vec![c(2.0)]);
    }
}
