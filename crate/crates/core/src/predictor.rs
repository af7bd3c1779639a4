//! Prediction methods for the Davidenko equation `H_x ẋ + H_t = 0`.
//!
//! A predictor of order `p` satisfies `‖x(t) - x̂(t)‖ <= η_p Δt^p`. Explicit
//! Runge-Kutta methods of classical order `m` are predictors of order `m + 1`.
//! All predictors step from `t` to `t - dt` (tracking runs toward `t = 0`).

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::homotopy::PathFunction;
use crate::linalg::{factorize_owned, norm2, Factorization, Matrix};
use crate::scalar::{all_finite, cz, Scalar, C};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PredictorError {
    #[error("singular Jacobian while computing a derivative")]
    SingularJacobian,
    #[error("non-finite prediction")]
    NonFinite,
    #[error("step size must be positive")]
    InvalidStep,
    #[error("unknown predictor '{0}' (expected euler, heun, rk4 or pade21)")]
    UnknownMethod(String),
    #[error("empirical order indeterminate: {0}")]
    Indeterminate(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictorMethod {
    Euler,
    #[default]
    Heun,
    Rk4,
    Pade21,
}

impl PredictorMethod {
    pub const ALL: [PredictorMethod; 4] = [
        PredictorMethod::Euler,
        PredictorMethod::Heun,
        PredictorMethod::Rk4,
        PredictorMethod::Pade21,
    ];

    /// Predictor order `p`.
    pub fn order(self) -> u32 {
        match self {
            PredictorMethod::Euler => 2,
            PredictorMethod::Heun => 3,
            PredictorMethod::Rk4 => 5,
            PredictorMethod::Pade21 => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PredictorMethod::Euler => "euler",
            PredictorMethod::Heun => "heun",
            PredictorMethod::Rk4 => "rk4",
            PredictorMethod::Pade21 => "pade21",
        }
    }
}

impl fmt::Display for PredictorMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PredictorMethod {
    type Err = PredictorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PredictorMethod::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| PredictorError::UnknownMethod(s.to_string()))
    }
}

/// Tangent `ẋ(t_k)` kept across rejected steps at the same `(x, t)`.
#[derive(Debug, Clone, Default)]
pub struct TangentCache<T: Scalar> {
    t: T,
    x: Vec<C<T>>,
    tangent: Vec<C<T>>,
    valid: bool,
}

impl<T: Scalar> TangentCache<T> {
    pub fn new() -> Self {
        Self {
            t: T::zero(),
            x: Vec::new(),
            tangent: Vec::new(),
            valid: false,
        }
    }

    pub fn invalidate(&mut self) {
        self.valid = false;
    }

    pub fn is_valid(&self) -> bool {
        self.valid
    }

    /// Cached tangent if it was computed at exactly this `(x, t)`.
    pub fn get(&self, x: &[C<T>], t: T) -> Option<&[C<T>]> {
        (self.valid && self.t == t && self.x == x).then_some(self.tangent.as_slice())
    }

    pub fn insert(&mut self, x: &[C<T>], t: T, tangent: &[C<T>]) {
        self.t = t;
        self.x.clear();
        self.x.extend_from_slice(x);
        self.tangent.clear();
        self.tangent.extend_from_slice(tangent);
        self.valid = true;
    }
}

/// Predicted point and the number of linear solves spent on derivatives.
#[derive(Debug, Clone)]
pub struct Prediction<T: Scalar> {
    pub x: Vec<C<T>>,
    pub solves: usize,
}

/// Factorized `H_x(x, t)` with the residual-free right-hand side `H_t`.
struct Linearization<T: Scalar> {
    fact: Factorization<T>,
    ht: Vec<C<T>>,
}

fn linearize<T: Scalar, H: PathFunction<T>>(h: &H, x: &[C<T>], t: T) -> Result<Linearization<T>, PredictorError> {
    let mut val = vec![cz(); h.neqs()];
    let mut jac = Matrix::zeros(h.neqs(), h.nvars());
    h.eval_jac_into(x, t, &mut val, &mut jac);
    let fact = factorize_owned(jac).map_err(|_| PredictorError::SingularJacobian)?;
    if fact.rank_deficient() {
        return Err(PredictorError::SingularJacobian);
    }
    let mut ht = vec![cz(); h.neqs()];
    h.dt_into(x, t, &mut ht);
    Ok(Linearization { fact, ht })
}

fn neg_solve<T: Scalar>(fact: &Factorization<T>, rhs: &[C<T>]) -> Result<Vec<C<T>>, PredictorError> {
    let mut v = fact.solve(rhs).map_err(|_| PredictorError::SingularJacobian)?;
    v.iter_mut().for_each(|z| *z = -*z);
    if !all_finite(&v) {
        return Err(PredictorError::NonFinite);
    }
    Ok(v)
}

/// `ẋ = -H_x^+ H_t` at `(x, t)`.
pub fn tangent<T: Scalar, H: PathFunction<T>>(h: &H, x: &[C<T>], t: T) -> Result<Vec<C<T>>, PredictorError> {
    let lin = linearize(h, x, t)?;
    neg_solve(&lin.fact, &lin.ht)
}

fn axpy<T: Scalar>(x: &[C<T>], a: T, v: &[C<T>]) -> Vec<C<T>> {
    x.iter().zip(v).map(|(xi, vi)| *xi + *vi * a).collect()
}

/// Predicts `x(t - dt)` from the path point `(x, t)`.
///
/// A valid cache entry for `(x, t)` replaces the first-stage tangent solve;
/// otherwise the tangent is computed and cached.
pub fn predict<T: Scalar, H: PathFunction<T>>(
    method: PredictorMethod,
    h: &H,
    x: &[C<T>],
    t: T,
    dt: T,
    cache: &mut TangentCache<T>,
) -> Result<Prediction<T>, PredictorError> {
    if !(dt > T::zero()) {
        return Err(PredictorError::InvalidStep);
    }
    let mut solves = 0usize;
    let mut lin: Option<Linearization<T>> = None;
    let k1 = match cache.get(x, t) {
        Some(v) => v.to_vec(),
        None => {
            let l = linearize(h, x, t)?;
            let v = neg_solve(&l.fact, &l.ht)?;
            solves += 1;
            cache.insert(x, t, &v);
            lin = Some(l);
            v
        }
    };
    let s = -dt;
    let half = T::lit(0.5);
    let mut stage = |xs: &[C<T>], ts: T| -> Result<Vec<C<T>>, PredictorError> {
        solves += 1;
        tangent(h, xs, ts)
    };
    let out = match method {
        PredictorMethod::Euler => axpy(x, s, &k1),
        PredictorMethod::Heun => {
            let k2 = stage(&axpy(x, s, &k1), t + s)?;
            let avg: Vec<C<T>> = k1.iter().zip(&k2).map(|(a, b)| (*a + *b) * half).collect();
            axpy(x, s, &avg)
        }
        PredictorMethod::Rk4 => {
            let hs = s * half;
            let k2 = stage(&axpy(x, hs, &k1), t + hs)?;
            let k3 = stage(&axpy(x, hs, &k2), t + hs)?;
            let k4 = stage(&axpy(x, s, &k3), t + s)?;
            let two = T::lit(2.0);
            let sixth = s / T::lit(6.0);
            let incr: Vec<C<T>> = (0..x.len()).map(|i| k1[i] + k2[i] * two + k3[i] * two + k4[i]).collect();
            axpy(x, sixth, &incr)
        }
        PredictorMethod::Pade21 => {
            let l = match lin {
                Some(l) => l,
                None => linearize(h, x, t)?,
            };
            let coeffs = taylor_coefficients(h, &l.fact, x, &k1, t, 3, &mut solves)?;
            pade21(&coeffs, s)
        }
    };
    if !all_finite(&out) {
        return Err(PredictorError::NonFinite);
    }
    Ok(Prediction { x: out, solves })
}

/// Taylor coefficients `c_0..c_order` of the path through `(x, t)` in the variable `s = t' - t`.
///
/// Each `c_k` solves `H_x c_k = -r_k`, where `r_k` is the `s^k` coefficient of
/// `H(c_0 + .. + c_{k-1} s^{k-1}, t + s)`.
fn taylor_coefficients<T: Scalar, H: PathFunction<T>>(
    h: &H,
    fact: &Factorization<T>,
    x: &[C<T>],
    xdot: &[C<T>],
    t: T,
    order: usize,
    solves: &mut usize,
) -> Result<Vec<Vec<C<T>>>, PredictorError> {
    let n = x.len();
    let mut coeffs = vec![x.to_vec(), xdot.to_vec()];
    let mut out = vec![Vec::new(); h.neqs()];
    for k in 2..=order {
        coeffs.push(vec![cz(); n]);
        h.series_into(&coeffs, t, &mut out);
        let rhs: Vec<C<T>> = out.iter().map(|o| o[k]).collect();
        let ck = neg_solve(fact, &rhs)?;
        *solves += 1;
        coeffs[k] = ck;
    }
    Ok(coeffs)
}

/// Componentwise `(2, 1)` Padé approximant evaluated at `s`.
///
/// Falls back to the cubic Taylor polynomial (same order) when the
/// denominator coefficient is undefined or puts a pole near the step.
fn pade21<T: Scalar>(c: &[Vec<C<T>>], s: T) -> Vec<C<T>> {
    let half = T::lit(0.5);
    (0..c[0].len())
        .map(|i| {
            let (c0, c1, c2, c3) = (c[0][i], c[1][i], c[2][i], c[3][i]);
            let taylor = c0 + (c1 + (c2 + c3 * s) * s) * s;
            if c3.norm() == T::zero() {
                return c0 + (c1 + c2 * s) * s;
            }
            if c2.norm() == T::zero() {
                return taylor;
            }
            let b1 = -c3 / c2;
            if (b1 * s).norm() >= half {
                return taylor;
            }
            let a1 = c1 + b1 * c0;
            let a2 = c2 + b1 * c1;
            (c0 + (a1 + a2 * s) * s) / (b1 * s + T::one())
        })
        .collect()
}

/// High-accuracy reference for `x(t - dt)`: RK4 substeps followed by Newton polishing.
fn reference_point<T: Scalar, H: PathFunction<T>>(h: &H, x: &[C<T>], t: T, dt: T) -> Result<Vec<C<T>>, PredictorError> {
    let substeps = 64;
    let hstep = dt / T::from_usize_lossy(substeps);
    let mut xc = x.to_vec();
    let mut tc = t;
    for _ in 0..substeps {
        let mut cache = TangentCache::new();
        xc = predict(PredictorMethod::Rk4, h, &xc, tc, hstep, &mut cache)?.x;
        tc = tc - hstep;
    }
    let target_t = t - dt;
    let tol = T::lit(4.0) * T::epsilon() * (T::one() + norm2(&xc));
    let refined = crate::corrector::refine(h, &xc, target_t, tol, 12).map_err(|_| PredictorError::SingularJacobian)?;
    Ok(refined.x)
}

/// Least-squares slope of `log ‖x(t - dt) - x̂(t - dt)‖` against `log dt`.
///
/// `dt` runs down from `1e-1` to `1e-5` in steps of a fifth of a decade; errors
/// near the rounding floor are dropped and the fit uses the smallest decade
/// that remains, so paths with a nearby singularity are measured in their
/// asymptotic regime.
pub fn empirical_order<T: Scalar, H: PathFunction<T>>(
    method: PredictorMethod,
    h: &H,
    x: &[C<T>],
    t: T,
) -> Result<f64, PredictorError> {
    const WINDOW: usize = 6;
    let floor = 1e2 * T::epsilon().as_f64() * (1.0 + norm2(x).as_f64());
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for k in 0..=20 {
        let dt_f = 10f64.powf(-1.0 - 0.2 * k as f64);
        let dt = T::lit(dt_f);
        let mut cache = TangentCache::new();
        let pred = predict(method, h, x, t, dt, &mut cache)?;
        let Ok(truth) = reference_point(h, x, t, dt) else {
            // large steps can defeat the reference integration; smaller ones follow
            continue;
        };
        let diff: Vec<C<T>> = pred.x.iter().zip(&truth).map(|(a, b)| *a - *b).collect();
        let err = norm2(&diff).as_f64();
        if err > floor {
            pts.push((dt_f.ln(), err.ln()));
        }
    }
    let pts = &pts[pts.len().saturating_sub(WINDOW)..];
    if pts.len() < 3 {
        return Err(PredictorError::Indeterminate("prediction error below the noise floor"));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}
