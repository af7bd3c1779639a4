//! Step-size control: the adaptive controller driven by Lipschitz and
//! predictor-error estimates, and the classical expand/contract baseline.

use thiserror::Error;

use crate::corrector::omega_estimate;
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepControlError {
    #[error("argument must be nonnegative, got {0}")]
    NegativeArgument(f64),
    #[error("omega and eta must be positive")]
    NonPositiveEstimate,
    #[error("invalid controller parameter: {0}")]
    InvalidParameter(&'static str),
}

/// `g(x) = sqrt(4x + 1) - 1`, evaluated as `4x / (sqrt(4x + 1) + 1)` to avoid cancellation.
pub fn g<T: Scalar>(x: T) -> Result<T, StepControlError> {
    if x < T::zero() || x.is_nan() {
        return Err(StepControlError::NegativeArgument(x.as_f64()));
    }
    Ok(g_unchecked(x))
}

fn g_unchecked<T: Scalar>(x: T) -> T {
    let four_x = T::lit(4.0) * x;
    four_x / ((four_x + T::one()).sqrt() + T::one())
}

/// `δ_{N,ω} = min{ sqrt(ω/2) (τ / (1 + ωτ/2))^{1/(2N)}, 1 }`.
pub fn delta<T: Scalar>(n: usize, omega: T, tau: T) -> T {
    let half_omega = omega * T::lit(0.5);
    let base = tau / (T::one() + half_omega * tau);
    let expo = T::one() / T::from_usize_lossy(2 * n);
    (half_omega.sqrt() * base.powf(expo)).min(T::one())
}

/// Largest step for which `N + 1` Newton iterations from the prediction reach `τ`,
/// capped by the remaining interval length.
pub fn max_step<T: Scalar>(omega: T, eta: T, p: u32, n: usize, tau: T, remaining: T) -> Result<T, StepControlError> {
    if !(omega > T::zero() && eta > T::zero()) {
        return Err(StepControlError::NonPositiveEstimate);
    }
    let raw = (g_unchecked(delta(n, omega, tau)) / (omega * eta)).powf(T::one() / T::lit(p as f64));
    Ok(raw.min(remaining))
}

/// Step-size factor after a rejected step; `None` means "halve".
pub fn correction_factor<T: Scalar>(theta0: T, delta_val: T, p: u32) -> Option<T> {
    (theta0 > delta_val).then(|| (g_unchecked(delta_val) / g_unchecked(theta0)).powf(T::one() / T::lit(p as f64)))
}

/// Unclamped step proposed after an accepted step.
pub fn prediction_step<T: Scalar>(mu: T, g_delta: T, omega: T, err: T, p: u32, dt: T) -> T {
    mu * (g_delta / (omega * err)).powf(T::one() / T::lit(p as f64)) * dt
}

/// Constants shared by both controllers.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ControllerParams<T: Scalar> {
    pub mu: T,
    pub dt_min: T,
    pub dt_max: T,
    pub dt_init: T,
    pub omega_init: T,
    pub omega_floor: T,
    /// Relative floor on the prediction error: `err >= err_floor * (1 + ‖x‖)`.
    pub err_floor: T,
    /// Forgetting factor for the Lipschitz estimate.
    pub omega_decay: T,
    /// Baseline contraction factor `a`.
    pub a: T,
    /// Baseline successes before expansion.
    pub m: u32,
    /// Upper bound on the step factor after a rejection. `1` applies the
    /// correction strategy as is; `0.5` never shrinks less than halving does.
    pub correction_cap: T,
    /// Do not enlarge the step on the first success after a rejection.
    pub hold_after_rejection: bool,
}

impl<T: Scalar> Default for ControllerParams<T> {
    fn default() -> Self {
        Self {
            mu: T::lit(0.9),
            dt_min: T::lit(1e-14),
            dt_max: T::lit(0.25),
            dt_init: T::lit(0.1),
            omega_init: T::one(),
            omega_floor: T::lit(1e-8),
            err_floor: T::lit(1e-14),
            omega_decay: T::lit(0.5),
            a: T::lit(0.5),
            m: 5,
            correction_cap: T::lit(0.5),
            hold_after_rejection: true,
        }
    }
}

impl<T: Scalar> ControllerParams<T> {
    /// The prediction and correction strategies without the two safeguards.
    pub fn literal() -> Self {
        Self {
            correction_cap: T::one(),
            hold_after_rejection: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), StepControlError> {
        use StepControlError::InvalidParameter as E;
        if !(self.mu > T::zero() && self.mu <= T::one()) {
            return Err(E("mu must lie in (0, 1]"));
        }
        if !(self.dt_min > T::zero() && self.dt_min <= self.dt_max) {
            return Err(E("need 0 < dt_min <= dt_max"));
        }
        if !(self.dt_init >= self.dt_min && self.dt_init <= self.dt_max) {
            return Err(E("initial dt must lie in [dt_min, dt_max]"));
        }
        if !(self.omega_init > T::zero() && self.omega_floor > T::zero() && self.err_floor > T::zero()) {
            return Err(E("omega and error floors must be positive"));
        }
        if !(self.omega_decay >= T::zero() && self.omega_decay <= T::one()) {
            return Err(E("omega decay must lie in [0, 1]"));
        }
        if !(self.a > T::zero() && self.a < T::one()) {
            return Err(E("a must lie in (0, 1)"));
        }
        if !(self.correction_cap > T::zero() && self.correction_cap <= T::one()) {
            return Err(E("correction cap must lie in (0, 1]"));
        }
        if self.m == 0 {
            return Err(E("M must be positive"));
        }
        Ok(())
    }
}

/// State of the adaptive controller.
#[derive(Debug, Clone)]
pub struct AdaptiveState<T: Scalar> {
    pub omega: T,
    pub eta_prev: Option<T>,
    pub eta_curr: Option<T>,
    pub n: usize,
    pub tau: T,
    pub p: u32,
    pub dt: T,
    pub params: ControllerParams<T>,
    /// Whether the last attempt was rejected.
    pub after_rejection: bool,
}

impl<T: Scalar> AdaptiveState<T> {
    /// `n` is the number of full Newton steps `N` (the corrector runs `N + 1` iterations).
    pub fn new(n: usize, tau: T, p: u32, params: ControllerParams<T>) -> Self {
        Self {
            omega: params.omega_init,
            eta_prev: None,
            eta_curr: None,
            n,
            tau,
            p,
            dt: params.dt_init,
            params,
            after_rejection: false,
        }
    }

    pub fn delta(&self) -> T {
        delta(self.n, self.omega, self.tau)
    }

    /// Updates the estimates after an accepted step of length `dt_used` and
    /// returns the next step, clamped to `[dt_min, min(dt_max, remaining)]`.
    pub fn on_success(&mut self, correction_norms: &[T], prediction_error: T, x_norm: T, dt_used: T, remaining: T) -> T {
        let pr = &self.params;
        if let Some(est) = omega_estimate(correction_norms) {
            self.omega = est.max(pr.omega_decay * self.omega);
        }
        self.omega = self.omega.max(pr.omega_floor);

        let err = prediction_error.max(pr.err_floor * (T::one() + x_norm));
        let dt_p = dt_used.powi(self.p as i32);
        let eta = err / dt_p;
        let eta_hat = match self.eta_curr {
            Some(prev) => (T::lit(2.0) * eta - prev).max(eta),
            None => eta,
        };
        self.eta_prev = self.eta_curr;
        self.eta_curr = Some(eta);
        let err_adj = err * (eta_hat / eta);

        let mut proposed = prediction_step(pr.mu, g_unchecked(self.delta()), self.omega, err_adj, self.p, dt_used);
        if self.after_rejection && pr.hold_after_rejection {
            proposed = proposed.min(dt_used);
        }
        self.after_rejection = false;
        self.dt = clamp(proposed, pr.dt_min, pr.dt_max.min(remaining));
        self.dt
    }

    /// Shrinks the step after a rejection. The result may fall below `dt_min`,
    /// which the caller treats as a path failure.
    pub fn on_failure(&mut self, theta0: Option<T>, dt_used: T) -> T {
        let factor = theta0
            .and_then(|th| correction_factor(th, self.delta(), self.p))
            .unwrap_or(T::lit(0.5));
        self.after_rejection = true;
        self.dt = dt_used * factor.min(self.params.correction_cap);
        self.dt
    }
}

fn clamp<T: Scalar>(x: T, lo: T, hi: T) -> T {
    // the upper limit wins when the interval is shorter than dt_min
    x.max(lo).min(hi)
}

/// Fixed-factor baseline: shrink by `a` on rejection, expand by `1/a` after `M` successes in a row.
#[derive(Debug, Clone)]
pub struct SimpleState<T: Scalar> {
    pub a: T,
    pub m: u32,
    pub consecutive_successes: u32,
    pub dt: T,
    pub dt_min: T,
    pub dt_max: T,
}

impl<T: Scalar> SimpleState<T> {
    pub fn new(params: &ControllerParams<T>) -> Self {
        Self {
            a: params.a,
            m: params.m,
            consecutive_successes: 0,
            dt: params.dt_init,
            dt_min: params.dt_min,
            dt_max: params.dt_max,
        }
    }

    pub fn update(&mut self, accepted: bool) -> T {
        if accepted {
            self.consecutive_successes += 1;
            if self.consecutive_successes >= self.m {
                self.dt = self.dt / self.a;
                self.consecutive_successes = 0;
            }
            self.dt = self.dt.min(self.dt_max);
        } else {
            self.consecutive_successes = 0;
            // not clamped below: falling under dt_min signals failure upstream
            self.dt = (self.dt * self.a).min(self.dt_max);
        }
        self.dt
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerKind {
    #[default]
    Adaptive,
    Simple,
}

impl std::str::FromStr for ControllerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "adaptive" | "new" => Ok(ControllerKind::Adaptive),
            "simple" | "old" => Ok(ControllerKind::Simple),
            _ => Err(format!("unknown controller '{s}' (expected adaptive|new or simple|old)")),
        }
    }
}

impl std::fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ControllerKind::Adaptive => "adaptive",
            ControllerKind::Simple => "simple",
        })
    }
}

/// Either controller behind one interface for the tracking loop.
#[derive(Debug, Clone)]
pub enum Controller<T: Scalar> {
    Adaptive(AdaptiveState<T>),
    Simple(SimpleState<T>),
}

impl<T: Scalar> Controller<T> {
    pub fn new(kind: ControllerKind, n: usize, tau: T, p: u32, params: ControllerParams<T>) -> Self {
        match kind {
            ControllerKind::Adaptive => Controller::Adaptive(AdaptiveState::new(n, tau, p, params)),
            ControllerKind::Simple => Controller::Simple(SimpleState::new(&params)),
        }
    }

    pub fn dt(&self) -> T {
        match self {
            Controller::Adaptive(s) => s.dt,
            Controller::Simple(s) => s.dt,
        }
    }

    pub fn omega(&self) -> Option<T> {
        match self {
            Controller::Adaptive(s) => Some(s.omega),
            Controller::Simple(_) => None,
        }
    }

    pub fn on_success(&mut self, correction_norms: &[T], prediction_error: T, x_norm: T, dt_used: T, remaining: T) -> T {
        match self {
            Controller::Adaptive(s) => s.on_success(correction_norms, prediction_error, x_norm, dt_used, remaining),
            Controller::Simple(s) => {
                s.dt = dt_used;
                s.update(true)
            }
        }
    }

    pub fn on_failure(&mut self, theta0: Option<T>, dt_used: T) -> T {
        match self {
            Controller::Adaptive(s) => s.on_failure(theta0, dt_used),
            Controller::Simple(s) => {
                s.dt = dt_used;
                s.update(false)
            }
        }
    }
}
