//! Straight-line homotopies and affine-patched homotopies.
//!
//! Tracking runs from the start system at `t = 1` to the target at `t = 0`:
//! `H(x, t) = t * gamma * G(x) + (1 - t) * F(x)`.

use num_complex::Complex;
use rand::Rng;
use thiserror::Error;

use crate::algebra::{EvalScratch, PolynomialSystem};
use crate::linalg::{inner, Matrix};
use crate::scalar::{cz, Scalar, C};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HomotopyError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("t = {0} outside [0, 1]")]
    TimeOutOfRange(f64),
    #[error("gamma must be nonzero and finite")]
    InvalidGamma,
}

/// A map `H: C^n x R -> C^m` that a path tracker can follow.
///
/// The `*_into` methods assume correctly sized buffers and are the hot path;
/// `x.len() == nvars()`, `out.len() == neqs()`.
pub trait PathFunction<T: Scalar>: Sync {
    fn nvars(&self) -> usize;
    fn neqs(&self) -> usize;
    fn eval_into(&self, x: &[C<T>], t: T, out: &mut [C<T>]);
    /// Value and `H_x`; every Jacobian entry is overwritten.
    fn eval_jac_into(&self, x: &[C<T>], t: T, out: &mut [C<T>], jac: &mut Matrix<T>);
    /// `H_t`.
    fn dt_into(&self, x: &[C<T>], t: T, out: &mut [C<T>]);
    /// Taylor coefficients in `s` of `H(x(s), t + s)` where `x(s) = sum_k coeffs[k] s^k`;
    /// `out[i]` receives `coeffs.len()` coefficients of component `i`.
    fn series_into(&self, coeffs: &[Vec<C<T>>], t: T, out: &mut [Vec<C<T>>]);
}

impl<T: Scalar> PathFunction<T> for PolynomialSystem<T> {
    fn nvars(&self) -> usize {
        PolynomialSystem::nvars(self)
    }

    fn neqs(&self) -> usize {
        PolynomialSystem::neqs(self)
    }

    fn eval_into(&self, x: &[C<T>], _t: T, out: &mut [C<T>]) {
        PolynomialSystem::eval_into(self, x, out, &mut EvalScratch::default());
    }

    fn eval_jac_into(&self, x: &[C<T>], _t: T, out: &mut [C<T>], jac: &mut Matrix<T>) {
        PolynomialSystem::eval_jac_into(self, x, out, jac, &mut EvalScratch::default());
    }

    fn dt_into(&self, _x: &[C<T>], _t: T, out: &mut [C<T>]) {
        out.iter_mut().for_each(|z| *z = cz());
    }

    fn series_into(&self, coeffs: &[Vec<C<T>>], _t: T, out: &mut [Vec<C<T>>]) {
        self.eval_series(coeffs, out);
    }
}

/// Straight-line homotopy between a start system `G` and a target `F`.
#[derive(Debug, Clone)]
pub struct Homotopy<T: Scalar> {
    target: PolynomialSystem<T>,
    start: PolynomialSystem<T>,
    gamma: C<T>,
}

/// Draws `gamma` uniformly from the unit circle.
pub fn random_gamma<T: Scalar, R: Rng + ?Sized>(rng: &mut R) -> C<T> {
    let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    Complex::new(T::lit(angle.cos()), T::lit(angle.sin()))
}

/// Builds `H(x, t) = t * gamma * G(x) + (1 - t) * F(x)`; `gamma` is normalized to unit modulus.
pub fn straight_line<T: Scalar>(
    target: PolynomialSystem<T>,
    start: PolynomialSystem<T>,
    gamma: C<T>,
) -> Result<Homotopy<T>, HomotopyError> {
    if target.nvars() != start.nvars() {
        return Err(HomotopyError::DimensionMismatch {
            expected: target.nvars(),
            got: start.nvars(),
        });
    }
    if target.neqs() != start.neqs() {
        return Err(HomotopyError::DimensionMismatch {
            expected: target.neqs(),
            got: start.neqs(),
        });
    }
    let r = gamma.norm();
    if !(r > T::zero()) || !r.is_finite() {
        return Err(HomotopyError::InvalidGamma);
    }
    Ok(Homotopy {
        target,
        start,
        gamma: gamma / r,
    })
}

fn check_x<T: Scalar>(x: &[C<T>], n: usize) -> Result<(), HomotopyError> {
    if x.len() != n {
        return Err(HomotopyError::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    Ok(())
}

fn check_t<T: Scalar>(t: T) -> Result<(), HomotopyError> {
    if !(t >= T::zero() && t <= T::one()) {
        return Err(HomotopyError::TimeOutOfRange(t.as_f64()));
    }
    Ok(())
}

/// Checked evaluation helpers shared by both homotopy flavours.
pub trait CheckedEval<T: Scalar>: PathFunction<T> {
    fn eval_h(&self, x: &[C<T>], t: T) -> Result<Vec<C<T>>, HomotopyError> {
        check_x(x, self.nvars())?;
        check_t(t)?;
        let mut out = vec![cz(); self.neqs()];
        self.eval_into(x, t, &mut out);
        Ok(out)
    }

    fn jac_x(&self, x: &[C<T>], t: T) -> Result<Matrix<T>, HomotopyError> {
        check_x(x, self.nvars())?;
        check_t(t)?;
        let mut out = vec![cz(); self.neqs()];
        let mut jac = Matrix::zeros(self.neqs(), self.nvars());
        self.eval_jac_into(x, t, &mut out, &mut jac);
        Ok(jac)
    }

    fn d_t(&self, x: &[C<T>], t: T) -> Result<Vec<C<T>>, HomotopyError> {
        check_x(x, self.nvars())?;
        check_t(t)?;
        let mut out = vec![cz(); self.neqs()];
        self.dt_into(x, t, &mut out);
        Ok(out)
    }
}

impl<T: Scalar> CheckedEval<T> for Homotopy<T> {}
impl<T: Scalar, H: PathFunction<T>> CheckedEval<T> for Patched<'_, T, H> {}

impl<T: Scalar> Homotopy<T> {
    pub fn target(&self) -> &PolynomialSystem<T> {
        &self.target
    }

    pub fn start(&self) -> &PolynomialSystem<T> {
        &self.start
    }

    pub fn gamma(&self) -> C<T> {
        self.gamma
    }
}

impl<T: Scalar> PathFunction<T> for Homotopy<T> {
    fn nvars(&self) -> usize {
        self.target.nvars()
    }

    fn neqs(&self) -> usize {
        self.target.neqs()
    }

    fn eval_into(&self, x: &[C<T>], t: T, out: &mut [C<T>]) {
        let mut scratch = EvalScratch::default();
        let mut g = vec![cz(); out.len()];
        self.start.eval_into(x, &mut g, &mut scratch);
        self.target.eval_into(x, out, &mut scratch);
        let a = self.gamma * t;
        let b = T::one() - t;
        for (o, gi) in out.iter_mut().zip(&g) {
            *o = a * *gi + *o * b;
        }
    }

    fn eval_jac_into(&self, x: &[C<T>], t: T, out: &mut [C<T>], jac: &mut Matrix<T>) {
        let mut scratch = EvalScratch::default();
        let mut g = vec![cz(); out.len()];
        let mut jg = Matrix::zeros(jac.rows(), jac.cols());
        self.start.eval_jac_into(x, &mut g, &mut jg, &mut scratch);
        self.target.eval_jac_into(x, out, jac, &mut scratch);
        let a = self.gamma * t;
        let b = T::one() - t;
        for (o, gi) in out.iter_mut().zip(&g) {
            *o = a * *gi + *o * b;
        }
        for i in 0..jac.rows() {
            let (rf, rg) = (jac.row_mut(i), jg.row(i));
            for (f, g) in rf.iter_mut().zip(rg) {
                *f = a * *g + *f * b;
            }
        }
    }

    fn dt_into(&self, x: &[C<T>], _t: T, out: &mut [C<T>]) {
        let mut scratch = EvalScratch::default();
        let mut g = vec![cz(); out.len()];
        self.start.eval_into(x, &mut g, &mut scratch);
        self.target.eval_into(x, out, &mut scratch);
        for (o, gi) in out.iter_mut().zip(&g) {
            *o = self.gamma * *gi - *o;
        }
    }

    fn series_into(&self, coeffs: &[Vec<C<T>>], t: T, out: &mut [Vec<C<T>>]) {
        let order = coeffs.len();
        let mut g = vec![Vec::new(); out.len()];
        self.start.eval_series(coeffs, &mut g);
        self.target.eval_series(coeffs, out);
        // H = F + (t + s) D with D = gamma G - F
        for (f, gi) in out.iter_mut().zip(&g) {
            let d: Vec<C<T>> = gi.iter().zip(f.iter()).map(|(g, f)| self.gamma * *g - *f).collect();
            for k in 0..order {
                let mut v = f[k] + d[k] * t;
                if k > 0 {
                    v = v + d[k - 1];
                }
                f[k] = v;
            }
        }
    }
}

/// A homotopy with the affine patch equation `<x, v> - 1 = 0` appended.
///
/// `<x, v> = sum x_i conj(v_i)`, so the extra Jacobian row is `conj(v)`.
#[derive(Debug, Clone)]
pub struct Patched<'a, T: Scalar, H: PathFunction<T> = Homotopy<T>> {
    base: &'a H,
    patch: Vec<C<T>>,
}

/// Patched straight-line homotopy, the square system tracked in projective space.
pub type PatchedHomotopy<'a, T> = Patched<'a, T, Homotopy<T>>;

impl<'a, T: Scalar, H: PathFunction<T>> Patched<'a, T, H> {
    pub fn new(base: &'a H, patch: Vec<C<T>>) -> Result<Self, HomotopyError> {
        check_x(&patch, base.nvars())?;
        Ok(Self { base, patch })
    }

    pub fn base(&self) -> &'a H {
        self.base
    }

    pub fn patch(&self) -> &[C<T>] {
        &self.patch
    }

    pub fn set_patch(&mut self, v: &[C<T>]) {
        debug_assert_eq!(v.len(), self.patch.len());
        self.patch.copy_from_slice(v);
    }
}

impl<T: Scalar, H: PathFunction<T>> PathFunction<T> for Patched<'_, T, H> {
    fn nvars(&self) -> usize {
        self.base.nvars()
    }

    fn neqs(&self) -> usize {
        self.base.neqs() + 1
    }

    fn eval_into(&self, x: &[C<T>], t: T, out: &mut [C<T>]) {
        let m = self.base.neqs();
        self.base.eval_into(x, t, &mut out[..m]);
        out[m] = inner(x, &self.patch) - Complex::new(T::one(), T::zero());
    }

    fn eval_jac_into(&self, x: &[C<T>], t: T, out: &mut [C<T>], jac: &mut Matrix<T>) {
        let m = self.base.neqs();
        let n = self.base.nvars();
        let mut sub = Matrix::zeros(m, n);
        self.base.eval_jac_into(x, t, &mut out[..m], &mut sub);
        for i in 0..m {
            jac.row_mut(i).copy_from_slice(sub.row(i));
        }
        for (j, v) in self.patch.iter().enumerate() {
            jac[(m, j)] = v.conj();
        }
        out[m] = inner(x, &self.patch) - Complex::new(T::one(), T::zero());
    }

    fn dt_into(&self, x: &[C<T>], t: T, out: &mut [C<T>]) {
        let m = self.base.neqs();
        self.base.dt_into(x, t, &mut out[..m]);
        out[m] = cz();
    }

    fn series_into(&self, coeffs: &[Vec<C<T>>], t: T, out: &mut [Vec<C<T>>]) {
        let m = self.base.neqs();
        self.base.series_into(coeffs, t, &mut out[..m]);
        let row: Vec<C<T>> = coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let v = inner(c, &self.patch);
                if k == 0 {
                    v - Complex::new(T::one(), T::zero())
                } else {
                    v
                }
            })
            .collect();
        out[m] = row;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{parse_system, total_degree_start};
    use crate::linalg::{dist2, norm2};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C<f64> {
        C::new(re, im)
    }

    fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<C<f64>> {
        (0..n)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    fn sample() -> Homotopy<f64> {
        let f: PolynomialSystem<f64> = parse_system("vars: x, y\nx^2*y - 3*x + (1+2i)\nx*y^2 - y - 0.5\n").unwrap();
        let g = total_degree_start(&f).unwrap().system;
        straight_line(f, g, c(0.6, 0.8)).unwrap()
    }

    #[test]
    fn endpoints_and_midpoint() {
        let h = sample();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = rand_vec(&mut rng, 2);
        let f = h.target().evaluate(&x).unwrap();
        let g = h.start().evaluate(&x).unwrap();
        assert!(dist2(&h.eval_h(&x, 0.0).unwrap(), &f) < 1e-15);
        let gg: Vec<_> = g.iter().map(|z| z * h.gamma()).collect();
        assert!(dist2(&h.eval_h(&x, 1.0).unwrap(), &gg) < 1e-15);

        let h1 = straight_line(h.target().clone(), h.start().clone(), c(1.0, 0.0)).unwrap();
        let mid: Vec<_> = f.iter().zip(&g).map(|(a, b)| (a + b) * 0.5).collect();
        assert!(dist2(&h1.eval_h(&x, 0.5).unwrap(), &mid) < 1e-15);
    }

    #[test]
    fn linear_in_t() {
        let h = sample();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let x = rand_vec(&mut rng, 2);
            let t: f64 = rng.random_range(0.0..1.0);
            let h0 = h.eval_h(&x, 0.0).unwrap();
            let h1 = h.eval_h(&x, 1.0).unwrap();
            let ht = h.eval_h(&x, t).unwrap();
            let lin: Vec<_> = h0.iter().zip(&h1).map(|(a, b)| a * (1.0 - t) + b * t).collect();
            assert!(dist2(&ht, &lin) < 1e-14);
        }
    }

    #[test]
    fn jacobian_endpoints_and_differences() {
        let h = sample();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = rand_vec(&mut rng, 2);
        assert_eq!(h.jac_x(&x, 0.0).unwrap(), h.target().jacobian(&x).unwrap());
        let jg = h.start().jacobian(&x).unwrap();
        let j1 = h.jac_x(&x, 1.0).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((j1[(i, j)] - jg[(i, j)] * h.gamma()).norm() < 1e-15);
            }
        }
        let t = 0.37;
        let j = h.jac_x(&x, t).unwrap();
        let eps = 1e-6;
        for col in 0..2 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[col] += c(eps, 0.0);
            xm[col] -= c(eps, 0.0);
            let fp = h.eval_h(&xp, t).unwrap();
            let fm = h.eval_h(&xm, t).unwrap();
            for row in 0..2 {
                let fd = (fp[row] - fm[row]) / (2.0 * eps);
                assert!((fd - j[(row, col)]).norm() / j[(row, col)].norm().max(1.0) < 1e-6);
            }
        }
    }

    #[test]
    fn time_derivative() {
        let h = sample();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = rand_vec(&mut rng, 2);
        let a = h.d_t(&x, 0.2).unwrap();
        let b = h.d_t(&x, 0.9).unwrap();
        assert_eq!(a, b);
        let eps = 1e-5;
        let fp = h.eval_h(&x, 0.5 + eps).unwrap();
        let fm = h.eval_h(&x, 0.5 - eps).unwrap();
        let fd: Vec<_> = fp.iter().zip(&fm).map(|(p, m)| (p - m) / (2.0 * eps)).collect();
        assert!(dist2(&fd, &a) / norm2(&a) < 1e-7);

        let f = h.target().clone();
        let same = straight_line(f.clone(), f, c(1.0, 0.0)).unwrap();
        assert!(norm2(&same.d_t(&x, 0.3).unwrap()) == 0.0);
    }

    #[test]
    fn checked_errors() {
        let h = sample();
        assert!(matches!(h.eval_h(&[c(1.0, 0.0)], 0.5), Err(HomotopyError::DimensionMismatch { .. })));
        assert!(matches!(h.eval_h(&[c(1.0, 0.0); 2], 1.5), Err(HomotopyError::TimeOutOfRange(_))));
        assert!(matches!(h.jac_x(&[c(1.0, 0.0); 2], -0.1), Err(HomotopyError::TimeOutOfRange(_))));
        let f: PolynomialSystem<f64> = parse_system("vars: x\nx - 1\n").unwrap();
        let g: PolynomialSystem<f64> = parse_system("vars: x, y\nx - 1\ny\n").unwrap();
        assert!(straight_line(f.clone(), g, c(1.0, 0.0)).is_err());
        assert_eq!(
            straight_line(f.clone(), f, c(0.0, 0.0)).unwrap_err(),
            HomotopyError::InvalidGamma
        );
    }

    #[test]
    fn gamma_is_normalized() {
        let f: PolynomialSystem<f64> = parse_system("vars: x\nx - 1\n").unwrap();
        let h = straight_line(f.clone(), f, c(3.0, 4.0)).unwrap();
        assert!((h.gamma().norm() - 1.0).abs() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g: C<f64> = random_gamma(&mut rng);
        assert!((g.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn patched_rows() {
        let h = sample();
        let hom = h.target().homogenize();
        let st = h.start().homogenize();
        let hh = straight_line(hom, st, h.gamma()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = rand_vec(&mut rng, 3);
        let nx = norm2(&x);
        let xu: Vec<_> = x.iter().map(|z| z / nx).collect();
        let p = Patched::new(&hh, xu.clone()).unwrap();
        let v = p.eval_h(&xu, 0.3).unwrap();
        assert_eq!(v.len(), 3);
        assert!(v[2].norm() < 1e-15);

        let w = rand_vec(&mut rng, 3);
        let p = Patched::new(&hh, w.clone()).unwrap();
        let v = p.eval_h(&x, 0.3).unwrap();
        let direct = x.iter().zip(&w).fold(c(0.0, 0.0), |a, (p, q)| a + p * q.conj()) - 1.0;
        assert!((v[2] - direct).norm() < 1e-15);
        let j = p.jac_x(&x, 0.3).unwrap();
        for k in 0..3 {
            assert_eq!(j[(2, k)], w[k].conj());
        }
        assert_eq!(p.d_t(&x, 0.3).unwrap()[2], c(0.0, 0.0));
        assert!(Patched::new(&hh, vec![c(1.0, 0.0)]).is_err());
    }

    #[test]
    fn series_matches_evaluation() {
        let h = sample();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = rand_vec(&mut rng, 2);
        let b = rand_vec(&mut rng, 2);
        let t = 0.4;
        let mut out = vec![Vec::new(); 2];
        h.series_into(&[a.clone(), b.clone()], t, &mut out);
        let val = h.eval_h(&a, t).unwrap();
        let jb = h.jac_x(&a, t).unwrap().mul_vec(&b).unwrap();
        let ht = h.d_t(&a, t).unwrap();
        for i in 0..2 {
            assert!((out[i][0] - val[i]).norm() < 1e-14);
            assert!((out[i][1] - (jb[i] + ht[i])).norm() < 1e-13);
        }
    }
}
