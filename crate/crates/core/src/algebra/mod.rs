//! Multivariate complex polynomials and polynomial systems.

mod families;
mod parse;
mod start;

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex;
use thiserror::Error;

use crate::linalg::Matrix;
use crate::scalar::{cz, Scalar, C};

pub use families::{generate_benchmark, Family};
pub use parse::{parse_polynomial, parse_system, ParseError};
pub use start::{total_degree_start, StartPair};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("system is not square ({equations} equations, {variables} variables)")]
    NotSquare { equations: usize, variables: usize },
    #[error("polynomial {index} has degree 0")]
    ConstantPolynomial { index: usize },
    #[error("system must contain at least one polynomial")]
    Empty,
    #[error("Bezout number overflows u64")]
    Overflow,
    #[error("unsupported benchmark family '{0}'")]
    UnsupportedFamily(String),
    #[error("benchmark size {n} too small (need n >= 2)")]
    SizeTooSmall { n: usize },
}

/// One monomial `coeff * x^exps`.
#[derive(Debug, Clone, PartialEq)]
pub struct Term<T: Scalar> {
    pub coeff: C<T>,
    pub exps: Vec<u32>,
    /// Nonzero `(variable, exponent)` pairs of `exps`.
    support: Vec<(usize, u32)>,
}

impl<T: Scalar> Term<T> {
    fn new(coeff: C<T>, exps: Vec<u32>) -> Self {
        let support = exps
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(i, &e)| (i, e))
            .collect();
        Self {
            coeff,
            exps,
            support,
        }
    }

    pub fn degree(&self) -> u32 {
        self.exps.iter().sum()
    }
}

/// Sparse polynomial in a fixed number of variables.
///
/// Terms are kept in descending graded-lexicographic order with distinct
/// exponent vectors and nonzero coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial<T: Scalar> {
    nvars: usize,
    terms: Vec<Term<T>>,
}

fn grlex_desc(a: &[u32], b: &[u32]) -> std::cmp::Ordering {
    let da: u32 = a.iter().sum();
    let db: u32 = b.iter().sum();
    db.cmp(&da).then_with(|| b.cmp(a))
}

impl<T: Scalar> Polynomial<T> {
    /// Builds a polynomial, merging repeated exponent vectors and dropping zero terms.
    ///
    /// Panics if an exponent vector does not have length `nvars`.
    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (C<T>, Vec<u32>)>) -> Self {
        let mut acc: BTreeMap<Vec<u32>, C<T>> = BTreeMap::new();
        for (c, e) in terms {
            assert_eq!(e.len(), nvars, "exponent vector length must equal variable count");
            let slot = acc.entry(e).or_insert_with(cz);
            *slot = *slot + c;
        }
        let mut terms: Vec<Term<T>> = acc
            .into_iter()
            .filter(|(_, c)| !(c.re == T::zero() && c.im == T::zero()))
            .map(|(e, c)| Term::new(c, e))
            .collect();
        terms.sort_by(|a, b| grlex_desc(&a.exps, &b.exps));
        Self { nvars, terms }
    }

    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: Vec::new(),
        }
    }

    pub fn constant(nvars: usize, c: C<T>) -> Self {
        Self::from_terms(nvars, [(c, vec![0; nvars])])
    }

    /// The polynomial `x_var`.
    pub fn variable(nvars: usize, var: usize) -> Self {
        let mut e = vec![0; nvars];
        e[var] = 1;
        Self::from_terms(nvars, [(Complex::new(T::one(), T::zero()), e)])
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[Term<T>] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.iter().map(Term::degree).max().unwrap_or(0)
    }

    /// `true` when all terms share the same total degree.
    pub fn is_homogeneous(&self) -> bool {
        let d = self.degree();
        self.terms.iter().all(|t| t.degree() == d)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_terms(
            self.nvars,
            self.terms
                .iter()
                .chain(other.terms.iter())
                .map(|t| (t.coeff, t.exps.clone())),
        )
    }

    pub fn scale(&self, c: C<T>) -> Self {
        Self::from_terms(self.nvars, self.terms.iter().map(|t| (t.coeff * c, t.exps.clone())))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex::new(-T::one(), T::zero())))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let e = a.exps.iter().zip(&b.exps).map(|(x, y)| x + y).collect();
                out.push((a.coeff * b.coeff, e));
            }
        }
        Self::from_terms(self.nvars, out)
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::constant(self.nvars, Complex::new(T::one(), T::zero()));
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// Evaluates at `x` (no length check beyond debug builds).
    pub fn eval(&self, x: &[C<T>]) -> C<T> {
        debug_assert_eq!(x.len(), self.nvars);
        self.terms.iter().fold(cz(), |acc, t| {
            acc + t
                .support
                .iter()
                .fold(t.coeff, |m, &(v, e)| m * x[v].powu(e))
        })
    }

    /// Prints the polynomial in the system file grammar.
    pub fn to_text(&self, names: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut s = String::new();
        for (k, t) in self.terms.iter().enumerate() {
            let (neg, coeff) = if t.coeff.im == T::zero() && t.coeff.re < T::zero() {
                (true, Complex::new(-t.coeff.re, T::zero()))
            } else {
                (false, t.coeff)
            };
            if k == 0 {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            let is_one = coeff.re == T::one() && coeff.im == T::zero();
            let mut factors: Vec<String> = Vec::new();
            if !is_one || t.support.is_empty() {
                factors.push(fmt_coeff(coeff));
            }
            for &(v, e) in &t.support {
                if e == 1 {
                    factors.push(names[v].clone());
                } else {
                    factors.push(format!("{}^{}", names[v], e));
                }
            }
            s.push_str(&factors.join("*"));
        }
        s
    }
}

fn fmt_real<T: Scalar>(v: T) -> String {
    let a = v.abs();
    if a == T::zero() || (a >= T::lit(1e-5) && a < T::lit(1e15)) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn fmt_coeff<T: Scalar>(c: C<T>) -> String {
    if c.im == T::zero() {
        fmt_real(c.re)
    } else {
        let sign = if c.im.is_sign_negative() { '-' } else { '+' };
        format!("({}{}{}i)", fmt_real(c.re), sign, fmt_real(c.im.abs()))
    }
}

/// Ordered list of polynomials over shared, named variables.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialSystem<T: Scalar> {
    polys: Vec<Polynomial<T>>,
    var_names: Vec<String>,
    /// Highest exponent of each variable over the whole system.
    max_exp: Vec<u32>,
}

/// Scratch buffers for repeated system evaluation at different points.
#[derive(Debug, Clone, Default)]
pub struct EvalScratch<T: Scalar> {
    powers: Vec<C<T>>,
}

impl<T: Scalar> PolynomialSystem<T> {
    pub fn new(polys: Vec<Polynomial<T>>, var_names: Vec<String>) -> Result<Self, AlgebraError> {
        if polys.is_empty() {
            return Err(AlgebraError::Empty);
        }
        let n = var_names.len();
        if let Some(p) = polys.iter().find(|p| p.nvars != n) {
            return Err(AlgebraError::DimensionMismatch {
                expected: n,
                got: p.nvars,
            });
        }
        let mut max_exp = vec![0u32; n];
        for p in &polys {
            for t in &p.terms {
                for &(v, e) in &t.support {
                    max_exp[v] = max_exp[v].max(e);
                }
            }
        }
        Ok(Self {
            polys,
            var_names,
            max_exp,
        })
    }

    pub fn polys(&self) -> &[Polynomial<T>] {
        &self.polys
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    pub fn nvars(&self) -> usize {
        self.var_names.len()
    }

    pub fn neqs(&self) -> usize {
        self.polys.len()
    }

    pub fn is_square(&self) -> bool {
        self.nvars() == self.neqs()
    }

    pub fn degrees(&self) -> Vec<u32> {
        self.polys.iter().map(Polynomial::degree).collect()
    }

    fn check_len(&self, x: &[C<T>]) -> Result<(), AlgebraError> {
        if x.len() != self.nvars() {
            return Err(AlgebraError::DimensionMismatch {
                expected: self.nvars(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[C<T>]) -> Result<Vec<C<T>>, AlgebraError> {
        self.check_len(x)?;
        let mut out = vec![cz(); self.neqs()];
        self.eval_into(x, &mut out, &mut EvalScratch::default());
        Ok(out)
    }

    pub fn jacobian(&self, x: &[C<T>]) -> Result<Matrix<T>, AlgebraError> {
        self.check_len(x)?;
        let mut vals = vec![cz(); self.neqs()];
        let mut jac = Matrix::zeros(self.neqs(), self.nvars());
        self.eval_jac_into(x, &mut vals, &mut jac, &mut EvalScratch::default());
        Ok(jac)
    }

    fn fill_powers(&self, x: &[C<T>], scratch: &mut EvalScratch<T>) -> usize {
        let stride = self.max_exp.iter().copied().max().unwrap_or(0) as usize + 1;
        scratch.powers.clear();
        scratch.powers.resize(stride * x.len(), cz());
        for (j, &xj) in x.iter().enumerate() {
            let base = j * stride;
            let mut p = Complex::new(T::one(), T::zero());
            scratch.powers[base] = p;
            for e in 1..=self.max_exp[j] as usize {
                p = p * xj;
                scratch.powers[base + e] = p;
            }
        }
        stride
    }

    /// Writes `F(x)` into `out` using caller-owned scratch space.
    pub fn eval_into(&self, x: &[C<T>], out: &mut [C<T>], scratch: &mut EvalScratch<T>) {
        debug_assert_eq!(x.len(), self.nvars());
        let stride = self.fill_powers(x, scratch);
        let pw = &scratch.powers;
        for (o, p) in out.iter_mut().zip(&self.polys) {
            *o = p.terms.iter().fold(cz(), |acc, t| {
                acc + t
                    .support
                    .iter()
                    .fold(t.coeff, |m, &(v, e)| m * pw[v * stride + e as usize])
            });
        }
    }

    /// Writes `F(x)` and the Jacobian (overwriting every entry) using scratch space.
    pub fn eval_jac_into(&self, x: &[C<T>], out: &mut [C<T>], jac: &mut Matrix<T>, scratch: &mut EvalScratch<T>) {
        debug_assert_eq!(x.len(), self.nvars());
        debug_assert_eq!((jac.rows(), jac.cols()), (self.neqs(), self.nvars()));
        let stride = self.fill_powers(x, scratch);
        let pw = &scratch.powers;
        jac.fill_zero();
        for (i, p) in self.polys.iter().enumerate() {
            let mut val = cz();
            let row = jac.row_mut(i);
            for t in &p.terms {
                let factors = &t.support;
                let mono = factors
                    .iter()
                    .fold(t.coeff, |m, &(v, e)| m * pw[v * stride + e as usize]);
                val = val + mono;
                for (k, &(v, e)) in factors.iter().enumerate() {
                    let mut d = t.coeff * T::from_u32(e).unwrap() * pw[v * stride + e as usize - 1];
                    for (l, &(w, f)) in factors.iter().enumerate() {
                        if l != k {
                            d = d * pw[w * stride + f as usize];
                        }
                    }
                    row[v] = row[v] + d;
                }
            }
            out[i] = val;
        }
    }

    /// Truncated Taylor evaluation.
    ///
    /// `coeffs[k]` holds the `s^k` coefficient vector of a curve `x(s)`; writes the
    /// `s^0..s^K` coefficients of each `f_i(x(s))` into `out[i]` with `K = coeffs.len() - 1`.
    pub fn eval_series(&self, coeffs: &[Vec<C<T>>], out: &mut [Vec<C<T>>]) {
        let order = coeffs.len();
        let n = self.nvars();
        // powers[j][e] is the series of x_j(s)^e
        let mut powers: Vec<Vec<Vec<C<T>>>> = Vec::with_capacity(n);
        for j in 0..n {
            let xj: Vec<C<T>> = coeffs.iter().map(|c| c[j]).collect();
            let mut pj = Vec::with_capacity(self.max_exp[j] as usize + 1);
            let mut one = vec![cz(); order];
            one[0] = Complex::new(T::one(), T::zero());
            pj.push(one);
            for e in 1..=self.max_exp[j] as usize {
                let next = series_mul(&pj[e - 1], &xj);
                pj.push(next);
            }
            powers.push(pj);
        }
        for (o, p) in out.iter_mut().zip(&self.polys) {
            o.clear();
            o.resize(order, cz());
            for t in &p.terms {
                let mut m = vec![cz(); order];
                m[0] = t.coeff;
                for &(v, e) in &t.support {
                    m = series_mul(&m, &powers[v][e as usize]);
                }
                for (a, b) in o.iter_mut().zip(&m) {
                    *a = *a + *b;
                }
            }
        }
    }

    /// Bezout number: the product of the total degrees.
    pub fn bezout_number(&self) -> Result<u64, AlgebraError> {
        if !self.is_square() {
            return Err(AlgebraError::NotSquare {
                equations: self.neqs(),
                variables: self.nvars(),
            });
        }
        self.degrees()
            .into_iter()
            .try_fold(1u64, |acc, d| acc.checked_mul(u64::from(d)))
            .ok_or(AlgebraError::Overflow)
    }

    /// Name used for the homogenizing variable: `x_0`, with underscores appended on collision.
    fn homogenizing_name(&self) -> String {
        let mut name = "x_0".to_string();
        while self.var_names.iter().any(|v| *v == name) {
            name.push('_');
        }
        name
    }

    /// Homogenizes every polynomial with a new leading variable `x_0`.
    ///
    /// The output variables are `[x_0, x_1, .., x_n]`; setting `x_0 = 1` recovers the input.
    pub fn homogenize(&self) -> PolynomialSystem<T> {
        let n = self.nvars();
        let polys = self
            .polys
            .iter()
            .map(|p| {
                let d = p.degree();
                Polynomial::from_terms(
                    n + 1,
                    p.terms.iter().map(|t| {
                        let mut e = Vec::with_capacity(n + 1);
                        e.push(d - t.degree());
                        e.extend_from_slice(&t.exps);
                        (t.coeff, e)
                    }),
                )
            })
            .collect();
        let mut names = Vec::with_capacity(n + 1);
        names.push(self.homogenizing_name());
        names.extend(self.var_names.iter().cloned());
        PolynomialSystem::new(polys, names).expect("homogenization preserves shape")
    }

    /// Multiplies the system on the left by a square matrix, `A F(x)`.
    pub fn transform(&self, a: &Matrix<T>) -> Result<PolynomialSystem<T>, AlgebraError> {
        if a.cols() != self.neqs() {
            return Err(AlgebraError::DimensionMismatch {
                expected: self.neqs(),
                got: a.cols(),
            });
        }
        let polys = (0..a.rows())
            .map(|i| {
                self.polys
                    .iter()
                    .enumerate()
                    .fold(Polynomial::zero(self.nvars()), |acc, (j, p)| acc.add(&p.scale(a[(i, j)])))
            })
            .collect();
        PolynomialSystem::new(polys, self.var_names.clone())
    }

    /// Serializes into the system file format.
    pub fn to_text(&self) -> String {
        let mut s = format!("vars: {}\n", self.var_names.join(", "));
        for p in &self.polys {
            s.push_str(&p.to_text(&self.var_names));
            s.push('\n');
        }
        s
    }
}

impl<T: Scalar> fmt::Display for PolynomialSystem<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Truncated product of two power series of equal length.
pub(crate) fn series_mul<T: Scalar>(a: &[C<T>], b: &[C<T>]) -> Vec<C<T>> {
    let order = a.len();
    let mut out = vec![cz(); order];
    for (i, ai) in a.iter().enumerate() {
        if ai.re == T::zero() && ai.im == T::zero() {
            continue;
        }
        for (j, bj) in b.iter().take(order - i).enumerate() {
            out[i + j] = out[i + j] + *ai * *bj;
        }
    }
    out
}
