use std::fmt;
use std::str::FromStr;

use num_complex::Complex;

use super::{AlgebraError, Polynomial, PolynomialSystem};
use crate::scalar::{Scalar, C};

/// Benchmark families that can be generated without an input file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Cyclic,
    Katsura,
}

impl FromStr for Family {
    type Err = AlgebraError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cyclic" => Ok(Family::Cyclic),
            "katsura" => Ok(Family::Katsura),
            other => Err(AlgebraError::UnsupportedFamily(other.to_string())),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Cyclic => "cyclic",
            Family::Katsura => "katsura",
        })
    }
}

/// Generates `cyclic-n` (variables `x1..xn`) or `katsura-n` (variables `x0..xn`).
pub fn generate_benchmark<T: Scalar>(family: Family, n: usize) -> Result<PolynomialSystem<T>, AlgebraError> {
    if n < 2 {
        return Err(AlgebraError::SizeTooSmall { n });
    }
    match family {
        Family::Cyclic => Ok(cyclic(n)),
        Family::Katsura => Ok(katsura(n)),
    }
}

fn one<T: Scalar>() -> C<T> {
    Complex::new(T::one(), T::zero())
}

fn cyclic<T: Scalar>(n: usize) -> PolynomialSystem<T> {
    let mut polys = Vec::with_capacity(n);
    for k in 1..n {
        let terms = (0..n).map(|i| {
            let mut e = vec![0u32; n];
            for j in 0..k {
                e[(i + j) % n] = 1;
            }
            (one::<T>(), e)
        });
        polys.push(Polynomial::from_terms(n, terms));
    }
    polys.push(Polynomial::from_terms(
        n,
        [(one::<T>(), vec![1; n]), (-one::<T>(), vec![0; n])],
    ));
    let names = (1..=n).map(|i| format!("x{i}")).collect();
    PolynomialSystem::new(polys, names).expect("cyclic system is well formed")
}

fn katsura<T: Scalar>(n: usize) -> PolynomialSystem<T> {
    let nv = n + 1;
    let var = |i: usize| Polynomial::<T>::variable(nv, i);
    // x_l for l in -n..=n with x_{-l} = x_l, zero outside
    let sym = |l: i64| -> Option<usize> {
        let a = l.unsigned_abs() as usize;
        (a <= n).then_some(a)
    };
    let mut polys = Vec::with_capacity(nv);
    let mut lin = Polynomial::constant(nv, -one::<T>());
    lin = lin.add(&var(0));
    for l in 1..=n {
        lin = lin.add(&var(l).scale(one::<T>() * T::lit(2.0)));
    }
    polys.push(lin);
    for m in 0..n as i64 {
        let mut p = var(m as usize).scale(-one::<T>());
        for l in -(n as i64)..=(n as i64) {
            if let (Some(a), Some(b)) = (sym(l), sym(m - l)) {
                p = p.add(&var(a).mul(&var(b)));
            }
        }
        polys.push(p);
    }
    let names = (0..nv).map(|i| format!("x{i}")).collect();
    PolynomialSystem::new(polys, names).expect("katsura system is well formed")
}
