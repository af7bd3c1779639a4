use num_complex::Complex;

use super::{AlgebraError, Polynomial, PolynomialSystem};
use crate::scalar::{Scalar, C};

/// A start system together with all of its isolated solutions.
#[derive(Debug, Clone)]
pub struct StartPair<T: Scalar> {
    pub system: PolynomialSystem<T>,
    pub solutions: Vec<Vec<C<T>>>,
}

/// Total-degree start system `x_i^{d_i} - 1` for a square target.
///
/// Solutions enumerate the products of roots of unity in lexicographic order of
/// the root indices, so the count equals the Bezout number of the target.
pub fn total_degree_start<T: Scalar>(target: &PolynomialSystem<T>) -> Result<StartPair<T>, AlgebraError> {
    if !target.is_square() {
        return Err(AlgebraError::NotSquare {
            equations: target.neqs(),
            variables: target.nvars(),
        });
    }
    target.bezout_number()?;
    let n = target.nvars();
    let degrees = target.degrees();
    if let Some(index) = degrees.iter().position(|&d| d == 0) {
        return Err(AlgebraError::ConstantPolynomial { index });
    }
    let one = Complex::new(T::one(), T::zero());
    let polys = degrees
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let mut e = vec![0u32; n];
            e[i] = d;
            Polynomial::from_terms(n, [(one, e), (-one, vec![0; n])])
        })
        .collect();
    let system = PolynomialSystem::new(polys, target.var_names().to_vec())?;

    let roots: Vec<Vec<C<T>>> = degrees
        .iter()
        .map(|&d| {
            (0..d)
                .map(|k| {
                    let angle = T::lit(2.0) * T::PI() * T::from_u32(k).unwrap() / T::from_u32(d).unwrap();
                    Complex::new(angle.cos(), angle.sin())
                })
                .collect()
        })
        .collect();
    let total: usize = degrees.iter().map(|&d| d as usize).product();
    let mut solutions = Vec::with_capacity(total);
    let mut idx = vec![0usize; n];
    for _ in 0..total {
        solutions.push(idx.iter().enumerate().map(|(i, &k)| roots[i][k]).collect());
        // odometer, last index fastest
        for i in (0..n).rev() {
            idx[i] += 1;
            if idx[i] < degrees[i] as usize {
                break;
            }
            idx[i] = 0;
        }
    }
    Ok(StartPair { system, solutions })
}
