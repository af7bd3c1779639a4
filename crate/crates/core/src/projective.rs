//! Affine coordinate patches `<x, v> = 1` for tracking homogenized systems.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::linalg::{inner, norm2};
use crate::scalar::{Scalar, C};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PatchError {
    #[error("cannot patch the zero vector")]
    ZeroVector,
    #[error("point is orthogonal to the patch vector")]
    Degenerate,
    #[error("unknown patch '{0}' (expected fixed or orthogonal)")]
    UnknownKind(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatchKind {
    FixedRandom,
    #[default]
    Orthogonal,
}

impl FromStr for PatchKind {
    type Err = PatchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fixed" | "fixed_random" | "fixed-random" => Ok(PatchKind::FixedRandom),
            "orthogonal" => Ok(PatchKind::Orthogonal),
            _ => Err(PatchError::UnknownKind(s.to_string())),
        }
    }
}

impl fmt::Display for PatchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PatchKind::FixedRandom => "fixed",
            PatchKind::Orthogonal => "orthogonal",
        })
    }
}

/// Current patch vector `v` together with its update rule.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchStrategy<T: Scalar> {
    pub kind: PatchKind,
    pub vector: Vec<C<T>>,
}

/// RNG for the fixed random patch of one path: stream `path` of the run seed.
pub fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

fn scale<T: Scalar>(x: &mut [C<T>], s: C<T>) {
    x.iter_mut().for_each(|z| *z = *z * s);
}

/// Chooses the initial patch for `x0` and returns it with `x0` moved onto it.
pub fn init_patch<T: Scalar>(kind: PatchKind, x0: &[C<T>], rng: &mut ChaCha8Rng) -> Result<(PatchStrategy<T>, Vec<C<T>>), PatchError> {
    if norm2(x0) == T::zero() {
        return Err(PatchError::ZeroVector);
    }
    match kind {
        PatchKind::FixedRandom => {
            let mut v: Vec<C<T>> = (0..x0.len())
                .map(|_| {
                    let re: f64 = StandardNormal.sample(rng);
                    let im: f64 = StandardNormal.sample(rng);
                    C::new(T::lit(re), T::lit(im))
                })
                .collect();
            let s = inner(x0, &v);
            if s.norm() == T::zero() {
                return Err(PatchError::Degenerate);
            }
            // <x0, c v> = conj(c) <x0, v>
            scale(&mut v, s.inv().conj());
            Ok((PatchStrategy { kind, vector: v }, x0.to_vec()))
        }
        PatchKind::Orthogonal => {
            let mut x = x0.to_vec();
            scale(&mut x, C::new(norm2(x0).recip(), T::zero()));
            Ok((PatchStrategy { kind, vector: x.clone() }, x))
        }
    }
}

impl<T: Scalar> PatchStrategy<T> {
    /// Moves an accepted point onto the patch (re-centering the patch for `Orthogonal`).
    pub fn update(&mut self, x: &mut [C<T>]) -> Result<(), PatchError> {
        match self.kind {
            PatchKind::FixedRandom => {
                let s = inner(x, &self.vector);
                if s.norm() == T::zero() {
                    return Err(PatchError::Degenerate);
                }
                scale(x, s.inv());
            }
            PatchKind::Orthogonal => {
                let n = norm2(x);
                if n == T::zero() {
                    return Err(PatchError::ZeroVector);
                }
                scale(x, C::new(n.recip(), T::zero()));
                self.vector.copy_from_slice(x);
            }
        }
        Ok(())
    }
}
