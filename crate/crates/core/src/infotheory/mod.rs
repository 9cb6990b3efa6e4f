//! Entropies, distances and brute-force oracles for the sampling and
//! small-superposition arguments behind the compiler.

mod ball;
mod cq;
mod lemma;
mod sampling;

pub use ball::{ball_bound_holds, check_ball_bound, hamming_ball_volume, BallReport};
pub use cq::{
    cq_distance, markov_distance, markov_projection, partial_trace, pointwise_purify, purified_joint, CqState,
};
pub use lemma::{
    check_small_superposition, random_superposition_spec, random_unitary, SuperpositionReport, SuperpositionSpec,
};
pub use sampling::sampling_violation_rate;

use thiserror::Error;

use crate::qsim::{BitString, DensityMatrix};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InfoError {
    #[error("argument error: {0}")]
    Argument(String),
}

/// Finite probability distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution<V, T: Real = f64> {
    support: Vec<V>,
    probs: Vec<T>,
}

impl<V, T: Real> Distribution<V, T> {
    pub fn new(support: Vec<V>, probs: Vec<T>) -> Result<Self, InfoError> {
        if support.len() != probs.len() {
            return Err(InfoError::Argument(format!("{} values but {} probabilities", support.len(), probs.len())));
        }
        if let Some(p) = probs.iter().find(|p| **p < T::zero() || !p.is_finite()) {
            return Err(InfoError::Argument(format!("invalid probability {p}")));
        }
        let total: T = probs.iter().copied().sum();
        if !support.is_empty() && (total - T::one()).abs() > T::norm_tol() {
            return Err(InfoError::Argument(format!("probabilities sum to {total}")));
        }
        Ok(Self { support, probs })
    }

    pub fn uniform(support: Vec<V>) -> Self {
        let p = T::one() / T::of(support.len().max(1) as f64);
        let probs = vec![p; support.len()];
        Self { support, probs }
    }

    /// Normalises nonnegative weights.
    pub fn from_weights(support: Vec<V>, weights: Vec<T>) -> Result<Self, InfoError> {
        let total: T = weights.iter().copied().sum();
        if total <= T::zero() {
            return Err(InfoError::Argument("weights sum to zero".into()));
        }
        Self::new(support, weights.into_iter().map(|w| w / total).collect())
    }

    pub fn support(&self) -> &[V] {
        &self.support
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&V, T)> {
        self.support.iter().zip(self.probs.iter().copied())
    }
}

/// `-log2 max_x P(x)`.
pub fn min_entropy<V, T: Real>(d: &Distribution<V, T>) -> Result<T, InfoError> {
    let max = d
        .probs
        .iter()
        .copied()
        .fold(None, |acc: Option<T>, p| Some(acc.map_or(p, |a| a.max(p))))
        .ok_or_else(|| InfoError::Argument("empty support".into()))?;
    Ok((-max.log2()).max(T::zero()))
}

/// Min-entropy of the first component given that the second equals `condition`.
pub fn conditional_min_entropy<A, B: PartialEq, T: Real>(
    joint: &Distribution<(A, B), T>,
    condition: &B,
) -> Result<T, InfoError> {
    let mut total = T::zero();
    let mut max = T::zero();
    for ((_, b), p) in joint.iter() {
        if b == condition {
            total = total + p;
            max = max.max(p);
        }
    }
    if total <= T::zero() {
        return Err(InfoError::Argument("conditioning event has probability zero".into()));
    }
    Ok((-(max / total).log2()).max(T::zero()))
}

/// `log2` of the number of eigenvalues above `rank_tol`.
pub fn max_entropy<T: Real>(rho: &DensityMatrix<T>, rank_tol: T) -> T {
    let rank = rho.eigenvalues().into_iter().filter(|&e| e > rank_tol).count().max(1);
    T::of(rank as f64).log2()
}

/// [`max_entropy`] with the scalar type's default rank tolerance.
pub fn max_entropy_default<T: Real>(rho: &DensityMatrix<T>) -> T {
    max_entropy(rho, T::of(T::RANK_TOL))
}

/// Binary entropy in bits, `h(0) = h(1) = 0`.
pub fn binary_entropy<T: Real>(mu: T) -> Result<T, InfoError> {
    if !(mu >= T::zero() && mu <= T::one()) {
        return Err(InfoError::Argument(format!("{mu} is outside [0, 1]")));
    }
    let term = |p: T| if p <= T::zero() { T::zero() } else { -p * p.log2() };
    Ok(term(mu) + term(T::one() - mu))
}

pub fn hamming(x: &BitString, y: &BitString) -> Result<usize, InfoError> {
    if x.len() != y.len() {
        return Err(InfoError::Argument(format!("lengths {} and {} differ", x.len(), y.len())));
    }
    Ok(x.iter().zip(y.iter()).filter(|(a, b)| a != b).count())
}

/// Fraction of differing positions; zero for empty strings.
pub fn relative_hamming(x: &BitString, y: &BitString) -> Result<f64, InfoError> {
    let d = hamming(x, y)?;
    Ok(if x.is_empty() { 0.0 } else { d as f64 / x.len() as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{CMatrix, C};
    use proptest::prelude::*;

    #[test]
    fn min_entropy_examples() {
        let u = Distribution::<u8>::uniform(vec![0, 1, 2, 3]);
        assert!((min_entropy(&u).unwrap() - 2.0).abs() < 1e-12);
        let point = Distribution::new(vec![7u8], vec![1.0]).unwrap();
        assert_eq!(min_entropy(&point).unwrap(), 0.0);
        let d = Distribution::new(vec![0, 1, 2], vec![0.5f64, 0.25, 0.25]).unwrap();
        assert!((min_entropy(&d).unwrap() - 1.0).abs() < 1e-12);
        let empty = Distribution::<u8>::new(vec![], vec![]).unwrap();
        assert!(min_entropy(&empty).is_err());
    }

    #[test]
    fn conditional_examples() {
        let pairs = vec![(0u8, 0u8), (1, 0), (0, 1), (1, 1)];
        let u = Distribution::<_, f64>::uniform(pairs);
        assert!((conditional_min_entropy(&u, &0).unwrap() - 1.0).abs() < 1e-12);
        let dup = Distribution::<_, f64>::uniform(vec![(0u8, 0u8), (1, 1)]);
        assert_eq!(conditional_min_entropy(&dup, &1).unwrap(), 0.0);
        assert!(conditional_min_entropy(&dup, &2).is_err());
    }

    #[test]
    fn max_entropy_examples() {
        let pure = DensityMatrix::<f64>::diagonal(&[1.0, 0.0]).unwrap();
        assert_eq!(max_entropy_default(&pure), 0.0);
        let mixed = DensityMatrix::<f64>::maximally_mixed(2);
        assert!((max_entropy_default(&mixed) - 1.0).abs() < 1e-12);
        // Rank-3 mixture of non-orthogonal pure states in dimension 4.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v1 = vec![C::new(1.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0)];
        let v2 = vec![C::new(s, 0.0), C::new(0.0, s), C::new(0.0, 0.0), C::new(0.0, 0.0)];
        let v3 = vec![C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(s, 0.0), C::new(-s, 0.0)];
        let m =
            CMatrix::outer(&v1).scale(0.5).add(&CMatrix::outer(&v2).scale(0.3)).add(&CMatrix::outer(&v3).scale(0.2));
        let rho = DensityMatrix::from_matrix(m).unwrap();
        assert!((max_entropy_default(&rho) - 3f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn binary_entropy_examples() {
        assert_eq!(binary_entropy(0.0f64).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0f64).unwrap(), 0.0);
        assert!((binary_entropy(0.5f64).unwrap() - 1.0).abs() < 1e-15);
        assert!((binary_entropy(0.25f64).unwrap() - 0.811_278_124_459_132_9).abs() < 1e-12);
        assert!(binary_entropy(1.5f64).is_err());
        assert!(binary_entropy(f64::NAN).is_err());
    }

    #[test]
    fn hamming_examples() {
        let a = BitString::parse("0011").unwrap();
        let b = BitString::parse("0101").unwrap();
        assert_eq!(hamming(&a, &b).unwrap(), 2);
        assert_eq!(hamming(&a, &a).unwrap(), 0);
        let x = BitString::parse("00000000").unwrap();
        let y = BitString::parse("10000001").unwrap();
        assert_eq!(relative_hamming(&x, &y).unwrap(), 0.25);
        assert!(hamming(&a, &x).is_err());
    }

    proptest! {
        #[test]
        fn min_entropy_is_within_bounds(weights in proptest::collection::vec(0.0f64..1.0, 1..20)) {
            prop_assume!(weights.iter().sum::<f64>() > 1e-6);
            let n = weights.len();
            let d = Distribution::from_weights((0..n).collect(), weights).unwrap();
            let h = min_entropy(&d).unwrap();
            prop_assert!(h >= 0.0);
            prop_assert!(h <= (n as f64).log2() + 1e-9);
        }
    }
}
