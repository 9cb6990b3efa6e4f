use rand::seq::index::sample;
use rand::Rng;
use serde::Serialize;

use super::{max_entropy_default, min_entropy, Distribution, InfoError};
use crate::linalg::{norm, CMatrix, C};
use crate::qsim::DensityMatrix;
use crate::scalar::Real;

/// `|phi_AE> = sum_{i in J} alpha_i |i>|phi_E^i>` with `|i>` computational
/// basis vectors of an `a_dim`-dimensional register.
#[derive(Clone, Debug)]
pub struct SuperpositionSpec<T: Real> {
    pub a_dim: usize,
    pub labels: Vec<usize>,
    pub amplitudes: Vec<C<T>>,
    pub side_states: Vec<Vec<C<T>>>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct SuperpositionReport {
    pub h_min_w: f64,
    pub h_min_w_tilde: f64,
    pub log_j: f64,
    pub h0_rho_e: f64,
    pub pass: bool,
}

impl<T: Real> SuperpositionSpec<T> {
    pub fn validate(&self) -> Result<(), InfoError> {
        let j = self.labels.len();
        if j == 0 {
            return Err(InfoError::Argument("index set J is empty".into()));
        }
        if self.amplitudes.len() != j || self.side_states.len() != j {
            return Err(InfoError::Argument("labels, amplitudes and side states differ in count".into()));
        }
        for (k, &l) in self.labels.iter().enumerate() {
            if l >= self.a_dim || self.labels[..k].contains(&l) {
                return Err(InfoError::Argument(format!("label {l} is out of range or repeated")));
            }
        }
        let total: T = self.amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (total - T::one()).abs() > T::norm_tol() {
            return Err(InfoError::Argument(format!("squared amplitudes sum to {total}")));
        }
        let e_dim = self.e_dim();
        for s in &self.side_states {
            if s.len() != e_dim || s.is_empty() {
                return Err(InfoError::Argument("side states differ in dimension".into()));
            }
            if (norm(s) - T::one()).abs() > T::norm_tol() {
                return Err(InfoError::Argument("side state is not unit length".into()));
            }
        }
        Ok(())
    }

    pub fn e_dim(&self) -> usize {
        self.side_states.first().map_or(0, Vec::len)
    }

    /// `rho_E = tr_A |phi_AE><phi_AE|`, which is `sum |alpha_i|^2 |phi_i><phi_i|`
    /// because the labels are orthogonal.
    pub fn reduced_e(&self) -> Result<DensityMatrix<T>, InfoError> {
        let e = self.e_dim();
        let mut m = CMatrix::zeros(e, e);
        for (a, s) in self.amplitudes.iter().zip(&self.side_states) {
            m = m.add(&CMatrix::outer(s).scale(a.norm_sqr()));
        }
        DensityMatrix::from_matrix(m).map_err(|e| InfoError::Argument(e.to_string()))
    }
}

/// Evaluates both inequalities of the small-superposition bound exactly.
/// `measure_basis` holds the basis vectors `|w>` as columns.
pub fn check_small_superposition<T: Real>(
    spec: &SuperpositionSpec<T>,
    measure_basis: &CMatrix<T>,
) -> Result<SuperpositionReport, InfoError> {
    spec.validate()?;
    if measure_basis.rows() != spec.a_dim || measure_basis.cols() != spec.a_dim {
        return Err(InfoError::Argument(format!(
            "basis is {}x{}, register has dimension {}",
            measure_basis.rows(),
            measure_basis.cols(),
            spec.a_dim
        )));
    }
    if !measure_basis.is_isometry(T::norm_tol()) {
        return Err(InfoError::Argument("measurement basis is not orthonormal".into()));
    }
    let e = spec.e_dim();
    let zero = C::new(T::zero(), T::zero());
    let mut p_w = Vec::with_capacity(spec.a_dim);
    let mut p_tilde = Vec::with_capacity(spec.a_dim);
    for w in 0..spec.a_dim {
        let mut v = vec![zero; e];
        let mut pt = T::zero();
        for ((&i, a), s) in spec.labels.iter().zip(&spec.amplitudes).zip(&spec.side_states) {
            let overlap = measure_basis[(i, w)].conj();
            let coef = *a * overlap;
            for (acc, x) in v.iter_mut().zip(s) {
                *acc = *acc + coef * x;
            }
            pt = pt + a.norm_sqr() * overlap.norm_sqr();
        }
        p_w.push(v.iter().map(|c| c.norm_sqr()).sum::<T>());
        p_tilde.push(pt);
    }
    let support: Vec<usize> = (0..spec.a_dim).collect();
    let w = Distribution::from_weights(support.clone(), p_w)?;
    let w_tilde = Distribution::from_weights(support, p_tilde)?;
    let h_w = min_entropy(&w)?.as_f64();
    let h_wt = min_entropy(&w_tilde)?.as_f64();
    let log_j = (spec.labels.len() as f64).log2();
    let h0 = max_entropy_default(&spec.reduced_e()?).as_f64();
    let slack = 1e-9;
    Ok(SuperpositionReport {
        h_min_w: h_w,
        h_min_w_tilde: h_wt,
        log_j,
        h0_rho_e: h0,
        pass: h_w >= h_wt - log_j - slack && h0 <= log_j + slack,
    })
}

fn random_complex<T: Real, R: Rng + ?Sized>(rng: &mut R) -> C<T> {
    C::new(T::of(rng.gen_range(-1.0..1.0)), T::of(rng.gen_range(-1.0..1.0)))
}

fn random_unit<T: Real, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<C<T>> {
    loop {
        let v: Vec<C<T>> = (0..dim).map(|_| random_complex(rng)).collect();
        let n = norm(&v);
        if n > T::of(1e-3) {
            return v.into_iter().map(|c| c / n).collect();
        }
    }
}

/// Random unitary by Gram-Schmidt on random complex columns.
pub fn random_unitary<T: Real, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix<T> {
    let mut cols: Vec<Vec<C<T>>> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v = random_unit::<T, R>(dim, rng);
        for c in &cols {
            let proj = crate::linalg::inner(c, &v);
            for (x, y) in v.iter_mut().zip(c) {
                *x = *x - proj * y;
            }
        }
        let n = norm(&v);
        if n > T::of(1e-3) {
            cols.push(v.into_iter().map(|c| c / n).collect());
        }
    }
    CMatrix::from_fn(dim, dim, |r, c| cols[c][r])
}

/// Random valid spec over at most `max_qubits` qubits in total (A has at
/// least one) with `|J| <= max_j`.
pub fn random_superposition_spec<T: Real, R: Rng + ?Sized>(
    max_qubits: usize,
    max_j: usize,
    rng: &mut R,
) -> SuperpositionSpec<T> {
    let a_qubits = rng.gen_range(1..=max_qubits.max(1));
    let e_qubits = rng.gen_range(0..=max_qubits.saturating_sub(a_qubits));
    let a_dim = 1 << a_qubits;
    let e_dim = 1 << e_qubits;
    let j = rng.gen_range(1..=max_j.clamp(1, a_dim));
    let labels = sample(rng, a_dim, j).into_vec();
    let amplitudes = random_unit::<T, R>(j, rng);
    let side_states = (0..j).map(|_| random_unit::<T, R>(e_dim, rng)).collect();
    SuperpositionSpec { a_dim, labels, amplitudes, side_states }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::hadamard;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hadamard_case_saturates() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let spec = SuperpositionSpec {
            a_dim: 2,
            labels: vec![0, 1],
            amplitudes: vec![C::new(h, 0.0), C::new(h, 0.0)],
            side_states: vec![vec![C::new(1.0, 0.0)]; 2],
        };
        let r = check_small_superposition(&spec, &hadamard()).unwrap();
        assert!(r.h_min_w.abs() < 1e-9);
        assert!((r.h_min_w_tilde - 1.0).abs() < 1e-9);
        assert_eq!(r.log_j, 1.0);
        assert!(r.pass);
    }

    #[test]
    fn single_term_is_trivial() {
        let spec = SuperpositionSpec {
            a_dim: 4,
            labels: vec![2],
            amplitudes: vec![C::new(0.0, 1.0)],
            side_states: vec![vec![C::new(0.6, 0.0), C::new(0.0, 0.8)]],
        };
        let u = random_unitary::<f64, _>(4, &mut ChaCha8Rng::seed_from_u64(3));
        let r = check_small_superposition(&spec, &u).unwrap();
        assert!((r.h_min_w - r.h_min_w_tilde).abs() < 1e-9);
        assert_eq!(r.h0_rho_e, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn inconsistent_dims_rejected() {
        let spec = SuperpositionSpec {
            a_dim: 2,
            labels: vec![0],
            amplitudes: vec![C::new(1.0, 0.0)],
            side_states: vec![vec![C::new(1.0, 0.0)]],
        };
        assert!(check_small_superposition(&spec, &CMatrix::identity(4)).is_err());
        let bad = SuperpositionSpec {
            labels: vec![0, 0],
            amplitudes: vec![C::new(0.6, 0.0), C::new(0.8, 0.0)],
            side_states: vec![vec![C::new(1.0, 0.0)]; 2],
            a_dim: 2,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn random_unitaries_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for d in [1, 2, 4, 8] {
            assert!(random_unitary::<f64, _>(d, &mut rng).is_isometry(1e-10));
        }
    }

    #[test]
    fn random_specs_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let spec = random_superposition_spec::<f64, _>(3, 4, &mut rng);
            let u = random_unitary(spec.a_dim, &mut rng);
            let r = check_small_superposition(&spec, &u).unwrap();
            assert!(r.pass, "{r:?}");
        }
    }
}
