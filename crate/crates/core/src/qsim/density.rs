use super::QsimError;
use crate::linalg::{hermitian_eigenvalues, CMatrix, C};
use crate::scalar::Real;

/// Validated density operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<T: Real> {
    m: CMatrix<T>,
}

impl<T: Real> DensityMatrix<T> {
    /// Checks Hermiticity, unit trace and positivity, then symmetrises away
    /// rounding residue.
    pub fn from_matrix(m: CMatrix<T>) -> Result<Self, QsimError> {
        if !m.is_square() || m.rows() == 0 {
            return Err(QsimError::Argument(format!("{}x{} is not a valid density shape", m.rows(), m.cols())));
        }
        if !m.is_hermitian(T::norm_tol()) {
            return Err(QsimError::Argument("matrix is not Hermitian".into()));
        }
        let tr = m.trace();
        if (tr.re - T::one()).abs() > T::norm_tol() || tr.im.abs() > T::norm_tol() {
            return Err(QsimError::Argument(format!("trace {tr} is not 1")));
        }
        let half = T::of(0.5);
        let sym = m.add(&m.adjoint()).scale(half);
        let min = hermitian_eigenvalues(&sym).first().copied().unwrap_or_else(T::zero);
        if min < -T::of(T::PSD_TOL) {
            return Err(QsimError::Argument(format!("negative eigenvalue {min}")));
        }
        Ok(Self { m: sym })
    }

    pub fn from_pure(v: &[C<T>]) -> Result<Self, QsimError> {
        Self::from_matrix(CMatrix::outer(v))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let p = T::one() / T::of(dim as f64);
        Self { m: CMatrix::from_real_diag(&vec![p; dim]) }
    }

    /// Diagonal state with the given probabilities.
    pub fn diagonal(probs: &[T]) -> Result<Self, QsimError> {
        Self::from_matrix(CMatrix::from_real_diag(probs))
    }

    /// Convex combination `sum p_i rho_i`.
    pub fn mixture(parts: &[(T, DensityMatrix<T>)]) -> Result<Self, QsimError> {
        let Some((_, first)) = parts.first() else {
            return Err(QsimError::Argument("empty mixture".into()));
        };
        let dim = first.dim();
        let mut acc = CMatrix::zeros(dim, dim);
        for (p, rho) in parts {
            if rho.dim() != dim {
                return Err(QsimError::Argument("mixture of different dimensions".into()));
            }
            acc = acc.add(&rho.m.scale(*p));
        }
        Self::from_matrix(acc)
    }

    pub fn dim(&self) -> usize {
        self.m.rows()
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.m
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<T> {
        hermitian_eigenvalues(&self.m)
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self { m: self.m.kron(&other.m) }
    }
}

/// `1/2 tr|rho - sigma|`, clamped to `[0, 1]`.
pub fn trace_distance<T: Real>(rho: &DensityMatrix<T>, sigma: &DensityMatrix<T>) -> Result<T, QsimError> {
    if rho.dim() != sigma.dim() {
        return Err(QsimError::Argument(format!("dimensions {} and {} differ", rho.dim(), sigma.dim())));
    }
    let diff = rho.m.sub(&sigma.m);
    let sum: T = hermitian_eigenvalues(&diff).into_iter().map(|e| e.abs()).sum();
    Ok((sum * T::of(0.5)).max(T::zero()).min(T::one()))
}
