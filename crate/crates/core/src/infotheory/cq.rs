use super::InfoError;
use crate::linalg::{hermitian_eigen, CMatrix, C};
use crate::qsim::{trace_distance, DensityMatrix};
use crate::scalar::Real;

/// Classical-quantum state `sum_x P(x) |x><x| (x) rho_E^x`.
#[derive(Clone, Debug)]
pub struct CqState<V, T: Real = f64> {
    entries: Vec<(V, T, DensityMatrix<T>)>,
}

fn qerr(e: crate::qsim::QsimError) -> InfoError {
    InfoError::Argument(e.to_string())
}

impl<V, T: Real> CqState<V, T> {
    pub fn new(entries: Vec<(V, T, DensityMatrix<T>)>) -> Result<Self, InfoError> {
        let Some((_, _, first)) = entries.first() else {
            return Err(InfoError::Argument("empty cq state".into()));
        };
        let dim = first.dim();
        if entries.iter().any(|(_, _, r)| r.dim() != dim) {
            return Err(InfoError::Argument("conditional states differ in dimension".into()));
        }
        if entries.iter().any(|(_, p, _)| *p < T::zero()) {
            return Err(InfoError::Argument("negative probability".into()));
        }
        let total: T = entries.iter().map(|(_, p, _)| *p).sum();
        if (total - T::one()).abs() > T::norm_tol() {
            return Err(InfoError::Argument(format!("probabilities sum to {total}")));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(V, T, DensityMatrix<T>)] {
        &self.entries
    }

    pub fn e_dim(&self) -> usize {
        self.entries[0].2.dim()
    }

    /// `rho_E = sum_x P(x) rho_E^x`.
    pub fn marginal_e(&self) -> Result<DensityMatrix<T>, InfoError> {
        let parts: Vec<(T, DensityMatrix<T>)> = self.entries.iter().map(|(_, p, r)| (*p, r.clone())).collect();
        DensityMatrix::mixture(&parts).map_err(qerr)
    }
}

/// Trace distance between two cq states over the same classical values.
pub fn cq_distance<V: PartialEq, T: Real>(a: &CqState<V, T>, b: &CqState<V, T>) -> Result<T, InfoError> {
    if a.entries.len() != b.entries.len() || a.e_dim() != b.e_dim() {
        return Err(InfoError::Argument("cq states have different shapes".into()));
    }
    let mut total = T::zero();
    for ((xa, pa, ra), (xb, pb, rb)) in a.entries.iter().zip(&b.entries) {
        if xa != xb {
            return Err(InfoError::Argument("classical values are not aligned".into()));
        }
        if (*pa - *pb).abs() <= T::norm_tol() {
            total = total + *pa * trace_distance(ra, rb).map_err(qerr)?;
        } else {
            let diff = ra.matrix().scale(*pa).sub(&rb.matrix().scale(*pb));
            let s: T = crate::linalg::hermitian_eigenvalues(&diff).into_iter().map(|e| e.abs()).sum();
            total = total + s * T::of(0.5);
        }
    }
    Ok(total.min(T::one()))
}

/// Replaces every `rho_E^{x,y}` by `rho_E^y = sum_x P(x|y) rho_E^{x,y}`, the
/// closest state in which `E` depends on `X` only through `Y`.
pub fn markov_projection<X: Clone, Y: Clone + PartialEq, T: Real>(
    state: &CqState<(X, Y), T>,
) -> Result<CqState<(X, Y), T>, InfoError> {
    let mut out = Vec::with_capacity(state.entries.len());
    for ((x, y), p, _) in &state.entries {
        let same: Vec<&((X, Y), T, DensityMatrix<T>)> =
            state.entries.iter().filter(|((_, y2), _, _)| y2 == y).collect();
        let py: T = same.iter().map(|(_, q, _)| *q).sum();
        let rho_y = if py > T::zero() {
            let parts: Vec<(T, DensityMatrix<T>)> = same.iter().map(|(_, q, r)| (*q / py, r.clone())).collect();
            DensityMatrix::mixture(&parts).map_err(qerr)?
        } else {
            same[0].2.clone()
        };
        out.push(((x.clone(), y.clone()), *p, rho_y));
    }
    CqState::new(out)
}

/// Distance of a two-register cq state from its Markov projection.
pub fn markov_distance<X: Clone + PartialEq, Y: Clone + PartialEq, T: Real>(
    state: &CqState<(X, Y), T>,
) -> Result<T, InfoError> {
    cq_distance(state, &markov_projection(state)?)
}

/// Partial trace of a bipartite matrix on `d_first (x) d_second`.
pub fn partial_trace<T: Real>(m: &CMatrix<T>, d_first: usize, d_second: usize, keep_first: bool) -> CMatrix<T> {
    let zero = C::new(T::zero(), T::zero());
    if keep_first {
        CMatrix::from_fn(d_first, d_first, |r, c| {
            (0..d_second).fold(zero, |acc, k| acc + m[(r * d_second + k, c * d_second + k)])
        })
    } else {
        CMatrix::from_fn(d_second, d_second, |r, c| {
            (0..d_first).fold(zero, |acc, k| acc + m[(k * d_second + r, k * d_second + c)])
        })
    }
}

/// Replaces each `rho_E^x` by a pure state on `E (x) R` whose `E` marginal is
/// `rho_E^x`. `R` has the largest rank among the `rho_E^x`, so it is trivial
/// when all of them are already pure.
pub fn pointwise_purify<V: Clone, T: Real>(state: &CqState<V, T>) -> Result<CqState<V, T>, InfoError> {
    let e = state.e_dim();
    let cutoff = T::epsilon() * T::of(64.0 * e as f64);
    let spectra: Vec<(Vec<T>, CMatrix<T>)> =
        state.entries.iter().map(|(_, _, r)| hermitian_eigen(r.matrix())).collect();
    let d_r = spectra.iter().map(|(vals, _)| vals.iter().filter(|&&v| v > cutoff).count()).max().unwrap_or(1).max(1);
    let mut out = Vec::with_capacity(state.entries.len());
    for ((x, p, _), (vals, vecs)) in state.entries.iter().zip(spectra) {
        let mut order: Vec<usize> = (0..e).collect();
        order.sort_by(|&a, &b| vals[b].partial_cmp(&vals[a]).expect("finite eigenvalues"));
        let mut psi = vec![C::new(T::zero(), T::zero()); e * d_r];
        for (k, &idx) in order.iter().take(d_r).enumerate() {
            let lam = vals[idx].max(T::zero());
            if lam <= cutoff {
                continue;
            }
            let s = lam.sqrt();
            for row in 0..e {
                psi[row * d_r + k] = vecs[(row, idx)] * s;
            }
        }
        let n = crate::linalg::norm(&psi);
        let psi: Vec<C<T>> = psi.into_iter().map(|c| c / n).collect();
        out.push((x.clone(), *p, DensityMatrix::from_pure(&psi).map_err(qerr)?));
    }
    CqState::new(out)
}

/// `rho_ER = sum_x P(x) |psi_ER^x><psi_ER^x|` for a pointwise purification.
pub fn purified_joint<V: Clone, T: Real>(state: &CqState<V, T>) -> Result<DensityMatrix<T>, InfoError> {
    pointwise_purify(state)?.marginal_e()
}
