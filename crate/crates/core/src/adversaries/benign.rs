//! How far a receiver is from benign, measured on the EPR-version state.

use num_traits::ToPrimitive;
use serde::Serialize;

use crate::compiler::EprSnapshot;
use crate::infotheory::{hamming_ball_volume, max_entropy_default, purified_joint, CqState};
use crate::linalg::C;
use crate::protocol::ProtocolError;
use crate::qsim::{Basis, BasisString, BitString, DensityMatrix, DENSITY_CAP};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubsetEntry {
    pub subset: Vec<usize>,
    /// Worst-case `H_min(X_I | X_rest = x_rest)`.
    pub h_min: f64,
    /// `d_H(theta_I, theta_hat_I)`.
    pub hamming: usize,
    /// `hamming - h_min`; positive values must be paid for by `beta n`.
    pub gap: f64,
}

/// Entropic profile of one state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Profile {
    pub entries: Vec<SubsetEntry>,
    /// `H_0` of Bob's pointwise-purified residual register.
    pub h0: f64,
    /// Smallest `beta` meeting both inequalities for the listed subsets.
    pub beta: f64,
}

/// The state projected onto outcomes near the committed string, as in the
/// sampling argument.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdealState {
    pub radius: usize,
    /// Squared norm of the projection.
    pub weight: f64,
    /// Trace distance between the normalized projection and the real state.
    pub distance: f64,
    /// `log2` of the number of strings in the ball.
    pub log_ball: f64,
    pub profile: Profile,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenignReport {
    pub n: usize,
    pub theta_hat: BasisString,
    pub error_rate: f64,
    pub epsilon: f64,
    pub real: Profile,
    /// Smallest grid value at or above `real.beta`.
    pub beta_witness: Option<f64>,
    pub ideal: Option<IdealState>,
}

/// Bob's register is every live qubit entangled with Alice's survivors.
fn registers(s: &EprSnapshot) -> Result<(Vec<usize>, Vec<usize>), ProtocolError> {
    let closure = s.state.block_closure(&s.alice_qubits)?;
    let e: Vec<usize> = closure.into_iter().filter(|q| !s.alice_qubits.contains(q)).collect();
    if s.alice_qubits.len() + e.len() > DENSITY_CAP {
        return Err(ProtocolError::Argument(format!(
            "{} qubits exceed the analysis cap {DENSITY_CAP}",
            s.alice_qubits.len() + e.len()
        )));
    }
    Ok((s.alice_qubits.clone(), e))
}

/// Applies `H` to every leading qubit whose basis is `x`.
fn rotate(psi: &mut [C<f64>], bases: &BasisString, total: usize) {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for (i, b) in bases.iter().enumerate() {
        if b != Basis::Times {
            continue;
        }
        let stride = 1usize << (total - 1 - i);
        for base in 0..psi.len() {
            if base & stride == 0 {
                let (a, c) = (psi[base], psi[base | stride]);
                psi[base] = (a + c) * h;
                psi[base | stride] = (a - c) * h;
            }
        }
    }
}

/// Entropic profile of a pure state on `A (x) E` with `A` leading.
fn profile(
    psi: &[C<f64>],
    n: usize,
    e: usize,
    theta: &BasisString,
    theta_hat: &BasisString,
    subsets: &[Vec<usize>],
) -> Result<Profile, ProtocolError> {
    let total = n + e;
    let d_e = 1usize << e;
    let mut rotated = psi.to_vec();
    rotate(&mut rotated, theta, total);
    let mut probs = vec![0.0; 1 << n];
    let mut cq = Vec::new();
    for (x, p) in probs.iter_mut().enumerate() {
        let v = &rotated[x * d_e..(x + 1) * d_e];
        *p = v.iter().map(|c| c.norm_sqr()).sum();
        if *p > 1e-12 {
            let unit: Vec<C<f64>> = v.iter().map(|c| c / p.sqrt()).collect();
            cq.push((x, *p, DensityMatrix::from_pure(&unit)?));
        }
    }
    let h0 = if e == 0 {
        0.0
    } else {
        let state = CqState::new(cq).map_err(|e| ProtocolError::Argument(e.to_string()))?;
        max_entropy_default(&purified_joint(&state).map_err(|e| ProtocolError::Argument(e.to_string()))?)
    };
    let mut entries = Vec::with_capacity(subsets.len());
    let mut beta = (h0 / n as f64).max(0.0);
    for subset in subsets {
        // Bit masks over the MSB-first index of x.
        let mask_i: usize = subset.iter().map(|&i| 1usize << (n - 1 - i)).sum();
        let mut joint_max = std::collections::BTreeMap::<usize, (f64, f64)>::new();
        for (x, &p) in probs.iter().enumerate() {
            let entry = joint_max.entry(x & !mask_i).or_insert((0.0, 0.0));
            entry.0 += p;
            entry.1 = entry.1.max(p);
        }
        let worst =
            joint_max.values().filter(|(marg, _)| *marg > 1e-12).map(|(marg, top)| top / marg).fold(0.0f64, f64::max);
        let h_min = -worst.log2();
        let hamming = subset.iter().filter(|&&i| theta.get(i) != theta_hat.get(i)).count();
        let gap = hamming as f64 - h_min;
        beta = beta.max(gap / n as f64);
        entries.push(SubsetEntry { subset: subset.clone(), h_min, hamming, gap });
    }
    Ok(Profile { entries, h0, beta })
}

/// All singletons and the full set.
pub fn default_subsets(n: usize) -> Vec<Vec<usize>> {
    let mut s: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    s.push((0..n).collect());
    s
}

/// Benign-deviation diagnostics for an accepted EPR-version run. The real
/// state is always profiled; the projection onto the ball of radius
/// `floor((err + epsilon) n)` around the committed string is profiled when
/// the snapshot carries extracted values.
pub fn benign_deviation_report(
    snapshot: &EprSnapshot,
    beta_grid: &[f64],
    subsets: Option<&[Vec<usize>]>,
    epsilon: f64,
) -> Result<BenignReport, ProtocolError> {
    let (theta_hat, x_hat) = snapshot
        .extracted
        .clone()
        .ok_or_else(|| ProtocolError::Argument("the snapshot carries no extracted bases".into()))?;
    let (a, e) = registers(snapshot)?;
    let n = a.len();
    if n == 0 {
        return Err(ProtocolError::Argument("no surviving positions".into()));
    }
    let defaults = default_subsets(n);
    let subsets = subsets.unwrap_or(&defaults);
    if subsets.iter().flatten().any(|&i| i >= n) {
        return Err(ProtocolError::Argument("subset index out of range".into()));
    }
    let order: Vec<usize> = a.iter().chain(&e).copied().collect();
    let psi = snapshot.state.pure_vector(&order)?;
    let real = profile(&psi, n, e.len(), &snapshot.theta, &theta_hat, subsets)?;
    let beta_witness = beta_grid.iter().copied().filter(|&b| b + 1e-9 >= real.beta).reduce(f64::min);

    let error_rate = snapshot.error_rate();
    let radius = (((error_rate + epsilon) * n as f64) + 1e-9).floor() as usize;
    let ideal = ideal_state(&psi, n, e.len(), &theta_hat, &x_hat, radius)
        .map(|(phi, weight)| -> Result<IdealState, ProtocolError> {
            let profile = profile(&phi, n, e.len(), &snapshot.theta, &theta_hat, subsets)?;
            let log_ball = hamming_ball_volume(n as u32, radius as u32).to_f64().unwrap_or(f64::INFINITY).log2();
            Ok(IdealState { radius, weight, distance: (1.0 - weight).max(0.0).sqrt(), log_ball, profile })
        })
        .transpose()?;
    Ok(BenignReport { n, theta_hat, error_rate, epsilon, real, beta_witness, ideal })
}

/// Projects `A` onto `span{|y>_theta_hat : d(y, x_hat) <= radius}`. Returns
/// the normalized state and the squared norm, or `None` for a null projection.
fn ideal_state(
    psi: &[C<f64>],
    n: usize,
    e: usize,
    theta_hat: &BasisString,
    x_hat: &BitString,
    radius: usize,
) -> Option<(Vec<C<f64>>, f64)> {
    let total = n + e;
    let d_e = 1usize << e;
    let mut phi = psi.to_vec();
    rotate(&mut phi, theta_hat, total);
    let center: usize = x_hat.iter().fold(0, |acc, b| (acc << 1) | b as usize);
    for y in 0..(1usize << n) {
        if (y ^ center).count_ones() as usize > radius {
            phi[y * d_e..(y + 1) * d_e].iter_mut().for_each(|c| *c = C::new(0.0, 0.0));
        }
    }
    rotate(&mut phi, theta_hat, total);
    let weight: f64 = phi.iter().map(|c| c.norm_sqr()).sum();
    if weight < 1e-12 {
        return None;
    }
    let s = weight.sqrt();
    phi.iter_mut().for_each(|c| *c /= s);
    Some((phi, weight))
}

/// Memory budgets of a bounded-storage receiver in the compiled protocol
/// and in the inner protocol it reduces to.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BudgetCheck {
    pub m: usize,
    pub n: usize,
    /// `gamma (1 - alpha)`.
    pub compiled_gamma: f64,
    /// `floor(gamma (1 - alpha) m)` qubits over the compiled run.
    pub compiled_budget: usize,
    /// `floor(gamma n)` qubits over the inner positions.
    pub inner_budget: usize,
    pub equal: bool,
}

pub fn budget_arithmetic(gamma: f64, m: usize, alpha: f64) -> BudgetCheck {
    let n = m - crate::protocol::test_size(m, alpha).min(m);
    let compiled_gamma = gamma * (1.0 - alpha);
    let compiled_budget = ((compiled_gamma * m as f64) + 1e-9).floor() as usize;
    let inner_budget = ((gamma * n as f64) + 1e-9).floor() as usize;
    BudgetCheck { m, n, compiled_gamma, compiled_budget, inner_budget, equal: compiled_budget == inner_budget }
}
