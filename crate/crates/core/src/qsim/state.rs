use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{bb84_amplitudes, Basis, BasisString, BitString, DensityMatrix, QsimError};
use crate::linalg::{kron_vec, norm, CMatrix, C};
use crate::scalar::Real;

/// Widest dense block a register accepts unless configured otherwise.
pub const DEFAULT_DENSE_CAP: usize = 20;
/// Widest register a reduced density matrix may be built for.
pub const DENSITY_CAP: usize = 10;

/// Classical outcome left behind by a measured qubit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub bit: u8,
    pub basis: Basis,
}

#[derive(Clone, Copy, Debug)]
enum Slot {
    Live(usize),
    Consumed(Record),
}

#[derive(Clone, Debug)]
enum Block<T: Real> {
    Product {
        qubit: usize,
        bit: u8,
        basis: Basis,
    },
    /// `qubits[0]` is the most significant bit of the amplitude index.
    Dense {
        qubits: Vec<usize>,
        amps: Vec<C<T>>,
    },
}

impl<T: Real> Block<T> {
    fn qubits(&self) -> Vec<usize> {
        match self {
            Block::Product { qubit, .. } => vec![*qubit],
            Block::Dense { qubits, .. } => qubits.clone(),
        }
    }

    fn vector(&self) -> (Vec<usize>, Vec<C<T>>) {
        match self {
            Block::Product { qubit, bit, basis } => (vec![*qubit], bb84_amplitudes(*bit, *basis).to_vec()),
            Block::Dense { qubits, amps } => (qubits.clone(), amps.clone()),
        }
    }
}

/// Lazily factored register of qubits.
///
/// Qubit indices are never reused: a measured qubit keeps its index and turns
/// into a classical [`Record`].
#[derive(Clone, Debug)]
pub struct QuantumState<T: Real> {
    slots: Vec<Slot>,
    blocks: Vec<Option<Block<T>>>,
    free: Vec<usize>,
    dense_cap: usize,
}

impl<T: Real> Default for QuantumState<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Reorders a state vector whose qubits are listed in `from` so that they are
/// listed in `to` instead. Both must hold the same qubits.
pub(crate) fn permute_vector<T: Real>(amps: &[C<T>], from: &[usize], to: &[usize]) -> Vec<C<T>> {
    if from == to {
        return amps.to_vec();
    }
    let shifts = position_shifts(from, to);
    (0..amps.len()).map(|j| amps[remap_index(j, &shifts)]).collect()
}

/// For every position of `to`, the pair (shift in `to`, shift in `from`).
fn position_shifts(from: &[usize], to: &[usize]) -> Vec<(usize, usize)> {
    let k = to.len();
    to.iter()
        .enumerate()
        .map(|(p, q)| {
            let op = from.iter().position(|x| x == q).expect("same qubit set");
            (k - 1 - p, k - 1 - op)
        })
        .collect()
}

fn remap_index(j: usize, shifts: &[(usize, usize)]) -> usize {
    shifts.iter().fold(0, |acc, &(ns, os)| acc | (((j >> ns) & 1) << os))
}

/// Same reordering as [`permute_vector`] applied to both indices of a matrix.
pub(crate) fn permute_matrix<T: Real>(m: &CMatrix<T>, from: &[usize], to: &[usize]) -> CMatrix<T> {
    if from == to {
        return m.clone();
    }
    let shifts = position_shifts(from, to);
    let map: Vec<usize> = (0..m.rows()).map(|j| remap_index(j, &shifts)).collect();
    CMatrix::from_fn(m.rows(), m.cols(), |r, c| m[(map[r], map[c])])
}

fn apply_local_gate<T: Real>(amps: &mut [C<T>], width: usize, pos: usize, gate: &CMatrix<T>) {
    let bit = 1usize << (width - 1 - pos);
    for i in 0..amps.len() {
        if i & bit == 0 {
            let (a0, a1) = (amps[i], amps[i | bit]);
            amps[i] = gate[(0, 0)] * a0 + gate[(0, 1)] * a1;
            amps[i | bit] = gate[(1, 0)] * a0 + gate[(1, 1)] * a1;
        }
    }
}

fn distinct(positions: &[usize]) -> Result<(), QsimError> {
    let mut seen = HashSet::with_capacity(positions.len());
    for &p in positions {
        if !seen.insert(p) {
            return Err(QsimError::Argument(format!("qubit {p} listed twice")));
        }
    }
    Ok(())
}

impl<T: Real> QuantumState<T> {
    pub fn new() -> Self {
        Self::with_dense_cap(DEFAULT_DENSE_CAP)
    }

    pub fn with_dense_cap(dense_cap: usize) -> Self {
        Self { slots: Vec::new(), blocks: Vec::new(), free: Vec::new(), dense_cap }
    }

    /// Product state `|x>_theta`.
    pub fn prepare_bb84(x: &BitString, theta: &BasisString) -> Result<Self, QsimError> {
        let mut s = Self::new();
        s.append_bb84(x, theta)?;
        Ok(s)
    }

    /// Appends `|x>_theta` to the register and returns the new qubit indices.
    pub fn append_bb84(&mut self, x: &BitString, theta: &BasisString) -> Result<Vec<usize>, QsimError> {
        if x.len() != theta.len() {
            return Err(QsimError::Argument(format!("{} bits but {} bases", x.len(), theta.len())));
        }
        let start = self.slots.len();
        for i in 0..x.len() {
            let q = start + i;
            let id = self.push_block(Block::Product { qubit: q, bit: x.get(i), basis: theta.get(i) });
            self.slots.push(Slot::Live(id));
        }
        Ok((start..start + x.len()).collect())
    }

    /// `count` EPR pairs; pair `i` occupies qubits `i` and `count + i`.
    pub fn prepare_epr_pairs(count: usize) -> Result<Self, QsimError> {
        let mut s = Self::new();
        if count > 0 && s.dense_cap < 2 {
            return Err(QsimError::Resource("dense cap below 2 cannot hold an EPR pair".into()));
        }
        s.slots = vec![Slot::Live(usize::MAX); 2 * count];
        let h = C::new(T::FRAC_1_SQRT_2(), T::zero());
        let z = C::new(T::zero(), T::zero());
        for i in 0..count {
            let id = s.push_block(Block::Dense { qubits: vec![i, count + i], amps: vec![h, z, z, h] });
            s.slots[i] = Slot::Live(id);
            s.slots[count + i] = Slot::Live(id);
        }
        Ok(s)
    }

    fn push_block(&mut self, b: Block<T>) -> usize {
        match self.free.pop() {
            Some(id) => {
                self.blocks[id] = Some(b);
                id
            }
            None => {
                self.blocks.push(Some(b));
                self.blocks.len() - 1
            }
        }
    }

    fn take_block(&mut self, id: usize) -> Block<T> {
        let b = self.blocks[id].take().expect("live block");
        self.free.push(id);
        b
    }

    fn block(&self, id: usize) -> &Block<T> {
        self.blocks[id].as_ref().expect("live block")
    }

    fn live_id(&self, q: usize) -> Result<usize, QsimError> {
        match self.slots.get(q) {
            None => Err(QsimError::Argument(format!("qubit {q} out of range ({} qubits)", self.slots.len()))),
            Some(Slot::Consumed(_)) => Err(QsimError::State(format!("qubit {q} was already measured"))),
            Some(Slot::Live(id)) => Ok(*id),
        }
    }

    /// Number of qubit indices ever allocated, measured ones included.
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn dense_cap(&self) -> usize {
        self.dense_cap
    }

    pub fn set_dense_cap(&mut self, cap: usize) {
        self.dense_cap = cap;
    }

    pub fn is_live(&self, q: usize) -> bool {
        matches!(self.slots.get(q), Some(Slot::Live(_)))
    }

    pub fn live_qubits(&self) -> Vec<usize> {
        (0..self.slots.len()).filter(|&q| self.is_live(q)).collect()
    }

    pub fn record(&self, q: usize) -> Option<Record> {
        match self.slots.get(q) {
            Some(Slot::Consumed(r)) => Some(*r),
            _ => None,
        }
    }

    /// Qubits sharing a factor with `q`.
    pub fn block_qubits(&self, q: usize) -> Result<Vec<usize>, QsimError> {
        Ok(self.block(self.live_id(q)?).qubits())
    }

    /// Union of the factors touching `qubits`, sorted.
    pub fn block_closure(&self, qubits: &[usize]) -> Result<Vec<usize>, QsimError> {
        let mut ids = Vec::new();
        for &q in qubits {
            let id = self.live_id(q)?;
            if !ids.contains(&id) {
                ids.push(id);
            }
        }
        let mut all: Vec<usize> = ids.iter().flat_map(|&id| self.block(id).qubits()).collect();
        all.sort_unstable();
        Ok(all)
    }

    /// Qubit lists of all dense factors.
    pub fn dense_blocks(&self) -> Vec<Vec<usize>> {
        self.blocks
            .iter()
            .flatten()
            .filter_map(|b| match b {
                Block::Dense { qubits, .. } => Some(qubits.clone()),
                Block::Product { .. } => None,
            })
            .collect()
    }

    pub fn max_dense_width(&self) -> usize {
        self.dense_blocks().iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Measures `positions[i]` in `bases[i]`, in order. Validation happens
    /// before any qubit is touched, so an error leaves the state unchanged.
    pub fn measure<R: Rng + ?Sized>(
        &mut self,
        positions: &[usize],
        bases: &BasisString,
        rng: &mut R,
    ) -> Result<BitString, QsimError> {
        if positions.len() != bases.len() {
            return Err(QsimError::Argument(format!("{} positions but {} bases", positions.len(), bases.len())));
        }
        distinct(positions)?;
        for &q in positions {
            self.live_id(q)?;
        }
        positions
            .iter()
            .zip(bases.iter())
            .map(|(&q, b)| self.measure_qubit(q, b, rng))
            .collect::<Result<Vec<u8>, _>>()
            .map(|v| v.into_iter().collect())
    }

    pub fn measure_qubit<R: Rng + ?Sized>(&mut self, q: usize, basis: Basis, rng: &mut R) -> Result<u8, QsimError> {
        let id = self.live_id(q)?;
        let outcome = match self.take_block(id) {
            Block::Product { bit, basis: prepared, .. } => {
                if prepared == basis {
                    bit
                } else {
                    u8::from(rng.gen::<f64>() >= 0.5)
                }
            }
            Block::Dense { mut qubits, mut amps } => {
                let width = qubits.len();
                let pos = qubits.iter().position(|&x| x == q).expect("qubit in its block");
                if basis == Basis::Times {
                    apply_local_gate(&mut amps, width, pos, &super::hadamard());
                }
                let shift = width - 1 - pos;
                let p0: f64 = amps
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| (i >> shift) & 1 == 0)
                    .map(|(_, a)| a.norm_sqr().as_f64())
                    .sum::<f64>()
                    .clamp(0.0, 1.0);
                let mut outcome = u8::from(rng.gen::<f64>() >= p0);
                if (outcome == 0 && p0 <= 0.0) || (outcome == 1 && p0 >= 1.0) {
                    outcome ^= 1;
                }
                let p = if outcome == 0 { p0 } else { 1.0 - p0 };
                if width > 1 {
                    let scale = T::of(1.0 / p.sqrt());
                    let low = (1usize << shift) - 1;
                    let mut next = vec![C::new(T::zero(), T::zero()); amps.len() / 2];
                    for (i, a) in amps.iter().enumerate() {
                        if ((i >> shift) & 1) as u8 == outcome {
                            next[((i >> (shift + 1)) << shift) | (i & low)] = *a * scale;
                        }
                    }
                    qubits.remove(pos);
                    let nid = self.push_block(Block::Dense { qubits: qubits.clone(), amps: next });
                    for &other in &qubits {
                        self.slots[other] = Slot::Live(nid);
                    }
                }
                outcome
            }
        };
        self.slots[q] = Slot::Consumed(Record { bit: outcome, basis });
        Ok(outcome)
    }

    /// Applies an isometry to `targets`, appending `log2(rows/cols)` fresh
    /// ancilla qubits. The matrix acts on `targets` (first listed is most
    /// significant) and its output register is `targets` followed by the
    /// ancillas. Returns the ancilla indices.
    pub fn apply_isometry(&mut self, targets: &[usize], matrix: &CMatrix<T>) -> Result<Vec<usize>, QsimError> {
        if targets.is_empty() {
            return Err(QsimError::Argument("isometry needs at least one target".into()));
        }
        distinct(targets)?;
        let t = targets.len();
        if matrix.cols() != 1 << t {
            return Err(QsimError::Argument(format!(
                "matrix has {} columns, {} targets need {}",
                matrix.cols(),
                t,
                1usize << t
            )));
        }
        if !matrix.rows().is_power_of_two() || matrix.rows() < matrix.cols() {
            return Err(QsimError::Argument(format!("matrix has {} rows", matrix.rows())));
        }
        if !matrix.is_isometry(T::norm_tol()) {
            return Err(QsimError::Argument("matrix is not an isometry".into()));
        }
        let ancillas = matrix.rows().trailing_zeros() as usize - t;
        let mut ids = Vec::new();
        for &q in targets {
            let id = self.live_id(q)?;
            if !ids.contains(&id) {
                ids.push(id);
            }
        }
        let width: usize = ids.iter().map(|&id| self.block(id).qubits().len()).sum();
        if width + ancillas > self.dense_cap {
            return Err(QsimError::Resource(format!(
                "merged block of {} qubits exceeds dense cap {}",
                width + ancillas,
                self.dense_cap
            )));
        }

        let mut merged_q = Vec::new();
        let mut merged_a = vec![C::new(T::one(), T::zero())];
        for id in ids {
            let (q, a) = self.take_block(id).vector();
            merged_q.extend(q);
            merged_a = kron_vec(&merged_a, &a);
        }
        let rest: Vec<usize> = merged_q.iter().copied().filter(|q| !targets.contains(q)).collect();
        let order: Vec<usize> = targets.iter().chain(&rest).copied().collect();
        let amps = permute_vector(&merged_a, &merged_q, &order);

        let rest_dim = 1usize << rest.len();
        let mut out = vec![C::new(T::zero(), T::zero()); matrix.rows() * rest_dim];
        let mut input = vec![C::new(T::zero(), T::zero()); matrix.cols()];
        for r in 0..rest_dim {
            for (ti, slot) in input.iter_mut().enumerate() {
                *slot = amps[ti * rest_dim + r];
            }
            for (o, v) in matrix.mul_vec(&input).into_iter().enumerate() {
                out[o * rest_dim + r] = v;
            }
        }

        let first = self.slots.len();
        let new_anc: Vec<usize> = (first..first + ancillas).collect();
        self.slots.extend(std::iter::repeat_n(Slot::Live(usize::MAX), ancillas));
        let qubits: Vec<usize> = targets.iter().chain(&new_anc).chain(&rest).copied().collect();
        let id = self.push_block(Block::Dense { qubits: qubits.clone(), amps: out });
        for q in qubits {
            self.slots[q] = Slot::Live(id);
        }
        Ok(new_anc)
    }

    /// Partial trace onto `keep`, in the listed order.
    pub fn reduced_density(&self, keep: &[usize]) -> Result<DensityMatrix<T>, QsimError> {
        distinct(keep)?;
        if keep.len() > DENSITY_CAP {
            return Err(QsimError::Resource(format!(
                "{} qubits exceed the density matrix cap {DENSITY_CAP}",
                keep.len()
            )));
        }
        let mut ids = Vec::new();
        for &q in keep {
            let id = self.live_id(q)?;
            if !ids.contains(&id) {
                ids.push(id);
            }
        }
        let mut rho = CMatrix::identity(1);
        let mut order = Vec::new();
        for id in ids {
            let (qs, amps) = self.block(id).vector();
            let kept: Vec<usize> = qs.iter().copied().filter(|q| keep.contains(q)).collect();
            let traced: Vec<usize> = qs.iter().copied().filter(|q| !keep.contains(q)).collect();
            let perm: Vec<usize> = kept.iter().chain(&traced).copied().collect();
            let v = permute_vector(&amps, &qs, &perm);
            let cols = 1usize << traced.len();
            let dim = 1usize << kept.len();
            let part = CMatrix::from_fn(dim, dim, |r, c| {
                (0..cols).fold(C::new(T::zero(), T::zero()), |acc, k| acc + v[r * cols + k] * v[c * cols + k].conj())
            });
            rho = rho.kron(&part);
            order.extend(kept);
        }
        DensityMatrix::from_matrix(permute_matrix(&rho, &order, keep))
    }

    /// State vector of `qubits`, which must be a union of whole factors.
    pub fn pure_vector(&self, qubits: &[usize]) -> Result<Vec<C<T>>, QsimError> {
        distinct(qubits)?;
        let closure = self.block_closure(qubits)?;
        if closure.len() != qubits.len() {
            return Err(QsimError::State("requested qubits are entangled with others".into()));
        }
        if qubits.len() > self.dense_cap {
            return Err(QsimError::Resource(format!("{} qubits exceed dense cap {}", qubits.len(), self.dense_cap)));
        }
        let mut ids = Vec::new();
        for &q in qubits {
            let id = self.live_id(q)?;
            if !ids.contains(&id) {
                ids.push(id);
            }
        }
        let mut order = Vec::new();
        let mut amps = vec![C::new(T::one(), T::zero())];
        for id in ids {
            let (q, a) = self.block(id).vector();
            order.extend(q);
            amps = kron_vec(&amps, &a);
        }
        Ok(permute_vector(&amps, &order, qubits))
    }

    /// Structural and numerical self-check.
    pub fn check_invariants(&self) -> Result<(), QsimError> {
        for (q, slot) in self.slots.iter().enumerate() {
            if let Slot::Live(id) = slot {
                let b = self.blocks.get(*id).and_then(Option::as_ref);
                match b {
                    Some(b) if b.qubits().contains(&q) => {}
                    _ => return Err(QsimError::State(format!("qubit {q} points at a foreign block"))),
                }
            }
        }
        for (id, b) in self.blocks.iter().enumerate() {
            let Some(b) = b else { continue };
            for q in b.qubits() {
                if !matches!(self.slots.get(q), Some(Slot::Live(x)) if *x == id) {
                    return Err(QsimError::State(format!("block {id} lists qubit {q} it does not own")));
                }
            }
            if let Block::Dense { qubits, amps } = b {
                if qubits.len() > self.dense_cap {
                    return Err(QsimError::State(format!("block of width {} over cap", qubits.len())));
                }
                if amps.len() != 1 << qubits.len() {
                    return Err(QsimError::State("amplitude count does not match width".into()));
                }
                let dev = (norm(amps) - T::one()).abs();
                if dev > T::norm_tol() {
                    return Err(QsimError::State(format!("block norm off by {dev}")));
                }
            }
        }
        Ok(())
    }
}
