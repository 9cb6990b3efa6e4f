//! Receiver strategies, honest and otherwise.
//!
//! A strategy decides what Bob does with the qubits he receives, what he
//! commits to in compiled runs, and what he hands to the classical
//! post-processing. [`crate::protocol::bb84::BobParty`] does the messaging.

mod benign;

pub use benign::{benign_deviation_report, budget_arithmetic, BenignReport, BudgetCheck, SubsetEntry};

use rand::Rng;
use serde_json::{json, Value};

use crate::protocol::bb84::{measure_held, BobKnowledge, Held};
use crate::protocol::{Ctx, ProtocolError};
use crate::qsim::{Basis, BasisString, BitString};

pub trait AttackStrategy {
    fn name(&self) -> String;

    /// End of the quantum transmission; `qubits[i]` carries position `i`.
    fn receive_qubits(&mut self, qubits: &[usize], ctx: &mut Ctx<'_>) -> Result<(), ProtocolError>;

    /// Values committed to in a compiled run. `None` means no commitment policy.
    fn commit_values(&mut self, ctx: &mut Ctx<'_>) -> Result<Option<(BasisString, BitString)>, ProtocolError>;

    /// Values revealed at the tested positions.
    fn open_values(
        &mut self,
        tested: &[usize],
        committed: (&BasisString, &BitString),
        _ctx: &mut Ctx<'_>,
    ) -> Result<Vec<(Basis, u8)>, ProtocolError> {
        Ok(tested.iter().map(|&i| (committed.0.get(i), committed.1.get(i))).collect())
    }

    /// What the post-processing gets for `positions`.
    fn knowledge(&mut self, positions: &[usize], ctx: &mut Ctx<'_>) -> Result<BobKnowledge, ProtocolError>;

    /// Basis used when a storage bound forces the qubit at `position` to be measured.
    fn forced_basis(&self, _position: usize) -> Basis {
        Basis::Plus
    }

    /// Qubits retainable past the memory-bound point, if bounded.
    fn memory_budget(&self) -> Option<usize> {
        None
    }

    fn report(&self) -> Value {
        Value::Null
    }
}

impl<S: AttackStrategy + ?Sized> AttackStrategy for Box<S> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn receive_qubits(&mut self, qubits: &[usize], ctx: &mut Ctx<'_>) -> Result<(), ProtocolError> {
        (**self).receive_qubits(qubits, ctx)
    }
    fn commit_values(&mut self, ctx: &mut Ctx<'_>) -> Result<Option<(BasisString, BitString)>, ProtocolError> {
        (**self).commit_values(ctx)
    }
    fn open_values(
        &mut self,
        tested: &[usize],
        committed: (&BasisString, &BitString),
        ctx: &mut Ctx<'_>,
    ) -> Result<Vec<(Basis, u8)>, ProtocolError> {
        (**self).open_values(tested, committed, ctx)
    }
    fn knowledge(&mut self, positions: &[usize], ctx: &mut Ctx<'_>) -> Result<BobKnowledge, ProtocolError> {
        (**self).knowledge(positions, ctx)
    }
    fn forced_basis(&self, position: usize) -> Basis {
        (**self).forced_basis(position)
    }
    fn memory_budget(&self) -> Option<usize> {
        (**self).memory_budget()
    }
    fn report(&self) -> Value {
        (**self).report()
    }
}

/// Measures every qubit on arrival in a uniformly random basis.
#[derive(Clone, Debug, Default)]
pub struct HonestBob {
    theta_hat: BasisString,
    x_hat: BitString,
}

impl HonestBob {
    pub fn new() -> Self {
        Self::default()
    }
}

impl AttackStrategy for HonestBob {
    fn name(&self) -> String {
        "honest".into()
    }

    fn receive_qubits(&mut self, qubits: &[usize], ctx: &mut Ctx<'_>) -> Result<(), ProtocolError> {
        self.theta_hat = BasisString::random(qubits.len(), ctx.rng);
        let mut bits = Vec::with_capacity(qubits.len());
        for (i, &q) in qubits.iter().enumerate() {
            bits.push(measure_held(ctx, q, self.theta_hat.get(i))?);
        }
        self.x_hat = bits.into_iter().collect();
        Ok(())
    }

    fn commit_values(&mut self, _ctx: &mut Ctx<'_>) -> Result<Option<(BasisString, BitString)>, ProtocolError> {
        Ok(Some((self.theta_hat.clone(), self.x_hat.clone())))
    }

    fn knowledge(&mut self, positions: &[usize], _ctx: &mut Ctx<'_>) -> Result<BobKnowledge, ProtocolError> {
        Ok(BobKnowledge::measured(&self.theta_hat.restrict(positions), &self.x_hat.restrict(positions)))
    }
}

/// Keeps every qubit unmeasured until the bases are revealed. Without a
/// commitment policy it cannot take part in a compiled run at all; with one
/// it commits to uniformly random values.
#[derive(Clone, Debug, Default)]
pub struct DelayedMeasurementBob {
    pub commit_policy: bool,
    qubits: Vec<usize>,
}

impl DelayedMeasurementBob {
    pub fn new(commit_policy: bool) -> Self {
        Self { commit_policy, qubits: Vec::new() }
    }
}

impl AttackStrategy for DelayedMeasurementBob {
    fn name(&self) -> String {
        "delayed_measurement_bob".into()
    }

    fn receive_qubits(&mut self, qubits: &[usize], _ctx: &mut Ctx<'_>) -> Result<(), ProtocolError> {
        self.qubits = qubits.to_vec();
        Ok(())
    }

    fn commit_values(&mut self, ctx: &mut Ctx<'_>) -> Result<Option<(BasisString, BitString)>, ProtocolError> {
        if !self.commit_policy {
            return Ok(None);
        }
        let m = self.qubits.len();
        Ok(Some((BasisString::random(m, ctx.rng), BitString::random(m, ctx.rng))))
    }

    fn knowledge(&mut self, positions: &[usize], _ctx: &mut Ctx<'_>) -> Result<BobKnowledge, ProtocolError> {
        Ok(BobKnowledge::stored(&positions.iter().map(|&i| self.qubits[i]).collect::<Vec<_>>()))
    }

    fn report(&self) -> Value {
        json!({ "stored_qubits": self.qubits.len(), "commit_policy": self.commit_policy })
    }
}

/// Commits to random values and never measures, so the surviving qubits are
/// still intact after the test.
#[derive(Clone, Debug, Default)]
pub struct NonMeasuringCommitter {
    qubits: Vec<usize>,
    pub committed: Option<(BasisString, BitString)>,
}

impl NonMeasuringCommitter {
    pub fn new() -> Self {
        Self::default()
    }
}

impl AttackStrategy for NonMeasuringCommitter {
    fn name(&self) -> String {
        "nonmeasuring_committer".into()
    }

    fn receive_qubits(&mut self, qubits: &[usize], _ctx: &mut Ctx<'_>) -> Result<(), ProtocolError> {
        self.qubits = qubits.to_vec();
        Ok(())
    }

    fn commit_values(&mut self, ctx: &mut Ctx<'_>) -> Result<Option<(BasisString, BitString)>, ProtocolError> {
        let m = self.qubits.len();
        let values = (BasisString::random(m, ctx.rng), BitString::random(m, ctx.rng));
        self.committed = Some(values.clone());
        Ok(Some(values))
    }

    fn knowledge(&mut self, positions: &[usize], _ctx: &mut Ctx<'_>) -> Result<BobKnowledge, ProtocolError> {
        Ok(BobKnowledge::stored(&positions.iter().map(|&i| self.qubits[i]).collect::<Vec<_>>()))
    }

    fn report(&self) -> Value {
        json!({ "stored_qubits": self.qubits.len() })
    }
}

/// Stores the first `floor(fraction m)` positions and measures the rest
/// honestly.
#[derive(Clone, Debug)]
pub struct PartialStorageBob {
    pub fraction: f64,
    qubits: Vec<usize>,
    stored: usize,
    theta_hat: BasisString,
    x_hat: BitString,
}

impl PartialStorageBob {
    pub fn new(fraction: f64) -> Self {
        Self {
            fraction: fraction.clamp(0.0, 1.0),
            qubits: Vec::new(),
            stored: 0,
            theta_hat: BasisString::default(),
            x_hat: BitString::default(),
        }
    }
}

impl AttackStrategy for PartialStorageBob {
    fn name(&self) -> String {
        format!("partial_storage_bob({})", self.fraction)
    }

    fn receive_qubits(&mut self, qubits: &[usize], ctx: &mut Ctx<'_>) -> Result<(), ProtocolError> {
        let m = qubits.len();
        self.qubits = qubits.to_vec();
        self.stored = ((self.fraction * m as f64) + 1e-9).floor() as usize;
        self.theta_hat = BasisString::random(m, ctx.rng);
        let mut bits = vec![0u8; m];
        for i in self.stored..m {
            bits[i] = measure_held(ctx, qubits[i], self.theta_hat.get(i))?;
        }
        for b in bits.iter_mut().take(self.stored) {
            *b = ctx.rng.gen_range(0..2);
        }
        self.x_hat = bits.into_iter().collect();
        Ok(())
    }

    fn commit_values(&mut self, _ctx: &mut Ctx<'_>) -> Result<Option<(BasisString, BitString)>, ProtocolError> {
        Ok(Some((self.theta_hat.clone(), self.x_hat.clone())))
    }

    fn knowledge(&mut self, positions: &[usize], _ctx: &mut Ctx<'_>) -> Result<BobKnowledge, ProtocolError> {
        let held = positions
            .iter()
            .map(|&i| {
                if i < self.stored {
                    Held::Stored(self.qubits[i])
                } else {
                    Held::Measured { basis: self.theta_hat.get(i), bit: self.x_hat.get(i) }
                }
            })
            .collect();
        Ok(BobKnowledge { held })
    }

    fn forced_basis(&self, position: usize) -> Basis {
        self.theta_hat.get(position)
    }

    fn report(&self) -> Value {
        json!({ "stored_qubits": self.stored, "measured_qubits": self.qubits.len() - self.stored })
    }
}

/// Wraps a strategy in a bounded quantum memory. When the transmission ends,
/// every live qubit beyond `floor(gamma * received)` is measured.
pub struct BqsmBob<S> {
    pub gamma: f64,
    pub inner: S,
    received: usize,
    budget: usize,
    held_at_bound: usize,
    forced: usize,
}

impl<S: AttackStrategy> BqsmBob<S> {
    pub fn new(gamma: f64, inner: S) -> Self {
        Self { gamma, inner, received: 0, budget: 0, held_at_bound: 0, forced: 0 }
    }

    pub fn budget(gamma: f64, received: usize) -> usize {
        ((gamma * received as f64) + 1e-9).floor() as usize
    }

    /// Live qubits Bob held right after the bound point.
    pub fn held_at_bound(&self) -> usize {
        self.held_at_bound
    }

    pub fn within_budget(&self) -> bool {
        self.held_at_bound <= self.budget
    }
}

impl<S: AttackStrategy> AttackStrategy for BqsmBob<S> {
    fn name(&self) -> String {
        format!("bqsm_bob({}, {})", self.gamma, self.inner.name())
    }

    fn receive_qubits(&mut self, qubits: &[usize], ctx: &mut Ctx<'_>) -> Result<(), ProtocolError> {
        self.inner.receive_qubits(qubits, ctx)?;
        self.received = qubits.len();
        self.budget = Self::budget(self.gamma, self.received);
        let live: Vec<usize> = (0..qubits.len()).filter(|&i| ctx.link.state.is_live(qubits[i])).collect();
        for &i in live.iter().skip(self.budget) {
            ctx.link.state.measure_qubit(qubits[i], self.inner.forced_basis(i), ctx.rng)?;
            self.forced += 1;
        }
        self.held_at_bound = qubits.iter().filter(|&&q| ctx.link.state.is_live(q)).count();
        if self.held_at_bound > self.budget {
            return Err(ProtocolError::Argument(format!(
                "memory bound violated: {} qubits held, budget {}",
                self.held_at_bound, self.budget
            )));
        }
        Ok(())
    }

    fn commit_values(&mut self, ctx: &mut Ctx<'_>) -> Result<Option<(BasisString, BitString)>, ProtocolError> {
        self.inner.commit_values(ctx)
    }

    fn open_values(
        &mut self,
        tested: &[usize],
        committed: (&BasisString, &BitString),
        ctx: &mut Ctx<'_>,
    ) -> Result<Vec<(Basis, u8)>, ProtocolError> {
        self.inner.open_values(tested, committed, ctx)
    }

    fn knowledge(&mut self, positions: &[usize], ctx: &mut Ctx<'_>) -> Result<BobKnowledge, ProtocolError> {
        self.inner.knowledge(positions, ctx)
    }

    fn forced_basis(&self, position: usize) -> Basis {
        self.inner.forced_basis(position)
    }

    fn memory_budget(&self) -> Option<usize> {
        Some(self.budget)
    }

    fn report(&self) -> Value {
        json!({
            "gamma": self.gamma,
            "received": self.received,
            "budget": self.budget,
            "held_at_bound": self.held_at_bound,
            "forced_measurements": self.forced,
            "inner": self.inner.report(),
        })
    }
}
