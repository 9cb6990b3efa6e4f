use rayon::prelude::*;
use serde::Serialize;

use super::{derive_seed, SessionResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrialOutcome {
    pub completed: bool,
    /// Outputs agree with the ideal functionality.
    pub correct: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HarnessReport {
    pub trials: usize,
    pub completed: usize,
    pub correct: usize,
    pub failure_rate: f64,
    /// Indices of the first few failing trials.
    pub failing_trials: Vec<usize>,
}

pub fn session_id(master: u64, index: usize) -> String {
    format!("{master:016x}-{index}")
}

/// Runs `trials` independent sessions and compares each against the ideal
/// functionality. Results do not depend on the thread count.
pub fn correctness_harness<F>(trials: usize, master: u64, trial: F) -> HarnessReport
where
    F: Fn(usize, u64) -> TrialOutcome + Sync,
{
    let outcomes: Vec<TrialOutcome> =
        (0..trials).into_par_iter().map(|i| trial(i, derive_seed(master, i as u64))).collect();
    let completed = outcomes.iter().filter(|o| o.completed).count();
    let correct = outcomes.iter().filter(|o| o.completed && o.correct).count();
    let failing_trials =
        outcomes.iter().enumerate().filter(|(_, o)| !(o.completed && o.correct)).map(|(i, _)| i).take(16).collect();
    HarnessReport {
        trials,
        completed,
        correct,
        failure_rate: if trials == 0 { 0.0 } else { (trials - correct) as f64 / trials as f64 },
        failing_trials,
    }
}

/// One invocation in a sequence. It receives its session id, its seed and
/// the result of the previous invocation.
pub type SequentialStep<'a> = Box<dyn FnOnce(String, u64, Option<&SessionResult>) -> SessionResult + 'a>;

/// Runs invocations one after another with independent seeds. An abort ends
/// the sequence when `stop_on_abort` is set.
pub fn run_sequential(master: u64, steps: Vec<SequentialStep<'_>>, stop_on_abort: bool) -> Vec<SessionResult> {
    let mut results: Vec<SessionResult> = Vec::with_capacity(steps.len());
    for (i, step) in steps.into_iter().enumerate() {
        let result = step(session_id(master, i), derive_seed(master, i as u64), results.last());
        let aborted = !result.completed();
        results.push(result);
        if aborted && stop_on_abort {
            break;
        }
    }
    results
}
