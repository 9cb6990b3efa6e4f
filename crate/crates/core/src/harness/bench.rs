use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use super::stats::Metric;
use super::{Check, CommandOutput, ExperimentConfig, HarnessError, StatsReport};
use crate::commit::{
    commit, equivocation_search, extract, gen_binding, gen_hiding, hiding_distance, tcommit, tequivocate, textract,
    topen, trapdoor_gen, verify_open, CommitKey, Extracted, LweParams, Randomness,
};
use crate::protocol::{derive_seed, rng_from};
use crate::qsim::Basis;

const KEY_STREAM: u64 = 201;
const ROUNDTRIP_STREAM: u64 = 202;
const EXTRACT_STREAM: u64 = 203;
const TINY_STREAM: u64 = 204;
const TRAPDOOR_STREAM: u64 = 205;
const SEARCH_STREAM: u64 = 206;

const MESSAGES: [(Basis, u8); 4] = [(Basis::Plus, 0), (Basis::Plus, 1), (Basis::Times, 0), (Basis::Times, 1)];

fn random_message<R: Rng + ?Sized>(rng: &mut R) -> (Basis, u8) {
    MESSAGES[rng.gen_range(0..4)]
}

/// Commits to a random message, checks the honest opening and that the
/// flipped bit is refused.
fn roundtrip(pk: &CommitKey, trials: usize, master: u64) -> (Vec<bool>, Vec<bool>) {
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from(derive_seed(master, i as u64));
            let msg = random_message(&mut rng);
            let r: Vec<Randomness> = (0..2).map(|_| Randomness::random(pk.params.m_lwe, &mut rng)).collect();
            let com = commit(pk, msg, &r).expect("two randomness vectors");
            (verify_open(pk, &com, msg, &r), !verify_open(pk, &com, (msg.0, 1 - msg.1), &r))
        })
        .unzip()
}

/// Largest and smallest exact distance over all distinct message pairs.
fn distance_range(pk: &CommitKey) -> Result<(f64, f64), HarnessError> {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for (i, &a) in MESSAGES.iter().enumerate() {
        for &b in &MESSAGES[i + 1..] {
            let d = hiding_distance(pk, a, b)?;
            lo = lo.min(d);
            hi = hi.max(d);
        }
    }
    Ok((lo, hi))
}

pub(super) fn cmd_commit_bench(config: &ExperimentConfig) -> Result<CommandOutput, HarnessError> {
    let sizes = &config.bench;
    let master = config.master_seed;
    let lwe = config.key.params();
    let mut report = StatsReport::new(config, sizes.roundtrip_trials);
    let mut timings = Vec::new();
    report.detail("lwe", lwe);
    report.detail("statistically_hiding", lwe.statistically_hiding());

    let mut key_rng = rng_from(derive_seed(master, KEY_STREAM));
    let hiding = gen_hiding(&lwe, &mut key_rng)?;
    let (binding, sk) = gen_binding(&lwe, &mut key_rng)?;

    let t = Instant::now();
    for (label, pk) in [("hiding", &hiding), ("binding", &binding)] {
        let (opens, refuses) = roundtrip(pk, sizes.roundtrip_trials, derive_seed(master, ROUNDTRIP_STREAM));
        let open = Metric::from_flags(&opens, Some(1.0));
        let refuse = Metric::from_flags(&refuses, Some(1.0));
        report.check(Check::new(
            format!("{label} round trip"),
            open.mean == 1.0 && refuse.mean == 1.0,
            format!(
                "{}/{} opened, {}/{} wrong openings refused",
                open.count(),
                open.trials,
                refuse.count(),
                refuse.trials
            ),
        ));
        report.metric(&format!("roundtrip.{label}"), open);
        report.metric(&format!("roundtrip.{label}.refused"), refuse);
    }
    timings.push(("roundtrip".into(), t.elapsed()));

    let t = Instant::now();
    let extract_master = derive_seed(master, EXTRACT_STREAM);
    let extracted: Vec<bool> = (0..sizes.extraction_trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from(derive_seed(extract_master, i as u64));
            let msg = random_message(&mut rng);
            let r: Vec<Randomness> = (0..2).map(|_| Randomness::random(binding.params.m_lwe, &mut rng)).collect();
            let com = commit(&binding, msg, &r).expect("two randomness vectors");
            extract(&sk, &com).ok() == Some(msg)
        })
        .collect();
    let ext = Metric::from_flags(&extracted, Some(1.0));
    report.check(Check::new("extraction", ext.mean == 1.0, format!("{}/{}", ext.count(), ext.trials)));
    report.metric("extraction", ext);
    timings.push(("extraction".into(), t.elapsed()));

    // Exhaustive distances at the enumerable parameter set.
    let t = Instant::now();
    let tiny = LweParams::TINY;
    let tiny_master = derive_seed(master, TINY_STREAM);
    let mut rng = rng_from(tiny_master);
    let (_, hiding_max) = distance_range(&gen_hiding(&tiny, &mut rng)?)?;
    let (binding_min, _) = distance_range(&gen_binding(&tiny, &mut rng)?.0)?;
    report.check(Check::new("tiny hiding distance at most 0.1", hiding_max <= 0.1, format!("{hiding_max:.6}")));
    report.check(Check::new("tiny binding distance at least 0.9", binding_min >= 0.9, format!("{binding_min:.6}")));
    let sweep: Vec<f64> = (0..sizes.sweep_keys)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from(derive_seed(tiny_master, i as u64 + 1));
            gen_hiding(&tiny, &mut rng).map_err(HarnessError::from).and_then(|pk| Ok(distance_range(&pk)?.1))
        })
        .collect::<Result<_, _>>()?;
    let under: Vec<bool> = sweep.iter().map(|&d| d <= 0.1).collect();
    report.metric("tiny.hiding_distance", Metric::from_samples(&sweep, None));
    report.metric("tiny.keys_within_0.1", Metric::from_flags(&under, None));
    report.detail("tiny.hiding_distance_default_key", hiding_max);
    report.detail("tiny.binding_distance_default_key", binding_min);
    timings.push(("hiding_distance".into(), t.elapsed()));

    let t = Instant::now();
    let trap_master = derive_seed(master, TRAPDOOR_STREAM);
    let v = sizes.trapdoor_vertices;
    let trap: Vec<(bool, bool, bool)> = (0..sizes.trapdoor_trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from(derive_seed(trap_master, i as u64));
            let (inst, public) = trapdoor_gen(v, &mut rng)?;
            let (com, o0, o1) = tequivocate(&binding, &inst, &mut rng)?;
            let both = topen(&binding, &public, &com, &o0) && topen(&binding, &public, &com, &o1);
            let flagged = textract(&sk, &public, &com)? == Extracted::Both;
            let b: u8 = rng.gen_range(0..2);
            let (plain, opening) = tcommit(&binding, &public, b, &mut rng)?;
            let single =
                topen(&binding, &public, &plain, &opening) && textract(&sk, &public, &plain)? == Extracted::Bit(b);
            Ok::<_, HarnessError>((both, flagged, single))
        })
        .collect::<Result<_, _>>()?;
    let both = Metric::from_flags(&trap.iter().map(|t| t.0).collect::<Vec<_>>(), Some(1.0));
    let flagged = Metric::from_flags(&trap.iter().map(|t| t.1).collect::<Vec<_>>(), Some(1.0));
    let single = Metric::from_flags(&trap.iter().map(|t| t.2).collect::<Vec<_>>(), Some(1.0));
    report.check(Check::new(
        "equivocation opens both ways",
        both.mean == 1.0,
        format!("{}/{}", both.count(), both.trials),
    ));
    report.check(Check::new(
        "extraction flags both-valid",
        flagged.mean == 1.0,
        format!("{}/{}", flagged.count(), flagged.trials),
    ));
    report.check(Check::new(
        "ordinary trapdoor commitments extract their bit",
        single.mean == 1.0,
        format!("{}/{}", single.count(), single.trials),
    ));
    report.metric("trapdoor.dual_open", both);
    report.metric("trapdoor.both_flagged", flagged);
    report.metric("trapdoor.single_extract", single);

    let mut rng = rng_from(derive_seed(master, SEARCH_STREAM));
    let (_, public) = trapdoor_gen(sizes.search_vertices, &mut rng)?;
    let found = equivocation_search(&public, sizes.search_tries, &mut rng);
    report.detail("witness_free_equivocation_found", found);
    timings.push(("trapdoor".into(), t.elapsed()));

    Ok(CommandOutput { report, transcripts: Vec::new(), timings })
}
