use qcompile::adversaries::{
    AttackStrategy, BqsmBob, DelayedMeasurementBob, HonestBob, NonMeasuringCommitter, PartialStorageBob,
};
use qcompile::apps::{
    qid_alice, qid_bob, qid_spec, qid_with_mac, qot_alice, qot_bob, qot_spec, random_strings, repetition_code, MacKey,
    QidBobMode,
};
use qcompile::commit::{gen_binding, gen_hiding, LweParams};
use qcompile::compiler::{compile, run_bb84_session, run_epr_version, SessionOutcome, Setup};
use qcompile::protocol::bb84::BobPost;
use qcompile::protocol::jsonl::{read_lines, write_transcript};
use qcompile::protocol::{derive_seed, ideal_ot, rng_from, session_id, Message, Output, Params, Verdict};
use qcompile::qsim::BitString;
use rand::Rng;

fn compiled_setup(spec: &qcompile::protocol::bb84::ProtocolSpec, alpha: f64, seed: u64) -> Setup {
    let key = gen_hiding(&LweParams::FAST, &mut rng_from(seed)).unwrap();
    Setup::Compiled { protocol: compile(spec, alpha).unwrap(), key }
}

struct QotRun<S> {
    out: SessionOutcome<S, qcompile::apps::QotAlice, qcompile::apps::QotBob>,
    s0: BitString,
    s1: BitString,
    k: u8,
}

fn qot<S: AttackStrategy>(setup: &Setup, params: &Params, strategy: S, greedy: bool, seed: u64) -> QotRun<S> {
    let mut rng = rng_from(derive_seed(seed, 99));
    let (s0, s1) = random_strings(params.ell, &mut rng);
    let k: u8 = rng.gen_range(0..2);
    let out = run_bb84_session(
        setup,
        params,
        qot_alice(s0.clone(), s1.clone()).unwrap(),
        strategy,
        qot_bob(k, greedy),
        &session_id(seed, 0),
        seed,
        None,
    )
    .unwrap();
    QotRun { out, s0, s1, k }
}

#[test]
fn plain_qot_honest_matches_ideal() {
    let setup = Setup::Plain(qot_spec());
    let params = Params::plain(32, 0.125);
    for seed in 0..40 {
        let r = qot(&setup, &params, HonestBob::new(), false, seed);
        assert!(r.out.result.completed());
        assert_eq!(r.out.result.bob, Output::Bits(ideal_ot(&r.s0, &r.s1, r.k).unwrap()));
        assert!(r.out.verification.is_none());
    }
}

#[test]
fn compiled_qot_honest_matches_ideal() {
    let setup = compiled_setup(&qot_spec(), 0.5, 7);
    let params = Params::compiled(64, 0.5, 0.125);
    for seed in 0..20 {
        let r = qot(&setup, &params, HonestBob::new(), false, seed);
        assert!(r.out.result.completed(), "seed {seed}: {:?}", r.out.result.transcript.abort_reason);
        assert_eq!(r.out.result.bob, Output::Bits(ideal_ot(&r.s0, &r.s1, r.k).unwrap()));
        let v = r.out.verification.as_ref().unwrap();
        assert!(v.accepted);
        assert_eq!(v.mismatch_count, 0);
        assert_eq!(r.out.tested.len(), 32);
        assert_eq!(v.surviving_indices.len(), params.n);
        assert!(v.surviving_indices.iter().all(|i| r.out.tested.binary_search(i).is_err()));
        assert!(setup.schema().is_complete(&r.out.result.transcript));
    }
}

#[test]
fn compiled_schema_adds_three_rounds() {
    for spec in [qot_spec(), qid_spec(false), qid_spec(true)] {
        let compiled = compile(&spec, 0.25).unwrap();
        assert_eq!(compiled.schema.interaction_rounds(), spec.plain_schema().interaction_rounds() + 3);
        let kinds = compiled.schema.kinds();
        assert_eq!(&kinds[..5], &["qubits", "commitments", "test_subset", "openings", "verdict"]);
    }
}

#[test]
fn transcripts_follow_the_schema() {
    let setup = compiled_setup(&qot_spec(), 0.5, 8);
    let schema = setup.schema();
    let params = Params::compiled(32, 0.5, 0.125);
    let r = qot(&setup, &params, HonestBob::new(), false, 3);
    let t = &r.out.result.transcript;
    assert_eq!(t.verdict(), Some(Verdict::Completed));
    assert!(t.messages().windows(2).all(|w| w[0].round < w[1].round));
    for m in t.messages() {
        assert!(schema.allows(&m.kind, m.sender), "{} from {}", m.kind, m.sender);
    }
    for kind in schema.kinds() {
        assert_eq!(t.count_kind(kind), 1, "{kind}");
    }
}

#[test]
fn qid_equal_and_unequal_passwords() {
    let code = repetition_code(2, 32).unwrap();
    let plain = Setup::Plain(qid_spec(false));
    let compiled = compiled_setup(&qid_spec(false), 0.5, 9);
    for (setup, params) in
        [(&plain, Params::plain(32, 0.5).with_ell(16)), (&compiled, Params::compiled(64, 0.5, 0.5).with_ell(16))]
    {
        for seed in 0..12u64 {
            let w = (seed % 4) as usize;
            for w_bob in [w, (w + 1 + (seed as usize % 3)) % 4] {
                let out = run_bb84_session(
                    setup,
                    &params,
                    qid_alice(w, code, params.ell, None),
                    HonestBob::new(),
                    qid_bob(QidBobMode::Honest { w: w_bob }, code, params.ell, None),
                    &session_id(seed, 0),
                    seed,
                    None,
                )
                .unwrap();
                assert!(out.result.completed());
                assert_eq!(out.result.bob, Output::Decision(w == w_bob), "seed {seed}, {w} vs {w_bob}");
            }
        }
    }
}

fn qid_mac_run(alice_key: MacKey, bob_key: MacKey, tamper_kind: Option<&str>, seed: u64) -> (Output, bool, bool) {
    let code = repetition_code(2, 16).unwrap();
    let params = Params::plain(16, 0.5).with_ell(8);
    let (alice, bob) = qid_with_mac(1, 1, code, params.ell, alice_key, bob_key);
    let mut tamper = |m: &mut Message| {
        if Some(m.kind.as_str()) == tamper_kind {
            let last = m.payload.len() - 1;
            m.payload[last] ^= 1;
        }
    };
    let out = run_bb84_session(
        &Setup::Plain(qid_spec(true)),
        &params,
        alice,
        HonestBob::new(),
        bob,
        &session_id(seed, 0),
        seed,
        Some(&mut tamper),
    )
    .unwrap();
    (out.bob_post.output(), out.bob_post.mac_rejected, out.result.completed())
}

#[test]
fn qid_mac_accepts_and_rejects() {
    let key = MacKey::random(64, &mut rng_from(1)).unwrap();
    let other = MacKey::random(64, &mut rng_from(2)).unwrap();
    for seed in 0..8 {
        assert_eq!(qid_mac_run(key, key, None, seed), (Output::Decision(true), false, true));
        let (decision, rejected, _) = qid_mac_run(key, other, None, seed);
        assert!(rejected);
        assert_ne!(decision, Output::Decision(true));
        for kind in ["z", "mac_tag", "theta_and_f"] {
            let (decision, _, _) = qid_mac_run(key, key, Some(kind), seed);
            assert_ne!(decision, Output::Decision(true), "tampered {kind}, seed {seed}");
        }
    }
}

#[test]
fn delayed_measurement_breaks_plain_qot() {
    let setup = Setup::Plain(qot_spec());
    let params = Params::plain(24, 0.125);
    for seed in 0..20 {
        let r = qot(&setup, &params, DelayedMeasurementBob::new(false), true, seed);
        assert!(r.out.result.completed());
        assert_eq!(r.out.result.bob, Output::BothStrings(r.s0.clone(), r.s1.clone()));
        assert_eq!(r.out.strategy.report()["stored_qubits"], 24);
    }
}

#[test]
fn delayed_measurement_against_compiled_qot() {
    let setup = compiled_setup(&qot_spec(), 0.5, 10);
    let params = Params::compiled(32, 0.5, 0.125);
    // Without a commitment policy the run cannot go past the commitment round.
    let r = qot(&setup, &params, DelayedMeasurementBob::new(false), true, 1);
    assert_eq!(r.out.result.verdict(), Verdict::AbortedByBob);
    assert!(r.out.result.transcript.first("test_subset").is_none());
    // With random commitments it stores all m qubits and survives each of
    // the t = 4 tests at m = 8 with probability 3/4.
    let params = Params::compiled(8, 0.5, 0.0).with_ell(1);
    let trials = 600;
    let mut accepted = 0;
    for seed in 0..trials {
        let r = qot(&setup, &params, DelayedMeasurementBob::new(true), true, seed);
        assert_eq!(r.out.strategy.report()["stored_qubits"], 8);
        accepted += usize::from(r.out.result.completed());
    }
    let p = 0.75f64.powi(4);
    let rate = accepted as f64 / trials as f64;
    assert!((rate - p).abs() <= 3.0 * (p * (1.0 - p) / trials as f64).sqrt(), "{accepted}/{trials}");
}

#[test]
fn nonmeasuring_survivors_stay_quantum() {
    let protocol = compile(&qot_spec(), 0.5).unwrap();
    let params = Params::compiled(4, 0.5, 0.0).with_ell(1);
    let (key, sk) = gen_binding(&LweParams::FAST, &mut rng_from(12)).unwrap();
    let mut accepted = 0;
    for seed in 0..64u64 {
        let (result, snapshot, _) = run_epr_version(
            &protocol,
            &params,
            &key,
            Some(sk.clone()),
            qot_alice(BitString::parse("0").unwrap(), BitString::parse("1").unwrap()).unwrap(),
            NonMeasuringCommitter::new(),
            qot_bob(0, false),
            &session_id(seed, 0),
            seed,
        )
        .unwrap();
        if let Some(s) = snapshot {
            accepted += 1;
            assert_eq!(s.bob_qubits.len(), 2);
            assert!(s.bob_qubits.iter().all(|&q| s.state.is_live(q)));
            assert!(s.alice_qubits.iter().all(|&q| s.state.is_live(q)));
            assert!(s.extracted.is_some());
        } else {
            assert!(!result.completed());
        }
    }
    assert!(accepted > 0);
}

#[test]
fn bounded_memory_extremes() {
    let setup = Setup::Plain(qot_spec());
    let n = 16;
    let params = Params::plain(n, 0.125);
    let r = qot(&setup, &params, BqsmBob::new(0.0, DelayedMeasurementBob::new(false)), true, 2);
    assert_eq!(r.out.strategy.held_at_bound(), 0);
    assert!(r.out.strategy.within_budget());
    assert!(r.out.result.completed());
    let gamma = 1.0 - 1.0 / n as f64;
    let r = qot(&setup, &params, BqsmBob::new(gamma, DelayedMeasurementBob::new(false)), true, 2);
    assert_eq!(r.out.strategy.held_at_bound(), n - 1);
    assert_eq!(r.out.strategy.memory_budget(), Some(n - 1));

    let compiled = compiled_setup(&qot_spec(), 0.5, 13);
    let params = Params::compiled(16, 0.5, 0.125);
    let r = qot(&compiled, &params, BqsmBob::new(0.0, NonMeasuringCommitter::new()), true, 3);
    assert_eq!(r.out.strategy.held_at_bound(), 0);
}

#[test]
fn partial_storage_stores_a_prefix() {
    let setup = Setup::Plain(qot_spec());
    let params = Params::plain(20, 0.125);
    let r = qot(&setup, &params, PartialStorageBob::new(0.25), true, 4);
    assert!(r.out.result.completed());
    assert_eq!(r.out.strategy.report()["stored_qubits"], 5);
}

#[test]
fn sessions_are_deterministic() {
    let setup = compiled_setup(&qot_spec(), 0.5, 14);
    let params = Params::compiled(32, 0.5, 0.125).with_noise(0.05, 0.1);
    let a = qot(&setup, &params, HonestBob::new(), false, 77);
    let b = qot(&setup, &params, HonestBob::new(), false, 77);
    assert_eq!(a.out.result.transcript.messages(), b.out.result.transcript.messages());
    assert_eq!(a.out.result.bob, b.out.result.bob);
    assert_eq!(a.out.result.channel_flips, b.out.result.channel_flips);
    let c = qot(&setup, &params, HonestBob::new(), false, 78);
    assert_ne!(a.out.result.transcript.messages(), c.out.result.transcript.messages());
}

#[test]
fn jsonl_roundtrip() {
    let setup = compiled_setup(&qid_spec(false), 0.5, 15);
    let code = repetition_code(2, 16).unwrap();
    let params = Params::compiled(32, 0.5, 0.5).with_ell(8);
    let out = run_bb84_session(
        &setup,
        &params,
        qid_alice(2, code, 8, None),
        HonestBob::new(),
        qid_bob(QidBobMode::Honest { w: 2 }, code, 8, None),
        "jsonl-session",
        5,
        None,
    )
    .unwrap();
    let t = out.result.transcript;
    let mut buf = Vec::new();
    write_transcript(&mut buf, &t).unwrap();
    let lines = read_lines(buf.as_slice()).unwrap();
    assert_eq!(lines.len(), t.messages().len());
    let back: Vec<Message> = lines.iter().map(|l| l.to_message().unwrap()).collect();
    assert_eq!(back, t.messages());
    assert!(lines.iter().all(|l| l.session_id == "jsonl-session"));
}
