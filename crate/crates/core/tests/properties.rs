use proptest::prelude::*;
use qcompile::adversaries::benign_deviation_report;
use qcompile::apps::{
    coefficients, decode_partition, encode_partition, extractor_mac_tag, repetition_code, toeplitz_hash, verify_tag,
    Family, HashSeed, MacKey,
};
use qcompile::compiler::{check_openings, choose_test_subset, EprSnapshot, OpenedPosition, VerificationOutcome};
use qcompile::protocol::bb84::{decode_test_subset, encode_test_subset};
use qcompile::protocol::codec::{decode_bits, decode_u32, encode_bits, encode_u32};
use qcompile::protocol::{rng_from, test_size};
use qcompile::qsim::{Basis, BasisString, BitString};
use qcompile::QuantumState;

fn bits(max: usize) -> impl Strategy<Value = BitString> {
    prop::collection::vec(0u8..2, 0..max).prop_map(|v| BitString::new(v).unwrap())
}

fn bases(len: usize) -> impl Strategy<Value = BasisString> {
    prop::collection::vec(any::<bool>(), len)
        .prop_map(|v| v.into_iter().map(|b| Basis::from_bit(u8::from(b))).collect())
}

/// Alice holds halves `0..n` of `n` EPR pairs; Bob keeps the first `stored`
/// of his halves and measures the rest in `theta_hat`.
fn snapshot(
    n: usize,
    stored: usize,
    theta: &BasisString,
    theta_hat: &BasisString,
    committed: &BitString,
    seed: u64,
) -> EprSnapshot {
    let mut state = QuantumState::prepare_epr_pairs(n).unwrap();
    let mut rng = rng_from(seed);
    let bob: Vec<usize> = (n..2 * n).collect();
    for (i, &q) in bob.iter().enumerate().skip(stored) {
        state.measure_qubit(q, theta_hat.get(i), &mut rng).unwrap();
    }
    EprSnapshot {
        state,
        alice_qubits: (0..n).collect(),
        bob_qubits: bob,
        theta: theta.clone(),
        extracted: Some((theta_hat.clone(), committed.clone())),
        outcome: VerificationOutcome {
            accepted: true,
            mismatch_count: 0,
            tested_matching: 0,
            invalid_openings: 0,
            surviving_indices: (0..n).collect(),
        },
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn benign_report_monotone_in_storage(
        (n, theta, theta_hat, committed) in (1usize..=4).prop_flat_map(|n| (Just(n), bases(n), bases(n), prop::collection::vec(0u8..2, n))),
        seed in any::<u64>(),
    ) {
        let committed = BitString::new(committed).unwrap();
        let grid: Vec<f64> = (0..=64).map(|i| i as f64 / 64.0).collect();
        let mut last = 0.0;
        for stored in 0..=n {
            let r = benign_deviation_report(&snapshot(n, stored, &theta, &theta_hat, &committed, seed), &grid, None, 0.1).unwrap();
            let beta = r.beta_witness.unwrap();
            prop_assert!(beta + 1e-9 >= last, "stored {}: {} after {}", stored, beta, last);
            last = beta;
        }
        // Holding every half of n EPR pairs is as far from benign as it gets.
        prop_assert!(last >= 1.0 - 1e-9);
    }

    #[test]
    fn bit_codec_roundtrip(x in bits(300)) {
        prop_assert_eq!(decode_bits(&encode_bits(&x)).unwrap(), x);
    }

    #[test]
    fn u32_codec_roundtrip(v in any::<u32>()) {
        prop_assert_eq!(decode_u32(&encode_u32(v)).unwrap(), v);
    }

    #[test]
    fn test_subset_codec_roundtrip(m in 2usize..200, alpha in 0.05f64..0.95, seed in any::<u64>()) {
        let t = choose_test_subset(m, alpha, &mut rng_from(seed));
        prop_assert_eq!(t.len(), test_size(m, alpha));
        prop_assert_eq!(decode_test_subset(&encode_test_subset(&t), m).unwrap(), t);
    }

    #[test]
    fn partition_codec_roundtrip(v in prop::collection::vec(any::<bool>(), 0..64)) {
        let i0: Vec<usize> = (0..v.len()).filter(|&i| v[i]).collect();
        let i1: Vec<usize> = (0..v.len()).filter(|&i| !v[i]).collect();
        prop_assert_eq!(decode_partition(&encode_partition(&i0, &i1)).unwrap(), (i0, i1));
    }

    #[test]
    fn toeplitz_hash_is_affine(rows in 1usize..12, cols in 1usize..40, seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let s = HashSeed::random(Family::F, rows, cols, &mut rng);
        let x = BitString::random(cols, &mut rng);
        let y = BitString::random(cols, &mut rng);
        let h = |v: &BitString| toeplitz_hash(&s, v).unwrap();
        let lhs = h(&x.xor(&y).unwrap()).xor(&h(&BitString::zeros(cols))).unwrap();
        prop_assert_eq!(lhs, h(&x).xor(&h(&y)).unwrap());
    }

    #[test]
    fn mac_tags_verify(t in prop::sample::select(vec![8u32, 16, 32, 64]), k1 in any::<u64>(), k2 in any::<u64>(),
                       msg in prop::collection::vec(any::<u8>(), 1..100), flip in any::<prop::sample::Index>()) {
        let key = MacKey::new(t, k1, k2).unwrap();
        let tag = extractor_mac_tag(&key, &msg).unwrap();
        prop_assert!(verify_tag(&key, &msg, tag));
        prop_assert!(t == 64 || tag < 1u64 << t);
        // A changed message passes only for the at most deg / 2^t colliding k1.
        let mut other = msg.clone();
        let pos = flip.index(msg.len() * 8);
        other[pos / 8] ^= 1 << (pos % 8);
        if key.k1 != 0 && t == 64 {
            prop_assert!(!verify_tag(&key, &other, tag));
        }
        prop_assert_eq!(coefficients(&msg, t).len(), msg.len().div_ceil((t / 8) as usize) + 1);
    }

    #[test]
    fn code_corrects_up_to_radius(bits_n in prop::sample::select(vec![(1usize, 9usize), (2, 10), (3, 15), (4, 20), (8, 24)]),
                                  w_seed in any::<u64>(), pattern in any::<u64>()) {
        let (b, n) = bits_n;
        let code = repetition_code(b, n).unwrap();
        let w = (w_seed % code.size() as u64) as usize;
        let word = code.encode(w).unwrap();
        let mut flips: Vec<usize> = (0..n).filter(|i| (pattern >> i) & 1 == 1).collect();
        flips.truncate(code.radius());
        let noisy: BasisString = (0..n).map(|i| if flips.contains(&i) { word.get(i).flip() } else { word.get(i) }).collect();
        prop_assert_eq!(code.decode(&noisy).unwrap(), w);
    }

    #[test]
    fn opening_check_invariants(
        (m, theta, x) in (1usize..60).prop_flat_map(|m| (Just(m), bases(m), prop::collection::vec(0u8..2, m))),
        alpha in 0.05f64..0.95, seed in any::<u64>(), phi in prop::sample::select(vec![0.0, 0.05, 0.2]),
        eps_prime in 0.0f64..0.2, noise in prop::collection::vec(0u8..4, 60),
    ) {
        let x = BitString::new(x).unwrap();
        let tested = choose_test_subset(m, alpha, &mut rng_from(seed));
        let opened: Vec<OpenedPosition> = tested.iter().map(|&i| OpenedPosition {
            index: i,
            basis: if noise[i] == 3 { theta.get(i).flip() } else { theta.get(i) },
            bit: x.get(i) ^ u8::from(noise[i] == 2),
            valid: noise[i] != 1 || seed % 2 == 0,
        }).collect();
        let out = check_openings(&theta, &x, &opened, phi, eps_prime);
        let mut all: Vec<usize> = tested.iter().chain(&out.surviving_indices).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..m).collect::<Vec<_>>());
        prop_assert!(out.mismatch_count <= out.tested_matching);
        prop_assert!(out.tested_matching <= tested.len());
        if out.accepted {
            prop_assert_eq!(out.invalid_openings, 0);
        }
        if phi == 0.0 {
            prop_assert_eq!(out.accepted, out.mismatch_count == 0 && out.invalid_openings == 0);
        } else if out.tested_matching > 0 {
            let rate = out.mismatch_count as f64 / out.tested_matching as f64;
            prop_assert_eq!(out.accepted, out.invalid_openings == 0 && rate <= phi + eps_prime + 1e-12);
        }
    }
}
