use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::Serialize;

/// `sum_{j <= radius} C(n, j)`; radii above `n` are clamped.
pub fn hamming_ball_volume(n: u32, radius: u32) -> BigUint {
    let mut term = BigUint::one();
    let mut total = BigUint::zero();
    for j in 0..=radius.min(n) {
        if j > 0 {
            term = term * (n - j + 1) / j;
        }
        total += &term;
    }
    total
}

fn pow(base: u32, exp: u32) -> BigUint {
    // 0^0 = 1, matching the limit of mu^mu.
    BigUint::from(base).pow(exp)
}

/// Exact test of `vol(n, r) <= 2^{h(r/n) n}`.
///
/// With `mu = r/n` the right side equals `n^n / (r^r (n-r)^(n-r))`, so the
/// check is carried out on integers.
pub fn ball_bound_holds(n: u32, r: u32) -> bool {
    hamming_ball_volume(n, r) * pow(r, r) * pow(n - r.min(n), n - r.min(n)) <= pow(n, n)
}

#[derive(Clone, Debug, Serialize)]
pub struct BallReport {
    pub max_n: u32,
    pub cases: usize,
    pub failures: Vec<(u32, u32)>,
    pub pass: bool,
}

/// Every `n <= max_n` and every radius `r <= n/2`.
pub fn check_ball_bound(max_n: u32) -> BallReport {
    let mut cases = 0;
    let mut failures = Vec::new();
    for n in 1..=max_n {
        for r in 0..=n / 2 {
            cases += 1;
            if !ball_bound_holds(n, r) {
                failures.push((n, r));
            }
        }
    }
    BallReport { max_n, cases, pass: failures.is_empty(), failures }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::infotheory::binary_entropy;

    #[test]
    fn volume_examples() {
        assert_eq!(hamming_ball_volume(4, 1), BigUint::from(5u32));
        let bound = 2f64.powf(binary_entropy(0.25).unwrap() * 4.0);
        assert!((bound - 9.49).abs() < 0.01);
        assert_eq!(hamming_ball_volume(9, 0), BigUint::one());
        assert_eq!(hamming_ball_volume(10, 10), BigUint::from(1024u32));
    }

    #[test]
    fn integer_form_agrees_with_float_bound() {
        for n in 1..=20u32 {
            for r in 0..=n / 2 {
                let vol: f64 = hamming_ball_volume(n, r).to_string().parse().unwrap();
                let rhs = 2f64.powf(binary_entropy(r as f64 / n as f64).unwrap() * n as f64);
                assert!(vol <= rhs * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn bound_fails_beyond_half() {
        // Above n/2 the ball grows faster than 2^{h(mu) n}.
        assert!(!ball_bound_holds(4, 3));
    }

    #[test]
    fn exhaustive_up_to_twenty() {
        let report = check_ball_bound(20);
        assert!(report.pass, "{:?}", report.failures);
        assert_eq!(report.cases, (1..=20u32).map(|n| n as usize / 2 + 1).sum::<usize>());
    }
}
