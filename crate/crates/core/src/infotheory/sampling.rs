use rand::Rng;

use super::InfoError;
use crate::qsim::BitString;

/// Monte Carlo estimate of `Pr[x not in B_test]`.
///
/// Each trial draws `T` of size `ceil(alpha m)` uniformly and puts every
/// index of `T` into `T'` with probability 1/2. A trial violates when the
/// relative error outside `T` exceeds the relative error on `T'` by more than
/// `epsilon`. An empty `T'` or `T`-complement counts as error rate 0.
pub fn sampling_violation_rate<R: Rng + ?Sized>(
    x: &BitString,
    xhat: &BitString,
    alpha: f64,
    epsilon: f64,
    trials: usize,
    rng: &mut R,
) -> Result<f64, InfoError> {
    if x.len() != xhat.len() {
        return Err(InfoError::Argument(format!("lengths {} and {} differ", x.len(), xhat.len())));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(InfoError::Argument(format!("alpha {alpha} outside (0, 1)")));
    }
    if trials == 0 {
        return Err(InfoError::Argument("trials must be positive".into()));
    }
    let m = x.len();
    let t = ((alpha * m as f64) - 1e-9).ceil().max(0.0) as usize;
    let t = t.min(m);
    let diff: Vec<bool> = x.iter().zip(xhat.iter()).map(|(a, b)| a != b).collect();
    let total_diff = diff.iter().filter(|&&d| d).count();
    let mut perm: Vec<usize> = (0..m).collect();
    let mut violations = 0usize;
    for _ in 0..trials {
        for i in 0..t {
            let j = rng.gen_range(i..m);
            perm.swap(i, j);
        }
        let mut diff_t = 0;
        let mut sel = 0usize;
        let mut diff_sel = 0usize;
        let mut coins = 0u64;
        for (k, &i) in perm[..t].iter().enumerate() {
            if k % 64 == 0 {
                coins = rng.next_u64();
            }
            let d = usize::from(diff[i]);
            diff_t += d;
            if (coins >> (k % 64)) & 1 == 1 {
                sel += 1;
                diff_sel += d;
            }
        }
        let outside = if m > t { (total_diff - diff_t) as f64 / (m - t) as f64 } else { 0.0 };
        let tested = if sel > 0 { diff_sel as f64 / sel as f64 } else { 0.0 };
        if outside > tested + epsilon {
            violations += 1;
        }
    }
    Ok(violations as f64 / trials as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn equal_strings_never_violate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = BitString::random(64, &mut rng);
        assert_eq!(sampling_violation_rate(&x, &x, 0.5, 0.0, 500, &mut rng).unwrap(), 0.0);
    }

    #[test]
    fn vacuous_margin() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = BitString::zeros(32);
        let y = BitString::from_iter(std::iter::repeat_n(1, 32));
        assert_eq!(sampling_violation_rate(&x, &y, 0.25, 1.0, 500, &mut rng).unwrap(), 0.0);
    }

    #[test]
    fn small_test_set_violates_often() {
        // One error in 16 with a single tested index: T' rarely sees it.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = BitString::zeros(16);
        let mut y = x.clone();
        y.set(3, 1);
        y.set(9, 1);
        let rate = sampling_violation_rate(&x, &y, 0.05, 0.01, 2000, &mut rng).unwrap();
        assert!(rate > 0.5);
    }

    #[test]
    fn argument_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = BitString::zeros(4);
        assert!(sampling_violation_rate(&x, &x, 0.5, 0.1, 0, &mut rng).is_err());
        assert!(sampling_violation_rate(&x, &x, 1.0, 0.1, 1, &mut rng).is_err());
        assert!(sampling_violation_rate(&x, &BitString::zeros(5), 0.5, 0.1, 1, &mut rng).is_err());
    }
}
