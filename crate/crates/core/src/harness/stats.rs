use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, Discrete};

/// Summary of one per-trial quantity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub mean: f64,
    /// Standard error of the mean.
    pub std_err: f64,
    pub min: f64,
    pub max: f64,
    pub trials: usize,
    /// Exact value the mean estimates, where one is known.
    pub reference: Option<f64>,
}

impl Metric {
    pub fn from_samples(samples: &[f64], reference: Option<f64>) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self { mean: 0.0, std_err: 0.0, min: 0.0, max: 0.0, trials: 0, reference };
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = if n > 1 { samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
        Self {
            mean,
            std_err: (var / n as f64).sqrt(),
            min: samples.iter().copied().fold(f64::INFINITY, f64::min),
            max: samples.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            trials: n,
            reference,
        }
    }

    pub fn from_flags(flags: &[bool], reference: Option<f64>) -> Self {
        Self::from_samples(&flags.iter().map(|&b| f64::from(u8::from(b))).collect::<Vec<_>>(), reference)
    }

    pub fn count(&self) -> usize {
        (self.mean * self.trials as f64).round() as usize
    }

    /// Whether the mean lies within `k` standard errors of the reference,
    /// with the standard error taken from the reference probability.
    pub fn within_binomial_error(&self, k: f64) -> bool {
        match self.reference {
            Some(p) => {
                let se = (p * (1.0 - p) / self.trials.max(1) as f64).sqrt();
                (self.mean - p).abs() <= k * se + 1e-12
            }
            None => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub cells: usize,
    pub samples: usize,
    pub statistic: f64,
    pub p_value: f64,
}

/// Pearson test of `values` against the uniform law on `0..cells`.
pub fn chi_square_uniform(values: &[usize], cells: usize) -> ChiSquare {
    let cells = cells.max(1);
    let mut counts = vec![0usize; cells];
    for &v in values {
        counts[v % cells] += 1;
    }
    let expected = values.len() as f64 / counts.len() as f64;
    let statistic =
        if expected > 0.0 { counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum() } else { 0.0 };
    let p_value = if counts.len() > 1 {
        let dist = ChiSquared::new((counts.len() - 1) as f64).expect("positive degrees of freedom");
        1.0 - dist.cdf(statistic)
    } else {
        1.0
    };
    ChiSquare { cells: counts.len(), samples: values.len(), statistic, p_value }
}

/// Pearson two-sample test that the histograms `a` and `b` come from the
/// same law. Cells with fewer than 10 joint samples are pooled.
pub fn two_sample_chi_square(a: &[usize], b: &[usize]) -> ChiSquare {
    let len = a.len().max(b.len());
    let at = |h: &[usize], i: usize| h.get(i).copied().unwrap_or(0);
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut pooled = (0.0, 0.0);
    for i in 0..len {
        let (x, y) = (at(a, i) as f64, at(b, i) as f64);
        if x + y >= 10.0 {
            cells.push((x, y));
        } else {
            pooled.0 += x;
            pooled.1 += y;
        }
    }
    if pooled.0 + pooled.1 > 0.0 {
        cells.push(pooled);
    }
    let na: f64 = a.iter().sum::<usize>() as f64;
    let nb: f64 = b.iter().sum::<usize>() as f64;
    let samples = (na + nb) as usize;
    if na == 0.0 || nb == 0.0 || cells.len() < 2 {
        return ChiSquare { cells: cells.len(), samples, statistic: 0.0, p_value: 1.0 };
    }
    let (ka, kb) = ((nb / na).sqrt(), (na / nb).sqrt());
    let statistic = cells.iter().map(|&(x, y)| (ka * x - kb * y).powi(2) / (x + y)).sum();
    let dist = ChiSquared::new((cells.len() - 1) as f64).expect("positive degrees of freedom");
    ChiSquare { cells: cells.len(), samples, statistic, p_value: 1.0 - dist.cdf(statistic) }
}

/// Probability that an honest receiver passes the test over a channel with
/// flip rate `phi`: `|T'| ~ Bin(t, 1/2)`, mismatches `~ Bin(|T'|, phi)`, and
/// the run passes when the mismatch fraction is at most `phi + eps_prime`.
pub fn honest_acceptance(t: usize, phi: f64, eps_prime: f64) -> f64 {
    let subset = Binomial::new(0.5, t as u64).expect("valid binomial");
    let mut total = 0.0;
    for size in 0..=t as u64 {
        let w = subset.pmf(size);
        if size == 0 || phi == 0.0 {
            total += w;
            continue;
        }
        let flips = Binomial::new(phi, size).expect("valid binomial");
        let pass: f64 =
            (0..=size).filter(|&k| k as f64 / size as f64 <= phi + eps_prime + 1e-12).map(|k| flips.pmf(k)).sum();
        total += w * pass;
    }
    total
}

/// Acceptance probability of a receiver that commits to values independent
/// of the qubits: each tested position catches it with probability 1/4.
pub fn blind_commit_acceptance(t: usize) -> f64 {
    0.75f64.powi(t as i32)
}
