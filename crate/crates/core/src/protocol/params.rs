use serde::{Deserialize, Serialize};

use super::ProtocolError;

/// `ceil(alpha m)`, tolerant of representation error in `alpha`.
pub fn test_size(m: usize, alpha: f64) -> usize {
    ((alpha * m as f64) - 1e-9).ceil().max(0.0) as usize
}

/// `floor(lambda n)`, tolerant of representation error in `lambda`.
pub fn string_length(n: usize, lambda: f64) -> usize {
    ((lambda * n as f64) + 1e-9).floor().max(0.0) as usize
}

/// Every numeric knob of a session. `alpha = 0` means the uncompiled
/// protocol, where `n = m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Params {
    pub m: usize,
    pub n: usize,
    pub ell: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub eps_prime: f64,
    pub lambda: f64,
    pub nu: f64,
    pub phi: f64,
    pub seed: u64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            m: 0,
            n: 0,
            ell: 0,
            alpha: 0.0,
            beta: 0.0,
            gamma: 0.0,
            delta: 0.0,
            epsilon: 0.1,
            eps_prime: 0.0,
            lambda: 0.0,
            nu: 0.0,
            phi: 0.0,
            seed: 0,
        }
    }
}

impl Params {
    /// Compiled run over `m` qubits; derives `n` and `ell`.
    pub fn compiled(m: usize, alpha: f64, lambda: f64) -> Self {
        let n = m - test_size(m, alpha).min(m);
        Self { m, n, ell: string_length(n, lambda), alpha, lambda, ..Self::default() }
    }

    /// Uncompiled run over `n` qubits.
    pub fn plain(n: usize, lambda: f64) -> Self {
        Self::compiled(n, 0.0, lambda)
    }

    pub fn with_ell(mut self, ell: usize) -> Self {
        self.ell = ell;
        self
    }

    pub fn with_noise(mut self, phi: f64, eps_prime: f64) -> Self {
        self.phi = phi;
        self.eps_prime = eps_prime;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn is_compiled(&self) -> bool {
        self.alpha > 0.0
    }

    pub fn tested(&self) -> usize {
        self.m - self.n
    }

    /// Structural consistency and value ranges.
    pub fn validate(&self) -> Result<(), ProtocolError> {
        let bad = |what: &str| Err(ProtocolError::Config(what.to_string()));
        if !(0.0..1.0).contains(&self.alpha) {
            return bad("alpha must lie in [0, 1)");
        }
        if self.n != self.m - test_size(self.m, self.alpha).min(self.m) {
            return bad("n must equal m - ceil(alpha m)");
        }
        if self.m == 0 || self.n == 0 {
            return bad("no qubits survive the test");
        }
        if !(0.0..0.5).contains(&self.phi) {
            return bad("phi must lie in [0, 1/2)");
        }
        for (name, v) in [
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("delta", self.delta),
            ("epsilon", self.epsilon),
            ("eps_prime", self.eps_prime),
            ("lambda", self.lambda),
            ("nu", self.nu),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ProtocolError::Config(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_sizes() {
        let p = Params::compiled(8, 0.5, 0.0);
        assert_eq!((p.tested(), p.n), (4, 4));
        let p = Params::compiled(128, 0.5, 0.0625);
        assert_eq!((p.n, p.ell), (64, 4));
        let p = Params::compiled(10, 0.3, 0.0);
        assert_eq!(p.n, 7);
        let p = Params::compiled(5, 0.75, 0.0);
        assert_eq!(p.n, 1);
        assert!(Params::plain(16, 0.25).validate().is_ok());
        assert_eq!(Params::plain(16, 0.25).ell, 4);
    }

    #[test]
    fn validation_rejects_inconsistency() {
        let mut p = Params::compiled(8, 0.5, 0.0);
        p.n = 5;
        assert!(p.validate().is_err());
        assert!(Params::plain(8, 0.0).with_noise(0.5, 0.0).validate().is_err());
    }
}
