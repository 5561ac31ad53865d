use serde::{Deserialize, Serialize};

use super::ProtocolError;
use crate::adversary::EveStrategy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    /// Number of EPR pairs in the block.
    pub n_pairs: usize,
    /// Fraction of C photons Bob samples in the first check.
    pub check_fraction_1: f64,
    /// Decoy positions Alice sets aside to audit the second transmission.
    pub check_count_2: usize,
    /// Anticorrelation violations tolerated by the first check.
    pub abort_threshold: usize,
    pub seed: u64,
    pub eve: EveStrategy,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            n_pairs: 16,
            check_fraction_1: 0.25,
            check_count_2: 2,
            abort_threshold: 0,
            seed: 0,
            eve: EveStrategy::none(),
        }
    }
}

impl ProtocolConfig {
    pub fn with_pairs(mut self, n_pairs: usize) -> Self {
        self.n_pairs = n_pairs;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_eve(mut self, eve: EveStrategy) -> Self {
        self.eve = eve;
        self
    }

    pub fn with_check_fraction(mut self, fraction: f64) -> Self {
        self.check_fraction_1 = fraction;
        self
    }

    pub fn with_decoys(mut self, decoys: usize) -> Self {
        self.check_count_2 = decoys;
        self
    }

    /// `ceil(n_pairs * check_fraction_1)`, robust to representation error
    /// in the fraction (0.3 * 10 is 3, not 4).
    pub fn first_check_count(&self) -> usize {
        let exact = self.n_pairs as f64 * self.check_fraction_1;
        let rounded = exact.round();
        if (exact - rounded).abs() < 1e-9 {
            rounded as usize
        } else {
            exact.ceil() as usize
        }
    }

    /// Pairs left after the first check.
    pub fn surviving_pairs(&self) -> usize {
        self.n_pairs.saturating_sub(self.first_check_count())
    }

    /// Pairs carrying message bits, for either party.
    pub fn message_pairs(&self) -> usize {
        self.surviving_pairs().saturating_sub(self.check_count_2)
    }

    pub fn alice_capacity_bits(&self) -> usize {
        2 * self.message_pairs()
    }

    pub fn bob_capacity_bits(&self) -> usize {
        2 * self.message_pairs()
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        let bad = |m: String| Err(ProtocolError::ConfigInvalid(m));
        if self.n_pairs == 0 {
            return bad("n_pairs must be positive".into());
        }
        if !(self.check_fraction_1 > 0.0 && self.check_fraction_1 < 1.0) {
            return bad(format!(
                "check_fraction_1 must lie in (0, 1), got {}",
                self.check_fraction_1
            ));
        }
        let c1 = self.first_check_count();
        if c1 >= self.n_pairs {
            return bad(format!(
                "first check samples {c1} of {} pairs, leaving none",
                self.n_pairs
            ));
        }
        if self.check_count_2 >= self.n_pairs - c1 {
            return bad(format!(
                "check_count_2 = {} must be below the {} pairs left after the first check",
                self.check_count_2,
                self.n_pairs - c1
            ));
        }
        self.eve.validate().map_err(ProtocolError::ConfigInvalid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_capacity() {
        let c = ProtocolConfig::default();
        c.validate().unwrap();
        assert_eq!(c.first_check_count(), 4);
        assert_eq!(c.alice_capacity_bits(), 20);
        assert_eq!(c.bob_capacity_bits(), 20);
    }

    #[test]
    fn ceil_is_robust() {
        let c = ProtocolConfig::default()
            .with_pairs(10)
            .with_check_fraction(0.3);
        assert_eq!(c.first_check_count(), 3);
        let c = ProtocolConfig::default()
            .with_pairs(10)
            .with_check_fraction(0.31);
        assert_eq!(c.first_check_count(), 4);
        let c = ProtocolConfig::default()
            .with_pairs(64)
            .with_check_fraction(4.0 / 64.0);
        assert_eq!(c.first_check_count(), 4);
    }

    #[test]
    fn rejects_bad_configs() {
        let base = ProtocolConfig::default();
        assert!(base.clone().with_pairs(0).validate().is_err());
        assert!(base.clone().with_check_fraction(0.0).validate().is_err());
        assert!(base.clone().with_check_fraction(1.0).validate().is_err());
        // N=4, fraction 0.9 -> ceil(3.6) = 4 = N
        assert!(base
            .clone()
            .with_pairs(4)
            .with_check_fraction(0.9)
            .validate()
            .is_err());
        // 12 survivors, 12 decoys
        assert!(base.clone().with_decoys(12).validate().is_err());
        assert!(base.clone().with_decoys(11).validate().is_ok());
    }
}
