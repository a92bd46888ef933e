//! Caps on enumeration sizes (quadrature words, spectra, Gram matrices).

use crate::error::{Error, Result};

/// Environment variable overriding [`DEFAULT_BUDGET`].
pub const BUDGET_ENV: &str = "FRACTAL_MRA_BUDGET";

pub const DEFAULT_BUDGET: u64 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    limit: u64,
}

impl Budget {
    pub fn new(limit: u64) -> Self {
        Self { limit }
    }

    /// Reads `FRACTAL_MRA_BUDGET`, falling back to the default when unset or unparsable.
    pub fn from_env() -> Self {
        let limit = std::env::var(BUDGET_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<u64>().ok())
            .filter(|&v| v > 0)
            .unwrap_or(DEFAULT_BUDGET);
        Self { limit }
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn check(&self, requested: u128) -> Result<()> {
        if requested > self.limit as u128 {
            Err(Error::Budget {
                requested,
                limit: self.limit,
            })
        } else {
            Ok(())
        }
    }

    /// Checks `base^exp` without overflowing.
    pub fn check_power(&self, base: u64, exp: u32) -> Result<()> {
        let requested = (base as u128).checked_pow(exp).unwrap_or(u128::MAX);
        self.check(requested)
    }
}

impl Default for Budget {
    fn default() -> Self {
        Self::new(DEFAULT_BUDGET)
    }
}
