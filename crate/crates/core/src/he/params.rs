use serde::{Deserialize, Serialize};

use crate::error::param_err;
use crate::ring::is_prime;
use crate::Result;

/// Scheme parameters plus the abstract noise model of the mock backend.
///
/// Noise is tracked in abstract units: fresh encryptions start at `eta0`,
/// a plaintext multiplication scales noise by `eta_mult`, and a rotation adds
/// `eta_rot`. Decryption fails once noise reaches `noise_budget`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeParams {
    /// Slot count.
    pub n: usize,
    /// Plaintext modulus.
    pub p: u64,
    /// Width of the (conceptual) ciphertext modulus.
    pub q_bits: u32,
    /// Error distribution width; carried as metadata only.
    pub sigma: f64,
    pub eta0: f64,
    pub eta_mult: f64,
    pub eta_rot: f64,
    pub noise_budget: f64,
}

pub const DEFAULT_N: usize = 2048;
/// Largest prime below 2^20.
pub const DEFAULT_P: u64 = 1_048_573;
pub const DEFAULT_Q_BITS: u32 = 60;

impl Default for HeParams {
    fn default() -> Self {
        Self::new(DEFAULT_N, DEFAULT_P)
    }
}

impl HeParams {
    /// Default noise model for the given slot count and plaintext modulus.
    pub fn new(n: usize, p: u64) -> Self {
        Self {
            n,
            p,
            q_bits: DEFAULT_Q_BITS,
            sigma: 3.2,
            eta0: 8.0,
            eta_mult: 1024.0,
            eta_rot: 2048.0,
            noise_budget: Self::default_budget(DEFAULT_Q_BITS, p),
        }
    }

    /// `2^(q_bits - 1) / p`.
    pub fn default_budget(q_bits: u32, p: u64) -> f64 {
        pow2_f64(q_bits.saturating_sub(1)) / p as f64
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.n.is_power_of_two() || self.n < 2 {
            return Err(param_err!("slot count n = {} must be a power of two >= 2", self.n));
        }
        if !(2..=63).contains(&self.q_bits) {
            return Err(param_err!("q_bits = {} outside [2, 63]", self.q_bits));
        }
        if !is_prime(self.p) {
            return Err(param_err!("plaintext modulus p = {} is not prime", self.p));
        }
        if self.p >= 1u64 << self.q_bits {
            return Err(param_err!("p = {} does not fit below 2^{}", self.p, self.q_bits));
        }
        if !(self.eta_rot > self.eta_mult && self.eta_mult > self.eta0 && self.eta0 > 1.0) {
            return Err(param_err!(
                "noise constants must satisfy eta_rot > eta_mult > eta0 > 1, got {} / {} / {}",
                self.eta_rot,
                self.eta_mult,
                self.eta0
            ));
        }
        // also rejects NaN
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(self.noise_budget > self.eta0) {
            return Err(param_err!(
                "noise budget {} must exceed fresh noise {}",
                self.noise_budget,
                self.eta0
            ));
        }
        Ok(())
    }
}

fn pow2_f64(e: u32) -> f64 {
    (0..e).fold(1.0, |acc, _| acc * 2.0)
}
