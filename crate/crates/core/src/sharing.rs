//! Additive secret sharing of linear-layer outputs over `Z_p`.
//!
//! The server masks an output ciphertext with a uniform vector `r` and hands
//! the masked ciphertext to the client. When the producing scheme left a
//! rotate-and-sum unfinished, both parties finish it on their plaintext shares;
//! the fold is linear, so the folded shares still add up to the true output.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::dim_err;
use crate::he::{CostMeter, HeBackend};
use crate::ring::SlotVector;
use crate::Result;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SharePair {
    pub server_share: SlotVector,
    pub client_share: SlotVector,
}

impl SharePair {
    pub fn reconstruct(&self) -> Result<SlotVector> {
        self.server_share.add(&self.client_share)
    }
}

/// Rotate-and-sum left for the share holders: spans `start -> end`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSpec {
    pub start_span: usize,
    pub end_span: usize,
}

impl FoldSpec {
    pub fn identity() -> Self {
        Self { start_span: 1, end_span: 1 }
    }

    pub fn steps(&self) -> usize {
        (self.start_span / self.end_span.max(1)).trailing_zeros() as usize
    }
}

/// Draws `r` uniformly from `Z_p^n` and returns it with `ct - r`.
///
/// The subtraction is metered as one Add and adds fresh-encryption noise.
pub fn gen_additive_share<B, R>(
    backend: &B,
    ct: &B::Ciphertext,
    rng: &mut R,
    meter: &CostMeter,
) -> Result<(SlotVector, B::Ciphertext)>
where
    B: HeBackend,
    R: Rng + ?Sized,
{
    let params = backend.params();
    let r = SlotVector::random(params.n, params.p, rng)?;
    let masked = backend.sub_plain(ct, &r, meter)?;
    Ok((r, masked))
}

/// Folds both the client's decrypted masked vector and the server's mask,
/// then reads the output rows at `slot_map`.
pub fn finalize_shares(
    masked_plain: &SlotVector,
    r: &SlotVector,
    fold: FoldSpec,
    slot_map: &[usize],
) -> Result<SharePair> {
    masked_plain.check_compatible(r)?;
    let n = r.len();
    if !slot_map.len().is_power_of_two() {
        return Err(dim_err!("slot map of length {} is not a power of two", slot_map.len()));
    }
    if let Some(&bad) = slot_map.iter().find(|&&s| s >= n) {
        return Err(dim_err!("slot map entry {bad} outside {n} slots"));
    }
    let client = masked_plain.fold_ras(fold.start_span, fold.end_span)?;
    let server = r.fold_ras(fold.start_span, fold.end_span)?;
    let read = |v: &SlotVector| -> Result<SlotVector> {
        SlotVector::new(slot_map.iter().map(|&s| v[s]).collect::<Vec<_>>(), v.modulus())
    };
    Ok(SharePair {
        server_share: read(&server)?,
        client_share: read(&client)?,
    })
}
