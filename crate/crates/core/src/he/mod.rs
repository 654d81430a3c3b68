//! Packed-HE evaluation interface and its functional mock.
//!
//! Schemes are written against [`HeBackend`]; [`MockBackend`] is the only
//! implementation shipped. It keeps plaintext payloads in the clear, applies
//! the standard noise recurrences and reports every primitive to a
//! [`CostMeter`].

mod meter;
mod mock;
mod params;

pub use meter::{CostMeter, CostModel};
pub use mock::{MockBackend, MockCiphertext, MockRotationGroup};
pub use params::HeParams;

use crate::ring::SlotVector;
use crate::Result;

/// The primitive set a packed BFV-style scheme offers to linear layers.
///
/// Rotations are left rotations (`out[j] = in[j + k]`), amounts taken mod `n`.
/// A rotation by zero is free and must not be metered.
pub trait HeBackend {
    type Ciphertext: Clone;
    type RotationGroup;

    fn params(&self) -> &HeParams;

    fn encrypt(&self, x: &SlotVector) -> Result<Self::Ciphertext>;

    fn decrypt(&self, ct: &Self::Ciphertext) -> Result<SlotVector>;

    /// Ciphertext + ciphertext.
    fn add(
        &self,
        a: &Self::Ciphertext,
        b: &Self::Ciphertext,
        meter: &CostMeter,
    ) -> Result<Self::Ciphertext>;

    /// Ciphertext - plaintext, metered as an Add.
    fn sub_plain(
        &self,
        a: &Self::Ciphertext,
        s: &SlotVector,
        meter: &CostMeter,
    ) -> Result<Self::Ciphertext>;

    /// Ciphertext (.) plaintext, elementwise.
    fn sc_mult(
        &self,
        a: &Self::Ciphertext,
        s: &SlotVector,
        meter: &CostMeter,
    ) -> Result<Self::Ciphertext>;

    /// A standalone rotation.
    fn perm(&self, a: &Self::Ciphertext, k: usize, meter: &CostMeter) -> Self::Ciphertext;

    /// One-time decomposition enabling cheap hoisted rotations of `a`.
    fn dec_perm(&self, a: &Self::Ciphertext, meter: &CostMeter) -> Self::RotationGroup;

    /// Rotation of the group's source ciphertext using its decomposition.
    fn hst_perm(&self, g: &Self::RotationGroup, k: usize, meter: &CostMeter) -> Self::Ciphertext;
}
