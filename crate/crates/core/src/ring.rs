//! Slot vectors over `Z_p` and the rotations packed ciphertexts expose.

use alloc::vec::Vec;
use core::ops::Index;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, param_err};
use crate::Result;

/// A length-`n` vector of residues modulo `p`, `n` a power of two.
///
/// Every slot is kept fully reduced. The type is immutable; all operations
/// return fresh vectors.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotVector {
    slots: Vec<u64>,
    modulus: u64,
}

/// Elementwise operation selector for [`SlotVector::pointwise`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pointwise {
    Add,
    Sub,
    Mul,
}

#[inline]
pub(crate) fn add_mod(a: u64, b: u64, p: u64) -> u64 {
    let (s, carry) = a.overflowing_add(b);
    if carry || s >= p {
        s.wrapping_sub(p)
    } else {
        s
    }
}

#[inline]
pub(crate) fn sub_mod(a: u64, b: u64, p: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        p - (b - a)
    }
}

#[inline]
pub(crate) fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    if p <= u32::MAX as u64 {
        (a * b) % p
    } else {
        ((a as u128 * b as u128) % p as u128) as u64
    }
}

/// Barrett reduction of 64-bit values modulo a `p < 2^32`.
#[derive(Clone, Copy)]
pub(crate) struct Barrett {
    p: u64,
    /// `floor(2^64 / p)`
    m: u64,
}

impl Barrett {
    pub(crate) fn new(p: u64) -> Self {
        debug_assert!(p >= 2 && p <= u32::MAX as u64);
        Self { p, m: (u128::from(u64::MAX) + 1).div_euclid(u128::from(p)) as u64 }
    }

    /// `x mod p`; the quotient estimate is low by at most one.
    #[inline]
    pub(crate) fn reduce(&self, x: u64) -> u64 {
        let q = ((u128::from(x) * u128::from(self.m)) >> 64) as u64;
        let r = x - q * self.p;
        if r >= self.p {
            r - self.p
        } else {
            r
        }
    }
}

impl SlotVector {
    /// Wraps `slots`, checking the power-of-two length and that every slot is `< p`.
    pub fn new(slots: Vec<u64>, modulus: u64) -> Result<Self> {
        if modulus < 2 {
            return Err(param_err!("modulus {modulus} must be at least 2"));
        }
        if !slots.len().is_power_of_two() {
            return Err(dim_err!("slot count {} is not a power of two", slots.len()));
        }
        if let Some((i, v)) = slots.iter().enumerate().find(|(_, &v)| v >= modulus) {
            return Err(param_err!("slot {i} holds {v}, not reduced mod {modulus}"));
        }
        Ok(Self { slots, modulus })
    }

    /// Reduces arbitrary integers into a slot vector.
    pub fn from_reduced(values: impl IntoIterator<Item = u64>, modulus: u64) -> Result<Self> {
        let slots = values.into_iter().map(|v| v % modulus.max(1)).collect();
        Self::new(slots, modulus)
    }

    pub fn zeros(n: usize, modulus: u64) -> Result<Self> {
        Self::new(alloc::vec![0; n], modulus)
    }

    pub fn constant(n: usize, value: u64, modulus: u64) -> Result<Self> {
        Self::new(alloc::vec![value % modulus.max(1); n], modulus)
    }

    /// Builds a vector from a slot-index function; values are reduced mod `p`.
    pub fn from_fn(n: usize, modulus: u64, f: impl FnMut(usize) -> u64) -> Result<Self> {
        Self::from_reduced((0..n).map(f), modulus)
    }

    /// Draws every slot uniformly from `Z_p`.
    pub fn random<R: Rng + ?Sized>(n: usize, modulus: u64, rng: &mut R) -> Result<Self> {
        let slots = (0..n).map(|_| rng.gen_range(0..modulus)).collect();
        Self::new(slots, modulus)
    }

    pub(crate) fn from_raw(slots: Vec<u64>, modulus: u64) -> Self {
        debug_assert!(slots.len().is_power_of_two());
        debug_assert!(slots.iter().all(|&v| v < modulus));
        Self { slots, modulus }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.slots
    }

    pub fn into_inner(self) -> Vec<u64> {
        self.slots
    }

    /// `result[j] = self[(j + k) mod n]`.
    pub fn rotate_left(&self, k: usize) -> Self {
        let n = self.slots.len();
        let mut slots = self.slots.clone();
        slots.rotate_left(k % n);
        Self::from_raw(slots, self.modulus)
    }

    /// Left rotation by a signed amount, negative meaning toward higher indices.
    pub fn rotate_signed(&self, k: i64) -> Self {
        self.rotate_left(k.rem_euclid(self.slots.len() as i64) as usize)
    }

    pub fn pointwise(&self, other: &Self, op: Pointwise) -> Result<Self> {
        self.check_compatible(other)?;
        let p = self.modulus;
        let pairs = self.slots.iter().zip(&other.slots);
        let slots = match op {
            Pointwise::Add => pairs.map(|(&a, &b)| add_mod(a, b, p)).collect(),
            Pointwise::Sub => pairs.map(|(&a, &b)| sub_mod(a, b, p)).collect(),
            Pointwise::Mul if p <= u32::MAX as u64 => {
                let r = Barrett::new(p);
                pairs.map(|(&a, &b)| r.reduce(a * b)).collect()
            }
            Pointwise::Mul => pairs.map(|(&a, &b)| mul_mod(a, b, p)).collect(),
        };
        Ok(Self::from_raw(slots, p))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.pointwise(other, Pointwise::Add)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.pointwise(other, Pointwise::Sub)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.pointwise(other, Pointwise::Mul)
    }

    pub fn neg(&self) -> Self {
        let p = self.modulus;
        let slots = self.slots.iter().map(|&v| sub_mod(0, v, p)).collect();
        Self::from_raw(slots, p)
    }

    pub(crate) fn add_assign(&mut self, other: &Self) {
        debug_assert_eq!(self.slots.len(), other.slots.len());
        let p = self.modulus;
        for (a, &b) in self.slots.iter_mut().zip(&other.slots) {
            *a = add_mod(*a, b, p);
        }
    }

    pub fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.slots.len() != other.slots.len() {
            return Err(dim_err!(
                "slot count mismatch: {} vs {}",
                self.slots.len(),
                other.slots.len()
            ));
        }
        if self.modulus != other.modulus {
            return Err(dim_err!(
                "modulus mismatch: {} vs {}",
                self.modulus,
                other.modulus
            ));
        }
        Ok(())
    }

    /// Plaintext rotate-and-sum: `v <- v + rotate_left(v, s)` for
    /// `s = start/2, start/4, ..., end`.
    ///
    /// After the loop, slot `j` holds `sum_k v[(j + k*end) mod n]` over
    /// `k < start/end`. Both spans must be powers of two with
    /// `end <= start <= n`.
    pub fn fold_ras(&self, start_span: usize, end_span: usize) -> Result<Self> {
        let steps = fold_steps(start_span, end_span, self.len())?;
        let mut v = self.clone();
        for s in steps {
            let r = v.rotate_left(s);
            v.add_assign(&r);
        }
        Ok(v)
    }
}

/// Rotation amounts of a rotate-and-sum from `start` down to `end`.
pub(crate) fn fold_steps(start: usize, end: usize, n: usize) -> Result<Vec<usize>> {
    if !start.is_power_of_two() || !end.is_power_of_two() {
        return Err(param_err!("fold spans {start} -> {end} must be powers of two"));
    }
    if end > start || start > n {
        return Err(param_err!(
            "fold spans must satisfy end <= start <= n, got {end} <= {start} <= {n}"
        ));
    }
    let mut steps = Vec::new();
    let mut s = start / 2;
    while s >= end {
        steps.push(s);
        s /= 2;
    }
    Ok(steps)
}

impl Index<usize> for SlotVector {
    type Output = u64;

    fn index(&self, i: usize) -> &u64 {
        &self.slots[i]
    }
}

impl AsRef<[u64]> for SlotVector {
    fn as_ref(&self) -> &[u64] {
        &self.slots
    }
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const SMALL: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &q in &SMALL {
        if n.is_multiple_of(q) {
            return n == q;
        }
    }
    let mut d = n - 1;
    let mut r = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        r += 1;
    }
    let mulm = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powm = |mut b: u64, mut e: u64| {
        let mut acc = 1u64;
        b %= n;
        while e > 0 {
            if e & 1 == 1 {
                acc = mulm(acc, b);
            }
            b = mulm(b, b);
            e >>= 1;
        }
        acc
    };
    'witness: for &a in &SMALL {
        let mut x = powm(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..r {
            x = mulm(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}
