//! Visible-layer spin configurations.
//!
//! A configuration `x = (σᶻ₁ … σᶻₙ)` is stored as a bitmask: bit `i` is set
//! when `σᶻᵢ = −1`, i.e. qubit `i` is in `|1⟩`. With this convention the
//! mask is also the computational-basis index of `|x⟩`.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Largest number of spins a configuration can hold.
pub const MAX_SPINS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpinConfiguration {
    bits: u64,
    len: usize,
}

impl SpinConfiguration {
    /// All spins up (`σᶻ = +1` everywhere, the `|0…0⟩` basis state).
    pub fn all_up(len: usize) -> Self {
        assert!(len <= MAX_SPINS, "at most {MAX_SPINS} spins are supported");
        Self { bits: 0, len }
    }

    /// Build from the basis-state index. Bits above `len` are discarded.
    pub fn from_index(index: u64, len: usize) -> Self {
        assert!(len <= MAX_SPINS, "at most {MAX_SPINS} spins are supported");
        Self {
            bits: index & mask(len),
            len,
        }
    }

    /// Build from explicit `±1` values. Any non-negative entry is taken as `+1`.
    pub fn from_spins(values: &[i8]) -> Self {
        assert!(values.len() <= MAX_SPINS, "at most {MAX_SPINS} spins are supported");
        let bits = values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v < 0)
            .fold(0u64, |acc, (i, _)| acc | (1 << i));
        Self {
            bits,
            len: values.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Basis-state index of `|x⟩`.
    pub fn index(&self) -> u64 {
        self.bits
    }

    /// `σᶻᵢ` as `+1.0` or `−1.0`.
    #[inline]
    pub fn spin(&self, i: usize) -> f64 {
        debug_assert!(i < self.len);
        if self.bits >> i & 1 == 1 {
            -1.0
        } else {
            1.0
        }
    }

    /// Whether qubit `i` is in `|1⟩` (spin down).
    #[inline]
    pub fn is_down(&self, i: usize) -> bool {
        self.bits >> i & 1 == 1
    }

    pub fn flipped(&self, i: usize) -> Self {
        debug_assert!(i < self.len);
        Self {
            bits: self.bits ^ (1 << i),
            len: self.len,
        }
    }

    /// Flip every spin whose bit is set in `flip_mask`.
    pub fn flipped_mask(&self, flip_mask: u64) -> Self {
        Self {
            bits: (self.bits ^ flip_mask) & mask(self.len),
            len: self.len,
        }
    }

    pub fn spins(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(move |i| self.spin(i))
    }

    pub fn to_vec(&self) -> Vec<i8> {
        (0..self.len)
            .map(|i| if self.is_down(i) { -1 } else { 1 })
            .collect()
    }

    /// Every configuration of `len` spins in basis-index order.
    pub fn enumerate(len: usize) -> impl Iterator<Item = SpinConfiguration> {
        assert!(len < MAX_SPINS, "cannot enumerate {len} spins");
        (0..1u64 << len).map(move |b| SpinConfiguration::from_index(b, len))
    }
}

impl fmt::Display for SpinConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.is_down(i) { "-" } else { "+" })?;
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn mask(len: usize) -> u64 {
    if len >= 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}
