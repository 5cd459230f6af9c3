//! Fixed-length bitstrings.
//!
//! Contexts (subsets of buttons) and outcomes (subsets of lights) are both
//! stored as [`Bits`]. Up to 64 positions live inline in a single word; wider
//! strings spill to the heap.

use alloc::string::String;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use smallvec::SmallVec;
use thiserror::Error;

const WORD: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum BitsError {
    #[error("bitstring length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("index {index} out of range for bitstring of length {len}")]
    OutOfRange { index: usize, len: usize },
    #[error("invalid character {0:?} in bitstring (expected '0' or '1')")]
    BadChar(char),
}

/// A bitstring of fixed length. Position `i` is the `i`-th button or light.
///
/// Ordering is by length, then lexicographic on the `0`/`1` rendering.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Bits {
    len: usize,
    words: SmallVec<[u64; 1]>,
}

impl Bits {
    pub fn zeros(len: usize) -> Self {
        let n = len.div_ceil(WORD).max(1);
        Bits {
            len,
            words: SmallVec::from_elem(0, n),
        }
    }

    pub fn ones_of_len(len: usize) -> Self {
        let mut b = Self::zeros(len);
        for i in 0..len {
            b.set(i, true);
        }
        b
    }

    /// Builds a bitstring with the given positions set.
    pub fn from_indices<I>(len: usize, indices: I) -> Result<Self, BitsError>
    where
        I: IntoIterator<Item = usize>,
    {
        let mut b = Self::zeros(len);
        for i in indices {
            if i >= len {
                return Err(BitsError::OutOfRange { index: i, len });
            }
            b.set(i, true);
        }
        Ok(b)
    }

    pub fn singleton(len: usize, index: usize) -> Self {
        let mut b = Self::zeros(len);
        b.set(index, true);
        b
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    /// Hamming weight.
    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Iterates set positions in ascending order.
    pub fn ones(&self) -> Ones<'_> {
        Ones {
            bits: self,
            word: 0,
            current: self.words[0],
        }
    }

    fn check_len(&self, other: &Bits) -> Result<(), BitsError> {
        if self.len != other.len {
            Err(BitsError::LengthMismatch {
                left: self.len,
                right: other.len,
            })
        } else {
            Ok(())
        }
    }

    /// `self ⪰ other`: every position clear in `self` is clear in `other`.
    pub fn dominates(&self, other: &Bits) -> Result<bool, BitsError> {
        self.check_len(other)?;
        Ok(self
            .words
            .iter()
            .zip(other.words.iter())
            .all(|(&a, &b)| b & !a == 0))
    }

    /// Subset test without the length check; callers guarantee equal lengths.
    #[inline]
    pub(crate) fn contains_all(&self, other: &Bits) -> bool {
        self.words
            .iter()
            .zip(other.words.iter())
            .all(|(&a, &b)| b & !a == 0)
    }

    pub fn intersects(&self, other: &Bits) -> bool {
        self.words
            .iter()
            .zip(other.words.iter())
            .any(|(&a, &b)| a & b != 0)
    }

    pub fn and(&self, other: &Bits) -> Bits {
        debug_assert_eq!(self.len, other.len);
        let mut out = self.clone();
        for (w, &o) in out.words.iter_mut().zip(other.words.iter()) {
            *w &= o;
        }
        out
    }

    pub fn or(&self, other: &Bits) -> Bits {
        debug_assert_eq!(self.len, other.len);
        let mut out = self.clone();
        for (w, &o) in out.words.iter_mut().zip(other.words.iter()) {
            *w |= o;
        }
        out
    }

    /// Positions set in `self` but not in `other`.
    pub fn minus(&self, other: &Bits) -> Bits {
        debug_assert_eq!(self.len, other.len);
        let mut out = self.clone();
        for (w, &o) in out.words.iter_mut().zip(other.words.iter()) {
            *w &= !o;
        }
        out
    }

    /// Substring on the given positions, in the order given.
    pub fn restrict(&self, positions: &[usize]) -> Bits {
        let mut out = Bits::zeros(positions.len());
        for (k, &p) in positions.iter().enumerate() {
            if self.get(p) {
                out.set(k, true);
            }
        }
        out
    }

    /// The `0`/`1` rendering, position 0 first.
    pub fn to_bit_string(&self) -> String {
        (0..self.len)
            .map(|i| if self.get(i) { '1' } else { '0' })
            .collect()
    }
}

pub struct Ones<'a> {
    bits: &'a Bits,
    word: usize,
    current: u64,
}

impl Iterator for Ones<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        loop {
            if self.current != 0 {
                let tz = self.current.trailing_zeros() as usize;
                self.current &= self.current - 1;
                return Some(self.word * WORD + tz);
            }
            self.word += 1;
            if self.word >= self.bits.words.len() {
                return None;
            }
            self.current = self.bits.words[self.word];
        }
    }
}

impl Ord for Bits {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len.cmp(&other.len).then_with(|| {
            for (&a, &b) in self.words.iter().zip(other.words.iter()) {
                let diff = a ^ b;
                if diff != 0 {
                    let first = diff.trailing_zeros();
                    return if (a >> first) & 1 == 0 {
                        Ordering::Less
                    } else {
                        Ordering::Greater
                    };
                }
            }
            Ordering::Equal
        })
    }
}

impl PartialOrd for Bits {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bits({})", self)
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Bits {
    type Err = BitsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let len = s.chars().count();
        let mut b = Bits::zeros(len);
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => b.set(i, true),
                other => return Err(BitsError::BadChar(other)),
            }
        }
        Ok(b)
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for Bits {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}
