//! Fixed-length bit strings packed into 64-bit words.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;
use thiserror::Error;

const WORD: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenotypeError {
    #[error("genotype lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid bit character {found:?} at position {position}")]
    InvalidBit { position: usize, found: char },
    #[error("genotype must contain at least one bit")]
    Empty,
}

/// A bit string of fixed length.
///
/// Bit `i` lives in word `i / 64` at shift `i % 64`. Bits past `len` in the
/// last word are always zero, so derived equality, ordering and hashing
/// only see the meaningful bits.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Genotype {
    words: Vec<u64>,
    len: usize,
}

impl Genotype {
    pub fn zeros(len: usize) -> Self {
        Genotype {
            words: vec![0; len.div_ceil(WORD)],
            len,
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut g = Genotype {
            words: vec![u64::MAX; len.div_ceil(WORD)],
            len,
        };
        g.clear_tail();
        g
    }

    /// Uniformly random bits.
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut g = Genotype {
            words: (0..len.div_ceil(WORD)).map(|_| rng.random::<u64>()).collect(),
            len,
        };
        g.clear_tail();
        g
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut words = Vec::new();
        let mut len = 0;
        for bit in bits {
            if len % WORD == 0 {
                words.push(0);
            }
            if bit {
                words[len / WORD] |= 1 << (len % WORD);
            }
            len += 1;
        }
        Genotype { words, len }
    }

    /// Bytes read most significant bit first, so byte `5` becomes `00000101`.
    pub fn from_bytes(bytes: &[u8]) -> Self {
        Self::from_bits(
            bytes
                .iter()
                .flat_map(|&b| (0..8).rev().map(move |s| (b >> s) & 1 == 1)),
        )
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        self.words[i / WORD] ^= 1 << (i % WORD);
    }

    pub fn complement(&self) -> Self {
        let mut g = Genotype {
            words: self.words.iter().map(|w| !w).collect(),
            len: self.len,
        };
        g.clear_tail();
        g
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Packed storage; unused high bits of the last word are zero.
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of set bits in `start..end`.
    pub fn count_ones_in(&self, start: usize, end: usize) -> usize {
        assert!(start <= end && end <= self.len);
        if start == end {
            return 0;
        }
        let (first, last) = (start / WORD, (end - 1) / WORD);
        let lo_mask = u64::MAX << (start % WORD);
        let hi_mask = u64::MAX >> (WORD - 1 - (end - 1) % WORD);
        if first == last {
            return (self.words[first] & lo_mask & hi_mask).count_ones() as usize;
        }
        let mut total = (self.words[first] & lo_mask).count_ones() as usize;
        total += self.words[first + 1..last]
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum::<usize>();
        total + (self.words[last] & hi_mask).count_ones() as usize
    }

    /// Reads `width` bits starting at `start` as an unsigned integer, first
    /// bit most significant.
    pub fn read_uint(&self, start: usize, width: usize) -> u64 {
        assert!(width <= 64 && start + width <= self.len);
        (start..start + width).fold(0, |acc, i| (acc << 1) | self.get(i) as u64)
    }

    /// Word-parallel popcount of the XOR.
    pub fn hamming(&self, other: &Genotype) -> Result<u32, GenotypeError> {
        if self.len != other.len {
            return Err(GenotypeError::LengthMismatch {
                left: self.len,
                right: other.len,
            });
        }
        Ok(hamming_words(&self.words, &other.words))
    }

    fn clear_tail(&mut self) {
        let rem = self.len % WORD;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

#[inline]
pub(crate) fn hamming_words(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum()
}

impl fmt::Display for Genotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.iter().map(|b| if b { '1' } else { '0' }).collect();
        f.write_str(&s)
    }
}

impl fmt::Debug for Genotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Genotype({self})")
    }
}

impl FromStr for Genotype {
    type Err = GenotypeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut bits = Vec::with_capacity(s.len());
        for (position, c) in s.chars().filter(|c| *c != '_').enumerate() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                found => return Err(GenotypeError::InvalidBit { position, found }),
            }
        }
        if bits.is_empty() {
            return Err(GenotypeError::Empty);
        }
        Ok(Self::from_bits(bits))
    }
}
