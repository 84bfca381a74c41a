//! Packed bit strings and the XOR-fold distillation pipeline.
//!
//! Bits are stored in stream order, most significant bit first inside each
//! 64-bit word, so the big-endian bytes of the words are exactly the
//! serialized form. Bits past `len` in the last word are always zero.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::math::FoldCount;

const WORD_BITS: usize = 64;

#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
}

fn words_for(len: usize) -> usize {
    len.div_ceil(WORD_BITS)
}

fn mask_for(bit: usize) -> u64 {
    1u64 << (WORD_BITS - 1 - bit % WORD_BITS)
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        Self {
            words: Vec::with_capacity(words_for(bits)),
            len: 0,
        }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; words_for(len)],
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, index: usize) -> Option<bool> {
        (index < self.len).then(|| self.words[index / WORD_BITS] & mask_for(index) != 0)
    }

    /// Panics if `index >= len`.
    pub fn set(&mut self, index: usize, value: bool) {
        assert!(index < self.len, "bit index {index} out of range for length {}", self.len);
        let word = &mut self.words[index / WORD_BITS];
        if value {
            *word |= mask_for(index);
        } else {
            *word &= !mask_for(index);
        }
    }

    pub fn push(&mut self, value: bool) {
        if self.len.is_multiple_of(WORD_BITS) {
            self.words.push(0);
        }
        if value {
            let last = self.words.len() - 1;
            self.words[last] |= mask_for(self.len);
        }
        self.len += 1;
    }

    pub fn iter(&self) -> Iter<'_> {
        Iter { bits: self, pos: 0 }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// XOR of all bits.
    pub fn parity(&self) -> bool {
        self.words.iter().fold(0u64, |acc, w| acc ^ w).count_ones() % 2 == 1
    }

    /// First `len` bits; the whole string if it is shorter.
    pub fn truncated(&self, len: usize) -> BitString {
        let len = len.min(self.len);
        let mut words = self.words[..words_for(len)].to_vec();
        clear_padding(&mut words, len);
        BitString { words, len }
    }

    pub fn complement(&self) -> BitString {
        let mut words: Vec<u64> = self.words.iter().map(|w| !w).collect();
        clear_padding(&mut words, self.len);
        BitString { words, len: self.len }
    }

    /// Number of positions where `self` and `other` agree, over the shorter length.
    pub fn agreements(&self, other: &BitString) -> usize {
        let len = self.len.min(other.len);
        let full = len / WORD_BITS;
        let mut n: usize = self.words[..full]
            .iter()
            .zip(&other.words[..full])
            .map(|(a, b)| (!(a ^ b)).count_ones() as usize)
            .sum();
        let rem = len % WORD_BITS;
        if rem > 0 {
            let head = !0u64 << (WORD_BITS - rem);
            n += (!(self.words[full] ^ other.words[full]) & head).count_ones() as usize;
        }
        n
    }

    /// Serialized payload: `ceil(len / 8)` bytes, MSB first, zero padded.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out: Vec<u8> = self.words.iter().flat_map(|w| w.to_be_bytes()).collect();
        out.truncate(self.len.div_ceil(8));
        out
    }

    /// Inverse of [`to_bytes`](Self::to_bytes). Rejects a wrong byte count or nonzero padding.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Result<BitString> {
        if bytes.len() != len.div_ceil(8) {
            return Err(Error::Format(format!(
                "payload holds {} bytes, {len} bits need {}",
                bytes.len(),
                len.div_ceil(8)
            )));
        }
        if !len.is_multiple_of(8) {
            let pad = 0xffu8 >> (len % 8);
            if bytes[bytes.len() - 1] & pad != 0 {
                return Err(Error::Format("nonzero padding bits".into()));
            }
        }
        let words = bytes
            .chunks(8)
            .map(|chunk| {
                let mut buf = [0u8; 8];
                buf[..chunk.len()].copy_from_slice(chunk);
                u64::from_be_bytes(buf)
            })
            .collect();
        Ok(BitString { words, len })
    }

    pub fn to_hex(&self) -> String {
        self.to_bytes().iter().map(|b| format!("{b:02x}")).collect()
    }

    fn append_word_prefix(&mut self, word: u64, bits: usize) {
        debug_assert!(bits <= WORD_BITS);
        if bits == 0 {
            return;
        }
        let offset = self.len % WORD_BITS;
        let word = if bits < WORD_BITS { word & (!0u64 << (WORD_BITS - bits)) } else { word };
        if offset == 0 {
            self.words.push(word);
        } else {
            let last = self.words.len() - 1;
            self.words[last] |= word >> offset;
            if offset + bits > WORD_BITS {
                self.words.push(word << (WORD_BITS - offset));
            }
        }
        self.len += bits;
    }

    /// Appends all bits of `other`.
    pub fn extend_from(&mut self, other: &BitString) {
        let mut remaining = other.len;
        for &w in &other.words {
            let take = remaining.min(WORD_BITS);
            self.append_word_prefix(w, take);
            remaining -= take;
        }
    }
}

fn clear_padding(words: &mut [u64], len: usize) {
    let rem = len % WORD_BITS;
    if rem != 0 {
        if let Some(last) = words.last_mut() {
            *last &= !0u64 << (WORD_BITS - rem);
        }
    }
}

/// Gathers the even-position bits of `x` (positions 0, 2, …, 62) into the low 32 bits, in order.
fn compress_even(x: u64) -> u64 {
    let mut y = x & 0x5555_5555_5555_5555;
    y = (y | (y >> 1)) & 0x3333_3333_3333_3333;
    y = (y | (y >> 2)) & 0x0f0f_0f0f_0f0f_0f0f;
    y = (y | (y >> 4)) & 0x00ff_00ff_00ff_00ff;
    y = (y | (y >> 8)) & 0x0000_ffff_0000_ffff;
    (y | (y >> 16)) & 0x0000_0000_ffff_ffff
}

/// XOR of each adjacent pair of a word, packed MSB first into 32 bits.
fn fold_word(x: u64) -> u64 {
    compress_even(x ^ (x >> 1))
}

impl FromIterator<bool> for BitString {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        let iter = iter.into_iter();
        let mut out = BitString::with_capacity(iter.size_hint().0);
        for b in iter {
            out.push(b);
        }
        out
    }
}

pub struct Iter<'a> {
    bits: &'a BitString,
    pos: usize,
}

impl Iterator for Iter<'_> {
    type Item = bool;

    fn next(&mut self) -> Option<bool> {
        let b = self.bits.get(self.pos)?;
        self.pos += 1;
        Some(b)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.bits.len - self.pos;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Iter<'_> {}

impl<'a> IntoIterator for &'a BitString {
    type Item = bool;
    type IntoIter = Iter<'a>;

    fn into_iter(self) -> Iter<'a> {
        self.iter()
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({}; {self})", self.len)
    }
}

impl FromStr for BitString {
    type Err = Error;

    /// Parses a string of `0`/`1`; whitespace and `_` are ignored.
    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .filter(|c| !c.is_whitespace() && *c != '_')
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Format(format!("unexpected character {other:?} in bit string"))),
            })
            .collect()
    }
}

/// Final key length and fold count for one distillation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeyRequest {
    final_bits: usize,
    k: FoldCount,
}

impl KeyRequest {
    pub fn new(final_bits: usize, k: FoldCount) -> Result<Self> {
        if final_bits == 0 {
            return Err(Error::Domain {
                what: "final key length",
                value: 0.0,
                range: "[1, inf)",
            });
        }
        usize::try_from(k.block_size())
            .ok()
            .and_then(|block| final_bits.checked_mul(block))
            .ok_or(Error::Domain {
                what: "required raw bits",
                value: f64::INFINITY,
                range: "addressable bit count",
            })?;
        Ok(Self { final_bits, k })
    }

    pub fn final_bits(&self) -> usize {
        self.final_bits
    }

    pub fn k(&self) -> FoldCount {
        self.k
    }

    /// `L · 2^k`.
    pub fn raw_bits(&self) -> usize {
        self.final_bits << self.k.get()
    }
}

/// Result of [`distill`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Distilled {
    pub key: BitString,
    /// Raw bits past `L · 2^k` that were not used.
    pub surplus: usize,
}

/// One XOR fold: output bit `j` is input bit `2j` XOR input bit `2j + 1`.
pub fn xor_fold(s: &BitString) -> Result<BitString> {
    if s.len == 0 || !s.len.is_multiple_of(2) {
        return Err(Error::Length {
            len: s.len,
            reason: "xor fold needs a nonempty even-length input",
        });
    }
    let mut words = Vec::with_capacity(words_for(s.len / 2));
    for pair in s.words.chunks(2) {
        let hi = fold_word(pair[0]) << 32;
        let lo = pair.get(1).map_or(0, |&w| fold_word(w));
        words.push(hi | lo);
    }
    words.truncate(words_for(s.len / 2));
    Ok(BitString { words, len: s.len / 2 })
}

/// Applies [`xor_fold`] `k` times. Requires `len` divisible by `2^k`.
pub fn fold_times(s: &BitString, k: FoldCount) -> Result<BitString> {
    let block = k.block_size();
    if !(s.len as u64).is_multiple_of(block) || (k.get() > 0 && s.is_empty()) {
        return Err(Error::Length {
            len: s.len,
            reason: "length must be a positive multiple of 2^k",
        });
    }
    let mut cur = s.clone();
    for _ in 0..k.get() {
        cur = xor_fold(&cur)?;
    }
    Ok(cur)
}

/// Splits the first `L · 2^k` raw bits into `L` consecutive blocks and folds each to one bit.
///
/// Folding the concatenated prefix `k` times yields the per-block results in
/// order, because no fold pair ever straddles a block boundary.
pub fn distill(raw: &BitString, req: KeyRequest) -> Result<Distilled> {
    let required = req.raw_bits();
    if raw.len < required {
        return Err(Error::Shortage {
            available: raw.len,
            required,
        });
    }
    let key = fold_times(&raw.truncated(required), req.k)?;
    Ok(Distilled {
        key,
        surplus: raw.len - required,
    })
}
