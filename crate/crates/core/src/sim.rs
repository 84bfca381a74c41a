//! Monte-Carlo model of raw-bit exchange with sifting and a passive eavesdropper.
//!
//! Per attempt Alice draws a uniform bit, Bob reads it correctly with
//! probability `fidelity`, and the public comparison of channel observations
//! discards every mismatch. On retained bits Eve's guess is correct with
//! probability `p`, independently across bits. Her guess for a folded bit is
//! the XOR of her raw guesses, which is right exactly when an even number of
//! raw guesses are wrong.
//!
//! # Random streams
//!
//! Attempt `i` of stream `s` under seed `seed` reads four `u64` values from
//! ChaCha8 (`rand_chacha`, seeded with `SeedableRng::seed_from_u64(seed)`,
//! stream `s`) starting at word position `8·i`:
//!
//! 1. Alice's bit (top bit),
//! 2. Bob's agreement draw, compared against `fidelity`,
//! 3. Eve's success draw, compared against `p`,
//! 4. reserved.
//!
//! Uniforms use the top 53 bits. Because every attempt is addressed by its
//! index, the output does not depend on how generation is split across
//! threads.

use std::fmt;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::Serialize;

use crate::bits::{fold_times, BitString, KeyRequest};
use crate::error::{Error, Result};
use crate::math::{FoldCount, GuessProbability};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeName {
    Kljn,
    Ufl,
    Liu,
    Custom,
}

impl fmt::Display for SchemeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemeName::Kljn => "KLJN",
            SchemeName::Ufl => "UFL",
            SchemeName::Liu => "Liu",
            SchemeName::Custom => "custom",
        })
    }
}

impl FromStr for SchemeName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kljn" => Ok(SchemeName::Kljn),
            "ufl" => Ok(SchemeName::Ufl),
            "liu" => Ok(SchemeName::Liu),
            "custom" => Ok(SchemeName::Custom),
            _ => Err(Error::Format(format!("unknown scheme {s:?}"))),
        }
    }
}

/// Probability that Alice's and Bob's raw decisions agree, in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Fidelity(f64);

impl Fidelity {
    pub const PERFECT: Fidelity = Fidelity(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value <= 1.0 {
            Ok(Self(value))
        } else {
            Err(Error::Domain {
                what: "fidelity",
                value,
                range: "(0, 1]",
            })
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// A key-exchange scheme characterized by Eve's guess probability and the raw fidelity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemePreset {
    pub name: SchemeName,
    pub p: GuessProbability,
    pub fidelity: Fidelity,
}

impl SchemePreset {
    /// Kirchhoff-law-Johnson-noise line: `p = 0.525`, fidelity 99.98%.
    pub const KLJN: SchemePreset = SchemePreset::preset(SchemeName::Kljn, 0.525, 0.9998);
    /// Ultra-long fiber laser: `p = 0.65`, fidelity 99.4%.
    pub const UFL: SchemePreset = SchemePreset::preset(SchemeName::Ufl, 0.65, 0.994);
    /// Liu's noise-correlation scheme: `p = 0.573`, fidelity 91.8%.
    pub const LIU: SchemePreset = SchemePreset::preset(SchemeName::Liu, 0.573, 0.918);

    const fn preset(name: SchemeName, p: f64, fidelity: f64) -> Self {
        SchemePreset {
            name,
            p: GuessProbability::from_const(p),
            fidelity: Fidelity(fidelity),
        }
    }

    /// The named preset; `None` for [`SchemeName::Custom`].
    pub fn named(name: SchemeName) -> Option<Self> {
        match name {
            SchemeName::Kljn => Some(Self::KLJN),
            SchemeName::Ufl => Some(Self::UFL),
            SchemeName::Liu => Some(Self::LIU),
            SchemeName::Custom => None,
        }
    }

    pub fn custom(p: f64, fidelity: f64) -> Result<Self> {
        Ok(SchemePreset {
            name: SchemeName::Custom,
            p: GuessProbability::new(p)?,
            fidelity: Fidelity::new(fidelity)?,
        })
    }
}

/// One raw exchange attempt. `eve_guess` is only meaningful when `kept`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawExchangeRecord {
    pub alice_bit: bool,
    pub bob_bit: bool,
    pub eve_guess: bool,
    pub kept: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SiftStats {
    pub generated: u64,
    pub kept: u64,
    pub discarded: u64,
}

impl SiftStats {
    pub fn merge(self, other: SiftStats) -> SiftStats {
        SiftStats {
            generated: self.generated + other.generated,
            kept: self.kept + other.kept,
            discarded: self.discarded + other.discarded,
        }
    }
}

/// Records per generation chunk; one ChaCha seek per chunk.
const CHUNK: usize = 1 << 14;
/// Upper bound on records materialized per batch.
const MAX_BATCH: usize = 1 << 22;
const WORDS_PER_RECORD: u128 = 8;

fn unit(u: u64) -> f64 {
    (u >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Counter-addressed source of raw exchange attempts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecordStream {
    seed: u64,
    stream: u64,
}

impl RecordStream {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    fn rng_at(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(u128::from(index) * WORDS_PER_RECORD);
        rng
    }

    fn draw<F>(rng: &mut ChaCha8Rng, preset: &SchemePreset, discard: &F) -> RawExchangeRecord
    where
        F: Fn(&RawExchangeRecord) -> bool,
    {
        let alice_bit = rng.next_u64() >> 63 == 1;
        let bob_agrees = unit(rng.next_u64()) < preset.fidelity.value();
        let eve_right = unit(rng.next_u64()) < preset.p.value();
        let _reserved = rng.next_u64();
        let mut rec = RawExchangeRecord {
            alice_bit,
            bob_bit: alice_bit == bob_agrees,
            eve_guess: alice_bit == eve_right,
            kept: bob_agrees,
        };
        if rec.kept && discard(&rec) {
            rec.kept = false;
        }
        rec
    }

    fn chunk<F>(&self, preset: &SchemePreset, start: u64, count: usize, discard: &F) -> Vec<RawExchangeRecord>
    where
        F: Fn(&RawExchangeRecord) -> bool,
    {
        let mut rng = self.rng_at(start);
        (0..count).map(|_| Self::draw(&mut rng, preset, discard)).collect()
    }

    /// Chunks covering `[start, start + count)`, in index order.
    fn chunks<F, T, M>(&self, preset: &SchemePreset, start: u64, count: usize, discard: &F, map: M) -> Vec<T>
    where
        F: Fn(&RawExchangeRecord) -> bool + Sync,
        M: Fn(u64, Vec<RawExchangeRecord>) -> T + Sync,
        T: Send,
    {
        let spans: Vec<(u64, usize)> = (0..count)
            .step_by(CHUNK)
            .map(|off| (start + off as u64, CHUNK.min(count - off)))
            .collect();
        let run = |&(s, n): &(u64, usize)| map(s, self.chunk(preset, s, n, discard));
        #[cfg(feature = "parallel")]
        {
            spans.par_iter().map(run).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            spans.iter().map(run).collect()
        }
    }

    /// Attempts `start .. start + count`.
    pub fn records<F>(&self, preset: &SchemePreset, start: u64, count: usize, discard: &F) -> Vec<RawExchangeRecord>
    where
        F: Fn(&RawExchangeRecord) -> bool + Sync,
    {
        self.chunks(preset, start, count, discard, |_, recs| recs).concat()
    }
}

fn keep_all(_: &RawExchangeRecord) -> bool {
    false
}

/// `n` raw exchange attempts with the default sifting (mismatches only).
pub fn exchange_raw(
    preset: &SchemePreset,
    n: usize,
    stream: &RecordStream,
) -> Result<(Vec<RawExchangeRecord>, SiftStats)> {
    exchange_raw_with(preset, n, stream, keep_all)
}

/// Like [`exchange_raw`], additionally discarding agreeing bits for which `discard` returns true.
///
/// Mismatched bits are always discarded; the predicate only sees agreeing ones.
pub fn exchange_raw_with<F>(
    preset: &SchemePreset,
    n: usize,
    stream: &RecordStream,
    discard: F,
) -> Result<(Vec<RawExchangeRecord>, SiftStats)>
where
    F: Fn(&RawExchangeRecord) -> bool + Sync,
{
    if n == 0 {
        return Err(Error::Empty("raw exchange needs at least one attempt"));
    }
    let records = stream.records(preset, 0, n, &discard);
    let kept = records.iter().filter(|r| r.kept).count() as u64;
    let stats = SiftStats {
        generated: n as u64,
        kept,
        discarded: n as u64 - kept,
    };
    Ok((records, stats))
}

/// Eve's guess for one folded bit: the XOR of her guesses over a block of `2^k` kept records.
pub fn eve_folded_guess(block: &[RawExchangeRecord], k: FoldCount) -> Result<bool> {
    if block.len() as u64 != k.block_size() {
        return Err(Error::Length {
            len: block.len(),
            reason: "block must hold exactly 2^k records",
        });
    }
    Ok(block.iter().fold(false, |acc, r| acc ^ r.eve_guess))
}

/// Final keys and sifting counts of one simulated distillation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialOutput {
    pub alice_key: BitString,
    pub bob_key: BitString,
    pub eve_key: BitString,
    pub sift: SiftStats,
}

struct KeptBits {
    alice: BitString,
    bob: BitString,
    eve: BitString,
}

fn kept_bits(recs: &[RawExchangeRecord]) -> KeptBits {
    let kept = || recs.iter().filter(|r| r.kept);
    KeptBits {
        alice: kept().map(|r| r.alice_bit).collect(),
        bob: kept().map(|r| r.bob_bit).collect(),
        eve: kept().map(|r| r.eve_guess).collect(),
    }
}

/// Runs one trial on stream 0.
pub fn run_trial(preset: &SchemePreset, req: KeyRequest, seed: u64) -> Result<TrialOutput> {
    run_trial_on(preset, req, &RecordStream::new(seed))
}

/// Generates attempts in index order until `L · 2^k` bits are kept, then distills all three views.
pub fn run_trial_on(preset: &SchemePreset, req: KeyRequest, stream: &RecordStream) -> Result<TrialOutput> {
    let need = req.raw_bits();
    let mut alice = BitString::with_capacity(need);
    let mut bob = BitString::with_capacity(need);
    let mut eve = BitString::with_capacity(need);
    let mut next = 0u64;
    let mut generated = 0u64;

    while alice.len() < need {
        let remaining = need - alice.len();
        let estimate = (remaining as f64 / preset.fidelity.value() * 1.01).ceil() as usize + 64;
        let batch = estimate.min(MAX_BATCH);
        let parts = stream.chunks(preset, next, batch, &keep_all, |start, recs| {
            (start, recs.len(), kept_bits(&recs))
        });
        for (start, len, part) in parts {
            let missing = need - alice.len();
            if part.alice.len() < missing {
                alice.extend_from(&part.alice);
                bob.extend_from(&part.bob);
                eve.extend_from(&part.eve);
                generated = start + len as u64;
                continue;
            }
            // this chunk completes the key; find the attempt that supplies the last kept bit
            let recs = stream.chunk(preset, start, len, &keep_all);
            let last = recs
                .iter()
                .enumerate()
                .filter(|(_, r)| r.kept)
                .nth(missing - 1)
                .map(|(i, _)| i)
                .expect("chunk holds enough kept records");
            alice.extend_from(&part.alice.truncated(missing));
            bob.extend_from(&part.bob.truncated(missing));
            eve.extend_from(&part.eve.truncated(missing));
            generated = start + last as u64 + 1;
            break;
        }
        next += batch as u64;
    }

    let k = req.k();
    let sift = SiftStats {
        generated,
        kept: need as u64,
        discarded: generated - need as u64,
    };
    Ok(TrialOutput {
        alice_key: fold_times(&alice, k)?,
        bob_key: fold_times(&bob, k)?,
        eve_key: fold_times(&eve, k)?,
        sift,
    })
}
