//! Eavesdropper-probability recurrence and fold-count planning.
//!
//! Folding two raw bits with XOR maps Eve's per-bit success probability `x`
//! to `P(x) = 2x² − 2x + 1`. Writing `x = (1 + d) / 2` this is `d ↦ d²`, so
//! every quantity here is computed on the excess `d = 2p − 1`. That keeps
//! the arithmetic exact near the zero-information point 0.5, where the
//! probability form would lose every significant digit to cancellation.
//!
//! The leak fraction is the per-bit Shannon capacity of Eve's channel,
//! `1 + p·log₂p + (1 − p)·log₂(1 − p)`. Note that the planning tolerance
//! `ε = 0.0006` (`p = 0.5006`) corresponds to a leak of about `1.04e−6`;
//! the probability whose leak is exactly `1e−8` is `p ≈ 0.50005887`.

use std::f64::consts::LN_2;
use std::fmt;

use crate::error::{Error, Result};

/// Eve's probability of correctly identifying one bit, in `[0.5, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct GuessProbability(f64);

impl GuessProbability {
    pub const HALF: GuessProbability = GuessProbability(0.5);

    pub fn new(value: f64) -> Result<Self> {
        if (0.5..1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(Error::Domain {
                what: "guess probability",
                value,
                range: "[0.5, 1)",
            })
        }
    }

    /// Unchecked constructor for the compile-time preset table.
    pub(crate) const fn from_const(value: f64) -> Self {
        Self(value)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `2p − 1`; exact for every representable `p` in the domain.
    pub fn excess(self) -> Excess {
        Excess(2.0 * self.0 - 1.0)
    }
}

impl fmt::Display for GuessProbability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Excess `d = 2p − 1` of a guess probability over one half, in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Excess(f64);

impl Excess {
    pub fn new(d: f64) -> Result<Self> {
        if (0.0..1.0).contains(&d) {
            Ok(Self(d))
        } else {
            Err(Error::Domain {
                what: "excess",
                value: d,
                range: "[0, 1)",
            })
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn probability(self) -> GuessProbability {
        GuessProbability(0.5 + 0.5 * self.0)
    }

    /// One XOR fold: `d ↦ d²`.
    pub fn fold(self) -> Excess {
        Excess(self.0 * self.0)
    }

    /// `l` folds by repeated squaring. Stops early once the excess reaches 0.
    pub fn fold_times(self, l: u64) -> Excess {
        let mut d = self.0;
        for _ in 0..l {
            if d == 0.0 {
                break;
            }
            d *= d;
        }
        Excess(d)
    }
}

/// Tolerated distance of the final guess probability above 0.5, in `(0, 0.5)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Epsilon(f64);

impl Epsilon {
    /// Planning tolerance used for the published scheme comparison.
    pub const DEFAULT: Epsilon = Epsilon(0.0006);

    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value < 0.5 {
            Ok(Self(value))
        } else {
            Err(Error::Domain {
                what: "epsilon",
                value,
                range: "(0, 0.5)",
            })
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Number of XOR-fold iterations applied to each block; the block holds `2^k` raw bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FoldCount(u32);

impl FoldCount {
    pub const ZERO: FoldCount = FoldCount(0);
    /// Largest `k` whose block size `2^k` fits a signed 64-bit count.
    pub const MAX: u32 = 62;

    pub fn new(k: u32) -> Result<Self> {
        if k <= Self::MAX {
            Ok(Self(k))
        } else {
            Err(Error::Domain {
                what: "fold count",
                value: f64::from(k),
                range: "[0, 62]",
            })
        }
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn block_size(self) -> u64 {
        1u64 << self.0
    }
}

impl fmt::Display for FoldCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Information leaked per exchanged key bit, `C_e / f_s`, in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LeakFraction(f64);

impl LeakFraction {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(Error::Domain {
                what: "leak fraction",
                value,
                range: "[0, 1]",
            })
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Fold plan for one `(p, ε)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanResult {
    pub k: FoldCount,
    /// `P^k(p)`, never above `0.5 + ε`.
    pub p_final: GuessProbability,
    pub block_size: u64,
    pub residual_leak: LeakFraction,
}

/// `P(x) = 2x² − 2x + 1`.
pub fn fold_polynomial(x: GuessProbability) -> GuessProbability {
    x.excess().fold().probability()
}

/// `P^l(p)`; `l = 0` returns `p`.
pub fn iterate_p(p: GuessProbability, l: u64) -> GuessProbability {
    if l == 0 {
        return p;
    }
    p.excess().fold_times(l).probability()
}

/// `(1 + (2p − 1)^(2^l)) / 2` evaluated in the log domain.
///
/// Shares no code with [`iterate_p`] so it can serve as its cross-check.
pub fn closed_form_iterate(p: GuessProbability, l: u64) -> GuessProbability {
    if l == 0 {
        return p;
    }
    let d = 2.0 * p.value() - 1.0;
    if d == 0.0 {
        return GuessProbability::HALF;
    }
    let exponent = (l as f64).exp2() * d.ln();
    GuessProbability(0.5 + 0.5 * exponent.exp())
}

/// `Δ(x) = x − P(x) = −2x² + 3x − 1`, evaluated as `d(1 − d)/2`.
pub fn delta_gap(x: GuessProbability) -> f64 {
    let d = x.excess().value();
    0.5 * d * (1.0 - d)
}

/// Smallest `k` with `P^k(p) ≤ 0.5 + ε`, i.e. `(2p − 1)^(2^k) ≤ 2ε`.
pub fn k_min(p: GuessProbability, eps: Epsilon) -> Result<FoldCount> {
    let d = p.excess();
    let target = 2.0 * eps.value();
    if d.value() <= target {
        return Ok(FoldCount::ZERO);
    }
    // log-domain estimate of the smallest k with 2^k · ln d ≤ ln(2ε)
    let ratio = target.ln() / d.value().ln();
    let mut k = (ratio.log2().ceil().max(1.0) as u32).min(FoldCount::MAX);
    let meets = |k: u32| d.fold_times(u64::from(k)).value() <= target;
    while k > 1 && meets(k - 1) {
        k -= 1;
    }
    while !meets(k) {
        k += 1;
        if k > FoldCount::MAX {
            return Err(Error::Domain {
                what: "required fold count",
                value: f64::from(k),
                range: "[0, 62]",
            });
        }
    }
    Ok(FoldCount(k))
}

/// Contraction-based upper bound on the fold count.
///
/// With `l₀` the first iterate strictly below 0.75 and `q = 4P^{l₀}(p) − 2`
/// the Lipschitz constant of `P` on `[0.5, P^{l₀}(p)]`, returns
///
/// ```text
/// ⌈ max(0, (p − 0.75)/Δ(p)) + max(0, log_q((1 − q)ε / Δ(P^{l₀}(p)))) ⌉
/// ```
///
/// The result is an iteration count and may exceed [`FoldCount::MAX`].
pub fn k_bound(p: GuessProbability, eps: Epsilon) -> u64 {
    let d = p.excess().value();
    if d == 0.0 {
        return 0;
    }
    let mut x = d;
    while x >= 0.5 {
        x *= x;
    }
    let q = 2.0 * x;
    let gap = 0.5 * x * (1.0 - x);
    let tail = (((1.0 - q) * eps.value() / gap).ln() / q.ln()).max(0.0);
    let head = if p.value() > 0.75 {
        (p.value() - 0.75) / delta_gap(p)
    } else {
        0.0
    };
    (head + tail).ceil() as u64
}

/// Leak fraction `1 + p·log₂p + (1 − p)·log₂(1 − p)` for `p ∈ [0.5, 1]`.
///
/// Uses `0·log₂0 = 0`, so `p = 1` gives exactly 1.
pub fn leak(p: f64) -> Result<LeakFraction> {
    if !(0.5..=1.0).contains(&p) {
        return Err(Error::Domain {
            what: "guess probability",
            value: p,
            range: "[0.5, 1]",
        });
    }
    Ok(leak_of_excess(2.0 * p - 1.0))
}

pub(crate) fn leak_of_excess(d: f64) -> LeakFraction {
    // (1+d)ln(1+d) + (1-d)ln(1-d) = Σ d^{2n} / (n(2n-1))
    let nats = if d >= 1.0 {
        2.0 * LN_2
    } else if d < 0.1 {
        let d2 = d * d;
        let mut power = d2;
        let mut sum = 0.0;
        for n in 1..64u32 {
            let n = f64::from(n);
            let term = power / (n * (2.0 * n - 1.0));
            sum += term;
            if term <= sum * 1e-18 {
                break;
            }
            power *= d2;
        }
        sum
    } else {
        (1.0 + d) * d.ln_1p() + (1.0 - d) * (-d).ln_1p()
    };
    let v = if d >= 1.0 { 1.0 } else { nats / (2.0 * LN_2) };
    LeakFraction(v.clamp(0.0, 1.0))
}

/// Leak in bits per second at key-bit frequency `fs`.
pub fn leak_rate(fs: f64, p: f64) -> Result<f64> {
    if !(fs.is_finite() && fs > 0.0) {
        return Err(Error::Domain {
            what: "key bit frequency",
            value: fs,
            range: "(0, inf)",
        });
    }
    Ok(fs * leak(p)?.value())
}

const INVERT_TOLERANCE: f64 = 1e-12;

/// Unique `p ∈ [0.5, 1]` with `leak(p) = target`, found by bisection.
pub fn invert_leak(target: LeakFraction) -> f64 {
    let t = target.value();
    if t == 0.0 {
        return 0.5;
    }
    if t == 1.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 2.0 * INVERT_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if leak_of_excess(mid).value() < t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 + 0.25 * (lo + hi)
}

/// Minimal fold plan for `(p, ε)`.
pub fn plan(p: GuessProbability, eps: Epsilon) -> Result<PlanResult> {
    let k = k_min(p, eps)?;
    let d_final = p.excess().fold_times(u64::from(k.get()));
    Ok(PlanResult {
        k,
        p_final: d_final.probability(),
        block_size: k.block_size(),
        residual_leak: leak_of_excess(d_final.value()),
    })
}
