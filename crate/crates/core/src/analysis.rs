//! Reduction of simulation output and the slowdown table.

use serde::Serialize;

use crate::bits::KeyRequest;
use crate::error::{Error, Result};
use crate::math::{self, closed_form_iterate, Epsilon, FoldCount, GuessProbability, LeakFraction};
use crate::sim::{run_trial_on, RecordStream, SchemePreset, SiftStats, TrialOutput};

/// Aggregate result of one or more simulated distillations.
///
/// Serializes with the field order below; the JSON report relies on it.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SimulationReport {
    pub preset: String,
    pub p: f64,
    pub fidelity: f64,
    pub k: u32,
    #[serde(rename = "L")]
    pub final_bits: usize,
    pub trials: usize,
    pub total_final_bits: u64,
    pub eve_correct_final_bits: u64,
    pub empirical_eve_rate: f64,
    /// `P^k(p)`, Eve's per-bit success rate when her raw rate is exactly `p`.
    pub bound_rate: f64,
    /// Signed distance `(empirical − bound) / sqrt(bound(1 − bound)/N)`.
    pub std_devs: f64,
    pub sift_stats: SiftStats,
    /// Raw bits per final bit at perfect fidelity, `2^k`.
    pub slowdown: f64,
    /// `2^k / fidelity`.
    pub raw_per_final: f64,
    pub seed: u64,
}

impl SimulationReport {
    /// Binomial standard deviation of the empirical rate under the bound rate.
    pub fn std_error(&self) -> f64 {
        binomial_sd(self.bound_rate, self.total_final_bits)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

pub fn binomial_sd(rate: f64, n: u64) -> f64 {
    (rate * (1.0 - rate) / n as f64).sqrt()
}

pub fn summarize(
    outputs: &[TrialOutput],
    preset: &SchemePreset,
    req: KeyRequest,
    seed: u64,
) -> Result<SimulationReport> {
    if outputs.is_empty() {
        return Err(Error::Empty("no trial outputs to summarize"));
    }
    let mut total = 0u64;
    let mut correct = 0u64;
    let mut sift = SiftStats::default();
    for out in outputs {
        if out.alice_key.len() != req.final_bits() || out.eve_key.len() != req.final_bits() {
            return Err(Error::Length {
                len: out.alice_key.len(),
                reason: "trial output does not match the key request",
            });
        }
        total += out.alice_key.len() as u64;
        correct += out.eve_key.agreements(&out.alice_key) as u64;
        sift = sift.merge(out.sift);
    }
    let k = req.k();
    let bound_rate = closed_form_iterate(preset.p, u64::from(k.get())).value();
    let empirical = correct as f64 / total as f64;
    let slowdown = k.block_size() as f64;
    Ok(SimulationReport {
        preset: preset.name.to_string(),
        p: preset.p.value(),
        fidelity: preset.fidelity.value(),
        k: k.get(),
        final_bits: req.final_bits(),
        trials: outputs.len(),
        total_final_bits: total,
        eve_correct_final_bits: correct,
        empirical_eve_rate: empirical,
        bound_rate,
        std_devs: (empirical - bound_rate) / binomial_sd(bound_rate, total),
        sift_stats: sift,
        slowdown,
        raw_per_final: slowdown / preset.fidelity.value(),
        seed,
    })
}

/// Runs `trials` independent trials (random streams `0..trials`) and summarizes them.
pub fn simulate(preset: &SchemePreset, req: KeyRequest, seed: u64, trials: usize) -> Result<SimulationReport> {
    let outputs = (0..trials as u64)
        .map(|t| run_trial_on(preset, req, &RecordStream::with_stream(seed, t)))
        .collect::<Result<Vec<_>>>()?;
    summarize(&outputs, preset, req, seed)
}

/// Published fold counts and 5-decimal `P^k(p)` at `ε = 0.0006`.
pub const PUBLISHED_TABLE: [(f64, u32, &str); 10] = [
    (0.99, 9, "0.50002"),
    (0.90, 6, "0.50040"),
    (0.85, 5, "0.50001"),
    (0.80, 4, "0.50014"),
    (0.70, 4, "0.50000"),
    (0.65, 3, "0.50003"),
    (0.60, 3, "0.50000"),
    (0.573, 2, "0.50023"),
    (0.55, 2, "0.50005"),
    (0.525, 2, "0.50000"),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublishedRow {
    pub k: u32,
    pub p_final: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableRow {
    pub p: GuessProbability,
    pub k: FoldCount,
    pub slowdown: u64,
    pub p_final: GuessProbability,
    pub residual_leak: LeakFraction,
    /// Reference values, present only when the table is built at `ε = 0.0006`.
    pub published: Option<PublishedRow>,
}

impl TableRow {
    /// `P^k(p)` rounded to five places.
    pub fn p_final_rounded(&self) -> String {
        format!("{:.5}", self.p_final.value())
    }

    /// True when the computed minimal `k` differs from the published one.
    pub fn flagged(&self) -> bool {
        self.published.is_some_and(|r| r.k != self.k.get())
    }

    pub fn flag(&self) -> Option<String> {
        self.published
            .filter(|_| self.flagged())
            .map(|r| format!("published k={} is not minimal", r.k))
    }
}

/// Minimal fold plans for the ten reference guess probabilities.
pub fn slowdown_table(eps: Epsilon) -> Vec<TableRow> {
    let at_reference = eps == Epsilon::DEFAULT;
    PUBLISHED_TABLE
        .iter()
        .map(|&(p, k, p_final)| {
            let p = GuessProbability::new(p).expect("reference p is valid");
            let plan = math::plan(p, eps).expect("reference plan fits a fold count");
            TableRow {
                p,
                k: plan.k,
                slowdown: plan.block_size,
                p_final: plan.p_final,
                residual_leak: plan.residual_leak,
                published: at_reference.then_some(PublishedRow { k, p_final }),
            }
        })
        .collect()
}
