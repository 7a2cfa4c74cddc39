//! Shannon-entropy diversity index.
//!
//! `H = -Σ p ln p` over the proportions of a categorical count table. All four
//! diversity metrics (RDI, RADI, TDI, EDI) reduce to this.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    /// Nats.
    #[default]
    E,
    /// Bits.
    Two,
    Ten,
}

impl LogBase {
    fn ln_base(self) -> f64 {
        match self {
            LogBase::E => 1.0,
            LogBase::Two => std::f64::consts::LN_2,
            LogBase::Ten => std::f64::consts::LN_10,
        }
    }
}

impl std::str::FromStr for LogBase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "e" | "ln" | "natural" => Ok(LogBase::E),
            "2" | "two" => Ok(LogBase::Two),
            "10" | "ten" => Ok(LogBase::Ten),
            other => Err(format!("unknown log base `{other}` (expected e, 2 or 10)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EntropyError {
    #[error("entropy of an empty count table")]
    Empty,
    #[error("category counts must be positive")]
    ZeroCount,
}

/// Entropy of a sequence of category counts.
pub fn shannon_entropy_counts<I>(counts: I, base: LogBase) -> Result<f64, EntropyError>
where
    I: IntoIterator<Item = u64>,
{
    let counts: Vec<u64> = counts.into_iter().collect();
    if counts.is_empty() {
        return Err(EntropyError::Empty);
    }
    if counts.contains(&0) {
        return Err(EntropyError::ZeroCount);
    }
    if counts.len() == 1 {
        return Ok(0.0);
    }
    if counts.iter().all(|&c| c == counts[0]) {
        return Ok((counts.len() as f64).ln() / base.ln_base());
    }
    let total: u64 = counts.iter().sum();
    let total = total as f64;
    // -Σ p ln p = ln N - (1/N) Σ c ln c, summed in fixed order
    let s: f64 = counts
        .iter()
        .map(|&c| {
            let c = c as f64;
            c * c.ln()
        })
        .sum();
    let h = (total.ln() - s / total).max(0.0);
    Ok(h / base.ln_base())
}

/// Entropy of a keyed count table.
pub fn shannon_entropy<K: Ord>(
    counts: &BTreeMap<K, u64>,
    base: LogBase,
) -> Result<f64, EntropyError> {
    shannon_entropy_counts(counts.values().copied(), base)
}

/// Tallies occurrences into a count table.
pub fn tally<K: Ord, I: IntoIterator<Item = K>>(items: I) -> BTreeMap<K, u64> {
    let mut m = BTreeMap::new();
    for k in items {
        *m.entry(k).or_insert(0) += 1;
    }
    m
}
