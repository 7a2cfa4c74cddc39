//! Trend classification of reviewers' accepted-paper citation sequences.
//!
//! Decision rule, first match wins:
//!
//! 1. non-negative OLS slope: `NoDecline`
//! 2. strictly decreasing at every step: `ConstantDecline`
//! 3. first-segment mean above `(1 + good_ratio)` times the last-segment mean,
//!    with a flat first segment (`|slope| <= flat_tolerance * segment mean`):
//!    `GoodThenDecline`
//! 4. Spearman correlation with index at or below `constant_rho`: `ConstantDecline`
//! 5. detrended residual CV above `fluctuation_cv`: `FluctuatingDecline`,
//!    otherwise `ConstantDecline`
//!
//! Segments are the first and last `ceil(n / 3)` values. Every statistic used
//! is scale-free, so the category does not change under positive scaling.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{mean, spearman};
use crate::ledger::{AgentId, Corpus, Decision, Outcome};
use crate::par::Exec;

pub const PROFILE_LENGTH: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TrendCategory {
    ConstantDecline,
    GoodThenDecline,
    FluctuatingDecline,
    NoDecline,
}

impl TrendCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            TrendCategory::ConstantDecline => "ConstantDecline",
            TrendCategory::GoodThenDecline => "GoodThenDecline",
            TrendCategory::FluctuatingDecline => "FluctuatingDecline",
            TrendCategory::NoDecline => "NoDecline",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendParams {
    pub min_length: usize,
    pub constant_rho: f64,
    pub good_ratio: f64,
    pub fluctuation_cv: f64,
    pub flat_tolerance: f64,
}

impl Default for TrendParams {
    fn default() -> Self {
        TrendParams {
            min_length: 5,
            constant_rho: -0.8,
            good_ratio: 0.5,
            fluctuation_cv: 0.4,
            flat_tolerance: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CitationSequence {
    pub reviewer_id: AgentId,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendStats {
    pub slope: f64,
    pub spearman: f64,
    pub residual_cv: f64,
    pub first_mean: f64,
    pub last_mean: f64,
    pub first_slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Classified {
    Category(TrendCategory, TrendStats),
    Excluded(String),
}

/// OLS slope of `ys` against 0, 1, 2, ... and the intercept.
pub fn ols(ys: &[f64]) -> (f64, f64) {
    let n = ys.len() as f64;
    if ys.len() < 2 {
        return (0.0, ys.first().copied().unwrap_or(0.0));
    }
    let xm = (n - 1.0) / 2.0;
    let ym = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in ys.iter().enumerate() {
        let dx = i as f64 - xm;
        sxy += dx * (y - ym);
        sxx += dx * dx;
    }
    let slope = sxy / sxx;
    (slope, ym - slope * xm)
}

pub fn stats(values: &[f64]) -> TrendStats {
    let n = values.len();
    let seg = n.div_ceil(3).max(1);
    let (slope, intercept) = ols(values);
    let idx: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let m = mean(values).unwrap_or(0.0);
    let resid_sd = if n > 0 {
        (values
            .iter()
            .enumerate()
            .map(|(i, y)| {
                let r = y - (intercept + slope * i as f64);
                r * r
            })
            .sum::<f64>()
            / n as f64)
            .sqrt()
    } else {
        0.0
    };
    TrendStats {
        slope,
        spearman: spearman(&idx, values).unwrap_or(0.0),
        residual_cv: if m > 0.0 { resid_sd / m } else { 0.0 },
        first_mean: mean(&values[..seg.min(n)]).unwrap_or(0.0),
        last_mean: mean(&values[n.saturating_sub(seg)..]).unwrap_or(0.0),
        first_slope: ols(&values[..seg.min(n)]).0,
    }
}

pub fn classify_trend(seq: &CitationSequence, params: &TrendParams) -> Classified {
    let v = &seq.values;
    if v.len() < params.min_length.max(2) {
        return Classified::Excluded(format!(
            "sequence length {} below minimum {}",
            v.len(),
            params.min_length
        ));
    }
    if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Classified::Excluded("negative or non-finite citation value".into());
    }
    let s = stats(v);
    let category = if s.slope >= 0.0 {
        TrendCategory::NoDecline
    } else if v.windows(2).all(|w| w[1] < w[0]) {
        TrendCategory::ConstantDecline
    } else if s.first_mean > (1.0 + params.good_ratio) * s.last_mean
        && s.first_slope.abs() <= params.flat_tolerance * s.first_mean
    {
        TrendCategory::GoodThenDecline
    } else if s.spearman <= params.constant_rho {
        TrendCategory::ConstantDecline
    } else if s.residual_cv > params.fluctuation_cv {
        TrendCategory::FluctuatingDecline
    } else {
        TrendCategory::ConstantDecline
    };
    Classified::Category(category, s)
}

/// Linear-interpolation resampling onto `len` evenly spaced points.
pub fn resample(values: &[f64], len: usize) -> Vec<f64> {
    match (values.len(), len) {
        (_, 0) => Vec::new(),
        (0, _) => vec![0.0; len],
        (1, _) => vec![values[0]; len],
        (n, 1) => vec![values[n - 1]],
        (n, _) => (0..len)
            .map(|i| {
                let t = i as f64 * (n - 1) as f64 / (len - 1) as f64;
                let lo = (t.floor() as usize).min(n - 1);
                let hi = (lo + 1).min(n - 1);
                let frac = t - lo as f64;
                if frac == 0.0 {
                    values[lo]
                } else {
                    values[lo] + (values[hi] - values[lo]) * frac
                }
            })
            .collect(),
    }
}

/// Pointwise mean of the resampled sequences per category; empty categories
/// are omitted.
pub fn category_profiles(
    classified: &[(TrendCategory, &CitationSequence)],
    len: usize,
) -> BTreeMap<TrendCategory, Vec<f64>> {
    let mut acc: BTreeMap<TrendCategory, (Vec<f64>, usize)> = BTreeMap::new();
    for (cat, seq) in classified {
        let r = resample(&seq.values, len);
        let slot = acc.entry(*cat).or_insert_with(|| (vec![0.0; len], 0));
        for (a, x) in slot.0.iter_mut().zip(r) {
            *a += x;
        }
        slot.1 += 1;
    }
    acc.into_iter()
        .map(|(cat, (sum, n))| (cat, sum.into_iter().map(|x| x / n as f64).collect()))
        .collect()
}

/// Windowed citations of the papers each reviewer recommended for acceptance,
/// ordered by the paper's final-decision date (report date when missing), ties
/// by paper id. Papers without an available citation are skipped.
pub fn accepted_sequences(corpus: &Corpus, reviewers: &[AgentId]) -> Vec<CitationSequence> {
    let wanted: std::collections::BTreeSet<&AgentId> = reviewers.iter().collect();
    let mut per: BTreeMap<&AgentId, Vec<(chrono::NaiveDate, &str, f64)>> = BTreeMap::new();
    for ep in corpus.episodes() {
        if !wanted.contains(&ep.reviewer) || !corpus.paper(ep.paper).final_decision.is_decided() {
            continue;
        }
        let Outcome::Reported(at, Decision::Accept) = ep.outcome else {
            continue;
        };
        let Some(c) = corpus.paper_citation(ep.paper) else {
            continue;
        };
        let key = corpus.final_decision_date(ep.paper).unwrap_or(at);
        per.entry(&ep.reviewer).or_default().push((
            key,
            &corpus.paper(ep.paper).paper_id.0,
            c as f64,
        ));
    }
    reviewers
        .iter()
        .map(|r| {
            let mut items = per.remove(r).unwrap_or_default();
            items.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
            CitationSequence {
                reviewer_id: r.clone(),
                values: items.into_iter().map(|x| x.2).collect(),
            }
        })
        .collect()
}

pub fn classify_all(
    seqs: &[CitationSequence],
    params: &TrendParams,
    exec: Exec,
) -> Vec<Classified> {
    exec.map(seqs, |s| classify_trend(s, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(v: &[f64]) -> CitationSequence {
        CitationSequence {
            reviewer_id: "R".into(),
            values: v.to_vec(),
        }
    }

    fn cat(v: &[f64]) -> TrendCategory {
        match classify_trend(&seq(v), &TrendParams::default()) {
            Classified::Category(c, _) => c,
            Classified::Excluded(why) => panic!("excluded: {why}"),
        }
    }

    #[test]
    fn examples() {
        assert_eq!(
            cat(&[50.0, 40.0, 30.0, 20.0, 10.0]),
            TrendCategory::ConstantDecline
        );
        assert_eq!(
            cat(&[50.0, 52.0, 48.0, 10.0, 8.0, 5.0]),
            TrendCategory::GoodThenDecline
        );
        assert_eq!(
            cat(&[40.0, 10.0, 35.0, 8.0, 20.0, 5.0]),
            TrendCategory::FluctuatingDecline
        );
        assert_eq!(cat(&[1.0, 2.0, 3.0, 4.0, 5.0]), TrendCategory::NoDecline);
        assert_eq!(cat(&[4.0; 6]), TrendCategory::NoDecline);
    }

    #[test]
    fn example_statistics_by_hand() {
        // step-down: first segment [50, 52], last [8, 5]
        let s = stats(&[50.0, 52.0, 48.0, 10.0, 8.0, 5.0]);
        assert!((s.slope - (-197.5 / 17.5)).abs() < 1e-12);
        assert_eq!((s.first_mean, s.last_mean, s.first_slope), (51.0, 6.5, 2.0));
        // noisy decline: slope -86/17.5, Spearman 1 - 6*60/210
        let s = stats(&[40.0, 10.0, 35.0, 8.0, 20.0, 5.0]);
        assert!((s.slope - (-86.0 / 17.5)).abs() < 1e-12);
        assert!((s.spearman - (1.0 - 360.0 / 210.0)).abs() < 1e-12);
        assert!(
            s.residual_cv > 0.5 && s.residual_cv < 0.55,
            "{}",
            s.residual_cv
        );
    }

    #[test]
    fn short_sequences_excluded() {
        assert!(matches!(
            classify_trend(&seq(&[3.0, 2.0, 1.0]), &TrendParams::default()),
            Classified::Excluded(_)
        ));
    }

    #[test]
    fn resample_identity_and_profiles() {
        let v: Vec<f64> = (0..20).map(|i| (i * i) as f64).collect();
        assert_eq!(resample(&v, 20), v);
        assert_eq!(resample(&[0.0, 10.0], 3), vec![0.0, 5.0, 10.0]);
        let a = seq(&[9.0, 7.0, 5.0, 3.0, 1.0]);
        let b = seq(&[9.0, 7.0, 5.0, 3.0, 1.0]);
        let prof = category_profiles(
            &[
                (TrendCategory::ConstantDecline, &a),
                (TrendCategory::ConstantDecline, &b),
            ],
            PROFILE_LENGTH,
        );
        assert_eq!(prof.len(), 1);
        assert_eq!(
            prof[&TrendCategory::ConstantDecline],
            resample(&a.values, PROFILE_LENGTH)
        );
    }

    proptest! {
        #[test]
        fn strictly_monotone(start in 1.0f64..1000.0, steps in prop::collection::vec(0.01f64..50.0, 4..30)) {
            let mut down = vec![start + steps.iter().sum::<f64>()];
            let mut up = vec![start];
            for s in &steps {
                down.push(down.last().unwrap() - s);
                up.push(up.last().unwrap() + s);
            }
            prop_assert_eq!(cat(&down), TrendCategory::ConstantDecline);
            prop_assert_eq!(cat(&up), TrendCategory::NoDecline);
        }

        #[test]
        fn scale_invariant(values in prop::collection::vec(0u32..200, 5..25), k in 1u32..64) {
            let v: Vec<f64> = values.iter().map(|&x| x as f64).collect();
            // power-of-two factors keep every statistic bit-identical
            let scale = (1u64 << (k % 10)) as f64;
            let w: Vec<f64> = v.iter().map(|x| x * scale).collect();
            prop_assert_eq!(cat(&v), cat(&w));
        }

        #[test]
        fn profiles_have_fixed_length(lens in prop::collection::vec(5usize..40, 1..6)) {
            let seqs: Vec<CitationSequence> = lens.iter().map(|&n| seq(&(0..n).map(|i| i as f64).collect::<Vec<_>>())).collect();
            let tagged: Vec<_> = seqs.iter().enumerate().map(|(i, s)| {
                (if i % 2 == 0 { TrendCategory::NoDecline } else { TrendCategory::GoodThenDecline }, s)
            }).collect();
            for p in category_profiles(&tagged, PROFILE_LENGTH).values() {
                prop_assert_eq!(p.len(), PROFILE_LENGTH);
            }
        }
    }
}
