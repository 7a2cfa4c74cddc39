//! Binned median-average-citation analyses and auxiliary diagnostics.
//!
//! "Average citation" is the mean windowed citation over one agent's papers of
//! a decision class; the median is then taken across the agents of a bin.

use std::collections::BTreeMap;

use chrono::{Datelike, Months, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detect::{is_eligible, AgentPapers, Role};
use crate::editor::{editor_papers, editor_profiles, EditorProfile, MetricsConfig};
use crate::ledger::{AgentId, Corpus, Decision, EventKind, Outcome};
use crate::par::Exec;
use crate::reviewer::{reviewer_papers, reviewer_profiles, ReviewerProfile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinSummary {
    pub bin_index: usize,
    pub bin_lower: f64,
    pub bin_upper: f64,
    pub n_agents: usize,
    pub mac_accepted: Option<f64>,
    pub mac_rejected: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BinningKind {
    EqualWidthOverRange,
    /// [0, 0.1), [0.1, 0.2), ... [0.9, 1.0]
    FixedTenthBuckets,
    EqualCountBuckets,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinningScheme {
    pub kind: BinningKind,
    pub n_bins: usize,
    /// Fixed range for equal-width bins; `None` uses the observed min/max.
    pub range: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticsError {
    #[error("binning scheme needs at least one bin")]
    NoBins,
    #[error("binning range ({0}, {1}) is not well ordered")]
    BadRange(f64, f64),
    #[error("unknown binning scheme `{0}` (expected equal-width:N, tenths or equal-count:N)")]
    UnknownScheme(String),
    #[error("empirical CDF of an empty sample")]
    EmptySample,
    #[error("non-finite value in sample")]
    NonFinite,
    #[error("unknown metric `{0}` (expected one of meat, rdi, radi, sri, mrat, mrsd, tdi, edi, ar, mtd, dfi)")]
    UnknownMetric(String),
}

impl BinningScheme {
    pub fn equal_width(n_bins: usize, range: Option<(f64, f64)>) -> Self {
        BinningScheme {
            kind: BinningKind::EqualWidthOverRange,
            n_bins,
            range,
        }
    }

    pub fn tenths() -> Self {
        BinningScheme {
            kind: BinningKind::FixedTenthBuckets,
            n_bins: 10,
            range: Some((0.0, 1.0)),
        }
    }

    pub fn equal_count(n_bins: usize) -> Self {
        BinningScheme {
            kind: BinningKind::EqualCountBuckets,
            n_bins,
            range: None,
        }
    }

    /// Parses `equal-width:12`, `tenths` or `equal-count:20`.
    pub fn parse(s: &str, range: Option<(f64, f64)>) -> Result<Self, DiagnosticsError> {
        let unknown = || DiagnosticsError::UnknownScheme(s.to_string());
        let (name, n) = match s.split_once(':') {
            Some((name, n)) => (name, Some(n.parse::<usize>().map_err(|_| unknown())?)),
            None => (s, None),
        };
        let scheme = match (name, n) {
            ("equal-width", Some(n)) => Self::equal_width(n, range),
            ("tenths", None) => Self::tenths(),
            ("equal-count", Some(n)) => Self::equal_count(n),
            _ => return Err(unknown()),
        };
        scheme.validate()?;
        Ok(scheme)
    }

    fn validate(&self) -> Result<(), DiagnosticsError> {
        if self.n_bins == 0 {
            return Err(DiagnosticsError::NoBins);
        }
        if let Some((lo, hi)) = self.range {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(DiagnosticsError::BadRange(lo, hi));
            }
        }
        Ok(())
    }

    /// Bin edges (length `bins + 1`) for the given metric values.
    pub fn edges(&self, values: &[f64]) -> Result<Vec<f64>, DiagnosticsError> {
        self.validate()?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(DiagnosticsError::NonFinite);
        }
        let observed = || {
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            match (lo.is_finite(), lo < hi) {
                (false, _) => (0.0, 1.0),
                (true, false) => (lo, lo + 1.0),
                (true, true) => (lo, hi),
            }
        };
        match self.kind {
            BinningKind::FixedTenthBuckets => Ok((0..=10).map(|i| i as f64 / 10.0).collect()),
            BinningKind::EqualWidthOverRange => {
                let (lo, hi) = self.range.unwrap_or_else(observed);
                let width = (hi - lo) / self.n_bins as f64;
                let mut edges: Vec<f64> = (0..self.n_bins).map(|i| lo + width * i as f64).collect();
                edges.push(hi);
                Ok(edges)
            }
            BinningKind::EqualCountBuckets => {
                let mut sorted = values.to_vec();
                sorted.sort_by(f64::total_cmp);
                let (lo, hi) = observed();
                let n = sorted.len();
                let mut edges = vec![lo];
                for i in 1..self.n_bins {
                    let e = sorted[i * n / self.n_bins];
                    if e > *edges.last().expect("non-empty") && e < hi {
                        edges.push(e);
                    }
                }
                edges.push(hi);
                Ok(edges)
            }
        }
    }
}

/// Index of the half-open bin `[e_i, e_{i+1})` holding `x`. The last bin is
/// closed; values outside the edges clamp to the boundary bins.
pub fn bin_of(edges: &[f64], x: f64) -> usize {
    let n_bins = edges.len() - 1;
    // number of interior edges <= x
    edges[1..n_bins].partition_point(|&e| e <= x)
}

/// Median; even-length samples average the two central values.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    })
}

pub fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Mean windowed citation of one agent's papers of the given class, skipping
/// papers whose citation is unavailable.
pub fn average_citation(papers: &[(Decision, Option<u64>)], class: Decision) -> Option<f64> {
    let cites: Vec<f64> = papers
        .iter()
        .filter(|(d, _)| *d == class)
        .filter_map(|(_, c)| c.map(|c| c as f64))
        .collect();
    mean(&cites)
}

/// Median average citation per bin of an agent-level metric.
///
/// Every agent in `agent_metric` lands in exactly one bin; all bins are
/// reported, including empty ones.
pub fn mac_by_bin(
    agent_metric: &BTreeMap<AgentId, f64>,
    agent_papers: &BTreeMap<AgentId, Vec<(Decision, Option<u64>)>>,
    scheme: &BinningScheme,
) -> Result<Vec<BinSummary>, DiagnosticsError> {
    if agent_metric.is_empty() {
        return Ok(Vec::new());
    }
    let values: Vec<f64> = agent_metric.values().copied().collect();
    let edges = scheme.edges(&values)?;
    let n_bins = edges.len() - 1;
    let mut members: Vec<(Vec<f64>, Vec<f64>, usize)> = vec![(Vec::new(), Vec::new(), 0); n_bins];
    for (agent, &x) in agent_metric {
        let slot = &mut members[bin_of(&edges, x)];
        slot.2 += 1;
        let papers = agent_papers.get(agent).map(Vec::as_slice).unwrap_or(&[]);
        if let Some(a) = average_citation(papers, Decision::Accept) {
            slot.0.push(a);
        }
        if let Some(r) = average_citation(papers, Decision::Reject) {
            slot.1.push(r);
        }
    }
    Ok(members
        .into_iter()
        .enumerate()
        .map(|(i, (acc, rej, n))| BinSummary {
            bin_index: i,
            bin_lower: edges[i],
            bin_upper: edges[i + 1],
            n_agents: n,
            mac_accepted: median(&acc),
            mac_rejected: median(&rej),
        })
        .collect())
}

pub const METRICS: [&str; 11] = [
    "meat", "rdi", "radi", "sri", "mrat", "mrsd", "tdi", "edi", "ar", "mtd", "dfi",
];

/// Values of one named metric for every eligible agent where it is defined,
/// together with that role's per-agent papers.
pub fn eligible_metric(
    corpus: &Corpus,
    cfg: &MetricsConfig,
    exec: Exec,
    metric: &str,
) -> Result<(Role, BTreeMap<AgentId, f64>, AgentPapers), DiagnosticsError> {
    let role = metric_role(metric)?;
    let values = match role {
        Role::Editor => metric_values(&editor_profiles(corpus, cfg, exec), &[], metric)?,
        Role::Reviewer => metric_values(&[], &reviewer_profiles(corpus, cfg, exec), metric)?,
    };
    let papers = match role {
        Role::Editor => editor_papers(corpus),
        Role::Reviewer => reviewer_papers(corpus),
    };
    Ok((role, values, papers))
}

pub fn metric_role(metric: &str) -> Result<Role, DiagnosticsError> {
    match metric.to_ascii_lowercase().as_str() {
        "meat" | "rdi" | "radi" | "sri" => Ok(Role::Editor),
        "mrat" | "mrsd" | "tdi" | "edi" | "ar" | "mtd" | "dfi" => Ok(Role::Reviewer),
        _ => Err(DiagnosticsError::UnknownMetric(metric.to_string())),
    }
}

/// Eligible agents with a defined value of `metric`, picked from whichever
/// profile list matches the metric's role.
pub fn metric_values(
    editors: &[EditorProfile],
    reviewers: &[ReviewerProfile],
    metric: &str,
) -> Result<BTreeMap<AgentId, f64>, DiagnosticsError> {
    let name = metric.to_ascii_lowercase();
    let out = match metric_role(&name)? {
        Role::Editor => editors
            .iter()
            .filter(|p| is_eligible(*p))
            .filter_map(|p| {
                let v = match name.as_str() {
                    "meat" => p.meat,
                    "rdi" => p.rdi,
                    "radi" => p.radi,
                    _ => p.sri,
                };
                Some((p.editor_id.clone(), v?))
            })
            .collect(),
        Role::Reviewer => reviewers
            .iter()
            .filter(|p| is_eligible(*p))
            .filter_map(|p| {
                let v = match name.as_str() {
                    "mrat" => p.mrat,
                    "mrsd" => p.mrsd,
                    "tdi" => p.tdi,
                    "edi" => p.edi,
                    "ar" => p.ar,
                    "mtd" => p.mtd,
                    _ => p.dfi,
                };
                Some((p.reviewer_id.clone(), v?))
            })
            .collect(),
    };
    Ok(out)
}

/// ReviewerDeclined events per calendar month (1..=12, all months present).
pub fn declines_by_month(corpus: &Corpus) -> BTreeMap<u32, u64> {
    let mut m: BTreeMap<u32, u64> = (1..=12).map(|k| (k, 0)).collect();
    for e in corpus.events() {
        if e.kind == EventKind::ReviewerDeclined {
            *m.get_mut(&e.date.month()).expect("month in 1..=12") += 1;
        }
    }
    m
}

/// (editor, RDI, declines received) for every editor with a defined RDI.
pub fn rdi_vs_declines(
    corpus: &Corpus,
    cfg: &MetricsConfig,
    exec: Exec,
) -> Vec<(AgentId, f64, u64)> {
    editor_profiles(corpus, cfg, exec)
        .into_iter()
        .filter_map(|p| Some((p.editor_id, p.rdi?, p.n_declines_received)))
        .collect()
}

/// Average ranks (1-based), ties sharing their mean rank.
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

/// Pearson correlation; `None` when either side has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let mx = mean(x)?;
    let my = mean(y)?;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation (Pearson on average ranks).
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson(&ranks(x), &ranks(y))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DormantReviewer {
    pub reviewer_id: AgentId,
    pub last_assignment: NaiveDate,
    /// Final assignment was agreed to but never reported on.
    pub never_reported: bool,
}

/// Reviewers whose last assignment is more than `dormancy_years` before `now`.
pub fn dormant_reviewers(
    corpus: &Corpus,
    now: NaiveDate,
    dormancy_years: u32,
) -> Vec<DormantReviewer> {
    let horizon = now
        .checked_sub_months(Months::new(12 * dormancy_years))
        .unwrap_or(NaiveDate::MIN);
    let mut last: BTreeMap<&AgentId, (NaiveDate, &Outcome)> = BTreeMap::new();
    for ep in corpus.episodes() {
        let entry = last
            .entry(&ep.reviewer)
            .or_insert((ep.assigned, &ep.outcome));
        if ep.assigned >= entry.0 {
            *entry = (ep.assigned, &ep.outcome);
        }
    }
    last.into_iter()
        .filter(|(_, (date, _))| *date < horizon)
        .map(|(id, (date, outcome))| DormantReviewer {
            reviewer_id: id.clone(),
            last_assignment: date,
            never_reported: matches!(outcome, Outcome::Pending),
        })
        .collect()
}

/// Right-continuous empirical CDF as (x, F(x)) step points, one per distinct value.
pub fn citation_cdf(values: &[f64]) -> Result<Vec<(f64, f64)>, DiagnosticsError> {
    if values.is_empty() {
        return Err(DiagnosticsError::EmptySample);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(DiagnosticsError::NonFinite);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, x) in v.iter().enumerate() {
        let f = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == *x => last.1 = f,
            _ => out.push((*x, f)),
        }
    }
    if let Some(last) = out.last_mut() {
        last.1 = 1.0;
    }
    Ok(out)
}

/// Evaluates a step CDF at `x`.
pub fn cdf_at(cdf: &[(f64, f64)], x: f64) -> f64 {
    let k = cdf.partition_point(|&(v, _)| v <= x);
    if k == 0 {
        0.0
    } else {
        cdf[k - 1].1
    }
}

/// Two-sample Kolmogorov-Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64, DiagnosticsError> {
    let fa = citation_cdf(a)?;
    let fb = citation_cdf(b)?;
    Ok(fa
        .iter()
        .chain(&fb)
        .map(|&(x, _)| (cdf_at(&fa, x) - cdf_at(&fb, x)).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ids(n: usize) -> Vec<AgentId> {
        (0..n).map(|i| AgentId(format!("A{i}"))).collect()
    }

    #[test]
    fn mac_single_agent_tenths() {
        let a = ids(1);
        let metric = BTreeMap::from([(a[0].clone(), 0.5)]);
        let papers = BTreeMap::from([(
            a[0].clone(),
            vec![(Decision::Accept, Some(10)), (Decision::Accept, Some(20))],
        )]);
        let bins = mac_by_bin(&metric, &papers, &BinningScheme::tenths()).unwrap();
        assert_eq!(bins.len(), 10);
        let b = &bins[5];
        assert_eq!((b.bin_lower, b.n_agents), (0.5, 1));
        assert_eq!(b.mac_accepted, Some(15.0));
        assert_eq!(b.mac_rejected, None);
    }

    #[test]
    fn mac_median_of_two_agents() {
        let a = ids(2);
        let metric = BTreeMap::from([(a[0].clone(), 0.31), (a[1].clone(), 0.35)]);
        let papers = BTreeMap::from([
            (a[0].clone(), vec![(Decision::Accept, Some(4))]),
            (
                a[1].clone(),
                vec![(Decision::Accept, Some(6)), (Decision::Accept, Some(14))],
            ),
        ]);
        let bins = mac_by_bin(&metric, &papers, &BinningScheme::tenths()).unwrap();
        assert_eq!(bins[3].mac_accepted, Some(7.0));
    }

    #[test]
    fn mac_undefined_without_class() {
        let a = ids(1);
        let metric = BTreeMap::from([(a[0].clone(), 0.05)]);
        let papers = BTreeMap::from([(
            a[0].clone(),
            vec![(Decision::Reject, Some(9)), (Decision::Reject, None)],
        )]);
        let bins = mac_by_bin(&metric, &papers, &BinningScheme::tenths()).unwrap();
        assert_eq!(bins[0].mac_accepted, None);
        assert_eq!(bins[0].mac_rejected, Some(9.0));
        assert!(
            mac_by_bin(&BTreeMap::new(), &papers, &BinningScheme::tenths())
                .unwrap()
                .is_empty()
        );
    }

    #[test]
    fn out_of_range_clamps() {
        let a = ids(3);
        let metric = BTreeMap::from([
            (a[0].clone(), -5.0),
            (a[1].clone(), 200.0),
            (a[2].clone(), 5389.0),
        ]);
        let bins = mac_by_bin(
            &metric,
            &BTreeMap::new(),
            &BinningScheme::equal_width(12, Some((1.0, 498.8))),
        )
        .unwrap();
        assert_eq!(bins.len(), 12);
        assert_eq!(bins[0].n_agents, 1);
        assert_eq!(bins[11].n_agents, 1);
        assert_eq!(bins.iter().map(|b| b.n_agents).sum::<usize>(), 3);
    }

    #[test]
    fn scheme_parsing() {
        assert_eq!(
            BinningScheme::parse("tenths", None).unwrap(),
            BinningScheme::tenths()
        );
        assert_eq!(
            BinningScheme::parse("equal-count:20", None).unwrap().n_bins,
            20
        );
        assert!(BinningScheme::parse("equal-width:0", None).is_err());
        assert!(BinningScheme::parse("equal-width:4", Some((3.0, 1.0))).is_err());
        assert!(BinningScheme::parse("fancy", None).is_err());
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(citation_cdf(&[5.0]).unwrap(), vec![(5.0, 1.0)]);
        assert_eq!(
            citation_cdf(&[1.0, 2.0, 2.0, 4.0]).unwrap(),
            vec![(1.0, 0.25), (2.0, 0.75), (4.0, 1.0)]
        );
        assert_eq!(citation_cdf(&[3.0, 3.0, 3.0]).unwrap(), vec![(3.0, 1.0)]);
        assert_eq!(citation_cdf(&[]), Err(DiagnosticsError::EmptySample));
    }

    #[test]
    fn ks_examples() {
        assert_eq!(ks_statistic(&[0.0; 5], &[100.0; 7]).unwrap(), 1.0);
        assert_eq!(
            ks_statistic(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(),
            0.0
        );
    }

    #[test]
    fn spearman_with_ties() {
        assert_eq!(ranks(&[10.0, 20.0, 20.0, 5.0]), vec![2.0, 3.5, 3.5, 1.0]);
        assert!((spearman(&[1.0, 2.0, 3.0], &[9.0, 4.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(spearman(&[1.0, 1.0], &[2.0, 3.0]), None);
    }

    #[test]
    fn median_conventions() {
        assert_eq!(median(&[4.0, 10.0]), Some(7.0));
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[]), None);
    }

    proptest! {
        #[test]
        fn cdf_shape(values in prop::collection::vec(0u32..30, 1..60)) {
            let v: Vec<f64> = values.iter().map(|&x| x as f64).collect();
            let cdf = citation_cdf(&v).unwrap();
            let mut distinct = v.clone();
            distinct.sort_by(f64::total_cmp);
            distinct.dedup();
            prop_assert_eq!(cdf.len(), distinct.len());
            prop_assert!(cdf.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1));
            prop_assert_eq!(cdf.last().unwrap().1, 1.0);
        }

        #[test]
        fn every_agent_in_one_bin(values in prop::collection::vec(-50.0f64..600.0, 1..80), n in 1usize..25, kind in 0u8..3) {
            let scheme = match kind {
                0 => BinningScheme::equal_width(n, Some((1.0, 498.8))),
                1 => BinningScheme::equal_width(n, None),
                _ => BinningScheme::equal_count(n),
            };
            let metric: BTreeMap<AgentId, f64> =
                values.iter().enumerate().map(|(i, &x)| (AgentId(format!("A{i}")), x)).collect();
            let bins = mac_by_bin(&metric, &BTreeMap::new(), &scheme).unwrap();
            prop_assert_eq!(bins.iter().map(|b| b.n_agents).sum::<usize>(), values.len());
            prop_assert!(bins.iter().all(|b| b.bin_lower < b.bin_upper));
            prop_assert!(bins.windows(2).all(|w| w[0].bin_upper == w[1].bin_lower));
        }
    }
}
