//! Reviewer behavioral factors: MRAT, MRSD, TDI, EDI, MTD, AR and DFI.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::editor::MetricsConfig;
use crate::entropy::{shannon_entropy, tally};
use crate::ledger::{AgentId, Corpus, Decision, Episode, Outcome};
use crate::par::Exec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewerProfile {
    pub reviewer_id: AgentId,
    /// Assignments, self-review assignments included.
    pub n_assignments: u64,
    pub n_declines: u64,
    pub n_accept: u64,
    pub n_reject: u64,
    /// Agreed but no report on record.
    pub n_pending: u64,
    pub mrat: Option<f64>,
    pub mrsd: Option<f64>,
    pub tdi: Option<f64>,
    pub edi: Option<f64>,
    pub ar: Option<f64>,
    pub mtd: Option<f64>,
    pub dfi: Option<f64>,
    /// The reviewer is an editor who assigned themselves at least once.
    pub is_editor_self_review: bool,
    pub n_assignments_before_cutoff: u64,
    pub n_accepted_before_cutoff: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DelayError {
    #[error("pair {index}: outcome date {end} precedes assignment date {start}")]
    Negative {
        index: usize,
        start: NaiveDate,
        end: NaiveDate,
    },
}

/// Mean reviewer assignment time: same telescoping mean gap as MEAT.
pub fn mrat(dates: &[NaiveDate]) -> Option<f64> {
    crate::editor::meat(dates)
}

fn mean_delay(pairs: &[(NaiveDate, NaiveDate)]) -> Result<Option<f64>, DelayError> {
    if pairs.is_empty() {
        return Ok(None);
    }
    let mut total = 0i64;
    for (index, &(start, end)) in pairs.iter().enumerate() {
        let days = (end - start).num_days();
        if days < 0 {
            return Err(DelayError::Negative { index, start, end });
        }
        total += days;
    }
    Ok(Some(total as f64 / pairs.len() as f64))
}

/// Mean report sending delay over (assignment, report) date pairs.
pub fn mrsd(pairs: &[(NaiveDate, NaiveDate)]) -> Result<Option<f64>, DelayError> {
    mean_delay(pairs)
}

/// Mean time to decline over (assignment, decline) date pairs.
pub fn mtd(pairs: &[(NaiveDate, NaiveDate)]) -> Result<Option<f64>, DelayError> {
    mean_delay(pairs)
}

pub fn ar(n_accept: u64, n_reject: u64) -> Option<f64> {
    let n = n_accept + n_reject;
    (n > 0).then(|| n_accept as f64 / n as f64)
}

pub fn dfi(n_assignments: u64, n_declines: u64) -> Option<f64> {
    (n_assignments > 0 && n_declines <= n_assignments)
        .then(|| n_declines as f64 / n_assignments as f64)
}

/// Case-fold and trim. No stemming.
pub fn normalize_keyword(k: &str) -> String {
    k.trim().to_lowercase()
}

fn reviewer_episodes<'a>(
    reviewer: &'a AgentId,
    corpus: &'a Corpus,
) -> impl Iterator<Item = &'a Episode> + 'a {
    corpus.episodes().iter().filter(move |ep| {
        ep.reviewer == *reviewer && corpus.paper(ep.paper).final_decision.is_decided()
    })
}

/// Topic diversity over keywords of every paper the reviewer reported on.
pub fn tdi(reviewer: &AgentId, corpus: &Corpus, cfg: &MetricsConfig) -> Option<f64> {
    let eps: Vec<&Episode> = reviewer_episodes(reviewer, corpus).collect();
    tdi_of(&eps, corpus, cfg)
}

/// Editor diversity over per-assigning-editor counts.
pub fn edi(reviewer: &AgentId, corpus: &Corpus, cfg: &MetricsConfig) -> Option<f64> {
    let eps: Vec<&Episode> = reviewer_episodes(reviewer, corpus).collect();
    edi_of(&eps, cfg)
}

fn tdi_of(eps: &[&Episode], corpus: &Corpus, cfg: &MetricsConfig) -> Option<f64> {
    let counts = tally(
        eps.iter()
            .filter(|ep| matches!(ep.outcome, Outcome::Reported(..)))
            .flat_map(|ep| {
                corpus
                    .paper(ep.paper)
                    .keywords
                    .iter()
                    .map(|k| normalize_keyword(k))
            })
            .filter(|k| !k.is_empty()),
    );
    shannon_entropy(&counts, cfg.log_base).ok()
}

fn edi_of(eps: &[&Episode], cfg: &MetricsConfig) -> Option<f64> {
    let counts = tally(eps.iter().map(|ep| ep.assigning_editor.clone()));
    shannon_entropy(&counts, cfg.log_base).ok()
}

fn profile(
    id: &AgentId,
    eps: &[&Episode],
    corpus: &Corpus,
    cfg: &MetricsConfig,
) -> ReviewerProfile {
    let mut dates: Vec<NaiveDate> = eps.iter().map(|ep| ep.assigned).collect();
    dates.sort();
    let mut reports = Vec::new();
    let mut declines = Vec::new();
    let (mut n_accept, mut n_reject, mut n_pending) = (0, 0, 0);
    let mut accepted_before = 0;
    for ep in eps {
        match ep.outcome {
            Outcome::Declined(at) => declines.push((ep.assigned, at)),
            Outcome::Reported(at, verdict) => {
                reports.push((ep.assigned, at));
                match verdict {
                    Decision::Accept => {
                        n_accept += 1;
                        if corpus.before_cutoff(at) {
                            accepted_before += 1;
                        }
                    }
                    Decision::Reject => n_reject += 1,
                }
            }
            Outcome::Pending => n_pending += 1,
        }
    }
    let n = eps.len() as u64;
    let n_declines = declines.len() as u64;
    ReviewerProfile {
        reviewer_id: id.clone(),
        n_assignments: n,
        n_declines,
        n_accept,
        n_reject,
        n_pending,
        mrat: mrat(&dates),
        // episodes are ordered by construction, delays cannot be negative
        mrsd: mrsd(&reports).ok().flatten(),
        tdi: tdi_of(eps, corpus, cfg),
        edi: edi_of(eps, cfg),
        ar: ar(n_accept, n_reject),
        mtd: mtd(&declines).ok().flatten(),
        dfi: dfi(n, n_declines),
        is_editor_self_review: eps.iter().any(|ep| ep.self_review),
        n_assignments_before_cutoff: dates.iter().filter(|d| corpus.before_cutoff(**d)).count()
            as u64,
        n_accepted_before_cutoff: accepted_before,
    }
}

/// One profile per reviewer, ordered by reviewer id.
pub fn reviewer_profiles(corpus: &Corpus, cfg: &MetricsConfig, exec: Exec) -> Vec<ReviewerProfile> {
    let mut grouped: BTreeMap<&AgentId, Vec<&Episode>> = BTreeMap::new();
    for ep in corpus.episodes() {
        if corpus.paper(ep.paper).final_decision.is_decided() {
            grouped.entry(&ep.reviewer).or_default().push(ep);
        }
    }
    let entries: Vec<(&AgentId, Vec<&Episode>)> = grouped.into_iter().collect();
    exec.map(&entries, |(id, eps)| profile(id, eps, corpus, cfg))
}

/// Reports per reviewer as (verdict, windowed citation of the paper).
pub fn reviewer_papers(corpus: &Corpus) -> BTreeMap<AgentId, Vec<(Decision, Option<u64>)>> {
    let mut out: BTreeMap<AgentId, Vec<(Decision, Option<u64>)>> = BTreeMap::new();
    for ep in corpus.episodes() {
        if !corpus.paper(ep.paper).final_decision.is_decided() {
            continue;
        }
        if let Outcome::Reported(_, verdict) = ep.outcome {
            out.entry(ep.reviewer.clone())
                .or_default()
                .push((verdict, corpus.paper_citation(ep.paper)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::{EventKind, FinalDecision, PaperRecord, ReviewEvent};

    fn day(n: i64) -> NaiveDate {
        NaiveDate::from_ymd_opt(2010, 1, 1).unwrap() + chrono::Duration::days(n)
    }

    #[test]
    fn mrat_examples() {
        assert_eq!(mrat(&[day(0), day(100)]), Some(100.0));
        assert_eq!(mrat(&[day(0), day(30), day(90)]), Some(45.0));
        assert_eq!(mrat(&[day(0)]), None);
    }

    #[test]
    fn mrsd_examples() {
        assert_eq!(mrsd(&[(day(0), day(17))]), Ok(Some(17.0)));
        assert_eq!(
            mrsd(&[(day(0), day(10)), (day(5), day(35))]),
            Ok(Some(20.0))
        );
        assert!(matches!(
            mrsd(&[(day(5), day(1))]),
            Err(DelayError::Negative { index: 0, .. })
        ));
        assert_eq!(mrsd(&[]), Ok(None));
    }

    #[test]
    fn mtd_examples() {
        assert_eq!(mtd(&[(day(0), day(2))]), Ok(Some(2.0)));
        assert_eq!(mtd(&[(day(0), day(4)), (day(10), day(20))]), Ok(Some(7.0)));
        assert_eq!(mtd(&[]), Ok(None));
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(ar(3, 1), Some(0.75));
        assert_eq!(ar(5, 0), Some(1.0));
        assert_eq!(ar(0, 0), None);
        assert_eq!(dfi(8, 2), Some(0.25));
        assert_eq!(dfi(5, 0), Some(0.0));
        assert_eq!(dfi(4, 4), Some(1.0));
        assert_eq!(dfi(0, 0), None);
    }

    fn paper(id: &str, kw: &[&str]) -> PaperRecord {
        PaperRecord {
            paper_id: id.into(),
            author_ids: ["a".into()].into(),
            keywords: kw.iter().map(|s| s.to_string()).collect(),
            submission_date: day(0),
            publication_year: Some(2010),
            final_decision: FinalDecision::Accepted,
            citations_by_year: BTreeMap::new(),
        }
    }

    fn assign(p: &str, r: &str, e: &str, t: i64) -> ReviewEvent {
        ReviewEvent {
            paper_id: p.into(),
            actor_id: r.into(),
            kind: EventKind::ReviewerAssigned,
            date: day(t),
            decision_payload: None,
            assigning_editor_id: Some(e.into()),
        }
    }

    fn report(p: &str, r: &str, t: i64, v: Decision) -> ReviewEvent {
        ReviewEvent {
            paper_id: p.into(),
            actor_id: r.into(),
            kind: EventKind::ReportReceived,
            date: day(t),
            decision_payload: Some(v),
            assigning_editor_id: None,
        }
    }

    fn decline(p: &str, r: &str, e: &str, t: i64) -> ReviewEvent {
        ReviewEvent {
            kind: EventKind::ReviewerDeclined,
            ..assign(p, r, e, t)
        }
    }

    fn r() -> AgentId {
        "R".into()
    }

    #[test]
    fn tdi_examples() {
        let cfg = MetricsConfig::default();
        let one = Corpus::new(
            vec![paper("P1", &["optics"])],
            vec![
                assign("P1", "R", "E", 0),
                report("P1", "R", 3, Decision::Accept),
            ],
            2013,
            3,
        )
        .unwrap();
        assert_eq!(tdi(&r(), &one, &cfg), Some(0.0));

        let two = |k1: &[&str], k2: &[&str]| {
            Corpus::new(
                vec![paper("P1", k1), paper("P2", k2)],
                vec![
                    assign("P1", "R", "E", 0),
                    report("P1", "R", 3, Decision::Accept),
                    assign("P2", "R", "E", 5),
                    report("P2", "R", 9, Decision::Reject),
                ],
                2013,
                3,
            )
            .unwrap()
        };
        let disjoint = two(&["A", "B"], &["C", "D"]);
        assert!((tdi(&r(), &disjoint, &cfg).unwrap() - 4f64.ln()).abs() < 1e-9);
        // case-folded: {A:2, B:1, C:1}
        let overlap = two(&["A", "B"], &[" a", "C"]);
        assert!((tdi(&r(), &overlap, &cfg).unwrap() - 1.039_720_770_839_918).abs() < 1e-9);
    }

    #[test]
    fn edi_examples() {
        let cfg = MetricsConfig::default();
        let build = |editors: &[&str]| {
            let papers = (0..editors.len())
                .map(|i| paper(&format!("P{i}"), &["k"]))
                .collect();
            let events = editors
                .iter()
                .enumerate()
                .map(|(i, e)| assign(&format!("P{i}"), "R", e, i as i64))
                .collect();
            Corpus::new(papers, events, 2013, 3).unwrap()
        };
        assert_eq!(edi(&r(), &build(&["E1", "E1", "E1"]), &cfg), Some(0.0));
        assert!((edi(&r(), &build(&["E1", "E2", "E3"]), &cfg).unwrap() - 3f64.ln()).abs() < 1e-9);
        let h = edi(&r(), &build(&["E1", "E1", "E2", "E1"]), &cfg).unwrap();
        assert!((h - 0.562_335_144_618_885_5).abs() < 1e-9, "{h}");
    }

    #[test]
    fn accounting_identity() {
        let papers = (0..4).map(|i| paper(&format!("P{i}"), &["k"])).collect();
        let events = vec![
            assign("P0", "R", "E", 0),
            report("P0", "R", 10, Decision::Accept),
            assign("P1", "R", "E", 20),
            decline("P1", "R", "E", 24),
            assign("P2", "R", "F", 50),
            assign("P3", "R", "E", 80),
            report("P3", "R", 110, Decision::Reject),
        ];
        let c = Corpus::new(papers, events, 2013, 3).unwrap();
        let p = &reviewer_profiles(&c, &MetricsConfig::default(), Exec::Sequential)[0];
        assert_eq!(p.n_assignments, 4);
        assert_eq!(
            p.n_declines + p.n_accept + p.n_reject + p.n_pending,
            p.n_assignments
        );
        assert_eq!(p.mrat, Some(80.0 / 3.0));
        assert_eq!(p.mrsd, Some(20.0));
        assert_eq!(p.mtd, Some(4.0));
        assert_eq!(p.ar, Some(0.5));
        assert_eq!(p.dfi, Some(0.25));
        assert!(!p.is_editor_self_review);
    }
}
