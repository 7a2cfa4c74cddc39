//! Editor behavioral factors: MEAT, SRI, RDI and RADI.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::entropy::{shannon_entropy, LogBase};
use crate::ledger::{AgentId, Corpus, Decision, EventKind, Outcome};
use crate::par::Exec;

/// Options shared by the editor and reviewer metric passes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsConfig {
    pub log_base: LogBase,
    /// Count declined and unreported assignments in RDI/RADI. Off by default:
    /// only assignments that produced a report count.
    pub count_declines_in_diversity: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditorProfile {
    pub editor_id: AgentId,
    /// EditorAssigned events on decided papers.
    pub n_assignments: u64,
    pub meat: Option<f64>,
    pub rdi: Option<f64>,
    pub radi: Option<f64>,
    pub sri: Option<f64>,
    pub n_declines_received: u64,
    pub n_papers: u64,
    pub n_self_reviewed: u64,
    pub n_assignments_before_cutoff: u64,
    pub n_accepted_before_cutoff: u64,
}

/// Mean gap in days between consecutive assignment dates.
///
/// `None` for fewer than two dates. The input must be sorted ascending; the
/// mean of consecutive gaps telescopes to `(last - first) / (n - 1)`.
pub fn meat(dates: &[NaiveDate]) -> Option<f64> {
    if dates.len() < 2 {
        return None;
    }
    debug_assert!(
        dates.windows(2).all(|w| w[0] <= w[1]),
        "dates must be sorted"
    );
    let span = (dates[dates.len() - 1] - dates[0]).num_days();
    Some(span as f64 / (dates.len() - 1) as f64)
}

/// Self-review index: share of handled papers the editor reviewed personally.
pub fn sri(n_assigned: u64, n_self_reviewed: u64) -> Option<f64> {
    if n_assigned == 0 || n_self_reviewed > n_assigned {
        return None;
    }
    Some(n_self_reviewed as f64 / n_assigned as f64)
}

/// Referee diversity index over per-reviewer assignment counts.
pub fn rdi(editor: &AgentId, corpus: &Corpus, cfg: &MetricsConfig) -> Option<f64> {
    let counts = crate::entropy::tally(
        diversity_episodes(editor, corpus, cfg).map(|ep| ep.reviewer.clone()),
    );
    shannon_entropy(&counts, cfg.log_base).ok()
}

/// Referee-author pair diversity index. A paper with several authors adds one
/// count to every (reviewer, author) pair.
pub fn radi(editor: &AgentId, corpus: &Corpus, cfg: &MetricsConfig) -> Option<f64> {
    let counts = crate::entropy::tally(diversity_episodes(editor, corpus, cfg).flat_map(|ep| {
        corpus
            .paper(ep.paper)
            .author_ids
            .iter()
            .map(move |a| (ep.reviewer.clone(), a.clone()))
    }));
    shannon_entropy(&counts, cfg.log_base).ok()
}

fn diversity_episodes<'a>(
    editor: &'a AgentId,
    corpus: &'a Corpus,
    cfg: &'a MetricsConfig,
) -> impl Iterator<Item = &'a crate::ledger::Episode> + 'a {
    corpus.episodes().iter().filter(move |ep| {
        ep.assigning_editor == *editor
            && corpus.paper(ep.paper).final_decision.is_decided()
            && (cfg.count_declines_in_diversity || matches!(ep.outcome, Outcome::Reported(..)))
    })
}

/// Papers handled by each editor, with their final decision and windowed
/// citation. Input to the binned MAC analyses and the anomaly validation.
pub fn editor_papers(corpus: &Corpus) -> BTreeMap<AgentId, Vec<(Decision, Option<u64>)>> {
    let mut handled: BTreeMap<AgentId, BTreeSet<usize>> = BTreeMap::new();
    for (idx, ev) in editor_assignments(corpus) {
        handled.entry(ev.clone()).or_default().insert(idx);
    }
    handled
        .into_iter()
        .map(|(editor, papers)| {
            let list = papers
                .into_iter()
                .filter_map(|p| {
                    let decision = corpus.paper(p).final_decision.as_decision()?;
                    Some((decision, corpus.paper_citation(p)))
                })
                .collect();
            (editor, list)
        })
        .collect()
}

/// (paper index, editor) for every EditorAssigned event on a decided paper.
fn editor_assignments(corpus: &Corpus) -> impl Iterator<Item = (usize, &AgentId)> {
    corpus.events().iter().filter_map(move |e| {
        if e.kind != EventKind::EditorAssigned {
            return None;
        }
        let idx = corpus.paper_index(&e.paper_id)?;
        corpus
            .paper(idx)
            .final_decision
            .is_decided()
            .then_some((idx, &e.actor_id))
    })
}

#[derive(Default)]
struct EditorTally {
    dates: Vec<NaiveDate>,
    papers: BTreeSet<usize>,
    self_reviewed: BTreeSet<usize>,
    declines: u64,
    before_cutoff: u64,
}

/// One profile per editor, ordered by editor id.
pub fn editor_profiles(corpus: &Corpus, cfg: &MetricsConfig, exec: Exec) -> Vec<EditorProfile> {
    let mut tallies: BTreeMap<AgentId, EditorTally> = BTreeMap::new();
    for e in corpus.events() {
        let Some(idx) = corpus.paper_index(&e.paper_id) else {
            continue;
        };
        if !corpus.paper(idx).final_decision.is_decided() {
            continue;
        }
        match e.kind {
            EventKind::EditorAssigned => {
                let t = tallies.entry(e.actor_id.clone()).or_default();
                t.dates.push(e.date);
                t.papers.insert(idx);
                if corpus.before_cutoff(e.date) {
                    t.before_cutoff += 1;
                }
            }
            EventKind::SelfReviewAssigned => {
                tallies
                    .entry(e.actor_id.clone())
                    .or_default()
                    .self_reviewed
                    .insert(idx);
            }
            EventKind::ReviewerDeclined => {
                if let Some(ed) = &e.assigning_editor_id {
                    tallies.entry(ed.clone()).or_default().declines += 1;
                }
            }
            _ => {}
        }
    }
    // editors only exist through EditorAssigned
    tallies.retain(|_, t| !t.dates.is_empty());

    let entries: Vec<(AgentId, EditorTally)> = tallies.into_iter().collect();
    exec.map(&entries, |(id, t)| {
        let mut dates = t.dates.clone();
        dates.sort();
        let n_self = t.self_reviewed.intersection(&t.papers).count() as u64;
        let accepted_before = t
            .papers
            .iter()
            .filter(|&&p| {
                corpus.paper(p).final_decision.as_decision() == Some(Decision::Accept)
                    && corpus
                        .final_decision_date(p)
                        .is_some_and(|d| corpus.before_cutoff(d))
            })
            .count() as u64;
        EditorProfile {
            editor_id: id.clone(),
            n_assignments: dates.len() as u64,
            meat: meat(&dates),
            rdi: rdi(id, corpus, cfg),
            radi: radi(id, corpus, cfg),
            sri: sri(t.papers.len() as u64, n_self),
            n_declines_received: t.declines,
            n_papers: t.papers.len() as u64,
            n_self_reviewed: n_self,
            n_assignments_before_cutoff: t.before_cutoff,
            n_accepted_before_cutoff: accepted_before,
        }
    })
}
