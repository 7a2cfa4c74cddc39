//! Review-history data model, JSONL ingestion and citation windows.
//!
//! A corpus is a set of [`PaperRecord`]s plus the [`ReviewEvent`]s of their
//! editorial histories. Ingestion validates every record, enforces referential
//! integrity and pairs reviewer assignments with their outcome (decline, report
//! or nothing) into [`Episode`]s, which is what the metric modules consume.
//! The corpus is immutable once built.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_CUTOFF_YEAR: i32 = 2013;
pub const DEFAULT_WINDOW_YEARS: u32 = 3;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PaperId(pub String);

/// Editor or reviewer identifier. The same person may act in both roles.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub String);

impl fmt::Display for PaperId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for PaperId {
    fn from(s: &str) -> Self {
        PaperId(s.to_string())
    }
}

impl From<&str> for AgentId {
    fn from(s: &str) -> Self {
        AgentId(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    EditorAssigned,
    ReviewerAssigned,
    ReviewerDeclined,
    ReportReceived,
    SelfReviewAssigned,
    FinalDecision,
}

impl EventKind {
    pub fn carries_decision(self) -> bool {
        matches!(self, EventKind::ReportReceived | EventKind::FinalDecision)
    }

    pub fn carries_assigning_editor(self) -> bool {
        matches!(
            self,
            EventKind::ReviewerAssigned
                | EventKind::ReviewerDeclined
                | EventKind::SelfReviewAssigned
        )
    }
}

/// Accept/reject stance of a report or a final decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Decision {
    Accept,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FinalDecision {
    Accepted,
    Rejected,
    Withdrawn,
    Unknown,
}

impl FinalDecision {
    /// Withdrawn and unknown papers stay in the ledger but never enter a metric.
    pub fn is_decided(self) -> bool {
        matches!(self, FinalDecision::Accepted | FinalDecision::Rejected)
    }

    pub fn as_decision(self) -> Option<Decision> {
        match self {
            FinalDecision::Accepted => Some(Decision::Accept),
            FinalDecision::Rejected => Some(Decision::Reject),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReviewEvent {
    pub paper_id: PaperId,
    pub actor_id: AgentId,
    pub kind: EventKind,
    pub date: NaiveDate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision_payload: Option<Decision>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assigning_editor_id: Option<AgentId>,
}

/// A submission and its citation profile.
///
/// For accepted papers `publication_year` is the journal publication year. A
/// rejected paper may carry the year and citation profile of its publication
/// elsewhere; without them its citation count is unavailable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PaperRecord {
    pub paper_id: PaperId,
    pub author_ids: BTreeSet<AgentId>,
    pub keywords: BTreeSet<String>,
    pub submission_date: NaiveDate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub publication_year: Option<i32>,
    pub final_decision: FinalDecision,
    #[serde(default, deserialize_with = "year_keys")]
    pub citations_by_year: BTreeMap<i32, u64>,
}

// Tagged records are buffered before reaching the struct, so integer map
// keys arrive as strings and are parsed here.
fn year_keys<'de, D: serde::Deserializer<'de>>(d: D) -> Result<BTreeMap<i32, u64>, D::Error> {
    let raw = BTreeMap::<String, u64>::deserialize(d)?;
    raw.into_iter()
        .map(|(k, v)| {
            k.trim().parse::<i32>().map(|y| (y, v)).map_err(|_| {
                serde::de::Error::custom(format!("citation year `{k}` is not an integer"))
            })
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "lowercase")]
enum Record {
    Paper(PaperRecord),
    Event(ReviewEvent),
}

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: event references unknown paper_id `{paper_id}`")]
    DanglingPaper { line: usize, paper_id: PaperId },
    #[error("line {line}: duplicate paper_id `{paper_id}`")]
    DuplicatePaper { line: usize, paper_id: PaperId },
    #[error("line {line}: decision_payload on {kind:?} event (only ReportReceived and FinalDecision carry one)")]
    PayloadOnWrongKind { line: usize, kind: EventKind },
    #[error("line {line}: {kind:?} event is missing its decision_payload")]
    MissingPayload { line: usize, kind: EventKind },
    #[error("line {line}: assigning_editor_id {problem} on {kind:?} event")]
    AssigningEditor {
        line: usize,
        kind: EventKind,
        problem: &'static str,
    },
    #[error(
        "line {line}: SelfReviewAssigned actor `{actor}` differs from assigning editor `{editor}`"
    )]
    SelfReviewMismatch {
        line: usize,
        actor: AgentId,
        editor: AgentId,
    },
    #[error(
        "line {line}: {kind:?} by `{actor}` on paper `{paper_id}` has no earlier open assignment"
    )]
    OrphanOutcome {
        line: usize,
        kind: EventKind,
        actor: AgentId,
        paper_id: PaperId,
    },
    #[error("line {line}: paper `{paper_id}`: {message}")]
    InvalidPaper {
        line: usize,
        paper_id: PaperId,
        message: String,
    },
    #[error("invalid corpus configuration: {0}")]
    Config(String),
    #[error("paper `{paper_id}` is not {expected}")]
    Precondition {
        paper_id: PaperId,
        expected: &'static str,
    },
}

/// Outcome of one reviewer assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Declined(NaiveDate),
    Reported(NaiveDate, Decision),
    /// Agreed to review, no report on record.
    Pending,
}

/// One reviewer assignment paired with what became of it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Episode {
    pub paper: usize,
    pub reviewer: AgentId,
    pub assigning_editor: AgentId,
    pub assigned: NaiveDate,
    pub self_review: bool,
    pub outcome: Outcome,
}

impl Episode {
    pub fn is_declined(&self) -> bool {
        matches!(self.outcome, Outcome::Declined(_))
    }
}

/// Validated, immutable review ledger.
#[derive(Debug, Clone)]
pub struct Corpus {
    papers: Vec<PaperRecord>,
    index: HashMap<PaperId, usize>,
    /// Grouped by paper (paper order), then by date; same-day ties keep input order.
    events: Vec<ReviewEvent>,
    episodes: Vec<Episode>,
    final_decision_dates: Vec<Option<NaiveDate>>,
    analysis_cutoff_year: i32,
    citation_window_years: u32,
}

impl Corpus {
    /// Builds a corpus from in-memory records. Event positions stand in for
    /// line numbers in error messages (1-based, counted after the papers).
    pub fn new(
        papers: Vec<PaperRecord>,
        events: Vec<ReviewEvent>,
        analysis_cutoff_year: i32,
        citation_window_years: u32,
    ) -> Result<Self, LedgerError> {
        let n = papers.len();
        let papers = papers
            .into_iter()
            .enumerate()
            .map(|(i, p)| (i + 1, p))
            .collect();
        let events = events
            .into_iter()
            .enumerate()
            .map(|(i, e)| (n + i + 1, e))
            .collect();
        Self::from_lines(papers, events, analysis_cutoff_year, citation_window_years)
    }

    fn from_lines(
        papers: Vec<(usize, PaperRecord)>,
        events: Vec<(usize, ReviewEvent)>,
        analysis_cutoff_year: i32,
        citation_window_years: u32,
    ) -> Result<Self, LedgerError> {
        if analysis_cutoff_year <= 0 {
            return Err(LedgerError::Config(format!(
                "analysis_cutoff_year must be positive, got {analysis_cutoff_year}"
            )));
        }
        if citation_window_years == 0 {
            return Err(LedgerError::Config(
                "citation_window_years must be positive".into(),
            ));
        }

        let mut index = HashMap::with_capacity(papers.len());
        let mut records = Vec::with_capacity(papers.len());
        for (line, paper) in papers {
            validate_paper(line, &paper)?;
            if index
                .insert(paper.paper_id.clone(), records.len())
                .is_some()
            {
                return Err(LedgerError::DuplicatePaper {
                    line,
                    paper_id: paper.paper_id,
                });
            }
            records.push(paper);
        }

        let mut keyed = Vec::with_capacity(events.len());
        for (seq, (line, event)) in events.into_iter().enumerate() {
            validate_event(line, &event)?;
            let Some(&paper) = index.get(&event.paper_id) else {
                return Err(LedgerError::DanglingPaper {
                    line,
                    paper_id: event.paper_id,
                });
            };
            keyed.push((paper, seq, line, event));
        }
        keyed.sort_by_key(|k| (k.0, k.3.date, k.1));

        let mut episodes = Vec::new();
        let mut final_decision_dates = vec![None; records.len()];
        // open assignment episodes of the current paper, keyed by reviewer
        let mut open: HashMap<AgentId, Vec<usize>> = HashMap::new();
        let mut current = usize::MAX;
        for (paper, _, line, event) in &keyed {
            if *paper != current {
                open.clear();
                current = *paper;
            }
            match event.kind {
                EventKind::ReviewerAssigned | EventKind::SelfReviewAssigned => {
                    open.entry(event.actor_id.clone())
                        .or_default()
                        .push(episodes.len());
                    episodes.push(Episode {
                        paper: *paper,
                        reviewer: event.actor_id.clone(),
                        assigning_editor: event
                            .assigning_editor_id
                            .clone()
                            .expect("validated: assignment carries its editor"),
                        assigned: event.date,
                        self_review: event.kind == EventKind::SelfReviewAssigned,
                        outcome: Outcome::Pending,
                    });
                }
                EventKind::ReviewerDeclined | EventKind::ReportReceived => {
                    let slot = open.get_mut(&event.actor_id).and_then(|v| v.pop());
                    let Some(ep) = slot else {
                        return Err(LedgerError::OrphanOutcome {
                            line: *line,
                            kind: event.kind,
                            actor: event.actor_id.clone(),
                            paper_id: event.paper_id.clone(),
                        });
                    };
                    episodes[ep].outcome = match event.kind {
                        EventKind::ReviewerDeclined => Outcome::Declined(event.date),
                        _ => Outcome::Reported(
                            event.date,
                            event
                                .decision_payload
                                .expect("validated: report carries a verdict"),
                        ),
                    };
                }
                EventKind::FinalDecision => {
                    final_decision_dates[*paper] = Some(event.date);
                }
                EventKind::EditorAssigned => {}
            }
        }

        Ok(Corpus {
            papers: records,
            index,
            events: keyed.into_iter().map(|(_, _, _, e)| e).collect(),
            episodes,
            final_decision_dates,
            analysis_cutoff_year,
            citation_window_years,
        })
    }

    pub fn empty() -> Self {
        Self::new(
            Vec::new(),
            Vec::new(),
            DEFAULT_CUTOFF_YEAR,
            DEFAULT_WINDOW_YEARS,
        )
        .expect("default configuration is valid")
    }

    pub fn papers(&self) -> &[PaperRecord] {
        &self.papers
    }

    pub fn events(&self) -> &[ReviewEvent] {
        &self.events
    }

    pub fn episodes(&self) -> &[Episode] {
        &self.episodes
    }

    pub fn paper(&self, idx: usize) -> &PaperRecord {
        &self.papers[idx]
    }

    pub fn paper_index(&self, id: &PaperId) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Date of the paper's last FinalDecision event, if any.
    pub fn final_decision_date(&self, idx: usize) -> Option<NaiveDate> {
        self.final_decision_dates[idx]
    }

    pub fn analysis_cutoff_year(&self) -> i32 {
        self.analysis_cutoff_year
    }

    pub fn citation_window_years(&self) -> u32 {
        self.citation_window_years
    }

    /// Same records under a different analysis configuration.
    pub fn with_config(mut self, cutoff_year: i32, window_years: u32) -> Result<Self, LedgerError> {
        if cutoff_year <= 0 || window_years == 0 {
            return Err(LedgerError::Config(format!(
                "cutoff year ({cutoff_year}) and window ({window_years}) must be positive"
            )));
        }
        self.analysis_cutoff_year = cutoff_year;
        self.citation_window_years = window_years;
        Ok(self)
    }

    /// Windowed citation count of a decided paper, `None` when unavailable.
    pub fn paper_citation(&self, idx: usize) -> Option<u64> {
        paper_citation(&self.papers[idx], self.citation_window_years)
    }

    /// Whether `date` falls before the analysis cutoff year.
    pub fn before_cutoff(&self, date: NaiveDate) -> bool {
        date.year() < self.analysis_cutoff_year
    }

    /// Writes the corpus as JSONL: papers first, then events in canonical order.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> io::Result<()> {
        for p in &self.papers {
            serde_json::to_writer(&mut out, &RecordRef::Paper(p))?;
            out.write_all(b"\n")?;
        }
        for e in &self.events {
            serde_json::to_writer(&mut out, &RecordRef::Event(e))?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

#[derive(Serialize)]
#[serde(tag = "record", rename_all = "lowercase")]
enum RecordRef<'a> {
    Paper(&'a PaperRecord),
    Event(&'a ReviewEvent),
}

fn validate_paper(line: usize, p: &PaperRecord) -> Result<(), LedgerError> {
    let bad = |message: String| LedgerError::InvalidPaper {
        line,
        paper_id: p.paper_id.clone(),
        message,
    };
    match (p.final_decision, p.publication_year) {
        (FinalDecision::Accepted, None) => {
            return Err(bad("accepted paper needs a publication_year".into()))
        }
        (FinalDecision::Withdrawn | FinalDecision::Unknown, Some(_)) => {
            return Err(bad(format!(
                "{:?} paper cannot carry a publication_year",
                p.final_decision
            )))
        }
        _ => {}
    }
    match p.publication_year {
        Some(year) => {
            if let Some((&first, _)) = p.citations_by_year.iter().next() {
                if first < year {
                    return Err(bad(format!(
                        "citation year {first} precedes publication year {year}"
                    )));
                }
            }
        }
        None if !p.citations_by_year.is_empty() => {
            return Err(bad("citations_by_year without a publication_year".into()))
        }
        None => {}
    }
    Ok(())
}

fn validate_event(line: usize, e: &ReviewEvent) -> Result<(), LedgerError> {
    match (e.kind.carries_decision(), e.decision_payload.is_some()) {
        (false, true) => return Err(LedgerError::PayloadOnWrongKind { line, kind: e.kind }),
        (true, false) => return Err(LedgerError::MissingPayload { line, kind: e.kind }),
        _ => {}
    }
    match (e.kind.carries_assigning_editor(), &e.assigning_editor_id) {
        (true, None) => {
            return Err(LedgerError::AssigningEditor {
                line,
                kind: e.kind,
                problem: "missing",
            })
        }
        (false, Some(_)) => {
            return Err(LedgerError::AssigningEditor {
                line,
                kind: e.kind,
                problem: "not allowed",
            })
        }
        _ => {}
    }
    if e.kind == EventKind::SelfReviewAssigned {
        let editor = e.assigning_editor_id.as_ref().expect("checked above");
        if *editor != e.actor_id {
            return Err(LedgerError::SelfReviewMismatch {
                line,
                actor: e.actor_id.clone(),
                editor: editor.clone(),
            });
        }
    }
    Ok(())
}

/// Reads and validates a JSONL corpus file.
pub fn ingest(
    path: &Path,
    analysis_cutoff_year: i32,
    citation_window_years: u32,
) -> Result<Corpus, LedgerError> {
    let file = fs::File::open(path).map_err(|source| LedgerError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_jsonl(
        BufReader::new(file),
        analysis_cutoff_year,
        citation_window_years,
    )
    .map_err(|e| match e {
        LedgerError::Io { source, .. } => LedgerError::Io {
            path: path.display().to_string(),
            source,
        },
        other => other,
    })
}

/// Parses JSONL from any reader. Blank lines are skipped.
pub fn read_jsonl<R: BufRead>(
    reader: R,
    analysis_cutoff_year: i32,
    citation_window_years: u32,
) -> Result<Corpus, LedgerError> {
    let mut papers = Vec::new();
    let mut events = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|source| LedgerError::Io {
            path: "<input>".into(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(&line).map_err(|e| LedgerError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        match record {
            Record::Paper(p) => papers.push((line_no, p)),
            Record::Event(e) => events.push((line_no, e)),
        }
    }
    Corpus::from_lines(papers, events, analysis_cutoff_year, citation_window_years)
}

fn windowed_sum(citations: &BTreeMap<i32, u64>, year: i32, window_years: u32) -> u64 {
    let last = year.saturating_add(window_years as i32);
    citations.range(year..=last).map(|(_, c)| c).sum()
}

/// Citations of an accepted paper over publication years `[y, y + window_years]`.
pub fn citation_window(paper: &PaperRecord, window_years: u32) -> Result<u64, LedgerError> {
    match (paper.final_decision, paper.publication_year) {
        (FinalDecision::Accepted, Some(year)) if window_years >= 1 => {
            Ok(windowed_sum(&paper.citations_by_year, year, window_years))
        }
        _ => Err(LedgerError::Precondition {
            paper_id: paper.paper_id.clone(),
            expected: "an accepted paper with a publication year and window >= 1",
        }),
    }
}

/// Windowed citations of a rejected paper, anchored at its external
/// publication year. `Ok(None)` when no external profile was supplied.
pub fn rejected_citation(
    paper: &PaperRecord,
    window_years: u32,
) -> Result<Option<u64>, LedgerError> {
    if paper.final_decision != FinalDecision::Rejected || window_years == 0 {
        return Err(LedgerError::Precondition {
            paper_id: paper.paper_id.clone(),
            expected: "a rejected paper with window >= 1",
        });
    }
    Ok(paper
        .publication_year
        .map(|year| windowed_sum(&paper.citations_by_year, year, window_years)))
}

/// Windowed citation of any paper: accepted, rejected-with-profile, or `None`.
pub fn paper_citation(paper: &PaperRecord, window_years: u32) -> Option<u64> {
    match paper.final_decision {
        FinalDecision::Accepted => citation_window(paper, window_years).ok(),
        FinalDecision::Rejected => rejected_citation(paper, window_years).ok().flatten(),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn accepted(year: i32, cites: &[(i32, u64)]) -> PaperRecord {
        PaperRecord {
            paper_id: "P1".into(),
            author_ids: ["A1".into()].into(),
            keywords: ["qcd".to_string()].into(),
            submission_date: d("2006-05-01"),
            publication_year: Some(year),
            final_decision: FinalDecision::Accepted,
            citations_by_year: cites.iter().copied().collect(),
        }
    }

    fn rejected(year: Option<i32>, cites: &[(i32, u64)]) -> PaperRecord {
        PaperRecord {
            final_decision: FinalDecision::Rejected,
            publication_year: year,
            ..accepted(2000, cites)
        }
    }

    #[test]
    fn citation_window_examples() {
        assert_eq!(citation_window(&accepted(2007, &[]), 3).unwrap(), 0);
        let p = accepted(
            2007,
            &[(2007, 1), (2008, 3), (2009, 5), (2010, 2), (2011, 7)],
        );
        // 1 + 3 + 5 + 2, 2011 is outside [2007, 2010]
        assert_eq!(citation_window(&p, 3).unwrap(), 11);
        assert_eq!(
            citation_window(&accepted(2007, &[(2011, 7)]), 3).unwrap(),
            0
        );
        // exclusive reading of the window is one setting away
        assert_eq!(citation_window(&p, 2).unwrap(), 9);
    }

    #[test]
    fn citation_window_rejects_non_accepted() {
        let p = rejected(Some(2005), &[]);
        assert!(matches!(
            citation_window(&p, 3),
            Err(LedgerError::Precondition { .. })
        ));
        assert!(citation_window(&accepted(2007, &[]), 0).is_err());
    }

    #[test]
    fn rejected_citation_examples() {
        assert_eq!(rejected_citation(&rejected(None, &[]), 3).unwrap(), None);
        assert_eq!(
            rejected_citation(&rejected(Some(2005), &[(2005, 4), (2006, 6)]), 3).unwrap(),
            Some(10)
        );
        assert_eq!(
            rejected_citation(&rejected(Some(2005), &[]), 3).unwrap(),
            Some(0)
        );
        assert!(rejected_citation(&accepted(2005, &[]), 3).is_err());
    }

    #[test]
    fn empty_input_gives_empty_corpus() {
        let c = read_jsonl("".as_bytes(), 2013, 3).unwrap();
        assert_eq!((c.papers().len(), c.events().len()), (0, 0));
    }

    #[test]
    fn one_paper_one_event() {
        let src = r#"{"record":"paper","paper_id":"P1","author_ids":["A"],"keywords":["x"],"submission_date":"2010-01-01","publication_year":2010,"final_decision":"Accepted","citations_by_year":{"2010":2}}
{"record":"event","paper_id":"P1","actor_id":"E1","kind":"EditorAssigned","date":"2010-01-02"}
"#;
        let c = read_jsonl(src.as_bytes(), 2013, 3).unwrap();
        assert_eq!((c.papers().len(), c.events().len()), (1, 1));
        assert_eq!(c.paper_citation(0), Some(2));
    }

    #[test]
    fn unknown_paper_is_named() {
        let src = r#"{"record":"event","paper_id":"GHOST","actor_id":"E1","kind":"EditorAssigned","date":"2010-01-02"}"#;
        let err = read_jsonl(src.as_bytes(), 2013, 3).unwrap_err();
        assert!(matches!(err, LedgerError::DanglingPaper { line: 1, .. }));
        assert!(err.to_string().contains("GHOST"));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let src = "\n{\"record\":\"paper\"\n";
        let err = read_jsonl(src.as_bytes(), 2013, 3).unwrap_err();
        assert!(
            matches!(err, LedgerError::Malformed { line: 2, .. }),
            "{err}"
        );
        let bad_date = r#"{"record":"event","paper_id":"P","actor_id":"E","kind":"EditorAssigned","date":"2010-13-01"}"#;
        assert!(matches!(
            read_jsonl(bad_date.as_bytes(), 2013, 3).unwrap_err(),
            LedgerError::Malformed { line: 1, .. }
        ));
    }

    #[test]
    fn payload_on_wrong_kind() {
        let src = r#"{"record":"paper","paper_id":"P1","author_ids":[],"keywords":[],"submission_date":"2010-01-01","final_decision":"Unknown"}
{"record":"event","paper_id":"P1","actor_id":"E1","kind":"EditorAssigned","date":"2010-01-02","decision_payload":"Accept"}"#;
        assert!(matches!(
            read_jsonl(src.as_bytes(), 2013, 3).unwrap_err(),
            LedgerError::PayloadOnWrongKind {
                line: 2,
                kind: EventKind::EditorAssigned
            }
        ));
    }

    #[test]
    fn self_review_must_name_itself() {
        let src = r#"{"record":"paper","paper_id":"P1","author_ids":[],"keywords":[],"submission_date":"2010-01-01","final_decision":"Unknown"}
{"record":"event","paper_id":"P1","actor_id":"E1","kind":"SelfReviewAssigned","date":"2010-01-02","assigning_editor_id":"E2"}"#;
        assert!(matches!(
            read_jsonl(src.as_bytes(), 2013, 3).unwrap_err(),
            LedgerError::SelfReviewMismatch { .. }
        ));
    }

    #[test]
    fn report_before_assignment_is_orphan() {
        let src = r#"{"record":"paper","paper_id":"P1","author_ids":[],"keywords":[],"submission_date":"2010-01-01","final_decision":"Unknown"}
{"record":"event","paper_id":"P1","actor_id":"R1","kind":"ReportReceived","date":"2010-01-03","decision_payload":"Accept"}
{"record":"event","paper_id":"P1","actor_id":"R1","kind":"ReviewerAssigned","date":"2010-01-05","assigning_editor_id":"E1"}"#;
        assert!(matches!(
            read_jsonl(src.as_bytes(), 2013, 3).unwrap_err(),
            LedgerError::OrphanOutcome { line: 2, .. }
        ));
    }

    #[test]
    fn episodes_pair_outcomes_and_keep_same_day_order() {
        let src = r#"{"record":"paper","paper_id":"P1","author_ids":[],"keywords":[],"submission_date":"2010-01-01","final_decision":"Unknown"}
{"record":"event","paper_id":"P1","actor_id":"R1","kind":"ReviewerAssigned","date":"2010-01-05","assigning_editor_id":"E1"}
{"record":"event","paper_id":"P1","actor_id":"R1","kind":"ReportReceived","date":"2010-01-05","decision_payload":"Reject"}
{"record":"event","paper_id":"P1","actor_id":"R2","kind":"ReviewerDeclined","date":"2010-01-09","assigning_editor_id":"E1"}
{"record":"event","paper_id":"P1","actor_id":"R2","kind":"ReviewerAssigned","date":"2010-01-04","assigning_editor_id":"E1"}
{"record":"event","paper_id":"P1","actor_id":"R3","kind":"ReviewerAssigned","date":"2010-01-04","assigning_editor_id":"E1"}"#;
        let c = read_jsonl(src.as_bytes(), 2013, 3).unwrap();
        let eps = c.episodes();
        assert_eq!(eps.len(), 3);
        let find = |r: &str| eps.iter().find(|e| e.reviewer.0 == r).unwrap();
        assert_eq!(
            find("R1").outcome,
            Outcome::Reported(d("2010-01-05"), Decision::Reject)
        );
        assert_eq!(find("R2").outcome, Outcome::Declined(d("2010-01-09")));
        assert_eq!(find("R3").outcome, Outcome::Pending);
        let dates: Vec<_> = c.events().iter().map(|e| e.date).collect();
        let mut sorted = dates.clone();
        sorted.sort();
        assert_eq!(dates, sorted);
    }

    #[test]
    fn accepted_paper_needs_year() {
        let mut p = accepted(2007, &[]);
        p.publication_year = None;
        assert!(matches!(
            Corpus::new(vec![p], vec![], 2013, 3).unwrap_err(),
            LedgerError::InvalidPaper { .. }
        ));
        let early = accepted(2007, &[(2006, 1)]);
        assert!(Corpus::new(vec![early], vec![], 2013, 3).is_err());
        assert!(Corpus::new(vec![], vec![], 2013, 0).is_err());
    }
}
