//! Seeded synthetic corpus generator with ground-truth agent labels.
//!
//! Papers arrive uniformly over the time span and are handed to editors in
//! proportion to a load weight, so each editor sees a Poisson stream with
//! exponential inter-arrival gaps. Every paper carries a latent quality
//! (high or low); windowed citations are negative binomial (gamma-Poisson)
//! with a quality-dependent mean. Verdicts depend on quality and on the
//! agent's class:
//!
//! - normal agents accept high-quality work and reject low-quality work,
//! - anomalous agents do the opposite, so their accepted papers are cited
//!   little and their rejected papers a lot.
//!
//! Anomalous editors work fast (heavier load), self-review often, and route
//! most reviewer slots to a small circle of anomalous reviewers drawn from a
//! narrow author and keyword pool. Anomalous reviewers therefore see frequent
//! assignments from one editor, answer quickly, decline often and decline late.
//! Report and decline delays are log-normal, parameterized by their mean.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Datelike, Duration, NaiveDate};
use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Gamma, LogNormal, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ledger::{
    AgentId, Corpus, Decision, EventKind, FinalDecision, LedgerError, PaperId, PaperRecord,
    ReviewEvent,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EditorBehavior {
    /// Relative share of incoming papers.
    pub load_weight: f64,
    pub self_review_prob: f64,
    /// Share of reviewer slots routed to the editor's circle of anomalous
    /// reviewers (only used when such reviewers exist).
    pub circle_share: f64,
    /// Distinct authors submitting to this editor; 0 draws from the global pool.
    pub author_pool_size: usize,
    /// Distinct keywords on this editor's papers; 0 uses the full vocabulary.
    pub keyword_pool_size: usize,
    /// Personal reviewer pool size range [min, max]; `None` uses every normal reviewer.
    pub reviewer_pool_range: Option<(usize, usize)>,
    pub accept_prob_high: f64,
    pub accept_prob_low: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReviewerBehavior {
    /// Mean days from assignment to report.
    pub report_delay_mean: f64,
    /// Log-space standard deviation of the report delay.
    pub report_delay_sigma: f64,
    pub decline_prob: f64,
    pub decline_delay_mean: f64,
    pub decline_delay_sigma: f64,
    /// Chance of agreeing to review and never sending a report.
    pub no_report_prob: f64,
    pub accept_prob_high: f64,
    pub accept_prob_low: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CitationModel {
    pub high_quality_fraction: f64,
    /// Mean windowed citations of a high-quality paper.
    pub high_mean: f64,
    pub low_mean: f64,
    /// Negative-binomial shape; larger means less over-dispersion.
    pub dispersion: f64,
    /// Chance that a rejected paper was published elsewhere with a profile.
    pub rejected_profile_prob: f64,
    /// Expected citations after the window, as a fraction of the windowed total.
    pub late_citation_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub n_editors: usize,
    pub n_reviewers: usize,
    pub n_papers: usize,
    pub n_authors: usize,
    pub anomalous_editor_fraction: f64,
    pub anomalous_reviewer_fraction: f64,
    pub start_year: i32,
    pub time_span_years: u32,
    pub reviewers_per_paper: (usize, usize),
    pub authors_per_paper: (usize, usize),
    pub keywords_per_paper: (usize, usize),
    pub keyword_vocabulary: usize,
    pub withdrawn_fraction: f64,
    /// Mean days between editor assignment and reviewer assignment.
    pub assignment_delay_mean: f64,
    /// Multiplier on the decline probability for July and August assignments.
    pub summer_decline_boost: f64,
    /// Added to the decline probability per unit of ln(editor pool size).
    pub decline_pool_slope: f64,
    pub normal_editor: EditorBehavior,
    pub anomalous_editor: EditorBehavior,
    pub normal_reviewer: ReviewerBehavior,
    pub anomalous_reviewer: ReviewerBehavior,
    pub citations: CitationModel,
}

impl Default for EditorBehavior {
    fn default() -> Self {
        EditorBehavior {
            load_weight: 1.0,
            self_review_prob: 0.02,
            circle_share: 0.0,
            author_pool_size: 0,
            keyword_pool_size: 0,
            reviewer_pool_range: None,
            accept_prob_high: 0.9,
            accept_prob_low: 0.05,
        }
    }
}

impl EditorBehavior {
    pub fn anomalous() -> Self {
        EditorBehavior {
            load_weight: 2.5,
            self_review_prob: 0.4,
            circle_share: 0.9,
            author_pool_size: 8,
            keyword_pool_size: 6,
            reviewer_pool_range: None,
            accept_prob_high: 0.15,
            accept_prob_low: 0.9,
        }
    }
}

impl Default for ReviewerBehavior {
    fn default() -> Self {
        ReviewerBehavior {
            report_delay_mean: 20.0,
            report_delay_sigma: 0.5,
            decline_prob: 0.15,
            decline_delay_mean: 3.0,
            decline_delay_sigma: 0.5,
            no_report_prob: 0.02,
            accept_prob_high: 1.0,
            accept_prob_low: 0.0,
        }
    }
}

impl ReviewerBehavior {
    pub fn anomalous() -> Self {
        ReviewerBehavior {
            report_delay_mean: 4.0,
            report_delay_sigma: 0.5,
            decline_prob: 0.45,
            decline_delay_mean: 12.0,
            decline_delay_sigma: 0.5,
            no_report_prob: 0.02,
            accept_prob_high: 0.05,
            accept_prob_low: 0.97,
        }
    }
}

impl Default for CitationModel {
    fn default() -> Self {
        CitationModel {
            high_quality_fraction: 0.5,
            high_mean: 40.0,
            low_mean: 4.0,
            dispersion: 20.0,
            rejected_profile_prob: 0.8,
            late_citation_ratio: 0.3,
        }
    }
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            seed: 0,
            n_editors: 95,
            n_reviewers: 2000,
            n_papers: 10_000,
            n_authors: 6000,
            anomalous_editor_fraction: 0.25,
            anomalous_reviewer_fraction: 0.10,
            start_year: 2003,
            time_span_years: 10,
            reviewers_per_paper: (2, 3),
            authors_per_paper: (1, 4),
            keywords_per_paper: (2, 4),
            keyword_vocabulary: 400,
            withdrawn_fraction: 0.02,
            assignment_delay_mean: 4.0,
            summer_decline_boost: 1.0,
            decline_pool_slope: 0.0,
            normal_editor: EditorBehavior::default(),
            anomalous_editor: EditorBehavior::anomalous(),
            normal_reviewer: ReviewerBehavior::default(),
            anomalous_reviewer: ReviewerBehavior::anomalous(),
            citations: CitationModel::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("infeasible generator config: {0}")]
    Infeasible(String),
    #[error("cannot parse generator config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruthLabel {
    Normal,
    Anomalous,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthRow {
    pub agent_id: AgentId,
    pub role: crate::detect::Role,
    pub label: TruthLabel,
}

/// Ground truth for every agent that appears in the generated corpus. An
/// editor who also reviews is listed once, as an editor.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundTruth {
    pub rows: BTreeMap<AgentId, TruthRow>,
}

impl GroundTruth {
    pub fn label(&self, id: &AgentId) -> Option<TruthLabel> {
        self.rows.get(id).map(|r| r.label)
    }

    pub fn count(&self, role: crate::detect::Role, label: TruthLabel) -> usize {
        self.rows
            .values()
            .filter(|r| r.role == role && r.label == label)
            .count()
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["agent_id", "role", "label"])?;
        for r in self.rows.values() {
            let label = match r.label {
                TruthLabel::Normal => "normal",
                TruthLabel::Anomalous => "anomalous",
            };
            w.write_record([r.agent_id.0.as_str(), &r.role.to_string(), label])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self, String> {
        let mut rdr = csv::Reader::from_reader(input);
        let mut rows = BTreeMap::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| e.to_string())?;
            let id = AgentId(rec.get(0).ok_or("missing agent_id")?.to_string());
            let role = rec.get(1).ok_or("missing role")?.parse()?;
            let label = match rec.get(2) {
                Some("normal") => TruthLabel::Normal,
                Some("anomalous") => TruthLabel::Anomalous,
                other => return Err(format!("bad label {other:?}")),
            };
            rows.insert(
                id.clone(),
                TruthRow {
                    agent_id: id,
                    role,
                    label,
                },
            );
        }
        Ok(GroundTruth { rows })
    }
}

impl GeneratorConfig {
    pub fn from_toml(src: &str) -> Result<Self, SynthError> {
        Ok(toml::from_str(src)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn n_anomalous_editors(&self) -> usize {
        (self.anomalous_editor_fraction * self.n_editors as f64).round() as usize
    }

    pub fn n_anomalous_reviewers(&self) -> usize {
        (self.anomalous_reviewer_fraction * self.n_reviewers as f64).round() as usize
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Infeasible(m));
        let probs = [
            ("anomalous_editor_fraction", self.anomalous_editor_fraction),
            (
                "anomalous_reviewer_fraction",
                self.anomalous_reviewer_fraction,
            ),
            ("withdrawn_fraction", self.withdrawn_fraction),
            (
                "citations.high_quality_fraction",
                self.citations.high_quality_fraction,
            ),
            (
                "citations.rejected_profile_prob",
                self.citations.rejected_profile_prob,
            ),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is not in [0, 1]"));
            }
        }
        for (name, b) in [
            ("normal_editor", &self.normal_editor),
            ("anomalous_editor", &self.anomalous_editor),
        ] {
            for p in [
                b.self_review_prob,
                b.circle_share,
                b.accept_prob_high,
                b.accept_prob_low,
            ] {
                if !(0.0..=1.0).contains(&p) {
                    return bad(format!("{name} has a probability outside [0, 1]"));
                }
            }
            if !(b.load_weight > 0.0 && b.load_weight.is_finite()) {
                return bad(format!("{name}.load_weight must be positive"));
            }
            if let Some((lo, hi)) = b.reviewer_pool_range {
                if lo == 0 || lo > hi {
                    return bad(format!(
                        "{name}.reviewer_pool_range must satisfy 1 <= min <= max"
                    ));
                }
            }
        }
        for (name, b) in [
            ("normal_reviewer", &self.normal_reviewer),
            ("anomalous_reviewer", &self.anomalous_reviewer),
        ] {
            for p in [
                b.decline_prob,
                b.no_report_prob,
                b.accept_prob_high,
                b.accept_prob_low,
            ] {
                if !(0.0..=1.0).contains(&p) {
                    return bad(format!("{name} has a probability outside [0, 1]"));
                }
            }
            for x in [b.report_delay_mean, b.decline_delay_mean] {
                if !(x > 0.0 && x.is_finite()) {
                    return bad(format!("{name} delay means must be positive and finite"));
                }
            }
            for s in [b.report_delay_sigma, b.decline_delay_sigma] {
                if !(s >= 0.0 && s.is_finite()) {
                    return bad(format!(
                        "{name} delay sigmas must be non-negative and finite"
                    ));
                }
            }
        }
        let c = &self.citations;
        for x in [c.high_mean, c.low_mean, c.dispersion] {
            if !(x > 0.0 && x.is_finite()) {
                return bad("citation means and dispersion must be positive".into());
            }
        }
        if !(c.late_citation_ratio >= 0.0 && c.late_citation_ratio.is_finite()) {
            return bad("late_citation_ratio must be non-negative".into());
        }
        let (delay, boost) = (self.assignment_delay_mean, self.summer_decline_boost);
        if !delay.is_finite()
            || delay <= 0.0
            || !boost.is_finite()
            || boost < 0.0
            || !self.decline_pool_slope.is_finite()
        {
            return bad(
                "assignment delay, summer boost and pool slope must be finite and non-negative"
                    .into(),
            );
        }
        if self.time_span_years == 0 {
            return bad("time_span_years must be positive".into());
        }
        if self.start_year < 1 {
            return bad("start_year must be positive".into());
        }
        for (name, (lo, hi)) in [
            ("reviewers_per_paper", self.reviewers_per_paper),
            ("authors_per_paper", self.authors_per_paper),
            ("keywords_per_paper", self.keywords_per_paper),
        ] {
            if lo == 0 || lo > hi {
                return bad(format!("{name} range must satisfy 1 <= min <= max"));
            }
        }
        if self.n_anomalous_editors() > self.n_editors
            || self.n_anomalous_reviewers() > self.n_reviewers
        {
            return bad("more anomalous agents than agents".into());
        }
        if self.n_papers > 0 {
            if self.n_editors == 0 {
                return bad("papers need at least one editor".into());
            }
            if self.n_reviewers < self.reviewers_per_paper.1 {
                return bad(format!(
                    "{} reviewers cannot fill {} slots per paper",
                    self.n_reviewers, self.reviewers_per_paper.1
                ));
            }
            if self.n_authors < self.authors_per_paper.1 {
                return bad("author pool smaller than authors_per_paper max".into());
            }
            if self.keyword_vocabulary < self.keywords_per_paper.1 {
                return bad("keyword vocabulary smaller than keywords_per_paper max".into());
            }
            for b in [&self.normal_editor, &self.anomalous_editor] {
                if b.author_pool_size > 0 && b.author_pool_size < self.authors_per_paper.1 {
                    return bad("editor author_pool_size smaller than authors_per_paper max".into());
                }
                if b.keyword_pool_size > 0 && b.keyword_pool_size < self.keywords_per_paper.1 {
                    return bad(
                        "editor keyword_pool_size smaller than keywords_per_paper max".into(),
                    );
                }
            }
        }
        Ok(())
    }
}

struct EditorState {
    id: AgentId,
    anomalous: bool,
    authors: Vec<usize>,
    keywords: Vec<usize>,
    /// Reviewer indices for general slots.
    pool: Vec<usize>,
    circle: Vec<usize>,
}

fn lognormal(mean: f64, sigma: f64) -> LogNormal<f64> {
    LogNormal::new(mean.ln() - sigma * sigma / 2.0, sigma).expect("validated parameters")
}

fn days(rng: &mut ChaCha8Rng, d: &LogNormal<f64>) -> i64 {
    d.sample(rng).round() as i64
}

fn neg_binomial(rng: &mut ChaCha8Rng, mean: f64, shape: f64) -> u64 {
    let lambda = Gamma::new(shape, mean / shape)
        .expect("validated")
        .sample(rng);
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda)
        .map(|p| p.sample(rng) as u64)
        .unwrap_or(0)
}

fn sample_distinct(rng: &mut ChaCha8Rng, pool: &[usize], n: usize) -> Vec<usize> {
    pool.choose_multiple(rng, n.min(pool.len()))
        .copied()
        .collect()
}

fn citation_profile(
    rng: &mut ChaCha8Rng,
    cfg: &CitationModel,
    high: bool,
    year: i32,
) -> BTreeMap<i32, u64> {
    let mean = if high { cfg.high_mean } else { cfg.low_mean };
    let total = neg_binomial(rng, mean, cfg.dispersion);
    let weights = [0.15, 0.3, 0.3, 0.25];
    let pick = WeightedIndex::new(weights).expect("static weights");
    let mut by_year: BTreeMap<i32, u64> = BTreeMap::new();
    for _ in 0..total {
        *by_year.entry(year + pick.sample(rng) as i32).or_insert(0) += 1;
    }
    if cfg.late_citation_ratio > 0.0 && total > 0 {
        let late = Poisson::new(cfg.late_citation_ratio * total as f64)
            .map(|p| p.sample(rng) as u64)
            .unwrap_or(0);
        for _ in 0..late {
            *by_year
                .entry(year + 4 + rng.random_range(0..3))
                .or_insert(0) += 1;
        }
    }
    by_year
}

/// Generates a schema-valid corpus and its ground truth, deterministically per seed.
pub fn generate(cfg: &GeneratorConfig) -> Result<(Corpus, GroundTruth), SynthError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(crate::seed::derive(cfg.seed, "synthgen"));

    let n_anom_ed = cfg.n_anomalous_editors();
    let n_anom_rev = cfg.n_anomalous_reviewers();
    let reviewer_ids: Vec<AgentId> = (0..cfg.n_reviewers)
        .map(|i| AgentId(format!("R{:05}", i + 1)))
        .collect();
    // which reviewers are anomalous is shuffled so ids carry no signal
    let mut order: Vec<usize> = (0..cfg.n_reviewers).collect();
    order.shuffle(&mut rng);
    let mut reviewer_anomalous = vec![false; cfg.n_reviewers];
    for &r in &order[..n_anom_rev] {
        reviewer_anomalous[r] = true;
    }
    let normal_reviewers: Vec<usize> = (0..cfg.n_reviewers)
        .filter(|&r| !reviewer_anomalous[r])
        .collect();
    let anomalous_reviewers: Vec<usize> = (0..cfg.n_reviewers)
        .filter(|&r| reviewer_anomalous[r])
        .collect();
    let general: &[usize] = if normal_reviewers.len() >= cfg.reviewers_per_paper.1 {
        &normal_reviewers
    } else {
        &order
    };

    let mut ed_order: Vec<usize> = (0..cfg.n_editors).collect();
    ed_order.shuffle(&mut rng);
    let mut editor_anomalous = vec![false; cfg.n_editors];
    for &e in &ed_order[..n_anom_ed] {
        editor_anomalous[e] = true;
    }
    let all_authors: Vec<usize> = (0..cfg.n_authors).collect();
    let all_keywords: Vec<usize> = (0..cfg.keyword_vocabulary).collect();
    let anomalous_editor_idx: Vec<usize> = (0..cfg.n_editors)
        .filter(|&e| editor_anomalous[e])
        .collect();
    let mut editors: Vec<EditorState> = Vec::with_capacity(cfg.n_editors);
    for (e, &anomalous) in editor_anomalous.iter().enumerate() {
        let b = if anomalous {
            &cfg.anomalous_editor
        } else {
            &cfg.normal_editor
        };
        let authors = match b.author_pool_size {
            0 => all_authors.clone(),
            n => sample_distinct(&mut rng, &all_authors, n),
        };
        let keywords = match b.keyword_pool_size {
            0 => all_keywords.clone(),
            n => sample_distinct(&mut rng, &all_keywords, n),
        };
        let pool = match b.reviewer_pool_range {
            None => general.to_vec(),
            Some((lo, hi)) => {
                let n = rng.random_range(lo..=hi).max(cfg.reviewers_per_paper.1);
                let mut p = sample_distinct(&mut rng, general, n);
                p.sort_unstable();
                p
            }
        };
        // anomalous reviewers are dealt round-robin into the anomalous editors' circles
        let circle = match anomalous_editor_idx.iter().position(|&x| x == e) {
            Some(slot) => anomalous_reviewers
                .iter()
                .enumerate()
                .filter(|(i, _)| i % anomalous_editor_idx.len() == slot)
                .map(|(_, &r)| r)
                .collect(),
            None => Vec::new(),
        };
        editors.push(EditorState {
            id: AgentId(format!("E{:03}", e + 1)),
            anomalous,
            authors,
            keywords,
            pool,
            circle,
        });
    }

    let start = NaiveDate::from_ymd_opt(cfg.start_year, 1, 1)
        .ok_or_else(|| SynthError::Infeasible(format!("bad start_year {}", cfg.start_year)))?;
    let end = NaiveDate::from_ymd_opt(cfg.start_year + cfg.time_span_years as i32, 1, 1)
        .ok_or_else(|| SynthError::Infeasible("time span overflows the calendar".into()))?;
    let span_days = (end - start).num_days();
    let mut submissions: Vec<i64> = (0..cfg.n_papers)
        .map(|_| rng.random_range(0..span_days))
        .collect();
    submissions.sort_unstable();

    let editor_pick = if cfg.n_editors > 0 {
        Some(
            WeightedIndex::new(editors.iter().map(|e| {
                if e.anomalous {
                    cfg.anomalous_editor.load_weight
                } else {
                    cfg.normal_editor.load_weight
                }
            }))
            .map_err(|e| SynthError::Infeasible(e.to_string()))?,
        )
    } else {
        None
    };

    let assign_delay = lognormal(cfg.assignment_delay_mean, 0.5);
    let rev_delays = |anom: bool| {
        let b = if anom {
            &cfg.anomalous_reviewer
        } else {
            &cfg.normal_reviewer
        };
        (
            lognormal(b.report_delay_mean, b.report_delay_sigma),
            lognormal(b.decline_delay_mean, b.decline_delay_sigma),
        )
    };
    let (normal_report, normal_decline) = rev_delays(false);
    let (anom_report, anom_decline) = rev_delays(true);

    let mut load = vec![0u64; cfg.n_reviewers];
    let mut papers = Vec::with_capacity(cfg.n_papers);
    let mut events = Vec::new();

    for (pi, &sub) in submissions.iter().enumerate() {
        let picker = editor_pick.as_ref().expect("papers imply editors");
        let ed = &editors[picker.sample(&mut rng)];
        let eb = if ed.anomalous {
            &cfg.anomalous_editor
        } else {
            &cfg.normal_editor
        };
        let paper_id = PaperId(format!("P{:06}", pi + 1));
        let submitted = start + Duration::days(sub);
        let high = rng.random_bool(cfg.citations.high_quality_fraction);

        let n_auth = rng.random_range(cfg.authors_per_paper.0..=cfg.authors_per_paper.1);
        let authors = sample_distinct(&mut rng, &ed.authors, n_auth)
            .into_iter()
            .map(|a| AgentId(format!("A{:05}", a + 1)))
            .collect();
        let n_kw = rng.random_range(cfg.keywords_per_paper.0..=cfg.keywords_per_paper.1);
        let keywords = sample_distinct(&mut rng, &ed.keywords, n_kw)
            .into_iter()
            .map(|k| format!("kw{:03}", k + 1))
            .collect();

        let ed_date = submitted + Duration::days(rng.random_range(0..=3));
        let mut ev = |actor: &AgentId, kind, date, payload, editor: Option<&AgentId>| {
            events.push(ReviewEvent {
                paper_id: paper_id.clone(),
                actor_id: actor.clone(),
                kind,
                date,
                decision_payload: payload,
                assigning_editor_id: editor.cloned(),
            })
        };
        ev(&ed.id, EventKind::EditorAssigned, ed_date, None, None);

        let mut last_report = ed_date;
        let mut slots = rng.random_range(cfg.reviewers_per_paper.0..=cfg.reviewers_per_paper.1);
        if rng.random_bool(eb.self_review_prob) {
            let at = ed_date + Duration::days(days(&mut rng, &assign_delay));
            ev(
                &ed.id,
                EventKind::SelfReviewAssigned,
                at,
                None,
                Some(&ed.id),
            );
            let delay = if ed.anomalous {
                &anom_report
            } else {
                &normal_report
            };
            let done = at + Duration::days(days(&mut rng, delay));
            let p_acc = if high {
                eb.accept_prob_high
            } else {
                eb.accept_prob_low
            };
            let verdict = if rng.random_bool(p_acc) {
                Decision::Accept
            } else {
                Decision::Reject
            };
            ev(&ed.id, EventKind::ReportReceived, done, Some(verdict), None);
            last_report = last_report.max(done);
            slots = slots.saturating_sub(1).max(1);
        }

        let mut on_paper: BTreeSet<usize> = BTreeSet::new();
        for _ in 0..slots {
            let use_circle = !ed.circle.is_empty() && rng.random_bool(eb.circle_share);
            let free_circle: Vec<usize> = if use_circle {
                ed.circle
                    .iter()
                    .copied()
                    .filter(|r| !on_paper.contains(r))
                    .collect()
            } else {
                Vec::new()
            };
            let (r, pool_size) = if !free_circle.is_empty() {
                (
                    *free_circle.choose(&mut rng).expect("non-empty"),
                    ed.circle.len(),
                )
            } else {
                // least loaded of two random candidates
                let free: Vec<usize> = ed
                    .pool
                    .iter()
                    .copied()
                    .filter(|r| !on_paper.contains(r))
                    .collect();
                if free.is_empty() {
                    break;
                }
                let a = *free.choose(&mut rng).expect("non-empty");
                let b = *free.choose(&mut rng).expect("non-empty");
                (if load[b] < load[a] { b } else { a }, ed.pool.len())
            };
            on_paper.insert(r);
            load[r] += 1;
            let anom = reviewer_anomalous[r];
            let rb = if anom {
                &cfg.anomalous_reviewer
            } else {
                &cfg.normal_reviewer
            };
            let rid = &reviewer_ids[r];
            let at = ed_date + Duration::days(days(&mut rng, &assign_delay));
            ev(rid, EventKind::ReviewerAssigned, at, None, Some(&ed.id));

            let mut p_decline =
                rb.decline_prob + cfg.decline_pool_slope * (pool_size.max(1) as f64).ln();
            if matches!(at.month(), 7 | 8) {
                p_decline *= cfg.summer_decline_boost;
            }
            let p_decline = p_decline.clamp(0.0, 0.95);
            if rng.random_bool(p_decline) {
                let delay = if anom { &anom_decline } else { &normal_decline };
                let when = at + Duration::days(days(&mut rng, delay));
                ev(rid, EventKind::ReviewerDeclined, when, None, Some(&ed.id));
            } else if !rng.random_bool(rb.no_report_prob) {
                let delay = if anom { &anom_report } else { &normal_report };
                let when = at + Duration::days(days(&mut rng, delay));
                let p_acc = if high {
                    rb.accept_prob_high
                } else {
                    rb.accept_prob_low
                };
                let verdict = if rng.random_bool(p_acc) {
                    Decision::Accept
                } else {
                    Decision::Reject
                };
                ev(rid, EventKind::ReportReceived, when, Some(verdict), None);
                last_report = last_report.max(when);
            }
        }

        let (final_decision, publication_year, citations_by_year) =
            if rng.random_bool(cfg.withdrawn_fraction) {
                (FinalDecision::Withdrawn, None, BTreeMap::new())
            } else {
                let decided = last_report + Duration::days(rng.random_range(1..=10));
                let p_acc = if high {
                    eb.accept_prob_high
                } else {
                    eb.accept_prob_low
                };
                if rng.random_bool(p_acc) {
                    ev(
                        &ed.id,
                        EventKind::FinalDecision,
                        decided,
                        Some(Decision::Accept),
                        None,
                    );
                    let year = decided.year();
                    (
                        FinalDecision::Accepted,
                        Some(year),
                        citation_profile(&mut rng, &cfg.citations, high, year),
                    )
                } else {
                    ev(
                        &ed.id,
                        EventKind::FinalDecision,
                        decided,
                        Some(Decision::Reject),
                        None,
                    );
                    if rng.random_bool(cfg.citations.rejected_profile_prob) {
                        let year = decided.year() + 1;
                        (
                            FinalDecision::Rejected,
                            Some(year),
                            citation_profile(&mut rng, &cfg.citations, high, year),
                        )
                    } else {
                        (FinalDecision::Rejected, None, BTreeMap::new())
                    }
                }
            };

        papers.push(PaperRecord {
            paper_id,
            author_ids: authors,
            keywords,
            submission_date: submitted,
            publication_year,
            final_decision,
            citations_by_year,
        });
    }

    let cutoff = cfg.start_year + cfg.time_span_years as i32;
    let corpus = Corpus::new(papers, events, cutoff, crate::ledger::DEFAULT_WINDOW_YEARS)?;

    let mut truth = GroundTruth::default();
    let editor_label: BTreeMap<&AgentId, bool> =
        editors.iter().map(|e| (&e.id, e.anomalous)).collect();
    let label = |anom: bool| {
        if anom {
            TruthLabel::Anomalous
        } else {
            TruthLabel::Normal
        }
    };
    for e in corpus.events() {
        let (role, anom) = match e.kind {
            EventKind::EditorAssigned => (crate::detect::Role::Editor, editor_label[&e.actor_id]),
            EventKind::ReviewerAssigned => {
                let idx = reviewer_index(&e.actor_id);
                (crate::detect::Role::Reviewer, reviewer_anomalous[idx])
            }
            _ => continue,
        };
        let row = TruthRow {
            agent_id: e.actor_id.clone(),
            role,
            label: label(anom),
        };
        match truth.rows.get(&e.actor_id) {
            Some(existing) if existing.role == crate::detect::Role::Editor => {}
            _ => {
                truth.rows.insert(e.actor_id.clone(), row);
            }
        }
    }
    Ok((corpus, truth))
}

/// Detector agreement with ground truth over the clustered (eligible) agents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Recovery {
    pub true_positive: usize,
    pub false_positive: usize,
    pub false_negative: usize,
    /// `None` when nothing was flagged.
    pub precision: Option<f64>,
    /// `None` when no clustered agent is anomalous.
    pub recall: Option<f64>,
}

/// Agents missing from the truth map count as normal.
pub fn recovery(result: &crate::detect::ClusterResult, truth: &GroundTruth) -> Recovery {
    let (mut tp, mut fp, mut fneg) = (0, 0, 0);
    for (i, id) in result.agent_ids.iter().enumerate() {
        let actual = truth.label(id) == Some(TruthLabel::Anomalous);
        match (actual, result.is_anomalous(i)) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fneg += 1,
            (false, false) => {}
        }
    }
    let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
    Recovery {
        true_positive: tp,
        false_positive: fp,
        false_negative: fneg,
        precision: ratio(tp, tp + fp),
        recall: ratio(tp, tp + fneg),
    }
}

fn reviewer_index(id: &AgentId) -> usize {
    id.0[1..].parse::<usize>().expect("generated reviewer id") - 1
}
