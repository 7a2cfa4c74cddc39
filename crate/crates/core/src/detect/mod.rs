//! Unsupervised anomaly detection over editor and reviewer profiles.
//!
//! Pipeline: eligibility filter, feature matrix (median imputation, then
//! z-scores), k-means with k = 2, smaller cluster labeled anomalous and
//! cross-checked against citations, then ECDF/KS validation.

pub mod kmeans;

use std::collections::BTreeMap;
use std::fmt;

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{average_citation, citation_cdf, ks_statistic, mean, median};
use crate::editor::EditorProfile;
use crate::ledger::{AgentId, Decision};
use crate::par::Exec;
use crate::reviewer::ReviewerProfile;

pub use kmeans::{KMeansError, KMeansFit, KMeansParams};

pub const MIN_ASSIGNMENTS: u64 = 5;
pub const MIN_ACCEPTED: u64 = 1;

pub const EDITOR_FEATURES: [&str; 4] = ["MEAT", "RDI", "RADI", "SRI"];
pub const REVIEWER_FEATURES: [&str; 7] = ["MRAT", "MRSD", "TDI", "EDI", "AR", "MTD", "DFI"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Editor,
    Reviewer,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Editor => "editor",
            Role::Reviewer => "reviewer",
        })
    }
}

impl std::str::FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "editor" => Ok(Role::Editor),
            "reviewer" => Ok(Role::Reviewer),
            other => Err(format!(
                "unknown role `{other}` (expected editor or reviewer)"
            )),
        }
    }
}

/// What the detector needs from a profile.
pub trait AgentProfile {
    const ROLE: Role;
    fn agent_id(&self) -> &AgentId;
    fn n_assignments_before_cutoff(&self) -> u64;
    fn n_accepted_before_cutoff(&self) -> u64;
    /// Raw feature values in the role's documented order.
    fn features(&self) -> Vec<Option<f64>>;

    fn feature_names() -> &'static [&'static str] {
        match Self::ROLE {
            Role::Editor => &EDITOR_FEATURES,
            Role::Reviewer => &REVIEWER_FEATURES,
        }
    }
}

impl AgentProfile for EditorProfile {
    const ROLE: Role = Role::Editor;

    fn agent_id(&self) -> &AgentId {
        &self.editor_id
    }

    fn n_assignments_before_cutoff(&self) -> u64 {
        self.n_assignments_before_cutoff
    }

    fn n_accepted_before_cutoff(&self) -> u64 {
        self.n_accepted_before_cutoff
    }

    fn features(&self) -> Vec<Option<f64>> {
        vec![self.meat, self.rdi, self.radi, self.sri]
    }
}

impl AgentProfile for ReviewerProfile {
    const ROLE: Role = Role::Reviewer;

    fn agent_id(&self) -> &AgentId {
        &self.reviewer_id
    }

    fn n_assignments_before_cutoff(&self) -> u64 {
        self.n_assignments_before_cutoff
    }

    fn n_accepted_before_cutoff(&self) -> u64 {
        self.n_accepted_before_cutoff
    }

    fn features(&self) -> Vec<Option<f64>> {
        vec![
            self.mrat, self.mrsd, self.tdi, self.edi, self.ar, self.mtd, self.dfi,
        ]
    }
}

/// Agents with at least five assignments and one acceptance dated before the
/// cutoff year. The cutoff is baked into the profile counts.
pub fn eligibility_filter<P: AgentProfile + Clone>(profiles: &[P]) -> Vec<P> {
    profiles
        .iter()
        .filter(|p| is_eligible(*p))
        .cloned()
        .collect()
}

pub fn is_eligible<P: AgentProfile>(p: &P) -> bool {
    p.n_assignments_before_cutoff() >= MIN_ASSIGNMENTS
        && p.n_accepted_before_cutoff() >= MIN_ACCEPTED
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub agent_ids: Vec<AgentId>,
    pub feature_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub standardized: bool,
    /// Columns whose variance was zero (left at 0 after centering).
    pub zero_variance: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectError {
    #[error("empty feature matrix: no {0} passes the eligibility filter")]
    EmptyFeatureMatrix(Role),
    #[error("feature `{0}` is undefined for every agent")]
    AllUndefined(String),
    #[error(transparent)]
    KMeans(#[from] KMeansError),
}

/// Feature matrix with median imputation and optional z-scoring
/// (population standard deviation).
pub fn build_features<P: AgentProfile>(
    profiles: &[P],
    standardize: bool,
) -> Result<FeatureMatrix, DetectError> {
    if profiles.is_empty() {
        return Err(DetectError::EmptyFeatureMatrix(P::ROLE));
    }
    let names = P::feature_names();
    let raw: Vec<Vec<Option<f64>>> = profiles.iter().map(|p| p.features()).collect();
    let d = names.len();
    let mut rows = vec![vec![0.0; d]; raw.len()];
    let mut zero_variance = Vec::new();
    let mut warnings = Vec::new();
    for j in 0..d {
        let defined: Vec<f64> = raw.iter().filter_map(|r| r[j]).collect();
        let fill =
            median(&defined).ok_or_else(|| DetectError::AllUndefined(names[j].to_string()))?;
        let column: Vec<f64> = raw.iter().map(|r| r[j].unwrap_or(fill)).collect();
        if !standardize {
            for (row, x) in rows.iter_mut().zip(&column) {
                row[j] = *x;
            }
            continue;
        }
        let m = mean(&column).expect("non-empty");
        let var = column.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / column.len() as f64;
        let sd = var.sqrt();
        if sd > 0.0 {
            for (row, x) in rows.iter_mut().zip(&column) {
                row[j] = (x - m) / sd;
            }
        } else {
            zero_variance.push(names[j].to_string());
        }
    }
    if standardize && profiles.len() == 1 {
        warnings.push("single agent: standardization degenerates to zeros".to_string());
    }
    for w in &warnings {
        warn!("{w}");
    }
    Ok(FeatureMatrix {
        agent_ids: profiles.iter().map(|p| p.agent_id().clone()).collect(),
        feature_names: names.iter().map(|s| s.to_string()).collect(),
        rows,
        standardized: standardize,
        zero_variance,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    pub agent_ids: Vec<AgentId>,
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub objective: f64,
    pub anomalous_label: Option<usize>,
    pub n_iterations: usize,
    pub seed: u64,
}

impl ClusterResult {
    pub fn sizes(&self) -> Vec<usize> {
        let k = self.centroids.len();
        let mut s = vec![0; k];
        for &l in &self.labels {
            s[l] += 1;
        }
        s
    }

    pub fn assignments(&self) -> BTreeMap<AgentId, usize> {
        self.agent_ids
            .iter()
            .cloned()
            .zip(self.labels.iter().copied())
            .collect()
    }

    /// Agents in the anomalous cluster (empty before labeling).
    pub fn anomalous_agents(&self) -> Vec<AgentId> {
        match self.anomalous_label {
            Some(a) => self
                .agent_ids
                .iter()
                .zip(&self.labels)
                .filter(|(_, &l)| l == a)
                .map(|(id, _)| id.clone())
                .collect(),
            None => Vec::new(),
        }
    }

    pub fn is_anomalous(&self, idx: usize) -> bool {
        self.anomalous_label == Some(self.labels[idx])
    }
}

pub fn cluster(
    matrix: &FeatureMatrix,
    params: &KMeansParams,
    exec: Exec,
) -> Result<ClusterResult, DetectError> {
    let fit = kmeans::kmeans(&matrix.rows, params, exec)?;
    Ok(ClusterResult {
        agent_ids: matrix.agent_ids.clone(),
        labels: fit.labels,
        centroids: fit.centroids,
        objective: fit.objective,
        anomalous_label: None,
        n_iterations: fit.n_iterations,
        seed: params.seed,
    })
}

pub type AgentPapers = BTreeMap<AgentId, Vec<(Decision, Option<u64>)>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelReport {
    pub sizes: Vec<usize>,
    /// Per cluster: mean over agents of the agent's average accepted citation.
    pub accepted_mean: Vec<Option<f64>>,
    pub rejected_mean: Vec<Option<f64>>,
    /// Which rule picked the label: "size" or "citation".
    pub source: String,
    pub warnings: Vec<String>,
}

fn cluster_citation_means(
    result: &ClusterResult,
    papers: &AgentPapers,
    class: Decision,
) -> Vec<Option<f64>> {
    let k = result.centroids.len();
    let mut per: Vec<Vec<f64>> = vec![Vec::new(); k];
    for (id, &l) in result.agent_ids.iter().zip(&result.labels) {
        if let Some(avg) = papers.get(id).and_then(|p| average_citation(p, class)) {
            per[l].push(avg);
        }
    }
    per.iter().map(|v| mean(v)).collect()
}

/// Labels the smaller of the two clusters anomalous and checks that it has the
/// lower accepted-paper citation level (and the higher rejected-paper level
/// where data exists). Equal sizes defer to the accepted-citation criterion.
pub fn label_anomalous(
    mut result: ClusterResult,
    papers: &AgentPapers,
) -> (ClusterResult, LabelReport) {
    let sizes = result.sizes();
    let accepted_mean = cluster_citation_means(&result, papers, Decision::Accept);
    let rejected_mean = cluster_citation_means(&result, papers, Decision::Reject);
    let mut warnings = Vec::new();

    let (label, source) = if sizes.len() == 2 && sizes[0] != sizes[1] {
        (if sizes[0] < sizes[1] { 0 } else { 1 }, "size")
    } else {
        let lowest = (0..sizes.len())
            .filter_map(|j| accepted_mean[j].map(|m| (j, m)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .map(|(j, _)| j);
        if lowest.is_none() {
            warnings.push(
                "equal cluster sizes and no accepted-citation data; defaulting to cluster 0".into(),
            );
        }
        (lowest.unwrap_or(0), "citation")
    };

    if sizes.len() == 2 {
        let other = 1 - label;
        if let (Some(a), Some(n)) = (accepted_mean[label], accepted_mean[other]) {
            if a >= n {
                warnings.push(format!(
                    "anomalous cluster has accepted-paper citation level {a:.4} >= normal {n:.4}"
                ));
            }
        }
        if let (Some(a), Some(n)) = (rejected_mean[label], rejected_mean[other]) {
            if a <= n {
                warnings.push(format!(
                    "anomalous cluster has rejected-paper citation level {a:.4} <= normal {n:.4}"
                ));
            }
        }
    }
    for w in &warnings {
        warn!("{w}");
    }
    result.anomalous_label = Some(label);
    (
        result,
        LabelReport {
            sizes,
            accepted_mean,
            rejected_mean,
            source: source.to_string(),
            warnings,
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfComparison {
    pub anomalous_cdf: Vec<(f64, f64)>,
    pub normal_cdf: Vec<(f64, f64)>,
    pub ks: f64,
    /// The anomalous CDF sits on the expected side of the normal one at every
    /// step point: weakly above for accepted papers, weakly below for rejected.
    pub expected_order: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfReport {
    /// `None` when either group has no citation data for the class.
    pub accepted: Option<CdfComparison>,
    pub rejected: Option<CdfComparison>,
}

/// Per-agent average citations of one decision class, split by cluster label.
pub fn split_average_citations(
    result: &ClusterResult,
    papers: &AgentPapers,
    class: Decision,
) -> (Vec<f64>, Vec<f64>) {
    let mut anomalous = Vec::new();
    let mut normal = Vec::new();
    for (i, id) in result.agent_ids.iter().enumerate() {
        if let Some(avg) = papers.get(id).and_then(|p| average_citation(p, class)) {
            if result.is_anomalous(i) {
                anomalous.push(avg);
            } else {
                normal.push(avg);
            }
        }
    }
    (anomalous, normal)
}

/// Empirical CDFs of per-agent average citations for the anomalous and normal
/// clusters, with two-sample KS statistics per decision class.
pub fn validate_cdf_separation(result: &ClusterResult, papers: &AgentPapers) -> CdfReport {
    let compare = |class| {
        let (a, n) = split_average_citations(result, papers, class);
        let anomalous_cdf = citation_cdf(&a).ok()?;
        let normal_cdf = citation_cdf(&n).ok()?;
        let expected_order = match class {
            Decision::Accept => weakly_above(&anomalous_cdf, &normal_cdf),
            Decision::Reject => weakly_above(&normal_cdf, &anomalous_cdf),
        };
        Some(CdfComparison {
            anomalous_cdf,
            normal_cdf,
            ks: ks_statistic(&a, &n).ok()?,
            expected_order,
        })
    };
    CdfReport {
        accepted: compare(Decision::Accept),
        rejected: compare(Decision::Reject),
    }
}

/// `upper(x) >= lower(x)` at every step point of either CDF.
pub fn weakly_above(upper: &[(f64, f64)], lower: &[(f64, f64)]) -> bool {
    use crate::diagnostics::cdf_at;
    upper
        .iter()
        .chain(lower)
        .all(|&(x, _)| cdf_at(upper, x) >= cdf_at(lower, x))
}

/// End-to-end detection for one role.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub role: Role,
    pub feature_names: Vec<String>,
    pub standardized: bool,
    pub n_profiles: usize,
    pub n_eligible: usize,
    pub result: ClusterResult,
    pub label_report: LabelReport,
    pub validation: CdfReport,
    pub warnings: Vec<String>,
}

impl Detection {
    /// Disagreements with the citation criterion: labeling warnings plus any
    /// CDF comparison on the wrong side.
    pub fn validation_warnings(&self) -> Vec<String> {
        let mut out = self.label_report.warnings.clone();
        for (name, c) in [
            ("accepted", &self.validation.accepted),
            ("rejected", &self.validation.rejected),
        ] {
            if let Some(c) = c {
                if !c.expected_order {
                    out.push(format!(
                        "{} {name}-citation CDF of the anomalous cluster is on the wrong side",
                        self.role
                    ));
                }
            }
        }
        out
    }
}

pub fn detect<P: AgentProfile + Clone>(
    profiles: &[P],
    papers: &AgentPapers,
    params: &KMeansParams,
    standardize: bool,
    exec: Exec,
) -> Result<Detection, DetectError> {
    let eligible = eligibility_filter(profiles);
    if eligible.is_empty() {
        return Err(DetectError::EmptyFeatureMatrix(P::ROLE));
    }
    let matrix = build_features(&eligible, standardize)?;
    let result = cluster(&matrix, params, exec)?;
    let (result, label_report) = label_anomalous(result, papers);
    let validation = validate_cdf_separation(&result, papers);
    let mut warnings = matrix.warnings.clone();
    warnings.extend(
        matrix
            .zero_variance
            .iter()
            .map(|f| format!("zero-variance feature {f}")),
    );
    Ok(Detection {
        role: P::ROLE,
        feature_names: matrix.feature_names,
        standardized: standardize,
        n_profiles: profiles.len(),
        n_eligible: eligible.len(),
        result,
        label_report,
        validation,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn editor(id: &str, n: u64, acc: u64, meat: Option<f64>) -> EditorProfile {
        EditorProfile {
            editor_id: id.into(),
            n_assignments: n,
            meat,
            rdi: Some(1.0),
            radi: Some(2.0),
            sri: Some(0.1),
            n_declines_received: 0,
            n_papers: n,
            n_self_reviewed: 0,
            n_assignments_before_cutoff: n,
            n_accepted_before_cutoff: acc,
        }
    }

    #[test]
    fn eligibility_examples() {
        let ps = vec![
            editor("a", 4, 3, None),
            editor("b", 6, 0, None),
            editor("c", 5, 1, None),
        ];
        let kept: Vec<_> = eligibility_filter(&ps)
            .into_iter()
            .map(|p| p.editor_id.0)
            .collect();
        assert_eq!(kept, vec!["c"]);
    }

    #[test]
    fn zscore_two_agents() {
        let ps = vec![editor("a", 5, 1, Some(10.0)), editor("b", 5, 1, Some(30.0))];
        let m = build_features(&ps, true).unwrap();
        assert_eq!(m.rows[0][0], -1.0);
        assert_eq!(m.rows[1][0], 1.0);
        // rdi/radi/sri are constant here
        assert_eq!(m.zero_variance, vec!["RDI", "RADI", "SRI"]);
        assert!(m.rows.iter().all(|r| r[1..].iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn single_agent_warns() {
        let m = build_features(&[editor("a", 5, 1, Some(3.0))], true).unwrap();
        assert!(m.rows[0].iter().all(|&x| x == 0.0));
        assert_eq!(m.warnings.len(), 1);
    }

    #[test]
    fn median_imputation_and_all_undefined() {
        let ps = vec![
            editor("a", 5, 1, Some(10.0)),
            editor("b", 5, 1, None),
            editor("c", 5, 1, Some(40.0)),
        ];
        let m = build_features(&ps, false).unwrap();
        assert_eq!(m.rows[1][0], 25.0);
        let none = vec![editor("a", 5, 1, None)];
        assert_eq!(
            build_features(&none, true),
            Err(DetectError::AllUndefined("MEAT".into()))
        );
        let empty: Vec<EditorProfile> = Vec::new();
        assert!(matches!(
            build_features(&empty, true),
            Err(DetectError::EmptyFeatureMatrix(Role::Editor))
        ));
    }

    fn result(labels: Vec<usize>) -> ClusterResult {
        ClusterResult {
            agent_ids: (0..labels.len())
                .map(|i| AgentId(format!("A{i}")))
                .collect(),
            labels,
            centroids: vec![vec![0.0], vec![1.0]],
            objective: 0.0,
            anomalous_label: None,
            n_iterations: 1,
            seed: 0,
        }
    }

    #[test]
    fn smaller_cluster_is_anomalous() {
        for (small, large) in [(25usize, 68usize), (339, 1999)] {
            let mut labels = vec![1; small];
            labels.extend(vec![0; large]);
            let (r, rep) = label_anomalous(result(labels), &BTreeMap::new());
            assert_eq!(r.anomalous_label, Some(1));
            assert_eq!(rep.source, "size");
            assert_eq!(r.anomalous_agents().len(), small);
        }
    }

    #[test]
    fn equal_sizes_use_citations() {
        let r = result(vec![0, 0, 1, 1]);
        let papers: AgentPapers = [("A0", 12), ("A1", 12), ("A2", 3), ("A3", 3)]
            .into_iter()
            .map(|(a, c)| (AgentId(a.into()), vec![(Decision::Accept, Some(c))]))
            .collect();
        let (r, rep) = label_anomalous(r, &papers);
        assert_eq!(r.anomalous_label, Some(1));
        assert_eq!(rep.source, "citation");
        assert!(rep.warnings.is_empty());
    }

    #[test]
    fn disagreement_warns() {
        let r = result(vec![1, 0, 0]);
        let papers: AgentPapers = [("A0", 50), ("A1", 2), ("A2", 2)]
            .into_iter()
            .map(|(a, c)| (AgentId(a.into()), vec![(Decision::Accept, Some(c))]))
            .collect();
        let (_, rep) = label_anomalous(r, &papers);
        assert_eq!(rep.warnings.len(), 1);
    }

    #[test]
    fn cdf_validation_extremes() {
        let mut r = result(vec![1, 1, 0, 0, 0]);
        r.anomalous_label = Some(1);
        let cites = [0, 0, 100, 100, 100];
        let papers: AgentPapers = cites
            .iter()
            .enumerate()
            .map(|(i, &c)| (AgentId(format!("A{i}")), vec![(Decision::Accept, Some(c))]))
            .collect();
        let rep = validate_cdf_separation(&r, &papers);
        let acc = rep.accepted.unwrap();
        assert_eq!(acc.ks, 1.0);
        assert!(weakly_above(&acc.anomalous_cdf, &acc.normal_cdf));
        assert!(rep.rejected.is_none());

        let same: AgentPapers = (0..5)
            .map(|i| (AgentId(format!("A{i}")), vec![(Decision::Accept, Some(7))]))
            .collect();
        assert_eq!(validate_cdf_separation(&r, &same).accepted.unwrap().ks, 0.0);
    }
}
