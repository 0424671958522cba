//! Statistics over collected responses: per-stimulus scores and error rates,
//! annotator agreement, per-system summaries and pairwise significance.

pub mod agreement;
pub mod stats;

use std::collections::BTreeMap;
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collector::ResponseRecord;
use crate::expdesign::ExperimentPlan;
use crate::text::ends_with_punctuation;

pub use agreement::{build_matrix, krippendorff_alpha, n_p, Alpha, AnnotationMatrix};
pub use stats::{iqr, paired_t, pearson, quantile_sorted, student_t_two_sided_p};

/// Conventional significance level for pairwise system comparisons.
pub const DEFAULT_ALPHA_LEVEL: f64 = 0.01;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("inconsistent token count for {key}: expected {expected}, found {found}")]
    InconsistentTokenCount {
        key: StimulusKey,
        expected: usize,
        found: usize,
    },
    #[error("no data: {0}")]
    NoData(String),
    #[error("insufficient pairs: {0} shared texts, need at least 2")]
    InsufficientPairs(usize),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("no stimulus received any error mark")]
    NoMarkedStimuli,
    #[error("response line {line}: {message}")]
    InvalidRecord { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StimulusKey {
    pub text_id: String,
    pub system_id: String,
}

impl StimulusKey {
    pub fn new(text_id: impl Into<String>, system_id: impl Into<String>) -> Self {
        Self {
            text_id: text_id.into(),
            system_id: system_id.into(),
        }
    }
}

impl fmt::Display for StimulusKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.text_id, self.system_id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusStats {
    pub key: StimulusKey,
    pub mean_score: f64,
    pub mean_error_rate: f64,
    pub per_token_mark_counts: Vec<u64>,
    pub n_responses: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementStats {
    pub key: StimulusKey,
    /// Over all annotators; absent with fewer than two responses.
    pub alpha: Option<f64>,
    pub alpha_degenerate: bool,
    /// Over annotators who marked at least one token.
    pub alpha_p: Option<f64>,
    pub alpha_p_degenerate: bool,
    pub n_p: usize,
    pub n_responses: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorTypeCounts {
    /// Configured types in task order, including zero counts.
    pub counts: IndexMap<String, u64>,
    /// Responses with a non-empty "Other" text.
    pub other: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSummary {
    pub system_id: String,
    pub n_stimuli: usize,
    pub n_responses: usize,
    pub mean_of_stimulus_means: f64,
    pub iqr_of_stimulus_means: f64,
    pub mean_error_rate: f64,
    pub mean_alpha: Option<f64>,
    pub mean_alpha_p: Option<f64>,
    pub mean_n_p: f64,
    pub error_type_counts: ErrorTypeCounts,
    /// Absent when no stimulus of the system received a mark.
    pub punctuation_proportion: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseTest {
    pub system_a: String,
    pub system_b: String,
    pub n_pairs: usize,
    pub mean_difference: f64,
    pub t_statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_raw: f64,
    pub p_adjusted: f64,
    pub significant_at_0_01: bool,
}

/// Marked tokens over token count for one response.
pub fn error_rate(record: &ResponseRecord, token_count: usize) -> f64 {
    debug_assert!(token_count >= 1);
    record.marks.iter().filter(|&&m| m).count() as f64 / token_count as f64
}

/// Per-stimulus score, error rate and mark counts. `records` must all share
/// `key` and have `token_count` marks.
pub fn stimulus_stats(
    key: StimulusKey,
    token_count: usize,
    records: &[&ResponseRecord],
) -> Result<StimulusStats, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::NoData(format!("no responses for {key}")));
    }
    let mut counts = vec![0u64; token_count];
    let mut score_sum = 0.0;
    let mut rate_sum = 0.0;
    for r in records {
        if r.marks.len() != token_count {
            return Err(MetricsError::InconsistentTokenCount {
                key,
                expected: token_count,
                found: r.marks.len(),
            });
        }
        for (c, &m) in counts.iter_mut().zip(&r.marks) {
            *c += u64::from(m);
        }
        score_sum += f64::from(r.score);
        rate_sum += error_rate(r, token_count);
    }
    let n = records.len();
    Ok(StimulusStats {
        key,
        mean_score: score_sum / n as f64,
        mean_error_rate: rate_sum / n as f64,
        per_token_mark_counts: counts,
        n_responses: n,
    })
}

pub fn agreement_stats(matrix: &AnnotationMatrix) -> AgreementStats {
    let all = krippendorff_alpha(matrix, true);
    let marking = krippendorff_alpha(matrix, false);
    AgreementStats {
        key: matrix.key.clone(),
        alpha: all.map(|a| a.value),
        alpha_degenerate: all.is_some_and(|a| a.degenerate),
        alpha_p: marking.map(|a| a.value),
        alpha_p_degenerate: marking.is_some_and(|a| a.degenerate),
        n_p: n_p(matrix),
        n_responses: matrix.rows(),
    }
}

/// Selections per configured error type, plus the count of non-empty
/// "Other" answers.
pub fn error_type_counts<'a>(
    configured: &[String],
    records: impl IntoIterator<Item = &'a ResponseRecord>,
) -> ErrorTypeCounts {
    let mut counts: IndexMap<String, u64> = configured.iter().map(|t| (t.clone(), 0)).collect();
    let mut other = 0;
    for r in records {
        for t in &r.error_types {
            if let Some(c) = counts.get_mut(t) {
                *c += 1;
            }
        }
        if !r.other_text.trim().is_empty() {
            other += 1;
        }
    }
    ErrorTypeCounts { counts, other }
}

/// Share of marked stimuli whose most-marked token (ties to the lowest
/// index) ends in punctuation.
pub fn punctuation_proportion<'a>(
    plan: &ExperimentPlan,
    stats: impl IntoIterator<Item = &'a StimulusStats>,
) -> Result<f64, MetricsError> {
    let mut considered = 0usize;
    let mut matching = 0usize;
    for s in stats {
        let Some(text) = plan.text(&s.key.text_id) else {
            continue;
        };
        let Some((argmax, &max)) = s
            .per_token_mark_counts
            .iter()
            .enumerate()
            .rev()
            .max_by_key(|(_, &c)| c)
        else {
            continue;
        };
        if max == 0 {
            continue;
        }
        considered += 1;
        if ends_with_punctuation(&text.tokens[argmax]) {
            matching += 1;
        }
    }
    if considered == 0 {
        return Err(MetricsError::NoMarkedStimuli);
    }
    Ok(matching as f64 / considered as f64)
}

/// CSV of normalized mark intensity for one text: a header of `system`
/// followed by the tokens, then one row per system with responses.
pub fn heatmap_export<'a>(
    plan: &ExperimentPlan,
    text_id: &str,
    stats: impl IntoIterator<Item = &'a StimulusStats>,
) -> Result<String, MetricsError> {
    let text = plan
        .text(text_id)
        .ok_or_else(|| MetricsError::NoData(format!("unknown text {text_id:?}")))?;
    let by_system: BTreeMap<&str, &StimulusStats> = stats
        .into_iter()
        .filter(|s| s.key.text_id == text_id && s.n_responses > 0)
        .map(|s| (s.key.system_id.as_str(), s))
        .collect();
    if by_system.is_empty() {
        return Err(MetricsError::NoData(format!(
            "no responses for text {text_id:?}"
        )));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = std::iter::once("system").chain(text.tokens.iter().map(String::as_str));
    w.write_record(header).expect("in-memory csv");
    for system in &plan.systems {
        if let Some(s) = by_system.get(system.as_str()) {
            let n = s.n_responses as f64;
            let row = std::iter::once(system.clone()).chain(
                s.per_token_mark_counts
                    .iter()
                    .map(|&c| format!("{}", c as f64 / n)),
            );
            w.write_record(row).expect("in-memory csv");
        }
    }
    Ok(String::from_utf8(w.into_inner().expect("flush")).expect("utf-8"))
}

/// Aggregate one system's stimuli.
pub fn summarize_system(
    plan: &ExperimentPlan,
    stats: &[StimulusStats],
    agreement: &[AgreementStats],
    records: &[ResponseRecord],
    system_id: &str,
) -> Result<SystemSummary, MetricsError> {
    let own: Vec<&StimulusStats> = stats
        .iter()
        .filter(|s| s.key.system_id == system_id && s.n_responses > 0)
        .collect();
    if own.is_empty() {
        return Err(MetricsError::NoData(format!(
            "no responses for system {system_id:?}"
        )));
    }
    let means: Vec<f64> = own.iter().map(|s| s.mean_score).collect();
    let rates: Vec<f64> = own.iter().map(|s| s.mean_error_rate).collect();
    let own_agreement: Vec<&AgreementStats> = agreement
        .iter()
        .filter(|a| a.key.system_id == system_id)
        .collect();
    let alphas: Vec<f64> = own_agreement.iter().filter_map(|a| a.alpha).collect();
    let alphas_p: Vec<f64> = own_agreement.iter().filter_map(|a| a.alpha_p).collect();
    let nps: Vec<f64> = own_agreement.iter().map(|a| a.n_p as f64).collect();
    Ok(SystemSummary {
        system_id: system_id.to_string(),
        n_stimuli: own.len(),
        n_responses: own.iter().map(|s| s.n_responses).sum(),
        mean_of_stimulus_means: stats::mean(&means).unwrap_or(f64::NAN),
        iqr_of_stimulus_means: iqr(&means),
        mean_error_rate: stats::mean(&rates).unwrap_or(f64::NAN),
        mean_alpha: stats::mean(&alphas),
        mean_alpha_p: stats::mean(&alphas_p),
        mean_n_p: stats::mean(&nps).unwrap_or(0.0),
        error_type_counts: error_type_counts(
            &plan.task.error_types,
            records.iter().filter(|r| r.system_id == system_id),
        ),
        punctuation_proportion: punctuation_proportion(plan, own.iter().copied()).ok(),
    })
}

/// Paired t-tests between every pair of systems (in the given order),
/// pairing per-stimulus mean scores on shared texts, Bonferroni-adjusted
/// over the number of pairs.
pub fn paired_t_tests(
    systems: &[String],
    stats: &[StimulusStats],
    alpha_level: f64,
) -> Result<Vec<PairwiseTest>, MetricsError> {
    let mut by_system: BTreeMap<&str, BTreeMap<&str, f64>> = BTreeMap::new();
    for s in stats.iter().filter(|s| s.n_responses > 0) {
        by_system
            .entry(s.key.system_id.as_str())
            .or_default()
            .insert(s.key.text_id.as_str(), s.mean_score);
    }
    let empty = BTreeMap::new();
    let mut tests = Vec::new();
    for (i, a) in systems.iter().enumerate() {
        for b in &systems[i + 1..] {
            let ma = by_system.get(a.as_str()).unwrap_or(&empty);
            let mb = by_system.get(b.as_str()).unwrap_or(&empty);
            let diffs: Vec<f64> = ma
                .iter()
                .filter_map(|(text, x)| mb.get(text).map(|y| x - y))
                .collect();
            let r = paired_t(&diffs)?;
            tests.push(PairwiseTest {
                system_a: a.clone(),
                system_b: b.clone(),
                n_pairs: r.n,
                mean_difference: r.mean_difference,
                t_statistic: r.t,
                degrees_of_freedom: r.df,
                p_raw: r.p,
                p_adjusted: 0.0,
                significant_at_0_01: false,
            });
        }
    }
    let factor = tests.len() as f64;
    for t in &mut tests {
        t.p_adjusted = (t.p_raw * factor).min(1.0);
        t.significant_at_0_01 = t.p_adjusted < alpha_level;
    }
    Ok(tests)
}

/// Parse a response log against a plan, rejecting records that reference
/// unknown texts or systems or carry the wrong number of marks.
pub fn load_records(
    plan: &ExperimentPlan,
    content: &str,
) -> Result<Vec<ResponseRecord>, MetricsError> {
    let mut out = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = i + 1;
        let record: ResponseRecord =
            serde_json::from_str(line).map_err(|e| MetricsError::InvalidRecord {
                line: line_no,
                message: e.to_string(),
            })?;
        let text = plan
            .text(&record.text_id)
            .ok_or_else(|| MetricsError::InvalidRecord {
                line: line_no,
                message: format!("unknown text_id {:?}", record.text_id),
            })?;
        if !plan.systems.contains(&record.system_id) {
            return Err(MetricsError::InvalidRecord {
                line: line_no,
                message: format!("unknown system_id {:?}", record.system_id),
            });
        }
        if record.marks.len() != text.tokens.len() {
            return Err(MetricsError::InvalidRecord {
                line: line_no,
                message: format!(
                    "{} marks for text {:?} with {} tokens",
                    record.marks.len(),
                    record.text_id,
                    text.tokens.len()
                ),
            });
        }
        out.push(record);
    }
    Ok(out)
}
