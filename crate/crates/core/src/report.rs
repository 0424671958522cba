//! Full analysis of a response log and its on-disk report.
//!
//! A report directory holds `summary.json`, `summary.md` and one
//! `heatmaps/<text_id>.csv` per answered text.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::collector::ResponseRecord;
use crate::expdesign::{ExperimentPlan, TaskMode};
use crate::metrics::{
    agreement_stats, build_matrix, heatmap_export, paired_t_tests, pearson, stimulus_stats,
    summarize_system, AgreementStats, MetricsError, PairwiseTest, StimulusKey, StimulusStats,
    SystemSummary, DEFAULT_ALPHA_LEVEL,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    /// Pooled over answered stimuli: mean score against mean error rate.
    pub pearson_r: Option<f64>,
    pub n_stimuli: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub experiment_id: String,
    pub mode: TaskMode,
    pub n_records: usize,
    pub systems: Vec<SystemSummary>,
    pub pairwise_tests: Vec<PairwiseTest>,
    /// Why pairwise tests are missing, if they are.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairwise_note: Option<String>,
    pub stimuli: Vec<StimulusStats>,
    pub agreement: Vec<AgreementStats>,
    pub correlation: Correlation,
    /// Renditions with no responses, excluded from every aggregate.
    pub unanswered: Vec<StimulusKey>,
    #[serde(skip)]
    pub heatmaps: BTreeMap<String, String>,
}

/// Compute every statistic for `records` (already checked against `plan`).
pub fn analyze(
    plan: &ExperimentPlan,
    records: &[ResponseRecord],
) -> Result<AnalysisReport, MetricsError> {
    let mut grouped: BTreeMap<StimulusKey, Vec<&ResponseRecord>> = BTreeMap::new();
    for r in records {
        grouped
            .entry(StimulusKey::new(&r.text_id, &r.system_id))
            .or_default()
            .push(r);
    }

    let mut keys: Vec<StimulusKey> = plan
        .renditions
        .iter()
        .map(|r| StimulusKey::new(&r.text_id, &r.system_id))
        .collect();
    keys.sort();

    let mut stimuli = Vec::new();
    let mut agreement = Vec::new();
    let mut unanswered = Vec::new();
    for key in keys {
        let token_count = plan
            .text(&key.text_id)
            .map(|t| t.tokens.len())
            .ok_or_else(|| MetricsError::NoData(format!("unknown text {:?}", key.text_id)))?;
        match grouped.get(&key) {
            Some(rs) if !rs.is_empty() => {
                stimuli.push(stimulus_stats(key.clone(), token_count, rs)?);
                agreement.push(agreement_stats(&build_matrix(rs, &key, token_count)?));
            }
            _ => unanswered.push(key),
        }
    }

    let systems = plan
        .systems
        .iter()
        .filter_map(|s| summarize_system(plan, &stimuli, &agreement, records, s).ok())
        .collect();

    let (pairwise_tests, pairwise_note) = if plan.systems.len() < 2 {
        (Vec::new(), Some("fewer than two systems".to_string()))
    } else {
        match paired_t_tests(&plan.systems, &stimuli, DEFAULT_ALPHA_LEVEL) {
            Ok(t) => (t, None),
            Err(e) => (Vec::new(), Some(e.to_string())),
        }
    };

    let xs: Vec<f64> = stimuli.iter().map(|s| s.mean_score).collect();
    let ys: Vec<f64> = stimuli.iter().map(|s| s.mean_error_rate).collect();
    let correlation = Correlation {
        pearson_r: pearson(&xs, &ys).ok(),
        n_stimuli: stimuli.len(),
    };

    let mut heatmaps = BTreeMap::new();
    for text in &plan.texts {
        if let Ok(csv) = heatmap_export(plan, &text.id, &stimuli) {
            heatmaps.insert(text.id.clone(), csv);
        }
    }

    Ok(AnalysisReport {
        experiment_id: plan.experiment_id.clone(),
        mode: plan.task.mode,
        n_records: records.len(),
        systems,
        pairwise_tests,
        pairwise_note,
        stimuli,
        agreement,
        correlation,
        unanswered,
        heatmaps,
    })
}

impl AnalysisReport {
    pub fn write_to(&self, dir: &Path) -> io::Result<()> {
        let heat_dir = dir.join("heatmaps");
        fs::create_dir_all(&heat_dir)?;
        let json = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        fs::write(dir.join("summary.json"), json + "\n")?;
        fs::write(dir.join("summary.md"), self.to_markdown())?;
        for (text_id, csv) in &self.heatmaps {
            fs::write(heat_dir.join(format!("{}.csv", sanitize(text_id))), csv)?;
        }
        Ok(())
    }

    pub fn to_markdown(&self) -> String {
        let mut md = String::new();
        let opt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.3}"));
        let _ = writeln!(md, "# Analysis: {}\n", self.experiment_id);
        let _ = writeln!(
            md,
            "Mode: {:?}. {} responses over {} answered stimuli.\n",
            self.mode,
            self.n_records,
            self.stimuli.len()
        );

        md.push_str("## Scores per system\n\n");
        md.push_str("| System | Mean | IQR | Stimuli | Mean error rate |\n|---|---|---|---|---|\n");
        for s in &self.systems {
            let _ = writeln!(
                md,
                "| {} | {:.2} | {:.2} | {} | {:.3} |",
                s.system_id,
                s.mean_of_stimulus_means,
                s.iqr_of_stimulus_means,
                s.n_stimuli,
                s.mean_error_rate
            );
        }
        md.push_str("\nPaired t-tests on per-text mean scores, Bonferroni-corrected:\n\n");
        if let Some(note) = &self.pairwise_note {
            let _ = writeln!(md, "Not computed: {note}");
        } else {
            md.push_str("| A | B | Pairs | t | df | p | p (adj.) | p<0.01 |\n|---|---|---|---|---|---|---|---|\n");
            for t in &self.pairwise_tests {
                let _ = writeln!(
                    md,
                    "| {} | {} | {} | {:.3} | {} | {:.4} | {:.4} | {} |",
                    t.system_a,
                    t.system_b,
                    t.n_pairs,
                    t.t_statistic,
                    t.degrees_of_freedom,
                    t.p_raw,
                    t.p_adjusted,
                    if t.significant_at_0_01 { "yes" } else { "no" }
                );
            }
        }

        md.push_str("\n## Annotator agreement\n\n");
        md.push_str("| System | Mean alpha | Mean alpha_p | Mean N_p |\n|---|---|---|---|\n");
        for s in &self.systems {
            let _ = writeln!(
                md,
                "| {} | {} | {} | {:.2} |",
                s.system_id,
                opt(s.mean_alpha),
                opt(s.mean_alpha_p),
                s.mean_n_p
            );
        }
        let degenerate = self.agreement.iter().filter(|a| a.alpha_degenerate).count();
        if degenerate > 0 {
            let _ = writeln!(
                md,
                "\n{degenerate} stimuli had a single value throughout; their alpha is reported as 1 (degenerate)."
            );
        }

        md.push_str(
            "\n## Most-marked word before punctuation\n\n| System | Proportion |\n|---|---|\n",
        );
        for s in &self.systems {
            let _ = writeln!(
                md,
                "| {} | {} |",
                s.system_id,
                opt(s.punctuation_proportion)
            );
        }

        md.push_str("\n## Error types per system\n\n");
        if let Some(first) = self.systems.first() {
            let types: Vec<&String> = first.error_type_counts.counts.keys().collect();
            md.push_str("| System |");
            for t in &types {
                let _ = write!(md, " {t} |");
            }
            md.push_str(" Other |\n|---|");
            for _ in &types {
                md.push_str("---|");
            }
            md.push_str("---|\n");
            for s in &self.systems {
                let _ = write!(md, "| {} |", s.system_id);
                for c in s.error_type_counts.counts.values() {
                    let _ = write!(md, " {c} |");
                }
                let _ = writeln!(md, " {} |", s.error_type_counts.other);
            }
        }

        let _ = writeln!(
            md,
            "\n## Score and error rate\n\nPearson's R (pooled, {} stimuli): {}",
            self.correlation.n_stimuli,
            opt(self.correlation.pearson_r)
        );

        let _ = writeln!(
            md,
            "\n## Heatmaps\n\n{} files under `heatmaps/`.",
            self.heatmaps.len()
        );

        md.push_str("\n## Coverage\n\n");
        if self.unanswered.is_empty() {
            md.push_str("Every rendition received at least one response.\n");
        } else {
            let _ = writeln!(
                md,
                "{} renditions without responses:\n",
                self.unanswered.len()
            );
            for k in &self.unanswered {
                let _ = writeln!(md, "- {} / {}", k.text_id, k.system_id);
            }
        }
        md
    }
}

fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expdesign::tests::plan;

    #[test]
    fn empty_log_lists_everything_unanswered() {
        let p = plan(6, 3, 3, 0).unwrap();
        let r = analyze(&p, &[]).unwrap();
        assert_eq!(r.unanswered.len(), 18);
        assert!(r.systems.is_empty());
        assert!(r.heatmaps.is_empty());
        assert!(r.pairwise_note.is_some());
        let dir = tempfile::tempdir().unwrap();
        r.write_to(dir.path()).unwrap();
        let md = fs::read_to_string(dir.path().join("summary.md")).unwrap();
        assert!(md.contains("18 renditions without responses"));
    }

    #[test]
    fn sanitized_names() {
        assert_eq!(sanitize("libri/16 a"), "libri_16_a");
    }
}
