//! Experiment plans: text/system renditions assigned to participant groups
//! with a block-replicated Latin square, plus per-participant page order.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{fnv1a64, SplitMix64};
use crate::stimgen::TextItem;

pub const SCALE_POINTS: u8 = 5;
pub const MAX_REPLAYS: u8 = 3;

pub const DEFAULT_ERROR_TYPES: [&str; 4] = [
    "Abrupt change in pitch",
    "Awkward pause",
    "Unexpected intonation",
    "Lacking intonation",
];

pub const MOS_QUESTION: &str = "How natural does the speaker sound?";
pub const PMOS_QUESTION: &str = "How natural is the speaker's intonation?";

#[derive(Debug, Error)]
pub enum DesignError {
    #[error("indivisible design: {0}")]
    IndivisibleDesign(String),
    #[error("missing rendition for text {text_id:?} on system {system_id:?}")]
    MissingRendition { text_id: String, system_id: String },
    #[error("invalid design: {0}")]
    Invalid(String),
    #[error("unknown group {0}")]
    UnknownGroup(usize),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rendition {
    pub text_id: String,
    pub system_id: String,
    /// Audio asset path relative to the serving audio directory.
    pub audio_ref: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TaskMode {
    #[serde(rename = "MOS_ONLY")]
    MosOnly,
    #[serde(rename = "AUGMENTED")]
    Augmented,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamiliarizationItem {
    pub audio_ref: String,
    pub transcript: String,
    pub explanation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskConfig {
    pub mode: TaskMode,
    pub scale_points: u8,
    pub max_replays: u8,
    pub error_types: Vec<String>,
    pub mos_question: String,
    pub familiarization_items: Vec<FamiliarizationItem>,
}

impl TaskConfig {
    /// Plain naturalness rating without error marking.
    pub fn mos_only() -> Self {
        Self {
            mode: TaskMode::MosOnly,
            scale_points: SCALE_POINTS,
            max_replays: MAX_REPLAYS,
            error_types: Vec::new(),
            mos_question: MOS_QUESTION.to_string(),
            familiarization_items: Vec::new(),
        }
    }

    /// Error marking, intonation rating and error-type survey.
    pub fn augmented(familiarization_items: Vec<FamiliarizationItem>) -> Self {
        Self {
            mode: TaskMode::Augmented,
            scale_points: SCALE_POINTS,
            max_replays: MAX_REPLAYS,
            error_types: DEFAULT_ERROR_TYPES.iter().map(|s| s.to_string()).collect(),
            mos_question: PMOS_QUESTION.to_string(),
            familiarization_items,
        }
    }

    pub fn validate(&self) -> Result<(), DesignError> {
        if self.scale_points != SCALE_POINTS {
            return Err(DesignError::Invalid(format!(
                "scale_points must be {SCALE_POINTS}"
            )));
        }
        if self.max_replays != MAX_REPLAYS {
            return Err(DesignError::Invalid(format!(
                "max_replays must be {MAX_REPLAYS}"
            )));
        }
        match self.mode {
            TaskMode::MosOnly => {
                if !self.error_types.is_empty() || !self.familiarization_items.is_empty() {
                    return Err(DesignError::Invalid(
                        "MOS_ONLY tasks carry no error types or familiarization".into(),
                    ));
                }
            }
            TaskMode::Augmented => {
                if self.error_types.is_empty() {
                    return Err(DesignError::Invalid(
                        "AUGMENTED tasks need error types".into(),
                    ));
                }
                let unique: HashSet<_> = self.error_types.iter().collect();
                if unique.len() != self.error_types.len() {
                    return Err(DesignError::Invalid("duplicate error type".into()));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Page {
    pub text_id: String,
    pub system_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub experiment_id: String,
    pub task: TaskConfig,
    pub texts: Vec<TextItem>,
    pub systems: Vec<String>,
    pub renditions: Vec<Rendition>,
    pub n_groups: usize,
    pub group_pages: BTreeMap<usize, Vec<Page>>,
    pub seed: u64,
}

/// Assign every (text, system) rendition to exactly one of `n_groups`
/// groups.
///
/// Texts are shuffled with the seed, then cut into `n_groups / |systems|`
/// equal blocks. Block `j` serves groups `j*k .. j*k + k` (`k = |systems|`);
/// in local group `r`, the text at block position `i` is paired with system
/// `(i + r) mod k`.
pub fn build_plan(
    experiment_id: &str,
    texts: Vec<TextItem>,
    systems: Vec<String>,
    renditions: Vec<Rendition>,
    n_groups: usize,
    task: TaskConfig,
    seed: u64,
) -> Result<ExperimentPlan, DesignError> {
    task.validate()?;
    let k = systems.len();
    if k == 0 {
        return Err(DesignError::Invalid(
            "at least one system is required".into(),
        ));
    }
    if texts.is_empty() {
        return Err(DesignError::Invalid("at least one text is required".into()));
    }
    let system_set: HashSet<&str> = systems.iter().map(String::as_str).collect();
    if system_set.len() != k {
        return Err(DesignError::Invalid("duplicate system id".into()));
    }
    let mut text_ids = HashSet::new();
    for t in &texts {
        if !text_ids.insert(t.id.as_str()) {
            return Err(DesignError::Invalid(format!(
                "duplicate text id {:?}",
                t.id
            )));
        }
    }
    if n_groups == 0 || !n_groups.is_multiple_of(k) {
        return Err(DesignError::IndivisibleDesign(format!(
            "{n_groups} groups is not a positive multiple of {k} systems"
        )));
    }
    let blocks = n_groups / k;
    if !texts.len().is_multiple_of(blocks) {
        return Err(DesignError::IndivisibleDesign(format!(
            "{} texts cannot be split into {blocks} equal blocks ({n_groups} groups / {k} systems)",
            texts.len()
        )));
    }
    let block_len = texts.len() / blocks;
    if !block_len.is_multiple_of(k) {
        return Err(DesignError::IndivisibleDesign(format!(
            "{block_len} pages per group is not divisible by {k} systems"
        )));
    }

    let mut seen = HashSet::new();
    for r in &renditions {
        if !text_ids.contains(r.text_id.as_str()) || !system_set.contains(r.system_id.as_str()) {
            return Err(DesignError::Invalid(format!(
                "rendition ({}, {}) references an unknown text or system",
                r.text_id, r.system_id
            )));
        }
        if !seen.insert((r.text_id.as_str(), r.system_id.as_str())) {
            return Err(DesignError::Invalid(format!(
                "duplicate rendition ({}, {})",
                r.text_id, r.system_id
            )));
        }
    }
    for t in &texts {
        for s in &systems {
            if !seen.contains(&(t.id.as_str(), s.as_str())) {
                return Err(DesignError::MissingRendition {
                    text_id: t.id.clone(),
                    system_id: s.clone(),
                });
            }
        }
    }

    let mut order: Vec<usize> = (0..texts.len()).collect();
    SplitMix64::derive(seed, &[0]).shuffle(&mut order);

    let mut group_pages = BTreeMap::new();
    for (block, chunk) in order.chunks(block_len).enumerate() {
        for local in 0..k {
            let pages = chunk
                .iter()
                .enumerate()
                .map(|(i, &t)| Page {
                    text_id: texts[t].id.clone(),
                    system_id: systems[(i + local) % k].clone(),
                })
                .collect();
            group_pages.insert(block * k + local, pages);
        }
    }

    Ok(ExperimentPlan {
        experiment_id: experiment_id.to_string(),
        task,
        texts,
        systems,
        renditions,
        n_groups,
        group_pages,
        seed,
    })
}

impl ExperimentPlan {
    pub fn from_json(json: &str) -> Result<Self, DesignError> {
        let plan: ExperimentPlan = serde_json::from_str(json).map_err(|e| DesignError::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: &Path) -> Result<Self, DesignError> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn pages_per_group(&self) -> usize {
        self.group_pages.values().next().map_or(0, Vec::len)
    }

    pub fn text(&self, text_id: &str) -> Option<&TextItem> {
        self.texts.iter().find(|t| t.id == text_id)
    }

    pub fn rendition(&self, text_id: &str, system_id: &str) -> Option<&Rendition> {
        self.renditions
            .iter()
            .find(|r| r.text_id == text_id && r.system_id == system_id)
    }

    /// Check the structural invariants of a plan read from disk.
    pub fn validate(&self) -> Result<(), DesignError> {
        self.task.validate()?;
        let k = self.systems.len();
        if k == 0 || self.n_groups == 0 {
            return Err(DesignError::Invalid("plan has no systems or groups".into()));
        }
        if self.group_pages.len() != self.n_groups
            || self.group_pages.keys().copied().ne(0..self.n_groups)
        {
            return Err(DesignError::Invalid(
                "group_pages must cover groups 0..n_groups".into(),
            ));
        }
        let per_group = self.pages_per_group();
        if per_group == 0 || !per_group.is_multiple_of(k) {
            return Err(DesignError::Invalid(
                "pages per group must be a positive multiple of the system count".into(),
            ));
        }
        let renditions: HashSet<(&str, &str)> = self
            .renditions
            .iter()
            .map(|r| (r.text_id.as_str(), r.system_id.as_str()))
            .collect();
        let mut covered = HashSet::new();
        for (group, pages) in &self.group_pages {
            if pages.len() != per_group {
                return Err(DesignError::Invalid(format!(
                    "group {group} has an unequal page count"
                )));
            }
            let mut texts = HashSet::new();
            let mut per_system: HashMap<&str, usize> = HashMap::new();
            for p in pages {
                if !texts.insert(p.text_id.as_str()) {
                    return Err(DesignError::Invalid(format!(
                        "group {group} repeats text {:?}",
                        p.text_id
                    )));
                }
                if !renditions.contains(&(p.text_id.as_str(), p.system_id.as_str())) {
                    return Err(DesignError::MissingRendition {
                        text_id: p.text_id.clone(),
                        system_id: p.system_id.clone(),
                    });
                }
                if !covered.insert((p.text_id.as_str(), p.system_id.as_str())) {
                    return Err(DesignError::Invalid(format!(
                        "rendition ({}, {}) appears in more than one group",
                        p.text_id, p.system_id
                    )));
                }
                *per_system.entry(p.system_id.as_str()).or_default() += 1;
            }
            if self
                .systems
                .iter()
                .any(|s| per_system.get(s.as_str()).copied().unwrap_or(0) != per_group / k)
            {
                return Err(DesignError::Invalid(format!(
                    "group {group} is not system-balanced"
                )));
            }
        }
        if covered.len() != self.texts.len() * k || renditions.len() != covered.len() {
            return Err(DesignError::Invalid(
                "groups do not cover every rendition exactly once".into(),
            ));
        }
        Ok(())
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }
}

/// Per-participant presentation order: a seeded permutation of the group's
/// page indices. The stream is derived from `(plan.seed, group,
/// fnv1a64(salt))`.
pub fn page_order(
    plan: &ExperimentPlan,
    group: usize,
    participant_salt: &str,
) -> Result<Vec<usize>, DesignError> {
    let pages = plan
        .group_pages
        .get(&group)
        .ok_or(DesignError::UnknownGroup(group))?;
    let mut order: Vec<usize> = (0..pages.len()).collect();
    SplitMix64::derive(
        plan.seed,
        &[1, group as u64, fnv1a64(participant_salt.as_bytes())],
    )
    .shuffle(&mut order);
    Ok(order)
}

/// Least-loaded group, ties to the lowest index. Groups missing from
/// `joined_counts` count as empty.
pub fn next_group(plan: &ExperimentPlan, joined_counts: &BTreeMap<usize, u64>) -> usize {
    (0..plan.n_groups)
        .min_by_key(|g| (joined_counts.get(g).copied().unwrap_or(0), *g))
        .unwrap_or(0)
}

/// Read an audio map: a JSON array of renditions.
pub fn load_renditions(path: &Path) -> Result<Vec<Rendition>, DesignError> {
    let content = fs::read_to_string(path)?;
    serde_json::from_str(&content).map_err(|e| DesignError::Parse {
        line: e.line(),
        message: e.to_string(),
    })
}
