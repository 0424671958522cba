//! Scripted participants for exercising the pipeline without listeners.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, Duration, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collector::{Collector, CollectorError, ResponsePayload};
use crate::expdesign::{page_order, ExperimentPlan, Page, TaskConfig, TaskMode};
use crate::rng::SplitMix64;
use crate::stimgen::TextItem;
use crate::text::ends_with_punctuation;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("participant count must be at least 1")]
    NoParticipants,
    #[error(transparent)]
    Collector(#[from] CollectorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreDist {
    pub mean: f64,
    pub spread: f64,
}

impl Default for ScoreDist {
    fn default() -> Self {
        Self {
            mean: 3.0,
            spread: 1.0,
        }
    }
}

/// How simulated listeners score and mark stimuli.
///
/// Each token is marked with probability
/// `base_mark_rate + focus_bump [focus token] + punctuation_bump [token ends
/// in punctuation] + score_slope * (5 - score) / 4`, clamped to `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimProfile {
    pub systems: BTreeMap<String, ScoreDist>,
    pub default_score: ScoreDist,
    pub base_mark_rate: f64,
    pub focus_bump: f64,
    pub punctuation_bump: f64,
    pub score_slope: f64,
    /// Chance of ticking each error type when at least one token is marked.
    pub error_type_rate: f64,
    pub other_rate: f64,
    pub seed: u64,
}

impl Default for SimProfile {
    fn default() -> Self {
        Self {
            systems: BTreeMap::new(),
            default_score: ScoreDist::default(),
            base_mark_rate: 0.05,
            focus_bump: 0.0,
            punctuation_bump: 0.15,
            score_slope: 0.2,
            error_type_rate: 0.35,
            other_rate: 0.05,
            seed: 0,
        }
    }
}

impl SimProfile {
    /// Distinct score means per system, spaced one point apart and centred
    /// on 3.
    pub fn graded(systems: &[String]) -> Self {
        let k = systems.len() as f64;
        let systems = systems
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let mean = (3.0 + i as f64 - (k - 1.0) / 2.0).clamp(1.0, 5.0);
                (s.clone(), ScoreDist { mean, spread: 0.8 })
            })
            .collect();
        Self {
            systems,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let probs = [
            ("base_mark_rate", self.base_mark_rate),
            ("focus_bump", self.focus_bump),
            ("punctuation_bump", self.punctuation_bump),
            ("score_slope", self.score_slope),
            ("error_type_rate", self.error_type_rate),
            ("other_rate", self.other_rate),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(SimError::InvalidProfile(format!(
                    "{name} = {p} is outside [0, 1]"
                )));
            }
        }
        for (name, d) in std::iter::once(("default_score", &self.default_score))
            .chain(self.systems.iter().map(|(k, v)| (k.as_str(), v)))
        {
            if !d.mean.is_finite() || !d.spread.is_finite() || d.spread < 0.0 {
                return Err(SimError::InvalidProfile(format!(
                    "score distribution for {name}"
                )));
            }
        }
        Ok(())
    }

    pub fn score_for(&self, system_id: &str) -> ScoreDist {
        self.systems
            .get(system_id)
            .copied()
            .unwrap_or(self.default_score)
    }

    pub fn mark_probability(&self, text: &TextItem, token: usize, score: u8) -> f64 {
        let mut p = self.base_mark_rate + self.score_slope * f64::from(5 - score.min(5)) / 4.0;
        if text.focus_token_index == Some(token) {
            p += self.focus_bump;
        }
        if ends_with_punctuation(&text.tokens[token]) {
            p += self.punctuation_bump;
        }
        p.clamp(0.0, 1.0)
    }
}

/// One simulated judgment.
pub fn simulate_response(
    profile: &SimProfile,
    task: &TaskConfig,
    text: &TextItem,
    system_id: &str,
    rng: &mut SplitMix64,
) -> ResponsePayload {
    let dist = profile.score_for(system_id);
    let raw = dist.mean + dist.spread * rng.standard_normal();
    let score = raw.round().clamp(1.0, f64::from(task.scale_points)) as u8;
    let augmented = task.mode == TaskMode::Augmented;
    let marks: Vec<bool> = (0..text.tokens.len())
        .map(|i| augmented && rng.bernoulli(profile.mark_probability(text, i, score)))
        .collect();
    let mut error_types = Vec::new();
    let mut other_text = String::new();
    if augmented && marks.iter().any(|&m| m) {
        for t in &task.error_types {
            if rng.bernoulli(profile.error_type_rate) {
                error_types.push(t.clone());
            }
        }
        if rng.bernoulli(profile.other_rate) {
            other_text = "sounded robotic".to_string();
        }
    }
    let replay_count = 1 + rng.below(u64::from(task.max_replays.max(1))) as u8;
    let elapsed_ms = 4_000 + rng.below(16_000);
    ResponsePayload {
        marks,
        score,
        error_types,
        other_text,
        replay_count: replay_count.min(task.max_replays),
        elapsed_ms,
    }
}

/// RNG for one participant's judgment of the page at `slot` in its group's
/// page list. Keying on the slot rather than the presentation position keeps
/// a cohort's responses independent of each session's page order.
pub fn participant_rng(seed: u64, participant: u64, slot: usize) -> SplitMix64 {
    SplitMix64::derive(seed, &[2, participant, slot as u64])
}

/// 128-bit session id derived from the seed.
pub fn simulated_session_id(seed: u64, participant: u64) -> String {
    let mut rng = SplitMix64::derive(seed, &[3, participant]);
    format!("{:016x}{:016x}", rng.next_u64(), rng.next_u64())
}

/// The page a session with this id sees at position `n`, reconstructed
/// from the plan the same way the collector orders pages.
pub fn expected_page<'a>(
    plan: &'a ExperimentPlan,
    group: usize,
    session_id: &str,
    n: usize,
) -> Option<&'a Page> {
    plan.group_pages
        .get(&group)?
        .get(expected_slot(plan, group, session_id, n)?)
}

/// Index into the group's page list of the page shown at position `n`.
pub fn expected_slot(
    plan: &ExperimentPlan,
    group: usize,
    session_id: &str,
    n: usize,
) -> Option<usize> {
    page_order(plan, group, session_id).ok()?.get(n).copied()
}

/// Fixed clock origin for simulated cohorts.
pub fn simulation_epoch() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2000, 1, 1, 0, 0, 0).unwrap()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimSummary {
    pub participants: usize,
    pub records: usize,
    pub per_group: BTreeMap<usize, u64>,
}

/// Run `participants` scripted listeners straight into a store directory.
/// Timestamps come from a synthetic clock so output is seed-deterministic.
pub fn simulate_into_store(
    plan: ExperimentPlan,
    store_dir: &Path,
    participants: usize,
    profile: &SimProfile,
    seed: u64,
) -> Result<SimSummary, SimError> {
    if participants == 0 {
        return Err(SimError::NoParticipants);
    }
    profile.validate()?;
    let mut collector = Collector::open(plan, store_dir)?;
    let experiment_id = collector.experiment_id().to_string();
    let task = collector.plan().task.clone();
    let mut per_group = BTreeMap::new();
    let mut records = 0;
    for p in 0..participants as u64 {
        let mut clock = simulation_epoch() + Duration::hours(p as i64);
        let session_id = simulated_session_id(seed, p);
        let info = collector.join(&experiment_id, session_id.clone(), clock)?;
        *per_group.entry(info.group).or_insert(0) += 1;
        for n in 0..info.n_pages {
            let slot = collector.session(&session_id)?.page_order[n];
            let view = collector.page(&session_id, n)?;
            let mut rng = participant_rng(seed, p, slot);
            let payload =
                simulate_response(profile, &task, view.text, &view.page.system_id, &mut rng);
            clock += Duration::milliseconds(payload.elapsed_ms as i64);
            collector.submit(&session_id, n, payload, clock)?;
            records += 1;
        }
    }
    Ok(SimSummary {
        participants,
        records,
        per_group,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expdesign::tests::plan;

    #[test]
    fn thirty_participants_fill_three_groups() {
        let dir = tempfile::tempdir().unwrap();
        let summary = simulate_into_store(
            plan(30, 3, 3, 1).unwrap(),
            dir.path(),
            30,
            &SimProfile::default(),
            7,
        )
        .unwrap();
        assert_eq!(summary.records, 900);
        assert!(summary.per_group.values().all(|&n| n == 10));
    }

    #[test]
    fn same_seed_same_log() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let profile = SimProfile::default();
        simulate_into_store(plan(6, 3, 3, 1).unwrap(), a.path(), 4, &profile, 3).unwrap();
        simulate_into_store(plan(6, 3, 3, 1).unwrap(), b.path(), 4, &profile, 3).unwrap();
        let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("responses.jsonl")).unwrap();
        assert_eq!(read(&a), read(&b));
    }

    #[test]
    fn responses_respect_task_limits() {
        let p = plan(3, 3, 3, 1).unwrap();
        let mut rng = SplitMix64::new(5);
        let profile = SimProfile {
            base_mark_rate: 0.5,
            ..SimProfile::default()
        };
        for _ in 0..500 {
            let r = simulate_response(&profile, &p.task, &p.texts[0], "sys0", &mut rng);
            assert!((1..=5).contains(&r.score));
            assert!((1..=3).contains(&r.replay_count));
            assert_eq!(r.marks.len(), p.texts[0].tokens.len());
        }
        let mos = TaskConfig::mos_only();
        for _ in 0..100 {
            let r = simulate_response(&profile, &mos, &p.texts[0], "sys0", &mut rng);
            assert!(r.marks.iter().all(|&m| !m));
            assert!(r.error_types.is_empty());
        }
    }

    #[test]
    fn profile_validation() {
        let bad = SimProfile {
            punctuation_bump: 1.5,
            ..SimProfile::default()
        };
        assert!(bad.validate().is_err());
        assert!(SimProfile::default().validate().is_ok());
    }

    #[test]
    fn session_ids_are_128_bit_hex() {
        let id = simulated_session_id(1, 2);
        assert_eq!(id.len(), 32);
        assert_ne!(id, simulated_session_id(1, 3));
    }
}
