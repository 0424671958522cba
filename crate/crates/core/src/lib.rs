//! Word-level prosody error marking tests for synthesized speech.
//!
//! The pipeline runs in four stages:
//!
//! * [`stimgen`] builds evaluation texts, either plain transcripts or
//!   question-answer pairs whose answer carries focus on a chosen constituent.
//! * [`expdesign`] binds texts to per-system audio and assigns renditions to
//!   participant groups with a Latin square, so no participant hears the same
//!   text twice while every rendition is heard by one group.
//! * [`collector`] runs participant sessions and keeps an append-only
//!   response log.
//! * [`metrics`] and [`report`] turn the log into per-system scores, error
//!   rates, Krippendorff's alpha, paired t-tests and per-word heatmaps.
//!
//! [`simulate`] provides scripted participants for end-to-end runs.

pub mod collector;
pub mod expdesign;
pub mod metrics;
pub mod report;
pub mod rng;
pub mod simulate;
pub mod stimgen;
pub mod text;

pub use collector::{Collector, CollectorError, ResponsePayload, ResponseRecord, Session};
pub use expdesign::{
    build_plan, next_group, page_order, ExperimentPlan, Rendition, TaskConfig, TaskMode,
};
pub use metrics::{
    AgreementStats, MetricsError, PairwiseTest, StimulusKey, StimulusStats, SystemSummary,
};
pub use report::{analyze, AnalysisReport};
pub use rng::SplitMix64;
pub use simulate::SimProfile;
pub use stimgen::{generate_qa_stimuli, load_text_items, Lexicon, QAStimulus, TextItem, TextMode};
pub use text::tokenize;
