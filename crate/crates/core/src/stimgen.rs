//! Evaluation texts: plain transcripts (audiobook mode) and template-built
//! question-answer pairs with a controlled focus position (dialogue mode).
//!
//! Question-answer generation works cell by cell over
//! `structure x focus` (structure outer, focus inner, both in declaration
//! order). Each cell draws `per_position` distinct `(subject, verb, object)`
//! index triples from a [`SplitMix64`] stream derived from
//! `(seed, structure, focus)`: a draw `k = below(|S|*|V|*|O|)` decodes to
//! `s = k / (|V|*|O|)`, `v = (k / |O|) % |V|`, `o = k % |O|`, and repeated
//! triples are redrawn. Corrective cells then draw one distractor for the
//! focused slot with `r = below(n - 1)`, taking `r` if `r < answer` and
//! `r + 1` otherwise.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::SplitMix64;
use crate::text::{normalize, tokenize};

/// Longest transcript allowed in audiobook mode, in words.
pub const MAX_AUDIOBOOK_WORDS: usize = 15;

#[derive(Debug, Error)]
pub enum StimgenError {
    #[error("lexicon too small: {needed} distinct subject-verb-object combinations needed per cell, {available} available")]
    LexiconTooSmall { needed: usize, available: usize },
    #[error("invalid count: per_position must be at least 1")]
    InvalidCount,
    #[error("invalid lexicon: {0}")]
    InvalidLexicon(String),
    #[error("empty transcript")]
    EmptyTranscript,
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invariant violation in item {id:?}: {reason}")]
    InvariantViolation { id: String, reason: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Word lists for Subject-Verb-Object templates. Objects are rendered with
/// the determiner "the".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lexicon {
    pub subjects: Vec<String>,
    /// `(base form, past form)` pairs.
    pub verbs: Vec<(String, String)>,
    pub objects: Vec<String>,
}

impl Lexicon {
    /// Built-in lexicon of names, food-and-household verbs and nouns.
    pub fn default_english() -> Self {
        let owned = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        Self {
            subjects: owned(&["Mary", "Anna", "John", "David", "Emma", "Peter"]),
            verbs: [
                ("bake", "baked"),
                ("bring", "brought"),
                ("eat", "ate"),
                ("find", "found"),
                ("sell", "sold"),
                ("buy", "bought"),
            ]
            .iter()
            .map(|(b, p)| (b.to_string(), p.to_string()))
            .collect(),
            objects: owned(&["apples", "soup", "bread", "cake", "cookies", "pie"]),
        }
    }

    pub fn from_json(json: &str) -> Result<Self, StimgenError> {
        let lexicon: Lexicon = serde_json::from_str(json).map_err(|e| StimgenError::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        lexicon.validate()?;
        Ok(lexicon)
    }

    pub fn validate(&self) -> Result<(), StimgenError> {
        fn check_list<'a>(
            name: &str,
            items: impl ExactSizeIterator<Item = &'a str>,
        ) -> Result<(), StimgenError> {
            let n = items.len();
            if n < 2 {
                return Err(StimgenError::InvalidLexicon(format!(
                    "{name} needs at least 2 entries, got {n}"
                )));
            }
            let mut seen = HashSet::new();
            for item in items {
                if item.trim().is_empty() || item.split_whitespace().count() != 1 {
                    return Err(StimgenError::InvalidLexicon(format!(
                        "{name} entry {item:?} must be a single word"
                    )));
                }
                if !seen.insert(item) {
                    return Err(StimgenError::InvalidLexicon(format!(
                        "duplicate {name} entry {item:?}"
                    )));
                }
            }
            Ok(())
        }
        check_list("subjects", self.subjects.iter().map(String::as_str))?;
        check_list("verbs", self.verbs.iter().map(|(b, _)| b.as_str()))?;
        check_list("objects", self.objects.iter().map(String::as_str))?;
        for (base, past) in &self.verbs {
            if base == past {
                return Err(StimgenError::InvalidLexicon(format!(
                    "verb {base:?} has identical base and past forms"
                )));
            }
            if past.split_whitespace().count() != 1 {
                return Err(StimgenError::InvalidLexicon(format!(
                    "past form {past:?} must be a single word"
                )));
            }
        }
        Ok(())
    }

    fn combinations(&self) -> usize {
        self.subjects.len() * self.verbs.len() * self.objects.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FocusPosition {
    Subject,
    Verb,
    Object,
}

impl FocusPosition {
    pub const ALL: [FocusPosition; 3] = [Self::Subject, Self::Verb, Self::Object];

    fn short(self) -> &'static str {
        match self {
            Self::Subject => "subj",
            Self::Verb => "verb",
            Self::Object => "obj",
        }
    }
}

impl fmt::Display for FocusPosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StimulusStructure {
    Informational,
    Corrective,
}

impl StimulusStructure {
    pub const ALL: [StimulusStructure; 2] = [Self::Informational, Self::Corrective];

    fn short(self) -> &'static str {
        match self {
            Self::Informational => "inf",
            Self::Corrective => "cor",
        }
    }
}

impl fmt::Display for StimulusStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A context question and the answer that is synthesized and marked.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAStimulus {
    pub id: String,
    pub structure: StimulusStructure,
    pub focus: FocusPosition,
    pub question_text: String,
    pub answer_text: String,
    pub answer_tokens: Vec<String>,
    pub focus_token_index: usize,
}

/// A transcript as presented on a page.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextItem {
    pub id: String,
    pub transcript: String,
    pub tokens: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_question: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub focus_token_index: Option<usize>,
    pub word_count: usize,
}

impl TextItem {
    /// Audiobook-mode item from a raw transcript.
    pub fn plain(id: impl Into<String>, transcript: &str) -> Result<Self, StimgenError> {
        let tokens = tokenize(transcript)?;
        Ok(Self {
            id: id.into(),
            transcript: normalize(transcript),
            word_count: tokens.len(),
            tokens,
            context_question: None,
            focus_token_index: None,
        })
    }

    pub fn validate(&self, mode: TextMode) -> Result<(), StimgenError> {
        let violation = |reason: String| StimgenError::InvariantViolation {
            id: self.id.clone(),
            reason,
        };
        if self.id.is_empty() {
            return Err(violation("empty id".into()));
        }
        let expected =
            tokenize(&self.transcript).map_err(|_| violation("empty transcript".into()))?;
        if expected != self.tokens {
            return Err(violation(
                "tokens do not match the whitespace split of the transcript".into(),
            ));
        }
        if self.word_count != self.tokens.len() {
            return Err(violation(format!(
                "word_count {} differs from token count {}",
                self.word_count,
                self.tokens.len()
            )));
        }
        match mode {
            TextMode::Audiobook => {
                if self.word_count > MAX_AUDIOBOOK_WORDS {
                    return Err(violation(format!(
                        "{} words exceeds the audiobook limit of {MAX_AUDIOBOOK_WORDS}",
                        self.word_count
                    )));
                }
                if self.context_question.is_some() || self.focus_token_index.is_some() {
                    return Err(violation(
                        "audiobook items carry no context question or focus index".into(),
                    ));
                }
            }
            TextMode::Dialogue => match (&self.context_question, self.focus_token_index) {
                (Some(q), Some(focus)) => {
                    if q.trim().is_empty() {
                        return Err(violation("empty context question".into()));
                    }
                    if focus >= self.word_count {
                        return Err(violation(format!(
                            "focus_token_index {focus} out of range for {} tokens",
                            self.word_count
                        )));
                    }
                }
                _ => {
                    return Err(violation(
                        "dialogue items need context_question and focus_token_index".into(),
                    ))
                }
            },
        }
        Ok(())
    }
}

impl From<&QAStimulus> for TextItem {
    fn from(qa: &QAStimulus) -> Self {
        Self {
            id: qa.id.clone(),
            transcript: qa.answer_text.clone(),
            tokens: qa.answer_tokens.clone(),
            context_question: Some(qa.question_text.clone()),
            focus_token_index: Some(qa.focus_token_index),
            word_count: qa.answer_tokens.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TextMode {
    Audiobook,
    Dialogue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Triple {
    subject: usize,
    verb: usize,
    object: usize,
}

impl Triple {
    fn slot(&self, focus: FocusPosition) -> usize {
        match focus {
            FocusPosition::Subject => self.subject,
            FocusPosition::Verb => self.verb,
            FocusPosition::Object => self.object,
        }
    }

    fn with_slot(mut self, focus: FocusPosition, value: usize) -> Self {
        match focus {
            FocusPosition::Subject => self.subject = value,
            FocusPosition::Verb => self.verb = value,
            FocusPosition::Object => self.object = value,
        }
        self
    }
}

/// Build `per_position` stimuli for each of the six (structure, focus) cells.
pub fn generate_qa_stimuli(
    lexicon: &Lexicon,
    per_position: usize,
    seed: u64,
) -> Result<Vec<QAStimulus>, StimgenError> {
    if per_position < 1 {
        return Err(StimgenError::InvalidCount);
    }
    lexicon.validate()?;
    let available = lexicon.combinations();
    if per_position > available {
        return Err(StimgenError::LexiconTooSmall {
            needed: per_position,
            available,
        });
    }

    let n_verbs = lexicon.verbs.len();
    let n_objects = lexicon.objects.len();
    let mut out = Vec::with_capacity(per_position * 6);
    for (si, structure) in StimulusStructure::ALL.into_iter().enumerate() {
        for (fi, focus) in FocusPosition::ALL.into_iter().enumerate() {
            let mut rng = SplitMix64::derive(seed, &[si as u64, fi as u64]);
            let mut seen = HashSet::with_capacity(per_position);
            let mut k = 0;
            while k < per_position {
                let draw = rng.below_usize(available);
                if !seen.insert(draw) {
                    continue;
                }
                let answer = Triple {
                    subject: draw / (n_verbs * n_objects),
                    verb: (draw / n_objects) % n_verbs,
                    object: draw % n_objects,
                };
                k += 1;
                let id = format!("{}-{}-{:02}", structure.short(), focus.short(), k);
                let stimulus = match structure {
                    StimulusStructure::Informational => informational(lexicon, id, focus, answer),
                    StimulusStructure::Corrective => {
                        let category_len = match focus {
                            FocusPosition::Subject => lexicon.subjects.len(),
                            FocusPosition::Verb => n_verbs,
                            FocusPosition::Object => n_objects,
                        };
                        let r = rng.below_usize(category_len - 1);
                        let actual = answer.slot(focus);
                        let distractor = if r < actual { r } else { r + 1 };
                        corrective(
                            lexicon,
                            id,
                            focus,
                            answer,
                            answer.with_slot(focus, distractor),
                        )
                    }
                };
                out.push(stimulus);
            }
        }
    }
    Ok(out)
}

fn informational(
    lexicon: &Lexicon,
    id: String,
    focus: FocusPosition,
    answer: Triple,
) -> QAStimulus {
    let subject = &lexicon.subjects[answer.subject];
    let (base, past) = &lexicon.verbs[answer.verb];
    let object = &lexicon.objects[answer.object];
    let question_text = match focus {
        FocusPosition::Subject => format!("Who {past} the {object}?"),
        FocusPosition::Verb => format!("What did {subject} do with the {object}?"),
        FocusPosition::Object => format!("What did {subject} {base}?"),
    };
    let answer_text = format!("{subject} {past} the {object}.");
    let focus_token_index = match focus {
        FocusPosition::Subject => 0,
        FocusPosition::Verb => 1,
        FocusPosition::Object => 3,
    };
    build(
        id,
        StimulusStructure::Informational,
        focus,
        question_text,
        answer_text,
        focus_token_index,
    )
}

fn corrective(
    lexicon: &Lexicon,
    id: String,
    focus: FocusPosition,
    answer: Triple,
    asked: Triple,
) -> QAStimulus {
    let (_, past) = &lexicon.verbs[answer.verb];
    let question_text = format!(
        "Did {} {} the {}?",
        lexicon.subjects[asked.subject], lexicon.verbs[asked.verb].0, lexicon.objects[asked.object]
    );
    let answer_text = format!(
        "No, {} {past} the {}.",
        lexicon.subjects[answer.subject], lexicon.objects[answer.object]
    );
    let focus_token_index = match focus {
        FocusPosition::Subject => 1,
        FocusPosition::Verb => 2,
        FocusPosition::Object => 4,
    };
    build(
        id,
        StimulusStructure::Corrective,
        focus,
        question_text,
        answer_text,
        focus_token_index,
    )
}

fn build(
    id: String,
    structure: StimulusStructure,
    focus: FocusPosition,
    question_text: String,
    answer_text: String,
    focus_token_index: usize,
) -> QAStimulus {
    let answer_tokens = answer_text.split_whitespace().map(str::to_owned).collect();
    QAStimulus {
        id,
        structure,
        focus,
        question_text,
        answer_text,
        answer_tokens,
        focus_token_index,
    }
}

/// One entry of a stimulus file: either a question-answer pair or a text item.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum FileEntry {
    Qa(QAStimulus),
    Text(RawTextItem),
}

#[derive(Debug, Deserialize)]
struct RawTextItem {
    id: String,
    transcript: String,
    #[serde(default)]
    tokens: Option<Vec<String>>,
    #[serde(default)]
    context_question: Option<String>,
    #[serde(default)]
    focus_token_index: Option<usize>,
    #[serde(default)]
    word_count: Option<usize>,
}

/// Load evaluation texts.
///
/// A file whose first non-blank character is `[` is read as a JSON array of
/// text items or question-answer stimuli. Anything else is read as one
/// transcript per line, optionally prefixed by `id<TAB>`; blank lines are
/// skipped and unprefixed lines get ids `t001`, `t002`, ...
pub fn load_text_items(path: &Path, mode: TextMode) -> Result<Vec<TextItem>, StimgenError> {
    let content = fs::read_to_string(path)?;
    parse_text_items(&content, mode)
}

pub fn parse_text_items(content: &str, mode: TextMode) -> Result<Vec<TextItem>, StimgenError> {
    let items = if content.trim_start().starts_with('[') {
        let entries: Vec<FileEntry> =
            serde_json::from_str(content).map_err(|e| StimgenError::Parse {
                line: e.line(),
                message: e.to_string(),
            })?;
        entries
            .into_iter()
            .map(|entry| match entry {
                FileEntry::Qa(qa) => Ok(TextItem::from(&qa)),
                FileEntry::Text(raw) => {
                    let tokens = match raw.tokens {
                        Some(t) => t,
                        None => tokenize(&raw.transcript).map_err(|_| {
                            StimgenError::InvariantViolation {
                                id: raw.id.clone(),
                                reason: "empty transcript".into(),
                            }
                        })?,
                    };
                    Ok(TextItem {
                        id: raw.id,
                        word_count: raw.word_count.unwrap_or(tokens.len()),
                        transcript: raw.transcript,
                        tokens,
                        context_question: raw.context_question,
                        focus_token_index: raw.focus_token_index,
                    })
                }
            })
            .collect::<Result<Vec<_>, StimgenError>>()?
    } else {
        let mut items = Vec::new();
        for (lineno, line) in content.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (id, transcript) = match line.split_once('\t') {
                Some((id, rest)) => (id.trim().to_string(), rest),
                None => (format!("t{:03}", items.len() + 1), line),
            };
            if id.is_empty() {
                return Err(StimgenError::Parse {
                    line: lineno + 1,
                    message: "empty id before tab".into(),
                });
            }
            let item = TextItem::plain(id, transcript).map_err(|_| StimgenError::Parse {
                line: lineno + 1,
                message: "empty transcript".into(),
            })?;
            items.push(item);
        }
        items
    };

    let mut ids = HashSet::new();
    for item in &items {
        item.validate(mode)?;
        if !ids.insert(item.id.as_str()) {
            return Err(StimgenError::InvariantViolation {
                id: item.id.clone(),
                reason: "duplicate id".into(),
            });
        }
    }
    Ok(items)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell_counts(stimuli: &[QAStimulus]) -> Vec<((StimulusStructure, FocusPosition), usize)> {
        let mut counts = std::collections::BTreeMap::new();
        for s in stimuli {
            *counts.entry((s.structure, s.focus)).or_insert(0) += 1;
        }
        counts.into_iter().collect()
    }

    #[test]
    fn sixty_stimuli_ten_per_cell() {
        let stimuli = generate_qa_stimuli(&Lexicon::default_english(), 10, 1).unwrap();
        assert_eq!(stimuli.len(), 60);
        let cells = cell_counts(&stimuli);
        assert_eq!(cells.len(), 6);
        assert!(cells.iter().all(|(_, n)| *n == 10));
    }

    #[test]
    fn object_informational_contains_cake_example() {
        let stimuli = generate_qa_stimuli(&Lexicon::default_english(), 10, 1).unwrap();
        let hit = stimuli
            .iter()
            .find(|s| {
                s.question_text == "What did Mary eat?" && s.answer_text == "Mary ate the cake."
            })
            .expect("example pair present");
        assert_eq!(hit.structure, StimulusStructure::Informational);
        assert_eq!(hit.focus, FocusPosition::Object);
        assert_eq!(hit.focus_token_index, 3);
        assert_eq!(hit.answer_tokens[3], "cake.");
    }

    #[test]
    fn subject_corrective_contains_cookies_example() {
        let stimuli = generate_qa_stimuli(&Lexicon::default_english(), 10, 1).unwrap();
        let hit = stimuli
            .iter()
            .find(|s| {
                s.question_text == "Did Mary buy the cookies?"
                    && s.answer_text == "No, John bought the cookies."
            })
            .expect("example pair present");
        assert_eq!(hit.structure, StimulusStructure::Corrective);
        assert_eq!(hit.focus, FocusPosition::Subject);
        assert_eq!(hit.focus_token_index, 1);
    }

    #[test]
    fn question_templates() {
        let lex = Lexicon::default_english();
        let subject = lex.subjects.iter().position(|s| s == "Mary").unwrap();
        let verb = lex.verbs.iter().position(|(b, _)| b == "eat").unwrap();
        let object = lex.objects.iter().position(|o| o == "cake").unwrap();
        let cookies = lex.objects.iter().position(|o| o == "cookies").unwrap();
        let t = Triple {
            subject,
            verb,
            object,
        };
        let s = informational(&lex, "x".into(), FocusPosition::Subject, t);
        assert_eq!(s.question_text, "Who ate the cake?");
        let s = informational(&lex, "x".into(), FocusPosition::Verb, t);
        assert_eq!(s.question_text, "What did Mary do with the cake?");
        assert_eq!(s.focus_token_index, 1);
        let s = corrective(
            &lex,
            "x".into(),
            FocusPosition::Object,
            t,
            t.with_slot(FocusPosition::Object, cookies),
        );
        assert_eq!(s.question_text, "Did Mary eat the cookies?");
        assert_eq!(s.answer_text, "No, Mary ate the cake.");
        assert_eq!(s.answer_tokens[s.focus_token_index], "cake.");
    }

    #[test]
    fn zero_count_rejected() {
        assert!(matches!(
            generate_qa_stimuli(&Lexicon::default_english(), 0, 1),
            Err(StimgenError::InvalidCount)
        ));
    }

    #[test]
    fn small_lexicon_rejected() {
        let lex = Lexicon {
            subjects: vec!["A".into(), "B".into()],
            verbs: vec![("x".into(), "xed".into()), ("y".into(), "yed".into())],
            objects: vec!["o".into(), "p".into()],
        };
        assert!(generate_qa_stimuli(&lex, 8, 0).is_ok());
        assert!(matches!(
            generate_qa_stimuli(&lex, 9, 0),
            Err(StimgenError::LexiconTooSmall {
                needed: 9,
                available: 8
            })
        ));
    }

    #[test]
    fn lexicon_validation() {
        let mut lex = Lexicon::default_english();
        lex.subjects.truncate(1);
        assert!(lex.validate().is_err());
        let mut lex = Lexicon::default_english();
        lex.objects.push("cake".into());
        assert!(lex.validate().is_err());
        let mut lex = Lexicon::default_english();
        lex.verbs.push(("put".into(), "put".into()));
        assert!(lex.validate().is_err());
    }

    #[test]
    fn lexicon_json_shape() {
        let lex = Lexicon::from_json(
            r#"{"subjects":["Mary","John"],"verbs":[["eat","ate"],["buy","bought"]],"objects":["cake","cookies"]}"#,
        )
        .unwrap();
        assert_eq!(lex.verbs[1], ("buy".to_string(), "bought".to_string()));
    }

    #[test]
    fn plain_lines_load_as_audiobook() {
        let content: String = (1..=30)
            .map(|i| format!("Sentence number {i} is here.\n"))
            .collect();
        let items = parse_text_items(&content, TextMode::Audiobook).unwrap();
        assert_eq!(items.len(), 30);
        assert!(items
            .iter()
            .all(|i| i.context_question.is_none() && i.focus_token_index.is_none()));
        assert_eq!(items[0].id, "t001");
        assert_eq!(items[29].id, "t030");
    }

    #[test]
    fn sixteen_words_rejected() {
        let long = (0..16)
            .map(|i| format!("w{i}"))
            .collect::<Vec<_>>()
            .join(" ");
        let content = format!("ok\tshort one.\nlong\t{long}\n");
        match parse_text_items(&content, TextMode::Audiobook) {
            Err(StimgenError::InvariantViolation { id, .. }) => assert_eq!(id, "long"),
            other => panic!("expected violation, got {other:?}"),
        }
        let fifteen = (0..15)
            .map(|i| format!("w{i}"))
            .collect::<Vec<_>>()
            .join(" ");
        assert!(parse_text_items(&fifteen, TextMode::Audiobook).is_ok());
    }

    #[test]
    fn dialogue_file_round_trips() {
        let stimuli = generate_qa_stimuli(&Lexicon::default_english(), 2, 9).unwrap();
        let json = serde_json::to_string_pretty(&stimuli).unwrap();
        let items = parse_text_items(&json, TextMode::Dialogue).unwrap();
        assert_eq!(items.len(), stimuli.len());
        for (item, qa) in items.iter().zip(&stimuli) {
            assert_eq!(
                item.context_question.as_deref(),
                Some(qa.question_text.as_str())
            );
            assert_eq!(item.focus_token_index, Some(qa.focus_token_index));
            assert_eq!(item.tokens, qa.answer_tokens);
        }
        let again =
            parse_text_items(&serde_json::to_string(&items).unwrap(), TextMode::Dialogue).unwrap();
        assert_eq!(again, items);
    }

    #[test]
    fn dialogue_items_rejected_in_audiobook_mode() {
        let stimuli = generate_qa_stimuli(&Lexicon::default_english(), 1, 9).unwrap();
        let json = serde_json::to_string(&stimuli).unwrap();
        assert!(matches!(
            parse_text_items(&json, TextMode::Audiobook),
            Err(StimgenError::InvariantViolation { .. })
        ));
        let plain = "just words here\n";
        assert!(parse_text_items(plain, TextMode::Dialogue).is_err());
    }

    #[test]
    fn malformed_json_reports_line() {
        let content = "[\n{\"id\": \"a\", \"transcript\": \"x y\"},\n{\"id\": 3}\n]";
        match parse_text_items(content, TextMode::Audiobook) {
            Err(StimgenError::Parse { line, .. }) => assert!(line >= 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_ids_rejected() {
        let content = "a\tone two\na\tthree four\n";
        assert!(matches!(
            parse_text_items(content, TextMode::Audiobook),
            Err(StimgenError::InvariantViolation { .. })
        ));
    }
}
