//! Transcript tokenization. Tokens are the clickable words of a page.

use crate::stimgen::StimgenError;

/// Characters that mark a token as preceding punctuation.
pub const TRAILING_PUNCTUATION: [char; 10] = [',', '.', '!', '?', ';', ':', '—', '\'', '"', ')'];

/// Split a transcript on runs of whitespace. Punctuation stays attached to
/// its word, so `"No, John"` yields `["No,", "John"]`.
pub fn tokenize(transcript: &str) -> Result<Vec<String>, StimgenError> {
    let tokens: Vec<String> = transcript.split_whitespace().map(str::to_owned).collect();
    if tokens.is_empty() {
        return Err(StimgenError::EmptyTranscript);
    }
    Ok(tokens)
}

/// Whitespace-normalized form: tokens joined by single spaces.
pub fn normalize(transcript: &str) -> String {
    transcript.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn ends_with_punctuation(token: &str) -> bool {
    token
        .chars()
        .next_back()
        .is_some_and(|c| TRAILING_PUNCTUATION.contains(&c))
}
