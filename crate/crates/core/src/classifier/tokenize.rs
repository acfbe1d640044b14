use serde::{Deserialize, Serialize};

/// One token occurrence. `position` is its 0-based index in the sentence,
/// so repeated words stay distinct.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub position: usize,
}

/// Byte offset and slice of every maximal run of Unicode letters/digits.
pub fn word_spans(text: &str) -> impl Iterator<Item = (usize, &str)> + '_ {
    let mut chars = text.char_indices().peekable();
    std::iter::from_fn(move || {
        let start = loop {
            let (i, c) = chars.next()?;
            if c.is_alphanumeric() {
                break i;
            }
        };
        let mut end = text.len();
        while let Some(&(i, c)) = chars.peek() {
            if !c.is_alphanumeric() {
                end = i;
                break;
            }
            chars.next();
        }
        Some((start, &text[start..end]))
    })
}

/// Case-preserving tokenization shared by the classifier and the explainers.
pub fn tokenize(text: &str) -> Vec<Token> {
    word_spans(text).enumerate().map(|(position, (_, w))| Token { text: w.to_string(), position }).collect()
}

/// Lowercased tokens used as classifier features.
pub fn feature_tokens(text: &str) -> Vec<String> {
    word_spans(text).map(|(_, w)| w.to_lowercase()).collect()
}
