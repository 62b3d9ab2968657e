use serde::{Deserialize, Serialize};

use super::{tokenize, FeatureMatrix};
use crate::error::Result;

pub const SARCASM_COLUMNS: [&str; 7] =
    ["quotes", "marks", "all_caps", "emoticons", "lingo", "yet_sudden", "comparison"];

/// Seven presence flags, in the order of [`SARCASM_COLUMNS`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SarcasmVector(pub [bool; 7]);

impl SarcasmVector {
    pub fn quotes(&self) -> bool {
        self.0[0]
    }

    pub fn all_caps(&self) -> bool {
        self.0[2]
    }

    pub fn as_numeric(&self) -> [f64; 7] {
        self.0.map(|f| if f { 1.0 } else { 0.0 })
    }

    pub fn as_bits(&self) -> [u8; 7] {
        self.0.map(u8::from)
    }
}

/// Word lists behind the emoticon, lingo, yet/sudden and comparison flags.
/// All matching is case-insensitive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SarcasmLexicon {
    pub emoticons: Vec<String>,
    pub lingo: Vec<String>,
    pub contrast: Vec<String>,
    pub comparison: Vec<String>,
}

impl Default for SarcasmLexicon {
    fn default() -> Self {
        let owned = |words: &[&str]| words.iter().map(|w| w.to_string()).collect();
        SarcasmLexicon {
            emoticons: owned(&[":)", ":(", ":-)", ":-(", ";)", ":D", ":P"]),
            lingo: owned(&["ahah", "haha", "lol", "rofl", "omg", "eww", "lmao", "smh"]),
            contrast: owned(&["yet", "sudden"]),
            comparison: owned(&["like", "would"]),
        }
    }
}

impl SarcasmLexicon {
    pub fn detect(&self, text: &str) -> SarcasmVector {
        let lowered: Vec<String> = tokenize(text).map(str::to_lowercase).collect();
        let has_word = |list: &[String]| lowered.iter().any(|t| list.iter().any(|w| w.eq_ignore_ascii_case(t)));

        SarcasmVector([
            has_quotes(text),
            text.contains(['?', '!', '…']) || text.contains("..."),
            has_all_caps_word(text),
            self.emoticons.iter().any(|e| contains_emoticon(text, e)),
            has_word(&self.lingo),
            has_word(&self.contrast),
            has_word(&self.comparison),
        ])
    }
}

pub fn sarcasm_features(text: &str) -> SarcasmVector {
    SarcasmLexicon::default().detect(text)
}

/// Sarcasm flags as a seven-column matrix.
pub fn sarcasm_matrix(sample_ids: Vec<String>, vectors: &[SarcasmVector]) -> Result<FeatureMatrix> {
    FeatureMatrix::new(
        sample_ids,
        SARCASM_COLUMNS.iter().map(|c| c.to_string()).collect(),
        vectors.iter().map(|v| v.as_numeric().to_vec()).collect(),
    )
}

fn has_quotes(text: &str) -> bool {
    if text.matches('"').count() >= 2 {
        return true;
    }
    if let Some(open) = text.find('“') {
        if text[open..].contains('”') {
            return true;
        }
    }
    single_quote_pair(text)
}

/// A `'` that opens a word (start of text or after whitespace/punctuation)
/// followed later by a `'` that closes one. Apostrophes inside words such as
/// `she'd` do not count.
fn single_quote_pair(text: &str) -> bool {
    let chars: Vec<char> = text.chars().collect();
    let is_word = |c: Option<&char>| c.is_some_and(|c| c.is_alphanumeric());
    let mut opened = false;
    for i in 0..chars.len() {
        if chars[i] != '\'' {
            continue;
        }
        let before = if i == 0 { None } else { chars.get(i - 1) };
        let after = chars.get(i + 1);
        if !opened {
            if !is_word(before) && is_word(after) {
                opened = true;
            }
        } else if is_word(before) && !is_word(after) {
            return true;
        }
    }
    false
}

fn has_all_caps_word(text: &str) -> bool {
    text.split_whitespace().any(|raw| {
        let word = raw.trim_matches(|c: char| !c.is_alphanumeric());
        word.len() >= 2 && word.chars().all(|c| c.is_ascii_uppercase())
    })
}

fn contains_emoticon(text: &str, emoticon: &str) -> bool {
    let lower_text = text.to_lowercase();
    let lower_emoticon = emoticon.to_lowercase();
    let mut from = 0;
    while let Some(pos) = lower_text[from..].find(&lower_emoticon) {
        let start = from + pos;
        let end = start + lower_emoticon.len();
        let before = lower_text[..start].chars().next_back();
        let after = lower_text[end..].chars().next();
        let boundary = |c: Option<char>| !c.is_some_and(|c| c.is_alphanumeric());
        if boundary(before) && boundary(after) {
            return true;
        }
        from = start + lower_emoticon.chars().next().map_or(1, char::len_utf8);
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quoted_lingo_with_marks() {
        let v = sarcasm_features("She said she'd \"fix\" it lol???");
        assert_eq!(v.as_bits(), [1, 1, 0, 0, 1, 0, 0]);
    }

    #[test]
    fn plain_statement() {
        assert_eq!(sarcasm_features("Calm factual statement.").as_bits(), [0; 7]);
    }

    #[test]
    fn caps_contrast_comparison() {
        let v = sarcasm_features("He acts like a WINNER... sudden change?");
        assert_eq!(v.as_bits(), [0, 1, 1, 0, 0, 1, 1]);
    }

    #[test]
    fn quote_styles() {
        assert!(sarcasm_features("the “best” plan").quotes());
        assert!(sarcasm_features("so 'presidential' of him").quotes());
        assert!(!sarcasm_features("don't won't can't").quotes());
        assert!(!sarcasm_features("a single \" mark").quotes());
    }

    #[test]
    fn emoticons_need_boundaries() {
        assert_eq!(sarcasm_features("great debate :)").as_bits()[3], 1);
        assert_eq!(sarcasm_features("so funny :P").as_bits()[3], 1);
        assert_eq!(sarcasm_features("Note:Data matters").as_bits()[3], 0);
    }

    #[test]
    fn lingo_matches_whole_tokens_only() {
        assert_eq!(sarcasm_features("LOL ok").as_bits()[4], 1);
        assert_eq!(sarcasm_features("lollipop").as_bits()[4], 0);
        assert_eq!(sarcasm_features("lookalike").as_bits()[6], 0);
    }

    #[test]
    fn single_letter_capitals_are_not_shouting() {
        assert!(!sarcasm_features("I am A person").all_caps());
        assert!(sarcasm_features("this is SAD!").all_caps());
    }

    #[test]
    fn custom_lexicon() {
        let lexicon = SarcasmLexicon { lingo: vec!["yikes".into()], ..SarcasmLexicon::default() };
        assert_eq!(lexicon.detect("yikes").as_bits()[4], 1);
        assert_eq!(lexicon.detect("lol").as_bits()[4], 0);
    }

    use proptest::prelude::*;

    proptest! {
        #[test]
        fn lowercasing_only_clears_caps(text in "[ A-Za-z:;()'\".!?]{0,40}") {
            let original = sarcasm_features(&text);
            let lowered = sarcasm_features(&text.to_lowercase());
            for i in 0..7 {
                if i == 2 {
                    prop_assert!(!lowered.0[i] || original.0[i]);
                } else {
                    prop_assert_eq!(lowered.0[i], original.0[i]);
                }
            }
            prop_assert_eq!(sarcasm_features(&text), original);
        }
    }
}
