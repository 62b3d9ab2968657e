//! Text and tabular features for the allocation learner.

mod matrix;
mod sarcasm;
mod tfidf;

pub use matrix::{assemble_features, load_feature_csv, load_text_corpus, FeatureMatrix, FeatureSources, TextCorpus};
pub use sarcasm::{sarcasm_features, sarcasm_matrix, SarcasmLexicon, SarcasmVector, SARCASM_COLUMNS};
pub use tfidf::{tfidf_fit_transform, IdfSmoothing, Normalization, TfIdfMatrix, TfIdfSettings};

/// Split on every non-alphanumeric character. Case is preserved.
pub fn tokenize(text: &str) -> impl Iterator<Item = &str> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizer_splits_on_punctuation() {
        let tokens: Vec<_> = tokenize("She said she'd \"fix\" it lol???").collect();
        assert_eq!(tokens, ["She", "said", "she", "d", "fix", "it", "lol"]);
        let tokens: Vec<_> = tokenize("café·naïve 2016!").collect();
        assert_eq!(tokens, ["café", "naïve", "2016"]);
    }
}
