use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{tokenize, FeatureMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IdfSmoothing {
    /// `ln((1 + N) / (1 + df)) + 1`
    #[default]
    Smooth,
    /// `ln(N / df) + 1`
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    #[default]
    L2,
    L1,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TfIdfSettings {
    pub smoothing: IdfSmoothing,
    pub normalization: Normalization,
    /// Keep only the most frequent terms (by total corpus count, ties alphabetical).
    pub max_features: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfIdfMatrix {
    /// Terms in column order (alphabetical).
    pub vocabulary: Vec<String>,
    pub idf: Vec<f64>,
    /// Sparse `(column, weight)` pairs per document, columns ascending.
    pub rows: Vec<Vec<(usize, f64)>>,
    pub settings: TfIdfSettings,
}

impl TfIdfMatrix {
    pub fn weight(&self, row: usize, term: &str) -> f64 {
        let Ok(col) = self.vocabulary.binary_search_by(|t| t.as_str().cmp(term)) else { return 0.0 };
        self.rows[row].iter().find(|(c, _)| *c == col).map_or(0.0, |(_, w)| *w)
    }

    /// Term-to-column map for reproducible re-transformation.
    pub fn vocabulary_json(&self) -> serde_json::Value {
        let map: BTreeMap<&str, usize> = self.vocabulary.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
        serde_json::json!({ "vocabulary": map, "idf": self.idf, "settings": self.settings })
    }

    pub fn to_feature_matrix(&self, sample_ids: Vec<String>) -> Result<FeatureMatrix> {
        let dense = self
            .rows
            .iter()
            .map(|row| {
                let mut out = vec![0.0; self.vocabulary.len()];
                for &(c, w) in row {
                    out[c] = w;
                }
                out
            })
            .collect();
        FeatureMatrix::new(sample_ids, self.vocabulary.clone(), dense)
    }
}

/// Raw term counts weighted by inverse document frequency. Tokens are
/// lowercased; no stemming or stop words.
pub fn tfidf_fit_transform<S: AsRef<str>>(corpus: &[S], settings: TfIdfSettings) -> Result<TfIdfMatrix> {
    if corpus.is_empty() {
        return Err(Error::validation("tf-idf needs a non-empty corpus"));
    }
    let docs: Vec<HashMap<String, usize>> = corpus
        .iter()
        .map(|doc| {
            let mut counts = HashMap::new();
            for token in tokenize(doc.as_ref()) {
                *counts.entry(token.to_lowercase()).or_insert(0) += 1;
            }
            counts
        })
        .collect();

    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    let mut total: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in &docs {
        for (term, &count) in doc {
            *df.entry(term).or_default() += 1;
            *total.entry(term).or_default() += count;
        }
    }

    let mut vocabulary: Vec<&str> = df.keys().copied().collect();
    if let Some(limit) = settings.max_features {
        let mut ranked = vocabulary.clone();
        ranked.sort_by(|a, b| total[b].cmp(&total[a]).then_with(|| a.cmp(b)));
        ranked.truncate(limit);
        ranked.sort_unstable();
        vocabulary = ranked;
    }
    let column: HashMap<&str, usize> = vocabulary.iter().enumerate().map(|(i, t)| (*t, i)).collect();

    let n = docs.len() as f64;
    let idf: Vec<f64> = vocabulary
        .iter()
        .map(|t| {
            let df = df[t] as f64;
            match settings.smoothing {
                IdfSmoothing::Smooth => ((1.0 + n) / (1.0 + df)).ln() + 1.0,
                IdfSmoothing::Raw => (n / df).ln() + 1.0,
            }
        })
        .collect();

    let rows = docs
        .iter()
        .map(|doc| {
            let mut row: Vec<(usize, f64)> = doc
                .iter()
                .filter_map(|(term, &count)| column.get(term.as_str()).map(|&c| (c, count as f64 * idf[c])))
                .collect();
            row.sort_by_key(|&(c, _)| c);
            let norm = match settings.normalization {
                Normalization::L2 => row.iter().map(|(_, w)| w * w).sum::<f64>().sqrt(),
                Normalization::L1 => row.iter().map(|(_, w)| w.abs()).sum(),
                Normalization::None => 1.0,
            };
            if norm > 0.0 {
                row.iter_mut().for_each(|(_, w)| *w /= norm);
            }
            row
        })
        .collect();

    Ok(TfIdfMatrix { vocabulary: vocabulary.into_iter().map(str::to_string).collect(), idf, rows, settings })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_document_fixture() {
        // idf(a) = ln(3/3) + 1 = 1, idf(b) = ln(3/2) + 1; doc 1 = (1, idf(b)) / norm.
        let m = tfidf_fit_transform(&["a b", "a"], TfIdfSettings::default()).unwrap();
        assert_eq!(m.vocabulary, ["a", "b"]);
        assert!((m.idf[0] - 1.0).abs() < 1e-15);
        assert!((m.idf[1] - (1.5f64.ln() + 1.0)).abs() < 1e-15);
        assert!((m.weight(0, "a") - 0.5797).abs() < 1e-4);
        assert!((m.weight(0, "b") - 0.8148).abs() < 1e-4);
        assert_eq!(m.weight(1, "b"), 0.0);
        assert_eq!(m.weight(1, "a"), 1.0);
    }

    #[test]
    fn single_document_is_normalized_counts() {
        let m = tfidf_fit_transform(&["x x y"], TfIdfSettings::default()).unwrap();
        assert!(m.idf.iter().all(|&v| v == 1.0));
        let norm = 5f64.sqrt();
        assert!((m.weight(0, "x") - 2.0 / norm).abs() < 1e-15);
        assert!((m.weight(0, "y") - 1.0 / norm).abs() < 1e-15);
    }

    #[test]
    fn empty_document_is_a_zero_row() {
        let m = tfidf_fit_transform(&["hello", "!!!"], TfIdfSettings::default()).unwrap();
        assert!(m.rows[1].is_empty());
        assert!(tfidf_fit_transform::<&str>(&[], TfIdfSettings::default()).is_err());
    }

    #[test]
    fn max_features_keeps_frequent_terms() {
        let settings = TfIdfSettings { max_features: Some(2), ..Default::default() };
        let m = tfidf_fit_transform(&["b b c", "a b c", "d"], settings).unwrap();
        assert_eq!(m.vocabulary, ["b", "c"]);
        assert!(m.rows[2].is_empty());
    }

    #[test]
    fn l2_rows_have_unit_norm() {
        let corpus = ["Trump tweets again", "Hillary and Trump debate", "debate debate debate", "LOL"];
        let m = tfidf_fit_transform(&corpus, TfIdfSettings::default()).unwrap();
        for row in &m.rows {
            let norm: f64 = row.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn raw_idf_is_invariant_to_duplicating_the_corpus() {
        let corpus: Vec<String> = (0..60).map(|i| format!("w{} common w{}", i % 7, i % 11)).collect();
        let doubled: Vec<String> = corpus.iter().chain(corpus.iter()).cloned().collect();
        let settings = TfIdfSettings { smoothing: IdfSmoothing::Raw, ..Default::default() };
        let once = tfidf_fit_transform(&corpus, settings).unwrap();
        let twice = tfidf_fit_transform(&doubled, settings).unwrap();
        for (i, row) in once.rows.iter().enumerate() {
            assert_eq!(row.len(), twice.rows[i].len());
            for ((c1, w1), (c2, w2)) in row.iter().zip(&twice.rows[i]) {
                assert_eq!(c1, c2);
                assert!((w1 - w2).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn vocabulary_export() {
        let m = tfidf_fit_transform(&["b a"], TfIdfSettings::default()).unwrap();
        let json = m.vocabulary_json();
        assert_eq!(json["vocabulary"]["a"], 0);
        assert_eq!(json["vocabulary"]["b"], 1);
    }
}
