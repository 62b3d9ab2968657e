use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense numeric rows keyed by sample id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    sample_ids: Vec<String>,
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    pub fn new(sample_ids: Vec<String>, columns: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if sample_ids.len() != rows.len() {
            return Err(Error::Alignment(format!("{} ids for {} feature rows", sample_ids.len(), rows.len())));
        }
        for (id, row) in sample_ids.iter().zip(&rows) {
            if row.len() != columns.len() {
                return Err(Error::validation(format!(
                    "feature row `{id}` has {} values for {} columns",
                    row.len(),
                    columns.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::validation(format!("feature row `{id}` has a non-finite value")));
            }
        }
        Ok(FeatureMatrix { sample_ids, columns, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    /// Rows at the given positions, in that order.
    pub fn select(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            sample_ids: indices.iter().map(|&i| self.sample_ids[i].clone()).collect(),
            columns: self.columns.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// Reorder rows to follow `ids`; every id must be present exactly once.
    pub fn align_to(&self, ids: &[String]) -> Result<FeatureMatrix> {
        if ids == self.sample_ids.as_slice() {
            return Ok(self.clone());
        }
        if ids.len() != self.sample_ids.len() {
            return Err(Error::Alignment(format!("{} ids requested, matrix has {} rows", ids.len(), self.len())));
        }
        let position: HashMap<&str, usize> =
            self.sample_ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        let order = ids
            .iter()
            .map(|id| {
                position
                    .get(id.as_str())
                    .copied()
                    .ok_or_else(|| Error::Alignment(format!("no features for sample `{id}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.select(&order))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["sample_id".to_string()];
        header.extend(self.columns.iter().cloned());
        wtr.write_record(&header)?;
        for (id, row) in self.sample_ids.iter().zip(&self.rows) {
            let mut record = vec![id.clone()];
            record.extend(row.iter().map(f64::to_string));
            wtr.write_record(&record)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<FeatureMatrix> {
        let mut rdr = csv::Reader::from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.is_empty() || &header[0] != "sample_id" {
            return Err(Error::Parse("feature CSV header must start with `sample_id`".into()));
        }
        let columns: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut ids = Vec::new();
        let mut rows = Vec::new();
        for record in rdr.records() {
            let record = record?;
            ids.push(record[0].to_string());
            let row = record
                .iter()
                .skip(1)
                .map(|v| v.trim().parse::<f64>().map_err(|_| Error::Parse(format!("`{v}` is not a number"))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        FeatureMatrix::new(ids, columns, rows)
    }
}

pub fn load_feature_csv(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    FeatureMatrix::read_csv(BufReader::new(File::open(path)?))
}

/// Tweet corpus: `sample_id,text`.
#[derive(Debug, Clone, PartialEq)]
pub struct TextCorpus {
    pub sample_ids: Vec<String>,
    pub texts: Vec<String>,
}

impl TextCorpus {
    pub fn read_csv<R: Read>(reader: R) -> Result<TextCorpus> {
        let mut rdr = csv::Reader::from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.len() != 2 || &header[0] != "sample_id" || &header[1] != "text" {
            return Err(Error::Parse("text corpus header must be `sample_id,text`".into()));
        }
        let mut corpus = TextCorpus { sample_ids: Vec::new(), texts: Vec::new() };
        for record in rdr.records() {
            let record = record?;
            corpus.sample_ids.push(record[0].to_string());
            corpus.texts.push(record[1].to_string());
        }
        Ok(corpus)
    }
}

pub fn load_text_corpus(path: impl AsRef<Path>) -> Result<TextCorpus> {
    TextCorpus::read_csv(BufReader::new(File::open(path)?))
}

#[derive(Debug, Clone, Default)]
pub struct FeatureSources {
    pub sarcasm: Option<FeatureMatrix>,
    pub tfidf: Option<FeatureMatrix>,
    pub external: Option<FeatureMatrix>,
}

/// Column-wise concatenation, rows aligned to the first present source.
/// Columns are namespaced `sarcasm:`, `tfidf:` and `ext:`.
pub fn assemble_features(sources: &FeatureSources) -> Result<FeatureMatrix> {
    let parts: Vec<(&str, &FeatureMatrix)> =
        [("sarcasm", sources.sarcasm.as_ref()), ("tfidf", sources.tfidf.as_ref()), ("ext", sources.external.as_ref())]
            .into_iter()
            .filter_map(|(ns, m)| m.map(|m| (ns, m)))
            .collect();

    let Some(&(_, anchor)) = parts.first() else {
        return Err(Error::validation("no feature source given"));
    };
    let ids = anchor.sample_ids().to_vec();
    let mut columns = Vec::new();
    let mut rows: Vec<Vec<f64>> = vec![Vec::new(); ids.len()];
    for (ns, matrix) in parts {
        let aligned = matrix.align_to(&ids)?;
        columns.extend(aligned.columns.iter().map(|c| format!("{ns}:{c}")));
        for (row, part) in rows.iter_mut().zip(aligned.rows) {
            row.extend(part);
        }
    }
    FeatureMatrix::new(ids, columns, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{sarcasm_features, sarcasm_matrix, tfidf_fit_transform, TfIdfSettings};

    fn ids(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn sarcasm_plus_tfidf() {
        let texts = ["lol what", "serious policy talk"];
        let vectors: Vec<_> = texts.iter().map(|t| sarcasm_features(t)).collect();
        let tfidf = tfidf_fit_transform(&texts, TfIdfSettings::default()).unwrap();
        let sources = FeatureSources {
            sarcasm: Some(sarcasm_matrix(ids(&["a", "b"]), &vectors).unwrap()),
            tfidf: Some(tfidf.to_feature_matrix(ids(&["a", "b"])).unwrap()),
            external: None,
        };
        let m = assemble_features(&sources).unwrap();
        assert_eq!(m.width(), 7 + tfidf.vocabulary.len());
        assert_eq!(m.columns()[0], "sarcasm:quotes");
        assert_eq!(m.columns()[7], "tfidf:lol");
    }

    #[test]
    fn external_pass_through() {
        let cols: Vec<String> = (0..16).map(|i| format!("img{i}")).collect();
        let ext = FeatureMatrix::new(ids(&["a", "b"]), cols, vec![vec![0.5; 16], vec![1.5; 16]]).unwrap();
        let m = assemble_features(&FeatureSources { external: Some(ext.clone()), ..Default::default() }).unwrap();
        assert_eq!(m.width(), 16);
        assert_eq!(m.rows(), ext.rows());
    }

    #[test]
    fn mismatched_ids_fail_alignment() {
        let a = FeatureMatrix::new(ids(&["a", "b"]), ids(&["x"]), vec![vec![1.0], vec![2.0]]).unwrap();
        let b = FeatureMatrix::new(ids(&["a", "c"]), ids(&["y"]), vec![vec![1.0], vec![2.0]]).unwrap();
        let err = assemble_features(&FeatureSources { sarcasm: Some(a), external: Some(b), ..Default::default() });
        assert!(matches!(err, Err(Error::Alignment(_))));
    }

    #[test]
    fn reordered_ids_are_aligned() {
        let a = FeatureMatrix::new(ids(&["a", "b"]), ids(&["x"]), vec![vec![1.0], vec![2.0]]).unwrap();
        let b = FeatureMatrix::new(ids(&["b", "a"]), ids(&["y"]), vec![vec![20.0], vec![10.0]]).unwrap();
        let m =
            assemble_features(&FeatureSources { sarcasm: Some(a), external: Some(b), ..Default::default() }).unwrap();
        assert_eq!(m.rows(), &[vec![1.0, 10.0], vec![2.0, 20.0]]);
    }

    #[test]
    fn csv_round_trip_and_validation() {
        let text = "sample_id,f1,f2\na,1.5,2\nb,0,-3\n";
        let m = FeatureMatrix::read_csv(text.as_bytes()).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        assert_eq!(FeatureMatrix::read_csv(buf.as_slice()).unwrap(), m);
        assert!(FeatureMatrix::read_csv("sample_id,f1\na,NaN\n".as_bytes()).is_err());
        assert!(FeatureMatrix::read_csv("sample_id,f1\na,abc\n".as_bytes()).is_err());
    }

    #[test]
    fn corpus_reader() {
        let c = TextCorpus::read_csv("sample_id,text\na,\"hi, there\"\n".as_bytes()).unwrap();
        assert_eq!(c.texts, ["hi, there"]);
    }
}
