//! Pilot crowdsourcing data: every sample labeled by the same number `k` of
//! crowd workers plus one expert label.
//!
//! Two on-disk formats are supported:
//!
//! * CSV with header `sample_id,expert,w1,...,wk`. The worker count is read off
//!   the header; CSV carries no unit cost (it defaults to 1) and no label set.
//! * JSON: `{"k": 7, "unit_cost": 5, "label_set": [...], "samples": [{"id", "expert", "workers": [...]}]}`
//!   where `label_set` is optional.
//!
//! Labels are opaque, case-sensitive strings. Missing labels are errors.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PilotFormat {
    Csv,
    Json,
}

impl PilotFormat {
    /// Guess the format from a file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => PilotFormat::Json,
            _ => PilotFormat::Csv,
        }
    }
}

impl FromStr for PilotFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(PilotFormat::Csv),
            "json" => Ok(PilotFormat::Json),
            other => Err(Error::validation(format!("unknown pilot format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PilotDataset {
    sample_ids: Vec<String>,
    worker_labels: Vec<Vec<String>>,
    expert_labels: Vec<String>,
    k: usize,
    unit_cost: f64,
    label_set: Option<Vec<String>>,
}

impl PilotDataset {
    pub fn new(
        sample_ids: Vec<String>,
        expert_labels: Vec<String>,
        worker_labels: Vec<Vec<String>>,
        k: usize,
        unit_cost: f64,
        label_set: Option<Vec<String>>,
    ) -> Result<Self> {
        if k == 0 || k.is_multiple_of(2) {
            return Err(Error::validation(format!("k must be odd and at least 1, got {k}")));
        }
        if !(unit_cost.is_finite() && unit_cost >= 0.0) {
            return Err(Error::validation(format!("unit cost must be finite and non-negative, got {unit_cost}")));
        }
        let j = sample_ids.len();
        if j == 0 {
            return Err(Error::validation("pilot dataset has no samples"));
        }
        if expert_labels.len() != j || worker_labels.len() != j {
            return Err(Error::validation(format!(
                "{} sample ids, {} expert labels and {} worker rows",
                j,
                expert_labels.len(),
                worker_labels.len()
            )));
        }

        let mut seen = HashSet::with_capacity(j);
        for id in &sample_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::validation(format!("duplicate sample id `{id}`")));
            }
        }

        let allowed: Option<HashSet<&str>> = label_set.as_ref().map(|set| set.iter().map(String::as_str).collect());
        let check = |label: &str, id: &str| -> Result<()> {
            if label.is_empty() {
                return Err(Error::validation(format!("sample `{id}` has a missing label")));
            }
            if let Some(allowed) = &allowed {
                if !allowed.contains(label) {
                    return Err(Error::validation(format!(
                        "sample `{id}` uses label `{label}` outside the declared label set"
                    )));
                }
            }
            Ok(())
        };

        for ((id, expert), workers) in sample_ids.iter().zip(&expert_labels).zip(&worker_labels) {
            if workers.len() != k {
                return Err(Error::validation(format!(
                    "sample `{id}` has {} worker labels, expected {k}",
                    workers.len()
                )));
            }
            check(expert, id)?;
            for label in workers {
                check(label, id)?;
            }
        }

        Ok(PilotDataset { sample_ids, worker_labels, expert_labels, k, unit_cost, label_set })
    }

    /// Number of samples `J`.
    pub fn len(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample_ids.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn unit_cost(&self) -> f64 {
        self.unit_cost
    }

    pub fn with_unit_cost(mut self, unit_cost: f64) -> Result<Self> {
        if !(unit_cost.is_finite() && unit_cost >= 0.0) {
            return Err(Error::validation(format!("unit cost must be finite and non-negative, got {unit_cost}")));
        }
        self.unit_cost = unit_cost;
        Ok(self)
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn expert_labels(&self) -> &[String] {
        &self.expert_labels
    }

    pub fn worker_labels(&self) -> &[Vec<String>] {
        &self.worker_labels
    }

    pub fn label_set(&self) -> Option<&[String]> {
        self.label_set.as_deref()
    }

    /// Collapse every label to `match`/`mismatch` against the expert label.
    pub fn binary_reduction(&self) -> PilotDataset {
        let worker_labels = self
            .worker_labels
            .iter()
            .zip(&self.expert_labels)
            .map(|(row, expert)| {
                row.iter().map(|w| if w == expert { "match" } else { "mismatch" }.to_string()).collect()
            })
            .collect();
        PilotDataset {
            sample_ids: self.sample_ids.clone(),
            worker_labels,
            expert_labels: vec!["match".to_string(); self.len()],
            k: self.k,
            unit_cost: self.unit_cost,
            label_set: Some(vec!["match".to_string(), "mismatch".to_string()]),
        }
    }
}

/// Fraction of the `k` pilot workers whose label matched the expert, kept as
/// an exact `(matches, k)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuccessEstimate {
    pub matches: usize,
    pub k: usize,
}

impl SuccessEstimate {
    pub fn p(&self) -> f64 {
        self.matches as f64 / self.k as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuccessEstimates(pub Vec<SuccessEstimate>);

impl SuccessEstimates {
    pub fn probabilities(&self) -> Vec<f64> {
        self.0.iter().map(SuccessEstimate::p).collect()
    }

    pub fn total_matches(&self) -> usize {
        self.0.iter().map(|e| e.matches).sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &SuccessEstimate> {
        self.0.iter()
    }
}

pub fn estimate_success_probabilities(data: &PilotDataset) -> SuccessEstimates {
    let k = data.k();
    SuccessEstimates(
        data.worker_labels
            .iter()
            .zip(&data.expert_labels)
            .map(|(row, expert)| SuccessEstimate { matches: row.iter().filter(|w| *w == expert).count(), k })
            .collect(),
    )
}

#[derive(Serialize, Deserialize)]
struct JsonPilot {
    k: usize,
    #[serde(default = "default_unit_cost")]
    unit_cost: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label_set: Option<Vec<String>>,
    samples: Vec<JsonSample>,
}

#[derive(Serialize, Deserialize)]
struct JsonSample {
    id: String,
    expert: String,
    workers: Vec<String>,
}

fn default_unit_cost() -> f64 {
    1.0
}

pub fn load_pilot(path: impl AsRef<Path>, format: PilotFormat) -> Result<PilotDataset> {
    let file = File::open(path.as_ref())?;
    read_pilot(BufReader::new(file), format)
}

pub fn read_pilot<R: Read>(reader: R, format: PilotFormat) -> Result<PilotDataset> {
    match format {
        PilotFormat::Csv => read_csv(reader),
        PilotFormat::Json => read_json(reader),
    }
}

fn read_csv<R: Read>(reader: R) -> Result<PilotDataset> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.len() < 3 || &header[0] != "sample_id" || &header[1] != "expert" {
        return Err(Error::Parse("pilot CSV header must be `sample_id,expert,w1,...,wk`".to_string()));
    }
    let k = header.len() - 2;
    if k % 2 == 0 {
        return Err(Error::validation(format!("k must be odd, header declares {k} worker columns")));
    }

    let mut ids = Vec::new();
    let mut experts = Vec::new();
    let mut workers = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::validation(format!(
                "row {} has {} fields, header has {}",
                line + 2,
                record.len(),
                header.len()
            )));
        }
        ids.push(record[0].to_string());
        experts.push(record[1].to_string());
        workers.push(record.iter().skip(2).map(str::to_string).collect());
    }
    PilotDataset::new(ids, experts, workers, k, 1.0, None)
}

fn read_json<R: Read>(reader: R) -> Result<PilotDataset> {
    let raw: JsonPilot = serde_json::from_reader(reader)?;
    let mut ids = Vec::with_capacity(raw.samples.len());
    let mut experts = Vec::with_capacity(raw.samples.len());
    let mut workers = Vec::with_capacity(raw.samples.len());
    for s in raw.samples {
        ids.push(s.id);
        experts.push(s.expert);
        workers.push(s.workers);
    }
    PilotDataset::new(ids, experts, workers, raw.k, raw.unit_cost, raw.label_set)
}

pub fn save_pilot(data: &PilotDataset, path: impl AsRef<Path>, format: PilotFormat) -> Result<()> {
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    write_pilot(data, &mut out, format)?;
    out.flush()?;
    Ok(())
}

pub fn write_pilot<W: Write>(data: &PilotDataset, writer: W, format: PilotFormat) -> Result<()> {
    match format {
        PilotFormat::Csv => {
            let mut wtr = csv::Writer::from_writer(writer);
            let mut header = vec!["sample_id".to_string(), "expert".to_string()];
            header.extend((1..=data.k).map(|i| format!("w{i}")));
            wtr.write_record(&header)?;
            for ((id, expert), row) in data.sample_ids.iter().zip(&data.expert_labels).zip(&data.worker_labels) {
                let mut record = Vec::with_capacity(row.len() + 2);
                record.push(id.as_str());
                record.push(expert.as_str());
                record.extend(row.iter().map(String::as_str));
                wtr.write_record(&record)?;
            }
            wtr.flush()?;
        }
        PilotFormat::Json => {
            let raw = JsonPilot {
                k: data.k,
                unit_cost: data.unit_cost,
                label_set: data.label_set.clone(),
                samples: data
                    .sample_ids
                    .iter()
                    .zip(&data.expert_labels)
                    .zip(&data.worker_labels)
                    .map(|((id, expert), workers)| JsonSample {
                        id: id.clone(),
                        expert: expert.clone(),
                        workers: workers.clone(),
                    })
                    .collect(),
            };
            serde_json::to_writer_pretty(writer, &raw)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn parses_csv_header_and_rows() {
        let csv = "sample_id,expert,w1,w2,w3\na,pos,pos,neg,pos\nb,neg,neg,neg,pos\n";
        let data = read_pilot(csv.as_bytes(), PilotFormat::Csv).unwrap();
        assert_eq!(data.len(), 2);
        assert_eq!(data.k(), 3);
        assert_eq!(data.unit_cost(), 1.0);
    }

    #[test]
    fn ragged_csv_row_is_validation_error() {
        let csv = "sample_id,expert,w1,w2,w3\na,pos,pos,neg\n";
        let err = read_pilot(csv.as_bytes(), PilotFormat::Csv).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn empty_label_is_rejected() {
        let csv = "sample_id,expert,w1,w2,w3\na,pos,pos,,neg\n";
        let err = read_pilot(csv.as_bytes(), PilotFormat::Csv).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn even_k_json_is_rejected() {
        let json = r#"{"k": 4, "unit_cost": 1, "samples": [{"id": "a", "expert": "x", "workers": ["x","x","x","x"]}]}"#;
        let err = read_pilot(json.as_bytes(), PilotFormat::Json).unwrap_err();
        assert!(err.to_string().contains("k must be odd"), "{err}");
    }

    #[test]
    fn label_set_is_enforced() {
        let json = r#"{"k": 1, "unit_cost": 1, "label_set": ["pos","neg"], "samples": [{"id": "a", "expert": "pos", "workers": ["neu"]}]}"#;
        assert!(matches!(read_pilot(json.as_bytes(), PilotFormat::Json), Err(Error::Validation(_))));
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let err = PilotDataset::new(s(&["a", "a"]), s(&["x", "x"]), vec![s(&["x"]), s(&["x"])], 1, 1.0, None);
        assert!(err.is_err());
    }

    #[test]
    fn success_fractions() {
        let data = PilotDataset::new(
            s(&["a", "b", "c"]),
            s(&["neg", "pos", "pos"]),
            vec![
                s(&["neg", "neg", "neg", "neg", "neg", "neg", "pos"]),
                s(&["neg", "neg", "neg", "neg", "neg", "neu", "neu"]),
                s(&["pos", "pos", "pos", "pos", "neg", "neg", "neg"]),
            ],
            7,
            1.0,
            None,
        )
        .unwrap();
        let est = estimate_success_probabilities(&data);
        assert_eq!(est.0[0], SuccessEstimate { matches: 6, k: 7 });
        assert_eq!(est.0[0].p(), 6.0 / 7.0);
        assert_eq!(est.0[1].p(), 0.0);
        assert_eq!(est.total_matches(), 10);
    }

    #[test]
    fn three_of_five() {
        let data = PilotDataset::new(s(&["a"]), s(&["y"]), vec![s(&["y", "n", "y", "n", "y"])], 5, 1.0, None).unwrap();
        assert_eq!(estimate_success_probabilities(&data).0[0].p(), 0.6);
    }

    #[test]
    fn labels_compare_case_sensitively() {
        let data = PilotDataset::new(s(&["a"]), s(&["Pos"]), vec![s(&["pos"])], 1, 1.0, None).unwrap();
        assert_eq!(estimate_success_probabilities(&data).0[0].matches, 0);
    }
}
