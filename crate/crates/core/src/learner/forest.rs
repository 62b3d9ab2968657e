//! Bagged, depth-capped binary decision trees with weighted Gini splits.
//!
//! Each tree sees a bootstrap resample. With balanced-subsample weighting a
//! row's weight is `n_boot / (classes_present * count_of_its_class)` in that
//! resample, times its bootstrap multiplicity. Each split looks at
//! `max_features` randomly chosen non-constant columns and thresholds at
//! midpoints between consecutive distinct values. The forest predicts the
//! plurality class over trees, lowest class on ties.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AllocationLabelSet, AllocationLearner, AllocationPredictor};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::seeding::rng_for;

pub const MODEL_FORMAT: &str = "buoca-forest/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    /// `ceil(sqrt(columns))`
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    fn resolve(self, columns: usize) -> usize {
        let n = match self {
            MaxFeatures::Sqrt => (columns as f64).sqrt().ceil() as usize,
            MaxFeatures::All => columns,
            MaxFeatures::Count(n) => n,
        };
        n.clamp(1, columns.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeighting {
    BalancedSubsample,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestSettings {
    pub trees: usize,
    pub max_depth: usize,
    pub max_features: MaxFeatures,
    pub class_weight: ClassWeighting,
    pub seed: u64,
}

impl ForestSettings {
    pub fn new(seed: u64) -> Self {
        ForestSettings {
            trees: 100,
            max_depth: 12,
            max_features: MaxFeatures::Sqrt,
            class_weight: ClassWeighting::BalancedSubsample,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
enum Node {
    Leaf { class: usize },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    /// Index into the model's class list.
    fn predict(&self, row: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { class } => return class,
                Node::Split { feature, threshold, left, right } => {
                    i = if row[feature] <= threshold { left } else { right };
                }
            }
        }
    }
}

/// Trained ensemble plus the schema it was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationModel {
    format: String,
    feature_names: Vec<String>,
    classes: Vec<usize>,
    settings: ForestSettings,
    trees: Vec<Tree>,
}

impl AllocationModel {
    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn settings(&self) -> &ForestSettings {
        &self.settings
    }

    pub fn tree_count(&self) -> usize {
        self.trees.len()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        serde_json::to_writer(&mut out, self)?;
        out.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let model: AllocationModel = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        if model.format != MODEL_FORMAT {
            return Err(Error::Parse(format!("unsupported model format `{}`", model.format)));
        }
        Ok(model)
    }
}

impl AllocationPredictor for AllocationModel {
    fn classes(&self) -> &[usize] {
        &self.classes
    }

    fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    fn predict_row(&self, row: &[f64]) -> usize {
        let mut votes = vec![0usize; self.classes.len()];
        for tree in &self.trees {
            votes[tree.predict(row)] += 1;
        }
        let mut best = 0;
        for (c, &v) in votes.iter().enumerate() {
            if v > votes[best] {
                best = c;
            }
        }
        self.classes[best]
    }
}

/// The tree-ensemble learner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomForest(pub ForestSettings);

impl AllocationLearner for RandomForest {
    type Model = AllocationModel;

    fn fit(&self, features: &FeatureMatrix, labels: &[usize], seed: u64) -> Result<AllocationModel> {
        train_rows(features, labels, &ForestSettings { seed, ..self.0 })
    }
}

pub fn train(
    features: &FeatureMatrix,
    labels: &AllocationLabelSet,
    settings: &ForestSettings,
) -> Result<AllocationModel> {
    train_rows(features, &labels.labels, settings)
}

fn train_rows(features: &FeatureMatrix, labels: &[usize], settings: &ForestSettings) -> Result<AllocationModel> {
    if features.len() != labels.len() {
        return Err(Error::Alignment(format!("{} feature rows for {} labels", features.len(), labels.len())));
    }
    if features.is_empty() {
        return Err(Error::validation("cannot train on zero rows"));
    }
    if features.width() == 0 {
        return Err(Error::validation("cannot train without feature columns"));
    }
    if settings.trees == 0 {
        return Err(Error::validation("forest needs at least one tree"));
    }

    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let encoded: Vec<usize> = labels.iter().map(|l| classes.binary_search(l).expect("class present")).collect();

    let data = TrainingData {
        rows: features.rows(),
        classes: &encoded,
        class_count: classes.len(),
        mtry: settings.max_features.resolve(features.width()),
        max_depth: settings.max_depth,
        weighting: settings.class_weight,
    };
    let trees = (0..settings.trees).into_par_iter().map(|t| data.grow(&mut rng_for(settings.seed, t as u64))).collect();

    Ok(AllocationModel {
        format: MODEL_FORMAT.to_string(),
        feature_names: features.columns().to_vec(),
        classes,
        settings: *settings,
        trees,
    })
}

struct TrainingData<'a> {
    rows: &'a [Vec<f64>],
    classes: &'a [usize],
    class_count: usize,
    mtry: usize,
    max_depth: usize,
    weighting: ClassWeighting,
}

/// `(row, weight)` pairs reaching a node.
type Members = Vec<(usize, f64)>;

struct Candidate {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

fn gini_mass(counts: &[f64], total: f64) -> f64 {
    // total * gini
    if total <= 0.0 {
        return 0.0;
    }
    total - counts.iter().map(|c| c * c).sum::<f64>() / total
}

impl TrainingData<'_> {
    fn grow(&self, rng: &mut ChaCha8Rng) -> Tree {
        let n = self.rows.len();
        let mut multiplicity = vec![0u32; n];
        for _ in 0..n {
            multiplicity[rng.random_range(0..n)] += 1;
        }
        let mut class_totals = vec![0u32; self.class_count];
        for (i, &m) in multiplicity.iter().enumerate() {
            class_totals[self.classes[i]] += m;
        }
        let present = class_totals.iter().filter(|&&c| c > 0).count() as f64;
        let class_weight: Vec<f64> = class_totals
            .iter()
            .map(|&c| match self.weighting {
                ClassWeighting::BalancedSubsample if c > 0 => n as f64 / (present * c as f64),
                _ => 1.0,
            })
            .collect();

        let members: Members = multiplicity
            .iter()
            .enumerate()
            .filter(|(_, &m)| m > 0)
            .map(|(i, &m)| (i, m as f64 * class_weight[self.classes[i]]))
            .collect();

        let mut tree = Tree { nodes: Vec::new() };
        self.build(&mut tree, members, 0, rng);
        tree
    }

    fn class_mass(&self, members: &Members) -> Vec<f64> {
        let mut mass = vec![0.0; self.class_count];
        for &(i, w) in members {
            mass[self.classes[i]] += w;
        }
        mass
    }

    fn build(&self, tree: &mut Tree, members: Members, depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let mass = self.class_mass(&members);
        let mut majority = 0;
        for (c, &m) in mass.iter().enumerate() {
            if m > mass[majority] {
                majority = c;
            }
        }
        let id = tree.nodes.len();
        tree.nodes.push(Node::Leaf { class: majority });

        let pure = mass.iter().filter(|&&m| m > 0.0).count() <= 1;
        if pure || depth >= self.max_depth || members.len() < 2 {
            return id;
        }
        let Some(split) = self.best_split(&members, &mass, rng) else { return id };

        let (left, right): (Members, Members) =
            members.into_iter().partition(|&(i, _)| self.rows[i][split.feature] <= split.threshold);
        let left_id = self.build(tree, left, depth + 1, rng);
        let right_id = self.build(tree, right, depth + 1, rng);
        tree.nodes[id] =
            Node::Split { feature: split.feature, threshold: split.threshold, left: left_id, right: right_id };
        id
    }

    fn best_split(&self, members: &Members, mass: &[f64], rng: &mut ChaCha8Rng) -> Option<Candidate> {
        let total: f64 = mass.iter().sum();
        let parent = gini_mass(mass, total);
        let width = self.rows[0].len();
        let mut order: Vec<usize> = (0..width).collect();
        order.shuffle(rng);

        let mut best: Option<Candidate> = None;
        let mut examined = 0;
        let mut column: Vec<(f64, usize, f64)> = Vec::with_capacity(members.len());
        for feature in order {
            if examined == self.mtry {
                break;
            }
            column.clear();
            column.extend(members.iter().map(|&(i, w)| (self.rows[i][feature], self.classes[i], w)));
            let first = column[0].0;
            if column.iter().all(|&(v, _, _)| v == first) {
                continue;
            }
            examined += 1;
            column.sort_by(|a, b| a.0.total_cmp(&b.0));

            let mut left = vec![0.0; self.class_count];
            let mut left_total = 0.0;
            for idx in 0..column.len() - 1 {
                let (value, class, w) = column[idx];
                left[class] += w;
                left_total += w;
                let next = column[idx + 1].0;
                if next == value {
                    continue;
                }
                let right: Vec<f64> = mass.iter().zip(&left).map(|(m, l)| m - l).collect();
                let impurity = gini_mass(&left, left_total) + gini_mass(&right, total - left_total);
                if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    let mut threshold = value + (next - value) / 2.0;
                    if threshold >= next {
                        threshold = value;
                    }
                    best = Some(Candidate { feature, threshold, impurity });
                }
            }
        }
        best.filter(|b| parent - b.impurity > 1e-12 * total.max(1.0))
    }
}
