//! Surrogate decision-tree rules for classification models.

use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::ExplainError;
use crate::data::temporal::{format_timestamp, from_epoch_seconds, to_epoch_seconds};
use crate::data::{Dataset, Granularity, Value};
use crate::learn::tree::{ClassLeaf, ClassificationTree, Node, TreeParams};
use crate::pipeline::FittedPipeline;
use crate::primitives::{FeatureData, FeatureTable, Target};
use crate::problem::{TaskType, ValidatedSpec};

pub const SURROGATE_DEPTHS: std::ops::RangeInclusive<usize> = 2..=6;
pub const FIDELITY_THRESHOLD: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Operator {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predicate {
    pub feature: String,
    pub op: Operator,
    /// Number for numeric features, category for categorical ones, formatted
    /// timestamp for temporal ones.
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub predicates: Vec<Predicate>,
    pub predicted_class: String,
    pub support: usize,
    /// Share of matching rows where the model predicts `predicted_class`.
    pub confidence: f64,
    /// Model predictions among matching rows, per class.
    pub distribution: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleSet {
    pub classes: Vec<String>,
    pub rules: Vec<Rule>,
    /// Share of rows where the surrogate agrees with the model.
    pub fidelity: f64,
    pub depth: usize,
    pub sample_count: usize,
    pub low_fidelity: bool,
    /// The model predicts a single class everywhere.
    pub degenerate: bool,
}

enum Encoded {
    Numeric(String),
    OneHot(String, String),
    Temporal(String),
}

impl Encoded {
    fn feature(&self) -> &str {
        match self {
            Encoded::Numeric(f) | Encoded::OneHot(f, _) | Encoded::Temporal(f) => f,
        }
    }
}

/// Numeric surrogate inputs: numbers as-is, categories one-hot, timestamps
/// as epoch seconds. Missing cells take the column mean (or 0 for one-hot).
fn encode(x: &FeatureTable) -> (Array2<f64>, Vec<Encoded>) {
    let mut cols: Vec<(Encoded, Vec<f64>)> = Vec::new();
    let fill = |v: Vec<Option<f64>>| {
        let present: Vec<f64> = v.iter().flatten().copied().collect();
        let mean = crate::stats::mean(&present).unwrap_or(0.0);
        v.into_iter().map(|x| x.unwrap_or(mean)).collect::<Vec<f64>>()
    };
    for c in x.columns() {
        match &c.data {
            FeatureData::Numeric(v) => cols.push((Encoded::Numeric(c.name.clone()), fill(v.clone()))),
            FeatureData::Temporal(v) => cols.push((
                Encoded::Temporal(c.name.clone()),
                fill(v.iter().map(|t| t.as_ref().map(to_epoch_seconds)).collect()),
            )),
            FeatureData::Categorical(v) => {
                let mut cats: Vec<&String> = v.iter().flatten().collect();
                cats.sort();
                cats.dedup();
                for cat in cats {
                    let col = v
                        .iter()
                        .map(|x| if x.as_ref() == Some(cat) { 1.0 } else { 0.0 })
                        .collect();
                    cols.push((Encoded::OneHot(c.name.clone(), cat.clone()), col));
                }
            }
        }
    }
    let mut m = Array2::zeros((x.rows(), cols.len()));
    for (j, (_, v)) in cols.iter().enumerate() {
        for (i, &val) in v.iter().enumerate() {
            m[[i, j]] = val;
        }
    }
    (m, cols.into_iter().map(|(e, _)| e).collect())
}

fn fidelity(tree: &ClassificationTree<f64>) -> f64 {
    let (agree, total) = tree
        .root
        .leaves()
        .iter()
        .fold((0, 0), |(a, t), (leaf, n)| (a + leaf.counts[leaf.class], t + n));
    agree as f64 / total as f64
}

/// Fits a surrogate tree to the model's predictions on the spec's usable
/// rows and turns its leaves into rules.
///
/// The depth is chosen from 2 to 6 among trees with at most `max_rules`
/// leaves, taking the highest fidelity and the shallowest tree on ties. When
/// no depth fits, the depth-6 tree is used and flagged low-fidelity.
pub fn extract_rules(
    fitted: &FittedPipeline,
    dataset: &Dataset,
    spec: &ValidatedSpec,
    max_rules: usize,
) -> Result<RuleSet, ExplainError> {
    if spec.task_type() != TaskType::Classification {
        return Err(ExplainError::WrongTaskType {
            expected: TaskType::Classification,
        });
    }
    if max_rules < 2 {
        return Err(ExplainError::InvalidMaxRules(max_rules));
    }
    let rows = spec.usable_rows();
    let x = FeatureTable::from_dataset(dataset, &fitted.feature_names(), rows)?;
    let Target::Labels(preds) = fitted.predict(&x)? else {
        return Err(ExplainError::WrongTaskType {
            expected: TaskType::Classification,
        });
    };
    if preds.is_empty() {
        return Err(ExplainError::NoRows);
    }
    let mut classes = preds.clone();
    classes.sort();
    classes.dedup();
    let n = preds.len();
    if classes.len() == 1 {
        return Ok(RuleSet {
            rules: vec![Rule {
                predicates: vec![],
                predicted_class: classes[0].clone(),
                support: n,
                confidence: 1.0,
                distribution: BTreeMap::from([(classes[0].clone(), n)]),
            }],
            classes,
            fidelity: 1.0,
            depth: 0,
            sample_count: n,
            low_fidelity: false,
            degenerate: true,
        });
    }
    let labels: Vec<usize> = preds.iter().map(|p| classes.binary_search(p).expect("class")).collect();
    let (m, encoded) = encode(&x);
    let grow = |depth| {
        ClassificationTree::fit(
            m.view(),
            &labels,
            classes.len(),
            TreeParams {
                max_depth: depth,
                min_leaf: 1,
            },
        )
        .expect("nonempty surrogate data")
    };
    let mut chosen: Option<(ClassificationTree<f64>, usize, f64)> = None;
    for depth in SURROGATE_DEPTHS {
        let tree = grow(depth);
        if tree.root.leaf_count() > max_rules {
            continue;
        }
        let f = fidelity(&tree);
        if chosen.as_ref().is_none_or(|c| f > c.2) {
            chosen = Some((tree, depth, f));
        }
        if f == 1.0 {
            break;
        }
    }
    let (tree, depth, fid) = match chosen {
        Some(c) => c,
        None => {
            let depth = *SURROGATE_DEPTHS.end();
            let tree = grow(depth);
            let f = fidelity(&tree);
            (tree, depth, f)
        }
    };
    let low_fidelity = fid < FIDELITY_THRESHOLD || tree.root.leaf_count() > max_rules;
    let mut rules = Vec::new();
    collect_rules(&tree.root, &mut Vec::new(), &encoded, &classes, &mut rules);
    Ok(RuleSet {
        classes,
        rules,
        fidelity: fid,
        depth,
        sample_count: n,
        low_fidelity,
        degenerate: false,
    })
}

fn collect_rules(
    node: &Node<f64, ClassLeaf>,
    path: &mut Vec<(usize, bool, f64)>,
    encoded: &[Encoded],
    classes: &[String],
    out: &mut Vec<Rule>,
) {
    match node {
        Node::Leaf { samples, value } => out.push(Rule {
            predicates: simplify(path, encoded),
            predicted_class: classes[value.class].clone(),
            support: *samples,
            confidence: value.counts[value.class] as f64 / *samples as f64,
            distribution: classes
                .iter()
                .zip(&value.counts)
                .filter(|(_, &c)| c > 0)
                .map(|(k, &c)| (k.clone(), c))
                .collect(),
        }),
        Node::Split {
            feature,
            threshold,
            left,
            right,
            ..
        } => {
            path.push((*feature, true, *threshold));
            collect_rules(left, path, encoded, classes, out);
            path.pop();
            path.push((*feature, false, *threshold));
            collect_rules(right, path, encoded, classes, out);
            path.pop();
        }
    }
}

/// Tightest bounds per feature; an equality on a categorical feature
/// replaces its inequalities.
fn simplify(path: &[(usize, bool, f64)], encoded: &[Encoded]) -> Vec<Predicate> {
    let mut lower: BTreeMap<usize, f64> = BTreeMap::new();
    let mut upper: BTreeMap<usize, f64> = BTreeMap::new();
    let mut equal: BTreeMap<&str, &str> = BTreeMap::new();
    let mut not_equal: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for &(j, left, t) in path {
        match &encoded[j] {
            Encoded::OneHot(f, c) => {
                if left {
                    not_equal.entry(f).or_default().push(c);
                } else {
                    equal.insert(f, c);
                }
            }
            _ => {
                if left {
                    let u = upper.entry(j).or_insert(t);
                    *u = u.min(t);
                } else {
                    let l = lower.entry(j).or_insert(t);
                    *l = l.max(t);
                }
            }
        }
    }
    let render = |j: usize, t: f64| match &encoded[j] {
        Encoded::Temporal(_) => Value::Text(
            from_epoch_seconds(t)
                .map(|ts| format_timestamp(&ts, Granularity::Second))
                .unwrap_or_else(|| t.to_string()),
        ),
        _ => Value::Number(t),
    };
    let mut out = Vec::new();
    let mut done_categorical: Vec<&str> = Vec::new();
    for (j, e) in encoded.iter().enumerate() {
        match e {
            Encoded::OneHot(f, _) => {
                if done_categorical.contains(&f.as_str()) {
                    continue;
                }
                done_categorical.push(f);
                if let Some(c) = equal.get(f.as_str()) {
                    out.push(Predicate {
                        feature: f.clone(),
                        op: Operator::Eq,
                        value: Value::Text(c.to_string()),
                    });
                } else if let Some(cs) = not_equal.get(f.as_str()) {
                    let mut cs = cs.clone();
                    cs.sort();
                    cs.dedup();
                    out.extend(cs.into_iter().map(|c| Predicate {
                        feature: f.clone(),
                        op: Operator::Ne,
                        value: Value::Text(c.to_string()),
                    }));
                }
            }
            _ => {
                if let Some(&l) = lower.get(&j) {
                    out.push(Predicate {
                        feature: e.feature().to_string(),
                        op: Operator::Gt,
                        value: render(j, l),
                    });
                }
                if let Some(&u) = upper.get(&j) {
                    out.push(Predicate {
                        feature: e.feature().to_string(),
                        op: Operator::Le,
                        value: render(j, u),
                    });
                }
            }
        }
    }
    out
}
