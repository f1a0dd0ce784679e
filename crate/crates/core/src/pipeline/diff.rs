//! Step-by-step comparison of two pipelines.

use serde::{Deserialize, Serialize};

use super::Pipeline;
use crate::primitives::PrimitiveSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepStatus {
    Same,
    ChangedHyperparams,
    OnlyInFirst,
    OnlyInSecond,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffEntry {
    pub status: StepStatus,
    pub first: Option<PrimitiveSpec>,
    pub second: Option<PrimitiveSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDiff {
    pub first_id: String,
    pub second_id: String,
    pub steps: Vec<DiffEntry>,
}

/// Aligns the steps by a longest common subsequence of primitive names.
///
/// When two alignments are equally long the step with the larger primitive
/// name is emitted as unmatched first, which makes `diff(b, a)` the mirror
/// image of `diff(a, b)`.
pub fn diff(first: &Pipeline, second: &Pipeline) -> StepDiff {
    let a = first.steps();
    let b = second.steps();
    let (n, m) = (a.len(), b.len());
    // lcs[i][j] = LCS length of a[i..] and b[j..]
    let mut lcs = vec![vec![0usize; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            lcs[i][j] = if a[i].name == b[j].name {
                lcs[i + 1][j + 1] + 1
            } else {
                lcs[i + 1][j].max(lcs[i][j + 1])
            };
        }
    }
    let mut steps = Vec::with_capacity(n.max(m));
    let only_first = |s: &PrimitiveSpec| DiffEntry {
        status: StepStatus::OnlyInFirst,
        first: Some(s.clone()),
        second: None,
    };
    let only_second = |s: &PrimitiveSpec| DiffEntry {
        status: StepStatus::OnlyInSecond,
        first: None,
        second: Some(s.clone()),
    };
    let (mut i, mut j) = (0, 0);
    while i < n && j < m {
        if a[i].name == b[j].name {
            steps.push(DiffEntry {
                status: if a[i].hyperparams == b[j].hyperparams {
                    StepStatus::Same
                } else {
                    StepStatus::ChangedHyperparams
                },
                first: Some(a[i].clone()),
                second: Some(b[j].clone()),
            });
            i += 1;
            j += 1;
        } else {
            let skip_first = match lcs[i + 1][j].cmp(&lcs[i][j + 1]) {
                std::cmp::Ordering::Greater => true,
                std::cmp::Ordering::Less => false,
                std::cmp::Ordering::Equal => a[i].name > b[j].name,
            };
            if skip_first {
                steps.push(only_first(&a[i]));
                i += 1;
            } else {
                steps.push(only_second(&b[j]));
                j += 1;
            }
        }
    }
    steps.extend(a[i..].iter().map(only_first));
    steps.extend(b[j..].iter().map(only_second));
    StepDiff {
        first_id: first.id().to_string(),
        second_id: second.id().to_string(),
        steps,
    }
}
