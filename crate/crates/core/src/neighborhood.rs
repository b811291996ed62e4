//! Target and impostor selection.
//!
//! Targets of `x_i` are its `k` nearest same-class points. Impostors are
//! chosen by [`ImpostorMode`]. All searches are brute force; equal distances
//! are ordered by ascending point index.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::metric::Metric;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImpostorMode {
    /// Differently labeled points among the `k` nearest neighbors overall.
    /// May be empty for well separated classes.
    KnnWindow,
    /// The `k` nearest differently labeled points.
    #[default]
    SameKOtherClass,
}

impl FromStr for ImpostorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "knn-window" => Ok(ImpostorMode::KnnWindow),
            "same-k-other-class" => Ok(ImpostorMode::SameKOtherClass),
            other => Err(Error::InvalidParameter(format!(
                "unknown impostor mode {other:?} (expected knn-window or same-k-other-class)"
            ))),
        }
    }
}

impl fmt::Display for ImpostorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ImpostorMode::KnnWindow => "knn-window",
            ImpostorMode::SameKOtherClass => "same-k-other-class",
        })
    }
}

/// One margin constraint: `x_j` is a target of `x_i`, `x_l` an impostor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triplet {
    pub i: usize,
    pub j: usize,
    pub l: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodPlan {
    pub k: usize,
    pub mode: ImpostorMode,
    /// `targets[i]` sorted by ascending distance from `x_i`.
    pub targets: Vec<Vec<usize>>,
    /// `impostors[i]` sorted by ascending distance from `x_i`.
    pub impostors: Vec<Vec<usize>>,
    /// Fingerprint of the metric the distances were measured under.
    pub metric_used: String,
}

impl NeighborhoodPlan {
    pub fn n(&self) -> usize {
        self.targets.len()
    }

    /// True when both plans select the same targets and impostors.
    pub fn same_neighborhoods(&self, other: &NeighborhoodPlan) -> bool {
        self.targets == other.targets && self.impostors == other.impostors
    }

    pub fn triplet_count(&self) -> usize {
        self.targets
            .iter()
            .zip(&self.impostors)
            .map(|(t, l)| t.len() * l.len())
            .sum()
    }

    pub fn summary(&self) -> PlanSummary {
        PlanSummary {
            k: self.k,
            mode: self.mode,
            metric_used: self.metric_used.clone(),
            target_pairs: self.targets.iter().map(Vec::len).sum(),
            impostor_pairs: self.impostors.iter().map(Vec::len).sum(),
            triplets: self.triplet_count(),
            empty_impostor_sets: self.impostors.iter().filter(|l| l.is_empty()).count(),
        }
    }
}

/// Counts describing a plan, kept in solve reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSummary {
    pub k: usize,
    pub mode: ImpostorMode,
    pub metric_used: String,
    pub target_pairs: usize,
    pub impostor_pairs: usize,
    pub triplets: usize,
    pub empty_impostor_sets: usize,
}

/// The `k` smallest entries of `candidates` by `(distance, index)`, in order.
fn k_smallest(candidates: &mut [(f64, usize)], k: usize) -> Vec<usize> {
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    let k = k.min(candidates.len());
    if k == 0 {
        return Vec::new();
    }
    if k < candidates.len() {
        candidates.select_nth_unstable_by(k - 1, cmp);
    }
    let head = &mut candidates[..k];
    head.sort_unstable_by(cmp);
    head.iter().map(|&(_, idx)| idx).collect()
}

pub fn build_plan(
    ds: &LabeledDataset,
    metric: &Metric,
    k: usize,
    mode: ImpostorMode,
) -> Result<NeighborhoodPlan> {
    if k == 0 {
        return Err(Error::InvalidParameter("neighborhood size k must be at least 1".into()));
    }
    if metric.dim() != ds.dim() {
        return Err(Error::DimensionMismatch {
            expected: ds.dim(),
            found: metric.dim(),
        });
    }
    for (class, &count) in ds.class_counts().iter().enumerate() {
        if count < 2 {
            return Err(Error::ClassTooSmall {
                class: ds.class_names()[class].clone(),
                count,
                required: 2,
            });
        }
    }

    let n = ds.n();
    let mut targets = Vec::with_capacity(n);
    let mut impostors = Vec::with_capacity(n);
    let mut same = Vec::with_capacity(n);
    let mut other = Vec::with_capacity(n);
    for i in 0..n {
        let xi = ds.point(i);
        let yi = ds.label(i);
        same.clear();
        other.clear();
        for j in 0..n {
            if j == i {
                continue;
            }
            let d = metric.distance(xi, ds.point(j));
            if ds.label(j) == yi {
                same.push((d, j));
            } else {
                other.push((d, j));
            }
        }
        targets.push(k_smallest(&mut same, k));
        let imp = match mode {
            ImpostorMode::SameKOtherClass => k_smallest(&mut other, k),
            ImpostorMode::KnnWindow => {
                let mut all: Vec<(f64, usize)> = same.iter().chain(other.iter()).copied().collect();
                k_smallest(&mut all, k)
                    .into_iter()
                    .filter(|&j| ds.label(j) != yi)
                    .collect()
            }
        };
        impostors.push(imp);
    }
    Ok(NeighborhoodPlan {
        k,
        mode,
        targets,
        impostors,
        metric_used: metric.fingerprint(),
    })
}

/// All `(i, j, l)` with `j ∈ targets(i)` and `l ∈ impostors(i)`, ordered by
/// `i`, then target rank, then impostor rank.
pub fn enumerate_triplets(plan: &NeighborhoodPlan) -> Vec<Triplet> {
    let mut out = Vec::with_capacity(plan.triplet_count());
    for (i, (targets, impostors)) in plan.targets.iter().zip(&plan.impostors).enumerate() {
        for &j in targets {
            for &l in impostors {
                out.push(Triplet { i, j, l });
            }
        }
    }
    out
}
