//! Feasibility weighting of margin constraints.
//!
//! A triplet `(i, j, l)` asks for `Tr(Q M) < 0` with
//! `Q = a aᵀ − b bᵀ`, `a = x_i − x_j`, `b = x_i − x_l`. The ratio
//! `r = −λ_min(Q) / λ_max(Q)` bounds the eigenvalue ratio any feasible `M`
//! can have, so small `r` marks a constraint with a small feasible region.
//! `r = 0` means no PSD `M` satisfies the constraint without slack.
//!
//! Each target pair is weighted by `R_ij = min_l r_ijl` over the impostors
//! of `x_i`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::linalg::rank2_extreme_eigs;
use crate::neighborhood::{NeighborhoodPlan, Triplet};

pub const DEFAULT_R_CAP: f64 = 1e6;

/// How a triplet's `r` value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeasibilityCase {
    /// `−λ_min / λ_max` within `[0, r_cap]`.
    Regular,
    /// `−λ_min / λ_max` exceeded `r_cap`.
    Clamped,
    /// `Q ≈ 0`: target and impostor coincide. `r = 0`.
    Degenerate,
    /// `Q` is negative semidefinite, so every PSD `M` satisfies the constraint. `r = r_cap`.
    NegativeSemidefinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feasibility {
    pub r: f64,
    pub case: FeasibilityCase,
}

/// `r` together with the branch that produced it.
pub fn classify_triplet(x_i: &[f64], x_j: &[f64], x_l: &[f64], r_cap: f64) -> Feasibility {
    assert!(
        x_i.len() == x_j.len() && x_i.len() == x_l.len(),
        "triplet points must share a dimension"
    );
    let a: Vec<f64> = x_i.iter().zip(x_j).map(|(p, q)| p - q).collect();
    let b: Vec<f64> = x_i.iter().zip(x_l).map(|(p, q)| p - q).collect();
    let (lambda_max, lambda_min) = rank2_extreme_eigs(&a, &b);

    let aa: f64 = a.iter().map(|v| v * v).sum();
    let bb: f64 = b.iter().map(|v| v * v).sum();
    let eps = 1e-12 * aa.max(bb).max(1.0);

    if lambda_max.abs() <= eps && lambda_min.abs() <= eps {
        return Feasibility {
            r: 0.0,
            case: FeasibilityCase::Degenerate,
        };
    }
    if lambda_max <= eps && lambda_min < -eps {
        return Feasibility {
            r: r_cap,
            case: FeasibilityCase::NegativeSemidefinite,
        };
    }
    let raw = -lambda_min / lambda_max;
    if raw > r_cap {
        Feasibility {
            r: r_cap,
            case: FeasibilityCase::Clamped,
        }
    } else {
        Feasibility {
            r: raw.max(0.0),
            case: FeasibilityCase::Regular,
        }
    }
}

/// `r_ijl ∈ [0, r_cap]` for target `x_j` and impostor `x_l` of `x_i`.
pub fn triplet_feasibility(x_i: &[f64], x_j: &[f64], x_l: &[f64], r_cap: f64) -> f64 {
    classify_triplet(x_i, x_j, x_l, r_cap).r
}

/// Number of triplets that went through each branch of [`classify_triplet`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibilityCounters {
    pub regular: usize,
    pub clamped: usize,
    pub degenerate: usize,
    pub negative_semidefinite: usize,
    /// Target pairs whose point has no impostors; they get weight 1.
    pub empty_impostor_pairs: usize,
}

/// Per-triplet `r` and per-pair `R`, laid out parallel to a [`NeighborhoodPlan`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripletWeightTable {
    /// `pair_weights[i][t]` is `R` for `(i, targets(i)[t])`.
    pair_weights: Vec<Vec<f64>>,
    /// `r` values in [`enumerate_triplets`](crate::neighborhood::enumerate_triplets) order.
    triplet_r: Vec<f64>,
    targets: Vec<Vec<usize>>,
    impostors: Vec<Vec<usize>>,
    pub r_cap: f64,
    pub counters: FeasibilityCounters,
}

impl TripletWeightTable {
    /// All pair weights equal to one: the unweighted objective.
    pub fn unit(plan: &NeighborhoodPlan) -> Self {
        TripletWeightTable {
            pair_weights: plan.targets.iter().map(|t| vec![1.0; t.len()]).collect(),
            triplet_r: vec![1.0; plan.triplet_count()],
            targets: plan.targets.clone(),
            impostors: plan.impostors.clone(),
            r_cap: DEFAULT_R_CAP,
            counters: FeasibilityCounters::default(),
        }
    }

    /// Table with explicitly given pair weights, e.g. for experiments.
    pub fn from_pair_weights(plan: &NeighborhoodPlan, pair_weights: Vec<Vec<f64>>) -> Result<Self> {
        if pair_weights.len() != plan.n()
            || pair_weights
                .iter()
                .zip(&plan.targets)
                .any(|(w, t)| w.len() != t.len())
        {
            return Err(Error::InvalidParameter(
                "pair weights must align with the plan's targets".into(),
            ));
        }
        if pair_weights.iter().flatten().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidParameter(
                "pair weights must be finite and nonnegative".into(),
            ));
        }
        let mut triplet_r = Vec::with_capacity(plan.triplet_count());
        for (w, l) in pair_weights.iter().zip(&plan.impostors) {
            for &v in w {
                triplet_r.extend(std::iter::repeat_n(v, l.len()));
            }
        }
        let r_cap = pair_weights
            .iter()
            .flatten()
            .fold(DEFAULT_R_CAP, |a, &b| a.max(b));
        Ok(TripletWeightTable {
            pair_weights,
            triplet_r,
            targets: plan.targets.clone(),
            impostors: plan.impostors.clone(),
            r_cap,
            counters: FeasibilityCounters::default(),
        })
    }

    pub fn pair_weights(&self) -> &[Vec<f64>] {
        &self.pair_weights
    }

    pub fn triplet_values(&self) -> &[f64] {
        &self.triplet_r
    }

    /// `R_ij`, if `j` is a target of `i`.
    pub fn pair_weight(&self, i: usize, j: usize) -> Option<f64> {
        let t = self.targets.get(i)?.iter().position(|&x| x == j)?;
        Some(self.pair_weights[i][t])
    }

    /// `r_ijl`, if `(i, j, l)` is one of the plan's triplets.
    pub fn triplet_weight(&self, triplet: Triplet) -> Option<f64> {
        let Triplet { i, j, l } = triplet;
        let t = self.targets.get(i)?.iter().position(|&x| x == j)?;
        let s = self.impostors[i].iter().position(|&x| x == l)?;
        let before: usize = self.targets[..i]
            .iter()
            .zip(&self.impostors[..i])
            .map(|(a, b)| a.len() * b.len())
            .sum();
        Some(self.triplet_r[before + t * self.impostors[i].len() + s])
    }

    /// Rescales pair weights to mean one. No-op when all weights are zero.
    pub fn normalize_to_unit_mean(&mut self) {
        let all: Vec<f64> = self.pair_weights.iter().flatten().copied().collect();
        if all.is_empty() {
            return;
        }
        let mean = all.iter().sum::<f64>() / all.len() as f64;
        if mean > 0.0 {
            self.pair_weights
                .iter_mut()
                .flatten()
                .for_each(|w| *w /= mean);
        }
    }

    pub fn mean_pair_weight(&self) -> f64 {
        let all: Vec<f64> = self.pair_weights.iter().flatten().copied().collect();
        if all.is_empty() {
            0.0
        } else {
            all.iter().sum::<f64>() / all.len() as f64
        }
    }

    /// CSV with columns `i,j,l,r`.
    pub fn write_triplets_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["i", "j", "l", "r"])?;
        let mut idx = 0;
        for (i, (targets, impostors)) in self.targets.iter().zip(&self.impostors).enumerate() {
            for &j in targets {
                for &l in impostors {
                    out.write_record([
                        i.to_string(),
                        j.to_string(),
                        l.to_string(),
                        self.triplet_r[idx].to_string(),
                    ])?;
                    idx += 1;
                }
            }
        }
        out.flush()?;
        Ok(())
    }

    /// CSV with columns `i,j,R`.
    pub fn write_pairs_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["i", "j", "R"])?;
        for (i, (targets, weights)) in self.targets.iter().zip(&self.pair_weights).enumerate() {
            for (&j, w) in targets.iter().zip(weights) {
                out.write_record([i.to_string(), j.to_string(), w.to_string()])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Computes `r_ijl` for every triplet of `plan` on the coordinates of `ds`
/// and `R_ij` as the minimum over impostors. Pairs without impostors get 1.
pub fn pair_weights(
    ds: &LabeledDataset,
    plan: &NeighborhoodPlan,
    r_cap: f64,
) -> Result<TripletWeightTable> {
    if !(r_cap > 0.0 && r_cap.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "r_cap must be positive and finite, got {r_cap}"
        )));
    }
    if plan.n() != ds.n() {
        return Err(Error::DimensionMismatch {
            expected: ds.n(),
            found: plan.n(),
        });
    }
    let mut counters = FeasibilityCounters::default();
    let mut weights = Vec::with_capacity(ds.n());
    let mut triplet_r = Vec::with_capacity(plan.triplet_count());
    for (i, (targets, impostors)) in plan.targets.iter().zip(&plan.impostors).enumerate() {
        let mut row = Vec::with_capacity(targets.len());
        for &j in targets {
            if impostors.is_empty() {
                counters.empty_impostor_pairs += 1;
                row.push(1.0);
                continue;
            }
            let mut min_r = f64::INFINITY;
            for &l in impostors {
                let f = classify_triplet(ds.point(i), ds.point(j), ds.point(l), r_cap);
                match f.case {
                    FeasibilityCase::Regular => counters.regular += 1,
                    FeasibilityCase::Clamped => counters.clamped += 1,
                    FeasibilityCase::Degenerate => counters.degenerate += 1,
                    FeasibilityCase::NegativeSemidefinite => counters.negative_semidefinite += 1,
                }
                min_r = min_r.min(f.r);
                triplet_r.push(f.r);
            }
            row.push(min_r);
        }
        weights.push(row);
    }
    Ok(TripletWeightTable {
        pair_weights: weights,
        triplet_r,
        targets: plan.targets.clone(),
        impostors: plan.impostors.clone(),
        r_cap,
        counters,
    })
}
