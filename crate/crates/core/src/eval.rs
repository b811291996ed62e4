//! kNN classification under a learned metric and stratified cross-validation.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{pca_reduce, FoldPlan, LabeledDataset, Standardizer};
use crate::error::{Error, Result};
use crate::metric::Metric;
use crate::solver::{fit, Mode, SolverConfig};

/// Majority label among the `k` nearest training points under `metric`.
///
/// Vote ties go to the class with the smallest summed distance over its
/// votes, then to the smallest label. Distance ties among candidates are
/// broken by training index.
pub fn knn_predict(train: &LabeledDataset, metric: &Metric, query: &[f64], k: usize) -> Result<usize> {
    if query.len() != train.dim() || metric.dim() != train.dim() {
        return Err(Error::DimensionMismatch {
            expected: train.dim(),
            found: if query.len() != train.dim() { query.len() } else { metric.dim() },
        });
    }
    if k == 0 || k > train.n() {
        return Err(Error::InvalidParameter(format!(
            "k = {k} must lie in 1..={} (training set size)",
            train.n()
        )));
    }
    let mut dists: Vec<(f64, usize)> = (0..train.n())
        .map(|i| (metric.distance(query, train.point(i)), i))
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < dists.len() {
        dists.select_nth_unstable_by(k - 1, cmp);
    }
    let mut votes = vec![0usize; train.class_count()];
    let mut summed = vec![0.0f64; train.class_count()];
    for &(d, i) in &dists[..k] {
        votes[train.label(i)] += 1;
        summed[train.label(i)] += d;
    }
    let best = (0..votes.len())
        .filter(|&c| votes[c] > 0)
        .min_by(|&a, &b| {
            votes[b]
                .cmp(&votes[a])
                .then(summed[a].total_cmp(&summed[b]))
                .then(a.cmp(&b))
        })
        .expect("k >= 1 gives at least one vote");
    Ok(best)
}

/// What produces the metric in each fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum Method {
    /// Euclidean kNN baseline.
    Knn,
    Lmnn(SolverConfig),
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Knn => "knn",
            Method::Lmnn(cfg) => match cfg.mode {
                Mode::Sp => "sp-lmnn",
                Mode::Mp => "mp-lmnn",
                Mode::Fb => "fb-lmnn",
            },
        }
    }
}

/// Method names accepted on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodKind {
    Knn,
    Sp,
    Mp,
    Fb,
}

impl MethodKind {
    /// The method with its default solver settings.
    pub fn with_defaults(self) -> Method {
        match self {
            MethodKind::Knn => Method::Knn,
            MethodKind::Sp => Method::Lmnn(SolverConfig::for_mode(Mode::Sp)),
            MethodKind::Mp => Method::Lmnn(SolverConfig::for_mode(Mode::Mp)),
            MethodKind::Fb => Method::Lmnn(SolverConfig::for_mode(Mode::Fb)),
        }
    }

    pub fn mode(self) -> Option<Mode> {
        match self {
            MethodKind::Knn => None,
            MethodKind::Sp => Some(Mode::Sp),
            MethodKind::Mp => Some(Mode::Mp),
            MethodKind::Fb => Some(Mode::Fb),
        }
    }
}

impl FromStr for MethodKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "knn" => Ok(MethodKind::Knn),
            "sp" | "sp-lmnn" => Ok(MethodKind::Sp),
            "mp" | "mp-lmnn" => Ok(MethodKind::Mp),
            "fb" | "fb-lmnn" => Ok(MethodKind::Fb),
            other => Err(Error::InvalidParameter(format!(
                "unknown method {other:?} (expected knn, sp, mp or fb)"
            ))),
        }
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MethodKind::Knn => "knn",
            MethodKind::Sp => "sp",
            MethodKind::Mp => "mp",
            MethodKind::Fb => "fb",
        })
    }
}

/// Per-fold preprocessing and classification settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Neighbors used by the classifier.
    pub k_classify: usize,
    /// Standardize features with statistics of the training split.
    pub standardize: bool,
    /// Reduce to this many principal components fitted on the training split.
    pub pca_dim: Option<usize>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            k_classify: 5,
            standardize: true,
            pca_dim: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub method: String,
    pub fold_accuracies: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation of the fold accuracies.
    pub stddev: f64,
    /// `confusion[true][predicted]`
    pub confusion: Vec<Vec<usize>>,
    pub class_names: Vec<String>,
    pub folds: usize,
    pub seed: u64,
    pub eval: EvalConfig,
    pub solver: Option<SolverConfig>,
}

impl EvalResult {
    /// One row per fold: `method,fold,accuracy`.
    pub fn write_folds_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["method", "fold", "accuracy"])?;
        for (f, acc) in self.fold_accuracies.iter().enumerate() {
            out.write_record([self.method.clone(), f.to_string(), acc.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Writes `method,mean_accuracy,stddev` rows, accuracies in percent.
pub fn write_table_csv<W: Write>(results: &[EvalResult], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["method", "mean_accuracy", "stddev"])?;
    for r in results {
        out.write_record([
            r.method.clone(),
            format!("{:.2}", 100.0 * r.mean),
            format!("{:.2}", 100.0 * r.stddev),
        ])?;
    }
    out.flush()?;
    Ok(())
}

fn mean_and_stddev(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Fold-by-fold evaluation. Every fitted quantity (standardization, PCA,
/// neighborhoods, weights, metric) comes from the training split only.
pub fn cross_validate(
    ds: &LabeledDataset,
    folds: &FoldPlan,
    method: &Method,
    cfg: &EvalConfig,
) -> Result<EvalResult> {
    if folds.assignments.len() != ds.n() {
        return Err(Error::DimensionMismatch {
            expected: ds.n(),
            found: folds.assignments.len(),
        });
    }
    if let Method::Lmnn(solver) = method {
        solver.validate()?;
    }
    let classes = ds.class_count();
    let mut confusion = vec![vec![0usize; classes]; classes];
    let mut accuracies = Vec::with_capacity(folds.fold_count);

    for fold in 0..folds.fold_count {
        let test_idx = folds.test_indices(fold);
        if test_idx.is_empty() {
            return Err(Error::InvalidParameter(format!("fold {fold} is empty")));
        }
        let mut train = ds.subset(&folds.train_indices(fold))?;
        let mut queries: Vec<Vec<f64>> = test_idx.iter().map(|&i| ds.point(i).to_vec()).collect();

        if cfg.standardize {
            let stats = Standardizer::fit(&train);
            train = stats.apply(&train)?;
            queries = queries.iter().map(|q| stats.apply_point(q)).collect();
        }
        if let Some(dim) = cfg.pca_dim {
            let (reduced, model) = pca_reduce(&train, dim)?;
            train = reduced;
            queries = queries.iter().map(|q| model.project_point(q)).collect();
        }

        let metric = match method {
            Method::Knn => Metric::identity(train.dim()),
            Method::Lmnn(solver) => fit(&train, solver)?.metric,
        };

        let mut correct = 0;
        for (q, &i) in queries.iter().zip(&test_idx) {
            let predicted = knn_predict(&train, &metric, q, cfg.k_classify)?;
            let truth = ds.label(i);
            confusion[truth][predicted] += 1;
            if predicted == truth {
                correct += 1;
            }
        }
        let acc = correct as f64 / test_idx.len() as f64;
        log::debug!("{} fold {fold}: accuracy {acc:.4}", method.name());
        accuracies.push(acc);
    }

    let (mean, stddev) = mean_and_stddev(&accuracies);
    Ok(EvalResult {
        method: method.name().to_string(),
        fold_accuracies: accuracies,
        mean,
        stddev,
        confusion,
        class_names: ds.class_names().to_vec(),
        folds: folds.fold_count,
        seed: folds.seed,
        eval: cfg.clone(),
        solver: match method {
            Method::Knn => None,
            Method::Lmnn(s) => Some(s.clone()),
        },
    })
}
