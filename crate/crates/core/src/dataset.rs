//! Labeled datasets: CSV ingestion, standardization, PCA, the synthetic zebra
//! generator and stratified fold assignment.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sym_eig, SymMatrix};

/// `n` points in `R^d` with class labels in `0..C`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    n: usize,
    dim: usize,
    points: Vec<f64>,
    labels: Vec<usize>,
    class_names: Vec<String>,
    feature_names: Option<Vec<String>>,
}

impl LabeledDataset {
    /// Builds a dataset from rows; classes are named `"0"`, `"1"`, ...
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.len(),
            });
        }
        let class_count = labels.iter().max().map_or(0, |&m| m + 1);
        let class_names = (0..class_count).map(|c| c.to_string()).collect();
        let n = rows.len();
        Self::from_flat(n, dim, rows.into_iter().flatten().collect(), labels, class_names)
    }

    pub fn from_flat(
        n: usize,
        dim: usize,
        points: Vec<f64>,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        if dim == 0 {
            return Err(Error::InvalidParameter(
                "dataset needs at least one feature".into(),
            ));
        }
        if points.len() != n * dim {
            return Err(Error::DimensionMismatch {
                expected: n * dim,
                found: points.len(),
            });
        }
        if labels.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: labels.len(),
            });
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let class_count = class_names.len();
        let mut seen = vec![false; class_count];
        for &l in &labels {
            if l >= class_count {
                return Err(Error::InvalidParameter(format!(
                    "label {l} outside 0..{class_count}"
                )));
            }
            seen[l] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidParameter(format!(
                "class {:?} has no members",
                class_names[missing]
            )));
        }
        Ok(LabeledDataset {
            n,
            dim,
            points,
            labels,
            class_names,
            feature_names: None,
        })
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: names.len(),
            });
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    #[inline]
    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Original class names indexed by label; for CSV input this is the
    /// first-appearance label mapping.
    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Rows selected by `indices`, keeping the class naming. Every class must
    /// still be represented.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let points = indices
            .iter()
            .flat_map(|&i| self.point(i).iter().copied())
            .collect();
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        let mut ds = Self::from_flat(
            indices.len(),
            self.dim,
            points,
            labels,
            self.class_names.clone(),
        )?;
        ds.feature_names = self.feature_names.clone();
        Ok(ds)
    }

    /// Same labels, every point replaced by `f(point)`. The output dimension
    /// is taken from the first mapped point.
    pub fn map_points(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Result<Self> {
        let mapped: Vec<Vec<f64>> = (0..self.n).map(|i| f(self.point(i))).collect();
        let dim = mapped[0].len();
        let mut ds = Self::from_flat(
            self.n,
            dim,
            mapped.into_iter().flatten().collect(),
            self.labels.clone(),
            self.class_names.clone(),
        )?;
        if dim == self.dim {
            ds.feature_names = self.feature_names.clone();
        }
        Ok(ds)
    }

    /// Applies the linear map `x ↦ A x` to every point.
    pub fn transformed(&self, a: &SymMatrix) -> Result<Self> {
        if a.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: a.dim(),
            });
        }
        self.map_points(|x| a.mul_vec(x))
    }

    /// Writes feature columns followed by a `label` column holding class names.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = match &self.feature_names {
            Some(names) => names.clone(),
            None => (0..self.dim).map(|j| format!("x{j}")).collect(),
        };
        header.push("label".into());
        out.write_record(&header)?;
        for i in 0..self.n {
            let mut record: Vec<String> = self.point(i).iter().map(|v| v.to_string()).collect();
            record.push(self.class_names[self.labels[i]].clone());
            out.write_record(&record)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Which CSV column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

impl FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.trim().parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.trim().to_string()),
        })
    }
}

impl fmt::Display for LabelColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelColumn::Index(i) => write!(f, "{i}"),
            LabelColumn::Name(n) => f.write_str(n),
        }
    }
}

/// Reads a comma-separated file with one label column and real-valued features.
///
/// Labels are remapped to `0..C` in order of first appearance; the original
/// strings are kept as [`LabeledDataset::class_names`].
pub fn load_csv(
    path: impl AsRef<Path>,
    label_column: &LabelColumn,
    has_header: bool,
) -> Result<LabeledDataset> {
    let path = path.as_ref();
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_path(path)?;

    let header: Option<Vec<String>> = if has_header {
        Some(reader.headers()?.iter().map(str::to_string).collect())
    } else {
        None
    };
    let label_idx = match (label_column, &header) {
        (LabelColumn::Index(i), _) => *i,
        (LabelColumn::Name(name), Some(h)) => h
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::LabelColumnNotFound(name.clone()))?,
        (LabelColumn::Name(name), None) => match name.parse::<usize>() {
            Ok(i) => i,
            Err(_) => return Err(Error::LabelColumnNotFound(name.clone())),
        },
    };

    let mut points = Vec::new();
    let mut labels = Vec::new();
    let mut class_index: HashMap<String, usize> = HashMap::new();
    let mut class_names: Vec<String> = Vec::new();
    let mut width = None;

    for record in reader.records() {
        let record = record?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if label_idx >= record.len() {
            return Err(Error::LabelColumnNotFound(label_column.to_string()));
        }
        let line = record.position().map_or(0, |p| p.line());
        if let Some(w) = width {
            if w != record.len() {
                return Err(Error::Malformed(format!(
                    "line {line} has {} fields, expected {w}",
                    record.len()
                )));
            }
        }
        width = Some(record.len());
        for (column, cell) in record.iter().enumerate() {
            if column == label_idx {
                continue;
            }
            let value: f64 = cell.parse().map_err(|_| Error::NonNumeric {
                line,
                column,
                value: cell.to_string(),
            })?;
            if !value.is_finite() {
                return Err(Error::NonNumeric {
                    line,
                    column,
                    value: cell.to_string(),
                });
            }
            points.push(value);
        }
        let raw = &record[label_idx];
        let next = class_names.len();
        let label = *class_index.entry(raw.to_string()).or_insert_with(|| {
            class_names.push(raw.to_string());
            next
        });
        labels.push(label);
    }

    let n = labels.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if class_names.len() < 2 {
        return Err(Error::SingleClass);
    }
    let dim = width.unwrap_or(1) - 1;
    let ds = LabeledDataset::from_flat(n, dim, points, labels, class_names)?;
    match header {
        Some(mut h) => {
            h.remove(label_idx);
            ds.with_feature_names(h)
        }
        None => Ok(ds),
    }
}

/// Per-feature affine map to zero mean and unit population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// Population standard deviation; zero for constant features, which are only centered.
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(ds: &LabeledDataset) -> Self {
        let n = ds.n() as f64;
        let d = ds.dim();
        let mut mean = vec![0.0; d];
        for i in 0..ds.n() {
            for (m, x) in mean.iter_mut().zip(ds.point(i)) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for i in 0..ds.n() {
            for ((v, x), m) in var.iter_mut().zip(ds.point(i)).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let std = var.iter().map(|v| (v / n).sqrt()).collect();
        Standardizer { mean, std }
    }

    pub fn apply_point(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| if *s > 0.0 { (v - m) / s } else { v - m })
            .collect()
    }

    pub fn invert_point(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| if *s > 0.0 { v * s + m } else { v + m })
            .collect()
    }

    pub fn apply(&self, ds: &LabeledDataset) -> Result<LabeledDataset> {
        if ds.dim() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                found: ds.dim(),
            });
        }
        ds.map_points(|x| self.apply_point(x))
    }
}

pub fn standardize(ds: &LabeledDataset) -> (LabeledDataset, Standardizer) {
    let stats = Standardizer::fit(ds);
    let out = stats
        .apply(ds)
        .expect("standardizing preserves shape and finiteness");
    (out, stats)
}

/// Principal-component projection fitted on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `target_dim` unit rows, ordered by decreasing variance.
    pub components: Vec<Vec<f64>>,
    pub explained_variance_ratio: Vec<f64>,
}

impl PcaModel {
    pub fn project_point(&self, x: &[f64]) -> Vec<f64> {
        let centered: Vec<f64> = x.iter().zip(&self.mean).map(|(v, m)| v - m).collect();
        self.components
            .iter()
            .map(|c| c.iter().zip(&centered).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn apply(&self, ds: &LabeledDataset) -> Result<LabeledDataset> {
        if ds.dim() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                found: ds.dim(),
            });
        }
        ds.map_points(|x| self.project_point(x))
    }
}

/// Projects centered data onto the top `target_dim` eigenvectors of the
/// (population) covariance matrix. Each direction is signed so that its
/// largest-magnitude coefficient is positive.
pub fn pca_reduce(ds: &LabeledDataset, target_dim: usize) -> Result<(LabeledDataset, PcaModel)> {
    let d = ds.dim();
    if target_dim == 0 || target_dim > d {
        return Err(Error::InvalidParameter(format!(
            "PCA target dimension {target_dim} outside 1..={d}"
        )));
    }
    let n = ds.n() as f64;
    let mut mean = vec![0.0; d];
    for i in 0..ds.n() {
        for (m, x) in mean.iter_mut().zip(ds.point(i)) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);

    let mut cov = SymMatrix::zeros(d);
    let mut centered = vec![0.0; d];
    for i in 0..ds.n() {
        for ((c, x), m) in centered.iter_mut().zip(ds.point(i)).zip(&mean) {
            *c = x - m;
        }
        cov.add_outer(1.0 / n, &centered);
    }
    let spectrum = sym_eig(&cov)?;
    let total: f64 = spectrum.values.iter().map(|v| v.max(0.0)).sum();

    let components: Vec<Vec<f64>> = (0..target_dim)
        .map(|k| {
            let mut v = spectrum.vector(k);
            let pivot = v
                .iter()
                .copied()
                .fold(0.0_f64, |best, x| if x.abs() > best.abs() { x } else { best });
            if pivot < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            v
        })
        .collect();
    let explained_variance_ratio = spectrum.values[..target_dim]
        .iter()
        .map(|v| if total > 0.0 { v.max(0.0) / total } else { 0.0 })
        .collect();

    let model = PcaModel {
        mean,
        components,
        explained_variance_ratio,
    };
    let reduced = model.apply(ds)?;
    Ok((reduced, model))
}

/// Geometry of the alternating-stripe synthetic dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZebraParams {
    pub stripes: usize,
    pub points_per_stripe: usize,
    pub stripe_length: f64,
    pub stripe_gap: f64,
    /// Standard deviation of the vertical jitter.
    pub jitter: f64,
}

impl Default for ZebraParams {
    fn default() -> Self {
        ZebraParams {
            stripes: 10,
            points_per_stripe: 100,
            stripe_length: 100.0,
            stripe_gap: 1.0,
            jitter: 0.05,
        }
    }
}

impl ZebraParams {
    pub fn validate(&self) -> Result<()> {
        if self.stripes < 2 {
            return Err(Error::InvalidParameter("zebra needs at least 2 stripes".into()));
        }
        if self.points_per_stripe < 2 {
            return Err(Error::InvalidParameter(
                "zebra needs at least 2 points per stripe".into(),
            ));
        }
        if !(self.stripe_length > 0.0 && self.stripe_length.is_finite()) {
            return Err(Error::InvalidParameter("stripe length must be positive".into()));
        }
        if !(self.stripe_gap > 0.0 && self.stripe_gap.is_finite()) {
            return Err(Error::InvalidParameter("stripe gap must be positive".into()));
        }
        if !(self.jitter >= 0.0 && self.jitter < self.stripe_gap / 4.0) {
            return Err(Error::InvalidParameter(format!(
                "jitter {} must lie in [0, gap/4) = [0, {})",
                self.jitter,
                self.stripe_gap / 4.0
            )));
        }
        Ok(())
    }
}

/// Horizontal stripes of alternating class: stripe `t` holds points with
/// `x ~ U[0, L]` and `y = t·h + N(0, σ²)`, labeled `t mod 2`.
pub fn gen_zebra(params: &ZebraParams, seed: u64) -> Result<LabeledDataset> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, params.jitter)
        .map_err(|e| Error::InvalidParameter(format!("jitter: {e}")))?;
    let n = params.stripes * params.points_per_stripe;
    let mut points = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    for t in 0..params.stripes {
        let base = t as f64 * params.stripe_gap;
        for _ in 0..params.points_per_stripe {
            let x = rng.random_range(0.0..=params.stripe_length);
            let y = if params.jitter > 0.0 {
                base + noise.sample(&mut rng)
            } else {
                base
            };
            points.push(x);
            points.push(y);
            labels.push(t % 2);
        }
    }
    LabeledDataset::from_flat(n, 2, points, labels, vec!["0".into(), "1".into()])?
        .with_feature_names(vec!["x".into(), "y".into()])
}

/// Assignment of every sample to one of `fold_count` folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub fold_count: usize,
    pub assignments: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.fold_count];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Stratified fold assignment: each class is shuffled and dealt round-robin,
/// continuing the rotation from where the previous class stopped so fold
/// sizes also stay within one of each other.
pub fn stratified_folds(ds: &LabeledDataset, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "fold count must be at least 2, got {k}"
        )));
    }
    let counts = ds.class_counts();
    for (class, &count) in counts.iter().enumerate() {
        if count < k {
            return Err(Error::ClassTooSmall {
                class: ds.class_names()[class].clone(),
                count,
                required: k,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = vec![0; ds.n()];
    let mut offset = 0;
    for class in 0..ds.class_count() {
        let mut members: Vec<usize> = (0..ds.n()).filter(|&i| ds.label(i) == class).collect();
        members.shuffle(&mut rng);
        for (pos, &i) in members.iter().enumerate() {
            assignments[i] = (offset + pos) % k;
        }
        offset = (offset + members.len()) % k;
    }
    Ok(FoldPlan {
        fold_count: k,
        assignments,
        seed,
    })
}
