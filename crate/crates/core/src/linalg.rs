//! Dense symmetric linear algebra.
//!
//! Everything here works on small, dense, real symmetric matrices: the metric
//! matrix `M` and the rank-two constraint matrices built from difference
//! vectors. Eigendecomposition uses cyclic Jacobi rotations, which are slow
//! for large `d` but deterministic and accurate to working precision.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative residual below which a Gram–Schmidt vector counts as zero.
pub const GRAM_SCHMIDT_TOLERANCE: f64 = 1e-12;

/// Stopping rule for the Jacobi eigensolver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenSettings {
    /// Stop once the off-diagonal Frobenius norm is at most `tolerance * ‖A‖_F`.
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for EigenSettings {
    fn default() -> Self {
        EigenSettings {
            tolerance: 1e-12,
            max_sweeps: 100,
        }
    }
}

/// A real symmetric `d × d` matrix.
///
/// Storage is a full row-major buffer, but every mutating operation writes
/// both `(i, j)` and `(j, i)`, so `get(i, j) == get(j, i)` holds exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = v;
        }
        m
    }

    /// Builds a matrix by evaluating `f(i, j)` on the upper triangle and mirroring it.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                m.data[i * dim + j] = v;
                m.data[j * dim + i] = v;
            }
        }
        m
    }

    /// Builds a matrix from explicit rows. Rows must form a square matrix whose
    /// asymmetry is at round-off level; the stored result is the symmetric part.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let scale = rows
            .iter()
            .flatten()
            .fold(1.0_f64, |acc, v| acc.max(v.abs()));
        for (i, row) in rows.iter().enumerate() {
            for (j, &upper) in row.iter().enumerate().skip(i + 1) {
                let lower = rows[j][i];
                if (upper - lower).abs() > 1e-12 * scale {
                    return Err(Error::Malformed(format!(
                        "matrix is not symmetric at ({i}, {j}): {upper} vs {lower}"
                    )));
                }
            }
        }
        Ok(Self::from_fn(dim, |i, j| {
            if i == j {
                rows[i][i]
            } else {
                0.5 * (rows[i][j] + rows[j][i])
            }
        }))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Row-major view of all `d²` entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// `Tr(self · other)`, which for symmetric matrices is the entrywise inner product.
    pub fn frobenius_inner(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.dim, other.dim, "frobenius_inner: dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn scaled(&self, c: f64) -> SymMatrix {
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    /// `self += c · other`
    pub fn add_scaled(&mut self, c: f64, other: &SymMatrix) {
        assert_eq!(self.dim, other.dim, "add_scaled: dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    /// `self += w · v vᵀ`
    pub fn add_outer(&mut self, w: f64, v: &[f64]) {
        assert_eq!(self.dim, v.len(), "add_outer: dimension mismatch");
        let d = self.dim;
        for i in 0..d {
            let wi = w * v[i];
            if wi == 0.0 {
                continue;
            }
            for (j, &vj) in v.iter().enumerate().skip(i) {
                let delta = wi * vj;
                self.data[i * d + j] += delta;
                if j != i {
                    self.data[j * d + i] += delta;
                }
            }
        }
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.dim, v.len(), "mul_vec: dimension mismatch");
        (0..self.dim)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `vᵀ A v`
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        assert_eq!(self.dim, v.len(), "quad_form: dimension mismatch");
        let d = self.dim;
        let mut total = 0.0;
        for i in 0..d {
            let row = self.row(i);
            let mut acc = 0.0;
            for j in 0..d {
                acc += row[j] * v[j];
            }
            total += v[i] * acc;
        }
        total
    }
}

/// Eigenvalues sorted descending with matching orthonormal eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub values: Vec<f64>,
    /// Row-major `d × d`; column `k` is the eigenvector for `values[k]`.
    vectors: Vec<f64>,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn max(&self) -> f64 {
        self.values[0]
    }

    pub fn min(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn vector(&self, k: usize) -> Vec<f64> {
        let d = self.dim();
        (0..d).map(|r| self.vectors[r * d + k]).collect()
    }

    /// Entry `(row, k)` of the eigenvector matrix.
    pub fn vector_entry(&self, row: usize, k: usize) -> f64 {
        self.vectors[row * self.dim() + k]
    }

    /// Builds `V f(Λ) Vᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let d = self.dim();
        let mapped: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        SymMatrix::from_fn(d, |i, j| {
            let vi = &self.vectors[i * d..(i + 1) * d];
            let vj = &self.vectors[j * d..(j + 1) * d];
            (0..d).map(|k| vi[k] * mapped[k] * vj[k]).sum()
        })
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.reconstruct_with(|l| l)
    }
}

/// `(x − y)ᵀ M (x − y)`, clamped at zero.
pub fn mahalanobis(m: &SymMatrix, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            found: x.len(),
        });
    }
    if y.len() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            found: y.len(),
        });
    }
    let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    Ok(m.quad_form(&diff).max(0.0))
}

pub fn sym_eig(a: &SymMatrix) -> Result<Spectrum> {
    sym_eig_with(a, &EigenSettings::default())
}

/// Cyclic Jacobi eigendecomposition with a fixed row-by-row sweep order.
pub fn sym_eig_with(a: &SymMatrix, settings: &EigenSettings) -> Result<Spectrum> {
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let d = a.dim();
    let mut w = a.data.clone();
    let mut v = SymMatrix::identity(d).data;
    let threshold = settings.tolerance * a.frobenius_norm();

    for _ in 0..settings.max_sweeps {
        let off: f64 = (0..d)
            .flat_map(|p| ((p + 1)..d).map(move |q| (p, q)))
            .map(|(p, q)| 2.0 * w[p * d + q] * w[p * d + q])
            .sum::<f64>()
            .sqrt();
        if off <= threshold {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = w[p * d + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (w[q * d + q] - w[p * d + p]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                w[p * d + p] -= t * apq;
                w[q * d + q] += t * apq;
                w[p * d + q] = 0.0;
                w[q * d + p] = 0.0;
                for r in 0..d {
                    if r != p && r != q {
                        let arp = w[r * d + p];
                        let arq = w[r * d + q];
                        let new_rp = arp - s * (arq + tau * arp);
                        let new_rq = arq + s * (arp - tau * arq);
                        w[r * d + p] = new_rp;
                        w[p * d + r] = new_rp;
                        w[r * d + q] = new_rq;
                        w[q * d + r] = new_rq;
                    }
                    let vrp = v[r * d + p];
                    let vrq = v[r * d + q];
                    v[r * d + p] = vrp - s * (vrq + tau * vrp);
                    v[r * d + q] = vrq + s * (vrp - tau * vrq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| w[j * d + j].total_cmp(&w[i * d + i]).then(i.cmp(&j)));
    let values = order.iter().map(|&k| w[k * d + k]).collect();
    let mut vectors = vec![0.0; d * d];
    for (new_col, &old_col) in order.iter().enumerate() {
        for r in 0..d {
            vectors[r * d + new_col] = v[r * d + old_col];
        }
    }
    Ok(Spectrum { values, vectors })
}

/// Nearest PSD matrix in Frobenius norm: negative eigenvalues are clamped to zero.
pub fn psd_project(a: &SymMatrix) -> Result<SymMatrix> {
    let spectrum = sym_eig(a)?;
    if spectrum.min() >= 0.0 {
        return Ok(a.clone());
    }
    Ok(spectrum.reconstruct_with(|l| l.max(0.0)))
}

/// Principal square root of the PSD part of `a`.
pub fn psd_sqrt(a: &SymMatrix) -> Result<SymMatrix> {
    let spectrum = sym_eig(a)?;
    Ok(spectrum.reconstruct_with(|l| l.max(0.0).sqrt()))
}

/// `S A S` for symmetric `S`, symmetrized to absorb round-off.
pub fn congruence(s: &SymMatrix, a: &SymMatrix) -> SymMatrix {
    assert_eq!(s.dim(), a.dim(), "congruence: dimension mismatch");
    let d = s.dim();
    let mut sa = vec![0.0; d * d];
    for i in 0..d {
        for k in 0..d {
            let sik = s.get(i, k);
            if sik == 0.0 {
                continue;
            }
            for j in 0..d {
                sa[i * d + j] += sik * a.get(k, j);
            }
        }
    }
    let full = |i: usize, j: usize| -> f64 { (0..d).map(|k| sa[i * d + k] * s.get(k, j)).sum() };
    SymMatrix::from_fn(d, |i, j| 0.5 * (full(i, j) + full(j, i)))
}

/// `(x − y)(x − y)ᵀ`
pub fn outer_diff(x: &[f64], y: &[f64]) -> Result<SymMatrix> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let mut m = SymMatrix::zeros(diff.len());
    m.add_outer(1.0, &diff);
    Ok(m)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The two possibly nonzero eigenvalues `(λ_max, λ_min)` of `a aᵀ − b bᵀ`.
///
/// `a` and `b` are expressed in an orthonormal basis of their span obtained
/// by Gram–Schmidt, where the matrix reduces to 2 × 2 with trace
/// `‖a‖² − ‖b‖²` and determinant `−(a₁b₂ − b₁a₂)²`. The root of smaller
/// magnitude is recovered from the determinant, so linearly dependent inputs
/// give an exact zero.
pub fn rank2_extreme_eigs(a: &[f64], b: &[f64]) -> (f64, f64) {
    assert_eq!(a.len(), b.len(), "rank2_extreme_eigs: dimension mismatch");
    let aa = dot(a, a);
    let bb = dot(b, b);
    let norm_a = aa.sqrt();
    let norm_b = bb.sqrt();

    // Coordinates of b relative to the unit vector along a.
    let cross = if norm_a == 0.0 || norm_b == 0.0 {
        0.0
    } else {
        let along = dot(a, b) / norm_a;
        let residual: f64 = a
            .iter()
            .zip(b)
            .map(|(ai, bi)| {
                let r = bi - along * ai / norm_a;
                r * r
            })
            .sum::<f64>()
            .sqrt();
        if residual <= GRAM_SCHMIDT_TOLERANCE * norm_b {
            0.0
        } else {
            norm_a * residual
        }
    };

    let half_trace = 0.5 * (aa - bb);
    let disc = (half_trace * half_trace + cross * cross).sqrt();
    let det = -cross * cross;
    if half_trace >= 0.0 {
        let max = half_trace + disc;
        let min = if max > 0.0 { det / max } else { 0.0 };
        (max, min)
    } else {
        let min = half_trace - disc;
        (det / min, min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_outer_keeps_exact_symmetry() {
        let mut m = SymMatrix::zeros(3);
        let vs = [[0.1, -0.7, 1.3], [3.3, 0.0, -2.9], [1e-3, 7.7, 0.31]];
        for (k, v) in vs.iter().enumerate() {
            m.add_outer(0.37 * (k as f64 + 1.0), v);
        }
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m.get(i, j).to_bits(), m.get(j, i).to_bits());
            }
        }
    }
    use approx::assert_abs_diff_eq;

    #[test]
    fn mahalanobis_examples() {
        let i2 = SymMatrix::identity(2);
        assert_eq!(mahalanobis(&i2, &[1.0, 2.0], &[3.0, 4.0]).unwrap(), 8.0);
        assert_eq!(mahalanobis(&i2, &[1.5, -2.0], &[1.5, -2.0]).unwrap(), 0.0);
        let m = SymMatrix::from_diag(&[2.0, 0.0]);
        assert_eq!(mahalanobis(&m, &[1.0, 0.0], &[0.0, 0.0]).unwrap(), 2.0);
        assert!(matches!(
            mahalanobis(&i2, &[1.0], &[0.0, 0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn eig_diagonal_and_swap() {
        let s = sym_eig(&SymMatrix::from_diag(&[1.0, 3.0])).unwrap();
        assert_eq!(s.values, vec![3.0, 1.0]);
        assert_abs_diff_eq!(s.vector(0)[1].abs(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.vector(1)[0].abs(), 1.0, epsilon = 1e-15);

        let swap = SymMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let s = sym_eig(&swap).unwrap();
        assert_abs_diff_eq!(s.values[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.values[1], -1.0, epsilon = 1e-14);
    }

    #[test]
    fn eig_rejects_non_finite() {
        let m = SymMatrix::from_diag(&[1.0, f64::NAN]);
        assert!(matches!(sym_eig(&m), Err(Error::NonFinite)));
    }

    #[test]
    fn eig_zero_matrix() {
        let s = sym_eig(&SymMatrix::zeros(3)).unwrap();
        assert_eq!(s.values, vec![0.0; 3]);
    }

    #[test]
    fn psd_project_examples() {
        let p = psd_project(&SymMatrix::from_diag(&[2.0, -1.0])).unwrap();
        assert_abs_diff_eq!(p.get(0, 0), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.get(1, 1), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.get(0, 1), 0.0, epsilon = 1e-15);

        let swap = SymMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let p = psd_project(&swap).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(p.get(i, j), 0.5, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn outer_diff_examples() {
        let m = outer_diff(&[1.0, 0.0], &[0.0, 0.0]).unwrap();
        assert_eq!(m.rows(), vec![vec![1.0, 0.0], vec![0.0, 0.0]]);
        let m = outer_diff(&[3.0, 4.0], &[3.0, 4.0]).unwrap();
        assert_eq!(m, SymMatrix::zeros(2));
        let m = outer_diff(&[1.0, 1.0], &[0.0, 0.0]).unwrap();
        assert_eq!(m.rows(), vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert!(outer_diff(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn rank2_examples() {
        assert_eq!(rank2_extreme_eigs(&[1.0, 0.0], &[0.0, 1.0]), (1.0, -1.0));

        let (max, min) = rank2_extreme_eigs(&[1.0, 0.0], &[1.0, 1.0]);
        let root = 1.25_f64.sqrt();
        assert_abs_diff_eq!(max, -0.5 + root, epsilon = 1e-15);
        assert_abs_diff_eq!(min, -0.5 - root, epsilon = 1e-15);

        let (max, min) = rank2_extreme_eigs(&[1.0, 0.0], &[2.0, 0.0]);
        assert_eq!(max, 0.0);
        assert_eq!(min, -3.0);

        assert_eq!(rank2_extreme_eigs(&[0.0, 0.0], &[0.0, 0.0]), (0.0, 0.0));
        assert_eq!(rank2_extreme_eigs(&[0.0, 0.0], &[0.0, 2.0]), (0.0, -4.0));
        assert_eq!(rank2_extreme_eigs(&[3.0, 0.0], &[0.0, 0.0]), (9.0, 0.0));
    }

    #[test]
    fn from_rows_validation() {
        assert!(SymMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 1.0]]).is_err());
        assert!(SymMatrix::from_rows(&[vec![1.0, 2.0]]).is_err());
        assert!(SymMatrix::from_rows(&[vec![f64::INFINITY]]).is_err());
    }

    #[test]
    fn congruence_with_identity_is_noop() {
        let a = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, -3.0]]).unwrap();
        assert_eq!(congruence(&SymMatrix::identity(2), &a), a);
    }
}
