use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::{psd_sqrt, sym_eig, SymMatrix};

/// Smallest eigenvalue a metric matrix may have.
pub const PSD_TOLERANCE: f64 = 1e-9;

/// A Mahalanobis metric `D_M(x, y) = (x − y)ᵀ M (x − y)` with `M ⪰ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    m: SymMatrix,
}

impl Metric {
    pub fn new(m: SymMatrix) -> Result<Self> {
        let min_eigenvalue = sym_eig(&m)?.min();
        if min_eigenvalue < -PSD_TOLERANCE {
            return Err(Error::NotPositiveSemidefinite { min_eigenvalue });
        }
        Ok(Metric { m })
    }

    pub fn identity(dim: usize) -> Self {
        Metric {
            m: SymMatrix::identity(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.dim()
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> SymMatrix {
        self.m
    }

    pub fn is_identity(&self) -> bool {
        self.m == SymMatrix::identity(self.dim())
    }

    /// Squared distance; no dimension checks beyond debug assertions.
    #[inline]
    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        debug_assert_eq!(y.len(), self.dim());
        let d = self.dim();
        let mut diff = [0.0; 32];
        if d <= diff.len() {
            for k in 0..d {
                diff[k] = x[k] - y[k];
            }
            self.m.quad_form(&diff[..d]).max(0.0)
        } else {
            let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
            self.m.quad_form(&diff).max(0.0)
        }
    }

    /// Principal square root `L` with `LᵀL = M`; mapping points through it
    /// turns `D_M` into squared Euclidean distance.
    pub fn sqrt(&self) -> SymMatrix {
        psd_sqrt(&self.m).expect("metric entries are finite")
    }

    /// Short stable identifier derived from the matrix entries.
    pub fn fingerprint(&self) -> String {
        if self.is_identity() {
            return format!("identity-{}", self.dim());
        }
        let mut hasher = Sha256::new();
        for v in self.m.as_slice() {
            hasher.update(v.to_bits().to_le_bytes());
        }
        let digest = hasher.finalize();
        let mut out = String::from("m-");
        for b in &digest[..8] {
            write!(out, "{b:02x}").unwrap();
        }
        out
    }

    /// Plain-text form: the dimension on the first line, then one row per
    /// line with 17 significant digits, which round-trips exactly.
    pub fn to_text(&self) -> String {
        let d = self.dim();
        let mut out = format!("{d}\n");
        for i in 0..d {
            let row: Vec<String> = self.m.row(i).iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let d: usize = lines
            .next()
            .ok_or_else(|| Error::Malformed("metric file is empty".into()))?
            .trim()
            .parse()
            .map_err(|_| Error::Malformed("first line must be the dimension".into()))?;
        if d == 0 {
            return Err(Error::Malformed("metric dimension must be positive".into()));
        }
        let mut rows = Vec::with_capacity(d);
        for (r, line) in lines.by_ref().take(d).enumerate() {
            let row = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>()
                        .map_err(|_| Error::Malformed(format!("row {r}: bad value {tok:?}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        if rows.len() != d {
            return Err(Error::Malformed(format!(
                "expected {d} matrix rows, found {}",
                rows.len()
            )));
        }
        if lines.next().is_some() {
            return Err(Error::Malformed("trailing data after matrix rows".into()));
        }
        Metric::new(SymMatrix::from_rows(&rows)?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.is_file() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}
