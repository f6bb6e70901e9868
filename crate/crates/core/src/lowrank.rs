//! Symmetric positive semidefinite matrices stored as `P = Z Zᵀ`.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Format tag on the third header line of factor files.
pub const FACTOR_FORMAT: &str = "text-f64-rows";

/// Default relative truncation threshold for [`compress`].
pub const DEFAULT_COMPRESS_TOL: f64 = 1e-15;

/// Tall factor `Z` (n × r) of the represented matrix `Z Zᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankFactor {
    z: DMatrix<f64>,
}

impl LowRankFactor {
    pub fn new(z: DMatrix<f64>) -> Result<Self> {
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { z })
    }

    pub fn zeros(n: usize, r: usize) -> Self {
        Self {
            z: DMatrix::zeros(n, r),
        }
    }

    /// Row dimension.
    pub fn n(&self) -> usize {
        self.z.nrows()
    }

    /// Column count.
    pub fn rank(&self) -> usize {
        self.z.ncols()
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.z
    }

    pub fn into_factor(self) -> DMatrix<f64> {
        self.z
    }

    /// The dense `n × n` matrix `Z Zᵀ`. Intended for small checks only.
    pub fn expand(&self) -> DMatrix<f64> {
        &self.z * self.z.transpose()
    }

    /// Spectral norm of `Z Zᵀ`, i.e. the squared largest singular value of `Z`.
    pub fn represented_norm(&self) -> f64 {
        if self.rank() == 0 || self.n() == 0 {
            return 0.0;
        }
        let s = self.z.singular_values();
        let top = s.max();
        top * top
    }

    /// Writes `n`, `r` and the format tag on three lines, then one row of
    /// `Z` per line at 17 significant digits.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", self.n())?;
        writeln!(out, "{}", self.rank())?;
        writeln!(out, "{FACTOR_FORMAT}")?;
        for i in 0..self.n() {
            let row: Vec<String> = self.z.row(i).iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(out, "{}", row.join(" "))?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let mut header = |what: &str| -> Result<String> {
            lines
                .next()
                .transpose()?
                .map(|l| l.trim().to_string())
                .ok_or_else(|| Error::Parse(format!("missing {what} header")))
        };
        let n: usize = header("n")?.parse().map_err(|_| Error::Parse("bad n".into()))?;
        let r: usize = header("r")?.parse().map_err(|_| Error::Parse("bad r".into()))?;
        let tag = header("format")?;
        if tag != FACTOR_FORMAT {
            return Err(Error::Parse(format!("unknown factor format '{tag}'")));
        }
        let mut z = DMatrix::zeros(n, r);
        for i in 0..n {
            let line = header("row")?;
            let values: Vec<f64> = line
                .split_whitespace()
                .map(|v| v.parse().map_err(|_| Error::Parse(format!("bad entry '{v}'"))))
                .collect::<Result<_>>()?;
            if values.len() != r {
                return Err(Error::DimensionMismatch {
                    expected: r,
                    found: values.len(),
                });
            }
            for (j, v) in values.into_iter().enumerate() {
                z[(i, j)] = v;
            }
        }
        Self::new(z)
    }
}

/// Column concatenation `[Z₁, Z₂]`, representing `Z₁Z₁ᵀ + Z₂Z₂ᵀ`.
pub fn concat(z1: &LowRankFactor, z2: &LowRankFactor) -> Result<LowRankFactor> {
    if z1.n() != z2.n() {
        return Err(Error::DimensionMismatch {
            expected: z1.n(),
            found: z2.n(),
        });
    }
    let (r1, r2) = (z1.rank(), z2.rank());
    let mut z = DMatrix::zeros(z1.n(), r1 + r2);
    z.columns_mut(0, r1).copy_from(&z1.z);
    z.columns_mut(r1, r2).copy_from(&z2.z);
    Ok(LowRankFactor { z })
}

/// Rank truncation by thin QR followed by an SVD of the triangular factor.
///
/// Keeps the directions whose singular value exceeds `tol · σ₁` and returns
/// `Q U_k diag(σ_k)`. A zero factor yields an `n × 0` factor.
pub fn compress(z: &LowRankFactor, tol: f64) -> LowRankFactor {
    let n = z.n();
    if z.rank() == 0 || n == 0 {
        return LowRankFactor::zeros(n, 0);
    }
    let qr = z.z.clone().qr();
    let q = qr.q();
    // R J = U Σ with orthogonal columns, so the column norms are the
    // singular values of R (and of Z)
    let rotated = orthogonalize_columns(qr.r());
    let sigma: Vec<f64> = rotated.column_iter().map(|c| c.norm()).collect();

    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));
    let top = sigma[order[0]];
    if !(top > 0.0) {
        return LowRankFactor::zeros(n, 0);
    }
    let kept: Vec<usize> = order
        .into_iter()
        .take_while(|&i| sigma[i] > tol * top)
        .collect();

    let mut core = DMatrix::zeros(rotated.nrows(), kept.len());
    for (dst, &src) in kept.iter().enumerate() {
        core.set_column(dst, &rotated.column(src));
    }
    LowRankFactor { z: q * core }
}

/// One-sided (Hestenes) Jacobi: right-multiplies `a` by plane rotations
/// until its columns are mutually orthogonal. Singular values come out with
/// high relative accuracy, which a bidiagonal QR sweep does not guarantee
/// for strongly graded triangular factors.
fn orthogonalize_columns(mut a: DMatrix<f64>) -> DMatrix<f64> {
    let k = a.ncols();
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..k {
            for q in (p + 1)..k {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dot(&a.column(q));
                if alpha == 0.0 || beta == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..a.nrows() {
                    let (x, y) = (a[(i, p)], a[(i, q)]);
                    a[(i, p)] = c * x - s * y;
                    a[(i, q)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    a
}
