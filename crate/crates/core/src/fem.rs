//! Periodic piecewise-linear finite elements on the unit interval.
//!
//! Nodes sit at `x_i = i h`, `h = 1 / N_h`, and the hat function of node
//! `N_h − 1` wraps around to `x = 1 ≡ 0`. Besides the dense Galerkin matrices
//! this module provides the O(N_h) stencil operations used on the fine master
//! grid, the Karhunen–Loève sampler for the random coefficient functions and
//! L² projection between nested grids.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, DenseSymMatrix};
use crate::lowrank::LowRankFactor;

/// Uniform periodic grid on `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PeriodicGrid {
    nh: usize,
}

impl PeriodicGrid {
    pub fn new(nh: usize) -> Result<Self> {
        if nh < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 nodes, got {nh}")));
        }
        Ok(Self { nh })
    }

    pub fn nodes(&self) -> usize {
        self.nh
    }

    pub fn h(&self) -> f64 {
        1.0 / self.nh as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 / self.nh as f64
    }
}

/// Target regularity of a sampled function, fixing the covariance decay
/// `q_j = j^(−β)` of the Karhunen–Loève coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regularity {
    /// Almost surely in `H² ∩ H¹_per`.
    H2per,
    /// Almost surely in `L²` only.
    H0,
}

impl Regularity {
    pub fn decay_exponent(self) -> f64 {
        match self {
            Regularity::H2per => 5.1,
            Regularity::H0 => 1.1,
        }
    }
}

impl fmt::Display for Regularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regularity::H2per => write!(f, "H2per"),
            Regularity::H0 => write!(f, "H0"),
        }
    }
}

impl FromStr for Regularity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "h2per" | "h2" => Ok(Regularity::H2per),
            "h0" | "l2" => Ok(Regularity::H0),
            other => Err(Error::Parse(format!("unknown regularity '{other}'"))),
        }
    }
}

/// Nodal values of a piecewise-linear function together with how it was
/// generated.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    pub grid: PeriodicGrid,
    pub values: Vec<f64>,
    pub regularity: Regularity,
    pub seed: Option<u64>,
    pub modes: usize,
}

impl SampledFunction {
    /// Discrete L² norm `sqrt(fᵀ M f)`.
    pub fn l2_norm(&self) -> f64 {
        let mf = mass_apply(&self.grid, &self.values);
        dot(&mf, &self.values).max(0.0).sqrt()
    }

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.values)
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# sampled-function")?;
        writeln!(out, "# regularity = {}", self.regularity)?;
        match self.seed {
            Some(seed) => writeln!(out, "# seed = {seed}")?,
            None => writeln!(out, "# seed = none")?,
        }
        writeln!(out, "# modes = {}", self.modes)?;
        writeln!(out, "# nodes = {}", self.grid.nodes())?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(out, "{:.17e} {:.17e}", self.grid.x(i), v)?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let mut regularity = None;
        let mut seed = None;
        let mut modes = 0;
        let mut values = Vec::new();
        for line in input.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(header) = line.strip_prefix('#') {
                if let Some((key, value)) = header.split_once('=') {
                    let value = value.trim();
                    match key.trim() {
                        "regularity" => regularity = Some(value.parse()?),
                        "seed" if value != "none" => seed = Some(parse_num(value)?),
                        "modes" => modes = parse_num(value)?,
                        _ => {}
                    }
                }
                continue;
            }
            let mut cols = line.split_whitespace();
            let _x = cols.next();
            let v = cols
                .next()
                .ok_or_else(|| Error::Parse(format!("expected 'x value', got '{line}'")))?;
            values.push(parse_num::<f64>(v)?);
        }
        let grid = PeriodicGrid::new(values.len())?;
        Ok(Self {
            grid,
            values,
            regularity: regularity.ok_or_else(|| Error::Parse("missing regularity header".into()))?,
            seed,
            modes,
        })
    }
}

fn parse_num<T: FromStr>(s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Parse(format!("cannot parse number '{s}'")))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Dense periodic P1 mass matrix and Galerkin Laplacian `−∫ φⱼ′ φᵢ′`.
pub fn assemble_periodic_p1(nh: usize) -> Result<(DenseSymMatrix, DenseSymMatrix)> {
    if nh < 3 {
        return Err(Error::InvalidGrid(format!("need at least 3 nodes, got {nh}")));
    }
    let h = 1.0 / nh as f64;
    let mut mass = DMatrix::zeros(nh, nh);
    let mut stiff = DMatrix::zeros(nh, nh);
    for i in 0..nh {
        let (prev, next) = ((i + nh - 1) % nh, (i + 1) % nh);
        mass[(i, i)] = 2.0 * h / 3.0;
        mass[(i, prev)] = h / 6.0;
        mass[(i, next)] = h / 6.0;
        stiff[(i, i)] = -2.0 / h;
        stiff[(i, prev)] = 1.0 / h;
        stiff[(i, next)] = 1.0 / h;
    }
    Ok((DenseSymMatrix::new(mass)?, DenseSymMatrix::new(stiff)?))
}

/// `M f` through the three-point periodic stencil.
pub fn mass_apply(grid: &PeriodicGrid, f: &[f64]) -> Vec<f64> {
    let n = grid.nodes();
    let h = grid.h();
    (0..n)
        .map(|i| {
            let prev = f[(i + n - 1) % n];
            let next = f[(i + 1) % n];
            h * (2.0 * f[i] / 3.0 + (prev + next) / 6.0)
        })
        .collect()
}

/// Solves `M x = rhs` for the periodic mass matrix: Thomas elimination on
/// the tridiagonal part with a Sherman–Morrison correction for the corners.
pub fn solve_periodic_mass(grid: &PeriodicGrid, rhs: &[f64]) -> Vec<f64> {
    let n = grid.nodes();
    let h = grid.h();
    let diag = 2.0 * h / 3.0;
    let off = h / 6.0;
    if n == 2 {
        // both neighbours coincide: [[2h/3, h/3], [h/3, 2h/3]]
        let (a, b) = (diag, 2.0 * off);
        let det = a * a - b * b;
        return vec![(a * rhs[0] - b * rhs[1]) / det, (a * rhs[1] - b * rhs[0]) / det];
    }
    let gamma = -diag;
    let mut main = vec![diag; n];
    main[0] = diag - gamma;
    main[n - 1] = diag - off * off / gamma;

    let thomas = |d: &[f64]| -> Vec<f64> {
        let mut c = vec![0.0; n];
        let mut x = vec![0.0; n];
        c[0] = off / main[0];
        x[0] = d[0] / main[0];
        for i in 1..n {
            let m = main[i] - off * c[i - 1];
            c[i] = off / m;
            x[i] = (d[i] - off * x[i - 1]) / m;
        }
        for i in (0..n - 1).rev() {
            x[i] -= c[i] * x[i + 1];
        }
        x
    };

    let x = thomas(rhs);
    let mut u_rhs = vec![0.0; n];
    u_rhs[0] = gamma;
    u_rhs[n - 1] = off;
    let z = thomas(&u_rhs);
    let fact = (x[0] + off * x[n - 1] / gamma) / (1.0 + z[0] + off * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}

/// `sqrt(dᵀ M d)` with `d` the periodic second-difference quotient of `f`.
pub fn discrete_h2_seminorm(f: &SampledFunction) -> f64 {
    let n = f.grid.nodes();
    let h = f.grid.h();
    let v = &f.values;
    let d: Vec<f64> = (0..n)
        .map(|i| (v[(i + 1) % n] - 2.0 * v[i] + v[(i + n - 1) % n]) / (h * h))
        .collect();
    dot(&mass_apply(&f.grid, &d), &d).max(0.0).sqrt()
}

/// Karhunen–Loève sample `Σⱼ √qⱼ (aⱼ √2 cos 2πjx + bⱼ √2 sin 2πjx)`,
/// `j = 1..=modes`, evaluated at the grid nodes. The pairs `(aⱼ, bⱼ)` are
/// drawn in order from a ChaCha20 stream seeded with `seed`.
pub fn sample_q_wiener(
    regularity: Regularity,
    modes: usize,
    seed: u64,
    grid: &PeriodicGrid,
) -> Result<SampledFunction> {
    check_modes(modes, grid)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let coefficients: Vec<(f64, f64)> = (0..modes)
        .map(|_| {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            (a, b)
        })
        .collect();
    let mut f = sample_from_coefficients(regularity, &coefficients, grid)?;
    f.seed = Some(seed);
    Ok(f)
}

/// Same expansion as [`sample_q_wiener`] with explicit coefficient pairs
/// `(aⱼ, bⱼ)` for `j = 1..=coefficients.len()`.
pub fn sample_from_coefficients(
    regularity: Regularity,
    coefficients: &[(f64, f64)],
    grid: &PeriodicGrid,
) -> Result<SampledFunction> {
    let modes = coefficients.len();
    check_modes(modes, grid)?;
    let n = grid.nodes();
    let beta = regularity.decay_exponent();
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    for (k, &(a, b)) in coefficients.iter().enumerate() {
        let j = (k + 1) as f64;
        let amp = (2.0 * j.powf(-beta)).sqrt();
        buf[k + 1] = Complex::new(amp * a, -amp * b);
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    Ok(SampledFunction {
        grid: *grid,
        values: buf.iter().map(|c| c.re).collect(),
        regularity,
        seed: None,
        modes,
    })
}

fn check_modes(modes: usize, grid: &PeriodicGrid) -> Result<()> {
    if modes == 0 || 2 * modes + 2 > grid.nodes() {
        return Err(Error::InvalidModeCount {
            modes,
            nodes: grid.nodes(),
        });
    }
    Ok(())
}

/// L² projection of a piecewise-linear function onto a coarser nested grid.
///
/// The load `bᵢ = ∫ f φᵢᶜ` is exact because each coarse hat is a
/// combination of fine hats; the projection then solves `M_c c = b`.
pub fn project_to_grid(fine: &SampledFunction, coarse: &PeriodicGrid) -> Result<SampledFunction> {
    let nf = fine.grid.nodes();
    let nc = coarse.nodes();
    if nc > nf || !nf.is_multiple_of(nc) {
        return Err(Error::NonNestedGrids { fine: nf, coarse: nc });
    }
    if nc == nf {
        return Ok(fine.clone());
    }
    let ratio = nf / nc;
    let mf = mass_apply(&fine.grid, &fine.values);
    let load: Vec<f64> = (0..nc)
        .map(|i| {
            let centre = i * ratio;
            let mut acc = mf[centre];
            for d in 1..ratio {
                let w = 1.0 - d as f64 / ratio as f64;
                acc += w * (mf[(centre + d) % nf] + mf[(centre + nf - d) % nf]);
            }
            acc
        })
        .collect();
    Ok(SampledFunction {
        grid: *coarse,
        values: solve_periodic_mass(coarse, &load),
        regularity: fine.regularity,
        seed: fine.seed,
        modes: fine.modes,
    })
}

/// `bᵢ = ∫ f φᵢ = (M f)ᵢ`.
pub fn build_load_vector(f: &SampledFunction) -> DVector<f64> {
    DVector::from_vec(mass_apply(&f.grid, &f.values))
}

/// Rank-one coefficient factor `z = M⁻¹ b(ζ)` of the initial value
/// `v ↦ ⟨π_h ζ, v⟩ π_h ζ`.
pub fn build_p0_factor(zeta: &SampledFunction, mass: &DenseSymMatrix) -> Result<LowRankFactor> {
    let load = build_load_vector(zeta);
    if load.len() != mass.n() {
        return Err(Error::DimensionMismatch {
            expected: mass.n(),
            found: load.len(),
        });
    }
    let l = cholesky(mass)?;
    let z = l.solve_gram(&DMatrix::from_column_slice(load.len(), 1, load.as_slice()))?;
    LowRankFactor::new(z)
}
