//! Convergence studies for the controlled periodic heat equation.
//!
//! Each experiment fixes which random coefficient function drives the
//! control (`S = B Bᵀ`) and which one builds the initial value
//! (`P₀ = G*G`): smooth `ρ` functions in `H² ∩ H¹_per`, rough `ξ` functions
//! in `L²` only. For every spatial grid a fine Strang run serves as the
//! temporal reference, and the Lie and Strang errors are measured in the
//! `L(L²)` operator norm, maximized over the time grid.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{
    assemble_periodic_p1, build_load_vector, build_p0_factor, project_to_grid, sample_q_wiener,
    solve_periodic_mass, PeriodicGrid, Regularity, SampledFunction,
};
use crate::flows::{
    integrate_streaming, CoefficientProblem, Scheme, SchemeConfig, DEFAULT_QUAD_ORDER,
    DEFAULT_RANK_CAP,
};
use crate::linalg::{weighted_spectral_norm_diff, LowerTriangular};
use crate::lowrank::{LowRankFactor, DEFAULT_COMPRESS_TOL};
use crate::parallel::Executor;

/// The four random coefficient functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FunctionChoice {
    Rho1,
    Rho2,
    Xi1,
    Xi2,
}

impl FunctionChoice {
    pub fn regularity(self) -> Regularity {
        match self {
            FunctionChoice::Rho1 | FunctionChoice::Rho2 => Regularity::H2per,
            FunctionChoice::Xi1 | FunctionChoice::Xi2 => Regularity::H0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FunctionChoice::Rho1 => "rho1",
            FunctionChoice::Rho2 => "rho2",
            FunctionChoice::Xi1 => "xi1",
            FunctionChoice::Xi2 => "xi2",
        }
    }
}

impl fmt::Display for FunctionChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FunctionChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rho1" => Ok(FunctionChoice::Rho1),
            "rho2" => Ok(FunctionChoice::Rho2),
            "xi1" => Ok(FunctionChoice::Xi1),
            "xi2" => Ok(FunctionChoice::Xi2),
            other => Err(Error::Parse(format!("unknown function '{other}'"))),
        }
    }
}

/// `(S function, P₀ function)` for experiments 1 to 4.
pub fn experiment_functions(id: u8) -> Result<(FunctionChoice, FunctionChoice)> {
    use FunctionChoice::*;
    match id {
        1 => Ok((Rho1, Rho2)),
        2 => Ok((Rho1, Xi2)),
        3 => Ok((Xi1, Rho2)),
        4 => Ok((Xi1, Xi2)),
        other => Err(Error::InvalidConfig(format!("experiment id must be 1..=4, got {other}"))),
    }
}

/// Which rows of a (scheme, Nh) error curve enter the slope fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SlopeWindow {
    /// The `count` largest step sizes whose error exceeds `floor`.
    Largest { count: usize, floor: f64 },
    /// Step counts `min..=max`.
    NtRange { min: usize, max: usize },
}

impl Default for SlopeWindow {
    fn default() -> Self {
        SlopeWindow::Largest {
            count: 4,
            floor: 1e-11,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment_id: u8,
    pub s_choice: FunctionChoice,
    pub p0_choice: FunctionChoice,
    pub nh_list: Vec<usize>,
    pub nt_list: Vec<usize>,
    pub horizon: f64,
    /// The reference uses `2^tau_ref_exponent` Strang steps.
    pub tau_ref_exponent: u32,
    pub seed_s: u64,
    pub seed_p0: u64,
    pub quad_order: usize,
    pub compress_tol: f64,
    pub rank_cap: usize,
    /// The random functions are sampled on `2^master_exponent` nodes.
    pub master_exponent: u32,
    /// Karhunen–Loève modes; `None` takes every resolvable mode.
    pub modes: Option<usize>,
    pub slope_window: SlopeWindow,
    /// Worker count for the sweep, 0 meaning all cores.
    pub jobs: usize,
}

pub const DEFAULT_SEED_S: u64 = 1;
pub const DEFAULT_SEED_P0: u64 = 2;

fn powers_of_two(lo: u32, hi: u32) -> Vec<usize> {
    (lo..=hi).map(|k| 1usize << k).collect()
}

impl ExperimentConfig {
    /// Desk-scale defaults: `N_h ∈ {4, 16, 64, 256, 1024}`,
    /// `N_t ∈ {2², …, 2¹⁰}`, reference with `2¹²` steps, `T = 0.1`.
    pub fn desk(experiment_id: u8) -> Result<Self> {
        let (s_choice, p0_choice) = experiment_functions(experiment_id)?;
        Ok(Self {
            experiment_id,
            s_choice,
            p0_choice,
            nh_list: vec![4, 16, 64, 256, 1024],
            nt_list: powers_of_two(2, 10),
            horizon: 0.1,
            tau_ref_exponent: 12,
            seed_s: DEFAULT_SEED_S,
            seed_p0: DEFAULT_SEED_P0,
            quad_order: DEFAULT_QUAD_ORDER,
            compress_tol: DEFAULT_COMPRESS_TOL,
            rank_cap: DEFAULT_RANK_CAP,
            master_exponent: 17,
            modes: None,
            slope_window: SlopeWindow::default(),
            jobs: 0,
        })
    }

    /// Full-scale grid: `N_h = 2², …, 2¹⁴`, `N_t = 2², …, 2¹²`, reference
    /// with `2¹³` steps. Expect hours, and the dense eigendecomposition
    /// limits the largest grids by memory.
    pub fn full(experiment_id: u8) -> Result<Self> {
        Ok(Self {
            nh_list: powers_of_two(2, 14),
            nt_list: powers_of_two(2, 12),
            tau_ref_exponent: 13,
            ..Self::desk(experiment_id)?
        })
    }

    pub fn reference_steps(&self) -> usize {
        1usize << self.tau_ref_exponent
    }

    pub fn master_grid(&self) -> Result<PeriodicGrid> {
        PeriodicGrid::new(1usize << self.master_exponent)
    }

    pub fn modes(&self) -> usize {
        self.modes
            .unwrap_or(((1usize << self.master_exponent) / 2).saturating_sub(1))
    }

    pub fn scheme_config(&self, scheme: Scheme, num_steps: usize) -> SchemeConfig {
        SchemeConfig {
            scheme,
            num_steps,
            quad_order: self.quad_order,
            compress_tol: self.compress_tol,
            rank_cap: self.rank_cap,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let expected = experiment_functions(self.experiment_id)?;
        if (self.s_choice, self.p0_choice) != expected {
            return Err(Error::InvalidConfig(format!(
                "experiment {} uses S from {} and P0 from {}",
                self.experiment_id, expected.0, expected.1
            )));
        }
        if self.nh_list.is_empty() || self.nt_list.is_empty() {
            return Err(Error::InvalidConfig("empty Nh or Nt list".into()));
        }
        let master = 1usize << self.master_exponent;
        for &nh in &self.nh_list {
            if nh < 4 || !nh.is_power_of_two() || nh > master {
                return Err(Error::InvalidConfig(format!(
                    "Nh = {nh} must be a power of two in [4, {master}]"
                )));
            }
        }
        let reference = self.reference_steps();
        for &nt in &self.nt_list {
            if !nt.is_power_of_two() || nt >= reference {
                return Err(Error::InvalidConfig(format!(
                    "Nt = {nt} must be a power of two below the {reference} reference steps"
                )));
            }
        }
        if !(self.horizon > 0.0) {
            return Err(Error::InvalidConfig("T must be positive".into()));
        }
        if self.quad_order < 2 {
            return Err(Error::InvalidConfig("quadrature order must be at least 2".into()));
        }
        if !(self.compress_tol > 0.0 && self.compress_tol < 1.0) {
            return Err(Error::InvalidConfig("tolerance must lie in (0, 1)".into()));
        }
        let modes = self.modes();
        if modes == 0 || 2 * modes + 2 > master {
            return Err(Error::InvalidModeCount { modes, nodes: master });
        }
        Ok(())
    }

    /// Sets one option from its textual `key = value` form. List values are
    /// comma separated.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let bad = |what: &str| Error::Parse(format!("invalid value '{value}' for {what}"));
        match key.trim() {
            "experiment" | "id" | "experiment_id" => {
                let id: u8 = value.parse().map_err(|_| bad(key))?;
                let (s, p0) = experiment_functions(id)?;
                self.experiment_id = id;
                self.s_choice = s;
                self.p0_choice = p0;
            }
            "s_choice" => self.s_choice = value.parse()?,
            "p0_choice" => self.p0_choice = value.parse()?,
            "nh" | "nh_list" => self.nh_list = parse_list(value)?,
            "nt" | "nt_list" => self.nt_list = parse_list(value)?,
            "T" | "horizon" => self.horizon = value.parse().map_err(|_| bad(key))?,
            "tau_ref_exp" | "tau_ref_exponent" => {
                self.tau_ref_exponent = value.parse().map_err(|_| bad(key))?
            }
            "seed_s" => self.seed_s = value.parse().map_err(|_| bad(key))?,
            "seed_p0" => self.seed_p0 = value.parse().map_err(|_| bad(key))?,
            "quad_order" => self.quad_order = value.parse().map_err(|_| bad(key))?,
            "tol" | "compress_tol" => self.compress_tol = value.parse().map_err(|_| bad(key))?,
            "rank_cap" => self.rank_cap = value.parse().map_err(|_| bad(key))?,
            "master_exp" | "master_exponent" => {
                self.master_exponent = value.parse().map_err(|_| bad(key))?
            }
            "modes" => {
                self.modes = if value == "auto" {
                    None
                } else {
                    Some(value.parse().map_err(|_| bad(key))?)
                }
            }
            "jobs" => self.jobs = value.parse().map_err(|_| bad(key))?,
            "slope_window" => self.slope_window = parse_window(value)?,
            other => return Err(Error::Parse(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Applies flat `key = value` lines; `#` starts a comment.
    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected 'key = value'", lineno + 1)))?;
            self.set(key, value)?;
        }
        Ok(())
    }
}

fn parse_list(value: &str) -> Result<Vec<usize>> {
    value
        .split(',')
        .map(|v| v.trim())
        .filter(|v| !v.is_empty())
        .map(|v| {
            v.parse()
                .map_err(|_| Error::Parse(format!("invalid list entry '{v}'")))
        })
        .collect()
}

/// `largest:COUNT[:FLOOR]` or `nt:MIN-MAX`.
fn parse_window(value: &str) -> Result<SlopeWindow> {
    let bad = || Error::Parse(format!("invalid slope window '{value}'"));
    let mut parts = value.split(':');
    match parts.next().map(str::trim) {
        Some("largest") => {
            let count = parts.next().ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
            let floor = match parts.next() {
                Some(f) => f.trim().parse().map_err(|_| bad())?,
                None => 1e-11,
            };
            Ok(SlopeWindow::Largest { count, floor })
        }
        Some("nt") => {
            let range = parts.next().ok_or_else(bad)?;
            let (lo, hi) = range.split_once('-').ok_or_else(bad)?;
            Ok(SlopeWindow::NtRange {
                min: lo.trim().parse().map_err(|_| bad())?,
                max: hi.trim().parse().map_err(|_| bad())?,
            })
        }
        _ => Err(bad()),
    }
}

/// The two random functions of an experiment on the master grid.
#[derive(Debug, Clone)]
pub struct ExperimentFunctions {
    pub control: SampledFunction,
    pub initial: SampledFunction,
}

pub fn sample_functions(config: &ExperimentConfig) -> Result<ExperimentFunctions> {
    let master = config.master_grid()?;
    let modes = config.modes();
    Ok(ExperimentFunctions {
        control: sample_q_wiener(config.s_choice.regularity(), modes, config.seed_s, &master)?,
        initial: sample_q_wiener(config.p0_choice.regularity(), modes, config.seed_p0, &master)?,
    })
}

/// Galerkin problem on `nh` nodes for observation `Ex = ∫ x`, control
/// `Bu = u ρ_S` and initial value `⟨·, ζ⟩ ζ`.
pub fn build_problem(config: &ExperimentConfig, nh: usize) -> Result<CoefficientProblem> {
    build_problem_with(&sample_functions(config)?, config, nh)
}

pub fn build_problem_with(
    functions: &ExperimentFunctions,
    config: &ExperimentConfig,
    nh: usize,
) -> Result<CoefficientProblem> {
    let grid = PeriodicGrid::new(nh)?;
    let (mass, stiffness) = assemble_periodic_p1(nh)?;
    let control = project_to_grid(&functions.control, &grid)?;
    let initial = project_to_grid(&functions.initial, &grid)?;
    let bfac = build_load_vector(&control);
    let observation = vec![grid.h(); nh];
    let qfac = solve_periodic_mass(&grid, &observation);
    let z0 = build_p0_factor(&initial, &mass)?;
    CoefficientProblem::new(
        mass,
        stiffness,
        DMatrix::from_column_slice(nh, 1, bfac.as_slice()),
        DMatrix::from_column_slice(nh, 1, &qfac),
        z0,
        config.horizon,
    )
}

/// Strang run with `steps` steps of which only every `stride`-th iterate is
/// kept.
#[derive(Debug, Clone)]
pub struct ReferenceTrajectory {
    pub steps: usize,
    pub stride: usize,
    pub factors: Vec<LowRankFactor>,
    pub max_rank: usize,
}

impl ReferenceTrajectory {
    /// Reference iterate at `t = n T / nt`.
    pub fn at(&self, n: usize, nt: usize) -> Result<&LowRankFactor> {
        if nt == 0
            || !self.steps.is_multiple_of(nt)
            || !(self.steps / nt).is_multiple_of(self.stride)
            || n > nt
        {
            return Err(Error::InvalidConfig(format!(
                "no reference iterate for step {n} of {nt} (reference {} steps, stride {})",
                self.steps, self.stride
            )));
        }
        Ok(&self.factors[n * (self.steps / nt) / self.stride])
    }
}

/// Reference indices that coincide with the grid `τ = T / 2^j`.
pub fn reference_indices(tau_ref_exponent: u32, j: u32) -> Vec<usize> {
    let steps = 1usize << tau_ref_exponent;
    let stride = 1usize << (tau_ref_exponent - j);
    (0..=steps).step_by(stride).collect()
}

pub fn compute_reference(
    problem: &CoefficientProblem,
    config: &ExperimentConfig,
) -> Result<ReferenceTrajectory> {
    let steps = config.reference_steps();
    let finest = config.nt_list.iter().copied().max().unwrap_or(1);
    if !steps.is_multiple_of(finest) {
        return Err(Error::InvalidConfig(format!(
            "Nt = {finest} does not divide the {steps} reference steps"
        )));
    }
    let stride = steps / finest;
    let scheme = config.scheme_config(Scheme::Strang, steps);
    let mut factors = Vec::with_capacity(finest + 1);
    let summary = integrate_streaming(problem, &scheme, |k, z| {
        if k % stride == 0 {
            factors.push(z.clone());
        }
        Ok(())
    })?;
    Ok(ReferenceTrajectory {
        steps,
        stride,
        factors,
        max_rank: summary.ranks.into_iter().max().unwrap_or(0),
    })
}

/// `max_{n=1..N_t} ‖L_Mᵀ (P^n − P_ref(nτ)) L_M‖₂`.
pub fn compute_err_tau(
    factors: &[LowRankFactor],
    reference: &ReferenceTrajectory,
    mass_chol: &LowerTriangular,
) -> Result<f64> {
    let nt = factors.len().saturating_sub(1);
    let mut worst: f64 = 0.0;
    for (n, z) in factors.iter().enumerate().skip(1) {
        let err = weighted_spectral_norm_diff(z, reference.at(n, nt)?, mass_chol)?;
        worst = worst.max(err);
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub scheme: Scheme,
    pub nh: usize,
    pub nt: usize,
    pub tau: f64,
    pub err: Option<f64>,
    pub max_rank: usize,
    pub wall_time_s: f64,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub scheme: Scheme,
    pub nh: usize,
    pub slope: Option<f64>,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorTable {
    pub experiment_id: u8,
    pub rows: Vec<ErrorRow>,
    pub slopes: Vec<SlopeFit>,
    pub window: SlopeWindow,
}

/// Least-squares slope of `log₂ err` against `log₂ τ` over the rows selected
/// by `window`. Needs at least three usable points.
pub fn estimate_order(rows: &[ErrorRow], window: &SlopeWindow) -> Option<f64> {
    let mut usable: Vec<(usize, f64, f64)> = rows
        .iter()
        .filter_map(|r| r.err.filter(|e| *e > 0.0).map(|e| (r.nt, r.tau, e)))
        .collect();
    usable.sort_by(|a, b| b.1.total_cmp(&a.1));
    let chosen: Vec<(f64, f64)> = match window {
        SlopeWindow::Largest { count, floor } => usable
            .iter()
            .filter(|(_, _, e)| e > floor)
            .take(*count)
            .map(|&(_, t, e)| (t, e))
            .collect(),
        SlopeWindow::NtRange { min, max } => usable
            .iter()
            .filter(|(nt, _, _)| nt >= min && nt <= max)
            .map(|&(_, t, e)| (t, e))
            .collect(),
    };
    least_squares_slope(&chosen)
}

fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 3 {
        return None;
    }
    let xs: Vec<f64> = points.iter().map(|(t, _)| t.log2()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, e)| e.log2()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// Runs one (scheme, N_t) integration, streaming the error against the
/// reference instead of storing the trajectory.
pub fn run_cell(
    problem: &CoefficientProblem,
    reference: &ReferenceTrajectory,
    config: &ExperimentConfig,
    scheme: Scheme,
    nt: usize,
) -> ErrorRow {
    let started = Instant::now();
    let scheme_config = config.scheme_config(scheme, nt);
    let mut worst: f64 = 0.0;
    let outcome = integrate_streaming(problem, &scheme_config, |n, z| {
        if n > 0 {
            let err = weighted_spectral_norm_diff(z, reference.at(n, nt)?, problem.mass_chol())?;
            worst = worst.max(err);
        }
        Ok(())
    });
    let (err, max_rank, failure) = match outcome {
        Ok(summary) => (Some(worst), summary.ranks.into_iter().max().unwrap_or(0), None),
        Err(e) => (None, 0, Some(e.to_string())),
    };
    ErrorRow {
        scheme,
        nh: problem.n(),
        nt,
        tau: config.horizon / nt as f64,
        err,
        max_rank,
        wall_time_s: started.elapsed().as_secs_f64(),
        failure,
    }
}

struct Level {
    nh: usize,
    prepared: Result<(CoefficientProblem, ReferenceTrajectory)>,
}

/// Full sweep over `nh_list × {Lie, Strang} × nt_list`. Per-cell failures
/// are recorded in the table; the sweep continues.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ErrorTable> {
    run_experiment_with(config, Executor::new(config.jobs))
}

pub fn run_experiment_with(config: &ExperimentConfig, executor: Executor) -> Result<ErrorTable> {
    config.validate()?;
    let functions = sample_functions(config)?;

    // every reference is complete before any cell of its grid starts
    let levels: Vec<Level> = executor.map(config.nh_list.clone(), |nh| {
        let prepared = build_problem_with(&functions, config, nh)
            .and_then(|p| p.modal())
            .and_then(|p| compute_reference(&p, config).map(|r| (p, r)));
        Level { nh, prepared }
    });

    let mut cells = Vec::new();
    for (li, _) in levels.iter().enumerate() {
        for scheme in [Scheme::Lie, Scheme::Strang] {
            for &nt in &config.nt_list {
                cells.push((li, scheme, nt));
            }
        }
    }
    let mut rows = executor.map(cells, |(li, scheme, nt)| {
        let level = &levels[li];
        match &level.prepared {
            Ok((problem, reference)) => run_cell(problem, reference, config, scheme, nt),
            Err(e) => ErrorRow {
                scheme,
                nh: level.nh,
                nt,
                tau: config.horizon / nt as f64,
                err: None,
                max_rank: 0,
                wall_time_s: 0.0,
                failure: Some(e.to_string()),
            },
        }
    });
    rows.sort_by_key(|r| (r.scheme, r.nh, r.nt));
    Ok(ErrorTable::from_rows(config.experiment_id, rows, config.slope_window.clone()))
}

impl ErrorTable {
    pub fn from_rows(experiment_id: u8, rows: Vec<ErrorRow>, window: SlopeWindow) -> Self {
        let mut groups: BTreeMap<(Scheme, usize), Vec<ErrorRow>> = BTreeMap::new();
        for row in &rows {
            groups.entry((row.scheme, row.nh)).or_default().push(row.clone());
        }
        let slopes = groups
            .into_iter()
            .map(|((scheme, nh), group)| SlopeFit {
                scheme,
                nh,
                slope: estimate_order(&group, &window),
                points: group.iter().filter(|r| r.err.is_some()).count(),
            })
            .collect();
        Self {
            experiment_id,
            rows,
            slopes,
            window,
        }
    }

    pub fn rows_for(&self, scheme: Scheme, nh: usize) -> Vec<ErrorRow> {
        self.rows
            .iter()
            .filter(|r| r.scheme == scheme && r.nh == nh)
            .cloned()
            .collect()
    }

    pub fn slope(&self, scheme: Scheme, nh: usize) -> Option<f64> {
        self.slopes
            .iter()
            .find(|s| s.scheme == scheme && s.nh == nh)
            .and_then(|s| s.slope)
    }

    /// Slope over an explicit window, independent of the table's default.
    pub fn slope_in(&self, scheme: Scheme, nh: usize, window: &SlopeWindow) -> Option<f64> {
        estimate_order(&self.rows_for(scheme, nh), window)
    }

    pub fn err(&self, scheme: Scheme, nh: usize, nt: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.scheme == scheme && r.nh == nh && r.nt == nt)
            .and_then(|r| r.err)
    }

    pub fn failures(&self) -> Vec<&ErrorRow> {
        self.rows.iter().filter(|r| r.failure.is_some()).collect()
    }

    /// `scheme,Nh,Nt,tau,err,max_rank,wall_time_s`, errors at 17 significant
    /// digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "scheme,Nh,Nt,tau,err,max_rank,wall_time_s")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{:.16e},{},{},{:.3}",
                r.scheme,
                r.nh,
                r.nt,
                r.tau,
                fmt_err(r.err),
                r.max_rank,
                r.wall_time_s
            )?;
        }
        Ok(())
    }

    /// Whitespace-separated `tau err_Nh4 err_Nh16 …`, one line per step size.
    pub fn write_plot_data<W: Write>(&self, scheme: Scheme, mut out: W) -> Result<()> {
        let mut nhs: Vec<usize> = self.rows.iter().map(|r| r.nh).collect();
        nhs.sort_unstable();
        nhs.dedup();
        let mut nts: Vec<usize> = self.rows.iter().map(|r| r.nt).collect();
        nts.sort_unstable();
        nts.dedup();
        write!(out, "tau")?;
        for nh in &nhs {
            write!(out, " err_Nh{nh}")?;
        }
        writeln!(out)?;
        for nt in nts {
            let tau = self
                .rows
                .iter()
                .find(|r| r.nt == nt)
                .map(|r| r.tau)
                .unwrap_or(f64::NAN);
            write!(out, "{tau:.16e}")?;
            for &nh in &nhs {
                write!(out, " {}", fmt_err(self.err(scheme, nh, nt)))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

fn fmt_err(err: Option<f64>) -> String {
    match err {
        Some(e) => format!("{e:.16e}"),
        None => "nan".to_string(),
    }
}

/// Everything needed to rerun an experiment bit for bit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMetadata {
    pub crate_version: String,
    pub config: ExperimentConfig,
    pub master_nodes: usize,
    pub modes: usize,
    pub reference_steps: usize,
    pub decay_exponents: BTreeMap<String, f64>,
    pub slopes: Vec<SlopeFit>,
    pub failures: Vec<ErrorRow>,
    pub notes: Vec<String>,
}

impl RunMetadata {
    pub fn new(config: &ExperimentConfig, table: &ErrorTable) -> Self {
        let mut decay = BTreeMap::new();
        decay.insert("H2per".to_string(), Regularity::H2per.decay_exponent());
        decay.insert("H0".to_string(), Regularity::H0.decay_exponent());
        let mut notes = Vec::new();
        if config.master_exponent < 17 {
            notes.push(format!(
                "random functions sampled on 2^{} instead of 2^17 nodes; fewer modes are resolved",
                config.master_exponent
            ));
        }
        Self {
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            master_nodes: 1usize << config.master_exponent,
            modes: config.modes(),
            reference_steps: config.reference_steps(),
            decay_exponents: decay,
            slopes: table.slopes.clone(),
            failures: table.failures().into_iter().cloned().collect(),
            notes,
        }
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self).map_err(|e| Error::Io(e.to_string()))
    }
}
