//! Exact subproblem flows for the coefficient-space Riccati equation
//!
//! ```text
//! dP/dt = DᵀP + PD + q qᵀ − P B Bᵀ P,   D = A M⁻¹,  q = M⁻¹ Eᵀ,
//! ```
//!
//! which is the Galerkin system `M Ṗ M = M P A + Aᵀ P M + EᵀE − M P B Bᵀ P M`
//! with the mass matrices eliminated. The affine part `F` is solved by the
//! semigroup congruence plus a quadrature of the constant term, the
//! quadratic part `G` in closed form. Both act on `P = Z Zᵀ` through the
//! factor only.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{
    cholesky, generalized_eigh, semigroup_apply, DenseSymMatrix, LowerTriangular, SpectralDecomp,
};
use crate::lowrank::{compress, concat, LowRankFactor, DEFAULT_COMPRESS_TOL};

pub const DEFAULT_QUAD_ORDER: usize = 6;
pub const DEFAULT_RANK_CAP: usize = 2000;

/// Galerkin Riccati problem in coefficient form.
#[derive(Debug, Clone)]
pub struct CoefficientProblem {
    mass: DenseSymMatrix,
    stiffness: DenseSymMatrix,
    decomp: SpectralDecomp,
    bfac: DMatrix<f64>,
    qfac: DMatrix<f64>,
    qfac_modal: DMatrix<f64>,
    z0: LowRankFactor,
    horizon: f64,
    mass_chol: LowerTriangular,
}

impl CoefficientProblem {
    /// `bfac` holds the load vectors `⟨B e_k, φᵢ⟩` column-wise, `qfac` the
    /// columns of `M⁻¹ Eᵀ`.
    pub fn new(
        mass: DenseSymMatrix,
        stiffness: DenseSymMatrix,
        bfac: DMatrix<f64>,
        qfac: DMatrix<f64>,
        z0: LowRankFactor,
        horizon: f64,
    ) -> Result<Self> {
        let decomp = generalized_eigh(&stiffness, &mass)?;
        let mass_chol = cholesky(&mass)?;
        Self::from_parts(mass, stiffness, decomp, mass_chol, bfac, qfac, z0, horizon)
    }

    #[allow(clippy::too_many_arguments)]
    fn from_parts(
        mass: DenseSymMatrix,
        stiffness: DenseSymMatrix,
        decomp: SpectralDecomp,
        mass_chol: LowerTriangular,
        bfac: DMatrix<f64>,
        qfac: DMatrix<f64>,
        z0: LowRankFactor,
        horizon: f64,
    ) -> Result<Self> {
        let n = mass.n();
        for found in [stiffness.n(), bfac.nrows(), qfac.nrows(), z0.n()] {
            if found != n {
                return Err(Error::DimensionMismatch { expected: n, found });
            }
        }
        if !(horizon > 0.0) {
            return Err(Error::InvalidConfig(format!("horizon must be positive, got {horizon}")));
        }
        let qfac_modal = decomp.to_modal(&qfac)?;
        Ok(Self {
            mass,
            stiffness,
            decomp,
            bfac,
            qfac,
            qfac_modal,
            z0,
            horizon,
            mass_chol,
        })
    }

    /// The same problem expressed in the M-orthonormal eigenbasis `V` of
    /// `(A, M)`: with `P = V P̃ Vᵀ` the mass matrix becomes `I`, the
    /// stiffness matrix `diag(λ)`, and `‖L_Mᵀ P L_M‖₂ = ‖P̃‖₂`. Every flow then
    /// costs O(n r²) instead of O(n² r).
    pub fn modal(&self) -> Result<Self> {
        let lambda = self.decomp.eigenvalues().clone();
        let n = lambda.len();
        let stiffness = DenseSymMatrix::from_diagonal(lambda.as_slice());
        let bfac = self.decomp.vectors().tr_mul(&self.bfac);
        let z0 = LowRankFactor::new(self.decomp.to_modal(self.z0.factor())?)?;
        Self::from_parts(
            DenseSymMatrix::identity(n),
            stiffness,
            SpectralDecomp::diagonal(lambda),
            LowerTriangular::identity(n),
            bfac,
            self.qfac_modal.clone(),
            z0,
            self.horizon,
        )
    }

    /// Maps a factor of [`Self::modal`] back to nodal coefficients.
    pub fn nodal_factor(&self, modal: &LowRankFactor) -> Result<LowRankFactor> {
        LowRankFactor::new(self.decomp.from_modal(modal.factor())?)
    }

    pub fn n(&self) -> usize {
        self.mass.n()
    }

    pub fn mass(&self) -> &DenseSymMatrix {
        &self.mass
    }

    pub fn stiffness(&self) -> &DenseSymMatrix {
        &self.stiffness
    }

    pub fn decomp(&self) -> &SpectralDecomp {
        &self.decomp
    }

    pub fn bfac(&self) -> &DMatrix<f64> {
        &self.bfac
    }

    pub fn qfac(&self) -> &DMatrix<f64> {
        &self.qfac
    }

    pub fn z0(&self) -> &LowRankFactor {
        &self.z0
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn mass_chol(&self) -> &LowerTriangular {
        &self.mass_chol
    }

    /// Copy with a different initial factor.
    pub fn with_initial(&self, z0: LowRankFactor) -> Result<Self> {
        if z0.n() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: z0.n(),
            });
        }
        Ok(Self { z0, ..self.clone() })
    }

    /// Copy with a different control factor.
    pub fn with_bfac(&self, bfac: DMatrix<f64>) -> Result<Self> {
        if bfac.nrows() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: bfac.nrows(),
            });
        }
        Ok(Self { bfac, ..self.clone() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Scheme {
    Lie,
    Strang,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Lie => "lie",
            Scheme::Strang => "strang",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lie" => Ok(Scheme::Lie),
            "strang" => Ok(Scheme::Strang),
            other => Err(Error::Parse(format!("unknown scheme '{other}'"))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub num_steps: usize,
    pub quad_order: usize,
    pub compress_tol: f64,
    pub rank_cap: usize,
}

impl SchemeConfig {
    pub fn new(scheme: Scheme, num_steps: usize) -> Self {
        Self {
            scheme,
            num_steps,
            quad_order: DEFAULT_QUAD_ORDER,
            compress_tol: DEFAULT_COMPRESS_TOL,
            rank_cap: DEFAULT_RANK_CAP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_steps == 0 {
            return Err(Error::InvalidConfig("numSteps must be at least 1".into()));
        }
        if self.quad_order < 2 {
            return Err(Error::InvalidConfig("quadrature order must be at least 2".into()));
        }
        if !(self.compress_tol > 0.0 && self.compress_tol < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "compression tolerance must lie in (0, 1), got {}",
                self.compress_tol
            )));
        }
        Ok(())
    }

    pub fn tau(&self, horizon: f64) -> f64 {
        horizon / self.num_steps as f64
    }
}

/// All iterates of one integration; `factors[k]` approximates `P(kτ)`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub factors: Vec<LowRankFactor>,
    pub ranks: Vec<usize>,
}

/// Exact flow of `dP/dt = −P B Bᵀ P`: `(I + t P S)⁻¹ P`.
///
/// With `K = Zᵀ B` and `C Cᵀ = I + t K Kᵀ`, the push-through identity gives
/// `(I + t Z Zᵀ S)⁻¹ Z Zᵀ = Z (C Cᵀ)⁻¹ Zᵀ`, so the new factor is `Z C⁻ᵀ`.
pub fn g_flow(z: &LowRankFactor, bfac: &DMatrix<f64>, t: f64) -> Result<LowRankFactor> {
    if bfac.nrows() != z.n() {
        return Err(Error::DimensionMismatch {
            expected: z.n(),
            found: bfac.nrows(),
        });
    }
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    if t == 0.0 || z.rank() == 0 {
        return Ok(z.clone());
    }
    let k = z.factor().tr_mul(bfac);
    let r = z.rank();
    let gram = DMatrix::identity(r, r) + (&k * k.transpose()) * t;
    let c = cholesky(&DenseSymMatrix::new(gram)?)?;
    let scaled = c.solve(&z.factor().transpose())?;
    LowRankFactor::new(scaled.transpose())
}

/// Exact flow of the affine part `dP/dt = DᵀP + PD + q qᵀ`:
///
/// ```text
/// exp(tF) P = E_t P E_tᵀ + ∫₀ᵗ E_{t−s} q qᵀ E_{t−s}ᵀ ds,   E_t = exp(t M⁻¹ A),
/// ```
///
/// with the integral replaced by `quad_order`-point Gauss–Legendre. The
/// factor is `[E_t Z, √wᵢ E_{t−sᵢ} q]`, compressed at `compress_tol`.
pub fn f_flow(
    problem: &CoefficientProblem,
    z: &LowRankFactor,
    t: f64,
    quad_order: usize,
    compress_tol: f64,
) -> Result<LowRankFactor> {
    if z.n() != problem.n() {
        return Err(Error::DimensionMismatch {
            expected: problem.n(),
            found: z.n(),
        });
    }
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    if t == 0.0 {
        return Ok(z.clone());
    }
    let propagated = LowRankFactor::new(semigroup_apply(&problem.decomp, t, z.factor())?)?;

    let (nodes, weights) = gauss_legendre(quad_order);
    let p = problem.qfac.ncols();
    let mut modal = DMatrix::zeros(problem.n(), nodes.len() * p);
    for (i, (x, w)) in nodes.iter().zip(&weights).enumerate() {
        let s = 0.5 * t * (x + 1.0);
        let sw = (0.5 * t * w).sqrt();
        let mut block = problem.qfac_modal.clone() * sw;
        problem.decomp.scale_modal(t - s, &mut block);
        modal.columns_mut(i * p, p).copy_from(&block);
    }
    let source = LowRankFactor::new(problem.decomp.from_modal(&modal)?)?;

    Ok(compress(&concat(&propagated, &source)?, compress_tol))
}

/// `exp(τF) exp(τG)`: the quadratic flow first, then the affine one.
pub fn lie_step(
    problem: &CoefficientProblem,
    z: &LowRankFactor,
    tau: f64,
    config: &SchemeConfig,
) -> Result<LowRankFactor> {
    let after_g = g_flow(z, &problem.bfac, tau)?;
    f_flow(problem, &after_g, tau, config.quad_order, config.compress_tol)
}

/// `exp(τ/2 F) exp(τG) exp(τ/2 F)`.
pub fn strang_step(
    problem: &CoefficientProblem,
    z: &LowRankFactor,
    tau: f64,
    config: &SchemeConfig,
) -> Result<LowRankFactor> {
    let half = 0.5 * tau;
    let first = f_flow(problem, z, half, config.quad_order, config.compress_tol)?;
    let mid = g_flow(&first, &problem.bfac, tau)?;
    f_flow(problem, &mid, half, config.quad_order, config.compress_tol)
}

pub fn step(
    problem: &CoefficientProblem,
    z: &LowRankFactor,
    tau: f64,
    config: &SchemeConfig,
) -> Result<LowRankFactor> {
    match config.scheme {
        Scheme::Lie => lie_step(problem, z, tau, config),
        Scheme::Strang => strang_step(problem, z, tau, config),
    }
}

/// Final iterate and per-step ranks of a streamed integration.
#[derive(Debug, Clone)]
pub struct StreamSummary {
    pub last: LowRankFactor,
    pub ranks: Vec<usize>,
}

/// Integrates from `z0` over `[0, T]`, handing every iterate (including the
/// initial one) to `visit` instead of storing it.
pub fn integrate_streaming<F>(
    problem: &CoefficientProblem,
    config: &SchemeConfig,
    mut visit: F,
) -> Result<StreamSummary>
where
    F: FnMut(usize, &LowRankFactor) -> Result<()>,
{
    config.validate()?;
    let tau = config.tau(problem.horizon);
    let mut current = problem.z0.clone();
    let mut ranks = Vec::with_capacity(config.num_steps + 1);
    ranks.push(current.rank());
    visit(0, &current)?;
    for k in 1..=config.num_steps {
        current = step(problem, &current, tau, config)?;
        if current.rank() > config.rank_cap {
            return Err(Error::RankExplosion {
                step: k,
                rank: current.rank(),
                cap: config.rank_cap,
            });
        }
        ranks.push(current.rank());
        visit(k, &current)?;
    }
    Ok(StreamSummary { last: current, ranks })
}

/// Integrates and keeps every iterate.
pub fn integrate(problem: &CoefficientProblem, config: &SchemeConfig) -> Result<Trajectory> {
    let mut factors = Vec::with_capacity(config.num_steps + 1);
    let summary = integrate_streaming(problem, config, |_, z| {
        factors.push(z.clone());
        Ok(())
    })?;
    Ok(Trajectory {
        factors,
        ranks: summary.ranks,
    })
}

/// Gauss–Legendre nodes and weights on `[−1, 1]` by Newton iteration on the
/// three-term recurrence.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut deriv = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            deriv = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / deriv;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * deriv * deriv);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Coefficient vector helper for single-column data.
pub fn column(values: &[f64]) -> DMatrix<f64> {
    DMatrix::from_column_slice(values.len(), 1, values)
}

/// Dense nodal vector as a single-column factor.
pub fn rank_one(v: &DVector<f64>) -> Result<LowRankFactor> {
    LowRankFactor::new(DMatrix::from_column_slice(v.len(), 1, v.as_slice()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{sym_spectral_norm, weighted_spectral_norm_diff};
    use crate::oracle::{dense_g_flow, random_problem, rk4_quadratic, DenseProblem};

    fn dense_norm(m: DMatrix<f64>) -> f64 {
        sym_spectral_norm(&DenseSymMatrix::new(m).unwrap()).unwrap()
    }

    fn scalar_problem(a: f64, q: f64, b: f64, z: f64) -> CoefficientProblem {
        CoefficientProblem::new(
            DenseSymMatrix::identity(1),
            DenseSymMatrix::from_diagonal(&[a]),
            column(&[b]),
            column(&[q]),
            LowRankFactor::new(column(&[z])).unwrap(),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn gauss_legendre_exactness() {
        for n in 1..=10 {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            for deg in 0..(2 * n) {
                let quad: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((quad - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn g_flow_scalar() {
        let z = LowRankFactor::new(column(&[1.0])).unwrap();
        let out = g_flow(&z, &column(&[1.0]), 1.0).unwrap();
        assert!((out.factor()[(0, 0)] - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((out.expand()[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn g_flow_identity_cases() {
        let z = LowRankFactor::new(DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0])).unwrap();
        assert_eq!(g_flow(&z, &column(&[1.0, 2.0, 3.0]), 0.0).unwrap(), z);
        let out = g_flow(&z, &column(&[0.0, 2.0, 3.0]), 0.7).unwrap();
        assert_eq!(out, z);
        assert!(matches!(g_flow(&z, &column(&[0.0, 2.0, 3.0]), -0.1), Err(Error::NegativeTime(_))));
    }

    #[test]
    fn g_flow_matches_dense_and_rk4() {
        let problem = random_problem(8, 3, 17);
        let dense = DenseProblem::from_problem(&problem).unwrap();
        let t = 0.8;
        let out = g_flow(problem.z0(), problem.bfac(), t).unwrap().expand();
        let p0 = problem.z0().expand();
        let exact = dense_g_flow(&p0, &dense.s, t).unwrap();
        let scale = p0.amax();
        assert!((&out - &exact).amax() <= 1e-12 * scale);
        let rk = rk4_quadratic(&p0, &dense.s, t, 10_000);
        assert!((&out - &rk).amax() <= 1e-8 * scale);
    }

    #[test]
    fn g_flow_composition_and_bounds() {
        let problem = random_problem(10, 4, 5);
        let z = problem.z0();
        let b = problem.bfac();
        let (s, t) = (0.3, 0.45);
        let two = g_flow(&g_flow(z, b, s).unwrap(), b, t).unwrap().expand();
        let one = g_flow(z, b, s + t).unwrap().expand();
        assert!((&two - &one).amax() <= 1e-12 * one.amax().max(1.0));

        let rho = z.represented_norm();
        let s_norm = dense_norm(b * b.transpose());
        for t in [0.0, 0.05, 0.5, 2.0] {
            let norm = g_flow(z, b, t).unwrap().represented_norm();
            assert!(norm <= rho * (1.0 + 1e-12));
            assert!(norm <= (1.0 + t * rho * s_norm) * rho);
        }
    }

    #[test]
    fn f_flow_scalar_closed_form() {
        let problem = scalar_problem(-1.0, 1.0, 0.0, 0.0);
        let out = f_flow(&problem, problem.z0(), 1.0, 6, 1e-15).unwrap();
        let exact = (1.0 - (-2.0f64).exp()) / 2.0;
        assert!((out.expand()[(0, 0)] - exact).abs() < 1e-10);
    }

    #[test]
    fn f_flow_identity_cases() {
        let problem = random_problem(5, 2, 3);
        let z = problem.z0();
        assert_eq!(f_flow(&problem, z, 0.0, 6, 1e-15).unwrap(), *z);

        let n = 5;
        let trivial = CoefficientProblem::new(
            problem.mass().clone(),
            DenseSymMatrix::new(DMatrix::zeros(n, n)).unwrap(),
            problem.bfac().clone(),
            DMatrix::zeros(n, 1),
            z.clone(),
            1.0,
        )
        .unwrap();
        let out = f_flow(&trivial, z, 0.3, 6, 1e-15).unwrap();
        assert!((out.expand() - z.expand()).amax() < 1e-13 * z.expand().amax());
    }

    #[test]
    fn f_flow_composition() {
        let problem = random_problem(8, 2, 8);
        let z = problem.z0();
        let (s, t) = (0.02, 0.03);
        let two = f_flow(&problem, &f_flow(&problem, z, s, 6, 1e-15).unwrap(), t, 6, 1e-15).unwrap();
        let one = f_flow(&problem, z, s + t, 6, 1e-15).unwrap();
        let diff = dense_norm(two.expand() - one.expand());
        assert!(diff <= 1e-11 * one.represented_norm(), "diff {diff}");
    }

    #[test]
    fn steps_reduce_to_single_flows() {
        let problem = random_problem(6, 2, 12);
        let cfg = SchemeConfig::new(Scheme::Lie, 1);
        let tau = 0.05;
        let z = problem.z0();

        let no_control = problem.with_bfac(DMatrix::zeros(6, 1)).unwrap();
        let lie = lie_step(&no_control, z, tau, &cfg).unwrap();
        let f = f_flow(&no_control, z, tau, 6, 1e-15).unwrap();
        assert!((lie.expand() - f.expand()).amax() < 1e-14 * f.expand().amax());
        let strang = strang_step(&no_control, z, tau, &cfg).unwrap();
        assert!(dense_norm(strang.expand() - f.expand()) < 1e-12 * f.represented_norm());

        let linear_free = CoefficientProblem::new(
            problem.mass().clone(),
            DenseSymMatrix::new(DMatrix::zeros(6, 6)).unwrap(),
            problem.bfac().clone(),
            DMatrix::zeros(6, 1),
            z.clone(),
            1.0,
        )
        .unwrap();
        let lie = lie_step(&linear_free, z, tau, &cfg).unwrap();
        let g = g_flow(z, problem.bfac(), tau).unwrap();
        assert!((lie.expand() - g.expand()).amax() < 1e-13 * g.expand().amax());

        let strang = strang_step(&problem, z, 0.0, &cfg).unwrap();
        assert!((strang.expand() - z.expand()).amax() == 0.0);
    }

    #[test]
    fn integrate_single_step_and_ranks() {
        let problem = random_problem(6, 1, 2);
        let cfg = SchemeConfig::new(Scheme::Strang, 1);
        let traj = integrate(&problem, &cfg).unwrap();
        assert_eq!(traj.factors.len(), 2);
        assert_eq!(traj.factors[0], *problem.z0());
        let once = strang_step(&problem, problem.z0(), problem.horizon(), &cfg).unwrap();
        assert_eq!(traj.factors[1], once);
        assert_eq!(traj.ranks, vec![1, once.rank()]);
    }

    #[test]
    fn integrate_reports_rank_explosion() {
        let problem = random_problem(6, 1, 2);
        let mut cfg = SchemeConfig::new(Scheme::Lie, 4);
        cfg.rank_cap = 1;
        assert!(matches!(integrate(&problem, &cfg), Err(Error::RankExplosion { step: 1, .. })));
        cfg.num_steps = 0;
        assert!(matches!(integrate(&problem, &cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn modal_problem_is_congruent() {
        let problem = random_problem(7, 2, 31);
        let modal = problem.modal().unwrap();
        let cfg = SchemeConfig::new(Scheme::Strang, 5);
        let nodal_traj = integrate(&problem, &cfg).unwrap();
        let modal_traj = integrate(&modal, &cfg).unwrap();
        for (zn, zm) in nodal_traj.factors.iter().zip(&modal_traj.factors) {
            let back = problem.nodal_factor(zm).unwrap();
            let diff = weighted_spectral_norm_diff(zn, &back, problem.mass_chol()).unwrap();
            assert!(diff <= 1e-12 * zn.represented_norm().max(1.0), "diff {diff}");
            // the weighted norm in modal coordinates is the plain spectral norm
            let w = weighted_spectral_norm_diff(zm, &LowRankFactor::zeros(7, 0), modal.mass_chol()).unwrap();
            let wn = weighted_spectral_norm_diff(zn, &LowRankFactor::zeros(7, 0), problem.mass_chol()).unwrap();
            assert!((w - wn).abs() <= 1e-12 * wn);
        }
    }
}
