//! Dense brute-force references for small problems.
//!
//! Nothing here touches the generalized eigendecomposition or the low-rank
//! machinery: the semigroup is a scaling-and-squaring Taylor exponential of
//! the dense generator `M⁻¹A`, the constant term of the affine flow is a
//! fine trapezoid sum, and the quadratic flow is a plain LU solve.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::flows::CoefficientProblem;
use crate::linalg::DenseSymMatrix;
use crate::lowrank::LowRankFactor;

/// Panel count of the trapezoid rule in [`dense_f_flow`].
pub const TRAPEZOID_PANELS: usize = 100_000;

const INSTABILITY_NORM: f64 = 1e8;

/// Dense data of the standard-form equation
/// `dP/dt = G P + P Gᵀ + Q − P S P` with `G = M⁻¹ A = Dᵀ`.
#[derive(Debug, Clone)]
pub struct DenseProblem {
    pub generator: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub qfac: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub p0: DMatrix<f64>,
    pub horizon: f64,
}

impl DenseProblem {
    pub fn from_problem(problem: &CoefficientProblem) -> Result<Self> {
        let lu = problem.mass().as_matrix().clone().lu();
        let generator = lu
            .solve(problem.stiffness().as_matrix())
            .ok_or(Error::NotPositiveDefinite { index: 0, pivot: 0.0 })?;
        Ok(Self {
            generator,
            s: problem.bfac() * problem.bfac().transpose(),
            qfac: problem.qfac().clone(),
            q: problem.qfac() * problem.qfac().transpose(),
            p0: problem.z0().expand(),
            horizon: problem.horizon(),
        })
    }

    pub fn n(&self) -> usize {
        self.generator.nrows()
    }

    /// Right-hand side `G P + P Gᵀ + Q − P S P`.
    pub fn rhs(&self, p: &DMatrix<f64>) -> DMatrix<f64> {
        let gp = &self.generator * p;
        &gp + gp.transpose() + &self.q - p * &self.s * p
    }
}

#[derive(Debug, Clone)]
pub struct DenseState {
    pub p: DMatrix<f64>,
    pub t: f64,
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Matrix exponential by scaling and squaring of a degree-18 Taylor sum.
pub fn dense_expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm1 = (0..n)
        .map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm1 > 0.25 {
        (norm1 / 0.25).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a / 2f64.powi(squarings);
    let mut term = DMatrix::identity(n, n);
    let mut sum = DMatrix::identity(n, n);
    for k in 1..=18 {
        term = &term * &scaled / k as f64;
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// `(I + t P S)⁻¹ P`, symmetrized.
pub fn dense_g_flow(p: &DMatrix<f64>, s: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let n = p.nrows();
    let lhs = DMatrix::identity(n, n) + p * s * t;
    let solved = lhs.lu().solve(p).ok_or(Error::NotPositiveDefinite { index: 0, pivot: 0.0 })?;
    Ok(symmetrize(solved))
}

/// `E_t P E_tᵀ + ∫₀ᵗ E_u Q E_uᵀ du` with the integral by the composite
/// trapezoid rule on `panels` panels.
pub fn dense_f_flow(p: &DMatrix<f64>, problem: &DenseProblem, t: f64, panels: usize) -> DMatrix<f64> {
    if t == 0.0 {
        return p.clone();
    }
    let et = dense_expm(&(&problem.generator * t));
    let mut out = &et * p * et.transpose();
    let h = t / panels as f64;
    let step = dense_expm(&(&problem.generator * h));
    let mut v = problem.qfac.clone();
    let mut acc = &v * v.transpose() * 0.5;
    for k in 1..=panels {
        v = &step * &v;
        let w = if k == panels { 0.5 } else { 1.0 };
        acc += &v * v.transpose() * w;
    }
    out += acc * h;
    symmetrize(out)
}

pub fn dense_lie_step(p: &DMatrix<f64>, problem: &DenseProblem, tau: f64) -> Result<DMatrix<f64>> {
    let g = dense_g_flow(p, &problem.s, tau)?;
    Ok(dense_f_flow(&g, problem, tau, TRAPEZOID_PANELS))
}

pub fn dense_strang_step(p: &DMatrix<f64>, problem: &DenseProblem, tau: f64) -> Result<DMatrix<f64>> {
    let f = dense_f_flow(p, problem, 0.5 * tau, TRAPEZOID_PANELS);
    let g = dense_g_flow(&f, &problem.s, tau)?;
    Ok(dense_f_flow(&g, problem, 0.5 * tau, TRAPEZOID_PANELS))
}

/// Classical RK4 for `dP/dt = −P S P` with `substeps` steps over `[0, t]`.
pub fn rk4_quadratic(p: &DMatrix<f64>, s: &DMatrix<f64>, t: f64, substeps: usize) -> DMatrix<f64> {
    let f = |x: &DMatrix<f64>| -(x * s * x);
    let h = t / substeps as f64;
    let mut x = p.clone();
    for _ in 0..substeps {
        let k1 = f(&x);
        let k2 = f(&(&x + &k1 * (0.5 * h)));
        let k3 = f(&(&x + &k2 * (0.5 * h)));
        let k4 = f(&(&x + &k3 * h));
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    x
}

/// Classical RK4 on the full right-hand side with `num_steps` steps over
/// `[0, T]`; returns every state.
pub fn dense_rk_reference(problem: &DenseProblem, num_steps: usize) -> Result<Vec<DenseState>> {
    if num_steps == 0 {
        return Err(Error::InvalidConfig("numSteps must be at least 1".into()));
    }
    let h = problem.horizon / num_steps as f64;
    let mut p = problem.p0.clone();
    let mut states = Vec::with_capacity(num_steps + 1);
    states.push(DenseState { p: p.clone(), t: 0.0 });
    for k in 1..=num_steps {
        let k1 = problem.rhs(&p);
        let k2 = problem.rhs(&(&p + &k1 * (0.5 * h)));
        let k3 = problem.rhs(&(&p + &k2 * (0.5 * h)));
        let k4 = problem.rhs(&(&p + &k3 * h));
        p = symmetrize(&p + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0));
        let norm = p.amax();
        if !norm.is_finite() || norm > INSTABILITY_NORM {
            return Err(Error::Instability { step: k, norm });
        }
        states.push(DenseState {
            p: p.clone(),
            t: k as f64 * h,
        });
    }
    Ok(states)
}

/// Largest central-difference residual
/// `‖(P_{k+1} − P_{k−1}) / 2τ − rhs(P_k)‖₂` over the interior states with
/// `t_k ≥ t_min`. Equally spaced states are assumed.
pub fn dre_residual(states: &[DenseState], problem: &DenseProblem, t_min: f64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 1..states.len().saturating_sub(1) {
        if states[k].t < t_min {
            continue;
        }
        let dt = states[k + 1].t - states[k - 1].t;
        let fd = (&states[k + 1].p - &states[k - 1].p) / dt;
        let res = fd - problem.rhs(&states[k].p);
        worst = worst.max(spectral_norm(&res)?);
    }
    Ok(worst)
}

fn spectral_norm(m: &DMatrix<f64>) -> Result<f64> {
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    Ok(m.clone().singular_values().max())
}

/// Densely expanded iterates of a factored trajectory.
pub fn expand_states(factors: &[LowRankFactor], tau: f64) -> Vec<DenseState> {
    factors
        .iter()
        .enumerate()
        .map(|(k, z)| DenseState {
            p: z.expand(),
            t: k as f64 * tau,
        })
        .collect()
}

/// Random small problem with SPD mass, negative semidefinite stiffness,
/// one control column, one observation column and a rank-`r0` initial
/// factor. Eigenvalues of `M⁻¹A` lie roughly in `[−4, 0]`.
pub fn random_problem(n: usize, r0: usize, seed: u64) -> CoefficientProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut uniform = |rows: usize, cols: usize, scale: f64| {
        DMatrix::from_fn(rows, cols, |_, _| scale * rng.gen_range(-1.0..1.0))
    };
    let g = uniform(n, n, 1.0);
    let mass = DMatrix::identity(n, n) + &g * g.transpose() * (0.5 / n as f64);
    let h = uniform(n, n, 1.0);
    let stiffness = -(&h * h.transpose()) * (3.0 / n as f64);
    let bfac = uniform(n, 1, 1.0);
    let qfac = uniform(n, 1, 0.5);
    let z0 = uniform(n, r0, 0.5);
    CoefficientProblem::new(
        DenseSymMatrix::new(mass).expect("finite"),
        DenseSymMatrix::new(stiffness).expect("finite"),
        bfac,
        qfac,
        LowRankFactor::new(z0).expect("finite"),
        0.5,
    )
    .expect("random problem is well posed")
}

/// Outcome of one property in [`self_check`].
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub cases: usize,
    /// Largest observed violation measure.
    pub worst: f64,
    pub tolerance: f64,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.worst.is_finite() && self.worst <= self.tolerance
    }
}

struct Tally {
    name: &'static str,
    tolerance: f64,
    cases: usize,
    worst: f64,
}

impl Tally {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            tolerance,
            cases: 0,
            worst: 0.0,
        }
    }

    fn record(&mut self, value: Result<f64>) {
        self.cases += 1;
        let v = value.unwrap_or(f64::INFINITY);
        self.worst = if v.is_nan() { f64::INFINITY } else { self.worst.max(v) };
    }

    fn finish(self) -> CheckOutcome {
        CheckOutcome {
            name: self.name,
            cases: self.cases,
            worst: self.worst,
            tolerance: self.tolerance,
        }
    }
}

fn relative_gap(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    let scale = spectral_norm(b)?.max(f64::MIN_POSITIVE);
    Ok(spectral_norm(&(a - b))? / scale)
}

/// Compares the low-rank flows and schemes with their dense counterparts on
/// `problems` random problems of size 8.
pub fn self_check(seed: u64, problems: usize) -> Vec<CheckOutcome> {
    use crate::flows::{f_flow, g_flow, lie_step, strang_step, Scheme, SchemeConfig, DEFAULT_QUAD_ORDER};
    use crate::linalg::sym_min_eigenvalue;
    use crate::lowrank::DEFAULT_COMPRESS_TOL;

    let tau = 0.1;
    let config = SchemeConfig::new(Scheme::Strang, 1);
    let mut g_dense = Tally::new("g_flow matches dense resolvent", 1e-12);
    let mut g_rk = Tally::new("g_flow matches RK4", 1e-7);
    let mut g_comp = Tally::new("g_flow composition", 1e-12);
    let mut g_bound = Tally::new("g_flow norm bound", 1e-12);
    let mut f_dense = Tally::new("f_flow matches dense quadrature", 1e-11);
    let mut lie = Tally::new("lie step matches dense", 1e-11);
    let mut strang = Tally::new("strang step matches dense", 1e-11);
    let mut psd = Tally::new("strang iterates stay PSD", 1e-11);

    for k in 0..problems {
        let problem = random_problem(8, 1 + k % 3, seed.wrapping_add(k as u64));
        let dense = match DenseProblem::from_problem(&problem) {
            Ok(d) => d,
            Err(e) => {
                for t in [&mut g_dense, &mut g_rk, &mut f_dense, &mut lie, &mut strang] {
                    t.record(Err(e.clone()));
                }
                continue;
            }
        };
        let z = problem.z0();
        let b = problem.bfac();
        g_dense.record(g_flow(z, b, tau).and_then(|g| relative_gap(&g.expand(), &dense_g_flow(&dense.p0, &dense.s, tau)?)));
        g_rk.record(g_flow(z, b, tau).and_then(|g| relative_gap(&g.expand(), &rk4_quadratic(&dense.p0, &dense.s, tau, 2000))));
        g_comp.record((|| {
            let two = g_flow(&g_flow(z, b, 0.3 * tau)?, b, 0.7 * tau)?;
            relative_gap(&two.expand(), &g_flow(z, b, tau)?.expand())
        })());
        g_bound.record(g_flow(z, b, tau).map(|g| {
            let (after, before) = (g.represented_norm(), z.represented_norm());
            ((after - before) / before.max(f64::MIN_POSITIVE)).max(0.0)
        }));
        f_dense.record(
            f_flow(&problem, z, tau, DEFAULT_QUAD_ORDER, DEFAULT_COMPRESS_TOL)
                .and_then(|f| relative_gap(&f.expand(), &dense_f_flow(&dense.p0, &dense, tau, TRAPEZOID_PANELS))),
        );
        lie.record(
            lie_step(&problem, z, tau, &config)
                .and_then(|s| relative_gap(&s.expand(), &dense_lie_step(&dense.p0, &dense, tau)?)),
        );
        let step = strang_step(&problem, z, tau, &config);
        strang.record(
            step.clone()
                .and_then(|s| relative_gap(&s.expand(), &dense_strang_step(&dense.p0, &dense, tau)?)),
        );
        psd.record(step.and_then(|s| {
            let p = s.expand();
            let scale = spectral_norm(&p)?.max(f64::MIN_POSITIVE);
            Ok((-sym_min_eigenvalue(&DenseSymMatrix::new(p)?)? / scale).max(0.0))
        }));
    }
    [g_dense, g_rk, g_comp, g_bound, f_dense, lie, strang, psd]
        .into_iter()
        .map(Tally::finish)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sym_min_eigenvalue;

    #[test]
    fn expm_matches_scalar_and_diagonal() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&[-3.0, 0.5, 0.0]));
        let e = dense_expm(&a);
        for (i, v) in [-3.0f64, 0.5, 0.0].iter().enumerate() {
            assert!((e[(i, i)] - v.exp()).abs() < 1e-14 * v.exp().max(1.0));
        }
        let rot = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let e = dense_expm(&(rot * 2.0));
        assert!((e[(0, 0)] - 2f64.cos()).abs() < 1e-14);
        assert!((e[(1, 0)] - 2f64.sin()).abs() < 1e-14);
    }

    #[test]
    fn g_flow_scalar_and_identity() {
        let p = DMatrix::from_element(1, 1, 1.0);
        let s = DMatrix::from_element(1, 1, 1.0);
        for t in [0.5, 1.0, 3.0] {
            let out = dense_g_flow(&p, &s, t).unwrap();
            assert!((out[(0, 0)] - 1.0 / (1.0 + t)).abs() < 1e-15);
        }
        assert_eq!(dense_g_flow(&p, &s, 0.0).unwrap(), p);
    }

    #[test]
    fn g_flow_matches_rk4() {
        let problem = random_problem(8, 3, 4);
        let d = DenseProblem::from_problem(&problem).unwrap();
        let exact = dense_g_flow(&d.p0, &d.s, 0.6).unwrap();
        let rk = rk4_quadratic(&d.p0, &d.s, 0.6, 10_000);
        assert!((exact - rk).amax() < 1e-8 * d.p0.amax());
    }

    #[test]
    fn f_flow_cases() {
        let problem = random_problem(4, 2, 6);
        let d = DenseProblem::from_problem(&problem).unwrap();
        assert_eq!(dense_f_flow(&d.p0, &d, 0.0, 100), d.p0);

        let mut pure = d.clone();
        pure.qfac = DMatrix::zeros(4, 1);
        let t = 0.2;
        let e = dense_expm(&(&d.generator * t));
        let expected = &e * &d.p0 * e.transpose();
        assert!((dense_f_flow(&d.p0, &pure, t, 10) - expected).amax() < 1e-14);

        let scalar = DenseProblem {
            generator: DMatrix::from_element(1, 1, -1.0),
            s: DMatrix::zeros(1, 1),
            qfac: DMatrix::from_element(1, 1, 1.0),
            q: DMatrix::from_element(1, 1, 1.0),
            p0: DMatrix::zeros(1, 1),
            horizon: 1.0,
        };
        let out = dense_f_flow(&scalar.p0, &scalar, 1.0, TRAPEZOID_PANELS);
        assert!((out[(0, 0)] - (1.0 - (-2.0f64).exp()) / 2.0).abs() < 1e-10);
    }

    #[test]
    fn rk_reference_zero_problem_stays_zero() {
        let problem = random_problem(5, 1, 1);
        let mut d = DenseProblem::from_problem(&problem).unwrap();
        d.p0 = DMatrix::zeros(5, 5);
        d.qfac = DMatrix::zeros(5, 1);
        d.q = DMatrix::zeros(5, 5);
        let states = dense_rk_reference(&d, 16).unwrap();
        assert!(states.iter().all(|s| s.p.amax() == 0.0));
        assert_eq!(dre_residual(&states, &d, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn rk_reference_linear_case_matches_f_flow() {
        let problem = random_problem(5, 2, 9);
        let mut d = DenseProblem::from_problem(&problem).unwrap();
        d.s = DMatrix::zeros(5, 5);
        let exact = dense_f_flow(&d.p0, &d, d.horizon, TRAPEZOID_PANELS);
        let coarse = dense_rk_reference(&d, 20).unwrap();
        let fine = dense_rk_reference(&d, 40).unwrap();
        let e1 = (&coarse.last().unwrap().p - &exact).amax();
        let e2 = (&fine.last().unwrap().p - &exact).amax();
        assert!(e1 / e2 > 12.0 && e1 / e2 < 20.0, "ratio {}", e1 / e2);
        assert!(e2 < 1e-6);
    }

    #[test]
    fn rk_reference_detects_blow_up() {
        let problem = random_problem(3, 1, 1);
        let mut d = DenseProblem::from_problem(&problem).unwrap();
        d.generator = DMatrix::identity(3, 3) * 200.0;
        d.horizon = 1.0;
        assert!(matches!(dense_rk_reference(&d, 50), Err(Error::Instability { .. })));
    }

    #[test]
    fn residual_of_linear_solution_is_second_order() {
        let problem = random_problem(4, 1, 13);
        let mut d = DenseProblem::from_problem(&problem).unwrap();
        d.s = DMatrix::zeros(4, 4);
        let residual = |n: usize| {
            let tau = d.horizon / n as f64;
            let states: Vec<DenseState> = (0..=n)
                .map(|k| {
                    let t = k as f64 * tau;
                    DenseState {
                        p: dense_f_flow(&d.p0, &d, t, 4000),
                        t,
                    }
                })
                .collect();
            dre_residual(&states, &d, 0.0).unwrap()
        };
        let (r1, r2) = (residual(10), residual(20));
        assert!(r1 / r2 > 3.5 && r1 / r2 < 4.5, "ratio {}", r1 / r2);
    }

    /// Newton–Kleinman iteration for `G P + P Gᵀ + Q − P S P = 0`, with each
    /// Lyapunov equation solved through its Kronecker form.
    fn solve_care(g: &DMatrix<f64>, s: &DMatrix<f64>, q: &DMatrix<f64>) -> DMatrix<f64> {
        let n = g.nrows();
        let mut p = DMatrix::zeros(n, n);
        let id = DMatrix::<f64>::identity(n, n);
        for _ in 0..50 {
            let closed = g - &p * s;
            let rhs = -(q + &p * s * &p);
            let kron = closed.kronecker(&id) + id.kronecker(&closed);
            // vec(C X + X Cᵀ) = (I ⊗ C + C ⊗ I) vec(X)
            let x = kron
                .lu()
                .solve(&nalgebra::DVector::from_column_slice(rhs.as_slice()))
                .unwrap();
            let next = symmetrize(DMatrix::from_column_slice(n, n, x.as_slice()));
            let change = (&next - &p).amax();
            p = next;
            if change < 1e-15 {
                break;
            }
        }
        p
    }

    #[test]
    fn residual_vanishes_at_riccati_equilibrium() {
        let problem = random_problem(4, 1, 21);
        let mut d = DenseProblem::from_problem(&problem).unwrap();
        // shift to a strictly stable generator so Newton can start from zero
        d.generator -= DMatrix::identity(4, 4) * 0.5;
        let p_inf = solve_care(&d.generator, &d.s, &d.q);
        assert!(d.rhs(&p_inf).amax() < 1e-13);
        assert!(sym_min_eigenvalue(&DenseSymMatrix::new(p_inf.clone()).unwrap()).unwrap() >= 0.0);
        let states: Vec<DenseState> = (0..6)
            .map(|k| DenseState {
                p: p_inf.clone(),
                t: 0.1 * k as f64,
            })
            .collect();
        assert!(dre_residual(&states, &d, 0.0).unwrap() < 1e-13);
    }

    #[test]
    fn self_check_passes() {
        let outcomes = self_check(5, 3);
        assert_eq!(outcomes.len(), 8);
        for o in outcomes {
            assert_eq!(o.cases, 3);
            assert!(o.passed(), "{} worst {:e}", o.name, o.worst);
        }
    }

    #[test]
    fn steps_keep_psd() {
        let problem = random_problem(6, 2, 3);
        let d = DenseProblem::from_problem(&problem).unwrap();
        let mut p = d.p0.clone();
        for _ in 0..3 {
            p = dense_strang_step(&p, &d, 0.1).unwrap();
        }
        let min = sym_min_eigenvalue(&DenseSymMatrix::new(p.clone()).unwrap()).unwrap();
        assert!(min >= -1e-12 * p.amax());
    }
}
