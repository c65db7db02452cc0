//! First-order minimization over right-unitary matrices `T` (`m × K`, `T T† = 1`).
//!
//! The search uses Riemannian conjugate gradients (Polak–Ribière+), tangent
//! projection for vector transport, the polar retraction, and Armijo
//! backtracking seeded with a Barzilai–Borwein step. Objectives that are not
//! differentiable everywhere supply a smoothed surrogate controlled by `ε`;
//! `ε` is halved from `eps_start` to `eps_end` whenever progress stalls.
//!
//! Gradients follow the real inner product `⟨X, Y⟩ = Re Tr[X† Y]`: for a
//! real-valued `f`, the Euclidean gradient `G` satisfies `df = Re Tr[G† dT]`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ginibre, identity, is_finite, max_abs, real_inner, CMat, Eigh};

/// Feasibility tolerance for right-unitary inputs.
pub const FEASIBILITY_TOL: f64 = 1e-8;

/// Largest accepted condition number of `X X†` in [`retract`].
pub const RETRACT_CONDITION_BOUND: f64 = 1e12;

/// An `m × K` complex matrix with orthonormal rows.
#[derive(Debug, Clone, PartialEq)]
pub struct RightUnitary {
    matrix: CMat,
}

impl RightUnitary {
    pub fn new(matrix: CMat) -> Result<Self> {
        Self::with_tolerance(matrix, FEASIBILITY_TOL)
    }

    pub fn with_tolerance(matrix: CMat, tol: f64) -> Result<Self> {
        if matrix.ncols() < matrix.nrows() {
            return Err(Error::Shape(format!(
                "right-unitary needs K >= m, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let defect = feasibility_defect(&matrix);
        if !(defect <= tol) {
            return Err(Error::Feasibility(format!(
                "T T† deviates from identity by {defect:.3e}"
            )));
        }
        Ok(RightUnitary { matrix })
    }

    pub fn identity(m: usize) -> Self {
        RightUnitary {
            matrix: identity(m),
        }
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn defect(&self) -> f64 {
        feasibility_defect(&self.matrix)
    }

    /// Append zero columns up to `k` columns; the result is still right-unitary.
    pub fn pad_columns(&self, k: usize) -> Self {
        let (m, k0) = self.matrix.shape();
        let k = k.max(k0);
        let mut out = CMat::zeros(m, k);
        out.view_mut((0, 0), (m, k0)).copy_from(&self.matrix);
        RightUnitary { matrix: out }
    }
}

pub fn feasibility_defect(t: &CMat) -> f64 {
    max_abs(&(t * t.adjoint() - identity(t.nrows())))
}

/// Polar retraction `(X X†)^{-1/2} X`, the nearest right-unitary matrix in
/// Frobenius norm.
pub fn retract(x: &CMat) -> Result<RightUnitary> {
    if x.ncols() < x.nrows() {
        return Err(Error::Shape(format!(
            "cannot retract a {}x{} matrix onto right-unitaries",
            x.nrows(),
            x.ncols()
        )));
    }
    if !is_finite(x) {
        return Err(Error::Retraction("non-finite entries".into()));
    }
    let gram = x * x.adjoint();
    let e = Eigh::new(&gram);
    let (hi, lo) = (e.max(), e.min());
    if !(lo > 0.0 && hi / lo <= RETRACT_CONDITION_BOUND) {
        return Err(Error::Retraction(format!(
            "X X† is singular or ill-conditioned (eigenvalues {lo:.3e}..{hi:.3e})"
        )));
    }
    let matrix = e.map(|v| 1.0 / v.sqrt()) * x;
    Ok(RightUnitary { matrix })
}

/// Orthogonal projection of an ambient direction onto the tangent space
/// `{X : X T† + T X† = 0}` at a feasible `T`.
pub fn tangent_project(t: &CMat, g: &CMat) -> CMat {
    let gt = g * t.adjoint();
    let sym = (&gt + gt.adjoint()).scale(0.5);
    g - sym * t
}

/// Haar-like random point: Gaussian `m × K` matrix followed by [`retract`].
pub fn random_right_unitary(m: usize, k: usize, seed: u64) -> Result<RightUnitary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_right_unitary_with(&mut rng, m, k)
}

pub fn random_right_unitary_with(rng: &mut ChaCha8Rng, m: usize, k: usize) -> Result<RightUnitary> {
    if k < m {
        return Err(Error::Shape(format!("need K >= m, got m={m}, K={k}")));
    }
    // A Gaussian draw is full rank with probability one; redraw on the
    // (measure-zero) failure.
    loop {
        let g = ginibre(rng, m, k);
        match retract(&g) {
            Ok(t) => return Ok(t),
            Err(Error::Retraction(_)) => continue,
            Err(e) => return Err(e),
        }
    }
}

/// A real-valued function of a right-unitary matrix.
pub trait Objective: Sync {
    /// Exact objective value.
    fn value(&self, t: &CMat) -> f64;

    /// Smoothed value and Euclidean gradient. Smooth objectives ignore `eps`
    /// and must return the exact value.
    fn smoothed(&self, t: &CMat, eps: f64) -> (f64, CMat);

    fn is_smooth(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub armijo: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
    pub eps_start: f64,
    pub eps_end: f64,
    pub eps_factor: f64,
    /// Consecutive iterations without relative progress above `stall_tol`
    /// that end a smoothing stage.
    pub stall_window: usize,
    pub stall_tol: f64,
    /// Stop a restart once the exact value drops to this level.
    pub value_target: f64,
    pub restarts: usize,
    pub seed: u64,
    pub parallel: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_iters: 4000,
            grad_tol: 1e-12,
            armijo: 1e-4,
            backtrack: 0.5,
            max_backtracks: 60,
            eps_start: 1e-3,
            eps_end: 1e-9,
            eps_factor: 0.5,
            stall_window: 25,
            stall_tol: 1e-13,
            value_target: 1e-13,
            restarts: 8,
            seed: 0,
            parallel: true,
        }
    }
}

impl OptimizerConfig {
    /// Defaults with the restart count tied to the local dimension:
    /// 8 for `d = 2`, 16 otherwise.
    pub fn for_dim(d: usize) -> Self {
        OptimizerConfig {
            restarts: if d <= 2 { 8 } else { 16 },
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("grad_tol", self.grad_tol),
            ("armijo", self.armijo),
            ("backtrack", self.backtrack),
            ("eps_start", self.eps_start),
            ("eps_end", self.eps_end),
            ("eps_factor", self.eps_factor),
            ("stall_tol", self.stall_tol),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0)) {
            return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidArgument("restart count must be at least 1".into()));
        }
        if !(self.backtrack < 1.0 && self.eps_factor < 1.0) {
            return Err(Error::InvalidArgument(
                "backtrack and eps_factor must be below 1".into(),
            ));
        }
        Ok(())
    }

    /// Seed used by restart `r`.
    pub fn restart_seed(&self, r: usize) -> u64 {
        self.seed ^ (r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
    }
}

/// Outcome of one restart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartTrace {
    pub index: usize,
    pub seed: u64,
    pub initial_value: f64,
    pub best_value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Running best exact value after every iteration.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct OptimizerResult {
    pub best_value: f64,
    pub best: RightUnitary,
    pub iterations: usize,
    pub converged: bool,
    pub restarts: Vec<RestartTrace>,
}

pub fn minimize<O: Objective + ?Sized>(
    objective: &O,
    m: usize,
    k: usize,
    config: &OptimizerConfig,
) -> Result<OptimizerResult> {
    minimize_from(objective, &[], m, k, config)
}

/// Like [`minimize`], but the first restarts begin at the given points.
pub fn minimize_from<O: Objective + ?Sized>(
    objective: &O,
    starts: &[RightUnitary],
    m: usize,
    k: usize,
    config: &OptimizerConfig,
) -> Result<OptimizerResult> {
    config.validate()?;
    if k < m {
        return Err(Error::Shape(format!("need K >= m, got m={m}, K={k}")));
    }
    if let Some(bad) = starts.iter().find(|s| s.rows() != m || s.cols() != k) {
        return Err(Error::Shape(format!(
            "start point is {}x{}, expected {m}x{k}",
            bad.rows(),
            bad.cols()
        )));
    }
    let restarts = config.restarts.max(starts.len());
    let run = |r: usize| -> Result<(RestartTrace, RightUnitary)> {
        let seed = config.restart_seed(r);
        let start = match starts.get(r) {
            Some(s) => s.clone(),
            None => random_right_unitary(m, k, seed)?,
        };
        run_restart(objective, start, r, seed, config)
    };
    let outcomes: Vec<Result<(RestartTrace, RightUnitary)>> = if config.parallel {
        (0..restarts).into_par_iter().map(run).collect()
    } else {
        (0..restarts).map(run).collect()
    };
    let mut traces = Vec::with_capacity(restarts);
    let mut best: Option<(f64, usize, RightUnitary)> = None;
    for outcome in outcomes {
        let (trace, t) = outcome?;
        let better = match &best {
            None => true,
            Some((v, idx, _)) => {
                trace.best_value < *v
                    || (trace.best_value == *v && trace.seed < config.restart_seed(*idx))
            }
        };
        if better {
            best = Some((trace.best_value, trace.index, t));
        }
        traces.push(trace);
    }
    let (best_value, idx, best) = best.expect("at least one restart");
    Ok(OptimizerResult {
        best_value,
        best,
        iterations: traces[idx].iterations,
        converged: traces[idx].converged,
        restarts: traces,
    })
}

fn eval<O: Objective + ?Sized>(objective: &O, t: &CMat, eps: f64) -> Result<(f64, CMat)> {
    let (f, g) = objective.smoothed(t, eps);
    if !f.is_finite() || !is_finite(&g) {
        return Err(Error::numerical(
            format!("objective or gradient is not finite (value {f})"),
            Some(t),
        ));
    }
    Ok((f, g))
}

fn exact<O: Objective + ?Sized>(objective: &O, t: &CMat) -> Result<f64> {
    let v = objective.value(t);
    if !v.is_finite() {
        return Err(Error::numerical(format!("objective value {v}"), Some(t)));
    }
    Ok(v)
}

fn run_restart<O: Objective + ?Sized>(
    objective: &O,
    start: RightUnitary,
    index: usize,
    seed: u64,
    config: &OptimizerConfig,
) -> Result<(RestartTrace, RightUnitary)> {
    let smooth = objective.is_smooth();
    let mut eps = if smooth { 0.0 } else { config.eps_start };
    let mut t = start.into_matrix();
    let initial_value = exact(objective, &t)?;
    let mut best_value = initial_value;
    let mut best_t = t.clone();
    let mut history = Vec::new();
    let mut iterations = 0usize;
    let mut converged = false;

    'stages: loop {
        let (mut f, ge) = eval(objective, &t, eps)?;
        let mut g = tangent_project(&t, &ge);
        let mut dir = -&g;
        let mut step = 1.0 / real_inner(&g, &g).sqrt().max(1.0);
        let mut stalled = 0usize;
        let mut stage_converged = false;

        loop {
            if best_value <= config.value_target {
                converged = true;
                break 'stages;
            }
            if iterations >= config.max_iters {
                break 'stages;
            }
            let gg = real_inner(&g, &g);
            if gg.sqrt() < config.grad_tol {
                stage_converged = true;
                break;
            }
            let mut slope = real_inner(&g, &dir);
            if !(slope < 0.0) {
                dir = -&g;
                slope = -gg;
            }
            let mut accepted = line_search(objective, &t, &dir, f, slope, step, eps, config)?;
            if accepted.is_none() && real_inner(&dir, &g) != -gg {
                dir = -&g;
                slope = -gg;
                accepted = line_search(objective, &t, &dir, f, slope, step.max(1.0 / gg.sqrt()), eps, config)?;
            }
            let Some((alpha, t_new, f_new, ge_new)) = accepted else {
                break;
            };
            iterations += 1;

            let g_new = tangent_project(&t_new, &ge_new);
            let g_old = tangent_project(&t_new, &g);
            let dir_old = tangent_project(&t_new, &dir);
            let y = &g_new - &g_old;
            let beta = (real_inner(&g_new, &y) / gg).max(0.0);
            let s = dir_old.scale(alpha);
            let sy = real_inner(&s, &y).abs();
            step = if sy > 0.0 {
                (real_inner(&s, &s) / sy).clamp(1e-12, 1e6)
            } else {
                alpha * 2.0
            };
            let new_dir = -&g_new + dir_old.scale(beta);
            // Rescale the trial step to the length of the new direction.
            let dn = real_inner(&new_dir, &new_dir).sqrt();
            let gn = real_inner(&g_new, &g_new).sqrt();
            if dn > 0.0 && gn > 0.0 {
                step *= gn / dn;
            }

            let progress = f - f_new;
            if progress <= config.stall_tol * (1.0 + f.abs()) {
                stalled += 1;
            } else {
                stalled = 0;
            }
            t = t_new;
            f = f_new;
            g = g_new;
            dir = new_dir;

            let v = if smooth { f } else { exact(objective, &t)? };
            if v < best_value {
                best_value = v;
                best_t.clone_from(&t);
            }
            history.push(best_value);
            if stalled >= config.stall_window {
                break;
            }
        }

        if smooth || eps <= config.eps_end {
            converged = stage_converged;
            break;
        }
        eps = (eps * config.eps_factor).max(config.eps_end);
    }

    let best = RightUnitary { matrix: best_t };
    Ok((
        RestartTrace {
            index,
            seed,
            initial_value,
            best_value,
            iterations,
            converged,
            history,
        },
        best,
    ))
}

#[allow(clippy::too_many_arguments)]
fn line_search<O: Objective + ?Sized>(
    objective: &O,
    t: &CMat,
    dir: &CMat,
    f: f64,
    slope: f64,
    initial: f64,
    eps: f64,
    config: &OptimizerConfig,
) -> Result<Option<(f64, CMat, f64, CMat)>> {
    let mut alpha = initial;
    for _ in 0..config.max_backtracks {
        let candidate = t + dir.scale(alpha);
        match retract(&candidate) {
            Ok(t_new) => {
                let t_new = t_new.into_matrix();
                let (f_new, g_new) = eval(objective, &t_new, eps)?;
                if f_new <= f + config.armijo * alpha * slope {
                    return Ok(Some((alpha, t_new, f_new, g_new)));
                }
            }
            Err(Error::Retraction(_)) => {}
            Err(e) => return Err(e),
        }
        alpha *= config.backtrack;
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, frobenius, hermitian_part, C64};

    #[test]
    fn scalar_right_unitary_has_unit_modulus() {
        let t = random_right_unitary(1, 1, 3).unwrap();
        assert!((t.matrix()[(0, 0)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_square_is_unitary_and_deterministic() {
        let a = random_right_unitary(4, 4, 99).unwrap();
        let b = random_right_unitary(4, 4, 99).unwrap();
        assert!(a.defect() < 1e-12);
        assert_eq!(a, b);
        assert!(matches!(random_right_unitary(3, 2, 0), Err(Error::Shape(_))));
    }

    #[test]
    fn retract_is_idempotent_and_scale_invariant() {
        let t = random_right_unitary(3, 5, 1).unwrap();
        let r = retract(t.matrix()).unwrap();
        assert!(max_abs(&(r.matrix() - t.matrix())) < 1e-12);
        let r2 = retract(&t.matrix().scale(2.0)).unwrap();
        assert!(max_abs(&(r2.matrix() - t.matrix())) < 1e-12);
    }

    #[test]
    fn retract_of_small_perturbation_stays_close() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let t = random_right_unitary(3, 4, 2).unwrap();
        let e = ginibre(&mut rng, 3, 4);
        let e = e.unscale(frobenius(&e));
        let r = retract(&(t.matrix() + e.scale(0.01))).unwrap();
        assert!(r.defect() < 1e-12);
        assert!(frobenius(&(r.matrix() - t.matrix())) < 0.02);
    }

    #[test]
    fn retract_rejects_rank_deficient() {
        let mut x = CMat::zeros(2, 3);
        x[(0, 0)] = c(1.0, 0.0);
        assert!(matches!(retract(&x), Err(Error::Retraction(_))));
    }

    #[test]
    fn tangent_projection_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t = random_right_unitary(3, 5, 5).unwrap();
        let t = t.matrix();
        let g = ginibre(&mut rng, 3, 5);
        let x = tangent_project(t, &g);
        let c1 = &x * t.adjoint() + t * x.adjoint();
        assert!(max_abs(&c1) < 1e-12);
        // tangent input is unchanged
        assert!(max_abs(&(tangent_project(t, &x) - &x)) < 1e-12);
        // normal direction S T is removed entirely
        let s = hermitian_part(&ginibre(&mut rng, 3, 3));
        let n = &s * t;
        assert!(max_abs(&tangent_project(t, &n)) < 1e-12);
        // T itself is normal
        let p = tangent_project(t, t);
        assert!(max_abs(&(t * p.adjoint() + &p * t.adjoint())) < 1e-12);
        // residual is orthogonal to the tangent space
        let other = tangent_project(t, &ginibre(&mut rng, 3, 5));
        assert!(real_inner(&(&g - &x), &other).abs() < 1e-12);
    }

    #[test]
    fn first_order_retraction_is_second_order_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let t = random_right_unitary(2, 4, 7).unwrap();
        let t = t.matrix();
        let x = tangent_project(t, &ginibre(&mut rng, 2, 4));
        let d1 = feasibility_defect(&(t + x.scale(1e-3)));
        let d2 = feasibility_defect(&(t + x.scale(5e-4)));
        // halving the step quarters the defect
        assert!((d1 / d2 - 4.0).abs() < 0.05, "{d1} {d2}");
    }

    /// f(t) = -Re(conj(a) t) on the unit circle; minimizer t = a/|a|.
    struct Phase(C64);

    impl Objective for Phase {
        fn value(&self, t: &CMat) -> f64 {
            -(self.0.conj() * t[(0, 0)]).re
        }
        fn smoothed(&self, t: &CMat, _eps: f64) -> (f64, CMat) {
            (self.value(t), CMat::from_element(1, 1, -self.0))
        }
    }

    #[test]
    fn phase_alignment_converges() {
        let a = c(0.3, -1.1);
        let cfg = OptimizerConfig {
            restarts: 3,
            value_target: f64::NEG_INFINITY,
            ..OptimizerConfig::default()
        };
        let r = minimize(&Phase(a), 1, 1, &cfg).unwrap();
        assert!((r.best_value + a.norm()).abs() < 1e-8);
        let t = r.best.matrix()[(0, 0)];
        assert!((t - a / a.norm()).norm() < 1e-6);
        for tr in &r.restarts {
            assert!(tr.history.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    struct Broken;

    impl Objective for Broken {
        fn value(&self, _t: &CMat) -> f64 {
            f64::NAN
        }
        fn smoothed(&self, t: &CMat, _eps: f64) -> (f64, CMat) {
            (f64::NAN, t.clone())
        }
    }

    #[test]
    fn nan_objective_reports_iterate() {
        let err = minimize(&Broken, 2, 2, &OptimizerConfig::default()).unwrap_err();
        match err {
            Error::NumericalFailure { iterate, .. } => assert!(iterate.is_some()),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn config_validation() {
        let bad = OptimizerConfig {
            restarts: 0,
            ..OptimizerConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = OptimizerConfig {
            grad_tol: 0.0,
            ..OptimizerConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
