//! Distance from a doubly stochastic map to the random-unitary maps.
//!
//! For a Choi state `ρ` and an ensemble selected by a right-unitary `T`,
//! `D(ρ, T) = Σ_j ‖((T† A_i T)_jj)_i‖₂`, and `D(ρ) = min_T D(ρ, T)`. It equals
//! the convex-roof extension of `√2·‖Tr_2|ψ⟩⟨ψ| − 1/d‖₂` and vanishes exactly on
//! mixtures of maximally entangled states, i.e. on Choi states of
//! random-unitary channels.
//!
//! The search runs on the support of `ρ`: with `W = U Λ^{1/2}` restricted to
//! positive eigenvalues, every ensemble is `Z = W T` for an `r × K`
//! right-unitary `T`, so any `K ≥ rank ρ` is admissible.

use serde::{Deserialize, Serialize};

use crate::ensemble::{build_problem_p, members_of_columns, EnsembleMember, ProblemPInstance};
use crate::error::{Error, Result};
use crate::gellmann::basis_matrices;
use crate::linalg::{
    distance_to_maximally_mixed, entropy_bits, ginibre, hermitian_part, identity, kron,
    pauli, psd_sqrt, trace, trace_norm, CMat, CVec,
    Eigh,
};
use crate::manifold::{self, Objective, OptimizerConfig, OptimizerResult, RightUnitary};
use crate::qstate::{matrixify, reduction_gaps, BipartiteState};

/// Verdict threshold for random-unitary membership.
pub const MEMBER_TOL: f64 = 1e-6;

/// Reduction-norm threshold for a certified non-membership verdict.
pub const CERT_TOL: f64 = 1e-8;

/// The largest possible value of `D`, `√(2(d−1)/d)`.
pub fn max_value(d: usize) -> f64 {
    (2.0 * (d as f64 - 1.0) / d as f64).sqrt()
}

/// Smoothed `Σ_j ‖v_j‖₂` with `v_ij = t_j† A_i t_j`.
///
/// The smoothed column norm is `√(‖v_j‖² + ε²) − ε`, never above the true one.
#[derive(Debug, Clone)]
pub struct DObjective {
    pub a: Vec<CMat>,
}

impl DObjective {
    pub fn from_problem(problem: &ProblemPInstance) -> Self {
        DObjective {
            a: problem.a.clone(),
        }
    }

    /// The diagonal entries `v_ij` and the products `A_i T`.
    fn columns(&self, t: &CMat) -> (Vec<Vec<f64>>, Vec<CMat>) {
        let k = t.ncols();
        let mut products = Vec::with_capacity(self.a.len());
        let mut v = vec![vec![0.0; self.a.len()]; k];
        for (i, a) in self.a.iter().enumerate() {
            let at = a * t;
            for (j, vj) in v.iter_mut().enumerate() {
                vj[i] = t.column(j).dotc(&at.column(j)).re;
            }
            products.push(at);
        }
        (v, products)
    }
}

impl Objective for DObjective {
    fn value(&self, t: &CMat) -> f64 {
        let (v, _) = self.columns(t);
        v.iter()
            .map(|vj| vj.iter().map(|x| x * x).sum::<f64>().sqrt())
            .sum()
    }

    fn smoothed(&self, t: &CMat, eps: f64) -> (f64, CMat) {
        let (v, products) = self.columns(t);
        let mut f = 0.0;
        let mut g = CMat::zeros(t.nrows(), t.ncols());
        for (j, vj) in v.iter().enumerate() {
            let sq: f64 = vj.iter().map(|x| x * x).sum();
            let n = (sq + eps * eps).sqrt();
            f += n - eps;
            if n == 0.0 {
                continue;
            }
            let mut col = g.column_mut(j);
            for (i, at) in products.iter().enumerate() {
                col.axpy(crate::linalg::c(2.0 * vj[i] / n, 0.0), &at.column(j), crate::linalg::ONE);
            }
        }
        (f, g)
    }

    fn is_smooth(&self) -> bool {
        false
    }
}

fn check_exponent(x: f64, name: &str) -> Result<()> {
    if !(x >= 1.0) {
        return Err(Error::InvalidArgument(format!("{name} must be at least 1, got {x}")));
    }
    Ok(())
}

fn lp_norm(xs: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        xs.iter().fold(0.0, |m, x| m.max(x.abs()))
    } else {
        xs.iter().map(|x| x.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// The `ℓ_q` norm over ensemble members of the `ℓ_p` norms of
/// `((T† A_i T)_jj)_i`. `(p, q) = (2, 1)` gives `D(ρ, T)`.
pub fn d_pq_objective(rho: &BipartiteState, t: &RightUnitary, p: f64, q: f64) -> Result<f64> {
    check_exponent(p, "p")?;
    check_exponent(q, "q")?;
    let n = rho.dim() * rho.dim();
    if t.rows() != n {
        return Err(Error::Shape(format!("T has {} rows, expected {n}", t.rows())));
    }
    let t = RightUnitary::new(t.matrix().clone())?;
    let problem = build_problem_p(rho)?;
    let diag = problem.diagonals(t.matrix());
    let per_member: Vec<f64> = (0..diag.ncols())
        .map(|j| lp_norm(diag.column(j).as_slice(), p))
        .collect();
    Ok(lp_norm(&per_member, q))
}

/// `D(ρ, T)`, the `(2, 1)` case of [`d_pq_objective`].
pub fn d_value(rho: &BipartiteState, t: &RightUnitary) -> Result<f64> {
    d_pq_objective(rho, t, 2.0, 1.0)
}

/// `D(ρ, T)` evaluated through the ensemble: `Σ_j p_j · pure_value(ψ_j)`.
pub fn d_value_by_ensemble(rho: &BipartiteState, t: &RightUnitary) -> Result<f64> {
    let members = crate::ensemble::ensemble_from(rho, t)?;
    members
        .iter()
        .filter(|m| !m.null)
        .map(|m| Ok(m.weight * pure_value(&m.vector.unscale(m.vector.norm()))?))
        .sum()
}

/// Both closed forms of `D` for a pure state:
/// `√2·‖Tr_2|ψ⟩⟨ψ| − 1/d‖₂` and `√(2(Tr[(Tr_2|ψ⟩⟨ψ|)²] − 1/d))`.
pub fn pure_value_forms(psi: &CVec) -> Result<(f64, f64)> {
    let norm = psi.norm();
    if !((norm - 1.0).abs() <= 1e-8) {
        return Err(Error::Normalization(norm));
    }
    let m = matrixify(psi)?;
    let d = m.d;
    let reduced = &m.matrix * m.matrix.adjoint();
    let first = std::f64::consts::SQRT_2 * distance_to_maximally_mixed(&reduced);
    let purity = trace(&(&reduced * &reduced)).re;
    let second = (2.0 * (purity - 1.0 / d as f64)).max(0.0).sqrt();
    Ok((first, second))
}

/// `D` of a pure state.
pub fn pure_value(psi: &CVec) -> Result<f64> {
    Ok(pure_value_forms(psi)?.0)
}

/// `√2·max(‖Tr_1 ρ − 1/d‖₂, ‖Tr_2 ρ − 1/d‖₂)`, a lower bound on `D(ρ)`.
pub fn lower_bound_reductions(rho: &BipartiteState) -> f64 {
    let (a, b) = reduction_gaps(rho.matrix(), rho.dim());
    std::f64::consts::SQRT_2 * a.max(b)
}

/// Upper bound on the Frobenius distance from `ρ` to the random-unitary Choi
/// states implied by a value of `D`: `√(2 − 4/(d·D² + 2))`.
pub fn property6_relation(d_value: f64, d: usize) -> Result<f64> {
    let hi = max_value(d);
    if !(d_value >= -1e-12 && d_value <= hi + 1e-9) {
        return Err(Error::Domain {
            value: d_value,
            lo: 0.0,
            hi,
        });
    }
    let x = d_value.clamp(0.0, hi);
    Ok((2.0 - 4.0 / (d as f64 * x * x + 2.0)).max(0.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    pub value: f64,
    /// Set when the input has rank above two, where the formula is unproven.
    pub conjectured: bool,
}

/// `D` for two-qubit states of rank at most two: the reduction lower bound is
/// attained. Higher ranks need `allow_conjecture`.
pub fn rank2_qubit_closed_form(rho: &BipartiteState, allow_conjecture: bool) -> Result<ClosedForm> {
    if rho.dim() != 2 {
        return Err(Error::UnsupportedDimension(rho.dim()));
    }
    let rank = rho.rank(crate::qstate::DEFAULT_TOL);
    if rank > 2 && !allow_conjecture {
        return Err(Error::Precondition(format!(
            "closed form is only established for rank ≤ 2, state has rank {rank}"
        )));
    }
    Ok(ClosedForm {
        value: lower_bound_reductions(rho),
        conjectured: rank > 2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "RU_numerical")]
    RuNumerical,
    #[serde(rename = "NOT_RU_certified")]
    NotRuCertified,
    #[serde(rename = "UNDECIDED")]
    Undecided,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::RuNumerical => "RU_numerical",
            Verdict::NotRuCertified => "NOT_RU_certified",
            Verdict::Undecided => "UNDECIDED",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Certificate {
    /// A decomposition into (nearly) maximally entangled pure states.
    Ensemble { members: Vec<EnsembleMember> },
    /// A reduction that differs from `1/d`.
    ReductionViolation { norm: f64 },
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceConfig {
    pub optimizer: OptimizerConfig,
    /// Ensemble cardinality; `None` means `d²`.
    pub cardinality: Option<usize>,
    /// Retry with `K = 2d²` and `K = d⁴`, warm-started from the incumbent.
    pub escalate: bool,
    pub member_tol: f64,
    pub cert_tol: f64,
}

impl DistanceConfig {
    pub fn for_dim(d: usize) -> Self {
        DistanceConfig {
            optimizer: OptimizerConfig::for_dim(d),
            cardinality: None,
            escalate: false,
            member_tol: MEMBER_TOL,
            cert_tol: CERT_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EscalationStep {
    pub cardinality: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceReport {
    pub d: usize,
    pub rank: usize,
    pub cardinality: usize,
    /// Best `D(ρ, T)` found; `None` if the optimizer failed.
    pub upper: Option<f64>,
    pub lower_reduction: f64,
    pub d2_to_m_upper: Option<f64>,
    pub verdict: Verdict,
    pub certificate: Certificate,
    pub iterations: usize,
    pub converged: bool,
    pub restarts: usize,
    pub restart_values: Vec<f64>,
    pub escalation: Vec<EscalationStep>,
    pub member_tol: f64,
    pub cert_tol: f64,
    pub seed: u64,
    pub diagnostics: Option<String>,
}

/// `D` restricted to the support of `ρ`.
pub(crate) struct SupportProblem {
    pub w: CMat,
    pub objective: DObjective,
}

pub(crate) fn support_factor(rho: &BipartiteState) -> CMat {
    let e = rho.eigh();
    let floor = crate::linalg::noise_floor(&e);
    let r = e.values.iter().filter(|&&x| x > floor).count().max(1);
    let mut w = e.vectors.columns(0, r).into_owned();
    for k in 0..r {
        w.column_mut(k).scale_mut(e.values[k].max(0.0).sqrt());
    }
    w
}

impl SupportProblem {
    pub fn new(rho: &BipartiteState) -> Result<Self> {
        let d = rho.dim();
        let w = support_factor(rho);
        let one = identity(d);
        let a = basis_matrices(d)?
            .iter()
            .map(|tau| hermitian_part(&(w.adjoint() * kron(tau, &one) * &w)))
            .collect();
        Ok(SupportProblem {
            w,
            objective: DObjective { a },
        })
    }

    pub fn rank(&self) -> usize {
        self.w.ncols()
    }
}

/// Minimize `D(ρ, T)` over ensembles and classify the state.
pub fn distance(rho: &BipartiteState, config: &DistanceConfig) -> Result<DistanceReport> {
    config.optimizer.validate()?;
    if !(config.member_tol > 0.0 && config.cert_tol > 0.0) {
        return Err(Error::InvalidArgument("thresholds must be positive".into()));
    }
    let d = rho.dim();
    let problem = SupportProblem::new(rho)?;
    let r = problem.rank();
    let k = config.cardinality.unwrap_or(d * d);
    if k < r {
        return Err(Error::InvalidArgument(format!(
            "cardinality {k} is below the rank {r} of the state"
        )));
    }
    let lower = lower_bound_reductions(rho);
    let mut report = DistanceReport {
        d,
        rank: r,
        cardinality: k,
        upper: None,
        lower_reduction: lower,
        d2_to_m_upper: None,
        verdict: Verdict::Undecided,
        certificate: Certificate::None,
        iterations: 0,
        converged: false,
        restarts: config.optimizer.restarts,
        restart_values: Vec::new(),
        escalation: Vec::new(),
        member_tol: config.member_tol,
        cert_tol: config.cert_tol,
        seed: config.optimizer.seed,
        diagnostics: None,
    };

    let outcome = optimize(&problem, k, config, &mut report);
    match outcome {
        Ok(Some(t)) => {
            let upper = report.upper.expect("set on success");
            report.d2_to_m_upper = Some(property6_relation(upper.min(max_value(d)), d)?);
            let z = &problem.w * t.matrix();
            if lower > config.cert_tol {
                report.verdict = Verdict::NotRuCertified;
                report.certificate = Certificate::ReductionViolation { norm: lower };
            } else if upper < config.member_tol {
                report.verdict = Verdict::RuNumerical;
                report.certificate = Certificate::Ensemble {
                    members: members_of_columns(&z),
                };
            }
        }
        Ok(None) => {}
        Err(Error::NumericalFailure { message, .. }) | Err(Error::Retraction(message)) => {
            report.diagnostics = Some(message);
            report.upper = None;
            if lower > config.cert_tol {
                report.verdict = Verdict::NotRuCertified;
                report.certificate = Certificate::ReductionViolation { norm: lower };
            }
        }
        Err(e) => return Err(e),
    }
    Ok(report)
}

fn optimize(
    problem: &SupportProblem,
    k: usize,
    config: &DistanceConfig,
    report: &mut DistanceReport,
) -> Result<Option<RightUnitary>> {
    let r = problem.rank();
    let objective = &problem.objective;
    if r == 1 {
        // A pure state has a single ensemble up to phases and zero weights.
        let t = RightUnitary::new(identity(1))?.pad_columns(k);
        let v = objective.value(t.matrix());
        report.upper = Some(v);
        report.restart_values = vec![v];
        report.converged = true;
        return Ok(Some(t));
    }
    // The eigen-ensemble is a natural first guess.
    let warm = RightUnitary::identity(r).pad_columns(k);
    let result = manifold::minimize_from(objective, &[warm], r, k, &config.optimizer)?;
    let mut best_value = result.best_value;
    let mut best = result.best.clone();
    record(report, &result);

    if config.escalate {
        let d = report.d;
        let mut sizes = vec![2 * d * d, d.pow(4)];
        sizes.retain(|&s| s > k);
        sizes.dedup();
        for (step, size) in sizes.into_iter().enumerate() {
            let padded = best.pad_columns(size);
            let seed = config.optimizer.seed.wrapping_add(0xE5CA_1A7E + step as u64);
            let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
            let noise = ginibre(&mut rng, r, size).scale(1e-3);
            let start = manifold::retract(&(padded.matrix() + noise))?;
            let cfg = OptimizerConfig {
                restarts: 1,
                seed,
                ..config.optimizer.clone()
            };
            let res = manifold::minimize_from(objective, &[start], r, size, &cfg)?;
            // Keep the incumbent when the larger search does not improve it.
            let value = res.best_value.min(best_value);
            if res.best_value < best_value {
                best_value = res.best_value;
                best = res.best.clone();
            }
            report.iterations += res.iterations;
            report.escalation.push(EscalationStep {
                cardinality: size,
                value,
            });
        }
        report.cardinality = best.cols();
    }
    report.upper = Some(best_value);
    Ok(Some(best))
}

fn record(report: &mut DistanceReport, result: &OptimizerResult) {
    report.iterations = result.iterations;
    report.converged = result.converged;
    report.restarts = result.restarts.len();
    report.restart_values = result.restarts.iter().map(|t| t.best_value).collect();
}

/// Concurrence of assistance of a two-qubit state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Assistance {
    /// `‖ρ^{1/2} (σ_y⊗σ_y) (ρ*)^{1/2}‖₁`; reduces to `|⟨ψ|σ_y⊗σ_y|ψ*⟩|` on pure states.
    pub value: f64,
    /// `‖ρ^{1/2} (σ_y⊗σ_y) ρ^{1/2}‖₁`, without complex conjugation.
    pub unconjugated: f64,
    pub forms_differ: bool,
}

pub fn concurrence_of_assistance(rho: &BipartiteState) -> Result<Assistance> {
    if rho.dim() != 2 {
        return Err(Error::UnsupportedDimension(rho.dim()));
    }
    let s = psd_sqrt(rho.matrix())?;
    let s_conj = s.map(|z| z.conj());
    let [_, y, _] = pauli();
    let yy = kron(&y, &y);
    let value = trace_norm(&(&s * &yy * &s_conj));
    let unconjugated = trace_norm(&(&s * &yy * &s));
    Ok(Assistance {
        value,
        unconjugated,
        forms_differ: (value - unconjugated).abs() > 1e-10,
    })
}

/// `|⟨ψ| σ_y⊗σ_y |ψ*⟩|`, the concurrence of a two-qubit pure state.
pub fn pure_concurrence(psi: &CVec) -> Result<f64> {
    if psi.len() != 4 {
        return Err(Error::Shape(format!("expected a 2-qubit vector, got length {}", psi.len())));
    }
    let [_, y, _] = pauli();
    let yy = kron(&y, &y);
    let conj = psi.map(|z| z.conj());
    Ok(psi.dotc(&(yy * conj)).norm())
}

/// `-Σ_j p_j E(ψ_j)` over ensembles `Z = W T`, with `E` the entanglement
/// entropy in bits.
#[derive(Debug, Clone)]
pub struct EoaObjective {
    pub d: usize,
    pub w: CMat,
}

const LOG_FLOOR: f64 = 1e-30;

impl EoaObjective {
    pub fn new(rho: &BipartiteState) -> Self {
        EoaObjective {
            d: rho.dim(),
            w: support_factor(rho),
        }
    }

    fn member(&self, z: &CMat, j: usize) -> CMat {
        let d = self.d;
        CMat::from_fn(d, d, |a, b| z[(a * d + b, j)])
    }
}

impl Objective for EoaObjective {
    fn value(&self, t: &CMat) -> f64 {
        let z = &self.w * t;
        (0..z.ncols())
            .map(|j| {
                let m = self.member(&z, j);
                let mm = &m * m.adjoint();
                let p = trace(&mm).re;
                if p <= 0.0 {
                    return 0.0;
                }
                let spectrum: Vec<f64> = Eigh::new(&mm.unscale(p)).values;
                -p * entropy_bits(&spectrum)
            })
            .sum()
    }

    fn smoothed(&self, t: &CMat, _eps: f64) -> (f64, CMat) {
        let d = self.d;
        let z = &self.w * t;
        let mut f = 0.0;
        let mut gz = CMat::zeros(z.nrows(), z.ncols());
        for j in 0..z.ncols() {
            let m = self.member(&z, j);
            let mm = &m * m.adjoint();
            let p = trace(&mm).re;
            if p <= 0.0 {
                continue;
            }
            let e = Eigh::new(&mm.unscale(p));
            let spectrum: Vec<f64> = e.values.iter().map(|x| x.max(0.0)).collect();
            f -= p * entropy_bits(&spectrum);
            // d(-pE)/dz̃ = 2 log₂(M/p) z̃
            let log = e.map(|x| x.max(LOG_FLOOR).log2());
            let g = (log * &m).scale(2.0);
            for a in 0..d {
                for b in 0..d {
                    gz[(a * d + b, j)] = g[(a, b)];
                }
            }
        }
        (f, self.w.adjoint() * gz)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EoaEstimate {
    /// Average entanglement of the best ensemble found; a lower bound on `E_A`.
    pub value: f64,
    pub max_possible: f64,
    pub members: Vec<EnsembleMember>,
}

/// Lower bound on the entanglement of assistance by maximizing the average
/// entanglement over ensembles of cardinality `d²`.
pub fn eoa_estimate(rho: &BipartiteState, config: &OptimizerConfig) -> Result<EoaEstimate> {
    let d = rho.dim();
    let objective = EoaObjective::new(rho);
    let r = objective.w.ncols();
    let k = (d * d).max(r);
    let warm = RightUnitary::identity(r).pad_columns(k);
    let result = manifold::minimize_from(
        &objective,
        &[warm],
        r,
        k,
        &OptimizerConfig {
            value_target: f64::NEG_INFINITY,
            ..config.clone()
        },
    )?;
    let z = &objective.w * result.best.matrix();
    Ok(EoaEstimate {
        // Entropies are non-negative; this also avoids reporting -0.
        value: (0.0 - result.best_value).max(0.0),
        max_possible: (d as f64).log2(),
        members: members_of_columns(&z),
    })
}
