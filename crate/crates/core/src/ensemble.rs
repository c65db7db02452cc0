//! Convex decompositions of a bipartite state and the diagonal-vanishing
//! problem behind random-unitary membership.
//!
//! Every ensemble `{p_j, ψ_j}` of `ρ` arises as the columns of
//! `Z = ρ^{1/2} T` for a right-unitary `T`, with `Z_j = √p_j |ψ_j⟩`. The state
//! is a mixture of maximally entangled vectors exactly when some `T` makes the
//! diagonals of all `T† A_i T` vanish, where `A_i = ρ^{1/2} (τ_i ⊗ 1) ρ^{1/2}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gellmann::basis_matrices;
use crate::linalg::{
    column_norm_sqr, distance_to_maximally_mixed, ensure_square, exact_sqrt, hermitian_part,
    identity, kron, partial_trace_second, pauli, psd_sqrt_eigh, trace, CMat, CVec, Eigh, C64, ONE,
};
use crate::manifold::{self, Objective, OptimizerConfig, RightUnitary};
use crate::qstate::{reduction_gaps, BipartiteState};

/// Members lighter than this are kept but flagged as numerically null.
pub const WEIGHT_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMember {
    pub weight: f64,
    /// Normalized state vector; all zeros for null members.
    #[serde(with = "crate::cli::format::cvec")]
    pub vector: CVec,
    pub null: bool,
}

/// `ρ` together with its square root, ready for HJW decompositions.
#[derive(Debug, Clone)]
pub struct EnsembleFactor {
    pub rho: BipartiteState,
    pub sqrt: CMat,
    pub eigh: Eigh,
}

impl EnsembleFactor {
    pub fn new(rho: &BipartiteState) -> Result<Self> {
        let eigh = rho.eigh();
        let sqrt = psd_sqrt_eigh(&eigh)?;
        Ok(EnsembleFactor {
            rho: rho.clone(),
            sqrt,
            eigh,
        })
    }

    /// `Z = ρ^{1/2} T`.
    pub fn z(&self, t: &RightUnitary) -> Result<CMat> {
        if t.rows() != self.sqrt.nrows() {
            return Err(Error::Shape(format!(
                "T has {} rows, state has side {}",
                t.rows(),
                self.sqrt.nrows()
            )));
        }
        Ok(&self.sqrt * t.matrix())
    }

    pub fn members(&self, t: &RightUnitary) -> Result<Vec<EnsembleMember>> {
        let z = self.z(t)?;
        Ok(members_of_columns(&z))
    }
}

pub(crate) fn members_of_columns(z: &CMat) -> Vec<EnsembleMember> {
    (0..z.ncols())
        .map(|j| {
            let weight = column_norm_sqr(z, j);
            if weight > WEIGHT_FLOOR {
                EnsembleMember {
                    weight,
                    vector: z.column(j).unscale(weight.sqrt()),
                    null: false,
                }
            } else {
                EnsembleMember {
                    weight,
                    vector: CVec::zeros(z.nrows()),
                    null: true,
                }
            }
        })
        .collect()
}

/// Decompose `ρ` into the ensemble selected by `T`.
pub fn ensemble_from(rho: &BipartiteState, t: &RightUnitary) -> Result<Vec<EnsembleMember>> {
    if t.cols() < rho.rank(crate::qstate::DEFAULT_TOL) {
        return Err(Error::Shape(format!(
            "cardinality {} is below the rank of the state",
            t.cols()
        )));
    }
    EnsembleFactor::new(rho)?.members(t)
}

/// Rebuild `Σ_j p_j |ψ_j⟩⟨ψ_j|`.
pub fn mixture(members: &[EnsembleMember]) -> CMat {
    let n = members.first().map_or(0, |m| m.vector.len());
    members
        .iter()
        .filter(|m| !m.null)
        .fold(CMat::zeros(n, n), |acc, m| {
            acc + (&m.vector * m.vector.adjoint()).scale(m.weight)
        })
}

fn local_dim(psi: &CVec) -> Result<usize> {
    exact_sqrt(psi.len())
        .filter(|&d| d >= 2)
        .ok_or_else(|| Error::Shape(format!("vector length {} is not d² with d ≥ 2", psi.len())))
}

fn checked_unit(psi: &CVec) -> Result<usize> {
    let d = local_dim(psi)?;
    let norm = psi.norm();
    if !((norm - 1.0).abs() <= 1e-8) {
        return Err(Error::Normalization(norm));
    }
    Ok(d)
}

/// `‖Tr_2 |ψ⟩⟨ψ| − 1/d‖₂`, zero exactly for maximally entangled vectors.
pub fn entanglement_gap(psi: &CVec) -> Result<f64> {
    let d = checked_unit(psi)?;
    let rho = psi * psi.adjoint();
    Ok(distance_to_maximally_mixed(&partial_trace_second(&rho, d)))
}

/// The expectations `⟨ψ| τ_i ⊗ 1 |ψ⟩`, which all vanish for maximally
/// entangled vectors.
pub fn local_expectations(psi: &CVec) -> Result<Vec<f64>> {
    let d = checked_unit(psi)?;
    let one = identity(d);
    Ok(basis_matrices(d)?
        .iter()
        .map(|tau| (psi.adjoint() * kron(tau, &one) * psi)[(0, 0)].re)
        .collect())
}

pub fn is_max_entangled(psi: &CVec, tol: f64) -> Result<bool> {
    Ok(entanglement_gap(psi)? <= tol)
}

/// The matrices `A_i = ρ^{1/2} (τ_i ⊗ 1) ρ^{1/2}` of the diagonal-vanishing problem.
#[derive(Debug, Clone)]
pub struct ProblemPInstance {
    pub d: usize,
    pub sqrt: CMat,
    pub a: Vec<CMat>,
}

impl ProblemPInstance {
    pub fn traces(&self) -> Vec<f64> {
        self.a.iter().map(|a| trace(a).re).collect()
    }

    /// `(T† A_i T)_{jj}` as a `(d²−1) × K` real matrix.
    pub fn diagonals(&self, t: &CMat) -> nalgebra::DMatrix<f64> {
        let k = t.ncols();
        let mut out = nalgebra::DMatrix::zeros(self.a.len(), k);
        for (i, a) in self.a.iter().enumerate() {
            let at = a * t;
            for j in 0..k {
                out[(i, j)] = t.column(j).dotc(&at.column(j)).re;
            }
        }
        out
    }
}

pub fn build_problem_p(rho: &BipartiteState) -> Result<ProblemPInstance> {
    let d = rho.dim();
    let sqrt = psd_sqrt_eigh(&rho.eigh())?;
    let one = identity(d);
    let a = basis_matrices(d)?
        .iter()
        .map(|tau| hermitian_part(&(&sqrt * kron(tau, &one) * &sqrt)))
        .collect();
    Ok(ProblemPInstance { d, sqrt, a })
}

/// Result of [`off_diagonalize`].
#[derive(Debug, Clone)]
pub struct OffDiagonalization {
    pub unitary: CMat,
    pub rotations: usize,
    pub max_abs_diag: f64,
}

/// Find a unitary `T` with `diag(T† A T) = 0` for a traceless Hermitian `A`.
///
/// Each step pairs the largest and smallest diagonal entries, which have
/// opposite signs while any entry exceeds `tol`, and rotates in their plane so
/// that the one of smaller magnitude becomes zero.
pub fn off_diagonalize(a: &CMat, tol: f64) -> Result<OffDiagonalization> {
    let n = ensure_square(a)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let b0 = crate::linalg::checked_hermitian(a, 1e-10)?;
    let norm = crate::linalg::frobenius(&b0);
    let tr = trace(&b0).re;
    if tr.abs() > tol * norm.max(f64::MIN_POSITIVE) && tr.abs() > tol {
        return Err(Error::Precondition(format!("matrix has trace {tr:.3e}")));
    }
    let mut b = b0;
    let mut t = identity(n);
    let mut rotations = 0;
    while rotations < n.saturating_sub(1) {
        let diag: Vec<f64> = (0..n).map(|k| b[(k, k)].re).collect();
        let (p, hi) = argbest(&diag, |x, y| x > y);
        let (q, lo) = argbest(&diag, |x, y| x < y);
        if hi.abs().max(lo.abs()) <= tol || !(hi > 0.0 && lo < 0.0) {
            break;
        }
        // Zero the entry of smaller magnitude: `a` is zeroed, `b` absorbs it.
        let (zi, ki, a_val, b_val) = if hi <= -lo { (p, q, hi, lo) } else { (q, p, lo, hi) };
        let theta = (a_val.abs() / b_val.abs()).sqrt().atan();
        let (s, cth) = theta.sin_cos();
        let coupling = b[(zi, ki)];
        // Phase that makes the cross term in the new diagonal vanish.
        let w = if coupling.norm() > 0.0 {
            C64::new(0.0, 1.0) * coupling.conj() / coupling.norm()
        } else {
            ONE
        };
        let mut g = identity(n);
        g[(zi, zi)] = ONE * cth;
        g[(ki, zi)] = w * s;
        g[(zi, ki)] = -w.conj() * s;
        g[(ki, ki)] = ONE * cth;
        b = hermitian_part(&(g.adjoint() * &b * &g));
        t = &t * &g;
        rotations += 1;
    }
    let max_abs_diag = (0..n).map(|k| b[(k, k)].re.abs()).fold(0.0, f64::max);
    Ok(OffDiagonalization {
        unitary: t,
        rotations,
        max_abs_diag,
    })
}

fn argbest(xs: &[f64], better: impl Fn(f64, f64) -> bool) -> (usize, f64) {
    let mut best = (0, xs[0]);
    for (k, &x) in xs.iter().enumerate().skip(1) {
        if better(x, best.1) {
            best = (k, x);
        }
    }
    best
}

/// Eigenvalues closer than this are treated as one degenerate level.
const DEGENERACY_TOL: f64 = 1e-9;

/// Σ_{i,j} |(T† B_i T)_jj|² over square unitaries `T`.
struct DiagonalSquares {
    b: Vec<CMat>,
}

impl Objective for DiagonalSquares {
    fn value(&self, t: &CMat) -> f64 {
        self.smoothed(t, 0.0).0
    }

    fn smoothed(&self, t: &CMat, _eps: f64) -> (f64, CMat) {
        let mut f = 0.0;
        let mut g = CMat::zeros(t.nrows(), t.ncols());
        for b in &self.b {
            let bt = b * t;
            for j in 0..t.ncols() {
                let v = t.column(j).dotc(&bt.column(j)).re;
                f += v * v;
                let mut col = g.column_mut(j);
                col += bt.column(j).scale(4.0 * v);
            }
        }
        (f, g)
    }
}

/// For a two-qubit state with maximally mixed marginals, build the weighted
/// eigenbasis `W = U Λ^{1/2}` and return `max_{i,j} |(W† (σ_i ⊗ 1) W)_jj|`.
///
/// Inside a degenerate eigenspace the eigenvectors are not unique; there the
/// basis is rotated to minimize the diagonal entries before measuring.
pub fn qubit_eigen_offdiag_check(rho: &BipartiteState) -> Result<f64> {
    if rho.dim() != 2 {
        return Err(Error::UnsupportedDimension(rho.dim()));
    }
    let (g1, g2) = reduction_gaps(rho.matrix(), 2);
    if g1.max(g2) > 1e-10 {
        return Err(Error::Precondition(format!(
            "state is not in N (reduction gaps {g1:.3e}, {g2:.3e})"
        )));
    }
    let e = rho.eigh();
    let sigma: Vec<CMat> = pauli().iter().map(|s| kron(s, &identity(2))).collect();
    let mut u = e.vectors.clone();

    let mut start = 0;
    while start < 4 {
        let mut end = start + 1;
        while end < 4 && (e.values[start] - e.values[end]).abs() <= DEGENERACY_TOL {
            end += 1;
        }
        if end - start >= 2 && e.values[start] > DEGENERACY_TOL {
            let v = e.vectors.columns(start, end - start).into_owned();
            let b = sigma.iter().map(|s| v.adjoint() * s * &v).collect();
            let objective = DiagonalSquares { b };
            let m = end - start;
            let config = OptimizerConfig {
                restarts: 6,
                value_target: 1e-28,
                grad_tol: 1e-15,
                stall_tol: 1e-16,
                parallel: false,
                ..OptimizerConfig::default()
            };
            let result =
                manifold::minimize_from(&objective, &[RightUnitary::identity(m)], m, m, &config)?;
            let rotated = &v * result.best.matrix();
            u.columns_mut(start, m).copy_from(&rotated);
        }
        start = end;
    }

    let mut w = u;
    for (k, &lambda) in e.values.iter().enumerate() {
        w.column_mut(k).scale_mut(lambda.max(0.0).sqrt());
    }
    let mut worst: f64 = 0.0;
    for s in &sigma {
        let m = w.adjoint() * s * &w;
        for j in 0..4 {
            worst = worst.max(m[(j, j)].norm());
        }
    }
    Ok(worst)
}
