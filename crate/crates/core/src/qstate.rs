//! States, channels and the Choi correspondence.
//!
//! Channels act as `Φ(ρ) = Σ_k K_k ρ K_k†`. The Choi state of a channel is
//! `(Φ ⊗ 1)(|I⟩⟨I|)` with `|I⟩ = Σ_i |i,i⟩ / √d`, so it has unit trace whenever
//! the channel is trace preserving. Factor 1 is the output, factor 2 the input:
//! trace preservation shows up as `Tr_1 = 1/d` and unitality as `Tr_2 = 1/d`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gellmann::validate_dim;
use crate::linalg::{
    checked_hermitian, distance_to_maximally_mixed, exact_sqrt, frobenius, identity, max_abs,
    partial_trace_first, partial_trace_second, singular_values, trace, CMat, CVec, Eigh, ONE,
};

/// Default tolerance for the structural checks.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Hermiticity tolerance applied when wrapping a raw matrix as a state.
pub const STATE_HERMITIAN_TOL: f64 = 1e-8;

/// A unit-trace positive semidefinite matrix on `C^d ⊗ C^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteState {
    d: usize,
    matrix: CMat,
}

impl BipartiteState {
    /// Wrap a matrix, checking shape, Hermiticity, positivity and trace.
    pub fn new(matrix: CMat) -> Result<Self> {
        let n = crate::linalg::ensure_square(&matrix)?;
        let d = exact_sqrt(n)
            .ok_or_else(|| Error::Shape(format!("side {n} is not a perfect square")))?;
        validate_dim(d)?;
        let matrix = checked_hermitian(&matrix, STATE_HERMITIAN_TOL)?;
        let tr = trace(&matrix).re;
        if !((tr - 1.0).abs() <= DEFAULT_TOL) {
            return Err(Error::Precondition(format!("state has trace {tr}, expected 1")));
        }
        let min = Eigh::new(&matrix).min();
        if !min.is_finite() {
            return Err(Error::numerical("non-finite eigenvalue", None));
        }
        if min < -DEFAULT_TOL {
            return Err(Error::NotCp(min));
        }
        Ok(BipartiteState { d, matrix })
    }

    /// Scale a positive semidefinite matrix to unit trace, then wrap it.
    pub fn normalized(matrix: CMat) -> Result<Self> {
        let tr = trace(&matrix).re;
        if !(tr.is_finite() && tr > 0.0) {
            return Err(Error::Precondition(format!("cannot normalize trace {tr}")));
        }
        Self::new(matrix.unscale(tr))
    }

    pub(crate) fn from_trusted(d: usize, matrix: CMat) -> Self {
        BipartiteState { d, matrix }
    }

    /// `|ψ⟩⟨ψ|` for a unit vector on `C^d ⊗ C^d`.
    pub fn pure(psi: &CVec) -> Result<Self> {
        let norm = psi.norm();
        if !((norm - 1.0).abs() <= 1e-8) {
            return Err(Error::Normalization(norm));
        }
        let psi = psi.unscale(norm);
        Self::new(&psi * psi.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    /// Reduction onto the input factor (`Tr_1`).
    pub fn trace_output(&self) -> CMat {
        partial_trace_first(&self.matrix, self.d)
    }

    /// Reduction onto the output factor (`Tr_2`).
    pub fn trace_input(&self) -> CMat {
        partial_trace_second(&self.matrix, self.d)
    }

    pub fn eigh(&self) -> Eigh {
        Eigh::new(&self.matrix)
    }

    /// Number of eigenvalues above `tol · λ_max`.
    pub fn rank(&self, tol: f64) -> usize {
        let e = self.eigh();
        let cut = tol * e.max();
        e.values.iter().filter(|&&x| x > cut).count()
    }

    /// Local unitary conjugation `(U ⊗ V) ρ (U ⊗ V)†`.
    pub fn local_conjugate(&self, u: &CMat, v: &CMat) -> Self {
        let w = u.kronecker(v);
        Self::from_trusted(self.d, &w * &self.matrix * w.adjoint())
    }

    /// Convex combination `λ·self + (1−λ)·other`.
    pub fn mix(&self, other: &BipartiteState, lambda: f64) -> Result<Self> {
        if self.d != other.d {
            return Err(Error::Shape("mixing states of different dimension".into()));
        }
        Ok(Self::from_trusted(
            self.d,
            self.matrix.scale(lambda) + other.matrix.scale(1.0 - lambda),
        ))
    }
}

/// Ordered list of Kraus operators, `Φ(ρ) = Σ_k K_k ρ K_k†`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    d: usize,
    kraus: Vec<CMat>,
}

impl KrausChannel {
    pub fn new(kraus: Vec<CMat>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::Shape("channel needs at least one Kraus operator".into()))?;
        let d = first.nrows();
        validate_dim(d)?;
        if let Some(bad) = kraus.iter().find(|k| k.nrows() != d || k.ncols() != d) {
            return Err(Error::Shape(format!(
                "Kraus operator is {}x{}, expected {d}x{d}",
                bad.nrows(),
                bad.ncols()
            )));
        }
        Ok(KrausChannel { d, kraus })
    }

    pub fn unitary(u: CMat) -> Result<Self> {
        Self::new(vec![u])
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn kraus(&self) -> &[CMat] {
        &self.kraus
    }

    pub fn rank(&self) -> usize {
        self.kraus.len()
    }

    pub fn apply(&self, rho: &CMat) -> CMat {
        self.kraus
            .iter()
            .fold(CMat::zeros(self.d, self.d), |acc, k| acc + k * rho * k.adjoint())
    }

    /// `‖Σ_k K_k† K_k − 1‖_max`.
    pub fn tp_defect(&self) -> f64 {
        let s = self
            .kraus
            .iter()
            .fold(CMat::zeros(self.d, self.d), |acc, k| acc + k.adjoint() * k);
        max_abs(&(s - identity(self.d)))
    }

    /// `‖Σ_k K_k K_k† − 1‖_max`.
    pub fn unital_defect(&self) -> f64 {
        let s = self
            .kraus
            .iter()
            .fold(CMat::zeros(self.d, self.d), |acc, k| acc + k * k.adjoint());
        max_abs(&(s - identity(self.d)))
    }

    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        self.tp_defect() <= tol
    }

    pub fn is_unital(&self, tol: f64) -> bool {
        self.unital_defect() <= tol
    }
}

/// `|I⟩ = Σ_i |i,i⟩ / √d`.
pub fn max_entangled_vector(d: usize) -> Result<CVec> {
    validate_dim(d)?;
    let mut v = CVec::zeros(d * d);
    let s = 1.0 / (d as f64).sqrt();
    for i in 0..d {
        v[i * d + i] = ONE * s;
    }
    Ok(v)
}

/// Choi state `(1/d) Σ_k Σ_ij K_k|i⟩⟨j|K_k† ⊗ |i⟩⟨j|`.
///
/// The result is PSD by construction; it has unit trace only for
/// trace-preserving channels, so it is returned as a raw matrix here and
/// wrapped by [`choi_of`].
pub fn choi_matrix(channel: &KrausChannel) -> CMat {
    let d = channel.dim();
    let n = d * d;
    let mut out = CMat::zeros(n, n);
    for k in channel.kraus() {
        // vec(K)_{(a,i)} = K_{a,i}: column i of K sits on the input index i.
        let v = CVec::from_fn(n, |idx, _| k[(idx / d, idx % d)]);
        out += &v * v.adjoint();
    }
    out.unscale(d as f64)
}

pub fn choi_of(channel: &KrausChannel) -> Result<BipartiteState> {
    BipartiteState::new(choi_matrix(channel))
}

/// Inverse Choi map: one Kraus operator per retained eigenvector.
///
/// Eigenvalues at or below `d² · ε_machine · λ_max` are dropped.
pub fn kraus_of(choi: &BipartiteState) -> Result<KrausChannel> {
    kraus_of_matrix(choi.matrix(), choi.dim())
}

pub(crate) fn kraus_of_matrix(choi: &CMat, d: usize) -> Result<KrausChannel> {
    let e = Eigh::new(choi);
    if e.min() < -1e-8 * e.max().max(1.0) {
        return Err(Error::NotCp(e.min()));
    }
    let cut = (d * d) as f64 * f64::EPSILON * e.max();
    let mut kraus = Vec::new();
    for (k, &lambda) in e.values.iter().enumerate() {
        if lambda <= cut {
            break;
        }
        let v = e.vectors.column(k);
        let scale = (d as f64 * lambda).sqrt();
        kraus.push(CMat::from_fn(d, d, |a, i| v[a * d + i] * scale));
    }
    KrausChannel::new(kraus)
}

/// Dual channel with Kraus operators `K_k†`.
pub fn dual_channel(channel: &KrausChannel) -> KrausChannel {
    KrausChannel {
        d: channel.d,
        kraus: channel.kraus.iter().map(|k| k.adjoint()).collect(),
    }
}

/// Amplitudes of a bipartite vector arranged as a `d × d` matrix:
/// `ψ̃_ij = ⟨i,j|ψ⟩`.
///
/// With this normalization `‖ψ̃‖₂ = ‖ψ‖`, `Tr_2 |ψ⟩⟨ψ| = ψ̃ ψ̃†`, and
/// `|ψ⟩ = √d (ψ̃ ⊗ 1)|I⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixifiedVector {
    pub d: usize,
    pub matrix: CMat,
}

impl MatrixifiedVector {
    pub fn to_vector(&self) -> CVec {
        let d = self.d;
        CVec::from_fn(d * d, |idx, _| self.matrix[(idx / d, idx % d)])
    }

    /// Schmidt coefficients, descending.
    pub fn schmidt_coefficients(&self) -> Vec<f64> {
        singular_values(&self.matrix)
    }

    /// Whether `√d · ψ̃` is unitary to `tol`.
    pub fn is_max_entangled(&self, tol: f64) -> bool {
        let u = self.matrix.scale((self.d as f64).sqrt());
        max_abs(&(&u * u.adjoint() - identity(self.d))) <= tol
    }
}

pub fn matrixify(psi: &CVec) -> Result<MatrixifiedVector> {
    let d = exact_sqrt(psi.len())
        .ok_or_else(|| Error::Shape(format!("length {} is not a perfect square", psi.len())))?;
    Ok(MatrixifiedVector {
        d,
        matrix: CMat::from_fn(d, d, |i, j| psi[i * d + j]),
    })
}

pub fn dematrixify(m: &MatrixifiedVector) -> CVec {
    m.to_vector()
}

/// Structural flags of a candidate Choi matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct Classification {
    pub is_psd: bool,
    pub is_tp: bool,
    pub is_unital: bool,
    pub in_n: bool,
}

impl Classification {
    pub fn doubly_stochastic(&self) -> bool {
        self.is_psd && self.is_tp && self.is_unital
    }
}

pub fn classify(choi: &CMat, tol: f64) -> Result<Classification> {
    let n = crate::linalg::ensure_square(choi)?;
    let d = exact_sqrt(n)
        .ok_or_else(|| Error::Shape(format!("side {n} is not a perfect square")))?;
    let herm = crate::linalg::hermitian_part(choi);
    let min = Eigh::new(&herm).min();
    let is_psd = crate::linalg::hermitian_deviation(choi) <= tol.max(STATE_HERMITIAN_TOL)
        && min >= -tol;
    let tp_gap = distance_to_maximally_mixed(&partial_trace_first(choi, d));
    let unital_gap = distance_to_maximally_mixed(&partial_trace_second(choi, d));
    let is_tp = tp_gap <= tol;
    let is_unital = unital_gap <= tol;
    Ok(Classification {
        is_psd,
        is_tp,
        is_unital,
        in_n: is_tp && is_unital,
    })
}

/// `‖Tr_1 ρ − 1/d‖₂` and `‖Tr_2 ρ − 1/d‖₂`.
pub fn reduction_gaps(rho: &CMat, d: usize) -> (f64, f64) {
    (
        distance_to_maximally_mixed(&partial_trace_first(rho, d)),
        distance_to_maximally_mixed(&partial_trace_second(rho, d)),
    )
}

/// Choi state of `Σ_i p_i U_i · U_i†`.
pub fn unitary_mixture_choi(weights: &[f64], unitaries: &[CMat]) -> Result<BipartiteState> {
    let kraus = weights
        .iter()
        .zip(unitaries)
        .map(|(p, u)| u.scale(p.sqrt()))
        .collect();
    choi_of(&KrausChannel::new(kraus)?)
}

pub fn frobenius_distance(a: &BipartiteState, b: &BipartiteState) -> f64 {
    frobenius(&(a.matrix() - b.matrix()))
}
