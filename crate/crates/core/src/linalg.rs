//! Dense complex linear algebra helpers shared by every module.
//!
//! Bipartite vectors on `C^d ⊗ C^d` use the index `i * d + j` for `|i, j⟩`;
//! the first (major) factor is the output side of a channel.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Eigenvalues below this are treated as zero when taking square roots.
pub const PSD_CLIP: f64 = 1e-10;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Integer square root for perfect squares.
pub fn exact_sqrt(n: usize) -> Option<usize> {
    let r = (n as f64).sqrt().round() as usize;
    (r * r == n).then_some(r)
}

/// `Tr_1 ρ`: trace out the first (output) factor, leaving a matrix on the second.
pub fn partial_trace_first(rho: &CMat, d: usize) -> CMat {
    CMat::from_fn(d, d, |j, l| (0..d).map(|i| rho[(i * d + j, i * d + l)]).sum())
}

/// `Tr_2 ρ`: trace out the second (input) factor, leaving a matrix on the first.
pub fn partial_trace_second(rho: &CMat, d: usize) -> CMat {
    CMat::from_fn(d, d, |i, k| (0..d).map(|j| rho[(i * d + j, k * d + j)]).sum())
}

pub fn trace(m: &CMat) -> C64 {
    m.diagonal().iter().sum()
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Real inner product `Re Tr[A† B]`.
pub fn real_inner(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

pub fn hermitian_deviation(m: &CMat) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// `‖M − I/d‖₂` for a `d × d` matrix.
pub fn distance_to_maximally_mixed(m: &CMat) -> f64 {
    let d = m.nrows();
    frobenius(&(m - identity(d).scale(1.0 / d as f64)))
}

pub fn ensure_square(m: &CMat) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::Shape(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

/// Validate Hermiticity to `tol` and return the symmetrized matrix.
pub fn checked_hermitian(m: &CMat, tol: f64) -> Result<CMat> {
    ensure_square(m)?;
    let dev = hermitian_deviation(m);
    if !(dev <= tol) {
        return Err(Error::NotHermitian(dev));
    }
    Ok(hermitian_part(m))
}

/// Spectral decomposition of a Hermitian matrix.
///
/// Eigenvalues are sorted in descending order; every eigenvector has its first
/// non-negligible component made real and positive.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl Eigh {
    pub fn new(m: &CMat) -> Self {
        let n = m.nrows();
        let eig = hermitian_part(m).symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let mut vectors = CMat::zeros(n, n);
        for (col, &k) in order.iter().enumerate() {
            let mut v = eig.eigenvectors.column(k).into_owned();
            fix_phase(&mut v);
            vectors.set_column(col, &v);
        }
        Eigh { values, vectors }
    }

    /// Rebuild `V f(Λ) V†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for k in 0..n {
            let s = f(self.values[k]);
            scaled.column_mut(k).scale_mut(s);
        }
        &scaled * self.vectors.adjoint()
    }

    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }
}

/// Make the first component with modulus above `1e-12` real and positive.
pub fn fix_phase(v: &mut CVec) {
    let norm = v.norm();
    if norm == 0.0 {
        return;
    }
    if let Some(z) = v.iter().copied().find(|z| z.norm() > 1e-12 * norm) {
        let phase = z.conj() / z.norm();
        for x in v.iter_mut() {
            *x *= phase;
        }
    }
}

/// Square root of a positive semidefinite matrix.
///
/// Eigenvalues in `[-PSD_CLIP, 0)` are clipped to zero; anything more negative
/// is rejected. Eigenvalues at or below [`noise_floor`] are also set to zero so
/// that rounding noise does not turn into `√ε`-sized entries.
pub fn psd_sqrt(m: &CMat) -> Result<CMat> {
    psd_sqrt_eigh(&Eigh::new(m))
}

pub fn psd_sqrt_eigh(e: &Eigh) -> Result<CMat> {
    if !e.min().is_finite() || !e.max().is_finite() {
        return Err(Error::numerical("non-finite eigenvalue", None));
    }
    if e.min() < -PSD_CLIP {
        return Err(Error::NotCp(e.min()));
    }
    let floor = noise_floor(e);
    Ok(e.map(|x| if x > floor { x.sqrt() } else { 0.0 }))
}

/// `n · ε · λ_max`: eigenvalues at or below this are rounding noise.
pub fn noise_floor(e: &Eigh) -> f64 {
    e.values.len() as f64 * f64::EPSILON * e.max().max(0.0)
}

pub fn singular_values(m: &CMat) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn trace_norm(m: &CMat) -> f64 {
    singular_values(m).iter().sum()
}

/// Von Neumann entropy in bits of a spectrum that sums to one.
pub fn entropy_bits(spectrum: &[f64]) -> f64 {
    spectrum
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.log2())
        .sum()
}

pub fn column_norm_sqr(m: &CMat, j: usize) -> f64 {
    m.column(j).iter().map(|z| z.norm_sqr()).sum()
}

/// Matrix with independent standard complex Gaussian entries (variance 1 per entry).
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re * scale, im * scale)
    })
}

pub fn ginibre_vec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVec {
    let m = ginibre(rng, n, 1);
    m.column(0).into_owned()
}

/// Random unit vector, uniformly distributed on the complex sphere.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVec {
    let v = ginibre_vec(rng, n);
    let norm = v.norm();
    v.unscale(norm)
}

/// Haar-distributed unitary (polar factor of a Ginibre matrix).
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let g = ginibre(rng, n, n);
    let gram = &g * g.adjoint();
    let e = Eigh::new(&gram);
    e.map(|x| 1.0 / x.sqrt()) * g
}

pub fn outer(u: &CVec, v: &CVec) -> CMat {
    u * v.adjoint()
}

/// Pauli matrices `σ_x, σ_y, σ_z`.
pub fn pauli() -> [CMat; 3] {
    [
        CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        CMat::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
    ]
}

pub fn is_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}
