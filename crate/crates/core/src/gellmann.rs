//! Generalized Gell-Mann basis of traceless Hermitian `d × d` matrices.
//!
//! Elements are normalized to `Tr[τ_i τ_j] = 2 δ_ij` and ordered as: every
//! `τ_{x;kl}` with `k < l` in lexicographic order, then every `τ_{y;kl}` in the
//! same order, then `τ_{z;k}` for `k = 1..d-1`. For `d = 2` this gives
//! `σ_x, σ_y, σ_z`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{checked_hermitian, ensure_square, identity, trace, CMat, ONE};

/// Hermiticity tolerance for inputs.
pub const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone)]
pub struct BasisElement {
    /// 1-based position in the canonical ordering.
    pub index: usize,
    pub kind: Kind,
    pub matrix: CMat,
}

pub fn validate_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    Ok(())
}

/// The `d² − 1` basis elements in canonical order.
pub fn basis(d: usize) -> Result<Vec<BasisElement>> {
    validate_dim(d)?;
    let pairs: Vec<(usize, usize)> = (0..d)
        .flat_map(|k| ((k + 1)..d).map(move |l| (k, l)))
        .collect();
    let mut out = Vec::with_capacity(d * d - 1);
    for &(k, l) in &pairs {
        let mut m = CMat::zeros(d, d);
        m[(k, l)] = ONE;
        m[(l, k)] = ONE;
        out.push((Kind::X, m));
    }
    for &(k, l) in &pairs {
        // Sign chosen so that d = 2 reproduces σ_y.
        let mut m = CMat::zeros(d, d);
        m[(k, l)] = -crate::linalg::I;
        m[(l, k)] = crate::linalg::I;
        out.push((Kind::Y, m));
    }
    for k in 1..d {
        let norm = (2.0 / (k * k + k) as f64).sqrt();
        let mut m = CMat::zeros(d, d);
        for a in 0..k {
            m[(a, a)] = ONE * norm;
        }
        m[(k, k)] = ONE * (-(k as f64) * norm);
        out.push((Kind::Z, m));
    }
    Ok(out
        .into_iter()
        .enumerate()
        .map(|(i, (kind, matrix))| BasisElement {
            index: i + 1,
            kind,
            matrix,
        })
        .collect())
}

/// The basis matrices only, in canonical order.
pub fn basis_matrices(d: usize) -> Result<Vec<CMat>> {
    Ok(basis(d)?.into_iter().map(|b| b.matrix).collect())
}

/// `τ_0 = √(2/d) · 1`.
pub fn tau0(d: usize) -> CMat {
    identity(d).scale((2.0 / d as f64).sqrt())
}

/// Reduced Bloch vector `ρ_i = Tr[ρ τ_i] / 2`, `i ≥ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlochVector {
    pub dim: usize,
    pub entries: Vec<f64>,
}

impl BlochVector {
    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &BlochVector) -> f64 {
        self.entries.iter().zip(&other.entries).map(|(a, b)| a * b).sum()
    }

    /// Radius of the Bloch ball, `√((d−1)/2d)`; attained exactly by pure states.
    pub fn max_length(d: usize) -> f64 {
        ((d as f64 - 1.0) / (2.0 * d as f64)).sqrt()
    }

    /// Rebuild `Σ_i ρ_i τ_i + τ_0 · t / 2` where `t = Tr[ρ τ_0]`.
    pub fn reconstruct(&self, tau0_coefficient: f64) -> Result<CMat> {
        let d = self.dim;
        let mut m = tau0(d).scale(tau0_coefficient / 2.0);
        for (x, tau) in self.entries.iter().zip(basis_matrices(d)?) {
            m += tau.scale(*x);
        }
        Ok(m)
    }
}

pub fn bloch_vector(rho: &CMat) -> Result<BlochVector> {
    let d = ensure_square(rho)?;
    let rho = checked_hermitian(rho, HERMITIAN_TOL)?;
    let entries = basis_matrices(d)?
        .iter()
        .map(|tau| trace(&(&rho * tau)).re / 2.0)
        .collect();
    Ok(BlochVector { dim: d, entries })
}

/// The orthogonal matrix `Õ` with `Õ_ji = Tr[U τ_i U† τ_j] / 2` acting on
/// reduced Bloch vectors: `bloch(U ρ U†) = Õ · bloch(ρ)`.
pub fn conjugation_rotation(u: &CMat) -> Result<nalgebra::DMatrix<f64>> {
    let d = ensure_square(u)?;
    validate_dim(d)?;
    let dev = crate::linalg::max_abs(&(u * u.adjoint() - identity(d)));
    if !(dev <= 1e-10) {
        return Err(Error::Feasibility(format!(
            "matrix is not unitary (deviation {dev:.3e})"
        )));
    }
    let taus = basis_matrices(d)?;
    let rotated: Vec<CMat> = taus.iter().map(|t| u * t * u.adjoint()).collect();
    let n = taus.len();
    Ok(nalgebra::DMatrix::from_fn(n, n, |j, i| {
        trace(&(&rotated[i] * &taus[j])).re / 2.0
    }))
}

/// Expansion coefficients of a Hermitian matrix in `{τ_0, τ_1, …}`.
pub fn expand(m: &CMat) -> Result<(f64, BlochVector)> {
    let d = ensure_square(m)?;
    let t0 = trace(&(m * tau0(d))).re;
    Ok((t0, bloch_vector(m)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, haar_unitary, max_abs, pauli};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn qubit_basis_is_pauli() {
        let b = basis_matrices(2).unwrap();
        for (t, s) in b.iter().zip(pauli().iter()) {
            assert!(max_abs(&(t - s)) < 1e-15);
        }
    }

    #[test]
    fn qutrit_z_elements() {
        let b = basis(3).unwrap();
        let z: Vec<_> = b.iter().filter(|e| e.kind == Kind::Z).collect();
        assert_eq!(z.len(), 2);
        assert_eq!(z[0].index, 7);
        let d1 = [1.0, -1.0, 0.0];
        let s = 1.0 / 3f64.sqrt();
        let d2 = [s, s, -2.0 * s];
        for k in 0..3 {
            assert!((z[0].matrix[(k, k)] - c(d1[k], 0.0)).norm() < 1e-15);
            assert!((z[1].matrix[(k, k)] - c(d2[k], 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn orthonormality_up_to_six() {
        for d in 2..=6 {
            let b = basis_matrices(d).unwrap();
            assert_eq!(b.len(), d * d - 1);
            let mut all = vec![tau0(d)];
            all.extend(b);
            for (i, a) in all.iter().enumerate() {
                assert!(crate::linalg::hermitian_deviation(a) == 0.0);
                if i > 0 {
                    assert!(trace(a).norm() < 1e-12);
                }
                for (j, bb) in all.iter().enumerate() {
                    let want = if i == j { 2.0 } else { 0.0 };
                    assert!((trace(&(a * bb)) - c(want, 0.0)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn rejects_small_dimension() {
        assert!(matches!(basis(1), Err(Error::InvalidDimension(1))));
    }

    #[test]
    fn bloch_examples() {
        let mixed = identity(2).scale(0.5);
        assert!(bloch_vector(&mixed).unwrap().norm() < 1e-15);
        let mut zero = CMat::zeros(2, 2);
        zero[(0, 0)] = ONE;
        let v = bloch_vector(&zero).unwrap();
        assert_eq!(v.entries, vec![0.0, 0.0, 0.5]);
    }

    #[test]
    fn bloch_rejects_non_square() {
        assert!(matches!(bloch_vector(&CMat::zeros(2, 3)), Err(Error::Shape(_))));
    }

    #[test]
    fn rotation_about_z() {
        let theta: f64 = 0.7;
        let u = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(0.0, -theta / 2.0).exp(),
            c(0.0, theta / 2.0).exp(),
        ]));
        let o = conjugation_rotation(&u).unwrap();
        let expect = nalgebra::DMatrix::from_row_slice(
            3,
            3,
            &[
                theta.cos(),
                -theta.sin(),
                0.0,
                theta.sin(),
                theta.cos(),
                0.0,
                0.0,
                0.0,
                1.0,
            ],
        );
        assert!((o - expect).amax() < 1e-14);
    }

    #[test]
    fn rotation_identity_and_orthogonal() {
        let o = conjugation_rotation(&identity(3)).unwrap();
        assert!((o - nalgebra::DMatrix::<f64>::identity(8, 8)).amax() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = haar_unitary(&mut rng, 3);
        let o = conjugation_rotation(&u).unwrap();
        assert!((&o * o.transpose() - nalgebra::DMatrix::<f64>::identity(8, 8)).amax() < 1e-10);
    }

    #[test]
    fn rotation_rejects_non_unitary() {
        let m = identity(2).scale(1.1);
        assert!(matches!(conjugation_rotation(&m), Err(Error::Feasibility(_))));
    }
}
