//! Zero the diagonal of a traceless Hermitian matrix with Givens rotations,
//! and the simultaneous version for two-qubit states.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ruchan::chanfactory::{random_doubly_stochastic, POCS_MAX_ITERS, POCS_TOL};
use ruchan::ensemble::{off_diagonalize, qubit_eigen_offdiag_check};
use ruchan::linalg::{c, ginibre, hermitian_part, identity, trace};

fn main() -> ruchan::Result<()> {
    let n = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut a = hermitian_part(&ginibre(&mut rng, n, n));
    let shift = trace(&a) / c(n as f64, 0.0);
    a -= identity(n) * shift;
    let out = off_diagonalize(&a, 1e-12)?;
    println!("n = {n}: {} rotations, max |diag| = {:.2e}", out.rotations, out.max_abs_diag);

    // For a doubly stochastic qubit map, one unitary zeroes all three
    // diagonals at once.
    let (rho, _) = random_doubly_stochastic(2, 3, 5, POCS_TOL, POCS_MAX_ITERS)?;
    println!("two-qubit simultaneous check: {:.2e}", qubit_eigen_offdiag_check(&rho)?);
    Ok(())
}
