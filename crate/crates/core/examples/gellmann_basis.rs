//! Generalized Gell-Mann basis, Bloch vectors and the rotation induced by a
//! unitary conjugation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ruchan::gellmann::{basis, bloch_vector, conjugation_rotation, BlochVector};
use ruchan::linalg::{haar_unitary, outer, random_unit_vector};

fn main() -> ruchan::Result<()> {
    let d = 3;
    for el in basis(d)? {
        println!("tau_{} ({:?})", el.index, el.kind);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let psi = random_unit_vector(&mut rng, d);
    let rho = outer(&psi, &psi);
    let b = bloch_vector(&rho)?;
    println!("pure state Bloch length {:.12} (ball radius {:.12})", b.norm(), BlochVector::max_length(d));

    let u = haar_unitary(&mut rng, d);
    let o = conjugation_rotation(&u)?;
    let rotated = bloch_vector(&(&u * &rho * u.adjoint()))?;
    let predicted = &o * nalgebra::DVector::from_vec(b.entries.clone());
    let err = (predicted - nalgebra::DVector::from_vec(rotated.entries)).amax();
    println!("|O b - b'|_max = {err:.2e}");
    Ok(())
}
