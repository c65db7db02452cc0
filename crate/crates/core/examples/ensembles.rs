//! Pure-state ensembles of a mixed state and the maximal-entanglement test.

use ruchan::chanfactory::{example_choi, ExampleChannel};
use ruchan::ensemble::{build_problem_p, ensemble_from, entanglement_gap, mixture};
use ruchan::linalg::max_abs;
use ruchan::manifold::random_right_unitary;

fn main() -> ruchan::Result<()> {
    let rho = example_choi(&ExampleChannel::RandomUnitaryMixture { count: 3, seed: 2 }, 2)?;
    let t = random_right_unitary(4, 6, 9)?;
    let members = ensemble_from(&rho, &t)?;
    for m in &members {
        println!("p = {:.6}  gap from maximal entanglement {:.3e}", m.weight, entanglement_gap(&m.vector)?);
    }
    println!("reconstruction error {:.2e}", max_abs(&(mixture(&members) - rho.matrix())));

    // A random ensemble is not maximally entangled; the diagonals of
    // T† A_i T measure by how much.
    let problem = build_problem_p(&rho)?;
    let diag = problem.diagonals(t.matrix());
    println!("largest |(T† A_i T)_jj| = {:.3e}", diag.amax());
    Ok(())
}
