//! Every doubly stochastic qubit map is a mixture of unitaries: recover the
//! unitaries from the optimal ensemble.

use ruchan::chanfactory::{random_doubly_stochastic, POCS_MAX_ITERS, POCS_TOL};
use ruchan::qstate::matrixify;
use ruchan::rudistance::{distance, rank2_qubit_closed_form, Certificate, DistanceConfig};

fn main() -> ruchan::Result<()> {
    let (rho, _) = random_doubly_stochastic(2, 4, 21, POCS_TOL, POCS_MAX_ITERS)?;
    let report = distance(&rho, &DistanceConfig::for_dim(2))?;
    println!("verdict {} with upper bound {:.2e}", report.verdict, report.upper.unwrap_or(f64::NAN));
    if let Certificate::Ensemble { members } = &report.certificate {
        for m in members.iter().filter(|m| !m.null) {
            // √d ψ̃ is the unitary of this member.
            let u = matrixify(&m.vector)?.matrix.scale(2f64.sqrt());
            println!("p = {:.6}, U =\n{u:.4}", m.weight);
        }
    }

    let (rank2, _) = random_doubly_stochastic(2, 2, 22, POCS_TOL, POCS_MAX_ITERS)?;
    let closed = rank2_qubit_closed_form(&rank2, false)?;
    let numeric = distance(&rank2, &DistanceConfig::for_dim(2))?.upper.unwrap_or(f64::NAN);
    println!("rank-2 state: closed form {:.3e}, optimizer {:.3e}", closed.value, numeric);
    Ok(())
}
