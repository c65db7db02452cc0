//! Concurrence and entanglement of assistance of two-qubit states.

use ruchan::chanfactory::{example_choi, ExampleChannel};
use ruchan::linalg::identity;
use ruchan::manifold::OptimizerConfig;
use ruchan::qstate::BipartiteState;
use ruchan::rudistance::{concurrence_of_assistance, eoa_estimate};

fn main() -> ruchan::Result<()> {
    let states = [
        ("Bell state", example_choi(&ExampleChannel::Identity, 2)?),
        ("loss channel", example_choi(&ExampleChannel::Loss, 2)?),
        ("maximally mixed", BipartiteState::new(identity(4).scale(0.25))?),
    ];
    for (name, rho) in states {
        let ca = concurrence_of_assistance(&rho)?;
        let eoa = eoa_estimate(&rho, &OptimizerConfig::for_dim(2))?;
        println!(
            "{name:>16}: C_A = {:.9} (unconjugated {:.9}), E_A >= {:.9}",
            ca.value, ca.unconjugated, eoa.value
        );
    }
    Ok(())
}
