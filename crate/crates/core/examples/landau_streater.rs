//! The Landau–Streater channel: doubly stochastic, extremal, and not a
//! mixture of unitaries.

use ruchan::chanfactory::{example_channel, example_choi, extremal_unital_cpt_check, ExampleChannel};
use ruchan::qstate::classify;
use ruchan::rudistance::{distance, DistanceConfig};

fn main() -> ruchan::Result<()> {
    let channel = example_channel(&ExampleChannel::LandauStreater, 3)?;
    let rho = example_choi(&ExampleChannel::LandauStreater, 3)?;
    println!("doubly stochastic: {}", classify(rho.matrix(), 1e-10)?.doubly_stochastic());
    let ext = extremal_unital_cpt_check(&channel);
    println!("extremal among unital CPT maps: {} (rank {}/{})", ext.independent, ext.rank_found, ext.rank_needed);

    let mut config = DistanceConfig::for_dim(3);
    config.escalate = true;
    let report = distance(&rho, &config)?;
    println!("D upper bound {:.10} (1/sqrt 3 = {:.10})", report.upper.unwrap_or(f64::NAN), 3f64.sqrt().recip());
    for step in &report.escalation {
        println!("  K = {:>2}: {:.10}", step.cardinality, step.value);
    }
    println!("verdict {}", report.verdict);
    Ok(())
}
