//! The loss channel is as far from the random-unitary maps as possible, and
//! its reductions certify that without any optimization.

use ruchan::chanfactory::{example_choi, ExampleChannel};
use ruchan::rudistance::{distance, max_value, DistanceConfig};

fn main() -> ruchan::Result<()> {
    for d in 2..=4 {
        let rho = example_choi(&ExampleChannel::Loss, d)?;
        let report = distance(&rho, &DistanceConfig::for_dim(d))?;
        println!(
            "d = {d}: upper {:.12}, maximum {:.12}, lower {:.6}, verdict {}",
            report.upper.unwrap_or(f64::NAN),
            max_value(d),
            report.lower_reduction,
            report.verdict
        );
    }
    Ok(())
}
