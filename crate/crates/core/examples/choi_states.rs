//! Choi states of channels: round trips, duality and classification.

use ruchan::chanfactory::{example_channel, random_cpt_channel, ExampleChannel};
use ruchan::linalg::max_abs;
use ruchan::qstate::{choi_of, classify, dual_channel, kraus_of};

fn main() -> ruchan::Result<()> {
    let channel = random_cpt_channel(3, 2, 7)?;
    let choi = choi_of(&channel)?;
    let back = kraus_of(&choi)?;
    println!(
        "Kraus -> Choi -> Kraus: {} operators, Choi mismatch {:.2e}",
        back.rank(),
        max_abs(&(choi_of(&back)?.matrix() - choi.matrix()))
    );

    let dual = dual_channel(&channel);
    println!("channel TP {} unital {}", channel.is_trace_preserving(1e-12), channel.is_unital(1e-12));
    println!("dual    TP {} unital {}", dual.is_trace_preserving(1e-12), dual.is_unital(1e-12));

    for (name, kind) in [
        ("identity", ExampleChannel::Identity),
        ("loss", ExampleChannel::Loss),
        ("Landau-Streater", ExampleChannel::LandauStreater),
    ] {
        let flags = classify(choi_of(&example_channel(&kind, 3)?)?.matrix(), 1e-10)?;
        println!("{name:>16}: {flags:?}");
    }
    Ok(())
}
