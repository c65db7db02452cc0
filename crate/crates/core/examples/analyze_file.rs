//! Drive the command-line front end from code: write a channel file, then
//! analyze it and print the text report.

use ruchan::chanfactory::{example_channel, ExampleChannel};
use ruchan::cli::format::ChannelFile;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("mixture.json");
    let channel = example_channel(&ExampleChannel::RandomUnitaryMixture { count: 3, seed: 8 }, 2)?;
    std::fs::write(&path, ChannelFile::from_kraus(&channel).to_json())?;

    let args = ["ruchan", "analyze", path.to_str().ok_or("non-UTF-8 path")?, "--seed", "1"];
    let code = ruchan::cli::main_with_args(args, &mut std::io::stdout(), &mut std::io::stderr());
    println!("exit code {code}");
    Ok(())
}
