//! How often random maps at the maximal Kraus rank are extremal.

use ruchan::chanfactory::{saturation_experiment, Branch};

fn main() -> ruchan::Result<()> {
    println!("{:>3} {:>7} {:>3} {:>9}", "d", "branch", "R", "fraction");
    for row in saturation_experiment(5, 40, 3)? {
        let branch = if row.branch == Branch::Cpt { "cpt" } else { "unital" };
        println!("{:>3} {:>7} {:>3} {:>9.3}", row.d, branch, row.rank, row.fraction);
    }
    Ok(())
}
