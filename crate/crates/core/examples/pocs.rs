//! Random doubly stochastic maps by alternating projections.

use ruchan::chanfactory::{random_doubly_stochastic, POCS_MAX_ITERS, POCS_TOL};

fn main() -> ruchan::Result<()> {
    for (d, rank) in [(2, 2), (3, 4), (4, 16)] {
        let (rho, trace) = random_doubly_stochastic(d, rank, 1, POCS_TOL, POCS_MAX_ITERS)?;
        let (g1, g2) = trace.gaps.last().copied().unwrap_or_default();
        println!(
            "d = {d}, rank {rank}: {} iterations, gaps ({g1:.1e}, {g2:.1e}), output rank {}",
            trace.iterations,
            rho.rank(1e-10)
        );
    }
    Ok(())
}
