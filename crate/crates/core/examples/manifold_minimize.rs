//! The Riemannian optimizer on its own, with a user-supplied objective:
//! push the diagonal of T† H T towards a target vector.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ruchan::linalg::{c, ginibre, hermitian_part, CMat};
use ruchan::manifold::{minimize, Objective, OptimizerConfig};

struct DiagonalTarget {
    h: CMat,
    target: Vec<f64>,
}

impl Objective for DiagonalTarget {
    fn value(&self, t: &CMat) -> f64 {
        self.smoothed(t, 0.0).0
    }

    fn smoothed(&self, t: &CMat, _eps: f64) -> (f64, CMat) {
        let ht = &self.h * t;
        let mut f = 0.0;
        let mut g = CMat::zeros(t.nrows(), t.ncols());
        for j in 0..t.ncols() {
            let r = t.column(j).dotc(&ht.column(j)).re - self.target[j];
            f += r * r;
            g.column_mut(j).axpy(c(4.0 * r, 0.0), &ht.column(j), c(0.0, 0.0));
        }
        (f, g)
    }
}

fn main() -> ruchan::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let h = hermitian_part(&ginibre(&mut rng, 4, 4));
    // Any diagonal majorized by the spectrum is reachable; the mean is.
    let mean = ruchan::linalg::trace(&h).re / 4.0;
    let objective = DiagonalTarget { h, target: vec![mean; 4] };
    let config = OptimizerConfig::default().with_seed(1).with_restarts(4);
    let result = minimize(&objective, 4, 4, &config)?;
    println!("best value {:.3e} after {} iterations", result.best_value, result.iterations);
    for r in &result.restarts {
        println!("restart {} (seed {}): {:.3e} -> {:.3e}", r.index, r.seed, r.initial_value, r.best_value);
    }
    Ok(())
}
