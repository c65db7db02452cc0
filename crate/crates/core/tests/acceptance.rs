//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits non-zero if any criterion fails.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ruchan::chanfactory::{
    example_channel, example_choi, extremal_unital_cpt_check, project_tp, project_unital,
    random_cp, random_doubly_stochastic, saturation_experiment, Branch, ExampleChannel, POCS_MAX_ITERS,
    POCS_TOL,
};
use ruchan::ensemble::{off_diagonalize, qubit_eigen_offdiag_check};
use ruchan::linalg::{
    c, ginibre, haar_unitary, hermitian_part, identity, kron, random_unit_vector, trace, CMat, CVec, Eigh,
};
use ruchan::manifold::{random_right_unitary, Objective, OptimizerConfig};
use ruchan::qstate::{classify, max_entangled_vector, unitary_mixture_choi, BipartiteState};
use ruchan::rudistance::{
    concurrence_of_assistance, d_value, distance, eoa_estimate,
    property6_relation, pure_concurrence, pure_value, pure_value_forms, rank2_qubit_closed_form,
    DObjective, DistanceConfig, EoaObjective, Verdict,
};

/// Collects criterion outcomes and every (lower, upper) pair seen.
struct Ledger {
    results: Vec<(usize, bool, String)>,
    bounds: Vec<(f64, f64)>,
}

impl Ledger {
    fn record(&mut self, id: usize, ok: bool, detail: String) {
        println!("[{}] criterion {id:>2}: {detail}", if ok { "PASS" } else { "FAIL" });
        self.results.push((id, ok, detail));
    }

    fn distance(&mut self, rho: &BipartiteState, config: &DistanceConfig) -> ruchan::rudistance::DistanceReport {
        let r = distance(rho, config).expect("distance runs");
        if let Some(u) = r.upper {
            self.bounds.push((r.lower_reduction, u));
        }
        r
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn c1_loss_channel(l: &mut Ledger) {
    let mut worst_exact: f64 = 0.0;
    let mut worst_opt: f64 = 0.0;
    for d in 2..=4 {
        let rho = example_choi(&ExampleChannel::Loss, d).unwrap();
        let expect = (2.0 * (d as f64 - 1.0) / d as f64).sqrt();
        for seed in 0..5 {
            let t = random_right_unitary(d * d, d * d, seed).unwrap();
            worst_exact = worst_exact.max((d_value(&rho, &t).unwrap() - expect).abs());
        }
        let r = l.distance(&rho, &DistanceConfig::for_dim(d));
        worst_opt = worst_opt.max((r.upper.unwrap() - expect).abs());
    }
    l.record(
        1,
        worst_exact < 1e-9 && worst_opt < 1e-6,
        format!("loss channel D: exact err {worst_exact:.2e} (<1e-9), optimizer err {worst_opt:.2e} (<1e-6)"),
    );
}

fn c2_pure_state_formula(l: &mut Ledger) {
    let mut r = rng(2);
    let mut worst: f64 = 0.0;
    let mut special: f64 = 0.0;
    for d in [2, 3] {
        for _ in 0..100 {
            let psi = random_unit_vector(&mut r, d * d);
            let (a, b) = pure_value_forms(&psi).unwrap();
            worst = worst.max((a - b).abs());
        }
        let u = haar_unitary(&mut r, d);
        let me = kron(&u, &identity(d)) * max_entangled_vector(d).unwrap();
        special = special.max(pure_value(&me).unwrap());
        let x = random_unit_vector(&mut r, d);
        let y = random_unit_vector(&mut r, d);
        let prod = x.kronecker(&y);
        special = special.max((pure_value(&prod).unwrap() - (2.0 * (1.0 - 1.0 / d as f64)).sqrt()).abs());
    }
    l.record(
        2,
        worst < 1e-12 && special < 1e-12,
        format!("pure-state forms agree to {worst:.2e}; ME/product error {special:.2e} (<1e-12)"),
    );
}

fn c3_qubit_completeness(l: &mut Ledger) {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut all_ru = true;
    for i in 0..100u64 {
        let rank = 1 + (i % 4) as usize;
        let (rho, _) = random_doubly_stochastic(2, rank, 3_000 + i, POCS_TOL, POCS_MAX_ITERS).unwrap();
        let r = l.distance(&rho, &DistanceConfig::for_dim(2));
        worst = worst.max(r.upper.unwrap_or(f64::INFINITY));
        all_ru &= r.verdict == Verdict::RuNumerical;
    }
    let secs = start.elapsed().as_secs_f64();
    l.record(
        3,
        worst < 1e-5 && all_ru && secs < 300.0,
        format!("100 doubly stochastic qubit maps: max upper {worst:.2e} (<1e-5), all RU_numerical {all_ru}, {secs:.1}s"),
    );
}

fn bell_mixture(r: &mut ChaCha8Rng, count: usize) -> BipartiteState {
    let mut paulis = vec![identity(2)];
    paulis.extend(ruchan::linalg::pauli());
    let raw: Vec<f64> = (0..count).map(|_| rand::Rng::random::<f64>(r) + 0.01).collect();
    let total: f64 = raw.iter().sum();
    let w: Vec<f64> = raw.iter().map(|x| x / total).collect();
    let rho = unitary_mixture_choi(&w, &paulis[..count]).unwrap();
    let u = haar_unitary(r, 2);
    let v = haar_unitary(r, 2);
    rho.local_conjugate(&u, &v)
}

/// A POCS output, moving to the next seed if a start fails to converge.
fn pocs_state(d: usize, rank: usize, seed: u64) -> BipartiteState {
    (seed..seed + 100)
        .find_map(|s| random_doubly_stochastic(d, rank, s, POCS_TOL, POCS_MAX_ITERS).ok())
        .map(|(rho, _)| rho)
        .expect("some start converges")
}

fn c4_qubit_theorem(l: &mut Ledger) {
    let mut r = rng(4);
    let mut worst: f64 = 0.0;
    for i in 0..200u64 {
        let rho = if i % 2 == 0 {
            bell_mixture(&mut r, 1 + (i as usize / 2) % 4)
        } else {
            let rank = 1 + (i as usize / 2) % 4;
            pocs_state(2, rank, 4_000 + 1_000 * i)
        };
        worst = worst.max(qubit_eigen_offdiag_check(&rho).unwrap());
    }
    l.record(4, worst < 1e-9, format!("200 states in N: max diagonal {worst:.2e} (<1e-9)"));
}

fn c5_property7(l: &mut Ledger) {
    let start = Instant::now();
    let mut r = rng(5);
    let mut worst: f64 = 0.0;
    for i in 0..50u64 {
        let rho = if i % 2 == 0 {
            bell_mixture(&mut r, 2)
        } else {
            pocs_state(2, 2, 500_000 + 1_000 * i)
        };
        assert_eq!(rho.rank(1e-10), 2);
        let closed = rank2_qubit_closed_form(&rho, false).unwrap().value;
        let upper = l.distance(&rho, &DistanceConfig::for_dim(2)).upper.unwrap();
        worst = worst.max((upper - closed).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    l.record(
        5,
        worst < 1e-4 && secs < 600.0,
        format!("50 rank-2 states in N: |upper - closed form| <= {worst:.2e} (<1e-4), {secs:.1}s"),
    );
}

fn c6_bounds(l: &mut Ledger) {
    // Near-members: a random-unitary Choi state with a little loss mixed in.
    let mut worst_lin: f64 = 0.0;
    let mut small = 0;
    for (i, lambda) in [1e-3, 5e-3, 1e-2, 2e-2].iter().enumerate() {
        for d in [2, 3] {
            let ru = example_choi(&ExampleChannel::RandomUnitaryMixture { count: 3, seed: 60 + i as u64 }, d).unwrap();
            let loss = example_choi(&ExampleChannel::Loss, d).unwrap();
            let rho = ru.mix(&loss, 1.0 - lambda).unwrap();
            let r = l.distance(&rho, &DistanceConfig::for_dim(d));
            let dv = r.upper.unwrap();
            if dv < 0.05 {
                small += 1;
                let d2 = property6_relation(dv, d).unwrap();
                let lin = (d as f64).sqrt() * dv;
                // D₂ ≤ √d·D, with equality to first order.
                let rel = (lin - d2) / lin;
                if d2 > lin * (1.0 + 1e-12) || rel > d as f64 * dv * dv {
                    worst_lin = f64::INFINITY;
                } else {
                    worst_lin = worst_lin.max(rel);
                }
            }
        }
    }
    let violations = l.bounds.iter().filter(|(lo, up)| *lo > up + 1e-6).count();
    let zero = property6_relation(0.0, 3).unwrap();
    l.record(
        6,
        violations == 0 && zero == 0.0 && small > 0 && worst_lin.is_finite(),
        format!(
            "lower <= upper + 1e-6 on {} instances ({violations} violations); relation(0) = {zero}; \
             linearization rel. gap {worst_lin:.2e} on {small} small-D instances",
            l.bounds.len()
        ),
    );
}

fn c7_lemma(l: &mut Ledger) {
    let mut r = rng(7);
    let mut worst: f64 = 0.0;
    let mut too_many = 0;
    for i in 0..100 {
        let n = 2 + i % 15;
        let mut a = hermitian_part(&ginibre(&mut r, n, n));
        let tr = trace(&a) / c(n as f64, 0.0);
        a -= identity(n) * tr;
        let out = off_diagonalize(&a, 1e-12).unwrap();
        let b = out.unitary.adjoint() * &a * &out.unitary;
        let diag = (0..n).map(|k| b[(k, k)].norm()).fold(0.0, f64::max);
        worst = worst.max(diag);
        if out.rotations > n - 1 {
            too_many += 1;
        }
    }
    l.record(
        7,
        worst < 1e-12 && too_many == 0,
        format!("100 traceless Hermitian matrices n<=16: max |diag| {worst:.2e} (<1e-12), rotation cap exceeded {too_many}x"),
    );
}

fn rank_of(rho: &BipartiteState) -> usize {
    let e = Eigh::new(rho.matrix());
    e.values.iter().filter(|&&x| x > 1e-9 * e.max()).count()
}

/// Runs the alternating projections by hand so that every call can be
/// checked. Returns the iteration count on convergence.
fn checked_pocs(mut rho: BipartiteState, bad_calls: &mut usize) -> Option<usize> {
    let d = rho.dim();
    for it in 1..=POCS_MAX_ITERS {
        for step in [project_unital, project_tp] {
            let next = step(&rho).unwrap();
            let again = step(&next).unwrap();
            let drift = ruchan::linalg::max_abs(&(again.matrix() - next.matrix()));
            if drift > 1e-9 || rank_of(&next) > rank_of(&rho) {
                *bad_calls += 1;
            }
            rho = next;
        }
        let (g1, g2) = ruchan::qstate::reduction_gaps(rho.matrix(), d);
        if g1 < POCS_TOL && g2 < POCS_TOL {
            return Some(it);
        }
    }
    None
}

fn c8_pocs(l: &mut Ledger) {
    let mut failures = 0;
    let mut bad_calls = 0;
    let mut max_iters = 0;
    let mut low_rank_slow = 0;
    let mut low_rank_total = 0;
    for d in 2..=4 {
        for t in 0..100u64 {
            // Generic random CP start: full Kraus rank.
            let start = random_cp(d, d * d, 8_000 + 100 * d as u64 + t).unwrap();
            match checked_pocs(start, &mut bad_calls) {
                Some(it) => max_iters = max_iters.max(it),
                None => failures += 1,
            }
            // Every Kraus rank, for the per-call checks and the tail report.
            let rank = 1 + (t as usize) % (d * d);
            let start = random_cp(d, rank, 9_000 + 100 * d as u64 + t).unwrap();
            low_rank_total += 1;
            if checked_pocs(start, &mut bad_calls).is_none() {
                low_rank_slow += 1;
            }
        }
    }
    l.record(
        8,
        failures == 0 && bad_calls == 0,
        format!(
            "POCS d=2..4 x100 full-rank starts: {failures} non-converged, max {max_iters} iterations; \
             {bad_calls} non-idempotent/rank-increasing calls; mixed-rank sweep: {low_rank_slow}/{low_rank_total} need > {POCS_MAX_ITERS}"
        ),
    );
}

fn c9_saturation(l: &mut Ledger) {
    let start = Instant::now();
    let rows = saturation_experiment(6, 100, 9).unwrap();
    let get = |d: usize, b: Branch| rows.iter().find(|r| r.d == d && r.branch == b).unwrap().fraction;
    let cpt: Vec<f64> = (3..=6).map(|d| get(d, Branch::Cpt)).collect();
    let unital: Vec<f64> = (3..=6).map(|d| get(d, Branch::Unital)).collect();
    let qubit = get(2, Branch::Unital);
    let ok = cpt.iter().all(|&f| f >= 0.95) && unital.iter().all(|&f| f >= 0.95) && qubit == 0.0;
    l.record(
        9,
        ok,
        format!(
            "saturation: CPT R=d {cpt:?}, unital R=floor(sqrt2 d) {unital:?} (d=3..6, >=0.95), d=2 unital {qubit} (=0), {:.1}s",
            start.elapsed().as_secs_f64()
        ),
    );
}

/// Regression value of `D` for the Landau–Streater channel at `d = 3`.
const LANDAU_STREATER_D3: f64 = 0.577_350_269_189_625_8;

/// Derivative-free search: cyclic Givens rotations on a square unitary `T`,
/// scored through the ensemble route `Σ_j p_j · pure_value(ψ_j)`.
fn givens_search(rho: &BipartiteState, seed: u64, sweeps: usize) -> f64 {
    let n = rho.matrix().nrows();
    let sqrt = ruchan::linalg::psd_sqrt(rho.matrix()).unwrap();
    let score = |t: &CMat| -> f64 {
        let z = &sqrt * t;
        (0..n)
            .map(|j| {
                let col: CVec = z.column(j).into_owned();
                let p = col.norm_squared();
                if p < 1e-300 {
                    0.0
                } else {
                    p * pure_value(&col.unscale(p.sqrt())).unwrap()
                }
            })
            .sum()
    };
    let mut r = rng(seed);
    let mut t = haar_unitary(&mut r, n);
    let mut best = score(&t);
    let mut step = 0.5;
    for _ in 0..sweeps {
        let mut improved = false;
        for p in 0..n {
            for q in (p + 1)..n {
                for phase in [0.0, std::f64::consts::FRAC_PI_2] {
                    for sign in [1.0, -1.0] {
                        let theta: f64 = sign * step;
                        let mut g = identity(n);
                        let w = ruchan::linalg::C64::from_polar(1.0, phase);
                        g[(p, p)] = c(theta.cos(), 0.0);
                        g[(q, q)] = c(theta.cos(), 0.0);
                        g[(p, q)] = -w.conj() * theta.sin();
                        g[(q, p)] = w * theta.sin();
                        let cand = &t * &g;
                        let v = score(&cand);
                        if v < best - 1e-15 {
                            best = v;
                            t = cand;
                            improved = true;
                        }
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
            if step < 1e-8 {
                break;
            }
        }
    }
    best
}

fn c10_landau_streater(l: &mut Ledger) {
    let channel = example_channel(&ExampleChannel::LandauStreater, 3).unwrap();
    let rho = example_choi(&ExampleChannel::LandauStreater, 3).unwrap();
    let flags = classify(rho.matrix(), 1e-10).unwrap();
    let ext = extremal_unital_cpt_check(&channel);
    let mut config = DistanceConfig::for_dim(3);
    config.optimizer.restarts = 32;
    config.escalate = true;
    let r = l.distance(&rho, &config);
    let upper = r.upper.unwrap();
    let min_restart = r.restart_values.iter().copied().fold(f64::INFINITY, f64::min);
    let floor = 10.0 * config.member_tol;
    let above = upper > floor && min_restart > floor && r.escalation.iter().all(|s| s.value > floor);
    let oracle = (0..3).map(|s| givens_search(&rho, 100 + s, 400)).fold(f64::INFINITY, f64::min);
    let agree = (oracle - upper).abs() < 1e-3;
    let regression = (upper - LANDAU_STREATER_D3).abs() < 1e-6;
    l.record(
        10,
        flags.doubly_stochastic() && ext.independent && above && agree && regression && r.verdict != Verdict::RuNumerical,
        format!(
            "Landau-Streater d=3: doubly stochastic {}, extremal {}, upper {upper:.10} over 32 restarts + K={:?}, \
             Givens oracle {oracle:.10} (|diff| {:.1e} < 1e-3), regression {LANDAU_STREATER_D3:.10}",
            flags.doubly_stochastic(),
            ext.independent,
            r.escalation.iter().map(|s| s.cardinality).collect::<Vec<_>>(),
            (oracle - upper).abs()
        ),
    );
}

/// Largest relative error between the analytic gradient and central
/// differences over real and imaginary coordinates.
fn gradient_error<O: Objective>(objective: &O, t: &CMat, eps: f64) -> f64 {
    let (_, g) = objective.smoothed(t, eps);
    let h = 1e-6;
    let mut fd = CMat::zeros(t.nrows(), t.ncols());
    for idx in 0..t.len() {
        for (dir, unit) in [(0, c(1.0, 0.0)), (1, c(0.0, 1.0))] {
            let mut plus = t.clone();
            let mut minus = t.clone();
            plus[idx] += unit * h;
            minus[idx] -= unit * h;
            let diff = (objective.smoothed(&plus, eps).0 - objective.smoothed(&minus, eps).0) / (2.0 * h);
            if dir == 0 {
                fd[idx].re = diff;
            } else {
                fd[idx].im = diff;
            }
        }
    }
    ruchan::linalg::frobenius(&(&fd - &g)) / ruchan::linalg::frobenius(&g)
}

fn c11_gradients(l: &mut Ledger) {
    let mut worst_d: f64 = 0.0;
    let mut worst_e: f64 = 0.0;
    for d in [2, 3] {
        for k in 0..10u64 {
            let rho = random_cp(d, d * d, 11_000 + k).unwrap();
            let problem = ruchan::ensemble::build_problem_p(&rho).unwrap();
            let dobj = DObjective::from_problem(&problem);
            let t = random_right_unitary(d * d, d * d, k).unwrap();
            worst_d = worst_d.max(gradient_error(&dobj, t.matrix(), 1e-2));
            let eobj = EoaObjective::new(&rho);
            let r = eobj.w.ncols();
            let t = random_right_unitary(r, d * d, 50 + k).unwrap();
            worst_e = worst_e.max(gradient_error(&eobj, t.matrix(), 0.0));
        }
    }
    l.record(
        11,
        worst_d < 1e-5 && worst_e < 1e-5,
        format!("gradient vs central differences: D {worst_d:.2e}, E_A {worst_e:.2e} (<1e-5)"),
    );
}

fn c12_assistance(l: &mut Ledger) {
    let mut r = rng(12);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let psi = random_unit_vector(&mut r, 4);
        let rho = BipartiteState::pure(&psi).unwrap();
        let ca = concurrence_of_assistance(&rho).unwrap().value;
        worst = worst.max((ca - pure_concurrence(&psi).unwrap()).abs());
    }
    let mixed = BipartiteState::new(identity(4).scale(0.25)).unwrap();
    let ca_mixed = concurrence_of_assistance(&mixed).unwrap().value;
    let config = OptimizerConfig::for_dim(2).with_seed(12);
    let eoa_mixed = eoa_estimate(&mixed, &config).unwrap().value;
    let mut eoa_me_err: f64 = 0.0;
    for d in [2, 3] {
        let me = BipartiteState::pure(&max_entangled_vector(d).unwrap()).unwrap();
        let e = eoa_estimate(&me, &OptimizerConfig::for_dim(d)).unwrap();
        eoa_me_err = eoa_me_err.max((e.value - (d as f64).log2()).abs());
    }
    l.record(
        12,
        worst < 1e-10 && (ca_mixed - 1.0).abs() < 1e-10 && eoa_mixed >= 1.0 - 1e-4 && eoa_me_err < 1e-10,
        format!(
            "C_A vs pure oracle {worst:.2e} (<1e-10); C_A(I/4) = {ca_mixed:.12}; E_A(I/4) >= {eoa_mixed:.8}; \
             E_A(ME) error {eoa_me_err:.2e}"
        ),
    );
}

fn c13_determinism(l: &mut Ledger) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mixture.json");
    let channel = example_channel(&ExampleChannel::RandomUnitaryMixture { count: 3, seed: 13 }, 2).unwrap();
    std::fs::write(&path, ruchan::cli::format::ChannelFile::from_kraus(&channel).to_json()).unwrap();
    let run = || {
        std::process::Command::new(env!("CARGO_BIN_EXE_ruchan"))
            .args(["analyze", path.to_str().unwrap(), "--json", "--seed", "7", "--restarts", "6"])
            .env_remove(ruchan::cli::SEED_ENV)
            .output()
            .unwrap()
    };
    let a = run();
    let b = run();
    let ok = a.status.success() && a.stdout == b.stdout && !a.stdout.is_empty();
    l.record(13, ok, format!("two analyze --json runs: {} bytes, identical {}", a.stdout.len(), a.stdout == b.stdout));
}

fn main() {
    let mut l = Ledger {
        results: Vec::new(),
        bounds: Vec::new(),
    };
    c1_loss_channel(&mut l);
    c2_pure_state_formula(&mut l);
    c3_qubit_completeness(&mut l);
    c4_qubit_theorem(&mut l);
    c5_property7(&mut l);
    c7_lemma(&mut l);
    c8_pocs(&mut l);
    c9_saturation(&mut l);
    c10_landau_streater(&mut l);
    c11_gradients(&mut l);
    c12_assistance(&mut l);
    c13_determinism(&mut l);
    // Runs last so that it covers every distance computed above.
    c6_bounds(&mut l);
    l.results.sort_by_key(|r| r.0);
    let failed: Vec<usize> = l.results.iter().filter(|r| !r.1).map(|r| r.0).collect();
    println!("acceptance: {} of {} criteria passed", l.results.len() - failed.len(), l.results.len());
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
