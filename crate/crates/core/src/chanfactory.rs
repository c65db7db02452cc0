//! Random channels, named example channels, and extremality rank tests.
//!
//! Doubly stochastic maps are produced by alternating two rank-preserving
//! conjugations of a random Choi state: `1 ⊗ G` with `G = (d·Tr_1 ρ)^{-1/2}`
//! restores trace preservation and `G' ⊗ 1` with `G' = (d·Tr_2 ρ)^{-1/2}`
//! restores unitality.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gellmann::validate_dim;
use crate::linalg::{
    c, ginibre, haar_unitary, hermitian_part, identity, kron, partial_trace_first,
    partial_trace_second, singular_values, trace, CMat, Eigh, ONE, ZERO,
};
use crate::qstate::{choi_of, kraus_of, reduction_gaps, BipartiteState, KrausChannel};

pub const POCS_TOL: f64 = 1e-10;
pub const POCS_MAX_ITERS: usize = 500;

/// Relative eigenvalue floor of a partial trace before inversion.
pub const EIGEN_FLOOR: f64 = 1e-12;

/// Relative singular value cut used by the independence tests, per matrix.
pub const INDEPENDENCE_TOL: f64 = 1e-10;

/// Normalized Choi state of a random CP map with the given Kraus rank.
pub fn random_cp(d: usize, rank: usize, seed: u64) -> Result<BipartiteState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_cp_with(&mut rng, d, rank)
}

pub fn random_cp_with<R: Rng + ?Sized>(rng: &mut R, d: usize, rank: usize) -> Result<BipartiteState> {
    validate_dim(d)?;
    if rank < 1 || rank > d * d {
        return Err(Error::InvalidArgument(format!(
            "rank {rank} outside 1..={}",
            d * d
        )));
    }
    let b = ginibre(rng, d * d, rank);
    let m = &b * b.adjoint();
    let tr = trace(&m).re;
    Ok(BipartiteState::from_trusted(d, hermitian_part(&m.unscale(tr))))
}

fn inverse_sqrt(m: &CMat, what: &str) -> Result<CMat> {
    let e = Eigh::new(m);
    let (hi, lo) = (e.max(), e.min());
    if !(hi > 0.0 && lo > EIGEN_FLOOR * hi) {
        return Err(Error::Projection(format!(
            "{what} is singular (eigenvalues {lo:.3e}..{hi:.3e})"
        )));
    }
    Ok(e.map(|x| 1.0 / x.sqrt()))
}

fn conjugate(rho: &CMat, g: &CMat) -> CMat {
    hermitian_part(&(g * rho * g))
}

fn tp_step(rho: &BipartiteState) -> Result<BipartiteState> {
    let d = rho.dim();
    let g = inverse_sqrt(&partial_trace_first(rho.matrix(), d).scale(d as f64), "Tr_1")?;
    let big = kron(&identity(d), &g);
    Ok(BipartiteState::from_trusted(d, conjugate(rho.matrix(), &big)))
}

fn unital_step(rho: &BipartiteState) -> Result<BipartiteState> {
    let d = rho.dim();
    let g = inverse_sqrt(&partial_trace_second(rho.matrix(), d).scale(d as f64), "Tr_2")?;
    let big = kron(&g, &identity(d));
    Ok(BipartiteState::from_trusted(d, conjugate(rho.matrix(), &big)))
}

#[cfg(debug_assertions)]
fn check_projection(
    before: &BipartiteState,
    after: &BipartiteState,
    step: fn(&BipartiteState) -> Result<BipartiteState>,
) {
    let rank = |m: &CMat| {
        let e = Eigh::new(m);
        e.values.iter().filter(|&&x| x > 1e-9 * e.max()).count()
    };
    assert!(
        rank(after.matrix()) <= rank(before.matrix()),
        "projection increased the rank"
    );
    if let Ok(again) = step(after) {
        let drift = crate::linalg::max_abs(&(again.matrix() - after.matrix()));
        assert!(drift < 1e-9, "projection is not idempotent (drift {drift:.3e})");
    }
}

/// Conjugate by `1 ⊗ (d·Tr_1 ρ)^{-1/2}` so that `Tr_1 = 1/d`.
pub fn project_tp(rho: &BipartiteState) -> Result<BipartiteState> {
    let out = tp_step(rho)?;
    #[cfg(debug_assertions)]
    check_projection(rho, &out, tp_step);
    Ok(out)
}

/// Conjugate by `(d·Tr_2 ρ)^{-1/2} ⊗ 1` so that `Tr_2 = 1/d`.
pub fn project_unital(rho: &BipartiteState) -> Result<BipartiteState> {
    let out = unital_step(rho)?;
    #[cfg(debug_assertions)]
    check_projection(rho, &out, unital_step);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PocsTrace {
    pub iterations: usize,
    /// `(‖Tr_1 ρ − 1/d‖₂, ‖Tr_2 ρ − 1/d‖₂)` after each sweep.
    pub gaps: Vec<(f64, f64)>,
    pub converged: bool,
}

/// Alternate the two projections starting from [`random_cp`] until both
/// reduction gaps drop below `tol`. The final step is the TP projection.
pub fn random_doubly_stochastic(
    d: usize,
    rank: usize,
    seed: u64,
    tol: f64,
    max_iters: usize,
) -> Result<(BipartiteState, PocsTrace)> {
    let start = random_cp(d, rank, seed)?;
    pocs(start, tol, max_iters)
}

/// The alternating projection loop on an arbitrary starting Choi state.
pub fn pocs(start: BipartiteState, tol: f64, max_iters: usize) -> Result<(BipartiteState, PocsTrace)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let d = start.dim();
    let mut rho = start;
    let mut trace = PocsTrace {
        iterations: 0,
        gaps: Vec::new(),
        converged: false,
    };
    while trace.iterations < max_iters {
        rho = project_tp(&project_unital(&rho)?)?;
        trace.iterations += 1;
        let gaps = reduction_gaps(rho.matrix(), d);
        if !(gaps.0.is_finite() && gaps.1.is_finite()) {
            return Err(Error::numerical("non-finite reduction gap", Some(rho.matrix())));
        }
        trace.gaps.push(gaps);
        if gaps.0 < tol && gaps.1 < tol {
            trace.converged = true;
            return Ok((rho, trace));
        }
    }
    Err(Error::NonConvergence(Box::new(trace)))
}

/// Named channels used as fixtures and examples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExampleChannel {
    LandauStreater,
    Loss,
    Identity,
    RandomUnitaryMixture { count: usize, seed: u64 },
}

/// Spin-`j` generators `(J_x, J_y, J_z)` for `j = (d−1)/2`, with `J_+` real
/// and non-negative in the basis `m = j, j−1, …, −j`.
pub fn spin_operators(d: usize) -> Result<[CMat; 3]> {
    validate_dim(d)?;
    let j = (d as f64 - 1.0) / 2.0;
    let m = |k: usize| j - k as f64;
    let mut plus = CMat::zeros(d, d);
    for k in 1..d {
        let mk = m(k);
        plus[(k - 1, k)] = c((j * (j + 1.0) - mk * (mk + 1.0)).sqrt(), 0.0);
    }
    let minus = plus.adjoint();
    let jx = (&plus + &minus).scale(0.5);
    let jy = (&plus - &minus) * c(0.0, -0.5);
    let jz = CMat::from_fn(d, d, |a, b| if a == b { c(m(a), 0.0) } else { ZERO });
    Ok([jx, jy, jz])
}

pub fn example_channel(kind: &ExampleChannel, d: usize) -> Result<KrausChannel> {
    validate_dim(d)?;
    match kind {
        ExampleChannel::LandauStreater => {
            if d.is_multiple_of(2) {
                return Err(Error::InvalidArgument(format!(
                    "the Landau-Streater example needs odd d, got {d}"
                )));
            }
            let j = (d as f64 - 1.0) / 2.0;
            let norm = (j * (j + 1.0)).sqrt();
            KrausChannel::new(spin_operators(d)?.iter().map(|s| s.unscale(norm)).collect())
        }
        ExampleChannel::Loss => KrausChannel::new(
            (0..d)
                .map(|i| {
                    let mut k = CMat::zeros(d, d);
                    k[(0, i)] = ONE;
                    k
                })
                .collect(),
        ),
        ExampleChannel::Identity => KrausChannel::new(vec![identity(d)]),
        ExampleChannel::RandomUnitaryMixture { count, seed } => {
            if *count == 0 {
                return Err(Error::InvalidArgument("mixture needs at least one unitary".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let raw: Vec<f64> = (0..*count).map(|_| rng.sample::<f64, _>(Exp1)).collect();
            let total: f64 = raw.iter().sum();
            KrausChannel::new(
                raw.iter()
                    .map(|w| haar_unitary(&mut rng, d).scale((w / total).sqrt()))
                    .collect(),
            )
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremalityReport {
    pub independent: bool,
    pub rank_found: usize,
    pub rank_needed: usize,
    pub kraus_count: usize,
    /// Largest Kraus rank for which independence is possible at all.
    pub rank_cap: usize,
}

fn independence(vectors: Vec<Vec<crate::linalg::C64>>, kraus_count: usize, rank_cap: usize) -> ExtremalityReport {
    let needed = vectors.len();
    let len = vectors.first().map_or(0, |v| v.len());
    let m = CMat::from_fn(len, needed, |r, col| vectors[col][r]);
    let s = singular_values(&m);
    let cut = s.first().copied().unwrap_or(0.0) * needed as f64 * INDEPENDENCE_TOL;
    let rank_found = s.iter().filter(|&&x| x > cut).count();
    ExtremalityReport {
        independent: rank_found == needed,
        rank_found,
        rank_needed: needed,
        kraus_count,
        rank_cap,
    }
}

fn vectorize(m: &CMat) -> impl Iterator<Item = crate::linalg::C64> + '_ {
    (0..m.nrows()).flat_map(move |r| (0..m.ncols()).map(move |col| m[(r, col)]))
}

/// Linear independence of `{K_k† K_l}`, which characterizes extreme points of
/// the trace-preserving maps.
pub fn extremal_cpt_check(channel: &KrausChannel) -> ExtremalityReport {
    let ks = channel.kraus();
    let mut vectors = Vec::with_capacity(ks.len() * ks.len());
    for k in ks {
        for l in ks {
            vectors.push(vectorize(&(k.adjoint() * l)).collect());
        }
    }
    independence(vectors, ks.len(), channel.dim())
}

/// Linear independence of `{K_k K_l† ⊕ K_l† K_k}`, which characterizes extreme
/// points of the doubly stochastic maps.
pub fn extremal_unital_cpt_check(channel: &KrausChannel) -> ExtremalityReport {
    let ks = channel.kraus();
    let d = channel.dim();
    let mut vectors = Vec::with_capacity(ks.len() * ks.len());
    for k in ks {
        for l in ks {
            let a = k * l.adjoint();
            let b = l.adjoint() * k;
            vectors.push(vectorize(&a).chain(vectorize(&b)).collect());
        }
    }
    independence(vectors, ks.len(), unital_rank_cap(d))
}

/// `⌊√2·d⌋`.
pub fn unital_rank_cap(d: usize) -> usize {
    (std::f64::consts::SQRT_2 * d as f64).floor() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Cpt,
    Unital,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationRow {
    pub d: usize,
    pub branch: Branch,
    pub rank: usize,
    pub trials: usize,
    pub independent: usize,
    /// Trials whose sample could not be generated (POCS did not converge).
    pub failed: usize,
    pub fraction: f64,
}

/// A random trace-preserving channel with exactly `rank` Kraus operators.
pub fn random_cpt_channel(d: usize, rank: usize, seed: u64) -> Result<KrausChannel> {
    let choi = project_tp(&random_cp(d, rank, seed)?)?;
    kraus_of(&choi)
}

/// A random doubly stochastic channel with `rank` Kraus operators.
pub fn random_doubly_stochastic_channel(d: usize, rank: usize, seed: u64) -> Result<KrausChannel> {
    let (choi, _) = random_doubly_stochastic(d, rank, seed, POCS_TOL, POCS_MAX_ITERS)?;
    kraus_of(&choi)
}

/// For every `d ≤ d_max`, test random trace-preserving maps of rank `d` and
/// random doubly stochastic maps of rank `⌊√2·d⌋` for extremality.
pub fn saturation_experiment(d_max: usize, trials: usize, seed: u64) -> Result<Vec<SaturationRow>> {
    if !(2..=6).contains(&d_max) {
        return Err(Error::InvalidArgument(format!("d_max must be in 2..=6, got {d_max}")));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let mut rows = Vec::new();
    for d in 2..=d_max {
        for branch in [Branch::Cpt, Branch::Unital] {
            let rank = match branch {
                Branch::Cpt => d,
                Branch::Unital => unital_rank_cap(d),
            };
            let outcomes: Vec<Option<bool>> = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let s = trial_seed(seed, d, branch, t);
                    let ok = match branch {
                        Branch::Cpt => random_cpt_channel(d, rank, s)
                            .map(|ch| ch.rank() == rank && extremal_cpt_check(&ch).independent),
                        Branch::Unital => random_doubly_stochastic_channel(d, rank, s).map(|ch| {
                            ch.rank() == rank && extremal_unital_cpt_check(&ch).independent
                        }),
                    };
                    ok.ok()
                })
                .collect();
            let failed = outcomes.iter().filter(|o| o.is_none()).count();
            let independent = outcomes.iter().filter(|o| **o == Some(true)).count();
            rows.push(SaturationRow {
                d,
                branch,
                rank,
                trials,
                independent,
                failed,
                fraction: independent as f64 / trials as f64,
            });
        }
    }
    Ok(rows)
}

fn trial_seed(seed: u64, d: usize, branch: Branch, trial: usize) -> u64 {
    let b = match branch {
        Branch::Cpt => 0u64,
        Branch::Unital => 1,
    };
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ ((d as u64) << 48)
        ^ (b << 40)
        ^ trial as u64
}

/// Choi state of a named example channel.
pub fn example_choi(kind: &ExampleChannel, d: usize) -> Result<BipartiteState> {
    choi_of(&example_channel(kind, d)?)
}
