//! Seeded generators shared by the test suites. Compiled into the crate so
//! integration tests and doc examples can reuse them; not part of the stable
//! surface.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::aux::AuxChannel;
use crate::pmf::{FiniteAlphabet, JointPmf, Role};

pub fn rng_from(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Dirichlet(1,...,1) sample: normalized i.i.d. Exp(1) draws.
pub fn dirichlet_row<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    let mut row: Vec<f64> = (0..len)
        .map(|_| {
            let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            -u.ln()
        })
        .collect();
    let total: f64 = row.iter().sum();
    for v in &mut row {
        *v /= total;
    }
    row
}

/// Random joint pmf with the given roles and alphabet sizes.
pub fn random_pmf<R: Rng>(rng: &mut R, roles: &[Role], sizes: &[usize]) -> JointPmf {
    let len: usize = sizes.iter().product();
    let probs = dirichlet_row(rng, len);
    let alphabets = sizes.iter().map(|&n| FiniteAlphabet::indexed(n)).collect();
    JointPmf::new(roles.to_vec(), alphabets, probs).expect("random table is valid")
}

/// Random source over (S1,S2,Y1,Y2).
pub fn random_source<R: Rng>(rng: &mut R, s1: usize, s2: usize, y1: usize, y2: usize) -> JointPmf {
    random_pmf(
        rng,
        &[Role::S1, Role::S2, Role::Y1, Role::Y2],
        &[s1, s2, y1, y2],
    )
}

/// Random physically degraded source: draws (S1,S2,Y1) jointly, then passes
/// Y1 through a random channel to produce Y2, so (S1,S2) — Y1 — Y2 holds by
/// construction.
pub fn random_degraded_source<R: Rng>(
    rng: &mut R,
    s1: usize,
    s2: usize,
    y1: usize,
    y2: usize,
) -> JointPmf {
    let base = dirichlet_row(rng, s1 * s2 * y1);
    let chan: Vec<Vec<f64>> = (0..y1).map(|_| dirichlet_row(rng, y2)).collect();
    let mut probs = vec![0.0f64; s1 * s2 * y1 * y2];
    for a in 0..s1 {
        for b in 0..s2 {
            for c in 0..y1 {
                let p = base[(a * s2 + b) * y1 + c];
                for d in 0..y2 {
                    probs[((a * s2 + b) * y1 + c) * y2 + d] = p * chan[c][d];
                }
            }
        }
    }
    JointPmf::source(
        FiniteAlphabet::indexed(s1),
        FiniteAlphabet::indexed(s2),
        FiniteAlphabet::indexed(y1),
        FiniteAlphabet::indexed(y2),
        probs,
    )
    .expect("degraded table is valid")
}

/// Random stochastic auxiliary channel with Dirichlet-uniform rows.
pub fn random_channel<R: Rng>(
    rng: &mut R,
    source: &JointPmf,
    u0_card: usize,
    u1_card: usize,
) -> AuxChannel {
    let s1 = source.alphabet(Role::S1).unwrap().size();
    let s2 = source.alphabet(Role::S2).unwrap().size();
    let mut cond = Vec::with_capacity(s1 * s2 * u0_card * u1_card);
    for _ in 0..s1 * s2 {
        cond.extend(dirichlet_row(rng, u0_card * u1_card));
    }
    AuxChannel::new(
        FiniteAlphabet::indexed(u0_card),
        FiniteAlphabet::indexed(u1_card),
        s1,
        s2,
        cond,
    )
    .expect("random channel is valid")
}
