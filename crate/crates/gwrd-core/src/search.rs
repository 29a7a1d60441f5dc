//! Search over auxiliary channels: frontier tracing by scalarization and a
//! sampling-based probe of claimed frontier values.
//!
//! A channel's *support value* for weights `w` is the minimum of `w · R` over
//! the rate points its bounds allow, a linear program in at most three
//! variables that [`min_support_value`] solves by vertex enumeration. The
//! frontier of the union region is the pointwise minimum of support values
//! over channels, so searching channels and keeping the arg-min yields
//! certified achievable points.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::aux::{extend_with_aux, optimal_phi, AuxChannel, DistortionMeasure, RateDistortionPoint};
use crate::error::Error;
use crate::pmf::{FiniteAlphabet, JointPmf, Role, VariableSet};
use crate::region::{self, RateBounds, Variant};

/// How candidate channels are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    /// Every pair of deterministic maps `(S1,S2) -> U0`, `(S1,S2) -> U1`.
    DeterministicEnum,
    /// Dirichlet-uniform stochastic channels, `samples` of them.
    RandomStochastic,
    /// Random restarts refined by coordinate-wise perturbation.
    LocalSearch,
}

impl SearchMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "deterministic_enum" | "deterministic-enum" => Some(SearchMode::DeterministicEnum),
            "random_stochastic" | "random-stochastic" => Some(SearchMode::RandomStochastic),
            "local_search" | "local-search" => Some(SearchMode::LocalSearch),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub u0_card: usize,
    pub u1_card: usize,
    pub mode: SearchMode,
    pub samples: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Deterministic enumeration is refused beyond this many map pairs.
    pub enum_cutoff: u64,
}

impl SearchConfig {
    /// Defaults for a given source: auxiliary cardinalities `|S1||S2| + 2`.
    pub fn for_source(source: &JointPmf, seed: u64) -> Self {
        let cells = source
            .alphabet(Role::S1)
            .map(|a| a.size())
            .unwrap_or(1)
            * source.alphabet(Role::S2).map(|a| a.size()).unwrap_or(1);
        Self {
            u0_card: cells + 2,
            u1_card: cells + 2,
            mode: SearchMode::RandomStochastic,
            samples: 1000,
            restarts: 8,
            seed,
            enum_cutoff: 1_000_000,
        }
    }
}

/// One traced frontier point: the best channel found for a weight triple.
#[derive(Debug, Clone)]
pub struct FrontierPoint {
    pub weights: [f64; 3],
    pub value: f64,
    pub point: RateDistortionPoint,
    /// Conditional table of the arg-min channel, serialized row-major.
    pub channel_id: String,
}

/// Solves `min w · R` subject to the variant's inequalities and `R ≥ 0`.
///
/// Returns the value and an attaining rate point. The feasible set lives in
/// the nonnegative orthant, so with `w ≥ 0` the minimum exists and is
/// attained at a vertex; with at most three variables and a handful of
/// constraints, enumerating constraint triples is exact and cheap.
pub fn min_support_value(
    bounds: &RateBounds,
    weights: [f64; 3],
    variant: Variant,
) -> Result<(f64, RateDistortionPoint), Error> {
    if weights.iter().any(|w| *w < 0.0) || weights.iter().all(|w| *w == 0.0) {
        return Err(Error::BadWeights);
    }
    // rows: coefficients over (r0, r1, r2) and rhs
    let mut rows: Vec<([f64; 3], f64)> = Vec::new();
    let mut push = |coeffs: [f64; 3], rhs: Option<f64>| {
        if let Some(r) = rhs {
            rows.push((coeffs, r));
        }
    };
    match variant {
        Variant::Gw => {
            push([1.0, 1.0, 0.0], bounds.b_r0_r1);
            push([1.0, 0.0, 1.0], bounds.b_r0_r2);
            push([1.0, 1.0, 1.0], bounds.b_sum);
        }
        Variant::Sr => {
            push([1.0, 0.0, 0.0], bounds.b_r0);
            push([1.0, 1.0, 0.0], bounds.b_r0_r1);
            push([1.0, 1.0, 0.0], bounds.b_sum);
        }
        Variant::Sc => {
            push([1.0, 0.0, 0.0], bounds.b_r0);
            push([1.0, 0.0, 1.0], bounds.b_r0_r2);
        }
    }
    // nonnegativity, and the variant's structurally-zero rate
    rows.push(([1.0, 0.0, 0.0], 0.0));
    rows.push(([0.0, 1.0, 0.0], 0.0));
    rows.push(([0.0, 0.0, 1.0], 0.0));
    let pinned_zero: Option<usize> = match variant {
        Variant::Gw => None,
        Variant::Sr => Some(2),
        Variant::Sc => Some(1),
    };

    let solve3 = |m: [[f64; 3]; 3], b: [f64; 3]| -> Option<[f64; 3]> {
        let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        if det.abs() < 1e-12 {
            return None;
        }
        let mut x = [0.0; 3];
        for k in 0..3 {
            let mut mk = m;
            for r in 0..3 {
                mk[r][k] = b[r];
            }
            let dk = mk[0][0] * (mk[1][1] * mk[2][2] - mk[1][2] * mk[2][1])
                - mk[0][1] * (mk[1][0] * mk[2][2] - mk[1][2] * mk[2][0])
                + mk[0][2] * (mk[1][0] * mk[2][1] - mk[1][1] * mk[2][0]);
            x[k] = dk / det;
        }
        Some(x)
    };

    let feasible = |r: &[f64; 3]| -> bool {
        if r.iter().any(|v| !v.is_finite()) {
            return false;
        }
        rows.iter().all(|(c, rhs)| {
            c[0] * r[0] + c[1] * r[1] + c[2] * r[2] >= rhs - 1e-9
        }) && pinned_zero.is_none_or(|k| r[k].abs() <= 1e-9)
    };

    let mut best: Option<(f64, [f64; 3])> = None;
    let n = rows.len();
    // With a pinned coordinate the vertex is the intersection of that
    // hyperplane with two constraint rows; enumerating all triples covers
    // that case because the pinned nonnegativity row is among the rows.
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let m = [rows[i].0, rows[j].0, rows[k].0];
                let b = [rows[i].1, rows[j].1, rows[k].1];
                let Some(x) = solve3(m, b) else { continue };
                if !feasible(&x) {
                    continue;
                }
                let val = weights[0] * x[0] + weights[1] * x[1] + weights[2] * x[2];
                if best.is_none_or(|(bv, _)| val < bv - 1e-15) {
                    best = Some((val, x));
                }
            }
        }
    }
    let (value, r) = best.expect("region in the orthant always has a vertex");
    Ok((
        value,
        RateDistortionPoint {
            r0: r[0].max(0.0),
            r1: r[1].max(0.0),
            r2: r[2].max(0.0),
            d1: 0.0,
        },
    ))
}

fn variant_bounds(ext: &JointPmf, variant: Variant) -> Result<RateBounds, Error> {
    match variant {
        Variant::Gw => region::full_network_bounds(ext),
        Variant::Sr => region::refinement_bounds(ext),
        Variant::Sc => region::scalable_bounds(ext),
    }
}

/// Support value of one channel under Hamming distortion on `S1`.
pub fn channel_support_value(
    source: &JointPmf,
    chan: &AuxChannel,
    d_max: f64,
    weights: [f64; 3],
    variant: Variant,
) -> Result<f64, Error> {
    let d = DistortionMeasure::hamming(source.alphabet(Role::S1)?);
    channel_support_value_with(source, chan, &d, d_max, weights, variant)
}

/// Support value of one channel: its optimal distortion must meet `d_max`.
pub fn channel_support_value_with(
    source: &JointPmf,
    chan: &AuxChannel,
    d: &DistortionMeasure,
    d_max: f64,
    weights: [f64; 3],
    variant: Variant,
) -> Result<f64, Error> {
    let ext = extend_with_aux(source, chan)?;
    let (_, dist) = optimal_phi(&ext, d)?;
    if dist > d_max + 1e-9 {
        return Err(Error::NoFeasibleChannel { d_max });
    }
    let bounds = variant_bounds(&ext, variant)?;
    Ok(min_support_value(&bounds, weights, variant)?.0)
}

/// Number of deterministic map pairs for the given cardinalities, saturating.
fn deterministic_count(cells: usize, u0_card: usize, u1_card: usize) -> f64 {
    (u0_card as f64).powi(cells as i32) * (u1_card as f64).powi(cells as i32)
}

/// Every pair of deterministic maps as point-mass channels, in lexicographic
/// order (`u1` map varying fastest).
pub fn enumerate_deterministic_channels(
    source: &JointPmf,
    cfg: &SearchConfig,
) -> Result<Vec<AuxChannel>, Error> {
    let cells = source.alphabet(Role::S1)?.size() * source.alphabet(Role::S2)?.size();
    let count = deterministic_count(cells, cfg.u0_card, cfg.u1_card);
    if count > cfg.enum_cutoff as f64 {
        return Err(Error::EnumerationTooLarge {
            count,
            cutoff: cfg.enum_cutoff,
        });
    }
    let u0_alpha = FiniteAlphabet::indexed(cfg.u0_card);
    let u1_alpha = FiniteAlphabet::indexed(cfg.u1_card);
    let s1 = source.alphabet(Role::S1)?.size();
    let s2 = source.alphabet(Role::S2)?.size();

    let advance = |map: &mut [usize], card: usize| -> bool {
        for pos in (0..map.len()).rev() {
            map[pos] += 1;
            if map[pos] < card {
                return true;
            }
            map[pos] = 0;
        }
        false
    };

    let mut out = Vec::with_capacity(count as usize);
    let mut u0_map = vec![0usize; cells];
    loop {
        let mut u1_map = vec![0usize; cells];
        loop {
            out.push(AuxChannel::deterministic(
                u0_alpha.clone(),
                u1_alpha.clone(),
                s1,
                s2,
                &u0_map,
                &u1_map,
            )?);
            if !advance(&mut u1_map, cfg.u1_card) {
                break;
            }
        }
        if !advance(&mut u0_map, cfg.u0_card) {
            break;
        }
    }
    Ok(out)
}

/// Evaluation of one candidate channel: its bounds if it meets `d_max`.
fn evaluate_candidate(
    source: &JointPmf,
    chan: &AuxChannel,
    d: &DistortionMeasure,
    d_max: f64,
    variant: Variant,
) -> Result<Option<RateBounds>, Error> {
    let ext = extend_with_aux(source, chan)?;
    let (_, dist) = optimal_phi(&ext, d)?;
    if dist > d_max + 1e-9 {
        return Ok(None);
    }
    Ok(Some(variant_bounds(&ext, variant)?))
}

/// Channel carrying `U1 = S1` losslessly on top of a given `U0` part; the
/// reconstruction rule can then read `S1` off `U1`, so the channel meets any
/// distortion budget.
fn with_lossless_u1(source: &JointPmf, u0_rows: &[Vec<f64>]) -> Result<AuxChannel, Error> {
    let s1 = source.alphabet(Role::S1)?.size();
    let s2 = source.alphabet(Role::S2)?.size();
    let u0_card = u0_rows[0].len();
    let mut cond = vec![0.0f64; s1 * s2 * u0_card * s1];
    for a in 0..s1 {
        for b in 0..s2 {
            let row = &u0_rows[a * s2 + b];
            for (u0, &p) in row.iter().enumerate() {
                cond[(a * s2 + b) * u0_card * s1 + u0 * s1 + a] = p;
            }
        }
    }
    AuxChannel::new(
        FiniteAlphabet::indexed(u0_card),
        source.alphabet(Role::S1)?.clone(),
        s1,
        s2,
        cond,
    )
}

fn dirichlet_rows(rng: &mut ChaCha12Rng, rows: usize, len: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| crate::testutil::dirichlet_row(rng, len))
        .collect()
}

/// Candidate list for the stochastic modes, deterministic in the seed.
///
/// At `d_max = 0` a fully supported stochastic channel can never reach zero
/// distortion (every conditional on `S1` keeps full support). Raw samples
/// would all be rejected, so each sample keeps its Dirichlet `U0` part and
/// carries `S1` on `U1`, which guarantees feasibility while still probing
/// the `U0` direction.
fn stochastic_candidates(
    source: &JointPmf,
    d: &DistortionMeasure,
    d_max: f64,
    cfg: &SearchConfig,
) -> Result<Vec<AuxChannel>, Error> {
    let s1 = source.alphabet(Role::S1)?.size();
    let s2 = source.alphabet(Role::S2)?.size();
    let cells = s1 * s2;
    // The full-support-can't-be-lossless argument needs an exact-reproduction
    // measure; for other measures every sample takes the full evaluation.
    let lossless_needed = d_max <= 1e-12
        && d.zero_forces_exact_reproduction()
        && source
            .conditional_entropy(
                &VariableSet::from([Role::S1]),
                &VariableSet::from([Role::S2, Role::Y1]),
            )?
            > 1e-9;
    let mut out = Vec::with_capacity(cfg.samples);
    for i in 0..cfg.samples {
        let mut rng = derive_rng(cfg.seed, i as u64);
        if lossless_needed {
            let rows = dirichlet_rows(&mut rng, cells, cfg.u0_card);
            out.push(with_lossless_u1(source, &rows)?);
        } else {
            let mut cond = Vec::with_capacity(cells * cfg.u0_card * cfg.u1_card);
            for _ in 0..cells {
                cond.extend(crate::testutil::dirichlet_row(
                    &mut rng,
                    cfg.u0_card * cfg.u1_card,
                ));
            }
            out.push(AuxChannel::new(
                FiniteAlphabet::indexed(cfg.u0_card),
                FiniteAlphabet::indexed(cfg.u1_card),
                s1,
                s2,
                cond,
            )?);
        }
    }
    Ok(out)
}

/// Stream index -> independent RNG, stable across thread schedules.
pub fn derive_rng(seed: u64, index: u64) -> ChaCha12Rng {
    // splitmix64 over (seed, index) so nearby indices decorrelate
    let mut z = seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^= z >> 31;
    ChaCha12Rng::seed_from_u64(z)
}

fn candidates_for_mode(
    source: &JointPmf,
    d: &DistortionMeasure,
    d_max: f64,
    cfg: &SearchConfig,
) -> Result<Vec<AuxChannel>, Error> {
    match cfg.mode {
        SearchMode::DeterministicEnum => enumerate_deterministic_channels(source, cfg),
        SearchMode::RandomStochastic | SearchMode::LocalSearch => {
            stochastic_candidates(source, d, d_max, cfg)
        }
    }
}

/// `min w · R` over all searched channels meeting `d_max`, with the arg-min
/// channel reported.
///
/// Candidates are evaluated independently (in parallel when a rayon pool is
/// configured) and reduced in candidate order, so the result does not depend
/// on the schedule.
pub fn min_weighted_rate(
    source: &JointPmf,
    d_max: f64,
    weights: [f64; 3],
    variant: Variant,
    cfg: &SearchConfig,
) -> Result<FrontierPoint, Error> {
    let d = DistortionMeasure::hamming(source.alphabet(Role::S1)?);
    min_weighted_rate_with(source, &d, d_max, weights, variant, cfg)
}

/// As [`min_weighted_rate`], under a caller-supplied distortion measure.
pub fn min_weighted_rate_with(
    source: &JointPmf,
    d: &DistortionMeasure,
    d_max: f64,
    weights: [f64; 3],
    variant: Variant,
    cfg: &SearchConfig,
) -> Result<FrontierPoint, Error> {
    if weights.iter().any(|w| *w < 0.0) || weights.iter().all(|w| *w == 0.0) {
        return Err(Error::BadWeights);
    }
    let candidates = candidates_for_mode(source, d, d_max, cfg)?;
    let evaluated: Vec<Option<(f64, RateDistortionPoint)>> = candidates
        .par_iter()
        .map(|chan| {
            let bounds = evaluate_candidate(source, chan, d, d_max, variant).ok().flatten()?;
            min_support_value(&bounds, weights, variant).ok()
        })
        .collect();

    let mut best: Option<(usize, f64, RateDistortionPoint)> = None;
    for (i, ev) in evaluated.iter().enumerate() {
        if let Some((value, point)) = ev {
            if best.as_ref().is_none_or(|(_, bv, _)| *value < bv - 1e-12) {
                best = Some((i, *value, *point));
            }
        }
    }
    let (i, value, point) = best.ok_or(Error::NoFeasibleChannel { d_max })?;

    // local search refines the incumbent by perturbing its conditional rows
    if cfg.mode == SearchMode::LocalSearch {
        let (chan, value, point) = local_refine(
            source,
            d,
            d_max,
            weights,
            variant,
            cfg,
            candidates[i].clone(),
            value,
            point,
        )?;
        return Ok(FrontierPoint {
            weights,
            value,
            point,
            channel_id: chan.serialize_row_major(),
        });
    }

    Ok(FrontierPoint {
        weights,
        value,
        point,
        channel_id: candidates[i].serialize_row_major(),
    })
}

/// Coordinate-wise Dirichlet perturbation, accepted on improvement.
#[allow(clippy::too_many_arguments)]
fn local_refine(
    source: &JointPmf,
    d: &DistortionMeasure,
    d_max: f64,
    weights: [f64; 3],
    variant: Variant,
    cfg: &SearchConfig,
    mut chan: AuxChannel,
    mut value: f64,
    mut point: RateDistortionPoint,
) -> Result<(AuxChannel, f64, RateDistortionPoint), Error> {
    let s1 = source.alphabet(Role::S1)?.size();
    let s2 = source.alphabet(Role::S2)?.size();
    let cells = s1 * s2;
    let width = chan.cond().len() / cells;
    let mut rng = derive_rng(cfg.seed, 0x0010_0ca1);
    for _ in 0..cfg.restarts.max(1) * 20 {
        let cell = rng.gen_range(0..cells);
        let mut cond = chan.cond().to_vec();
        let fresh = crate::testutil::dirichlet_row(&mut rng, width);
        let mix: f64 = rng.gen_range(0.1..0.9);
        for k in 0..width {
            cond[cell * width + k] = (1.0 - mix) * cond[cell * width + k] + mix * fresh[k];
        }
        let trial = AuxChannel::new(
            chan.u0_alphabet().clone(),
            chan.u1_alphabet().clone(),
            s1,
            s2,
            cond,
        )?;
        if let Some(bounds) = evaluate_candidate(source, &trial, d, d_max, variant)? {
            let (v, p) = min_support_value(&bounds, weights, variant)?;
            if v < value - 1e-12 {
                value = v;
                point = p;
                chan = trial;
            }
        }
    }
    Ok((chan, value, point))
}

/// One frontier point per weight triple, in grid order.
pub fn trace_frontier(
    source: &JointPmf,
    d_max: f64,
    weight_grid: &[[f64; 3]],
    variant: Variant,
    cfg: &SearchConfig,
) -> Result<Vec<FrontierPoint>, Error> {
    let d = DistortionMeasure::hamming(source.alphabet(Role::S1)?);
    trace_frontier_with(source, &d, d_max, weight_grid, variant, cfg)
}

/// As [`trace_frontier`], under a caller-supplied distortion measure.
pub fn trace_frontier_with(
    source: &JointPmf,
    d: &DistortionMeasure,
    d_max: f64,
    weight_grid: &[[f64; 3]],
    variant: Variant,
    cfg: &SearchConfig,
) -> Result<Vec<FrontierPoint>, Error> {
    if weight_grid.is_empty() {
        return Err(Error::BadWeights);
    }
    weight_grid
        .iter()
        .map(|&w| min_weighted_rate_with(source, d, d_max, w, variant, cfg))
        .collect()
}

/// Per-weight outcome of the converse probe.
#[derive(Debug, Clone)]
pub struct ConverseEntry {
    pub weights: [f64; 3],
    pub claimed: f64,
    /// Lowest support value any sampled channel achieved, `None` when no
    /// sampled channel met the distortion budget.
    pub best_found: Option<f64>,
    /// `best_found < claimed − 1e-9`: the claim is beaten, hence wrong.
    pub violated: bool,
    /// Best found exceeds the claim by more than 1e-9: nothing sampled gets
    /// close, so the probe cannot confirm the claim is tight.
    pub unconfirmed: bool,
}

#[derive(Debug, Clone)]
pub struct ConverseReport {
    pub entries: Vec<ConverseEntry>,
    pub channels_tried: usize,
    pub deterministic_included: bool,
}

impl ConverseReport {
    pub fn any_violation(&self) -> bool {
        self.entries.iter().any(|e| e.violated)
    }
}

/// Probes claimed frontier values: no sampled channel may achieve a lower
/// support value. Draws `cfg.samples` stochastic channels plus, when the
/// count stays under the cutoff, all deterministic channels.
pub fn converse_sample_check(
    source: &JointPmf,
    d_max: f64,
    claimed_bounds: &[([f64; 3], f64)],
    variant: Variant,
    cfg: &SearchConfig,
) -> Result<ConverseReport, Error> {
    let d = DistortionMeasure::hamming(source.alphabet(Role::S1)?);
    converse_sample_check_with(source, &d, d_max, claimed_bounds, variant, cfg)
}

/// As [`converse_sample_check`], under a caller-supplied distortion measure.
pub fn converse_sample_check_with(
    source: &JointPmf,
    d: &DistortionMeasure,
    d_max: f64,
    claimed_bounds: &[([f64; 3], f64)],
    variant: Variant,
    cfg: &SearchConfig,
) -> Result<ConverseReport, Error> {
    let mut candidates = stochastic_candidates(source, d, d_max, cfg)?;
    let cells = source.alphabet(Role::S1)?.size() * source.alphabet(Role::S2)?.size();
    let deterministic_included =
        deterministic_count(cells, cfg.u0_card, cfg.u1_card) <= cfg.enum_cutoff as f64;
    if deterministic_included {
        candidates.extend(enumerate_deterministic_channels(source, cfg)?);
    }
    // constant channel is always worth probing and is free
    candidates.push(AuxChannel::constant(
        source.alphabet(Role::S1)?.size(),
        source.alphabet(Role::S2)?.size(),
    ));

    let weight_list: Vec<[f64; 3]> = claimed_bounds.iter().map(|(w, _)| *w).collect();
    let per_candidate: Vec<Option<Vec<f64>>> = candidates
        .par_iter()
        .map(|chan| {
            let bounds = evaluate_candidate(source, chan, d, d_max, variant).ok().flatten()?;
            let values: Option<Vec<f64>> = weight_list
                .iter()
                .map(|&w| min_support_value(&bounds, w, variant).ok().map(|(v, _)| v))
                .collect();
            values
        })
        .collect();

    let mut entries = Vec::new();
    for (k, &(weights, claimed)) in claimed_bounds.iter().enumerate() {
        let mut best: Option<f64> = None;
        for values in per_candidate.iter().flatten() {
            let v = values[k];
            if best.is_none_or(|b| v < b) {
                best = Some(v);
            }
        }
        let violated = best.is_some_and(|b| b < claimed - 1e-9);
        let unconfirmed = best.is_none_or(|b| b > claimed + 1e-9);
        entries.push(ConverseEntry {
            weights,
            claimed,
            best_found: best,
            violated,
            unconfirmed,
        });
    }
    Ok(ConverseReport {
        entries,
        channels_tried: candidates.len(),
        deterministic_included,
    })
}
