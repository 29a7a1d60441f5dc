//! Auxiliary-variable channels, distortion measures, reconstruction rules and
//! the extension of a source pmf by a channel.
//!
//! An [`AuxChannel`] is a conditional law `P(U0, U1 | S1, S2)`. Conditioning
//! only on the source pair makes the long Markov chain
//! `(Y1, Y2) — (S1, S2) — (U0, U1)` hold on every extension by construction.

use crate::error::Error;
use crate::pmf::{FiniteAlphabet, JointPmf, Role, VariableSet, NORMALIZATION_TOL};

/// Conditional distribution `P(u0, u1 | s1, s2)`.
///
/// The table is laid out row-major: rows indexed by `(s1, s2)`, entries by
/// `(u0, u1)`, the last index varying fastest throughout.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxChannel {
    u0_alphabet: FiniteAlphabet,
    u1_alphabet: FiniteAlphabet,
    s1_size: usize,
    s2_size: usize,
    cond: Vec<f64>,
}

impl AuxChannel {
    pub fn new(
        u0_alphabet: FiniteAlphabet,
        u1_alphabet: FiniteAlphabet,
        s1_size: usize,
        s2_size: usize,
        cond: Vec<f64>,
    ) -> Result<Self, Error> {
        let u = u0_alphabet.size() * u1_alphabet.size();
        if cond.len() != s1_size * s2_size * u {
            return Err(Error::ShapeMismatch(format!(
                "conditional table has {} entries, expected {}",
                cond.len(),
                s1_size * s2_size * u
            )));
        }
        for (row, chunk) in cond.chunks(u).enumerate() {
            let mut total = 0.0;
            for &p in chunk {
                if !p.is_finite() || p < 0.0 {
                    return Err(Error::NegativeProbability(p));
                }
                total += p;
            }
            if (total - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::ChannelNotNormalized { row, total });
            }
        }
        Ok(Self {
            u0_alphabet,
            u1_alphabet,
            s1_size,
            s2_size,
            cond,
        })
    }

    /// Point-mass channel from deterministic maps `(s1, s2) -> u0` and
    /// `(s1, s2) -> u1`, given as row-major index tables.
    pub fn deterministic(
        u0_alphabet: FiniteAlphabet,
        u1_alphabet: FiniteAlphabet,
        s1_size: usize,
        s2_size: usize,
        u0_map: &[usize],
        u1_map: &[usize],
    ) -> Result<Self, Error> {
        if u0_map.len() != s1_size * s2_size || u1_map.len() != s1_size * s2_size {
            return Err(Error::ShapeMismatch("map length must be |S1|*|S2|".into()));
        }
        let (n0, n1) = (u0_alphabet.size(), u1_alphabet.size());
        let mut cond = vec![0.0; s1_size * s2_size * n0 * n1];
        for cell in 0..s1_size * s2_size {
            let (u0, u1) = (u0_map[cell], u1_map[cell]);
            if u0 >= n0 || u1 >= n1 {
                return Err(Error::ShapeMismatch("map value outside alphabet".into()));
            }
            cond[cell * n0 * n1 + u0 * n1 + u1] = 1.0;
        }
        Self::new(u0_alphabet, u1_alphabet, s1_size, s2_size, cond)
    }

    /// The single channel with both auxiliaries constant.
    pub fn constant(s1_size: usize, s2_size: usize) -> Self {
        Self::deterministic(
            FiniteAlphabet::indexed(1),
            FiniteAlphabet::indexed(1),
            s1_size,
            s2_size,
            &vec![0; s1_size * s2_size],
            &vec![0; s1_size * s2_size],
        )
        .expect("constant channel is valid")
    }

    pub fn u0_alphabet(&self) -> &FiniteAlphabet {
        &self.u0_alphabet
    }

    pub fn u1_alphabet(&self) -> &FiniteAlphabet {
        &self.u1_alphabet
    }

    pub fn cond(&self) -> &[f64] {
        &self.cond
    }

    pub fn prob(&self, s1: usize, s2: usize, u0: usize, u1: usize) -> f64 {
        let n1 = self.u1_alphabet.size();
        let n0 = self.u0_alphabet.size();
        self.cond[(s1 * self.s2_size + s2) * n0 * n1 + u0 * n1 + u1]
    }

    /// Conditional table serialized row-major, for frontier output.
    pub fn serialize_row_major(&self) -> String {
        let mut out = String::new();
        for (i, p) in self.cond.iter().enumerate() {
            if i > 0 {
                out.push(';');
            }
            out.push_str(&crate::fmt_f64(*p));
        }
        out
    }
}

/// Per-letter distortion `d1(s1, ŝ1) ≥ 0` with reconstruction alphabet `Ŝ1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionMeasure {
    reconstruction_alphabet: FiniteAlphabet,
    s1_size: usize,
    table: Vec<f64>,
}

impl DistortionMeasure {
    pub fn new(
        reconstruction_alphabet: FiniteAlphabet,
        s1_size: usize,
        table: Vec<f64>,
    ) -> Result<Self, Error> {
        if table.len() != s1_size * reconstruction_alphabet.size() {
            return Err(Error::ShapeMismatch(
                "distortion table must be |S1| x |Ŝ1|".into(),
            ));
        }
        if table.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::ShapeMismatch(
                "distortion entries must be finite and nonnegative".into(),
            ));
        }
        Ok(Self {
            reconstruction_alphabet,
            s1_size,
            table,
        })
    }

    /// Hamming distortion with `Ŝ1 = S1`.
    pub fn hamming(s1_alphabet: &FiniteAlphabet) -> Self {
        let n = s1_alphabet.size();
        let mut table = vec![1.0; n * n];
        for i in 0..n {
            table[i * n + i] = 0.0;
        }
        Self {
            reconstruction_alphabet: s1_alphabet.clone(),
            s1_size: n,
            table,
        }
    }

    pub fn reconstruction_alphabet(&self) -> &FiniteAlphabet {
        &self.reconstruction_alphabet
    }

    /// True when zero distortion pins the reconstruction: every source
    /// symbol has exactly one zero-distortion reconstruction and no two
    /// symbols share one. Under such a measure a conditional reaches zero
    /// expected distortion only as a point mass, which the feasibility
    /// shortcuts in the channel search rely on.
    pub fn zero_forces_exact_reproduction(&self) -> bool {
        let n_rec = self.reconstruction_alphabet.size();
        let mut used = vec![false; n_rec];
        for s1 in 0..self.s1_size {
            let zeros: Vec<usize> = (0..n_rec)
                .filter(|&shat| self.table[s1 * n_rec + shat] == 0.0)
                .collect();
            match zeros.as_slice() {
                [only] if !used[*only] => used[*only] = true,
                _ => return false,
            }
        }
        true
    }

    pub fn value(&self, s1: usize, shat: usize) -> f64 {
        self.table[s1 * self.reconstruction_alphabet.size() + shat]
    }
}

/// Total map `φ(y1, u0, u1, s2) -> ŝ1` stored as an index table with `s2`
/// varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionRule {
    sizes: [usize; 4], // |Y1|, |U0|, |U1|, |S2|
    map: Vec<usize>,
}

impl ReconstructionRule {
    pub fn new(sizes: [usize; 4], map: Vec<usize>) -> Result<Self, Error> {
        if map.len() != sizes.iter().product::<usize>() {
            return Err(Error::ShapeMismatch(
                "reconstruction map must cover Y1 x U0 x U1 x S2".into(),
            ));
        }
        Ok(Self { sizes, map })
    }

    pub fn apply(&self, y1: usize, u0: usize, u1: usize, s2: usize) -> usize {
        let [_, n0, n1, n2] = self.sizes;
        self.map[((y1 * n0 + u0) * n1 + u1) * n2 + s2]
    }
}

/// A candidate operating point `(R0, R1, R2, D1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateDistortionPoint {
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
    pub d1: f64,
}

impl RateDistortionPoint {
    pub fn new(r0: f64, r1: f64, r2: f64, d1: f64) -> Result<Self, Error> {
        if r0 < 0.0 || r1 < 0.0 || r2 < 0.0 {
            return Err(Error::ShapeMismatch("rates must be nonnegative".into()));
        }
        Ok(Self { r0, r1, r2, d1 })
    }
}

/// `p(s1,s2,y1,y2,u0,u1) = p(s1,s2,y1,y2) · P(u0,u1 | s1,s2)`.
///
/// The `(S1,S2,Y1,Y2)` marginal of the result recovers the source exactly,
/// and `I(U0,U1; Y1,Y2 | S1,S2) = 0` by construction.
pub fn extend_with_aux(source: &JointPmf, chan: &AuxChannel) -> Result<JointPmf, Error> {
    let expected: Vec<Role> = vec![Role::S1, Role::S2, Role::Y1, Role::Y2];
    if source.roles() != expected.as_slice() {
        return Err(Error::AlphabetMismatch(
            "extension requires a source over (S1,S2,Y1,Y2)".into(),
        ));
    }
    let n1 = source.alphabet(Role::S1)?.size();
    let n2 = source.alphabet(Role::S2)?.size();
    if chan.s1_size != n1 || chan.s2_size != n2 {
        return Err(Error::AlphabetMismatch(format!(
            "channel conditions on {}x{} source symbols, pmf has {}x{}",
            chan.s1_size, chan.s2_size, n1, n2
        )));
    }
    let ny1 = source.alphabet(Role::Y1)?.size();
    let ny2 = source.alphabet(Role::Y2)?.size();
    let (nu0, nu1) = (chan.u0_alphabet.size(), chan.u1_alphabet.size());

    let mut probs = vec![0.0f64; n1 * n2 * ny1 * ny2 * nu0 * nu1];
    let src = source.probs();
    for s1 in 0..n1 {
        for s2 in 0..n2 {
            for y1 in 0..ny1 {
                for y2 in 0..ny2 {
                    let p = src[((s1 * n2 + s2) * ny1 + y1) * ny2 + y2];
                    if p == 0.0 {
                        continue;
                    }
                    let base = (((s1 * n2 + s2) * ny1 + y1) * ny2 + y2) * nu0 * nu1;
                    let row = (s1 * n2 + s2) * nu0 * nu1;
                    for uu in 0..nu0 * nu1 {
                        probs[base + uu] = p * chan.cond[row + uu];
                    }
                }
            }
        }
    }
    JointPmf::new(
        vec![Role::S1, Role::S2, Role::Y1, Role::Y2, Role::U0, Role::U1],
        vec![
            source.alphabet(Role::S1)?.clone(),
            source.alphabet(Role::S2)?.clone(),
            source.alphabet(Role::Y1)?.clone(),
            source.alphabet(Role::Y2)?.clone(),
            chan.u0_alphabet.clone(),
            chan.u1_alphabet.clone(),
        ],
        probs,
    )
}

fn extension_sizes(ext: &JointPmf) -> Result<[usize; 6], Error> {
    Ok([
        ext.alphabet(Role::S1)?.size(),
        ext.alphabet(Role::S2)?.size(),
        ext.alphabet(Role::Y1)?.size(),
        ext.alphabet(Role::Y2)?.size(),
        ext.alphabet(Role::U0)?.size(),
        ext.alphabet(Role::U1)?.size(),
    ])
}

/// Joint mass over `(s1, y1, u0, u1, s2)` with `y2` summed out, laid out with
/// `s1` slowest. This is the table both distortion routines walk.
fn decoder_view(ext: &JointPmf) -> Result<(Vec<f64>, [usize; 6]), Error> {
    let sizes = extension_sizes(ext)?;
    let [n1, n2, ny1, ny2, nu0, nu1] = sizes;
    let mut view = vec![0.0f64; n1 * ny1 * nu0 * nu1 * n2];
    let probs = ext.probs();
    let mut off = 0usize;
    for s1 in 0..n1 {
        for s2 in 0..n2 {
            for y1 in 0..ny1 {
                for _y2 in 0..ny2 {
                    for u0 in 0..nu0 {
                        for u1 in 0..nu1 {
                            let p = probs[off];
                            off += 1;
                            if p > 0.0 {
                                view[(((s1 * ny1 + y1) * nu0 + u0) * nu1 + u1) * n2 + s2] += p;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok((view, sizes))
}

/// `E d1(S1, φ(Y1, U0, U1, S2))` on an extension.
pub fn expected_distortion(
    ext: &JointPmf,
    phi: &ReconstructionRule,
    d: &DistortionMeasure,
) -> Result<f64, Error> {
    let (view, sizes) = decoder_view(ext)?;
    let [n1, n2, ny1, _, nu0, nu1] = sizes;
    if phi.sizes != [ny1, nu0, nu1, n2] {
        return Err(Error::ShapeMismatch(
            "reconstruction rule domain does not match the extension".into(),
        ));
    }
    if d.s1_size != n1 {
        return Err(Error::ShapeMismatch(
            "distortion table does not match |S1|".into(),
        ));
    }
    let mut total = 0.0;
    for s1 in 0..n1 {
        for y1 in 0..ny1 {
            for u0 in 0..nu0 {
                for u1 in 0..nu1 {
                    for s2 in 0..n2 {
                        let p = view[(((s1 * ny1 + y1) * nu0 + u0) * nu1 + u1) * n2 + s2];
                        if p > 0.0 {
                            total += p * d.value(s1, phi.apply(y1, u0, u1, s2));
                        }
                    }
                }
            }
        }
    }
    Ok(total)
}

/// The distortion-optimal reconstruction rule and its expected distortion.
///
/// Each cell `(y1, u0, u1, s2)` with positive probability gets the `ŝ1`
/// minimizing the conditional expected distortion; ties break toward the
/// lowest reconstruction index, and zero-mass cells get index 0.
pub fn optimal_phi(
    ext: &JointPmf,
    d: &DistortionMeasure,
) -> Result<(ReconstructionRule, f64), Error> {
    let (view, sizes) = decoder_view(ext)?;
    let [n1, n2, ny1, _, nu0, nu1] = sizes;
    if d.s1_size != n1 {
        return Err(Error::ShapeMismatch(
            "distortion table does not match |S1|".into(),
        ));
    }
    let nrec = d.reconstruction_alphabet.size();
    let cells = ny1 * nu0 * nu1 * n2;
    let mut map = vec![0usize; cells];
    let mut total = 0.0;
    let mut mass = vec![0.0f64; n1];
    for y1 in 0..ny1 {
        for u0 in 0..nu0 {
            for u1 in 0..nu1 {
                for s2 in 0..n2 {
                    let mut any = false;
                    for s1 in 0..n1 {
                        let p = view[(((s1 * ny1 + y1) * nu0 + u0) * nu1 + u1) * n2 + s2];
                        mass[s1] = p;
                        any |= p > 0.0;
                    }
                    let cell = ((y1 * nu0 + u0) * nu1 + u1) * n2 + s2;
                    if !any {
                        map[cell] = 0;
                        continue;
                    }
                    let mut best = 0usize;
                    let mut best_val = f64::INFINITY;
                    for shat in 0..nrec {
                        let val: f64 =
                            (0..n1).map(|s1| mass[s1] * d.value(s1, shat)).sum();
                        if val < best_val {
                            best_val = val;
                            best = shat;
                        }
                    }
                    map[cell] = best;
                    total += best_val;
                }
            }
        }
    }
    Ok((
        ReconstructionRule::new([ny1, nu0, nu1, n2], map)?,
        total,
    ))
}

/// Residual of the Markov factorization check `I(U0,U1; Y1,Y2 | S1,S2)`.
pub fn markov_residual(ext: &JointPmf) -> Result<f64, Error> {
    ext.mutual_information_general(
        &VariableSet::from([Role::U0, Role::U1]),
        &VariableSet::from([Role::Y1, Role::Y2]),
        &VariableSet::from([Role::S1, Role::S2]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::pmf::VariableSet;
    use crate::testutil::{random_channel, random_source, rng_from};
    use rand::Rng;

    #[test]
    fn extension_point_mass_channel() {
        let mut rng = rng_from(21);
        let source = random_source(&mut rng, 2, 2, 2, 2);
        let chan = AuxChannel::constant(2, 2);
        let ext = extend_with_aux(&source, &chan).unwrap();
        // source x point mass: tables agree entry for entry
        assert_eq!(ext.probs(), source.probs());
        let marg = ext
            .marginalize(&VariableSet::from([Role::S1, Role::S2, Role::Y1, Role::Y2]))
            .unwrap();
        assert_eq!(marg.probs(), source.probs());
    }

    #[test]
    fn extension_recovers_source_marginal() {
        let ex1 = corpus::build_example1();
        let chan = ex1.documented_channel.as_ref().unwrap();
        let ext = extend_with_aux(&ex1.source, chan).unwrap();
        let marg = ext
            .marginalize(&VariableSet::from([Role::S1, Role::S2, Role::Y1, Role::Y2]))
            .unwrap();
        for (a, b) in marg.probs().iter().zip(ex1.source.probs()) {
            assert!((a - b).abs() < 1e-12);
        }
        let positive = ext.probs().iter().filter(|&&p| p > 0.0).count();
        assert_eq!(positive, 16);
    }

    #[test]
    fn uniform_independent_aux_has_zero_information() {
        let mut rng = rng_from(22);
        let source = random_source(&mut rng, 2, 2, 2, 2);
        let u0 = FiniteAlphabet::indexed(3);
        let u1 = FiniteAlphabet::indexed(1);
        let cond = vec![1.0 / 3.0; 2 * 2 * 3];
        let chan = AuxChannel::new(u0, u1, 2, 2, cond).unwrap();
        let ext = extend_with_aux(&source, &chan).unwrap();
        let i = ext
            .conditional_mutual_information(
                &VariableSet::from([Role::U0]),
                &VariableSet::from([Role::S1, Role::S2]),
                &VariableSet::empty(),
            )
            .unwrap();
        assert!(i.abs() < 1e-12);
    }

    #[test]
    fn markov_chain_holds_on_random_extensions() {
        let mut rng = rng_from(23);
        for _ in 0..20 {
            let source = random_source(&mut rng, 2, 2, 2, 2);
            let chan = random_channel(&mut rng, &source, 2, 2);
            let ext = extend_with_aux(&source, &chan).unwrap();
            assert!(markov_residual(&ext).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn lossless_phi_reaches_zero_distortion() {
        // Example 1 with U0=(X2,X3): S1 is a function of (Y1, U0), so the
        // optimal rule is exact under Hamming distortion.
        let ex1 = corpus::build_example1();
        let chan = ex1.documented_channel.as_ref().unwrap();
        let ext = extend_with_aux(&ex1.source, chan).unwrap();
        let d = DistortionMeasure::hamming(ex1.source.alphabet(Role::S1).unwrap());
        let (phi, dist) = optimal_phi(&ext, &d).unwrap();
        assert!(dist.abs() < 1e-12);
        assert!(expected_distortion(&ext, &phi, &d).unwrap().abs() < 1e-12);
    }

    #[test]
    fn constant_distortion_single_atom() {
        let a1 = FiniteAlphabet::indexed(1);
        let source = JointPmf::source(
            a1.clone(),
            a1.clone(),
            a1.clone(),
            a1.clone(),
            vec![1.0],
        )
        .unwrap();
        let chan = AuxChannel::constant(1, 1);
        let ext = extend_with_aux(&source, &chan).unwrap();
        let d = DistortionMeasure::new(FiniteAlphabet::indexed(2), 1, vec![2.5, 2.5]).unwrap();
        let (phi, dist) = optimal_phi(&ext, &d).unwrap();
        assert_eq!(dist, 2.5);
        assert_eq!(expected_distortion(&ext, &phi, &d).unwrap(), 2.5);
    }

    #[test]
    fn optimal_phi_is_conditional_mode_under_hamming() {
        // compare against exhaustive search over all reconstruction rules on
        // a toy instance with |Y1|=|U0|=1, |U1|=2, |S2|=2, |S1|=2
        let mut rng = rng_from(24);
        for _ in 0..20 {
            let source = random_source(&mut rng, 2, 2, 1, 1);
            let chan = random_channel(&mut rng, &source, 1, 2);
            let ext = extend_with_aux(&source, &chan).unwrap();
            let d = DistortionMeasure::hamming(ext.alphabet(Role::S1).unwrap());
            let (_, best) = optimal_phi(&ext, &d).unwrap();
            let mut exhaustive = f64::INFINITY;
            // 4 cells, 2 choices each
            for assignment in 0..16usize {
                let map: Vec<usize> = (0..4).map(|c| (assignment >> c) & 1).collect();
                let rule = ReconstructionRule::new([1, 1, 2, 2], map).unwrap();
                let dist = expected_distortion(&ext, &rule, &d).unwrap();
                exhaustive = exhaustive.min(dist);
            }
            assert!((best - exhaustive).abs() < 1e-12);
        }
    }

    #[test]
    fn optimal_phi_beats_random_rules() {
        let mut rng = rng_from(25);
        for _ in 0..10 {
            let source = random_source(&mut rng, 3, 2, 2, 2);
            let chan = random_channel(&mut rng, &source, 2, 2);
            let ext = extend_with_aux(&source, &chan).unwrap();
            let d = DistortionMeasure::hamming(ext.alphabet(Role::S1).unwrap());
            let (_, best) = optimal_phi(&ext, &d).unwrap();
            for _ in 0..50 {
                let map: Vec<usize> = (0..2 * 2 * 2 * 2).map(|_| rng.gen_range(0..3)).collect();
                let rule = ReconstructionRule::new([2, 2, 2, 2], map).unwrap();
                let dist = expected_distortion(&ext, &rule, &d).unwrap();
                assert!(best <= dist + 1e-12);
            }
        }
    }

    #[test]
    fn alphabet_mismatch_rejected() {
        let mut rng = rng_from(26);
        let source = random_source(&mut rng, 2, 2, 2, 2);
        let chan = AuxChannel::constant(3, 2);
        assert!(matches!(
            extend_with_aux(&source, &chan),
            Err(Error::AlphabetMismatch(_))
        ));
    }

    #[test]
    fn zero_mass_cells_get_index_zero() {
        // point-mass source: every cell off the support is zero-mass
        let a2 = FiniteAlphabet::indexed(2);
        let mut probs = vec![0.0; 16];
        probs[15] = 1.0; // (s1,s2,y1,y2) = (1,1,1,1)
        let source =
            JointPmf::source(a2.clone(), a2.clone(), a2.clone(), a2.clone(), probs).unwrap();
        let chan = AuxChannel::constant(2, 2);
        let ext = extend_with_aux(&source, &chan).unwrap();
        let d = DistortionMeasure::hamming(&a2);
        let (phi, dist) = optimal_phi(&ext, &d).unwrap();
        assert_eq!(dist, 0.0);
        // the one populated cell maps to s1 = 1, unreachable cells to 0
        assert_eq!(phi.apply(1, 0, 0, 1), 1);
        assert_eq!(phi.apply(0, 0, 0, 0), 0);
    }
}
