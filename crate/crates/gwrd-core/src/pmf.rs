//! Finite alphabets, joint probability mass functions and the Shannon
//! information measures computed from them.
//!
//! A [`JointPmf`] is a dense table over an ordered list of variable roles.
//! Source distributions use the four roles `S1, S2, Y1, Y2`; extending a
//! source by an auxiliary channel (see [`crate::aux`]) appends `U0, U1`.
//! All measures are in bits (base-2 logarithms), with `0 log 0 = 0`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Tolerance for "probabilities sum to one" checks on construction.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Variable roles a pmf can carry. `U0`/`U1` only appear on extended pmfs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    S1,
    S2,
    Y1,
    Y2,
    U0,
    U1,
}

impl Role {
    pub const ALL: [Role; 6] = [Role::S1, Role::S2, Role::Y1, Role::Y2, Role::U0, Role::U1];

    pub fn name(self) -> &'static str {
        match self {
            Role::S1 => "S1",
            Role::S2 => "S2",
            Role::Y1 => "Y1",
            Role::Y2 => "Y2",
            Role::U0 => "U0",
            Role::U1 => "U1",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An ordered finite alphabet of distinct string labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteAlphabet {
    symbols: Vec<String>,
}

impl FiniteAlphabet {
    pub fn new<S: Into<String>>(symbols: impl IntoIterator<Item = S>) -> Result<Self, Error> {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.is_empty() {
            return Err(Error::EmptyAlphabet);
        }
        for (i, a) in symbols.iter().enumerate() {
            if symbols[..i].contains(a) {
                return Err(Error::DuplicateSymbol(a.clone()));
            }
        }
        Ok(Self { symbols })
    }

    /// Alphabet `{"0", "1", ...}` of the given size.
    pub fn indexed(size: usize) -> Self {
        Self::new((0..size).map(|i| i.to_string())).expect("indexed alphabet is valid")
    }

    /// All length-`bits` binary strings, in lexicographic order.
    pub fn bits(bits: usize) -> Self {
        let n = 1usize << bits;
        Self::new((0..n).map(|i| format!("{i:0width$b}", width = bits)))
            .expect("bit-string alphabet is valid")
    }

    pub fn size(&self) -> usize {
        self.symbols.len()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn symbol(&self, index: usize) -> &str {
        &self.symbols[index]
    }

    pub fn index_of(&self, symbol: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == symbol)
    }
}

/// A set of variable roles, kept sorted and duplicate-free.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VariableSet {
    roles: Vec<Role>,
}

impl VariableSet {
    pub fn new(roles: impl IntoIterator<Item = Role>) -> Self {
        let mut roles: Vec<Role> = roles.into_iter().collect();
        roles.sort();
        roles.dedup();
        Self { roles }
    }

    pub fn empty() -> Self {
        Self { roles: Vec::new() }
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn is_empty(&self) -> bool {
        self.roles.is_empty()
    }

    pub fn contains(&self, role: Role) -> bool {
        self.roles.binary_search(&role).is_ok()
    }

    pub fn union(&self, other: &VariableSet) -> VariableSet {
        VariableSet::new(self.roles.iter().chain(other.roles.iter()).copied())
    }

    pub fn is_disjoint(&self, other: &VariableSet) -> bool {
        !self.roles.iter().any(|r| other.contains(*r))
    }
}

impl From<&[Role]> for VariableSet {
    fn from(roles: &[Role]) -> Self {
        VariableSet::new(roles.iter().copied())
    }
}

impl<const N: usize> From<[Role; N]> for VariableSet {
    fn from(roles: [Role; N]) -> Self {
        VariableSet::new(roles)
    }
}

/// Dense joint pmf over an ordered list of roles.
///
/// The table is indexed by mixed-radix offset in declared variable order:
/// the last variable varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    roles: Vec<Role>,
    alphabets: Vec<FiniteAlphabet>,
    probs: Vec<f64>,
}

impl JointPmf {
    /// Builds a pmf from a dense table, validating nonnegativity and
    /// normalization to within [`NORMALIZATION_TOL`].
    pub fn new(
        roles: Vec<Role>,
        alphabets: Vec<FiniteAlphabet>,
        probs: Vec<f64>,
    ) -> Result<Self, Error> {
        if roles.is_empty() || roles.len() != alphabets.len() {
            return Err(Error::ShapeMismatch(
                "role and alphabet lists must be non-empty and equal length".into(),
            ));
        }
        for (i, r) in roles.iter().enumerate() {
            if roles[..i].contains(r) {
                return Err(Error::ShapeMismatch(format!("duplicate role {r}")));
            }
        }
        let expected: usize = alphabets.iter().map(FiniteAlphabet::size).product();
        if probs.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "probability table has {} entries, expected {}",
                probs.len(),
                expected
            )));
        }
        let mut total = 0.0;
        for &p in &probs {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::NegativeProbability(p));
            }
            total += p;
        }
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized { total });
        }
        Ok(Self {
            roles,
            alphabets,
            probs,
        })
    }

    /// Four-variable source pmf over `(S1, S2, Y1, Y2)` in that order.
    pub fn source(
        s1: FiniteAlphabet,
        s2: FiniteAlphabet,
        y1: FiniteAlphabet,
        y2: FiniteAlphabet,
        probs: Vec<f64>,
    ) -> Result<Self, Error> {
        Self::new(
            vec![Role::S1, Role::S2, Role::Y1, Role::Y2],
            vec![s1, s2, y1, y2],
            probs,
        )
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn alphabets(&self) -> &[FiniteAlphabet] {
        &self.alphabets
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn role_position(&self, role: Role) -> Option<usize> {
        self.roles.iter().position(|&r| r == role)
    }

    pub fn alphabet(&self, role: Role) -> Result<&FiniteAlphabet, Error> {
        self.role_position(role)
            .map(|i| &self.alphabets[i])
            .ok_or(Error::UnknownRole(role.name()))
    }

    /// Strides of the mixed-radix layout, one per variable.
    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1usize; self.roles.len()];
        for i in (0..self.roles.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.alphabets[i + 1].size();
        }
        strides
    }

    pub fn offset(&self, indices: &[usize]) -> usize {
        debug_assert_eq!(indices.len(), self.roles.len());
        let strides = self.strides();
        indices.iter().zip(&strides).map(|(i, s)| i * s).sum()
    }

    /// Probability of a full assignment given as per-variable indices.
    pub fn prob(&self, indices: &[usize]) -> f64 {
        self.probs[self.offset(indices)]
    }

    /// Marginal pmf on `keep`, exact sums of table entries.
    ///
    /// Marginal entries are accumulated in table order so the result does not
    /// depend on anything but the input table.
    pub fn marginalize(&self, keep: &VariableSet) -> Result<JointPmf, Error> {
        let positions: Vec<usize> = keep
            .roles()
            .iter()
            .map(|&r| {
                self.role_position(r)
                    .ok_or(Error::UnknownRole(r.name()))
            })
            .collect::<Result<_, _>>()?;
        if positions.is_empty() {
            return Err(Error::EmptyTarget);
        }
        let kept_roles: Vec<Role> = positions.iter().map(|&p| self.roles[p]).collect();
        let kept_alphabets: Vec<FiniteAlphabet> =
            positions.iter().map(|&p| self.alphabets[p].clone()).collect();
        let kept_sizes: Vec<usize> = kept_alphabets.iter().map(FiniteAlphabet::size).collect();
        let out_len: usize = kept_sizes.iter().product();
        let mut out = vec![0.0f64; out_len];

        let sizes: Vec<usize> = self.alphabets.iter().map(FiniteAlphabet::size).collect();
        let mut idx = vec![0usize; sizes.len()];
        for &p in &self.probs {
            let mut off = 0usize;
            for &pos in &positions {
                off = off * sizes[pos] + idx[pos];
            }
            out[off] += p;
            // advance mixed-radix counter
            for d in (0..sizes.len()).rev() {
                idx[d] += 1;
                if idx[d] < sizes[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        // Renormalization is deliberately not performed: the sums of a valid
        // table are already within tolerance.
        JointPmf::new(kept_roles, kept_alphabets, out)
    }

    /// Joint entropy of `targets` in bits.
    pub fn entropy(&self, targets: &VariableSet) -> Result<f64, Error> {
        if targets.is_empty() {
            return Ok(0.0);
        }
        let marginal = self.marginalize(targets)?;
        let mut h = 0.0;
        for &p in &marginal.probs {
            if p > 0.0 {
                h -= p * p.log2();
            }
        }
        Ok(h)
    }

    /// `H(targets | given) = H(targets, given) − H(given)`.
    pub fn conditional_entropy(
        &self,
        targets: &VariableSet,
        given: &VariableSet,
    ) -> Result<f64, Error> {
        if targets.is_empty() {
            return Err(Error::EmptyTarget);
        }
        if !targets.is_disjoint(given) {
            return Err(Error::OverlappingSets);
        }
        Ok(self.entropy(&targets.union(given))? - self.entropy(given)?)
    }

    /// `I(a; b | given)` for pairwise disjoint sets.
    pub fn conditional_mutual_information(
        &self,
        a: &VariableSet,
        b: &VariableSet,
        given: &VariableSet,
    ) -> Result<f64, Error> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::EmptyTarget);
        }
        if !a.is_disjoint(b) || !a.is_disjoint(given) || !b.is_disjoint(given) {
            return Err(Error::OverlappingSets);
        }
        self.mutual_information_general(a, b, given)
    }

    /// `I(a; b | given)` via `H(a∪g) + H(b∪g) − H(g) − H(a∪b∪g)`.
    ///
    /// Unlike [`Self::conditional_mutual_information`] this accepts
    /// overlapping sets; the entropy identity remains valid and is what the
    /// combined-description quantities need.
    pub fn mutual_information_general(
        &self,
        a: &VariableSet,
        b: &VariableSet,
        given: &VariableSet,
    ) -> Result<f64, Error> {
        let ag = a.union(given);
        let bg = b.union(given);
        let abg = ag.union(b);
        Ok(self.entropy(&ag)? + self.entropy(&bg)? - self.entropy(given)? - self.entropy(&abg)?)
    }
}

/// Binary entropy `h2(alpha)` in bits, with `0 log 0 = 0`.
pub fn binary_entropy(alpha: f64) -> Result<f64, Error> {
    if !(0.0..=1.0).contains(&alpha) || alpha.is_nan() {
        return Err(Error::DomainError(alpha));
    }
    let term = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
    Ok(term(alpha) + term(1.0 - alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{random_pmf, rng_from};
    use rand::Rng;

    fn set(roles: impl IntoIterator<Item = Role>) -> VariableSet {
        VariableSet::new(roles)
    }

    #[test]
    fn binary_entropy_reference_points() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        // Frozen from a 50-digit evaluation of the defining formula at the
        // double closest to 0.11.
        let expected = 0.499_915_958_164_528;
        assert!((binary_entropy(0.11).unwrap() - expected).abs() < 1e-14);
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.5).is_err());
        assert!(binary_entropy(f64::NAN).is_err());
    }

    #[test]
    fn entropy_uniform_and_point_mass() {
        let a = FiniteAlphabet::indexed(4);
        let uniform = JointPmf::new(vec![Role::S1], vec![a.clone()], vec![0.25; 4]).unwrap();
        assert!((uniform.entropy(&set([Role::S1])).unwrap() - 2.0).abs() < 1e-12);

        let point = JointPmf::new(vec![Role::S1], vec![a], vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(point.entropy(&set([Role::S1])).unwrap(), 0.0);
    }

    #[test]
    fn entropy_bounded_by_log_alphabet() {
        let mut rng = rng_from(11);
        for _ in 0..50 {
            let pmf = random_pmf(&mut rng, &[Role::S1, Role::S2], &[3, 3]);
            let h = pmf.entropy(&set([Role::S1, Role::S2])).unwrap();
            assert!(h >= 0.0 && h <= (9f64).log2() + 1e-12);
        }
    }

    #[test]
    fn conditional_entropy_functional_dependence_is_zero() {
        // S2 = S1 (copy): H(S2 | S1) = 0.
        let a = FiniteAlphabet::indexed(2);
        let mut probs = vec![0.0; 4];
        probs[0] = 0.5; // (0,0)
        probs[3] = 0.5; // (1,1)
        let pmf = JointPmf::new(vec![Role::S1, Role::S2], vec![a.clone(), a], probs).unwrap();
        let h = pmf
            .conditional_entropy(&set([Role::S2]), &set([Role::S1]))
            .unwrap();
        assert!(h.abs() < 1e-12);
    }

    #[test]
    fn mutual_information_independent_and_copy() {
        let a = FiniteAlphabet::indexed(2);
        // independent uniform bits
        let ind = JointPmf::new(
            vec![Role::S1, Role::S2],
            vec![a.clone(), a.clone()],
            vec![0.25; 4],
        )
        .unwrap();
        let i = ind
            .conditional_mutual_information(&set([Role::S1]), &set([Role::S2]), &set([]))
            .unwrap();
        assert!(i.abs() < 1e-12);

        // perfectly correlated bits
        let copy = JointPmf::new(
            vec![Role::S1, Role::S2],
            vec![a.clone(), a],
            vec![0.5, 0.0, 0.0, 0.5],
        )
        .unwrap();
        let i = copy
            .conditional_mutual_information(&set([Role::S1]), &set([Role::S2]), &set([]))
            .unwrap();
        assert!((i - 1.0).abs() < 1e-12);
    }

    #[test]
    fn overlapping_sets_rejected() {
        let a = FiniteAlphabet::indexed(2);
        let pmf = JointPmf::new(
            vec![Role::S1, Role::S2],
            vec![a.clone(), a],
            vec![0.25; 4],
        )
        .unwrap();
        assert!(pmf
            .conditional_entropy(&set([Role::S1]), &set([Role::S1, Role::S2]))
            .is_err());
        assert!(pmf
            .conditional_mutual_information(&set([Role::S1]), &set([Role::S1]), &set([]))
            .is_err());
        assert!(pmf.entropy(&set([Role::Y1])).is_err());
    }

    #[test]
    fn chain_rule_on_random_pmfs() {
        // H(A,B) = H(A) + H(B|A) on 100 seeded samples.
        let mut rng = rng_from(7);
        for _ in 0..100 {
            let na = rng.gen_range(2..=3);
            let nb = rng.gen_range(2..=3);
            let pmf = random_pmf(&mut rng, &[Role::S1, Role::S2], &[na, nb]);
            let hab = pmf.entropy(&set([Role::S1, Role::S2])).unwrap();
            let ha = pmf.entropy(&set([Role::S1])).unwrap();
            let hb_a = pmf
                .conditional_entropy(&set([Role::S2]), &set([Role::S1]))
                .unwrap();
            assert!((hab - ha - hb_a).abs() < 1e-9);
        }
    }

    #[test]
    fn nonnegativity_on_random_pmfs() {
        let mut rng = rng_from(8);
        for _ in 0..100 {
            let pmf = random_pmf(&mut rng, &[Role::S1, Role::S2, Role::Y1], &[2, 3, 2]);
            for target in [set([Role::S1]), set([Role::S2, Role::Y1])] {
                assert!(pmf.entropy(&target).unwrap() >= -1e-12);
            }
            let h = pmf
                .conditional_entropy(&set([Role::S1]), &set([Role::Y1]))
                .unwrap();
            assert!(h >= -1e-12);
            let i = pmf
                .conditional_mutual_information(&set([Role::S1]), &set([Role::S2]), &set([Role::Y1]))
                .unwrap();
            assert!(i >= -1e-12);
        }
    }

    #[test]
    fn cmi_symmetric_in_arguments() {
        let mut rng = rng_from(9);
        for _ in 0..50 {
            let pmf = random_pmf(&mut rng, &[Role::S1, Role::S2, Role::Y1], &[2, 2, 3]);
            let ab = pmf
                .conditional_mutual_information(&set([Role::S1]), &set([Role::S2]), &set([Role::Y1]))
                .unwrap();
            let ba = pmf
                .conditional_mutual_information(&set([Role::S2]), &set([Role::S1]), &set([Role::Y1]))
                .unwrap();
            assert!((ab - ba).abs() < 1e-12);
        }
    }

    #[test]
    fn marginalization_consistency() {
        // entropy(targets) from the full table equals entropy computed from
        // the explicitly marginalized table, exactly.
        let mut rng = rng_from(10);
        for _ in 0..100 {
            let pmf = random_pmf(&mut rng, &[Role::S1, Role::S2, Role::Y1], &[3, 2, 2]);
            let target = set([Role::S1, Role::Y1]);
            let direct = pmf.entropy(&target).unwrap();
            let marginal = pmf.marginalize(&target).unwrap();
            let via_marginal = marginal.entropy(&target).unwrap();
            assert_eq!(direct, via_marginal);
        }
    }

    #[test]
    fn data_processing_for_degraded_side_information() {
        // Y2 generated from Y1 by a channel: I(W;Y2) <= I(W;Y1) for every
        // deterministic W = f(S1,S2); checked by enumerating all binary maps.
        let mut rng = rng_from(12);
        for _ in 0..10 {
            let pmf = crate::testutil::random_degraded_source(&mut rng, 2, 2, 2, 2);
            let n_cells = 4; // |S1| * |S2|
            for mask in 0..(1u32 << n_cells) {
                // build joint of (W, Y1, Y2) by summation
                let mut w_y = [[[0.0f64; 2]; 2]; 2];
                let sizes = [2usize, 2, 2, 2];
                let mut idx = [0usize; 4];
                for &p in pmf.probs() {
                    let cell = idx[0] * 2 + idx[1];
                    let w = ((mask >> cell) & 1) as usize;
                    w_y[w][idx[2]][idx[3]] += p;
                    for d in (0..4).rev() {
                        idx[d] += 1;
                        if idx[d] < sizes[d] {
                            break;
                        }
                        idx[d] = 0;
                    }
                }
                let mi = |sel: usize| -> f64 {
                    let mut joint = [[0.0f64; 2]; 2];
                    #[allow(clippy::needless_range_loop)]
                    for w in 0..2 {
                        for y1 in 0..2 {
                            for y2 in 0..2 {
                                let y = if sel == 0 { y1 } else { y2 };
                                joint[w][y] += w_y[w][y1][y2];
                            }
                        }
                    }
                    let h = |v: &[f64]| -> f64 {
                        v.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum()
                    };
                    let pw = [joint[0][0] + joint[0][1], joint[1][0] + joint[1][1]];
                    let py = [joint[0][0] + joint[1][0], joint[0][1] + joint[1][1]];
                    h(&pw) + h(&py) - h(&[joint[0][0], joint[0][1], joint[1][0], joint[1][1]])
                };
                assert!(mi(1) <= mi(0) + 1e-9, "I(W;Y2) > I(W;Y1) for mask {mask}");
            }
        }
    }

    #[test]
    fn invalid_tables_rejected() {
        let a = FiniteAlphabet::indexed(2);
        assert!(matches!(
            JointPmf::new(vec![Role::S1], vec![a.clone()], vec![0.6, 0.6]),
            Err(Error::NotNormalized { .. })
        ));
        assert!(matches!(
            JointPmf::new(vec![Role::S1], vec![a.clone()], vec![1.2, -0.2]),
            Err(Error::NegativeProbability(_))
        ));
        assert!(JointPmf::new(vec![Role::S1], vec![a], vec![0.5, 0.25, 0.25]).is_err());
        assert!(FiniteAlphabet::new(["a", "a"]).is_err());
    }
}
