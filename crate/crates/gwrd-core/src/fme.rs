//! Exact-rational Fourier-Motzkin elimination over linear inequality systems
//! whose right-hand sides are affine expressions in named symbolic constants.
//!
//! Rows are stored in the canonical sense `Σ coeff·var ≥ rhs`. Equalities are
//! substituted out by a Gaussian step before any pairing happens. All
//! arithmetic is over arbitrary-precision rationals, so a projection
//! preserves the feasible set exactly for every assignment of the symbolic
//! constants.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, Zero};
use serde_json::{json, Map, Value};

use crate::error::Error;

pub type Rat = BigRational;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_from_f64(v: f64) -> Rat {
    Rat::from_f64(v).expect("finite float converts exactly")
}

fn parse_rat(s: &str) -> Result<Rat, Error> {
    let parse_int = |t: &str| {
        t.trim()
            .parse::<BigInt>()
            .map_err(|e| Error::Io(format!("bad rational {s:?}: {e}")))
    };
    match s.split_once('/') {
        Some((n, d)) => {
            let den = parse_int(d)?;
            if den.is_zero() {
                return Err(Error::Io(format!("bad rational {s:?}: zero denominator")));
            }
            Ok(Rat::new(parse_int(n)?, den))
        }
        None => Ok(Rat::from(parse_int(s)?)),
    }
}

fn rat_to_string(r: &Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// `constant + Σ coeff · named-constant`, the right-hand side of a row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolicAffine {
    pub constant: Rat,
    pub terms: BTreeMap<String, Rat>,
}

impl SymbolicAffine {
    pub fn zero() -> Self {
        Self {
            constant: Rat::zero(),
            terms: BTreeMap::new(),
        }
    }

    pub fn from_rat(constant: Rat) -> Self {
        Self {
            constant,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_const(name: &str) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(name.to_string(), Rat::one());
        Self {
            constant: Rat::zero(),
            terms,
        }
    }

    pub fn scaled(&self, factor: &Rat) -> Self {
        if factor.is_zero() {
            return Self::zero();
        }
        Self {
            constant: &self.constant * factor,
            terms: self
                .terms
                .iter()
                .map(|(k, v)| (k.clone(), v * factor))
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.constant += &other.constant;
        for (k, v) in &other.terms {
            let entry = out.terms.entry(k.clone()).or_insert_with(Rat::zero);
            *entry += v;
        }
        out.prune();
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scaled(&-Rat::one()))
    }

    fn prune(&mut self) {
        self.terms.retain(|_, v| !v.is_zero());
    }

    pub fn is_zero(&self) -> bool {
        self.constant.is_zero() && self.terms.is_empty()
    }

    /// Numeric value once every named constant has a value.
    pub fn evaluate(&self, values: &BTreeMap<String, Rat>) -> Result<Rat, Error> {
        let mut out = self.constant.clone();
        for (name, coeff) in &self.terms {
            let v = values
                .get(name)
                .ok_or_else(|| Error::Io(format!("missing constant {name:?}")))?;
            out += coeff * v;
        }
        Ok(out)
    }

    fn to_json(&self) -> Value {
        let mut terms = Map::new();
        for (k, v) in &self.terms {
            terms.insert(k.clone(), Value::String(rat_to_string(v)));
        }
        json!({ "const": rat_to_string(&self.constant), "terms": terms })
    }

    fn from_json(v: &Value) -> Result<Self, Error> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Io("rhs must be an object".into()))?;
        let constant = match obj.get("const") {
            Some(Value::String(s)) => parse_rat(s)?,
            Some(other) => return Err(Error::Io(format!("bad rhs constant {other}"))),
            None => Rat::zero(),
        };
        let mut terms = BTreeMap::new();
        if let Some(Value::Object(map)) = obj.get("terms") {
            for (k, v) in map {
                let s = v
                    .as_str()
                    .ok_or_else(|| Error::Io(format!("bad coefficient for {k:?}")))?;
                let r = parse_rat(s)?;
                if !r.is_zero() {
                    terms.insert(k.clone(), r);
                }
            }
        }
        Ok(Self { constant, terms })
    }
}

/// One row `Σ coeffs·var ≥ rhs` (or `= rhs` inside the equality list).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearInequality {
    pub coeffs: BTreeMap<String, Rat>,
    pub rhs: SymbolicAffine,
}

impl LinearInequality {
    pub fn new(coeffs: impl IntoIterator<Item = (String, Rat)>, rhs: SymbolicAffine) -> Self {
        let mut c: BTreeMap<String, Rat> = BTreeMap::new();
        for (k, v) in coeffs {
            if !v.is_zero() {
                c.insert(k, v);
            }
        }
        Self { coeffs: c, rhs }
    }

    fn coeff(&self, var: &str) -> Rat {
        self.coeffs.get(var).cloned().unwrap_or_else(Rat::zero)
    }

    /// `factor > 0` scaling, preserving the sense.
    fn scaled(&self, factor: &Rat) -> Self {
        debug_assert!(factor.is_positive());
        Self {
            coeffs: self
                .coeffs
                .iter()
                .map(|(k, v)| (k.clone(), v * factor))
                .collect(),
            rhs: self.rhs.scaled(factor),
        }
    }

    fn add(&self, other: &Self) -> Self {
        let mut coeffs = self.coeffs.clone();
        for (k, v) in &other.coeffs {
            let entry = coeffs.entry(k.clone()).or_insert_with(Rat::zero);
            *entry += v;
        }
        coeffs.retain(|_, v| !v.is_zero());
        Self {
            coeffs,
            rhs: self.rhs.add(&other.rhs),
        }
    }

    /// Scales variable coefficients to coprime integers (positive factor only,
    /// so the sense is unchanged).
    fn normalized(&self) -> Self {
        if self.coeffs.is_empty() {
            return self.clone();
        }
        let mut denom_lcm = BigInt::one();
        for v in self.coeffs.values() {
            denom_lcm = denom_lcm.lcm(v.denom());
        }
        let mut numer_gcd = BigInt::zero();
        for v in self.coeffs.values() {
            let scaled = v * Rat::from(denom_lcm.clone());
            numer_gcd = numer_gcd.gcd(scaled.numer());
        }
        if numer_gcd.is_zero() {
            return self.clone();
        }
        let factor = Rat::new(denom_lcm, numer_gcd);
        self.scaled(&factor)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearEquality {
    pub coeffs: BTreeMap<String, Rat>,
    pub rhs: SymbolicAffine,
}

/// A system of inequalities and equalities over named variables, with a set
/// of facts about the symbolic constants (names declared nonnegative, plus
/// optional affine combinations known to be nonnegative).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    /// Declaration order; doubles as the default elimination order.
    pub vars: Vec<String>,
    pub consts: Vec<String>,
    pub assume_nonneg: BTreeSet<String>,
    /// Extra affine expressions in the constants known to be `≥ 0`.
    pub assume_nonneg_affine: Vec<SymbolicAffine>,
    pub inequalities: Vec<LinearInequality>,
    pub equalities: Vec<LinearEquality>,
}

impl LinearSystem {
    pub fn has_var(&self, var: &str) -> bool {
        self.vars.iter().any(|v| v == var)
    }

    /// Nonnegativity facts available to sign decisions.
    fn facts(&self) -> Vec<SymbolicAffine> {
        let mut facts: Vec<SymbolicAffine> = self
            .assume_nonneg
            .iter()
            .map(|c| SymbolicAffine::from_const(c))
            .collect();
        facts.extend(self.assume_nonneg_affine.iter().cloned());
        facts
    }

    /// Conservative test that `a ≥ 0` holds for every constant assignment
    /// consistent with the declared facts: tries to write `a` as a
    /// nonnegative combination of facts plus a coefficient-wise nonnegative
    /// remainder. Returns `false` whenever no decomposition is found.
    fn decidably_nonneg(&self, a: &SymbolicAffine) -> bool {
        fn base_case(a: &SymbolicAffine, assumed: &BTreeSet<String>) -> bool {
            !a.constant.is_negative()
                && a.terms
                    .iter()
                    .all(|(name, coeff)| !coeff.is_negative() && assumed.contains(name))
        }
        fn search(
            a: &SymbolicAffine,
            facts: &[SymbolicAffine],
            assumed: &BTreeSet<String>,
            depth: usize,
        ) -> bool {
            if base_case(a, assumed) {
                return true;
            }
            if depth == 0 {
                return false;
            }
            for f in facts {
                for (name, fc) in &f.terms {
                    if fc.is_negative() {
                        if let Some(ac) = a.terms.get(name) {
                            if ac.is_negative() {
                                // subtract λ·f with λ = ac/fc > 0 to zero the
                                // negative coefficient on `name`
                                let lambda = ac / fc;
                                let reduced = a.sub(&f.scaled(&lambda));
                                if search(&reduced, facts, assumed, depth - 1) {
                                    return true;
                                }
                            }
                        }
                    }
                }
            }
            false
        }
        search(a, &self.facts(), &self.assume_nonneg, 4)
    }

    fn decidably_nonpos(&self, a: &SymbolicAffine) -> bool {
        self.decidably_nonneg(&a.scaled(&-Rat::one()))
    }

    /// Scales rows, removes duplicates, vacuous rows and rows dominated by a
    /// single other row (optionally shifted by explicit `x ≥ 0`-style rows).
    pub fn canonicalize(&self) -> LinearSystem {
        let mut out = self.clone();
        for row in &mut out.inequalities {
            *row = row.normalized();
        }
        for eq in &mut out.equalities {
            // equalities may flip sign freely; normalize the leading
            // coefficient positive for a stable form
            let ineq = LinearInequality {
                coeffs: eq.coeffs.clone(),
                rhs: eq.rhs.clone(),
            }
            .normalized();
            let flip = ineq
                .coeffs
                .values()
                .next()
                .is_some_and(|v| v.is_negative());
            let (coeffs, rhs) = if flip {
                (
                    ineq.coeffs
                        .iter()
                        .map(|(k, v)| (k.clone(), -v.clone()))
                        .collect(),
                    ineq.rhs.scaled(&-Rat::one()),
                )
            } else {
                (ineq.coeffs, ineq.rhs)
            };
            eq.coeffs = coeffs;
            eq.rhs = rhs;
        }

        // vacuous variable-free rows `0 ≥ rhs` with rhs decidably ≤ 0
        let checker = out.clone();
        out.inequalities
            .retain(|row| !(row.coeffs.is_empty() && checker.decidably_nonpos(&row.rhs)));

        // exact duplicates
        let mut seen: Vec<LinearInequality> = Vec::new();
        for row in out.inequalities.drain(..) {
            if !seen.contains(&row) {
                seen.push(row);
            }
        }
        out.inequalities = seen;

        // single-row domination: drop row B when some row A has
        // coeffs(B) − coeffs(A) entrywise ≥ 0 supported on variables with an
        // explicit `v ≥ (nonneg)` row, and rhs(B) ≤ rhs(A) under the facts.
        // Rows serving as the `v ≥ (nonneg)` witnesses must stay: removing
        // one through a shift would justify the removal with itself.
        let is_witness = |r: &LinearInequality| {
            r.coeffs.len() == 1
                && r.coeffs.values().next().unwrap().is_positive()
                && out.decidably_nonneg(&r.rhs)
        };
        let nonneg_vars: BTreeSet<String> = out
            .inequalities
            .iter()
            .filter(|r| is_witness(r))
            .map(|r| r.coeffs.keys().next().unwrap().clone())
            .collect();
        let witness: Vec<bool> = out.inequalities.iter().map(is_witness).collect();
        let rows = out.inequalities.clone();
        let mut keep = vec![true; rows.len()];
        for b in 0..rows.len() {
            'search: for a in 0..rows.len() {
                if a == b || !keep[a] {
                    continue;
                }
                // compute diff = coeffs(B) − coeffs(A)
                let mut diff: BTreeMap<&String, Rat> = BTreeMap::new();
                for (k, v) in &rows[b].coeffs {
                    diff.insert(k, v.clone());
                }
                for (k, v) in &rows[a].coeffs {
                    let entry = diff.entry(k).or_insert_with(Rat::zero);
                    *entry -= v;
                }
                diff.retain(|_, v| !v.is_zero());
                for (k, v) in &diff {
                    if v.is_negative() || !nonneg_vars.contains(*k) {
                        continue 'search;
                    }
                }
                // same-coefficient rows must not knock each other out both
                // ways; prefer keeping the earlier row on ties
                if diff.is_empty() && b < a {
                    continue;
                }
                if !diff.is_empty() && witness[b] {
                    continue;
                }
                if out.decidably_nonneg(&rows[a].rhs.sub(&rows[b].rhs)) {
                    keep[b] = false;
                    break;
                }
            }
        }
        let (rows, witness): (Vec<LinearInequality>, Vec<bool>) = rows
            .into_iter()
            .zip(witness)
            .zip(keep)
            .filter_map(|(rw, k)| k.then_some(rw))
            .unzip();

        // pair domination: a row implied by the sum of two surviving rows
        // (again up to nonnegative-variable shifts) is redundant
        let mut keep = vec![true; rows.len()];
        for b in 0..rows.len() {
            if witness[b] {
                continue;
            }
            'pairs: for a1 in 0..rows.len() {
                for a2 in a1..rows.len() {
                    if a1 == b || a2 == b || !keep[a1] || !keep[a2] {
                        continue;
                    }
                    let mut diff: BTreeMap<&String, Rat> = BTreeMap::new();
                    for (k, v) in &rows[b].coeffs {
                        diff.insert(k, v.clone());
                    }
                    for src in [&rows[a1], &rows[a2]] {
                        for (k, v) in &src.coeffs {
                            let entry = diff.entry(k).or_insert_with(Rat::zero);
                            *entry -= v;
                        }
                    }
                    diff.retain(|_, v| !v.is_zero());
                    if diff
                        .iter()
                        .any(|(k, v)| v.is_negative() || !nonneg_vars.contains(*k))
                    {
                        continue;
                    }
                    let rhs_sum = rows[a1].rhs.add(&rows[a2].rhs);
                    if out.decidably_nonneg(&rhs_sum.sub(&rows[b].rhs)) {
                        keep[b] = false;
                        break 'pairs;
                    }
                }
            }
        }
        out.inequalities = rows
            .into_iter()
            .zip(keep)
            .filter_map(|(r, k)| k.then_some(r))
            .collect();
        out
    }

    /// Substitutes `var` using an equality that mentions it. Returns `true`
    /// when a substitution happened.
    fn substitute_equality(&mut self, var: &str) -> bool {
        let Some(pos) = self
            .equalities
            .iter()
            .position(|eq| eq.coeffs.get(var).is_some_and(|c| !c.is_zero()))
        else {
            return false;
        };
        let eq = self.equalities.remove(pos);
        let c_var = eq.coeffs.get(var).cloned().unwrap();
        // var = (rhs − Σ_{u≠var} c_u·u) / c_var
        let inv = Rat::one() / c_var;
        let expr_rhs = eq.rhs.scaled(&inv);
        let expr_vars: BTreeMap<String, Rat> = eq
            .coeffs
            .iter()
            .filter(|(k, _)| k.as_str() != var)
            .map(|(k, v)| (k.clone(), -(v * &inv)))
            .collect();

        let substitute =
            |coeffs: &mut BTreeMap<String, Rat>, rhs: &mut SymbolicAffine| {
                let Some(a) = coeffs.remove(var) else { return };
                if a.is_zero() {
                    return;
                }
                for (k, e) in &expr_vars {
                    let entry = coeffs.entry(k.clone()).or_insert_with(Rat::zero);
                    *entry += &a * e;
                }
                coeffs.retain(|_, v| !v.is_zero());
                *rhs = rhs.sub(&expr_rhs.scaled(&a));
            };
        for row in &mut self.inequalities {
            substitute(&mut row.coeffs, &mut row.rhs);
        }
        for eq in &mut self.equalities {
            substitute(&mut eq.coeffs, &mut eq.rhs);
        }
        self.vars.retain(|v| v != var);
        true
    }

    /// Fourier-Motzkin elimination of one variable. A variable absent from
    /// the system is a no-op; a variable pinned by an equality is substituted
    /// out instead of paired.
    pub fn eliminate(&self, var: &str) -> LinearSystem {
        let mut sys = self.clone();
        if !sys.has_var(var) {
            return sys;
        }
        if sys.substitute_equality(var) {
            return sys.canonicalize();
        }
        let mut lowers: Vec<LinearInequality> = Vec::new(); // coeff > 0
        let mut uppers: Vec<LinearInequality> = Vec::new(); // coeff < 0
        let mut rest: Vec<LinearInequality> = Vec::new();
        for row in sys.inequalities.drain(..) {
            let c = row.coeff(var);
            if c.is_positive() {
                lowers.push(row);
            } else if c.is_negative() {
                uppers.push(row);
            } else {
                rest.push(row);
            }
        }
        for lo in &lowers {
            for up in &uppers {
                let a = lo.coeff(var); // > 0
                let b = up.coeff(var); // < 0
                // |b|·lo + a·up clears the variable; both multipliers > 0
                let combined = lo.scaled(&-b.clone()).add(&up.scaled(&a));
                debug_assert!(combined.coeff(var).is_zero());
                rest.push(combined);
            }
        }
        sys.inequalities = rest;
        sys.vars.retain(|v| v != var);
        sys.canonicalize()
    }

    /// Eliminates every variable not in `keep`, in the given order (defaults
    /// to declaration order), canonicalizing after each step.
    pub fn project(&self, keep: &[String], order: Option<&[String]>) -> Result<LinearSystem, Error> {
        for k in keep {
            if !self.has_var(k) {
                return Err(Error::Io(format!("unknown variable {k:?} in keep set")));
            }
        }
        let default_order: Vec<String> = self
            .vars
            .iter()
            .filter(|v| !keep.contains(v))
            .cloned()
            .collect();
        let order: Vec<String> = match order {
            Some(o) => o.to_vec(),
            None => default_order,
        };
        let mut sys = self.canonicalize();
        // equalities first, pinned to variables outside the keep set
        while let Some(eq) = sys
            .equalities
            .iter()
            .find(|eq| eq.coeffs.keys().any(|v| !keep.contains(v)))
        {
            // substitute the last-declared eliminable variable
            let var = sys
                .vars
                .iter()
                .rev()
                .find(|v| !keep.contains(v) && eq.coeffs.contains_key(*v))
                .cloned()
                .expect("equality mentions an eliminable variable");
            sys.substitute_equality(&var);
            sys = sys.canonicalize();
        }
        for var in &order {
            if sys.has_var(var) && !keep.contains(var) {
                sys = sys.eliminate(var);
            }
        }
        // any eliminable variable not named in the order
        let leftovers: Vec<String> = sys
            .vars
            .iter()
            .filter(|v| !keep.contains(v))
            .cloned()
            .collect();
        for var in leftovers {
            sys = sys.eliminate(&var);
        }
        Ok(sys)
    }

    /// Substitutes numeric values for every symbolic constant.
    pub fn instantiate(&self, values: &BTreeMap<String, Rat>) -> Result<LinearSystem, Error> {
        let mut out = self.clone();
        for row in &mut out.inequalities {
            row.rhs = SymbolicAffine::from_rat(row.rhs.evaluate(values)?);
        }
        for eq in &mut out.equalities {
            eq.rhs = SymbolicAffine::from_rat(eq.rhs.evaluate(values)?);
        }
        for fact in &mut out.assume_nonneg_affine {
            *fact = SymbolicAffine::from_rat(fact.evaluate(values)?);
        }
        out.consts.clear();
        out.assume_nonneg.clear();
        out.assume_nonneg_affine.retain(|f| !f.is_zero());
        Ok(out)
    }

    /// Whether a full rational assignment satisfies every row. Only valid on
    /// numeric (instantiated) systems.
    pub fn satisfied_by(&self, assignment: &BTreeMap<String, Rat>) -> Result<bool, Error> {
        let eval = |coeffs: &BTreeMap<String, Rat>| -> Result<Rat, Error> {
            let mut lhs = Rat::zero();
            for (v, c) in coeffs {
                let x = assignment
                    .get(v)
                    .ok_or_else(|| Error::Io(format!("assignment misses variable {v:?}")))?;
                lhs += c * x;
            }
            Ok(lhs)
        };
        for row in &self.inequalities {
            if !row.rhs.terms.is_empty() {
                return Err(Error::Io("system is not numeric".into()));
            }
            if eval(&row.coeffs)? < row.rhs.constant {
                return Ok(false);
            }
        }
        for eq in &self.equalities {
            if eval(&eq.coeffs)? != eq.rhs.constant {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// JSON form; equalities are expanded into two inequality rows.
    pub fn to_json(&self) -> Value {
        let mut rows: Vec<Value> = Vec::new();
        let row_json = |coeffs: &BTreeMap<String, Rat>, rhs: &SymbolicAffine| {
            let mut c = Map::new();
            for (k, v) in coeffs {
                c.insert(k.clone(), Value::String(rat_to_string(v)));
            }
            json!({ "coeffs": c, "rhs": rhs.to_json() })
        };
        for r in &self.inequalities {
            rows.push(row_json(&r.coeffs, &r.rhs));
        }
        for eq in &self.equalities {
            rows.push(row_json(&eq.coeffs, &eq.rhs));
            let neg: BTreeMap<String, Rat> = eq
                .coeffs
                .iter()
                .map(|(k, v)| (k.clone(), -v.clone()))
                .collect();
            rows.push(row_json(&neg, &eq.rhs.scaled(&-Rat::one())));
        }
        let mut doc = Map::new();
        doc.insert("vars".into(), json!(self.vars));
        doc.insert("consts".into(), json!(self.consts));
        doc.insert(
            "assume_nonneg".into(),
            json!(self.assume_nonneg.iter().collect::<Vec<_>>()),
        );
        if !self.assume_nonneg_affine.is_empty() {
            doc.insert(
                "assume_nonneg_affine".into(),
                Value::Array(self.assume_nonneg_affine.iter().map(|a| a.to_json()).collect()),
            );
        }
        doc.insert("rows".into(), Value::Array(rows));
        Value::Object(doc)
    }

    pub fn from_json(v: &Value) -> Result<Self, Error> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Io("system must be a JSON object".into()))?;
        let str_list = |key: &str| -> Result<Vec<String>, Error> {
            match obj.get(key) {
                None => Ok(Vec::new()),
                Some(Value::Array(items)) => items
                    .iter()
                    .map(|i| {
                        i.as_str()
                            .map(String::from)
                            .ok_or_else(|| Error::Io(format!("{key} entries must be strings")))
                    })
                    .collect(),
                Some(_) => Err(Error::Io(format!("{key} must be an array"))),
            }
        };
        let vars = str_list("vars")?;
        let consts = str_list("consts")?;
        let assume_nonneg: BTreeSet<String> = str_list("assume_nonneg")?.into_iter().collect();
        let mut assume_nonneg_affine = Vec::new();
        if let Some(Value::Array(items)) = obj.get("assume_nonneg_affine") {
            for i in items {
                assume_nonneg_affine.push(SymbolicAffine::from_json(i)?);
            }
        }
        let mut inequalities = Vec::new();
        if let Some(Value::Array(items)) = obj.get("rows") {
            for item in items {
                let row = item
                    .as_object()
                    .ok_or_else(|| Error::Io("each row must be an object".into()))?;
                let mut coeffs = BTreeMap::new();
                if let Some(Value::Object(map)) = row.get("coeffs") {
                    for (k, v) in map {
                        if !vars.contains(k) {
                            return Err(Error::Io(format!("row uses undeclared variable {k:?}")));
                        }
                        let s = v
                            .as_str()
                            .ok_or_else(|| Error::Io(format!("bad coefficient for {k:?}")))?;
                        let r = parse_rat(s)?;
                        if !r.is_zero() {
                            coeffs.insert(k.clone(), r);
                        }
                    }
                }
                let rhs = match row.get("rhs") {
                    Some(r) => SymbolicAffine::from_json(r)?,
                    None => SymbolicAffine::zero(),
                };
                inequalities.push(LinearInequality { coeffs, rhs });
            }
        }
        Ok(Self {
            vars,
            consts,
            assume_nonneg,
            assume_nonneg_affine,
            inequalities,
            equalities: Vec::new(),
        })
    }
}

/// Names of the five information constants of the achievability system.
pub mod consts {
    /// `I(V0; S1,S2)` — covering rate of the common description.
    pub const C_A: &str = "I(V0;S1S2)";
    /// `I(U1; S1,S2 | V0)` — covering rate of the individual description.
    pub const C_B: &str = "I(U1;S1S2|V0)";
    /// `I(V0; Y1)` — packing budget of decoder 1 for the common layer.
    pub const C_1: &str = "I(V0;Y1)";
    /// `I(V0; Y2)` — packing budget of decoder 2.
    pub const C_2: &str = "I(V0;Y2)";
    /// `I(U1; Y1 | V0)` — packing budget of decoder 1 for the refinement.
    pub const C_D: &str = "I(U1;Y1|V0)";

    pub const ALL: [&str; 5] = [C_A, C_B, C_1, C_2, C_D];
}

/// How the message-rate relations enter the system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateRelation {
    /// `R0 = R̃00 + R̃10` etc., the parameter identities of the scheme.
    Exact,
    /// `R0 ≥ R̃00 + R̃10` etc. Any rate triple above a realizable one is
    /// achievable (extra rate can be left unused), so the projected region
    /// is the upward closure of the exact one; relaxing the equalities builds
    /// that closure directly and keeps rate-upper-bound rows out of the
    /// projection.
    UpwardClosed,
}

/// The encoding/decoding constraint system of the double-binning scheme:
/// codebook splits, bin-rate ranges, covering and packing constraints, and
/// the message-rate relations.
pub fn build_achievability_system_with(relation: RateRelation) -> LinearSystem {
    let v = |name: &str| name.to_string();
    let one = Rat::one;
    let neg = || -Rat::one();

    let vars: Vec<String> = [
        "T00", "T0p", "T10", "T11", "T0", "T1", "Rb00", "Rb01", "Rb02", "Rb10", "Rb11", "R0",
        "R1", "R2",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();

    let mut ineq: Vec<LinearInequality> = Vec::new();
    let mut push = |coeffs: Vec<(&str, Rat)>, rhs: SymbolicAffine| {
        ineq.push(LinearInequality::new(
            coeffs.into_iter().map(|(k, c)| (v(k), c)),
            rhs,
        ));
    };

    // 0 ≤ bin rate ≤ its codebook split
    for (bin, split) in [
        ("Rb00", "T00"),
        ("Rb01", "T0p"),
        ("Rb02", "T0p"),
        ("Rb10", "T10"),
        ("Rb11", "T11"),
    ] {
        push(vec![(bin, one())], SymbolicAffine::zero());
        push(vec![(split, one()), (bin, neg())], SymbolicAffine::zero());
    }
    // covering
    push(vec![("T0", one())], SymbolicAffine::from_const(consts::C_A));
    push(vec![("T1", one())], SymbolicAffine::from_const(consts::C_B));
    // packing, rewritten as ≥ rows
    push(
        vec![("T00", neg()), ("Rb00", one()), ("T0p", neg()), ("Rb01", one())],
        SymbolicAffine::from_const(consts::C_1).scaled(&-Rat::one()),
    );
    push(
        vec![("T00", neg()), ("Rb00", one()), ("T0p", neg()), ("Rb02", one())],
        SymbolicAffine::from_const(consts::C_2).scaled(&-Rat::one()),
    );
    push(
        vec![("T10", neg()), ("Rb10", one()), ("T11", neg()), ("Rb11", one())],
        SymbolicAffine::from_const(consts::C_D).scaled(&-Rat::one()),
    );

    let eq_rows: Vec<(Vec<(&str, Rat)>, SymbolicAffine)> = vec![
        (
            vec![("T0", one()), ("T00", neg()), ("T0p", neg())],
            SymbolicAffine::zero(),
        ),
        (
            vec![("T1", one()), ("T10", neg()), ("T11", neg())],
            SymbolicAffine::zero(),
        ),
        (
            vec![("R0", one()), ("Rb00", neg()), ("Rb10", neg())],
            SymbolicAffine::zero(),
        ),
        (
            vec![("R1", one()), ("Rb01", neg()), ("Rb11", neg())],
            SymbolicAffine::zero(),
        ),
        (
            vec![("R2", one()), ("Rb02", neg())],
            SymbolicAffine::zero(),
        ),
    ];

    let mut equalities = Vec::new();
    for (coeffs, rhs) in eq_rows {
        match relation {
            RateRelation::Exact => equalities.push(LinearEquality {
                coeffs: coeffs
                    .into_iter()
                    .map(|(k, c)| (v(k), c))
                    .filter(|(_, c)| !c.is_zero())
                    .collect(),
                rhs,
            }),
            RateRelation::UpwardClosed => {
                // the codebook splits stay equalities; only the message-rate
                // relations relax
                let is_rate = coeffs
                    .iter()
                    .any(|(k, _)| matches!(*k, "R0" | "R1" | "R2"));
                if is_rate {
                    ineq.push(LinearInequality::new(
                        coeffs.into_iter().map(|(k, c)| (v(k), c)),
                        rhs,
                    ));
                } else {
                    equalities.push(LinearEquality {
                        coeffs: coeffs
                            .into_iter()
                            .map(|(k, c)| (v(k), c))
                            .filter(|(_, c)| !c.is_zero())
                            .collect(),
                        rhs,
                    });
                }
            }
        }
    }

    LinearSystem {
        vars,
        consts: consts::ALL.iter().map(|s| s.to_string()).collect(),
        assume_nonneg: consts::ALL.iter().map(|s| s.to_string()).collect(),
        assume_nonneg_affine: Vec::new(),
        inequalities: ineq,
        equalities,
    }
}

/// The constraint system with the scheme's parameter identities taken as
/// equalities, exactly as stated.
pub fn build_achievability_system() -> LinearSystem {
    build_achievability_system_with(RateRelation::Exact)
}

/// Data-processing facts valid under the scheme's Markov chain
/// `(V0,U1) — (S1,S2) — (Y1,Y2)`: each packing budget is at most the
/// matching covering rate. Declaring them lets canonicalization discharge
/// rows that are redundant for every realizable constant assignment.
pub fn markov_nonneg_facts() -> Vec<SymbolicAffine> {
    let diff = |hi: &str, lo: &str| {
        SymbolicAffine::from_const(hi).sub(&SymbolicAffine::from_const(lo))
    };
    vec![
        diff(consts::C_A, consts::C_1),
        diff(consts::C_A, consts::C_2),
        diff(consts::C_B, consts::C_D),
    ]
}

/// The system [`build_achievability_system`] prepared for projection onto the
/// message rates: rate relations relaxed to the upward closure and the
/// data-processing facts declared.
pub fn achievability_system_for_projection() -> LinearSystem {
    let mut sys = build_achievability_system_with(RateRelation::UpwardClosed);
    sys.assume_nonneg_affine = markov_nonneg_facts();
    sys
}

/// The three projected inequalities in closed form, for cross-checks:
/// `R0+R1 ≥ ca+cb−c1−cd`, `R0+R2 ≥ ca−c2`,
/// `R0+R1+R2 ≥ max(ca−c1, ca−c2) + cb − cd`.
pub fn closed_form_region_membership(values: &BTreeMap<String, Rat>, r: [&Rat; 3]) -> bool {
    let get = |name: &str| values.get(name).cloned().unwrap_or_else(Rat::zero);
    let (ca, cb, c1, c2, cd) = (
        get(consts::C_A),
        get(consts::C_B),
        get(consts::C_1),
        get(consts::C_2),
        get(consts::C_D),
    );
    let sum01 = r[0] + r[1];
    let sum02 = r[0] + r[2];
    let total = r[0] + r[1] + r[2];
    let max_branch = {
        let a = &ca - &c1;
        let b = &ca - &c2;
        if a > b { a } else { b }
    };
    !r[0].is_negative()
        && !r[1].is_negative()
        && !r[2].is_negative()
        && sum01 >= &ca + &cb - &c1 - &cd
        && sum02 >= &ca - &c2
        && total >= max_branch + &cb - &cd
}
