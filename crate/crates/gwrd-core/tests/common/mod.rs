//! Machinery shared by the integration suites: the random-system
//! extendability oracle and the bridge between the projected scheme
//! constraints and the single-letter bounds.
//!
//! The oracle never touches the elimination algebra: it substitutes a kept
//! grid point into the *original* rows and searches the eliminated variables
//! directly over a lattice. With unit coefficients and right-hand sides on
//! the quarter grid, every nonempty feasible slice contains a point of the
//! 1/8 lattice (interval endpoints and basic solutions all have denominators
//! dividing 8), so the lattice search is exact rather than approximate.

use std::collections::BTreeMap;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};

use gwrd_core::aux::extend_with_aux;
use gwrd_core::fme::{
    achievability_system_for_projection, consts, rat, rat_from_f64, LinearInequality,
    LinearSystem, Rat, SymbolicAffine,
};
use gwrd_core::pmf::{JointPmf, Role, VariableSet};
use gwrd_core::region::{point_in_region, full_network_bounds, Variant};
use gwrd_core::search::derive_rng;
use gwrd_core::testutil::{random_channel, random_source};
use rand::Rng;

pub type Q = Ratio<i64>;

pub struct RandomSystem {
    pub n_vars: usize,
    /// rows as (coefficients per var, integer rhs)
    pub rows: Vec<(Vec<i64>, i64)>,
    pub keep: Vec<usize>,
    pub elim: Vec<usize>,
}

pub fn gen_system(seed: u64) -> RandomSystem {
    let mut rng = derive_rng(0xFE11, seed);
    let n_vars = rng.gen_range(3..=6);
    let n_rows = rng.gen_range(4..=10);
    let n_elim = rng.gen_range(1..=2usize.min(n_vars - 1));
    let mut rows = Vec::with_capacity(n_rows);
    for _ in 0..n_rows {
        let coeffs: Vec<i64> = (0..n_vars).map(|_| rng.gen_range(-1..=1)).collect();
        let rhs = rng.gen_range(-4..=4);
        rows.push((coeffs, rhs));
    }
    let elim: Vec<usize> = (0..n_elim).collect();
    let keep: Vec<usize> = (n_elim..n_vars).collect();
    RandomSystem {
        n_vars,
        rows,
        keep,
        elim,
    }
}

pub fn to_linear_system(sys: &RandomSystem) -> LinearSystem {
    let vars: Vec<String> = (0..sys.n_vars).map(|i| format!("x{i}")).collect();
    let inequalities = sys
        .rows
        .iter()
        .map(|(coeffs, rhs)| {
            LinearInequality::new(
                coeffs
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| **c != 0)
                    .map(|(i, c)| (format!("x{i}"), rat(*c, 1))),
                SymbolicAffine::from_rat(rat(*rhs, 1)),
            )
        })
        .collect();
    LinearSystem {
        vars,
        consts: vec![],
        assume_nonneg: Default::default(),
        assume_nonneg_affine: vec![],
        inequalities,
        equalities: vec![],
    }
}

/// Lattice of candidate values for an eliminated variable.
const LATTICE_DEN: i64 = 8;
const LATTICE_RANGE: i64 = 60;

/// Whether a kept-point extends to a full solution, by direct search.
pub fn oracle_extendable(sys: &RandomSystem, point: &[Q]) -> bool {
    // residual rows over the eliminated variables only
    let mut rows: Vec<(Vec<i64>, Q)> = Vec::new();
    for (coeffs, rhs) in &sys.rows {
        let mut resid = Q::from_integer(*rhs);
        for (slot, &var) in sys.keep.iter().enumerate() {
            resid -= Q::from_integer(coeffs[var]) * point[slot];
        }
        let elim_coeffs: Vec<i64> = sys.elim.iter().map(|&v| coeffs[v]).collect();
        if elim_coeffs.iter().all(|&c| c == 0) {
            if Q::zero() < resid {
                return false;
            }
        } else {
            rows.push((elim_coeffs, resid));
        }
    }
    match sys.elim.len() {
        0 => true,
        1 => interval_has_lattice_point(&rows),
        2 => {
            // enumerate the first variable over the lattice, solve the second
            // as an interval
            for num in -LATTICE_RANGE * LATTICE_DEN..=LATTICE_RANGE * LATTICE_DEN {
                let w = Q::new(num, LATTICE_DEN);
                let mut reduced: Vec<(Vec<i64>, Q)> = Vec::new();
                let mut direct_ok = true;
                for (c, r) in &rows {
                    let resid = r - Q::from_integer(c[0]) * w;
                    if c[1] == 0 {
                        if Q::zero() < resid {
                            direct_ok = false;
                            break;
                        }
                    } else {
                        reduced.push((vec![c[1]], resid));
                    }
                }
                if direct_ok && interval_has_lattice_point(&reduced) {
                    return true;
                }
            }
            false
        }
        _ => unreachable!("at most two eliminated variables generated"),
    }
}

/// Rows are (single-coefficient, residual rhs): `c·v ≥ r`. True when the
/// implied interval contains a 1/8-lattice point.
fn interval_has_lattice_point(rows: &[(Vec<i64>, Q)]) -> bool {
    let mut lower: Option<Q> = None; // v ≥ lower
    let mut upper: Option<Q> = None; // v ≤ upper
    for (c, r) in rows {
        let c = c[0];
        debug_assert!(c != 0);
        let bound = r / Q::from_integer(c);
        if c > 0 {
            lower = Some(match lower {
                Some(l) if l >= bound => l,
                _ => bound,
            });
        } else {
            upper = Some(match upper {
                Some(u) if u <= bound => u,
                _ => bound,
            });
        }
    }
    let den = Q::from_integer(LATTICE_DEN);
    let lo_tick = match &lower {
        Some(l) => (l * den).ceil().to_integer(),
        None => -LATTICE_RANGE * LATTICE_DEN,
    };
    let hi_tick = match &upper {
        Some(u) => (u * den).floor().to_integer(),
        None => LATTICE_RANGE * LATTICE_DEN,
    };
    lo_tick <= hi_tick
}

fn q_to_rat(q: Q) -> Rat {
    Rat::new((*q.numer()).into(), (*q.denom()).into())
}

/// Projection vs oracle on sampled kept-grid points; returns the number of
/// disagreements over `n_systems` random systems.
pub fn projection_oracle_disagreements(n_systems: u64, points_per_system: usize) -> usize {
    let mut disagreements = 0usize;
    for seed in 0..n_systems {
        let sys = gen_system(seed);
        let linear = to_linear_system(&sys);
        let keep: Vec<String> = sys.keep.iter().map(|i| format!("x{i}")).collect();
        let proj = linear.project(&keep, None).unwrap();

        let mut rng = derive_rng(0x0A11, seed);
        for _ in 0..points_per_system {
            let point: Vec<Q> = sys
                .keep
                .iter()
                .map(|_| Q::new(rng.gen_range(-16..=16), 4))
                .collect();
            let assignment: BTreeMap<String, Rat> = sys
                .keep
                .iter()
                .zip(&point)
                .map(|(i, q)| (format!("x{i}"), q_to_rat(*q)))
                .collect();
            let in_proj = proj.satisfied_by(&assignment).unwrap();
            let extendable = oracle_extendable(&sys, &point);
            if in_proj != extendable {
                disagreements += 1;
                eprintln!(
                    "seed {seed}: n_vars={} elim={:?} rows={:?} point {point:?} proj={in_proj} oracle={extendable}",
                    sys.n_vars, sys.elim, sys.rows
                );
            }
        }
    }
    disagreements
}

/// Measured constants of the double-binning scheme for a given extension,
/// with `V0 = (U0, S2)`.
pub fn measured_constants(ext: &JointPmf) -> BTreeMap<String, Rat> {
    measured_constants_f64(ext)
        .into_iter()
        .map(|(k, v)| (k, rat_from_f64(v)))
        .collect()
}

pub fn measured_constants_f64(ext: &JointPmf) -> BTreeMap<String, f64> {
    let v0 = VariableSet::from([Role::U0, Role::S2]);
    let s = VariableSet::from([Role::S1, Role::S2]);
    let u1 = VariableSet::from([Role::U1]);
    let y1 = VariableSet::from([Role::Y1]);
    let y2 = VariableSet::from([Role::Y2]);
    let none = VariableSet::empty();
    let mig = |a: &VariableSet, b: &VariableSet, g: &VariableSet| {
        ext.mutual_information_general(a, b, g).unwrap()
    };
    [
        (consts::C_A.to_string(), mig(&v0, &s, &none)),
        (consts::C_B.to_string(), mig(&u1, &s, &v0)),
        (consts::C_1.to_string(), mig(&v0, &y1, &none)),
        (consts::C_2.to_string(), mig(&v0, &y2, &none)),
        (consts::C_D.to_string(), mig(&u1, &y1, &v0)),
    ]
    .into_iter()
    .collect()
}

/// Membership agreement between the instantiated projection and the
/// single-letter bounds on sampled rate points; returns disagreements.
pub fn bridge_disagreements(n_trials: usize, points_per_trial: usize, seed: u64) -> usize {
    let keep: Vec<String> = ["R0", "R1", "R2"].iter().map(|s| s.to_string()).collect();
    let proj = achievability_system_for_projection()
        .project(&keep, None)
        .unwrap();

    let mut rng = derive_rng(0xB21D6E, seed);
    let mut disagreements = 0usize;
    for trial in 0..n_trials {
        let s1 = rng.gen_range(2..=3);
        let y2 = rng.gen_range(2..=3);
        let source = random_source(&mut rng, s1, 2, 2, y2);
        let u0 = rng.gen_range(1..=3);
        let u1 = rng.gen_range(1..=2);
        let chan = random_channel(&mut rng, &source, u0, u1);
        let ext = extend_with_aux(&source, &chan).unwrap();
        let bounds = full_network_bounds(&ext).unwrap();
        let numeric = proj.instantiate(&measured_constants(&ext)).unwrap();

        for _ in 0..points_per_trial {
            let r0 = rng.gen_range(0..=12) as f64 / 4.0;
            let r1 = rng.gen_range(0..=12) as f64 / 4.0;
            let r2 = rng.gen_range(0..=12) as f64 / 4.0;
            let point = gwrd_core::aux::RateDistortionPoint {
                r0,
                r1,
                r2,
                d1: 0.0,
            };
            let in_bounds = point_in_region(&point, &bounds, Variant::Gw);
            let values = [r0, r1, r2];
            // evaluate the projection with the same 1e-9 slack the bound
            // membership uses
            let in_proj = numeric.inequalities.iter().all(|row| {
                let lhs: f64 = row
                    .coeffs
                    .iter()
                    .map(|(v, c)| {
                        let idx = match v.as_str() {
                            "R0" => 0,
                            "R1" => 1,
                            _ => 2,
                        };
                        c.to_f64().unwrap() * values[idx]
                    })
                    .sum();
                lhs >= row.rhs.constant.to_f64().unwrap() - 1e-9
            });
            if in_proj != in_bounds {
                disagreements += 1;
                eprintln!("bridge trial {trial}: point ({r0}, {r1}, {r2})");
            }
        }
    }
    disagreements
}
