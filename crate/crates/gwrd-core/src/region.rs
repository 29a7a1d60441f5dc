//! Single-letter rate bounds for a fixed auxiliary channel, and membership
//! tests for rate points against them.
//!
//! Bounds are reported per inequality, not pre-maximized; membership applies
//! every inequality of the chosen variant. All functions take an extension
//! produced by [`crate::aux::extend_with_aux`].

use crate::aux::RateDistortionPoint;
use crate::error::Error;
use crate::pmf::{JointPmf, Role, VariableSet};

/// Which network the inequalities describe: the full two-receiver network
/// (`Gw`), the refinement-to-receiver-1 special case with `R2 = 0` (`Sr`),
/// or the refinement-to-receiver-2 special case with `R1 = 0` (`Sc`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Gw,
    Sr,
    Sc,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Gw => "gw",
            Variant::Sr => "sr",
            Variant::Sc => "sc",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "gw" => Some(Variant::Gw),
            "sr" => Some(Variant::Sr),
            "sc" => Some(Variant::Sc),
            _ => None,
        }
    }
}

/// Right-hand sides of the rate inequalities; a field is `None` when the
/// variant that produced the bounds has no such inequality.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RateBounds {
    /// Lower bound on `R0` alone (refinement variants only).
    pub b_r0: Option<f64>,
    /// Lower bound on `R0 + R1`.
    pub b_r0_r1: Option<f64>,
    /// Lower bound on `R0 + R2`.
    pub b_r0_r2: Option<f64>,
    /// Lower bound on the full sum (or on `R0 + R1` in the `Sr` variant).
    pub b_sum: Option<f64>,
}

fn set(roles: &[Role]) -> VariableSet {
    VariableSet::new(roles.iter().copied())
}

struct Terms {
    h_s2_y1: f64,
    h_s2_y2: f64,
    i_u0u1_s1_given_s2y1: f64,
    i_u0_s1_given_s2y2: f64,
    i_u1_s1_given_u0s2y1: f64,
}

fn terms(ext: &JointPmf) -> Result<Terms, Error> {
    for role in [Role::U0, Role::U1] {
        ext.alphabet(role)?;
    }
    Ok(Terms {
        h_s2_y1: ext.conditional_entropy(&set(&[Role::S2]), &set(&[Role::Y1]))?,
        h_s2_y2: ext.conditional_entropy(&set(&[Role::S2]), &set(&[Role::Y2]))?,
        i_u0u1_s1_given_s2y1: ext.conditional_mutual_information(
            &set(&[Role::U0, Role::U1]),
            &set(&[Role::S1]),
            &set(&[Role::S2, Role::Y1]),
        )?,
        i_u0_s1_given_s2y2: ext.conditional_mutual_information(
            &set(&[Role::U0]),
            &set(&[Role::S1]),
            &set(&[Role::S2, Role::Y2]),
        )?,
        i_u1_s1_given_u0s2y1: ext.conditional_mutual_information(
            &set(&[Role::U1]),
            &set(&[Role::S1]),
            &set(&[Role::U0, Role::S2, Role::Y1]),
        )?,
    })
}

/// Bounds of the full network:
/// `R0+R1 ≥ H(S2|Y1) + I(U0,U1; S1 | S2,Y1)`,
/// `R0+R2 ≥ H(S2|Y2) + I(U0; S1 | S2,Y2)`,
/// `R0+R1+R2 ≥ H(S2|Y2) + I(U0; S1 | S2,Y2) + I(U1; S1 | U0,S2,Y1)`.
pub fn full_network_bounds(ext: &JointPmf) -> Result<RateBounds, Error> {
    let t = terms(ext)?;
    Ok(RateBounds {
        b_r0: None,
        b_r0_r1: Some(t.h_s2_y1 + t.i_u0u1_s1_given_s2y1),
        b_r0_r2: Some(t.h_s2_y2 + t.i_u0_s1_given_s2y2),
        b_sum: Some(t.h_s2_y2 + t.i_u0_s1_given_s2y2 + t.i_u1_s1_given_u0s2y1),
    })
}

/// Refinement-link-to-receiver-1 bounds (`R2 = 0`): the `R0+R2` inequality
/// of the full network becomes a bound on `R0` alone.
pub fn refinement_bounds(ext: &JointPmf) -> Result<RateBounds, Error> {
    let t = terms(ext)?;
    Ok(RateBounds {
        b_r0: Some(t.h_s2_y2 + t.i_u0_s1_given_s2y2),
        b_r0_r1: Some(t.h_s2_y1 + t.i_u0u1_s1_given_s2y1),
        b_r0_r2: None,
        b_sum: Some(t.h_s2_y2 + t.i_u0_s1_given_s2y2 + t.i_u1_s1_given_u0s2y1),
    })
}

/// Refinement-link-to-receiver-2 bounds (`R1 = 0`).
pub fn scalable_bounds(ext: &JointPmf) -> Result<RateBounds, Error> {
    let t = terms(ext)?;
    Ok(RateBounds {
        b_r0: Some(t.h_s2_y1 + t.i_u0u1_s1_given_s2y1),
        b_r0_r1: None,
        b_r0_r2: Some(t.h_s2_y2 + t.i_u0_s1_given_s2y2 + t.i_u1_s1_given_u0s2y1),
        b_sum: None,
    })
}

/// The two sum-rate inequalities of the `Sr` variant combined into one:
/// `max{I(U0,S2; S1,S2 | Y1), I(U0,S2; S1,S2 | Y2)} + I(U1; S1 | U0,S2,Y1)`.
///
/// Both inequalities must hold, so the effective bound is the larger of the
/// two right-hand sides.
pub fn combined_sum_rate_bound(ext: &JointPmf) -> Result<f64, Error> {
    let v0 = set(&[Role::U0, Role::S2]);
    let s = set(&[Role::S1, Role::S2]);
    let i1 = ext.mutual_information_general(&v0, &s, &set(&[Role::Y1]))?;
    let i2 = ext.mutual_information_general(&v0, &s, &set(&[Role::Y2]))?;
    let iu = ext.conditional_mutual_information(
        &set(&[Role::U1]),
        &set(&[Role::S1]),
        &set(&[Role::U0, Role::S2, Role::Y1]),
    )?;
    Ok(i1.max(i2) + iu)
}

/// Membership of a rate point, every inequality of the variant checked to
/// within `tol`.
pub fn point_in_region_tol(
    p: &RateDistortionPoint,
    b: &RateBounds,
    variant: Variant,
    tol: f64,
) -> bool {
    let ge = |lhs: f64, rhs: Option<f64>| rhs.is_none_or(|r| lhs >= r - tol);
    match variant {
        Variant::Gw => {
            ge(p.r0 + p.r1, b.b_r0_r1)
                && ge(p.r0 + p.r2, b.b_r0_r2)
                && ge(p.r0 + p.r1 + p.r2, b.b_sum)
        }
        Variant::Sr => {
            ge(p.r0, b.b_r0) && ge(p.r0 + p.r1, b.b_r0_r1) && ge(p.r0 + p.r1, b.b_sum)
        }
        Variant::Sc => ge(p.r0, b.b_r0) && ge(p.r0 + p.r2, b.b_r0_r2),
    }
}

pub fn point_in_region(p: &RateDistortionPoint, b: &RateBounds, variant: Variant) -> bool {
    point_in_region_tol(p, b, variant, 1e-9)
}

/// Reductions that hold under a side-information ordering or a lossless
/// requirement. Validity of each reduction is only guaranteed under the
/// corresponding Markov condition; the evaluator just computes the stated
/// right-hand sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduction {
    /// `Sr` network where receiver 1 has the better side information
    /// (`(S1,S2) — Y1 — Y2`): the `R0+R1` inequality via `Y1` is implied,
    /// leaving the `R0` bound and the sum bound.
    SrDegradedY1Better,
    /// `Sr` network where receiver 2 has the better side information
    /// (`(S1,S2) — Y2 — Y1`): the sum bound via `Y2` is implied.
    SrDegradedY2Better,
    /// `Sc` network with `S1` reproduced losslessly at receiver 1.
    ScLossless,
    /// `Sc` network where receiver 2 has the better side information: a
    /// single constraint on `R0` with `U = (U0,U1)` remains.
    ScY2Better,
}

impl Reduction {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "sr_degraded_y1_better" => Some(Reduction::SrDegradedY1Better),
            "sr_degraded_y2_better" => Some(Reduction::SrDegradedY2Better),
            "sc_lossless" => Some(Reduction::ScLossless),
            "sc_y2_better" => Some(Reduction::ScY2Better),
            _ => None,
        }
    }
}

pub fn reduced_region_bounds(ext: &JointPmf, reduction: Reduction) -> Result<RateBounds, Error> {
    let t = terms(ext)?;
    Ok(match reduction {
        Reduction::SrDegradedY1Better => RateBounds {
            b_r0: Some(t.h_s2_y2 + t.i_u0_s1_given_s2y2),
            b_r0_r1: None,
            b_r0_r2: None,
            b_sum: Some(t.h_s2_y2 + t.i_u0_s1_given_s2y2 + t.i_u1_s1_given_u0s2y1),
        },
        Reduction::SrDegradedY2Better => RateBounds {
            b_r0: Some(t.h_s2_y2 + t.i_u0_s1_given_s2y2),
            b_r0_r1: Some(t.h_s2_y1 + t.i_u0u1_s1_given_s2y1),
            b_r0_r2: None,
            b_sum: None,
        },
        Reduction::ScLossless => {
            let h_s1s2_y1 =
                ext.conditional_entropy(&set(&[Role::S1, Role::S2]), &set(&[Role::Y1]))?;
            let h_s1s2_y2 =
                ext.conditional_entropy(&set(&[Role::S1, Role::S2]), &set(&[Role::Y2]))?;
            let h_s1_u0s2y1 =
                ext.conditional_entropy(&set(&[Role::S1]), &set(&[Role::U0, Role::S2, Role::Y1]))?;
            let h_s1_u0s2y2 =
                ext.conditional_entropy(&set(&[Role::S1]), &set(&[Role::U0, Role::S2, Role::Y2]))?;
            RateBounds {
                b_r0: Some(h_s1s2_y1),
                b_r0_r1: None,
                b_r0_r2: Some(h_s1s2_y2 + h_s1_u0s2y1 - h_s1_u0s2y2),
                b_sum: None,
            }
        }
        Reduction::ScY2Better => {
            // single constraint with U = (U0, U1)
            let i = ext.conditional_mutual_information(
                &set(&[Role::U0, Role::U1]),
                &set(&[Role::S1]),
                &set(&[Role::S2, Role::Y1]),
            )?;
            RateBounds {
                b_r0: Some(t.h_s2_y1 + i),
                b_r0_r1: None,
                b_r0_r2: None,
                b_sum: None,
            }
        }
    })
}
