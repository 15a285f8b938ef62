//! Arithmetic of the two impossibility constructions.
//!
//! Two agents, two items, additive valuations: three families of instances (cases)
//! pin down parts of any IR, PO, NPT outcome. Perturbing agent 2's report inside
//! Case 3 yields a pair of forced allocations that weak monotonicity forbids, which
//! [`wmon_certificate`] evaluates step by step. [`singdim_bounds`] evaluates the
//! payment lower bounds of the single-dimensional construction.

use serde::Serialize;

use crate::error::{AuctionError, Result};
use crate::model::{Allocation, MultiDimInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Case {
    Case1,
    Case2,
    Case3,
    Unclassified,
}

/// One defining inequality of a case, evaluated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Predicate {
    pub case: Case,
    pub name: String,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseLabel {
    pub case: Case,
    /// Every predicate of every case, in case order.
    pub predicates: Vec<Predicate>,
}

impl CaseLabel {
    pub fn failed(&self, case: Case) -> Vec<&str> {
        self.predicates.iter().filter(|p| p.case == case && !p.holds).map(|p| p.name.as_str()).collect()
    }
}

struct TwoByTwo {
    v11: f64,
    v12: f64,
    v21: f64,
    v22: f64,
    b1: f64,
    b2: f64,
}

fn two_by_two(instance: &MultiDimInstance) -> Result<TwoByTwo> {
    let v = instance.valuations();
    if v.len() != 2 || v[0].len() != 2 {
        return Err(AuctionError::invalid(format!(
            "case analysis needs 2 agents and 2 items, got {}x{}",
            v.len(),
            v[0].len()
        )));
    }
    let b = instance.budgets();
    Ok(TwoByTwo { v11: v[0][0], v12: v[0][1], v21: v[1][0], v22: v[1][1], b1: b[0], b2: b[1] })
}

fn predicates(t: &TwoByTwo) -> Vec<Predicate> {
    let p = |case, name: &str, holds| Predicate { case, name: name.to_string(), holds };
    let rich2 = t.b2 > t.v21 + t.v22;
    vec![
        p(Case::Case1, "v11 < v21", t.v11 < t.v21),
        p(Case::Case1, "v12 < v22", t.v12 < t.v22),
        p(Case::Case1, "b2 > v21 + v22", rich2),
        p(Case::Case2, "v11 > v21", t.v11 > t.v21),
        p(Case::Case2, "v12 < v22", t.v12 < t.v22),
        p(Case::Case2, "b1 > v11", t.b1 > t.v11),
        p(Case::Case2, "b2 > v21 + v22", rich2),
        p(Case::Case3, "v11 > v21", t.v11 > t.v21),
        p(Case::Case3, "v12 > v22", t.v12 > t.v22),
        p(Case::Case3, "b1 > v11", t.b1 > t.v11),
        p(Case::Case3, "v11 * v22 > v12 * v21", t.v11 * t.v22 > t.v12 * t.v21),
        p(Case::Case3, "v21 + v22 > b1", t.v21 + t.v22 > t.b1),
        p(Case::Case3, "b2 > v21 + v22", rich2),
    ]
}

/// Labels a 2x2 instance with the case whose predicates all hold.
pub fn classify_case(instance: &MultiDimInstance) -> Result<CaseLabel> {
    let t = two_by_two(instance)?;
    let predicates = predicates(&t);
    let case = [Case::Case1, Case::Case2, Case::Case3]
        .into_iter()
        .find(|&c| predicates.iter().filter(|p| p.case == c).all(|p| p.holds))
        .unwrap_or(Case::Unclassified);
    Ok(CaseLabel { case, predicates })
}

/// What each case forces. `p2` is never determined.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForcedOutcome {
    pub case: Case,
    pub allocation: Allocation,
    pub p1: f64,
    pub p2: Option<f64>,
    /// Agent 1's utility under the forced allocation and payment.
    pub u1: f64,
}

/// The allocation and agent 1's payment forced by `label`'s case.
pub fn forced_outcome(instance: &MultiDimInstance, label: &CaseLabel) -> Result<ForcedOutcome> {
    let t = two_by_two(instance)?;
    let (rows, p1) = match label.case {
        Case::Case1 => (vec![vec![0.0, 0.0], vec![1.0, 1.0]], 0.0),
        Case::Case2 => (vec![vec![1.0, 0.0], vec![0.0, 1.0]], t.v21),
        Case::Case3 => {
            let x12 = (t.b1 - t.v21) / t.v22;
            (vec![vec![1.0, x12], vec![0.0, 1.0 - x12]], t.b1)
        }
        Case::Unclassified => {
            return Err(AuctionError::invalid("no forced outcome for an unclassified instance"));
        }
    };
    let u1 = t.v11 * rows[0][0] + t.v12 * rows[0][1] - p1;
    Ok(ForcedOutcome { case: label.case, allocation: Allocation::new(rows, true)?, p1, p2: None, u1 })
}

/// Allocation rule mapping every classified 2x2 instance to its forced allocation;
/// the input to a weak-monotonicity check.
pub fn forced_allocation_rule(instance: &MultiDimInstance) -> Result<Allocation> {
    let label = classify_case(instance)?;
    Ok(forced_outcome(instance, &label)?.allocation)
}

/// One inequality of a certificate with both sides evaluated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Step {
    pub claim: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl Step {
    fn greater(claim: &str, lhs: f64, rhs: f64) -> Self {
        Self { claim: claim.to_string(), lhs, rhs, holds: lhs > rhs }
    }
}

/// The weak-monotonicity contradiction for one Case 3 instance and one perturbation
/// `v'21 = v21 + alpha`, `v'22 = v22 - beta` of agent 2's report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub instance: MultiDimInstance,
    pub alpha: f64,
    pub beta: f64,
    pub perturbed: MultiDimInstance,
    /// Forced `x12` and `p1` on the original instance.
    pub x12: f64,
    pub p1: f64,
    /// Forced `x22` on the original and the perturbed instance.
    pub x22: f64,
    pub x22_perturbed: f64,
    /// Weak monotonicity for agent 2 requires `x22 >= x22_perturbed`, which for the
    /// forced allocations is equivalent to `b1 >= bound`.
    pub wmon_requires_x22_at_least_perturbed: bool,
    /// `(v21 * beta + v22 * alpha) / beta`.
    pub bound: f64,
    pub steps: Vec<Step>,
    pub contradiction: bool,
}

fn certificate_steps(t: &TwoByTwo, alpha: f64, beta: f64) -> (f64, Vec<Step>) {
    let bound = (t.v21 * beta + t.v22 * alpha) / beta;
    let steps = vec![
        Step::greater("B > v21 + v22", bound, t.v21 + t.v22),
        Step::greater("v21 + v22 > b1", t.v21 + t.v22, t.b1),
    ];
    (bound, steps)
}

impl Certificate {
    /// Recomputes every derived number and step from the stored instance, `alpha`
    /// and `beta` and compares with what the certificate claims.
    pub fn reverify(&self) -> Result<bool> {
        let fresh = wmon_certificate(&self.instance, self.alpha, self.beta)?;
        Ok(fresh == *self && self.contradiction == self.steps.iter().all(|s| s.holds))
    }
}

/// Builds the certificate. Requires `alpha > beta > 0`, a Case 3 instance, and a
/// perturbed instance that is still Case 3.
pub fn wmon_certificate(instance: &MultiDimInstance, alpha: f64, beta: f64) -> Result<Certificate> {
    if !(beta > 0.0 && alpha > beta && alpha.is_finite()) {
        return Err(AuctionError::invalid(format!("need alpha > beta > 0, got alpha={alpha}, beta={beta}")));
    }
    let t = two_by_two(instance)?;
    let label = classify_case(instance)?;
    if label.case != Case::Case3 {
        return Err(AuctionError::invalid(format!(
            "instance is not Case 3; failed: {}",
            label.failed(Case::Case3).join(", ")
        )));
    }
    let perturbed = instance.with_report(1, &[t.v21 + alpha, t.v22 - beta])?;
    let perturbed_label = classify_case(&perturbed)?;
    if perturbed_label.case != Case::Case3 {
        return Err(AuctionError::invalid(format!(
            "perturbation leaves Case 3; failed: {}",
            perturbed_label.failed(Case::Case3).join(", ")
        )));
    }
    let forced = forced_outcome(instance, &label)?;
    let forced_perturbed = forced_outcome(&perturbed, &perturbed_label)?;
    let x22 = forced.allocation.get(1, 1);
    let x22_perturbed = forced_perturbed.allocation.get(1, 1);
    let (bound, steps) = certificate_steps(&t, alpha, beta);
    let contradiction = steps.iter().all(|s| s.holds);
    Ok(Certificate {
        instance: instance.clone(),
        alpha,
        beta,
        perturbed,
        x12: forced.allocation.get(0, 1),
        p1: forced.p1,
        x22,
        x22_perturbed,
        wmon_requires_x22_at_least_perturbed: x22 >= x22_perturbed,
        bound,
        steps,
        contradiction,
    })
}

/// Payment lower bound for one winning set of items.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetBound {
    /// 1-based item labels.
    pub items: Vec<usize>,
    pub quality: f64,
    pub lower_bound: f64,
    /// `v1 * quality`: what agent 1 gains from the set.
    pub value: f64,
    pub exceeds_value: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingDimBounds {
    pub alphas: Vec<f64>,
    pub v2: f64,
    pub b1: f64,
    /// Lower bound on agent 1's critical valuation for item 2:
    /// `(b1 - (alpha1 - alpha2) v2) / alpha2`.
    pub critical_bound: f64,
    /// Open window `(v2, critical_bound)` of truthful valuations for agent 1.
    pub window: (f64, f64),
    pub window_empty: bool,
    /// The valuation of agent 1 the bounds are compared against.
    pub v1: Option<f64>,
    pub sets: Vec<SetBound>,
    pub ir_conflict: bool,
}

/// Payment lower bounds `(alpha_S / alpha2) (b1 - (alpha1 - alpha2) v2)` for each
/// nonempty set `S` of the two items, assuming a base payment of at most 0. With `v1`
/// omitted the midpoint of the window is used.
pub fn singdim_bounds(alphas: &[f64], v2: f64, b1: f64, v1: Option<f64>) -> Result<SingDimBounds> {
    let &[a1, a2] = alphas else {
        return Err(AuctionError::invalid(format!("need exactly two qualities, got {}", alphas.len())));
    };
    if !(a2 > 0.0 && a1 > a2 && a1.is_finite()) {
        return Err(AuctionError::invalid(format!("need alpha1 > alpha2 > 0, got ({a1}, {a2})")));
    }
    if !(v2 > 0.0 && v2.is_finite()) || !(b1.is_finite() && b1 >= 0.0) {
        return Err(AuctionError::invalid("need v2 > 0 and a finite nonnegative b1"));
    }
    let critical_bound = (b1 - (a1 - a2) * v2) / a2;
    let window = (v2, critical_bound);
    let window_empty = critical_bound <= v2;
    let v1 = match v1 {
        _ if window_empty => v1,
        None => Some(0.5 * (v2 + critical_bound)),
        Some(v) if v > v2 && v < critical_bound => Some(v),
        Some(v) => {
            return Err(AuctionError::invalid(format!(
                "v1 = {v} is outside the window ({v2}, {critical_bound})"
            )));
        }
    };
    let sets: Vec<SetBound> = [(vec![2], a2), (vec![1], a1), (vec![1, 2], a1 + a2)]
        .into_iter()
        .map(|(items, quality)| {
            let lower_bound = quality * critical_bound;
            let value = v1.map_or(f64::NAN, |v| v * quality);
            SetBound { items, quality, lower_bound, value, exceeds_value: lower_bound > value }
        })
        .collect();
    let ir_conflict = !window_empty && sets.iter().all(|s| s.exceeds_value);
    Ok(SingDimBounds {
        alphas: alphas.to_vec(),
        v2,
        b1,
        critical_bound,
        window,
        window_empty,
        v1,
        sets,
        ir_conflict,
    })
}
