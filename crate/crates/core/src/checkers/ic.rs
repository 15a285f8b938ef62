//! Brute-force incentive compatibility and weak monotonicity.

use serde::{Deserialize, Serialize};

use super::{Mechanism, PropertyReport, Witness};
use crate::error::{AuctionError, Result};
use crate::model::{utility, AgentType, Allocation, MultiDimInstance, SingleDimInstance, Valuation};

/// For every agent, truthful utility is at least the utility (under the true type)
/// of every misreport in `grid`, up to `tol`. Without a budget grid the budget stays
/// at its true value (public budgets); with one, every (valuation, budget) pair is
/// tried.
pub fn check_ic_bruteforce<M: Mechanism + ?Sized>(
    mechanism: &M,
    instance: &SingleDimInstance,
    grid: &[f64],
    budget_grid: Option<&[f64]>,
    tol: f64,
) -> Result<PropertyReport> {
    let mut report = PropertyReport::new("ic").param("tol", tol).param("grid_points", grid.len() as f64);
    if let Some(bg) = budget_grid {
        report = report.param("budget_grid_points", bg.len() as f64);
    }
    let truthful = mechanism.run(instance)?;
    for agent in 0..instance.num_agents() {
        let honest = utility(instance, &truthful, agent)?;
        let true_budget = [instance.budgets()[agent]];
        let budgets = budget_grid.unwrap_or(&true_budget);
        for &v in grid {
            for &b in budgets {
                let report_type = AgentType { valuation: Valuation::Scalar(v), budget: b };
                let out = mechanism.run(&instance.with_report(agent, &report_type)?)?;
                let deviating = utility(instance, &out, agent)?;
                if let Some(gain) = deviating.gain_over(honest) {
                    if gain > tol {
                        return Ok(report.violated(Witness::Deviation {
                            agent,
                            report: report_type,
                            truthful: honest,
                            deviating,
                            gain,
                        }));
                    }
                }
            }
        }
    }
    Ok(report)
}

/// Two valuation reports of one agent, everything else fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportPair {
    pub agent: usize,
    pub report: Vec<f64>,
    pub alternative: Vec<f64>,
}

fn dot(v: &[f64], x: &[f64]) -> f64 {
    v.iter().zip(x).map(|(a, b)| a * b).sum()
}

/// Weak monotonicity of an allocation rule on additive valuations: for each pair
/// `(v, v')` with allocations `x = x(v)` and `x' = x(v')`,
/// `v'(x') - v'(x) >= v(x') - v(x) - tol`.
pub fn check_wmon<F>(rule: F, instance: &MultiDimInstance, pairs: &[ReportPair], tol: f64) -> Result<PropertyReport>
where
    F: Fn(&MultiDimInstance) -> Result<Allocation>,
{
    let report = PropertyReport::new("wmon").param("tol", tol).param("pairs", pairs.len() as f64);
    let m = instance.valuations()[0].len();
    for pair in pairs {
        if pair.agent >= instance.budgets().len() {
            return Err(AuctionError::invalid(format!("agent {} out of range", pair.agent)));
        }
        if pair.report.len() != m || pair.alternative.len() != m {
            return Err(AuctionError::invalid(format!("reports must have {m} entries")));
        }
        let x = rule(&instance.with_report(pair.agent, &pair.report)?)?.row(pair.agent).to_vec();
        let x_alt = rule(&instance.with_report(pair.agent, &pair.alternative)?)?.row(pair.agent).to_vec();
        let lhs = dot(&pair.alternative, &x_alt) - dot(&pair.alternative, &x);
        let rhs = dot(&pair.report, &x_alt) - dot(&pair.report, &x);
        if lhs < rhs - tol {
            return Ok(report.violated(Witness::WeakMonotonicity {
                agent: pair.agent,
                report: pair.report.clone(),
                alternative: pair.alternative.clone(),
                allocation_report: x,
                allocation_alternative: x_alt,
                lhs,
                rhs,
            }));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::super::{default_grid, FnMechanism};
    use super::*;
    use crate::hetero::HeteroDivisible;
    use crate::model::{Outcome, Utility};

    #[test]
    fn hetero_divisible_is_ic_on_grid() {
        let inst = SingleDimInstance::new(vec![2.0, 1.0], vec![3.0, 2.0, 1.0], vec![0.5, 0.9, 0.4]).unwrap();
        let grid = default_grid(&inst, 50);
        let r = check_ic_bruteforce(&HeteroDivisible, &inst, &grid, None, 1e-9).unwrap();
        assert!(r.holds(), "{r:?}");
    }

    #[test]
    fn first_price_stub_is_manipulable() {
        // Highest report wins the item and pays its report.
        let fp = FnMechanism::new("first-price", |inst: &SingleDimInstance| {
            let v = inst.valuations();
            let w = (0..v.len()).max_by(|&a, &b| v[a].total_cmp(&v[b]).then(b.cmp(&a))).unwrap();
            let mut out = Outcome::empty(v.len(), 1, false);
            out.allocation.set(w, 0, 1.0);
            out.payments[w] = v[w];
            Ok(out)
        });
        let inst = SingleDimInstance::new(vec![1.0], vec![3.0, 1.0], vec![10.0, 10.0]).unwrap();
        let r = check_ic_bruteforce(&fp, &inst, &[1.5, 2.0, 2.5], None, 1e-9).unwrap();
        let Some(Witness::Deviation { agent, report, truthful, deviating, gain }) = r.witness else {
            panic!("{r:?}")
        };
        assert_eq!(agent, 0);
        assert_eq!(report.valuation, Valuation::Scalar(1.5));
        assert_eq!(truthful, Utility::Finite(0.0));
        assert_eq!(deviating, Utility::Finite(1.5));
        assert_eq!(gain, 1.5);
    }

    #[test]
    fn empty_grid_holds_vacuously() {
        let inst = SingleDimInstance::new(vec![1.0], vec![3.0, 1.0], vec![1.0, 1.0]).unwrap();
        assert!(check_ic_bruteforce(&HeteroDivisible, &inst, &[], None, 1e-9).unwrap().holds());
    }

    #[test]
    fn budget_lies_are_priced_with_the_true_budget() {
        // Overstating the budget lets a stub charge more than the true budget: -inf.
        let greedy = FnMechanism::new("greedy", |inst: &SingleDimInstance| {
            let mut out = Outcome::empty(inst.num_agents(), 1, true);
            out.allocation.set(0, 0, 1.0);
            out.payments[0] = inst.budgets()[0];
            Ok(out)
        });
        let inst = SingleDimInstance::new(vec![1.0], vec![3.0, 1.0], vec![1.0, 1.0]).unwrap();
        let r = check_ic_bruteforce(&greedy, &inst, &[3.0], Some(&[2.0, 0.5]), 1e-9).unwrap();
        let Some(Witness::Deviation { report, deviating, .. }) = r.witness else { panic!("{r:?}") };
        assert_eq!(report.budget, 0.5);
        assert_eq!(deviating, Utility::Finite(2.5));
    }

    fn multi() -> MultiDimInstance {
        MultiDimInstance::new(vec![vec![4.0, 5.0], vec![3.0, 4.0]], vec![5.0, 8.0]).unwrap()
    }

    #[test]
    fn report_independent_rule_satisfies_wmon() {
        let fixed = |_: &MultiDimInstance| Allocation::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], false);
        let pairs = [ReportPair { agent: 1, report: vec![3.0, 4.0], alternative: vec![9.0, 0.0] }];
        assert!(check_wmon(fixed, &multi(), &pairs, 1e-9).unwrap().holds());
    }

    #[test]
    fn single_agent_sell_everything_satisfies_wmon() {
        let inst = MultiDimInstance::new(vec![vec![2.0, 1.0]], vec![5.0]).unwrap();
        let all = |_: &MultiDimInstance| Allocation::new(vec![vec![1.0, 1.0]], false);
        let pairs = [ReportPair { agent: 0, report: vec![2.0, 1.0], alternative: vec![0.5, 7.0] }];
        assert!(check_wmon(all, &inst, &pairs, 1e-9).unwrap().holds());
    }

    #[test]
    fn inverted_rule_violates_wmon() {
        // Gives item 0 to agent 1 only when agent 1 values it less.
        let rule = |inst: &MultiDimInstance| {
            let x = if inst.value(1, 0) < 3.5 { 1.0 } else { 0.0 };
            Allocation::new(vec![vec![1.0 - x, 0.0], vec![x, 1.0]], false)
        };
        let pairs = [ReportPair { agent: 1, report: vec![3.0, 4.0], alternative: vec![4.0, 4.0] }];
        let r = check_wmon(rule, &multi(), &pairs, 1e-9).unwrap();
        let Some(Witness::WeakMonotonicity { lhs, rhs, .. }) = r.witness else { panic!("{r:?}") };
        assert_eq!((lhs, rhs), (-4.0, -3.0));
    }
}
