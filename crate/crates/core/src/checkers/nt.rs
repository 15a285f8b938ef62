//! Pareto optimality through the no-trade condition.
//!
//! A trade is an alternative allocation `x'`. With `delta_i = sum_j (x'_ij - x_ij)
//! alpha_j`, winners `W = {delta_i > 0}` and losers `L = {delta_i <= 0}`, the trade
//! breaks no-trade when it creates welfare (`sum_i delta_i v_i > 0`) and the winners
//! can compensate the losers from their remaining budgets:
//! `sum_W min(b_i - p_i, delta_i v_i) + sum_L delta_i v_i >= 0`.
//! For indivisible outcomes that have every item allocated, no-trade is equivalent to
//! Pareto optimality, so enumerating all assignments decides it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use super::{PropertyReport, Witness};
use crate::error::{AuctionError, Result};
use crate::model::{check_dimensions, validate_allocation, Outcome, SingleDimInstance};

/// Largest item count enumerated by default.
pub const DEFAULT_NT_CAP: usize = 8;

/// A candidate trade, evaluated against an outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NtTrade {
    /// Alternative allocation rows.
    pub alternative: Vec<Vec<f64>>,
    /// Owner of each item under the alternative (indivisible trades only).
    pub assignment: Option<Vec<Option<usize>>>,
    /// Change in aggregate quality per agent.
    pub deltas: Vec<f64>,
    /// `sum_i delta_i v_i`.
    pub welfare_gain: f64,
    /// `sum_W min(b_i - p_i, delta_i v_i) + sum_L delta_i v_i`.
    pub compensation: f64,
}

impl NtTrade {
    pub fn breaks_no_trade(&self, tol: f64) -> bool {
        self.welfare_gain > tol && self.compensation >= -tol
    }
}

/// Evaluates the trade `alternative` against `outcome` from raw instance data.
pub fn nt_trade(instance: &SingleDimInstance, outcome: &Outcome, alternative: &[Vec<f64>]) -> Result<NtTrade> {
    check_dimensions(instance, outcome)?;
    let (n, m) = (instance.num_agents(), instance.num_items());
    if alternative.len() != n || alternative.iter().any(|r| r.len() != m) {
        return Err(AuctionError::invalid(format!("alternative allocation must be {n}x{m}")));
    }
    let alphas = instance.alphas();
    let x = outcome.allocation.rows();
    let deltas: Vec<f64> = (0..n)
        .map(|i| (0..m).map(|j| (alternative[i][j] - x[i][j]) * alphas[j]).sum())
        .collect();
    Ok(score(instance, outcome, alternative.to_vec(), None, deltas))
}

fn score(
    instance: &SingleDimInstance,
    outcome: &Outcome,
    alternative: Vec<Vec<f64>>,
    assignment: Option<Vec<Option<usize>>>,
    deltas: Vec<f64>,
) -> NtTrade {
    let v = instance.valuations();
    let b = instance.budgets();
    let mut welfare_gain = 0.0;
    let mut compensation = 0.0;
    for (i, &d) in deltas.iter().enumerate() {
        let gain = d * v[i];
        welfare_gain += gain;
        compensation += if d > 0.0 { (b[i] - outcome.payments[i]).min(gain) } else { gain };
    }
    NtTrade { alternative, assignment, deltas, welfare_gain, compensation }
}

/// Re-evaluates a reported trade from scratch: the alternative must be a feasible
/// allocation of the right shape and must break no-trade.
pub fn verify_nt_witness(
    instance: &SingleDimInstance,
    outcome: &Outcome,
    trade: &NtTrade,
    tol: f64,
) -> Result<bool> {
    let alt = crate::model::Allocation::new(trade.alternative.clone(), true)?;
    if validate_allocation(&alt).is_err() {
        return Ok(false);
    }
    Ok(nt_trade(instance, outcome, &trade.alternative)?.breaks_no_trade(tol))
}

/// Decides no-trade for an indivisible outcome by enumerating all `(n+1)^m`
/// assignments of items to agents or to nobody.
///
/// Among violating assignments the reported witness moves the fewest items relative to
/// the current outcome; ties go to the lexicographically smallest assignment (item 0
/// first, agents in index order, "unassigned" last).
pub fn check_nt_indivisible(
    instance: &SingleDimInstance,
    outcome: &Outcome,
    cap: usize,
    tol: f64,
) -> Result<PropertyReport> {
    check_dimensions(instance, outcome)?;
    let (n, m) = (instance.num_agents(), instance.num_items());
    let alloc = &outcome.allocation;
    for (i, row) in alloc.rows().iter().enumerate() {
        if let Some(j) = row.iter().position(|&x| x != 0.0 && x != 1.0) {
            return Err(AuctionError::invalid(format!(
                "no-trade enumeration needs an integral allocation; x[{i}][{j}] = {}",
                row[j]
            )));
        }
    }
    let report = PropertyReport::new("po_nt").param("tol", tol).param("cap", cap as f64).param("items", m as f64);
    if m > cap {
        return Ok(report.inconclusive(format!("{m} items exceed the enumeration cap of {cap}")));
    }
    for item in 0..m {
        let allocated = alloc.column_sum(item);
        if (allocated - 1.0).abs() > tol {
            return Ok(report.violated(Witness::UnallocatedItem { item, allocated }));
        }
    }

    let owner: Vec<usize> =
        (0..m).map(|j| (0..n).find(|&i| alloc.get(i, j) == 1.0).unwrap_or(n)).collect();
    let alphas = instance.alphas();
    let v = instance.valuations();
    let b = instance.budgets();
    let slack: Vec<f64> = (0..n).map(|i| b[i] - outcome.payments[i]).collect();

    let mut digits = vec![0usize; m];
    let mut deltas = vec![0.0; n];
    let mut best: Option<(usize, Vec<usize>)> = None;
    loop {
        let changed = digits.iter().zip(&owner).filter(|(d, o)| d != o).count();
        if changed > 0 && best.as_ref().is_none_or(|(c, _)| changed < *c) {
            deltas.iter_mut().for_each(|d| *d = 0.0);
            for j in 0..m {
                if digits[j] != owner[j] {
                    if digits[j] < n {
                        deltas[digits[j]] += alphas[j];
                    }
                    if owner[j] < n {
                        deltas[owner[j]] -= alphas[j];
                    }
                }
            }
            let mut welfare = 0.0;
            let mut compensation = 0.0;
            for i in 0..n {
                let gain = deltas[i] * v[i];
                welfare += gain;
                compensation += if deltas[i] > 0.0 { slack[i].min(gain) } else { gain };
            }
            if welfare > tol && compensation >= -tol {
                best = Some((changed, digits.clone()));
            }
        }
        // Next assignment in lexicographic order, item 0 most significant.
        let mut j = m;
        let exhausted = loop {
            if j == 0 {
                break true;
            }
            j -= 1;
            digits[j] += 1;
            if digits[j] <= n {
                break false;
            }
            digits[j] = 0;
        };
        if exhausted {
            break;
        }
    }

    match best {
        None => Ok(report),
        Some((_, digits)) => {
            let assignment: Vec<Option<usize>> = digits.iter().map(|&d| (d < n).then_some(d)).collect();
            let mut rows = vec![vec![0.0; m]; n];
            for (j, a) in assignment.iter().enumerate() {
                if let Some(i) = *a {
                    rows[i][j] = 1.0;
                }
            }
            let mut trade = nt_trade(instance, outcome, &rows)?;
            trade.assignment = Some(assignment);
            Ok(report.violated(Witness::Trade(trade)))
        }
    }
}

/// Looks for a no-trade violation of a (possibly divisible) outcome by moving
/// fractions of single items between agents or from the unallocated remainder.
/// Whole-fraction moves are tried first, then `samples` random partial moves.
///
/// Sound for violations only: the verdict is `Violated` or `Inconclusive`.
pub fn search_nt_divisible(
    instance: &SingleDimInstance,
    outcome: &Outcome,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<PropertyReport> {
    check_dimensions(instance, outcome)?;
    let (n, m) = (instance.num_agents(), instance.num_items());
    let report = PropertyReport::new("po_nt_search")
        .param("tol", tol)
        .param("samples", samples as f64)
        .param("seed", seed as f64);
    let x = outcome.allocation.rows();
    let available = |donor: usize, item: usize| -> f64 {
        if donor < n {
            x[donor][item]
        } else {
            (1.0 - outcome.allocation.column_sum(item)).max(0.0)
        }
    };
    let try_move = |item: usize, donor: usize, receiver: usize, amount: f64| -> Result<Option<NtTrade>> {
        if donor == receiver || amount <= 0.0 {
            return Ok(None);
        }
        let mut alt = x.to_vec();
        if donor < n {
            alt[donor][item] -= amount;
        }
        alt[receiver][item] += amount;
        let trade = nt_trade(instance, outcome, &alt)?;
        Ok(trade.breaks_no_trade(tol).then_some(trade))
    };

    for item in 0..m {
        for donor in 0..=n {
            for receiver in 0..n {
                if let Some(t) = try_move(item, donor, receiver, available(donor, item))? {
                    return Ok(report.violated(Witness::Trade(t)));
                }
            }
        }
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let item = rng.gen_range(0..m);
        let donor = rng.gen_range(0..=n);
        let receiver = rng.gen_range(0..n);
        let amount = available(donor, item) * rng.gen::<f64>();
        if let Some(t) = try_move(item, donor, receiver, amount)? {
            return Ok(report.violated(Witness::Trade(t)));
        }
    }
    Ok(report.inconclusive("no violating trade found; the search cannot certify Pareto optimality"))
}
