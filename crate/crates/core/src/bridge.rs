//! Divisible outcomes as lotteries over indivisible outcomes, and back.
//!
//! Randomness comes from ChaCha20 (`rand_chacha`), which produces the same stream on
//! every platform. Stream splitting:
//!
//! * item `j` of [`randomize_outcome`] draws from `ChaCha20(seed)` on stream `j`;
//! * sample `k` of [`expected_outcome`] gets the seed [`derive_seed`]`(seed, k)`, the
//!   `k`-th 64-bit word pair of `ChaCha20(seed)` on stream 0.
//!
//! Both are pure functions of their indices, so samples may be produced in any order
//! or in parallel with identical results.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::error::{AuctionError, Result};
use crate::model::{validate_allocation, Allocation, AllocationViolation, Outcome};

fn item_rng(seed: u64, item: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(item as u64);
    rng
}

/// Seed for the `index`-th sample of a run seeded with `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_word_pos(u128::from(index) * 2);
    rng.next_u64()
}

fn check_lottery_input(outcome: &Outcome) -> Result<()> {
    match validate_allocation(&outcome.allocation) {
        Ok(()) => Ok(()),
        Err(v @ AllocationViolation::OverAllocated { .. }) | Err(v @ AllocationViolation::OutOfRange { .. }) => {
            Err(AuctionError::invalid(format!("not a lottery: {v}")))
        }
        Err(AllocationViolation::FractionalEntry { .. }) => Ok(()),
    }
}

/// Draws an indivisible outcome: each item independently goes to agent `i` with
/// probability `x[i][j]` (unassigned with the residual probability). Payments are
/// copied unchanged.
pub fn randomize_outcome(outcome: &Outcome, seed: u64) -> Result<Outcome> {
    check_lottery_input(outcome)?;
    let alloc = &outcome.allocation;
    let (n, m) = (alloc.num_agents(), alloc.num_items());
    let mut drawn = Allocation::zeros(n, m, false);
    for j in 0..m {
        let u: f64 = item_rng(seed, j).gen();
        let mut cumulative = 0.0;
        for i in 0..n {
            cumulative += alloc.get(i, j);
            if u < cumulative {
                drawn.set(i, j, 1.0);
                break;
            }
        }
    }
    Outcome::new(drawn, outcome.payments.clone())
}

/// [`randomize_outcome`] for a single-item outcome: one categorical draw.
pub fn randomize_single_winner(outcome: &Outcome, seed: u64) -> Result<Outcome> {
    if outcome.allocation.num_items() != 1 {
        return Err(AuctionError::invalid(format!(
            "single-winner lottery needs one item, got {}",
            outcome.allocation.num_items()
        )));
    }
    randomize_outcome(outcome, seed)
}

/// Sample means of a randomized mechanism's allocation and payments, with standard
/// errors of each mean.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeEstimate {
    pub mean: Outcome,
    pub allocation_se: Vec<Vec<f64>>,
    pub payment_se: Vec<f64>,
    pub samples: usize,
}

/// Running mean and variance (Welford); the mean of a constant stream is exact.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunningStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Standard error of the mean (0 for fewer than two samples).
    pub fn standard_error(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let var = self.m2 / (self.count - 1) as f64;
        (var / self.count as f64).sqrt()
    }
}

/// Runs `sampler` on seeds `derive_seed(seed, 0..num_samples)` and averages.
pub fn expected_outcome<F>(mut sampler: F, num_samples: usize, seed: u64) -> Result<OutcomeEstimate>
where
    F: FnMut(u64) -> Result<Outcome>,
{
    if num_samples == 0 {
        return Err(AuctionError::invalid("need at least one sample"));
    }
    let mut cells: Vec<Vec<RunningStats>> = Vec::new();
    let mut pays: Vec<RunningStats> = Vec::new();
    let mut shape = None;
    let mut divisible = true;
    for k in 0..num_samples {
        let out = sampler(derive_seed(seed, k as u64))?;
        let alloc = &out.allocation;
        let dims = (alloc.num_agents(), alloc.num_items());
        match shape {
            None => {
                shape = Some(dims);
                cells = vec![vec![RunningStats::default(); dims.1]; dims.0];
                pays = vec![RunningStats::default(); dims.0];
                divisible = alloc.is_divisible();
            }
            Some(s) if s != dims => {
                return Err(AuctionError::invalid(format!(
                    "sampler changed shape from {s:?} to {dims:?}"
                )));
            }
            Some(_) => {}
        }
        for (i, row) in alloc.rows().iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                cells[i][j].push(x);
            }
            pays[i].push(out.payments[i]);
        }
    }
    // A constant sampler reproduces its own divisibility; anything averaged is divisible.
    let constant = cells.iter().flatten().all(|c| c.standard_error() == 0.0);
    let rows: Vec<Vec<f64>> = cells.iter().map(|r| r.iter().map(RunningStats::mean).collect()).collect();
    let allocation_se = cells.iter().map(|r| r.iter().map(RunningStats::standard_error).collect()).collect();
    let mean = Outcome::new(
        Allocation::new(rows, divisible || !constant)?,
        pays.iter().map(RunningStats::mean).collect(),
    )?;
    Ok(OutcomeEstimate {
        mean,
        allocation_se,
        payment_se: pays.iter().map(RunningStats::standard_error).collect(),
        samples: num_samples,
    })
}
