//! Value monotonicity, critical valuations and the payment identity.
//!
//! The sweep treats the aggregate quality `gamma(v)` of one agent as a function of
//! its reported valuation and brackets every increase. Jumps (indivisible-style
//! mechanisms) are bisected down to the requested width; smooth stretches (divisible
//! mechanisms) are refined until the midpoint Stieltjes sum for `int v dgamma(v)`
//! stops changing. Each bracket becomes one level `gamma_s` with critical valuation
//! at the bracket midpoint, so the payment identity reads
//! `p(v) = p(0) + sum_{s : reached by v} (gamma_s - gamma_{s-1}) c_s`.

use serde::Serialize;

use super::{Mechanism, PropertyReport, Witness};
use crate::error::{AuctionError, Result};
use crate::model::{aggregate_quality, SingleDimInstance};

/// Quality changes at or below this are treated as rounding noise.
const QUALITY_NOISE: f64 = 1e-12;
/// Uniform pieces the sweep starts from, before adaptive refinement.
const INITIAL_PIECES: usize = 32;

/// One bracket of the sweep over which the quality rose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment {
    pub v_low: f64,
    pub v_high: f64,
    pub quality_low: f64,
    pub quality_high: f64,
}

impl Segment {
    pub fn critical(&self) -> f64 {
        0.5 * (self.v_low + self.v_high)
    }
}

/// Quality levels an agent can reach by raising its valuation, with the valuations
/// at which they are reached.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalValuationProfile {
    pub agent: usize,
    pub budget: f64,
    pub v_max: f64,
    /// Quality at valuation 0.
    pub base_quality: f64,
    /// Payment at valuation 0.
    pub base_payment: f64,
    /// Levels `gamma_1 < gamma_2 < ...` above the base quality.
    pub levels: Vec<f64>,
    /// Critical valuation of each level (nondecreasing).
    pub critical: Vec<f64>,
    /// The brackets behind `levels` and `critical`.
    pub segments: Vec<Segment>,
}

impl CriticalValuationProfile {
    /// Payment implied by the payment identity at report `v`: base payment plus the
    /// increments of every bracket ending at or below `v`.
    pub fn implied_payment(&self, v: f64) -> f64 {
        let mut p = self.base_payment;
        let mut prev = self.base_quality;
        for s in &self.segments {
            if s.v_high > v {
                break;
            }
            p += (s.quality_high - prev) * s.critical();
            prev = s.quality_high;
        }
        p
    }
}

struct Sweep<'a, M: Mechanism + ?Sized> {
    mechanism: &'a M,
    instance: &'a SingleDimInstance,
    agent: usize,
    width: f64,
    quad_tol: f64,
    segments: Vec<Segment>,
}

impl<M: Mechanism + ?Sized> Sweep<'_, M> {
    fn quality(&self, v: f64) -> Result<f64> {
        let out = self.mechanism.run(&self.instance.with_valuation(self.agent, v)?)?;
        aggregate_quality(out.allocation.row(self.agent), self.instance.alphas())
    }

    fn vm_error(&self, v_low: f64, v_high: f64, quality_low: f64, quality_high: f64) -> AuctionError {
        AuctionError::VmViolation { agent: self.agent, v_low, v_high, quality_low, quality_high }
    }

    fn refine(&mut self, a: f64, qa: f64, b: f64, qb: f64) -> Result<()> {
        if qb < qa - QUALITY_NOISE {
            return Err(self.vm_error(a, b, qa, qb));
        }
        if qb - qa <= QUALITY_NOISE {
            return Ok(());
        }
        if b - a <= self.width {
            self.segments.push(Segment { v_low: a, v_high: b, quality_low: qa, quality_high: qb });
            return Ok(());
        }
        let c = 0.5 * (a + b);
        let qc = self.quality(c)?;
        if qc < qa - QUALITY_NOISE {
            return Err(self.vm_error(a, c, qa, qc));
        }
        if qb < qc - QUALITY_NOISE {
            return Err(self.vm_error(c, b, qc, qb));
        }
        let coarse = 0.5 * (a + b) * (qb - qa);
        let fine = 0.5 * (a + c) * (qc - qa) + 0.5 * (c + b) * (qb - qc);
        if (coarse - fine).abs() <= self.quad_tol {
            for (lo, ql, hi, qh) in [(a, qa, c, qc), (c, qc, b, qb)] {
                if qh - ql > QUALITY_NOISE {
                    self.segments.push(Segment { v_low: lo, v_high: hi, quality_low: ql, quality_high: qh });
                }
            }
            return Ok(());
        }
        self.refine(a, qa, c, qc)?;
        self.refine(c, qc, b, qb)
    }
}

/// Sweeps `agent`'s valuation over `[0, v_max]` (plus any extra `nodes`, which always
/// end brackets) with budgets fixed, bisecting jumps down to width `tol`.
///
/// Fails with [`AuctionError::VmViolation`] when the quality decreases somewhere.
pub fn find_critical_valuations<M: Mechanism + ?Sized>(
    mechanism: &M,
    instance: &SingleDimInstance,
    agent: usize,
    v_max: f64,
    tol: f64,
) -> Result<CriticalValuationProfile> {
    sweep(mechanism, instance, agent, v_max, &[], tol)
}

fn sweep<M: Mechanism + ?Sized>(
    mechanism: &M,
    instance: &SingleDimInstance,
    agent: usize,
    v_max: f64,
    nodes: &[f64],
    tol: f64,
) -> Result<CriticalValuationProfile> {
    if agent >= instance.num_agents() {
        return Err(AuctionError::invalid(format!("agent {agent} out of range")));
    }
    if !(v_max > 0.0 && v_max.is_finite()) || tol.is_nan() || tol <= 0.0 {
        return Err(AuctionError::invalid("sweep needs v_max > 0 and tol > 0"));
    }
    let mut points: Vec<f64> = (0..=INITIAL_PIECES).map(|k| v_max * k as f64 / INITIAL_PIECES as f64).collect();
    points.extend(nodes.iter().copied().filter(|&v| v > 0.0 && v <= v_max));
    points.sort_by(f64::total_cmp);
    points.dedup();

    let mut s = Sweep {
        mechanism,
        instance,
        agent,
        width: tol,
        quad_tol: tol * 1e-2,
        segments: Vec::new(),
    };
    let base = mechanism.run(&instance.with_valuation(agent, 0.0)?)?;
    let base_quality = aggregate_quality(base.allocation.row(agent), instance.alphas())?;
    let mut qualities = vec![base_quality];
    for &v in &points[1..] {
        qualities.push(s.quality(v)?);
    }
    for k in 1..points.len() {
        s.refine(points[k - 1], qualities[k - 1], points[k], qualities[k])?;
    }
    let levels = s.segments.iter().map(|g| g.quality_high).collect();
    let critical = s.segments.iter().map(Segment::critical).collect();
    Ok(CriticalValuationProfile {
        agent,
        budget: instance.budgets()[agent],
        v_max,
        base_quality,
        base_payment: base.payments[agent],
        levels,
        critical,
        segments: s.segments,
    })
}

fn sorted_grid(grid: &[f64]) -> Vec<f64> {
    let mut g: Vec<f64> = grid.iter().copied().filter(|v| v.is_finite() && *v >= 0.0).collect();
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

/// For every agent and every pair of grid valuations `v <= v'`, the aggregate
/// quality at `v'` is at least the one at `v` minus `tol`.
pub fn check_vm<M: Mechanism + ?Sized>(
    mechanism: &M,
    instance: &SingleDimInstance,
    grid: &[f64],
    tol: f64,
) -> Result<PropertyReport> {
    let grid = sorted_grid(grid);
    let report = PropertyReport::new("vm").param("tol", tol).param("grid_points", grid.len() as f64);
    for agent in 0..instance.num_agents() {
        let mut q = Vec::with_capacity(grid.len());
        for &v in &grid {
            let out = mechanism.run(&instance.with_valuation(agent, v)?)?;
            q.push(aggregate_quality(out.allocation.row(agent), instance.alphas())?);
        }
        for k in 0..grid.len() {
            if let Some(l) = (k + 1..grid.len()).find(|&l| q[l] < q[k] - tol) {
                return Ok(report.violated(Witness::Monotonicity {
                    agent,
                    v_low: grid[k],
                    v_high: grid[l],
                    quality_low: q[k],
                    quality_high: q[l],
                }));
            }
        }
    }
    Ok(report)
}

/// At every grid valuation of every agent, the mechanism's payment matches the one
/// rebuilt from the critical valuations within `tol`. Jumps are bisected to
/// `tol * 1e-3`.
pub fn check_pi<M: Mechanism + ?Sized>(
    mechanism: &M,
    instance: &SingleDimInstance,
    grid: &[f64],
    tol: f64,
) -> Result<PropertyReport> {
    let grid = sorted_grid(grid);
    let width = tol * 1e-3;
    let report = PropertyReport::new("pi")
        .param("tol", tol)
        .param("bisection_width", width)
        .param("grid_points", grid.len() as f64);
    let Some(&v_max) = grid.last() else {
        return Ok(report);
    };
    if v_max <= 0.0 {
        return Ok(report);
    }
    for agent in 0..instance.num_agents() {
        let profile = match sweep(mechanism, instance, agent, v_max, &grid, width) {
            Ok(p) => p,
            Err(e @ AuctionError::VmViolation { .. }) => {
                return Ok(report.inconclusive(format!("payment identity undefined: {e}")));
            }
            Err(e) => return Err(e),
        };
        for &v in &grid {
            let payment = mechanism.run(&instance.with_valuation(agent, v)?)?.payments[agent];
            let reconstructed = profile.implied_payment(v);
            if (payment - reconstructed).abs() > tol {
                return Ok(report.violated(Witness::PaymentMismatch { agent, valuation: v, payment, reconstructed }));
            }
        }
    }
    Ok(report)
}
