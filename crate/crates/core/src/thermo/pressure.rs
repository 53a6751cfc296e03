use serde::Serialize;

use super::potential::log_sum_exp;
use crate::error::{Error, Result};
use crate::ifs::IFSFamily;
use crate::symbolic::{check_budget, cylinder_budget};

/// Cap on the number of cylinders used by the dimension solver.
pub const DIMENSION_CYLINDER_CAP: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PressureEstimate {
    pub depth: usize,
    /// `(1/n)·log Σ |X_ω|^t`.
    pub value: f64,
    /// `2P_{2n} − P_n` when depth `2n` fits the budget.
    pub richardson: Option<f64>,
}

impl PressureEstimate {
    pub fn best(&self) -> f64 {
        self.richardson.unwrap_or(self.value)
    }
}

/// `log(|X_ω|/|X|)` for all level-`n` cylinders, lexicographic order.
pub fn log_lengths(fam: &IFSFamily, lambda: &[f64], n: usize) -> Result<Vec<f64>> {
    let scale = fam.domain().len();
    let log_scale = scale.ln();
    Ok(fam
        .cylinder_log_lengths(lambda, n)?
        .into_iter()
        .map(|l| l - log_scale)
        .collect())
}

fn pressure_from(logs: &[f64], t: f64, n: usize) -> f64 {
    let scaled: Vec<f64> = logs.iter().map(|l| t * l).collect();
    log_sum_exp(&scaled) / n as f64
}

/// `(1/n)·log Σ_{|ω|=n} |X_ω|^t` with lengths measured relative to `|X|`.
pub fn pressure(fam: &IFSFamily, lambda: &[f64], t: f64, n: usize) -> Result<PressureEstimate> {
    if n == 0 {
        return Err(Error::invalid("depth must be >= 1"));
    }
    let value = pressure_from(&log_lengths(fam, lambda, n)?, t, n);
    let richardson = match check_budget(fam.m(), 2 * n) {
        Ok(_) => Some(2.0 * pressure_from(&log_lengths(fam, lambda, 2 * n)?, t, 2 * n) - value),
        Err(_) => None,
    };
    Ok(PressureEstimate {
        depth: n,
        value,
        richardson,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DimensionEstimate {
    pub value: f64,
    pub depth: usize,
    /// Root at the largest depth alone minus the extrapolated root.
    pub sensitivity: f64,
}

fn bisect_decreasing(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn root_bracket(f: &impl Fn(f64) -> f64, upper: f64) -> Result<(f64, f64)> {
    let mut hi = upper.max(1e-3);
    for _ in 0..60 {
        if f(hi) <= 0.0 {
            return Ok((0.0, hi));
        }
        hi *= 2.0;
    }
    Err(Error::NoConvergence {
        context: "pressure root bracket",
        residual: f(hi),
    })
}

/// Zero of the pressure function, by bisection to `1e-9`.
pub fn conformal_similarity_dimension(fam: &IFSFamily, lambda: &[f64]) -> Result<DimensionEstimate> {
    let cap = cylinder_budget().min(DIMENSION_CYLINDER_CAP);
    let m = fam.m() as u64;
    let mut n = 1usize;
    while m.saturating_pow(n as u32 + 1) <= cap {
        n += 1;
    }
    let n2 = if n >= 2 { n - n % 2 } else { n };
    let n1 = (n2 / 2).max(1);
    let fine = log_lengths(fam, lambda, n2)?;
    let coarse = log_lengths(fam, lambda, n1)?;
    let upper = (fam.m() as f64).ln() / -fam.gamma2().ln();

    let raw = |t: f64| pressure_from(&fine, t, n2);
    let extrapolated = |t: f64| {
        if n2 == n1 {
            raw(t)
        } else {
            2.0 * raw(t) - pressure_from(&coarse, t, n1)
        }
    };
    let (lo, hi) = root_bracket(&extrapolated, upper)?;
    let value = bisect_decreasing(extrapolated, lo, hi, 1e-9);
    let (lo, hi) = root_bracket(&raw, upper)?;
    let plain = bisect_decreasing(raw, lo, hi, 1e-9);
    Ok(DimensionEstimate {
        value,
        depth: n2,
        sensitivity: plain - value,
    })
}

/// Root of `Σ r_i^s = 1`, to `1e-12`.
pub fn solve_similarity_dimension(ratios: &[f64]) -> Result<f64> {
    if ratios.is_empty() || ratios.iter().any(|&r| !(r > 0.0 && r < 1.0)) {
        return Err(Error::invalid("ratios must lie in (0, 1)"));
    }
    let m = ratios.len() as f64;
    let rmin = ratios.iter().copied().fold(1.0, f64::min);
    let rmax = ratios.iter().copied().fold(0.0, f64::max);
    // m·rmin^s ≤ Σ r_i^s ≤ m·rmax^s brackets the root
    let lo = m.ln() / -rmin.ln();
    let hi = m.ln() / -rmax.ln();
    if lo == hi {
        return Ok(lo);
    }
    let f = |s: f64| ratios.iter().map(|r| r.powf(s)).sum::<f64>() - 1.0;
    Ok(bisect_decreasing(f, lo, hi, 1e-13))
}
