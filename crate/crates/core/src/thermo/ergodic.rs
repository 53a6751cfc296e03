use serde::Serialize;

use super::gibbs::GibbsApproximation;
use super::potential::{anchor, Potential};
use super::pressure::log_lengths;
use crate::error::{Error, Result};
use crate::ifs::IFSFamily;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DepthEstimate {
    /// `Q_n − Q_{n−1}`.
    pub difference: f64,
    /// `Q_n / n`.
    pub raw: f64,
    pub depth: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErgodicStats {
    pub entropy: f64,
    pub lyapunov: f64,
    pub ratio: f64,
    pub depth: usize,
    /// Largest gap between the difference and raw estimators.
    pub extrapolation_residual: f64,
}

fn shannon(weights: &[f64]) -> f64 {
    -weights.iter().filter(|&&w| w > 0.0).map(|w| w * w.ln()).sum::<f64>()
}

/// Conditional entropy `H_n − H_{n−1}` and `H_n/n`, in nats.
pub fn entropy_estimate(g: &GibbsApproximation) -> Result<DepthEstimate> {
    let n = g.depth;
    if n < 2 {
        return Err(Error::invalid("entropy needs depth >= 2"));
    }
    let hn = shannon(&g.weights);
    let hp = shannon(&g.weights_at(n - 1)?);
    Ok(DepthEstimate {
        difference: hn - hp,
        raw: hn / n as f64,
        depth: n,
    })
}

fn mean_log_length(fam: &IFSFamily, lambda: &[f64], weights: &[f64], n: usize) -> Result<f64> {
    let logs = log_lengths(fam, lambda, n)?;
    Ok(-weights
        .iter()
        .zip(&logs)
        .filter(|(w, _)| **w > 0.0)
        .map(|(w, l)| w * l)
        .sum::<f64>())
}

/// `−Σ μ([ω]) log(|X_ω|/|X|)` at depths `n` and `n−1`.
pub fn lyapunov_estimate(g: &GibbsApproximation, fam: &IFSFamily, lambda: &[f64]) -> Result<DepthEstimate> {
    let n = g.depth;
    if n < 1 {
        return Err(Error::invalid("Lyapunov estimate needs depth >= 1"));
    }
    if g.m != fam.m() {
        return Err(Error::invalid("measure and family use different alphabets"));
    }
    let ln = mean_log_length(fam, lambda, &g.weights, n)?;
    let lp = if n > 1 {
        mean_log_length(fam, lambda, &g.weights_at(n - 1)?, n - 1)?
    } else {
        0.0
    };
    Ok(DepthEstimate {
        difference: ln - lp,
        raw: ln / n as f64,
        depth: n,
    })
}

pub fn ergodic_stats(g: &GibbsApproximation, fam: &IFSFamily, lambda: &[f64]) -> Result<ErgodicStats> {
    let h = entropy_estimate(g)?;
    let l = lyapunov_estimate(g, fam, lambda)?;
    Ok(ErgodicStats {
        entropy: h.difference,
        lyapunov: l.difference,
        ratio: h.difference / l.difference,
        depth: g.depth,
        extrapolation_residual: (h.difference - h.raw).abs().max((l.difference - l.raw).abs()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquilibriumCheck {
    pub pressure: f64,
    pub entropy: f64,
    pub integral: f64,
    pub residual: f64,
}

/// `|P(φ) − (h_μ + ∫φ dμ)|` with `∫φ dμ = Σ μ([ω]) φ(ω·1^∞)` at the measure's depth.
pub fn equilibrium_check(
    pot: &Potential,
    fam: &IFSFamily,
    lambda: &[f64],
    g: &GibbsApproximation,
) -> Result<EquilibriumCheck> {
    let n = g.depth;
    let pressure = match &g.eigen {
        Some(e) => e.log_eigenvalue,
        None => {
            let sums = super::potential::birkhoff_sums(pot, fam, lambda, n)?;
            let prev = super::potential::birkhoff_sums(pot, fam, lambda, n - 1)?;
            super::potential::log_sum_exp(&sums) - super::potential::log_sum_exp(&prev)
        }
    };
    let entropy = entropy_estimate(g)?.difference;
    // φ(ω·1^∞) = g_{ω_1}(f_{ω_2…ω_n}(p)); points built by prepending
    let p = anchor(fam, lambda)?;
    let mut points = vec![p];
    for _ in 1..n {
        let mut next = Vec::with_capacity(points.len() * fam.m());
        for a in 1..=fam.m() as u8 {
            let f = fam.map(a);
            next.extend(points.iter().map(|&x| f.eval(lambda, x)));
        }
        points = next;
    }
    let block = points.len();
    let mut integral = 0.0;
    for (idx, &w) in g.weights.iter().enumerate() {
        if w > 0.0 {
            let a = (idx / block) as u8 + 1;
            integral += w * pot.g(fam, lambda, a, points[idx % block]);
        }
    }
    Ok(EquilibriumCheck {
        pressure,
        entropy,
        integral,
        residual: (pressure - entropy - integral).abs(),
    })
}
