use serde::Serialize;

use super::gibbs::GibbsApproximation;
use crate::error::{Error, Result};
use crate::symbolic::Word;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModulusEstimate {
    pub c_hat: f64,
    pub theta: f64,
    pub depth: usize,
    /// `max |log(μ_λ([ω]) / μ_λ'([ω]))|`.
    pub max_log_ratio: f64,
    pub gap: f64,
}

fn gap(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid("parameter vectors differ in dimension"));
    }
    let g = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    if g == 0.0 {
        return Err(Error::DegenerateGap);
    }
    Ok(g)
}

/// Largest `|log` mass ratio`|` over depth-`n` words.
pub fn max_log_ratio(ga: &GibbsApproximation, gb: &GibbsApproximation, n: usize) -> Result<f64> {
    if ga.m != gb.m {
        return Err(Error::invalid("measures use different alphabets"));
    }
    let wa = ga.weights_at(n)?;
    let wb = gb.weights_at(n)?;
    let mut worst: f64 = 0.0;
    for (idx, (&a, &b)) in wa.iter().zip(&wb).enumerate() {
        match (a > 0.0, b > 0.0) {
            (true, true) => worst = worst.max((a / b).ln().abs()),
            (false, false) => {}
            _ => {
                return Err(Error::ZeroMass {
                    word: Word::from_index(idx, ga.m, n).to_string(),
                })
            }
        }
    }
    Ok(worst)
}

/// `ĉ = max_ω |log(μ_λ([ω]) / μ_λ'([ω]))| / (n·|λ − λ'|^θ)`.
pub fn measure_modulus(ga: &GibbsApproximation, gb: &GibbsApproximation, n: usize, theta: f64) -> Result<ModulusEstimate> {
    if n == 0 {
        return Err(Error::invalid("depth must be >= 1"));
    }
    let gap = gap(&ga.lambda, &gb.lambda)?;
    let worst = max_log_ratio(ga, gb, n)?;
    Ok(ModulusEstimate {
        c_hat: worst / (n as f64 * gap.powf(theta)),
        theta,
        depth: n,
        max_log_ratio: worst,
        gap,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulusSweep {
    pub estimates: Vec<ModulusEstimate>,
    /// Least-squares slope of `log(max_log_ratio/n)` against `log gap`.
    pub theta_fit: Option<f64>,
}

/// Modulus of `base` against each of `others`, with a fitted exponent.
pub fn measure_modulus_sweep(
    base: &GibbsApproximation,
    others: &[GibbsApproximation],
    n: usize,
    theta: f64,
) -> Result<ModulusSweep> {
    let estimates = others
        .iter()
        .map(|g| measure_modulus(base, g, n, theta))
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<(f64, f64)> = estimates
        .iter()
        .filter(|e| e.max_log_ratio > 0.0)
        .map(|e| (e.gap.ln(), (e.max_log_ratio / n as f64).ln()))
        .collect();
    Ok(ModulusSweep {
        theta_fit: fit_slope(&points),
        estimates,
    })
}

/// Ordinary least-squares slope; `None` with fewer than two distinct abscissae.
pub fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}
