//! Energy, correlation, box-counting and local dimension estimators.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ifs::IFSFamily;
use crate::symbolic::check_budget;
use crate::thermo::{ergodic_stats, fit_slope, log_lengths, GibbsApproximation};

pub const MIN_LOCAL_SAMPLES: usize = 10_000;
const CORRELATION_ITERATIONS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergySeries {
    pub alpha: f64,
    /// `E_n` for `n = 0..=N`.
    pub terms: Vec<f64>,
    pub partial_sum: f64,
    /// Least-squares slope of `log E_n` in `n` over the last half of the levels.
    pub growth_rate: Option<f64>,
}

impl EnergySeries {
    pub fn converges(&self) -> bool {
        self.growth_rate.is_none_or(|g| g < 0.0)
    }
}

/// Per-level data independent of `α`: `log(|X_ω|/|X|)` and `Σ_{a≠b} μ(ωa)μ(ωb)`.
struct EnergyLevels {
    levels: Vec<(Vec<f64>, Vec<f64>)>,
}

impl EnergyLevels {
    fn build(g: &GibbsApproximation, fam: &IFSFamily, lambda: &[f64], n_levels: usize) -> Result<Self> {
        if g.m != fam.m() {
            return Err(Error::invalid("measure and family use different alphabets"));
        }
        let m = g.m;
        check_budget(m, n_levels + 1)?;
        let mut weights = g.weights_at(n_levels + 1)?;
        let mut levels = Vec::with_capacity(n_levels + 1);
        for n in (0..=n_levels).rev() {
            let pair: Vec<f64> = weights
                .chunks(m)
                .map(|c| {
                    let s: f64 = c.iter().sum();
                    s * s - c.iter().map(|w| w * w).sum::<f64>()
                })
                .collect();
            levels.push((log_lengths(fam, lambda, n)?, pair));
            weights = weights.chunks(m).map(|c| c.iter().sum()).collect();
        }
        levels.reverse();
        Ok(EnergyLevels { levels })
    }

    fn series(&self, alpha: f64) -> EnergySeries {
        let terms: Vec<f64> = self
            .levels
            .iter()
            .map(|(logs, pair)| {
                logs.iter()
                    .zip(pair)
                    .filter(|(_, p)| **p > 0.0)
                    .map(|(l, p)| (-alpha * l).exp() * p)
                    .sum::<f64>()
                    .max(0.0)
            })
            .collect();
        let n = terms.len();
        let tail = n.saturating_sub(1).div_ceil(2).max(1);
        let points: Vec<(f64, f64)> = terms
            .iter()
            .enumerate()
            .skip(n - tail)
            .filter(|(_, t)| **t > 0.0)
            .map(|(k, t)| (k as f64, t.ln()))
            .collect();
        EnergySeries {
            alpha,
            partial_sum: terms.iter().sum(),
            growth_rate: fit_slope(&points),
            terms,
        }
    }
}

/// `E_n = Σ_{|ω|=n} (|X_ω|/|X|)^{−α} Σ_{a≠b} μ([ωa]) μ([ωb])` for `n = 0..=N`.
pub fn symbolic_energy(
    g: &GibbsApproximation,
    fam: &IFSFamily,
    lambda: &[f64],
    alpha: f64,
    n_levels: usize,
) -> Result<EnergySeries> {
    if !(alpha > 0.0) {
        return Err(Error::invalid("alpha must be positive"));
    }
    Ok(EnergyLevels::build(g, fam, lambda, n_levels)?.series(alpha))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationDimension {
    pub value: f64,
    pub bracket: (f64, f64),
    pub levels: usize,
}

/// Bisection in `α` on the sign of the energy growth rate.
pub fn correlation_dimension_estimate(
    g: &GibbsApproximation,
    fam: &IFSFamily,
    lambda: &[f64],
    n_levels: usize,
) -> Result<CorrelationDimension> {
    if n_levels < 3 {
        return Err(Error::invalid("correlation dimension needs at least 3 levels"));
    }
    let levels = EnergyLevels::build(g, fam, lambda, n_levels)?;
    let growth = |a: f64| levels.series(a).growth_rate;
    if growth(0.0).is_none() {
        // no pair mass at any fitted level: atomic measure
        return Ok(CorrelationDimension {
            value: 0.0,
            bracket: (0.0, 0.0),
            levels: n_levels,
        });
    }
    let mut lo = 0.0;
    let mut hi = 2.0;
    while growth(hi).is_some_and(|r| r < 0.0) && hi < 64.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..CORRELATION_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if growth(mid).is_some_and(|r| r < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(CorrelationDimension {
        value: 0.5 * (lo + hi),
        bracket: (lo, hi),
        levels: n_levels,
    })
}

/// `min{1, h/χ}`.
pub fn dimension_formula(h: f64, chi: f64) -> Result<f64> {
    if !(chi > 0.0) {
        return Err(Error::NonpositiveLyapunov(chi));
    }
    if !(h >= 0.0) {
        return Err(Error::invalid("entropy must be nonnegative"));
    }
    Ok((h / chi).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxCount {
    pub depth: usize,
    pub delta: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxDimension {
    pub estimate: f64,
    pub counts: Vec<BoxCount>,
}

/// Number of `δ`-mesh boxes hit by the level-`n` cylinders, `δ` the largest cylinder length.
pub fn box_count(fam: &IFSFamily, lambda: &[f64], n: usize) -> Result<BoxCount> {
    let cover = fam.cylinder_cover(lambda, n)?;
    let delta = cover.iter().map(|iv| iv.len()).fold(0.0, f64::max);
    // endpoint rounding grows with the box index, so the snap tolerance does too
    let tol = |v: f64| 1e-9 * v.abs().max(1.0);
    let mut boxes: Vec<i64> = Vec::with_capacity(cover.len() * 2);
    for iv in &cover {
        let (lo, hi) = (iv.lo / delta, iv.hi / delta);
        let a = (lo + tol(lo)).floor() as i64;
        let b = ((hi - tol(hi)).floor() as i64).max(a);
        boxes.extend(a..=b);
    }
    boxes.sort_unstable();
    boxes.dedup();
    Ok(BoxCount {
        depth: n,
        delta,
        count: boxes.len(),
    })
}

/// Log-log slope of box counts over the given depths.
pub fn box_dimension_estimate(fam: &IFSFamily, lambda: &[f64], depths: &[usize]) -> Result<BoxDimension> {
    if depths.len() < 2 {
        return Err(Error::invalid("box dimension needs at least two depths"));
    }
    let counts = depths
        .iter()
        .map(|&n| box_count(fam, lambda, n))
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<(f64, f64)> = counts
        .iter()
        .map(|c| ((1.0 / c.delta).ln(), (c.count as f64).ln()))
        .collect();
    let estimate = fit_slope(&points).ok_or(Error::invalid("depths must give distinct mesh sizes"))?;
    Ok(BoxDimension { estimate, counts })
}

/// Log-log slope of the empirical mass of `B(x, r)` over a decreasing ladder of radii.
pub fn local_dimension_estimate(samples: &[f64], x: f64, radii: &[f64]) -> Result<f64> {
    if samples.len() < MIN_LOCAL_SAMPLES {
        return Err(Error::invalid(format!("need at least {MIN_LOCAL_SAMPLES} samples")));
    }
    if radii.len() < 2 || radii.windows(2).any(|w| !(w[0] > w[1])) || radii.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::invalid("radii must be positive and strictly decreasing"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let total = sorted.len() as f64;
    let mass = |r: f64| {
        let lo = sorted.partition_point(|&s| s < x - r);
        let hi = sorted.partition_point(|&s| s <= x + r);
        (hi - lo) as f64 / total
    };
    let smallest = radii[radii.len() - 1];
    if mass(smallest) == 0.0 {
        return Err(Error::EmptyBall { radius: smallest });
    }
    let points: Vec<(f64, f64)> = radii.iter().map(|&r| (r.ln(), mass(r).ln())).collect();
    fit_slope(&points).ok_or(Error::invalid("degenerate radius ladder"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergySandwich {
    pub energy: f64,
    pub lower_energy: f64,
    pub upper_energy: f64,
    /// `E_α(A) / E_{α−ε}(B)`.
    pub ratio_low: f64,
    /// `E_α(A) / E_{α+ε}(B)`.
    pub ratio_high: f64,
    pub depth: usize,
}

/// Discrete `α`-energy of the projected measure: atoms at `Π(ω·1^∞)`, distances floored at `floor`.
fn projected_energy(points: &[f64], weights: &[f64], alpha: f64, floor: f64) -> f64 {
    let rows: Vec<f64> = (0..points.len())
        .into_par_iter()
        .map(|i| {
            let (x, w) = (points[i], weights[i]);
            if w == 0.0 {
                return 0.0;
            }
            let mut acc = 0.0;
            for (j, (&y, &v)) in points.iter().zip(weights).enumerate() {
                if j != i && v > 0.0 {
                    acc += v * (x - y).abs().max(floor).powf(-alpha);
                }
            }
            w * acc
        })
        .collect();
    rows.iter().sum()
}

fn atoms(fam: &IFSFamily, lambda: &[f64], n: usize) -> Result<(Vec<f64>, f64)> {
    let p = crate::thermo::potential::anchor(fam, lambda)?;
    let mut pts = vec![p];
    for _ in 0..n {
        let mut next = Vec::with_capacity(pts.len() * fam.m());
        for a in 1..=fam.m() as u8 {
            let f = fam.map(a);
            next.extend(pts.iter().map(|&x| f.eval(lambda, x)));
        }
        pts = next;
    }
    let scale = fam.cylinder_cover(lambda, n)?.iter().map(|iv| iv.len()).fold(0.0, f64::max);
    Ok((pts, scale))
}

/// Compares `E_α` of the projection of `ga` with `E_{α∓ε}` of the projection of `gb`.
pub fn energy_continuity_probe(
    ga: &GibbsApproximation,
    gb: &GibbsApproximation,
    fam: &IFSFamily,
    lambda: &[f64],
    alpha: f64,
    eps: f64,
) -> Result<EnergySandwich> {
    if ga.depth != gb.depth || ga.m != gb.m {
        return Err(Error::invalid("measures must share depth and alphabet"));
    }
    if !(alpha > 0.0 && eps >= 0.0 && alpha - eps >= 0.0) {
        return Err(Error::invalid("need alpha > 0 and 0 <= eps <= alpha"));
    }
    let n = ga.depth;
    let (pts, floor) = atoms(fam, lambda, n)?;
    let energy = projected_energy(&pts, &ga.weights, alpha, floor);
    let lower_energy = projected_energy(&pts, &gb.weights, alpha - eps, floor);
    let upper_energy = projected_energy(&pts, &gb.weights, alpha + eps, floor);
    Ok(EnergySandwich {
        energy,
        lower_energy,
        upper_energy,
        ratio_low: energy / lower_energy,
        ratio_high: energy / upper_energy,
        depth: n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionReport {
    pub h: f64,
    pub chi: f64,
    pub ratio_dim: f64,
    pub cor_dim: f64,
    pub cor_bracket: (f64, f64),
    pub box_dim: Option<f64>,
    pub depth: usize,
    pub energy_levels: usize,
    pub extrapolation_residual: f64,
}

pub fn dimension_report(
    g: &GibbsApproximation,
    fam: &IFSFamily,
    lambda: &[f64],
    energy_levels: usize,
    box_depths: Option<&[usize]>,
) -> Result<DimensionReport> {
    let stats = ergodic_stats(g, fam, lambda)?;
    let cor = correlation_dimension_estimate(g, fam, lambda, energy_levels)?;
    let box_dim = match box_depths {
        Some(d) => Some(box_dimension_estimate(fam, lambda, d)?.estimate),
        None => None,
    };
    Ok(DimensionReport {
        h: stats.entropy,
        chi: stats.lyapunov,
        ratio_dim: dimension_formula(stats.entropy.max(0.0), stats.lyapunov)?,
        cor_dim: cor.value,
        cor_bracket: cor.bracket,
        box_dim,
        depth: g.depth,
        energy_levels,
        extrapolation_residual: stats.extrapolation_residual,
    })
}
