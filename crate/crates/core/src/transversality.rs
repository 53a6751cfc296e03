//! Grid verification of the transversality conditions.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ifs::IFSFamily;
use crate::symbolic::{enumerate_words_up_to, EventuallyPeriodicWord, Word};
use crate::thermo::fit_slope;

pub const ETA_LADDER: [f64; 6] = [0.2, 0.1, 0.05, 0.02, 0.01, 0.005];
pub const MAX_PAIRS: usize = 1_000_000;
pub const MAX_RECORDED_VIOLATIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub lambda: Vec<f64>,
    pub i: EventuallyPeriodicWord,
    pub j: EventuallyPeriodicWord,
    /// `|Π(i) − Π(j)|`.
    pub distance: f64,
    /// `|∇(Π(i) − Π(j))|`.
    pub gradient_gap: f64,
    /// Smallest ladder value at which the pair fails.
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransversalityReport {
    pub eta_passed: Option<f64>,
    /// `min max(distance upper bound, gradient lower bound)` over all tests.
    pub min_margin: f64,
    pub violations: Vec<Violation>,
    pub violation_count: usize,
    pub pairs_tested: usize,
    pub words: usize,
    pub depth: usize,
    pub grid: Vec<usize>,
    pub grid_points: usize,
    pub gradient_depth: usize,
}

/// Preperiods of length `≤ depth` followed by a constant tail, deduplicated.
pub fn sample_words(m: usize, depth: usize) -> Result<Vec<EventuallyPeriodicWord>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for pre in enumerate_words_up_to(m, depth)? {
        for s in 1..=m as u8 {
            let w = EventuallyPeriodicWord::new(pre.clone(), Word::new(vec![s]))?;
            if seen.insert(w.clone()) {
                out.push(w);
            }
        }
    }
    Ok(out)
}

struct Evaluated {
    value: f64,
    error: f64,
    gradient: Vec<f64>,
    tail: f64,
}

fn evaluate(fam: &IFSFamily, lambda: &[f64], w: &EventuallyPeriodicWord, n_grad: usize) -> Result<Evaluated> {
    let p = fam.natural_projection(lambda, w, 1e-14)?;
    let g = fam.projection_gradient(lambda, w, n_grad)?;
    Ok(Evaluated {
        value: p.value,
        error: p.error_bound,
        gradient: g.gradient,
        tail: g.tail_bound,
    })
}

/// Checks transversality on a parameter grid over sampled pairs with distinct first symbols.
pub fn check_mt(fam: &IFSFamily, grid: &[usize], depth: usize, n_grad: usize) -> Result<TransversalityReport> {
    let d = fam.d();
    if d == 0 {
        return Err(Error::invalid("transversality needs a parametrized family"));
    }
    if depth == 0 || n_grad == 0 {
        return Err(Error::invalid("depth and gradient depth must be >= 1"));
    }
    let words = sample_words(fam.m(), depth)?;
    let mut pairs = Vec::new();
    for (a, u) in words.iter().enumerate() {
        for (b, v) in words.iter().enumerate().skip(a + 1) {
            if u.symbol_at(0) != v.symbol_at(0) {
                pairs.push((a, b));
                if pairs.len() > MAX_PAIRS {
                    return Err(Error::BudgetExceeded {
                        requested: pairs.len() as u128,
                        budget: MAX_PAIRS as u128,
                    });
                }
            }
        }
    }
    let lambdas = fam.params().grid(grid);
    let sqrt_d = (d as f64).sqrt();
    let top = ETA_LADDER[0];

    let per_point: Vec<(f64, usize, Vec<Violation>)> = lambdas
        .par_iter()
        .map(|lambda| -> Result<(f64, usize, Vec<Violation>)> {
            let evals = words
                .iter()
                .map(|w| evaluate(fam, lambda, w, n_grad))
                .collect::<Result<Vec<_>>>()?;
            let mut min_margin = f64::INFINITY;
            let mut count = 0;
            let mut found = Vec::new();
            for &(a, b) in &pairs {
                let (u, v) = (&evals[a], &evals[b]);
                let distance = (u.value - v.value).abs();
                let gradient_gap = u
                    .gradient
                    .iter()
                    .zip(&v.gradient)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt();
                let dist_upper = distance + u.error + v.error;
                let grad_lower = (gradient_gap - sqrt_d * (u.tail + v.tail)).max(0.0);
                let margin = dist_upper.max(grad_lower);
                min_margin = min_margin.min(margin);
                if margin < top {
                    count += 1;
                    if found.len() < MAX_RECORDED_VIOLATIONS {
                        let eta = ETA_LADDER.iter().rev().copied().find(|&e| margin < e).unwrap_or(top);
                        found.push(Violation {
                            lambda: lambda.clone(),
                            i: words[a].clone(),
                            j: words[b].clone(),
                            distance,
                            gradient_gap,
                            eta,
                        });
                    }
                }
            }
            Ok((min_margin, count, found))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut min_margin = f64::INFINITY;
    let mut violation_count = 0;
    let mut violations = Vec::new();
    for (mm, c, v) in per_point {
        min_margin = min_margin.min(mm);
        violation_count += c;
        let room = MAX_RECORDED_VIOLATIONS - violations.len();
        violations.extend(v.into_iter().take(room));
    }
    let eta_passed = ETA_LADDER.iter().copied().find(|&e| e <= min_margin);
    Ok(TransversalityReport {
        eta_passed,
        min_margin,
        violations,
        violation_count,
        pairs_tested: pairs.len(),
        words: words.len(),
        depth,
        grid: grid.to_vec(),
        grid_points: lambdas.len(),
        gradient_depth: n_grad,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct T3Report {
    /// `(r, fraction of cells with |Π(i) − Π(j)| < r)`.
    pub fractions: Vec<(f64, f64)>,
    /// Least-squares slope of fraction against `r`.
    pub slope: Option<f64>,
    pub cells: usize,
}

/// Fraction of parameter cells where the two projections are `r`-close.
pub fn check_t3_slope(
    fam: &IFSFamily,
    i: &EventuallyPeriodicWord,
    j: &EventuallyPeriodicWord,
    radii: &[f64],
    grid: &[usize],
) -> Result<T3Report> {
    if i.symbol_at(0) == j.symbol_at(0) {
        return Err(Error::invalid("words must have distinct first symbols"));
    }
    if fam.d() == 0 {
        return Err(Error::invalid("T3 needs a parametrized family"));
    }
    let cells = fam.params().cell_centers(grid);
    let gaps = cells
        .par_iter()
        .map(|lambda| {
            let a = fam.natural_projection(lambda, i, 1e-14)?.value;
            let b = fam.natural_projection(lambda, j, 1e-14)?.value;
            Ok((a - b).abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    let total = gaps.len() as f64;
    let fractions: Vec<(f64, f64)> = radii
        .iter()
        .map(|&r| (r, gaps.iter().filter(|&&g| g < r).count() as f64 / total))
        .collect();
    Ok(T3Report {
        slope: fit_slope(&fractions),
        fractions,
        cells: gaps.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::{bernoulli_convolution_family, vertical_translate_family, Interval, MapSpec, ParamBox};

    fn translates() -> IFSFamily {
        let base = IFSFamily::affine(&[(1.0 / 3.0, 0.0), (1.0 / 3.0, 2.0 / 3.0)], Interval::new(0.0, 1.0)).unwrap();
        vertical_translate_family(&base, 0.05).unwrap()
    }

    fn constant_overlap() -> IFSFamily {
        IFSFamily::new(
            vec![MapSpec::affine(0.5, 0.0), MapSpec::affine(0.5, 0.25)],
            Interval::new(0.0, 1.0),
            ParamBox::new(vec![Interval::new(0.0, 1.0)]),
            0.5,
            0.5,
        )
        .unwrap()
    }

    fn ep(pre: &[u8], per: &[u8]) -> EventuallyPeriodicWord {
        EventuallyPeriodicWord::from_slices(pre, per).unwrap()
    }

    #[test]
    fn sample_words_are_distinct() {
        let w = sample_words(2, 3).unwrap();
        let set: HashSet<_> = w.iter().cloned().collect();
        assert_eq!(set.len(), w.len());
        assert!(w.contains(&ep(&[], &[1])) && w.contains(&ep(&[1, 2, 2], &[1])));
    }

    #[test]
    fn translates_pass() {
        let r = check_mt(&translates(), &[9], 4, 30).unwrap();
        assert!(r.eta_passed.unwrap() >= 0.05);
        assert!(r.violations.is_empty());
        assert_eq!(r.grid_points, 81);
    }

    #[test]
    fn constant_family_fails() {
        let r = check_mt(&constant_overlap(), &[5], 2, 10).unwrap();
        assert_eq!(r.eta_passed, None);
        assert!(!r.violations.is_empty());
        let v = r
            .violations
            .iter()
            .find(|v| v.i == ep(&[1], &[2]) && v.j == ep(&[2], &[1]))
            .expect("coincident projections");
        assert!(v.distance < 1e-15 && v.gradient_gap == 0.0);
        for v in &r.violations {
            assert!(v.distance < v.eta && v.gradient_gap < v.eta);
        }
    }

    #[test]
    fn bc_interval_passes() {
        let bc = bernoulli_convolution_family(0.5, 0.6684755).unwrap();
        let r = check_mt(&bc, &[9], 5, 60).unwrap();
        // observed margin ≈ 0.0723 on this grid
        assert_eq!(r.eta_passed, Some(0.05));
        assert!(r.violations.iter().all(|v| v.eta > 0.05));
    }

    #[test]
    fn eta_monotone_in_depth() {
        let bc = bernoulli_convolution_family(0.5, 0.6684755).unwrap();
        let a = check_mt(&bc, &[5], 2, 60).unwrap();
        let b = check_mt(&bc, &[5], 4, 60).unwrap();
        assert!(b.min_margin <= a.min_margin);
        assert!(b.eta_passed.unwrap_or(0.0) <= a.eta_passed.unwrap_or(0.0));
    }

    #[test]
    fn translate_gradient_bounds() {
        let fam = translates();
        let g2 = fam.gamma2();
        let lambda = [0.02, -0.01];
        for (i, j) in [(ep(&[], &[1]), ep(&[2], &[2, 1])), (ep(&[1, 2], &[2]), ep(&[2, 2, 1], &[1]))] {
            let gi = fam.projection_gradient(&lambda, &i, 40).unwrap().gradient;
            let gj = fam.projection_gradient(&lambda, &j, 40).unwrap().gradient;
            assert!(((gi[0] - gj[0]) - 1.0).abs() <= g2 / (1.0 - g2) + 1e-12);
            assert!(((gi[1] - gj[1]) + 1.0).abs() <= g2 / (1.0 - g2) + 1e-12);
        }
    }

    #[test]
    fn t3_examples() {
        let fam = translates();
        let (i, j) = (ep(&[], &[1]), ep(&[], &[2]));
        // ΔΠ = 1.5(λ1 − λ2) − 1; never close for small r
        let t = check_t3_slope(&fam, &i, &j, &[0.01, 0.1], &[40]).unwrap();
        assert!(t.fractions.iter().all(|&(_, f)| f == 0.0));
        let t = check_t3_slope(&fam, &i, &j, &[2.0], &[10]).unwrap();
        assert_eq!(t.fractions[0].1, 1.0);

        // slab oracle: {λ1 − λ2 > c} has area (2ε − c)²/2 in the square of side 2ε
        let eps = 0.05;
        let radii = [0.88, 0.91, 0.94, 0.97, 1.0];
        let t = check_t3_slope(&fam, &i, &j, &radii, &[400]).unwrap();
        for &(r, f) in &t.fractions {
            let c = (1.0 - r) / 1.5;
            let oracle = (2.0 * eps - c).powi(2) / 2.0 / (2.0 * eps).powi(2);
            assert!((f - oracle).abs() < 0.01, "r={r}: {f} vs {oracle}");
        }
        assert!(t.slope.unwrap().is_finite());
        for w in t.fractions.windows(2) {
            assert!(w[0].1 <= w[1].1);
        }
    }
}
