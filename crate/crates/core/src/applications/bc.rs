use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::chaos::{stream_rng, BURN_IN};
use super::stats::Welford;
use crate::error::{Error, Result};

/// Parameter interval on which the Bernoulli convolution family is transversal.
pub const TRANSVERSALITY_INTERVAL: (f64, f64) = (0.5, 0.6684755);

/// Bernoulli convolution `ψ₀(x) = λx − (1−λ)`, `ψ₁(x) = λx + (1−λ)` on `[−1, 1]`
/// with probabilities `p₀(x) = 1/2 + ρx`, `p₁(x) = 1/2 − ρx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlaceDepBC {
    pub lambda: f64,
    pub rho: f64,
}

fn check_params(lambda: f64, rho: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::invalid(format!("lambda must lie in (0, 1), got {lambda}")));
    }
    if !(0.0..0.5).contains(&rho) {
        return Err(Error::invalid(format!("rho must lie in [0, 1/2), got {rho}")));
    }
    Ok(())
}

impl PlaceDepBC {
    pub fn new(lambda: f64, rho: f64) -> Result<Self> {
        check_params(lambda, rho)?;
        Ok(Self { lambda, rho })
    }

    pub fn p0(&self, x: f64) -> f64 {
        0.5 + self.rho * x
    }

    pub fn p1(&self, x: f64) -> f64 {
        0.5 - self.rho * x
    }

    pub fn probability(&self, branch: u8, x: f64) -> f64 {
        if branch == 0 {
            self.p0(x)
        } else {
            self.p1(x)
        }
    }

    pub fn psi(&self, branch: u8, x: f64) -> f64 {
        let shift = 1.0 - self.lambda;
        if branch == 0 {
            self.lambda * x - shift
        } else {
            self.lambda * x + shift
        }
    }
}

/// Chain samples; `branches[k]` is the branch taken from `points[k]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BcSamples {
    pub points: Vec<f64>,
    pub branches: Vec<u8>,
}

pub fn bc_chaos_game(spec: &PlaceDepBC, n: usize, seed: u64) -> BcSamples {
    bc_chaos_game_stream(spec, n, seed, 0)
}

/// Markov chain from `x₀ = 0` with burn-in, on generator stream `stream`.
pub fn bc_chaos_game_stream(spec: &PlaceDepBC, n: usize, seed: u64, stream: u64) -> BcSamples {
    let mut rng = stream_rng(seed, stream);
    let mut x = 0.0;
    let mut points = Vec::with_capacity(n);
    let mut branches = Vec::with_capacity(n);
    for step in 0..BURN_IN + n {
        let u: f64 = rng.gen();
        let branch = if u < spec.p0(x) { 0 } else { 1 };
        if step >= BURN_IN {
            points.push(x);
            branches.push(branch);
        }
        x = spec.psi(branch, x);
    }
    BcSamples { points, branches }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BcErgodic {
    pub h_mc: f64,
    pub h_std_error: f64,
    pub chi_mc: f64,
    pub chi_std_error: f64,
    pub samples: usize,
}

pub const MIN_ERGODIC_SAMPLES: usize = 10_000;

/// Monte Carlo entropy `−E Σ p log p` and Lyapunov exponent.
pub fn bc_entropy_lyapunov(spec: &PlaceDepBC, samples: &[f64]) -> Result<BcErgodic> {
    if samples.len() < MIN_ERGODIC_SAMPLES {
        return Err(Error::invalid(format!("need at least {MIN_ERGODIC_SAMPLES} samples")));
    }
    let mut h = Welford::new();
    for &x in samples {
        let (p0, p1) = (spec.p0(x), spec.p1(x));
        h.push(-(p0 * p0.ln() + p1 * p1.ln()));
    }
    let s = h.summary();
    // |ψ'| = λ on both branches and the probabilities sum to one
    Ok(BcErgodic {
        h_mc: s.mean,
        h_std_error: s.std_error,
        chi_mc: -spec.lambda.ln(),
        chi_std_error: 0.0,
        samples: samples.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BcBounds {
    pub a: f64,
    pub b: f64,
    pub dim_lower: f64,
    pub dim_upper: f64,
}

/// Entropy bounds `A − B ≤ h ≤ A` and the dimension bounds they imply.
pub fn bc_bounds(lambda: f64, rho: f64) -> Result<BcBounds> {
    check_params(lambda, rho)?;
    let s = 1.0 - lambda;
    let a = 2f64.ln() - 2.0 * rho * rho * s * s / (1.0 + lambda * (4.0 * rho * s - lambda));
    let b = rho * rho / (3.0 * (1.0 - 4.0 * rho * rho));
    let chi = -lambda.ln();
    Ok(BcBounds {
        a,
        b,
        dim_lower: (a - b) / chi,
        dim_upper: a / chi,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionClass {
    AbsContAe,
    Singular,
    Undetermined,
}

impl RegionClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegionClass::AbsContAe => "abs_cont_ae",
            RegionClass::Singular => "singular",
            RegionClass::Undetermined => "undetermined",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionCell {
    pub lambda: f64,
    pub rho: f64,
    pub bounds: BcBounds,
    pub class: RegionClass,
}

pub fn bc_region_classify(lambda: f64, rho: f64) -> Result<RegionCell> {
    let bounds = bc_bounds(lambda, rho)?;
    let (lo, hi) = TRANSVERSALITY_INTERVAL;
    let class = if bounds.dim_upper < 1.0 {
        RegionClass::Singular
    } else if lambda > lo && lambda < hi && bounds.dim_lower > 1.0 {
        RegionClass::AbsContAe
    } else {
        RegionClass::Undetermined
    };
    Ok(RegionCell { lambda, rho, bounds, class })
}

/// Classification over the product grid, `λ` outer and `ρ` inner.
pub fn bc_region_scan(lambdas: &[f64], rhos: &[f64]) -> Result<Vec<RegionCell>> {
    lambdas
        .par_iter()
        .flat_map_iter(|&l| rhos.iter().map(move |&r| bc_region_classify(l, r)))
        .collect()
}

/// `|E φ(x) − E Σ p_i(x) φ(ψ_i(x))|` over the samples.
pub fn stationarity_residual(spec: &PlaceDepBC, samples: &[f64], phi: impl Fn(f64) -> f64) -> f64 {
    let mut acc = Welford::new();
    for &x in samples {
        let fx = phi(x);
        acc.push(spec.p0(x) * (fx - phi(spec.psi(0, x))) + spec.p1(x) * (fx - phi(spec.psi(1, x))));
    }
    acc.mean().abs()
}

pub const MIN_STATIONARITY_SAMPLES: usize = 100_000;

/// Largest stationarity residual over `φ_j(x) = cos(jπx/2)`, `j = 1..=test_fns`.
pub fn stationarity_check(spec: &PlaceDepBC, samples: &[f64], test_fns: usize) -> Result<f64> {
    if samples.len() < MIN_STATIONARITY_SAMPLES {
        return Err(Error::invalid(format!("need at least {MIN_STATIONARITY_SAMPLES} samples")));
    }
    Ok((1..=test_fns)
        .map(|j| {
            let w = j as f64 * std::f64::consts::FRAC_PI_2;
            stationarity_residual(spec, samples, |x| (w * x).cos())
        })
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::applications::stats::ks_uniform;

    #[test]
    fn constructor_rejects_half() {
        assert!(PlaceDepBC::new(0.6, 0.5).is_err());
        assert!(PlaceDepBC::new(1.0, 0.1).is_err());
        assert!(PlaceDepBC::new(0.6, 0.49).is_ok());
    }

    #[test]
    fn uniform_at_half() {
        let s = PlaceDepBC::new(0.5, 0.0).unwrap();
        let xs = bc_chaos_game(&s, 100_000, 11).points;
        assert!(ks_uniform(&xs, -1.0, 1.0) < 0.02);
        assert!(stationarity_check(&s, &xs, 4).unwrap() < 0.02);
    }

    #[test]
    fn cantor_gap_is_empty() {
        let s = PlaceDepBC::new(0.4, 0.0).unwrap();
        let xs = bc_chaos_game(&s, 50_000, 5).points;
        let gap = (2.0 * 0.4 - 1.0, 1.0 - 2.0 * 0.4);
        assert_eq!(xs.iter().filter(|&&x| x > gap.0 && x < gap.1).count(), 0);
    }

    #[test]
    fn samples_and_branch_frequency() {
        let s = PlaceDepBC::new(0.6, 0.3).unwrap();
        let out = bc_chaos_game(&s, 100_000, 2);
        assert!(out.points.iter().all(|x| (-1.0..=1.0).contains(x)));
        let mut p = Welford::new();
        out.points.iter().for_each(|&x| p.push(s.p0(x)));
        let freq = out.branches.iter().filter(|&&b| b == 0).count() as f64 / out.branches.len() as f64;
        let sigma = (freq * (1.0 - freq) / out.branches.len() as f64).sqrt();
        assert!((p.mean() - freq).abs() < 3.0 * sigma);
    }

    #[test]
    fn entropy_lyapunov() {
        let s = PlaceDepBC::new(0.55, 0.0).unwrap();
        let xs = bc_chaos_game(&s, 10_000, 1).points;
        let e = bc_entropy_lyapunov(&s, &xs).unwrap();
        assert_eq!(e.h_mc, 2f64.ln());
        assert!((e.chi_mc - 0.597837).abs() < 1e-6);

        let s = PlaceDepBC::new(0.55, 0.1).unwrap();
        let xs = bc_chaos_game(&s, 200_000, 3).points;
        let e = bc_entropy_lyapunov(&s, &xs).unwrap();
        let b = bc_bounds(0.55, 0.1).unwrap();
        let tol = 3.0 * e.h_std_error;
        assert!(e.h_mc >= b.a - b.b - tol && e.h_mc <= b.a + tol, "{e:?} {b:?}");
        assert!(bc_entropy_lyapunov(&s, &xs[..100]).is_err());
    }

    #[test]
    fn bounds_examples() {
        let b = bc_bounds(0.6, 0.0).unwrap();
        assert_eq!(b.a, 2f64.ln());
        assert_eq!(b.b, 0.0);
        assert_eq!(b.dim_lower, b.dim_upper);
        let b = bc_bounds(0.55, 0.1).unwrap();
        // rational oracle: 2ρ²(1−λ)² = 81/20000, denominator 1593/2000
        let a = 2f64.ln() - 81.0 / 20000.0 * 2000.0 / 1593.0;
        assert!((b.a - a).abs() < 1e-15);
        assert!((b.a - 0.688062).abs() < 1e-6);
        assert!((b.b - 1.0 / 288.0).abs() < 1e-15);
        let b = bc_bounds(0.6, 0.2).unwrap();
        assert!((b.b - 0.04 / 2.52).abs() < 1e-15);
    }

    #[test]
    fn region_examples() {
        assert_eq!(bc_region_classify(0.66, 0.02).unwrap().class, RegionClass::AbsContAe);
        let c = bc_region_classify(0.55, 0.45).unwrap();
        let expected = if c.bounds.dim_upper < 1.0 { RegionClass::Singular } else { RegionClass::Undetermined };
        assert_eq!(c.class, expected);
        assert_eq!(bc_region_classify(0.45, 0.1).unwrap().class, RegionClass::Singular);
        assert_eq!(bc_region_classify(0.8, 0.1).unwrap().class, RegionClass::Undetermined);
        let scan = bc_region_scan(&[0.55, 0.6], &[0.0, 0.1, 0.2]).unwrap();
        assert_eq!(scan.len(), 6);
        assert_eq!((scan[4].lambda, scan[4].rho), (0.6, 0.1));
    }

    #[test]
    fn stationarity_controls() {
        let s = PlaceDepBC::new(0.6, 0.2).unwrap();
        let xs = bc_chaos_game(&s, 1000, 4).points;
        assert_eq!(stationarity_residual(&s, &xs, |_| 1.0), 0.0);

        let s = PlaceDepBC::new(0.6, 0.0).unwrap();
        let good = bc_chaos_game(&s, 100_000, 4).points;
        let uniform: Vec<f64> = (0..100_000).map(|k| -1.0 + 2.0 * (k as f64 + 0.5) / 100_000.0).collect();
        let r_good = stationarity_check(&s, &good, 4).unwrap();
        let r_bad = stationarity_check(&s, &uniform, 4).unwrap();
        assert!(r_bad > 10.0 * r_good.max(0.003), "{r_good} {r_bad}");
    }
}
