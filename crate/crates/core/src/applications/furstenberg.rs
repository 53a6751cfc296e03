use serde::Serialize;

use crate::error::{Error, Result};
use crate::ifs::mobius_family;
use crate::symbolic::check_budget;
use crate::thermo::modulus::max_log_ratio;
use crate::thermo::{transfer_operator_solve, GibbsApproximation, Potential, PotentialKind};

/// Margin applied to the strict inequality defining `U`.
pub const U_MARGIN: f64 = 1e-12;

/// Matrix tuple (row major `[a, b, c, d]`) with exponent `q`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FurstenbergSpec {
    pub matrices: Vec<[f64; 4]>,
    pub q: f64,
}

fn det(m: &[f64; 4]) -> f64 {
    m[0] * m[3] - m[1] * m[2]
}

/// `⟨A⟩`, the smaller column sum.
pub fn min_column_sum(m: &[f64; 4]) -> f64 {
    (m[0] + m[2]).min(m[1] + m[3])
}

impl FurstenbergSpec {
    /// Any finite invertible matrices; positivity is checked where needed.
    pub fn new(matrices: Vec<[f64; 4]>, q: f64) -> Result<Self> {
        if matrices.is_empty() {
            return Err(Error::invalid("at least one matrix required"));
        }
        if !q.is_finite() {
            return Err(Error::invalid("exponent must be finite"));
        }
        for (i, m) in matrices.iter().enumerate() {
            if m.iter().any(|e| !e.is_finite()) {
                return Err(Error::invalid(format!("matrix {i} has non-finite entries")));
            }
            if det(m) == 0.0 {
                return Err(Error::SingularMatrix { index: i });
            }
        }
        Ok(Self { matrices, q })
    }

    pub fn m(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_positive(&self) -> bool {
        self.matrices.iter().flatten().all(|&e| e > 0.0)
    }

    /// `|det A_i| < ½⟨A_i⟩²` for every `i`, with positive entries.
    pub fn in_u(&self) -> bool {
        self.is_positive()
            && self
                .matrices
                .iter()
                .all(|m| det(m).abs() < 0.5 * min_column_sum(m).powi(2) - U_MARGIN)
    }

    fn require_positive(&self) -> Result<()> {
        if self.is_positive() {
            Ok(())
        } else {
            Err(Error::invalid("matrices must have strictly positive entries"))
        }
    }
}

/// `log α₁(A_ω)` and `log |det A_ω|` for a single product.
#[derive(Debug, Clone, Copy, PartialEq)]
struct LogSpectrum {
    sigma1: f64,
    det: f64,
}

fn log_top_singular(m: &[f64; 4], log_scale: f64) -> f64 {
    let s: f64 = m.iter().map(|e| e * e).sum();
    let [a, b, c, d] = *m;
    // s² − 4 det² factored to avoid cancellation
    let disc = (((a - d).powi(2) + (b + c).powi(2)) * ((a + d).powi(2) + (b - c).powi(2))).sqrt();
    0.5 * (0.5 * (s + disc)).ln() + log_scale
}

fn mul(a: &[f64; 4], b: &[f64; 4]) -> [f64; 4] {
    [
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    ]
}

/// Spectra of `A_{ω1}⋯A_{ωn}` for all words, lexicographic order.
fn word_spectra(spec: &FurstenbergSpec, n: usize) -> Result<Vec<LogSpectrum>> {
    let m = spec.m();
    let total = check_budget(m, n)?;
    let log_dets: Vec<f64> = spec.matrices.iter().map(|a| det(a).abs().ln()).collect();
    let mut out = Vec::with_capacity(total);
    // (normalized product, log scale, log det) per level
    let mut stack: Vec<([f64; 4], f64, f64)> = vec![([1.0, 0.0, 0.0, 1.0], 0.0, 0.0)];
    let mut digits = vec![0usize; n];
    if n == 0 {
        out.push(LogSpectrum { sigma1: 0.0, det: 0.0 });
        return Ok(out);
    }
    let mut level = 0;
    loop {
        let (p, scale, ld) = stack[level];
        let a = digits[level];
        let raw = mul(&p, &spec.matrices[a]);
        let norm = raw.iter().fold(0.0f64, |acc, e| acc.max(e.abs()));
        let next = (raw.map(|e| e / norm), scale + norm.ln(), ld + log_dets[a]);
        if level + 1 == n {
            out.push(LogSpectrum {
                sigma1: log_top_singular(&next.0, next.1),
                det: next.2,
            });
            // advance the odometer
            loop {
                digits[level] += 1;
                if digits[level] < m {
                    break;
                }
                digits[level] = 0;
                if level == 0 {
                    return Ok(out);
                }
                level -= 1;
                stack.pop();
            }
        } else {
            stack.push(next);
            level += 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FurstenbergPressure {
    /// `Q_n − Q_{n−1}` with `Q_n = log Σ ‖A_ω‖^q`.
    pub value: f64,
    /// `Q_n / n`.
    pub raw: f64,
    pub depth: usize,
}

/// Partition sum as `(shift, scaled)` with `log Z = shift + ln(scaled)`.
fn log_partition(spec: &FurstenbergSpec, n: usize) -> Result<(f64, f64)> {
    if n == 0 {
        return Ok((0.0, 1.0));
    }
    let terms: Vec<f64> = word_spectra(spec, n)?.iter().map(|s| spec.q * s.sigma1).collect();
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((top, terms.iter().map(|t| (t - top).exp()).sum()))
}

pub fn furstenberg_pressure(spec: &FurstenbergSpec, n: usize) -> Result<FurstenbergPressure> {
    if n == 0 {
        return Err(Error::invalid("depth must be >= 1"));
    }
    let (tn, zn) = log_partition(spec, n)?;
    let (tp, zp) = log_partition(spec, n - 1)?;
    Ok(FurstenbergPressure {
        value: (tn - tp) + (zn / zp).ln(),
        raw: (tn + zn.ln()) / n as f64,
        depth: n,
    })
}

/// Cylinder weights proportional to `‖A_ω‖^q`.
pub fn furstenberg_gibbs_norm(spec: &FurstenbergSpec, k: usize) -> Result<GibbsApproximation> {
    if k == 0 {
        return Err(Error::invalid("depth must be >= 1"));
    }
    let terms: Vec<f64> = word_spectra(spec, k)?.iter().map(|s| spec.q * s.sigma1).collect();
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut weights: Vec<f64> = terms.iter().map(|t| (t - top).exp()).collect();
    let z: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= z);
    GibbsApproximation::from_weights(spec.m(), k, weights, Vec::new())
}

/// Equilibrium state of the matrix-norm potential on the projective Möbius system.
pub fn furstenberg_gibbs_operator(spec: &FurstenbergSpec, k: usize, truncation: Option<usize>) -> Result<GibbsApproximation> {
    spec.require_positive()?;
    let fam = mobius_family(&spec.matrices, &[])?;
    let pot = Potential::new(
        PotentialKind::MatrixNorm {
            q: spec.q,
            matrices: spec.matrices.clone(),
        },
        &fam,
        &[],
    )?;
    transfer_operator_solve(&pot, &fam, &[], truncation)?.at_depth(k)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FurstenbergGibbs {
    #[serde(skip)]
    pub norm: GibbsApproximation,
    #[serde(skip)]
    pub operator: GibbsApproximation,
    pub depth: usize,
    /// `max_ω |log(norm[ω] / operator[ω])|`.
    pub max_log_ratio: f64,
}

/// Both constructions of the depth-`k` cylinder masses, cross-checked.
pub fn furstenberg_gibbs(spec: &FurstenbergSpec, k: usize) -> Result<FurstenbergGibbs> {
    let norm = furstenberg_gibbs_norm(spec, k)?;
    let operator = furstenberg_gibbs_operator(spec, k, None)?;
    let max_log_ratio = max_log_ratio(&norm, &operator, k)?;
    Ok(FurstenbergGibbs {
        norm,
        operator,
        depth: k,
        max_log_ratio,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CocycleLyapunov {
    /// `(1/n) Σ μ([ω]) log α₁(A_ω)`.
    pub eta1: f64,
    pub eta2: f64,
    /// Depth-difference refinements.
    pub eta1_diff: f64,
    pub eta2_diff: f64,
    /// `(1/n) Σ μ([ω]) log |det A_ω|` from the factors.
    pub mean_log_det: f64,
    pub identity_residual: f64,
    pub depth: usize,
}

/// `(Σ μ log α₁, Σ μ log α₂)` at depth `n`.
fn weighted_logs(spec: &FurstenbergSpec, weights: &[f64], n: usize) -> Result<(f64, f64)> {
    if n == 0 {
        return Ok((0.0, 0.0));
    }
    let spectra = word_spectra(spec, n)?;
    let (mut s1, mut s2) = (0.0, 0.0);
    for (w, s) in weights.iter().zip(&spectra) {
        if *w > 0.0 {
            s1 += w * s.sigma1;
            // α₂ = |det| / α₁
            s2 += w * (s.det - s.sigma1);
        }
    }
    Ok((s1, s2))
}

fn mean_log_det(spec: &FurstenbergSpec, weights: &[f64], n: usize) -> f64 {
    let m = spec.m();
    let log_dets: Vec<f64> = spec.matrices.iter().map(|a| det(a).abs().ln()).collect();
    let mut total = 0.0;
    for (idx, &w) in weights.iter().enumerate() {
        let mut rest = idx;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += log_dets[rest % m];
            rest /= m;
        }
        total += w * sum;
    }
    total / n as f64
}

fn lyapunov_from(spec: &FurstenbergSpec, wn: &[f64], wp: &[f64], n: usize) -> Result<CocycleLyapunov> {
    if n == 0 {
        return Err(Error::invalid("depth must be >= 1"));
    }
    let (a1, a2) = weighted_logs(spec, wn, n)?;
    let (p1, p2) = weighted_logs(spec, wp, n - 1)?;
    let eta1 = a1 / n as f64;
    let eta2 = a2 / n as f64;
    let mld = mean_log_det(spec, wn, n);
    let identity_residual = (eta1 + eta2 - mld).abs();
    if identity_residual > 1e-10 {
        return Err(Error::NoConvergence {
            context: "cocycle determinant identity",
            residual: identity_residual,
        });
    }
    Ok(CocycleLyapunov {
        eta1,
        eta2,
        eta1_diff: a1 - p1,
        eta2_diff: a2 - p2,
        mean_log_det: mld,
        identity_residual,
        depth: n,
    })
}

/// Lyapunov exponents of the cocycle under the cylinder masses of `g`.
pub fn cocycle_lyapunov(spec: &FurstenbergSpec, g: &GibbsApproximation, n: usize) -> Result<CocycleLyapunov> {
    if g.m != spec.m() {
        return Err(Error::invalid("measure and matrices use different alphabets"));
    }
    if n == 0 {
        return Err(Error::invalid("depth must be >= 1"));
    }
    let wn = g.weights_at(n)?;
    let wp = if n > 1 { g.weights_at(n - 1)? } else { vec![1.0] };
    lyapunov_from(spec, &wn, &wp, n)
}

/// Lyapunov exponents under the uniform Bernoulli measure; allows `m = 1`.
pub fn cocycle_lyapunov_uniform(spec: &FurstenbergSpec, n: usize) -> Result<CocycleLyapunov> {
    let m = spec.m();
    let cn = check_budget(m, n)?;
    let cp = check_budget(m, n.saturating_sub(1))?;
    lyapunov_from(spec, &vec![1.0 / cn as f64; cn], &vec![1.0 / cp as f64; cp], n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FurstenbergDimension {
    pub q: f64,
    pub pressure: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub entropy: f64,
    pub chi: f64,
    pub dimension: f64,
    /// `P(q) > (q+1)η₁ − η₂`.
    pub abs_cont: bool,
    pub depth: usize,
}

/// `h = P(q) − qη₁`, `χ = η₁ − η₂`, `dim = min(1, h/χ)`.
pub fn furstenberg_dimension(spec: &FurstenbergSpec, g: &GibbsApproximation, n: usize) -> Result<FurstenbergDimension> {
    if !spec.in_u() {
        return Err(Error::NotInU);
    }
    let pressure = furstenberg_pressure(spec, n)?.value;
    let ly = cocycle_lyapunov(spec, g, n)?;
    let (eta1, eta2) = (ly.eta1_diff, ly.eta2_diff);
    let entropy = pressure - spec.q * eta1;
    let chi = eta1 - eta2;
    Ok(FurstenbergDimension {
        q: spec.q,
        pressure,
        eta1,
        eta2,
        entropy,
        chi,
        dimension: (entropy / chi).min(1.0),
        abs_cont: pressure > (spec.q + 1.0) * eta1 - eta2,
        depth: n,
    })
}
