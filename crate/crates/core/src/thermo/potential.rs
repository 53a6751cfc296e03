use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ifs::IFSFamily;
use crate::symbolic::{check_budget, Word};

/// `p(x) = constant + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineProbability {
    pub constant: f64,
    pub slope: f64,
}

impl AffineProbability {
    pub fn eval(&self, x: f64) -> f64 {
        self.constant + self.slope * x
    }
}

/// Potentials of the form `φ(i) = g_{i_1}(Π(σ i))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialKind {
    /// `φ(i) = log_weights[i_1]`.
    FirstSymbol { log_weights: Vec<f64> },
    /// `s·log|f'_{i_1}(Π(σ i))|`.
    Geometric { s: f64 },
    /// `log p_{i_1}(Π(σ i))`.
    PlaceDependentLog { probabilities: Vec<AffineProbability> },
    /// `q·log‖A_{i_1} v(Π(σ i))‖₁` with `v(x) = (x, 1−x)`; matrices row major.
    MatrixNorm { q: f64, matrices: Vec<[f64; 4]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub kind: PotentialKind,
    /// `var_k φ ≤ holder_b · holder_alpha^k`.
    pub holder_alpha: f64,
    pub holder_b: f64,
}

/// `S_nφ` at the representative point together with the cylinder slack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BirkhoffSum {
    pub value: f64,
    pub slack: f64,
}

const SAMPLE_GRID: usize = 513;

impl Potential {
    /// Builds a potential and derives its Hölder data from `fam` at `λ`.
    pub fn new(kind: PotentialKind, fam: &IFSFamily, lambda: &[f64]) -> Result<Self> {
        let m = fam.m();
        let x = fam.domain();
        match &kind {
            PotentialKind::FirstSymbol { log_weights } => {
                if log_weights.len() != m {
                    return Err(Error::invalid("one weight per map required"));
                }
                if log_weights.iter().any(|w| w.is_nan() || *w == f64::INFINITY) {
                    return Err(Error::invalid("log weights must be finite or -inf"));
                }
            }
            PotentialKind::Geometric { s } => {
                if !s.is_finite() {
                    return Err(Error::invalid("exponent must be finite"));
                }
            }
            PotentialKind::PlaceDependentLog { probabilities } => {
                if probabilities.len() != m {
                    return Err(Error::invalid("one probability function per map required"));
                }
                for t in x.grid(SAMPLE_GRID) {
                    let vals: Vec<f64> = probabilities.iter().map(|p| p.eval(t)).collect();
                    if vals.iter().any(|&v| !(v > 0.0)) {
                        return Err(Error::invalid(format!("probabilities must be positive on X (x = {t})")));
                    }
                    if (vals.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                        return Err(Error::invalid(format!("probabilities must sum to 1 on X (x = {t})")));
                    }
                }
            }
            PotentialKind::MatrixNorm { q, matrices } => {
                if matrices.len() != m {
                    return Err(Error::invalid("one matrix per map required"));
                }
                if !q.is_finite() {
                    return Err(Error::invalid("exponent must be finite"));
                }
                if matrices.iter().flatten().any(|&e| !(e >= 0.0)) {
                    return Err(Error::invalid("matrix entries must be nonnegative"));
                }
            }
        }
        let mut pot = Potential {
            kind,
            holder_alpha: fam.sup_derivative(lambda).min(fam.gamma2()),
            holder_b: 0.0,
        };
        let lip = x
            .grid(SAMPLE_GRID)
            .into_iter()
            .flat_map(|t| (1..=m as u8).map(move |a| (a, t)))
            .map(|(a, t)| pot.g_prime(fam, lambda, a, t).abs())
            .fold(0.0, f64::max);
        pot.holder_b = lip * x.len() / pot.holder_alpha;
        Ok(pot)
    }

    /// Bernoulli potential `log p_i`.
    pub fn bernoulli(probabilities: &[f64], fam: &IFSFamily) -> Result<Self> {
        if probabilities.iter().any(|&p| !(p >= 0.0)) || (probabilities.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("probabilities must be nonnegative and sum to 1"));
        }
        let lambda = fam.params().center();
        Potential::new(
            PotentialKind::FirstSymbol {
                log_weights: probabilities.iter().map(|p| p.ln()).collect(),
            },
            fam,
            &lambda,
        )
    }

    /// `φ ≡ c`.
    pub fn constant(c: f64, fam: &IFSFamily) -> Result<Self> {
        let lambda = fam.params().center();
        Potential::new(
            PotentialKind::FirstSymbol {
                log_weights: vec![c; fam.m()],
            },
            fam,
            &lambda,
        )
    }

    /// `{1/2 + ρx, 1/2 − ρx}` for the two Bernoulli convolution maps.
    pub fn place_dependent_bc(rho: f64, fam: &IFSFamily, lambda: &[f64]) -> Result<Self> {
        Potential::new(
            PotentialKind::PlaceDependentLog {
                probabilities: vec![
                    AffineProbability { constant: 0.5, slope: rho },
                    AffineProbability { constant: 0.5, slope: -rho },
                ],
            },
            fam,
            lambda,
        )
    }

    /// `g_a(x)`.
    pub fn g(&self, fam: &IFSFamily, lambda: &[f64], a: u8, x: f64) -> f64 {
        let i = a as usize - 1;
        match &self.kind {
            PotentialKind::FirstSymbol { log_weights } => log_weights[i],
            PotentialKind::Geometric { s } => s * fam.map(a).derivative(lambda, x).abs().ln(),
            PotentialKind::PlaceDependentLog { probabilities } => probabilities[i].eval(x).ln(),
            PotentialKind::MatrixNorm { q, matrices } => {
                let [a, b, c, d] = matrices[i];
                q * ((a + c) * x + (b + d) * (1.0 - x)).ln()
            }
        }
    }

    /// `d g_a / dx`.
    pub fn g_prime(&self, fam: &IFSFamily, lambda: &[f64], a: u8, x: f64) -> f64 {
        let i = a as usize - 1;
        match &self.kind {
            PotentialKind::FirstSymbol { .. } => 0.0,
            PotentialKind::Geometric { s } => {
                let f = fam.map(a);
                s * f.second_derivative(lambda, x) / f.derivative(lambda, x)
            }
            PotentialKind::PlaceDependentLog { probabilities } => {
                let p = probabilities[i];
                p.slope / p.eval(x)
            }
            PotentialKind::MatrixNorm { q, matrices } => {
                let [a, b, c, d] = matrices[i];
                q * ((a + c) - (b + d)) / ((a + c) * x + (b + d) * (1.0 - x))
            }
        }
    }

    /// Bound on the sup-norm error of replacing `φ` by its depth-`k` truncation.
    pub fn truncation_error(&self, k: usize) -> f64 {
        self.holder_b * self.holder_alpha.powi(k as i32)
    }

    /// Smallest `k ≥ 1` with `b·α^k < tol`, or `None` if it exceeds `cap`.
    pub fn truncation_depth(&self, tol: f64, cap: usize) -> Option<usize> {
        (1..=cap).find(|&k| self.truncation_error(k) < tol)
    }
}

/// Fixed point of map 1, the projection of `1^∞`.
pub(crate) fn anchor(fam: &IFSFamily, lambda: &[f64]) -> Result<f64> {
    let w = crate::symbolic::EventuallyPeriodicWord::periodic(&[1])?;
    Ok(fam.natural_projection(lambda, &w, 1e-14)?.value)
}

/// `S_nφ(ω)` evaluated at `ω·1^∞`, with slack `Σ_{j=1}^n b α^j`.
pub fn birkhoff_sum(pot: &Potential, fam: &IFSFamily, lambda: &[f64], word: &Word) -> Result<BirkhoffSum> {
    if word.max_symbol() > fam.m() {
        return Err(Error::invalid("word uses symbols outside the alphabet"));
    }
    let mut x = anchor(fam, lambda)?;
    let mut value = 0.0;
    for &a in word.symbols().iter().rev() {
        value += pot.g(fam, lambda, a, x);
        x = fam.map(a).eval(lambda, x);
    }
    let (a, b, n) = (pot.holder_alpha, pot.holder_b, word.len() as i32);
    let slack = if b == 0.0 { 0.0 } else { b * a * (1.0 - a.powi(n)) / (1.0 - a) };
    Ok(BirkhoffSum { value, slack })
}

/// `S_nφ` for every word of length `n`, in lexicographic order.
pub fn birkhoff_sums(pot: &Potential, fam: &IFSFamily, lambda: &[f64], n: usize) -> Result<Vec<f64>> {
    check_budget(fam.m(), n)?;
    let p = anchor(fam, lambda)?;
    // (f_ω(p), S(ω)) built by prepending symbols
    let mut level = vec![(p, 0.0)];
    for _ in 0..n {
        let mut next = Vec::with_capacity(level.len() * fam.m());
        for a in 1..=fam.m() as u8 {
            let f = fam.map(a);
            next.extend(level.iter().map(|&(x, s)| (f.eval(lambda, x), s + pot.g(fam, lambda, a, x))));
        }
        level = next;
    }
    Ok(level.into_iter().map(|(_, s)| s).collect())
}

pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `(1/n)·log Σ_{|ω|=n} e^{S_nφ(ω)}`.
pub fn potential_pressure(pot: &Potential, fam: &IFSFamily, lambda: &[f64], n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("depth must be >= 1"));
    }
    Ok(log_sum_exp(&birkhoff_sums(pot, fam, lambda, n)?) / n as f64)
}
