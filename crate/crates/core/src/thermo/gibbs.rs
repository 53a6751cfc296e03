use serde::Serialize;

use super::potential::{anchor, birkhoff_sums, Potential};
use crate::error::{Error, Result};
use crate::ifs::IFSFamily;
use crate::symbolic::{check_budget, cylinder_budget, Word};

/// Cap on the number of transfer-operator states.
pub const STATE_CAP: u64 = 1 << 16;
pub const DEFAULT_TRUNCATION_TOL: f64 = 1e-8;
pub const POWER_TOL: f64 = 1e-12;
pub const POWER_MAX_ITER: usize = 100_000;

/// Perron data of the truncated transfer operator on depth-`k` cylinders.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenData {
    pub k: usize,
    /// `e^P`.
    pub eigenvalue: f64,
    pub log_eigenvalue: f64,
    /// `h` on depth-`k` cylinders, ℓ¹-normalized.
    pub eigenfunction: Vec<f64>,
    /// `ν` on depth-`k` cylinders, ℓ¹-normalized.
    pub eigenmeasure: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    /// `b·α^k`.
    pub truncation_error: f64,
    /// Row-major `m^k × m` conditional probabilities of the next symbol.
    transitions: Vec<f64>,
}

/// Cylinder masses at a fixed depth, optionally backed by transfer-operator data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GibbsApproximation {
    pub m: usize,
    pub depth: usize,
    /// Masses of the level-`depth` cylinders in lexicographic order.
    pub weights: Vec<f64>,
    pub lambda: Vec<f64>,
    pub eigen: Option<EigenData>,
}

impl GibbsApproximation {
    /// Wraps explicit masses; they are not renormalized.
    pub fn from_weights(m: usize, depth: usize, weights: Vec<f64>, lambda: Vec<f64>) -> Result<Self> {
        if m < 2 {
            return Err(Error::invalid("alphabet needs at least two symbols"));
        }
        let expected = check_budget(m, depth)?;
        if weights.len() != expected {
            return Err(Error::invalid(format!("expected {expected} weights, got {}", weights.len())));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::invalid("weights must be nonnegative"));
        }
        Ok(GibbsApproximation {
            m,
            depth,
            weights,
            lambda,
            eigen: None,
        })
    }

    /// Product measure with the given symbol probabilities.
    pub fn bernoulli(probabilities: &[f64], depth: usize) -> Result<Self> {
        let m = probabilities.len();
        if m < 2 || probabilities.iter().any(|&p| !(p >= 0.0)) || (probabilities.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("probabilities must be nonnegative and sum to 1"));
        }
        let eigen = EigenData {
            k: 1,
            eigenvalue: 1.0,
            log_eigenvalue: 0.0,
            eigenfunction: vec![1.0 / m as f64; m],
            eigenmeasure: probabilities.to_vec(),
            residual: 0.0,
            iterations: 0,
            truncation_error: 0.0,
            transitions: probabilities.repeat(m),
        };
        let base = GibbsApproximation {
            m,
            depth: 1,
            weights: probabilities.to_vec(),
            lambda: Vec::new(),
            eigen: Some(eigen),
        };
        base.at_depth(depth)
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn mass(&self, word: &Word) -> Result<f64> {
        if word.len() == self.depth {
            Ok(self.weights[word.index(self.m)])
        } else {
            Ok(self.weights_at(word.len())?[word.index(self.m)])
        }
    }

    /// Masses at depth `n`: marginalized if `n` is smaller, extended through
    /// the transition kernel if larger.
    pub fn weights_at(&self, n: usize) -> Result<Vec<f64>> {
        if n == self.depth {
            return Ok(self.weights.clone());
        }
        if n < self.depth {
            let block = self.m.pow((self.depth - n) as u32);
            return Ok(self.weights.chunks(block).map(|c| c.iter().sum()).collect());
        }
        let Some(eigen) = &self.eigen else {
            return Err(Error::DepthUnavailable {
                requested: n,
                available: self.depth,
            });
        };
        check_budget(self.m, n)?;
        let k = eigen.k;
        if self.depth < k {
            return self.clone_with_stationary().weights_at(n);
        }
        let mut weights = self.weights.clone();
        let window = self.m.pow((k - 1) as u32);
        for _ in self.depth..n {
            let mut next = Vec::with_capacity(weights.len() * self.m);
            for (idx, &w) in weights.iter().enumerate() {
                // last k symbols of the current word
                let state = idx % (window * self.m);
                let row = &eigen.transitions[state * self.m..(state + 1) * self.m];
                next.extend(row.iter().map(|t| w * t));
            }
            weights = next;
        }
        Ok(weights)
    }

    fn clone_with_stationary(&self) -> GibbsApproximation {
        let eigen = self.eigen.clone().expect("eigen data");
        let weights = stationary(&eigen);
        GibbsApproximation {
            m: self.m,
            depth: eigen.k,
            weights,
            lambda: self.lambda.clone(),
            eigen: Some(eigen),
        }
    }

    pub fn at_depth(&self, n: usize) -> Result<Self> {
        Ok(GibbsApproximation {
            m: self.m,
            depth: n,
            weights: self.weights_at(n)?,
            lambda: self.lambda.clone(),
            eigen: self.eigen.clone(),
        })
    }

    pub fn eigenvalue(&self) -> Option<f64> {
        self.eigen.as_ref().map(|e| e.eigenvalue)
    }

    /// Document form `{depth, eigenvalue, weights: [[word, mass]], residual}`.
    pub fn to_json(&self) -> serde_json::Value {
        let weights: Vec<serde_json::Value> = self
            .weights
            .iter()
            .enumerate()
            .map(|(i, &w)| serde_json::json!([Word::from_index(i, self.m, self.depth), w]))
            .collect();
        serde_json::json!({
            "depth": self.depth,
            "eigenvalue": self.eigenvalue(),
            "weights": weights,
            "residual": self.eigen.as_ref().map(|e| e.residual),
        })
    }
}

fn stationary(eigen: &EigenData) -> Vec<f64> {
    let prod: Vec<f64> = eigen
        .eigenfunction
        .iter()
        .zip(&eigen.eigenmeasure)
        .map(|(h, v)| h * v)
        .collect();
    let total: f64 = prod.iter().sum();
    prod.into_iter().map(|p| p / total).collect()
}

/// Default truncation depth: smallest `k` with `b·α^k < 1e-8`, limited by the state cap.
pub fn default_truncation_depth(pot: &Potential, m: usize) -> usize {
    let cap_states = cylinder_budget().min(STATE_CAP);
    let mut kmax = 1usize;
    while (m as u64).saturating_pow(kmax as u32 + 1) <= cap_states {
        kmax += 1;
    }
    pot.truncation_depth(DEFAULT_TRUNCATION_TOL, kmax).unwrap_or(kmax)
}

/// Perron eigendata of the transfer operator of `φ` truncated to depth `k`,
/// and the resulting Gibbs masses on depth-`k` cylinders.
pub fn transfer_operator_solve(
    pot: &Potential,
    fam: &IFSFamily,
    lambda: &[f64],
    k: Option<usize>,
) -> Result<GibbsApproximation> {
    let m = fam.m();
    let k = k.unwrap_or_else(|| default_truncation_depth(pot, m));
    if k == 0 {
        return Err(Error::invalid("truncation depth must be >= 1"));
    }
    let states = check_budget(m, k)?;
    let psi = first_terms(pot, fam, lambda, k)?;
    let weight: Vec<f64> = psi.iter().map(|p| p.exp()).collect();
    let window = states / m;

    // right vector: (M r)(y) = e^{ψ(y)} Σ_b r(σy·b)
    let apply_right = |r: &[f64], out: &mut [f64]| {
        for (y, o) in out.iter_mut().enumerate() {
            let base = (y % window) * m;
            *o = weight[y] * r[base..base + m].iter().sum::<f64>();
        }
    };
    // left vector: (ℓ M)(z) = Σ_a ℓ(a·z') e^{ψ(a·z')}, z' = z without its last symbol
    let apply_left = |l: &[f64], out: &mut [f64]| {
        for (z, o) in out.iter_mut().enumerate() {
            let tail = z / m;
            *o = (0..m).map(|a| {
                let y = a * window + tail;
                l[y] * weight[y]
            }).sum();
        }
    };
    let (r, beta_r, res_r, it_r) = power_iterate(states, apply_right)?;
    let (l, _, res_l, it_l) = power_iterate(states, apply_left)?;

    let mut transitions = vec![0.0; states * m];
    for y in 0..states {
        let base = (y % window) * m;
        let row = &mut transitions[y * m..(y + 1) * m];
        let total: f64 = r[base..base + m].iter().sum();
        for (b, t) in row.iter_mut().enumerate() {
            *t = if total > 0.0 { r[base + b] / total } else { 1.0 / m as f64 };
        }
    }
    let eigen = EigenData {
        k,
        eigenvalue: beta_r,
        log_eigenvalue: beta_r.ln(),
        eigenfunction: l,
        eigenmeasure: r,
        residual: res_r.max(res_l),
        iterations: it_r.max(it_l),
        truncation_error: pot.truncation_error(k),
        transitions,
    };
    let weights = stationary(&eigen);
    Ok(GibbsApproximation {
        m,
        depth: k,
        weights,
        lambda: lambda.to_vec(),
        eigen: Some(eigen),
    })
}

/// `ψ(y) = φ(y·1^∞)` for every depth-`k` word `y`.
fn first_terms(pot: &Potential, fam: &IFSFamily, lambda: &[f64], k: usize) -> Result<Vec<f64>> {
    let p = anchor(fam, lambda)?;
    // points f_{y_2…y_k}(p) for all words of length k−1
    let mut points = vec![p];
    for _ in 1..k {
        let mut next = Vec::with_capacity(points.len() * fam.m());
        for a in 1..=fam.m() as u8 {
            let f = fam.map(a);
            next.extend(points.iter().map(|&x| f.eval(lambda, x)));
        }
        points = next;
    }
    let mut psi = Vec::with_capacity(points.len() * fam.m());
    for a in 1..=fam.m() as u8 {
        psi.extend(points.iter().map(|&x| pot.g(fam, lambda, a, x)));
    }
    Ok(psi)
}

fn power_iterate(
    n: usize,
    apply: impl Fn(&[f64], &mut [f64]),
) -> Result<(Vec<f64>, f64, f64, usize)> {
    let mut v = vec![1.0 / n as f64; n];
    let mut w = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for it in 1..=POWER_MAX_ITER {
        apply(&v, &mut w);
        let beta: f64 = w.iter().sum();
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::NoConvergence {
                context: "transfer operator",
                residual: f64::NAN,
            });
        }
        residual = w.iter().zip(&v).map(|(a, b)| (a / beta - b).abs()).sum();
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / beta;
        }
        if residual <= POWER_TOL {
            return Ok((v, beta, residual, it));
        }
    }
    Err(Error::NoConvergence {
        context: "transfer operator",
        residual,
    })
}

/// `max/min` over depth-`n` words of `μ([ω]) / exp(−nP + S_nφ(ω))`.
pub fn gibbs_ratio(g: &GibbsApproximation, pot: &Potential, fam: &IFSFamily, lambda: &[f64], n: usize) -> Result<f64> {
    let p = g
        .eigen
        .as_ref()
        .map(|e| e.log_eigenvalue)
        .ok_or(Error::invalid("Gibbs ratio needs transfer-operator data"))?;
    let weights = g.weights_at(n)?;
    let sums = birkhoff_sums(pot, fam, lambda, n)?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (w, s) in weights.iter().zip(&sums) {
        if *w > 0.0 {
            let r = w.ln() + n as f64 * p - s;
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    Ok((hi - lo).exp())
}
