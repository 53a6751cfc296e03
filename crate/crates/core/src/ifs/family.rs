use serde::{Deserialize, Serialize};

use super::map::{compose, Homography, MapSpec};
use crate::error::{Error, Result};
use crate::symbolic::{check_budget, EventuallyPeriodicWord, Word};

/// Inflation of `X` used as the sampled stand-in for the open set `V ⊃ X`.
pub const NEIGHBOURHOOD_INFLATION: f64 = 0.05;

/// Tolerance for comparing affine compositions.
pub const OVERLAP_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        if lo <= hi {
            Interval { lo, hi }
        } else {
            Interval { lo: hi, hi: lo }
        }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval, tol: f64) -> bool {
        other.lo >= self.lo - tol && other.hi <= self.hi + tol
    }

    pub fn intersects(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// Grows both ends by `frac·len`.
    pub fn inflate(&self, frac: f64) -> Interval {
        let pad = frac * self.len();
        Interval {
            lo: self.lo - pad,
            hi: self.hi + pad,
        }
    }

    /// `count ≥ 2` equally spaced points including both endpoints.
    pub fn grid(&self, count: usize) -> Vec<f64> {
        let count = count.max(2);
        let step = self.len() / (count - 1) as f64;
        (0..count)
            .map(|j| if j + 1 == count { self.hi } else { self.lo + step * j as f64 })
            .collect()
    }
}

/// Axis-aligned parameter box `U ⊂ R^d`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ParamBox {
    pub bounds: Vec<Interval>,
}

impl ParamBox {
    pub fn new(bounds: Vec<Interval>) -> Self {
        ParamBox { bounds }
    }

    pub fn empty() -> Self {
        ParamBox { bounds: Vec::new() }
    }

    pub fn cube(d: usize, lo: f64, hi: f64) -> Self {
        ParamBox {
            bounds: vec![Interval::new(lo, hi); d],
        }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.bounds.iter().map(|b| 0.5 * (b.lo + b.hi)).collect()
    }

    pub fn volume(&self) -> f64 {
        self.bounds.iter().map(Interval::len).product()
    }

    /// Product grid with `count` points per axis, endpoints included,
    /// last axis varying fastest. A zero-dimensional box yields one point.
    pub fn grid(&self, counts: &[usize]) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = self
            .bounds
            .iter()
            .enumerate()
            .map(|(k, b)| {
                let c = counts.get(k).or(counts.last()).copied().unwrap_or(1);
                if c <= 1 {
                    vec![0.5 * (b.lo + b.hi)]
                } else {
                    b.grid(c)
                }
            })
            .collect();
        product(&axes)
    }

    /// Cell-centre grid: `count` cells per axis, one sample per cell.
    pub fn cell_centers(&self, counts: &[usize]) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = self
            .bounds
            .iter()
            .enumerate()
            .map(|(k, b)| {
                let c = counts.get(k).or(counts.last()).copied().unwrap_or(1).max(1);
                let w = b.len() / c as f64;
                (0..c).map(|j| b.lo + (j as f64 + 0.5) * w).collect()
            })
            .collect();
        product(&axes)
    }

    pub fn corners(&self) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = self.bounds.iter().map(|b| vec![b.lo, b.hi]).collect();
        product(&axes)
    }
}

fn product(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for axis in axes {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for prefix in &out {
            for &v in axis {
                let mut p = prefix.clone();
                p.push(v);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// A parametrized family of hyperbolic contractions on a compact interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IFSFamily {
    maps: Vec<MapSpec>,
    domain: Interval,
    params: ParamBox,
    gamma1: f64,
    gamma2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CylinderInterval {
    pub word: Word,
    pub interval: Interval,
}

impl CylinderInterval {
    pub fn length(&self) -> f64 {
        self.interval.len()
    }
}

/// `Π^λ(i)` together with a bound on its numerical error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Projection {
    pub value: f64,
    pub error_bound: f64,
}

/// Truncated `∇_λ Π^λ(i)`; `tail_bound` bounds every component's remainder.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectionGradient {
    pub gradient: Vec<f64>,
    pub tail_bound: f64,
}

impl ProjectionGradient {
    /// Bound on the Euclidean norm of the remainder.
    pub fn norm_tail_bound(&self) -> f64 {
        self.tail_bound * (self.gradient.len() as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AssumptionViolation {
    ImageNotContained {
        map: usize,
        lambda: Vec<f64>,
        image: Interval,
    },
    DerivativeOutOfBounds {
        map: usize,
        lambda: Vec<f64>,
        x: f64,
        value: f64,
    },
    PoleInNeighbourhood {
        map: usize,
        lambda: Vec<f64>,
        pole: f64,
    },
}

/// Lipschitz-type difference quotients over adjacent grid points.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct HolderEstimates {
    /// `|f''(x) − f''(y)| / |x − y|`.
    pub second_derivative_in_x: f64,
    /// `|∂²f/∂x∂λ(x) − ∂²f/∂x∂λ(y)| / |x − y|`.
    pub mixed_in_x: f64,
    /// `|f''(x; λ) − f''(x; λ')| / |λ − λ'|` along grid axes.
    pub second_derivative_in_lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionsReport {
    pub gamma1_obs: f64,
    pub gamma2_obs: f64,
    /// `sup |f''|` over the sampled neighbourhood.
    pub m1: f64,
    /// `sup |∂²f/∂x∂λ_k|` over the sampled neighbourhood.
    pub m2: f64,
    pub holder_estimates: HolderEstimates,
    pub violations: Vec<AssumptionViolation>,
}

impl AssumptionsReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl IFSFamily {
    pub fn new(
        maps: Vec<MapSpec>,
        domain: Interval,
        params: ParamBox,
        gamma1: f64,
        gamma2: f64,
    ) -> Result<Self> {
        if maps.len() < 2 {
            return Err(Error::invalid("an IFS needs at least two maps"));
        }
        if maps.len() > u8::MAX as usize {
            return Err(Error::invalid("at most 255 maps are supported"));
        }
        if !(domain.len() > 0.0) {
            return Err(Error::invalid("domain must be a nondegenerate interval"));
        }
        if !(0.0 < gamma1 && gamma1 <= gamma2 && gamma2 < 1.0) {
            return Err(Error::invalid(format!(
                "hyperbolicity bounds must satisfy 0 < gamma1 <= gamma2 < 1, got ({gamma1}, {gamma2})"
            )));
        }
        if let Some(k) = maps.iter().filter_map(MapSpec::max_param).max() {
            if k >= params.dim() {
                return Err(Error::invalid(format!(
                    "map references parameter {k} but the box has dimension {}",
                    params.dim()
                )));
            }
        }
        Ok(IFSFamily {
            maps,
            domain,
            params,
            gamma1,
            gamma2,
        })
    }

    /// Unparametrized self-similar family `{r_i x + d_i}` with bounds read off the slopes.
    pub fn affine(maps: &[(f64, f64)], domain: Interval) -> Result<Self> {
        let slopes: Vec<f64> = maps.iter().map(|(r, _)| r.abs()).collect();
        let g1 = slopes.iter().copied().fold(f64::INFINITY, f64::min);
        let g2 = slopes.iter().copied().fold(0.0, f64::max);
        IFSFamily::new(
            maps.iter().map(|&(r, d)| MapSpec::affine(r, d)).collect(),
            domain,
            ParamBox::empty(),
            g1,
            g2,
        )
    }

    pub fn m(&self) -> usize {
        self.maps.len()
    }

    pub fn d(&self) -> usize {
        self.params.dim()
    }

    pub fn maps(&self) -> &[MapSpec] {
        &self.maps
    }

    pub fn map(&self, symbol: u8) -> &MapSpec {
        &self.maps[symbol as usize - 1]
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    /// The sampled neighbourhood `V`.
    pub fn neighbourhood(&self) -> Interval {
        self.domain.inflate(NEIGHBOURHOOD_INFLATION)
    }

    pub fn params(&self) -> &ParamBox {
        &self.params
    }

    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }

    pub fn gamma2(&self) -> f64 {
        self.gamma2
    }

    pub fn is_affine(&self) -> bool {
        self.maps.iter().all(MapSpec::is_affine)
    }

    fn check_lambda(&self, lambda: &[f64]) {
        assert_eq!(
            lambda.len(),
            self.d(),
            "parameter vector has the wrong dimension"
        );
    }

    /// `(f_ω(x), f_ω'(x))` for `f_ω = f_{ω_1} ∘ ... ∘ f_{ω_n}`.
    pub fn apply_word(&self, lambda: &[f64], word: &Word, x: f64) -> (f64, f64) {
        self.apply_symbols(lambda, word.symbols(), x)
    }

    pub fn apply_symbols(&self, lambda: &[f64], symbols: &[u8], x: f64) -> (f64, f64) {
        self.check_lambda(lambda);
        symbols.iter().rev().fold((x, 1.0), |(y, dy), &s| {
            let (fy, dfy) = self.map(s).eval_with_derivative(lambda, y);
            (fy, dy * dfy)
        })
    }

    /// Homography of the composition `f_{s_1} ∘ ... ∘ f_{s_n}`.
    pub fn word_homography(&self, lambda: &[f64], symbols: &[u8]) -> Homography {
        symbols.iter().fold([1.0, 0.0, 0.0, 1.0], |acc, &s| {
            compose(&acc, &self.map(s).homography(lambda))
        })
    }

    /// `X_ω = f_ω(X)`.
    pub fn cylinder_interval(&self, lambda: &[f64], word: &Word) -> CylinderInterval {
        let a = self.apply_word(lambda, word, self.domain.lo).0;
        let b = self.apply_word(lambda, word, self.domain.hi).0;
        CylinderInterval {
            word: word.clone(),
            interval: Interval::new(a, b),
        }
    }

    /// All level-`n` cylinder intervals in lexicographic word order.
    pub fn cylinder_cover(&self, lambda: &[f64], n: usize) -> Result<Vec<Interval>> {
        check_budget(self.m(), n)?;
        self.check_lambda(lambda);
        let mut level = vec![self.domain];
        for _ in 0..n {
            let mut next = Vec::with_capacity(level.len() * self.m());
            for f in &self.maps {
                let h = f.homography(lambda);
                let apply = |x: f64| (h[0] * x + h[1]) / (h[2] * x + h[3]);
                next.extend(level.iter().map(|iv| Interval::new(apply(iv.lo), apply(iv.hi))));
            }
            level = next;
        }
        Ok(level)
    }

    /// `log |X_ω|` for all level-`n` words, lexicographic order. Uses
    /// `|h(b) − h(a)| = |det h|·|b − a| / |(r a + s)(r b + s)|`, so deep
    /// cylinders keep full relative precision.
    pub fn cylinder_log_lengths(&self, lambda: &[f64], n: usize) -> Result<Vec<f64>> {
        check_budget(self.m(), n)?;
        self.check_lambda(lambda);
        let mut level = vec![(self.domain, self.domain.len().ln())];
        for _ in 0..n {
            let mut next = Vec::with_capacity(level.len() * self.m());
            for f in &self.maps {
                let h = f.homography(lambda);
                let log_det = (h[0] * h[3] - h[1] * h[2]).abs().ln();
                let apply = |x: f64| (h[0] * x + h[1]) / (h[2] * x + h[3]);
                next.extend(level.iter().map(|&(iv, log_len)| {
                    let shrink = log_det - (h[2] * iv.lo + h[3]).abs().ln() - (h[2] * iv.hi + h[3]).abs().ln();
                    (Interval::new(apply(iv.lo), apply(iv.hi)), log_len + shrink)
                }));
            }
            level = next;
        }
        Ok(level.into_iter().map(|(_, l)| l).collect())
    }

    /// `Π^λ(i)`; exact fixed point of the periodic tail, then the preperiod.
    pub fn natural_projection(
        &self,
        lambda: &[f64],
        word: &EventuallyPeriodicWord,
        tol: f64,
    ) -> Result<Projection> {
        if !(tol > 0.0) {
            return Err(Error::invalid("tolerance must be positive"));
        }
        self.check_symbols(word.max_symbol())?;
        let per = word.period().symbols();
        let pre = word.preperiod().symbols();
        let (fixed, err) = match self.closed_form_fixed_point(lambda, per) {
            Some(x) => (x, 0.0),
            None => self.fixed_point_bisection(lambda, per, tol)?,
        };
        let (value, dpre) = self.apply_symbols(lambda, pre, fixed);
        Ok(Projection {
            value,
            error_bound: err * dpre.abs().max(if err > 0.0 { 1.0 } else { 0.0 }),
        })
    }

    fn check_symbols(&self, max_symbol: usize) -> Result<()> {
        if max_symbol > self.m() {
            return Err(Error::invalid(format!(
                "symbol {max_symbol} outside alphabet 1..{}",
                self.m()
            )));
        }
        Ok(())
    }

    fn closed_form_fixed_point(&self, lambda: &[f64], period: &[u8]) -> Option<f64> {
        let [p, q, r, s] = self.word_homography(lambda, period);
        let v = self.neighbourhood();
        let scale = p.abs() + q.abs() + r.abs() + s.abs();
        let det = p * s - q * r;
        let attracting = |x: f64| {
            let den = r * x + s;
            v.contains(x) && (det / (den * den)).abs() < 1.0
        };
        let root = if r.abs() <= 1e-14 * scale {
            let x = q / (s - p);
            x.is_finite().then_some(x)
        } else {
            // r x² + (s − p) x − q = 0
            let b = s - p;
            let disc = b * b + 4.0 * r * q;
            if disc < 0.0 {
                return None;
            }
            let t = -0.5 * (b + b.signum() * disc.sqrt());
            let candidates = [if r != 0.0 { t / r } else { f64::NAN }, if t != 0.0 { -q / t } else { f64::NAN }];
            candidates.into_iter().find(|&x| x.is_finite() && attracting(x))
        }?;
        if !attracting(root) {
            return None;
        }
        // polish through the direct composition; each pass contracts the error
        let mut x = root;
        for _ in 0..3 {
            x = self.apply_symbols(lambda, period, x).0;
        }
        Some(x)
    }

    /// Bisection on `f_per(x) − x` over the sampled neighbourhood.
    pub(crate) fn fixed_point_bisection(
        &self,
        lambda: &[f64],
        period: &[u8],
        tol: f64,
    ) -> Result<(f64, f64)> {
        let v = self.neighbourhood();
        let h = |x: f64| self.apply_symbols(lambda, period, x).0 - x;
        let (mut lo, mut hi) = (v.lo, v.hi);
        let (hlo, hhi) = (h(lo), h(hi));
        if !(hlo >= 0.0 && hhi <= 0.0) {
            return Err(Error::NoConvergence {
                context: "fixed point bracket",
                residual: hlo.min(-hhi).abs(),
            });
        }
        for _ in 0..200 {
            if hi - lo <= tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if h(mid) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((0.5 * (lo + hi), hi - lo))
    }

    /// Sampled `sup_x max_k |∂f_i/∂λ_k (x)|` over all maps at `λ`.
    pub fn sup_param_partial(&self, lambda: &[f64]) -> f64 {
        let xs = self.domain.grid(65);
        let mut sup: f64 = 0.0;
        for f in &self.maps {
            for k in 0..self.d() {
                for &x in &xs {
                    sup = sup.max(f.param_partial(lambda, x, k).abs());
                }
            }
        }
        sup
    }

    /// Sampled `max |f_i'|` over `X` at `λ`.
    pub fn sup_derivative(&self, lambda: &[f64]) -> f64 {
        let xs = self.domain.grid(65);
        self.maps
            .iter()
            .flat_map(|f| xs.iter().map(move |&x| f.derivative(lambda, x).abs()))
            .fold(0.0, f64::max)
    }

    /// Truncated series for `∇_λ Π^λ(i)` with a rigorous remainder bound.
    pub fn projection_gradient(
        &self,
        lambda: &[f64],
        word: &EventuallyPeriodicWord,
        depth: usize,
    ) -> Result<ProjectionGradient> {
        let d = self.d();
        if d == 0 {
            return Ok(ProjectionGradient {
                gradient: Vec::new(),
                tail_bound: 0.0,
            });
        }
        if depth == 0 {
            return Err(Error::invalid("gradient truncation depth must be >= 1"));
        }
        self.check_symbols(word.max_symbol())?;
        let symbols = word.prefix(depth);
        let symbols = symbols.symbols();
        // points[n] = Π(σ^n i)
        let mut points = vec![0.0; depth + 1];
        points[depth] = self
            .natural_projection(lambda, &word.shift_by(depth), 1e-14)?
            .value;
        for n in (0..depth).rev() {
            points[n] = self.map(symbols[n]).eval(lambda, points[n + 1]);
        }
        let mut gradient = vec![0.0; d];
        let mut dprefix = 1.0;
        for n in 0..depth {
            let f = self.map(symbols[n]);
            let x = points[n + 1];
            for (k, g) in gradient.iter_mut().enumerate() {
                *g += dprefix * f.param_partial(lambda, x, k);
            }
            dprefix *= f.derivative(lambda, x);
        }
        let contraction = self.sup_derivative(lambda).min(self.gamma2);
        let tail_bound = dprefix.abs() * self.sup_param_partial(lambda) / (1.0 - contraction);
        Ok(ProjectionGradient {
            gradient,
            tail_bound,
        })
    }

    /// `max |f_ω'(x)| / min |f_ω'(y)|` over a uniform grid on `X`.
    pub fn distortion_ratio(&self, lambda: &[f64], word: &Word, grid: usize) -> f64 {
        let values: Vec<f64> = self
            .domain
            .grid(grid.max(2))
            .into_iter()
            .map(|x| self.apply_word(lambda, word, x).1.abs())
            .collect();
        let max = values.iter().copied().fold(0.0, f64::max);
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        if max == min {
            1.0
        } else {
            max / min
        }
    }

    /// All pairs of distinct words of length `1..=depth` whose affine
    /// compositions coincide.
    pub fn detect_exact_overlap(&self, lambda: &[f64], depth: usize) -> Result<Vec<(Word, Word)>> {
        if depth == 0 {
            return Err(Error::invalid("overlap depth must be >= 1"));
        }
        if !self.is_affine() {
            return Err(Error::UnsupportedKind);
        }
        check_budget(self.m(), depth)?;
        self.check_lambda(lambda);
        let base: Vec<(f64, f64)> = self
            .maps
            .iter()
            .map(|f| {
                let [p, q, _, s] = f.homography(lambda);
                (p / s, q / s)
            })
            .collect();
        // (slope, offset, word), built by prepending symbols
        let mut all: Vec<(f64, f64, Word)> = Vec::new();
        let mut level: Vec<(f64, f64, Vec<u8>)> = vec![(1.0, 0.0, Vec::new())];
        for _ in 0..depth {
            let mut next = Vec::with_capacity(level.len() * self.m());
            for (a, &(r, t)) in base.iter().enumerate() {
                for (slope, offset, w) in &level {
                    let mut word = Vec::with_capacity(w.len() + 1);
                    word.push(a as u8 + 1);
                    word.extend_from_slice(w);
                    next.push((r * slope, r * offset + t, word));
                }
            }
            all.extend(next.iter().map(|(s, o, w)| (*s, *o, Word::new(w.clone()))));
            level = next;
        }
        all.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut pairs = Vec::new();
        for i in 0..all.len() {
            for j in i + 1..all.len() {
                if all[j].0 - all[i].0 > OVERLAP_TOLERANCE {
                    break;
                }
                if (all[j].1 - all[i].1).abs() <= OVERLAP_TOLERANCE {
                    let (u, v) = (&all[i].2, &all[j].2);
                    let key = |w: &Word| (w.len(), w.clone());
                    if key(u) <= key(v) {
                        pairs.push((u.clone(), v.clone()));
                    } else {
                        pairs.push((v.clone(), u.clone()));
                    }
                }
            }
        }
        pairs.sort_by(|a, b| (a.0.len(), &a.0, a.1.len(), &a.1).cmp(&(b.0.len(), &b.0, b.1.len(), &b.1)));
        Ok(pairs)
    }

    /// Samples the smoothness and hyperbolicity assumptions on a grid.
    pub fn verify_assumptions(&self, lambda_grid: usize, x_grid: usize) -> AssumptionsReport {
        let lambdas = self.params.grid(&[lambda_grid.max(2)]);
        let xs = self.domain.grid(x_grid.max(2));
        let vs = self.neighbourhood().grid(x_grid.max(2));
        let v = self.neighbourhood();
        let tol = 1e-12;

        let mut report = AssumptionsReport {
            gamma1_obs: f64::INFINITY,
            gamma2_obs: 0.0,
            m1: 0.0,
            m2: 0.0,
            holder_estimates: HolderEstimates::default(),
            violations: Vec::new(),
        };

        for lambda in &lambdas {
            for (i, f) in self.maps.iter().enumerate() {
                if let Some(pole) = f.pole(lambda) {
                    if v.inflate(0.0).contains(pole) {
                        report.violations.push(AssumptionViolation::PoleInNeighbourhood {
                            map: i,
                            lambda: lambda.clone(),
                            pole,
                        });
                        continue;
                    }
                }
                let image = Interval::new(f.eval(lambda, self.domain.lo), f.eval(lambda, self.domain.hi));
                if !self.domain.contains_interval(&image, tol) {
                    report.violations.push(AssumptionViolation::ImageNotContained {
                        map: i,
                        lambda: lambda.clone(),
                        image,
                    });
                }
                for &x in &xs {
                    let dfx = f.derivative(lambda, x).abs();
                    report.gamma1_obs = report.gamma1_obs.min(dfx);
                    report.gamma2_obs = report.gamma2_obs.max(dfx);
                    if dfx < self.gamma1 - tol || dfx > self.gamma2 + tol {
                        report.violations.push(AssumptionViolation::DerivativeOutOfBounds {
                            map: i,
                            lambda: lambda.clone(),
                            x,
                            value: dfx,
                        });
                    }
                }
                let mut prev: Option<(f64, f64, Vec<f64>)> = None;
                for &x in &vs {
                    let f2 = f.second_derivative(lambda, x);
                    report.m1 = report.m1.max(f2.abs());
                    let mixed: Vec<f64> = (0..self.d()).map(|k| f.mixed_partial(lambda, x, k)).collect();
                    for m in &mixed {
                        report.m2 = report.m2.max(m.abs());
                    }
                    if let Some((px, pf2, pm)) = &prev {
                        let dx = x - px;
                        let h = &mut report.holder_estimates;
                        h.second_derivative_in_x = h.second_derivative_in_x.max((f2 - pf2).abs() / dx);
                        for (a, b) in mixed.iter().zip(pm) {
                            h.mixed_in_x = h.mixed_in_x.max((a - b).abs() / dx);
                        }
                    }
                    prev = Some((x, f2, mixed));
                }
                // λ-direction quotients along each axis using the grid spacing
                for k in 0..self.d() {
                    let b = self.params.bounds[k];
                    let step = b.len() / (lambda_grid.max(2) - 1) as f64;
                    if step <= 0.0 || lambda[k] + step > b.hi + 1e-15 {
                        continue;
                    }
                    let mut next = lambda.clone();
                    next[k] += step;
                    for &x in &vs {
                        let q = (f.second_derivative(&next, x) - f.second_derivative(lambda, x)).abs() / step;
                        let h = &mut report.holder_estimates;
                        h.second_derivative_in_lambda = h.second_derivative_in_lambda.max(q);
                    }
                }
            }
        }
        report
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::constructors::{bernoulli_convolution_family, mobius_family};

    fn cantor() -> IFSFamily {
        IFSFamily::affine(&[(1.0 / 3.0, 0.0), (1.0 / 3.0, 2.0 / 3.0)], Interval::new(0.0, 1.0)).unwrap()
    }

    fn triple() -> IFSFamily {
        IFSFamily::affine(
            &[(1.0 / 3.0, 0.0), (1.0 / 3.0, 1.0 / 3.0), (1.0 / 3.0, 1.0)],
            Interval::new(0.0, 1.5),
        )
        .unwrap()
    }

    fn ep(pre: &[u8], per: &[u8]) -> EventuallyPeriodicWord {
        EventuallyPeriodicWord::from_slices(pre, per).unwrap()
    }

    #[test]
    fn apply_word_affine_and_identity() {
        let f = cantor();
        let (v, d) = f.apply_word(&[], &Word::new(vec![1, 2]), 0.0);
        assert!((v - 2.0 / 9.0).abs() < 1e-15);
        assert!((d - 1.0 / 9.0).abs() < 1e-15);
        assert_eq!(f.apply_word(&[], &Word::empty(), 0.42), (0.42, 1.0));
    }

    #[test]
    fn apply_word_mobius() {
        let fam = mobius_family(&[[2.0, 1.0, 1.0, 2.0], [3.0, 1.0, 1.0, 2.0]], &[]).unwrap();
        let (v, _) = fam.apply_word(&[], &Word::new(vec![1]), 0.0);
        // (a·0 + b)/((b + d)) = 1/3
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn cylinder_intervals() {
        let f = cantor();
        let c = f.cylinder_interval(&[], &Word::new(vec![2]));
        assert!((c.interval.lo - 2.0 / 3.0).abs() < 1e-15 && (c.interval.hi - 1.0).abs() < 1e-15);
        let c = f.cylinder_interval(&[], &Word::new(vec![2, 1]));
        assert!((c.interval.lo - 2.0 / 3.0).abs() < 1e-15 && (c.interval.hi - 7.0 / 9.0).abs() < 1e-15);

        let t = triple();
        let a = t.cylinder_interval(&[], &Word::new(vec![1])).interval;
        let b = t.cylinder_interval(&[], &Word::new(vec![2])).interval;
        // oracle: [0, 1/2] and [1/3, 5/6]
        assert!((a.hi - 0.5).abs() < 1e-15 && (b.lo - 1.0 / 3.0).abs() < 1e-15);
        assert!(a.intersects(&b));
    }

    #[test]
    fn cover_matches_individual_cylinders() {
        let fam = mobius_family(&[[2.0, 1.0, 1.0, 2.0], [1.0, 1.0, 1.0, 2.0]], &[]).unwrap();
        let cover = fam.cylinder_cover(&[], 4).unwrap();
        for (idx, iv) in cover.iter().enumerate() {
            let w = Word::from_index(idx, 2, 4);
            let c = fam.cylinder_interval(&[], &w).interval;
            assert!((c.lo - iv.lo).abs() < 1e-14 && (c.hi - iv.hi).abs() < 1e-14);
        }
    }

    #[test]
    fn log_lengths_match_cover() {
        let fam = mobius_family(&[[2.0, 1.0, 1.0, 2.0], [1.0, 1.0, 1.0, 2.0]], &[]).unwrap();
        let cover = fam.cylinder_cover(&[], 4).unwrap();
        let logs = fam.cylinder_log_lengths(&[], 4).unwrap();
        for (iv, l) in cover.iter().zip(&logs) {
            assert!((iv.len().ln() - l).abs() < 1e-12);
        }
        // one map iterated: |X_{1^n}| = |f^n(1) − f^n(0)| stays resolvable in logs
        let f = mobius_family(&[[2.2, 1.6, 0.2, 0.2], [2.2, 1.6, 0.2, 0.2]], &[]).unwrap();
        let deep = f.cylinder_log_lengths(&[], 16).unwrap();
        assert!(deep.iter().all(|l| l.is_finite() && (*l - deep[0]).abs() < 1e-9));
        assert!(deep[0] < -50.0);
    }

    #[test]
    fn projections() {
        let f = cantor();
        let p = f.natural_projection(&[], &ep(&[], &[2]), 1e-12).unwrap();
        assert!((p.value - 1.0).abs() < 1e-15);
        assert_eq!(p.error_bound, 0.0);
        let p = f.natural_projection(&[], &ep(&[1], &[2]), 1e-12).unwrap();
        assert!((p.value - 1.0 / 3.0).abs() < 1e-15);

        let bc = bernoulli_convolution_family(0.5, 0.6684755).unwrap();
        let p = bc.natural_projection(&[0.6], &ep(&[], &[1]), 1e-12).unwrap();
        assert!((p.value + 1.0).abs() < 1e-14);
    }

    #[test]
    fn bisection_fallback_agrees_with_closed_form() {
        let fam = mobius_family(&[[2.0, 1.0, 1.0, 2.0], [1.0, 1.0, 1.0, 2.0]], &[]).unwrap();
        let per = [1u8, 2, 2];
        let closed = fam.closed_form_fixed_point(&[], &per).unwrap();
        let (bis, width) = fam.fixed_point_bisection(&[], &per, 1e-13).unwrap();
        assert!(width <= 1e-13);
        assert!((closed - bis).abs() < 1e-12);
    }

    #[test]
    fn bisection_reports_missing_bracket() {
        // maps push X outside itself: f(x) = 0.5x + 3 has its fixed point at 6
        let fam = IFSFamily::affine(&[(0.5, 3.0), (0.5, 3.5)], Interval::new(0.0, 1.0)).unwrap();
        let err = fam.fixed_point_bisection(&[], &[1], 1e-10).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { .. }));
    }

    #[test]
    fn distortion() {
        let f = cantor();
        assert_eq!(f.distortion_ratio(&[], &Word::new(vec![1, 2, 1]), 16), 1.0);
        assert_eq!(f.distortion_ratio(&[], &Word::empty(), 16), 1.0);

        // the symmetric matrix [[2,1],[1,2]] acts as x ↦ (x+1)/3
        let sym = mobius_family(&[[2.0, 1.0, 1.0, 2.0], [1.0, 1.0, 1.0, 2.0]], &[]).unwrap();
        let w = Word::new(vec![1, 1]);
        assert!((sym.distortion_ratio(&[], &w, 64) - 1.0).abs() < 1e-14);

        let fam = mobius_family(&[[3.0, 1.0, 1.0, 2.0], [1.0, 1.0, 1.0, 2.0]], &[]).unwrap();
        let r = fam.distortion_ratio(&[], &w, 64);
        // oracle: direct max/min of |f_11'| on the grid
        let grid = Interval::new(0.0, 1.0).grid(64);
        let h = 1e-6;
        let vals: Vec<f64> = grid
            .iter()
            .map(|&x| {
                let g = |y: f64| fam.apply_word(&[], &w, y).0;
                ((g(x + h) - g(x - h)) / (2.0 * h)).abs()
            })
            .collect();
        let oracle = vals.iter().copied().fold(0.0, f64::max) / vals.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(r > 1.0);
        assert!((r - oracle).abs() < 1e-6 * oracle);
    }

    #[test]
    fn exact_overlap_triple() {
        let t = triple();
        let pairs = t.detect_exact_overlap(&[], 2).unwrap();
        assert!(pairs.contains(&(Word::new(vec![1, 3]), Word::new(vec![2, 1]))));
        assert!(t.detect_exact_overlap(&[], 1).unwrap().is_empty());
    }

    #[test]
    fn exact_overlap_cantor_none() {
        let f = cantor();
        assert!(f.detect_exact_overlap(&[], 3).unwrap().is_empty());
        // brute force oracle over all words of length ≤ 3
        let words = crate::symbolic::enumerate_words_up_to(2, 3).unwrap();
        for (i, u) in words.iter().enumerate().skip(1) {
            for v in words.iter().skip(i + 1) {
                let a = f.apply_word(&[], u, 0.0).0 - f.apply_word(&[], v, 0.0).0;
                let b = f.apply_word(&[], u, 1.0).0 - f.apply_word(&[], v, 1.0).0;
                assert!(a.abs() > 1e-12 || b.abs() > 1e-12);
            }
        }
    }

    #[test]
    fn exact_overlap_rejects_mobius() {
        let fam = mobius_family(&[[2.0, 1.0, 1.0, 2.0], [1.0, 1.0, 1.0, 2.0]], &[]).unwrap();
        assert_eq!(fam.detect_exact_overlap(&[], 2), Err(Error::UnsupportedKind));
    }

    #[test]
    fn assumptions_cantor() {
        let r = cantor().verify_assumptions(2, 33);
        assert!((r.gamma1_obs - 1.0 / 3.0).abs() < 1e-15);
        assert!((r.gamma2_obs - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.m1, 0.0);
        assert!(r.ok());
    }

    #[test]
    fn assumptions_bc() {
        let bc = bernoulli_convolution_family(0.5, 0.66).unwrap();
        let r = bc.verify_assumptions(9, 33);
        assert!(r.gamma2_obs <= 0.66 + 1e-15);
        assert!(r.ok(), "{:?}", r.violations);
    }

    #[test]
    fn assumptions_flag_bad_gamma() {
        let fam = IFSFamily::new(
            vec![MapSpec::affine(0.3, 0.0), MapSpec::affine(0.7, 0.3)],
            Interval::new(0.0, 1.0),
            ParamBox::empty(),
            0.2,
            0.5,
        )
        .unwrap();
        let r = fam.verify_assumptions(2, 9);
        assert!(!r.violations.is_empty());
    }
}
