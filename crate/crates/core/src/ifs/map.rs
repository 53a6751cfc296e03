use serde::{Deserialize, Serialize};

/// `c + Σ_k w_k·λ_k`, an affine function of the parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamExpr {
    pub constant: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<(usize, f64)>,
}

impl ParamExpr {
    pub fn constant(c: f64) -> Self {
        ParamExpr {
            constant: c,
            terms: Vec::new(),
        }
    }

    pub fn linear(constant: f64, terms: Vec<(usize, f64)>) -> Self {
        ParamExpr { constant, terms }
    }

    pub fn eval(&self, lambda: &[f64]) -> f64 {
        self.terms
            .iter()
            .fold(self.constant, |acc, &(k, w)| acc + w * lambda[k])
    }

    pub fn partial(&self, k: usize) -> f64 {
        self.terms
            .iter()
            .filter(|(j, _)| *j == k)
            .map(|(_, w)| w)
            .sum()
    }

    pub fn max_param(&self) -> Option<usize> {
        self.terms.iter().map(|(k, _)| *k).max()
    }
}

impl From<f64> for ParamExpr {
    fn from(c: f64) -> Self {
        ParamExpr::constant(c)
    }
}

/// Coefficients `(p, q, r, s)` of `x ↦ (p x + q) / (r x + s)`.
pub type Homography = [f64; 4];

/// One map of a parametrized family.
///
/// Every kind is a homography in `x` whose coefficients are polynomial in
/// `λ`, so all evaluators below are exact closed forms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapSpec {
    /// `x ↦ slope·x + offset`.
    Affine { slope: ParamExpr, offset: ParamExpr },
    /// Projective action of a matrix on the positive quadrant:
    /// `x ↦ (a x + b(1−x)) / ((a+c) x + (b+d)(1−x))`.
    Mobius {
        a: ParamExpr,
        b: ParamExpr,
        c: ParamExpr,
        d: ParamExpr,
    },
    /// `x ↦ base(x) + λ_param`.
    Translated { base: Box<MapSpec>, param: usize },
}

impl MapSpec {
    pub fn affine(slope: f64, offset: f64) -> Self {
        MapSpec::Affine {
            slope: slope.into(),
            offset: offset.into(),
        }
    }

    pub fn mobius(a: f64, b: f64, c: f64, d: f64) -> Self {
        MapSpec::Mobius {
            a: a.into(),
            b: b.into(),
            c: c.into(),
            d: d.into(),
        }
    }

    /// `x ↦ (p x + q)/(r x + s)` rewritten in the quadrant form.
    pub fn linear_fractional(p: f64, q: f64, r: f64, s: f64) -> Self {
        MapSpec::mobius(p + q, q, r + s - p - q, s - q)
    }

    pub fn translated(base: MapSpec, param: usize) -> Self {
        MapSpec::Translated {
            base: Box::new(base),
            param,
        }
    }

    /// True when the map is affine for every parameter.
    pub fn is_affine(&self) -> bool {
        match self {
            MapSpec::Affine { .. } => true,
            MapSpec::Mobius { .. } => false,
            MapSpec::Translated { base, .. } => base.is_affine(),
        }
    }

    /// Largest parameter index referenced, if any.
    pub fn max_param(&self) -> Option<usize> {
        match self {
            MapSpec::Affine { slope, offset } => slope.max_param().max(offset.max_param()),
            MapSpec::Mobius { a, b, c, d } => a
                .max_param()
                .max(b.max_param())
                .max(c.max_param())
                .max(d.max_param()),
            MapSpec::Translated { base, param } => base.max_param().max(Some(*param)),
        }
    }

    pub fn homography(&self, lambda: &[f64]) -> Homography {
        match self {
            MapSpec::Affine { slope, offset } => [slope.eval(lambda), offset.eval(lambda), 0.0, 1.0],
            MapSpec::Mobius { a, b, c, d } => {
                let (a, b, c, d) = (a.eval(lambda), b.eval(lambda), c.eval(lambda), d.eval(lambda));
                [a - b, b, a + c - b - d, b + d]
            }
            MapSpec::Translated { base, param } => {
                let [p, q, r, s] = base.homography(lambda);
                let t = lambda[*param];
                [p + t * r, q + t * s, r, s]
            }
        }
    }

    /// `∂/∂λ_k` of the homography coefficients.
    pub fn homography_partial(&self, lambda: &[f64], k: usize) -> Homography {
        match self {
            MapSpec::Affine { slope, offset } => [slope.partial(k), offset.partial(k), 0.0, 0.0],
            MapSpec::Mobius { a, b, c, d } => {
                let (a, b, c, d) = (a.partial(k), b.partial(k), c.partial(k), d.partial(k));
                [a - b, b, a + c - b - d, b + d]
            }
            MapSpec::Translated { base, param } => {
                let [_, _, r, s] = base.homography(lambda);
                let [pk, qk, rk, sk] = base.homography_partial(lambda, k);
                let t = lambda[*param];
                let mut out = [pk + t * rk, qk + t * sk, rk, sk];
                if k == *param {
                    out[0] += r;
                    out[1] += s;
                }
                out
            }
        }
    }

    pub fn eval(&self, lambda: &[f64], x: f64) -> f64 {
        let [p, q, r, s] = self.homography(lambda);
        (p * x + q) / (r * x + s)
    }

    /// `(f(x), f'(x))`.
    pub fn eval_with_derivative(&self, lambda: &[f64], x: f64) -> (f64, f64) {
        let [p, q, r, s] = self.homography(lambda);
        let den = r * x + s;
        ((p * x + q) / den, (p * s - q * r) / (den * den))
    }

    pub fn derivative(&self, lambda: &[f64], x: f64) -> f64 {
        self.eval_with_derivative(lambda, x).1
    }

    pub fn second_derivative(&self, lambda: &[f64], x: f64) -> f64 {
        let [p, q, r, s] = self.homography(lambda);
        let den = r * x + s;
        -2.0 * r * (p * s - q * r) / (den * den * den)
    }

    /// `∂f/∂λ_k (x)`.
    pub fn param_partial(&self, lambda: &[f64], x: f64, k: usize) -> f64 {
        let [p, q, r, s] = self.homography(lambda);
        let [pk, qk, rk, sk] = self.homography_partial(lambda, k);
        let num = p * x + q;
        let den = r * x + s;
        ((pk * x + qk) * den - num * (rk * x + sk)) / (den * den)
    }

    /// `∂²f/∂x∂λ_k (x)`.
    pub fn mixed_partial(&self, lambda: &[f64], x: f64, k: usize) -> f64 {
        let [p, q, r, s] = self.homography(lambda);
        let [pk, qk, rk, sk] = self.homography_partial(lambda, k);
        let det = p * s - q * r;
        let det_k = pk * s + p * sk - qk * r - q * rk;
        let den = r * x + s;
        det_k / (den * den) - 2.0 * det * (rk * x + sk) / (den * den * den)
    }

    /// Zero of the denominator, if the map has a finite pole.
    pub fn pole(&self, lambda: &[f64]) -> Option<f64> {
        let [_, _, r, s] = self.homography(lambda);
        (r != 0.0).then(|| -s / r)
    }
}

/// Composition `outer ∘ inner` of homographies.
pub fn compose(outer: &Homography, inner: &Homography) -> Homography {
    let [a, b, c, d] = *outer;
    let [e, f, g, h] = *inner;
    [a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h]
}
