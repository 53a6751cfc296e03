use serde::{Deserialize, Serialize};

use super::family::{IFSFamily, Interval, ParamBox};
use super::map::{MapSpec, ParamExpr};
use crate::error::{Error, Result};

/// Entry-wise parametrization of a matrix tuple: entry `entry` (0..4, row
/// major) of matrix `matrix` becomes `base + λ_k`, with `λ_k ∈ [lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntryParam {
    pub matrix: usize,
    pub entry: usize,
    pub lo: f64,
    pub hi: f64,
}

/// `‖f'‖ = |det A| / ⟨A⟩²` for the quadrant action, `⟨A⟩` the smaller column sum.
pub fn mobius_contraction_norm(m: &[f64; 4]) -> f64 {
    let [a, b, c, d] = *m;
    let col = (a + c).min(b + d);
    (a * d - b * c).abs() / (col * col)
}

fn mobius_min_derivative(m: &[f64; 4]) -> f64 {
    let [a, b, c, d] = *m;
    let col = (a + c).max(b + d);
    (a * d - b * c).abs() / (col * col)
}

/// `f_i^λ = f_i + λ_i` over `U = [−ε, ε]^m`, on a domain enlarged so that
/// every translate still maps it into itself.
pub fn vertical_translate_family(base: &IFSFamily, eps: f64) -> Result<IFSFamily> {
    if base.d() != 0 {
        return Err(Error::invalid("vertical translates need an unparametrized base"));
    }
    if !(eps > 0.0) {
        return Err(Error::invalid("translation radius must be positive"));
    }
    let v = base.neighbourhood().grid(257);
    for (i, f) in base.maps().iter().enumerate() {
        let slope = v.iter().map(|&x| f.derivative(&[], x).abs()).fold(0.0, f64::max);
        if slope >= 0.5 {
            return Err(Error::ContractionTooWeak { index: i, slope });
        }
    }
    let pad = 1.01 * eps / (1.0 - base.gamma2());
    let x = base.domain();
    let domain = Interval::new(x.lo - pad, x.hi + pad);
    let maps: Vec<MapSpec> = base
        .maps()
        .iter()
        .enumerate()
        .map(|(i, f)| MapSpec::translated(f.clone(), i))
        .collect();
    let (g1, g2) = sampled_bounds(&maps, domain, &vec![0.0; base.m()]);
    IFSFamily::new(
        maps,
        domain,
        ParamBox::cube(base.m(), -eps, eps),
        g1.min(base.gamma1()),
        g2.max(base.gamma2()),
    )
}

fn sampled_bounds(maps: &[MapSpec], domain: Interval, lambda: &[f64]) -> (f64, f64) {
    let xs = domain.grid(257);
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for f in maps {
        for &x in &xs {
            let s = f.derivative(lambda, x).abs();
            lo = lo.min(s);
            hi = hi.max(s);
        }
    }
    (lo, hi)
}

/// Positive-quadrant Möbius family on `X = [0, 1]`; matrices are row major `[a, b, c, d]`.
pub fn mobius_family(matrices: &[[f64; 4]], params: &[EntryParam]) -> Result<IFSFamily> {
    for p in params {
        if p.matrix >= matrices.len() || p.entry >= 4 {
            return Err(Error::invalid("entry parametrization out of range"));
        }
        if !(p.lo <= p.hi) {
            return Err(Error::invalid("parameter range must satisfy lo <= hi"));
        }
    }
    let pbox = ParamBox::new(params.iter().map(|p| Interval::new(p.lo, p.hi)).collect());

    let mut gamma1 = f64::INFINITY;
    let mut gamma2: f64 = 0.0;
    for lambda in pbox.corners() {
        for (i, m) in matrices.iter().enumerate() {
            let mut m = *m;
            for (k, p) in params.iter().enumerate() {
                if p.matrix == i {
                    m[p.entry] += lambda[k];
                }
            }
            if m.iter().any(|&e| e < 0.0 || !e.is_finite()) {
                return Err(Error::invalid(format!("matrix {i} must have nonnegative entries")));
            }
            if m[0] * m[3] - m[1] * m[2] == 0.0 {
                return Err(Error::SingularMatrix { index: i });
            }
            let norm = mobius_contraction_norm(&m);
            if !(norm < 1.0) {
                return Err(Error::NotContracting { index: i, norm });
            }
            gamma2 = gamma2.max(norm);
            gamma1 = gamma1.min(mobius_min_derivative(&m));
        }
    }

    let maps = matrices
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let mut entries: [ParamExpr; 4] = m.map(ParamExpr::constant);
            for (k, p) in params.iter().enumerate() {
                if p.matrix == i {
                    entries[p.entry].terms.push((k, 1.0));
                }
            }
            let [a, b, c, d] = entries;
            MapSpec::Mobius { a, b, c, d }
        })
        .collect();
    IFSFamily::new(maps, Interval::new(0.0, 1.0), pbox, gamma1, gamma2)
}

/// Unparametrized family of `x ↦ (p x + q)/(r x + s)` on `domain`.
pub fn linear_fractional_family(coeffs: &[[f64; 4]], domain: Interval) -> Result<IFSFamily> {
    let maps: Vec<MapSpec> = coeffs
        .iter()
        .map(|&[p, q, r, s]| MapSpec::linear_fractional(p, q, r, s))
        .collect();
    for (i, &[p, q, r, s]) in coeffs.iter().enumerate() {
        if p * s - q * r == 0.0 {
            return Err(Error::SingularMatrix { index: i });
        }
        if r != 0.0 && domain.inflate(0.05).contains(-s / r) {
            return Err(Error::invalid(format!("map {i} has a pole near the domain")));
        }
    }
    let (g1, g2) = sampled_bounds(&maps, domain, &[]);
    if !(g2 < 1.0) {
        let index = maps
            .iter()
            .position(|f| domain.grid(257).iter().any(|&x| f.derivative(&[], x).abs() >= 1.0))
            .unwrap_or(0);
        return Err(Error::NotContracting { index, norm: g2 });
    }
    IFSFamily::new(maps, domain, ParamBox::empty(), g1, g2)
}

/// `{λx − (1−λ), λx + (1−λ)}` on `X = [−1, 1]` with `λ ∈ [lo, hi]`.
pub fn bernoulli_convolution_family(lo: f64, hi: f64) -> Result<IFSFamily> {
    if !(0.0 < lo && lo <= hi && hi < 1.0) {
        return Err(Error::invalid("contraction range must satisfy 0 < lo <= hi < 1"));
    }
    let slope = ParamExpr::linear(0.0, vec![(0, 1.0)]);
    let maps = vec![
        MapSpec::Affine {
            slope: slope.clone(),
            offset: ParamExpr::linear(-1.0, vec![(0, 1.0)]),
        },
        MapSpec::Affine {
            slope,
            offset: ParamExpr::linear(1.0, vec![(0, -1.0)]),
        },
    ];
    IFSFamily::new(
        maps,
        Interval::new(-1.0, 1.0),
        ParamBox::new(vec![Interval::new(lo, hi)]),
        lo,
        hi,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::EventuallyPeriodicWord;

    fn cantor() -> IFSFamily {
        IFSFamily::affine(&[(1.0 / 3.0, 0.0), (1.0 / 3.0, 2.0 / 3.0)], Interval::new(0.0, 1.0)).unwrap()
    }

    #[test]
    fn translates_of_cantor() {
        let fam = vertical_translate_family(&cantor(), 0.05).unwrap();
        assert_eq!(fam.d(), 2);
        assert_eq!(fam.m(), 2);
        assert!(fam.verify_assumptions(3, 33).ok());
    }

    #[test]
    fn translates_of_quarter_system() {
        let base = IFSFamily::affine(&[(0.25, 0.0), (0.25, 0.5), (0.25, 0.75)], Interval::new(0.0, 1.0)).unwrap();
        let fam = vertical_translate_family(&base, 0.02).unwrap();
        assert_eq!(fam.d(), 3);
    }

    #[test]
    fn translates_reject_weak_contraction() {
        let base = IFSFamily::affine(&[(0.6, 0.0), (0.6, 0.4)], Interval::new(0.0, 1.0)).unwrap();
        assert!(matches!(
            vertical_translate_family(&base, 0.05),
            Err(Error::ContractionTooWeak { .. })
        ));
    }

    #[test]
    fn translate_gradients() {
        let fam = vertical_translate_family(&cantor(), 0.05).unwrap();
        let lambda = [0.0, 0.0];
        // oracle: partial sums of the geometric series, 60 terms
        let oracle: f64 = (0..60).map(|n| (1.0f64 / 3.0).powi(n)).sum();
        let i = EventuallyPeriodicWord::from_slices(&[], &[1]).unwrap();
        let g = fam.projection_gradient(&lambda, &i, 40).unwrap();
        assert!((g.gradient[0] - oracle).abs() < 1e-12);
        assert!(g.gradient[1].abs() < 1e-15);
        assert!(g.tail_bound < 1e-15);

        let j = EventuallyPeriodicWord::from_slices(&[2], &[1]).unwrap();
        let g = fam.projection_gradient(&lambda, &j, 40).unwrap();
        assert!((g.gradient[1] - 1.0).abs() < 1e-12);
        assert!((g.gradient[0] - oracle / 3.0).abs() < 1e-12);

        let g = cantor().projection_gradient(&[], &i, 5).unwrap();
        assert!(g.gradient.is_empty() && g.tail_bound == 0.0);
    }

    #[test]
    fn mobius_norms() {
        let fam = mobius_family(&[[2.0, 1.0, 1.0, 2.0], [3.0, 1.0, 1.0, 2.0]], &[]).unwrap();
        assert!((mobius_contraction_norm(&[2.0, 1.0, 1.0, 2.0]) - 1.0 / 3.0).abs() < 1e-15);
        assert!((mobius_contraction_norm(&[3.0, 1.0, 1.0, 2.0]) - 5.0 / 9.0).abs() < 1e-15);
        assert!((fam.gamma2() - 5.0 / 9.0).abs() < 1e-15);
        assert!(fam.verify_assumptions(2, 65).ok());
    }

    #[test]
    fn mobius_rejections() {
        assert!(matches!(
            mobius_family(&[[1.0, 0.0, 0.0, 1.0], [2.0, 1.0, 1.0, 2.0]], &[]),
            Err(Error::NotContracting { index: 0, .. })
        ));
        assert!(matches!(
            mobius_family(&[[2.0, 1.0, 1.0, 2.0], [1.0, 1.0, 1.0, 1.0]], &[]),
            Err(Error::SingularMatrix { index: 1 })
        ));
    }

    #[test]
    fn mobius_parametrized_entries() {
        let p = EntryParam { matrix: 0, entry: 0, lo: 0.0, hi: 0.5 };
        let fam = mobius_family(&[[2.0, 1.0, 1.0, 2.0], [3.0, 1.0, 1.0, 2.0]], &[p]).unwrap();
        assert_eq!(fam.d(), 1);
        let direct = mobius_family(&[[2.25, 1.0, 1.0, 2.0], [3.0, 1.0, 1.0, 2.0]], &[]).unwrap();
        for &x in &[0.0, 0.3, 1.0] {
            let a = fam.maps()[0].eval(&[0.25], x);
            let b = direct.maps()[0].eval(&[], x);
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn linear_fractional_constructor() {
        let fam = linear_fractional_family(&[[1.0, 0.0, 1.0, 3.0], [1.0, 1.0, 0.0, 4.0]], Interval::new(0.0, 1.0)).unwrap();
        assert!(fam.gamma2() < 1.0);
        assert!(fam.verify_assumptions(2, 33).ok());
    }

    #[test]
    fn bc_family_maps() {
        let fam = bernoulli_convolution_family(0.5, 0.66).unwrap();
        assert!((fam.maps()[0].eval(&[0.6], 1.0) - 0.2).abs() < 1e-15);
        assert!((fam.maps()[1].eval(&[0.6], -1.0) + 0.2).abs() < 1e-15);
        assert_eq!(fam.maps()[1].param_partial(&[0.6], 0.5, 0), 0.5 - 1.0);
    }
}
