use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ifs::IFSFamily;

pub const BURN_IN: usize = 1000;

/// Generator keyed by `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Decorrelated per-cell seed (splitmix64 finalizer).
pub fn cell_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Random iteration with fixed symbol probabilities.
pub fn ifs_chaos_game(
    fam: &IFSFamily,
    lambda: &[f64],
    probabilities: &[f64],
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if probabilities.len() != fam.m() || probabilities.iter().any(|&p| !(p >= 0.0)) {
        return Err(Error::invalid("one nonnegative probability per map required"));
    }
    let total: f64 = probabilities.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::invalid("probabilities must sum to 1"));
    }
    let mut cumulative = Vec::with_capacity(fam.m());
    let mut acc = 0.0;
    for p in probabilities {
        acc += p;
        cumulative.push(acc);
    }
    let mut rng = stream_rng(seed, 0);
    let x0 = fam.domain();
    let mut x = 0.5 * (x0.lo + x0.hi);
    let mut out = Vec::with_capacity(n);
    for step in 0..BURN_IN + n {
        let u: f64 = rng.gen();
        let a = cumulative.iter().position(|&c| u < c).unwrap_or(fam.m() - 1);
        x = fam.maps()[a].eval(lambda, x);
        if step >= BURN_IN {
            out.push(x);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::Interval;

    #[test]
    fn streams_differ_and_repeat() {
        let a: Vec<u64> = (0..4).map(|_| 0).scan(stream_rng(7, 0), |r, _: u64| Some(r.gen())).collect();
        let b: Vec<u64> = (0..4).map(|_| 0).scan(stream_rng(7, 0), |r, _: u64| Some(r.gen())).collect();
        let c: Vec<u64> = (0..4).map(|_| 0).scan(stream_rng(7, 1), |r, _: u64| Some(r.gen())).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(cell_seed(1, 0), cell_seed(1, 1));
    }

    #[test]
    fn cantor_samples_avoid_gap() {
        let f = IFSFamily::affine(&[(1.0 / 3.0, 0.0), (1.0 / 3.0, 2.0 / 3.0)], Interval::new(0.0, 1.0)).unwrap();
        let xs = ifs_chaos_game(&f, &[], &[0.5, 0.5], 10_000, 3).unwrap();
        assert!(xs.iter().all(|&x| !(x > 1.0 / 3.0 + 1e-12 && x < 2.0 / 3.0 - 1e-12)));
    }
}
