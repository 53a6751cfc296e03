use rand::Rng;
use serde::Serialize;

use super::bc::{bc_chaos_game_stream, PlaceDepBC};
use super::chaos::{stream_rng, BURN_IN};
use super::stats::ks_two_sample;
use crate::error::{Error, Result};

/// Vertical perturbation amplitude applied after each step.
pub const Y_JITTER: f64 = 1.0 / (1u64 << 33) as f64;

pub const MIN_KS_SAMPLES: usize = 100_000;

/// Slanted baker map on `[−1, 1] × [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BakerSpec {
    pub lambda: f64,
    pub rho: f64,
}

impl BakerSpec {
    pub fn new(lambda: f64, rho: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::invalid(format!("lambda must lie in (0, 1), got {lambda}")));
        }
        if !(0.0..0.5).contains(&rho) {
            return Err(Error::invalid(format!("rho must lie in [0, 1/2), got {rho}")));
        }
        Ok(Self { lambda, rho })
    }

    pub fn step(&self, x: f64, y: f64) -> (f64, f64) {
        let s = 1.0 - self.lambda;
        let t = self.rho * x;
        if y < 0.5 + t {
            (self.lambda * x - s, 2.0 * y / (1.0 + 2.0 * t))
        } else {
            (self.lambda * x + s, (2.0 * y - 2.0 * t - 1.0) / (1.0 - 2.0 * t))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BakerOrbit {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

fn reflect(y: f64) -> f64 {
    if y < 0.0 {
        -y
    } else if y > 1.0 {
        2.0 - y
    } else {
        y
    }
}

/// Orbit from a random start, with a reflected `±2^-33` jitter on `y` so that
/// the expanding coordinate does not exhaust its mantissa.
pub fn baker_orbit(spec: &BakerSpec, n: usize, seed: u64) -> BakerOrbit {
    let mut rng = stream_rng(seed, 1);
    let mut x: f64 = rng.gen_range(-1.0..=1.0);
    let mut y: f64 = rng.gen();
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for step in 0..BURN_IN + n {
        let (nx, ny) = spec.step(x, y);
        let u: f64 = rng.gen();
        x = nx.clamp(-1.0, 1.0);
        y = reflect(ny + (2.0 * u - 1.0) * Y_JITTER);
        if step >= BURN_IN {
            xs.push(x);
            ys.push(y);
        }
    }
    BakerOrbit { xs, ys }
}

/// KS distance between a baker x-marginal and a place-dependent BC sample.
pub fn ks_baker_bc(baker: &BakerSpec, bc: &PlaceDepBC, n: usize, seed: u64) -> Result<f64> {
    if n < MIN_KS_SAMPLES {
        return Err(Error::invalid(format!("need at least {MIN_KS_SAMPLES} samples")));
    }
    let orbit = baker_orbit(baker, n, seed);
    let chain = bc_chaos_game_stream(bc, n, seed, 0);
    Ok(ks_two_sample(&orbit.xs, &chain.points))
}

pub fn baker_vs_bc(spec: &BakerSpec, n: usize, seed: u64) -> Result<f64> {
    ks_baker_bc(spec, &PlaceDepBC::new(spec.lambda, spec.rho)?, n, seed)
}
