//! Seeded instance and prediction generators.
//!
//! Gaussian draws use the inverse normal CDF applied to uniforms from ChaCha8, one
//! 53-bit uniform per draw, so streams are reproducible across platforms.

use std::sync::Arc;

use rand::seq::index::sample;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::GenError;
use crate::instance::{Instance, Kind, PredictionSet, Request, Requests, RideRequest};
use crate::metric::{half_line_space, MetricSpace, PointId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    #[serde(default)]
    pub sigma_release: f64,
    #[serde(default)]
    pub sigma_location: f64,
    #[serde(default = "one")]
    pub fraction: f64,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

impl NoiseSpec {
    pub fn new(sigma_release: f64, sigma_location: f64, seed: u64) -> Self {
        NoiseSpec { sigma_release, sigma_location, fraction: 1.0, seed }
    }

    fn check(&self) -> Result<(), GenError> {
        for (name, v) in [("sigma_release", self.sigma_release), ("sigma_location", self.sigma_location)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(GenError::Param(format!("{name} must be a finite non-negative number, got {v}")));
            }
        }
        check_fraction(self.fraction)
    }
}

fn check_fraction(f: f64) -> Result<(), GenError> {
    if (0.0..=1.0).contains(&f) {
        Ok(())
    } else {
        Err(GenError::Param(format!("fraction must lie in [0, 1], got {f}")))
    }
}

/// Seeded source of standard normal draws.
pub struct Gaussian {
    rng: ChaCha8Rng,
    unit: Normal,
}

impl Gaussian {
    pub fn new(seed: u64) -> Self {
        Gaussian { rng: ChaCha8Rng::seed_from_u64(seed), unit: Normal::new(0.0, 1.0).expect("unit normal") }
    }

    /// Uniform on the open interval (0, 1).
    fn open_uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }

    pub fn draw(&mut self, sigma: f64) -> f64 {
        let u = self.open_uniform();
        sigma * self.unit.inverse_cdf(u)
    }
}

/// The point whose distance from `at` is closest to `target`; lowest id on ties.
pub fn displace(space: &MetricSpace, at: PointId, target: f64) -> PointId {
    if target == 0.0 {
        return at;
    }
    let row = space.row(at);
    let mut best = at;
    let mut gap = f64::INFINITY;
    for (i, &d) in row.iter().enumerate() {
        let g = (d - target).abs();
        if g < gap {
            gap = g;
            best = PointId(i);
        }
    }
    best
}

/// Noisy copy of the actual requests, optionally restricted to a sampled fraction.
pub fn perturb(actual: &Instance, spec: &NoiseSpec) -> Result<PredictionSet, GenError> {
    spec.check()?;
    let space = &*actual.space;
    let mut g = Gaussian::new(spec.seed);
    let release = |r: f64, g: &mut Gaussian| (r + g.draw(spec.sigma_release)).max(0.0);
    let moved = |p: PointId, g: &mut Gaussian| displace(space, p, g.draw(spec.sigma_location).abs());
    let requests = match &actual.requests {
        Requests::Tsp(rs) => Requests::Tsp(
            rs.iter()
                .map(|r| {
                    let release = release(r.release, &mut g);
                    Request { loc: moved(r.loc, &mut g), release }
                })
                .collect(),
        ),
        Requests::Darp(rs) => Requests::Darp(
            rs.iter()
                .map(|r| {
                    let release = release(r.release, &mut g);
                    let pickup = moved(r.pickup, &mut g);
                    RideRequest { pickup, dropoff: moved(r.dropoff, &mut g), release }
                })
                .collect(),
        ),
    };
    let noisy = actual.with_requests(requests)?;
    if spec.fraction < 1.0 {
        return partial(&noisy, spec.fraction, spec.seed ^ 0x9e37_79b9_7f4a_7c15);
    }
    Ok(PredictionSet::Requests(noisy.requests))
}

/// Number of requests kept for a fraction, rounding up.
pub fn kept(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64) - 1e-9).ceil().max(0.0) as usize
}

/// Uniformly sampled subset of the actual requests, in their original order.
pub fn partial(actual: &Instance, fraction: f64, seed: u64) -> Result<PredictionSet, GenError> {
    check_fraction(fraction)?;
    let n = actual.len();
    let k = kept(n, fraction).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = sample(&mut rng, n, k).into_vec();
    idx.sort_unstable();
    Ok(PredictionSet::Requests(actual.requests.select(&idx)))
}

/// Random instances with uniform locations and uniform releases in [0, horizon].
pub fn synth_instances(
    space: Arc<MetricSpace>,
    kind: Kind,
    count: usize,
    per_instance: usize,
    horizon: f64,
    seed: u64,
) -> Result<Vec<Instance>, GenError> {
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(GenError::Param(format!("horizon must be finite and non-negative, got {horizon}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = space.n();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let release = |rng: &mut ChaCha8Rng| if horizon > 0.0 { rng.gen_range(0.0..=horizon) } else { 0.0 };
        let requests = match kind {
            Kind::Tsp => Requests::Tsp(
                (0..per_instance)
                    .map(|_| {
                        let loc = PointId(rng.gen_range(0..n));
                        Request { loc, release: release(&mut rng) }
                    })
                    .collect(),
            ),
            Kind::Darp => Requests::Darp(
                (0..per_instance)
                    .map(|_| {
                        let pickup = PointId(rng.gen_range(0..n));
                        let dropoff = PointId(rng.gen_range(0..n));
                        RideRequest { pickup, dropoff, release: release(&mut rng) }
                    })
                    .collect(),
            ),
        };
        out.push(Instance::new(space.clone(), requests)?);
    }
    Ok(out)
}

/// Random half-line instances: coordinates uniform in [0, reach], releases uniform in [0, horizon].
/// Each instance gets its own space made of its request coordinates.
pub fn synth_half_line(count: usize, per_instance: usize, reach: f64, horizon: f64, seed: u64) -> Result<Vec<Instance>, GenError> {
    if !(reach.is_finite() && reach >= 0.0 && horizon.is_finite() && horizon >= 0.0) {
        return Err(GenError::Param("reach and horizon must be finite and non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let pts: Vec<(f64, f64)> = (0..per_instance)
            .map(|_| {
                let x = if reach > 0.0 { rng.gen_range(0.0..=reach) } else { 0.0 };
                let r = if horizon > 0.0 { rng.gen_range(0.0..=horizon) } else { 0.0 };
                (x, r)
            })
            .collect();
        out.push(half_line_instance(&pts)?);
    }
    Ok(out)
}

/// Half-line instance from (coordinate, release) pairs.
pub fn half_line_instance(points: &[(f64, f64)]) -> Result<Instance, GenError> {
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let space = Arc::new(half_line_space(&xs)?);
    let requests = points
        .iter()
        .map(|&(x, release)| Request { loc: space.point_at(x).expect("coordinate present"), release })
        .collect();
    Ok(Instance::tsp(space, requests)?)
}

/// Per-run seed derived from a base seed and run coordinates.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    let mut s = rng.next_u64();
    for &p in parts {
        s = ChaCha8Rng::seed_from_u64(s ^ p.wrapping_mul(0x9e37_79b9_7f4a_7c15)).next_u64();
    }
    s
}
