//! Seeded Monte Carlo machinery.
//!
//! Every estimator draws from a ChaCha stream keyed by `(seed, tag, index)`,
//! so results do not depend on evaluation order or thread scheduling. Points
//! are jittered-stratified in the unit cube and grouped into independent
//! replicate batches; the reported standard error is the spread of the batch
//! means, which stays honest under stratification and antithetic pairing.

use std::ops::{Add, Mul};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::vec3::Vec3;

/// Number of independent replicate batches per estimate.
pub const BATCHES: usize = 10;

/// Maximum redraws for a sample landing on a field's singular set.
const MAX_REDRAWS: usize = 32;

/// Call-site tags separating RNG streams.
pub mod tags {
    pub const HALF_BALL: u64 = 0x4842_414c;
    pub const VOLUME_PAIRING: u64 = 0x564f_4c50;
    pub const MOLLIFY: u64 = 0x4d4f_4c4c;
    pub const ONE_SIDED: u64 = 0x4f4e_4553;
    pub const SET_VOLUME: u64 = 0x5345_5456;
    pub const BOUNDARY: u64 = 0x424e_4459;
    pub const TEST_FAMILY: u64 = 0x5446_414d;
    pub const POINT: u64 = 0x504f_494e;
    pub const SUPPORT_PROBE: u64 = 0x5350_5242;
    pub const MASS_CHECK: u64 = 0x4d41_5353;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from a parent seed and a list of discriminators.
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Independent RNG stream for `(seed, tag, index)`.
pub fn stream(seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, &[tag, index]))
}

/// Values that can be averaged by the estimators.
pub trait Sample: Copy + Send + Sync + Add<Output = Self> + Mul<f64, Output = Self> {
    const ZERO: Self;
    fn sq_norm(self) -> f64;
}

impl Sample for f64 {
    const ZERO: f64 = 0.0;
    fn sq_norm(self) -> f64 {
        self * self
    }
}

impl Sample for Vec3 {
    const ZERO: Vec3 = Vec3::ZERO;
    fn sq_norm(self) -> f64 {
        self.norm_squared()
    }
}

/// A Monte Carlo estimate with its standard error (Euclidean norm of the
/// per-component standard errors for vector values).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub std_error: f64,
}

impl<T: Sample> Estimate<T> {
    pub fn exact(value: T) -> Self {
        Self { value, std_error: 0.0 }
    }

    pub fn scale(self, s: f64) -> Self {
        Self {
            value: self.value * s,
            std_error: self.std_error * s.abs(),
        }
    }

    /// Sum of two estimates with independent errors (conservative when the
    /// errors are positively correlated through common random numbers).
    pub fn combine(self, other: Self, sign: f64) -> Self {
        Self {
            value: self.value + other.value * sign,
            std_error: self.std_error.hypot(other.std_error),
        }
    }
}

/// Integrand outcome other than a value: `Redraw` asks the sampler for a new
/// point in the same stratum (the draw hit an L³-null singular set).
#[derive(Debug, Clone, PartialEq)]
pub enum SampleFault {
    Redraw,
    Fail(Error),
}

impl From<Error> for SampleFault {
    fn from(e: Error) -> Self {
        match e {
            Error::UndefinedPoint { .. } => SampleFault::Redraw,
            other => SampleFault::Fail(other),
        }
    }
}

/// Jittered-stratified points in `[0,1)³`.
///
/// `n` points are split into `k³` strata (`k = ⌊n^{1/3}⌋`) with one jittered
/// point each; the remainder are uniform. Every point is used with equal
/// weight, which leaves the mean unbiased.
pub struct StratifiedCube {
    k: usize,
    strata: usize,
    n: usize,
}

impl StratifiedCube {
    pub fn new(n: usize) -> Self {
        let mut k = (n as f64).cbrt().floor() as usize;
        while (k + 1).pow(3) <= n {
            k += 1;
        }
        while k > 0 && k.pow(3) > n {
            k -= 1;
        }
        Self {
            k,
            strata: k.pow(3),
            n,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Point `i` of the set, drawing its jitter from `rng`.
    pub fn point(&self, i: usize, rng: &mut impl Rng) -> [f64; 3] {
        if i < self.strata {
            let k = self.k;
            let (a, b, c) = (i % k, (i / k) % k, i / (k * k));
            let h = 1.0 / k as f64;
            [
                (a as f64 + rng.random::<f64>()) * h,
                (b as f64 + rng.random::<f64>()) * h,
                (c as f64 + rng.random::<f64>()) * h,
            ]
        } else {
            [rng.random(), rng.random(), rng.random()]
        }
    }
}

/// Estimate `E[f(U)]` for `U` uniform on the unit cube using `n` points split
/// across [`BATCHES`] replicate batches. Pass the same `(seed, tag)` to two
/// calls to get common random numbers.
pub fn integrate<T, F>(n: usize, seed: u64, tag: u64, f: F) -> Result<Estimate<T>>
where
    T: Sample,
    F: Fn([f64; 3]) -> std::result::Result<T, SampleFault> + Sync,
{
    let per_batch = (n / BATCHES).max(1);
    let means: Vec<T> = (0..BATCHES)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, tag, b as u64);
            let cube = StratifiedCube::new(per_batch);
            let mut acc = Compensated::<T>::default();
            for i in 0..cube.len() {
                let mut tries = 0;
                let v = loop {
                    match f(cube.point(i, &mut rng)) {
                        Ok(v) => break v,
                        Err(SampleFault::Redraw) if tries < MAX_REDRAWS => tries += 1,
                        Err(SampleFault::Redraw) => return Err(Error::RedrawExhausted),
                        Err(SampleFault::Fail(e)) => return Err(e),
                    }
                };
                acc.add(v);
            }
            Ok(acc.sum * (1.0 / cube.len() as f64))
        })
        .collect::<Result<_>>()?;
    Ok(batch_estimate(&means))
}

/// Kahan summation; keeps constant integrands exact to a few ulps.
struct Compensated<T> {
    sum: T,
    carry: T,
}

impl<T: Sample> Default for Compensated<T> {
    fn default() -> Self {
        Self {
            sum: T::ZERO,
            carry: T::ZERO,
        }
    }
}

impl<T: Sample> Compensated<T> {
    fn add(&mut self, v: T) {
        let y = v + self.carry * -1.0;
        let t = self.sum + y;
        self.carry = (t + self.sum * -1.0) + y * -1.0;
        self.sum = t;
    }
}

/// Mean and standard error of equally weighted batch means.
pub fn batch_estimate<T: Sample>(means: &[T]) -> Estimate<T> {
    let b = means.len() as f64;
    let mean = means.iter().fold(T::ZERO, |a, &m| a + m) * (1.0 / b);
    let var = if means.len() > 1 {
        means
            .iter()
            .map(|&m| (m + mean * -1.0).sq_norm())
            .sum::<f64>()
            / (b - 1.0)
    } else {
        0.0
    };
    Estimate {
        value: mean,
        std_error: (var / b).sqrt(),
    }
}

/// Unit vector from `(cos θ, φ)` in the frame `(t1, t2, axis)`, split into
/// its axial and tangential parts so antithetic partners negate exactly.
#[inline]
pub fn split_direction(cos_theta: f64, phi: f64, t1: Vec3, t2: Vec3, axis: Vec3) -> (Vec3, Vec3) {
    let sin_theta = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
    let (s, c) = phi.sin_cos();
    (axis * cos_theta, (t1 * c + t2 * s) * sin_theta)
}

/// Map a unit-cube point to a uniform point of the unit ball, returned as
/// `(radius, axial part, tangential part)` of the direction about `Z`.
#[inline]
pub fn unit_ball_point(u: [f64; 3]) -> (f64, Vec3) {
    let s = u[0].cbrt();
    let cos_theta = 2.0 * u[1] - 1.0;
    let (a, t) = split_direction(cos_theta, std::f64::consts::TAU * u[2], Vec3::X, Vec3::Y, Vec3::Z);
    (s, a + t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| stream(7, 1, 0).random()).collect();
        let b: Vec<u64> = (0..4).map(|_| stream(7, 1, 0).random()).collect();
        assert_eq!(a, b);
        let c: u64 = stream(7, 1, 1).random();
        let d: u64 = stream(7, 2, 0).random();
        assert_ne!(a[0], c);
        assert_ne!(a[0], d);
    }

    #[test]
    fn stratified_cube_counts() {
        assert_eq!(StratifiedCube::new(27).strata, 27);
        assert_eq!(StratifiedCube::new(26).strata, 8);
        assert_eq!(StratifiedCube::new(1000).strata, 1000);
        let cube = StratifiedCube::new(64);
        let mut rng = stream(1, 2, 3);
        for i in 0..64 {
            let p = cube.point(i, &mut rng);
            assert!(p.iter().all(|&c| (0.0..1.0).contains(&c)));
        }
    }

    #[test]
    fn integrate_polynomial() {
        // E[x y² z³] = 1/2 · 1/3 · 1/4
        let est = integrate::<f64, _>(200_000, 3, 9, |u| Ok(u[0] * u[1] * u[1] * u[2].powi(3)))
            .unwrap();
        assert!((est.value - 1.0 / 24.0).abs() < 5.0 * est.std_error + 1e-6);
        assert!(est.std_error < 1e-4);
    }

    #[test]
    fn constant_integrand_has_zero_error() {
        let est = integrate::<f64, _>(1000, 0, 0, |_| Ok(2.5)).unwrap();
        assert_eq!(est.value, 2.5);
        assert!(est.std_error < 1e-15);
    }

    #[test]
    fn unit_ball_points_are_inside() {
        let mut rng = stream(5, 5, 5);
        for _ in 0..1000 {
            let u = [rng.random(), rng.random(), rng.random()];
            let (s, d) = unit_ball_point(u);
            assert!((d.norm() - 1.0).abs() < 1e-12);
            assert!((0.0..=1.0).contains(&s));
        }
    }
}
