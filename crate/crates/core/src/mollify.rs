//! The standard mollifier, mollified fields and one-sided mollification.

use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::VectorField;
use crate::geometry::{FinitePerimeterSet, PointClass};
use crate::measure::TestFunction;
use crate::sampling::{derive_seed, integrate, split_direction, stream, tags, Estimate};
use crate::vec3::{Mat3, Vec3};

/// Unnormalized radial profile `exp(−1/(1−t²))` on `[0, 1)`.
pub fn profile(t: f64) -> f64 {
    let t = t.abs();
    if t >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - t * t)).exp()
    }
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// `c` with `∫ c·profile(|y|) dy = 1` over ℝ³.
pub fn normalization() -> f64 {
    static C: OnceLock<f64> = OnceLock::new();
    *C.get_or_init(|| {
        let radial = adaptive_simpson(&|t| profile(t) * t * t, 0.0, 1.0, 1e-12);
        1.0 / (4.0 * PI * radial)
    })
}

const CDF_CELLS: usize = 2048;

/// Cumulative radial mass `∫_0^t profile(s) s² ds`, normalized, on a uniform grid.
fn radial_cdf() -> &'static [f64] {
    static CDF: OnceLock<Vec<f64>> = OnceLock::new();
    CDF.get_or_init(|| {
        let h = 1.0 / CDF_CELLS as f64;
        let g = |t: f64| profile(t) * t * t;
        let mut cdf = Vec::with_capacity(CDF_CELLS + 1);
        let mut acc = 0.0;
        cdf.push(0.0);
        for i in 0..CDF_CELLS {
            let a = i as f64 * h;
            acc += adaptive_simpson(&g, a, a + h, 1e-15);
            cdf.push(acc);
        }
        cdf.iter().map(|v| v / acc).collect()
    })
}

/// Radius in `[0, 1)` drawn from the radial mass density of the kernel.
fn sample_radius(u: f64) -> f64 {
    let cdf = radial_cdf();
    let i = cdf.partition_point(|&v| v <= u).clamp(1, CDF_CELLS) - 1;
    let (lo, hi) = (cdf[i], cdf[i + 1]);
    let frac = if hi > lo { (u - lo) / (hi - lo) } else { 0.5 };
    (i as f64 + frac) / CDF_CELLS as f64
}

/// Radial kernel `ρ(y) = c·scale·profile(|y|)`; `scale = 1` gives unit mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mollifier {
    pub scale: f64,
}

impl Default for Mollifier {
    fn default() -> Self {
        Self { scale: 1.0 }
    }
}

impl Mollifier {
    pub fn c(&self) -> f64 {
        normalization() * self.scale
    }

    pub fn density(&self, y: Vec3) -> f64 {
        self.c() * profile(y.norm())
    }

    /// `ρ_ε(y) = ε⁻³ ρ(y/ε)`.
    pub fn density_eps(&self, y: Vec3, eps: f64) -> f64 {
        self.density(y / eps) / (eps * eps * eps)
    }

    /// `∫ ρ_ε` by a tensor midpoint rule on `[−ε, ε]³`, rotated and shifted
    /// by a seed-derived amount. The kernel and all its derivatives vanish on
    /// the cube faces, so the rule converges faster than any power.
    pub fn mass(&self, eps: f64, n_samples: usize, seed: u64) -> f64 {
        let m = ((n_samples as f64).cbrt().round() as usize).max(2);
        let mut rng = stream(seed, tags::MASS_CHECK, 0);
        use rand::Rng;
        let q = random_rotation(&mut rng);
        let shift = [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()];
        let h = 2.0 / m as f64;
        let node = |i: usize, s: f64| -1.0 + (i as f64 + s) * h;
        let mut total = 0.0;
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let p = Vec3::new(node(i, shift[0]), node(j, shift[1]), node(k, shift[2]));
                    total += self.density_eps(q.mul_vec(p) * eps, eps);
                }
            }
        }
        total * (h * eps).powi(3)
    }
}

fn random_rotation(rng: &mut impl rand::Rng) -> Mat3 {
    // uniform unit quaternion
    let (u1, u2, u3): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let (w, x, y, z) = (a * (TAU * u2).sin(), a * (TAU * u2).cos(), b * (TAU * u3).sin(), b * (TAU * u3).cos());
    Mat3::from_cols(
        Vec3::new(1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y + w * z), 2.0 * (x * z - w * y)),
        Vec3::new(2.0 * (x * y - w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z + w * x)),
        Vec3::new(2.0 * (x * z + w * y), 2.0 * (y * z - w * x), 1.0 - 2.0 * (x * x + y * y)),
    )
}

/// `∫ρ` for the default kernel; 1 up to quadrature error.
pub fn mollifier_mass_check(n_samples: usize, seed: u64) -> f64 {
    Mollifier::default().mass(1.0, n_samples, seed)
}

/// Offset `ε t d` drawn from `ρ_ε`, returned with its mirror image.
fn kernel_offset(u: [f64; 3], eps: f64) -> Vec3 {
    let t = sample_radius(u[0]);
    let (a, b) = split_direction(2.0 * u[1] - 1.0, TAU * u[2], Vec3::X, Vec3::Y, Vec3::Z);
    (a + b) * (eps * t)
}

/// `(F ∗ ρ_ε)(x)`, sampling offsets from the kernel itself so every draw has
/// unit weight; mirrored offsets are paired.
pub fn mollify_field(field: &VectorField, eps: f64, x: Vec3, n_samples: usize, seed: u64) -> Result<Estimate<Vec3>> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("mollification radius {eps} must be positive")));
    }
    if !field.domain.contains_ball(x, eps) {
        return Err(Error::OutsideDomain { center: x, radius: eps });
    }
    integrate((n_samples / 2).max(1), seed, tags::MOLLIFY, |u| {
        let d = kernel_offset(u, eps);
        Ok((field.eval(x - d)? + field.eval(x + d)?) * 0.5)
    })
}

/// `∫_E φ(y) ρ_ε(x − y) dy`.
pub fn one_sided_mollify(
    phi: &TestFunction,
    set: &FinitePerimeterSet,
    eps: f64,
    x: Vec3,
    n_samples: usize,
    seed: u64,
) -> Result<Estimate<f64>> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("mollification radius {eps} must be positive")));
    }
    if set.signed_distance(x) > eps + set.band {
        return Ok(Estimate::exact(0.0));
    }
    let inside = |y: Vec3| {
        if set.classify_point(y) == PointClass::Exterior {
            0.0
        } else {
            phi.eval(y)
        }
    };
    integrate((n_samples / 2).max(1), derive_seed(seed, &[tags::ONE_SIDED]), tags::MOLLIFY, |u| {
        let d = kernel_offset(u, eps);
        Ok(0.5 * (inside(x - d) + inside(x + d)))
    })
}

/// ε schedule for limits: `eps0 · feature · 2^{−k}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MollifyConfig {
    /// Largest ε relative to the local feature size.
    #[serde(default = "default_eps0")]
    pub eps0: f64,
    #[serde(default = "default_eps_levels")]
    pub levels: usize,
}

fn default_eps0() -> f64 {
    0.2
}

fn default_eps_levels() -> usize {
    7
}

impl Default for MollifyConfig {
    fn default() -> Self {
        Self {
            eps0: default_eps0(),
            levels: default_eps_levels(),
        }
    }
}

impl MollifyConfig {
    pub fn schedule(&self, feature: f64) -> Vec<f64> {
        (0..self.levels)
            .map(|k| self.eps0 * feature * 0.5f64.powi(k as i32))
            .collect()
    }
}
