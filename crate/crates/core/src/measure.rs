//! Curl measures and distributional pairings.
//!
//! Sign convention: `Curl F(φ) = ∫ F × ∇φ dy`, which equals `∫ φ curl F` for
//! smooth `F`. Volume integrals are Monte Carlo over the support ball of the
//! test function; surface integrals use the deterministic boundary quadrature
//! of [`FinitePerimeterSet::sample_boundary`].

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{DensityFn, VectorField};
use crate::geometry::{FinitePerimeterSet, PointClass, Shape};
use crate::sampling::{derive_seed, integrate, stream, tags, unit_ball_point, Estimate, SampleFault};
use crate::vec3::Vec3;

/// Sample budgets for pairings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Quadrature {
    #[serde(default = "default_volume_samples")]
    pub volume_samples: usize,
    #[serde(default = "default_surface_samples")]
    pub surface_samples: usize,
    pub seed: u64,
}

fn default_volume_samples() -> usize {
    200_000
}

fn default_surface_samples() -> usize {
    2000
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            volume_samples: default_volume_samples(),
            surface_samples: default_surface_samples(),
            seed: 42,
        }
    }
}

impl Quadrature {
    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

/// Compactly supported Lipschitz test functions with closed-form gradients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    Zero,
    /// `A (1 − |y−c|²/R²)³` inside the ball, 0 outside.
    Bump {
        center: Vec3,
        radius: f64,
        amplitude: f64,
    },
    /// `max(r − |y−c|, 0)`.
    Cone { center: Vec3, radius: f64 },
    /// 1 on `B(c, inner)`, smoothstep down to 0 at `outer`.
    Plateau { center: Vec3, inner: f64, outer: f64 },
}

impl TestFunction {
    pub fn eval(&self, y: Vec3) -> f64 {
        match *self {
            TestFunction::Zero => 0.0,
            TestFunction::Bump {
                center,
                radius,
                amplitude,
            } => {
                let t2 = (y - center).norm_squared() / (radius * radius);
                if t2 >= 1.0 {
                    0.0
                } else {
                    amplitude * (1.0 - t2).powi(3)
                }
            }
            TestFunction::Cone { center, radius } => (radius - y.distance(center)).max(0.0),
            TestFunction::Plateau {
                center,
                inner,
                outer,
            } => {
                let d = y.distance(center);
                if d <= inner {
                    1.0
                } else if d >= outer {
                    0.0
                } else {
                    let s = (outer - d) / (outer - inner);
                    s * s * (3.0 - 2.0 * s)
                }
            }
        }
    }

    /// Gradient, defined away from the cone apex.
    pub fn gradient(&self, y: Vec3) -> Vec3 {
        match *self {
            TestFunction::Zero => Vec3::ZERO,
            TestFunction::Bump {
                center,
                radius,
                amplitude,
            } => {
                let d = y - center;
                let t2 = d.norm_squared() / (radius * radius);
                if t2 >= 1.0 {
                    Vec3::ZERO
                } else {
                    d * (-6.0 * amplitude * (1.0 - t2).powi(2) / (radius * radius))
                }
            }
            TestFunction::Cone { center, radius } => {
                let d = y - center;
                let n = d.norm();
                if n >= radius || n == 0.0 {
                    Vec3::ZERO
                } else {
                    d * (-1.0 / n)
                }
            }
            TestFunction::Plateau {
                center,
                inner,
                outer,
            } => {
                let d = y - center;
                let n = d.norm();
                if n <= inner || n >= outer {
                    Vec3::ZERO
                } else {
                    let w = outer - inner;
                    let s = (outer - n) / w;
                    d * (-6.0 * s * (1.0 - s) / (w * n))
                }
            }
        }
    }

    /// Closed ball outside which the function vanishes.
    pub fn support(&self) -> Option<(Vec3, f64)> {
        match *self {
            TestFunction::Zero => None,
            TestFunction::Bump { center, radius, .. } | TestFunction::Cone { center, radius } => {
                Some((center, radius))
            }
            TestFunction::Plateau { center, outer, .. } => Some((center, outer)),
        }
    }

    pub fn lipschitz_bound(&self) -> f64 {
        match *self {
            TestFunction::Zero => 0.0,
            // max of 6 t (1 − t²)² is at t = 1/√5
            TestFunction::Bump {
                radius, amplitude, ..
            } => 6.0 * 0.2f64.sqrt() * 0.64 * amplitude.abs() / radius,
            TestFunction::Cone { .. } => 1.0,
            TestFunction::Plateau { inner, outer, .. } => 1.5 / (outer - inner),
        }
    }
}

/// Which region a trace pairing integrates over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SideSelector {
    /// `E¹`.
    InteriorSide,
    /// `E¹ ∪ ∂*E`.
    ExteriorSide,
    /// `E⁰`.
    Complement,
}

impl SideSelector {
    pub const ALL: [SideSelector; 3] = [
        SideSelector::InteriorSide,
        SideSelector::ExteriorSide,
        SideSelector::Complement,
    ];

    /// Whether a point of the given class belongs to the selected region.
    pub fn admits(self, class: PointClass) -> bool {
        match self {
            SideSelector::InteriorSide => class == PointClass::Interior,
            SideSelector::ExteriorSide => class != PointClass::Exterior,
            SideSelector::Complement => class == PointClass::Exterior,
        }
    }
}

/// H²-density carried by the reduced boundary of `set`.
#[derive(Clone)]
pub struct SurfacePart {
    pub set: FinitePerimeterSet,
    pub density: DensityFn,
}

/// Volume density w.r.t. L³ plus surface densities w.r.t. H².
#[derive(Clone, Default)]
pub struct CurlMeasure {
    pub volume_density: Option<DensityFn>,
    pub surface_parts: Vec<SurfacePart>,
}

impl fmt::Debug for CurlMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CurlMeasure")
            .field("volume_density", &self.volume_density.is_some())
            .field("surface_parts", &self.surface_parts.len())
            .finish()
    }
}

impl CurlMeasure {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Density of the surface part on `∂*set` at `x` (zero without one).
    pub fn jump_at(&self, set: &FinitePerimeterSet, x: Vec3) -> Result<Vec3> {
        jump_density(self, set, x)
    }
}

/// Radon-Nikodym density of `mu⌞∂*set` w.r.t. `H²⌞∂*set` at `x`.
pub fn jump_density(mu: &CurlMeasure, set: &FinitePerimeterSet, x: Vec3) -> Result<Vec3> {
    set.inner_normal(x)?;
    Ok(mu
        .surface_parts
        .iter()
        .filter(|p| p.set == *set)
        .map(|p| (p.density)(x))
        .sum())
}

/// Uniform ball quadrature with antithetic pairs reflected through the
/// centre; `f` receives both points of a pair and returns their sum.
pub(crate) fn ball_integral<F>(
    center: Vec3,
    radius: f64,
    samples: usize,
    seed: u64,
    tag: u64,
    f: F,
) -> Result<Estimate<Vec3>>
where
    F: Fn(Vec3) -> std::result::Result<Vec3, SampleFault> + Sync,
{
    let volume = 4.0 / 3.0 * PI * radius.powi(3);
    let pairs = (samples / 2).max(1);
    let est = integrate(pairs, seed, tag, |u| {
        let (s, d) = unit_ball_point(u);
        let offset = d * (radius * s);
        Ok((f(center + offset)? + f(center - offset)?) * 0.5)
    })?;
    Ok(est.scale(volume))
}

fn check_support(phi: &TestFunction, field: &VectorField) -> Result<Option<(Vec3, f64)>> {
    match phi.support() {
        None => Ok(None),
        Some((c, r)) if field.domain.contains_ball(c, r) => Ok(Some((c, r))),
        Some((center, radius)) => Err(Error::SupportEscapes { center, radius }),
    }
}

/// `Curl F(φ) = ∫ F × ∇φ dL³`.
pub fn curl_pairing(field: &VectorField, phi: &TestFunction, quad: &Quadrature) -> Result<Estimate<Vec3>> {
    let Some((c, r)) = check_support(phi, field)? else {
        return Ok(Estimate::exact(Vec3::ZERO));
    };
    ball_integral(c, r, quad.volume_samples, quad.seed, tags::VOLUME_PAIRING, |y| {
        Ok(field.eval(y)?.cross(phi.gradient(y)))
    })
}

/// Check that a window-bounded half-space quadrature sees the whole
/// intersection of `supp φ` with the plane.
fn check_window(set: &FinitePerimeterSet, phi: &TestFunction) -> Result<()> {
    let (Shape::HalfSpace {
        inner_normal,
        offset,
        window: Some(w),
    }, Some((c, r))) = (set.shape, phi.support())
    else {
        return Ok(());
    };
    let depth = inner_normal.dot(c) - offset;
    if depth.abs() >= r {
        return Ok(());
    }
    let reach = (r * r - depth * depth).sqrt();
    let (t1, t2) = inner_normal.tangent_frame();
    let rel = c - w.center;
    let slack = 1e-9 * w.half_side;
    if rel.dot(t1).abs() + reach > w.half_side + slack || rel.dot(t2).abs() + reach > w.half_side + slack {
        return Err(Error::SupportEscapes { center: c, radius: r });
    }
    Ok(())
}

/// `∫ φ g(x) dH²` over `∂*set` for a pointwise integrand `g`.
pub(crate) fn surface_integral(
    set: &FinitePerimeterSet,
    phi: &TestFunction,
    quad: &Quadrature,
    g: impl Fn(Vec3, Vec3) -> Result<Vec3>,
) -> Result<Vec3> {
    let Some((c, r)) = phi.support() else {
        return Ok(Vec3::ZERO);
    };
    check_window(set, phi)?;
    let samples = set.sample_boundary(quad.surface_samples, derive_seed(quad.seed, &[tags::BOUNDARY]))?;
    let mut total = Vec3::ZERO;
    for s in samples {
        if s.point.distance(c) >= r {
            continue;
        }
        let w = phi.eval(s.point) * s.weight;
        if w != 0.0 {
            total += g(s.point, s.inner_normal)? * w;
        }
    }
    Ok(total)
}

/// `∫ φ dμ` over the whole space, or over the region of `restrict`.
///
/// Surface parts are classified point by point against the restriction set,
/// so parts on `∂*E` itself count for `ExteriorSide` only.
pub fn measure_pairing(
    mu: &CurlMeasure,
    phi: &TestFunction,
    restrict: Option<(&FinitePerimeterSet, SideSelector)>,
    quad: &Quadrature,
) -> Result<Estimate<Vec3>> {
    let admits = |y: Vec3| restrict.is_none_or(|(set, side)| side.admits(set.classify_point(y)));
    let mut est = match (phi.support(), &mu.volume_density) {
        (Some((c, r)), Some(density)) => {
            ball_integral(c, r, quad.volume_samples, quad.seed, tags::VOLUME_PAIRING, |y| {
                Ok(if admits(y) {
                    density(y) * phi.eval(y)
                } else {
                    Vec3::ZERO
                })
            })?
        }
        _ => Estimate::exact(Vec3::ZERO),
    };
    for part in &mu.surface_parts {
        est.value += surface_integral(&part.set, phi, quad, |x, _| {
            Ok(if admits(x) { (part.density)(x) } else { Vec3::ZERO })
        })?;
    }
    Ok(est)
}

/// The tangential trace distribution `⟨F×ν, φ⟩` for the chosen side:
/// `∫_A φ dμ − ∫_A F × ∇φ dL³`, with `A` the selected region.
pub fn trace_pairing(
    field: &VectorField,
    mu: &CurlMeasure,
    set: &FinitePerimeterSet,
    side: SideSelector,
    phi: &TestFunction,
    quad: &Quadrature,
) -> Result<Estimate<Vec3>> {
    let Some((c, r)) = check_support(phi, field)? else {
        return Ok(Estimate::exact(Vec3::ZERO));
    };
    let density = mu.volume_density.clone();
    // one pass for both volume terms so they share random numbers
    let mut est = ball_integral(c, r, quad.volume_samples, quad.seed, tags::VOLUME_PAIRING, |y| {
        let class = set.classify_point(y);
        let mut v = Vec3::ZERO;
        if side.admits(class) {
            if let Some(d) = &density {
                v += d(y) * phi.eval(y);
            }
        }
        let in_region = match side {
            SideSelector::Complement => class == PointClass::Exterior,
            _ => class != PointClass::Exterior,
        };
        if in_region {
            v -= field.eval(y)?.cross(phi.gradient(y));
        }
        Ok(v)
    })?;
    for part in &mu.surface_parts {
        est.value += surface_integral(&part.set, phi, quad, |x, _| {
            Ok(if side.admits(set.classify_point(x)) {
                (part.density)(x)
            } else {
                Vec3::ZERO
            })
        })?;
    }
    Ok(est)
}

/// Scalar multiplier for the product rule: smooth, or piecewise across an
/// analytic interface.
#[derive(Clone)]
pub enum ScalarField {
    Smooth {
        value: Arc<dyn Fn(Vec3) -> f64 + Send + Sync>,
        gradient: DensityFn,
    },
    Piecewise {
        interface: FinitePerimeterSet,
        inside: Box<ScalarField>,
        outside: Box<ScalarField>,
    },
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarField::Smooth { .. } => f.write_str("ScalarField::Smooth"),
            ScalarField::Piecewise { interface, .. } => {
                write!(f, "ScalarField::Piecewise({:?})", interface.shape)
            }
        }
    }
}

impl ScalarField {
    pub fn constant(c: f64) -> Self {
        ScalarField::Smooth {
            value: Arc::new(move |_| c),
            gradient: Arc::new(|_| Vec3::ZERO),
        }
    }

    pub fn smooth(
        value: impl Fn(Vec3) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(Vec3) -> Vec3 + Send + Sync + 'static,
    ) -> Self {
        ScalarField::Smooth {
            value: Arc::new(value),
            gradient: Arc::new(gradient),
        }
    }

    /// `χ_E`.
    pub fn indicator(set: FinitePerimeterSet) -> Self {
        ScalarField::Piecewise {
            interface: set,
            inside: Box::new(Self::constant(1.0)),
            outside: Box::new(Self::constant(0.0)),
        }
    }

    /// Pointwise value, taking the inside branch on the interface.
    pub fn value(&self, y: Vec3) -> f64 {
        match self {
            ScalarField::Smooth { value, .. } => value(y),
            ScalarField::Piecewise {
                interface,
                inside,
                outside,
            } => match interface.classify_point(y) {
                PointClass::Exterior => outside.value(y),
                _ => inside.value(y),
            },
        }
    }

    /// Absolutely continuous part of the gradient.
    pub fn gradient(&self, y: Vec3) -> Vec3 {
        match self {
            ScalarField::Smooth { gradient, .. } => gradient(y),
            ScalarField::Piecewise {
                interface,
                inside,
                outside,
            } => match interface.classify_point(y) {
                PointClass::Exterior => outside.gradient(y),
                _ => inside.gradient(y),
            },
        }
    }

    /// Precise representative: the average of the two one-sided values on
    /// the interface.
    pub fn precise(&self, y: Vec3) -> f64 {
        match self {
            ScalarField::Smooth { value, .. } => value(y),
            ScalarField::Piecewise {
                interface,
                inside,
                outside,
            } => match interface.classify_point(y) {
                PointClass::Interior => inside.precise(y),
                PointClass::Exterior => outside.precise(y),
                PointClass::ReducedBoundary => 0.5 * (inside.precise(y) + outside.precise(y)),
            },
        }
    }
}

/// Residual of the product rule
/// `Curl(gF) = g* Curl F − F × ∇g L³ − (g_in − g_out) F̄ × ν H²⌞∂G`
/// paired with `φ`, where `∂G` is the jump set of `g` and `F̄` the mean of
/// the one-sided limits of `F` there.
pub fn product_rule_residual(
    field: &VectorField,
    mu: &CurlMeasure,
    g: &ScalarField,
    phi: &TestFunction,
    quad: &Quadrature,
) -> Result<Estimate<Vec3>> {
    let Some((c, r)) = check_support(phi, field)? else {
        return Ok(Estimate::exact(Vec3::ZERO));
    };
    let density = mu.volume_density.clone();
    let mut est = ball_integral(c, r, quad.volume_samples, quad.seed, tags::VOLUME_PAIRING, |y| {
        let f = field.eval(y)?;
        let gv = g.value(y);
        let mut v = f.cross(phi.gradient(y)) * gv + f.cross(g.gradient(y)) * phi.eval(y);
        if let Some(d) = &density {
            v -= d(y) * (phi.eval(y) * gv);
        }
        Ok(v)
    })?;
    for part in &mu.surface_parts {
        est.value -= surface_integral(&part.set, phi, quad, |x, _| Ok((part.density)(x) * g.precise(x)))?;
    }
    if let ScalarField::Piecewise {
        interface,
        inside,
        outside,
    } = g
    {
        let same_interface = field.interface() == Some(interface);
        est.value += surface_integral(interface, phi, quad, |x, nu| {
            let jump = inside.precise(x) - outside.precise(x);
            let mean = if same_interface {
                let (a, b) = field.one_sided(x)?;
                (a + b) * 0.5
            } else {
                field.eval(x)?
            };
            Ok(mean.cross(nu) * jump)
        })?;
    }
    Ok(est)
}

/// `Curl F(Ω)` for a field vanishing outside `B(center, radius)`, paired
/// with a plateau equal to 1 on that ball.
pub fn compact_support_total(
    field: &VectorField,
    center: Vec3,
    radius: f64,
    quad: &Quadrature,
) -> Result<Estimate<Vec3>> {
    let outer = 1.25 * radius;
    if !field.domain.contains_ball(center, outer) {
        return Err(Error::SupportEscapes {
            center,
            radius: outer,
        });
    }
    let mut rng = stream(quad.seed, tags::SUPPORT_PROBE, 0);
    for _ in 0..512 {
        use rand::Rng;
        let u = [rng.random(), rng.random(), rng.random()];
        let (_, d) = unit_ball_point(u);
        let s = radius * (1.0 + 1e-6) + (outer - radius) * u[0];
        let p = center + d * s;
        match field.eval(p) {
            Ok(v) if v != Vec3::ZERO => return Err(Error::SupportNotCompact(p)),
            Ok(_) | Err(Error::UndefinedPoint { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    let phi = TestFunction::Plateau {
        center,
        inner: radius,
        outer,
    };
    curl_pairing(field, &phi, quad)
}
