//! Analytic sets of finite perimeter.
//!
//! Three shape families are supported: half-spaces, balls and rotated cubes.
//! For these the measure-theoretic interior, exterior and reduced boundary
//! coincide with the topological ones (minus cube edges), so classification
//! is done with a signed distance and a thin tolerance band.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::{derive_seed, tags};
use crate::vec3::{Mat3, Vec3};

/// Unit-norm tolerance for normals and orthonormality checks.
pub const UNIT_TOL: f64 = 1e-12;

/// Relative width of the default boundary band (times the shape diameter).
pub const BAND_FACTOR: f64 = 1e-9;

/// Axis-aligned box, used as the working domain Ω.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub const fn new(min: Vec3, max: Vec3) -> Self {
        Self { min, max }
    }

    /// The cube `[-h, h]³`.
    pub const fn centered(h: f64) -> Self {
        Self::new(Vec3::splat(-h), Vec3::splat(h))
    }

    pub fn contains(&self, p: Vec3) -> bool {
        p.x >= self.min.x
            && p.y >= self.min.y
            && p.z >= self.min.z
            && p.x <= self.max.x
            && p.y <= self.max.y
            && p.z <= self.max.z
    }

    /// Whether the closed ball `B(c, r)` lies inside the box.
    pub fn contains_ball(&self, c: Vec3, r: f64) -> bool {
        self.contains(c - Vec3::splat(r)) && self.contains(c + Vec3::splat(r))
    }

    pub fn volume(&self) -> f64 {
        let d = self.max - self.min;
        d.x * d.y * d.z
    }
}

impl Default for Aabb {
    fn default() -> Self {
        Aabb::centered(4.0)
    }
}

/// Square window bounding the sampled part of a half-space boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub center: Vec3,
    pub half_side: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    /// `{x : inner_normal · x > offset}`.
    HalfSpace {
        inner_normal: Vec3,
        offset: f64,
        window: Option<Window>,
    },
    Ball {
        center: Vec3,
        radius: f64,
    },
    /// `corner + rotation · [0, side]³`.
    OrientedCube {
        corner: Vec3,
        side: f64,
        rotation: Mat3,
    },
}

/// Classification of a point relative to a set: `E¹`, `E⁰` or `∂*E`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PointClass {
    Interior,
    Exterior,
    ReducedBoundary,
}

/// A quadrature node on the reduced boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceSample {
    pub point: Vec3,
    /// Unit normal pointing into the set.
    pub inner_normal: Vec3,
    /// H² quadrature weight.
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FinitePerimeterSet {
    pub shape: Shape,
    /// Half-width of the band classified as boundary.
    pub band: f64,
}

impl FinitePerimeterSet {
    pub fn ball(center: Vec3, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || !center.is_finite() {
            return Err(Error::InvalidShape(format!("ball radius {radius} must be positive")));
        }
        Ok(Self::with_default_band(Shape::Ball { center, radius }))
    }

    pub fn half_space(inner_normal: Vec3, offset: f64, window: Option<Window>) -> Result<Self> {
        if (inner_normal.norm() - 1.0).abs() > UNIT_TOL {
            return Err(Error::InvalidShape("half-space normal must be a unit vector".into()));
        }
        if let Some(w) = window {
            if !(w.half_side > 0.0 && w.half_side.is_finite()) {
                return Err(Error::InvalidShape("window half_side must be positive".into()));
            }
        }
        Ok(Self::with_default_band(Shape::HalfSpace {
            inner_normal,
            offset,
            window,
        }))
    }

    pub fn oriented_cube(corner: Vec3, side: f64, rotation: Mat3) -> Result<Self> {
        if !(side > 0.0 && side.is_finite()) {
            return Err(Error::InvalidShape(format!("cube side {side} must be positive")));
        }
        if rotation.orthogonality_defect() > UNIT_TOL || rotation.determinant() < 0.0 {
            return Err(Error::InvalidShape("cube rotation must be a proper rotation".into()));
        }
        Ok(Self::with_default_band(Shape::OrientedCube {
            corner,
            side,
            rotation,
        }))
    }

    /// Cube of the given side with one face in the plane through `corner`
    /// orthogonal to `face_normal`, lying on the side `face_normal` points to.
    ///
    /// The rotation has columns `(e1, e2, n)` with `e1 = n × ẑ / |n × ẑ|` and
    /// `e2 = n × e1` (falling back to `e1 = x̂` when `n ∥ ẑ`).
    pub fn build_oriented_cube(face_normal: Vec3, corner: Vec3, side: f64) -> Result<Self> {
        if (face_normal.norm() - 1.0).abs() > UNIT_TOL {
            return Err(Error::InvalidShape("cube face normal must be a unit vector".into()));
        }
        let n = face_normal;
        let e1 = n.cross(Vec3::Z).try_normalize().filter(|_| n.cross(Vec3::Z).norm() > 1e-8);
        let e1 = e1.unwrap_or(Vec3::X);
        let e1 = (e1 - n * n.dot(e1)).normalize();
        let e2 = n.cross(e1);
        Self::oriented_cube(corner, side, Mat3::from_cols(e1, e2, n))
    }

    pub fn axis_cube(corner: Vec3, side: f64) -> Result<Self> {
        Self::oriented_cube(corner, side, Mat3::IDENTITY)
    }

    fn with_default_band(shape: Shape) -> Self {
        let mut set = Self { shape, band: 0.0 };
        set.band = BAND_FACTOR * set.diameter();
        set
    }

    pub fn with_band(mut self, band: f64) -> Self {
        self.band = band.max(0.0);
        self
    }

    /// Diameter of the shape (the window diagonal for half-spaces, or 1
    /// without a window).
    pub fn diameter(&self) -> f64 {
        match self.shape {
            Shape::Ball { radius, .. } => 2.0 * radius,
            Shape::OrientedCube { side, .. } => side * 3f64.sqrt(),
            Shape::HalfSpace { window, .. } => {
                window.map_or(1.0, |w| 2.0 * w.half_side * 2f64.sqrt())
            }
        }
    }

    /// Characteristic length: radius, half-side or window half-side.
    pub fn feature_size(&self) -> f64 {
        match self.shape {
            Shape::Ball { radius, .. } => radius,
            Shape::OrientedCube { side, .. } => 0.5 * side,
            Shape::HalfSpace { window, .. } => window.map_or(1.0, |w| w.half_side),
        }
    }

    /// Feature size at a boundary point, shrunk near cube edges so that small
    /// balls about `x` only see one face.
    pub fn local_feature_size(&self, x: Vec3) -> f64 {
        let base = self.feature_size();
        match self.shape {
            Shape::OrientedCube { .. } => base.min(self.edge_distance(x)),
            _ => base,
        }
    }

    /// Distance from a point on a cube face to the nearest edge of that face
    /// (infinite for smooth shapes).
    pub fn edge_distance(&self, x: Vec3) -> f64 {
        let Shape::OrientedCube { side, .. } = self.shape else {
            return f64::INFINITY;
        };
        let p = self.cube_local(x);
        let face_axis = (0..3)
            .min_by(|&a, &b| {
                let da = p[a].abs().min((p[a] - side).abs());
                let db = p[b].abs().min((p[b] - side).abs());
                da.total_cmp(&db)
            })
            .unwrap_or(0);
        (0..3)
            .filter(|&j| j != face_axis)
            .map(|j| p[j].min(side - p[j]))
            .fold(f64::INFINITY, f64::min)
    }

    fn cube_local(&self, x: Vec3) -> Vec3 {
        match self.shape {
            Shape::OrientedCube {
                corner, rotation, ..
            } => rotation.tr_mul_vec(x - corner),
            _ => x,
        }
    }

    /// Signed distance, negative inside.
    pub fn signed_distance(&self, x: Vec3) -> f64 {
        match self.shape {
            Shape::HalfSpace {
                inner_normal,
                offset,
                ..
            } => offset - inner_normal.dot(x),
            Shape::Ball { center, radius } => x.distance(center) - radius,
            Shape::OrientedCube { side, .. } => {
                let h = 0.5 * side;
                let q = (self.cube_local(x) - Vec3::splat(h)).map(f64::abs) - Vec3::splat(h);
                let outside = q.component_max(Vec3::ZERO).norm();
                let inside = q.x.max(q.y).max(q.z).min(0.0);
                outside + inside
            }
        }
    }

    pub fn classify_point(&self, x: Vec3) -> PointClass {
        let d = self.signed_distance(x);
        if d < -self.band {
            PointClass::Interior
        } else if d > self.band {
            PointClass::Exterior
        } else {
            PointClass::ReducedBoundary
        }
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self.shape, Shape::HalfSpace { .. })
    }

    pub fn inner_normal(&self, x: Vec3) -> Result<Vec3> {
        if self.classify_point(x) != PointClass::ReducedBoundary {
            return Err(Error::NotOnBoundary(x));
        }
        match self.shape {
            Shape::HalfSpace { inner_normal, .. } => Ok(inner_normal),
            Shape::Ball { center, .. } => (center - x).try_normalize().ok_or(Error::EdgePoint(x)),
            Shape::OrientedCube { side, rotation, .. } => {
                let p = self.cube_local(x);
                let tol = self.band.max(UNIT_TOL * side);
                let mut found = None;
                let mut count = 0;
                for axis in 0..3 {
                    if p[axis].abs() <= tol {
                        found = Some(rotation.cols[axis]);
                        count += 1;
                    } else if (p[axis] - side).abs() <= tol {
                        found = Some(-rotation.cols[axis]);
                        count += 1;
                    }
                }
                match (count, found) {
                    (1, Some(n)) => Ok(n),
                    _ => Err(Error::EdgePoint(x)),
                }
            }
        }
    }

    /// Closed-form H² measure of the reduced boundary (window-relative for
    /// half-spaces).
    pub fn perimeter(&self) -> Result<f64> {
        match self.shape {
            Shape::Ball { radius, .. } => Ok(4.0 * PI * radius * radius),
            Shape::OrientedCube { side, .. } => Ok(6.0 * side * side),
            Shape::HalfSpace { window, .. } => window
                .map(|w| 4.0 * w.half_side * w.half_side)
                .ok_or(Error::UnboundedSurface),
        }
    }

    /// Lebesgue measure of a bounded set.
    pub fn volume(&self) -> Result<f64> {
        match self.shape {
            Shape::Ball { radius, .. } => Ok(4.0 / 3.0 * PI * radius.powi(3)),
            Shape::OrientedCube { side, .. } => Ok(side.powi(3)),
            Shape::HalfSpace { .. } => Err(Error::InvalidArgument(
                "a half-space has infinite volume".into(),
            )),
        }
    }

    /// Uniform map from the unit cube onto a bounded set.
    pub fn map_unit_cube(&self, u: [f64; 3]) -> Result<Vec3> {
        match self.shape {
            Shape::Ball { center, radius } => {
                let (s, d) = crate::sampling::unit_ball_point(u);
                Ok(center + d * (radius * s))
            }
            Shape::OrientedCube {
                corner,
                side,
                rotation,
            } => Ok(corner + rotation.mul_vec(Vec3::from(u) * side)),
            Shape::HalfSpace { .. } => Err(Error::InvalidArgument(
                "cannot sample the volume of a half-space".into(),
            )),
        }
    }

    /// Smallest convenient ball containing the set (or its window).
    pub fn bounding_ball(&self) -> Result<(Vec3, f64)> {
        match self.shape {
            Shape::Ball { center, radius } => Ok((center, radius)),
            Shape::OrientedCube {
                corner,
                side,
                rotation,
            } => Ok((
                corner + rotation.mul_vec(Vec3::splat(0.5 * side)),
                0.5 * side * 3f64.sqrt(),
            )),
            Shape::HalfSpace {
                inner_normal,
                offset,
                window,
            } => {
                let w = window.ok_or(Error::UnboundedSurface)?;
                let c = w.center - inner_normal * (inner_normal.dot(w.center) - offset);
                Ok((c, w.half_side * 2f64.sqrt()))
            }
        }
    }

    /// Deterministic H² quadrature of the reduced boundary with `n` nodes.
    ///
    /// Spheres use a Fibonacci lattice (azimuth offset by `seed`) with equal
    /// weights; cube faces and half-space windows use midpoint grids. The
    /// weights sum to [`perimeter`](Self::perimeter).
    pub fn sample_boundary(&self, n: usize, seed: u64) -> Result<Vec<SurfaceSample>> {
        if n == 0 {
            return Err(Error::InvalidArgument("need at least one boundary sample".into()));
        }
        match self.shape {
            Shape::Ball { center, radius } => Ok(fibonacci_sphere(center, radius, n, seed)),
            Shape::HalfSpace {
                inner_normal,
                offset,
                window,
            } => {
                let w = window.ok_or(Error::UnboundedSurface)?;
                let origin = w.center - inner_normal * (inner_normal.dot(w.center) - offset);
                let (t1, t2) = inner_normal.tangent_frame();
                let side = 2.0 * w.half_side;
                let area = side * side;
                Ok(midpoint_grid(n)
                    .into_iter()
                    .map(|(u, v, frac)| SurfaceSample {
                        point: origin + t1 * ((u - 0.5) * side) + t2 * ((v - 0.5) * side),
                        inner_normal,
                        weight: area * frac,
                    })
                    .collect())
            }
            Shape::OrientedCube {
                corner,
                side,
                rotation,
            } => {
                if n < 6 {
                    return Err(Error::InvalidArgument(
                        "a cube needs at least one sample per face".into(),
                    ));
                }
                let [e1, e2, e3] = rotation.cols;
                let area = side * side;
                let mut out = Vec::with_capacity(n);
                for face in 0..6 {
                    let count = n / 6 + usize::from(face < n % 6);
                    // (normal axis, first tangent axis, second tangent axis)
                    let (axis, a, b) = match face / 2 {
                        0 => (2, 0, 1),
                        1 => (0, 1, 2),
                        _ => (1, 0, 2),
                    };
                    let far = face % 2 == 1;
                    let normal = if far {
                        -rotation.cols[axis]
                    } else {
                        rotation.cols[axis]
                    };
                    for (u, v, frac) in midpoint_grid(count) {
                        let mut local = [0.0; 3];
                        local[axis] = if far { side } else { 0.0 };
                        local[a] = u * side;
                        local[b] = v * side;
                        let point = corner + e1 * local[0] + e2 * local[1] + e3 * local[2];
                        out.push(SurfaceSample {
                            point,
                            inner_normal: normal,
                            weight: area * frac,
                        });
                    }
                }
                Ok(out)
            }
        }
    }
}

/// `n` midpoints of a near-square grid on `[0,1]²` as `(u, v, weight
/// fraction)`. Rows have `⌊n/rows⌋` or `⌈n/rows⌉` points each.
fn midpoint_grid(n: usize) -> Vec<(f64, f64, f64)> {
    let rows = ((n as f64).sqrt().floor() as usize).max(1);
    let mut out = Vec::with_capacity(n);
    for i in 0..rows {
        let len = n / rows + usize::from(i < n % rows);
        let v = (i as f64 + 0.5) / rows as f64;
        for j in 0..len {
            let u = (j as f64 + 0.5) / len as f64;
            out.push((u, v, 1.0 / (rows * len) as f64));
        }
    }
    out
}

fn fibonacci_sphere(center: Vec3, radius: f64, n: usize, seed: u64) -> Vec<SurfaceSample> {
    let golden = PI * (3.0 - 5f64.sqrt());
    let phase = TAU * ((derive_seed(seed, &[tags::BOUNDARY]) >> 11) as f64 / (1u64 << 53) as f64);
    let weight = 4.0 * PI * radius * radius / n as f64;
    (0..n)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / n as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let phi = phase + golden * i as f64;
            let dir = Vec3::new(rho * phi.cos(), rho * phi.sin(), z).normalize();
            SurfaceSample {
                point: center + dir * radius,
                inner_normal: -dir,
                weight,
            }
        })
        .collect()
}
