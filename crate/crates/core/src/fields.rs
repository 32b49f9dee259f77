//! Bounded vector fields and the closed-form golden scenarios.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{Aabb, FinitePerimeterSet, PointClass, Window};
use crate::measure::{CurlMeasure, SurfacePart};
use crate::vec3::Vec3;

/// Pointwise map that may be undefined on a null set.
pub type FieldFn = Arc<dyn Fn(Vec3) -> Result<Vec3> + Send + Sync>;

/// Everywhere-defined vector map (densities, gradients).
pub type DensityFn = Arc<dyn Fn(Vec3) -> Vec3 + Send + Sync>;

/// Map from boundary points to a trace value.
pub type TraceFn = Arc<dyn Fn(Vec3) -> Result<Vec3> + Send + Sync>;

/// Distance to the plane `x + y + z = 0` below which the cube field is
/// treated as undefined.
pub const SINGULAR_PLANE_TOL: f64 = 1e-14;

#[derive(Clone)]
pub enum FieldKind {
    Smooth {
        eval: FieldFn,
        curl_density: Option<DensityFn>,
    },
    /// `χ_E · inside + χ_{Ω∖E} · outside`.
    Piecewise {
        interface: FinitePerimeterSet,
        inside: Box<VectorField>,
        outside: Box<VectorField>,
    },
}

/// An essentially bounded field on the working box.
#[derive(Clone)]
pub struct VectorField {
    pub kind: FieldKind,
    /// `‖F‖_∞` over `domain`.
    pub sup_bound: f64,
    pub domain: Aabb,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            FieldKind::Smooth { .. } => "Smooth",
            FieldKind::Piecewise { .. } => "Piecewise",
        };
        f.debug_struct("VectorField")
            .field("kind", &kind)
            .field("sup_bound", &self.sup_bound)
            .field("domain", &self.domain)
            .finish()
    }
}

impl VectorField {
    pub fn smooth(
        eval: impl Fn(Vec3) -> Result<Vec3> + Send + Sync + 'static,
        curl_density: Option<DensityFn>,
        sup_bound: f64,
    ) -> Self {
        Self {
            kind: FieldKind::Smooth {
                eval: Arc::new(eval),
                curl_density,
            },
            sup_bound,
            domain: Aabb::default(),
        }
    }

    pub fn constant(c: Vec3) -> Self {
        Self::smooth(move |_| Ok(c), Some(Arc::new(|_| Vec3::ZERO)), c.norm())
    }

    pub fn zero() -> Self {
        Self::constant(Vec3::ZERO)
    }

    /// `F(y) = A y + b` with `A` given by columns; the sup bound is taken
    /// over the default working box.
    pub fn linear(a: crate::vec3::Mat3, b: Vec3) -> Self {
        let domain = Aabb::default();
        let curl = Vec3::new(
            a.get(2, 1) - a.get(1, 2),
            a.get(0, 2) - a.get(2, 0),
            a.get(1, 0) - a.get(0, 1),
        );
        let mut bound: f64 = 0.0;
        for i in 0..8 {
            let corner = Vec3::new(
                if i & 1 == 0 { domain.min.x } else { domain.max.x },
                if i & 2 == 0 { domain.min.y } else { domain.max.y },
                if i & 4 == 0 { domain.min.z } else { domain.max.z },
            );
            bound = bound.max((a.mul_vec(corner) + b).norm());
        }
        Self::smooth(
            move |y| Ok(a.mul_vec(y) + b),
            Some(Arc::new(move |_| curl)),
            bound,
        )
    }

    pub fn piecewise(interface: FinitePerimeterSet, inside: VectorField, outside: VectorField) -> Self {
        let sup_bound = inside.sup_bound.max(outside.sup_bound);
        let domain = inside.domain;
        Self {
            kind: FieldKind::Piecewise {
                interface,
                inside: Box::new(inside),
                outside: Box::new(outside),
            },
            sup_bound,
            domain,
        }
    }

    pub fn with_domain(mut self, domain: Aabb) -> Self {
        self.domain = domain;
        if let FieldKind::Piecewise { inside, outside, .. } = &mut self.kind {
            inside.domain = domain;
            outside.domain = domain;
        }
        self
    }

    pub fn eval(&self, x: Vec3) -> Result<Vec3> {
        match &self.kind {
            FieldKind::Smooth { eval, .. } => eval(x),
            FieldKind::Piecewise {
                interface,
                inside,
                outside,
            } => match interface.classify_point(x) {
                PointClass::Exterior => outside.eval(x),
                _ => inside.eval(x),
            },
        }
    }

    /// Limits of `F` at `x` from inside and outside the top-level interface
    /// (the two coincide for smooth fields).
    pub fn one_sided(&self, x: Vec3) -> Result<(Vec3, Vec3)> {
        match &self.kind {
            FieldKind::Smooth { eval, .. } => {
                let v = eval(x)?;
                Ok((v, v))
            }
            FieldKind::Piecewise { inside, outside, .. } => Ok((inside.eval(x)?, outside.eval(x)?)),
        }
    }

    /// The interface set of a piecewise field.
    pub fn interface(&self) -> Option<&FinitePerimeterSet> {
        match &self.kind {
            FieldKind::Piecewise { interface, .. } => Some(interface),
            FieldKind::Smooth { .. } => None,
        }
    }

    /// Classical curl where the field is smooth, if known.
    pub fn curl_density(&self, x: Vec3) -> Option<Vec3> {
        match &self.kind {
            FieldKind::Smooth { curl_density, .. } => curl_density.as_ref().map(|c| c(x)),
            FieldKind::Piecewise {
                interface,
                inside,
                outside,
            } => match interface.classify_point(x) {
                PointClass::Exterior => outside.curl_density(x),
                _ => inside.curl_density(x),
            },
        }
    }

    /// `F + g` for a bounded smooth `g` with zero curl, added branchwise so
    /// the interface structure is kept.
    pub fn add_gradient(&self, grad: DensityFn, grad_bound: f64) -> VectorField {
        match &self.kind {
            FieldKind::Smooth { eval, curl_density } => {
                let eval = eval.clone();
                let g = grad.clone();
                VectorField {
                    kind: FieldKind::Smooth {
                        eval: Arc::new(move |x| Ok(eval(x)? + g(x))),
                        curl_density: curl_density.clone(),
                    },
                    sup_bound: self.sup_bound + grad_bound,
                    domain: self.domain,
                }
            }
            FieldKind::Piecewise {
                interface,
                inside,
                outside,
            } => VectorField {
                kind: FieldKind::Piecewise {
                    interface: *interface,
                    inside: Box::new(inside.add_gradient(grad.clone(), grad_bound)),
                    outside: Box::new(outside.add_gradient(grad, grad_bound)),
                },
                sup_bound: self.sup_bound + grad_bound,
                domain: self.domain,
            },
        }
    }
}

/// Smooth scalar potential `f` with bounded gradient.
#[derive(Clone)]
pub struct Potential {
    pub value: Arc<dyn Fn(Vec3) -> f64 + Send + Sync>,
    pub gradient: DensityFn,
    pub gradient_bound: f64,
}

impl Potential {
    /// `f(y) = a · y`.
    pub fn linear(a: Vec3) -> Self {
        Self {
            value: Arc::new(move |y| a.dot(y)),
            gradient: Arc::new(move |_| a),
            gradient_bound: a.norm(),
        }
    }
}

/// A field on a set with closed-form curl measure and traces.
#[derive(Clone)]
pub struct GoldenScenario {
    pub name: String,
    /// Short description shown by `list`.
    pub anchor: String,
    pub field: VectorField,
    pub set: FinitePerimeterSet,
    pub curl: CurlMeasure,
    pub interior_trace: Option<TraceFn>,
    pub exterior_trace: Option<TraceFn>,
}

impl fmt::Debug for GoldenScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GoldenScenario")
            .field("name", &self.name)
            .field("field", &self.field)
            .field("set", &self.set)
            .finish_non_exhaustive()
    }
}

/// `E = {z > 0}` with `F = F1` in `E` and `F2` outside; boundary sampling
/// uses the window `[-2, 2]²`.
pub fn golden_half_space(f1: Vec3, f2: Vec3) -> GoldenScenario {
    let window = Window {
        center: Vec3::ZERO,
        half_side: 2.0,
    };
    let set = FinitePerimeterSet::half_space(Vec3::Z, 0.0, Some(window))
        .expect("unit normal");
    golden_half_space_on(set, f1, f2)
}

/// Half-space jump scenario on an arbitrary half-space.
pub fn golden_half_space_on(set: FinitePerimeterSet, f1: Vec3, f2: Vec3) -> GoldenScenario {
    let crate::geometry::Shape::HalfSpace { inner_normal: nu, .. } = set.shape else {
        panic!("golden_half_space_on needs a half-space");
    };
    let field = VectorField::piecewise(set, VectorField::constant(f1), VectorField::constant(f2));
    let jump = (f2 - f1).cross(nu);
    let curl = CurlMeasure {
        volume_density: None,
        surface_parts: vec![SurfacePart {
            set,
            density: Arc::new(move |_| jump),
        }],
    };
    let (ti, te) = (f1.cross(nu), f2.cross(nu));
    GoldenScenario {
        name: "half_space".into(),
        anchor: "constant fields glued across a plane".into(),
        field,
        set,
        curl,
        interior_trace: Some(Arc::new(move |_| Ok(ti))),
        exterior_trace: Some(Arc::new(move |_| Ok(te))),
    }
}

/// `scale·(−y, x, 0)`, curl `(0, 0, 2·scale)`, bounded on the default box.
pub fn rotation(scale: f64) -> VectorField {
    VectorField::smooth(
        move |p| Ok(Vec3::new(-scale * p.y, scale * p.x, 0.0)),
        Some(Arc::new(move |_| Vec3::new(0.0, 0.0, 2.0 * scale))),
        scale * 32f64.sqrt(),
    )
}

/// Unit ball with `(−y, x, 0)` inside and `(−2y, 2x, 0)` outside.
pub fn golden_ball() -> GoldenScenario {
    let set = FinitePerimeterSet::ball(Vec3::ZERO, 1.0).expect("positive radius");
    let field = VectorField::piecewise(set, rotation(1.0), rotation(2.0));
    let curl = CurlMeasure {
        volume_density: Some(Arc::new(move |p| {
            if set.classify_point(p) == PointClass::Exterior {
                Vec3::new(0.0, 0.0, 4.0)
            } else {
                Vec3::new(0.0, 0.0, 2.0)
            }
        })),
        surface_parts: vec![SurfacePart {
            set,
            density: Arc::new(|p| Vec3::new(-p.x * p.z, -p.y * p.z, 1.0 - p.z * p.z)),
        }],
    };
    let trace = move |scale: f64| -> TraceFn {
        Arc::new(move |p| {
            let nu = set.inner_normal(p)?;
            Ok(Vec3::new(-scale * p.y, scale * p.x, 0.0).cross(nu))
        })
    };
    GoldenScenario {
        name: "ball".into(),
        anchor: "rotating fluid ball inside a faster rotation".into(),
        field,
        set,
        curl,
        interior_trace: Some(trace(1.0)),
        exterior_trace: Some(trace(2.0)),
    }
}

/// `sin(1/(x+y+z))·(1,1,1)`, undefined on the plane `x + y + z = 0`.
pub fn cube_field() -> VectorField {
    VectorField::smooth(
        |p| {
            let s = p.x + p.y + p.z;
            if s.abs() <= SINGULAR_PLANE_TOL {
                return Err(Error::UndefinedPoint { point: p });
            }
            Ok(Vec3::splat((1.0 / s).sin()))
        },
        Some(Arc::new(|_| Vec3::ZERO)),
        3f64.sqrt(),
    )
}

/// Unit cube resting on the plane `x + y + z = 0` with the oscillating field
/// [`cube_field`]; the field is a gradient, so the curl vanishes.
pub fn golden_cube() -> GoldenScenario {
    let normal = Vec3::splat(1.0).normalize();
    let set = FinitePerimeterSet::build_oriented_cube(normal, Vec3::ZERO, 1.0).expect("unit normal");
    cube_sin_scenario(set)
}

/// [`cube_field`] on an arbitrary cube. On a face lying in the singular
/// plane the field has no limit and the half-ball averages vanish by
/// symmetry, so the trace there is zero.
pub fn cube_sin_scenario(set: FinitePerimeterSet) -> GoldenScenario {
    let normal = Vec3::splat(1.0).normalize();
    let field = cube_field();
    let f = field.clone();
    let trace: TraceFn = Arc::new(move |p| {
        let nu = set.inner_normal(p)?;
        if (p.x + p.y + p.z).abs() <= SINGULAR_PLANE_TOL {
            if (nu.dot(normal).abs() - 1.0).abs() <= 1e-12 {
                return Ok(Vec3::ZERO);
            }
            return Err(Error::UndefinedPoint { point: p });
        }
        Ok(f.eval(p)?.cross(nu))
    });
    GoldenScenario {
        name: "cube".into(),
        anchor: "cube on the singular plane of an oscillating gradient field".into(),
        field,
        set,
        curl: CurlMeasure::zero(),
        interior_trace: Some(trace.clone()),
        exterior_trace: Some(trace),
    }
}

/// Two fields with closed-form curl glued across `∂E`: the curl is the
/// branch density off the interface plus `(F_out − F_in) × ν H²⌞∂E`, and the
/// traces are the branches crossed with `ν`.
pub fn piecewise_smooth_scenario(
    name: &str,
    anchor: &str,
    set: FinitePerimeterSet,
    inside: VectorField,
    outside: VectorField,
) -> Result<GoldenScenario> {
    let probe = set.bounding_ball()?.0;
    if inside.curl_density(probe).is_none() || outside.curl_density(probe).is_none() {
        return Err(Error::InvalidArgument("branches need a closed-form curl".into()));
    }
    let field = VectorField::piecewise(set, inside.clone(), outside.clone());
    let (ci, co) = (inside.clone(), outside.clone());
    let (si, so) = (inside.clone(), outside.clone());
    let curl = CurlMeasure {
        volume_density: Some(Arc::new(move |p| {
            let branch = if set.classify_point(p) == PointClass::Exterior { &co } else { &ci };
            branch.curl_density(p).unwrap_or(Vec3::ZERO)
        })),
        surface_parts: vec![SurfacePart {
            set,
            density: Arc::new(move |p| match (set.inner_normal(p), si.eval(p), so.eval(p)) {
                (Ok(nu), Ok(a), Ok(b)) => (b - a).cross(nu),
                _ => Vec3::ZERO,
            }),
        }],
    };
    let trace = |branch: VectorField| -> TraceFn {
        Arc::new(move |p| {
            let nu = set.inner_normal(p)?;
            Ok(branch.eval(p)?.cross(nu))
        })
    };
    Ok(GoldenScenario {
        name: name.into(),
        anchor: anchor.into(),
        field,
        set,
        curl,
        interior_trace: Some(trace(inside)),
        exterior_trace: Some(trace(outside)),
    })
}

/// Replace the field by `F + ∇f`; traces gain `∇f × ν`, the curl is unchanged.
pub fn perturb_with_gradient(scenario: &GoldenScenario, f: &Potential) -> GoldenScenario {
    let set = scenario.set;
    let shift = |t: &Option<TraceFn>| -> Option<TraceFn> {
        let t = t.clone()?;
        let grad = f.gradient.clone();
        Some(Arc::new(move |p| {
            let nu = set.inner_normal(p)?;
            Ok(t(p)? + grad(p).cross(nu))
        }))
    };
    GoldenScenario {
        name: scenario.name.clone(),
        anchor: scenario.anchor.clone(),
        field: scenario.field.add_gradient(f.gradient.clone(), f.gradient_bound),
        set,
        curl: scenario.curl.clone(),
        interior_trace: shift(&scenario.interior_trace),
        exterior_trace: shift(&scenario.exterior_trace),
    }
}

/// The cube scenario perturbed by `∇x`.
pub fn golden_cube_gradient() -> GoldenScenario {
    let mut s = perturb_with_gradient(&golden_cube(), &Potential::linear(Vec3::X));
    s.name = "cube_gradient".into();
    s.anchor = "oscillating cube field plus a gradient".into();
    s
}

/// Names of the built-in scenarios, in listing order.
pub const BUILTIN_SCENARIOS: [&str; 4] = ["half_space", "ball", "cube", "cube_gradient"];

/// Built-in scenario by name; the half-space uses `F1 = x̂`, `F2 = ŷ`.
pub fn builtin_scenario(name: &str) -> Option<GoldenScenario> {
    match name {
        "half_space" => Some(golden_half_space(Vec3::X, Vec3::Y)),
        "ball" => Some(golden_ball()),
        "cube" => Some(golden_cube()),
        "cube_gradient" => Some(golden_cube_gradient()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::stream;
    use rand::Rng;

    fn close(a: Vec3, b: Vec3, tol: f64) -> bool {
        (a - b).max_abs() <= tol
    }

    #[test]
    fn ball_field_values() {
        let s = golden_ball();
        assert_eq!(s.field.eval(Vec3::new(0.5, 0.0, 0.0)).unwrap(), Vec3::new(0.0, 0.5, 0.0));
        assert_eq!(s.field.eval(Vec3::new(2.0, 0.0, 0.0)).unwrap(), Vec3::new(0.0, 4.0, 0.0));
        // boundary points take the inside branch
        assert_eq!(s.field.eval(Vec3::X).unwrap(), Vec3::new(0.0, 1.0, 0.0));
    }

    #[test]
    fn cube_field_values() {
        let f = cube_field();
        let v = f.eval(Vec3::splat(1.0)).unwrap();
        assert!(close(v, Vec3::splat((1.0f64 / 3.0).sin()), 1e-15));
        let p = Vec3::new(1.0, -1.0, 0.0);
        assert_eq!(f.eval(p), Err(Error::UndefinedPoint { point: p }));
    }

    #[test]
    fn half_space_jump_and_traces() {
        let s = golden_half_space(Vec3::X, Vec3::Y);
        let p = Vec3::new(0.3, -0.7, 0.0);
        assert_eq!(s.curl.jump_at(&s.set, p).unwrap(), Vec3::new(1.0, 1.0, 0.0));
        assert_eq!((s.interior_trace.as_ref().unwrap())(p).unwrap(), Vec3::new(0.0, -1.0, 0.0));
        assert_eq!((s.exterior_trace.as_ref().unwrap())(p).unwrap(), Vec3::new(1.0, 0.0, 0.0));
        let same = golden_half_space(Vec3::new(1.0, 2.0, 3.0), Vec3::new(1.0, 2.0, 3.0));
        assert_eq!(same.curl.jump_at(&same.set, p).unwrap(), Vec3::ZERO);
    }

    #[test]
    fn ball_surface_density() {
        let s = golden_ball();
        assert_eq!(s.curl.jump_at(&s.set, Vec3::Z).unwrap(), Vec3::ZERO);
        assert_eq!(s.curl.jump_at(&s.set, Vec3::X).unwrap(), Vec3::Z);
        for z0 in [-0.9, -0.3, 0.0, 0.5, 0.8] {
            let rho = (1.0f64 - z0 * z0).sqrt();
            for k in 0..8 {
                let t = k as f64 * 0.7;
                let p = Vec3::new(rho * t.cos(), rho * t.sin(), z0);
                let d = s.curl.jump_at(&s.set, p).unwrap();
                assert!((d.norm() - (1.0 - z0 * z0).sqrt()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ball_jump_equals_trace_difference() {
        let s = golden_ball();
        for sample in s.set.sample_boundary(200, 3).unwrap() {
            let i = (s.interior_trace.as_ref().unwrap())(sample.point).unwrap();
            let e = (s.exterior_trace.as_ref().unwrap())(sample.point).unwrap();
            let q2 = s.curl.jump_at(&s.set, sample.point).unwrap();
            assert!(close(e - i, q2, 1e-12));
        }
    }

    #[test]
    fn cube_traces() {
        let s = golden_cube();
        let t = s.interior_trace.clone().unwrap();
        let samples = s.set.sample_boundary(6000, 0).unwrap();
        let normal = Vec3::splat(1.0).normalize();
        for sample in &samples {
            let v = t(sample.point).unwrap();
            if sample.inner_normal == normal || sample.inner_normal == -normal {
                assert!(v.norm() < 1e-15);
            }
        }
        let total: Vec3 = samples.iter().map(|s| t(s.point).unwrap() * s.weight).sum();
        assert!(total.norm() < 1e-2, "{total:?}");
    }

    #[test]
    fn gradient_perturbation() {
        let base = golden_cube();
        let unchanged = perturb_with_gradient(&base, &Potential::linear(Vec3::ZERO));
        let p = Vec3::new(0.6, 0.2, 0.3);
        assert_eq!(unchanged.field.eval(p).unwrap(), base.field.eval(p).unwrap());

        let s = golden_cube_gradient();
        let on_s = s.set.sample_boundary(60, 0).unwrap()[4];
        let nu = on_s.inner_normal;
        assert_eq!(nu, Vec3::splat(1.0).normalize());
        let t = (s.interior_trace.as_ref().unwrap())(on_s.point).unwrap();
        assert!(close(t, Vec3::X.cross(nu), 1e-15));
        assert_eq!(s.field.eval(p).unwrap(), base.field.eval(p).unwrap() + Vec3::X);
        assert!((s.field.sup_bound - (3f64.sqrt() + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn piecewise_eval_matches_classification() {
        let s = golden_ball();
        let mut rng = stream(11, 0, 0);
        for _ in 0..2000 {
            let p = Vec3::new(
                rng.random_range(-4.0..4.0),
                rng.random_range(-4.0..4.0),
                rng.random_range(-4.0..4.0),
            );
            let v = s.field.eval(p).unwrap();
            let expected = match s.set.classify_point(p) {
                PointClass::Exterior => Vec3::new(-2.0 * p.y, 2.0 * p.x, 0.0),
                _ => Vec3::new(-p.y, p.x, 0.0),
            };
            assert_eq!(v, expected);
            assert!(v.norm() <= s.field.sup_bound * (1.0 + 1e-9));
        }
    }

    #[test]
    fn linear_field_curl() {
        use crate::vec3::Mat3;
        let a = Mat3::from_cols(
            Vec3::new(0.0, 1.0, 0.5),
            Vec3::new(-1.0, 0.0, 0.0),
            Vec3::new(0.0, 2.0, 0.0),
        );
        let f = VectorField::linear(a, Vec3::X);
        // curl = (∂y Fz − ∂z Fy, ∂z Fx − ∂x Fz, ∂x Fy − ∂y Fx)
        assert_eq!(f.curl_density(Vec3::ZERO).unwrap(), Vec3::new(-2.0, -0.5, 2.0));
    }
}
