//! Scenario-level checks and the aggregated report.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{GoldenScenario, TraceFn, VectorField};
use crate::geometry::{FinitePerimeterSet, PointClass, Shape};
use crate::measure::{
    compact_support_total, curl_pairing, measure_pairing, surface_integral, trace_pairing, CurlMeasure,
    Quadrature, ScalarField, SideSelector, SurfacePart, TestFunction,
};
use crate::mollify::{mollifier_mass_check, one_sided_mollify, MollifyConfig};
use crate::sampling::{derive_seed, integrate, stream, tags};
use crate::trace::{
    empirical_order, interior_trace_at, mean_trace_q0, mollified_boundary_trace, trace_table, TraceConfig,
    TraceEstimate, TraceRow, OMEGA_2,
};
use crate::vec3::{Mat3, Vec3};

/// Default relative tolerance factor.
pub const TOL_FACTOR: f64 = 2e-2;

/// Relative size below which a standard error is treated as round-off.
pub const ROUNDING_FLOOR: f64 = 1e-14;

/// `2e-2 · (1 + ‖F‖_∞) · (1 + Lip φ)`.
pub fn tolerance(sup: f64, lip: f64) -> f64 {
    TOL_FACTOR * (1.0 + sup) * (1.0 + lip)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub anchor: String,
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
    pub ms: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub pass: bool,
    pub checks: Vec<CheckRecord>,
    pub trace_table_csv: Option<String>,
    #[serde(skip)]
    pub rows: Vec<TraceRow>,
}

impl ScenarioReport {
    pub fn new(scenario: &str) -> Self {
        Self {
            scenario: scenario.into(),
            pass: true,
            checks: Vec::new(),
            trace_table_csv: None,
            rows: Vec::new(),
        }
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Records whose name starts with `prefix`.
    pub fn checks_with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a CheckRecord> + 'a {
        self.checks.iter().filter(move |c| c.name.starts_with(prefix))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn trace_csv(&self) -> String {
        trace_csv(&self.rows)
    }

    fn push(&mut self, rec: CheckRecord) {
        self.pass &= rec.pass;
        self.checks.push(rec);
    }
}

pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from(TraceRow::HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv());
        out.push('\n');
    }
    out
}

/// Knobs for [`run_invariant_suite`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteConfig {
    pub trace: TraceConfig,
    pub quad: Quadrature,
    pub mollify: MollifyConfig,
    /// Boundary points for the trace sweep (scenario default when `None`).
    pub points: Option<usize>,
    /// Sweep points that also get a mollified trace.
    pub mollified_points: usize,
    pub record_timing: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            trace: TraceConfig::default(),
            quad: Quadrature::default(),
            mollify: MollifyConfig::default(),
            points: None,
            mollified_points: 5,
            record_timing: false,
        }
    }
}

/// Sweep size used when the config does not set one.
pub fn default_points(scenario: &GoldenScenario) -> usize {
    match scenario.set.shape {
        Shape::HalfSpace { .. } => 50,
        Shape::Ball { .. } => 100,
        Shape::OrientedCube { .. } => 60,
    }
}

/// `|∫_{∂*E} φ·trace dH² − ⟨F×ν, φ⟩_side|` using the closed-form trace.
pub fn gauss_green_residual(
    scenario: &GoldenScenario,
    side: SideSelector,
    phi: &TestFunction,
    quad: &Quadrature,
) -> Result<f64> {
    let (trace, sign) = match side {
        SideSelector::InteriorSide => (&scenario.interior_trace, 1.0),
        SideSelector::ExteriorSide => (&scenario.exterior_trace, 1.0),
        SideSelector::Complement => (&scenario.exterior_trace, -1.0),
    };
    let trace = trace
        .as_ref()
        .ok_or_else(|| Error::NoTraceAvailable(scenario.name.clone()))?;
    let lhs = surface_integral(&scenario.set, phi, quad, |x, _| trace(x))? * sign;
    let rhs = trace_pairing(&scenario.field, &scenario.curl, &scenario.set, side, phi, quad)?;
    Ok((lhs - rhs.value).norm())
}

/// As [`gauss_green_residual`], with traces estimated numerically at the
/// boundary quadrature nodes inside `supp φ`.
pub fn gauss_green_residual_numeric(
    scenario: &GoldenScenario,
    side: SideSelector,
    phi: &TestFunction,
    quad: &Quadrature,
    cfg: &TraceConfig,
) -> Result<f64> {
    let set = scenario.set;
    let field = scenario.field.clone();
    let cfg = *cfg;
    let numeric: TraceFn = Arc::new(move |x| {
        let radii = cfg.radii(set.local_feature_size(x));
        let est = match side {
            SideSelector::InteriorSide => interior_trace_at(&field, &set, x, &radii, &cfg)?,
            _ => crate::trace::exterior_trace_at(&field, &set, x, &radii, &cfg)?,
        };
        Ok(est.extrapolated)
    });
    let with_numeric = GoldenScenario {
        interior_trace: Some(numeric.clone()),
        exterior_trace: Some(numeric),
        ..scenario.clone()
    };
    gauss_green_residual(&with_numeric, side, phi, quad)
}

/// `∫_E curl F dL³` and `∫_{∂*E} F × ν dH²` for a field smooth near `E`.
pub fn lipschitz_sides(field: &VectorField, set: &FinitePerimeterSet, quad: &Quadrature) -> Result<(Vec3, Vec3)> {
    let volume = set.volume()?;
    if field.curl_density(set.bounding_ball()?.0).is_none() {
        return Err(Error::InvalidArgument("field has no closed-form curl".into()));
    }
    let vol = integrate(quad.volume_samples, quad.seed, tags::SET_VOLUME, |u| {
        let y = set.map_unit_cube(u)?;
        Ok(field.curl_density(y).unwrap_or(Vec3::ZERO))
    })?
    .scale(volume);
    let samples = set.sample_boundary(quad.surface_samples, derive_seed(quad.seed, &[tags::BOUNDARY]))?;
    let mut surf = Vec3::ZERO;
    for s in samples {
        surf += field.eval(s.point)?.cross(s.inner_normal) * s.weight;
    }
    Ok((vol.value, surf))
}

/// `|∫_E curl F − ∫_{∂*E} F × ν|`.
pub fn lipschitz_global_check(field: &VectorField, set: &FinitePerimeterSet, quad: &Quadrature) -> Result<f64> {
    let (v, s) = lipschitz_sides(field, set, quad)?;
    Ok((v - s).norm())
}

/// Which closed-form or numeric trace to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Interior,
    Exterior,
}

/// `Σ weight · trace` over `n_samples` boundary nodes, closed form.
pub fn surface_integral_of_trace(
    scenario: &GoldenScenario,
    which: Which,
    n_samples: usize,
    quad: &Quadrature,
) -> Result<Vec3> {
    let trace = match which {
        Which::Interior => &scenario.interior_trace,
        Which::Exterior => &scenario.exterior_trace,
    }
    .as_ref()
    .ok_or_else(|| Error::NoTraceAvailable(scenario.name.clone()))?;
    let mut total = Vec3::ZERO;
    for s in scenario.set.sample_boundary(n_samples, derive_seed(quad.seed, &[tags::BOUNDARY]))? {
        total += trace(s.point)? * s.weight;
    }
    Ok(total)
}

/// Interior and exterior traces at boundary sample points.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub points: Vec<crate::geometry::SurfaceSample>,
    pub results: Vec<std::result::Result<(TraceEstimate, TraceEstimate), Error>>,
    pub rows: Vec<TraceRow>,
    pub max_defect: f64,
    pub mean_defect: f64,
}

impl Sweep {
    fn ok(&self) -> impl Iterator<Item = (&crate::geometry::SurfaceSample, &TraceEstimate, &TraceEstimate)> {
        self.points
            .iter()
            .zip(&self.results)
            .filter_map(|(p, r)| r.as_ref().ok().map(|(i, e)| (p, i, e)))
    }

    fn first_error(&self) -> Option<&Error> {
        self.results.iter().find_map(|r| r.as_ref().err())
    }
}

/// Traces at `n_points` boundary samples with max/mean tangential defect.
pub fn tangential_sweep(scenario: &GoldenScenario, n_points: usize, cfg: &TraceConfig) -> Result<Sweep> {
    let points = scenario
        .set
        .sample_boundary(n_points, derive_seed(cfg.seed, &[tags::BOUNDARY]))?;
    let xs: Vec<Vec3> = points.iter().map(|p| p.point).collect();
    let results: Vec<_> = trace_table(&scenario.field, &scenario.set, &xs, cfg)
        .into_iter()
        .map(|r| r.map_err(|(_, e)| e))
        .collect();
    let mut rows = Vec::with_capacity(points.len());
    let (mut max_defect, mut sum, mut count) = (0.0f64, 0.0, 0usize);
    for (p, r) in points.iter().zip(&results) {
        match r {
            Ok((i, e)) => {
                rows.push(TraceRow::from_estimates(i, e)?);
                for d in [i.tangential_defect, e.tangential_defect] {
                    max_defect = max_defect.max(d);
                    sum += d;
                    count += 1;
                }
            }
            Err(err) => rows.push(TraceRow::failed(p.point, err)),
        }
    }
    Ok(Sweep {
        points,
        results,
        rows,
        max_defect,
        mean_defect: if count > 0 { sum / count as f64 } else { 0.0 },
    })
}

/// Seeded bumps centred near `∂*E` plus one plateau covering the set.
pub fn test_family(scenario: &GoldenScenario, seed: u64) -> Result<Vec<TestFunction>> {
    let set = &scenario.set;
    let (radius, plateau) = match set.shape {
        Shape::Ball { center, radius } => (
            0.5 * radius,
            TestFunction::Plateau {
                center,
                inner: 1.25 * radius,
                outer: 2.0 * radius,
            },
        ),
        Shape::HalfSpace { window, .. } => {
            let w = window.ok_or(Error::UnboundedSurface)?;
            let (c, _) = set.bounding_ball()?;
            (
                0.375 * w.half_side,
                TestFunction::Plateau {
                    center: c,
                    inner: 0.5 * w.half_side,
                    outer: w.half_side,
                },
            )
        }
        Shape::OrientedCube { side, .. } => {
            let (c, r) = set.bounding_ball()?;
            let inner = r + 0.25 * side;
            (
                0.3 * side,
                TestFunction::Plateau {
                    center: c,
                    inner,
                    outer: inner + 0.75 * side,
                },
            )
        }
    };
    let candidates = set.sample_boundary(600, derive_seed(seed, &[tags::TEST_FAMILY]))?;
    let mut rng = stream(seed, tags::TEST_FAMILY, 1);
    let mut family = Vec::with_capacity(6);
    let mut attempts = 0;
    while family.len() < 5 {
        attempts += 1;
        if attempts > 10_000 {
            return Err(Error::InvalidArgument("could not place test functions".into()));
        }
        let s = candidates[rng.random_range(0..candidates.len())];
        let depth = rng.random_range(-0.2..0.2) * radius;
        let phi = TestFunction::Bump {
            center: s.point + s.inner_normal * depth,
            radius,
            amplitude: 1.0,
        };
        let fits = scenario.field.domain.contains_ball(s.point, radius)
            && surface_integral(set, &phi, &Quadrature::default(), |_, _| Ok(Vec3::ZERO)).is_ok();
        if fits {
            family.push(phi);
        }
    }
    family.push(plateau);
    Ok(family)
}

fn family_label(k: usize, phi: &TestFunction) -> String {
    match phi {
        TestFunction::Plateau { .. } => "plateau".into(),
        _ => format!("bump{k}"),
    }
}

struct Recorder<'a> {
    report: &'a mut ScenarioReport,
    timing: bool,
}

impl Recorder<'_> {
    fn run(&mut self, name: &str, anchor: &str, tol: f64, f: impl FnOnce() -> Result<f64>) {
        let start = Instant::now();
        let outcome = f();
        let ms = if self.timing {
            start.elapsed().as_millis() as u64
        } else {
            0
        };
        let (residual, note) = match outcome {
            Ok(r) if r.is_finite() => (r.max(0.0), None),
            Ok(r) => (f64::MAX, Some(format!("non-finite residual {r}"))),
            Err(e) => (f64::MAX, Some(e.to_string())),
        };
        self.report.push(CheckRecord {
            name: name.into(),
            anchor: anchor.into(),
            residual,
            tol,
            pass: residual <= tol,
            ms,
            note,
        });
    }
}

fn require_all(sweep: &Sweep) -> Result<()> {
    match sweep.first_error() {
        Some(e) => Err(e.clone()),
        None => Ok(()),
    }
}

/// Linear field with nonzero curl and a nonzero first-order half-ball term.
pub fn order_test_field() -> VectorField {
    VectorField::linear(
        Mat3::from_cols(
            Vec3::new(0.3, 1.0, -0.2),
            Vec3::new(-0.5, 0.1, 0.4),
            Vec3::new(0.6, -0.3, 0.2),
        ),
        Vec3::new(0.2, -0.1, 0.3),
    )
}

/// Run every invariant on one scenario.
pub fn run_invariant_suite(scenario: &GoldenScenario, cfg: &SuiteConfig) -> Result<ScenarioReport> {
    let mut report = ScenarioReport::new(&scenario.name);
    let n_points = cfg.points.unwrap_or_else(|| default_points(scenario));
    let sweep = tangential_sweep(scenario, n_points, &cfg.trace)?;
    let family = test_family(scenario, cfg.quad.seed)?;
    let sup = scenario.field.sup_bound;
    let set = scenario.set;
    let quad = cfg.quad;
    let mut rec = Recorder {
        report: &mut report,
        timing: cfg.record_timing,
    };

    // geometry
    rec.run("geometry.boundary_samples", "reduced boundary quadrature", 1e-9, || {
        let samples = set.sample_boundary(quad.surface_samples, quad.seed)?;
        let mut worst: f64 = 0.0;
        for s in &samples {
            worst = worst.max((s.inner_normal.norm() - 1.0).abs());
            if set.classify_point(s.point) != PointClass::ReducedBoundary {
                worst = worst.max(1.0);
            }
            if !matches!(set.shape, Shape::HalfSpace { .. })
                && set.classify_point(s.point + s.inner_normal * 1e-4) != PointClass::Interior
            {
                worst = worst.max(1.0);
            }
        }
        let total: f64 = samples.iter().map(|s| s.weight).sum();
        let perimeter = set.perimeter()?;
        Ok(worst.max((total - perimeter).abs() / perimeter))
    });

    // fields
    rec.run("fields.sup_bound", "essential bound of the field", 1e-9, || {
        let mut rng = stream(quad.seed, tags::SUPPORT_PROBE, 7);
        let d = scenario.field.domain;
        let mut worst: f64 = 0.0;
        for _ in 0..4000 {
            let p = Vec3::new(
                rng.random_range(d.min.x..d.max.x),
                rng.random_range(d.min.y..d.max.y),
                rng.random_range(d.min.z..d.max.z),
            );
            match scenario.field.eval(p) {
                Ok(v) => worst = worst.max(v.norm() / sup - 1.0),
                Err(Error::UndefinedPoint { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(worst.max(0.0))
    });
    rec.run("fields.density_tangential", "tangential jump density", 1e-12, || {
        let mut worst: f64 = 0.0;
        for s in set.sample_boundary(quad.surface_samples, quad.seed)? {
            let q2 = scenario.curl.jump_at(&set, s.point)?;
            worst = worst.max(q2.dot(s.inner_normal).abs());
        }
        Ok(worst)
    });
    rec.run("fields.triple_product", "tangential velocity identity", 1e-12, || {
        let mut worst: f64 = 0.0;
        for s in set.sample_boundary(quad.surface_samples, quad.seed)? {
            let nu = s.inner_normal;
            let (a, b) = match scenario.field.one_sided(s.point) {
                Ok(pair) => pair,
                Err(Error::UndefinedPoint { .. }) => continue,
                Err(e) => return Err(e),
            };
            for f in [a, b] {
                let lhs = nu.cross(f.cross(nu));
                let rhs = f - nu * nu.dot(f);
                worst = worst.max((lhs - rhs).norm() / (1.0 + f.norm()));
            }
        }
        Ok(worst)
    });

    // mollify
    rec.run("mollify.mass", "mollifier normalization", 1e-6, || {
        Ok((mollifier_mass_check(1_000_000, quad.seed) - 1.0).abs())
    });
    rec.run("mollify.one_sided_limits", "one-sided mollification limits", 2e-2, || {
        let probe = sweep.points[0];
        let feature = set.local_feature_size(probe.point);
        let eps = *cfg
            .mollify
            .schedule(feature)
            .last()
            .ok_or(Error::InsufficientLevels(0))?;
        let phi = TestFunction::Bump {
            center: probe.point,
            radius: feature,
            amplitude: 1.0,
        };
        let xi = probe.point + probe.inner_normal * (0.5 * feature);
        let xe = probe.point - probe.inner_normal * (0.5 * feature);
        let n = quad.volume_samples;
        let vi = one_sided_mollify(&phi, &set, eps, xi, n, quad.seed)?.value;
        let vb = one_sided_mollify(&phi, &set, eps, probe.point, n, quad.seed)?.value;
        let ve = one_sided_mollify(&phi, &set, eps, xe, n, quad.seed)?.value;
        let (pi, pb, pe) = (phi.eval(xi), phi.eval(probe.point), phi.eval(xe));
        Ok(((vi - pi).abs() / pi)
            .max((vb - 0.5 * pb).abs() / (0.5 * pb))
            .max(ve.abs() / pe))
    });

    // measure: pairings over the test-function family
    for (k, phi) in family.iter().enumerate() {
        let label = family_label(k, phi);
        let tol = tolerance(sup, phi.lipschitz_bound());
        rec.run(&format!("gauss_green.interior[{label}]"), "interior Gauss-Green formula", tol, || {
            gauss_green_residual(scenario, SideSelector::InteriorSide, phi, &quad)
        });
        rec.run(&format!("gauss_green.exterior[{label}]"), "exterior Gauss-Green formula", tol, || {
            gauss_green_residual(scenario, SideSelector::ExteriorSide, phi, &quad)
        });
        rec.run(&format!("antisymmetry[{label}]"), "exterior/complement antisymmetry", tol, || {
            let ext = trace_pairing(&scenario.field, &scenario.curl, &set, SideSelector::ExteriorSide, phi, &quad)?;
            let comp = trace_pairing(&scenario.field, &scenario.curl, &set, SideSelector::Complement, phi, &quad)?;
            Ok((ext.value + comp.value).norm())
        });
        rec.run(&format!("jump_identity[{label}]"), "jump identity", tol, || {
            let ext = trace_pairing(&scenario.field, &scenario.curl, &set, SideSelector::ExteriorSide, phi, &quad)?;
            let int = trace_pairing(&scenario.field, &scenario.curl, &set, SideSelector::InteriorSide, phi, &quad)?;
            let on_boundary = CurlMeasure {
                volume_density: None,
                surface_parts: scenario
                    .curl
                    .surface_parts
                    .iter()
                    .filter(|p| p.set == set)
                    .cloned()
                    .collect(),
            };
            let q2 = measure_pairing(&on_boundary, phi, None, &quad)?;
            Ok((ext.value - int.value - q2.value).norm())
        });
    }

    // product rule
    let phi0 = family[0];
    rec.run(
        "product_rule[constant g]",
        "product rule",
        tolerance(sup, phi0.lipschitz_bound()),
        || {
            let r = crate::measure::product_rule_residual(
                &scenario.field,
                &scenario.curl,
                &ScalarField::constant(1.0),
                &phi0,
                &quad,
            )?;
            Ok(r.value.norm())
        },
    );
    {
        let rot = crate::fields::rotation(1.0);
        let mu = CurlMeasure {
            volume_density: Some(Arc::new(|_| Vec3::new(0.0, 0.0, 2.0))),
            surface_parts: vec![],
        };
        let g = ScalarField::smooth(
            |p| 1.0 + 0.5 * p.x.sin() * p.y.cos(),
            |p| Vec3::new(0.5 * p.x.cos() * p.y.cos(), -0.5 * p.x.sin() * p.y.sin(), 0.0),
        );
        let (c, r) = phi0.support().unwrap_or((Vec3::ZERO, 1.0));
        let local_sup = (c.norm() + r) * 1.5;
        rec.run(
            "product_rule[smooth g]",
            "product rule",
            tolerance(local_sup, phi0.lipschitz_bound()),
            || Ok(crate::measure::product_rule_residual(&rot, &mu, &g, &phi0, &quad)?.value.norm()),
        );
    }
    if scenario.field.interface() == Some(&set) {
        rec.run(
            "product_rule[indicator]",
            "product rule",
            tolerance(sup, phi0.lipschitz_bound()),
            || {
                let g = ScalarField::indicator(set);
                let r = crate::measure::product_rule_residual(&scenario.field, &scenario.curl, &g, &phi0, &quad)?;
                Ok(r.value.norm())
            },
        );
    }

    // compact support, on the truncated rotation field
    {
        let unit = FinitePerimeterSet::ball(Vec3::ZERO, 1.0)?;
        let truncated = VectorField::piecewise(unit, crate::fields::rotation(1.0), VectorField::zero());
        rec.run("compact_support[pairing]", "compactly supported curl vanishes", 3e-2, || {
            Ok(compact_support_total(&truncated, Vec3::ZERO, 1.0, &quad)?.value.norm())
        });
        rec.run("compact_support[measure]", "compactly supported curl vanishes", 3e-2, || {
            let mu = CurlMeasure {
                volume_density: Some(Arc::new(move |p| {
                    if unit.classify_point(p) == PointClass::Exterior {
                        Vec3::ZERO
                    } else {
                        Vec3::new(0.0, 0.0, 2.0)
                    }
                })),
                surface_parts: vec![SurfacePart {
                    set: unit,
                    density: Arc::new(move |p| {
                        let nu = -p.try_normalize().unwrap_or(Vec3::Z);
                        -Vec3::new(-p.y, p.x, 0.0).cross(nu)
                    }),
                }],
            };
            let phi = TestFunction::Plateau {
                center: Vec3::ZERO,
                inner: 1.25,
                outer: 2.0,
            };
            Ok(measure_pairing(&mu, &phi, None, &quad)?.value.norm())
        });
    }

    // Lipschitz Gauss-Green on a smooth field over a bounded set
    {
        let (field, lip_set) = match set.shape {
            Shape::Ball { .. } => match &scenario.field.kind {
                crate::fields::FieldKind::Piecewise { inside, .. } => ((**inside).clone(), set),
                _ => (order_test_field(), set),
            },
            Shape::OrientedCube { .. } => (order_test_field(), set),
            Shape::HalfSpace { .. } => {
                let (c, r) = set.bounding_ball()?;
                (order_test_field(), FinitePerimeterSet::ball(c, 0.5 * r)?)
            }
        };
        let scale = lipschitz_sides(&field, &lip_set, &quad).map(|(v, _)| v.norm()).unwrap_or(1.0);
        rec.run("lipschitz_gauss_green", "Lipschitz Gauss-Green", 5e-2 * scale.max(1.0), || {
            lipschitz_global_check(&field, &lip_set, &quad)
        });
    }

    // traces
    let trace_tol = tolerance(sup, 0.0);
    rec.run("trace.tangential_property", "tangential property", trace_tol, || {
        require_all(&sweep)?;
        Ok(sweep.max_defect)
    });
    // posterior errors can look small on nearly linear integrands, so the
    // budget is also judged by the worst case over bounded fields
    rec.run("trace.mc_error_bound", "pointwise half-ball trace", trace_tol, || {
        Ok(3.0 * sup / (cfg.trace.samples_per_radius as f64).sqrt())
    });
    rec.run("trace.boundedness", "boundedness of traces", 0.0, || {
        require_all(&sweep)?;
        let mut worst: f64 = 0.0;
        for (_, i, e) in sweep.ok() {
            for t in [i, e] {
                for (v, s) in t.values.iter().zip(&t.value_errors) {
                    worst = worst.max(v.norm() - sup - 3.0 * s);
                }
            }
        }
        Ok(worst.max(0.0))
    });
    if let (Some(ti), Some(te)) = (&scenario.interior_trace, &scenario.exterior_trace) {
        let face_s = match set.shape {
            Shape::OrientedCube { rotation, .. } if scenario.name.starts_with("cube") => Some(rotation.cols[2]),
            _ => None,
        };
        let max_err = |on_s: Option<bool>, interior: bool| -> Result<f64> {
            require_all(&sweep)?;
            let mut worst: f64 = 0.0;
            for (p, i, e) in sweep.ok() {
                if let (Some(want), Some(n)) = (on_s, face_s) {
                    if (p.inner_normal == n) != want {
                        continue;
                    }
                }
                let (est, exact) = if interior { (i, ti(p.point)?) } else { (e, te(p.point)?) };
                worst = worst.max((est.extrapolated - exact).max_abs());
            }
            Ok(worst)
        };
        if face_s.is_some() {
            rec.run("trace.face_S", "pointwise half-ball trace", 3e-2, || {
                require_all(&sweep)?;
                let n = face_s.unwrap_or(Vec3::Z);
                let mut worst: f64 = 0.0;
                for (p, i, e) in sweep.ok() {
                    if p.inner_normal == n {
                        let exact = ti(p.point)?;
                        worst = worst.max((i.extrapolated - exact).norm()).max((e.extrapolated - exact).norm());
                    }
                }
                Ok(worst)
            });
            rec.run("trace.other_faces", "pointwise half-ball trace", trace_tol, || {
                Ok(max_err(Some(false), true)?.max(max_err(Some(false), false)?))
            });
        } else {
            rec.run("trace.interior_closed_form", "pointwise half-ball trace", trace_tol, || max_err(None, true));
            rec.run("trace.exterior_closed_form", "pointwise half-ball trace", trace_tol, || max_err(None, false));
        }
        rec.run("trace.q0_closed_form", "mean tangential trace", trace_tol, || {
            require_all(&sweep)?;
            let mut worst: f64 = 0.0;
            for (p, i, e) in sweep.ok() {
                let exact = (ti(p.point)? + te(p.point)?) * 0.5;
                worst = worst.max((mean_trace_q0(i, e)? - exact).max_abs());
            }
            Ok(worst)
        });
    }
    let jump_tol = if matches!(set.shape, Shape::Ball { .. }) {
        TOL_FACTOR
    } else {
        trace_tol
    };
    rec.run("trace.jump_consistency", "jump identity", jump_tol, || {
        require_all(&sweep)?;
        let mut worst: f64 = 0.0;
        for (p, i, e) in sweep.ok() {
            let q2 = crate::measure::jump_density(&scenario.curl, &set, p.point)?;
            worst = worst.max((crate::trace::jump_from_traces(i, e)? - q2).max_abs());
        }
        Ok(worst)
    });
    if let Shape::Ball { center, radius } = set.shape {
        rec.run("trace.jump_magnitude", "jump identity", TOL_FACTOR, || {
            require_all(&sweep)?;
            let mut worst: f64 = 0.0;
            for (p, i, e) in sweep.ok() {
                let z = (p.point.z - center.z) / radius;
                let jump = crate::trace::jump_from_traces(i, e)?;
                worst = worst.max((jump.norm() - (1.0 - z * z).max(0.0).sqrt()).abs());
            }
            Ok(worst)
        });
    }
    rec.run("trace.mollified_q0", "mean tangential trace from mollification", trace_tol, || {
        require_all(&sweep)?;
        let mut worst: f64 = 0.0;
        let picks = cfg.mollified_points.min(sweep.points.len());
        for k in 0..picks {
            let idx = k * sweep.points.len() / picks.max(1);
            let p = sweep.points[idx];
            let Ok((i, e)) = &sweep.results[idx] else { continue };
            let eps = cfg.mollify.schedule(set.local_feature_size(p.point));
            let seed = derive_seed(quad.seed, &[tags::MOLLIFY, idx as u64]);
            let m = mollified_boundary_trace(&scenario.field, &set, p.point, &eps, cfg.trace.samples_per_radius, seed)?;
            worst = worst.max((m.extrapolated - mean_trace_q0(i, e)?).max_abs());
        }
        Ok(worst)
    });
    rec.run("trace.normalization", "half-ball normalization", 3.0, || {
        let c = Vec3::new(0.7, -1.2, 0.4);
        let field = VectorField::constant(c).with_domain(scenario.field.domain);
        let p = sweep.points[0];
        let radii = cfg.trace.radii(set.local_feature_size(p.point));
        let mut worst: f64 = 0.0;
        for &r in &radii {
            let est = crate::trace::half_ball_integral(&field, p.point, p.inner_normal, r, cfg.trace.samples_per_radius, cfg.trace.seed)?
                .scale(3.0 / (OMEGA_2 * r.powi(3)));
            let exact = c.cross(p.inner_normal);
            let err = (est.value - exact).norm();
            worst = worst.max(err / (est.std_error + ROUNDING_FLOOR * (1.0 + exact.norm())));
        }
        Ok(worst)
    });
    rec.run("trace.order", "Lebesgue-point convergence order", 0.0, || {
        let field = order_test_field();
        let mut worst_order = f64::INFINITY;
        for p in sweep.points.iter().take(3) {
            let radii = cfg.trace.radii(set.local_feature_size(p.point));
            let est = interior_trace_at(&field, &set, p.point, &radii, &cfg.trace)?;
            let exact = field.eval(p.point)?.cross(p.inner_normal);
            let errs: Vec<f64> = est.values.iter().map(|v| (*v - exact).norm()).collect();
            let order = empirical_order(&radii, &errs).ok_or(Error::InsufficientLevels(errs.len()))?;
            worst_order = worst_order.min(order);
        }
        Ok((0.8 - worst_order).max(0.0))
    });
    if set.is_bounded() {
        let expected = measure_pairing(
            &scenario.curl,
            &family[family.len() - 1],
            Some((&set, SideSelector::InteriorSide)),
            &quad,
        );
        let expected = expected.map(|e| e.value);
        let tol = 5e-2 * expected.as_ref().map_or(1.0, |e| e.norm().max(1.0));
        rec.run("surface_integral.interior", "Gauss-Green with constant test function", tol, || {
            require_all(&sweep)?;
            let total: Vec3 = sweep.ok().map(|(p, i, _)| i.extrapolated * p.weight).sum();
            Ok((total - expected.clone()?).norm())
        });
        rec.run("surface_integral.closed_form", "Gauss-Green with constant test function", tol, || {
            let total = surface_integral_of_trace(scenario, Which::Interior, 60 * quad.surface_samples.max(100), &quad)?;
            Ok((total - expected.clone()?).norm())
        });
    }
    rec.run("linearity.curl_pairing", "linearity of the curl pairing", 1e-9 * (1.0 + sup), || {
        let g = VectorField::constant(Vec3::new(0.3, -0.2, 0.5)).with_domain(scenario.field.domain);
        let sum = scenario
            .field
            .add_gradient(Arc::new(|_| Vec3::new(0.3, -0.2, 0.5)), 0.5f64.sqrt());
        let a = curl_pairing(&scenario.field, &phi0, &quad)?;
        let b = curl_pairing(&g, &phi0, &quad)?;
        let ab = curl_pairing(&sum, &phi0, &quad)?;
        Ok((ab.value - a.value - b.value).norm())
    });
    rec.run("determinism.trace_point", "reproducibility", 0.0, || {
        require_all(&sweep)?;
        let x = sweep.points[0].point;
        let again = trace_table(&scenario.field, &set, &[x], &cfg.trace);
        let (i, e) = again.into_iter().next().expect("one point").map_err(|(_, e)| e)?;
        let (i0, e0) = sweep.results[0].as_ref().map_err(Clone::clone)?;
        Ok(if i.values == i0.values && e.values == e0.values { 0.0 } else { 1.0 })
    });

    report.rows = sweep.rows;
    Ok(report)
}

/// Closed-form `∫_{∂B} F₁ × ν dH²` for `F₁ = (−y, x, 0)` on the unit sphere.
pub const BALL_INSIDE_FLUX: f64 = 8.0 * PI / 3.0;
