//! Acceptance criteria at their pinned tolerances. Runs without the default
//! test harness so that each criterion prints one PASS/FAIL line.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use curltrace_core::fields::{builtin_scenario, rotation, GoldenScenario, VectorField};
use curltrace_core::geometry::FinitePerimeterSet;
use curltrace_core::measure::{
    compact_support_total, measure_pairing, product_rule_residual, trace_pairing, CurlMeasure, Quadrature,
    ScalarField, SideSelector, SurfacePart, TestFunction,
};
use curltrace_core::mollify::{one_sided_mollify, MollifyConfig};
use curltrace_core::trace::{
    empirical_order, half_ball_integral, interior_trace_at, TraceConfig, TraceRow, OMEGA_2,
};
use curltrace_core::verify::{
    gauss_green_residual, lipschitz_sides, order_test_field, tangential_sweep, test_family, tolerance,
    trace_csv, ScenarioReport, SuiteConfig, ROUNDING_FLOOR,
};
use curltrace_core::{Mat3, Vec3};

const SEED: u64 = 42;

fn quad() -> Quadrature {
    Quadrature::default().with_seed(SEED)
}

fn trace_cfg() -> TraceConfig {
    TraceConfig {
        seed: SEED,
        ..TraceConfig::default()
    }
}

struct Verdict {
    n: u32,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn verdict(n: u32, title: &'static str, pass: bool, detail: String) -> Verdict {
    Verdict { n, title, pass, detail }
}

fn scenario(name: &str) -> GoldenScenario {
    builtin_scenario(name).expect("builtin")
}

struct Swept {
    scenario: GoldenScenario,
    rows: Vec<TraceRow>,
}

fn swept(name: &'static str, points: usize) -> &'static Swept {
    static HALF: OnceLock<Swept> = OnceLock::new();
    static BALL: OnceLock<Swept> = OnceLock::new();
    static CUBE: OnceLock<Swept> = OnceLock::new();
    let cell = match name {
        "half_space" => &HALF,
        "ball" => &BALL,
        "cube" => &CUBE,
        _ => unreachable!(),
    };
    cell.get_or_init(|| {
        let s = scenario(name);
        let sweep = tangential_sweep(&s, points, &trace_cfg()).expect("sweep runs");
        Swept {
            scenario: s,
            rows: sweep.rows,
        }
    })
}

fn half_space() -> &'static Swept {
    swept("half_space", 50)
}
fn ball() -> &'static Swept {
    swept("ball", 100)
}
fn cube() -> &'static Swept {
    swept("cube", 60)
}

fn all_ok(rows: &[TraceRow]) -> bool {
    rows.iter().all(|r| r.flag == "ok")
}

fn cube_face_s_normal() -> Vec3 {
    Vec3::splat(1.0 / 3f64.sqrt())
}

/// `sin(1/(x+y+z))·(1,1,1)`, written out independently of the library.
fn cube_oracle(p: Vec3) -> Vec3 {
    Vec3::splat((1.0 / (p.x + p.y + p.z)).sin())
}

fn criterion_01_half_space_traces() -> Verdict {
    let sw = half_space();
    let (f1, f2) = (Vec3::X, Vec3::Y);
    let sup = sw.scenario.field.sup_bound;
    let tol = 2e-2 * (1.0 + sup);
    let mut worst: f64 = 0.0;
    for r in &sw.rows {
        let nu = r.inner_normal;
        // (1,0,0)×ν and (0,1,0)×ν expanded by hand
        let ti = Vec3::new(0.0, -nu.z, nu.y);
        let te = Vec3::new(nu.z, 0.0, -nu.x);
        assert_eq!(ti, f1.cross(nu));
        assert_eq!(te, f2.cross(nu));
        worst = worst
            .max((r.interior - ti).max_abs())
            .max((r.exterior - te).max_abs())
            .max((r.jump - (te - ti)).max_abs())
            .max((r.q0 - (ti + te) * 0.5).max_abs());
    }
    let pass = sw.rows.len() == 50 && all_ok(&sw.rows) && worst <= tol;
    verdict(1, "half-space traces, jump, q0", pass, format!("max err {worst:.3e} <= {tol:.3e} over {} points", sw.rows.len()))
}

fn criterion_02_ball_jump_and_lipschitz() -> Verdict {
    let sw = ball();
    let tol = 2e-2;
    let (mut jump_err, mut mag_err): (f64, f64) = (0.0, 0.0);
    for r in &sw.rows {
        let p = r.point;
        let expected = Vec3::new(-p.x * p.z, -p.y * p.z, 1.0 - p.z * p.z);
        jump_err = jump_err.max((r.jump - expected).max_abs());
        mag_err = mag_err.max((r.jump.norm() - (1.0 - p.z * p.z).max(0.0).sqrt()).abs());
    }
    let set = FinitePerimeterSet::ball(Vec3::ZERO, 1.0).unwrap();
    let (_, surface) = lipschitz_sides(&rotation(1.0), &set, &quad()).unwrap();
    let volume = Vec3::new(0.0, 0.0, 2.0 * 4.0 * PI / 3.0);
    let lip = (volume - surface).norm();
    let lip_tol = 5e-2 * 8.0 * PI / 3.0;
    let pass = sw.rows.len() == 100 && all_ok(&sw.rows) && jump_err <= tol && mag_err <= tol && lip <= lip_tol;
    verdict(
        2,
        "ball jump density and Lipschitz Gauss-Green",
        pass,
        format!("jump {jump_err:.3e}, |jump| {mag_err:.3e} (tol {tol}); Lipschitz {lip:.3e} <= {lip_tol:.3e}"),
    )
}

fn criterion_03_cube_traces() -> Verdict {
    let sw = cube();
    let n = cube_face_s_normal();
    let sup = sw.scenario.field.sup_bound;
    let tol = 2e-2 * (1.0 + sup);
    let (mut on_s, mut s_count, mut other) = (0.0f64, 0, 0.0f64);
    let mut total = Vec3::ZERO;
    for r in &sw.rows {
        if (r.inner_normal - n).norm() < 1e-12 {
            on_s = on_s.max(r.interior.norm());
            s_count += 1;
        } else {
            let exact = cube_oracle(r.point).cross(r.inner_normal);
            other = other.max((r.interior - exact).max_abs()).max((r.exterior - exact).max_abs());
        }
        // equal-weight face grids: perimeter 6 over 60 points
        total += r.interior * (6.0 / sw.rows.len() as f64);
    }
    let pass = all_ok(&sw.rows) && s_count == 10 && on_s <= 3e-2 && other <= tol && total.norm() <= 5e-2;
    verdict(
        3,
        "cube traces and surface integral",
        pass,
        format!(
            "face S {on_s:.3e} <= 3e-2 ({s_count} points); other faces {other:.3e} <= {tol:.3e}; |sum| {:.3e} <= 5e-2",
            total.norm()
        ),
    )
}

fn criterion_04_tangential_property() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for sw in [half_space(), ball(), cube()] {
        let tol = 2e-2 * (1.0 + sw.scenario.field.sup_bound);
        let worst = sw
            .rows
            .iter()
            .map(|r| r.interior.dot(r.inner_normal).abs().max(r.exterior.dot(r.inner_normal).abs()))
            .fold(0.0, f64::max);
        pass &= all_ok(&sw.rows) && worst <= tol;
        parts.push(format!("{} {worst:.3e} <= {tol:.3e}", sw.scenario.name));
    }
    verdict(4, "tangential defect", pass, parts.join("; "))
}

fn family_sweep(mut f: impl FnMut(&GoldenScenario, &TestFunction, f64) -> f64) -> (bool, String) {
    let mut pass = true;
    let mut parts = Vec::new();
    for name in ["half_space", "ball", "cube"] {
        let s = scenario(name);
        let family = test_family(&s, SEED).unwrap();
        assert_eq!(family.len(), 6);
        let mut worst_ratio: f64 = 0.0;
        for phi in &family {
            let tol = tolerance(s.field.sup_bound, phi.lipschitz_bound());
            let r = f(&s, phi, tol);
            pass &= r.is_finite() && r <= tol;
            worst_ratio = worst_ratio.max(r / tol);
        }
        parts.push(format!("{name} worst residual/tol {worst_ratio:.3e}"));
    }
    (pass, parts.join("; "))
}

fn criterion_05_gauss_green() -> Verdict {
    let (pass, detail) = family_sweep(|s, phi, _| {
        let i = gauss_green_residual(s, SideSelector::InteriorSide, phi, &quad()).unwrap();
        let e = gauss_green_residual(s, SideSelector::ExteriorSide, phi, &quad()).unwrap();
        i.max(e)
    });
    verdict(5, "interior and exterior Gauss-Green residuals", pass, detail)
}

fn criterion_06_antisymmetry() -> Verdict {
    let (pass, detail) = family_sweep(|s, phi, _| {
        let ext = trace_pairing(&s.field, &s.curl, &s.set, SideSelector::ExteriorSide, phi, &quad()).unwrap();
        let comp = trace_pairing(&s.field, &s.curl, &s.set, SideSelector::Complement, phi, &quad()).unwrap();
        (ext.value + comp.value).norm()
    });
    verdict(6, "exterior/complement antisymmetry", pass, detail)
}

fn criterion_07_product_rule() -> Verdict {
    // (a) smooth g on the rotation field
    let field = rotation(1.0);
    let mu = CurlMeasure {
        volume_density: Some(Arc::new(|_| Vec3::new(0.0, 0.0, 2.0))),
        surface_parts: vec![],
    };
    let g = ScalarField::smooth(
        |p| 1.0 + 0.5 * p.x.sin() * p.y.cos(),
        |p| Vec3::new(0.5 * p.x.cos() * p.y.cos(), -0.5 * p.x.sin() * p.y.sin(), 0.0),
    );
    let phi = TestFunction::Bump {
        center: Vec3::new(0.4, -0.3, 0.2),
        radius: 0.8,
        amplitude: 1.0,
    };
    // |gF| ≤ 1.5·|F| ≤ 1.5·1.7 on the support
    let tol_a = tolerance(1.5 * 1.7, phi.lipschitz_bound());
    let a = product_rule_residual(&field, &mu, &g, &phi, &quad()).unwrap().value.norm();

    // (b) g = χ_E on the half-space scenario
    let s = scenario("half_space");
    let phi_b = TestFunction::Bump {
        center: Vec3::new(0.3, 0.1, 0.05),
        radius: 0.75,
        amplitude: 1.0,
    };
    let tol_b = tolerance(s.field.sup_bound, phi_b.lipschitz_bound());
    let b = product_rule_residual(&s.field, &s.curl, &ScalarField::indicator(s.set), &phi_b, &quad())
        .unwrap()
        .value
        .norm();
    verdict(
        7,
        "product rule",
        a <= tol_a && b <= tol_b,
        format!("smooth g {a:.3e} <= {tol_a:.3e}; indicator {b:.3e} <= {tol_b:.3e}"),
    )
}

fn criterion_08_compact_support() -> Verdict {
    let unit = FinitePerimeterSet::ball(Vec3::ZERO, 1.0).unwrap();
    let truncated = VectorField::piecewise(unit, rotation(1.0), VectorField::zero());
    let total = compact_support_total(&truncated, Vec3::ZERO, 1.0, &quad()).unwrap().value.norm();
    // the same total from the measure itself: (0,0,2) on the ball plus the
    // jump −(−y,x,0)×ν on the sphere, with ν = −x
    let mu = CurlMeasure {
        volume_density: Some(Arc::new(|p: Vec3| {
            if p.norm() < 1.0 {
                Vec3::new(0.0, 0.0, 2.0)
            } else {
                Vec3::ZERO
            }
        })),
        surface_parts: vec![SurfacePart {
            set: unit,
            density: Arc::new(|p: Vec3| {
                let nu = -p.normalize();
                -Vec3::new(-p.y, p.x, 0.0).cross(nu)
            }),
        }],
    };
    let plateau = TestFunction::Plateau {
        center: Vec3::ZERO,
        inner: 1.25,
        outer: 2.0,
    };
    let via_measure = measure_pairing(&mu, &plateau, None, &quad()).unwrap().value.norm();
    verdict(
        8,
        "compactly supported curl",
        total <= 3e-2 && via_measure <= 3e-2,
        format!("pairing {total:.3e}, measure {via_measure:.3e} <= 3e-2"),
    )
}

fn criterion_09_normalization() -> Verdict {
    let c = Vec3::new(0.7, -1.2, 0.4);
    let field = VectorField::constant(c);
    let cfg = trace_cfg();
    let mut worst: f64 = 0.0;
    let mut levels = 0;
    for p in scenario("ball").set.sample_boundary(5, SEED).unwrap() {
        let exact = c.cross(p.inner_normal);
        for r in cfg.radii(1.0) {
            let est = half_ball_integral(&field, p.point, p.inner_normal, r, cfg.samples_per_radius, cfg.seed)
                .unwrap()
                .scale(3.0 / (OMEGA_2 * r.powi(3)));
            let err = (est.value - exact).norm();
            worst = worst.max(err / (3.0 * (est.std_error + ROUNDING_FLOOR * (1.0 + exact.norm()))));
            levels += 1;
        }
    }
    verdict(
        9,
        "half-ball normalization",
        worst <= 1.0,
        format!("max err/(3 se) {worst:.3e} over {levels} radius levels"),
    )
}

fn criterion_10_one_sided_limits() -> Verdict {
    let mut worst: f64 = 0.0;
    for name in ["half_space", "ball", "cube"] {
        let s = scenario(name);
        let probe = s.set.sample_boundary(60, SEED).unwrap()[7];
        let feature = s.set.local_feature_size(probe.point);
        let eps = *MollifyConfig::default().schedule(feature).last().unwrap();
        let phi = TestFunction::Bump {
            center: probe.point + Vec3::new(0.1, -0.05, 0.02) * feature,
            radius: feature,
            amplitude: 1.0,
        };
        let n = 200_000;
        let xi = probe.point + probe.inner_normal * (0.5 * feature);
        let xe = probe.point - probe.inner_normal * (0.5 * feature);
        let vi = one_sided_mollify(&phi, &s.set, eps, xi, n, SEED).unwrap().value;
        let vb = one_sided_mollify(&phi, &s.set, eps, probe.point, n, SEED).unwrap().value;
        let ve = one_sided_mollify(&phi, &s.set, eps, xe, n, SEED).unwrap().value;
        let (pi, pb, pe) = (phi.eval(xi), phi.eval(probe.point), phi.eval(xe));
        worst = worst
            .max((vi - pi).abs() / pi)
            .max((vb - 0.5 * pb).abs() / (0.5 * pb))
            .max(ve.abs() / pe);
    }
    verdict(10, "one-sided mollification limits", worst <= 2e-2, format!("max relative err {worst:.3e} <= 2e-2"))
}

fn criterion_11_convergence_order() -> Verdict {
    let set = FinitePerimeterSet::ball(Vec3::ZERO, 1.0).unwrap();
    let field = order_test_field();
    let a = Mat3::from_cols(
        Vec3::new(0.3, 1.0, -0.2),
        Vec3::new(-0.5, 0.1, 0.4),
        Vec3::new(0.6, -0.3, 0.2),
    );
    let b = Vec3::new(0.2, -0.1, 0.3);
    let cfg = trace_cfg();
    let mut worst = f64::INFINITY;
    for p in set.sample_boundary(8, SEED).unwrap() {
        let radii = cfg.radii(set.local_feature_size(p.point));
        let est = interior_trace_at(&field, &set, p.point, &radii, &cfg).unwrap();
        let exact = (a.mul_vec(p.point) + b).cross(p.inner_normal);
        let errs: Vec<f64> = est.values.iter().map(|v| (*v - exact).norm()).collect();
        worst = worst.min(empirical_order(&radii, &errs).unwrap_or(f64::NEG_INFINITY));
    }
    verdict(11, "interior-trace convergence order", worst >= 0.8, format!("min order {worst:.3} >= 0.8 over 8 points"))
}

fn criterion_12_determinism() -> Verdict {
    let cfg = SuiteConfig {
        trace: TraceConfig {
            samples_per_radius: 20_000,
            seed: 5,
            ..TraceConfig::default()
        },
        quad: Quadrature {
            volume_samples: 20_000,
            surface_samples: 400,
            seed: 5,
        },
        points: Some(20),
        mollified_points: 2,
        ..SuiteConfig::default()
    };
    let run = || -> (String, String) {
        let r: ScenarioReport = curltrace_core::verify::run_invariant_suite(&scenario("cube"), &cfg).unwrap();
        (r.to_json(), trace_csv(&r.rows))
    };
    let (a, b) = (run(), run());
    let pass = a == b && !a.0.is_empty() && a.1.lines().count() == 21;
    verdict(12, "reproducible outputs", pass, format!("json {} bytes, csv {} bytes, identical {}", a.0.len(), a.1.len(), a == b))
}

fn main() {
    let criteria: [fn() -> Verdict; 12] = [
        criterion_01_half_space_traces,
        criterion_02_ball_jump_and_lipschitz,
        criterion_03_cube_traces,
        criterion_04_tangential_property,
        criterion_05_gauss_green,
        criterion_06_antisymmetry,
        criterion_07_product_rule,
        criterion_08_compact_support,
        criterion_09_normalization,
        criterion_10_one_sided_limits,
        criterion_11_convergence_order,
        criterion_12_determinism,
    ];
    let mut failed = 0;
    for (k, run) in criteria.iter().enumerate() {
        let v = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(k as u32 + 1, "panicked", false, msg)
        });
        println!("{} criterion {:>2} {}: {}", if v.pass { "PASS" } else { "FAIL" }, v.n, v.title, v.detail);
        failed += usize::from(!v.pass);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
