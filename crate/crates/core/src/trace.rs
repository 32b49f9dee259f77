//! Pointwise tangential traces from half-ball averages.
//!
//! The interior trace at `x ∈ ∂*E` is the `r → 0` limit of
//! `3/(πr³) ∫_{B(x,ν,r)} F(y) × (y−x)/|y−x| dy` over the half-ball on the
//! side of the inner normal; the exterior trace uses the opposite half-ball
//! with a minus sign. Limits are taken by a linear fit in `r`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::VectorField;
use crate::geometry::FinitePerimeterSet;
use crate::mollify::mollify_field;
use crate::sampling::{derive_seed, integrate, split_direction, tags, Estimate};
use crate::vec3::Vec3;

/// `ω₂`, the area of the unit disk.
pub const OMEGA_2: f64 = PI;

/// Radius schedule and Monte Carlo budget for trace estimation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceConfig {
    /// Largest radius relative to the local feature size.
    #[serde(default = "default_r0")]
    pub r0: f64,
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default = "default_samples")]
    pub samples_per_radius: usize,
    pub seed: u64,
}

fn default_r0() -> f64 {
    0.1
}

fn default_levels() -> usize {
    6
}

fn default_samples() -> usize {
    200_000
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self {
            r0: default_r0(),
            levels: default_levels(),
            samples_per_radius: default_samples(),
            seed: 42,
        }
    }
}

impl TraceConfig {
    /// `r0 · feature · 2^{−k}` for `k = 0..levels`.
    pub fn radii(&self, feature: f64) -> Vec<f64> {
        (0..self.levels)
            .map(|k| self.r0 * feature * 0.5f64.powi(k as i32))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceFlag {
    Ok,
    /// The fit did not settle; the reported value is 0.
    LimitUnstable,
}

impl TraceFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceFlag::Ok => "ok",
            TraceFlag::LimitUnstable => "limit_unstable",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEstimate {
    pub point: Vec3,
    pub inner_normal: Vec3,
    /// Strictly decreasing radii (or mollification widths).
    pub radii: Vec<f64>,
    pub values: Vec<Vec3>,
    pub value_errors: Vec<f64>,
    pub extrapolated: Vec3,
    pub std_error: f64,
    /// `|extrapolated · inner_normal|`.
    pub tangential_defect: f64,
    pub flag: TraceFlag,
}

/// `∫_{B(x,ν,r)} F(y) × (y−x)/|y−x| dy`.
///
/// Each draw is expanded into four points: the tangential part of the
/// direction is reflected and `cos θ` (uniform on `[0, 1)`) is mirrored to
/// `1 − cos θ`, so a constant field is integrated exactly.
pub fn half_ball_integral(
    field: &VectorField,
    x: Vec3,
    nu: Vec3,
    r: f64,
    samples: usize,
    seed: u64,
) -> Result<Estimate<Vec3>> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("radius {r} must be positive")));
    }
    if !field.domain.contains_ball(x, r) {
        return Err(Error::OutsideDomain { center: x, radius: r });
    }
    let (t1, t2) = nu.tangent_frame();
    let volume = 2.0 / 3.0 * PI * r.powi(3);
    let est = integrate((samples / 4).max(1), seed, tags::HALF_BALL, |u| {
        let s = r * u[0].cbrt();
        let mut acc = Vec3::ZERO;
        for cos_theta in [u[1], 1.0 - u[1]] {
            let (axial, tangential) = split_direction(cos_theta, TAU * u[2], t1, t2, nu);
            for d in [axial + tangential, axial - tangential] {
                acc += field.eval(x + d * s)?.cross(d);
            }
        }
        Ok(acc * 0.25)
    })?;
    Ok(est.scale(volume))
}

/// Result of the linear-in-`r` limit fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrapolation {
    pub value: Vec3,
    /// Fit-residual error of the intercept.
    pub error: f64,
    /// Intercept weights applied to per-level errors (`Σ|w_k| σ_k`).
    pub propagated: f64,
    pub unstable: bool,
}

fn check_levels(radii: &[f64], n_values: usize) -> Result<()> {
    let n = radii.len();
    if n < 3 || n_values != n {
        return Err(Error::InsufficientLevels(n.min(n_values)));
    }
    let decreasing = radii.windows(2).all(|w| w[1] < w[0]);
    if !decreasing || radii.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
        return Err(Error::InsufficientLevels(n));
    }
    Ok(())
}

/// Level spreads below this (relative) are round-off, not a trend.
const ROUNDOFF_SPREAD: f64 = 1e-12;

/// Componentwise least-squares fit of `q + c·r`, returning the intercept.
pub fn richardson_fit(radii: &[f64], values: &[Vec3], sigmas: &[f64]) -> Result<Extrapolation> {
    check_levels(radii, values.len())?;
    let n = radii.len() as f64;
    if values.iter().any(|v| !v.is_finite()) {
        return Ok(Extrapolation {
            value: Vec3::ZERO,
            error: 0.0,
            propagated: 0.0,
            unstable: true,
        });
    }
    let lo = values.iter().fold(Vec3::splat(f64::INFINITY), |a, &v| a.component_min(v));
    let hi = values.iter().fold(Vec3::splat(f64::NEG_INFINITY), |a, &v| a.component_max(v));
    let spread = (hi - lo).norm();
    let propagated_of = |w: &dyn Fn(usize) -> f64| -> f64 {
        sigmas.iter().enumerate().map(|(k, s)| w(k).abs() * s).sum()
    };
    let last = values.len() - 1;
    let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if spread <= ROUNDOFF_SPREAD * (1.0 + scale) {
        return Ok(Extrapolation {
            value: values[last],
            error: spread,
            propagated: propagated_of(&|k| if k == last { 1.0 } else { 0.0 }),
            unstable: false,
        });
    }
    let r_mean = radii.iter().sum::<f64>() / n;
    let sxx: f64 = radii.iter().map(|r| (r - r_mean).powi(2)).sum();
    let v_mean = values.iter().copied().sum::<Vec3>() / n;
    let slope = radii
        .iter()
        .zip(values)
        .map(|(&r, &v)| (v - v_mean) * (r - r_mean))
        .sum::<Vec3>()
        / sxx;
    let intercept = v_mean - slope * r_mean;
    let mut sse = Vec3::ZERO;
    let mut max_resid: f64 = 0.0;
    for (&r, &v) in radii.iter().zip(values) {
        let e = v - (intercept + slope * r);
        sse += e.map(|c| c * c);
        max_resid = max_resid.max(e.norm());
    }
    let lever = (1.0 / n + r_mean * r_mean / sxx).sqrt();
    let error = (sse / (n - 2.0)).map(f64::sqrt).norm() * lever;
    if max_resid > 10.0 * spread {
        return Ok(Extrapolation {
            value: Vec3::ZERO,
            error,
            propagated: 0.0,
            unstable: true,
        });
    }
    if max_resid > spread {
        return Ok(Extrapolation {
            value: values[last],
            error: spread,
            propagated: propagated_of(&|k| if k == last { 1.0 } else { 0.0 }),
            unstable: false,
        });
    }
    let weight = |k: usize| 1.0 / n - r_mean * (radii[k] - r_mean) / sxx;
    Ok(Extrapolation {
        value: intercept,
        error,
        propagated: propagated_of(&weight),
        unstable: false,
    })
}

/// Intercept of the linear fit and its residual-based error.
pub fn richardson_extrapolate(radii: &[f64], values: &[Vec3]) -> Result<(Vec3, f64)> {
    let fit = richardson_fit(radii, values, &[])?;
    Ok((fit.value, fit.error))
}

fn assemble(point: Vec3, nu: Vec3, radii: &[f64], values: Vec<Vec3>, errors: Vec<f64>) -> Result<TraceEstimate> {
    let fit = richardson_fit(radii, &values, &errors)?;
    let flag = if fit.unstable {
        TraceFlag::LimitUnstable
    } else {
        TraceFlag::Ok
    };
    Ok(TraceEstimate {
        point,
        inner_normal: nu,
        radii: radii.to_vec(),
        values,
        value_errors: errors,
        extrapolated: fit.value,
        std_error: fit.error.hypot(fit.propagated),
        tangential_defect: fit.value.dot(nu).abs(),
        flag,
    })
}

fn one_side(
    field: &VectorField,
    set: &FinitePerimeterSet,
    x: Vec3,
    radii: &[f64],
    cfg: &TraceConfig,
    exterior: bool,
) -> Result<TraceEstimate> {
    let nu = set.inner_normal(x)?;
    check_levels(radii, radii.len())?;
    let (axis, sign) = if exterior { (-nu, -1.0) } else { (nu, 1.0) };
    let mut values = Vec::with_capacity(radii.len());
    let mut errors = Vec::with_capacity(radii.len());
    for &r in radii {
        // same seed at every radius: common random numbers
        let est = half_ball_integral(field, x, axis, r, cfg.samples_per_radius, cfg.seed)?
            .scale(sign * 3.0 / (OMEGA_2 * r.powi(3)));
        values.push(est.value);
        errors.push(est.std_error);
    }
    assemble(x, nu, radii, values, errors)
}

/// Interior trace `(F_i × ν)(x)`.
pub fn interior_trace_at(
    field: &VectorField,
    set: &FinitePerimeterSet,
    x: Vec3,
    radii: &[f64],
    cfg: &TraceConfig,
) -> Result<TraceEstimate> {
    one_side(field, set, x, radii, cfg, false)
}

/// Exterior trace `(F_e × ν)(x)`; equals `F_out(x) × ν(x)` for fields that
/// are continuous up to the boundary from outside.
pub fn exterior_trace_at(
    field: &VectorField,
    set: &FinitePerimeterSet,
    x: Vec3,
    radii: &[f64],
    cfg: &TraceConfig,
) -> Result<TraceEstimate> {
    one_side(field, set, x, radii, cfg, true)
}

fn same_location(a: &TraceEstimate, b: &TraceEstimate) -> Result<()> {
    if a.point != b.point || a.inner_normal != b.inner_normal {
        return Err(Error::PointMismatch);
    }
    Ok(())
}

/// `q₀ = ½(F_i × ν + F_e × ν)`.
pub fn mean_trace_q0(interior: &TraceEstimate, exterior: &TraceEstimate) -> Result<Vec3> {
    same_location(interior, exterior)?;
    Ok((interior.extrapolated + exterior.extrapolated) * 0.5)
}

/// `q₂ = F_e × ν − F_i × ν`.
pub fn jump_from_traces(interior: &TraceEstimate, exterior: &TraceEstimate) -> Result<Vec3> {
    same_location(interior, exterior)?;
    Ok(exterior.extrapolated - interior.extrapolated)
}

/// Limit of `F_ε(x) × ν(x)` over a decreasing ε schedule.
pub fn mollified_boundary_trace(
    field: &VectorField,
    set: &FinitePerimeterSet,
    x: Vec3,
    eps_schedule: &[f64],
    samples: usize,
    seed: u64,
) -> Result<TraceEstimate> {
    let nu = set.inner_normal(x)?;
    check_levels(eps_schedule, eps_schedule.len())?;
    let mut values = Vec::with_capacity(eps_schedule.len());
    let mut errors = Vec::with_capacity(eps_schedule.len());
    for &eps in eps_schedule {
        let est = mollify_field(field, eps, x, samples, seed)?;
        values.push(est.value.cross(nu));
        errors.push(est.std_error);
    }
    assemble(x, nu, eps_schedule, values, errors)
}

/// Least-squares slope of `log err` against `log r`.
pub fn empirical_order(radii: &[f64], errors: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = radii
        .iter()
        .zip(errors)
        .filter(|(r, e)| **r > 0.0 && **e > 0.0 && e.is_finite())
        .map(|(r, e)| (r.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (mx, my) = (
        pts.iter().map(|p| p.0).sum::<f64>() / n,
        pts.iter().map(|p| p.1).sum::<f64>() / n,
    );
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// One row of the per-point trace table.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub point: Vec3,
    pub inner_normal: Vec3,
    pub interior: Vec3,
    pub exterior: Vec3,
    pub q0: Vec3,
    pub jump: Vec3,
    pub defect_interior: f64,
    pub defect_exterior: f64,
    pub std_error: f64,
    pub flag: String,
}

impl TraceRow {
    pub const HEADER: &'static str = "point_x,point_y,point_z,nu_x,nu_y,nu_z,\
trace_i_x,trace_i_y,trace_i_z,trace_e_x,trace_e_y,trace_e_z,\
q0_x,q0_y,q0_z,jump_x,jump_y,jump_z,defect_i,defect_e,stderr,flag";

    pub fn from_estimates(interior: &TraceEstimate, exterior: &TraceEstimate) -> Result<Self> {
        let flag = if interior.flag == TraceFlag::Ok && exterior.flag == TraceFlag::Ok {
            TraceFlag::Ok
        } else {
            TraceFlag::LimitUnstable
        };
        Ok(Self {
            point: interior.point,
            inner_normal: interior.inner_normal,
            interior: interior.extrapolated,
            exterior: exterior.extrapolated,
            q0: mean_trace_q0(interior, exterior)?,
            jump: jump_from_traces(interior, exterior)?,
            defect_interior: interior.tangential_defect,
            defect_exterior: exterior.tangential_defect,
            std_error: interior.std_error.hypot(exterior.std_error),
            flag: flag.as_str().into(),
        })
    }

    /// Row for a point where estimation failed.
    pub fn failed(point: Vec3, err: &Error) -> Self {
        let nan = Vec3::splat(f64::NAN);
        Self {
            point,
            inner_normal: nan,
            interior: nan,
            exterior: nan,
            q0: nan,
            jump: nan,
            defect_interior: f64::NAN,
            defect_exterior: f64::NAN,
            std_error: f64::NAN,
            flag: error_flag(err).into(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut cells: Vec<String> = Vec::with_capacity(22);
        for v in [self.point, self.inner_normal, self.interior, self.exterior, self.q0, self.jump] {
            cells.extend(v.to_array().into_iter().map(format_float));
        }
        cells.extend([self.defect_interior, self.defect_exterior, self.std_error].map(format_float));
        cells.push(self.flag.clone());
        cells.join(",")
    }
}

/// Short machine-readable name of an error for the flag column.
pub fn error_flag(err: &Error) -> &'static str {
    match err {
        Error::EdgePoint(_) => "edge_point",
        Error::NotOnBoundary(_) => "not_on_boundary",
        Error::OutsideDomain { .. } => "outside_domain",
        Error::RedrawExhausted => "redraw_exhausted",
        Error::InsufficientLevels(_) => "insufficient_levels",
        _ => "error",
    }
}

/// Shortest round-trip decimal, with `-0` printed as `0`.
pub fn format_float(v: f64) -> String {
    if v == 0.0 {
        "0.0".into()
    } else {
        format!("{v:?}")
    }
}

/// Interior and exterior traces at `points`, each with its own seed.
pub fn trace_table(
    field: &VectorField,
    set: &FinitePerimeterSet,
    points: &[Vec3],
    cfg: &TraceConfig,
) -> Vec<std::result::Result<(TraceEstimate, TraceEstimate), (Vec3, Error)>> {
    use rayon::prelude::*;
    points
        .par_iter()
        .enumerate()
        .map(|(i, &x)| {
            let point_cfg = TraceConfig {
                seed: derive_seed(cfg.seed, &[tags::POINT, i as u64]),
                ..*cfg
            };
            let radii = cfg.radii(set.local_feature_size(x));
            let run = || -> Result<(TraceEstimate, TraceEstimate)> {
                Ok((
                    interior_trace_at(field, set, x, &radii, &point_cfg)?,
                    exterior_trace_at(field, set, x, &radii, &point_cfg)?,
                ))
            };
            run().map_err(|e| (x, e))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{golden_ball, golden_half_space};
    use proptest::prelude::*;

    fn cfg(samples: usize) -> TraceConfig {
        TraceConfig {
            samples_per_radius: samples,
            ..TraceConfig::default()
        }
    }

    #[test]
    fn constant_field_half_ball() {
        let c = Vec3::new(0.4, -1.0, 0.7);
        let nu = Vec3::new(1.0, 2.0, 2.0).normalize();
        let f = VectorField::constant(c);
        for r in [0.5, 0.1] {
            let est = half_ball_integral(&f, Vec3::ZERO, nu, r, 20_000, 1).unwrap();
            let expected = c.cross(nu) * (PI * r.powi(3) / 3.0);
            assert!((est.value - expected).norm() < 1e-12, "{est:?}");
        }
        let zero = half_ball_integral(&VectorField::zero(), Vec3::ZERO, nu, 0.3, 100, 1).unwrap();
        assert_eq!(zero.value, Vec3::ZERO);
    }

    #[test]
    fn unit_radial_integral() {
        // ∫ over the half-ball of the unit radial field about x is (π r³/3) ν;
        // check via F = e_i so that F × u recovers components of ∫u
        let nu = Vec3::Z;
        let r = 0.7;
        let e = half_ball_integral(&VectorField::constant(Vec3::X), Vec3::ZERO, nu, r, 20_000, 2).unwrap();
        // X × ∫u = X × (π r³/3) Z = −(π r³/3) Y
        assert!((e.value + Vec3::Y * (PI * r.powi(3) / 3.0)).norm() < 1e-12);
    }

    #[test]
    fn richardson_exact_cases() {
        let radii = [0.1, 0.05, 0.025, 0.0125];
        let c = Vec3::new(1.0, -2.0, 0.5);
        let (v, e) = richardson_extrapolate(&radii, &[c; 4]).unwrap();
        assert_eq!((v, e), (c, 0.0));
        let slope = Vec3::new(3.0, 0.0, -1.0);
        let vals: Vec<Vec3> = radii.iter().map(|&r| c + slope * r).collect();
        let (v, e) = richardson_extrapolate(&radii, &vals).unwrap();
        assert!((v - c).norm() < 1e-12 && e <= 1e-12, "{v:?} {e}");
    }

    #[test]
    fn richardson_rejects_bad_levels() {
        let v = [Vec3::ZERO; 3];
        assert_eq!(richardson_extrapolate(&[0.1, 0.05], &v[..2]), Err(Error::InsufficientLevels(2)));
        assert!(richardson_extrapolate(&[0.1, 0.1, 0.05], &v).is_err());
        assert!(richardson_extrapolate(&[0.05, 0.1, 0.2], &v).is_err());
    }

    #[test]
    fn richardson_flags_non_finite() {
        let radii = [0.1, 0.05, 0.025];
        let vals = [Vec3::X, Vec3::splat(f64::NAN), Vec3::X];
        let fit = richardson_fit(&radii, &vals, &[]).unwrap();
        assert!(fit.unstable);
        assert_eq!(fit.value, Vec3::ZERO);
    }

    #[test]
    fn richardson_roundoff_is_not_a_trend() {
        let radii = [0.1, 0.05, 0.025, 0.0125];
        let c = Vec3::new(0.0, -0.577, 0.577);
        let vals = [c, c + Vec3::splat(1e-17), c - Vec3::splat(2e-17), c];
        let fit = richardson_fit(&radii, &vals, &[]).unwrap();
        assert!(!fit.unstable);
        assert_eq!(fit.value, c);
        assert!(fit.error < 1e-15);
    }

    #[test]
    fn richardson_noisy_synthetic() {
        // synthetic data with known intercept; the estimate must land within
        // 3σ times the intercept lever factor
        use rand::Rng;
        let radii: Vec<f64> = (0..6).map(|k| 0.1 * 0.5f64.powi(k)).collect();
        let q = Vec3::new(0.2, -0.4, 1.0);
        let c = Vec3::new(2.0, 1.0, -3.0);
        let sigma = 1e-3;
        let n = radii.len() as f64;
        let mean = radii.iter().sum::<f64>() / n;
        let sxx: f64 = radii.iter().map(|r| (r - mean).powi(2)).sum();
        let lever = (1.0 / n + mean * mean / sxx).sqrt();
        let mut rng = crate::sampling::stream(77, 0, 0);
        for _ in 0..50 {
            let vals: Vec<Vec3> = radii
                .iter()
                .map(|&r| {
                    let noise = Vec3::new(
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                    ) * (sigma * 3f64.sqrt());
                    q + c * r + noise
                })
                .collect();
            let (v, _) = richardson_extrapolate(&radii, &vals).unwrap();
            assert!((v - q).max_abs() <= 3.0 * sigma * lever * 3f64.sqrt(), "{v:?}");
        }
    }

    #[test]
    fn half_space_traces() {
        let s = golden_half_space(Vec3::X, Vec3::Y);
        let x = Vec3::new(0.5, -0.3, 0.0);
        let radii = cfg(2000).radii(2.0);
        let i = interior_trace_at(&s.field, &s.set, x, &radii, &cfg(2000)).unwrap();
        let e = exterior_trace_at(&s.field, &s.set, x, &radii, &cfg(2000)).unwrap();
        assert!((i.extrapolated - Vec3::new(0.0, -1.0, 0.0)).norm() < 1e-12);
        assert!((e.extrapolated - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-12);
        assert!((jump_from_traces(&i, &e).unwrap() - Vec3::new(1.0, 1.0, 0.0)).norm() < 1e-12);
        assert!((mean_trace_q0(&i, &e).unwrap() - Vec3::new(0.5, -0.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn ball_traces_at_equator() {
        let s = golden_ball();
        let c = cfg(40_000);
        let radii = c.radii(1.0);
        let i = interior_trace_at(&s.field, &s.set, Vec3::X, &radii, &c).unwrap();
        let e = exterior_trace_at(&s.field, &s.set, Vec3::X, &radii, &c).unwrap();
        assert!((i.extrapolated - Vec3::Z).norm() < 2e-2, "{i:?}");
        assert!((e.extrapolated - Vec3::Z * 2.0).norm() < 2e-2, "{e:?}");
        assert!((mean_trace_q0(&i, &e).unwrap() - Vec3::Z * 1.5).norm() < 2e-2);
    }

    #[test]
    fn mismatched_points_rejected() {
        let s = golden_half_space(Vec3::X, Vec3::Y);
        let c = cfg(200);
        let radii = c.radii(2.0);
        let a = interior_trace_at(&s.field, &s.set, Vec3::ZERO, &radii, &c).unwrap();
        let b = exterior_trace_at(&s.field, &s.set, Vec3::X, &radii, &c).unwrap();
        assert_eq!(mean_trace_q0(&a, &b), Err(Error::PointMismatch));
        assert_eq!(jump_from_traces(&a, &b), Err(Error::PointMismatch));
    }

    #[test]
    fn mollified_trace_half_space_and_pole() {
        let s = golden_half_space(Vec3::X, Vec3::Y);
        let eps: Vec<f64> = (0..7).map(|k| 0.4 * 0.5f64.powi(k)).collect();
        let t = mollified_boundary_trace(&s.field, &s.set, Vec3::ZERO, &eps, 4000, 3).unwrap();
        assert!((t.extrapolated - Vec3::new(0.5, -0.5, 0.0) * 1.0).norm() < 1e-12, "{t:?}");
        let b = golden_ball();
        let eps: Vec<f64> = (0..7).map(|k| 0.2 * 0.5f64.powi(k)).collect();
        let t = mollified_boundary_trace(&b.field, &b.set, Vec3::Z, &eps, 40_000, 3).unwrap();
        assert!(t.extrapolated.norm() < 2e-2, "{t:?}");
    }

    #[test]
    fn csv_row_format() {
        assert_eq!(format_float(-0.0), "0.0");
        assert_eq!(format_float(0.1), "0.1");
        assert_eq!(format_float(1e-20), "1e-20");
        let row = TraceRow::failed(Vec3::ZERO, &Error::EdgePoint(Vec3::ZERO));
        let line = row.to_csv();
        assert_eq!(line.split(',').count(), TraceRow::HEADER.split(',').count());
        assert!(line.ends_with("edge_point"));
    }

    proptest! {
        #[test]
        fn constant_field_normalization(
            cx in -2.0f64..2.0, cy in -2.0f64..2.0, cz in -2.0f64..2.0,
            theta in 0.0f64..PI, phi in 0.0f64..TAU, r in 0.01f64..1.0,
        ) {
            let c = Vec3::new(cx, cy, cz);
            let nu = Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos());
            let est = half_ball_integral(&VectorField::constant(c), Vec3::ZERO, nu, r, 200, 4).unwrap()
                .scale(3.0 / (OMEGA_2 * r.powi(3)));
            prop_assert!((est.value - c.cross(nu)).norm() <= 3.0 * est.std_error + 1e-12);
        }

        #[test]
        fn exact_linear_model(q in -5.0f64..5.0, c in -5.0f64..5.0) {
            let radii: Vec<f64> = (0..6).map(|k| 0.2 * 0.5f64.powi(k)).collect();
            let vals: Vec<Vec3> = radii.iter().map(|&r| Vec3::splat(q + c * r)).collect();
            let (v, e) = richardson_extrapolate(&radii, &vals).unwrap();
            prop_assert!((v - Vec3::splat(q)).max_abs() <= 1e-12);
            prop_assert!(e <= 1e-12);
        }
    }
}
