use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::builtin;
use crate::dynamics::{flow_point, hamiltonian_field, FlowIntegrator, PlanarVectorField};
use crate::error::{Error, Result};
use crate::fields::find_critical_points;
use crate::geometry::SurfacePoint;
use crate::math::{Mat2, Vec2};

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioCheck {
    pub description: String,
    pub value: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl ScenarioCheck {
    pub fn new(description: impl Into<String>, value: f64, expected: f64, tolerance: f64) -> Self {
        let passed = (value - expected).abs() <= tolerance;
        ScenarioCheck { description: description.into(), value, expected, tolerance, passed }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioResult {
    pub name: String,
    pub checks: Vec<ScenarioCheck>,
    /// Files written for the scenario (filled in by callers that write any).
    pub artifacts: Vec<String>,
    pub conclusion: String,
}

impl ScenarioResult {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

const FLOW_SAMPLES: usize = 100;
const TANGENT_TIMES: [f64; 3] = [0.5, 1.0, 2.0];
const TANGENT_STEP: f64 = 1e-4;

/// Central-difference tangent map of the time-`t` flow at the origin.
fn tangent_at_origin(v: &PlanarVectorField, t: f64, integ: &FlowIntegrator) -> Result<Mat2> {
    let o = SurfacePoint::new(0, 0.0, 0.0);
    let column = |e: Vec2| -> Result<Vec2> {
        let plus = flow_point(v, &o.with_pos(e * TANGENT_STEP), t, integ)?;
        let minus = flow_point(v, &o.with_pos(e * -TANGENT_STEP), t, integ)?;
        Ok((plus.pos - minus.pos) * (0.5 / TANGENT_STEP))
    };
    Ok(Mat2::from_columns(column(Vec2::new(1.0, 0.0))?, column(Vec2::new(0.0, 1.0))?))
}

/// `f = |z|²` and `g = |z|⁴` on the unit disk: `G = 2|z|²·F`, the flow of `F`
/// rotates by `2t`, while every map `G_α` is tangent to the identity at `0`.
/// So the rotation `F_{0.5}` is not of the form `G_α`.
///
/// `resolution` is the grid used to locate the critical points, `steps` the
/// number of integration steps per unit time.
pub fn run_counterexample_disk(resolution: f64, steps: usize) -> Result<ScenarioResult> {
    if steps == 0 || !(resolution > 0.0) {
        return Err(Error::InvalidParams(format!("resolution {resolution}, steps {steps}")));
    }
    let surface = Arc::new(builtin::unit_disk());
    let form = builtin::standard_form(&surface);
    let f = builtin::r2_field();
    let g = builtin::r4_field();
    let big_f = hamiltonian_field(&f, &form, surface.clone());
    let big_g = hamiltonian_field(&g, &form, surface.clone());
    let integ = FlowIntegrator::default().with_step(1.0 / steps as f64).with_max_time(20.0);
    let mut checks = Vec::new();

    // (a) F_t(z) = e^{2it} z
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut samples = Vec::with_capacity(FLOW_SAMPLES);
    samples.push((Vec2::new(1.0, 0.0), core::f64::consts::FRAC_PI_4));
    while samples.len() < FLOW_SAMPLES {
        let z = surface.sample_point(&mut rng, 0.0).pos;
        samples.push((z, rng.gen_range(-10.0..=10.0)));
    }
    let mut flow_error: f64 = 0.0;
    for &(z, t) in &samples {
        let y = flow_point(&big_f, &SurfacePoint::new(0, z.x, z.y), t, &integ)?;
        let (s, c) = (2.0 * t).sin_cos();
        let exact = Vec2::new(c * z.x - s * z.y, s * z.x + c * z.y);
        flow_error = flow_error.max((y.pos - exact).norm());
    }
    checks.push(ScenarioCheck::new("(a) flow of F equals e^{2it}z at 100 samples", flow_error, 0.0, 1e-6));

    // (b) T₀G_t = I
    for &t in &TANGENT_TIMES {
        let d = tangent_at_origin(&big_g, t, &integ)?.sub(&Mat2::IDENTITY).spectral_norm();
        checks.push(ScenarioCheck::new(format!("(b) |T0 G_{t} - I|"), d, 0.0, 1e-5));
    }

    // (c) T₀F_{0.5} is the rotation by 1 rad, at spectral distance 2 sin(1/2) from I.
    let d = tangent_at_origin(&big_f, 0.5, &integ)?.sub(&Mat2::IDENTITY).spectral_norm();
    let expected = 2.0 * 0.5f64.sin();
    checks.push(ScenarioCheck::new("(c) |T0 F_0.5 - I|", d, expected, 1e-5));

    let crits_f = find_critical_points(&f, &surface, resolution, 1e-10)?.points;
    let crits_g = find_critical_points(&g, &surface, resolution, 1e-10)?.points;
    let describe = |c: &[crate::fields::CriticalPoint]| -> String {
        c.iter()
            .map(|p| {
                let kind = if p.kind.is_nondegenerate() { "nondegenerate" } else { "degenerate" };
                format!("{kind} at ({:.3}, {:.3})", p.position.pos.x, p.position.pos.y)
            })
            .collect::<Vec<_>>()
            .join(", ")
    };
    let separated = d >= 0.5 && checks.iter().all(|c| c.passed);
    let conclusion = if separated {
        format!(
            "f = |z|^2 has critical points [{}], g = |z|^4 has [{}]. Every shift map G_alpha is tangent to the identity at 0, \
             but T0 F_0.5 is a rotation by 1 rad (distance {d:.6} from I), so F_0.5 is not G_alpha for any alpha: \
             the shift map of G is not onto.",
            describe(&crits_f),
            describe(&crits_g)
        )
    } else {
        String::from("checks failed; no conclusion")
    };
    Ok(ScenarioResult { name: String::from("counterexample-disk"), checks, artifacts: Vec::new(), conclusion })
}
