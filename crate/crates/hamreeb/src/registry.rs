//! Built-in surfaces, fields, area forms and involutions, looked up by name.

use std::sync::Arc;

use hamreeb_core::builtin;
use hamreeb_core::fields::ScalarField;
use hamreeb_core::function::Polynomial;
use hamreeb_core::geometry::{make_model_surface, AreaForm, SurfaceModel, SurfaceSpec};
use hamreeb_core::obstruction::Involution;
use hamreeb_core::Vec2;

use crate::InputError;

pub const SURFACES: &[&str] = &["disk", "annulus", "torus", "sphere", "twowell"];
pub const FIELDS: &[&str] = &["r2", "r4", "r4-declared", "twowell", "angular", "torus-height", "torus-circle", "sphere-height"];
pub const FORMS: &[&str] = &["standard", "tilted", "tilted:<slope>", "radial-bump", "quadratic", "constant:<c>"];

/// Parameters of a model surface, in a form that can be written out and read back.
#[derive(Clone, Debug, PartialEq)]
pub enum SurfaceDesc {
    Disk { radius: f64 },
    Annulus { period: f64, height: f64 },
    FlatTorus { periods: (f64, f64) },
    Sphere,
    PlanarSublevel { poly: Vec<(u32, u32, f64)>, level: f64, center: Vec2 },
}

impl SurfaceDesc {
    pub fn kind(&self) -> &'static str {
        match self {
            SurfaceDesc::Disk { .. } => "Disk",
            SurfaceDesc::Annulus { .. } => "Annulus",
            SurfaceDesc::FlatTorus { .. } => "FlatTorus",
            SurfaceDesc::Sphere => "Sphere",
            SurfaceDesc::PlanarSublevel { .. } => "PlanarSublevel",
        }
    }

    pub fn spec(&self) -> SurfaceSpec {
        match self {
            SurfaceDesc::Disk { radius } => SurfaceSpec::Disk { radius: *radius },
            SurfaceDesc::Annulus { period, height } => SurfaceSpec::Annulus { period: *period, height: *height },
            SurfaceDesc::FlatTorus { periods } => SurfaceSpec::FlatTorus { periods: *periods },
            SurfaceDesc::Sphere => SurfaceSpec::Sphere,
            SurfaceDesc::PlanarSublevel { poly, level, center } => {
                SurfaceSpec::PlanarSublevel { g: Arc::new(Polynomial::new(poly.iter().copied())), level: *level, center: *center }
            }
        }
    }

    pub fn build(&self) -> Result<SurfaceModel, InputError> {
        make_model_surface(self.spec()).map_err(|e| InputError::new(format!("surface {}: {e}", self.kind())))
    }
}

pub fn surface_desc(name: &str) -> Result<SurfaceDesc, InputError> {
    Ok(match name {
        "disk" => SurfaceDesc::Disk { radius: 1.0 },
        "annulus" => SurfaceDesc::Annulus { period: 1.0, height: 1.0 },
        "torus" => SurfaceDesc::FlatTorus { periods: (1.0, 1.0) },
        "sphere" => SurfaceDesc::Sphere,
        "twowell" | "twowell-domain" => {
            SurfaceDesc::PlanarSublevel { poly: builtin::twowell_poly().terms().to_vec(), level: 2.0, center: Vec2::ZERO }
        }
        _ => return Err(InputError::unknown("surface", name, SURFACES)),
    })
}

/// Field used when none is named.
pub fn default_field(surface: &str) -> &'static str {
    match surface {
        "annulus" => "angular",
        "torus" => "torus-height",
        "sphere" => "sphere-height",
        "twowell" | "twowell-domain" => "twowell",
        _ => "r2",
    }
}

pub fn field(name: &str) -> Result<ScalarField, InputError> {
    Ok(match name {
        "r2" => builtin::r2_field(),
        "r4" => builtin::r4_field(),
        "r4-declared" => builtin::r4_field_declared(),
        "twowell" => builtin::twowell_field(),
        "angular" => builtin::angular_field(),
        "torus-height" => builtin::torus_height_field(),
        "torus-circle" => builtin::torus_circle_field(),
        "sphere-height" => builtin::sphere_height_field(),
        _ => return Err(InputError::unknown("field", name, FIELDS)),
    })
}

/// Slope of the `tilted` form when none is given.
pub const DEFAULT_TILT: f64 = 0.5;

/// Area form by name; `standard` is the surface's own (round on the sphere).
pub fn form(name: &str, surface: &SurfaceModel) -> Result<AreaForm, InputError> {
    let number = |s: &str| s.parse::<f64>().map_err(|_| InputError::new(format!("form {name}: {s:?} is not a number")));
    Ok(match name.split_once(':') {
        Some(("tilted", s)) => builtin::tilted_form(number(s)?),
        Some(("constant", s)) => {
            let c = number(s)?;
            if !(c > 0.0) {
                return Err(InputError::new(format!("form {name}: density must be positive")));
            }
            builtin::constant_form(c)
        }
        Some(_) => return Err(InputError::unknown("form", name, FORMS)),
        None => match name {
            "standard" => builtin::standard_form(surface),
            "tilted" => builtin::tilted_form(DEFAULT_TILT),
            "radial-bump" => builtin::radial_bump_form(),
            "quadratic" => builtin::quadratic_form(),
            _ => return Err(InputError::unknown("form", name, FORMS)),
        },
    })
}

pub fn involution(name: &str) -> Result<Involution, InputError> {
    Involution::by_name(name).ok_or_else(|| InputError::unknown("involution", name, &["identity", "negate"]))
}
