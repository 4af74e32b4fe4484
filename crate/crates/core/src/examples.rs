//! The three published 2π-periodic example systems and their reported orbits.

use std::f64::consts::TAU;

use crate::coeff::{CoefficientSet, SystemVariant};

/// Published initial values and periodicity-defect bound of an example orbit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublishedOrbit {
    pub x0: f64,
    pub y0: f64,
    pub defect_bound: f64,
}

/// Holling–Tanner (S2) example.
pub fn example1() -> CoefficientSet {
    CoefficientSet::parse(
        SystemVariant::S2,
        TAU,
        &[
            ("rho", "1+sin(5*t)"),
            ("kappa", "2+sin(t)"),
            ("mu", "1+cos(3*t)"),
            ("alpha", "2-cos(3*t)"),
            ("sigma", "1-cos(7*t)"),
            ("eta", "1-sin(t)"),
        ],
    )
    .expect("example 1 is well formed")
}

/// Type-3 response (S3) example.
pub fn example2() -> CoefficientSet {
    CoefficientSet::parse(
        SystemVariant::S3,
        TAU,
        &[
            ("rho", "1+sin(t)"),
            ("kappa", "2+sin(2*t)"),
            ("mu", "2+cos(3*t)"),
            ("alpha", "2+cos(2*t)"),
            ("beta", "2-cos(3*t)"),
            ("sigma", "1+cos(t)"),
            ("eta", "1-sin(t)"),
        ],
    )
    .expect("example 2 is well formed")
}

/// Leslie–Gower (S1) example.
pub fn example3() -> CoefficientSet {
    CoefficientSet::parse(
        SystemVariant::S1,
        TAU,
        &[
            ("rho", "1+sin(2*t)"),
            ("kappa", "2+sin(5*t)"),
            ("mu", "1+cos(3*t)"),
            ("sigma", "1-cos(t)"),
            ("eta", "1-sin(t)"),
        ],
    )
    .expect("example 3 is well formed")
}

pub fn published(id: &str) -> Option<PublishedOrbit> {
    Some(match id {
        "example1" => PublishedOrbit { x0: 0.8416874693971644, y0: 0.5259233975099778, defect_bound: 1.5096e-11 },
        "example2" => PublishedOrbit { x0: 0.6406510789582541, y0: 0.4091984714503302, defect_bound: 3.1943e-11 },
        "example3" => PublishedOrbit { x0: 0.6504022496685088, y0: 0.3825388660004428, defect_bound: 3.3083e-11 },
        _ => return None,
    })
}

/// Looks up a built-in example by id (`example1`, `example2`, `example3`).
pub fn by_id(id: &str) -> Option<CoefficientSet> {
    match id {
        "example1" => Some(example1()),
        "example2" => Some(example2()),
        "example3" => Some(example3()),
        _ => None,
    }
}

pub fn all() -> Vec<(&'static str, CoefficientSet)> {
    vec![("example1", example1()), ("example2", example2()), ("example3", example3())]
}
