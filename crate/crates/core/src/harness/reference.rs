//! Closed-form reference stress fields.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Reference {
    /// Hanging bar under self-weight, `y` pointing down from the clamp:
    /// `σyy = ρ g (l - y)`, `σxx = σxy = 0`.
    Bar { rho: f64, g: f64, l: f64 },
    /// Simply supported beam of half-length `l` and half-height `c` with
    /// uniform load `w` on the face `y = -c`.
    Beam { w: f64, l: f64, c: f64 },
}

impl Reference {
    pub fn stress(&self, x: f64, y: f64) -> [f64; 3] {
        match *self {
            Reference::Bar { rho, g, l } => [0.0, rho * g * (l - y), 0.0],
            Reference::Beam { w, l, c } => {
                let c3 = c * c * c;
                let sxx = 3.0 * w / (4.0 * c) * (l * l / (c * c) - 0.4) * y
                    - 3.0 * w / (4.0 * c3) * (x * x * y - 2.0 / 3.0 * y * y * y);
                let syy = -0.5 * w + 3.0 * w / (4.0 * c) * y - w / (4.0 * c3) * y * y * y;
                let sxy = -3.0 * w / (4.0 * c) * x + 3.0 * w / (4.0 * c3) * x * y * y;
                [sxx, syy, sxy]
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Reference::Bar { .. } => "bar",
            Reference::Beam { .. } => "beam",
        }
    }
}

/// Reference stress of a case, or [`Error::ReferenceUnavailable`].
pub fn reference_stress(case: &str, reference: Option<&Reference>, x: f64, y: f64) -> Result<[f64; 3]> {
    reference
        .map(|r| r.stress(x, y))
        .ok_or_else(|| Error::ReferenceUnavailable(case.to_string()))
}
