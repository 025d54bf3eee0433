//! Error norms, point location, profiles and the solve report.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::Model;
use crate::physics::{patch_rule, AssemblyOptions, StressSample};
use crate::quadrature::GaussLegendre;
use crate::solver::{SolveOptions, Solution};

use super::cases::CaseDefinition;

pub const COMPONENTS: [&str; 3] = ["sigma_xx", "sigma_yy", "sigma_xy"];

/// `(∫|σ - σref|² dΩ / ∫|σref|² dΩ)^½` per component, with the energy
/// assembly's patch quadrature.
pub fn l2_relative_errors(
    model: &Model,
    solution: &Solution,
    reference: impl Fn(f64, f64) -> [f64; 3],
    assembly: &AssemblyOptions,
) -> Result<[f64; 3]> {
    let (num, den) = l2_sums(model, solution, reference, assembly)?;
    let mut out = [0.0; 3];
    for c in 0..3 {
        if den[c] <= 0.0 {
            return Err(Error::ZeroReferenceNorm);
        }
        out[c] = (num[c] / den[c]).sqrt();
    }
    Ok(out)
}

/// Squared error and squared reference norms, `(∫|σ - σref|², ∫|σref|²)`.
pub fn l2_sums(
    model: &Model,
    solution: &Solution,
    reference: impl Fn(f64, f64) -> [f64; 3],
    assembly: &AssemblyOptions,
) -> Result<([f64; 3], [f64; 3])> {
    let mut num = [0.0; 3];
    let mut den = [0.0; 3];
    for (k, patch) in model.patches.iter().enumerate() {
        for (s, t, w) in patch_rule(patch, assembly.points(patch)) {
            let det = patch.mapping.jacobian(s, t)?.determinant().abs();
            let got = solution.stress(model, k, s, t)?;
            let want = reference(got.x, got.y);
            for c in 0..3 {
                num[c] += w * det * (got.sigma[c] - want[c]).powi(2);
                den[c] += w * det * want[c].powi(2);
            }
        }
    }
    Ok((num, den))
}

/// Relative L2 errors of a solved built-in case against its reference.
pub fn case_errors(def: &CaseDefinition, solution: &Solution, options: &SolveOptions) -> Result<[f64; 3]> {
    let reference = def
        .reference
        .ok_or_else(|| Error::ReferenceUnavailable(def.name.clone()))?;
    l2_relative_errors(&def.model, solution, |x, y| reference.stress(x, y), &options.assembly)
}

/// Patch and parametric coordinates of a physical point.
pub fn locate(model: &Model, x: f64, y: f64) -> Result<(usize, f64, f64)> {
    for (k, p) in model.patches.iter().enumerate() {
        if let Ok((xi, eta)) = p.mapping.inverse_point(x, y) {
            return Ok((k, xi, eta));
        }
    }
    Err(Error::OutsideMaterial { x, y })
}

pub fn stress_at_point(model: &Model, solution: &Solution, x: f64, y: f64) -> Result<StressSample> {
    let (k, xi, eta) = locate(model, x, y)?;
    solution.stress(model, k, xi, eta)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProfilePoint {
    pub patch: usize,
    pub xi: f64,
    pub eta: f64,
    pub x: f64,
    pub y: f64,
    pub sigma: [f64; 3],
}

/// Samples along the vertical line through `x`, `per_patch` evenly spaced
/// values of η in every patch the line crosses, ordered by `y`. Patches
/// sharing an interface each contribute their own one-sided value there.
pub fn vertical_profile(model: &Model, solution: &Solution, x: f64, per_patch: usize) -> Result<Vec<ProfilePoint>> {
    let per_patch = per_patch.max(2);
    let mut out = Vec::new();
    for (k, patch) in model.patches.iter().enumerate() {
        for i in 0..per_patch {
            let eta = i as f64 / (per_patch - 1) as f64;
            let f = |xi: f64| patch.mapping.map_point(xi, eta).map(|p| p.0 - x);
            let Some(xi) = bisect(f)? else { continue };
            let s = solution.stress(model, k, xi, eta)?;
            out.push(ProfilePoint {
                patch: k,
                xi,
                eta,
                x: s.x,
                y: s.y,
                sigma: s.sigma,
            });
        }
    }
    out.sort_by(|a, b| a.y.total_cmp(&b.y).then(a.patch.cmp(&b.patch)));
    Ok(out)
}

/// Root of `f` on `[0, 1]` if it changes sign there.
fn bisect(f: impl Fn(f64) -> Result<f64>) -> Result<Option<f64>> {
    let (mut a, mut b) = (0.0, 1.0);
    let (mut fa, fb) = (f(a)?, f(b)?);
    let scale = fa.abs().max(fb.abs()).max(1.0);
    if fa.abs() <= 1e-13 * scale {
        return Ok(Some(a));
    }
    if fb.abs() <= 1e-13 * scale {
        return Ok(Some(b));
    }
    if fa.signum() == fb.signum() {
        return Ok(None);
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if fm == 0.0 || b - a < 1e-15 {
            return Ok(Some(m));
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(Some(0.5 * (a + b)))
}

/// L2 norms along the segment `x = const`, `y ∈ [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineNorms {
    pub solution: [f64; 3],
    pub reference: [f64; 3],
    pub error: [f64; 3],
}

pub fn line_norms(
    model: &Model,
    solution: &Solution,
    x: f64,
    (y0, y1): (f64, f64),
    reference: impl Fn(f64, f64) -> [f64; 3],
) -> Result<LineNorms> {
    let rule = GaussLegendre::new(8);
    let pieces = 64;
    let h = (y1 - y0) / pieces as f64;
    let mut acc = [[0.0; 3]; 3];
    for k in 0..pieces {
        let a = y0 + k as f64 * h;
        for (y, w) in rule.on_interval(a, a + h) {
            let s = stress_at_point(model, solution, x, y)?.sigma;
            let r = reference(x, y);
            for c in 0..3 {
                acc[0][c] += w * s[c] * s[c];
                acc[1][c] += w * r[c] * r[c];
                acc[2][c] += w * (s[c] - r[c]).powi(2);
            }
        }
    }
    let sq = |v: [f64; 3]| [v[0].sqrt(), v[1].sqrt(), v[2].sqrt()];
    Ok(LineNorms {
        solution: sq(acc[0]),
        reference: sq(acc[1]),
        error: sq(acc[2]),
    })
}

/// Everything written to `report.txt`.
#[derive(Clone, Debug)]
pub struct ErrorReport {
    pub case: String,
    pub total_dofs: usize,
    pub free_dofs: usize,
    pub involved_dofs: usize,
    pub energy: f64,
    pub bc_residuals: Vec<(String, f64)>,
    /// Relative errors; `None` for a component whose reference vanishes.
    pub errors: Option<[Option<f64>; 3]>,
    /// Absolute errors `(∫|σ - σref|²)^½`.
    pub absolute_errors: Option<[f64; 3]>,
    pub options: SolveOptions,
    pub solution_diagnostics: crate::solver::Diagnostics,
    pub notes: Vec<String>,
}

impl ErrorReport {
    pub fn new(def: &CaseDefinition, solution: &Solution, options: &SolveOptions) -> Result<Self> {
        let (errors, absolute_errors) = match def.reference {
            Some(r) => {
                let (num, den) = l2_sums(&def.model, solution, |x, y| r.stress(x, y), &options.assembly)?;
                let rel = std::array::from_fn(|c| (den[c] > 0.0).then(|| (num[c] / den[c]).sqrt()));
                (Some(rel), Some(num.map(f64::sqrt)))
            }
            None => (None, None),
        };
        Ok(Self {
            case: def.name.clone(),
            total_dofs: solution.total_dofs(),
            free_dofs: solution.free_count(),
            involved_dofs: solution.partition.involved.len(),
            energy: solution.energy,
            bc_residuals: solution.bc_residuals.clone(),
            errors,
            absolute_errors,
            options: *options,
            solution_diagnostics: solution.diagnostics.clone(),
            notes: def.notes.clone(),
        })
    }

    pub fn to_text(&self) -> String {
        let d = &self.solution_diagnostics;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv("case", self.case.clone());
        kv("total_dofs", self.total_dofs.to_string());
        kv("free_dofs", self.free_dofs.to_string());
        kv("involved_dofs", self.involved_dofs.to_string());
        kv("energy", format!("{:e}", self.energy));
        for (label, v) in &self.bc_residuals {
            kv(&format!("bc_residual.{label}"), format!("{v:e}"));
        }
        for (c, name) in COMPONENTS.iter().enumerate() {
            let v = match self.errors {
                Some(e) => e[c].map_or("zero-reference-norm".into(), |v| format!("{v:e}")),
                None => "unavailable".into(),
            };
            kv(&format!("l2_error.{name}"), v);
            if let Some(a) = self.absolute_errors {
                kv(&format!("l2_abs_error.{name}"), format!("{:e}", a[c]));
            }
        }
        kv("solver.mode", d.mode.to_string());
        kv("solver.bc_weight", format!("{}", self.options.bc_weight));
        kv("solver.bc_scale", format!("{:e}", d.bc_scale));
        kv("solver.energy_convention", self.options.assembly.convention.as_str().into());
        kv(
            "solver.quadrature",
            self.options
                .assembly
                .quadrature
                .map_or("default".into(), |k| k.to_string()),
        );
        kv("solver.involvement_tolerance", format!("{:e}", self.options.involvement_tolerance));
        kv("solver.gauge", d.gauge.into());
        kv("solver.bc_rank", d.bc_rank.to_string());
        kv("solver.bc_condition", format!("{:e}", d.bc_condition));
        kv("solver.condition_estimate", format!("{:e}", d.condition_estimate));
        kv("solver.gradient_norm", format!("{:e}", d.gradient_norm));
        for w in &d.warnings {
            kv("warning", w.clone());
        }
        for n in &self.notes {
            kv("note", n.clone());
        }
        s
    }
}
