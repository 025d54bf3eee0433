//! Field sampling and file output.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::Model;
use crate::solver::Solution;

use super::cases::CaseDefinition;
use super::metrics::{vertical_profile, ErrorReport};

/// Per-patch parametric sampling resolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FieldSampleGrid {
    pub nx: usize,
    pub ny: usize,
}

impl Default for FieldSampleGrid {
    fn default() -> Self {
        Self { nx: 21, ny: 21 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldSample {
    pub patch: usize,
    pub xi: f64,
    pub eta: f64,
    pub x: f64,
    pub y: f64,
    pub sigma: [f64; 3],
}

fn ticks(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5],
        _ => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

pub fn sample_grid(model: &Model, solution: &Solution, grid: FieldSampleGrid) -> Result<Vec<FieldSample>> {
    if grid.nx == 0 || grid.ny == 0 {
        return Err(Error::Config("sample grid needs at least one point per direction".into()));
    }
    let mut out = Vec::with_capacity(model.patches.len() * grid.nx * grid.ny);
    for k in 0..model.patches.len() {
        for &xi in &ticks(grid.nx) {
            for &eta in &ticks(grid.ny) {
                let s = solution.stress(model, k, xi, eta)?;
                out.push(FieldSample {
                    patch: k,
                    xi,
                    eta,
                    x: s.x,
                    y: s.y,
                    sigma: s.sigma,
                });
            }
        }
    }
    Ok(out)
}

/// Decimal notation with 17 significant digits.
pub fn format_sig17(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if v == 0.0 {
        return format!("{:.16}", 0.0);
    }
    let exp = v.abs().log10().floor() as i32;
    // log10 can land one off near powers of ten; check via scientific formatting.
    let sci = format!("{:.16e}", v);
    let exp = sci
        .rsplit('e')
        .next()
        .and_then(|e| e.parse::<i32>().ok())
        .unwrap_or(exp);
    let decimals = (16 - exp).max(0) as usize;
    format!("{v:.decimals$}")
}

pub fn stress_csv(samples: &[FieldSample]) -> String {
    let mut s = String::from("patch,xi,eta,x,y,sigma_xx,sigma_yy,sigma_xy\n");
    for p in samples {
        let fields = [p.xi, p.eta, p.x, p.y, p.sigma[0], p.sigma[1], p.sigma[2]];
        s.push_str(&p.patch.to_string());
        for f in fields {
            s.push(',');
            s.push_str(&format_sig17(f));
        }
        s.push('\n');
    }
    s
}

/// Profiles at the case's stations, with reference values where available.
pub fn profiles_csv(def: &CaseDefinition, solution: &Solution, per_patch: usize) -> Result<String> {
    let mut s = String::from("station,patch,x,y,sigma_xx,sigma_yy,sigma_xy,ref_xx,ref_yy,ref_xy\n");
    for st in &def.stations {
        for p in vertical_profile(&def.model, solution, st.x, per_patch)? {
            let mut row = vec![
                st.label.clone(),
                p.patch.to_string(),
                format_sig17(p.x),
                format_sig17(p.y),
            ];
            row.extend(p.sigma.iter().map(|&v| format_sig17(v)));
            match def.reference {
                Some(r) => row.extend(r.stress(p.x, p.y).iter().map(|&v| format_sig17(v))),
                None => row.extend(std::iter::repeat_n("unavailable".to_string(), 3)),
            }
            s.push_str(&row.join(","));
            s.push('\n');
        }
    }
    Ok(s)
}

/// Writes `stress.csv`, `report.txt` and `profiles.csv` into `dir`.
pub fn sample_and_export(
    def: &CaseDefinition,
    solution: &Solution,
    report: &ErrorReport,
    grid: FieldSampleGrid,
    dir: &Path,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let samples = sample_grid(&def.model, solution, grid)?;
    fs::write(dir.join("stress.csv"), stress_csv(&samples))?;
    fs::write(dir.join("report.txt"), report.to_text())?;
    fs::write(dir.join("profiles.csv"), profiles_csv(def, solution, 41)?)?;
    Ok(())
}
