//! Two-stage and combined solves for the control variables.
//!
//! Two-stage: control variables touched by the boundary-condition residuals
//! are fixed by a minimum-norm least-squares solve, then the remaining free
//! set 𝔻 minimizes the total complementary energy. Combined: one weighted
//! system over all control variables.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::constraints::{residual_form, strong_constraints, EdgeQuadrature, StrongConstraintSet};
use crate::error::{Error, Result};
use crate::linalg::{null_space, orthonormal_complement, orthonormal_span, Ldlt, SymmetricSplit};
use crate::model::Model;
use crate::physics::{
    external_energy_form, internal_energy_form, stress_at, AssemblyOptions, GlobalDofMap, QuadraticForm, StressSample,
};
use crate::spline::BSplineBasis;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BcMode {
    #[default]
    TwoStage,
    Combined,
}

impl BcMode {
    pub fn as_str(self) -> &'static str {
        match self {
            BcMode::TwoStage => "two-stage",
            BcMode::Combined => "combined",
        }
    }
}

impl FromStr for BcMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-stage" => Ok(BcMode::TwoStage),
            "combined" => Ok(BcMode::Combined),
            other => Err(Error::Config(format!("unknown bc mode `{other}` (expected two-stage or combined)"))),
        }
    }
}

impl fmt::Display for BcMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How the affine null space of the stress function is removed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GaugeMode {
    /// Pin three neighbouring corner control variables per patch when they are
    /// free; otherwise fall back to `MinNorm`.
    #[default]
    PinAffine,
    /// Solve on the orthogonal complement of the affine directions.
    MinNorm,
}

impl GaugeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            GaugeMode::PinAffine => "pin-affine",
            GaugeMode::MinNorm => "min-norm",
        }
    }
}

impl FromStr for GaugeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pin-affine" => Ok(GaugeMode::PinAffine),
            "min-norm" => Ok(GaugeMode::MinNorm),
            other => Err(Error::Config(format!("unknown gauge `{other}` (expected pin-affine or min-norm)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    pub mode: BcMode,
    /// Relative weight λ of the boundary residuals in combined mode.
    pub bc_weight: f64,
    /// Involvement threshold relative to the largest BC-Hessian column norm.
    pub involvement_tolerance: f64,
    /// Relative eigenvalue threshold for the minimum-norm BC solve.
    pub rank_tolerance: f64,
    /// Relative pivot threshold of the final factorization.
    pub pivot_tolerance: f64,
    pub gauge: GaugeMode,
    pub assembly: AssemblyOptions,
    pub edge_quadrature: EdgeQuadrature,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            mode: BcMode::TwoStage,
            bc_weight: 1.0,
            involvement_tolerance: 1e-12,
            rank_tolerance: 1e-10,
            pivot_tolerance: 1e-13,
            gauge: GaugeMode::PinAffine,
            assembly: AssemblyOptions::default(),
            edge_quadrature: EdgeQuadrature::default(),
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        positive(self.bc_weight, "bc weight")?;
        positive(self.involvement_tolerance, "involvement tolerance")?;
        positive(self.rank_tolerance, "rank tolerance")?;
        positive(self.pivot_tolerance, "pivot tolerance")?;
        if self.assembly.quadrature == Some(0) || self.edge_quadrature.points == Some(0) {
            return Err(Error::Config("quadrature needs at least one point".into()));
        }
        Ok(())
    }
}

/// All quadratic forms of a model.
#[derive(Clone, Debug)]
pub struct Forms {
    /// Total complementary energy `U* + W*`.
    pub energy: QuadraticForm,
    /// One residual form per weak condition, by label.
    pub conditions: Vec<(String, QuadraticForm)>,
    /// Sum of the condition forms.
    pub bc: QuadraticForm,
}

pub fn assemble(model: &Model, options: &SolveOptions) -> Result<Forms> {
    let dofs = model.dofs();
    let mut energy = internal_energy_form(&model.patches, &dofs, &options.assembly)?;
    let edges = model.displacement_edges();
    if !edges.is_empty() {
        energy.add_assign(&external_energy_form(&edges, &model.patches, &dofs)?);
    }
    let mut bc = QuadraticForm::zeros(dofs.total());
    let mut conditions = Vec::new();
    for cond in &model.conditions {
        if let Some(form) = residual_form(cond, &model.patches, &dofs, &options.edge_quadrature)? {
            bc.add_assign(&form);
            conditions.push((cond.label.clone(), form));
        }
    }
    Ok(Forms { energy, conditions, bc })
}

/// DOFs touched by the boundary residuals and the free set 𝔻.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub involved: Vec<usize>,
    pub free: Vec<usize>,
}

/// Splits DOFs by the norm of their BC-Hessian column relative to the largest.
pub fn partition_dofs(bc: &QuadraticForm, tol: f64) -> Partition {
    let n = bc.dim();
    let norms: Vec<f64> = (0..n).map(|c| bc.h.column(c).norm()).collect();
    let max = norms.iter().cloned().fold(0.0, f64::max);
    let (involved, free): (Vec<usize>, Vec<usize>) = (0..n).partition(|&c| max > 0.0 && norms[c] > tol * max);
    Partition { involved, free }
}

/// Result of the boundary stage.
#[derive(Clone, Debug)]
pub struct BcStage {
    /// Full-length vector; zero outside the involved set.
    pub phi: DVector<f64>,
    /// Numerical rank of the reduced least-squares Hessian.
    pub rank: usize,
    /// Value of the BC form at `phi`.
    pub residual: f64,
    pub condition: f64,
}

/// Minimum-norm minimizer of the BC form over the involved DOFs, optionally
/// subject to exact linear constraints (whose DOFs must lie in `involved`).
pub fn solve_bc_stage(
    bc: &QuadraticForm,
    involved: &[usize],
    strong: Option<&StrongConstraintSet>,
    rank_tol: f64,
) -> Result<BcStage> {
    let n = bc.dim();
    let k = involved.len();
    let h = DMatrix::from_fn(k, k, |i, j| bc.h[(involved[i], involved[j])]);
    let g = DVector::from_fn(k, |i, _| bc.g[involved[i]]);
    let (xp, basis) = match strong {
        Some(set) if set.rank() > 0 => {
            let a = DMatrix::from_fn(set.rank(), k, |r, c| set.a[(r, involved[c])]);
            let outside: f64 = (0..n)
                .filter(|c| !involved.contains(c))
                .map(|c| set.a.column(c).amax())
                .fold(0.0, f64::max);
            if outside > 0.0 {
                return Err(Error::Solver("strong constraints reach DOFs outside the involved set".into()));
            }
            let svd = a.clone().svd(true, true);
            let eps = 1e-12 * svd.singular_values.amax();
            let xp = svd
                .solve(&set.b, eps)
                .map_err(|e| Error::Solver(format!("strong constraint solve failed: {e}")))?;
            (xp, null_space(&a, 1e-12))
        }
        _ => (DVector::zeros(k), DMatrix::identity(k, k)),
    };
    let reduced = basis.transpose() * &h * &basis;
    let rhs = -(basis.transpose() * (&h * &xp + &g));
    let split = SymmetricSplit::new(&reduced, rank_tol);
    let w = split.min_norm_solve(&rhs);
    let local = &xp + &basis * w;
    let mut phi = DVector::zeros(n);
    for (i, &d) in involved.iter().enumerate() {
        phi[d] = local[i];
    }
    let residual = bc.value(&phi);
    Ok(BcStage {
        phi,
        rank: split.rank(),
        residual,
        condition: split.condition(),
    })
}

/// Affine directions `1, x, y` of one patch, as full-length control vectors.
#[derive(Clone, Debug)]
pub struct PatchGauge {
    pub patch: usize,
    /// `N x k` with `k ≤ 3` verified affine directions.
    pub vectors: DMatrix<f64>,
    /// Global indices of the local control variables (0,0), (1,0), (0,1).
    pub pins: [usize; 3],
}

fn greville(basis: &BSplineBasis) -> Vec<f64> {
    let p = basis.degree();
    let t = basis.knots().values();
    (0..basis.count())
        .map(|i| t[i + 1..=i + p].iter().sum::<f64>() / p as f64)
        .collect()
}

fn collocation(basis: &BSplineBasis) -> Result<DMatrix<f64>> {
    let pts = greville(basis);
    let n = basis.count();
    let mut m = DMatrix::zeros(n, n);
    for (i, &u) in pts.iter().enumerate() {
        let row = basis.values(u)?;
        for j in 0..n {
            m[(i, j)] = row[j];
        }
    }
    Ok(m)
}

/// Interpolates `1`, `x` and `y` in each patch's own spline space and keeps
/// those reproduced exactly (all of them for polynomial mappings within the
/// net's degrees).
pub fn affine_gauge(model: &Model) -> Result<Vec<PatchGauge>> {
    let dofs = model.dofs();
    let total = dofs.total();
    let mut out = Vec::new();
    for (k, patch) in model.patches.iter().enumerate() {
        let bx = collocation(patch.net.xi_basis())?;
        let by = collocation(patch.net.eta_basis())?;
        let (gx, gy) = (greville(patch.net.xi_basis()), greville(patch.net.eta_basis()));
        let bx_lu = bx.lu();
        let by_lu = by.lu();
        let (n, m) = patch.net.shape();
        let mut points = DMatrix::zeros(n * m, 2);
        for i in 0..n {
            for j in 0..m {
                let (x, y) = patch.mapping.map_point(gx[i], gy[j])?;
                points[(i * m + j, 0)] = x;
                points[(i * m + j, 1)] = y;
            }
        }
        let funcs: [&dyn Fn(f64, f64) -> f64; 3] = [&|_, _| 1.0, &|x, _| x, &|_, y| y];
        let mut kept = Vec::new();
        for f in funcs {
            let vals = DMatrix::from_fn(n, m, |i, j| f(points[(i * m + j, 0)], points[(i * m + j, 1)]));
            let Some(left) = bx_lu.solve(&vals) else { continue };
            let Some(ct) = by_lu.solve(&left.transpose()) else { continue };
            let coeffs = ct.transpose();
            let net = patch.net.with_values(coeffs.clone())?;
            let scale = vals.amax().max(1.0);
            let mut ok = true;
            for a in 0..5 {
                for b in 0..5 {
                    let (s, t) = (0.07 + 0.21 * a as f64, 0.11 + 0.19 * b as f64);
                    let (x, y) = patch.mapping.map_point(s, t)?;
                    if (net.value(s, t)? - f(x, y)).abs() > 1e-9 * scale {
                        ok = false;
                    }
                }
            }
            if ok {
                let mut v = DVector::zeros(total);
                for i in 0..n {
                    for j in 0..m {
                        v[dofs.global(k, i, j)] = coeffs[(i, j)];
                    }
                }
                kept.push(v);
            }
        }
        let vectors = if kept.is_empty() {
            DMatrix::zeros(total, 0)
        } else {
            DMatrix::from_columns(&kept)
        };
        out.push(PatchGauge {
            patch: k,
            vectors,
            pins: [dofs.global(k, 0, 0), dofs.global(k, 1, 0), dofs.global(k, 0, 1)],
        });
    }
    Ok(out)
}

/// Result of the energy stage or the combined solve.
#[derive(Clone, Debug)]
pub struct EnergyStage {
    pub phi: DVector<f64>,
    /// Control variables set to zero to fix the gauge.
    pub pinned: Vec<usize>,
    /// Dimension of the affine null space removed by projection.
    pub projected: usize,
    pub condition: f64,
    /// Gradient norm over the solved directions, relative to `‖H‖‖φ‖ + ‖g‖`.
    pub gradient: f64,
}

impl EnergyStage {
    pub fn gauge_label(&self) -> &'static str {
        match (self.pinned.is_empty(), self.projected) {
            (true, 0) => "none",
            (false, 0) => "pin-affine",
            (true, _) => "min-norm",
            (false, _) => "pin-affine+min-norm",
        }
    }
}

/// Minimizes `form` over the `free` DOFs with all others held at `fixed`.
pub fn solve_energy_stage(
    form: &QuadraticForm,
    fixed: &DVector<f64>,
    free: &[usize],
    gauge: &[PatchGauge],
    mode: GaugeMode,
    pivot_tol: f64,
) -> Result<EnergyStage> {
    let n = form.dim();
    let mut phi = fixed.clone();
    if free.is_empty() {
        return Ok(EnergyStage {
            phi,
            pinned: Vec::new(),
            projected: 0,
            condition: 1.0,
            gradient: 0.0,
        });
    }
    let mut is_free = vec![false; n];
    for &d in free {
        is_free[d] = true;
    }

    // Affine directions supported entirely on the free set.
    let mut pinned = Vec::new();
    let mut leftover: Vec<DVector<f64>> = Vec::new();
    for pg in gauge {
        if pg.vectors.ncols() == 0 {
            continue;
        }
        let fixed_rows: Vec<usize> = (0..n).filter(|&r| !is_free[r]).collect();
        let combos = if fixed_rows.is_empty() {
            DMatrix::identity(pg.vectors.ncols(), pg.vectors.ncols())
        } else {
            null_space(&pg.vectors.select_rows(&fixed_rows), 1e-10)
        };
        if combos.ncols() == 0 {
            continue;
        }
        let inside = &pg.vectors * &combos;
        let can_pin = mode == GaugeMode::PinAffine
            && combos.ncols() == 3
            && pg.pins.iter().all(|&p| is_free[p])
            && {
                let pm = DMatrix::from_fn(3, 3, |r, c| pg.vectors[(pg.pins[r], c)]);
                let sv = pm.singular_values();
                sv.min() > 1e-8 * sv.max()
            };
        if can_pin {
            for &p in &pg.pins {
                is_free[p] = false;
                phi[p] = 0.0;
                pinned.push(p);
            }
        } else {
            leftover.extend(inside.column_iter().map(|c| c.into_owned()));
        }
    }

    let solved: Vec<usize> = (0..n).filter(|&d| is_free[d]).collect();
    let k = solved.len();
    let h = DMatrix::from_fn(k, k, |i, j| form.h[(solved[i], solved[j])]);
    let full_grad = form.gradient(&phi);
    let rhs = DVector::from_fn(k, |i, _| -full_grad[solved[i]]);

    let basis = if leftover.is_empty() {
        None
    } else {
        let g = DMatrix::from_fn(k, leftover.len(), |i, c| leftover[c][solved[i]]);
        let q = orthonormal_span(&g, 1e-10);
        Some((orthonormal_complement(&q, k), q.ncols()))
    };
    let (delta, condition, projected) = match &basis {
        None => {
            let f = factor(&h, pivot_tol)?;
            (f.solve(&rhs), f.condition_estimate(), 0)
        }
        Some((c, dim)) => {
            let reduced = c.transpose() * &h * c;
            let f = factor(&reduced, pivot_tol)?;
            (c * f.solve(&(c.transpose() * &rhs)), f.condition_estimate(), *dim)
        }
    };
    for (i, &d) in solved.iter().enumerate() {
        phi[d] += delta[i];
    }

    let grad = form.gradient(&phi);
    let mut gs = DVector::from_fn(k, |i, _| grad[solved[i]]);
    if let Some((c, _)) = &basis {
        gs = c.tr_mul(&gs);
    }
    let scale = form.h.norm() * phi.norm() + form.g.norm();
    let gradient = if scale > 0.0 { gs.norm() / scale } else { gs.norm() };
    Ok(EnergyStage {
        phi,
        pinned,
        projected,
        condition,
        gradient,
    })
}

fn factor(h: &DMatrix<f64>, pivot_tol: f64) -> Result<Ldlt> {
    Ldlt::factor(h, pivot_tol).map_err(|e| match e {
        Error::Solver(msg) if msg.contains("singular") => {
            Error::Gauge(format!("reduced energy Hessian is singular after gauge fixing: {msg}"))
        }
        other => other,
    })
}

/// Minimizes `energy + λ s bc` over all DOFs, with `s` equalizing the largest
/// diagonal entries of the two Hessians. Returns the stage and `λ s`.
pub fn solve_combined(
    energy: &QuadraticForm,
    bc: &QuadraticForm,
    bc_weight: f64,
    gauge: &[PatchGauge],
    mode: GaugeMode,
    pivot_tol: f64,
) -> Result<(EnergyStage, f64)> {
    let n = energy.dim();
    let de = energy.h.diagonal().amax();
    let db = bc.h.diagonal().amax();
    let s = if db > 0.0 { de / db } else { 1.0 };
    let weight = bc_weight * s;
    let form = weighted_sum(energy, bc, weight);
    let free: Vec<usize> = (0..n).collect();
    let stage = solve_energy_stage(&form, &DVector::zeros(n), &free, gauge, mode, pivot_tol)?;
    Ok((stage, weight))
}

fn weighted_sum(a: &QuadraticForm, b: &QuadraticForm, weight: f64) -> QuadraticForm {
    let mut f = a.clone();
    f.add_scaled(b, weight);
    f
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostics {
    pub mode: BcMode,
    /// Rank of the BC least-squares stage (two-stage mode).
    pub bc_rank: usize,
    /// Condition of the BC least-squares stage on its range.
    pub bc_condition: f64,
    /// Pivot ratio of the final factorization.
    pub condition_estimate: f64,
    pub gradient_norm: f64,
    pub gauge: &'static str,
    pub pinned: Vec<usize>,
    /// Effective BC weight `λ s` (combined mode).
    pub bc_scale: f64,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub phi: DVector<f64>,
    pub dofs: GlobalDofMap,
    pub partition: Partition,
    /// Total complementary energy Π*.
    pub energy: f64,
    /// Residual value of each weak condition, by label.
    pub bc_residuals: Vec<(String, f64)>,
    pub diagnostics: Diagnostics,
}

impl Solution {
    pub fn total_dofs(&self) -> usize {
        self.phi.len()
    }

    pub fn free_count(&self) -> usize {
        self.partition.free.len()
    }

    pub fn bc_total(&self) -> f64 {
        self.bc_residuals.iter().map(|(_, v)| v).sum()
    }

    pub fn patch_values(&self, patch: usize) -> &[f64] {
        let r = self.dofs.patch_range(patch);
        &self.phi.as_slice()[r]
    }

    pub fn stress(&self, model: &Model, patch: usize, xi: f64, eta: f64) -> Result<StressSample> {
        let p = model
            .patches
            .get(patch)
            .ok_or_else(|| Error::Config(format!("no patch {patch}")))?;
        stress_at(p, self.patch_values(patch), xi, eta)
    }
}

pub fn solve(model: &Model, options: &SolveOptions) -> Result<Solution> {
    options.validate()?;
    model.validate()?;
    let forms = assemble(model, options)?;
    solve_forms(model, &forms, options)
}

/// Solves with pre-assembled forms.
pub fn solve_forms(model: &Model, forms: &Forms, options: &SolveOptions) -> Result<Solution> {
    let dofs = model.dofs();
    let n = dofs.total();
    let gauge = affine_gauge(model)?;
    let strong = if model.strong.is_empty() {
        None
    } else {
        Some(strong_constraints(&model.patches, &dofs, &model.strong)?)
    };
    let mut warnings = Vec::new();
    let mut partition = partition_dofs(&forms.bc, options.involvement_tolerance);
    if let Some(set) = &strong {
        let mut inv = partition.involved.clone();
        inv.extend(set.constrained_dofs());
        inv.sort_unstable();
        inv.dedup();
        partition = Partition {
            free: (0..n).filter(|d| inv.binary_search(d).is_err()).collect(),
            involved: inv,
        };
    }
    if partition.involved.is_empty() && (forms.bc.g.amax() > 0.0 || forms.bc.c > 0.0) {
        warnings.push("boundary residuals have targets but involve no control variables".to_string());
    }

    let (stage, bc_rank, bc_condition, bc_scale) = match options.mode {
        BcMode::TwoStage => {
            let bc_stage = if partition.involved.is_empty() {
                BcStage {
                    phi: DVector::zeros(n),
                    rank: 0,
                    residual: forms.bc.c,
                    condition: 1.0,
                }
            } else {
                solve_bc_stage(&forms.bc, &partition.involved, strong.as_ref(), options.rank_tolerance)?
            };
            let stage = solve_energy_stage(
                &forms.energy,
                &bc_stage.phi,
                &partition.free,
                &gauge,
                options.gauge,
                options.pivot_tolerance,
            )?;
            (stage, bc_stage.rank, bc_stage.condition, 0.0)
        }
        BcMode::Combined => {
            if let Some(set) = &strong {
                let (stage, weight) = combined_with_strong(forms, set, options)?;
                (stage, 0, 1.0, weight)
            } else {
                let (stage, weight) = solve_combined(
                    &forms.energy,
                    &forms.bc,
                    options.bc_weight,
                    &gauge,
                    options.gauge,
                    options.pivot_tolerance,
                )?;
                (stage, 0, 1.0, weight)
            }
        }
    };

    let phi = stage.phi.clone();
    let bc_residuals = forms
        .conditions
        .iter()
        .map(|(label, f)| (label.clone(), f.value(&phi)))
        .collect();
    Ok(Solution {
        energy: forms.energy.value(&phi),
        bc_residuals,
        diagnostics: Diagnostics {
            mode: options.mode,
            bc_rank,
            bc_condition,
            condition_estimate: stage.condition,
            gradient_norm: stage.gradient,
            gauge: stage.gauge_label(),
            pinned: stage.pinned.clone(),
            bc_scale,
            warnings,
        },
        phi,
        dofs,
        partition,
    })
}

/// Combined mode under exact constraints: `φ = φ_p + N w`, pseudo-inverse in `w`.
fn combined_with_strong(forms: &Forms, set: &StrongConstraintSet, options: &SolveOptions) -> Result<(EnergyStage, f64)> {
    let de = forms.energy.h.diagonal().amax();
    let db = forms.bc.h.diagonal().amax();
    let weight = options.bc_weight * if db > 0.0 { de / db } else { 1.0 };
    let form = weighted_sum(&forms.energy, &forms.bc, weight);
    let svd = set.a.clone().svd(true, true);
    let eps = 1e-12 * svd.singular_values.amax();
    let xp = svd
        .solve(&set.b, eps)
        .map_err(|e| Error::Solver(format!("strong constraint solve failed: {e}")))?;
    let basis = null_space(&set.a, 1e-12);
    let reduced = basis.transpose() * &form.h * &basis;
    let rhs = -(basis.transpose() * form.gradient(&xp));
    let split = SymmetricSplit::new(&reduced, options.rank_tolerance);
    let phi = &xp + &basis * split.min_norm_solve(&rhs);
    let g = basis.tr_mul(&form.gradient(&phi));
    let scale = form.h.norm() * phi.norm() + form.g.norm();
    Ok((
        EnergyStage {
            phi,
            pinned: Vec::new(),
            projected: basis.ncols() - split.rank(),
            condition: split.condition(),
            gradient: if scale > 0.0 { g.norm() / scale } else { g.norm() },
        },
        weight,
    ))
}
