//! Stresses from the spline stress function and complementary-energy assembly.
//!
//! Every stress evaluation is produced as an affine functional of the global
//! control vector: coefficient rows over the (p+1)(q+1) control variables that
//! support the point plus a constant from the body-force potential. Assembly
//! and pointwise evaluation share that single representation.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{EdgeFrame, EdgeRef, GeometricMapping, Patch, Side};
use crate::quadrature::GaussLegendre;
use crate::spline::ControlNet;

/// Maps every patch's `(i, j)` control variable to a global index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlobalDofMap {
    offsets: Vec<usize>,
    shapes: Vec<(usize, usize)>,
    total: usize,
}

impl GlobalDofMap {
    /// Patches are numbered consecutively, each row-major (`i * m + j`).
    pub fn new(patches: &[Patch]) -> Self {
        let mut offsets = Vec::with_capacity(patches.len());
        let mut shapes = Vec::with_capacity(patches.len());
        let mut total = 0;
        for p in patches {
            offsets.push(total);
            let shape = p.net.shape();
            shapes.push(shape);
            total += shape.0 * shape.1;
        }
        Self {
            offsets,
            shapes,
            total,
        }
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn patch_count(&self) -> usize {
        self.offsets.len()
    }

    pub fn offset(&self, patch: usize) -> usize {
        self.offsets[patch]
    }

    pub fn shape(&self, patch: usize) -> (usize, usize) {
        self.shapes[patch]
    }

    pub fn global(&self, patch: usize, i: usize, j: usize) -> usize {
        self.offsets[patch] + i * self.shapes[patch].1 + j
    }

    /// Inverse of [`GlobalDofMap::global`].
    pub fn locate(&self, index: usize) -> Option<(usize, usize, usize)> {
        if index >= self.total {
            return None;
        }
        let patch = self.offsets.partition_point(|&o| o <= index) - 1;
        let local = index - self.offsets[patch];
        let m = self.shapes[patch].1;
        Some((patch, local / m, local % m))
    }

    pub fn patch_range(&self, patch: usize) -> std::ops::Range<usize> {
        let (n, m) = self.shapes[patch];
        self.offsets[patch]..self.offsets[patch] + n * m
    }
}

/// `½ φᵀ H φ + gᵀ φ + c`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticForm {
    pub h: DMatrix<f64>,
    pub g: DVector<f64>,
    pub c: f64,
}

impl QuadraticForm {
    pub fn zeros(n: usize) -> Self {
        Self {
            h: DMatrix::zeros(n, n),
            g: DVector::zeros(n),
            c: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    pub fn value(&self, phi: &DVector<f64>) -> f64 {
        0.5 * phi.dot(&(&self.h * phi)) + self.g.dot(phi) + self.c
    }

    pub fn gradient(&self, phi: &DVector<f64>) -> DVector<f64> {
        &self.h * phi + &self.g
    }

    pub fn add_assign(&mut self, other: &QuadraticForm) {
        self.add_scaled(other, 1.0);
    }

    pub fn add_scaled(&mut self, other: &QuadraticForm, s: f64) {
        self.h += &other.h * s;
        self.g += &other.g * s;
        self.c += other.c * s;
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            h: &self.h * s,
            g: &self.g * s,
            c: self.c * s,
        }
    }

    /// Adds `weight (aᵀφ + b)²` for a functional given on a subset of DOFs.
    pub fn add_squared_affine(&mut self, dofs: &[usize], coeffs: &[f64], b: f64, weight: f64) {
        for (&r, &ar) in dofs.iter().zip(coeffs) {
            if ar == 0.0 {
                continue;
            }
            for (&c, &ac) in dofs.iter().zip(coeffs) {
                self.h[(r, c)] += 2.0 * weight * ar * ac;
            }
            self.g[r] += 2.0 * weight * b * ar;
        }
        self.c += weight * b * b;
    }

    /// Adds `weight (aᵀφ + b)²` for a dense functional.
    pub fn add_squared_dense(&mut self, a: &DVector<f64>, b: f64, weight: f64) {
        let nz: Vec<usize> = (0..a.len()).filter(|&k| a[k] != 0.0).collect();
        let coeffs: Vec<f64> = nz.iter().map(|&k| a[k]).collect();
        self.add_squared_affine(&nz, &coeffs, b, weight);
    }

    /// Largest absolute asymmetry relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.h.amax();
        if scale == 0.0 {
            return 0.0;
        }
        (&self.h - self.h.transpose()).amax() / scale
    }
}

/// Physical Hessian entries as linear functionals over a patch's local control variables.
#[derive(Clone, Debug, PartialEq)]
pub struct HessianFunctional {
    /// Row-major local indices `i * m + j`.
    pub dofs: Vec<usize>,
    pub xx: Vec<f64>,
    pub xy: Vec<f64>,
    pub yy: Vec<f64>,
}

impl HessianFunctional {
    /// `(φ_xx, φ_xy, φ_yy)` for row-major local control values.
    pub fn evaluate(&self, local: &[f64]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (k, &d) in self.dofs.iter().enumerate() {
            out[0] += self.xx[k] * local[d];
            out[1] += self.xy[k] * local[d];
            out[2] += self.yy[k] * local[d];
        }
        out
    }
}

/// Chain-rule transform of the parametric Hessian of `φ̂` to physical coordinates:
/// `J⁻ᵀ Ĥ J⁻¹` plus the first-derivative terms weighted by the inverse Hessians.
pub fn physical_hessian(net: &ControlNet, mapping: &GeometricMapping, xi: f64, eta: f64) -> Result<HessianFunctional> {
    let (p, q) = net.degrees();
    if p < 2 {
        return Err(Error::CannotDifferentiate("xi"));
    }
    if q < 2 {
        return Err(Error::CannotDifferentiate("eta"));
    }
    let k = mapping.inverse_jacobian(xi, eta)?;
    let ih = mapping.inverse_hessians(xi, eta)?;
    let (xi_x, xi_y, eta_x, eta_y) = (k[(0, 0)], k[(0, 1)], k[(1, 0)], k[(1, 1)]);
    let (i0, nd) = net.xi_basis().nonzero_derivatives(xi, 2)?;
    let (j0, md) = net.eta_basis().nonzero_derivatives(eta, 2)?;
    let m = net.shape().1;
    let count = nd[0].len() * md[0].len();
    let mut out = HessianFunctional {
        dofs: Vec::with_capacity(count),
        xx: Vec::with_capacity(count),
        xy: Vec::with_capacity(count),
        yy: Vec::with_capacity(count),
    };
    for a in 0..nd[0].len() {
        for b in 0..md[0].len() {
            let h_ss = nd[2][a] * md[0][b];
            let h_st = nd[1][a] * md[1][b];
            let h_tt = nd[0][a] * md[2][b];
            let d_s = nd[1][a] * md[0][b];
            let d_t = nd[0][a] * md[1][b];
            out.dofs.push((i0 + a) * m + j0 + b);
            out.xx.push(
                xi_x * xi_x * h_ss
                    + 2.0 * xi_x * eta_x * h_st
                    + eta_x * eta_x * h_tt
                    + ih.xi_xx * d_s
                    + ih.eta_xx * d_t,
            );
            out.xy.push(
                xi_x * xi_y * h_ss
                    + (xi_x * eta_y + eta_x * xi_y) * h_st
                    + eta_x * eta_y * h_tt
                    + ih.xi_xy * d_s
                    + ih.eta_xy * d_t,
            );
            out.yy.push(
                xi_y * xi_y * h_ss
                    + 2.0 * xi_y * eta_y * h_st
                    + eta_y * eta_y * h_tt
                    + ih.xi_yy * d_s
                    + ih.eta_yy * d_t,
            );
        }
    }
    Ok(out)
}

/// Stress at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StressSample {
    pub x: f64,
    pub y: f64,
    pub sigma: [f64; 3],
}

/// `σ = A φ + σ₀` at one point, with `A` restricted to the supporting DOFs.
#[derive(Clone, Debug, PartialEq)]
pub struct StressFunctional {
    pub x: f64,
    pub y: f64,
    /// Global indices.
    pub dofs: Vec<usize>,
    /// Coefficient rows for σxx, σyy, σxy.
    pub rows: [Vec<f64>; 3],
    /// Body-force contribution `(V, V, 0)`.
    pub constant: [f64; 3],
}

impl StressFunctional {
    pub fn evaluate(&self, phi: &DVector<f64>) -> [f64; 3] {
        let mut s = self.constant;
        for (k, &d) in self.dofs.iter().enumerate() {
            for c in 0..3 {
                s[c] += self.rows[c][k] * phi[d];
            }
        }
        s
    }

    pub fn sample(&self, phi: &DVector<f64>) -> StressSample {
        StressSample {
            x: self.x,
            y: self.y,
            sigma: self.evaluate(phi),
        }
    }
}

/// Airy stresses `σxx = φ_yy + V`, `σyy = φ_xx + V`, `σxy = -φ_xy` at `(ξ, η)` of
/// a patch whose first control variable has global index `offset`.
pub fn stress_functional(patch: &Patch, offset: usize, xi: f64, eta: f64) -> Result<StressFunctional> {
    let hf = physical_hessian(&patch.net, &patch.mapping, xi, eta)?;
    let (x, y) = patch.mapping.map_point(xi, eta)?;
    let v = patch.potential.value(x, y);
    Ok(StressFunctional {
        x,
        y,
        dofs: hf.dofs.iter().map(|d| d + offset).collect(),
        rows: [hf.yy, hf.xx, hf.xy.iter().map(|c| -c).collect()],
        constant: [v, v, 0.0],
    })
}

/// Stress at `(ξ, η)` for row-major local control values of one patch.
pub fn stress_at(patch: &Patch, local: &[f64], xi: f64, eta: f64) -> Result<StressSample> {
    let f = stress_functional(patch, 0, xi, eta)?;
    let (n, m) = patch.net.shape();
    if local.len() != n * m {
        return Err(Error::InvalidDiscretization(format!(
            "expected {} control values, got {}",
            n * m,
            local.len()
        )));
    }
    let phi = DVector::from_column_slice(local);
    Ok(f.sample(&phi))
}

/// Traction `t = σ n` on a patch edge as an affine functional.
#[derive(Clone, Debug, PartialEq)]
pub struct TractionFunctional {
    pub frame: EdgeFrame,
    pub dofs: Vec<usize>,
    pub tx: Vec<f64>,
    pub ty: Vec<f64>,
    pub constant: [f64; 2],
}

impl TractionFunctional {
    pub fn evaluate(&self, phi: &DVector<f64>) -> [f64; 2] {
        let mut t = self.constant;
        for (k, &d) in self.dofs.iter().enumerate() {
            t[0] += self.tx[k] * phi[d];
            t[1] += self.ty[k] * phi[d];
        }
        t
    }

    /// Coefficients and constant of one component (0 = x, 1 = y).
    pub fn component(&self, c: usize) -> (&[f64], f64) {
        if c == 0 {
            (&self.tx, self.constant[0])
        } else {
            (&self.ty, self.constant[1])
        }
    }
}

pub fn traction_functional(patch: &Patch, offset: usize, side: Side, s: f64) -> Result<TractionFunctional> {
    let frame = patch.mapping.edge_frame(side, s)?;
    let f = stress_functional(patch, offset, frame.xi, frame.eta)?;
    let [nx, ny] = frame.normal;
    let [sxx, syy, sxy] = &f.rows;
    let tx = (0..f.dofs.len()).map(|k| sxx[k] * nx + sxy[k] * ny).collect();
    let ty = (0..f.dofs.len()).map(|k| sxy[k] * nx + syy[k] * ny).collect();
    let [cxx, cyy, cxy] = f.constant;
    Ok(TractionFunctional {
        frame,
        dofs: f.dofs,
        tx,
        ty,
        constant: [cxx * nx + cxy * ny, cxy * nx + cyy * ny],
    })
}

/// Gauss points `(s, weight)` along an edge, `points` per knot span.
pub fn edge_rule(patch: &Patch, side: Side, points: usize) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(points);
    let mut out = Vec::new();
    for (a, b) in patch.edge_spans(side) {
        out.extend(rule.on_interval(a, b));
    }
    out
}

/// Default edge rule size: `max(p, q) + 2` points per span.
pub fn default_edge_points(patch: &Patch) -> usize {
    let (p, q) = patch.net.degrees();
    p.max(q) + 2
}

/// Which quadratic form of the stress vector is integrated as energy density.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EnergyConvention {
    /// `σᵀ 𝒮 σ` with the compliance matrix exactly as the material model defines it.
    #[default]
    AsPrinted,
    /// `σᵀ W σ` with the full tensor contraction (see [`crate::materials::ComplianceModel::energy_form_matrix`]).
    TensorContraction,
}

impl EnergyConvention {
    pub fn as_str(self) -> &'static str {
        match self {
            EnergyConvention::AsPrinted => "as-printed",
            EnergyConvention::TensorContraction => "tensor-contraction",
        }
    }

    pub fn matrix(self, patch: &Patch, x: f64, y: f64) -> Result<Matrix3<f64>> {
        match self {
            EnergyConvention::AsPrinted => {
                let s = patch.material.compliance_at(x, y)?;
                crate::materials::check_positive_definite(&s, x, y)?;
                Ok(s)
            }
            EnergyConvention::TensorContraction => patch.material.energy_form_matrix(x, y),
        }
    }
}

impl std::str::FromStr for EnergyConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "as-printed" => Ok(Self::AsPrinted),
            "tensor-contraction" => Ok(Self::TensorContraction),
            other => Err(Error::Config(format!(
                "unknown energy convention `{other}` (expected as-printed or tensor-contraction)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AssemblyOptions {
    /// Gauss points per knot span in each direction; `None` uses `(p + 1, q + 1)`.
    pub quadrature: Option<usize>,
    pub convention: EnergyConvention,
}

impl AssemblyOptions {
    pub fn points(&self, patch: &Patch) -> (usize, usize) {
        let (p, q) = patch.net.degrees();
        match self.quadrature {
            Some(k) => (k, k),
            None => (p + 1, q + 1),
        }
    }
}

/// Quadrature points `(ξ, η, weight)` over the whole parametric square of a
/// patch, cell by cell.
pub fn patch_rule(patch: &Patch, points: (usize, usize)) -> Vec<(f64, f64, f64)> {
    let gx = GaussLegendre::new(points.0);
    let gy = GaussLegendre::new(points.1);
    let mut out = Vec::new();
    for (a, b) in patch.net.xi_basis().spans() {
        for (c, d) in patch.net.eta_basis().spans() {
            for (s, ws) in gx.on_interval(a, b) {
                for (t, wt) in gy.on_interval(c, d) {
                    out.push((s, t, ws * wt));
                }
            }
        }
    }
    out
}

/// `U* = ½ ∫ σᵀ W σ dΩ` over all patches.
pub fn internal_energy_form(patches: &[Patch], dofs: &GlobalDofMap, options: &AssemblyOptions) -> Result<QuadraticForm> {
    let mut form = QuadraticForm::zeros(dofs.total());
    for (k, patch) in patches.iter().enumerate() {
        let offset = dofs.offset(k);
        for (s, t, w) in patch_rule(patch, options.points(patch)) {
            let det = patch.mapping.jacobian(s, t)?.determinant().abs();
            let f = stress_functional(patch, offset, s, t)?;
            let wm = options.convention.matrix(patch, f.x, f.y)? * (w * det);
            add_stress_energy(&mut form, &f, &wm);
        }
    }
    Ok(form)
}

fn add_stress_energy(form: &mut QuadraticForm, f: &StressFunctional, wm: &Matrix3<f64>) {
    let n = f.dofs.len();
    // W A, column by column.
    let mut wa = vec![[0.0; 3]; n];
    for (k, col) in wa.iter_mut().enumerate() {
        let a = Vector3::new(f.rows[0][k], f.rows[1][k], f.rows[2][k]);
        let v = wm * a;
        *col = [v[0], v[1], v[2]];
    }
    let s0 = Vector3::from(f.constant);
    let ws0 = wm * s0;
    for r in 0..n {
        let gr = f.dofs[r];
        for c in 0..n {
            let mut v = 0.0;
            for comp in 0..3 {
                v += f.rows[comp][r] * wa[c][comp];
            }
            form.h[(gr, f.dofs[c])] += v;
        }
        form.g[gr] += f.rows[0][r] * ws0[0] + f.rows[1][r] * ws0[1] + f.rows[2][r] * ws0[2];
    }
    form.c += 0.5 * s0.dot(&ws0);
}

/// A vector-valued function of the physical position.
#[derive(Clone)]
pub enum VectorField {
    Constant([f64; 2]),
    Function(Arc<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>),
}

impl VectorField {
    pub fn function(f: impl Fn(f64, f64) -> [f64; 2] + Send + Sync + 'static) -> Self {
        Self::Function(Arc::new(f))
    }

    pub fn at(&self, x: f64, y: f64) -> [f64; 2] {
        match self {
            VectorField::Constant(v) => *v,
            VectorField::Function(f) => f(x, y),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, VectorField::Constant([a, b]) if *a == 0.0 && *b == 0.0)
    }
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VectorField::Constant(v) => write!(f, "Constant({v:?})"),
            VectorField::Function(_) => f.write_str("Function(..)"),
        }
    }
}

/// Edge with a prescribed displacement `û`.
#[derive(Clone, Debug)]
pub struct DisplacementEdge {
    pub edge: EdgeRef,
    pub displacement: VectorField,
}

/// `W* = -∫_{Γu} û · (σ n) dΓ`, a linear form.
pub fn external_energy_form(edges: &[DisplacementEdge], patches: &[Patch], dofs: &GlobalDofMap) -> Result<QuadraticForm> {
    let mut form = QuadraticForm::zeros(dofs.total());
    for de in edges {
        if de.displacement.is_zero() {
            continue;
        }
        let patch = patches
            .get(de.edge.patch)
            .ok_or_else(|| Error::Config(format!("no patch {}", de.edge.patch)))?;
        let offset = dofs.offset(de.edge.patch);
        for (s, w) in edge_rule(patch, de.edge.side, default_edge_points(patch)) {
            let t = traction_functional(patch, offset, de.edge.side, s)?;
            let dg = w * t.frame.measure;
            let u = de.displacement.at(t.frame.x, t.frame.y);
            for (k, &d) in t.dofs.iter().enumerate() {
                form.g[d] -= dg * (u[0] * t.tx[k] + u[1] * t.ty[k]);
            }
            form.c -= dg * (u[0] * t.constant[0] + u[1] * t.constant[1]);
        }
    }
    Ok(form)
}
