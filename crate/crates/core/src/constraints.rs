//! Boundary conditions on the control variables.
//!
//! Weak conditions become positive semidefinite quadratic forms (squared
//! residuals of pointwise tractions, resultants, moments, and interface
//! coupling). Strong conditions prescribe control values of derivative nets
//! and become linear equality constraints.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{EdgeRef, Patch, Side};
use crate::physics::{default_edge_points, traction_functional, GlobalDofMap, QuadraticForm, TractionFunctional, VectorField};
use crate::quadrature::GaussLegendre;
use crate::spline::BSplineBasis;

pub use crate::physics::TractionFunctional as BoundaryTraction;

/// Traction components a condition applies to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Component {
    X,
    Y,
    Both,
}

impl Component {
    pub fn indices(self) -> &'static [usize] {
        match self {
            Component::X => &[0],
            Component::Y => &[1],
            Component::Both => &[0, 1],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Component::X => "x",
            Component::Y => "y",
            Component::Both => "both",
        }
    }
}

impl std::str::FromStr for Component {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" => Ok(Component::X),
            "y" => Ok(Component::Y),
            "both" => Ok(Component::Both),
            other => Err(Error::Config(format!("unknown component `{other}` (expected x, y or both)"))),
        }
    }
}

#[derive(Clone, Debug)]
pub enum BcKind {
    /// `∫ |t - t̂|² dΓ` over the selected components.
    Traction { target: VectorField, components: Component },
    /// `(∫ t_i dΓ - F_i)²` for each selected component.
    Resultant { target: [f64; 2], components: Component },
    /// `(∫ t_x y dΓ - M)²`.
    Moment { target: f64 },
    /// `∫ |t^A + t^B|² dΓ` across an internal interface.
    Coupling { partner: EdgeRef, components: Component },
    /// Prescribed displacement, entering through the external complementary energy.
    Displacement { value: VectorField },
    Free,
}

impl BcKind {
    pub fn name(&self) -> &'static str {
        match self {
            BcKind::Traction { .. } => "traction",
            BcKind::Resultant { .. } => "resultant",
            BcKind::Moment { .. } => "moment",
            BcKind::Coupling { .. } => "coupling",
            BcKind::Displacement { .. } => "displacement",
            BcKind::Free => "free",
        }
    }
}

#[derive(Clone, Debug)]
pub struct BoundaryCondition {
    pub label: String,
    pub edge: EdgeRef,
    pub kind: BcKind,
    pub weight: f64,
}

impl BoundaryCondition {
    pub fn new(label: impl Into<String>, edge: EdgeRef, kind: BcKind) -> Self {
        Self {
            label: label.into(),
            edge,
            kind,
            weight: 1.0,
        }
    }

    pub fn traction(label: impl Into<String>, edge: EdgeRef, target: [f64; 2]) -> Self {
        Self::new(
            label,
            edge,
            BcKind::Traction {
                target: VectorField::Constant(target),
                components: Component::Both,
            },
        )
    }

    pub fn traction_free(label: impl Into<String>, edge: EdgeRef) -> Self {
        Self::traction(label, edge, [0.0, 0.0])
    }

    pub fn resultant(label: impl Into<String>, edge: EdgeRef, components: Component, target: [f64; 2]) -> Self {
        Self::new(label, edge, BcKind::Resultant { target, components })
    }

    pub fn moment(label: impl Into<String>, edge: EdgeRef, target: f64) -> Self {
        Self::new(label, edge, BcKind::Moment { target })
    }

    pub fn coupling(label: impl Into<String>, edge: EdgeRef, partner: EdgeRef) -> Self {
        Self::new(
            label,
            edge,
            BcKind::Coupling {
                partner,
                components: Component::Both,
            },
        )
    }

    pub fn clamp(label: impl Into<String>, edge: EdgeRef) -> Self {
        Self::new(
            label,
            edge,
            BcKind::Displacement {
                value: VectorField::Constant([0.0, 0.0]),
            },
        )
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    /// True for conditions that produce a residual form.
    pub fn is_weak(&self) -> bool {
        !matches!(self.kind, BcKind::Displacement { .. } | BcKind::Free)
    }
}

fn patch_of(patches: &[Patch], edge: EdgeRef) -> Result<&Patch> {
    patches
        .get(edge.patch)
        .ok_or_else(|| Error::Config(format!("edge refers to missing patch {}", edge.patch)))
}

/// Traction `σ n` at edge parameter `s`, over global DOFs.
pub fn boundary_traction_functional(patches: &[Patch], dofs: &GlobalDofMap, edge: EdgeRef, s: f64) -> Result<TractionFunctional> {
    let patch = patch_of(patches, edge)?;
    traction_functional(patch, dofs.offset(edge.patch), edge.side, s)
}

/// Gauss points `(s, weight)` on `[0, 1]` with `points` per interval between breakpoints.
fn rule_on(breaks: &[f64], points: usize) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(points);
    let mut out = Vec::new();
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            out.extend(rule.on_interval(w[0], w[1]));
        }
    }
    out
}

fn edge_breaks(patch: &Patch, side: Side) -> Vec<f64> {
    let mut b: Vec<f64> = patch.edge_spans(side).iter().map(|s| s.0).collect();
    b.push(1.0);
    b
}

/// Options shared by all residual forms.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EdgeQuadrature {
    /// Gauss points per knot span; `None` uses `max(p, q) + 2`.
    pub points: Option<usize>,
}

impl EdgeQuadrature {
    fn points(&self, patch: &Patch) -> usize {
        self.points.unwrap_or_else(|| default_edge_points(patch))
    }
}

/// `∫ |t(φ, s) - t̂(s)|² dΓ`, weighted.
pub fn traction_residual_form(
    bc: &BoundaryCondition,
    patches: &[Patch],
    dofs: &GlobalDofMap,
    quad: &EdgeQuadrature,
) -> Result<QuadraticForm> {
    let BcKind::Traction { target, components } = &bc.kind else {
        return Err(Error::Config(format!("`{}` is not a traction condition", bc.label)));
    };
    let patch = patch_of(patches, bc.edge)?;
    let mut form = QuadraticForm::zeros(dofs.total());
    for (s, w) in rule_on(&edge_breaks(patch, bc.edge.side), quad.points(patch)) {
        let t = boundary_traction_functional(patches, dofs, bc.edge, s)?;
        let dg = w * t.frame.measure;
        let goal = target.at(t.frame.x, t.frame.y);
        for &c in components.indices() {
            let (coeffs, constant) = t.component(c);
            form.add_squared_affine(&t.dofs, coeffs, constant - goal[c], bc.weight * dg);
        }
    }
    Ok(form)
}

/// Integrated affine functional `∫ f(t, x, y) dΓ` as a dense coefficient vector and constant.
fn integrate_edge(
    patches: &[Patch],
    dofs: &GlobalDofMap,
    edge: EdgeRef,
    quad: &EdgeQuadrature,
    mut f: impl FnMut(&TractionFunctional, &mut DVector<f64>, &mut f64, f64),
) -> Result<(DVector<f64>, f64)> {
    let patch = patch_of(patches, edge)?;
    let mut a = DVector::zeros(dofs.total());
    let mut b = 0.0;
    for (s, w) in rule_on(&edge_breaks(patch, edge.side), quad.points(patch)) {
        let t = boundary_traction_functional(patches, dofs, edge, s)?;
        let dg = w * t.frame.measure;
        f(&t, &mut a, &mut b, dg);
    }
    Ok((a, b))
}

/// `(∫ t_i dΓ - F_i)²` summed over the selected components.
pub fn resultant_residual_form(
    bc: &BoundaryCondition,
    patches: &[Patch],
    dofs: &GlobalDofMap,
    quad: &EdgeQuadrature,
) -> Result<QuadraticForm> {
    let BcKind::Resultant { target, components } = &bc.kind else {
        return Err(Error::Config(format!("`{}` is not a resultant condition", bc.label)));
    };
    let mut form = QuadraticForm::zeros(dofs.total());
    for &c in components.indices() {
        let (a, b) = integrate_edge(patches, dofs, bc.edge, quad, |t, a, b, dg| {
            let (coeffs, constant) = t.component(c);
            for (k, &d) in t.dofs.iter().enumerate() {
                a[d] += dg * coeffs[k];
            }
            *b += dg * constant;
        })?;
        form.add_squared_dense(&a, b - target[c], bc.weight);
    }
    Ok(form)
}

/// `(∫ t_x y dΓ - M)²`.
pub fn moment_residual_form(
    bc: &BoundaryCondition,
    patches: &[Patch],
    dofs: &GlobalDofMap,
    quad: &EdgeQuadrature,
) -> Result<QuadraticForm> {
    let BcKind::Moment { target } = &bc.kind else {
        return Err(Error::Config(format!("`{}` is not a moment condition", bc.label)));
    };
    let (a, b) = integrate_edge(patches, dofs, bc.edge, quad, |t, a, b, dg| {
        let y = t.frame.y;
        for (k, &d) in t.dofs.iter().enumerate() {
            a[d] += dg * y * t.tx[k];
        }
        *b += dg * y * t.constant[0];
    })?;
    let mut form = QuadraticForm::zeros(dofs.total());
    form.add_squared_dense(&a, b - target, bc.weight);
    Ok(form)
}

/// Whether edge `b` runs along edge `a` in the same (`false`) or opposite (`true`) direction.
fn partner_orientation(pa: &Patch, a: Side, pb: &Patch, b: Side) -> Result<bool> {
    let scale = pa.mapping.scale().max(pb.mapping.scale());
    let tol = 1e-9 * scale;
    let at = |p: &Patch, side: Side, s: f64| {
        let (xi, eta) = side.point(s);
        p.mapping.map_point(xi, eta)
    };
    let dist = |u: (f64, f64), v: (f64, f64)| (u.0 - v.0).hypot(u.1 - v.1);
    let mut candidates = Vec::new();
    for reversed in [false, true] {
        let mut ok = true;
        for k in 0..=8 {
            let s = k as f64 / 8.0;
            let sb = if reversed { 1.0 - s } else { s };
            if dist(at(pa, a, s)?, at(pb, b, sb)?) > tol {
                ok = false;
                break;
            }
        }
        if ok {
            candidates.push(reversed);
        }
    }
    candidates.first().copied().ok_or_else(|| {
        Error::Config(format!(
            "coupled edges {} of `{}` and {} of `{}` do not trace the same curve",
            a, pa.name, b, pb.name
        ))
    })
}

/// `∫ |t^A(φ) + t^B(φ)|² dΓ`, each traction with its own outward normal.
pub fn interface_coupling_form(
    bc: &BoundaryCondition,
    patches: &[Patch],
    dofs: &GlobalDofMap,
    quad: &EdgeQuadrature,
) -> Result<QuadraticForm> {
    let BcKind::Coupling { partner, components } = &bc.kind else {
        return Err(Error::Config(format!("`{}` is not a coupling condition", bc.label)));
    };
    let (ea, eb) = (bc.edge, *partner);
    if ea.patch == eb.patch {
        return Err(Error::Config(format!("coupling `{}` joins a patch to itself", bc.label)));
    }
    let pa = patch_of(patches, ea)?;
    let pb = patch_of(patches, eb)?;
    let reversed = partner_orientation(pa, ea.side, pb, eb.side)?;
    let map_b = |s: f64| if reversed { 1.0 - s } else { s };

    let mut breaks = edge_breaks(pa, ea.side);
    breaks.extend(edge_breaks(pb, eb.side).into_iter().map(map_b));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let points = quad.points(pa).max(quad.points(pb));

    let mut form = QuadraticForm::zeros(dofs.total());
    for (s, w) in rule_on(&breaks, points) {
        let ta = boundary_traction_functional(patches, dofs, ea, s)?;
        let tb = boundary_traction_functional(patches, dofs, eb, map_b(s))?;
        let dg = w * ta.frame.measure;
        let mut all = ta.dofs.clone();
        all.extend(&tb.dofs);
        for &c in components.indices() {
            let (ca, ka) = ta.component(c);
            let (cb, kb) = tb.component(c);
            let mut coeffs = ca.to_vec();
            coeffs.extend_from_slice(cb);
            form.add_squared_affine(&all, &coeffs, ka + kb, bc.weight * dg);
        }
    }
    Ok(form)
}

/// Residual form of any weak condition; `None` for displacement and free edges.
pub fn residual_form(
    bc: &BoundaryCondition,
    patches: &[Patch],
    dofs: &GlobalDofMap,
    quad: &EdgeQuadrature,
) -> Result<Option<QuadraticForm>> {
    if !(bc.weight >= 0.0 && bc.weight.is_finite()) {
        return Err(Error::Config(format!("`{}` has invalid weight {}", bc.label, bc.weight)));
    }
    Ok(match bc.kind {
        BcKind::Traction { .. } => Some(traction_residual_form(bc, patches, dofs, quad)?),
        BcKind::Resultant { .. } => Some(resultant_residual_form(bc, patches, dofs, quad)?),
        BcKind::Moment { .. } => Some(moment_residual_form(bc, patches, dofs, quad)?),
        BcKind::Coupling { .. } => Some(interface_coupling_form(bc, patches, dofs, quad)?),
        BcKind::Displacement { .. } | BcKind::Free => None,
    })
}

/// Which derivative of `φ̂` a strong condition prescribes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DerivativeOrder {
    Value,
    Xi,
    Eta,
    XiXi,
    XiEta,
    EtaEta,
}

impl DerivativeOrder {
    fn orders(self) -> (usize, usize) {
        match self {
            DerivativeOrder::Value => (0, 0),
            DerivativeOrder::Xi => (1, 0),
            DerivativeOrder::Eta => (0, 1),
            DerivativeOrder::XiXi => (2, 0),
            DerivativeOrder::XiEta => (1, 1),
            DerivativeOrder::EtaEta => (0, 2),
        }
    }
}

/// Prescribed control values of a derivative net along one side of a patch.
#[derive(Clone, Debug, PartialEq)]
pub struct StrongPrescription {
    pub patch: usize,
    pub order: DerivativeOrder,
    pub side: Side,
    /// One value per derivative control variable along the side, or a single
    /// value applied to all of them.
    pub targets: Vec<f64>,
}

/// Independent linear equality constraints `A φ = b`.
#[derive(Clone, Debug, PartialEq)]
pub struct StrongConstraintSet {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl StrongConstraintSet {
    pub fn rank(&self) -> usize {
        self.a.nrows()
    }

    /// DOFs appearing in at least one constraint.
    pub fn constrained_dofs(&self) -> Vec<usize> {
        (0..self.a.ncols())
            .filter(|&c| self.a.column(c).iter().any(|&v| v != 0.0))
            .collect()
    }

    /// `weight |A φ - b|²`, usable as a boundary-condition form.
    pub fn as_form(&self, weight: f64) -> QuadraticForm {
        let mut form = QuadraticForm::zeros(self.a.ncols());
        for r in 0..self.a.nrows() {
            let row = self.a.row(r).transpose();
            form.add_squared_dense(&row, -self.b[r], weight);
        }
        form
    }
}

/// `D^(k)` mapping control values to `k`-th derivative control values.
fn difference_operator(basis: &BSplineBasis, order: usize) -> Result<DMatrix<f64>> {
    let mut op = DMatrix::identity(basis.count(), basis.count());
    let mut b = basis.clone();
    for _ in 0..order {
        op = b.difference_matrix()? * op;
        b = b.derivative_basis()?;
    }
    Ok(op)
}

/// Linear constraints on control variables from prescribed derivative-net values.
pub fn strong_constraints(patches: &[Patch], dofs: &GlobalDofMap, prescribed: &[StrongPrescription]) -> Result<StrongConstraintSet> {
    let n_dof = dofs.total();
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for pr in prescribed {
        let patch = patches
            .get(pr.patch)
            .ok_or_else(|| Error::Config(format!("strong constraint on missing patch {}", pr.patch)))?;
        let (a, b) = pr.order.orders();
        let dx = difference_operator(patch.net.xi_basis(), a)?;
        let dy = difference_operator(patch.net.eta_basis(), b)?;
        let (rn, cn) = (dx.nrows(), dy.nrows());
        let cells: Vec<(usize, usize)> = match pr.side {
            Side::Xi0 => (0..cn).map(|c| (0, c)).collect(),
            Side::Xi1 => (0..cn).map(|c| (rn - 1, c)).collect(),
            Side::Eta0 => (0..rn).map(|r| (r, 0)).collect(),
            Side::Eta1 => (0..rn).map(|r| (r, cn - 1)).collect(),
        };
        let targets: Vec<f64> = match pr.targets.len() {
            1 => vec![pr.targets[0]; cells.len()],
            k if k == cells.len() => pr.targets.clone(),
            k => {
                return Err(Error::Config(format!(
                    "{} targets given for {} derivative control values",
                    k,
                    cells.len()
                )))
            }
        };
        let (n, m) = patch.net.shape();
        for ((r, c), t) in cells.into_iter().zip(targets) {
            let mut row = vec![0.0; n_dof];
            for i in 0..n {
                if dx[(r, i)] == 0.0 {
                    continue;
                }
                for j in 0..m {
                    row[dofs.global(pr.patch, i, j)] += dx[(r, i)] * dy[(c, j)];
                }
            }
            rows.push((row, t));
        }
    }
    reduce_rows(rows, n_dof)
}

/// Gauss–Jordan elimination with partial pivoting on `[A | b]`; drops
/// dependent rows and reports inconsistent ones.
fn reduce_rows(rows: Vec<(Vec<f64>, f64)>, n: usize) -> Result<StrongConstraintSet> {
    let mut m: Vec<Vec<f64>> = rows
        .into_iter()
        .map(|(mut r, b)| {
            r.push(b);
            r
        })
        .collect();
    let scale = m
        .iter()
        .flat_map(|r| r[..n].iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    let tol = 1e-10 * scale.max(f64::MIN_POSITIVE);
    let mut rank = 0;
    for col in 0..n {
        if rank == m.len() {
            break;
        }
        let (piv, best) = (rank..m.len())
            .map(|r| (r, m[r][col].abs()))
            .fold((rank, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= tol {
            continue;
        }
        m.swap(rank, piv);
        let p = m[rank][col];
        for v in m[rank].iter_mut() {
            *v /= p;
        }
        for r in 0..m.len() {
            if r != rank && m[r][col] != 0.0 {
                let f = m[r][col];
                for k in col..=n {
                    let d = f * m[rank][k];
                    m[r][k] -= d;
                }
                m[r][col] = 0.0;
            }
        }
        rank += 1;
    }
    let bscale = m.iter().fold(1.0f64, |acc, r| acc.max(r[n].abs()));
    for r in &m[rank..] {
        if r[n].abs() > 1e-9 * bscale {
            return Err(Error::InfeasibleConstraints(format!(
                "prescribed derivative values are inconsistent (residual {:e})",
                r[n]
            )));
        }
    }
    let a = DMatrix::from_fn(rank, n, |r, c| m[r][c]);
    let b = DVector::from_fn(rank, |r, _| m[r][n]);
    Ok(StrongConstraintSet { a, b })
}
