//! Geometric mappings from the parametric unit square onto physical patches.
//!
//! Every mapping is stored as a pair of polynomial coefficient tables
//! `x(ξ, η) = Σ a_kl ξ^k η^l`, `y(ξ, η) = Σ b_kl ξ^k η^l` with `k, l ≤ 3`,
//! which covers all built-in case geometries and gives exact first and second
//! derivatives.

use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::materials::{BodyForcePotential, ComplianceModel};
use crate::spline::ControlNet;

/// Bi-cubic coefficient table, indexed `[k][l]` for `ξ^k η^l`.
pub type PolyCoefficients = [[f64; 4]; 4];

const FACTORS: [[f64; 4]; 3] = [[1.0; 4], [0.0, 1.0, 2.0, 3.0], [0.0, 0.0, 2.0, 6.0]];

fn power(t: f64, k: usize, d: usize) -> f64 {
    if k < d {
        0.0
    } else {
        FACTORS[d][k] * t.powi((k - d) as i32)
    }
}

fn eval_poly(c: &PolyCoefficients, xi: f64, eta: f64, dxi: usize, deta: usize) -> f64 {
    let mut sum = 0.0;
    for (k, row) in c.iter().enumerate() {
        let a = power(xi, k, dxi);
        if a == 0.0 {
            continue;
        }
        for (l, &coef) in row.iter().enumerate() {
            if coef != 0.0 {
                sum += coef * a * power(eta, l, deta);
            }
        }
    }
    sum
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MappingKind {
    Rectangle,
    Bar,
    Beam,
    BilayerBottom,
    BilayerTop,
    Parabolic,
    GeneralAnalytic,
}

impl MappingKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MappingKind::Rectangle => "rectangle",
            MappingKind::Bar => "bar",
            MappingKind::Beam => "beam",
            MappingKind::BilayerBottom => "bilayer-bottom",
            MappingKind::BilayerTop => "bilayer-top",
            MappingKind::Parabolic => "parabolic",
            MappingKind::GeneralAnalytic => "general-analytic",
        }
    }
}

impl fmt::Display for MappingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MappingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "rectangle" => MappingKind::Rectangle,
            "bar" => MappingKind::Bar,
            "beam" => MappingKind::Beam,
            "bilayer-bottom" => MappingKind::BilayerBottom,
            "bilayer-top" => MappingKind::BilayerTop,
            "parabolic" => MappingKind::Parabolic,
            "general-analytic" => MappingKind::GeneralAnalytic,
            other => return Err(Error::Config(format!("unknown mapping kind `{other}`"))),
        })
    }
}

/// Second derivatives of the inverse map `(x, y) → (ξ, η)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct InverseHessians {
    pub xi_xx: f64,
    pub xi_xy: f64,
    pub xi_yy: f64,
    pub eta_xx: f64,
    pub eta_xy: f64,
    pub eta_yy: f64,
}

impl InverseHessians {
    pub fn as_array(&self) -> [f64; 6] {
        [
            self.xi_xx,
            self.xi_xy,
            self.xi_yy,
            self.eta_xx,
            self.eta_xy,
            self.eta_yy,
        ]
    }
}

/// Polynomial map `T: [0,1]² → ℝ²`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometricMapping {
    kind: MappingKind,
    x: PolyCoefficients,
    y: PolyCoefficients,
    scale: f64,
}

impl GeometricMapping {
    pub fn from_coefficients(kind: MappingKind, x: PolyCoefficients, y: PolyCoefficients) -> Result<Self> {
        if x.iter().chain(y.iter()).flatten().any(|v| !v.is_finite()) {
            return Err(Error::Config("non-finite mapping coefficient".into()));
        }
        let mut m = Self { kind, x, y, scale: 1.0 };
        let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for a in 0..=8 {
            for b in 0..=8 {
                let (px, py) = m.eval(a as f64 / 8.0, b as f64 / 8.0);
                xmin = xmin.min(px);
                xmax = xmax.max(px);
                ymin = ymin.min(py);
                ymax = ymax.max(py);
            }
        }
        m.scale = (xmax - xmin).max(ymax - ymin);
        if m.scale <= 0.0 {
            return Err(Error::Config("mapping collapses the unit square to a point".into()));
        }
        Ok(m)
    }

    /// General polynomial map of bi-degree up to 3.
    pub fn general(x: PolyCoefficients, y: PolyCoefficients) -> Result<Self> {
        Self::from_coefficients(MappingKind::GeneralAnalytic, x, y)
    }

    /// Axis-aligned map `x = x0 + (x1 - x0) ξ`, `y = y0 + (y1 - y0) η`.
    pub fn rectangle(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        Self::affine(MappingKind::Rectangle, [x0, x1 - x0, 0.0], [y0, 0.0, y1 - y0])
    }

    pub fn identity() -> Self {
        Self::rectangle(0.0, 1.0, 0.0, 1.0).expect("unit square is a valid mapping")
    }

    /// Vertical bar of width `c` and length `l`: `(ξc, (1 - η) l)`.
    pub fn bar(l: f64, c: f64) -> Result<Self> {
        Self::affine(MappingKind::Bar, [0.0, c, 0.0], [l, 0.0, -l])
    }

    /// Beam of half-length `l` and half-height `c`: `((2ξ - 1) l, (1 - 2η) c)`.
    pub fn beam(l: f64, c: f64) -> Result<Self> {
        Self::affine(MappingKind::Beam, [-l, 2.0 * l, 0.0], [c, 0.0, -2.0 * c])
    }

    pub fn bilayer_bottom(length: f64, h1: f64) -> Result<Self> {
        Self::affine(MappingKind::BilayerBottom, [0.0, length, 0.0], [0.0, 0.0, h1])
    }

    pub fn bilayer_top(length: f64, h1: f64, h2: f64) -> Result<Self> {
        Self::affine(MappingKind::BilayerTop, [0.0, length, 0.0], [h1, 0.0, h2])
    }

    /// Cantilever with a horizontal top edge and parabolic lower edge:
    /// `x = ξL`, `y = H0/4 (2η + (1 - η)(-2ξ² + 4ξ - 2) - 1)`.
    pub fn parabolic(length: f64, h0: f64) -> Result<Self> {
        let q = h0 / 4.0;
        let mut x = [[0.0; 4]; 4];
        let mut y = [[0.0; 4]; 4];
        x[1][0] = length;
        y[0][0] = -3.0 * q;
        y[1][0] = 4.0 * q;
        y[2][0] = -2.0 * q;
        y[0][1] = 4.0 * q;
        y[1][1] = -4.0 * q;
        y[2][1] = 2.0 * q;
        Self::from_coefficients(MappingKind::Parabolic, x, y)
    }

    // [constant, ξ, η] coefficients for each coordinate.
    fn affine(kind: MappingKind, x: [f64; 3], y: [f64; 3]) -> Result<Self> {
        let mut cx = [[0.0; 4]; 4];
        let mut cy = [[0.0; 4]; 4];
        cx[0][0] = x[0];
        cx[1][0] = x[1];
        cx[0][1] = x[2];
        cy[0][0] = y[0];
        cy[1][0] = y[1];
        cy[0][1] = y[2];
        Self::from_coefficients(kind, cx, cy)
    }

    pub fn kind(&self) -> MappingKind {
        self.kind
    }

    pub fn x_coefficients(&self) -> &PolyCoefficients {
        &self.x
    }

    pub fn y_coefficients(&self) -> &PolyCoefficients {
        &self.y
    }

    /// Largest extent of the mapped patch along either axis.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// True when the Jacobian is constant.
    pub fn is_affine(&self) -> bool {
        [&self.x, &self.y].iter().all(|c| {
            c.iter().enumerate().all(|(k, row)| {
                row.iter()
                    .enumerate()
                    .all(|(l, &v)| v == 0.0 || k + l <= 1)
            })
        })
    }

    fn eval(&self, xi: f64, eta: f64) -> (f64, f64) {
        (
            eval_poly(&self.x, xi, eta, 0, 0),
            eval_poly(&self.y, xi, eta, 0, 0),
        )
    }

    pub fn map_point(&self, xi: f64, eta: f64) -> Result<(f64, f64)> {
        check_unit_square(xi, eta)?;
        Ok(self.eval(xi, eta))
    }

    fn raw_jacobian(&self, xi: f64, eta: f64) -> Matrix2<f64> {
        Matrix2::new(
            eval_poly(&self.x, xi, eta, 1, 0),
            eval_poly(&self.x, xi, eta, 0, 1),
            eval_poly(&self.y, xi, eta, 1, 0),
            eval_poly(&self.y, xi, eta, 0, 1),
        )
    }

    /// `J = [[x_ξ, x_η], [y_ξ, y_η]]`.
    pub fn jacobian(&self, xi: f64, eta: f64) -> Result<Matrix2<f64>> {
        check_unit_square(xi, eta)?;
        let j = self.raw_jacobian(xi, eta);
        let det = j.determinant();
        if !(det.abs() >= 1e-12 * self.scale * self.scale) {
            return Err(Error::DegenerateMapping { xi, eta, det });
        }
        Ok(j)
    }

    /// `J⁻¹ = [[ξ_x, ξ_y], [η_x, η_y]]`.
    pub fn inverse_jacobian(&self, xi: f64, eta: f64) -> Result<Matrix2<f64>> {
        let j = self.jacobian(xi, eta)?;
        let det = j.determinant();
        Ok(Matrix2::new(j[(1, 1)], -j[(0, 1)], -j[(1, 0)], j[(0, 0)]) / det)
    }

    /// `(∂J/∂ξ, ∂J/∂η)`.
    pub fn jacobian_derivatives(&self, xi: f64, eta: f64) -> (Matrix2<f64>, Matrix2<f64>) {
        let d = |c: &PolyCoefficients, a, b| eval_poly(c, xi, eta, a, b);
        (
            Matrix2::new(d(&self.x, 2, 0), d(&self.x, 1, 1), d(&self.y, 2, 0), d(&self.y, 1, 1)),
            Matrix2::new(d(&self.x, 1, 1), d(&self.x, 0, 2), d(&self.y, 1, 1), d(&self.y, 0, 2)),
        )
    }

    /// Second derivatives of `ξ(x, y)` and `η(x, y)`, from differentiating
    /// `J⁻¹ J = I`: `∂J⁻¹/∂x_k = -J⁻¹ (J_ξ ξ_{x_k} + J_η η_{x_k}) J⁻¹`.
    pub fn inverse_hessians(&self, xi: f64, eta: f64) -> Result<InverseHessians> {
        let k = self.inverse_jacobian(xi, eta)?;
        if self.is_affine() {
            return Ok(InverseHessians::default());
        }
        let (j_xi, j_eta) = self.jacobian_derivatives(xi, eta);
        let dk_dx = -k * (j_xi * k[(0, 0)] + j_eta * k[(1, 0)]) * k;
        let dk_dy = -k * (j_xi * k[(0, 1)] + j_eta * k[(1, 1)]) * k;
        Ok(InverseHessians {
            xi_xx: dk_dx[(0, 0)],
            xi_xy: dk_dy[(0, 0)],
            xi_yy: dk_dy[(0, 1)],
            eta_xx: dk_dx[(1, 0)],
            eta_xy: dk_dy[(1, 0)],
            eta_yy: dk_dy[(1, 1)],
        })
    }

    /// Parametric coordinates of a physical point, by damped Newton iteration.
    pub fn inverse_point(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        let tol = 1e-14 * self.scale;
        let mut best: Option<(f64, f64, f64)> = None;
        for &(s0, t0) in &[(0.5, 0.5), (0.25, 0.25), (0.75, 0.75), (0.25, 0.75), (0.75, 0.25)] {
            let (mut s, mut t) = (s0, t0);
            for _ in 0..100 {
                let (px, py) = self.eval(s, t);
                let (rx, ry) = (px - x, py - y);
                let j = self.raw_jacobian(s, t);
                let det = j.determinant();
                if det == 0.0 {
                    break;
                }
                let ds = (j[(1, 1)] * rx - j[(0, 1)] * ry) / det;
                let dt = (-j[(1, 0)] * rx + j[(0, 0)] * ry) / det;
                s -= ds;
                t -= dt;
                if ds.abs() < 1e-15 && dt.abs() < 1e-15 {
                    break;
                }
            }
            let (px, py) = self.eval(s, t);
            let r = (px - x).hypot(py - y);
            if best.is_none_or(|b| r < b.2) {
                best = Some((s, t, r));
            }
            if r <= tol {
                break;
            }
        }
        let (s, t, r) = best.expect("at least one start");
        if r > 1e-9 * self.scale {
            return Err(Error::OutsideMaterial { x, y });
        }
        let clamp = |v: f64| {
            if (-1e-10..0.0).contains(&v) {
                Ok(0.0)
            } else if v > 1.0 && v <= 1.0 + 1e-10 {
                Ok(1.0)
            } else if (0.0..=1.0).contains(&v) {
                Ok(v)
            } else {
                Err(Error::Domain { value: v })
            }
        };
        Ok((clamp(s)?, clamp(t)?))
    }

    /// Position, outward unit normal, and arc-length factor `|dT/ds|` at
    /// parameter `s` along `side`.
    pub fn edge_frame(&self, side: Side, s: f64) -> Result<EdgeFrame> {
        let (xi, eta) = side.point(s);
        let j = self.jacobian(xi, eta)?;
        let along = side.along_column();
        let across = 1 - along;
        let tangent = [j[(0, along)], j[(1, along)]];
        let measure = tangent[0].hypot(tangent[1]);
        let mut normal = [tangent[1] / measure, -tangent[0] / measure];
        let inward = [j[(0, across)], j[(1, across)]];
        let dot = normal[0] * inward[0] + normal[1] * inward[1];
        let outward_sign = if side.is_start() { -1.0 } else { 1.0 };
        if dot * outward_sign < 0.0 {
            normal = [-normal[0], -normal[1]];
        }
        let (x, y) = self.eval(xi, eta);
        Ok(EdgeFrame {
            xi,
            eta,
            x,
            y,
            normal,
            measure,
        })
    }
}

fn check_unit_square(xi: f64, eta: f64) -> Result<()> {
    for v in [xi, eta] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Domain { value: v });
        }
    }
    Ok(())
}

/// One of the four parametric edges of a patch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Xi0,
    Xi1,
    Eta0,
    Eta1,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Xi0, Side::Xi1, Side::Eta0, Side::Eta1];

    /// Parametric point at edge parameter `s` (traversed in increasing ξ or η).
    pub fn point(self, s: f64) -> (f64, f64) {
        match self {
            Side::Xi0 => (0.0, s),
            Side::Xi1 => (1.0, s),
            Side::Eta0 => (s, 0.0),
            Side::Eta1 => (s, 1.0),
        }
    }

    /// Jacobian column of the edge tangent: 1 (η) for ξ-sides, 0 (ξ) for η-sides.
    pub fn along_column(self) -> usize {
        match self {
            Side::Xi0 | Side::Xi1 => 1,
            Side::Eta0 | Side::Eta1 => 0,
        }
    }

    fn is_start(self) -> bool {
        matches!(self, Side::Xi0 | Side::Eta0)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Xi0 => "xi0",
            Side::Xi1 => "xi1",
            Side::Eta0 => "eta0",
            Side::Eta1 => "eta1",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "xi0" => Side::Xi0,
            "xi1" => Side::Xi1,
            "eta0" => Side::Eta0,
            "eta1" => Side::Eta1,
            other => {
                return Err(Error::Config(format!(
                    "unknown side `{other}` (expected xi0, xi1, eta0 or eta1)"
                )))
            }
        })
    }
}

/// Local frame of a patch edge at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeFrame {
    pub xi: f64,
    pub eta: f64,
    pub x: f64,
    pub y: f64,
    pub normal: [f64; 2],
    pub measure: f64,
}

/// A full parametric edge of one patch, traversed in increasing parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeRef {
    pub patch: usize,
    pub side: Side,
}

impl EdgeRef {
    pub fn new(patch: usize, side: Side) -> Self {
        Self { patch, side }
    }
}

/// A mapped region with its own stress-function net, material, and potential.
#[derive(Clone, Debug)]
pub struct Patch {
    pub name: String,
    pub mapping: GeometricMapping,
    /// Basis template; control values are carried by the global solution vector.
    pub net: ControlNet,
    pub material: ComplianceModel,
    pub potential: BodyForcePotential,
}

impl Patch {
    pub fn new(
        name: impl Into<String>,
        mapping: GeometricMapping,
        net: ControlNet,
        material: ComplianceModel,
        potential: BodyForcePotential,
    ) -> Self {
        Self {
            name: name.into(),
            mapping,
            net,
            material,
            potential,
        }
    }

    /// Knot spans along an edge, in the edge's own parameter.
    pub fn edge_spans(&self, side: Side) -> Vec<(f64, f64)> {
        match side {
            Side::Xi0 | Side::Xi1 => self.net.eta_basis().spans(),
            Side::Eta0 | Side::Eta1 => self.net.xi_basis().spans(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fd_jacobian(m: &GeometricMapping, xi: f64, eta: f64, h: f64) -> Matrix2<f64> {
        let p = |a: f64, b: f64| m.map_point(a, b).unwrap();
        let (xp, yp) = p(xi + h, eta);
        let (xm, ym) = p(xi - h, eta);
        let (xq, yq) = p(xi, eta + h);
        let (xn, yn) = p(xi, eta - h);
        Matrix2::new(
            (xp - xm) / (2.0 * h),
            (xq - xn) / (2.0 * h),
            (yp - ym) / (2.0 * h),
            (yq - yn) / (2.0 * h),
        )
    }

    #[test]
    fn map_point_examples() {
        let bar = GeometricMapping::bar(2.0, 0.5).unwrap();
        assert_eq!(bar.map_point(0.0, 0.0).unwrap(), (0.0, 2.0));
        let beam = GeometricMapping::beam(3.0, 0.25).unwrap();
        assert_eq!(beam.map_point(0.5, 0.5).unwrap(), (0.0, 0.0));
        let para = GeometricMapping::parabolic(5.0, 1.0).unwrap();
        let (x, y) = para.map_point(1.0, 0.0).unwrap();
        assert_relative_eq!(x, 5.0);
        assert_relative_eq!(y, -0.25);
        assert!(bar.map_point(1.2, 0.0).is_err());
    }

    #[test]
    fn case_corners() {
        let bar = GeometricMapping::bar(2.0, 0.5).unwrap();
        assert_eq!(bar.map_point(1.0, 1.0).unwrap(), (0.5, 0.0));
        let beam = GeometricMapping::beam(3.0, 0.25).unwrap();
        assert_eq!(beam.map_point(0.0, 0.0).unwrap(), (-3.0, 0.25));
        assert_eq!(beam.map_point(1.0, 1.0).unwrap(), (3.0, -0.25));
        let top = GeometricMapping::bilayer_top(500.0, 50.0, 50.0).unwrap();
        assert_eq!(top.map_point(0.0, 0.0).unwrap(), (0.0, 50.0));
        assert_eq!(top.map_point(1.0, 1.0).unwrap(), (500.0, 100.0));
        let bottom = GeometricMapping::bilayer_bottom(500.0, 50.0).unwrap();
        assert_eq!(bottom.map_point(1.0, 1.0).unwrap(), (500.0, 50.0));
        let para = GeometricMapping::parabolic(5.0, 1.0).unwrap();
        let corners = [
            ((0.0, 0.0), (0.0, -0.75)),
            ((0.0, 1.0), (0.0, 0.25)),
            ((1.0, 1.0), (5.0, 0.25)),
        ];
        for ((s, t), (x, y)) in corners {
            let (px, py) = para.map_point(s, t).unwrap();
            assert_relative_eq!(px, x, epsilon = 1e-15);
            assert_relative_eq!(py, y, epsilon = 1e-15);
        }
    }

    #[test]
    fn affine_jacobians() {
        let bar = GeometricMapping::bar(2.0, 0.5).unwrap();
        assert_eq!(bar.jacobian(0.3, 0.9).unwrap(), Matrix2::new(0.5, 0.0, 0.0, -2.0));
        assert_eq!(
            bar.inverse_jacobian(0.1, 0.2).unwrap(),
            Matrix2::new(2.0, 0.0, 0.0, -0.5)
        );
        let beam = GeometricMapping::beam(3.0, 0.25).unwrap();
        assert_eq!(beam.jacobian(0.5, 0.5).unwrap(), Matrix2::new(6.0, 0.0, 0.0, -0.5));
        let id = GeometricMapping::identity();
        assert_eq!(id.inverse_jacobian(0.4, 0.4).unwrap(), Matrix2::identity());
        assert!(bar.is_affine() && beam.is_affine() && id.is_affine());
        for m in [bar, beam, id] {
            assert_eq!(m.inverse_hessians(0.3, 0.6).unwrap().as_array(), [0.0; 6]);
        }
    }

    #[test]
    fn parabolic_jacobian_matches_finite_differences() {
        let para = GeometricMapping::parabolic(5.0, 1.0).unwrap();
        assert!(!para.is_affine());
        let j = para.jacobian(0.3, 0.7).unwrap();
        let fd = fd_jacobian(&para, 0.3, 0.7, 1e-6);
        for k in 0..4 {
            assert!((j[k] - fd[k]).abs() <= 1e-7 * j[k].abs().max(1e-3), "{j} vs {fd}");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let (s, t) = (rng.gen_range(0.01..0.99), rng.gen_range(0.01..0.99));
            let j = para.jacobian(s, t).unwrap();
            let fd = fd_jacobian(&para, s, t, 1e-6);
            assert!((j - fd).amax() <= 1e-6 * j.amax());
            let prod = para.inverse_jacobian(s, t).unwrap() * j;
            assert!((prod - Matrix2::identity()).amax() < 1e-12);
        }
    }

    #[test]
    fn parabolic_inverse_hessians_match_numeric_inverse() {
        let para = GeometricMapping::parabolic(5.0, 1.0).unwrap();
        let (s, t) = (0.4, 0.6);
        let (x, y) = para.map_point(s, t).unwrap();
        let inv = |x: f64, y: f64| para.inverse_point(x, y).unwrap();
        let h = 1e-3;
        let c = inv(x, y);
        let xp = inv(x + h, y);
        let xm = inv(x - h, y);
        let yp = inv(x, y + h);
        let ym = inv(x, y - h);
        let pp = inv(x + h, y + h);
        let pm = inv(x + h, y - h);
        let mp = inv(x - h, y + h);
        let mm = inv(x - h, y - h);
        let second = |f: fn((f64, f64)) -> f64| {
            [
                (f(xp) - 2.0 * f(c) + f(xm)) / (h * h),
                (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * h * h),
                (f(yp) - 2.0 * f(c) + f(ym)) / (h * h),
            ]
        };
        let a = second(|p| p.0);
        let b = second(|p| p.1);
        let got = para.inverse_hessians(s, t).unwrap().as_array();
        let want = [a[0], a[1], a[2], b[0], b[1], b[2]];
        let norm = want.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (g, w) in got.iter().zip(want.iter()) {
            assert!((g - w).abs() <= 1e-4 * norm, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn chain_rule_hessian_of_composed_function() {
        // f(x, y) = sin(x) y² + x³, written as f̂(ξ, η) = f(T(ξ, η)).
        let para = GeometricMapping::parabolic(5.0, 1.0).unwrap();
        let f = |x: f64, y: f64| x.sin() * y * y + 0.01 * x * x * x;
        let fh = |s: f64, t: f64| {
            let (x, y) = para.map_point(s, t).unwrap();
            f(x, y)
        };
        let (s, t) = (0.35, 0.55);
        let h = 1e-4;
        let d_s = (fh(s + h, t) - fh(s - h, t)) / (2.0 * h);
        let d_t = (fh(s, t + h) - fh(s, t - h)) / (2.0 * h);
        let d_ss = (fh(s + h, t) - 2.0 * fh(s, t) + fh(s - h, t)) / (h * h);
        let d_tt = (fh(s, t + h) - 2.0 * fh(s, t) + fh(s, t - h)) / (h * h);
        let d_st = (fh(s + h, t + h) - fh(s + h, t - h) - fh(s - h, t + h) + fh(s - h, t - h))
            / (4.0 * h * h);
        let k = para.inverse_jacobian(s, t).unwrap();
        let ih = para.inverse_hessians(s, t).unwrap();
        let hp = Matrix2::new(d_ss, d_st, d_st, d_tt);
        let core = k.transpose() * hp * k;
        let fxx = core[(0, 0)] + ih.xi_xx * d_s + ih.eta_xx * d_t;
        let fxy = core[(0, 1)] + ih.xi_xy * d_s + ih.eta_xy * d_t;
        let fyy = core[(1, 1)] + ih.xi_yy * d_s + ih.eta_yy * d_t;
        let (x, y) = para.map_point(s, t).unwrap();
        let e = 1e-4;
        let fxx_fd = (f(x + e, y) - 2.0 * f(x, y) + f(x - e, y)) / (e * e);
        let fyy_fd = (f(x, y + e) - 2.0 * f(x, y) + f(x, y - e)) / (e * e);
        let fxy_fd =
            (f(x + e, y + e) - f(x + e, y - e) - f(x - e, y + e) + f(x - e, y - e)) / (4.0 * e * e);
        for (g, w) in [(fxx, fxx_fd), (fxy, fxy_fd), (fyy, fyy_fd)] {
            assert!((g - w).abs() <= 1e-4 * w.abs().max(1e-2), "{g} vs {w}");
        }
    }

    #[test]
    fn degenerate_mapping_detected() {
        let flat = GeometricMapping::rectangle(0.0, 1.0, 0.0, 0.0);
        assert!(flat.is_ok());
        let flat = flat.unwrap();
        assert!(matches!(
            flat.jacobian(0.5, 0.5),
            Err(Error::DegenerateMapping { .. })
        ));
    }

    #[test]
    fn outward_normals() {
        let bar = GeometricMapping::bar(2.0, 0.5).unwrap();
        let expect = [
            (Side::Xi0, [-1.0, 0.0], 2.0),
            (Side::Xi1, [1.0, 0.0], 2.0),
            (Side::Eta0, [0.0, 1.0], 0.5),
            (Side::Eta1, [0.0, -1.0], 0.5),
        ];
        for (side, n, len) in expect {
            let f = bar.edge_frame(side, 0.3).unwrap();
            assert_relative_eq!(f.normal[0], n[0], epsilon = 1e-15);
            assert_relative_eq!(f.normal[1], n[1], epsilon = 1e-15);
            assert_relative_eq!(f.measure, len);
        }
        let beam = GeometricMapping::beam(3.0, 0.25).unwrap();
        let top = beam.edge_frame(Side::Eta1, 0.5).unwrap();
        assert_eq!(top.normal, [0.0, -1.0]);
        assert_eq!(top.y, -0.25);
    }

    #[test]
    fn curved_normal_matches_finite_difference_tangent() {
        let para = GeometricMapping::parabolic(5.0, 1.0).unwrap();
        for s in [0.1, 0.5, 0.9] {
            let f = para.edge_frame(Side::Eta0, s).unwrap();
            let h = 1e-6;
            let (x1, y1) = para.map_point(s + h, 0.0).unwrap();
            let (x0, y0) = para.map_point(s - h, 0.0).unwrap();
            let (tx, ty) = ((x1 - x0) / (2.0 * h), (y1 - y0) / (2.0 * h));
            let len = tx.hypot(ty);
            assert!((f.measure - len).abs() < 1e-8 * len);
            // The lower boundary faces downward.
            assert!(f.normal[1] < 0.0);
            assert!((f.normal[0] * tx + f.normal[1] * ty).abs() < 1e-8 * len);
        }
    }

    #[test]
    fn inverse_point_round_trip() {
        let para = GeometricMapping::parabolic(5.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..30 {
            let (s, t) = (rng.gen_range(0.0..=1.0), rng.gen_range(0.0..=1.0));
            let (x, y) = para.map_point(s, t).unwrap();
            let (a, b) = para.inverse_point(x, y).unwrap();
            assert!((a - s).abs() < 1e-10 && (b - t).abs() < 1e-10);
        }
        assert!(para.inverse_point(2.5, 3.0).is_err());
    }

    #[test]
    fn parse_names() {
        assert_eq!("xi1".parse::<Side>().unwrap(), Side::Xi1);
        assert!("top".parse::<Side>().is_err());
        assert_eq!("parabolic".parse::<MappingKind>().unwrap(), MappingKind::Parabolic);
        assert!(matches!("hexagon".parse::<MappingKind>(), Err(Error::Config(_))));
    }
}
