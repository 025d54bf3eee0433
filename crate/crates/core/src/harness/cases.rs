//! The four built-in benchmark cases.

use std::fmt;
use std::str::FromStr;

use crate::constraints::{BcKind, BoundaryCondition, Component};
use crate::error::{Error, Result};
use crate::geometry::{EdgeRef, GeometricMapping, Patch, Side};
use crate::materials::{BodyForcePotential, ComplianceModel, Layer, Orthotropic};
use crate::model::Model;
use crate::physics::VectorField;
use crate::spline::ControlNet;

use super::reference::Reference;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CaseName {
    BarSelfWeight,
    BeamUniformLoad,
    BilayerCantilever,
    ParabolicCantilever,
}

impl CaseName {
    pub const ALL: [CaseName; 4] = [
        CaseName::BarSelfWeight,
        CaseName::BeamUniformLoad,
        CaseName::BilayerCantilever,
        CaseName::ParabolicCantilever,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseName::BarSelfWeight => "bar-self-weight",
            CaseName::BeamUniformLoad => "beam-uniform-load",
            CaseName::BilayerCantilever => "bilayer-cantilever",
            CaseName::ParabolicCantilever => "parabolic-cantilever",
        }
    }
}

impl fmt::Display for CaseName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CaseName::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| {
                let known: Vec<_> = CaseName::ALL.iter().map(|c| c.as_str()).collect();
                Error::Config(format!("unknown case `{s}` (known: {})", known.join(", ")))
            })
    }
}

/// Discretization changes allowed on a built-in case.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Overrides {
    pub degrees: Option<(usize, usize)>,
    pub net: Option<(usize, usize)>,
    /// Beam only: `l / c` with `l` held at its default.
    pub aspect: Option<f64>,
    pub quadrature: Option<usize>,
}

/// Vertical line `x = const` along which profiles are extracted.
#[derive(Clone, Debug, PartialEq)]
pub struct Station {
    pub label: String,
    pub x: f64,
}

#[derive(Clone, Debug)]
pub struct CaseDefinition {
    pub name: String,
    pub model: Model,
    pub reference: Option<Reference>,
    /// Gauss points per knot span for energy assembly and error integrals.
    pub quadrature: Option<usize>,
    pub stations: Vec<Station>,
    /// Free-form remarks written to the report.
    pub notes: Vec<String>,
}

impl CaseDefinition {
    pub fn has_reference(&self) -> bool {
        self.reference.is_some()
    }
}

/// Bar under self-weight.
pub mod bar {
    pub const L: f64 = 2.0;
    pub const C: f64 = 0.5;
    pub const RHO: f64 = 1.0;
    pub const G: f64 = 9.81;
    pub const E: f64 = 1e5;
    pub const NU: f64 = 0.3;
}

/// Beam under uniform transverse load.
pub mod beam {
    pub const L: f64 = 3.0;
    pub const ASPECT: f64 = 12.0;
    pub const W: f64 = 1.0;
    pub const E: f64 = 1e5;
    pub const NU: f64 = 0.3;
}

/// Bi-layer cantilever, in mm, N and N/mm².
pub mod bilayer {
    pub const L: f64 = 500.0;
    pub const H1: f64 = 50.0;
    pub const H2: f64 = 50.0;
    pub const W: f64 = 1.0;
    pub const E11: f64 = 1e4;
    pub const E22: f64 = 500.0;
    pub const G12: f64 = 1e3;
    pub const NU: f64 = 0.0;
    pub const THETA_TOP_DEG: f64 = 15.0;
}

/// Parabolic cantilever, in m, N and Pa.
pub mod parabolic {
    pub const L: f64 = 5.0;
    pub const H0: f64 = 1.0;
    pub const Q: f64 = 1e5;
    pub const P: f64 = -1e5;
    pub const E: f64 = 1e5;
    pub const NU: f64 = 0.3;
}

fn net(defaults: ((usize, usize), (usize, usize)), o: &Overrides) -> Result<ControlNet> {
    let degrees = o.degrees.unwrap_or(defaults.0);
    let counts = o.net.unwrap_or(defaults.1);
    if degrees.0 < 2 || degrees.1 < 2 {
        return Err(Error::InvalidDiscretization(format!(
            "degrees ({}, {}) below 2 cannot represent stresses",
            degrees.0, degrees.1
        )));
    }
    ControlNet::open_uniform(degrees, counts)
}

fn edge(patch: usize, side: Side) -> EdgeRef {
    EdgeRef::new(patch, side)
}

pub fn build_case(name: CaseName, overrides: &Overrides) -> Result<CaseDefinition> {
    if overrides.aspect.is_some() && name != CaseName::BeamUniformLoad {
        return Err(Error::Config(format!("--aspect applies only to {}", CaseName::BeamUniformLoad)));
    }
    if overrides.quadrature == Some(0) {
        return Err(Error::Config("quadrature needs at least one point".into()));
    }
    let mut def = match name {
        CaseName::BarSelfWeight => bar_case(overrides)?,
        CaseName::BeamUniformLoad => beam_case(overrides)?,
        CaseName::BilayerCantilever => bilayer_case(overrides)?,
        CaseName::ParabolicCantilever => parabolic_case(overrides)?,
    };
    def.quadrature = overrides.quadrature;
    Ok(def)
}

fn bar_case(o: &Overrides) -> Result<CaseDefinition> {
    use bar::*;
    let patch = Patch::new(
        "bar",
        GeometricMapping::bar(L, C)?,
        net(((3, 3), (5, 10)), o)?,
        ComplianceModel::isotropic(E, NU)?,
        BodyForcePotential::gravity(RHO, G, [0.0, 1.0])?,
    );
    let conditions = vec![
        BoundaryCondition::traction_free("left", edge(0, Side::Xi0)),
        BoundaryCondition::traction_free("right", edge(0, Side::Xi1)),
        BoundaryCondition::traction_free("bottom", edge(0, Side::Eta0)),
        BoundaryCondition::clamp("top-clamp", edge(0, Side::Eta1)),
    ];
    Ok(CaseDefinition {
        name: CaseName::BarSelfWeight.to_string(),
        model: Model::new(CaseName::BarSelfWeight.as_str(), vec![patch], conditions)?,
        reference: Some(Reference::Bar { rho: RHO, g: G, l: L }),
        quadrature: None,
        stations: vec![Station { label: "mid-width".into(), x: 0.5 * C }],
        notes: vec!["y points down from the clamped top edge y = 0".into()],
    })
}

fn beam_case(o: &Overrides) -> Result<CaseDefinition> {
    use beam::*;
    let aspect = o.aspect.unwrap_or(ASPECT);
    if !(aspect > 0.0 && aspect.is_finite()) {
        return Err(Error::Config(format!("aspect ratio must be positive, got {aspect}")));
    }
    let c = L / aspect;
    let patch = Patch::new(
        "beam",
        GeometricMapping::beam(L, c)?,
        net(((2, 5), (3, 6)), o)?,
        ComplianceModel::isotropic(E, NU)?,
        BodyForcePotential::None,
    );
    // η = 1 is the loaded face y = -c with outward normal (0, -1), so σyy = -w
    // means t = (0, w).
    let mut conditions = vec![
        BoundaryCondition::traction("top", edge(0, Side::Eta1), [0.0, W]),
        BoundaryCondition::traction_free("bottom", edge(0, Side::Eta0)),
    ];
    for (label, side) in [("left", Side::Xi0), ("right", Side::Xi1)] {
        conditions.push(BoundaryCondition::new(
            format!("{label}-axial"),
            edge(0, side),
            BcKind::Traction {
                target: VectorField::Constant([0.0, 0.0]),
                components: Component::X,
            },
        ));
        // Support reactions: the end tractions carry half the load each.
        conditions.push(BoundaryCondition::resultant(
            format!("{label}-shear"),
            edge(0, side),
            Component::Y,
            [0.0, -W * L],
        ));
        conditions.push(BoundaryCondition::moment(format!("{label}-moment"), edge(0, side), 0.0));
    }
    Ok(CaseDefinition {
        name: CaseName::BeamUniformLoad.to_string(),
        model: Model::new(CaseName::BeamUniformLoad.as_str(), vec![patch], conditions)?,
        reference: Some(Reference::Beam { w: W, l: L, c }),
        quadrature: None,
        stations: vec![
            Station { label: "mid-span".into(), x: 0.0 },
            Station { label: "x=1.5".into(), x: 1.5 },
        ],
        notes: vec![format!("loaded face at y = -c (c = {c}); l/c = {aspect}")],
    })
}

fn bilayer_case(o: &Overrides) -> Result<CaseDefinition> {
    use bilayer::*;
    let ply = |theta_deg: f64| Orthotropic {
        e11: E11,
        e22: E22,
        g12: G12,
        nu12: NU,
        theta: theta_deg.to_radians(),
    };
    let layer = |y_min: f64, y_max: f64, theta: f64| {
        ComplianceModel::layered(vec![Layer {
            y_min,
            y_max,
            material: ply(theta),
        }])
    };
    let bottom = Patch::new(
        "bottom",
        GeometricMapping::bilayer_bottom(L, H1)?,
        net(((2, 4), (12, 7)), o)?,
        layer(0.0, H1, 0.0)?,
        BodyForcePotential::None,
    );
    let top = Patch::new(
        "top",
        GeometricMapping::bilayer_top(L, H1, H2)?,
        net(((2, 4), (12, 7)), o)?,
        layer(H1, H1 + H2, THETA_TOP_DEG)?,
        BodyForcePotential::None,
    );
    let conditions = vec![
        BoundaryCondition::traction("top-load", edge(1, Side::Eta1), [0.0, -W]),
        BoundaryCondition::traction_free("top-right", edge(1, Side::Xi1)),
        BoundaryCondition::coupling("interface", edge(0, Side::Eta1), edge(1, Side::Eta0)),
        BoundaryCondition::traction_free("bottom-bottom", edge(0, Side::Eta0)),
        BoundaryCondition::traction_free("bottom-right", edge(0, Side::Xi1)),
        BoundaryCondition::clamp("bottom-clamp", edge(0, Side::Xi0)),
        BoundaryCondition::clamp("top-clamp", edge(1, Side::Xi0)),
    ];
    Ok(CaseDefinition {
        name: CaseName::BilayerCantilever.to_string(),
        model: Model::new(CaseName::BilayerCantilever.as_str(), vec![bottom, top], conditions)?,
        reference: None,
        quadrature: None,
        stations: vec![
            Station { label: "x=250".into(), x: 250.0 },
            Station { label: "x=375".into(), x: 375.0 },
        ],
        notes: vec!["units: mm, N, N/mm^2; reference is plot-only".into()],
    })
}

fn parabolic_case(o: &Overrides) -> Result<CaseDefinition> {
    use parabolic::*;
    let patch = Patch::new(
        "beam",
        GeometricMapping::parabolic(L, H0)?,
        net(((6, 4), (10, 5)), o)?,
        ComplianceModel::isotropic(E, NU)?,
        BodyForcePotential::None,
    );
    let conditions = vec![
        BoundaryCondition::traction_free("top", edge(0, Side::Eta1)),
        BoundaryCondition::traction_free("bottom", edge(0, Side::Eta0)),
        BoundaryCondition::resultant("right", edge(0, Side::Xi1), Component::Both, [Q, P]),
        BoundaryCondition::clamp("left-clamp", edge(0, Side::Xi0)),
    ];
    Ok(CaseDefinition {
        name: CaseName::ParabolicCantilever.to_string(),
        model: Model::new(CaseName::ParabolicCantilever.as_str(), vec![patch], conditions)?,
        reference: None,
        quadrature: None,
        stations: vec![Station { label: "mid-span".into(), x: 0.5 * L }],
        notes: vec!["units: m, N, Pa; reference is plot-only".into()],
    })
}
