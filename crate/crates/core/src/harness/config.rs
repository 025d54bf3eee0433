//! TOML case files.
//!
//! ```toml
//! [case]
//! name = "my-beam"
//! reference = { kind = "beam", w = 1.0, l = 3.0, c = 0.25 }
//!
//! [splines]
//! degrees = [2, 5]
//! net = [3, 6]
//!
//! [material.steel]
//! kind = "isotropic"
//! e = 1e5
//! nu = 0.3
//!
//! [patches.body]
//! geometry = { kind = "beam", l = 3.0, c = 0.25 }
//! material = "steel"
//!
//! [bcs.top]
//! kind = "traction"
//! patch = "body"
//! side = "eta1"
//! target = [0.0, 1.0]
//!
//! [solver]
//! mode = "two-stage"
//! ```
//!
//! Unknown keys anywhere are errors.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::constraints::{BcKind, BoundaryCondition, Component};
use crate::error::{Error, Result};
use crate::geometry::{EdgeRef, GeometricMapping, Patch, PolyCoefficients, Side};
use crate::materials::{BodyForcePotential, ComplianceModel, Layer, Orthotropic};
use crate::model::Model;
use crate::physics::VectorField;
use crate::solver::SolveOptions;
use crate::spline::ControlNet;

use super::cases::{CaseDefinition, Station};
use super::reference::Reference;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    case: CaseSection,
    splines: Option<SplineSection>,
    #[serde(default)]
    material: BTreeMap<String, MaterialSection>,
    patches: BTreeMap<String, PatchSection>,
    #[serde(default)]
    bcs: BTreeMap<String, BcSection>,
    solver: Option<SolverSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseSection {
    name: String,
    reference: Option<ReferenceSection>,
    #[serde(default)]
    stations: Vec<StationSection>,
    #[serde(default)]
    notes: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum ReferenceSection {
    Bar { rho: f64, g: f64, l: f64 },
    Beam { w: f64, l: f64, c: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StationSection {
    label: String,
    x: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SplineSection {
    degrees: Option<[usize; 2]>,
    net: Option<[usize; 2]>,
    quadrature: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum MaterialSection {
    Isotropic { e: f64, nu: f64 },
    Orthotropic(OrthotropicSection),
    Layered { layers: Vec<LayerSection> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OrthotropicSection {
    e11: f64,
    e22: f64,
    g12: f64,
    nu12: f64,
    #[serde(default)]
    theta_deg: f64,
}

impl OrthotropicSection {
    fn build(&self) -> Orthotropic {
        Orthotropic {
            e11: self.e11,
            e22: self.e22,
            g12: self.g12,
            nu12: self.nu12,
            theta: self.theta_deg.to_radians(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerSection {
    y_min: f64,
    y_max: f64,
    e11: f64,
    e22: f64,
    g12: f64,
    nu12: f64,
    #[serde(default)]
    theta_deg: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PatchSection {
    #[serde(default)]
    order: i64,
    geometry: GeometrySection,
    material: String,
    gravity: Option<GravitySection>,
    degrees: Option<[usize; 2]>,
    net: Option<[usize; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum GeometrySection {
    Rectangle { x0: f64, x1: f64, y0: f64, y1: f64 },
    Bar { l: f64, c: f64 },
    Beam { l: f64, c: f64 },
    BilayerBottom { length: f64, h1: f64 },
    BilayerTop { length: f64, h1: f64, h2: f64 },
    Parabolic { length: f64, h0: f64 },
    GeneralAnalytic { x: Box<PolyCoefficients>, y: Box<PolyCoefficients> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GravitySection {
    rho: f64,
    g: f64,
    direction: [f64; 2],
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum BcSection {
    Traction {
        patch: String,
        side: String,
        #[serde(default)]
        target: [f64; 2],
        components: Option<String>,
        weight: Option<f64>,
    },
    Resultant {
        patch: String,
        side: String,
        target: [f64; 2],
        components: Option<String>,
        weight: Option<f64>,
    },
    Moment {
        patch: String,
        side: String,
        #[serde(default)]
        target: f64,
        weight: Option<f64>,
    },
    Coupling {
        patch: String,
        side: String,
        partner_patch: String,
        partner_side: String,
        weight: Option<f64>,
    },
    Clamp {
        patch: String,
        side: String,
    },
    Displacement {
        patch: String,
        side: String,
        value: [f64; 2],
    },
    Free {
        patch: String,
        side: String,
    },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverSection {
    mode: Option<String>,
    bc_weight: Option<f64>,
    gauge: Option<String>,
    involvement_tolerance: Option<f64>,
    rank_tolerance: Option<f64>,
    pivot_tolerance: Option<f64>,
    energy_convention: Option<String>,
    edge_points: Option<usize>,
}

/// A case read from a file, with its solver settings.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub case: CaseDefinition,
    pub options: SolveOptions,
}

pub fn load_config(path: &Path) -> Result<LoadedConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config `{}`: {e}", path.display())))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<LoadedConfig> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    build(file)
}

fn build(file: ConfigFile) -> Result<LoadedConfig> {
    let splines = file.splines.unwrap_or_default();
    let mut names: Vec<(&String, &PatchSection)> = file.patches.iter().collect();
    names.sort_by(|a, b| a.1.order.cmp(&b.1.order).then(a.0.cmp(b.0)));
    let index: BTreeMap<&str, usize> = names.iter().enumerate().map(|(i, (n, _))| (n.as_str(), i)).collect();

    let mut patches = Vec::new();
    for (name, p) in &names {
        let material = file
            .material
            .get(&p.material)
            .ok_or_else(|| Error::Config(format!("patch `{name}` uses undefined material `{}`", p.material)))?;
        let degrees = p.degrees.or(splines.degrees).ok_or_else(|| {
            Error::Config(format!("patch `{name}` has no degrees ([splines] degrees or patch degrees)"))
        })?;
        let net = p
            .net
            .or(splines.net)
            .ok_or_else(|| Error::Config(format!("patch `{name}` has no net size ([splines] net or patch net)")))?;
        let potential = match &p.gravity {
            Some(g) => BodyForcePotential::gravity(g.rho, g.g, g.direction)?,
            None => BodyForcePotential::None,
        };
        patches.push(Patch::new(
            name.as_str(),
            geometry(&p.geometry)?,
            ControlNet::open_uniform((degrees[0], degrees[1]), (net[0], net[1]))?,
            compliance(material)?,
            potential,
        ));
    }

    let edge = |patch: &str, side: &str, label: &str| -> Result<EdgeRef> {
        let k = *index
            .get(patch)
            .ok_or_else(|| Error::Config(format!("condition `{label}` names undefined patch `{patch}`")))?;
        Ok(EdgeRef::new(k, side.parse::<Side>()?))
    };
    let components = |c: &Option<String>| -> Result<Component> { c.as_deref().unwrap_or("both").parse() };
    let mut conditions = Vec::new();
    for (label, bc) in &file.bcs {
        let cond = match bc {
            BcSection::Traction {
                patch,
                side,
                target,
                components: c,
                weight,
            } => BoundaryCondition::new(
                label.as_str(),
                edge(patch, side, label)?,
                BcKind::Traction {
                    target: VectorField::Constant(*target),
                    components: components(c)?,
                },
            )
            .with_weight(weight.unwrap_or(1.0)),
            BcSection::Resultant {
                patch,
                side,
                target,
                components: c,
                weight,
            } => BoundaryCondition::resultant(label.as_str(), edge(patch, side, label)?, components(c)?, *target)
                .with_weight(weight.unwrap_or(1.0)),
            BcSection::Moment {
                patch,
                side,
                target,
                weight,
            } => BoundaryCondition::moment(label.as_str(), edge(patch, side, label)?, *target)
                .with_weight(weight.unwrap_or(1.0)),
            BcSection::Coupling {
                patch,
                side,
                partner_patch,
                partner_side,
                weight,
            } => BoundaryCondition::coupling(
                label.as_str(),
                edge(patch, side, label)?,
                edge(partner_patch, partner_side, label)?,
            )
            .with_weight(weight.unwrap_or(1.0)),
            BcSection::Clamp { patch, side } => BoundaryCondition::clamp(label.as_str(), edge(patch, side, label)?),
            BcSection::Displacement { patch, side, value } => BoundaryCondition::new(
                label.as_str(),
                edge(patch, side, label)?,
                BcKind::Displacement {
                    value: VectorField::Constant(*value),
                },
            ),
            BcSection::Free { patch, side } => {
                BoundaryCondition::new(label.as_str(), edge(patch, side, label)?, BcKind::Free)
            }
        };
        conditions.push(cond);
    }

    let reference = file.case.reference.as_ref().map(|r| match *r {
        ReferenceSection::Bar { rho, g, l } => Reference::Bar { rho, g, l },
        ReferenceSection::Beam { w, l, c } => Reference::Beam { w, l, c },
    });
    let model = Model::new(file.case.name.as_str(), patches, conditions)?;
    let options = solver_options(file.solver.unwrap_or_default(), splines.quadrature)?;
    Ok(LoadedConfig {
        case: CaseDefinition {
            name: file.case.name.clone(),
            model,
            reference,
            quadrature: splines.quadrature,
            stations: file
                .case
                .stations
                .iter()
                .map(|s| Station {
                    label: s.label.clone(),
                    x: s.x,
                })
                .collect(),
            notes: file.case.notes.clone(),
        },
        options,
    })
}

fn geometry(g: &GeometrySection) -> Result<GeometricMapping> {
    match *g {
        GeometrySection::Rectangle { x0, x1, y0, y1 } => GeometricMapping::rectangle(x0, x1, y0, y1),
        GeometrySection::Bar { l, c } => GeometricMapping::bar(l, c),
        GeometrySection::Beam { l, c } => GeometricMapping::beam(l, c),
        GeometrySection::BilayerBottom { length, h1 } => GeometricMapping::bilayer_bottom(length, h1),
        GeometrySection::BilayerTop { length, h1, h2 } => GeometricMapping::bilayer_top(length, h1, h2),
        GeometrySection::Parabolic { length, h0 } => GeometricMapping::parabolic(length, h0),
        GeometrySection::GeneralAnalytic { ref x, ref y } => GeometricMapping::general(**x, **y),
    }
}

fn compliance(m: &MaterialSection) -> Result<ComplianceModel> {
    match m {
        MaterialSection::Isotropic { e, nu } => ComplianceModel::isotropic(*e, *nu),
        MaterialSection::Orthotropic(o) => ComplianceModel::orthotropic(o.build()),
        MaterialSection::Layered { layers } => ComplianceModel::layered(
            layers
                .iter()
                .map(|l| Layer {
                    y_min: l.y_min,
                    y_max: l.y_max,
                    material: Orthotropic {
                        e11: l.e11,
                        e22: l.e22,
                        g12: l.g12,
                        nu12: l.nu12,
                        theta: l.theta_deg.to_radians(),
                    },
                })
                .collect(),
        ),
    }
}

fn solver_options(s: SolverSection, quadrature: Option<usize>) -> Result<SolveOptions> {
    let mut o = SolveOptions::default();
    if let Some(m) = s.mode {
        o.mode = m.parse()?;
    }
    if let Some(w) = s.bc_weight {
        o.bc_weight = w;
    }
    if let Some(g) = s.gauge {
        o.gauge = g.parse()?;
    }
    if let Some(t) = s.involvement_tolerance {
        o.involvement_tolerance = t;
    }
    if let Some(t) = s.rank_tolerance {
        o.rank_tolerance = t;
    }
    if let Some(t) = s.pivot_tolerance {
        o.pivot_tolerance = t;
    }
    if let Some(c) = s.energy_convention {
        o.assembly.convention = c.parse()?;
    }
    o.edge_quadrature.points = s.edge_points;
    o.assembly.quadrature = quadrature;
    o.validate()?;
    Ok(o)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::cases::{build_case, CaseName, Overrides};
    use crate::solver::{solve, BcMode};

    const BEAM: &str = r#"
[case]
name = "beam-from-file"
reference = { kind = "beam", w = 1.0, l = 3.0, c = 0.25 }
stations = [{ label = "mid", x = 0.0 }]

[splines]
degrees = [2, 5]
net = [3, 6]

[material.steel]
kind = "isotropic"
e = 1e5
nu = 0.3

[patches.body]
geometry = { kind = "beam", l = 3.0, c = 0.25 }
material = "steel"

[bcs.top]
kind = "traction"
patch = "body"
side = "eta1"
target = [0.0, 1.0]

[bcs.bottom]
kind = "traction"
patch = "body"
side = "eta0"

[bcs.left-axial]
kind = "traction"
patch = "body"
side = "xi0"
components = "x"

[bcs.right-axial]
kind = "traction"
patch = "body"
side = "xi1"
components = "x"

[bcs.left-shear]
kind = "resultant"
patch = "body"
side = "xi0"
components = "y"
target = [0.0, -3.0]

[bcs.right-shear]
kind = "resultant"
patch = "body"
side = "xi1"
components = "y"
target = [0.0, -3.0]

[bcs.left-moment]
kind = "moment"
patch = "body"
side = "xi0"

[bcs.right-moment]
kind = "moment"
patch = "body"
side = "xi1"

[solver]
mode = "two-stage"
"#;

    #[test]
    fn beam_file_matches_builtin() {
        let cfg = parse_config(BEAM).unwrap();
        assert_eq!(cfg.case.model.total_dofs(), 18);
        assert_eq!(cfg.options.mode, BcMode::TwoStage);
        let a = solve(&cfg.case.model, &cfg.options).unwrap();
        let def = build_case(CaseName::BeamUniformLoad, &Overrides::default()).unwrap();
        let b = solve(&def.model, &SolveOptions::default()).unwrap();
        for (s, t) in [(0.5, 0.5), (0.2, 0.9)] {
            let sa = a.stress(&cfg.case.model, 0, s, t).unwrap().sigma;
            let sb = b.stress(&def.model, 0, s, t).unwrap().sigma;
            for c in 0..3 {
                assert!((sa[c] - sb[c]).abs() <= 1e-9 * sb[c].abs().max(1.0));
            }
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = BEAM.replace("mode = \"two-stage\"", "mode = \"two-stage\"\ncolour = 3");
        assert!(matches!(parse_config(&bad), Err(Error::Config(_))));
        let bad = BEAM.replace("side = \"eta1\"", "side = \"eta1\"\nscale = 2.0");
        assert!(matches!(parse_config(&bad), Err(Error::Config(_))));
        let bad = BEAM.replace("[splines]", "[spline]");
        assert!(matches!(parse_config(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn undefined_names_rejected() {
        let bad = BEAM.replace("material = \"steel\"", "material = \"wood\"");
        assert!(matches!(parse_config(&bad), Err(Error::Config(_))));
        let bad = BEAM.replace("patch = \"body\"\nside = \"eta1\"", "patch = \"other\"\nside = \"eta1\"");
        assert!(matches!(parse_config(&bad), Err(Error::Config(_))));
        let bad = BEAM.replace("side = \"eta1\"", "side = \"up\"");
        assert!(parse_config(&bad).is_err());
    }

    #[test]
    fn missing_file_is_config_error() {
        assert!(matches!(
            load_config(Path::new("/nonexistent/missing.toml")),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn layered_material_parses() {
        let text = r#"
[case]
name = "plate"
[material.ply]
kind = "layered"
layers = [{ y_min = 0.0, y_max = 1.0, e11 = 10.0, e22 = 1.0, g12 = 1.0, nu12 = 0.1, theta_deg = 15.0 }]
[patches.p]
geometry = { kind = "rectangle", x0 = 0.0, x1 = 2.0, y0 = 0.0, y1 = 1.0 }
material = "ply"
degrees = [3, 3]
net = [4, 4]
[solver]
energy_convention = "tensor-contraction"
gauge = "min-norm"
"#;
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.case.model.total_dofs(), 16);
        assert!(cfg.case.reference.is_none());
    }
}
