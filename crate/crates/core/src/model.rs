//! A complete boundary value problem: patches plus boundary conditions.

use crate::constraints::{BcKind, BoundaryCondition, StrongPrescription};
use crate::error::{Error, Result};
use crate::geometry::{EdgeRef, Patch};
use crate::physics::{DisplacementEdge, GlobalDofMap};

#[derive(Clone, Debug)]
pub struct Model {
    pub name: String,
    pub patches: Vec<Patch>,
    pub conditions: Vec<BoundaryCondition>,
    /// Prescribed derivative-net values, imposed exactly.
    pub strong: Vec<StrongPrescription>,
}

impl Model {
    pub fn new(name: impl Into<String>, patches: Vec<Patch>, conditions: Vec<BoundaryCondition>) -> Result<Self> {
        let model = Self {
            name: name.into(),
            patches,
            conditions,
            strong: Vec::new(),
        };
        model.validate()?;
        Ok(model)
    }

    pub fn with_strong(mut self, strong: Vec<StrongPrescription>) -> Result<Self> {
        self.strong = strong;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.patches.is_empty() {
            return Err(Error::Config(format!("model `{}` has no patches", self.name)));
        }
        for p in &self.patches {
            let (dp, dq) = p.net.degrees();
            if dp < 2 || dq < 2 {
                return Err(Error::InvalidDiscretization(format!(
                    "patch `{}` has degrees ({dp}, {dq}); stresses need at least 2 in each direction",
                    p.name
                )));
            }
        }
        let check = |e: EdgeRef, label: &str| {
            if e.patch >= self.patches.len() {
                Err(Error::Config(format!("condition `{label}` refers to missing patch {}", e.patch)))
            } else {
                Ok(())
            }
        };
        for bc in &self.conditions {
            check(bc.edge, &bc.label)?;
            if let BcKind::Coupling { partner, .. } = &bc.kind {
                check(*partner, &bc.label)?;
            }
            if !(bc.weight >= 0.0 && bc.weight.is_finite()) {
                return Err(Error::Config(format!("condition `{}` has invalid weight {}", bc.label, bc.weight)));
            }
        }
        for s in &self.strong {
            if s.patch >= self.patches.len() {
                return Err(Error::Config(format!("strong constraint refers to missing patch {}", s.patch)));
            }
        }
        Ok(())
    }

    pub fn dofs(&self) -> GlobalDofMap {
        GlobalDofMap::new(&self.patches)
    }

    pub fn total_dofs(&self) -> usize {
        self.patches.iter().map(|p| p.net.len()).sum()
    }

    pub fn patch_index(&self, name: &str) -> Option<usize> {
        self.patches.iter().position(|p| p.name == name)
    }

    /// Edges with prescribed displacement, for the external complementary energy.
    pub fn displacement_edges(&self) -> Vec<DisplacementEdge> {
        self.conditions
            .iter()
            .filter_map(|bc| match &bc.kind {
                BcKind::Displacement { value } => Some(DisplacementEdge {
                    edge: bc.edge,
                    displacement: value.clone(),
                }),
                _ => None,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{GeometricMapping, Side};
    use crate::materials::{BodyForcePotential, ComplianceModel};
    use crate::spline::ControlNet;

    fn patch(p: usize) -> Patch {
        Patch::new(
            "a",
            GeometricMapping::identity(),
            ControlNet::open_uniform((p, 2), (p + 2, 4)).unwrap(),
            ComplianceModel::isotropic(1.0, 0.0).unwrap(),
            BodyForcePotential::None,
        )
    }

    #[test]
    fn validation() {
        assert!(Model::new("ok", vec![patch(3)], vec![]).is_ok());
        assert!(matches!(
            Model::new("low", vec![patch(1)], vec![]),
            Err(Error::InvalidDiscretization(_))
        ));
        let bad = BoundaryCondition::traction_free("x", EdgeRef::new(3, Side::Xi0));
        assert!(matches!(Model::new("edge", vec![patch(2)], vec![bad]), Err(Error::Config(_))));
        assert!(Model::new("none", vec![], vec![]).is_err());
    }

    #[test]
    fn counts_and_displacements() {
        let m = Model::new(
            "m",
            vec![patch(2), patch(3)],
            vec![
                BoundaryCondition::clamp("c", EdgeRef::new(0, Side::Xi0)),
                BoundaryCondition::traction_free("f", EdgeRef::new(1, Side::Xi1)),
            ],
        )
        .unwrap();
        assert_eq!(m.total_dofs(), 16 + 20);
        assert_eq!(m.dofs().total(), 36);
        assert_eq!(m.displacement_edges().len(), 1);
        assert_eq!(m.patch_index("a"), Some(0));
    }
}
