//! Plane-stress compliance models and body-force potentials.
//!
//! Stresses are handled as vectors `(σxx, σyy, σxy)`. The isotropic matrix
//! `1/E [[1, -ν, 0], [-ν, 1, 0], [0, 0, 1 + ν]]` maps σxy to the tensor shear
//! strain ε_xy, while the rotated orthotropic matrix with `1/G12` maps it to
//! the engineering shear strain γ_xy = 2 ε_xy. [`ComplianceModel::energy_form_matrix`]
//! accounts for the difference so that `σᵀ W σ` is always the full contraction
//! `S_ijkl σ_ij σ_kl`.

use nalgebra::{Matrix3, SymmetricEigen};

use crate::error::{Error, Result};

/// How the third strain component of a compliance matrix is defined.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShearStrain {
    /// ε_xy
    Tensor,
    /// γ_xy = 2 ε_xy
    Engineering,
}

/// Orthotropic lamina with principal axes rotated by `theta` (radians) from x.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Orthotropic {
    pub e11: f64,
    pub e22: f64,
    pub g12: f64,
    pub nu12: f64,
    pub theta: f64,
}

impl Orthotropic {
    fn validate(&self) -> Result<()> {
        for (name, v) in [("E11", self.e11), ("E22", self.e22), ("G12", self.g12)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidMaterial(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.nu12.is_finite() || !self.theta.is_finite() {
            return Err(Error::InvalidMaterial("non-finite ν or θ".into()));
        }
        Ok(())
    }

    /// Stress rotation matrix ℛ(θ).
    pub fn rotation(&self) -> Matrix3<f64> {
        let (c2, s2) = (self.theta.cos().powi(2), self.theta.sin().powi(2));
        let s = (2.0 * self.theta).sin();
        let c = (2.0 * self.theta).cos();
        Matrix3::new(c2, s2, s, s2, c2, -s, -0.5 * s, 0.5 * s, c)
    }

    /// Compliance in the principal axes.
    pub fn local_compliance(&self) -> Matrix3<f64> {
        let a = -self.nu12 / self.e11;
        Matrix3::new(
            1.0 / self.e11,
            a,
            0.0,
            a,
            1.0 / self.e22,
            0.0,
            0.0,
            0.0,
            1.0 / self.g12,
        )
    }

    /// `ℛᵀ 𝒮_local ℛ`.
    pub fn compliance(&self) -> Matrix3<f64> {
        let r = self.rotation();
        r.transpose() * self.local_compliance() * r
    }
}

/// Horizontal band `y_min ≤ y ≤ y_max` with one orthotropic material.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Layer {
    pub y_min: f64,
    pub y_max: f64,
    pub material: Orthotropic,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ComplianceModel {
    IsotropicPlaneStress { e: f64, nu: f64 },
    /// Layers sorted by `y`; a point on a shared interface belongs to the lower layer.
    Layered { layers: Vec<Layer> },
}

impl ComplianceModel {
    pub fn isotropic(e: f64, nu: f64) -> Result<Self> {
        if !(e > 0.0 && e.is_finite()) {
            return Err(Error::InvalidMaterial(format!("E must be positive, got {e}")));
        }
        if !(nu > -1.0 && nu < 0.5 + 1e-15) {
            return Err(Error::InvalidMaterial(format!("ν = {nu} outside (-1, 0.5]")));
        }
        Ok(Self::IsotropicPlaneStress { e, nu })
    }

    pub fn layered(mut layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidMaterial("layered model needs at least one layer".into()));
        }
        layers.sort_by(|a, b| a.y_min.total_cmp(&b.y_min));
        for l in &layers {
            l.material.validate()?;
            if !(l.y_max > l.y_min) {
                return Err(Error::InvalidMaterial(format!(
                    "layer [{}, {}] is empty",
                    l.y_min, l.y_max
                )));
            }
        }
        for w in layers.windows(2) {
            if w[1].y_min < w[0].y_max {
                return Err(Error::InvalidMaterial("layers overlap".into()));
            }
        }
        Ok(Self::Layered { layers })
    }

    /// Single orthotropic material everywhere.
    pub fn orthotropic(material: Orthotropic) -> Result<Self> {
        Self::layered(vec![Layer {
            y_min: f64::NEG_INFINITY,
            y_max: f64::INFINITY,
            material,
        }])
    }

    pub fn shear_strain(&self) -> ShearStrain {
        match self {
            ComplianceModel::IsotropicPlaneStress { .. } => ShearStrain::Tensor,
            ComplianceModel::Layered { .. } => ShearStrain::Engineering,
        }
    }

    fn layer_at(&self, layers: &[Layer], x: f64, y: f64) -> Result<Orthotropic> {
        let lo = layers[0].y_min;
        let hi = layers[layers.len() - 1].y_max;
        let slack = 1e-9 * (hi - lo).abs().max(1.0);
        for l in layers {
            let below = if l.y_min == lo { l.y_min - slack } else { l.y_min };
            let above = if l.y_max == hi { l.y_max + slack } else { l.y_max };
            if y >= below && y <= above {
                return Ok(l.material);
            }
        }
        Err(Error::OutsideMaterial { x, y })
    }

    /// Compliance matrix 𝒮(x, y) as defined by the model.
    pub fn compliance_at(&self, x: f64, y: f64) -> Result<Matrix3<f64>> {
        match self {
            ComplianceModel::IsotropicPlaneStress { e, nu } => Ok(Matrix3::new(
                1.0 / e,
                -nu / e,
                0.0,
                -nu / e,
                1.0 / e,
                0.0,
                0.0,
                0.0,
                (1.0 + nu) / e,
            )),
            ComplianceModel::Layered { layers } => Ok(self.layer_at(layers, x, y)?.compliance()),
        }
    }

    /// Symmetric positive definite `W` with `σᵀ W σ = S_ijkl σ_ij σ_kl`.
    pub fn energy_form_matrix(&self, x: f64, y: f64) -> Result<Matrix3<f64>> {
        let s = self.compliance_at(x, y)?;
        let w = match self.shear_strain() {
            ShearStrain::Engineering => s,
            ShearStrain::Tensor => {
                // Full contraction counts the (xy) and (yx) shear pairs: D 𝒮, D = diag(1, 1, 2).
                let d = Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, 1.0, 2.0));
                let ds = d * s;
                (ds + ds.transpose()) * 0.5
            }
        };
        check_positive_definite(&w, x, y)?;
        Ok(w)
    }
}

/// Errors unless every eigenvalue of the symmetric matrix is positive.
pub fn check_positive_definite(w: &Matrix3<f64>, x: f64, y: f64) -> Result<()> {
    let eig = SymmetricEigen::new(*w);
    let max = eig.eigenvalues.amax();
    if eig.eigenvalues.iter().any(|&v| !(v > 1e-14 * max)) {
        return Err(Error::InvalidMaterial(format!(
            "energy matrix at ({x}, {y}) is not positive definite (eigenvalues {:?})",
            eig.eigenvalues.as_slice()
        )));
    }
    Ok(())
}

/// Potential `V` of a conservative body force, `f = -∇V`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum BodyForcePotential {
    #[default]
    None,
    /// `V = -ρ g (d · (x, y))` for a unit gravity direction `d`.
    LinearGravity { rho: f64, g: f64, direction: [f64; 2] },
}

impl BodyForcePotential {
    /// Gravity along `direction`, normalised to unit length.
    pub fn gravity(rho: f64, g: f64, direction: [f64; 2]) -> Result<Self> {
        let n = direction[0].hypot(direction[1]);
        if !(n > 0.0) || !rho.is_finite() || !g.is_finite() {
            return Err(Error::Config("gravity needs finite ρ, g and a nonzero direction".into()));
        }
        Ok(Self::LinearGravity {
            rho,
            g,
            direction: [direction[0] / n, direction[1] / n],
        })
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        match *self {
            BodyForcePotential::None => 0.0,
            BodyForcePotential::LinearGravity { rho, g, direction } => {
                -rho * g * (direction[0] * x + direction[1] * y)
            }
        }
    }

    pub fn body_force(&self, _x: f64, _y: f64) -> [f64; 2] {
        match *self {
            BodyForcePotential::None => [0.0, 0.0],
            BodyForcePotential::LinearGravity { rho, g, direction } => {
                [rho * g * direction[0], rho * g * direction[1]]
            }
        }
    }
}

pub fn potential_value(potential: &BodyForcePotential, x: f64, y: f64) -> f64 {
    potential.value(x, y)
}

pub fn body_force(potential: &BodyForcePotential, x: f64, y: f64) -> [f64; 2] {
    potential.body_force(x, y)
}
