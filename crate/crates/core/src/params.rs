//! Parameter space of the reduced isosceles problem.
//!
//! A parameter point is determined by the mass ratio `alpha` (equivalently
//! `beta = 1/(1 + 4/alpha)`) and the angular momentum `varpi`, with the energy
//! normalised to `h = -1`.  The Euler orbit eccentricity
//! `ecc = sqrt(1 - 2 varpi^2 beta^2)` replaces `varpi` as the second coordinate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `beta^2 + ecc^2 - 1` below which a point is classified critical.
pub const CRITICAL_TOL: f64 = 1e-12;

/// The fixed energy level.
pub const ENERGY: f64 = -1.0;

/// A point of parameter space at energy `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Mass ratio, `alpha = 4 beta / (1 - beta)`.
    pub alpha: f64,
    /// Dimensionless mass parameter in `(0, 1)`.
    pub beta: f64,
    /// Angular momentum, `varpi = sqrt((1 - ecc^2)/2) / beta`.
    pub varpi: f64,
    /// Eccentricity of the Euler orbit in `[0, 1)`.
    pub ecc: f64,
}

/// Sub/critical/supercritical classification by the sign of `beta^2 + ecc^2 - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeTag {
    /// `beta^2 + ecc^2 < 1`: the energy surface is a compact three-sphere.
    Subcritical,
    /// `beta^2 + ecc^2 = 1` within [`CRITICAL_TOL`].
    Critical,
    /// `beta^2 + ecc^2 > 1`: the Hill region is unbounded in `z`.
    Supercritical,
}

/// Regime together with its signed margin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    /// Classification.
    pub tag: RegimeTag,
    /// Signed margin `beta^2 + ecc^2 - 1`.
    pub margin: f64,
}

impl Params {
    /// Builds the parameter point from `(beta, ecc)`.
    pub fn from_beta_ecc(beta: f64, ecc: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::Domain(format!("beta = {beta} must lie in (0, 1)")));
        }
        if !(ecc >= 0.0 && ecc < 1.0) {
            return Err(Error::Domain(format!("ecc = {ecc} must lie in [0, 1)")));
        }
        let alpha = 4.0 * beta / (1.0 - beta);
        let varpi = ((1.0 - ecc * ecc) / 2.0).sqrt() / beta;
        Ok(Self { alpha, beta, varpi, ecc })
    }

    /// `sqrt(1 + 7 beta)`, the rotation frequency of the circular Euler orbit.
    pub fn c0(&self) -> f64 {
        (1.0 + 7.0 * self.beta).sqrt()
    }

    /// `4 / alpha = (1 - beta) / beta`.
    pub fn four_over_alpha(&self) -> f64 {
        (1.0 - self.beta) / self.beta
    }

    /// `1 + 2 alpha = (1 + 7 beta) / (1 - beta)`.
    pub fn one_plus_two_alpha(&self) -> f64 {
        (1.0 + 7.0 * self.beta) / (1.0 - self.beta)
    }

    /// Semi-latus rectum `varpi^2 beta` of the Euler orbit.
    pub fn semi_latus(&self) -> f64 {
        self.varpi * self.varpi * self.beta
    }

    /// Pericentre and apocentre `(1 -/+ ecc) / (2 beta)` of the Euler orbit.
    pub fn r_minus_plus(&self) -> (f64, f64) {
        ((1.0 - self.ecc) / (2.0 * self.beta), (1.0 + self.ecc) / (2.0 * self.beta))
    }

    /// Regime classification.
    pub fn regime(&self) -> Regime {
        regime(self)
    }

    /// Errors unless the point is subcritical.
    pub fn require_subcritical(&self) -> Result<()> {
        match self.regime().tag {
            RegimeTag::Subcritical => Ok(()),
            t => Err(Error::Regime(format!("operation needs a subcritical point, got {t:?}"))),
        }
    }

    /// Errors unless the point is supercritical.
    pub fn require_supercritical(&self) -> Result<()> {
        match self.regime().tag {
            RegimeTag::Supercritical => Ok(()),
            t => Err(Error::Regime(format!("operation needs a supercritical point, got {t:?}"))),
        }
    }
}

/// Classifies a parameter point by the sign of `beta^2 + ecc^2 - 1`.
pub fn regime(p: &Params) -> Regime {
    let margin = p.beta * p.beta + p.ecc * p.ecc - 1.0;
    let tag = if margin.abs() <= CRITICAL_TOL {
        RegimeTag::Critical
    } else if margin < 0.0 {
        RegimeTag::Subcritical
    } else {
        RegimeTag::Supercritical
    };
    Regime { tag, margin }
}
