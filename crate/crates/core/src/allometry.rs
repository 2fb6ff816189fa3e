//! Per-tree aboveground biomass from the power-law allometry
//! `AGB = coefficient * (rho * DBH^2 * H)^exponent`.
//!
//! DBH is in centimetres, height in metres, wood density in g/cm^3 and the
//! result in kilograms of oven-dry mass.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients of the allometric power law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllometricModel {
    coefficient: f64,
    exponent: f64,
}

impl AllometricModel {
    pub const DEFAULT_COEFFICIENT: f64 = 0.0673;
    pub const DEFAULT_EXPONENT: f64 = 0.967;

    pub fn new(coefficient: f64, exponent: f64) -> Result<Self> {
        if !(coefficient.is_finite() && coefficient > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "allometric coefficient must be positive, got {coefficient}"
            )));
        }
        if !(exponent.is_finite() && exponent > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "allometric exponent must be positive, got {exponent}"
            )));
        }
        Ok(Self {
            coefficient,
            exponent,
        })
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    /// Biomass in kg of a single tree.
    pub fn tree_agb(&self, rho: WoodDensity, dbh_cm: f64, height_m: f64) -> Result<f64> {
        check_positive("dbh_cm", dbh_cm)?;
        check_positive("height_m", height_m)?;
        let product = rho.get() * dbh_cm * dbh_cm * height_m;
        Ok(self.coefficient * product.powf(self.exponent))
    }
}

impl Default for AllometricModel {
    fn default() -> Self {
        Self {
            coefficient: Self::DEFAULT_COEFFICIENT,
            exponent: Self::DEFAULT_EXPONENT,
        }
    }
}

fn check_positive(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidAttribute {
            field,
            value,
            tree_id: None,
        })
    }
}

/// Free-function form of [`AllometricModel::tree_agb`].
pub fn tree_agb(
    model: &AllometricModel,
    rho: WoodDensity,
    dbh_cm: f64,
    height_m: f64,
) -> Result<f64> {
    model.tree_agb(rho, dbh_cm, height_m)
}

/// Wood specific density in g/cm^3, strictly between 0 and 2.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct WoodDensity(f64);

impl WoodDensity {
    pub const MAX: f64 = 2.0;

    pub fn new(rho: f64) -> Result<Self> {
        if rho.is_finite() && rho > 0.0 && rho < Self::MAX {
            Ok(Self(rho))
        } else {
            Err(Error::InvalidAttribute {
                field: "wood_density",
                value: rho,
                tree_id: None,
            })
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for WoodDensity {
    type Error = Error;

    fn try_from(rho: f64) -> Result<Self> {
        Self::new(rho)
    }
}

impl From<WoodDensity> for f64 {
    fn from(rho: WoodDensity) -> f64 {
        rho.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpeciesClass {
    Birch,
    Broadleaf,
    Custom(WoodDensity),
}

impl SpeciesClass {
    pub const BIRCH_DENSITY: f64 = 0.65;
    pub const BROADLEAF_DENSITY: f64 = 0.55;

    pub fn wood_density(self) -> WoodDensity {
        match self {
            SpeciesClass::Birch => WoodDensity(Self::BIRCH_DENSITY),
            SpeciesClass::Broadleaf => WoodDensity(Self::BROADLEAF_DENSITY),
            SpeciesClass::Custom(rho) => rho,
        }
    }

    /// Label used in metadata files: `birch`, `broadleaf` or `custom`.
    pub fn label(self) -> &'static str {
        match self {
            SpeciesClass::Birch => "birch",
            SpeciesClass::Broadleaf => "broadleaf",
            SpeciesClass::Custom(_) => "custom",
        }
    }
}

pub fn density_for_species(species: SpeciesClass) -> WoodDensity {
    species.wood_density()
}

impl fmt::Display for SpeciesClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpeciesClass::Custom(rho) => write!(f, "custom({})", rho.get()),
            other => f.write_str(other.label()),
        }
    }
}

impl FromStr for SpeciesClass {
    type Err = Error;

    /// Parses `birch`, `broadleaf`, or `custom(<rho>)`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "birch" => Ok(SpeciesClass::Birch),
            "broadleaf" => Ok(SpeciesClass::Broadleaf),
            _ => {
                let inner = lower
                    .strip_prefix("custom(")
                    .and_then(|rest| rest.strip_suffix(')'))
                    .ok_or_else(|| Error::Metadata(format!("unknown species `{s}`")))?;
                let rho: f64 = inner
                    .trim()
                    .parse()
                    .map_err(|_| Error::Metadata(format!("bad custom density in `{s}`")))?;
                Ok(SpeciesClass::Custom(WoodDensity::new(rho)?))
            }
        }
    }
}
