//! Newton refinement, bifurcation catalogs and continuation of the branches
//! bifurcating from the two lowest single-mode states.

mod bifurcation;
mod branch;
mod newton;

pub use bifurcation::{
    bifurcation_point, bifurcation_points_lowest, bifurcation_points_second, linearization_scan,
    nonlinear_terms, omega_lowest, omega_second, BifurcationPoint, Crossing,
};
pub use branch::{
    branch_predictor, continue_branch, continue_branch_with, half_wavelength_map, half_wavelength_map_into, newton_refine,
    omega_branch, two_param_family_second, Branch, BranchSample, BranchSpec,
};
pub use newton::{newton_solve, solve_at_omega, Frequency, LinearPin, NewtonOptions, NewtonResult};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::families::Normalization;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseMode {
    Lowest,
    Second,
}

impl BaseMode {
    /// Index of the single mode the branches bifurcate from.
    pub fn index(self) -> usize {
        match self {
            BaseMode::Lowest => 0,
            BaseMode::Second => 1,
        }
    }

    pub fn normalization(self) -> Normalization {
        match self {
            BaseMode::Lowest => Normalization::LambdaOne,
            BaseMode::Second => Normalization::LambdaMinusOmegaOne,
        }
    }
}

impl fmt::Display for BaseMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaseMode::Lowest => "lowest",
            BaseMode::Second => "second",
        })
    }
}

impl FromStr for BaseMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "lowest" => Ok(BaseMode::Lowest),
            "second" => Ok(BaseMode::Second),
            _ => Err(format!("unknown mode '{s}' (expected lowest or second)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BranchId {
    I,
    II,
    III,
    Unique,
}

impl fmt::Display for BranchId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BranchId::I => "i",
            BranchId::II => "ii",
            BranchId::III => "iii",
            BranchId::Unique => "unique",
        })
    }
}

impl FromStr for BranchId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "i" => Ok(BranchId::I),
            "ii" => Ok(BranchId::II),
            "iii" => Ok(BranchId::III),
            "unique" => Ok(BranchId::Unique),
            _ => Err(format!("unknown branch '{s}'")),
        }
    }
}
