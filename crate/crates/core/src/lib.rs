//! Numerics for the cubic conformal flow on the three-sphere at finite
//! Galerkin truncation: exact stationary families, branches bifurcating from
//! the two lowest modes, Hessian spectra and time evolution.

pub mod error;
pub mod evolution;
pub mod families;
pub mod flow;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use families::{Normalization, PairSign, StationaryState};
pub use flow::{AmplitudeState, ConservedSet};
pub use solver::{BaseMode, Branch, BranchId, BranchSample, BranchSpec};
pub use spectral::{HessianPair, SpectralReport};

pub use num_complex::Complex64;
