//! Bundled example models.

use crate::graph::CausalModel;

pub const IV: &str = include_str!("../models/iv.cg");
pub const IV_TERNARY: &str = include_str!("../models/iv_ternary.cg");
pub const SEQUENTIAL: &str = include_str!("../models/sequential.cg");
pub const IV_COVARIATES: &str = include_str!("../models/iv_covariates.cg");
pub const FRONTDOOR_IV: &str = include_str!("../models/frontdoor_iv.cg");
pub const INCLUSIVE_FRONTDOOR: &str = include_str!("../models/inclusive_frontdoor.cg");

fn load(src: &str) -> CausalModel {
    CausalModel::parse(src).expect("bundled model parses")
}

/// `Z -> A -> Y` with a hidden confounder of `A` and `Y`.
pub fn iv() -> CausalModel {
    load(IV)
}

/// The IV graph with a three-level instrument and `{1,2}` labels elsewhere.
pub fn iv_ternary() -> CausalModel {
    load(IV_TERNARY)
}

pub fn sequential() -> CausalModel {
    load(SEQUENTIAL)
}

/// IV with an observed covariate `C` pointing into `Z`, `A` and `Y`.
pub fn iv_covariates() -> CausalModel {
    load(IV_COVARIATES)
}

pub fn frontdoor_iv() -> CausalModel {
    load(FRONTDOOR_IV)
}

pub fn inclusive_frontdoor() -> CausalModel {
    load(INCLUSIVE_FRONTDOOR)
}
