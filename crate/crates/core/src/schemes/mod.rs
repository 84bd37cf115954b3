//! Detection-inefficiency handling schemes and the bridge to
//! measurement-dependent locality.

mod assignment;
mod mdl;

pub use assignment::{apply_scheme, two_party_marginals, LocalDistribution, SchemeParams};
pub use mdl::{
    joint_mdl_interval, ldl_to_mdl, mdl_nonlocality_condition, postselected_input_distribution, MdlMapping, MdlParams,
};
