//! Concrete Burkholder potentials and their combinations.

pub mod adagrad;
pub mod matrix;
pub mod meta;
pub mod param_free;
pub mod vaw;

pub use adagrad::{ada_predict, ada_regret_bound, usq, AdaGrad, AdaVariant, InstanceShape};
pub use matrix::{
    matrix_regret_bound, mp_U, mp_V, mp_doubling_run, mp_predict, DoublingRun, MatrixConfig,
    MatrixPotential,
};
pub use meta::{
    combine_convex, combine_min, meta_U, CombineMode, Combined, MetaConfig, MetaMember,
    MetaPotential,
};
pub use param_free::{
    harmonic, pf_U, pf_V, pf_predict, pf_regret_bound, Norm, ParamFree, ParamFreeConfig,
};
pub use vaw::{vaw_U, vaw_convex_options, vaw_predict, vaw_regret_bound, Vaw, VawConfig};
