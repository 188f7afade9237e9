//! Finite models of Markov expansion, group actions, warped cones and
//! Roe-algebra style operators.

pub mod action;
pub mod error;
pub mod expansion;
pub mod families;
pub mod io;
pub mod linalg;
pub mod markov;
pub mod operator;
pub mod space;
pub mod subset;
pub mod suite;
pub mod tol;
pub mod warped;

pub use error::{LabError, Result};
pub use markov::{
    boundary_size, cheeger_exact, cheeger_sweep, dirichlet_energy, dual_apply, lambda2, markov_apply,
    verify_cheeger_sandwich, CheegerResult, MarkovKernel, SandwichReport, SpectralReport, SymmetricEdgeMeasure,
};
pub use space::FiniteMeasureSpace;
pub use action::{
    ball_image, gen_cycle, gen_margulis_torus, gen_schreier_chain, orbit_distance, rn_table, theta_bound, ChainSpec,
    FiniteAction, GeneratorSet, RadonNikodymTable,
};
pub use expansion::{
    asymptotic_profile, build_action_kernel, local_spectral_gap, markov_expansion_constant, vertex_expansion_constant,
    ActionKernel, ExpansionProfile, ExpansionStatus,
};
pub use families::{Builtin, Family, FamilyKind};
pub use operator::{RankOneProjection, WeightedOperator};
pub use suite::{run_suite, SuiteConfig, SuiteReport, Tolerances};
pub use warped::{warp, FiniteMetric, SparseCone, WarpedLevel};
