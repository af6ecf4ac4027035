pub mod curve;
pub mod kernel;
pub mod layer;
pub mod solve;

pub use curve::{BoundaryCurve, CurveShape};
pub use kernel::FundamentalSolution;
pub use layer::{assemble_single_layer, kress_weights, scalar_log_layer};
pub use solve::{
    ellipse_compatibility, equilibrium_basis, m_space_representative, paradox_residual,
    solve_dirichlet, EquilibriumBasis, ExteriorSolution, SingleLayer,
};
