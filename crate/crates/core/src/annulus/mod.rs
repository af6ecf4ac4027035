//! Inhomogeneous elasticity on truncated exterior domains `1 < r < R_max`.

mod contraction;
mod energy;
mod fem;
mod grid;

pub use contraction::{
    contraction_solve, volume_potential, ContractionOptions, ContractionReport, ReferenceTensor,
};
pub use energy::{
    caccioppoli_check, decay_exponent_fit, decay_exponent_fit_field, energy_identity_residual,
    energy_profiles, growth_monotonicity_check, net_traction_discrete, quarter_dyadic_radii,
    sigma_functional, traction_flux, CaccioppoliReport, DecayFit, EnergyProfile, GrowthReport,
};
pub use fem::{
    discrete_energy, is_admissible, solve_annulus, AnnulusSolution, OuterCondition,
    VariationalProblem, VectorFn,
};
pub use grid::{DiscreteField, FieldPoint, PolarGrid};
