pub mod elasticity;
pub mod field;
pub mod korn;
pub mod linalg;

pub use elasticity::{gamma_exponent, sqrt_l_exponent, ElasticityTensor, IsotropicModuli};
pub use field::{verify_bounds, ConstantField, ElasticityField, PerturbedField, RandomSmoothField};
pub use korn::{korn_identity_residual, LatticeField};
pub use linalg::{Mat2, Vec2};
