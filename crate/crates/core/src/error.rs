use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(
        "elasticity tensor is not positive definite on Sym (least eigenvalue {min_eigenvalue:e})"
    )]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("invalid positivity bounds: lower {lower}, upper {upper}")]
    InvalidBounds { lower: f64, upper: f64 },

    #[error("tensor components violate the required symmetries: {0}")]
    InvalidTensor(String),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("fundamental matrix evaluated at the singular point d = 0")]
    SingularPoint,

    #[error("tensor is not strongly elliptic (margin {margin:e})")]
    NotStronglyElliptic { margin: f64 },

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("boundary data has {got} nodes, curve has {expected}")]
    NodeCountMismatch { expected: usize, got: usize },

    #[error("equilibrium basis is degenerate (cond(M) = {condition:e})")]
    DegenerateBasis { condition: f64 },

    #[error("augmented boundary system is singular (condition estimate {condition:e})")]
    SingularSystem { condition: f64 },

    #[error("point ({x}, {y}) lies inside the body")]
    PointInsideBody { x: f64, y: f64 },

    #[error("curve is not an ellipse")]
    NotAnEllipse,

    #[error("sparse solver failed: {0}")]
    SolverDiverged(String),

    #[error("sampled elasticity at ({x}, {y}) has bounds ({mu0}, {mue}) outside the declared ({declared_mu0}, {declared_mue})")]
    BoundsViolated {
        x: f64,
        y: f64,
        mu0: f64,
        mue: f64,
        declared_mu0: f64,
        declared_mue: f64,
    },

    #[error("radius {radius} is outside the grid [{inner}, {outer}]")]
    RadiusOutOfGrid { radius: f64, inner: f64, outer: f64 },

    #[error("fixed-point iteration is not contracting (factors {factors:?})")]
    NotContracting { factors: Vec<f64> },

    #[error("counter-example tensor evaluated at the origin")]
    OriginSingular,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("radial profile does not decay toward its limit")]
    NonDecayingProfile,

    #[error("field does not vanish on the grid boundary (max |u| = {max_abs:e})")]
    BoundaryNotZero { max_abs: f64 },

    #[error("invalid configuration field `{field}`: {message}")]
    ConfigInvalid { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
