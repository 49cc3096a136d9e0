use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("total inertia J + J_s = {0} is not positive")]
    NonPositiveInertia(f64),

    #[error("swarm has no members")]
    EmptySwarm,

    #[error("swarm is singular: S3 = {s3:e} <= threshold {threshold:e}")]
    SingularSwarm { s3: f64, threshold: f64 },

    #[error("riccati iteration failed: {0}")]
    RiccatiFailure(String),

    #[error("secant undefined: |theta| = {0} >= pi/2")]
    SecantDomain(f64),

    #[error("member {0} is not a double integrator")]
    NotDoubleIntegrator(usize),

    #[error("abstract state (M1 = {m1}, J_s = {j_s}) has no preimage")]
    EmptyPreimage { m1: f64, j_s: f64 },

    #[error("state became non-finite at t = {0}")]
    NonFiniteState(f64),

    #[error("parent tipped over at t = {t}: |theta| = {theta}")]
    TippedOver { t: f64, theta: f64 },

    #[error("constraint breach at t = {t}: {what}")]
    ConstraintBreach { t: f64, what: String },

    #[error("region map not invertible: argument {argument} is below {floor}")]
    NonInvertibleRhoE { argument: f64, floor: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
