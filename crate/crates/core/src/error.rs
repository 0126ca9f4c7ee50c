//! Crate-wide error type.

/// Errors produced by mapping evaluation, dynamics, controller synthesis,
/// simulation, and the design pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite evaluation: {0}")]
    NonFinite(String),

    #[error("root finder exceeded {iterations} iterations (residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("mass matrix is not positive definite")]
    SingularMass,

    #[error("gain matrix {name} is not negative definite (max eigenvalue {max_eig:.6e})")]
    GainSign { name: &'static str, max_eig: f64 },

    #[error("matrix is not Hurwitz (largest eigenvalue real part {max_re:.6e})")]
    NotHurwitz { max_re: f64 },

    #[error("Lyapunov solve ill-conditioned (condition estimate {cond:.3e})")]
    IllConditioned { cond: f64 },

    #[error("decay envelope violated at t = {t} (ratio {ratio})")]
    BoundViolated { t: f64, ratio: f64 },

    #[error("simulation diverged at t = {t}")]
    SimulationDiverged { t: f64 },

    #[error("no mapping candidate satisfied the design conditions")]
    NoCandidatePassed,

    #[error("controller does not settle the nominal system (final error {error:.3e})")]
    NotSettling { error: f64 },

    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
