use thiserror::Error;

/// Errors raised while constructing or verifying a Lyapunov functional.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("nonlinearity is undefined at {at}")]
    EvaluationDomain { at: String },

    #[error("no sign change of {what} found in [{lo}, {hi}]")]
    NoBracket { what: &'static str, lo: f64, hi: f64 },

    #[error("{what} did not converge after {iterations} iterations (last residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("F(x,u,p,0) is undefined at {at}; enable the artificial zero-F0 option to proceed")]
    F0Undefined { at: String },

    #[error("F1 = {value:e} <= 0 at (x={x}, u={u}, p={p}, r={r}); parabolicity is violated")]
    NonPositiveF1 {
        x: f64,
        u: f64,
        p: f64,
        r: f64,
        value: f64,
    },

    #[error("adaptive step collapsed to {step:e} at x = {at}")]
    StepUnderflow { at: f64, step: f64 },

    #[error("quadrature on [{a}, {b}] missed tolerance (estimate {estimate:e})")]
    QuadratureFailure { a: f64, b: f64, estimate: f64 },

    #[error("(u, p) = ({u}, {p}) at x = {x} lies outside the model box")]
    OutOfBox { x: f64, u: f64, p: f64 },

    #[error("solution blew up at t = {t}: sup|u| = {sup_u:e}")]
    Blowup { t: f64, sup_u: f64, profile: Vec<f64> },

    #[error("shooting trajectory blew up at x = {x}")]
    BlowupInShooting { x: f64 },

    #[error("at node {index}: {source}")]
    AtNode {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn at_node(self, index: usize) -> Self {
        Error::AtNode {
            index,
            source: Box::new(self),
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
