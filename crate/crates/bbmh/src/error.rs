use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported operator order {0} (supported: 2, 3, 4)")]
    UnsupportedOrder(usize),

    #[error("grid has {n} points but the stencil needs at least {min}")]
    GridTooSmall { n: usize, min: usize },

    #[error("n = {0} is not a power of two (required by the Fourier operator)")]
    NotPowerOfTwo(usize),

    #[error("transform symbol vanishes at mode k = {k} (magnitude {magnitude:.3e})")]
    SingularSymbol { k: f64, magnitude: f64 },

    #[error("vector length {got} does not match operator size {expected}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("singular linear system: {0}")]
    SingularSystem(String),

    #[error("invalid splitting parameters: {0}")]
    InvalidSplitting(String),

    #[error("eps must be positive and finite, got {0}")]
    InvalidEps(f64),

    #[error("tableau parse error at line {line}: {msg}")]
    TableauParse { line: usize, msg: String },

    #[error("tableau '{name}' is neither type I nor type II: {msg}")]
    UnclassifiableTableau { name: String, msg: String },

    #[error("tableau '{name}' fails its declared order {order}: {msg}")]
    OrderConditionFailure {
        name: String,
        order: usize,
        msg: String,
    },

    #[error("unknown tableau '{0}' (builtins: agsa342, spimex322, ars443, bpr343)")]
    UnknownTableau(String),

    #[error("relaxation parameter gamma = {gamma:.6} outside [{lo}, {hi}] at t = {t:.6}: integration diverged")]
    RelaxationOutOfBounds { gamma: f64, lo: f64, hi: f64, t: f64 },

    #[error("non-finite value in state at t = {0:.6}")]
    NonFinite(f64),

    #[error("GSA consistency violated at t = {t:.6}: assembled update differs from last stage by {defect:.3e} (energy norm, relative)")]
    GsaInconsistent { t: f64, defect: f64 },

    #[error("Petviashvili iteration did not reach tol = {tol:.3e} in {iters} iterations (last residual {residual:.3e}; full history attached)")]
    PetviashviliDiverged {
        tol: f64,
        iters: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("invalid wave parameters: {0}")]
    InvalidWave(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
