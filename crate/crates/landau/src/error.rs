use thiserror::Error;

#[derive(Debug, Error)]
pub enum LandauError {
    #[error("grid size {0} is not a power of two >= 4")]
    BadGridSize(usize),

    #[error("half-width must be positive and finite, got {0}")]
    BadHalfWidth(f64),

    #[error("gamma = {0} is outside the admissible interval [0, 1] (Maxwellian molecules gamma = 0, hard potentials 0 < gamma <= 1)")]
    GammaOutOfRange(f64),

    #[error("multi-index {beta:?} is not componentwise <= {mu:?}")]
    NotDominated { beta: [u32; 3], mu: [u32; 3] },

    #[error("|mu| = {0} is below the minimum order 2")]
    OrderTooLow(u32),

    #[error("derivative order {order} exceeds the configured maximum {max}")]
    DerivativeOrder { order: u32, max: u32 },

    #[error("grid mismatch: field has n={field_n}, V={field_v}; expected n={n}, V={v}")]
    GridMismatch {
        field_n: usize,
        field_v: f64,
        n: usize,
        v: f64,
    },

    #[error("field length {len} does not match grid size {expected}")]
    FieldLength { len: usize, expected: usize },

    #[error("boundary mass fraction {fraction:.3e} exceeds tolerance {tol:.3e}")]
    Truncation { fraction: f64, tol: f64 },

    #[error("degenerate coefficient field: {0}")]
    Degenerate(String),

    #[error("moment oracle requires gamma = 0, got {0}")]
    OracleGamma(f64),

    #[error("only {found} spectral shells above the noise floor, need at least {needed}")]
    TooFewShells { found: usize, needed: usize },

    #[error("undershoot at t = {t}: min f = {min:.3e} below -{tol:.1e} * max f ({max:.3e})")]
    Undershoot { t: f64, min: f64, max: f64, tol: f64 },

    #[error("non-finite value in the solution at t = {0}")]
    NonFinite(f64),

    #[error("time step {dt:.3e} exceeds the stable limit {limit:.3e}")]
    UnstableStep { dt: f64, limit: f64 },

    #[error("mollifier resolution h = {h} is coarser than 1/(8N) = {limit}")]
    CoarseResolution { h: f64, limit: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("bad field dump: {0}")]
    BadDump(String),

    #[error("at t = {t}: {source}")]
    AtTime {
        t: f64,
        #[source]
        source: Box<LandauError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, LandauError>;
