//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sdf parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unsupported molfile version {0} (only V2000 is accepted)")]
    UnsupportedVersion(String),

    #[error("molecule '{0}' is 2D (all z coordinates zero and 2D flag set)")]
    TwoDimensional(String),

    #[error("no van der Waals radius for element '{0}'")]
    UnknownElement(String),

    #[error("macrocycle with {size} atoms exceeds the {limit}-atom ring limit")]
    Macrocycle { size: usize, limit: usize },

    #[error("radii table '{path}' line {line}: {msg}")]
    RadiiTable {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("sphere set is empty after hydrogen removal")]
    EmptySphereSet,

    #[error("intersection graph is disconnected ({0} components); molecule rejected")]
    Disconnected(usize),

    #[error("surface area {0} is not positive")]
    NonPositiveArea(f64),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("no valid projection pole: every candidate is covered by a child cap")]
    NoValidPole,

    #[error("domain construction failed: {0}")]
    Domain(String),

    #[error("potential construction failed: {0}")]
    Potential(String),

    #[error("quadrature produced a non-finite value ({0})")]
    NonFinite(String),

    #[error("area check {got:.6} deviates from 4π by a factor {dev:.4} (limit {limit})")]
    AreaCheck { got: f64, dev: f64, limit: f64 },

    #[error("matrix is not positive definite (offending eigenvalue {0:.3e})")]
    NonPd(f64),

    #[error("descriptor eigenvalues span {0:.3e}; rescaling by 10/100/1000 cannot fix this")]
    IllConditioned(f64),

    #[error("descriptor order mismatch: k={0} vs k={1}")]
    OrderMismatch(usize, usize),

    #[error("invalid weights x={x}, y={y}: need x+y=1 and 0 <= x < 0.5")]
    InvalidWeights { x: f64, y: f64 },

    #[error("descriptor file error: {0}")]
    DescriptorFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
