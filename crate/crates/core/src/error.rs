use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error("index {index:?} is out of range for shape {shape}")]
    IndexOutOfRange { index: Vec<usize>, shape: String },

    #[error("invalid slope {alpha:?} for shape {shape}")]
    InvalidSlope { alpha: Vec<usize>, shape: String },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("malformed PGM at byte {offset}: {message}")]
    Pgm { offset: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("could not place {k} frequencies as requested after {attempts} attempts")]
    InfeasiblePlacement { k: usize, attempts: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("cube of {n} samples exceeds the dense transform limit of {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("unsupported input for this algorithm: {0}")]
    Unsupported(String),

    #[error("reconstructed pixel {pixel:?} has imaginary residue {residue:e}")]
    ImaginaryResidue { pixel: Vec<usize>, residue: f64 },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
