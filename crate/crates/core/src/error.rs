use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("mesh file parse error at line {line}, column {column}: {msg}")]
    Parse {
        line: usize,
        column: usize,
        msg: String,
    },

    #[error("invalid cell {cell}: {reason}")]
    InvalidCell { cell: usize, reason: String },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("cell {cell} is not star-shaped with respect to its centroid")]
    NotStarShaped { cell: usize },

    #[error("unsupported quadrature degree {0}")]
    UnsupportedDegree(usize),

    #[error("quadrature of degree {have} cannot integrate degree {need} exactly")]
    QuadratureTooLow { have: usize, need: usize },

    #[error("singular local system on cell {cell}: {what}")]
    SingularLocal { cell: usize, what: String },

    #[error("global solve failed: {0}")]
    Solve(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
