use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Only grids 1 and 2 exist.
    UnknownGrid(u32),
    /// The problem has positive diffusion but no Dirichlet boundary.
    NoDirichletBoundary,
    /// An off-diagonal diffusion entry is positive.
    NotWeaklyAcute {
        row: usize,
        col: usize,
        value: f64,
    },
    /// Both endpoints of an edge have zero velocity, so the balancing flux
    /// is undefined.
    DegenerateVelocity {
        i: usize,
        j: usize,
    },
    /// A row index refers to a Dirichlet node.
    DirichletRow(usize),
    /// The fixed-point diagonal `a_i` is not positive.
    NonPositiveDiagonal {
        row: usize,
        value: f64,
    },
    /// The iterate contains NaN or infinite entries.
    Diverged {
        iteration: usize,
    },
    /// The problem has no exact solution to compare against.
    MissingExactSolution,
    InvalidParameter(&'static str),
    /// A vector has the wrong number of entries.
    LengthMismatch {
        expected: usize,
        found: usize,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::UnknownGrid(id) => write!(f, "unknown grid {id} (expected 1 or 2)"),
            Error::NoDirichletBoundary => {
                write!(f, "positive diffusion requires a Dirichlet boundary")
            }
            Error::NotWeaklyAcute { row, col, value } => write!(
                f,
                "mesh not weakly acute: diffusion entry ({row}, {col}) = {value:e}"
            ),
            Error::DegenerateVelocity { i, j } => {
                write!(f, "degenerate velocity at edge ({i}, {j})")
            }
            Error::DirichletRow(i) => write!(f, "row {i} belongs to a Dirichlet node"),
            Error::NonPositiveDiagonal { row, value } => {
                write!(
                    f,
                    "fixed-point diagonal of row {row} is {value:e}, expected > 0"
                )
            }
            Error::Diverged { iteration } => write!(f, "diverged at iteration {iteration}"),
            Error::MissingExactSolution => write!(f, "problem has no exact solution"),
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Error::LengthMismatch { expected, found } => {
                write!(f, "expected {expected} entries, found {found}")
            }
        }
    }
}

impl core::error::Error for Error {}
