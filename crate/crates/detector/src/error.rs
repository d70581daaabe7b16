use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("header: {0}")]
    Header(String),

    #[error("{what}: expected {expected}, found {found}")]
    Shape {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("{path}, line {line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("background patch is degenerate: all pixels are identical")]
    DegeneratePatch,

    #[error("pgm: {0}")]
    Pgm(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Core(#[from] osklad_core::Error),
}

impl Error {
    /// True for solver or kernel failures rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Core(e) if e.is_numerical())
    }

    /// True when a flag value, not the data, is at fault.
    pub fn is_usage(&self) -> bool {
        use osklad_core::Error as Core;
        match self {
            Error::InvalidParameter(_) => true,
            Error::Core(e) => matches!(
                e,
                Core::InvalidBudget { .. }
                    | Core::InvalidBandwidth(_)
                    | Core::InfeasibleBox { .. }
                    | Core::InvalidParameter(_)
            ),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
