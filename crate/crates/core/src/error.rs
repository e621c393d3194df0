use thiserror::Error;

use crate::linalg::SingularMatrix;
use crate::moments::MomentError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// The Schur pivot `H_k` of the truncated Gram matrix is singular.
    #[error("breakdown at degree {degree}: Gram matrix is not quasidefinite")]
    Breakdown { degree: usize },
    /// `I + ⟨J_{K_{n-1}}, β⟩` is singular at this degree.
    #[error("coupling matrix is singular at degree {degree}")]
    CouplingSingular { degree: usize },
    #[error("degree {degree} exceeds the factorized range 0..={n_max}")]
    DegreeOutOfRange { degree: usize, n_max: usize },
    #[error("singular pivot: {0}")]
    SingularPivot(#[from] SingularMatrix),
    #[error(transparent)]
    Moment(#[from] MomentError),
    #[error("{0}")]
    Structure(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
