use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("non-positive weight {0}")]
    NonPositiveWeight(f64),
    #[error("matrix is not Hermitian (defect {0:e})")]
    NotHermitian(f64),
    #[error("matrix is not symmetric (defect {0:e})")]
    NotSymmetric(f64),
    #[error("not a Dirichlet form: {0}")]
    NotADirichletForm(String),
    #[error("interior block is singular (sigma_min {sigma_min:e}, sigma_max {sigma_max:e})")]
    SingularInterior { sigma_min: f64, sigma_max: f64 },
    #[error("Lagrangian subspace meets the vertical space: no symmetric matrix chart")]
    AtInfinity,
    #[error("scaling factor must be nonzero")]
    ZeroScale,
    #[error("vanishing order estimates disagree: {0:?}")]
    OrderUnstable(Vec<f64>),
    #[error("image does not commute with the chart projectors (defect {0:e})")]
    NotEquivariant(f64),
    #[error("no rational function of degree at most {0} fits")]
    DegreeUnresolved(usize),
    #[error("invalid structure: {}", .0.join("; "))]
    InvalidStructure(Vec<String>),
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("expected a real matrix")]
    ComplexInput,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
