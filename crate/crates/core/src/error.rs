use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid operator shape: {0}")]
    Shape(String),
    #[error("root finder failed to bracket: {0}")]
    Tolerance(String),
    #[error("evaluation at the pole: {0}")]
    Domain(String),
    #[error("quadrature error estimate {estimate:.3e} exceeds tolerance {tol:.3e}")]
    Quadrature { estimate: f64, tol: f64 },
    #[error("kernel evaluated at the origin")]
    Pole,
    #[error("ellipticity violated at cell {cell}: eigenvalue {eig:.4e} outside [1/{lambda}, {lambda}]")]
    Ellipticity { cell: usize, eig: f64, lambda: f64 },
    #[error("dyadic construction failed: {0}")]
    Construction(String),
    #[error("sparse recursion threshold exceeded 2^60 at cube ({level}, {index})")]
    Recursion { level: i32, index: usize },
    #[error("domination failure: exceptional fraction {fraction:.4} above budget")]
    Domination { fraction: f64 },
    #[error("Luxemburg bisection never crossed the unit level")]
    Bracket,
    #[error("condition {condition} violated at {witness}")]
    Condition { condition: String, witness: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
