use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("identically zero fiber")]
    ZeroFiber,
    #[error("zero polynomial")]
    ZeroPolynomial,
    #[error("root solver did not converge for degree {degree} (residual {residual:.3e})")]
    RootsNotConverged { degree: usize, residual: f64 },
    #[error("degenerate leading coefficient: {0}")]
    DegenerateLeading(String),
    #[error("no ramification possible: degree {degree} < 2 in the requested variable")]
    NoRamification { degree: usize },
    #[error("graph contains a fiber: {0}")]
    FiberComponent(String),
    #[error("constant polynomial does not define a correspondence")]
    ConstantPolynomial,
    #[error("composition degenerated: {0}")]
    CompositionDegenerated(String),
    #[error("iterate cap exceeded: degree {degree} > cap {cap}; use Monte-Carlo transport instead")]
    IterateCap { degree: usize, cap: usize },
    #[error("non-reduced graph: discriminant vanishes identically")]
    NonReduced,
    #[error("grid too coarse near critical set: {fraction:.3} of nodes masked")]
    GridTooCoarse { fraction: f64 },
    #[error("masked-node fraction unstable across iterations")]
    MaskInstability,
    #[error("zero total mass")]
    ZeroMass,
    #[error("empty test dictionary")]
    EmptyDictionary,
    #[error("graph contains diagonal with full multiplicity")]
    DiagonalFull,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
