use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("consecutive frames {index} and {next} are {distance:.3} apart; refine the sampling", next = index + 1)]
    BranchAmbiguous { index: usize, distance: f64 },
    #[error("initial lift does not project to the first frame (residual {residual:.3e})")]
    ProjectionMismatch { residual: f64 },
    #[error("reparametrization is not strictly increasing with fixed endpoints")]
    NotMonotone,
    #[error("matrix lost rank while applying a projective transformation")]
    Degenerate,
    #[error("entry {value:.3e} lies inside the ambiguity band around the zero tolerance")]
    NearBoundary { value: f64 },
    #[error("expected Bruhat cell {expected}, found {found}")]
    WrongCell { expected: String, found: String },
    #[error("curve is not locally convex near t = {t}")]
    NotLocallyConvex { t: f64 },
    #[error("curve is outside U_k: {0}")]
    NotInUk(String),
    #[error("relative frame is not stably convex")]
    NotStablyConvex,
    #[error("interpolation point lies outside the admissible region")]
    PointOutsideRegion,
    #[error("iteration did not converge: {0}")]
    NoConvergence(String),
    #[error("shear parameter could not be bracketed for this tail length")]
    WindowTooSmall,
    #[error("no convexity window found for the tail arc")]
    ConvexityWindowNotFound,
    #[error("loop insertion window does not fit inside [0, 1]")]
    WindowOverflow,
    #[error("ellipse bridge {0} could not be fitted")]
    BridgeFailed(usize),
    #[error("arc is not graftable: {0}")]
    NotGraftable(String),
    #[error("non-transversal preimage: {0}")]
    NonTransversal(String),
    #[error("sampling too coarse for a reliable result; refine the grid")]
    TooCoarse,
    #[error("endpoint lift is not +1 or -1")]
    WrongEndpoint,
    #[error("format error at {location}: {message}")]
    Format { location: String, message: String },
    #[error("unsupported document version {0:?}")]
    VersionUnsupported(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
