use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroupError {
    #[error("invalid group parameter: {0}")]
    InvalidParameter(String),
    #[error("element {element} does not belong to group {group}")]
    Mismatch { element: String, group: String },
    #[error("generator set is empty after removing the identity")]
    EmptyGenerators,
    #[error("homomorphism spec has no image for source generator {0}")]
    MissingImage(String),
    #[error("homomorphism spec is inconsistent: {0}")]
    InconsistentHom(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CayleyError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("ball exceeds the vertex budget of {budget} at radius {radius}")]
    TooLarge { radius: u32, budget: usize },
    #[error("set touches the outer shell of the ball (vertex {vertex} at distance {dist}); boundary would be under-counted")]
    TouchesShell { vertex: usize, dist: u32 },
    #[error("vertex index {0} is outside the ball")]
    NoSuchVertex(usize),
    #[error("horizon must be positive")]
    ZeroHorizon,
    #[error("m must be at least 1")]
    ZeroVolume,
    #[error("sub-generating-set enumeration is capped at degree {cap}, got {degree}")]
    DegreeCap { degree: usize, cap: usize },
    #[error("volume {m} exceeds the precomputed bound {bound}")]
    VolumeOutOfRange { m: u64, bound: u64 },
    #[error("ball of radius {have} is too small; need radius {need}")]
    RadiusTooSmall { need: u32, have: u32 },
    #[error("growth lower bound requires a certified minimal generating set: {0}")]
    NotCertifiedMinimal(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error(transparent)]
    Cayley(#[from] CayleyError),
    #[error("walk of {steps} steps from a vertex at distance {dist} leaves a ball of radius {radius}; need radius {required}")]
    NotContained {
        steps: u32,
        dist: u32,
        radius: u32,
        required: u32,
    },
    #[error("window and kernel ball use different groups or generator sets")]
    IncompatibleBalls,
    #[error("scale must be at least 1")]
    ZeroScale,
    #[error("exact walk counts overflow 128 bits at step {steps}")]
    Overflow { steps: u32 },
    #[error("kernel ball of radius {have} cannot resolve scale {scale}; need radius {need}")]
    ScaleOutOfRange { scale: u32, have: u32, need: u32 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IsopError {
    #[error(transparent)]
    Cayley(#[from] CayleyError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("exhaustive enumeration is capped at set size {cap}, requested {requested}; use the capped heuristic flag")]
    EnumerationCap { requested: usize, cap: usize },
    #[error("ball of radius {radius} cannot certify sets of size {size}; need radius {required}")]
    BallTooSmall {
        radius: u32,
        size: usize,
        required: u32,
    },
    #[error("epsilon must be positive, got {0}")]
    BadEpsilon(f64),
    #[error("profile lower bound vanishes at u = {0}; horizon is infinite")]
    InfiniteHorizon(f64),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GffError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("level {lambda} is below the scale-{scale} floor {floor}")]
    BelowFloor { scale: u32, lambda: f64, floor: f64 },
    #[error("scale {0} has zero variance")]
    ZeroVariance(u32),
    #[error("covariance block for scale {scale} failed verification (min eigenvalue {min_eig:e})")]
    NotPsd { scale: u32, min_eig: f64 },
    #[error("covariance block for scale {0} is not verified")]
    Unverified(u32),
    #[error("vertex {0} is outside the window")]
    NoSuchVertex(usize),
    #[error("eigen-decomposition failed (LAPACK info {0})")]
    Lapack(i32),
    #[error("scales are not consecutive or do not share one window")]
    ScaleLayout,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PercoError {
    #[error(transparent)]
    Gff(#[from] GffError),
    #[error(transparent)]
    Cayley(#[from] CayleyError),
    #[error("source set A is not contained in the region Lambda")]
    SourceOutsideRegion,
    #[error("region Lambda must avoid the window shell")]
    RegionTouchesShell,
    #[error("probability {0} outside [0, 1]")]
    BadProbability(f64),
    #[error("sample count must be positive")]
    NoSamples,
    #[error("no crossing of 1/2 on the grid: P({lo}) = {p_lo}, P({hi}) = {p_hi}")]
    NoCrossing {
        lo: f64,
        hi: f64,
        p_lo: f64,
        p_hi: f64,
    },
    #[error("model spec is invalid: {0}")]
    BadModel(String),
    #[error("at least {0} window sizes are required")]
    TooFewWindows(usize),
}
