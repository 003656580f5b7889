use thiserror::Error;

/// Everything that can go wrong inside the sampler and its GP backend.
#[derive(Debug, Error)]
pub enum Error {
    #[error("training set needs at least two rows, got {0}")]
    TooFewRows(usize),
    #[error("training set needs at least one input column")]
    NoInputColumns,
    #[error("training set has {rows} input rows but {outputs} outputs")]
    ShapeMismatch { rows: usize, outputs: usize },
    #[error("training data contain a non-finite value")]
    NonFiniteData,
    #[error("hyper-parameter vector has {got} coordinates, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("length-scales must be strictly positive")]
    NonPositiveLengthScale,
    #[error("nugget must be non-negative, got {0}")]
    NegativeNugget(f64),
    #[error("correlation matrix is not positive definite after {attempts} jitter attempts")]
    NotPositiveDefinite { attempts: usize },
    #[error("signal variance estimate {0} is not positive")]
    NonPositiveVariance(f64),
    #[error("predictive variance needs more than two degrees of freedom, got {df}")]
    TooFewDegreesOfFreedom { df: f64 },
    #[error("sample set is empty")]
    EmptySampleSet,
    #[error("weight vector has {weights} entries for {samples} samples")]
    WeightCountMismatch { weights: usize, samples: usize },
    #[error("every importance weight vanished: all tempered energies are infinite")]
    DegenerateWeights,
    #[error("ess target {target:.1} exceeds the {available:.1} finite-energy samples available")]
    EssTargetUnreachable { target: f64, available: f64 },
    #[error("gamma must lie strictly between 0 and 1, got {0}")]
    BadGamma(f64),
    #[error("temperatures must satisfy 1 <= next <= prev, got next {next} prev {prev}")]
    BadTemperatureOrder { next: f64, prev: f64 },
    #[error("invalid sampler configuration: {0}")]
    BadConfig(String),
    #[error("could not draw {wanted} finite-energy starting points within {attempts} attempts")]
    InitialisationFailed { wanted: usize, attempts: usize },
    #[error("level {level}: {stalled} of {total} steps hit the crumb limit")]
    LevelStalled {
        level: usize,
        stalled: usize,
        total: usize,
    },
    #[error("annealing did not reach temperature 1 within {0} levels")]
    LadderExhausted(usize),
    #[error("mixture weights sum to {0}, expected 1")]
    UnnormalisedWeights(f64),
    #[error("mixture components are inconsistent: {0}")]
    BadMixture(String),
    #[error("prediction and truth lengths differ: {predictions} vs {truths}")]
    LengthMismatch { predictions: usize, truths: usize },
    #[error("could not build worker pool: {0}")]
    WorkerPool(String),
}
