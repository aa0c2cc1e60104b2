//! Crate-wide error type. Every fallible operation returns [`Result`].

use thiserror::Error;

/// Unified error for matrix algebra, scoring, sampling, and experiment I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix must be at least 1x1, got {rows}x{cols}")]
    EmptyMatrix { rows: usize, cols: usize },

    #[error("data length {len} does not match shape {rows}x{cols}")]
    DataLength { rows: usize, cols: usize, len: usize },

    #[error("non-finite entry {value} at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize, value: f64 },

    #[error("non-finite value in {what}")]
    NonFinite { what: String },

    #[error("dimension mismatch in {op}: {left} vs {right}")]
    DimensionMismatch {
        op: &'static str,
        left: String,
        right: String,
    },

    #[error("SVD did not converge within {max_iter} iterations")]
    SvdNoConvergence { max_iter: usize },

    #[error("rank-deficient input: column {col} carries no independent direction")]
    RankDeficient { col: usize },

    #[error("sketch size k + p = {sketch} exceeds min(rows, cols) = {min_dim}")]
    SketchTooLarge { sketch: usize, min_dim: usize },

    #[error("target rank k must be at least 1")]
    ZeroTargetRank,

    #[error("spectral-residual constant needs k >= 2 (it divides by k - 1), got k = {k}")]
    ConstantNeedsK2 { k: usize },

    #[error("spectral-residual constant needs r >= k, got r = {r}, k = {k}")]
    ConstantNeedsRankK { r: usize, k: usize },

    #[error("Jacobian is numerically rank zero; log-spectral score is undefined")]
    DegenerateJacobian,

    #[error("compressed singular value {index} is below the rank tolerance; approximate score is undefined")]
    DegenerateSigma { index: usize },

    #[error("encoder output dimension must be even for paired cos/sin features, got {dim}")]
    OddFeatureDim { dim: usize },

    #[error("encoder must expand dimension: output {output} does not exceed input {input}")]
    EncoderNotOvercomplete { input: usize, output: usize },

    #[error("non-finite encoder output at index {index} during finite differencing")]
    NonFiniteOutput { index: usize },

    #[error("direction vector must be unit length within {tol}, got norm {norm}")]
    NotUnitLength { norm: f64, tol: f64 },

    #[error("variance schedule: {what}")]
    BadSchedule { what: String },

    #[error("mixture: {what}")]
    BadMixture { what: String },

    #[error("covariance {index} is not symmetric positive definite")]
    NotSpd { index: usize },

    #[error("guidance config: {what}")]
    BadGuidance { what: String },

    #[error("non-finite state at diffusion step t = {t}")]
    NonFiniteState { t: usize },

    #[error("k = {k} must be smaller than the reference set size {reference}")]
    KnnKTooLarge { k: usize, reference: usize },

    #[error("batch must contain at least {need} points, got {got}")]
    BatchTooSmall { need: usize, got: usize },

    #[error("metric inputs: {what}")]
    BadMetricInput { what: String },

    #[error("minority selection: {what}")]
    BadSelection { what: String },

    #[error("config field `{field}`: {what}")]
    BadConfig { field: String, what: String },

    #[error("failed to parse {path}: {what}")]
    Parse { path: String, what: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Errors that mean "this state is spectrally degenerate", not "the call was wrong".
    /// Guidance treats these as skip-this-step; everything else propagates.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Error::DegenerateJacobian | Error::DegenerateSigma { .. } | Error::RankDeficient { .. }
        )
    }
}
