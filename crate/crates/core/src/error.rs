use thiserror::Error;

/// Errors raised by the geometry and PnP layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("marker side must be positive, got {0} mm")]
    InvalidMarkerSide(f64),
    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("visibility thresholds must satisfy z3 < z2 < z1, got z1={z1}, z2={z2}, z3={z3}")]
    InvalidThresholds { z1: f64, z2: f64, z3: f64 },
    #[error("PnP did not converge after {iterations} iterations (rms reprojection {rms_px:.3} px)")]
    NonConvergence { iterations: usize, rms_px: f64 },
}

/// Errors raised by pose fusion and weight fitting.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FusionError {
    #[error("stage {stage:?} requires the {missing} marker pose")]
    MissingPose {
        stage: crate::fusion::StageId,
        missing: &'static str,
    },
    #[error("LMS fit needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("LMS step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("sample table line {line}: {reason}")]
    SampleParse { line: usize, reason: String },
}

/// Scenario configuration problems. Maps to exit code 64 in the CLI.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config serialize error: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("config io error: {0}")]
    Io(#[from] std::io::Error),
}
