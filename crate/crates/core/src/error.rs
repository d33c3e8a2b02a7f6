use alloc::string::String;

/// Errors raised by the core pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    Dimensions(String),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("non-contiguous class ids: {0}")]
    NonContiguousClasses(String),
    #[error("class {class} has {available} labeled pixels, fewer than the {required} required")]
    InsufficientSamples {
        class: u16,
        available: usize,
        required: usize,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("non-finite values in layer `{0}`")]
    NonFiniteLayer(&'static str),
    #[error("no labeled nodes: {0}")]
    NoLabels(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
}

pub type Result<T> = core::result::Result<T, Error>;
