use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("qudit dimension must be at least 2, got {0}")]
    InvalidDimension(usize),

    #[error("state would need {requested} amplitudes, cap is {cap}")]
    CapacityExceeded { requested: usize, cap: usize },

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("register mismatch: {0}")]
    RegisterMismatch(String),

    #[error("site {site} out of range for a register of {len} qudits")]
    InvalidSite { site: usize, len: usize },

    #[error("invalid site list: {0}")]
    InvalidSites(String),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("invalid label: {0}")]
    InvalidLabel(String),

    #[error("not label-representable: {0}")]
    NotLabelRepresentable(String),

    #[error("rewrite pattern mismatch: {0}")]
    PatternMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("branch tree too large: more than {0} leaves")]
    TreeTooLarge(usize),
}
