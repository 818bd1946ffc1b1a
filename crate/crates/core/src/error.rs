use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),
    #[error("circuit contains a cycle through node {0}")]
    CycleDetected(usize),
    #[error("conditional undefined: evidence {evidence:?} has zero probability")]
    UndefinedConditional { evidence: Vec<Option<usize>> },
    #[error("gradient undefined: circuit output is zero for the given assignment")]
    GradientUndefined,
    #[error("rows with zero probability under the circuit: {0:?}")]
    UnreachableRows(Vec<usize>),
    #[error("invalid rule set: {0}")]
    InvalidRules(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("training diverged at epoch {epoch}")]
    DivergedTraining { epoch: usize },
    #[error("infinite loss: sample {sample} has zero posterior for its label")]
    InfiniteLoss { sample: usize },
    #[error(
        "enumeration of {size} attribute assignments exceeds the cap of {cap}; prune attributes"
    )]
    CapacityExceeded { size: u128, cap: u64 },
    #[error("class scores are all zero for the given attribute probabilities")]
    ZeroPosteriorMass,
    #[error("invalid attribute exclusion: {0}")]
    InvalidExclusion(String),
    #[error("no explanation: every assignment has zero contribution")]
    NoExplanation,
    #[error("counterfactual impossible: no assignment supports class {target}")]
    Uncorrectable { target: usize },
    #[error("metric undefined: {0}")]
    UndefinedMetric(&'static str),
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
