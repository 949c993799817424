use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GaloisError {
    #[error("characteristic {0} is not prime")]
    NonPrimeCharacteristic(u32),
    #[error("reduction polynomial {0:?} is reducible")]
    ReduciblePolynomial(Vec<u32>),
    #[error("invalid reduction polynomial: {0}")]
    InvalidPolynomial(String),
    #[error("field order {q} exceeds the cap of {cap}")]
    OrderCapExceeded { q: u64, cap: usize },
    #[error("entry {value} is not an element of a field of order {q}")]
    EntryOutOfRange { value: u32, q: usize },
    #[error("operands live in different fields")]
    FieldMismatch,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is {rows}x{cols}, not square")]
    NotSquare { rows: usize, cols: usize },
    #[error("blocks are ragged or not all n x n")]
    RaggedBlocks,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetworkError {
    #[error("graph contains a directed cycle")]
    CyclicGraph,
    #[error("demand function is not onto: message {0} is never demanded")]
    DemandNotOnto(usize),
    #[error("edge {0} carries a demand but is not an output edge")]
    DemandOnNonOutputEdge(u64),
    #[error("output edge {0} has no demand")]
    MissingDemand(u64),
    #[error("network has {inputs} input edges but k = {k}")]
    InputCountMismatch { inputs: usize, k: usize },
    #[error("edge indexing violates the input-first/output-last convention: {0}")]
    BadIndexing(String),
    #[error("message {0} is assigned to more than one input edge")]
    DuplicateMessageSource(usize),
    #[error("message id {0} is outside 1..=k")]
    UnknownMessage(usize),
    #[error("edge {0} references unknown vertex {1:?}")]
    UnknownVertex(u64, String),
    #[error("edge id {0} appears more than once")]
    DuplicateEdgeId(u64),
    #[error("edge {0} is both an input and an output edge")]
    InputIsOutput(u64),
    #[error("source assignment given for edge {0}, which is not an input edge")]
    SourceOnNonInputEdge(u64),
    #[error("input edge {0} has no source message while other input edges do")]
    MissingSource(u64),
    #[error("demand or source given for unknown edge {0}")]
    UnknownEdge(u64),
    #[error("network needs at least one message")]
    NoMessages,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IndexError {
    #[error("client {client} wants message {wants}, which is in its has-set")]
    WantsInHas { client: usize, wants: usize },
    #[error("message id {0} is outside 1..=k")]
    UnknownMessageId(usize),
    #[error("message names: expected {expected}, got {got}")]
    BadNames { expected: usize, got: usize },
}

/// What went wrong on a failing edge or client.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    /// A single message tuple on which the condition fails.
    Input(Vec<u32>),
    /// Two message tuples that agree on everything the receiver sees but
    /// differ on what it needs.
    Pair(Vec<u32>, Vec<u32>),
    /// Rank summary of an unsolvable linear system.
    Rank { have: usize, need: usize },
}

impl std::fmt::Display for Witness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Witness::Input(x) => write!(f, "fails on input {x:?}"),
            Witness::Pair(a, b) => write!(f, "inputs {a:?} and {b:?} are indistinguishable"),
            Witness::Rank { have, need } => write!(f, "span has rank {have}, needs rank {need}"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodeError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("no function given for edge {0}")]
    MissingEdge(u64),
    #[error("function given for unknown edge {0}")]
    UnknownEdge(u64),
    #[error("symbol {value} outside alphabet of size {q}")]
    SymbolOutOfRange { value: u32, q: usize },
    #[error("input edge {edge} does not carry its message: {witness}")]
    N1Violation { edge: u64, witness: Witness },
    #[error("output edge {edge} does not carry its demanded message: {witness}")]
    N2Violation { edge: u64, witness: Witness },
    #[error("edge {edge} is not a function of its parents: {witness}")]
    N3Violation { edge: u64, witness: Witness },
    #[error("table would have {entries} entries, cap is {cap}")]
    TableTooLarge { entries: u128, cap: u128 },
    #[error(transparent)]
    Galois(#[from] GaloisError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IndexCodeError {
    #[error("client {client} cannot decode: {witness}")]
    Undecodable { client: usize, witness: Witness },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("brute force needs {inputs} inputs, cap is {cap}")]
    InstanceTooLarge { inputs: u128, cap: u128 },
    #[error("rate {rate} is below the lower bound mu = {mu}")]
    BelowLowerBound { rate: String, mu: usize },
    #[error(transparent)]
    Galois(#[from] GaloisError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReductionError {
    #[error("network code is invalid: {0}")]
    InvalidNetworkCode(CodeError),
    #[error("index code is invalid for the reduced instance: {0}")]
    InvalidIndexCode(IndexCodeError),
    #[error("index code has length {l}, lowering needs exactly n m = {expected}")]
    LengthMismatch { l: usize, expected: usize },
    #[error("index code has {got} messages, reduced instance has {expected}")]
    MessageCountMismatch { expected: usize, got: usize },
    #[error("the y-part of the encoding matrix is singular")]
    SingularM,
    #[error("edge {edge}: normalized block for message {message} should be zero")]
    StructureViolation { edge: u64, message: usize },
    #[error("lowered code fails validation: {0}")]
    N3Failure(CodeError),
    #[error(transparent)]
    Galois(#[from] GaloisError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolverError {
    #[error("no solvable network found after {0} attempts")]
    RetryLimit(usize),
    #[error("no code with length up to {0}")]
    NoCodeUpToMax(usize),
    #[error("invalid matroid spec: {0}")]
    BadMatroid(String),
    #[error("invalid search config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Galois(#[from] GaloisError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InstanceError {
    #[error("unknown instance {0:?}")]
    UnknownInstance(String),
    #[error("data file {file} for {name} not found ({citation}); set CODEX_DATA_DIR to a directory containing it")]
    MissingData { name: String, file: String, citation: String },
    #[error("non-Pappus subnetwork file is missing or malformed: {0}")]
    MissingSubnetworkFile(String),
    #[error("failed to parse {file}: {message}")]
    Parse { file: String, message: String },
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Code(#[from] CodeError),
}
