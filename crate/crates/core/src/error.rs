use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while reading relations and vertex weights.
#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: missing header row")]
    MissingHeader { path: PathBuf },
    #[error("{path}: weight column `{column}` is not in the header")]
    MissingWeightColumn { path: PathBuf, column: String },
    #[error("{path}: line {line}: {message}")]
    Malformed { path: PathBuf, line: u64, message: String },
    #[error("{path}: line {line}: weight `{value}` is not a 64-bit integer")]
    BadWeight { path: PathBuf, line: u64, value: String },
    #[error("relation `{relation}`: tuple ({tuple}) appears with conflicting weights {first} and {second}")]
    ConflictingTupleWeight { relation: String, tuple: String, first: i64, second: i64 },
    #[error("{path}: constant `{constant}` has conflicting weights {first} and {second}")]
    ConflictingVertexWeight { path: PathBuf, constant: String, first: i64, second: i64 },
    #[error("relation `{0}` is defined twice")]
    DuplicateRelation(String),
    #[error("relation `{relation}`: row has {found} values, schema has {expected} columns")]
    ArityMismatch { relation: String, expected: usize, found: usize },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SchemaError {
    #[error("relation `{relation}` has no column `{column}`")]
    UnknownColumn { relation: String, column: String },
}

/// Query text and query-vs-database validation failures.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum QueryError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("atom `{atom}` repeats a variable")]
    RepeatedVariable { atom: String },
    #[error("atom `{atom}` has a constant argument `{arg}`; only variables are allowed")]
    ConstantArgument { atom: String, arg: String },
    #[error("atom `{atom}` has arity {found} but `{relation}` is used with arity {expected}")]
    ArityMismatch { atom: String, relation: String, expected: usize, found: usize },
    #[error("variable `{var}` appears in the body but not in the head; projections are not supported")]
    NonFullHead { var: String },
    #[error("head variable `{var}` does not appear in any atom of disjunct {disjunct}")]
    UnboundHeadVariable { var: String, disjunct: usize },
    #[error("head repeats variable `{var}`")]
    RepeatedHeadVariable { var: String },
    #[error("atom `{atom}` has no arguments")]
    NullaryAtom { atom: String },
    #[error("query has no atoms")]
    Empty,
    #[error("atom `{atom}` refers to unknown relation `{relation}`")]
    UnknownRelation { atom: String, relation: String },
}

/// Decomposition construction and validation failures.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecompError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("node {node} is declared twice")]
    DuplicateNode { node: u32 },
    #[error("reference to undeclared node {node}")]
    UnknownNode { node: u32 },
    #[error("node {node}: bag variable `{var}` is not a query variable")]
    UnknownVariable { node: u32, var: String },
    #[error("node {node}: cover atom `{atom}` does not name an atom of the query")]
    UnknownAtom { node: u32, atom: String },
    #[error("node {node}: cover atom `{atom}` is ambiguous; use `@<index>`")]
    AmbiguousAtom { node: u32, atom: String },
    #[error("node {node}: cover atoms do not contain bag variable `{var}`")]
    InsufficientCover { node: u32, var: String },
    #[error("atom `{atom}` is not contained in any bag")]
    Coverage { atom: String },
    #[error("bags containing `{var}` do not form a connected subtree")]
    RunningIntersection { var: String },
    #[error("decomposition is a forest: node {node} is not reachable from the root")]
    Forest { node: u32 },
    #[error("node graph has a cycle through node {node}")]
    Cycle { node: u32 },
    #[error("decomposition has no nodes")]
    Empty,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RankingError {
    #[error("cannot parse ranking `{spec}`: {message}")]
    Parse { spec: String, message: String },
    #[error("ranking refers to unknown variable `{var}`")]
    UnknownVariable { var: String },
    #[error("product ranking needs strictly positive weights; {source_desc} has weight {weight}")]
    NonPositiveWeight { source_desc: String, weight: i64 },
    #[error("score arithmetic overflows a 64-bit integer")]
    Overflow,
    #[error("probe would enumerate {needed} valuations, cap is {cap}")]
    ProbeTooLarge { needed: u128, cap: usize },
    #[error("ranking is incompatible with the decomposition at node(s) {nodes:?}")]
    Incompatible { nodes: Vec<u32> },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("brute-force result exceeds the cap of {cap} tuples")]
    TooLarge { cap: usize },
    #[error(transparent)]
    Ranking(#[from] RankingError),
}

/// Top-level error; every failure the library reports funnels into this.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Decomp(#[from] DecompError),
    #[error(transparent)]
    Ranking(#[from] RankingError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("query is cyclic (irreducible atoms: {residue}); supply a decomposition with `--decomp`")]
    Cyclic { residue: String },
    #[error("{context}: {source}")]
    Context { context: String, source: Box<Error> },
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context { context: context.into(), source: Box::new(self) }
    }

    /// Process exit status for this error: 2 validation, 3 incompatible
    /// ranking, 4 oracle cap, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Context { source, .. } => source.exit_code(),
            Error::Ranking(RankingError::Incompatible { .. }) => 3,
            Error::Oracle(OracleError::TooLarge { .. }) => 4,
            Error::Io { .. } | Error::Load(LoadError::Io { .. }) => 1,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
