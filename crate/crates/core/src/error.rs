use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter fell outside its documented domain. The message names
    /// the offending parameter and the constraint it violated.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("size mismatch: expected {expected}, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    /// The subset collection fails the covering and/or closure property
    /// required by the reconstruction theorems; the report lists the
    /// offending subsets.
    #[error(
        "subset collection violates cover/closure: {} uncovered subset(s), \
         {} missing closure subset(s)",
        .0.missing_pairs.len(),
        .0.missing_closures.len()
    )]
    CoverClosure(Box<crate::distributed::CoverReport>),

    /// A reconstruction step needed the invariant of a subset that the
    /// input collection does not contain.
    #[error("missing invariant for subset {0:?}")]
    MissingSubset(Vec<u32>),

    /// A pair invariant did not have the shape produced by a two-point
    /// filtration, so no distance can be read off it.
    #[error("malformed pair invariant for subset {0:?}: {1}")]
    MalformedPair(Vec<u32>, String),

    #[error("csv parse error at row {row}: {msg}")]
    CsvParse { row: usize, msg: String },

    #[error("json error: {0}")]
    Json(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
