//! Error type shared across the crate.

/// Errors reported by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty input sequence")]
    EmptyInput,

    #[error("non-finite sample at index {0}")]
    NonFinite(usize),

    #[error("degenerate query: {0}")]
    DegenerateQuery(&'static str),

    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("window [{begin}, {end}] is not covered by the retained range [{first}, {last}]")]
    WindowOutOfRange {
        begin: usize,
        end: usize,
        first: usize,
        last: usize,
    },

    #[error("trim to begin {requested} is outside the live range starting at {first}")]
    TrimOutOfRange { requested: usize, first: usize },

    #[error("trace window exhausted: tick {needed} is older than the oldest retained tick {oldest}")]
    TraceExhausted { needed: usize, oldest: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
